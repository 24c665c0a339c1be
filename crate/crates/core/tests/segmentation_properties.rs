use hypostrat_core::segmentation::{split_quotes, DEFAULT_QUOTE_PAIRS};
use hypostrat_core::{InputText, PremiseOrigin};
use proptest::prelude::*;

fn plain() -> impl Strategy<Value = String> {
    "[a-zA-Z ,.!?']{0,20}"
}

proptest! {
    #[test]
    fn single_quote_span_round_trips(before in plain(), inner in "[a-zA-Z][a-zA-Z ,.!?']{0,20}", after in plain(), curly in any::<bool>()) {
        let (open, close) = if curly { ('\u{201C}', '\u{201D}') } else { ('"', '"') };
        let raw = format!("{before}{open}{inner}{close}{after}");
        let text = InputText::new(raw.clone()).unwrap();
        let split = split_quotes(&text, &DEFAULT_QUOTE_PAIRS).unwrap();
        prop_assert_eq!(split.inner.text(), inner.as_str());
        prop_assert_eq!(split.inner.origin(), PremiseOrigin::QuotedInner);
        prop_assert_eq!(split.outer.text().matches("[X]").count(), 1);
        prop_assert_eq!(split.reconstruct(), raw);
    }

    #[test]
    fn quote_free_text_never_splits(raw in "[a-zA-Z][a-zA-Z ,.!?']{0,40}") {
        let text = InputText::new(raw).unwrap();
        prop_assert!(split_quotes(&text, &DEFAULT_QUOTE_PAIRS).is_none());
    }

    #[test]
    fn any_split_reconstructs(raw in "[a-z \"\u{201C}\u{201D}]{1,40}") {
        prop_assume!(!raw.trim().is_empty());
        let text = InputText::new(raw.clone()).unwrap();
        if let Some(split) = split_quotes(&text, &DEFAULT_QUOTE_PAIRS) {
            prop_assert_eq!(split.reconstruct(), raw);
            prop_assert!(!split.inner.text().trim().is_empty());
        }
    }
}

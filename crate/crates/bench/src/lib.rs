//! Shared workloads for the criterion benches.

use hypostrat_core::backend::{HypothesisMatch, MockRuleTable, PremiseMatch};
use hypostrat_core::hypotheses::{self, Flavor};
use hypostrat_core::strategies::{Pipeline, StrategyConfig, StrategyName};
use hypostrat_core::{Hypothesis, InputText, ScoreTriple};

/// A mix of plain and quoted inputs.
pub const SAMPLE_TEXTS: [&str; 8] = [
    "I hate women.",
    "Immigrants are like rats spreading a plague.",
    "I can't believe they said \"all women are evil\" \u{2014} disgusting.",
    "We queers are here to stay.",
    "What a lovely day at the beach.",
    "She wrote \u{201C}Muslims are vermin\u{201D} and I reported her.",
    "Those people are a burden on society.",
    "Nobody should say \"disabled people are useless\", ever.",
];

pub fn texts() -> Vec<InputText> {
    SAMPLE_TEXTS.iter().map(|t| InputText::new(*t).unwrap()).collect()
}

fn triple(e: f64, n: f64, c: f64) -> ScoreTriple {
    ScoreTriple::new(e, n, c).unwrap()
}

/// A table that makes every strategy fire on some sample text.
pub fn mock_table() -> MockRuleTable {
    let yes = triple(0.85, 0.1, 0.05);
    let mut m = MockRuleTable::constant(triple(0.1, 0.2, 0.7));
    for word in ["hate", "vermin", "useless", "evil"] {
        m.push(PremiseMatch::Contains(word.into()), HypothesisMatch::Tag("main".into()), yes);
    }
    for (tag, _) in hypotheses::FBT_GROUPS {
        let word = tag.trim_start_matches("fbt:").split('-').next().unwrap_or_default();
        m.push(PremiseMatch::Contains(word.into()), HypothesisMatch::Tag(tag.into()), yes);
    }
    m.push(PremiseMatch::Contains("rats".into()), HypothesisMatch::Tag("cdc:rats".into()), yes);
    m.push(PremiseMatch::Contains("rats".into()), HypothesisMatch::Tag(hypotheses::SENTIMENT_TAG.into()), yes);
    m.push(PremiseMatch::Contains("We ".into()), HypothesisMatch::Tag(hypotheses::SELF_TAG.into()), yes);
    m
}

pub fn all_strategies() -> Pipeline {
    let main = Hypothesis::main(hypotheses::MAIN_HYPOTHESIS).unwrap();
    let enabled = [StrategyName::Fcs, StrategyName::Fbt, StrategyName::Frs, StrategyName::Cdc];
    Pipeline::with_strategies(main, StrategyConfig::new(enabled, Some(Flavor::Groups)))
}

pub const ALL_POLICY: &str = r#"
model_id = "facebook/bart-large-mnli"
main_hypothesis = "That contains hate speech."
threshold = 0.5

[strategies]
enabled = ["fcs", "fbt", "frs", "cdc"]
fbt_flavor = "groups"

[threshold_overrides]
"fbt:women" = 0.6
"#;

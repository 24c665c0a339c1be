//! Deterministic lookup-table backend.
//!
//! Table files are JSON:
//!
//! ```json
//! {
//!   "model_id": "mock",
//!   "default": {"entailment": 0.1, "neutral": 0.1, "contradiction": 0.8},
//!   "entries": [
//!     {"premise": {"exact": "I hate women"}, "hypothesis": {"tag": "main"},
//!      "score": {"entailment": 0.98, "neutral": 0.01, "contradiction": 0.01}},
//!     {"premise": {"contains": "rats"}, "hypothesis": {"text": "This text is about rats."},
//!      "score": {"entailment": 0.9, "neutral": 0.05, "contradiction": 0.05}}
//!   ]
//! }
//! ```
//!
//! `premise` and `hypothesis` default to `"any"`. The first matching entry
//! in declaration order wins; no match falls through to `default`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendError, ScorePair, Scorer};
use crate::types::{Hypothesis, Premise, ScoreTriple};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PremiseMatch {
    #[default]
    Any,
    Exact(String),
    Contains(String),
}

impl PremiseMatch {
    fn matches(&self, premise: &str) -> bool {
        match self {
            PremiseMatch::Any => true,
            PremiseMatch::Exact(s) => premise == s,
            PremiseMatch::Contains(s) => premise.contains(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisMatch {
    #[default]
    Any,
    Tag(String),
    Text(String),
}

impl HypothesisMatch {
    fn matches(&self, hypothesis: &Hypothesis) -> bool {
        match self {
            HypothesisMatch::Any => true,
            HypothesisMatch::Tag(t) => hypothesis.tag() == t,
            HypothesisMatch::Text(t) => hypothesis.text() == t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    #[serde(default)]
    pub premise: PremiseMatch,
    #[serde(default)]
    pub hypothesis: HypothesisMatch,
    pub score: ScoreTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRuleTable {
    #[serde(default = "default_model_id")]
    pub model_id: String,
    #[serde(default)]
    pub entries: Vec<MockEntry>,
    pub default: ScoreTriple,
}

fn default_model_id() -> String {
    "mock".to_owned()
}

impl MockRuleTable {
    pub fn constant(default: ScoreTriple) -> Self {
        Self {
            model_id: default_model_id(),
            entries: Vec::new(),
            default,
        }
    }

    pub fn with_entry(mut self, premise: PremiseMatch, hypothesis: HypothesisMatch, score: ScoreTriple) -> Self {
        self.push(premise, hypothesis, score);
        self
    }

    pub fn push(&mut self, premise: PremiseMatch, hypothesis: HypothesisMatch, score: ScoreTriple) {
        self.entries.push(MockEntry {
            premise,
            hypothesis,
            score,
        });
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let table: Self =
            serde_json::from_str(text).map_err(|e| BackendError::Config(format!("invalid mock table: {e}")))?;
        table.validate()?;
        Ok(table)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BackendError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), BackendError> {
        self.default
            .validate()
            .map_err(|e| BackendError::Config(format!("mock default: {e}")))?;
        for (i, entry) in self.entries.iter().enumerate() {
            entry
                .score
                .validate()
                .map_err(|e| BackendError::Config(format!("mock entry {i}: {e}")))?;
        }
        Ok(())
    }

    /// Pure lookup: first matching entry, else the default.
    pub fn lookup(&self, premise: &Premise, hypothesis: &Hypothesis) -> ScoreTriple {
        self.entries
            .iter()
            .find(|e| e.premise.matches(premise.text()) && e.hypothesis.matches(hypothesis))
            .map(|e| e.score)
            .unwrap_or(self.default)
    }
}

impl Scorer for MockRuleTable {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn score_batch(&self, pairs: &[ScorePair<'_>]) -> Result<Vec<ScoreTriple>, BackendError> {
        Ok(pairs.iter().map(|p| self.lookup(p.premise, p.hypothesis)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::PremiseOrigin;

    fn t(e: f64, n: f64, c: f64) -> ScoreTriple {
        ScoreTriple::new(e, n, c).unwrap()
    }

    fn p(s: &str) -> Premise {
        Premise::new(s, PremiseOrigin::WholeText).unwrap()
    }

    #[test]
    fn table_lookup_by_tag() {
        let table = MockRuleTable::constant(t(0.1, 0.1, 0.8)).with_entry(
            PremiseMatch::Exact("I hate women".into()),
            HypothesisMatch::Tag("main".into()),
            t(0.98, 0.01, 0.01),
        );
        let main = Hypothesis::main("That contains hate speech.").unwrap();
        assert_eq!(table.score_pair(&p("I hate women"), &main).unwrap(), t(0.98, 0.01, 0.01));
        assert_eq!(table.score_pair(&p("I hate women!"), &main).unwrap(), t(0.1, 0.1, 0.8));
    }

    #[test]
    fn first_match_wins() {
        let table = MockRuleTable::constant(t(0.1, 0.1, 0.8))
            .with_entry(PremiseMatch::Contains("rat".into()), HypothesisMatch::Any, t(0.6, 0.2, 0.2))
            .with_entry(PremiseMatch::Contains("rats".into()), HypothesisMatch::Any, t(0.9, 0.05, 0.05));
        let h = Hypothesis::supporting("This text is about rats.", "cdc:rats").unwrap();
        assert_eq!(table.lookup(&p("they are rats"), &h), t(0.6, 0.2, 0.2));
    }

    #[test]
    fn batch_of_three_is_three_lookups_in_order() {
        let table = MockRuleTable::constant(t(0.1, 0.1, 0.8))
            .with_entry(PremiseMatch::Exact("a".into()), HypothesisMatch::Any, t(0.9, 0.05, 0.05))
            .with_entry(PremiseMatch::Exact("b".into()), HypothesisMatch::Any, t(0.3, 0.3, 0.4));
        let h = Hypothesis::main("Hateful.").unwrap();
        let (a, b, c) = (p("a"), p("b"), p("c"));
        let out = table
            .score_batch(&[ScorePair::new(&b, &h), ScorePair::new(&c, &h), ScorePair::new(&a, &h)])
            .unwrap();
        assert_eq!(out, vec![t(0.3, 0.3, 0.4), t(0.1, 0.1, 0.8), t(0.9, 0.05, 0.05)]);
    }

    #[test]
    fn json_format() {
        let table = MockRuleTable::from_json(
            r#"{"default": {"entailment": 0.1, "neutral": 0.1, "contradiction": 0.8},
                "entries": [{"premise": {"contains": "rats"}, "hypothesis": {"text": "This text is about rats."},
                             "score": {"entailment": 0.9, "neutral": 0.05, "contradiction": 0.05}},
                            {"hypothesis": "any", "score": {"entailment": 0.5, "neutral": 0.0, "contradiction": 0.5}}]}"#,
        )
        .unwrap();
        assert_eq!(table.model_id, "mock");
        assert_eq!(table.entries.len(), 2);
        assert_eq!(table.entries[1].premise, PremiseMatch::Any);
        assert!(MockRuleTable::from_json(r#"{"default": {"entailment": 0.9, "neutral": 0.9, "contradiction": 0.8}}"#).is_err());
    }
}

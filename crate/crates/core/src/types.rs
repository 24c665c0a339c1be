//! Domain values shared across the pipeline: input texts, premises,
//! hypotheses, NLI score triples, binary decisions and verdicts.
//!
//! Everything here is an immutable value type. The two primitive decision
//! operations, [`entailment_probability`] and [`decide`], live here as well.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The literal token standing in for a quoted span in an outer premise.
pub const PLACEHOLDER: &str = "[X]";

/// Tolerance on `entailment + neutral + contradiction == 1`.
pub const SCORE_SUM_TOLERANCE: f64 = 1e-6;

/// Text to classify. Never empty after trimming.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InputText(String);

impl InputText {
    pub fn new(raw: impl Into<String>) -> Result<Self, Error> {
        let raw = raw.into();
        if raw.trim().is_empty() {
            return Err(Error::InvalidInput("input text is empty".into()));
        }
        Ok(Self(raw))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for InputText {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<InputText> for String {
    fn from(value: InputText) -> Self {
        value.0
    }
}

impl fmt::Display for InputText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Where a premise came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PremiseOrigin {
    WholeText,
    QuotedInner,
    OuterWithPlaceholder,
}

impl fmt::Display for PremiseOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PremiseOrigin::WholeText => "whole_text",
            PremiseOrigin::QuotedInner => "quoted_inner",
            PremiseOrigin::OuterWithPlaceholder => "outer_with_placeholder",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Premise {
    text: String,
    origin: PremiseOrigin,
}

impl Premise {
    /// Builds a premise. An outer premise must carry exactly one placeholder.
    pub fn new(text: impl Into<String>, origin: PremiseOrigin) -> Result<Self, Error> {
        let text = text.into();
        if origin == PremiseOrigin::OuterWithPlaceholder && text.matches(PLACEHOLDER).count() != 1 {
            return Err(Error::InvalidInput(format!(
                "outer premise must contain exactly one {PLACEHOLDER}: {text:?}"
            )));
        }
        Ok(Self { text, origin })
    }

    pub fn whole(text: &InputText) -> Self {
        Self {
            text: text.as_str().to_owned(),
            origin: PremiseOrigin::WholeText,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn origin(&self) -> PremiseOrigin {
        self.origin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisRole {
    Main,
    Supporting,
}

/// A templated claim scored against a premise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    text: String,
    role: HypothesisRole,
    tag: String,
}

impl Hypothesis {
    /// Fails unless `text` is trimmed, ends with `.`, `!` or `?`, and `tag` is non-empty.
    pub fn new(text: impl Into<String>, role: HypothesisRole, tag: impl Into<String>) -> Result<Self, Error> {
        let text = text.into();
        let tag = tag.into();
        if !text.trim_end().ends_with(['.', '!', '?']) || text.trim() != text {
            return Err(Error::InvalidInput(format!(
                "hypothesis must be trimmed and end with a sentence terminator: {text:?}"
            )));
        }
        if tag.trim().is_empty() {
            return Err(Error::InvalidInput(format!("hypothesis {text:?} has an empty tag")));
        }
        Ok(Self { text, role, tag })
    }

    pub fn main(text: impl Into<String>) -> Result<Self, Error> {
        Self::new(text, HypothesisRole::Main, "main")
    }

    pub fn supporting(text: impl Into<String>, tag: impl Into<String>) -> Result<Self, Error> {
        Self::new(text, HypothesisRole::Supporting, tag)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn role(&self) -> HypothesisRole {
        self.role
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }
}

/// Three-class NLI output, as probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

impl ScoreTriple {
    pub fn new(entailment: f64, neutral: f64, contradiction: f64) -> Result<Self, Error> {
        let triple = Self {
            entailment,
            neutral,
            contradiction,
        };
        triple.validate()?;
        Ok(triple)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let parts = [self.entailment, self.neutral, self.contradiction];
        if parts.iter().any(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidScore(format!("component outside [0,1]: {self:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > SCORE_SUM_TOLERANCE {
            return Err(Error::InvalidScore(format!("components sum to {sum}: {self:?}")));
        }
        Ok(())
    }
}

/// Two-way renormalised entailment probability, ignoring the neutral class.
///
/// Three-class probabilities are proportional to exponentiated logits, so
/// `e / (e + c)` is exactly the softmax over the entailment and
/// contradiction logits.
pub fn entailment_probability(score: &ScoreTriple) -> Result<f64, Error> {
    let denom = score.entailment + score.contradiction;
    if denom <= 0.0 {
        return Err(Error::DegenerateScore);
    }
    Ok(score.entailment / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entailment {
    Entail,
    NotEntail,
}

/// The thresholded outcome of one (premise, hypothesis) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryDecision {
    pub value: Entailment,
    pub probability: f64,
    pub threshold: f64,
}

impl BinaryDecision {
    pub fn entails(&self) -> bool {
        self.value == Entailment::Entail
    }
}

/// `entail` iff `probability >= threshold`. The tie goes to `entail`.
pub fn decide(probability: f64, threshold: f64) -> BinaryDecision {
    let value = if probability >= threshold {
        Entailment::Entail
    } else {
        Entailment::NotEntail
    };
    BinaryDecision {
        value,
        probability,
        threshold,
    }
}

/// Binary hate-speech label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NotHate,
    Hate,
}

impl Label {
    pub fn is_hate(self) -> bool {
        self == Label::Hate
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Hate => "hate",
            Label::NotHate => "not_hate",
        })
    }
}

/// Names of the rules that may finalise a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    Base,
    Fcs,
    FcsP1,
    FcsP1Fbt,
    Fbt,
    Frs,
    Cdc,
}

impl RuleName {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Base => "base",
            RuleName::Fcs => "fcs",
            RuleName::FcsP1 => "fcs_p1",
            RuleName::FcsP1Fbt => "fcs_p1_fbt",
            RuleName::Fbt => "fbt",
            RuleName::Frs => "frs",
            RuleName::Cdc => "cdc",
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One consulted (premise, hypothesis) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub origin: PremiseOrigin,
    pub tag: String,
    pub hypothesis: String,
    pub decision: BinaryDecision,
    /// Set on exactly one entry per verdict: the rule that finalised the label.
    pub rule: Option<RuleName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    None,
    ForceHate,
    ForceNotHate,
}

/// What one rule saw and did while classifying a text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub rule: RuleName,
    pub fired: bool,
    pub inputs: Vec<(String, BinaryDecision)>,
    pub effect: Effect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub trace: Vec<TraceEntry>,
    pub rules: Vec<RuleOutcome>,
}

impl Verdict {
    /// The rule recorded as having finalised the label.
    pub fn finalized_by(&self) -> Option<RuleName> {
        self.trace.iter().find_map(|e| e.rule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(e: f64, n: f64, c: f64) -> ScoreTriple {
        ScoreTriple::new(e, n, c).unwrap()
    }

    #[test]
    fn renormalization_examples() {
        assert_eq!(entailment_probability(&triple(0.5, 0.0, 0.5)).unwrap(), 0.5);
        assert_eq!(entailment_probability(&triple(0.2, 0.6, 0.2)).unwrap(), 0.5);
        let p = entailment_probability(&triple(0.6, 0.1, 0.3)).unwrap();
        assert!((p - 0.6 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn degenerate_score_is_an_error() {
        let err = entailment_probability(&triple(0.0, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateScore));
        assert_eq!(err.to_string(), "degenerate score");
    }

    #[test]
    fn decide_boundary_is_inclusive() {
        assert_eq!(decide(0.5, 0.5).value, Entailment::Entail);
        assert_eq!(decide(0.4999, 0.5).value, Entailment::NotEntail);
        assert_eq!(decide(1.0, 0.5).value, Entailment::Entail);
        assert_eq!(decide(0.4999, 0.5).probability, 0.4999);
    }

    #[test]
    fn score_triple_invariants() {
        assert!(ScoreTriple::new(0.5, 0.5, 0.5).is_err());
        assert!(ScoreTriple::new(-0.1, 0.6, 0.5).is_err());
        assert!(ScoreTriple::new(f64::NAN, 0.5, 0.5).is_err());
        assert!(ScoreTriple::new(0.3333333, 0.3333333, 0.3333334).is_ok());
    }

    #[test]
    fn input_text_rejects_blank() {
        assert!(InputText::new("  \n\t").is_err());
        assert!(InputText::new(" a ").is_ok());
    }

    #[test]
    fn outer_premise_needs_one_placeholder() {
        assert!(Premise::new("He said [X].", PremiseOrigin::OuterWithPlaceholder).is_ok());
        assert!(Premise::new("He said X.", PremiseOrigin::OuterWithPlaceholder).is_err());
        assert!(Premise::new("[X] and [X]", PremiseOrigin::OuterWithPlaceholder).is_err());
        assert!(Premise::new("[X] and [X]", PremiseOrigin::WholeText).is_ok());
    }

    #[test]
    fn hypothesis_needs_terminator() {
        assert!(Hypothesis::main("That contains hate speech.").is_ok());
        assert!(Hypothesis::main("That contains hate speech").is_err());
        assert!(Hypothesis::supporting("Is this about rats?", "").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Adding or removing neutral mass at a fixed e:c ratio leaves the output unchanged.
            #[test]
            fn neutral_mass_is_irrelevant(e in 0.01f64..1.0, c in 0.01f64..1.0, n1 in 0.0f64..5.0, n2 in 0.0f64..5.0) {
                let a = triple(e / (e + c + n1), n1 / (e + c + n1), c / (e + c + n1));
                let b = triple(e / (e + c + n2), n2 / (e + c + n2), c / (e + c + n2));
                let pa = entailment_probability(&a).unwrap();
                let pb = entailment_probability(&b).unwrap();
                prop_assert!((pa - pb).abs() < 1e-12);
            }

            // Away from the tie, thresholding at 0.5 is the argmax over {entailment, contradiction}.
            #[test]
            fn half_threshold_is_argmax(e in 0.0f64..1.0, c in 0.0f64..1.0) {
                prop_assume!(e + c > 0.0 && e != c);
                let s = e + c + 1.0;
                let t = triple(e / s, 1.0 / s, c / s);
                let d = decide(entailment_probability(&t).unwrap(), 0.5);
                prop_assert_eq!(d.entails(), t.entailment > t.contradiction);
            }
        }
    }
}

//! Zero-shot hate speech classification with entailment hypotheses.
//!
//! A main hypothesis ("That contains hate speech.") is tested against the
//! text with an NLI model. Supporting hypotheses then filter or promote the
//! verdict: target detection, counterspeech quotes, reclaimed slurs and
//! dehumanising comparisons.

pub mod backend;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod hypotheses;
pub mod policy;
pub mod segmentation;
pub mod strategies;
pub mod types;

pub use backend::{BackendError, CacheKey, Scorer, DEFAULT_MODEL_ID};
pub use datasets::{DatasetError, LabeledExample, SupportingTask};
pub use error::{Error, Result};
pub use evaluation::{EvalReport, Prf, Run, Sweep};
pub use policy::{parse_policy, validate_policy, PolicyDocument, PolicyError};
pub use segmentation::{split_quotes, QuotePair, QuoteSplit};
pub use strategies::{Pipeline, StrategyConfig, StrategyName, Thresholds};
pub use types::{
    decide, entailment_probability, BinaryDecision, Entailment, Hypothesis, HypothesisRole, InputText, Label, Premise,
    PremiseOrigin, RuleName, ScoreTriple, TraceEntry, Verdict,
};

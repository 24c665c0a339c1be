//! Policy documents: which hypotheses, thresholds and strategies a run uses.
//!
//! The file format is TOML restricted to the keys below (grammar in
//! `docs/policy-format.md`). Unknown keys are rejected.
//!
//! ```toml
//! model_id = "facebook/bart-large-mnli"
//! main_hypothesis = "That contains hate speech."
//! threshold = 0.5
//! quote_chars = [["\"", "\""], ["“", "”"]]
//!
//! [strategies]
//! enabled = ["fcs", "fbt", "frs", "cdc"]
//! fbt_flavor = "groups"
//!
//! [threshold_overrides]
//! "frs:self" = 0.7
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backend::DEFAULT_MODEL_ID;
use crate::error::Error;
use crate::hypotheses::{self, Flavor, GrammarSpec};
use crate::segmentation::{QuotePair, DEFAULT_QUOTE_PAIRS};
use crate::strategies::{HypothesisSet, Pipeline, StrategyConfig, StrategyName, Thresholds};
use crate::types::{Hypothesis, PLACEHOLDER};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey { key: String, line: usize, column: usize },

    #[error("duplicate key `{key}` at line {line}, column {column}")]
    DuplicateKey { key: String, line: usize, column: usize },

    #[error("{key} = {value} is outside [0, 1]")]
    OutOfRange { key: String, value: f64 },

    #[error("invalid policy: {0}")]
    Invalid(String),

    #[error("reading policy {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A tagged hypothesis as written in a policy, not yet validated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSpec {
    pub tag: String,
    pub text: String,
}

impl HypothesisSpec {
    fn from_hypothesis(h: &Hypothesis) -> Self {
        Self {
            tag: h.tag().to_owned(),
            text: h.text().to_owned(),
        }
    }

    fn to_hypothesis(&self) -> Result<Hypothesis, Error> {
        Hypothesis::supporting(self.text.clone(), self.tag.clone())
    }
}

/// Replacements for the built-in supporting hypotheses.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportingOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbt_groups: Option<Vec<HypothesisSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbt_characteristics: Option<Vec<HypothesisSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fcs_stance: Option<HypothesisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frs_self: Option<HypothesisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdc_sentiment: Option<HypothesisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdc_animals: Option<Vec<HypothesisSpec>>,
}

impl SupportingOverrides {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStrategies {
    #[serde(default)]
    enabled: Vec<StrategyName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fbt_flavor: Option<Flavor>,
}

impl RawStrategies {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// On-disk shape. Field order here is the canonical key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    #[serde(default = "default_model_id")]
    model_id: String,
    main_hypothesis: String,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default = "default_quote_chars")]
    quote_chars: Vec<QuotePair>,
    #[serde(default, skip_serializing_if = "RawStrategies::is_empty")]
    strategies: RawStrategies,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    threshold_overrides: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "SupportingOverrides::is_empty")]
    supporting: SupportingOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grammar: Option<GrammarSpec>,
}

fn default_model_id() -> String {
    DEFAULT_MODEL_ID.to_owned()
}

fn default_threshold() -> f64 {
    0.5
}

fn default_quote_chars() -> Vec<QuotePair> {
    DEFAULT_QUOTE_PAIRS.to_vec()
}

/// A parsed policy with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDocument {
    pub model_id: String,
    pub main_hypothesis: String,
    pub threshold_default: f64,
    pub threshold_overrides: BTreeMap<String, f64>,
    pub strategies: StrategyConfig,
    pub supporting: SupportingOverrides,
    pub quote_chars: Vec<QuotePair>,
    pub grammar: Option<GrammarSpec>,
}

/// Tag prefixes an override may use, besides the bare `main`.
const TAG_PREFIXES: [&str; 4] = ["fbt:", "fcs:", "frs:", "cdc:"];

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_owned())
}

fn classify_toml_error(text: &str, err: &toml::de::Error) -> PolicyError {
    let (line, column) = err.span().map_or((0, 0), |s| line_col(text, s.start));
    let message = err.message().trim().to_owned();
    if message.starts_with("unknown field") {
        let key = backticked(&message).unwrap_or_default();
        return PolicyError::UnknownKey { key, line, column };
    }
    if message.contains("duplicate key") {
        let key = backticked(&message).unwrap_or_default();
        return PolicyError::DuplicateKey { key, line, column };
    }
    if message.starts_with("missing field") {
        return PolicyError::Invalid(message);
    }
    PolicyError::Syntax { line, column, message }
}

fn check_range(key: &str, value: f64) -> Result<(), PolicyError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(PolicyError::OutOfRange {
            key: key.to_owned(),
            value,
        })
    }
}

/// Parses a policy document and applies defaults.
pub fn parse_policy(document: &str) -> Result<PolicyDocument, PolicyError> {
    let raw: RawPolicy = toml::from_str(document).map_err(|e| classify_toml_error(document, &e))?;

    if raw.main_hypothesis.trim().is_empty() {
        return Err(PolicyError::Invalid("main_hypothesis is empty".into()));
    }
    check_range("threshold", raw.threshold)?;
    for (tag, &value) in &raw.threshold_overrides {
        check_range(&format!("threshold_overrides.\"{tag}\""), value)?;
        if tag != "main" && !TAG_PREFIXES.iter().any(|p| tag.starts_with(p)) {
            return Err(PolicyError::Invalid(format!(
                "threshold override {tag:?} does not name a strategy (main, fbt:, fcs:, frs:, cdc:)"
            )));
        }
    }

    Ok(PolicyDocument {
        model_id: raw.model_id,
        main_hypothesis: raw.main_hypothesis,
        threshold_default: raw.threshold,
        threshold_overrides: raw.threshold_overrides,
        strategies: StrategyConfig::new(raw.strategies.enabled, raw.strategies.fbt_flavor),
        supporting: raw.supporting,
        quote_chars: raw.quote_chars,
        grammar: raw.grammar,
    })
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<PolicyDocument, PolicyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_policy(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    ConflictingFcsVariants,
    PlaceholderMissing,
    FlavorMissing,
    MalformedHypothesis,
    EmptyHypothesisSet,
    DuplicateTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn diag(kind: DiagnosticKind, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        kind,
        message: message.into(),
    }
}

impl PolicyDocument {
    /// Serialises to the canonical form: fixed key order, defaults written
    /// out, strategies in pipeline order.
    pub fn to_canonical_string(&self) -> String {
        let raw = RawPolicy {
            model_id: self.model_id.clone(),
            main_hypothesis: self.main_hypothesis.clone(),
            threshold: self.threshold_default,
            quote_chars: self.quote_chars.clone(),
            strategies: RawStrategies {
                enabled: self.strategies.enabled().to_vec(),
                fbt_flavor: self.strategies.fbt_flavor,
            },
            threshold_overrides: self.threshold_overrides.clone(),
            supporting: self.supporting.clone(),
            grammar: self.grammar.clone(),
        };
        toml::to_string(&raw).expect("policy fields are always representable")
    }

    /// Hex SHA-256 of the canonical serialisation.
    pub fn policy_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_string().as_bytes()))
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            default: self.threshold_default,
            overrides: self.threshold_overrides.clone(),
        }
    }

    fn stance_spec(&self) -> HypothesisSpec {
        self.supporting.fcs_stance.clone().unwrap_or_else(|| HypothesisSpec {
            tag: hypotheses::STANCE_TAG.into(),
            text: hypotheses::STANCE_HYPOTHESIS.into(),
        })
    }

    fn target_specs(&self) -> Vec<HypothesisSpec> {
        let flavor = self.strategies.fbt_flavor.unwrap_or_default();
        let overridden = match flavor {
            Flavor::Groups => &self.supporting.fbt_groups,
            Flavor::Characteristics => &self.supporting.fbt_characteristics,
        };
        overridden.clone().unwrap_or_else(|| {
            hypotheses::fbt_hypotheses(flavor)
                .iter()
                .map(HypothesisSpec::from_hypothesis)
                .collect()
        })
    }

    fn single_or(&self, spec: &Option<HypothesisSpec>, builtin: Hypothesis) -> HypothesisSpec {
        spec.clone().unwrap_or_else(|| HypothesisSpec::from_hypothesis(&builtin))
    }

    fn animal_specs(&self) -> Vec<HypothesisSpec> {
        self.supporting.cdc_animals.clone().unwrap_or_else(|| {
            hypotheses::cdc_animal_hypotheses()
                .iter()
                .map(HypothesisSpec::from_hypothesis)
                .collect()
        })
    }

    /// Hypotheses consulted by the enabled strategies, main first.
    fn specs_in_use(&self) -> Vec<HypothesisSpec> {
        let s = &self.strategies;
        let mut out = vec![HypothesisSpec {
            tag: "main".into(),
            text: self.main_hypothesis.clone(),
        }];
        if s.fcs_variant().is_some() {
            out.push(self.stance_spec());
        }
        if s.needs_targets() {
            out.extend(self.target_specs());
        }
        if s.has(StrategyName::Frs) {
            out.push(self.single_or(&self.supporting.frs_self, hypotheses::self_directed_hypothesis()));
        }
        if s.has(StrategyName::Cdc) {
            out.push(self.single_or(&self.supporting.cdc_sentiment, hypotheses::sentiment_hypothesis()));
            out.extend(self.animal_specs());
        }
        out
    }

    /// Builds the runnable pipeline; fails with the diagnostics when the
    /// policy is not executable.
    pub fn pipeline(&self) -> Result<Pipeline, Error> {
        let diagnostics = validate_policy(self);
        if !diagnostics.is_empty() {
            let joined: Vec<String> = diagnostics.iter().map(|d| d.message.clone()).collect();
            return Err(PolicyError::Invalid(joined.join("; ")).into());
        }
        let to_all = |specs: Vec<HypothesisSpec>| -> Result<Vec<Hypothesis>, Error> {
            specs.iter().map(HypothesisSpec::to_hypothesis).collect()
        };
        let set = HypothesisSet {
            main: Hypothesis::main(self.main_hypothesis.clone())?,
            stance: self.stance_spec().to_hypothesis()?,
            targets: to_all(self.target_specs())?,
            self_directed: self
                .single_or(&self.supporting.frs_self, hypotheses::self_directed_hypothesis())
                .to_hypothesis()?,
            animals: to_all(self.animal_specs())?,
            sentiment: self
                .single_or(&self.supporting.cdc_sentiment, hypotheses::sentiment_hypothesis())
                .to_hypothesis()?,
        };
        Pipeline::new(self.strategies.clone(), set, self.thresholds(), self.quote_chars.clone())
    }
}

/// Reasons the policy cannot run. Empty means executable.
pub fn validate_policy(policy: &PolicyDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let s = &policy.strategies;

    if s.fcs_variant_count() > 1 {
        let names: Vec<&str> = s
            .enabled()
            .iter()
            .filter(|n| n.is_fcs_variant())
            .map(|n| n.as_str())
            .collect();
        out.push(diag(
            DiagnosticKind::ConflictingFcsVariants,
            format!("conflicting FCS variants: {}", names.join(", ")),
        ));
    }
    if s.fcs_variant().is_some() {
        let stance = policy.stance_spec();
        if stance.text.matches(PLACEHOLDER).count() != 1 {
            out.push(diag(
                DiagnosticKind::PlaceholderMissing,
                format!("placeholder missing: stance hypothesis {:?} needs exactly one {PLACEHOLDER}", stance.text),
            ));
        }
    }
    for name in [StrategyName::Cdc, StrategyName::Fbt, StrategyName::FcsP1Fbt] {
        if s.has(name) && s.fbt_flavor.is_none() {
            out.push(diag(
                DiagnosticKind::FlavorMissing,
                format!("fbt_flavor not set but {name} is enabled"),
            ));
        }
    }
    if s.needs_targets() && policy.target_specs().is_empty() {
        out.push(diag(DiagnosticKind::EmptyHypothesisSet, "target hypothesis list is empty"));
    }
    if s.has(StrategyName::Cdc) && policy.animal_specs().is_empty() {
        out.push(diag(DiagnosticKind::EmptyHypothesisSet, "cdc_animals list is empty"));
    }

    let in_use = policy.specs_in_use();
    for (i, spec) in in_use.iter().enumerate() {
        let checked = if i == 0 {
            Hypothesis::main(spec.text.clone()).map(drop)
        } else {
            spec.to_hypothesis().map(drop)
        };
        if let Err(e) = checked {
            out.push(diag(DiagnosticKind::MalformedHypothesis, format!("{}: {e}", spec.tag)));
        }
    }
    let mut seen = BTreeSet::new();
    for spec in &in_use {
        if !seen.insert(spec.tag.as_str()) {
            out.push(diag(DiagnosticKind::DuplicateTag, format!("duplicate hypothesis tag {:?}", spec.tag)));
        }
    }
    if let Some(grammar) = &policy.grammar {
        if let Err(e) = hypotheses::generate_main_hypotheses(grammar) {
            out.push(diag(DiagnosticKind::MalformedHypothesis, format!("grammar: {e}")));
        }
    }
    out
}

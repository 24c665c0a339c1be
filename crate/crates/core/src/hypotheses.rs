//! Main-hypothesis grammar and the fixed supporting-hypothesis sets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::types::{Hypothesis, PLACEHOLDER};

pub const MAIN_HYPOTHESIS: &str = "That contains hate speech.";
pub const STANCE_HYPOTHESIS: &str = "This text supports [X].";
pub const SELF_DIRECTED_HYPOTHESIS: &str = "This text is about myself.";
pub const NEGATIVE_SENTIMENT_HYPOTHESIS: &str = "This text has a negative sentiment.";

/// (tag, text) for the protected-group target hypotheses.
pub const FBT_GROUPS: [(&str, &str); 7] = [
    ("fbt:women", "This text is about women."),
    ("fbt:trans-people", "This text is about trans people."),
    ("fbt:gay-people", "This text is about gay people."),
    ("fbt:black-people", "This text is about black people."),
    ("fbt:disabled-people", "This text is about disabled people."),
    ("fbt:muslims", "This text is about Muslims."),
    ("fbt:immigrants", "This text is about immigrants."),
];

/// (tag, text) for the protected-characteristic target hypotheses.
pub const FBT_CHARACTERISTICS: [(&str, &str); 7] = [
    ("fbt:gender", "This text is about gender."),
    ("fbt:sexual-orientation", "This text is about sexual orientation."),
    ("fbt:race", "This text is about race."),
    ("fbt:ethnicity", "This text is about ethnicity."),
    ("fbt:disability", "This text is about disability."),
    ("fbt:religion", "This text is about religion."),
    ("fbt:national-origin", "This text is about national origin."),
];

pub const CDC_ANIMALS: [(&str, &str); 5] = [
    ("cdc:insects", "This text is about insects."),
    ("cdc:apes", "This text is about apes."),
    ("cdc:primates", "This text is about primates."),
    ("cdc:rats", "This text is about rats."),
    ("cdc:plague", "This text is about a plague."),
];

pub const STANCE_TAG: &str = "fcs:stance";
pub const SELF_TAG: &str = "frs:self";
pub const SENTIMENT_TAG: &str = "cdc:sentiment";

/// Building blocks of the main-hypothesis search space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrammarSpec {
    pub subjects: Vec<String>,
    /// An empty string is the bare subject ("That contains ...").
    pub subject_nouns: Vec<String>,
    /// Only these verb/predicate pairings are grammatical.
    pub verb_predicate_pairs: Vec<(String, String)>,
    pub extra_forms: Vec<String>,
}

impl Default for GrammarSpec {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self {
            subjects: s(&["It", "That", "This"]),
            subject_nouns: s(&["", "example", "text"]),
            verb_predicate_pairs: [
                ("is", "hate speech"),
                ("is", "hateful"),
                ("contains", "hate speech"),
                ("contains", "hateful content"),
            ]
            .iter()
            .map(|(v, p)| (v.to_string(), p.to_string()))
            .collect(),
            extra_forms: s(&["Containing hate speech.", "Contains hate speech.", "Hate speech.", "Hateful."]),
        }
    }
}

/// Every grammatical combination plus the extra forms, deduplicated and
/// sorted by byte order.
pub fn generate_main_hypotheses(spec: &GrammarSpec) -> Result<Vec<Hypothesis>, Error> {
    let mut texts = BTreeSet::new();
    for subject in &spec.subjects {
        for noun in &spec.subject_nouns {
            for (verb, predicate) in &spec.verb_predicate_pairs {
                let text = if noun.is_empty() {
                    format!("{subject} {verb} {predicate}.")
                } else {
                    format!("{subject} {noun} {verb} {predicate}.")
                };
                texts.insert(text);
            }
        }
    }
    texts.extend(spec.extra_forms.iter().cloned());
    texts.into_iter().map(Hypothesis::main).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Protected groups (women, Muslims, ...).
    #[default]
    Groups,
    /// Protected characteristics (gender, religion, ...).
    Characteristics,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Groups => "groups",
            Flavor::Characteristics => "characteristics",
        })
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "groups" => Ok(Flavor::Groups),
            "characteristics" => Ok(Flavor::Characteristics),
            other => Err(Error::InvalidInput(format!("unknown FBT flavor {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportingKind {
    FbtGroups,
    FbtCharacteristics,
    Fcs,
    Frs,
    Cdc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportingSet {
    pub strategy: SupportingKind,
    pub hypotheses: Vec<Hypothesis>,
}

fn build(pairs: &[(&str, &str)]) -> Vec<Hypothesis> {
    pairs
        .iter()
        .map(|(tag, text)| Hypothesis::supporting(*text, *tag).expect("built-in hypotheses are well formed"))
        .collect()
}

pub fn fbt_hypotheses(flavor: Flavor) -> Vec<Hypothesis> {
    match flavor {
        Flavor::Groups => build(&FBT_GROUPS),
        Flavor::Characteristics => build(&FBT_CHARACTERISTICS),
    }
}

pub fn cdc_animal_hypotheses() -> Vec<Hypothesis> {
    build(&CDC_ANIMALS)
}

pub fn sentiment_hypothesis() -> Hypothesis {
    Hypothesis::supporting(NEGATIVE_SENTIMENT_HYPOTHESIS, SENTIMENT_TAG).expect("well formed")
}

pub fn self_directed_hypothesis() -> Hypothesis {
    Hypothesis::supporting(SELF_DIRECTED_HYPOTHESIS, SELF_TAG).expect("well formed")
}

/// The fixed supporting hypotheses of a strategy. `flavor` only matters for `fbt`.
pub fn supporting_set(strategy: &str, flavor: Option<Flavor>) -> Result<SupportingSet, Error> {
    let set = match strategy {
        "fbt" => {
            let flavor = flavor.unwrap_or_default();
            SupportingSet {
                strategy: match flavor {
                    Flavor::Groups => SupportingKind::FbtGroups,
                    Flavor::Characteristics => SupportingKind::FbtCharacteristics,
                },
                hypotheses: fbt_hypotheses(flavor),
            }
        }
        "fcs" => SupportingSet {
            strategy: SupportingKind::Fcs,
            hypotheses: vec![render_stance_hypothesis(STANCE_HYPOTHESIS)?],
        },
        "frs" => SupportingSet {
            strategy: SupportingKind::Frs,
            hypotheses: vec![self_directed_hypothesis()],
        },
        "cdc" => {
            let mut hypotheses = cdc_animal_hypotheses();
            hypotheses.push(sentiment_hypothesis());
            SupportingSet {
                strategy: SupportingKind::Cdc,
                hypotheses,
            }
        }
        other => return Err(Error::UnknownStrategy(other.to_owned())),
    };
    Ok(set)
}

/// Validates a stance template: the placeholder must occur exactly once.
pub fn render_stance_hypothesis(template: &str) -> Result<Hypothesis, Error> {
    match template.matches(PLACEHOLDER).count() {
        1 => Hypothesis::supporting(template, STANCE_TAG),
        0 => Err(Error::Placeholder(format!("placeholder missing in {template:?}"))),
        n => Err(Error::Placeholder(format!("placeholder repeated {n} times in {template:?}"))),
    }
}

//! Dataset loaders and supporting-task gold labels.
//!
//! Text is kept byte-for-byte: the spelling-variation functionalities are
//! part of what is being measured.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::types::{InputText, Label};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("missing header")]
    MissingHeader,

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: InputText,
    pub gold: Label,
    /// Present for HateCheck rows, verbatim from the file.
    pub functionality: Option<String>,
    /// Canonical group name; `Some("")` for untargeted HateCheck rows.
    pub target_ident: Option<String>,
}

/// One HateCheck functionality: code, number and description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Functionality {
    pub number: u8,
    pub code: &'static str,
    pub description: &'static str,
}

impl Functionality {
    pub fn label(&self) -> String {
        format!("F{}: {}", self.number, self.description)
    }
}

pub const FUNCTIONALITIES: [Functionality; 29] = [
    Functionality { number: 1, code: "derog_neg_emote_h", description: "Expression of strong negative emotions (explicit)" },
    Functionality { number: 2, code: "derog_neg_attrib_h", description: "Description using very negative attributes (explicit)" },
    Functionality { number: 3, code: "derog_dehum_h", description: "Dehumanisation (explicit)" },
    Functionality { number: 4, code: "derog_impl_h", description: "Implicit derogation" },
    Functionality { number: 5, code: "threat_dir_h", description: "Direct threat" },
    Functionality { number: 6, code: "threat_norm_h", description: "Threat as normative statement" },
    Functionality { number: 7, code: "slur_h", description: "Hate expressed using slur" },
    Functionality { number: 8, code: "slur_homonym_nh", description: "Non-hateful homonyms of slurs" },
    Functionality { number: 9, code: "slur_reclaimed_nh", description: "Reclaimed slurs" },
    Functionality { number: 10, code: "profanity_h", description: "Hate expressed using profanity" },
    Functionality { number: 11, code: "profanity_nh", description: "Non-hateful use of profanity" },
    Functionality { number: 12, code: "ref_subs_clause_h", description: "Hate expressed through reference in subsequent clauses" },
    Functionality { number: 13, code: "ref_subs_sent_h", description: "Hate expressed through reference in subsequent sentences" },
    Functionality { number: 14, code: "negate_pos_h", description: "Hate expressed using negated positive statement" },
    Functionality { number: 15, code: "negate_neg_nh", description: "Non-hate expressed using negated hateful statement" },
    Functionality { number: 16, code: "phrase_question_h", description: "Hate phrased as a question" },
    Functionality { number: 17, code: "phrase_opinion_h", description: "Hate phrased as an opinion" },
    Functionality { number: 18, code: "ident_neutral_nh", description: "Neutral statements using protected group identifiers" },
    Functionality { number: 19, code: "ident_pos_nh", description: "Positive statements using protected group identifiers" },
    Functionality { number: 20, code: "counter_quote_nh", description: "Denouncements of hate that quote it" },
    Functionality { number: 21, code: "counter_ref_nh", description: "Denouncements of hate that make direct reference to it" },
    Functionality { number: 22, code: "target_obj_nh", description: "Abuse targeted at objects" },
    Functionality { number: 23, code: "target_indiv_nh", description: "Abuse targeted at individuals (not as member of a prot. group)" },
    Functionality { number: 24, code: "target_group_nh", description: "Abuse targeted at nonprotected groups (e.g. professions)" },
    Functionality { number: 25, code: "spell_char_swap_h", description: "Swaps of adjacent characters" },
    Functionality { number: 26, code: "spell_char_del_h", description: "Missing characters" },
    Functionality { number: 27, code: "spell_space_del_h", description: "Missing word boundaries" },
    Functionality { number: 28, code: "spell_space_add_h", description: "Added spaces between chars" },
    Functionality { number: 29, code: "spell_leet_h", description: "Leet speak spellings" },
];

/// Looks up a functionality by HateCheck code or by `F<n>`.
pub fn functionality(name: &str) -> Option<&'static Functionality> {
    if let Some(n) = name.strip_prefix('F').and_then(|n| n.parse::<u8>().ok()) {
        return FUNCTIONALITIES.iter().find(|f| f.number == n);
    }
    FUNCTIONALITIES.iter().find(|f| f.code == name)
}

/// Sort key placing known functionalities in F-number order and anything
/// else after them, alphabetically.
pub fn functionality_order(name: &str) -> (u8, String) {
    match functionality(name) {
        Some(f) => (f.number, String::new()),
        None => (u8::MAX, name.to_owned()),
    }
}

fn is_functionality(example: &LabeledExample, number: u8) -> bool {
    example
        .functionality
        .as_deref()
        .and_then(functionality)
        .is_some_and(|f| f.number == number)
}

/// The seven protected groups, by supporting-task name.
pub const GROUPS: [&str; 7] = [
    "women",
    "transgender people",
    "gay people",
    "black people",
    "disabled people",
    "Muslims",
    "immigrants",
];

fn canonical_group(raw: &str) -> Option<&'static str> {
    match raw {
        "trans people" => Some("transgender people"),
        "muslims" => Some("Muslims"),
        other => GROUPS.iter().copied().find(|g| *g == other),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DatasetError> {
    fs::read(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn headers(reader: &mut csv::Reader<&[u8]>) -> Result<csv::StringRecord, DatasetError> {
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(DatasetError::MissingHeader);
    }
    Ok(headers)
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, DatasetError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| DatasetError::MissingColumn(name.to_owned()))
}

fn text_at(row: usize, raw: &str) -> Result<InputText, DatasetError> {
    InputText::new(raw).map_err(|e| DatasetError::Row {
        row,
        message: e.to_string(),
    })
}

/// Parses HateCheck CSV bytes. Row numbers in errors count the header as
/// row 1.
pub fn parse_hatecheck(bytes: &[u8]) -> Result<Vec<LabeledExample>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(bytes);
    let headers = headers(&mut reader)?;
    let functionality_col = column(&headers, "functionality")?;
    let text_col = column(&headers, "test_case")?;
    let gold_col = column(&headers, "label_gold")?;
    let target_col = column(&headers, "target_ident")?;
    let id_col = headers.iter().position(|h| h.trim() == "case_id");

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let gold = match field(gold_col).trim() {
            "hateful" => Label::Hate,
            "non-hateful" => Label::NotHate,
            other => {
                return Err(DatasetError::Row {
                    row,
                    message: format!("unknown label_gold {other:?}"),
                })
            }
        };
        let raw_target = field(target_col).trim();
        if raw_target.contains([',', ';', '|']) {
            return Err(DatasetError::Row {
                row,
                message: format!("multiple targets {raw_target:?}"),
            });
        }
        let target = if raw_target.is_empty() || raw_target.eq_ignore_ascii_case("nan") {
            String::new()
        } else {
            canonical_group(raw_target)
                .ok_or_else(|| DatasetError::Row {
                    row,
                    message: format!("unknown target_ident {raw_target:?}"),
                })?
                .to_owned()
        };
        let id = match id_col.map(field).map(str::trim) {
            Some(id) if !id.is_empty() => id.to_owned(),
            _ => (row - 1).to_string(),
        };
        out.push(LabeledExample {
            id,
            text: text_at(row, field(text_col))?,
            gold,
            functionality: Some(field(functionality_col).to_owned()),
            target_ident: Some(target),
        });
    }
    Ok(out)
}

pub fn load_hatecheck(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>, DatasetError> {
    parse_hatecheck(&read(path.as_ref())?)
}

/// Gold label for an ETHOS hate score: hate iff `score >= 0.5`.
pub fn ethos_label(score: f64) -> Label {
    if score >= 0.5 {
        Label::Hate
    } else {
        Label::NotHate
    }
}

/// Parses the semicolon-delimited binary ETHOS file (`comment;isHate`).
pub fn parse_ethos_binary(bytes: &[u8]) -> Result<Vec<LabeledExample>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().delimiter(b';').from_reader(bytes);
    let headers = headers(&mut reader)?;
    let text_col = column(&headers, "comment")?;
    let score_col = column(&headers, "isHate")?;

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let raw = record.get(score_col).unwrap_or("").trim();
        let score: f64 = raw.parse().map_err(|_| DatasetError::Row {
            row,
            message: format!("isHate {raw:?} is not a number"),
        })?;
        if !(0.0..=1.0).contains(&score) {
            return Err(DatasetError::Row {
                row,
                message: format!("isHate {score} outside [0, 1]"),
            });
        }
        out.push(LabeledExample {
            id: (row - 1).to_string(),
            text: text_at(row, record.get(text_col).unwrap_or(""))?,
            gold: ethos_label(score),
            functionality: None,
            target_ident: None,
        });
    }
    Ok(out)
}

pub fn load_ethos_binary(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>, DatasetError> {
    parse_ethos_binary(&read(path.as_ref())?)
}

/// Generic comma-separated file with `text` and `label` columns (`hate` /
/// `not_hate`, `1` / `0`) and an optional `functionality` column.
pub fn parse_generic_csv(bytes: &[u8]) -> Result<Vec<LabeledExample>, DatasetError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let headers = headers(&mut reader)?;
    let text_col = column(&headers, "text")?;
    let label_col = column(&headers, "label")?;
    let functionality_col = headers.iter().position(|h| h.trim() == "functionality");
    let id_col = headers.iter().position(|h| h.trim() == "id");

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let gold = match record.get(label_col).unwrap_or("").trim() {
            "hate" | "hateful" | "1" => Label::Hate,
            "not_hate" | "non-hateful" | "0" => Label::NotHate,
            other => {
                return Err(DatasetError::Row {
                    row,
                    message: format!("unknown label {other:?}"),
                })
            }
        };
        let id = match id_col.and_then(|c| record.get(c)).map(str::trim) {
            Some(id) if !id.is_empty() => id.to_owned(),
            _ => (row - 1).to_string(),
        };
        out.push(LabeledExample {
            id,
            text: text_at(row, record.get(text_col).unwrap_or(""))?,
            gold,
            functionality: functionality_col.and_then(|c| record.get(c)).map(str::to_owned),
            target_ident: None,
        });
    }
    Ok(out)
}

pub fn load_generic_csv(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>, DatasetError> {
    parse_generic_csv(&read(path.as_ref())?)
}

/// Hate-class share in percent.
pub fn hate_share(examples: &[LabeledExample]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let hate = examples.iter().filter(|e| e.gold.is_hate()).count();
    100.0 * hate as f64 / examples.len() as f64
}

/// Number of examples per functionality.
pub fn functionality_sizes(examples: &[LabeledExample]) -> BTreeMap<String, usize> {
    let mut sizes = BTreeMap::new();
    for e in examples {
        if let Some(f) = &e.functionality {
            *sizes.entry(f.clone()).or_insert(0) += 1;
        }
    }
    sizes
}

/// A binary task over a subset of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportingTask {
    pub name: String,
    /// Examples the task is evaluated on.
    pub scope_ids: BTreeSet<String>,
    pub positive_ids: BTreeSet<String>,
}

impl SupportingTask {
    pub fn is_stance(&self) -> bool {
        self.name == STANCE_TASK
    }

    pub fn gold(&self, id: &str) -> bool {
        self.positive_ids.contains(id)
    }
}

pub const STANCE_TASK: &str = "stance-F20";

/// Task names accepted by [`infer_supporting_labels`].
pub fn supporting_task_names() -> Vec<&'static str> {
    let mut names = GROUPS.to_vec();
    names.extend(["queer people", "gender", "self-directed", STANCE_TASK]);
    names
}

/// Derives gold labels for a supporting-hypothesis task from HateCheck
/// annotations. For the stance task every in-scope example is gold
/// `is_against`, so the positive (`is_for`) set is empty.
pub fn infer_supporting_labels(examples: &[LabeledExample], task_name: &str) -> Result<SupportingTask, Error> {
    let target_in = |e: &LabeledExample, groups: &[&str]| {
        e.target_ident
            .as_deref()
            .is_some_and(|t| groups.contains(&t))
    };
    let all: BTreeSet<String> = examples.iter().map(|e| e.id.clone()).collect();
    let select = |pred: &dyn Fn(&LabeledExample) -> bool| -> BTreeSet<String> {
        examples.iter().filter(|e| pred(e)).map(|e| e.id.clone()).collect()
    };

    let task_group = if task_name == "trans people" {
        Some("transgender people")
    } else {
        GROUPS.iter().copied().find(|g| *g == task_name)
    };
    let (name, scope_ids, positive_ids) = if let Some(group) = task_group {
        (group.to_owned(), all, select(&|e| target_in(e, &[group])))
    } else {
        match task_name {
            "queer people" => (
                task_name.to_owned(),
                all,
                select(&|e| target_in(e, &["gay people", "transgender people"])),
            ),
            "gender" => (
                task_name.to_owned(),
                all,
                select(&|e| target_in(e, &["women", "transgender people"])),
            ),
            "self-directed" => (task_name.to_owned(), all, select(&|e| is_functionality(e, 9))),
            STANCE_TASK => (task_name.to_owned(), select(&|e| is_functionality(e, 20)), BTreeSet::new()),
            other => return Err(Error::UnknownTask(other.to_owned())),
        }
    };
    Ok(SupportingTask {
        name,
        scope_ids,
        positive_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HC: &str = "\
,functionality,case_id,test_case,label_gold,target_ident,direction
0,derog_neg_emote_h,1,I hate women.,hateful,women,general
1,slur_reclaimed_nh,2,We are proud queers.,non-hateful,gay people,general
2,target_obj_nh,3,I really can't stand cauliflower.,non-hateful,,general
3,counter_quote_nh,4,\"Saying \"\"I hate trans people\"\" is wrong.\",non-hateful,trans people,general
";

    #[test]
    fn hatecheck_rows() {
        let rows = parse_hatecheck(HC.as_bytes()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].gold, Label::Hate);
        assert_eq!(rows[1].gold, Label::NotHate);
        assert_eq!(rows[1].functionality.as_deref(), Some("slur_reclaimed_nh"));
        assert_eq!(rows[2].target_ident.as_deref(), Some(""));
        assert_eq!(rows[3].target_ident.as_deref(), Some("transgender people"));
        assert_eq!(rows[3].text.as_str(), "Saying \"I hate trans people\" is wrong.");
        assert_eq!(rows[3].id, "4");
    }

    #[test]
    fn hatecheck_errors() {
        assert!(matches!(parse_hatecheck(b""), Err(DatasetError::MissingHeader)));
        assert_eq!(parse_hatecheck(b"").unwrap_err().to_string(), "missing header");
        let e = parse_hatecheck(b"functionality,test_case,label_gold\nx,y,hateful\n").unwrap_err();
        assert!(matches!(e, DatasetError::MissingColumn(ref c) if c == "target_ident"));
        let e = parse_hatecheck(b"functionality,test_case,label_gold,target_ident\nx,y,hateful,\nx,z,maybe,\n").unwrap_err();
        assert!(matches!(e, DatasetError::Row { row: 3, .. }), "{e:?}");
        let e = parse_hatecheck(b"functionality,test_case,label_gold,target_ident\nx,y,hateful,\"women, Muslims\"\n").unwrap_err();
        assert!(e.to_string().contains("multiple targets"));
        let e = parse_hatecheck(b"functionality,test_case,label_gold,target_ident\nx,y,hateful,lawyers\n").unwrap_err();
        assert!(e.to_string().contains("unknown target_ident"));
    }

    #[test]
    fn ethos_threshold_is_inclusive() {
        let rows = parse_ethos_binary("comment;isHate\nyou are great;0.0\nborderline;0.5\nawful;0.9\nnearly;0.4999\n".as_bytes()).unwrap();
        let golds: Vec<Label> = rows.iter().map(|r| r.gold).collect();
        assert_eq!(golds, vec![Label::NotHate, Label::Hate, Label::Hate, Label::NotHate]);
        assert!(rows.iter().all(|r| r.functionality.is_none() && r.target_ident.is_none()));
    }

    #[test]
    fn ethos_errors_carry_row() {
        let e = parse_ethos_binary(b"comment;isHate\na;0.1\nb;high\n").unwrap_err();
        assert!(matches!(e, DatasetError::Row { row: 3, .. }), "{e:?}");
        assert!(matches!(parse_ethos_binary(b""), Err(DatasetError::MissingHeader)));
    }

    #[test]
    fn generic_csv() {
        let rows = parse_generic_csv(b"text,label,functionality\nhi,not_hate,F1\nugh,hate,F2\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].gold, Label::Hate);
        assert_eq!(rows[0].functionality.as_deref(), Some("F1"));
    }

    #[test]
    fn catalog() {
        assert_eq!(functionality("slur_reclaimed_nh").unwrap().number, 9);
        assert_eq!(functionality("F20").unwrap().code, "counter_quote_nh");
        assert_eq!(functionality("F24").unwrap().label(), "F24: Abuse targeted at nonprotected groups (e.g. professions)");
        assert!(functionality("F30").is_none());
        assert!(functionality_order("F2") < functionality_order("F10"));
        assert!(functionality_order("profanity_h") < functionality_order("zzz"));
    }

    #[test]
    fn supporting_tasks() {
        let rows = parse_hatecheck(HC.as_bytes()).unwrap();
        let gender = infer_supporting_labels(&rows, "gender").unwrap();
        assert_eq!(gender.positive_ids, ["1", "4"].iter().map(|s| s.to_string()).collect());
        assert!(!gender.gold("2"));
        let queer = infer_supporting_labels(&rows, "queer people").unwrap();
        assert_eq!(queer.positive_ids.len(), 2);
        let selfd = infer_supporting_labels(&rows, "self-directed").unwrap();
        assert_eq!(selfd.positive_ids, ["2".to_string()].into_iter().collect());
        let stance = infer_supporting_labels(&rows, STANCE_TASK).unwrap();
        assert_eq!(stance.scope_ids, ["4".to_string()].into_iter().collect());
        assert!(stance.positive_ids.is_empty());
        assert!(stance.is_stance());
        let trans = infer_supporting_labels(&rows, "trans people").unwrap();
        assert_eq!(trans.name, "transgender people");
        assert!(matches!(infer_supporting_labels(&rows, "lawyers"), Err(Error::UnknownTask(_))));
    }
}

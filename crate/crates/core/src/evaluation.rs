//! Metrics, per-functionality reports and hypothesis sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{ScorePair, Scorer};
use crate::datasets::{self, LabeledExample, SupportingTask};
use crate::error::Error;
use crate::segmentation::{split_quotes, QuotePair};
use crate::strategies::Pipeline;
use crate::types::{decide, entailment_probability, Hypothesis, Label, Premise};

fn check_lengths(a: usize, b: usize) -> Result<(), Error> {
    if a != b {
        return Err(Error::Metric(format!("length mismatch: {a} predictions, {b} gold labels")));
    }
    if a == 0 {
        return Err(Error::Metric("no examples".into()));
    }
    Ok(())
}

/// Percentage of matching labels.
pub fn accuracy<T: PartialEq>(preds: &[T], golds: &[T]) -> Result<f64, Error> {
    check_lengths(preds.len(), golds.len())?;
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(100.0 * hits as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (pred, gold) in pairs {
            match (pred, gold) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        100.0 * (self.tp + self.tn) as f64 / self.total() as f64
    }
}

/// Accuracy, F1, recall and precision in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub accuracy: f64,
    pub f1: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Standard binary metrics with `true` as the positive class. Precision is
/// 0 when nothing is predicted positive, recall is 0 when nothing is
/// positive, and F1 is 0 when both are 0.
pub fn prf_metrics(preds: &[bool], golds: &[bool]) -> Result<Prf, Error> {
    check_lengths(preds.len(), golds.len())?;
    let c = Confusion::from_pairs(preds.iter().copied().zip(golds.iter().copied()));
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf {
        accuracy: c.accuracy(),
        f1,
        recall,
        precision,
    })
}

/// One classified example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub functionality: Option<String>,
    pub gold: Label,
    pub predicted: Label,
}

/// Predictions of one policy over one dataset, in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub dataset_name: String,
    pub policy_hash: String,
    pub records: Vec<RunRecord>,
}

/// Classifies every example. Examples are processed in parallel; the
/// result keeps dataset order.
pub fn run_pipeline(
    examples: &[LabeledExample],
    pipeline: &Pipeline,
    scorer: &dyn Scorer,
    dataset_name: &str,
    policy_hash: &str,
) -> Result<Run, Error> {
    let records = examples
        .par_iter()
        .map(|e| {
            let verdict = pipeline.classify(&e.text, scorer)?;
            Ok(RunRecord {
                id: e.id.clone(),
                functionality: e.functionality.clone(),
                gold: e.gold,
                predicted: verdict.label,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Run {
        dataset_name: dataset_name.to_owned(),
        policy_hash: policy_hash.to_owned(),
        records,
    })
}

/// Scores every pair the pipeline might consult, in batches, so that a
/// caching scorer can answer the real run locally. Returns the number of
/// distinct pairs sent.
pub fn prefetch(examples: &[LabeledExample], pipeline: &Pipeline, scorer: &dyn Scorer, batch_size: usize) -> Result<usize, Error> {
    let mut seen = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    for e in examples {
        for (premise, hypothesis) in pipeline.candidate_pairs(&e.text) {
            if seen.insert((premise.text().to_owned(), hypothesis.text().to_owned())) {
                pairs.push((premise, hypothesis));
            }
        }
    }
    pairs
        .par_chunks(batch_size.max(1))
        .try_for_each(|chunk| {
            let batch: Vec<ScorePair<'_>> = chunk.iter().map(|(p, h)| ScorePair::new(p, h)).collect();
            scorer.score_batch(&batch).map(drop)
        })?;
    Ok(pairs.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy_hash: String,
    pub dataset_name: String,
    pub examples: usize,
    pub overall_accuracy: f64,
    pub per_functionality: BTreeMap<String, f64>,
    pub functionality_sizes: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_policy_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_per_functionality: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_overall_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas_vs_baseline: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_delta: Option<f64>,
    pub confusion: Confusion,
}

fn by_functionality(run: &Run) -> (BTreeMap<String, f64>, BTreeMap<String, usize>) {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in &run.records {
        if let Some(f) = &r.functionality {
            let entry = counts.entry(f.clone()).or_default();
            entry.1 += 1;
            if r.gold == r.predicted {
                entry.0 += 1;
            }
        }
    }
    let acc = counts
        .iter()
        .map(|(f, (hit, n))| (f.clone(), 100.0 * *hit as f64 / *n as f64))
        .collect();
    let sizes = counts.into_iter().map(|(f, (_, n))| (f, n)).collect();
    (acc, sizes)
}

fn overall(run: &Run) -> Result<f64, Error> {
    let preds: Vec<Label> = run.records.iter().map(|r| r.predicted).collect();
    let golds: Vec<Label> = run.records.iter().map(|r| r.gold).collect();
    accuracy(&preds, &golds)
}

/// Accuracy per functionality, optionally with signed percentage-point
/// deltas against a baseline run over the same examples.
pub fn per_functionality_report(run: &Run, baseline: Option<&Run>) -> Result<EvalReport, Error> {
    let overall_accuracy = overall(run)?;
    let (per_functionality, functionality_sizes) = by_functionality(run);
    let confusion = Confusion::from_pairs(run.records.iter().map(|r| (r.predicted.is_hate(), r.gold.is_hate())));
    let mut report = EvalReport {
        policy_hash: run.policy_hash.clone(),
        dataset_name: run.dataset_name.clone(),
        examples: run.records.len(),
        overall_accuracy,
        per_functionality,
        functionality_sizes,
        baseline_policy_hash: None,
        baseline_per_functionality: None,
        baseline_overall_accuracy: None,
        deltas_vs_baseline: None,
        overall_delta: None,
        confusion,
    };
    if let Some(base) = baseline {
        let same = base.records.len() == run.records.len()
            && base
                .records
                .iter()
                .zip(&run.records)
                .all(|(a, b)| a.id == b.id && a.gold == b.gold && a.functionality == b.functionality);
        if !same || base.dataset_name != run.dataset_name {
            return Err(Error::Metric("baseline run covers a different example set".into()));
        }
        let base_overall = overall(base)?;
        let (base_acc, _) = by_functionality(base);
        let deltas = report
            .per_functionality
            .iter()
            .map(|(f, acc)| (f.clone(), acc - base_acc[f]))
            .collect();
        report.baseline_policy_hash = Some(base.policy_hash.clone());
        report.baseline_overall_accuracy = Some(base_overall);
        report.overall_delta = Some(overall_accuracy - base_overall);
        report.baseline_per_functionality = Some(base_acc);
        report.deltas_vs_baseline = Some(deltas);
    }
    Ok(report)
}

/// Signed, one decimal, `+0.0` for no change.
pub fn format_delta(delta: f64) -> String {
    let rounded = format!("{:.1}", delta.abs());
    let sign = if delta < 0.0 && rounded != "0.0" { '-' } else { '+' };
    format!("{sign}{rounded}")
}

fn functionality_name(code: &str) -> String {
    datasets::functionality(code).map_or_else(|| code.to_owned(), |f| f.label())
}

/// Plain-text table, one decimal place, rows in F-number order.
pub fn render_report_table(report: &EvalReport) -> String {
    let mut keys: Vec<&String> = report.per_functionality.keys().collect();
    keys.sort_by_key(|k| datasets::functionality_order(k));
    let rows: Vec<(String, Vec<String>)> = keys
        .iter()
        .map(|k| {
            let cells = match (&report.baseline_per_functionality, &report.deltas_vs_baseline) {
                (Some(base), Some(deltas)) => vec![
                    format!("{:.1}", base[*k]),
                    format!("{:.1}", report.per_functionality[*k]),
                    format_delta(deltas[*k]),
                ],
                _ => vec![format!("{:.1}", report.per_functionality[*k])],
            };
            (functionality_name(k), cells)
        })
        .collect();
    let overall_cells = match (report.baseline_overall_accuracy, report.overall_delta) {
        (Some(base), Some(delta)) => vec![
            format!("{base:.1}"),
            format!("{:.1}", report.overall_accuracy),
            format_delta(delta),
        ],
        _ => vec![format!("{:.1}", report.overall_accuracy)],
    };
    let header: Vec<&str> = if report.deltas_vs_baseline.is_some() {
        vec!["Functionality", "Baseline", "Policy", "Delta"]
    } else {
        vec!["Functionality", "Accuracy"]
    };

    let width = rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain([header[0].len(), "Overall".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let mut line = |name: &str, cells: &[String]| {
        let _ = write!(out, "{name:<width$}");
        for c in cells {
            let _ = write!(out, "  {c:>8}");
        }
        out.push('\n');
    };
    line(header[0], &header[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for (name, cells) in &rows {
        line(name, cells);
    }
    line("Overall", &overall_cells);
    out
}

/// JSON with a trailing newline. Identical reports give identical bytes.
pub fn report_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report is serialisable");
    s.push('\n');
    s
}

/// Scores `hypothesis` against every premise in one batch and thresholds.
fn decide_all(premises: &[Premise], hypothesis: &Hypothesis, scorer: &dyn Scorer, threshold: f64) -> Result<Vec<bool>, Error> {
    let pairs: Vec<ScorePair<'_>> = premises.iter().map(|p| ScorePair::new(p, hypothesis)).collect();
    let triples = scorer.score_batch(&pairs)?;
    triples
        .iter()
        .map(|t| Ok(decide(entailment_probability(t)?, threshold).entails()))
        .collect()
}

/// Substrings defining the grouped averages of a hypothesis sweep.
pub const GROUP_SUBSTRINGS: [&str; 10] = [
    "It",
    "This",
    "That",
    "hateful",
    "hateful content",
    "hate speech",
    "example",
    "text",
    "is",
    "contain",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub hypothesis: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// Descending accuracy, ties by hypothesis text.
    pub ranked: Vec<SweepRow>,
    /// `average` over everything, then `average: <s>` for each non-empty group.
    pub group_averages: Vec<(String, f64)>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Averages over hypotheses containing each substring (case-sensitive).
pub fn group_averages(rows: &[SweepRow]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if rows.is_empty() {
        return out;
    }
    out.push(("average".to_owned(), mean(&rows.iter().map(|r| r.accuracy).collect::<Vec<_>>())));
    for s in GROUP_SUBSTRINGS {
        let members: Vec<f64> = rows
            .iter()
            .filter(|r| r.hypothesis.contains(s))
            .map(|r| r.accuracy)
            .collect();
        if !members.is_empty() {
            out.push((format!("average: {s}"), mean(&members)));
        }
    }
    out
}

pub fn rank_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then_with(|| a.hypothesis.cmp(&b.hypothesis))
    });
}

/// Evaluates each hypothesis as a lone main hypothesis, no strategies.
pub fn compare_hypotheses(
    examples: &[LabeledExample],
    hypotheses: &[Hypothesis],
    scorer: &dyn Scorer,
    threshold: f64,
) -> Result<Sweep, Error> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidInput("no hypotheses to compare".into()));
    }
    if examples.is_empty() {
        return Err(Error::InvalidInput("no examples".into()));
    }
    let premises: Vec<Premise> = examples.iter().map(|e| Premise::whole(&e.text)).collect();
    let golds: Vec<bool> = examples.iter().map(|e| e.gold.is_hate()).collect();
    let mut rows = hypotheses
        .par_iter()
        .map(|h| {
            let preds = decide_all(&premises, h, scorer, threshold)?;
            Ok(SweepRow {
                hypothesis: h.text().to_owned(),
                accuracy: accuracy(&preds, &golds)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    rank_rows(&mut rows);
    let group_averages = group_averages(&rows);
    Ok(Sweep {
        ranked: rows,
        group_averages,
    })
}

pub fn render_sweep_table(sweep: &Sweep) -> String {
    let width = sweep
        .ranked
        .iter()
        .map(|r| r.hypothesis.chars().count())
        .chain(sweep.group_averages.iter().map(|(n, _)| n.chars().count()))
        .chain(["hypothesis".len()])
        .max()
        .unwrap_or(0);
    let mut out = format!("{:<width$}  {:>8}\n", "hypothesis", "accuracy");
    for r in &sweep.ranked {
        let _ = writeln!(out, "{:<width$}  {:>8.1}", r.hypothesis, r.accuracy);
    }
    for (name, avg) in &sweep.group_averages {
        let _ = writeln!(out, "{name:<width$}  {avg:>8.1}");
    }
    out
}

/// How a stance hypothesis maps onto the `is_for` / `is_against` labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StancePolarity {
    /// Entailment means `is_for` ("This text supports [X].").
    #[default]
    Supports,
    /// Entailment means `is_against` ("This text denounces [X].").
    Denounces,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportingRow {
    pub hypothesis: String,
    pub accuracy: f64,
    /// `None` for the stance task, where only accuracy is meaningful.
    pub f1: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
}

/// Scores each supporting hypothesis on a task. Rows are sorted by F1
/// descending (accuracy for the stance task), ties by hypothesis text.
pub fn eval_supporting(
    examples: &[LabeledExample],
    task: &SupportingTask,
    hypotheses: &[Hypothesis],
    scorer: &dyn Scorer,
    threshold: f64,
    quote_pairs: &[QuotePair],
    polarity: StancePolarity,
) -> Result<Vec<SupportingRow>, Error> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidInput("no hypotheses to evaluate".into()));
    }
    let scoped: Vec<&LabeledExample> = examples.iter().filter(|e| task.scope_ids.contains(&e.id)).collect();
    if scoped.is_empty() {
        return Err(Error::InvalidInput(format!("task {:?} has no examples", task.name)));
    }

    let premises: Vec<Premise> = if task.is_stance() {
        scoped
            .iter()
            .map(|e| {
                split_quotes(&e.text, quote_pairs)
                    .map(|s| s.outer)
                    .ok_or_else(|| Error::InvalidInput(format!("example {} has no quote", e.id)))
            })
            .collect::<Result<_, _>>()?
    } else {
        scoped.iter().map(|e| Premise::whole(&e.text)).collect()
    };
    let golds: Vec<bool> = scoped.iter().map(|e| task.gold(&e.id)).collect();

    let mut rows = hypotheses
        .par_iter()
        .map(|h| {
            let entails = decide_all(&premises, h, scorer, threshold)?;
            if task.is_stance() {
                let preds: Vec<bool> = entails
                    .iter()
                    .map(|&e| match polarity {
                        StancePolarity::Supports => e,
                        StancePolarity::Denounces => !e,
                    })
                    .collect();
                Ok(SupportingRow {
                    hypothesis: h.text().to_owned(),
                    accuracy: accuracy(&preds, &golds)?,
                    f1: None,
                    recall: None,
                    precision: None,
                })
            } else {
                let m = prf_metrics(&entails, &golds)?;
                Ok(SupportingRow {
                    hypothesis: h.text().to_owned(),
                    accuracy: m.accuracy,
                    f1: Some(m.f1),
                    recall: Some(m.recall),
                    precision: Some(m.precision),
                })
            }
        })
        .collect::<Result<Vec<_>, Error>>()?;
    rows.sort_by(|a, b| {
        let key = |r: &SupportingRow| r.f1.unwrap_or(r.accuracy);
        key(b).total_cmp(&key(a)).then_with(|| a.hypothesis.cmp(&b.hypothesis))
    });
    Ok(rows)
}

pub fn render_supporting_table(rows: &[SupportingRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.hypothesis.chars().count())
        .chain(["hypothesis".len()])
        .max()
        .unwrap_or(0);
    let stance = rows.first().is_some_and(|r| r.f1.is_none());
    let mut out = if stance {
        format!("{:<width$}  {:>8}\n", "hypothesis", "accuracy")
    } else {
        format!(
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>9}\n",
            "hypothesis", "accuracy", "F1", "recall", "precision"
        )
    };
    for r in rows {
        match (r.f1, r.recall, r.precision) {
            (Some(f1), Some(rec), Some(prec)) => {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>8.1}  {:>8.1}  {:>8.1}  {:>9.1}",
                    r.hypothesis, r.accuracy, f1, rec, prec
                );
            }
            _ => {
                let _ = writeln!(out, "{:<width$}  {:>8.1}", r.hypothesis, r.accuracy);
            }
        }
    }
    out
}

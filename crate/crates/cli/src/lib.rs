//! Command implementations behind the `hypostrat` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hypostrat_core::backend::{
    BackendError, CachedScorer, FixtureBackend, HttpBackend, HttpConfig, MockRuleTable, ScoreCache, Scorer,
    DEFAULT_BATCH_SIZE,
};
use hypostrat_core::datasets::{self, LabeledExample};
use hypostrat_core::evaluation::{self, StancePolarity};
use hypostrat_core::hypotheses::{self, GrammarSpec};
use hypostrat_core::policy::{self, PolicyDocument};
use hypostrat_core::{Hypothesis, InputText, Verdict, DEFAULT_MODEL_ID};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variable naming the default scoring endpoint.
pub const ENDPOINT_ENV: &str = "HYPOSTRAT_ENDPOINT";
/// Cache used for remote backends when `--cache` is not given.
pub const DEFAULT_HTTP_CACHE: &str = ".hypostrat/cache.jsonl";

#[derive(Debug, Parser)]
#[command(name = "hypostrat", version, about = "Zero-shot hate speech detection with NLI hypotheses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one text and print the decision trace.
    Classify(ClassifyArgs),
    /// Evaluate a policy on a dataset.
    Evaluate(EvaluateArgs),
    /// Rank main hypotheses by accuracy.
    SweepHypotheses(SweepArgs),
    /// Score supporting hypotheses on a derived binary task.
    EvalSupporting(SupportingArgs),
    /// Parse and validate policy files.
    ValidatePolicy(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// http:URL, fixture:PATH or mock:PATH. Defaults to http at $HYPOSTRAT_ENDPOINT.
    #[arg(long)]
    pub backend: Option<String>,
    /// Score cache (JSON lines). Remote backends default to .hypostrat/cache.jsonl.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Overrides the policy's model id.
    #[arg(long)]
    pub model_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub text: String,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub policy: PathBuf,
    /// hatecheck:PATH, ethos:PATH or csv:PATH.
    #[arg(long)]
    pub dataset: String,
    #[arg(long)]
    pub baseline_policy: Option<PathBuf>,
    /// Report JSON path; a manifest is written next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: String,
    /// One hypothesis per line. Defaults to the policy grammar, or the built-in one.
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    /// Supplies threshold, model id and grammar.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolarityArg {
    Supports,
    Denounces,
}

#[derive(Debug, Args)]
pub struct SupportingArgs {
    /// Must be a HateCheck dataset.
    #[arg(long)]
    pub dataset: String,
    /// women, transgender people, ..., queer people, gender, self-directed, stance-F20.
    #[arg(long)]
    pub task: String,
    /// One hypothesis per line.
    #[arg(long)]
    pub hypotheses: PathBuf,
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "supports")]
    pub stance_polarity: PolarityArg,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub policies: Vec<PathBuf>,
}

/// Configuration or input problem (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// 0 success, 1 configuration or input, 2 backend or transport, 3 internal.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hypostrat_core::Error>() {
            return match e {
                e if e.is_backend() => 2,
                hypostrat_core::Error::Metric(_) => 3,
                _ => 1,
            };
        }
        if cause.downcast_ref::<BackendError>().is_some() {
            return 2;
        }
    }
    1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Http(String),
    Fixture(PathBuf),
    Mock(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(BackendSpec::Http(s.to_owned()));
        }
        match s.split_once(':') {
            Some(("http", url)) if !url.is_empty() => Ok(BackendSpec::Http(url.to_owned())),
            Some(("fixture", path)) if !path.is_empty() => Ok(BackendSpec::Fixture(path.into())),
            Some(("mock", path)) if !path.is_empty() => Ok(BackendSpec::Mock(path.into())),
            _ => Err(usage(format!("--backend {s:?}: expected http:URL, fixture:PATH or mock:PATH"))),
        }
    }
}

impl BackendSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendSpec::Http(_) => "http",
            BackendSpec::Fixture(_) => "fixture",
            BackendSpec::Mock(_) => "mock",
        }
    }

    pub fn location(&self) -> String {
        match self {
            BackendSpec::Http(url) => url.clone(),
            BackendSpec::Fixture(p) | BackendSpec::Mock(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Hatecheck,
    Ethos,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub path: PathBuf,
}

impl FromStr for DatasetSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, path) = s
            .split_once(':')
            .ok_or_else(|| usage(format!("--dataset {s:?}: expected hatecheck:PATH, ethos:PATH or csv:PATH")))?;
        let kind = match kind {
            "hatecheck" => DatasetKind::Hatecheck,
            "ethos" => DatasetKind::Ethos,
            "csv" => DatasetKind::Csv,
            other => return Err(usage(format!("unknown dataset kind {other:?}"))),
        };
        if path.is_empty() {
            return Err(usage("--dataset needs a path"));
        }
        Ok(DatasetSpec { kind, path: path.into() })
    }
}

impl DatasetSpec {
    pub fn name(&self) -> &'static str {
        match self.kind {
            DatasetKind::Hatecheck => "hatecheck",
            DatasetKind::Ethos => "ethos",
            DatasetKind::Csv => "csv",
        }
    }

    pub fn load(&self) -> Result<Vec<LabeledExample>> {
        let rows = match self.kind {
            DatasetKind::Hatecheck => datasets::load_hatecheck(&self.path),
            DatasetKind::Ethos => datasets::load_ethos_binary(&self.path),
            DatasetKind::Csv => datasets::load_generic_csv(&self.path),
        }
        .map_err(hypostrat_core::Error::from)
        .with_context(|| format!("loading {}", self.path.display()))?;
        if rows.is_empty() {
            return Err(usage(format!("{} has no examples", self.path.display())));
        }
        log::info!(
            "{}: {} examples, {:.1}% hateful",
            self.path.display(),
            rows.len(),
            datasets::hate_share(&rows)
        );
        Ok(rows)
    }
}

/// A constructed backend and how it was described.
pub struct ResolvedBackend {
    pub scorer: Box<dyn Scorer>,
    pub spec: BackendSpec,
    pub cache_path: Option<PathBuf>,
    pub batch_size: Option<usize>,
}

pub fn resolve_backend(args: &BackendArgs, model_id: &str) -> Result<ResolvedBackend> {
    let spec = match &args.backend {
        Some(s) => s.parse()?,
        None => match std::env::var(ENDPOINT_ENV) {
            Ok(url) if !url.is_empty() => BackendSpec::Http(url),
            _ => return Err(usage(format!("no --backend given and ${ENDPOINT_ENV} is not set"))),
        },
    };
    let model_id = args.model_id.as_deref().unwrap_or(model_id).to_owned();
    let (inner, default_cache, batch_size): (Box<dyn Scorer>, Option<PathBuf>, Option<usize>) = match &spec {
        BackendSpec::Http(url) => {
            let backend = HttpBackend::new(HttpConfig::new(url.clone(), model_id)).map_err(hypostrat_core::Error::from)?;
            (Box::new(backend), Some(DEFAULT_HTTP_CACHE.into()), Some(DEFAULT_BATCH_SIZE))
        }
        BackendSpec::Fixture(path) => (
            Box::new(FixtureBackend::open(path, model_id).map_err(|e| usage(e.to_string()))?),
            None,
            None,
        ),
        BackendSpec::Mock(path) => {
            let mut table = MockRuleTable::from_file(path).map_err(|e| usage(e.to_string()))?;
            if let Some(id) = &args.model_id {
                table.model_id = id.clone();
            }
            (Box::new(table), None, None)
        }
    };
    let cache_path = args.cache.clone().or(default_cache);
    let scorer: Box<dyn Scorer> = match &cache_path {
        Some(path) => {
            let cache = ScoreCache::open(path).map_err(|e| usage(e.to_string()))?;
            Box::new(CachedScorer::new(inner, cache))
        }
        None => inner,
    };
    Ok(ResolvedBackend {
        scorer,
        spec,
        cache_path,
        batch_size,
    })
}

pub fn load_policy(path: &Path) -> Result<PolicyDocument> {
    let doc = policy::load_policy(path)
        .map_err(hypostrat_core::Error::from)
        .with_context(|| format!("policy {}", path.display()))?;
    Ok(doc)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Provenance for one report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub policy_path: Option<String>,
    pub policy_hash: Option<String>,
    pub baseline_policy_path: Option<String>,
    pub baseline_policy_hash: Option<String>,
    pub dataset_path: String,
    pub dataset_sha256: String,
    pub backend_kind: String,
    pub backend_location: String,
    pub model_id: String,
    pub cache_path: Option<String>,
    pub report_path: String,
    pub timestamp: u64,
}

/// `report.json` → `report.manifest.json`.
pub fn manifest_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    report.with_file_name(format!("{stem}.manifest.json"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_report(report_path: &Path, json: &str, manifest: &RunManifest) -> Result<()> {
    write_file(report_path, json)?;
    let mut m = serde_json::to_string_pretty(manifest)?;
    m.push('\n');
    write_file(&manifest_path(report_path), &m)
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

struct ManifestBase<'a> {
    command: &'a str,
    policy: Option<(&'a Path, &'a PolicyDocument)>,
    baseline: Option<(&'a Path, &'a PolicyDocument)>,
    dataset: &'a DatasetSpec,
    backend: &'a ResolvedBackend,
    report: &'a Path,
}

impl ManifestBase<'_> {
    fn build(&self) -> Result<RunManifest> {
        Ok(RunManifest {
            command: self.command.to_owned(),
            policy_path: self.policy.map(|(p, _)| p.display().to_string()),
            policy_hash: self.policy.map(|(_, d)| d.policy_hash()),
            baseline_policy_path: self.baseline.map(|(p, _)| p.display().to_string()),
            baseline_policy_hash: self.baseline.map(|(_, d)| d.policy_hash()),
            dataset_path: self.dataset.path.display().to_string(),
            dataset_sha256: sha256_file(&self.dataset.path)?,
            backend_kind: self.backend.spec.kind().to_owned(),
            backend_location: self.backend.spec.location(),
            model_id: self.backend.scorer.model_id().to_owned(),
            cache_path: self.backend.cache_path.as_ref().map(|p| p.display().to_string()),
            report_path: self.report.display().to_string(),
            timestamp: now(),
        })
    }
}

/// Renders a verdict and its trace.
pub fn render_verdict(verdict: &Verdict) -> String {
    let mut out = format!("label: {}\n", verdict.label);
    if let Some(rule) = verdict.finalized_by() {
        let _ = writeln!(out, "decided by: {rule}");
    }
    out.push_str("trace:\n");
    for e in &verdict.trace {
        let _ = writeln!(
            out,
            "  {:<24} {:<22} p={:.4} {:<10} {}  {:?}",
            e.origin.to_string(),
            e.tag,
            e.decision.probability,
            if e.decision.entails() { "entail" } else { "not_entail" },
            e.rule.map_or("-", |r| r.as_str()),
            e.hypothesis,
        );
    }
    for r in &verdict.rules {
        let _ = writeln!(out, "rule {}: fired={} effect={:?}", r.rule, r.fired, r.effect);
    }
    out
}

fn pipeline_of(doc: &PolicyDocument) -> Result<hypostrat_core::Pipeline> {
    doc.pipeline().map_err(|e| usage(e.to_string()))
}

pub fn cmd_classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<Verdict> {
    let doc = load_policy(&args.policy)?;
    let pipeline = pipeline_of(&doc)?;
    let text = InputText::new(args.text.clone()).map_err(|e| usage(e.to_string()))?;
    let backend = resolve_backend(&args.backend, &doc.model_id)?;
    let verdict = pipeline.classify(&text, backend.scorer.as_ref())?;
    out.write_all(render_verdict(&verdict).as_bytes())?;
    Ok(verdict)
}

fn default_report_path(policy: &Path, dataset: &DatasetSpec) -> PathBuf {
    let stem = policy.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    PathBuf::from("reports").join(format!("{stem}.{}.json", dataset.name()))
}

fn maybe_prefetch(backend: &ResolvedBackend, examples: &[LabeledExample], pipeline: &hypostrat_core::Pipeline) -> Result<()> {
    if let (Some(batch), Some(_)) = (backend.batch_size, &backend.cache_path) {
        let n = evaluation::prefetch(examples, pipeline, backend.scorer.as_ref(), batch)?;
        log::info!("prefetched {n} candidate pairs");
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<evaluation::EvalReport> {
    let dataset: DatasetSpec = args.dataset.parse()?;
    let doc = load_policy(&args.policy)?;
    let pipeline = pipeline_of(&doc)?;
    let baseline_doc = args.baseline_policy.as_deref().map(load_policy).transpose()?;
    let baseline_pipeline = baseline_doc.as_ref().map(pipeline_of).transpose()?;
    let examples = dataset.load()?;
    let backend = resolve_backend(&args.backend, &doc.model_id)?;

    maybe_prefetch(&backend, &examples, &pipeline)?;
    let run = evaluation::run_pipeline(&examples, &pipeline, backend.scorer.as_ref(), dataset.name(), &doc.policy_hash())?;
    let baseline_run = match (&baseline_doc, &baseline_pipeline) {
        (Some(d), Some(p)) => {
            maybe_prefetch(&backend, &examples, p)?;
            Some(evaluation::run_pipeline(&examples, p, backend.scorer.as_ref(), dataset.name(), &d.policy_hash())?)
        }
        _ => None,
    };
    let report = evaluation::per_functionality_report(&run, baseline_run.as_ref())?;

    let report_path = args.report.clone().unwrap_or_else(|| default_report_path(&args.policy, &dataset));
    let manifest = ManifestBase {
        command: "evaluate",
        policy: Some((&args.policy, &doc)),
        baseline: args.baseline_policy.as_deref().zip(baseline_doc.as_ref()),
        dataset: &dataset,
        backend: &backend,
        report: &report_path,
    }
    .build()?;
    write_report(&report_path, &evaluation::report_json(&report), &manifest)?;

    out.write_all(evaluation::render_report_table(&report).as_bytes())?;
    writeln!(out, "report: {}", report_path.display())?;
    Ok(report)
}

/// Reads one hypothesis per line; blank lines and `#` comments are skipped.
pub fn read_hypotheses(path: &Path, tag_prefix: &str) -> Result<Vec<Hypothesis>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let hyps = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            Hypothesis::supporting(l, format!("{tag_prefix}{}", i + 1))
                .map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    if hyps.is_empty() {
        return Err(usage(format!("{} contains no hypotheses", path.display())));
    }
    Ok(hyps)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<evaluation::Sweep> {
    let dataset: DatasetSpec = args.dataset.parse()?;
    let doc = args.policy.as_deref().map(load_policy).transpose()?;
    let hypotheses = match &args.hypotheses {
        Some(path) => read_hypotheses(path, "sweep:")?,
        None => {
            let grammar = doc.as_ref().and_then(|d| d.grammar.clone()).unwrap_or_else(GrammarSpec::default);
            hypotheses::generate_main_hypotheses(&grammar).map_err(|e| usage(e.to_string()))?
        }
    };
    let threshold = doc.as_ref().map_or(0.5, |d| d.threshold_default);
    let model_id = doc.as_ref().map_or(DEFAULT_MODEL_ID, |d| d.model_id.as_str()).to_owned();
    let examples = dataset.load()?;
    let backend = resolve_backend(&args.backend, &model_id)?;
    let sweep = evaluation::compare_hypotheses(&examples, &hypotheses, backend.scorer.as_ref(), threshold)?;

    if let Some(report_path) = &args.report {
        let manifest = ManifestBase {
            command: "sweep-hypotheses",
            policy: args.policy.as_deref().zip(doc.as_ref()),
            baseline: None,
            dataset: &dataset,
            backend: &backend,
            report: report_path,
        }
        .build()?;
        let mut json = serde_json::to_string_pretty(&sweep)?;
        json.push('\n');
        write_report(report_path, &json, &manifest)?;
    }
    out.write_all(evaluation::render_sweep_table(&sweep).as_bytes())?;
    Ok(sweep)
}

pub fn cmd_eval_supporting(args: &SupportingArgs, out: &mut dyn Write) -> Result<Vec<evaluation::SupportingRow>> {
    let dataset: DatasetSpec = args.dataset.parse()?;
    if dataset.kind != DatasetKind::Hatecheck {
        return Err(usage("supporting tasks are derived from HateCheck annotations; use --dataset hatecheck:PATH"));
    }
    let hyps = read_hypotheses(&args.hypotheses, "support:")?;
    let doc = args.policy.as_deref().map(load_policy).transpose()?;
    let threshold = doc.as_ref().map_or(0.5, |d| d.threshold_default);
    let quote_pairs = doc
        .as_ref()
        .map_or_else(|| hypostrat_core::segmentation::DEFAULT_QUOTE_PAIRS.to_vec(), |d| d.quote_chars.clone());
    let model_id = doc.as_ref().map_or(DEFAULT_MODEL_ID, |d| d.model_id.as_str()).to_owned();
    let examples = dataset.load()?;
    let task = datasets::infer_supporting_labels(&examples, &args.task).map_err(|e| usage(e.to_string()))?;
    let backend = resolve_backend(&args.backend, &model_id)?;
    let polarity = match args.stance_polarity {
        PolarityArg::Supports => StancePolarity::Supports,
        PolarityArg::Denounces => StancePolarity::Denounces,
    };
    let rows = evaluation::eval_supporting(
        &examples,
        &task,
        &hyps,
        backend.scorer.as_ref(),
        threshold,
        &quote_pairs,
        polarity,
    )?;
    if let Some(report_path) = &args.report {
        let manifest = ManifestBase {
            command: "eval-supporting",
            policy: args.policy.as_deref().zip(doc.as_ref()),
            baseline: None,
            dataset: &dataset,
            backend: &backend,
            report: report_path,
        }
        .build()?;
        let mut json = serde_json::to_string_pretty(&rows)?;
        json.push('\n');
        write_report(report_path, &json, &manifest)?;
    }
    writeln!(out, "task: {} ({} examples)", task.name, task.scope_ids.len())?;
    out.write_all(evaluation::render_supporting_table(&rows).as_bytes())?;
    Ok(rows)
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let mut failed = 0;
    for path in &args.policies {
        let doc = load_policy(path)?;
        let diagnostics = policy::validate_policy(&doc);
        if diagnostics.is_empty() {
            writeln!(out, "{}: ok ({})", path.display(), doc.policy_hash())?;
        } else {
            failed += 1;
            for d in diagnostics {
                writeln!(out, "{}: {d}", path.display())?;
            }
        }
    }
    if failed > 0 {
        bail!(usage(format!("{failed} policy file(s) failed validation")));
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(a, out).map(drop),
        Command::Evaluate(a) => cmd_evaluate(a, out).map(drop),
        Command::SweepHypotheses(a) => cmd_sweep(a, out).map(drop),
        Command::EvalSupporting(a) => cmd_eval_supporting(a, out).map(drop),
        Command::ValidatePolicy(a) => cmd_validate(a, out),
    }
}

/// Parses `argv` and runs it, returning the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_specs() {
        assert_eq!("http:http://h:1".parse::<BackendSpec>().unwrap(), BackendSpec::Http("http://h:1".into()));
        assert_eq!("http://h:1".parse::<BackendSpec>().unwrap(), BackendSpec::Http("http://h:1".into()));
        assert_eq!("fixture:a.jsonl".parse::<BackendSpec>().unwrap(), BackendSpec::Fixture("a.jsonl".into()));
        assert_eq!("mock:t.json".parse::<BackendSpec>().unwrap(), BackendSpec::Mock("t.json".into()));
        assert!("mock:".parse::<BackendSpec>().is_err());
        assert!("t.json".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn dataset_specs() {
        let d: DatasetSpec = "ethos:data/e.csv".parse().unwrap();
        assert_eq!((d.kind, d.name()), (DatasetKind::Ethos, "ethos"));
        assert!("parquet:x".parse::<DatasetSpec>().is_err());
        assert!("csv:".parse::<DatasetSpec>().is_err());
    }

    #[test]
    fn exit_codes() {
        use hypostrat_core::Error;
        assert_eq!(exit_code(&usage("x")), 1);
        assert_eq!(exit_code(&anyhow::Error::new(Error::UnknownTask("t".into()))), 1);
        let backend = Error::Backend(BackendError::Protocol("bad".into()));
        assert_eq!(exit_code(&anyhow::Error::new(backend).context("scoring")), 2);
        assert_eq!(exit_code(&anyhow::Error::new(Error::Metric("m".into()))), 3);
    }

    #[test]
    fn manifest_sits_next_to_report() {
        assert_eq!(manifest_path(Path::new("reports/a.hatecheck.json")), PathBuf::from("reports/a.hatecheck.manifest.json"));
    }
}

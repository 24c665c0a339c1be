//! Acceptance checks for the offline component. Runs as a plain binary so
//! every criterion prints its PASS/FAIL line whatever the outcome.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hypostrat_core::backend::{HypothesisMatch, MockRuleTable, PremiseMatch};
use hypostrat_core::datasets;
use hypostrat_core::hypotheses::{self, Flavor, GrammarSpec};
use hypostrat_core::policy::{self, DiagnosticKind};
use hypostrat_core::segmentation::DEFAULT_QUOTE_PAIRS;
use hypostrat_core::strategies::{Pipeline, StrategyConfig, StrategyName};
use hypostrat_core::{entailment_probability, split_quotes, Hypothesis, InputText, Label, ScoreTriple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wall-clock budget for the exhaustive truth table.
const TRUTH_TABLE_BUDGET: Duration = Duration::from_secs(10);
const RANDOM_INPUTS: usize = 10_000;
const RENORM_TRIPLES: usize = 1_000;
const RENORM_TOLERANCE: f64 = 1e-9;
const HATECHECK_EXAMPLES: usize = 3_728;
const HATECHECK_FUNCTIONALITIES: usize = 29;
const HATECHECK_HATE_SHARE: f64 = 68.8;
const HATE_SHARE_TOLERANCE: f64 = 0.05;
const ETHOS_EXAMPLES: usize = 997;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn workspace() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn triple(entails: bool) -> ScoreTriple {
    if entails {
        ScoreTriple::new(0.7, 0.2, 0.1).unwrap()
    } else {
        ScoreTriple::new(0.1, 0.2, 0.7).unwrap()
    }
}

// ---- 1: truth table -------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum At {
    Whole,
    Inner,
    Outer,
}

const WHOLE_PLAIN: &str = "they are such a burden on us";
const WHOLE_QUOTED: &str = "he said \"they are such a burden\" today";
const INNER: &str = "they are such a burden";
const OUTER: &str = "he said [X] today";

#[derive(Clone, Copy, Default)]
struct Flags {
    fcs: bool,
    fcs_p1: bool,
    fcs_p1_fbt: bool,
    fbt: bool,
    frs: bool,
    cdc: bool,
}

impl Flags {
    fn any_fcs(&self) -> bool {
        self.fcs || self.fcs_p1 || self.fcs_p1_fbt
    }
}

fn targets() -> Vec<&'static str> {
    hypotheses::FBT_GROUPS.iter().map(|(t, _)| *t).collect()
}

fn animals() -> Vec<&'static str> {
    hypotheses::CDC_ANIMALS.iter().map(|(t, _)| *t).collect()
}

/// Every (premise, tag) the rules of `flags` could read for this input.
fn variables(flags: Flags, quoted: bool) -> Vec<(At, String)> {
    let mut vars = Vec::new();
    if quoted && flags.any_fcs() {
        vars.push((At::Inner, "main".to_owned()));
        vars.push((At::Outer, hypotheses::STANCE_TAG.to_owned()));
        if flags.fcs_p1 || flags.fcs_p1_fbt {
            vars.push((At::Outer, "main".to_owned()));
        }
        if flags.fcs_p1_fbt {
            vars.extend(targets().into_iter().map(|t| (At::Outer, t.to_owned())));
        }
        return vars;
    }
    vars.push((At::Whole, "main".to_owned()));
    if flags.fbt || flags.cdc {
        vars.extend(targets().into_iter().map(|t| (At::Whole, t.to_owned())));
    }
    if flags.frs {
        vars.push((At::Whole, hypotheses::SELF_TAG.to_owned()));
    }
    if flags.cdc {
        vars.push((At::Whole, hypotheses::SENTIMENT_TAG.to_owned()));
        vars.extend(animals().into_iter().map(|t| (At::Whole, t.to_owned())));
    }
    vars
}

/// Direct reading of the rule definitions.
fn oracle(flags: Flags, quoted: bool, v: &dyn Fn(At, &str) -> bool) -> bool {
    if quoted && flags.any_fcs() {
        let quote_hateful = v(At::Inner, "main");
        let supported = v(At::Outer, hypotheses::STANCE_TAG);
        let core = quote_hateful && supported;
        return if flags.fcs {
            core
        } else if flags.fcs_p1 {
            core || v(At::Outer, "main")
        } else {
            core || (v(At::Outer, "main") && targets().iter().any(|t| v(At::Outer, t)))
        };
    }
    let base = v(At::Whole, "main");
    let target = targets().iter().any(|t| v(At::Whole, t));
    let mut hate = base;
    if flags.fbt && hate && !target {
        hate = false;
    }
    if flags.frs && hate && v(At::Whole, hypotheses::SELF_TAG) {
        hate = false;
    }
    if flags.cdc && !base && target && v(At::Whole, hypotheses::SENTIMENT_TAG) && animals().iter().any(|a| v(At::Whole, a)) {
        hate = true;
    }
    hate
}

fn premise_text(at: At, quoted: bool) -> &'static str {
    match at {
        At::Whole if quoted => WHOLE_QUOTED,
        At::Whole => WHOLE_PLAIN,
        At::Inner => INNER,
        At::Outer => OUTER,
    }
}

fn criterion_truth_table() -> Outcome {
    let policies: [(&str, Flags); 8] = [
        ("hatecheck-baseline", Flags::default()),
        ("hatecheck-fbt", Flags { fbt: true, ..Flags::default() }),
        ("hatecheck-fcs", Flags { fcs: true, ..Flags::default() }),
        ("hatecheck-fcs-p1", Flags { fcs_p1: true, ..Flags::default() }),
        ("hatecheck-fcs-p1-fbt", Flags { fcs_p1_fbt: true, ..Flags::default() }),
        ("hatecheck-frs", Flags { frs: true, ..Flags::default() }),
        ("hatecheck-cdc", Flags { cdc: true, ..Flags::default() }),
        (
            "hatecheck-all",
            Flags {
                fcs: true,
                fbt: true,
                frs: true,
                cdc: true,
                ..Flags::default()
            },
        ),
    ];
    let start = Instant::now();
    let mut cases = 0usize;
    for (name, flags) in policies {
        let path = workspace().join("policies").join(format!("{name}.toml"));
        let doc = policy::load_policy(&path).map_err(|e| format!("{name}: {e}"))?;
        let expected: BTreeSet<StrategyName> = [
            (flags.fcs, StrategyName::Fcs),
            (flags.fcs_p1, StrategyName::FcsP1),
            (flags.fcs_p1_fbt, StrategyName::FcsP1Fbt),
            (flags.fbt, StrategyName::Fbt),
            (flags.frs, StrategyName::Frs),
            (flags.cdc, StrategyName::Cdc),
        ]
        .into_iter()
        .filter_map(|(on, s)| on.then_some(s))
        .collect();
        let enabled: BTreeSet<StrategyName> = doc.strategies.enabled().iter().copied().collect();
        ensure(enabled == expected, || format!("{name}: unexpected strategy set {enabled:?}"))?;
        let pipeline = doc.pipeline().map_err(|e| format!("{name}: {e}"))?;

        for quoted in [false, true] {
            let vars = variables(flags, quoted);
            ensure(vars.len() <= 15, || format!("{name}: {} variables", vars.len()))?;
            let text = InputText::new(premise_text(At::Whole, quoted)).unwrap();
            for mask in 0u32..(1 << vars.len()) {
                let bit = |at: At, tag: &str| {
                    vars.iter()
                        .position(|(a, t)| *a == at && t == tag)
                        .is_some_and(|i| mask & (1 << i) != 0)
                };
                // Unlisted pairs answer "entail" so a stray consultation shows up.
                let mut mock = MockRuleTable::constant(triple(true));
                for (i, (at, tag)) in vars.iter().enumerate() {
                    mock.push(
                        PremiseMatch::Exact(premise_text(*at, quoted).to_owned()),
                        HypothesisMatch::Tag(tag.clone()),
                        triple(mask & (1 << i) != 0),
                    );
                }
                let verdict = pipeline.classify(&text, &mock).map_err(|e| format!("{name}: {e}"))?;
                let want = if oracle(flags, quoted, &bit) { Label::Hate } else { Label::NotHate };
                ensure(verdict.label == want, || {
                    format!("{name} quoted={quoted} mask={mask:#b}: got {}, oracle {}", verdict.label, want)
                })?;
                let listed = verdict.trace.iter().all(|e| {
                    let at = match e.origin {
                        hypostrat_core::PremiseOrigin::WholeText => At::Whole,
                        hypostrat_core::PremiseOrigin::QuotedInner => At::Inner,
                        hypostrat_core::PremiseOrigin::OuterWithPlaceholder => At::Outer,
                    };
                    vars.iter().any(|(a, t)| *a == at && *t == e.tag)
                });
                ensure(listed, || format!("{name} quoted={quoted} mask={mask:#b}: consulted an unexpected pair"))?;
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < TRUTH_TABLE_BUDGET, || format!("{cases} cases took {elapsed:.2?}"))?;
    Ok(format!("{cases} assignments over 8 policies, {elapsed:.2?}"))
}

// ---- 2: monotonicity ------------------------------------------------------

fn random_triple(rng: &mut ChaCha8Rng) -> ScoreTriple {
    let raw: [f64; 3] = [rng.random::<f64>() + 1e-3, rng.random::<f64>() + 1e-3, rng.random::<f64>() + 1e-3];
    let sum: f64 = raw.iter().sum();
    ScoreTriple::new(raw[0] / sum, raw[1] / sum, raw[2] / sum).unwrap()
}

fn pipeline_of(enabled: &[StrategyName]) -> Pipeline {
    let main = Hypothesis::main(hypotheses::MAIN_HYPOTHESIS).unwrap();
    Pipeline::with_strategies(main, StrategyConfig::new(enabled.iter().copied(), Some(Flavor::Groups)))
}

fn criterion_monotonicity() -> Outcome {
    let texts = ["you people are disgusting", "I love my neighbours", "they are like rats", "we are a plague"];
    let mut tags = vec!["main", hypotheses::STANCE_TAG, hypotheses::SELF_TAG, hypotheses::SENTIMENT_TAG];
    tags.extend(targets());
    tags.extend(animals());
    let optional = [StrategyName::Fbt, StrategyName::Frs, StrategyName::Cdc];
    let fcs = [StrategyName::Fcs, StrategyName::FcsP1, StrategyName::FcsP1Fbt];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut violations = Vec::new();
    for i in 0..RANDOM_INPUTS {
        let raw = texts[rng.random_range(0..texts.len())];
        let text = InputText::new(raw).unwrap();
        let mut mock = MockRuleTable::constant(random_triple(&mut rng));
        for tag in &tags {
            mock.push(PremiseMatch::Exact(raw.to_owned()), HypothesisMatch::Tag((*tag).to_owned()), random_triple(&mut rng));
        }
        let base: Vec<StrategyName> = optional.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let before = pipeline_of(&base).classify(&text, &mock).unwrap().label;
        for s in optional.iter().filter(|s| !base.contains(s)) {
            let mut with = base.clone();
            with.push(*s);
            let after = pipeline_of(&with).classify(&text, &mock).unwrap().label;
            let ok = match s {
                StrategyName::Cdc => after >= before,
                _ => after <= before,
            };
            if !ok {
                violations.push(format!("input {i}: adding {s} moved {before} to {after}"));
            }
        }
        let mut with_fcs = base.clone();
        with_fcs.push(fcs[rng.random_range(0..fcs.len())]);
        let a = pipeline_of(&base).classify(&text, &mock).unwrap();
        let b = pipeline_of(&with_fcs).classify(&text, &mock).unwrap();
        if a != b {
            violations.push(format!("input {i}: FCS changed a quote-free verdict"));
        }
    }
    match violations.first() {
        None => Ok(format!("{RANDOM_INPUTS} inputs, 0 violations")),
        Some(v) => Err(format!("{} violations, first: {v}", violations.len())),
    }
}

// ---- 3: grammar -----------------------------------------------------------

fn criterion_grammar() -> Outcome {
    let path = workspace().join("crates/core/tests/golden/main_hypotheses.txt");
    let golden = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let golden: BTreeSet<&str> = golden.lines().filter(|l| !l.is_empty()).collect();
    let generated = hypotheses::generate_main_hypotheses(&GrammarSpec::default()).map_err(|e| e.to_string())?;
    let texts: Vec<&str> = generated.iter().map(Hypothesis::text).collect();
    let set: BTreeSet<&str> = texts.iter().copied().collect();
    ensure(texts.len() == 40, || format!("{} hypotheses generated", texts.len()))?;
    ensure(set.len() == texts.len(), || "duplicates generated".into())?;
    ensure(set == golden, || {
        let extra: Vec<_> = set.difference(&golden).collect();
        let missing: Vec<_> = golden.difference(&set).collect();
        format!("extra {extra:?}, missing {missing:?}")
    })?;
    Ok("40 hypotheses match the golden file".into())
}

// ---- 4: quote splitting ---------------------------------------------------

fn criterion_quotes() -> Outcome {
    let corpus: [(&str, Option<(&str, &str)>); 20] = [
        ("no quotes at all", None),
        ("she said \"women are trash\" and left", Some(("women are trash", "she said [X] and left"))),
        ("\u{201C}they are vermin\u{201D} is vile", Some(("they are vermin", "[X] is vile"))),
        ("he wrote \u{201C}go home\u{201D}.", Some(("go home", "he wrote [X]."))),
        ("an \"unbalanced quote", None),
        ("curly \u{201C}unbalanced", None),
        ("stray close\u{201D} only", None),
        ("empty \"\" quotes", None),
        ("blank \"   \" quotes", None),
        ("blank \"  \" then \"real one\"", Some(("real one", "blank \"  \" then [X]"))),
        ("\"a\" and \"b\"", Some(("a", "[X] and \"b\""))),
        ("\u{201C}x\u{201D} then \"y\"", Some(("x", "[X] then \"y\""))),
        ("\"y\" then \u{201C}x\u{201D}", Some(("y", "[X] then \u{201C}x\u{201D}"))),
        ("it's John's car", None),
        ("don't say 'freaks' ever", None),
        ("mixed \u{201C}open but ascii close\"", None),
        ("\"whole text quoted\"", Some(("whole text quoted", "[X]"))),
        ("I can't believe they said \"all women are evil\" \u{2014} disgusting.", Some(("all women are evil", "I can't believe they said [X] \u{2014} disgusting."))),
        ("three \"a\" \"b\" \"c\"", Some(("a", "three [X] \"b\" \"c\""))),
        ("emoji \"\u{1F621} awful people\" ok", Some(("\u{1F621} awful people", "emoji [X] ok"))),
    ];
    for (raw, expected) in corpus {
        let text = InputText::new(raw).unwrap();
        let got = split_quotes(&text, &DEFAULT_QUOTE_PAIRS);
        let got_pair = got.as_ref().map(|s| (s.inner.text(), s.outer.text()));
        ensure(got_pair == expected, || format!("{raw:?}: got {got_pair:?}, want {expected:?}"))?;
        if let Some(s) = got {
            ensure(s.reconstruct() == raw, || format!("{raw:?}: reconstructs to {:?}", s.reconstruct()))?;
        }
    }
    Ok("20 cases split and reconstruct exactly".into())
}

// ---- 5: loaders -----------------------------------------------------------

fn data_path(var: &str, default: &str) -> PathBuf {
    std::env::var_os(var).map_or_else(|| workspace().join(default), PathBuf::from)
}

fn criterion_loaders() -> Outcome {
    let hc = data_path("HATECHECK_CSV", "data/hatecheck/test_suite_cases.csv");
    let ethos = data_path("ETHOS_CSV", "data/ethos/Ethos_Dataset_Binary.csv");
    let mut missing = Vec::new();
    for p in [&hc, &ethos] {
        if !p.exists() {
            missing.push(p.display().to_string());
        }
    }
    ensure(missing.is_empty(), || format!("dataset files not found: {}", missing.join(", ")))?;

    let rows = datasets::load_hatecheck(&hc).map_err(|e| e.to_string())?;
    ensure(rows.len() == HATECHECK_EXAMPLES, || format!("HateCheck: {} examples", rows.len()))?;
    let sizes = datasets::functionality_sizes(&rows);
    ensure(sizes.len() == HATECHECK_FUNCTIONALITIES, || format!("HateCheck: {} functionalities", sizes.len()))?;
    let hate = rows.iter().filter(|r| r.gold == Label::Hate).count();
    let share = 100.0 * hate as f64 / rows.len() as f64;
    ensure((share - HATECHECK_HATE_SHARE).abs() <= HATE_SHARE_TOLERANCE, || format!("HateCheck: {share:.3}% hateful"))?;

    let e = datasets::load_ethos_binary(&ethos).map_err(|e| e.to_string())?;
    ensure(e.len() == ETHOS_EXAMPLES, || format!("ETHOS: {} examples", e.len()))?;
    Ok(format!("HateCheck {} rows / {} functionalities / {share:.2}% hate; ETHOS {} rows", rows.len(), sizes.len(), e.len()))
}

// ---- 6: renormalisation ---------------------------------------------------

fn criterion_renormalisation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..RENORM_TRIPLES {
        let logits: [f64; 3] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
        let max = logits.iter().copied().fold(f64::MIN, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        let t = ScoreTriple::new(exp[0] / z, exp[1] / z, exp[2] / z).map_err(|e| e.to_string())?;
        let got = entailment_probability(&t).map_err(|e| e.to_string())?;
        // Two-way softmax over the entailment and contradiction logits.
        let want = 1.0 / (1.0 + (logits[2] - logits[0]).exp());
        worst = worst.max((got - want).abs());
    }
    ensure(worst <= RENORM_TOLERANCE, || format!("max error {worst:e}"))?;
    Ok(format!("{RENORM_TRIPLES} triples, max error {worst:.1e}"))
}

// ---- 7: policy round-trip -------------------------------------------------

fn criterion_policies() -> Outcome {
    let dir = workspace().join("policies");
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    ensure(!paths.is_empty(), || "no shipped policies".into())?;
    for p in &paths {
        let doc = policy::load_policy(p).map_err(|e| format!("{}: {e}", p.display()))?;
        let canon = doc.to_canonical_string();
        let again = policy::parse_policy(&canon).map_err(|e| format!("{}: reparse: {e}", p.display()))?;
        ensure(again == doc, || format!("{}: reparsed document differs", p.display()))?;
        ensure(again.to_canonical_string() == canon, || format!("{}: canonical form not a fixed point", p.display()))?;
        let diags = policy::validate_policy(&doc);
        ensure(diags.is_empty(), || format!("{}: {:?}", p.display(), diags))?;
    }

    const HEAD: &str = "main_hypothesis = \"That contains hate speech.\"\n";
    let kinds = |src: &str| -> Result<Vec<DiagnosticKind>, String> {
        let doc = policy::parse_policy(&format!("{HEAD}{src}")).map_err(|e| e.to_string())?;
        Ok(policy::validate_policy(&doc).into_iter().map(|d| d.kind).collect())
    };
    let conflicting = kinds("[strategies]\nenabled = [\"fcs\", \"fcs_p1\"]\n")?;
    ensure(conflicting.contains(&DiagnosticKind::ConflictingFcsVariants), || format!("fcs+fcs_p1 gave {conflicting:?}"))?;
    let no_x = kinds("[strategies]\nenabled = [\"fcs\"]\n[supporting.fcs_stance]\ntag = \"fcs:stance\"\ntext = \"This text supports it.\"\n")?;
    ensure(no_x.contains(&DiagnosticKind::PlaceholderMissing), || format!("stance without [X] gave {no_x:?}"))?;
    let no_flavor = kinds("[strategies]\nenabled = [\"cdc\"]\n")?;
    ensure(no_flavor.contains(&DiagnosticKind::FlavorMissing), || format!("cdc without flavor gave {no_flavor:?}"))?;
    let unknown = policy::parse_policy(&format!("{HEAD}thresold = 0.5\n"));
    ensure(matches!(unknown, Err(policy::PolicyError::UnknownKey { .. })), || format!("typo gave {unknown:?}"))?;
    let range = policy::parse_policy(&format!("{HEAD}threshold = 1.5\n"));
    ensure(matches!(range, Err(policy::PolicyError::OutOfRange { .. })), || format!("threshold 1.5 gave {range:?}"))?;
    Ok(format!("{} policies round-trip; diagnostics fire", paths.len()))
}

// ---- 8: offline reproduction ----------------------------------------------

fn criterion_replay() -> Outcome {
    let root = workspace();
    let fixture = root.join("fixtures/hatecheck-scores.jsonl");
    let hc = data_path("HATECHECK_CSV", "data/hatecheck/test_suite_cases.csv");
    let committed = [
        ("hatecheck-baseline", root.join("reports/hatecheck-baseline.hatecheck.json")),
        ("hatecheck-all", root.join("reports/hatecheck-all.hatecheck.json")),
    ];
    let mut missing: Vec<String> = [&fixture, &hc]
        .into_iter()
        .chain(committed.iter().map(|(_, p)| p))
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    missing.dedup();
    ensure(missing.is_empty(), || format!("required artifacts not found: {}", missing.join(", ")))?;

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (name, report) in &committed {
        let out_path = tmp.path().join(format!("{name}.json"));
        let args = [
            "hypostrat".to_owned(),
            "evaluate".into(),
            "--policy".into(),
            root.join(format!("policies/{name}.toml")).display().to_string(),
            "--dataset".into(),
            format!("hatecheck:{}", hc.display()),
            "--backend".into(),
            format!("fixture:{}", fixture.display()),
            "--report".into(),
            out_path.display().to_string(),
        ];
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = hypostrat_cli::run(args, &mut out, &mut err);
        ensure(code == 0, || format!("{name}: exit {code}: {}", String::from_utf8_lossy(&err)))?;
        let got = fs::read(&out_path).map_err(|e| e.to_string())?;
        let want = fs::read(report).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("{name}: report differs from {}", report.display()))?;
    }
    Ok("baseline and All reports reproduced byte-identically".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("strategy truth table", criterion_truth_table),
        ("monotonicity over random scores", criterion_monotonicity),
        ("hypothesis grammar golden set", criterion_grammar),
        ("quote splitter corpus", criterion_quotes),
        ("dataset loaders", criterion_loaders),
        ("renormalisation identity", criterion_renormalisation),
        ("policy round-trip and diagnostics", criterion_policies),
        ("offline fixture reproduction", criterion_replay),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

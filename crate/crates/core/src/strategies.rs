//! The base classifier and the rules that refine its verdict.
//!
//! Pipeline order in [`Pipeline::classify`]:
//!
//! 1. the enabled counterspeech variant (`fcs`, `fcs_p1` or `fcs_p1_fbt`);
//!    when the text contains a quote its verdict is final;
//! 2. the base verdict from the main hypothesis;
//! 3. `fbt`, a filter: hate becomes not-hate when no target is detected;
//! 4. `frs`, a filter: hate becomes not-hate when the text is self-directed;
//! 5. `cdc`, a promotion, consulted only when the base verdict was not-hate.
//!
//! Filters never turn not-hate into hate and the promotion never turns hate
//! into not-hate. OR-groups short-circuit; the trace holds exactly the pairs
//! that were scored, in consultation order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::Scorer;
use crate::error::Error;
use crate::hypotheses::{self, Flavor};
use crate::segmentation::{split_quotes, QuotePair, QuoteSplit, DEFAULT_QUOTE_PAIRS};
use crate::types::{
    decide, entailment_probability, BinaryDecision, Effect, Hypothesis, InputText, Label, Premise, PremiseOrigin,
    RuleName, RuleOutcome, TraceEntry, Verdict,
};

/// A strategy that can be enabled in a policy. Declaration order is the
/// canonical pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Fcs,
    FcsP1,
    FcsP1Fbt,
    Fbt,
    Frs,
    Cdc,
}

impl StrategyName {
    pub const ALL: [StrategyName; 6] = [
        StrategyName::Fcs,
        StrategyName::FcsP1,
        StrategyName::FcsP1Fbt,
        StrategyName::Fbt,
        StrategyName::Frs,
        StrategyName::Cdc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Fcs => "fcs",
            StrategyName::FcsP1 => "fcs_p1",
            StrategyName::FcsP1Fbt => "fcs_p1_fbt",
            StrategyName::Fbt => "fbt",
            StrategyName::Frs => "frs",
            StrategyName::Cdc => "cdc",
        }
    }

    pub fn is_fcs_variant(self) -> bool {
        matches!(self, StrategyName::Fcs | StrategyName::FcsP1 | StrategyName::FcsP1Fbt)
    }

    fn rule(self) -> RuleName {
        match self {
            StrategyName::Fcs => RuleName::Fcs,
            StrategyName::FcsP1 => RuleName::FcsP1,
            StrategyName::FcsP1Fbt => RuleName::FcsP1Fbt,
            StrategyName::Fbt => RuleName::Fbt,
            StrategyName::Frs => RuleName::Frs,
            StrategyName::Cdc => RuleName::Cdc,
        }
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_owned()))
    }
}

/// Which strategies run, kept in canonical order without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StrategyConfig {
    enabled: Vec<StrategyName>,
    pub fbt_flavor: Option<Flavor>,
}

impl StrategyConfig {
    pub fn new(enabled: impl IntoIterator<Item = StrategyName>, fbt_flavor: Option<Flavor>) -> Self {
        let mut enabled: Vec<StrategyName> = enabled.into_iter().collect();
        enabled.sort();
        enabled.dedup();
        Self { enabled, fbt_flavor }
    }

    pub fn enabled(&self) -> &[StrategyName] {
        &self.enabled
    }

    pub fn has(&self, name: StrategyName) -> bool {
        self.enabled.contains(&name)
    }

    /// The first enabled counterspeech variant.
    pub fn fcs_variant(&self) -> Option<StrategyName> {
        self.enabled.iter().copied().find(|s| s.is_fcs_variant())
    }

    pub fn fcs_variant_count(&self) -> usize {
        self.enabled.iter().filter(|s| s.is_fcs_variant()).count()
    }

    /// Whether any enabled rule consults the target hypotheses.
    pub fn needs_targets(&self) -> bool {
        self.has(StrategyName::Fbt) || self.has(StrategyName::FcsP1Fbt) || self.has(StrategyName::Cdc)
    }
}

/// Per-tag entailment thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub default: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            default: 0.5,
            overrides: BTreeMap::new(),
        }
    }
}

impl Thresholds {
    pub fn get(&self, tag: &str) -> f64 {
        self.overrides.get(tag).copied().unwrap_or(self.default)
    }
}

/// The concrete hypotheses a pipeline may consult.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSet {
    pub main: Hypothesis,
    pub stance: Hypothesis,
    pub targets: Vec<Hypothesis>,
    pub self_directed: Hypothesis,
    pub animals: Vec<Hypothesis>,
    pub sentiment: Hypothesis,
}

impl HypothesisSet {
    /// The built-in supporting hypotheses around a given main hypothesis.
    pub fn standard(main: Hypothesis, flavor: Flavor) -> Self {
        Self {
            main,
            stance: hypotheses::render_stance_hypothesis(hypotheses::STANCE_HYPOTHESIS).expect("built-in stance"),
            targets: hypotheses::fbt_hypotheses(flavor),
            self_directed: hypotheses::self_directed_hypothesis(),
            animals: hypotheses::cdc_animal_hypotheses(),
            sentiment: hypotheses::sentiment_hypothesis(),
        }
    }
}

/// Per-classification bookkeeping: consults the scorer, memoises decisions
/// and records the trace.
pub struct Session<'a> {
    scorer: &'a dyn Scorer,
    thresholds: &'a Thresholds,
    trace: Vec<TraceEntry>,
    rules: Vec<RuleOutcome>,
    memo: HashMap<(PremiseOrigin, String, String), usize>,
}

impl<'a> Session<'a> {
    pub fn new(scorer: &'a dyn Scorer, thresholds: &'a Thresholds) -> Self {
        Self {
            scorer,
            thresholds,
            trace: Vec::new(),
            rules: Vec::new(),
            memo: HashMap::new(),
        }
    }

    /// Continues from an existing verdict, reusing its consulted pairs.
    pub fn resume(scorer: &'a dyn Scorer, thresholds: &'a Thresholds, verdict: &Verdict) -> Self {
        let mut session = Self::new(scorer, thresholds);
        for (i, entry) in verdict.trace.iter().enumerate() {
            session
                .memo
                .insert((entry.origin, entry.tag.clone(), entry.hypothesis.clone()), i);
        }
        session.trace = verdict.trace.clone();
        session.rules = verdict.rules.clone();
        session
    }

    /// Scores one pair (at most once per session) and thresholds it.
    /// Returns the decision and its trace index.
    pub fn consult(&mut self, premise: &Premise, hypothesis: &Hypothesis) -> Result<(BinaryDecision, usize), Error> {
        let key = (premise.origin(), hypothesis.tag().to_owned(), hypothesis.text().to_owned());
        if let Some(&idx) = self.memo.get(&key) {
            return Ok((self.trace[idx].decision, idx));
        }
        let wrap = |source: Error| Error::Pair {
            premise: premise.text().to_owned(),
            hypothesis: hypothesis.text().to_owned(),
            source: Box::new(source),
        };
        let triple = self
            .scorer
            .score_pair(premise, hypothesis)
            .map_err(|e| wrap(e.into()))?;
        let probability = entailment_probability(&triple).map_err(wrap)?;
        let decision = decide(probability, self.thresholds.get(hypothesis.tag()));
        let idx = self.trace.len();
        self.trace.push(TraceEntry {
            origin: premise.origin(),
            tag: hypothesis.tag().to_owned(),
            hypothesis: hypothesis.text().to_owned(),
            decision,
            rule: None,
        });
        self.memo.insert(key, idx);
        Ok((decision, idx))
    }

    /// OR over `hypotheses`, stopping at the first entailment.
    fn any_entails(
        &mut self,
        premise: &Premise,
        hypotheses: &[Hypothesis],
        inputs: &mut Vec<(String, BinaryDecision)>,
        last: &mut Option<usize>,
    ) -> Result<bool, Error> {
        for h in hypotheses {
            let (d, idx) = self.consult(premise, h)?;
            inputs.push((h.tag().to_owned(), d));
            *last = Some(idx);
            if d.entails() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn mark_final(&mut self, idx: usize, rule: RuleName) {
        for e in &mut self.trace {
            e.rule = None;
        }
        self.trace[idx].rule = Some(rule);
    }

    fn finish(self, label: Label) -> Verdict {
        Verdict {
            label,
            trace: self.trace,
            rules: self.rules,
        }
    }
}

/// Label from the main hypothesis alone.
pub fn base_verdict(text: &InputText, main: &Hypothesis, scorer: &dyn Scorer, thresholds: &Thresholds) -> Result<Verdict, Error> {
    let mut session = Session::new(scorer, thresholds);
    let label = base_in(&mut session, text, main)?;
    Ok(session.finish(label))
}

fn base_in(session: &mut Session<'_>, text: &InputText, main: &Hypothesis) -> Result<Label, Error> {
    let (d, idx) = session.consult(&Premise::whole(text), main)?;
    session.mark_final(idx, RuleName::Base);
    Ok(if d.entails() { Label::Hate } else { Label::NotHate })
}

fn filter_in(
    session: &mut Session<'_>,
    rule: RuleName,
    label: Label,
    check: impl FnOnce(&mut Session<'_>, &mut Vec<(String, BinaryDecision)>, &mut Option<usize>) -> Result<bool, Error>,
) -> Result<Label, Error> {
    let mut inputs = Vec::new();
    let mut last = None;
    let mut fired = false;
    if label == Label::Hate && check(session, &mut inputs, &mut last)? {
        fired = true;
        if let Some(idx) = last {
            session.mark_final(idx, rule);
        }
    }
    session.rules.push(RuleOutcome {
        rule,
        fired,
        inputs,
        effect: if fired { Effect::ForceNotHate } else { Effect::None },
    });
    Ok(if fired { Label::NotHate } else { label })
}

fn fbt_in(session: &mut Session<'_>, text: &InputText, label: Label, targets: &[Hypothesis]) -> Result<Label, Error> {
    let premise = Premise::whole(text);
    filter_in(session, RuleName::Fbt, label, |s, inputs, last| {
        Ok(!s.any_entails(&premise, targets, inputs, last)?)
    })
}

fn frs_in(session: &mut Session<'_>, text: &InputText, label: Label, self_hyp: &Hypothesis) -> Result<Label, Error> {
    let premise = Premise::whole(text);
    filter_in(session, RuleName::Frs, label, |s, inputs, last| {
        let (d, idx) = s.consult(&premise, self_hyp)?;
        inputs.push((self_hyp.tag().to_owned(), d));
        *last = Some(idx);
        Ok(d.entails())
    })
}

fn cdc_in(
    session: &mut Session<'_>,
    text: &InputText,
    label: Label,
    targets: &[Hypothesis],
    animals: &[Hypothesis],
    sentiment: &Hypothesis,
) -> Result<Label, Error> {
    let premise = Premise::whole(text);
    let mut inputs = Vec::new();
    let mut last = None;
    let mut fired = false;
    if label == Label::NotHate && session.any_entails(&premise, targets, &mut inputs, &mut last)? {
        let (d, idx) = session.consult(&premise, sentiment)?;
        inputs.push((sentiment.tag().to_owned(), d));
        last = Some(idx);
        if d.entails() && session.any_entails(&premise, animals, &mut inputs, &mut last)? {
            fired = true;
        }
    }
    if fired {
        if let Some(idx) = last {
            session.mark_final(idx, RuleName::Cdc);
        }
    }
    session.rules.push(RuleOutcome {
        rule: RuleName::Cdc,
        fired,
        inputs,
        effect: if fired { Effect::ForceHate } else { Effect::None },
    });
    Ok(if fired { Label::Hate } else { label })
}

/// Which counterspeech variant to run and what it needs.
enum FcsMode<'h> {
    Plain,
    OuterMain,
    OuterMainWithTargets(&'h [Hypothesis]),
}

fn fcs_in(
    session: &mut Session<'_>,
    split: &QuoteSplit,
    main: &Hypothesis,
    stance: &Hypothesis,
    mode: FcsMode<'_>,
    rule: RuleName,
) -> Result<Label, Error> {
    let mut inputs = Vec::new();
    let (inner_hate, mut last) = session.consult(&split.inner, main)?;
    inputs.push((main.tag().to_owned(), inner_hate));

    let mut hate = false;
    if inner_hate.entails() {
        let (supportive, idx) = session.consult(&split.outer, stance)?;
        inputs.push((stance.tag().to_owned(), supportive));
        last = idx;
        hate = supportive.entails();
    }
    if !hate && !matches!(mode, FcsMode::Plain) {
        let (outer_hate, idx) = session.consult(&split.outer, main)?;
        inputs.push((main.tag().to_owned(), outer_hate));
        last = idx;
        hate = outer_hate.entails();
        if let (true, FcsMode::OuterMainWithTargets(targets)) = (hate, &mode) {
            let mut tail = Some(last);
            hate = session.any_entails(&split.outer, targets, &mut inputs, &mut tail)?;
            last = tail.unwrap_or(last);
        }
    }
    session.mark_final(last, rule);
    session.rules.push(RuleOutcome {
        rule,
        fired: true,
        inputs,
        effect: if hate { Effect::ForceHate } else { Effect::ForceNotHate },
    });
    Ok(if hate { Label::Hate } else { Label::NotHate })
}

fn run_fcs(
    text: &InputText,
    quote_pairs: &[QuotePair],
    scorer: &dyn Scorer,
    thresholds: &Thresholds,
    body: impl FnOnce(&mut Session<'_>, &QuoteSplit) -> Result<Label, Error>,
) -> Result<Option<Verdict>, Error> {
    let Some(split) = split_quotes(text, quote_pairs) else {
        return Ok(None);
    };
    let mut session = Session::new(scorer, thresholds);
    let label = body(&mut session, &split)?;
    Ok(Some(session.finish(label)))
}

/// Counterspeech filter: hate iff the quote is hateful and the outer text
/// supports it. `None` when the text has no quote.
pub fn apply_fcs(
    text: &InputText,
    main: &Hypothesis,
    stance: &Hypothesis,
    quote_pairs: &[QuotePair],
    scorer: &dyn Scorer,
    thresholds: &Thresholds,
) -> Result<Option<Verdict>, Error> {
    run_fcs(text, quote_pairs, scorer, thresholds, |s, split| {
        fcs_in(s, split, main, stance, FcsMode::Plain, RuleName::Fcs)
    })
}

/// As [`apply_fcs`], but hate speech in the outer text also counts.
pub fn apply_fcs_p1(
    text: &InputText,
    main: &Hypothesis,
    stance: &Hypothesis,
    quote_pairs: &[QuotePair],
    scorer: &dyn Scorer,
    thresholds: &Thresholds,
) -> Result<Option<Verdict>, Error> {
    run_fcs(text, quote_pairs, scorer, thresholds, |s, split| {
        fcs_in(s, split, main, stance, FcsMode::OuterMain, RuleName::FcsP1)
    })
}

/// As [`apply_fcs_p1`], but outer-text hate also needs a detected target.
pub fn apply_fcs_p1_fbt(
    text: &InputText,
    main: &Hypothesis,
    stance: &Hypothesis,
    targets: &[Hypothesis],
    quote_pairs: &[QuotePair],
    scorer: &dyn Scorer,
    thresholds: &Thresholds,
) -> Result<Option<Verdict>, Error> {
    run_fcs(text, quote_pairs, scorer, thresholds, |s, split| {
        fcs_in(s, split, main, stance, FcsMode::OuterMainWithTargets(targets), RuleName::FcsP1Fbt)
    })
}

/// Filtering by target.
pub fn apply_fbt(
    text: &InputText,
    verdict: &Verdict,
    targets: &[Hypothesis],
    scorer: &dyn Scorer,
    thresholds: &Thresholds,
) -> Result<Verdict, Error> {
    let mut session = Session::resume(scorer, thresholds, verdict);
    let label = fbt_in(&mut session, text, verdict.label, targets)?;
    Ok(session.finish(label))
}

/// Filtering reclaimed slurs.
pub fn apply_frs(
    text: &InputText,
    verdict: &Verdict,
    self_hyp: &Hypothesis,
    scorer: &dyn Scorer,
    thresholds: &Thresholds,
) -> Result<Verdict, Error> {
    let mut session = Session::resume(scorer, thresholds, verdict);
    let label = frs_in(&mut session, text, verdict.label, self_hyp)?;
    Ok(session.finish(label))
}

/// Catching dehumanising comparisons.
pub fn apply_cdc(
    text: &InputText,
    verdict: &Verdict,
    targets: &[Hypothesis],
    animals: &[Hypothesis],
    sentiment: &Hypothesis,
    scorer: &dyn Scorer,
    thresholds: &Thresholds,
) -> Result<Verdict, Error> {
    let mut session = Session::resume(scorer, thresholds, verdict);
    let label = cdc_in(&mut session, text, verdict.label, targets, animals, sentiment)?;
    Ok(session.finish(label))
}

/// A validated, ready-to-run strategy combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    config: StrategyConfig,
    hypotheses: HypothesisSet,
    thresholds: Thresholds,
    quote_pairs: Vec<QuotePair>,
}

impl Pipeline {
    pub fn new(
        config: StrategyConfig,
        hypotheses: HypothesisSet,
        thresholds: Thresholds,
        quote_pairs: Vec<QuotePair>,
    ) -> Result<Self, Error> {
        if config.fcs_variant_count() > 1 {
            return Err(Error::InvalidInput("conflicting FCS variants".into()));
        }
        hypotheses::render_stance_hypothesis(hypotheses.stance.text())?;
        let all = std::iter::once(thresholds.default).chain(thresholds.overrides.values().copied());
        for t in all {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidInput(format!("threshold {t} outside [0,1]")));
            }
        }
        Ok(Self {
            config,
            hypotheses,
            thresholds,
            quote_pairs,
        })
    }

    /// Main hypothesis only, default threshold.
    pub fn baseline(main: Hypothesis) -> Self {
        Self::with_strategies(main, StrategyConfig::default())
    }

    /// Built-in supporting hypotheses, default thresholds and quotes.
    pub fn with_strategies(main: Hypothesis, config: StrategyConfig) -> Self {
        let flavor = config.fbt_flavor.unwrap_or_default();
        Self::new(
            config,
            HypothesisSet::standard(main, flavor),
            Thresholds::default(),
            DEFAULT_QUOTE_PAIRS.to_vec(),
        )
        .expect("built-in pipeline is valid")
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn hypotheses(&self) -> &HypothesisSet {
        &self.hypotheses
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn quote_pairs(&self) -> &[QuotePair] {
        &self.quote_pairs
    }

    pub fn classify(&self, text: &InputText, scorer: &dyn Scorer) -> Result<Verdict, Error> {
        let h = &self.hypotheses;
        let fcs = match self.config.fcs_variant() {
            Some(StrategyName::Fcs) => apply_fcs(text, &h.main, &h.stance, &self.quote_pairs, scorer, &self.thresholds)?,
            Some(StrategyName::FcsP1) => {
                apply_fcs_p1(text, &h.main, &h.stance, &self.quote_pairs, scorer, &self.thresholds)?
            }
            Some(StrategyName::FcsP1Fbt) => apply_fcs_p1_fbt(
                text,
                &h.main,
                &h.stance,
                &h.targets,
                &self.quote_pairs,
                scorer,
                &self.thresholds,
            )?,
            _ => None,
        };
        if let Some(verdict) = fcs {
            return Ok(verdict);
        }

        let mut session = Session::new(scorer, &self.thresholds);
        let base = base_in(&mut session, text, &h.main)?;
        let mut label = base;
        if self.config.has(StrategyName::Fbt) {
            label = fbt_in(&mut session, text, label, &h.targets)?;
        }
        if self.config.has(StrategyName::Frs) {
            label = frs_in(&mut session, text, label, &h.self_directed)?;
        }
        if self.config.has(StrategyName::Cdc) && base == Label::NotHate {
            label = cdc_in(&mut session, text, label, &h.targets, &h.animals, &h.sentiment)?;
        }
        Ok(session.finish(label))
    }

    /// Every pair [`classify`](Self::classify) could consult for `text`,
    /// ignoring short-circuits. Useful for batch prefetching.
    pub fn candidate_pairs(&self, text: &InputText) -> Vec<(Premise, Hypothesis)> {
        let h = &self.hypotheses;
        let mut out = Vec::new();
        if let Some(variant) = self.config.fcs_variant() {
            if let Some(split) = split_quotes(text, &self.quote_pairs) {
                out.push((split.inner.clone(), h.main.clone()));
                out.push((split.outer.clone(), h.stance.clone()));
                if variant != StrategyName::Fcs {
                    out.push((split.outer.clone(), h.main.clone()));
                }
                if variant == StrategyName::FcsP1Fbt {
                    out.extend(h.targets.iter().map(|t| (split.outer.clone(), t.clone())));
                }
                return out;
            }
        }
        let whole = Premise::whole(text);
        out.push((whole.clone(), h.main.clone()));
        if self.config.has(StrategyName::Fbt) || self.config.has(StrategyName::Cdc) {
            out.extend(h.targets.iter().map(|t| (whole.clone(), t.clone())));
        }
        if self.config.has(StrategyName::Frs) {
            out.push((whole.clone(), h.self_directed.clone()));
        }
        if self.config.has(StrategyName::Cdc) {
            out.push((whole.clone(), h.sentiment.clone()));
            out.extend(h.animals.iter().map(|a| (whole.clone(), a.clone())));
        }
        out
    }

    /// The rule names this pipeline can record, for display.
    pub fn rule_names(&self) -> Vec<RuleName> {
        std::iter::once(RuleName::Base)
            .chain(self.config.enabled().iter().map(|s| s.rule()))
            .collect()
    }
}

//! Composite affective states as disjunctions of AU-conjunction rules, plus
//! mining of discriminative AU combinations from a labeled corpus.
//!
//! A combination rule scores as the fuzzy-AND (minimum) of its conjunct AU
//! values, gated to zero by any violated suppressor; a rule set scores as the
//! fuzzy-OR (maximum) over its rules. The binary activation follows the
//! plain reading: a state is active when any rule's conjuncts all clear
//! their thresholds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::au::{Au, AuScores, ALL_AUS};
use crate::error::{Error, Result};
use crate::evaluation::{roc_auc, LabeledCorpus, SessionAggregator};
use crate::model::CompositeScore;

/// One conjunct: the AU must reach `min` for the rule to activate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conjunct {
    pub au: Au,
    pub min: f64,
}

/// One suppressor: the AU must stay at or below `max` or the rule is gated off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suppressor {
    pub au: Au,
    pub max: f64,
}

/// A conjunction of AU thresholds with optional suppressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationRule {
    pub name: String,
    pub conjuncts: Vec<Conjunct>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suppressors: Vec<Suppressor>,
}

impl CombinationRule {
    /// A plain conjunction with a shared threshold, named after its AUs.
    pub fn conjunction(aus: &[Au], min: f64) -> Self {
        CombinationRule {
            name: combo_name(aus),
            conjuncts: aus.iter().map(|&au| Conjunct { au, min }).collect(),
            suppressors: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conjuncts.is_empty() {
            return Err(Error::Config(format!(
                "rule {:?} needs at least one conjunct",
                self.name
            )));
        }
        for c in &self.conjuncts {
            if !(0.0..=100.0).contains(&c.min) {
                return Err(Error::Config(format!(
                    "rule {:?}: conjunct threshold {} outside [0, 100]",
                    self.name, c.min
                )));
            }
        }
        for s in &self.suppressors {
            if !(0.0..=100.0).contains(&s.max) {
                return Err(Error::Config(format!(
                    "rule {:?}: suppressor threshold {} outside [0, 100]",
                    self.name, s.max
                )));
            }
        }
        Ok(())
    }
}

/// A named composite state: a non-empty disjunction of rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSet {
    pub name: String,
    pub rules: Vec<CombinationRule>,
}

impl RuleSet {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("rule set name must be non-empty".into()));
        }
        if self.rules.is_empty() {
            return Err(Error::Config(format!(
                "rule set {:?} must contain at least one rule",
                self.name
            )));
        }
        for rule in &self.rules {
            rule.validate()?;
        }
        Ok(())
    }
}

/// Canonical display name for an AU combination, e.g. `"AU6+AU1"`.
pub fn combo_name(aus: &[Au]) -> String {
    aus.iter()
        .map(|au| au.name())
        .collect::<Vec<_>>()
        .join("+")
}

/// Evaluate one rule against a frame's AU scores.
pub fn eval_combination(au: &AuScores, rule: &CombinationRule) -> CompositeScore {
    for s in &rule.suppressors {
        if au.get(s.au) > s.max {
            return CompositeScore {
                score: 0.0,
                active: false,
            };
        }
    }
    let mut score = f64::INFINITY;
    let mut active = true;
    for c in &rule.conjuncts {
        let v = au.get(c.au);
        score = score.min(v);
        if v < c.min {
            active = false;
        }
    }
    CompositeScore { score, active }
}

/// Evaluate a rule set: the max rule score, active when any rule is.
pub fn composite_score(au: &AuScores, rules: &RuleSet) -> CompositeScore {
    let mut best = CompositeScore {
        score: 0.0,
        active: false,
    };
    for rule in &rules.rules {
        let res = eval_combination(au, rule);
        best.score = best.score.max(res.score);
        best.active |= res.active;
    }
    best
}

/// Default sentimentality rules: joy-related AUs co-firing with sad-related
/// AUs. The pairs are illustrative defaults; real deployments replace them
/// from configuration.
pub fn default_sentimentality_rules(threshold: f64) -> RuleSet {
    let joy = [Au::Au6, Au::Au12, Au::Smirk];
    let sad = [Au::Au1, Au::Au15, Au::Au17, Au::Au4];
    let mut rules = Vec::new();
    for &j in &joy {
        for &s in &sad {
            rules.push(CombinationRule::conjunction(&[j, s], threshold));
        }
    }
    RuleSet {
        name: "sentimentality".into(),
        rules,
    }
}

/// Default confusion rules: six pairs, two of which include brow furrow
/// (AU4). Illustrative defaults, configuration replaces them.
pub fn default_confusion_rules(threshold: f64) -> RuleSet {
    let pairs: [[Au; 2]; 6] = [
        [Au::Au4, Au::Au7],
        [Au::Au4, Au::Au14],
        [Au::Au7, Au::Au14],
        [Au::Au14, Au::Au17],
        [Au::Au7, Au::Au17],
        [Au::Au14, Au::Au24],
    ];
    RuleSet {
        name: "confusion".into(),
        rules: pairs
            .iter()
            .map(|p| CombinationRule::conjunction(p, threshold))
            .collect(),
    }
}

/// A candidate AU combination for mining.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateCombo {
    pub aus: Vec<Au>,
}

impl CandidateCombo {
    pub fn name(&self) -> String {
        combo_name(&self.aus)
    }
}

/// All single AUs and unordered pairs (20 + 190 candidates).
pub fn default_candidates() -> Vec<CandidateCombo> {
    let mut out = Vec::new();
    for (i, &a) in ALL_AUS.iter().enumerate() {
        out.push(CandidateCombo { aus: vec![a] });
        for &b in &ALL_AUS[i + 1..] {
            out.push(CandidateCombo { aus: vec![a, b] });
        }
    }
    out
}

/// Which KPI ranks the mined combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiningKpi {
    RocAd,
    RocSent,
}

/// Mining knobs: the activation threshold applied to each conjunct, the
/// session aggregation, and the bin width for the moment-level KPI.
#[derive(Debug, Clone, Copy)]
pub struct MiningOptions {
    pub kpi: MiningKpi,
    pub threshold: f64,
    pub aggregator: SessionAggregator,
    pub bin_ms: u64,
}

impl Default for MiningOptions {
    fn default() -> Self {
        MiningOptions {
            kpi: MiningKpi::RocAd,
            threshold: 20.0,
            aggregator: SessionAggregator::ActiveFraction,
            bin_ms: 1_000,
        }
    }
}

/// A candidate with its KPI and per-class session support.
#[derive(Debug, Clone)]
pub struct MinedCombination {
    pub name: String,
    pub aus: Vec<Au>,
    pub kpi: f64,
    /// Sessions in positive ads where the combination ever activated.
    pub support_pos: usize,
    /// Same for negative ads.
    pub support_neg: usize,
}

fn frame_score(au: &AuScores, aus: &[Au], threshold: f64) -> (f64, bool) {
    let mut score = f64::INFINITY;
    let mut active = true;
    for &a in aus {
        let v = au.get(a);
        score = score.min(v);
        if v < threshold {
            active = false;
        }
    }
    (score, active)
}

fn score_candidate(
    corpus: &LabeledCorpus,
    candidate: &CandidateCombo,
    options: &MiningOptions,
) -> Result<MinedCombination> {
    let mut support_pos = 0usize;
    let mut support_neg = 0usize;
    let mut ad_values = Vec::new();
    let mut ad_labels = Vec::new();
    // For the moment KPI: pooled (bin score, bin label) over positive ads.
    let mut bin_scores = Vec::new();
    let mut bin_labels = Vec::new();

    for ad in &corpus.ads {
        if ad.sessions.is_empty() {
            continue;
        }
        let mut ad_sum = 0.0;
        let mut bins: std::collections::BTreeMap<u64, (f64, usize)> = Default::default();
        for session in &ad.sessions {
            let mut agg_max = f64::NEG_INFINITY;
            let mut agg_sum = 0.0;
            let mut agg_active = 0usize;
            let mut ever_active = false;
            let mut per_bin: std::collections::BTreeMap<u64, (f64, usize)> = Default::default();
            for frame in &session.frames {
                let (score, active) =
                    frame_score(&frame.processed_au, &candidate.aus, options.threshold);
                agg_max = agg_max.max(score);
                agg_sum += score;
                if active {
                    agg_active += 1;
                    ever_active = true;
                }
                let entry = per_bin
                    .entry(frame.timestamp_ms / options.bin_ms)
                    .or_insert((0.0, 0));
                entry.0 += score;
                entry.1 += 1;
            }
            let n = session.frames.len().max(1) as f64;
            ad_sum += match options.aggregator {
                SessionAggregator::Max => {
                    if session.frames.is_empty() {
                        0.0
                    } else {
                        agg_max
                    }
                }
                SessionAggregator::Mean => agg_sum / n,
                SessionAggregator::ActiveFraction => agg_active as f64 / n,
            };
            if ever_active {
                if ad.label {
                    support_pos += 1;
                } else {
                    support_neg += 1;
                }
            }
            for (bin, (sum, count)) in per_bin {
                let entry = bins.entry(bin).or_insert((0.0, 0));
                entry.0 += sum / count as f64;
                entry.1 += 1;
            }
        }
        ad_values.push(ad_sum / ad.sessions.len() as f64);
        ad_labels.push(ad.label);
        if ad.label && !ad.moments.is_empty() {
            for (bin, (sum, sessions)) in bins {
                let start = bin * options.bin_ms;
                let end = start + options.bin_ms;
                let inside = ad.moments.iter().any(|&(m0, m1)| m0 < end && m1 > start);
                bin_scores.push(sum / sessions as f64);
                bin_labels.push(inside);
            }
        }
    }

    let kpi = match options.kpi {
        MiningKpi::RocAd => roc_auc(&ad_values, &ad_labels)? * 100.0,
        MiningKpi::RocSent => roc_auc(&bin_scores, &bin_labels)? * 100.0,
    };
    Ok(MinedCombination {
        name: candidate.name(),
        aus: candidate.aus.clone(),
        kpi,
        support_pos,
        support_neg,
    })
}

/// Rank candidate AU combinations by how well their aggregated activation
/// separates the two ad classes. Sorted by KPI descending, names ascending
/// on ties. Errors if the corpus holds a single label class.
pub fn mine_significant_combinations(
    corpus: &LabeledCorpus,
    candidates: &[CandidateCombo],
    options: &MiningOptions,
) -> Result<Vec<MinedCombination>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let has_pos = corpus.ads.iter().any(|a| a.label && !a.sessions.is_empty());
    let has_neg = corpus.ads.iter().any(|a| !a.label && !a.sessions.is_empty());
    if !has_pos || !has_neg {
        return Err(Error::SingleClass(
            "mining needs both ad label classes".into(),
        ));
    }
    let mut ranked = candidates
        .par_iter()
        .map(|c| score_candidate(corpus, c, options))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.kpi.total_cmp(&a.kpi).then_with(|| a.name.cmp(&b.name)));
    Ok(ranked)
}

/// Emit mining results as CSV: combo, KPI, per-class support.
pub fn write_mining_csv<W: std::io::Write>(
    results: &[MinedCombination],
    writer: &mut W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["combo", "kpi", "support_pos", "support_neg"])?;
    for r in results {
        out.write_record([
            r.name.clone(),
            format!("{:.4}", r.kpi),
            r.support_pos.to_string(),
            r.support_neg.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

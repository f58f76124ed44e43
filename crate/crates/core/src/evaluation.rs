//! Evaluation harness: rank-based ROC-AUC, F1, the ad-level separability KPI
//! (ROC-Ad), the moment-level timing KPI (ROC-Sent), and demographic slicing.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MetricFrame;

/// Rank-based (Mann–Whitney) ROC-AUC with midrank tie correction.
///
/// Exactly equal to the pairwise probability that a positive outranks a
/// negative, ties counted one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::SingleClass(format!(
            "scores ({}) and labels ({}) differ in length",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass(format!(
            "{n_pos} positives, {n_neg} negatives"
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::SingleClass("scores contain NaN".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk tie groups, assigning the average of the 1-based ranks they span.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let n_pos = n_pos as f64;
    let n_neg = n_neg as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// F1 at a fixed decision threshold: predictions are `score >= threshold`.
/// Returns 0 when precision + recall is 0.
pub fn f1_score(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    debug_assert_eq!(scores.len(), labels.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        let pred = s >= threshold;
        match (pred, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// How a session's per-frame composite scores collapse to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionAggregator {
    /// A state that fires once marks the session.
    #[default]
    Max,
    Mean,
    /// Fraction of frames on which the state was active.
    ActiveFraction,
}

impl SessionAggregator {
    pub fn name(self) -> &'static str {
        match self {
            SessionAggregator::Max => "max",
            SessionAggregator::Mean => "mean",
            SessionAggregator::ActiveFraction => "active-fraction",
        }
    }
}

/// Demographic attributes of one session's participant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Demographics {
    pub age_band: Option<String>,
    pub ethnicity: Option<String>,
    pub gender: Option<String>,
    pub glasses: Option<bool>,
}

/// One participant watching one ad, already run through the analytics
/// pipeline.
#[derive(Debug, Clone)]
pub struct SessionRecord {
    pub session_id: String,
    pub demographics: Demographics,
    pub frames: Vec<MetricFrame>,
}

/// One ad with its binary label, sessions, and optional labeled moments.
#[derive(Debug, Clone)]
pub struct AdRecord {
    pub ad_id: String,
    pub label: bool,
    /// Labeled intervals `[start_ms, end_ms)` within the ad timeline.
    pub moments: Vec<(u64, u64)>,
    pub sessions: Vec<SessionRecord>,
}

/// A set of ads with labels and analyzed sessions: the KPI input.
#[derive(Debug, Clone, Default)]
pub struct LabeledCorpus {
    pub ads: Vec<AdRecord>,
}

fn session_aggregate(
    session: &SessionRecord,
    state: &str,
    aggregator: SessionAggregator,
) -> Result<f64> {
    let values: Vec<(f64, bool)> = session
        .frames
        .iter()
        .filter_map(|f| f.composites.get(state).map(|c| (c.score, c.active)))
        .collect();
    if values.is_empty() {
        return Err(Error::Config(format!(
            "state {state:?} not present in session {}",
            session.session_id
        )));
    }
    Ok(match aggregator {
        SessionAggregator::Max => values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max),
        SessionAggregator::Mean => {
            values.iter().map(|v| v.0).sum::<f64>() / values.len() as f64
        }
        SessionAggregator::ActiveFraction => {
            values.iter().filter(|v| v.1).count() as f64 / values.len() as f64
        }
    })
}

/// Per-ad aggregated state values and labels, in corpus order. Ads without
/// sessions are dropped.
pub fn ad_level_values(
    corpus: &LabeledCorpus,
    state: &str,
    aggregator: SessionAggregator,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for ad in &corpus.ads {
        if ad.sessions.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for session in &ad.sessions {
            sum += session_aggregate(session, state, aggregator)?;
        }
        values.push(sum / ad.sessions.len() as f64);
        labels.push(ad.label);
    }
    Ok((values, labels))
}

/// Ad-level separability of a composite state, as ROC-AUC x 100: aggregate
/// per session, average per ad, then rank ad values against ad labels.
pub fn roc_ad(
    corpus: &LabeledCorpus,
    state: &str,
    aggregator: SessionAggregator,
) -> Result<f64> {
    let (values, labels) = ad_level_values(corpus, state, aggregator)?;
    Ok(roc_auc(&values, &labels)? * 100.0)
}

/// Moment-level timing KPI, as ROC-AUC x 100.
///
/// Restricted to positive-labeled ads: the state score is averaged across
/// sessions per time bin, bins are labeled by intersection with the ad's
/// labeled moments, and the bin scores are ranked against the bin labels.
pub fn roc_sent(corpus: &LabeledCorpus, state: &str, bin_ms: u64) -> Result<f64> {
    debug_assert!(bin_ms > 0);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut annotated = false;
    for ad in corpus.ads.iter().filter(|ad| ad.label) {
        if ad.moments.is_empty() {
            continue;
        }
        annotated = true;
        // bin index -> (sum of session means, session count)
        let mut bins: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
        for session in &ad.sessions {
            let mut per_bin: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            for frame in &session.frames {
                let Some(c) = frame.composites.get(state) else {
                    return Err(Error::Config(format!(
                        "state {state:?} not present in session {}",
                        session.session_id
                    )));
                };
                let entry = per_bin.entry(frame.timestamp_ms / bin_ms).or_insert((0.0, 0));
                entry.0 += c.score;
                entry.1 += 1;
            }
            for (bin, (sum, count)) in per_bin {
                let entry = bins.entry(bin).or_insert((0.0, 0));
                entry.0 += sum / count as f64;
                entry.1 += 1;
            }
        }
        for (bin, (sum, sessions)) in bins {
            let start = bin * bin_ms;
            let end = start + bin_ms;
            let inside = ad.moments.iter().any(|&(m0, m1)| m0 < end && m1 > start);
            scores.push(sum / sessions as f64);
            labels.push(inside);
        }
    }
    if !annotated {
        return Err(Error::InvalidStream(
            "no positive ad carries moment annotations".into(),
        ));
    }
    Ok(roc_auc(&scores, &labels)? * 100.0)
}

/// The demographic dimensions reports are sliced over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceDim {
    AgeBand,
    Ethnicity,
    Gender,
    Glasses,
}

pub const ALL_SLICE_DIMS: [SliceDim; 4] = [
    SliceDim::AgeBand,
    SliceDim::Ethnicity,
    SliceDim::Gender,
    SliceDim::Glasses,
];

impl SliceDim {
    pub fn name(self) -> &'static str {
        match self {
            SliceDim::AgeBand => "age_band",
            SliceDim::Ethnicity => "ethnicity",
            SliceDim::Gender => "gender",
            SliceDim::Glasses => "glasses",
        }
    }

    fn value_of(self, d: &Demographics) -> String {
        let v = match self {
            SliceDim::AgeBand => d.age_band.clone(),
            SliceDim::Ethnicity => d.ethnicity.clone(),
            SliceDim::Gender => d.gender.clone(),
            SliceDim::Glasses => d.glasses.map(|g| g.to_string()),
        };
        v.unwrap_or_else(|| "unknown".to_string())
    }
}

/// One row of a demographic slice table.
#[derive(Debug, Clone, Serialize)]
pub struct SliceRow {
    pub dim: String,
    pub value: String,
    pub sessions: usize,
    pub metric: Option<f64>,
    pub low_support: bool,
    pub note: Option<String>,
}

/// Evaluate `metric` within every demographic slice. Sessions missing an
/// attribute fall into an `"unknown"` slice; slices below `min_support`
/// sessions are flagged.
pub fn slice_report(
    corpus: &LabeledCorpus,
    metric: impl Fn(&LabeledCorpus) -> Result<f64>,
    min_support: usize,
) -> Vec<SliceRow> {
    let mut rows = Vec::new();
    for dim in ALL_SLICE_DIMS {
        let mut values: Vec<String> = corpus
            .ads
            .iter()
            .flat_map(|ad| ad.sessions.iter())
            .map(|s| dim.value_of(&s.demographics))
            .collect();
        values.sort_unstable();
        values.dedup();
        for value in values {
            let mut sub = LabeledCorpus::default();
            let mut session_count = 0usize;
            for ad in &corpus.ads {
                let sessions: Vec<SessionRecord> = ad
                    .sessions
                    .iter()
                    .filter(|s| dim.value_of(&s.demographics) == value)
                    .cloned()
                    .collect();
                if !sessions.is_empty() {
                    session_count += sessions.len();
                    sub.ads.push(AdRecord {
                        ad_id: ad.ad_id.clone(),
                        label: ad.label,
                        moments: ad.moments.clone(),
                        sessions,
                    });
                }
            }
            let (metric_value, note) = match metric(&sub) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            rows.push(SliceRow {
                dim: dim.name().to_string(),
                value,
                sessions: session_count,
                metric: metric_value,
                low_support: session_count < min_support,
                note,
            });
        }
    }
    rows
}

/// Everything cmd-evaluate reports for one composite state.
#[derive(Debug, Clone, Serialize)]
pub struct KpiReport {
    pub state: String,
    pub aggregator: String,
    pub ads: usize,
    pub sessions: usize,
    pub roc_ad: Option<f64>,
    pub roc_sent: Option<f64>,
    pub auc_ad: Option<f64>,
    pub f1_ad: Option<f64>,
    pub notes: Vec<String>,
    pub slices: Vec<SliceRow>,
}

impl KpiReport {
    /// KPI values as CSV (one row), followed by the slice table.
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> Result<()> {
        let mut out = csv::Writer::from_writer(&mut *writer);
        out.write_record(["state", "aggregator", "ads", "sessions", "roc_ad", "roc_sent", "auc_ad", "f1_ad"])?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        out.write_record([
            self.state.clone(),
            self.aggregator.clone(),
            self.ads.to_string(),
            self.sessions.to_string(),
            fmt(self.roc_ad),
            fmt(self.roc_sent),
            fmt(self.auc_ad),
            fmt(self.f1_ad),
        ])?;
        out.flush()?;
        drop(out);
        if !self.slices.is_empty() {
            writer.write_all(b"\n")?;
            let mut out = csv::Writer::from_writer(&mut *writer);
            out.write_record(["dim", "value", "sessions", "metric", "low_support", "note"])?;
            for row in &self.slices {
                out.write_record([
                    row.dim.clone(),
                    row.value.clone(),
                    row.sessions.to_string(),
                    row.metric.map(|v| format!("{v:.4}")).unwrap_or_default(),
                    row.low_support.to_string(),
                    row.note.clone().unwrap_or_default(),
                ])?;
            }
            out.flush()?;
        }
        Ok(())
    }

    /// Human-readable fixed-width table.
    pub fn write_text<W: Write>(&self, writer: &mut W) -> Result<()> {
        writeln!(writer, "state: {}  (session aggregator: {})", self.state, self.aggregator)?;
        writeln!(writer, "ads: {}  sessions: {}", self.ads, self.sessions)?;
        writeln!(writer, "{:-<44}", "")?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:8.2}")).unwrap_or_else(|| "       -".into());
        writeln!(writer, "{:<12} | {}", "ROC-Ad", fmt(self.roc_ad))?;
        writeln!(writer, "{:<12} | {}", "ROC-Sent", fmt(self.roc_sent))?;
        writeln!(writer, "{:<12} | {}", "AUC (ad)", fmt(self.auc_ad))?;
        writeln!(writer, "{:<12} | {}", "F1 (ad)", fmt(self.f1_ad))?;
        for note in &self.notes {
            writeln!(writer, "note: {note}")?;
        }
        if !self.slices.is_empty() {
            writeln!(writer)?;
            writeln!(
                writer,
                "{:<10} {:<12} {:>8} {:>10}  flags",
                "dim", "value", "sessions", "metric"
            )?;
            writeln!(writer, "{:-<56}", "")?;
            for row in &self.slices {
                let metric = row
                    .metric
                    .map(|v| format!("{v:10.2}"))
                    .unwrap_or_else(|| format!("{:>10}", "-"));
                let mut flags = Vec::new();
                if row.low_support {
                    flags.push("low-support");
                }
                writeln!(
                    writer,
                    "{:<10} {:<12} {:>8} {}  {}",
                    row.dim,
                    row.value,
                    row.sessions,
                    metric,
                    flags.join(",")
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::au::AuScores;
    use crate::emotion::EmotionScores;
    use crate::model::{CompositeScore, ExpressiveScores};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    /// Pairwise-comparison AUC, ties counted one half.
    fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let pos: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| !l)
            .map(|(&s, _)| s)
            .collect();
        let mut wins = 0.0;
        for &p in &pos {
            for &n in &neg {
                if p > n {
                    wins += 1.0;
                } else if p == n {
                    wins += 0.5;
                }
            }
        }
        wins / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn perfectly_separated_scores() {
        let scores = [0.1, 0.2, 0.9, 0.8];
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn worked_example_three_quarters() {
        // Pairs: (2>1), (2<3), (4>1), (4>3) -> 3 of 4 wins.
        let scores = [1.0, 2.0, 3.0, 4.0];
        let labels = [false, true, false, true];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn all_ties_give_half() {
        let scores = [5.0; 6];
        let labels = [true, false, true, false, true, false];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(roc_auc(&[1.0, 2.0], &[true, true]).is_err());
        assert!(roc_auc(&[1.0, 2.0], &[false, false]).is_err());
        assert!(roc_auc(&[], &[]).is_err());
    }

    #[test]
    fn permutation_null_centers_on_half() {
        let mut sum = 0.0;
        for seed in 0..20u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let scores: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
            let labels: Vec<bool> = (0..1000).map(|_| rng.random_bool(0.5)).collect();
            sum += roc_auc(&scores, &labels).unwrap();
        }
        let mean = sum / 20.0;
        assert!((mean - 0.5).abs() < 0.05, "null mean {mean}");
    }

    #[test]
    fn rank_auc_matches_brute_force_with_ties() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.random_range(2..120);
            // Coarse quantization forces plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 8.0).round()).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            labels[0] = true;
            labels[n - 1] = false;
            let fast = roc_auc(&scores, &labels).unwrap();
            let slow = brute_force_auc(&scores, &labels);
            assert!((fast - slow).abs() < 1e-12, "fast {fast} slow {slow}");
        }
    }

    #[test]
    fn f1_examples() {
        // All correct.
        assert_eq!(
            f1_score(&[90.0, 10.0, 80.0], &[true, false, true], 50.0),
            1.0
        );
        // No positives predicted while positives exist.
        assert_eq!(f1_score(&[10.0, 20.0], &[true, true], 50.0), 0.0);
        // TP=2, FP=1, FN=1 -> P = R = 2/3 -> F1 = 2/3.
        let scores = [80.0, 70.0, 60.0, 10.0];
        let labels = [true, true, false, true];
        let f1 = f1_score(&scores, &labels, 50.0);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    fn frame(ts: u64, state: &str, score: f64, active: bool) -> MetricFrame {
        MetricFrame {
            timestamp_ms: ts,
            processed_au: AuScores::zeros(),
            emotions: EmotionScores {
                anger: 0.0,
                disgust: 0.0,
                fear: 0.0,
                joy: 0.0,
                sadness: 0.0,
                surprise: 0.0,
                contempt: 0.0,
                neutral: 100.0,
            },
            composites: BTreeMap::from([(
                state.to_string(),
                CompositeScore { score, active },
            )]),
            expressive: ExpressiveScores {
                blink_rate: 0.0,
                attention: None,
                expressiveness: 0.0,
                valence: 0.0,
            },
            quality: None,
            pose: None,
        }
    }

    fn session(id: &str, frames: Vec<MetricFrame>) -> SessionRecord {
        SessionRecord {
            session_id: id.to_string(),
            demographics: Demographics::default(),
            frames,
        }
    }

    /// Corpus where the state fires (score `hi`) inside `fire` ads only.
    fn planted_corpus(n_ads: usize, fire_in_positive: bool) -> LabeledCorpus {
        let mut ads = Vec::new();
        for a in 0..n_ads {
            let positive = a % 2 == 0;
            let fires = positive == fire_in_positive;
            let frames: Vec<MetricFrame> = (0..20)
                .map(|i| {
                    let ts = i * 500;
                    let inside_moment = (5_000..7_000).contains(&ts);
                    let score = if fires && inside_moment { 90.0 } else { 1.0 };
                    frame(ts, "sentimentality", score, score > 20.0)
                })
                .collect();
            ads.push(AdRecord {
                ad_id: format!("ad{a}"),
                label: positive,
                moments: vec![(5_000, 7_000)],
                sessions: vec![session(&format!("s{a}"), frames)],
            });
        }
        LabeledCorpus { ads }
    }

    #[test]
    fn roc_ad_planted_is_100() {
        let corpus = planted_corpus(10, true);
        let v = roc_ad(&corpus, "sentimentality", SessionAggregator::Max).unwrap();
        assert_eq!(v, 100.0);
    }

    #[test]
    fn roc_ad_constant_scores_give_50() {
        let mut corpus = planted_corpus(10, true);
        for ad in &mut corpus.ads {
            for s in &mut ad.sessions {
                for f in &mut s.frames {
                    f.composites
                        .insert("sentimentality".into(), CompositeScore { score: 7.0, active: false });
                }
            }
        }
        let v = roc_ad(&corpus, "sentimentality", SessionAggregator::Max).unwrap();
        assert_eq!(v, 50.0);
    }

    #[test]
    fn roc_ad_rejects_single_class() {
        let mut corpus = planted_corpus(10, true);
        for ad in &mut corpus.ads {
            ad.label = true;
        }
        assert!(roc_ad(&corpus, "sentimentality", SessionAggregator::Max).is_err());
    }

    #[test]
    fn roc_ad_unknown_state_is_config_error() {
        let corpus = planted_corpus(4, true);
        assert!(matches!(
            roc_ad(&corpus, "nope", SessionAggregator::Max),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn roc_sent_planted_moments() {
        let corpus = planted_corpus(10, true);
        let v = roc_sent(&corpus, "sentimentality", 1_000).unwrap();
        assert_eq!(v, 100.0);
    }

    #[test]
    fn roc_sent_constant_gives_50_and_anti_gives_0() {
        let mut corpus = planted_corpus(10, true);
        for ad in &mut corpus.ads {
            for s in &mut ad.sessions {
                for f in &mut s.frames {
                    f.composites
                        .insert("sentimentality".into(), CompositeScore { score: 3.0, active: false });
                }
            }
        }
        assert_eq!(roc_sent(&corpus, "sentimentality", 1_000).unwrap(), 50.0);

        // Fires only outside the labeled moments.
        let mut corpus = planted_corpus(10, true);
        for ad in &mut corpus.ads {
            for s in &mut ad.sessions {
                for f in &mut s.frames {
                    let inside = (5_000..7_000).contains(&f.timestamp_ms);
                    let score = if inside { 1.0 } else { 90.0 };
                    f.composites
                        .insert("sentimentality".into(), CompositeScore { score, active: !inside });
                }
            }
        }
        assert_eq!(roc_sent(&corpus, "sentimentality", 1_000).unwrap(), 0.0);
    }

    #[test]
    fn roc_sent_requires_moments() {
        let mut corpus = planted_corpus(10, true);
        for ad in &mut corpus.ads {
            ad.moments.clear();
        }
        assert!(roc_sent(&corpus, "sentimentality", 1_000).is_err());
    }

    #[test]
    fn slice_report_single_slice_equals_global() {
        let mut corpus = planted_corpus(10, true);
        for ad in &mut corpus.ads {
            for s in &mut ad.sessions {
                s.demographics.gender = Some("female".into());
            }
        }
        let global = roc_ad(&corpus, "sentimentality", SessionAggregator::Max).unwrap();
        let rows = slice_report(
            &corpus,
            |c| roc_ad(c, "sentimentality", SessionAggregator::Max),
            5,
        );
        let gender_rows: Vec<&SliceRow> = rows.iter().filter(|r| r.dim == "gender").collect();
        assert_eq!(gender_rows.len(), 1);
        assert_eq!(gender_rows[0].value, "female");
        assert_eq!(gender_rows[0].metric, Some(global));
    }

    #[test]
    fn slice_report_reproduces_planted_gap() {
        // Sessions with glasses carry a perfectly separating state, sessions
        // without carry a constant one.
        let mut ads = Vec::new();
        for a in 0..8 {
            let positive = a % 2 == 0;
            let mk = |id: &str, glasses: bool| {
                let score = if glasses && positive { 90.0 } else { 1.0 };
                let mut s = session(id, vec![frame(0, "x", score, score > 20.0)]);
                s.demographics.glasses = Some(glasses);
                s
            };
            ads.push(AdRecord {
                ad_id: format!("ad{a}"),
                label: positive,
                moments: vec![],
                sessions: vec![mk(&format!("g{a}"), true), mk(&format!("n{a}"), false)],
            });
        }
        let corpus = LabeledCorpus { ads };
        let rows = slice_report(&corpus, |c| roc_ad(c, "x", SessionAggregator::Max), 2);
        let get = |value: &str| {
            rows.iter()
                .find(|r| r.dim == "glasses" && r.value == value)
                .unwrap()
                .metric
                .unwrap()
        };
        assert_eq!(get("true"), 100.0);
        assert_eq!(get("false"), 50.0);
    }

    #[test]
    fn slice_report_flags_low_support_and_unknown() {
        let corpus = planted_corpus(4, true);
        let rows = slice_report(
            &corpus,
            |c| roc_ad(c, "sentimentality", SessionAggregator::Max),
            5,
        );
        let unknown = rows
            .iter()
            .find(|r| r.dim == "age_band" && r.value == "unknown")
            .unwrap();
        assert_eq!(unknown.sessions, 4);
        assert!(unknown.low_support);
    }

    #[test]
    fn kpi_report_writers_do_not_panic() {
        let report = KpiReport {
            state: "sentimentality".into(),
            aggregator: "max".into(),
            ads: 30,
            sessions: 300,
            roc_ad: Some(97.5),
            roc_sent: Some(91.25),
            auc_ad: Some(0.975),
            f1_ad: None,
            notes: vec!["roc-sent used 1000 ms bins".into()],
            slices: vec![SliceRow {
                dim: "gender".into(),
                value: "female".into(),
                sessions: 150,
                metric: Some(98.0),
                low_support: false,
                note: None,
            }],
        };
        let mut csv_buf = Vec::new();
        report.write_csv(&mut csv_buf).unwrap();
        assert!(String::from_utf8(csv_buf).unwrap().contains("97.5000"));
        let mut txt_buf = Vec::new();
        report.write_text(&mut txt_buf).unwrap();
        let text = String::from_utf8(txt_buf).unwrap();
        assert!(text.contains("ROC-Ad"));
        assert!(!text.contains("low-support"));
    }
}

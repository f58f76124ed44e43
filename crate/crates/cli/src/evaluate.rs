//! `evaluate`: analyze every session in a corpus manifest and compute the
//! requested KPIs with demographic slice tables.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use affectstream::evaluation::{
    ad_level_values, f1_score, roc_ad, roc_auc, roc_sent, slice_report, AdRecord, KpiReport,
    LabeledCorpus, SessionAggregator, SessionRecord,
};
use affectstream::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{analytic, usage, CliResult};
use crate::manifest::CorpusManifest;
use crate::util::{build_pool, load_config, read_stream_file, resolve_format};

/// Which KPIs `evaluate` computes. `f1` and `auc` are ad-level variants on
/// the same per-ad aggregates that feed ROC-Ad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kpi {
    RocAd,
    RocSent,
    F1,
    Auc,
}

pub struct EvaluateArgs {
    pub manifest: PathBuf,
    pub config: Option<PathBuf>,
    pub state: String,
    pub kpis: Vec<Kpi>,
    pub aggregator: SessionAggregator,
    pub bin_ms: u64,
    pub f1_threshold: f64,
    pub min_support: usize,
    pub out_dir: PathBuf,
    pub workers: usize,
}

/// Analyze every session stream named in the manifest into a labeled
/// corpus. Missing or malformed session files are analytic errors naming
/// the file.
pub fn analyze_manifest(
    manifest: &CorpusManifest,
    manifest_dir: &Path,
    engine: &Engine,
    workers: usize,
) -> CliResult<LabeledCorpus> {
    let pool = build_pool(workers)?;
    pool.install(|| {
        let ads: Vec<CliResult<AdRecord>> = manifest
            .ads
            .par_iter()
            .map(|ad| {
                let sessions: Vec<SessionRecord> = ad
                    .sessions
                    .iter()
                    .map(|session| {
                        let path = manifest_dir.join(&session.stream);
                        let format = resolve_format(&path, None)?;
                        let frames = read_stream_file(&path, format)
                            .map_err(|e| analytic(format!("session {}: {e}", session.session_id)))?;
                        let tracks = engine
                            .analyze_stream(frames)
                            .map_err(|e| analytic(format!("{}: {e}", path.display())))?;
                        let frames = tracks.into_iter().flat_map(|t| t.frames).collect();
                        Ok(SessionRecord {
                            session_id: session.session_id.clone(),
                            demographics: session.demographics.clone(),
                            frames,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(AdRecord {
                    ad_id: ad.ad_id.clone(),
                    label: ad.label,
                    moments: ad.moments.clone(),
                    sessions,
                })
            })
            .collect();
        let ads = ads.into_iter().collect::<CliResult<Vec<_>>>()?;
        Ok(LabeledCorpus { ads })
    })
}

/// Compute the requested KPIs over an analyzed corpus. KPI failures become
/// notes, not hard errors, so a partial report is still written.
pub fn build_report(
    corpus: &LabeledCorpus,
    state: &str,
    kpis: &[Kpi],
    aggregator: SessionAggregator,
    bin_ms: u64,
    f1_threshold: f64,
    min_support: usize,
) -> KpiReport {
    let mut report = KpiReport {
        state: state.to_string(),
        aggregator: aggregator.name().to_string(),
        ads: corpus.ads.len(),
        sessions: corpus.ads.iter().map(|a| a.sessions.len()).sum(),
        roc_ad: None,
        roc_sent: None,
        auc_ad: None,
        f1_ad: None,
        notes: Vec::new(),
        slices: Vec::new(),
    };
    for kpi in kpis {
        match kpi {
            Kpi::RocAd => match roc_ad(corpus, state, aggregator) {
                Ok(v) => {
                    report.roc_ad = Some(v);
                    report.slices = slice_report(
                        corpus,
                        |sub| roc_ad(sub, state, aggregator),
                        min_support,
                    );
                }
                Err(e) => report.notes.push(format!("roc-ad unavailable: {e}")),
            },
            Kpi::RocSent => match roc_sent(corpus, state, bin_ms) {
                Ok(v) => report.roc_sent = Some(v),
                Err(e) => report.notes.push(format!("roc-sent unavailable: {e}")),
            },
            Kpi::Auc => match ad_level_values(corpus, state, aggregator)
                .and_then(|(scores, labels)| roc_auc(&scores, &labels))
            {
                Ok(v) => report.auc_ad = Some(v),
                Err(e) => report.notes.push(format!("auc unavailable: {e}")),
            },
            Kpi::F1 => match ad_level_values(corpus, state, aggregator) {
                Ok((scores, labels)) => {
                    report.f1_ad = Some(f1_score(&scores, &labels, f1_threshold));
                }
                Err(e) => report.notes.push(format!("f1 unavailable: {e}")),
            },
        }
    }
    report
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let config = load_config(args.config.as_deref())?;
    let engine = Engine::new(config).map_err(|e| usage(e.to_string()))?;
    let manifest = CorpusManifest::load(&args.manifest)?;
    let manifest_dir = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    if !engine
        .config()
        .composites
        .iter()
        .any(|r| r.name == args.state)
    {
        return Err(usage(format!(
            "state {:?} is not defined in the configuration",
            args.state
        )));
    }

    let corpus = analyze_manifest(&manifest, &manifest_dir, &engine, args.workers)?;
    let report = build_report(
        &corpus,
        &args.state,
        &args.kpis,
        args.aggregator,
        args.bin_ms,
        args.f1_threshold,
        args.min_support,
    );

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let csv_path = args.out_dir.join("kpi_report.csv");
    let mut writer = BufWriter::new(
        File::create(&csv_path)
            .map_err(|e| analytic(format!("cannot write {}: {e}", csv_path.display())))?,
    );
    report
        .write_csv(&mut writer)
        .map_err(|e| analytic(e.to_string()))?;
    let txt_path = args.out_dir.join("kpi_report.txt");
    let mut writer = BufWriter::new(
        File::create(&txt_path)
            .map_err(|e| analytic(format!("cannot write {}: {e}", txt_path.display())))?,
    );
    report
        .write_text(&mut writer)
        .map_err(|e| analytic(e.to_string()))?;

    let mut stdout = std::io::stdout().lock();
    report
        .write_text(&mut stdout)
        .map_err(|e| analytic(e.to_string()))?;
    for note in &report.notes {
        eprintln!("warning: {note}");
    }
    Ok(())
}

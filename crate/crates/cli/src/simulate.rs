//! `simulate`: write synthetic streams or corpora with ground truth.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use affectstream::stream::{write_csv, write_jsonl, StreamFormat};
use affectstream::synth::{generate_ad_corpus, generate_stream, CorpusSpec, ScenarioSpec};
use affectstream::FrameObservation;

use crate::error::{analytic, usage, CliResult};
use crate::manifest::{CorpusManifest, ManifestAd, ManifestSession};

pub struct SimulateArgs {
    pub scenario: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub format: StreamFormat,
}

fn load_spec<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read spec {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid spec {}: {e}", path.display())))
}

fn write_stream(path: &Path, frames: &[FrameObservation], format: StreamFormat) -> CliResult<()> {
    let file = File::create(path)
        .map_err(|e| analytic(format!("cannot write {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    match format {
        StreamFormat::Csv => write_csv(frames.iter(), &mut writer),
        StreamFormat::JsonLines => write_jsonl(frames.iter(), &mut writer),
    }
    .map_err(|e| analytic(format!("{}: {e}", path.display())))
}

fn extension(format: StreamFormat) -> &'static str {
    match format {
        StreamFormat::Csv => "csv",
        StreamFormat::JsonLines => "jsonl",
    }
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    match (&args.scenario, &args.corpus) {
        (Some(path), None) => run_scenario(path, args),
        (None, Some(path)) => run_corpus(path, args),
        _ => Err(usage("exactly one of --scenario or --corpus is required")),
    }
}

fn run_scenario(path: &Path, args: &SimulateArgs) -> CliResult<()> {
    let mut spec: ScenarioSpec = load_spec(path)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (frames, truth) = generate_stream(&spec).map_err(|e| usage(e.to_string()))?;
    let stream_path = args
        .out_dir
        .join(format!("stream.{}", extension(args.format)));
    write_stream(&stream_path, &frames, args.format)?;
    let truth_path = args.out_dir.join("ground_truth.json");
    std::fs::write(
        &truth_path,
        serde_json::to_string_pretty(&truth).expect("ground truth serializes"),
    )
    .map_err(|e| analytic(format!("cannot write {}: {e}", truth_path.display())))?;
    eprintln!(
        "wrote {} frames -> {} (+ ground_truth.json)",
        frames.len(),
        stream_path.display()
    );
    Ok(())
}

fn run_corpus(path: &Path, args: &SimulateArgs) -> CliResult<()> {
    let mut spec: CorpusSpec = load_spec(path)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let corpus = generate_ad_corpus(&spec).map_err(|e| usage(e.to_string()))?;

    let mut manifest = CorpusManifest { ads: Vec::new() };
    for ad in &corpus.ads {
        let ad_dir = args.out_dir.join(&ad.ad_id);
        std::fs::create_dir_all(&ad_dir)
            .map_err(|e| analytic(format!("cannot create {}: {e}", ad_dir.display())))?;
        let mut sessions = Vec::new();
        for session in &ad.sessions {
            let rel = PathBuf::from(&ad.ad_id).join(format!(
                "{}.{}",
                session.session_id,
                extension(args.format)
            ));
            write_stream(&args.out_dir.join(&rel), &session.frames, args.format)?;
            sessions.push(ManifestSession {
                session_id: session.session_id.clone(),
                stream: rel,
                demographics: session.demographics.clone(),
            });
        }
        manifest.ads.push(ManifestAd {
            ad_id: ad.ad_id.clone(),
            label: ad.label,
            moments: ad.moments.clone(),
            sessions,
        });
    }
    manifest.save(&args.out_dir.join("manifest.json"))?;
    let planted_path = args.out_dir.join("planted_rules.json");
    std::fs::write(
        &planted_path,
        serde_json::to_string_pretty(&corpus.planted).expect("rule set serializes"),
    )
    .map_err(|e| analytic(format!("cannot write {}: {e}", planted_path.display())))?;
    eprintln!(
        "wrote {} ads / {} sessions -> {}",
        corpus.ads.len(),
        manifest.session_count(),
        args.out_dir.display()
    );
    Ok(())
}

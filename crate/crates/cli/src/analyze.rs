//! `analyze`: stream in, per-frame metric records out.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use affectstream::engine::{write_blinks_csv, write_metric_csv, write_metric_jsonl};
use affectstream::stream::StreamFormat;
use affectstream::Engine;

use crate::error::{analytic, usage, CliResult};
use crate::util::{build_pool, load_config, read_stream_file, resolve_format};

pub struct AnalyzeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub config: Option<PathBuf>,
    pub format: Option<StreamFormat>,
    pub workers: usize,
    /// Blink event sidecar; defaults to `<output>.blinks.csv`.
    pub blinks: Option<PathBuf>,
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let config = load_config(args.config.as_deref())?;
    let engine = Engine::new(config).map_err(|e| usage(e.to_string()))?;
    let in_format = resolve_format(&args.input, args.format)?;
    let out_format = resolve_format(&args.output, args.format)?;
    let frames = read_stream_file(&args.input, in_format)?;

    let pool = build_pool(args.workers)?;
    let tracks = pool
        .install(|| engine.analyze_stream(frames))
        .map_err(|e| analytic(e.to_string()))?;

    let composite_names = engine.config().composite_names();
    write_output(&args.output, out_format, &tracks, &composite_names)?;

    let blinks_path = args
        .blinks
        .clone()
        .unwrap_or_else(|| sidecar_path(&args.output));
    let mut writer = BufWriter::new(File::create(&blinks_path).map_err(|e| {
        analytic(format!("cannot write {}: {e}", blinks_path.display()))
    })?);
    write_blinks_csv(&tracks, &mut writer).map_err(|e| analytic(e.to_string()))?;

    let frame_count: usize = tracks.iter().map(|t| t.frames.len()).sum();
    let blink_count: usize = tracks.iter().map(|t| t.blinks.len()).sum();
    eprintln!(
        "analyzed {} frames across {} tracks ({} blinks) -> {}",
        frame_count,
        tracks.len(),
        blink_count,
        args.output.display()
    );
    Ok(())
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_os_string();
    name.push(".blinks.csv");
    PathBuf::from(name)
}

fn write_output(
    path: &Path,
    format: StreamFormat,
    tracks: &[affectstream::TrackOutput],
    composite_names: &[String],
) -> CliResult<()> {
    let file =
        File::create(path).map_err(|e| analytic(format!("cannot write {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    match format {
        StreamFormat::Csv => write_metric_csv(tracks, composite_names, &mut writer),
        StreamFormat::JsonLines => write_metric_jsonl(tracks, &mut writer),
    }
    .map_err(|e| analytic(e.to_string()))
}

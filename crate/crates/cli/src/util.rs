use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use affectstream::stream::{parse_frame_stream, StreamFormat};
use affectstream::{EngineConfig, FrameObservation};

use crate::error::{analytic, usage, CliResult};

/// Load and validate the engine configuration, or fall back to defaults
/// when no path is given.
pub fn load_config(path: Option<&Path>) -> CliResult<EngineConfig> {
    match path {
        None => Ok(EngineConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            EngineConfig::from_toml(&text)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))
        }
    }
}

/// Resolve the stream format from an explicit flag or the file extension.
pub fn resolve_format(path: &Path, flag: Option<StreamFormat>) -> CliResult<StreamFormat> {
    flag.or_else(|| StreamFormat::from_extension(path))
        .ok_or_else(|| {
            usage(format!(
                "cannot infer format of {} (use --format csv|jsonl)",
                path.display()
            ))
        })
}

/// Read a whole stream file. A missing file is a usage error; malformed
/// content is an analytic error carrying the line diagnostic.
pub fn read_stream_file(path: &Path, format: StreamFormat) -> CliResult<Vec<FrameObservation>> {
    let file = File::open(path)
        .map_err(|e| usage(format!("cannot open input {}: {e}", path.display())))?;
    parse_frame_stream(BufReader::new(file), format)
        .collect::<affectstream::Result<Vec<_>>>()
        .map_err(|e| analytic(format!("{}: {e}", path.display())))
}

/// A rayon pool with the requested worker count (0 = rayon's default).
pub fn build_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| usage(format!("cannot build worker pool: {e}")))
}

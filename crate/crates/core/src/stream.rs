//! Frame-stream ingestion and serialization (CSV and JSON Lines), plus
//! stream validation.
//!
//! Both formats share field names; the column list is fixed and documented in
//! `docs/FORMATS.md`. Parsing is single-pass: the reader yields observations
//! one at a time and holds no backlog. CSV cannot carry luma crops; streams
//! with crops use JSON Lines.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::au::{AuScores, ALL_AUS, AU_COUNT};
use crate::error::{Error, Result};
use crate::model::{BoundingBox, FrameObservation, LandmarkSet, LumaGrid};

/// Supported stream encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamFormat {
    Csv,
    JsonLines,
}

impl StreamFormat {
    /// Infer from a file extension (`csv`, `jsonl`, `ndjson`).
    pub fn from_extension(path: &std::path::Path) -> Option<StreamFormat> {
        match path.extension()?.to_str()? {
            "csv" => Some(StreamFormat::Csv),
            "jsonl" | "ndjson" => Some(StreamFormat::JsonLines),
            _ => None,
        }
    }
}

const FIXED_COLUMNS: [&str; 15] = [
    "video_id", "face_id", "timestamp_ms", "box_x", "box_y", "box_w", "box_h", "lm_lex", "lm_ley",
    "lm_rex", "lm_rey", "lm_nx", "lm_ny", "lm_cx", "lm_cy",
];

/// The full CSV header in order.
pub fn csv_header() -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(ALL_AUS.iter().map(|au| au.column()))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LumaRecord {
    w: usize,
    h: usize,
    data: Vec<u8>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    video_id: String,
    face_id: String,
    timestamp_ms: u64,
    box_x: f64,
    box_y: f64,
    box_w: f64,
    box_h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_lex: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_ley: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_rex: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_rey: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_nx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_ny: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_cx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lm_cy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aus: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    luma: Option<LumaRecord>,
}

fn malformed(line: u64, message: impl Into<String>) -> Error {
    Error::Malformed {
        line,
        message: message.into(),
    }
}

fn check_au_ranges(values: &[f64; AU_COUNT], line: u64) -> Result<AuScores> {
    for (au, &v) in ALL_AUS.iter().zip(values.iter()) {
        if !(0.0..=100.0).contains(&v) {
            return Err(Error::OutOfRange {
                line,
                field: au.name().to_string(),
                value: v,
                min: 0.0,
                max: 100.0,
            });
        }
    }
    // Ranges were just checked; from_array cannot fail here.
    AuScores::from_array(*values)
}

#[allow(clippy::too_many_arguments)]
fn build_observation(
    line: u64,
    video_id: String,
    face_id: String,
    timestamp_ms: u64,
    box_vals: (f64, f64, f64, f64),
    landmarks: Option<[f64; 8]>,
    au_values: Option<[f64; AU_COUNT]>,
    luma: Option<LumaRecord>,
) -> Result<FrameObservation> {
    let (x, y, w, h) = box_vals;
    if !(w > 0.0 && h > 0.0) {
        return Err(malformed(
            line,
            format!("bounding box must have positive size, got {w}x{h}"),
        ));
    }
    for v in [x, y, w, h] {
        if !v.is_finite() {
            return Err(malformed(line, "non-finite bounding box coordinate"));
        }
    }
    let landmarks = landmarks
        .map(|lm| {
            if lm.iter().any(|v| !v.is_finite()) {
                return Err(malformed(line, "non-finite landmark coordinate"));
            }
            Ok(LandmarkSet {
                outer_left_eye: (lm[0], lm[1]),
                outer_right_eye: (lm[2], lm[3]),
                nose_tip: (lm[4], lm[5]),
                chin: (lm[6], lm[7]),
            })
        })
        .transpose()?;
    let raw_au = au_values.map(|vals| check_au_ranges(&vals, line)).transpose()?;
    let luma = luma
        .map(|rec| {
            LumaGrid::new(rec.w, rec.h, rec.data)
                .map_err(|e| malformed(line, format!("bad luma grid: {e}")))
        })
        .transpose()?;
    Ok(FrameObservation {
        video_id,
        face_id,
        timestamp_ms,
        box_: BoundingBox { x, y, w, h },
        landmarks,
        raw_au,
        luma,
    })
}

/// Lazy, single-pass reader over a frame stream.
pub struct FrameStream<R: Read> {
    inner: StreamInner<R>,
}

enum StreamInner<R: Read> {
    Csv {
        reader: csv::Reader<R>,
        header_checked: bool,
        done: bool,
    },
    Json {
        reader: BufReader<R>,
        line: u64,
        done: bool,
    },
}

/// Open a frame stream for iteration. The CSV header is validated on the
/// first record read.
pub fn parse_frame_stream<R: Read>(source: R, format: StreamFormat) -> FrameStream<R> {
    let inner = match format {
        StreamFormat::Csv => StreamInner::Csv {
            reader: csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(source),
            header_checked: false,
            done: false,
        },
        StreamFormat::JsonLines => StreamInner::Json {
            reader: BufReader::new(source),
            line: 0,
            done: false,
        },
    };
    FrameStream { inner }
}

/// Parse an entire stream into memory, stopping at the first error.
pub fn parse_all<R: Read>(source: R, format: StreamFormat) -> Result<Vec<FrameObservation>> {
    parse_frame_stream(source, format).collect()
}

impl<R: Read> FrameStream<R> {
    fn next_csv(
        reader: &mut csv::Reader<R>,
        header_checked: &mut bool,
    ) -> Option<Result<FrameObservation>> {
        if !*header_checked {
            *header_checked = true;
            match reader.headers() {
                Ok(headers) => {
                    let expected = csv_header();
                    let got: Vec<&str> = headers.iter().collect();
                    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
                        return Some(Err(malformed(
                            1,
                            format!("unexpected csv header: {}", got.join(",")),
                        )));
                    }
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
        let mut record = csv::StringRecord::new();
        match reader.read_record(&mut record) {
            Ok(false) => None,
            Ok(true) => {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                Some(Self::record_to_observation(&record, line))
            }
            Err(e) => Some(Err(e.into())),
        }
    }

    fn record_to_observation(record: &csv::StringRecord, line: u64) -> Result<FrameObservation> {
        let expected_len = FIXED_COLUMNS.len() + AU_COUNT;
        if record.len() != expected_len {
            return Err(malformed(
                line,
                format!("expected {expected_len} fields, got {}", record.len()),
            ));
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize, name: &str| -> Result<f64> {
            field(i)
                .trim()
                .parse::<f64>()
                .map_err(|_| malformed(line, format!("{name}: cannot parse {:?}", field(i))))
        };

        let video_id = field(0).to_string();
        let face_id = field(1).to_string();
        if video_id.is_empty() || face_id.is_empty() {
            return Err(malformed(line, "video_id and face_id must be non-empty"));
        }
        let timestamp_ms = field(2)
            .trim()
            .parse::<u64>()
            .map_err(|_| malformed(line, format!("timestamp_ms: cannot parse {:?}", field(2))))?;
        let box_vals = (
            num(3, "box_x")?,
            num(4, "box_y")?,
            num(5, "box_w")?,
            num(6, "box_h")?,
        );

        let lm_fields: Vec<&str> = (7..15).map(field).collect();
        let landmarks = if lm_fields.iter().all(|s| s.trim().is_empty()) {
            None
        } else if lm_fields.iter().any(|s| s.trim().is_empty()) {
            return Err(malformed(
                line,
                "landmark columns must be all present or all empty",
            ));
        } else {
            let mut lm = [0.0; 8];
            for (k, s) in lm_fields.iter().enumerate() {
                lm[k] = s.trim().parse::<f64>().map_err(|_| {
                    malformed(line, format!("landmark column: cannot parse {s:?}"))
                })?;
            }
            Some(lm)
        };

        let au_fields: Vec<&str> = (15..15 + AU_COUNT).map(field).collect();
        let au_values = if au_fields.iter().all(|s| s.trim().is_empty()) {
            None
        } else if au_fields.iter().any(|s| s.trim().is_empty()) {
            return Err(malformed(
                line,
                "au columns must be all present or all empty",
            ));
        } else {
            let mut vals = [0.0; AU_COUNT];
            for (k, s) in au_fields.iter().enumerate() {
                vals[k] = s.trim().parse::<f64>().map_err(|_| {
                    malformed(
                        line,
                        format!("{}: cannot parse {s:?}", ALL_AUS[k].name()),
                    )
                })?;
            }
            Some(vals)
        };

        build_observation(
            line,
            video_id,
            face_id,
            timestamp_ms,
            box_vals,
            landmarks,
            au_values,
            None,
        )
    }

    fn next_json(reader: &mut BufReader<R>, line: &mut u64) -> Option<Result<FrameObservation>>
    where
        R: Read,
    {
        loop {
            let mut buf = String::new();
            match reader.read_line(&mut buf) {
                Ok(0) => return None,
                Ok(_) => {
                    *line += 1;
                    if buf.trim().is_empty() {
                        continue;
                    }
                    return Some(Self::json_to_observation(&buf, *line));
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }

    fn json_to_observation(text: &str, line: u64) -> Result<FrameObservation> {
        let rec: JsonRecord = serde_json::from_str(text)
            .map_err(|e| malformed(line, format!("invalid json record: {e}")))?;
        if rec.video_id.is_empty() || rec.face_id.is_empty() {
            return Err(malformed(line, "video_id and face_id must be non-empty"));
        }
        let lm_opt = [
            rec.lm_lex, rec.lm_ley, rec.lm_rex, rec.lm_rey, rec.lm_nx, rec.lm_ny, rec.lm_cx,
            rec.lm_cy,
        ];
        let landmarks = if lm_opt.iter().all(Option::is_none) {
            None
        } else if lm_opt.iter().any(Option::is_none) {
            return Err(malformed(
                line,
                "landmark fields must be all present or all absent",
            ));
        } else {
            let mut lm = [0.0; 8];
            for (k, v) in lm_opt.iter().enumerate() {
                lm[k] = v.unwrap();
            }
            Some(lm)
        };
        let au_values = match rec.aus {
            None => None,
            Some(vals) => {
                if vals.len() != AU_COUNT {
                    return Err(malformed(
                        line,
                        format!("aus must list {AU_COUNT} values, got {}", vals.len()),
                    ));
                }
                let mut arr = [0.0; AU_COUNT];
                arr.copy_from_slice(&vals);
                Some(arr)
            }
        };
        build_observation(
            line,
            rec.video_id,
            rec.face_id,
            rec.timestamp_ms,
            (rec.box_x, rec.box_y, rec.box_w, rec.box_h),
            landmarks,
            au_values,
            rec.luma,
        )
    }
}

impl<R: Read> Iterator for FrameStream<R> {
    type Item = Result<FrameObservation>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.inner {
            StreamInner::Csv {
                reader,
                header_checked,
                done,
            } => {
                if *done {
                    return None;
                }
                let item = Self::next_csv(reader, header_checked);
                if matches!(item, Some(Err(_))) {
                    *done = true;
                }
                item
            }
            StreamInner::Json { reader, line, done } => {
                if *done {
                    return None;
                }
                let item = Self::next_json(reader, line);
                if matches!(item, Some(Err(_))) {
                    *done = true;
                }
                item
            }
        }
    }
}

fn observation_to_json(obs: &FrameObservation) -> JsonRecord {
    JsonRecord {
        video_id: obs.video_id.clone(),
        face_id: obs.face_id.clone(),
        timestamp_ms: obs.timestamp_ms,
        box_x: obs.box_.x,
        box_y: obs.box_.y,
        box_w: obs.box_.w,
        box_h: obs.box_.h,
        lm_lex: obs.landmarks.map(|l| l.outer_left_eye.0),
        lm_ley: obs.landmarks.map(|l| l.outer_left_eye.1),
        lm_rex: obs.landmarks.map(|l| l.outer_right_eye.0),
        lm_rey: obs.landmarks.map(|l| l.outer_right_eye.1),
        lm_nx: obs.landmarks.map(|l| l.nose_tip.0),
        lm_ny: obs.landmarks.map(|l| l.nose_tip.1),
        lm_cx: obs.landmarks.map(|l| l.chin.0),
        lm_cy: obs.landmarks.map(|l| l.chin.1),
        aus: obs.raw_au.map(|au| au.as_array().to_vec()),
        luma: obs.luma.as_ref().map(|g| LumaRecord {
            w: g.w,
            h: g.h,
            data: g.data.clone(),
        }),
    }
}

/// Write observations as JSON Lines.
pub fn write_jsonl<'a, W: Write>(
    frames: impl IntoIterator<Item = &'a FrameObservation>,
    writer: &mut W,
) -> Result<()> {
    for obs in frames {
        serde_json::to_writer(&mut *writer, &observation_to_json(obs))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Write observations as CSV. Errors if any observation carries a luma crop,
/// since the CSV schema has no column for it.
pub fn write_csv<'a, W: Write>(
    frames: impl IntoIterator<Item = &'a FrameObservation>,
    writer: &mut W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(csv_header())?;
    for obs in frames {
        if obs.luma.is_some() {
            return Err(Error::InvalidStream(
                "csv cannot carry luma crops; use jsonl".into(),
            ));
        }
        let mut fields: Vec<String> = vec![
            obs.video_id.clone(),
            obs.face_id.clone(),
            obs.timestamp_ms.to_string(),
            obs.box_.x.to_string(),
            obs.box_.y.to_string(),
            obs.box_.w.to_string(),
            obs.box_.h.to_string(),
        ];
        match obs.landmarks {
            Some(lm) => {
                for v in [
                    lm.outer_left_eye.0,
                    lm.outer_left_eye.1,
                    lm.outer_right_eye.0,
                    lm.outer_right_eye.1,
                    lm.nose_tip.0,
                    lm.nose_tip.1,
                    lm.chin.0,
                    lm.chin.1,
                ] {
                    fields.push(v.to_string());
                }
            }
            None => fields.extend(std::iter::repeat_n(String::new(), 8)),
        }
        match obs.raw_au {
            Some(au) => fields.extend(au.as_array().iter().map(|v| v.to_string())),
            None => fields.extend(std::iter::repeat_n(String::new(), AU_COUNT)),
        }
        out.write_record(&fields)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-track findings from [`validate_stream`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrackValidation {
    pub video_id: String,
    pub face_id: String,
    pub frames: usize,
    /// Indices (within the track, in arrival order) whose timestamp did not
    /// strictly increase.
    pub violations: Vec<usize>,
    pub max_gap_ms: Option<u64>,
}

/// Monotonicity and gap statistics over a whole stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub tracks: Vec<TrackValidation>,
    pub total_frames: usize,
    pub max_gap_ms: Option<u64>,
}

impl ValidationReport {
    pub fn is_monotone(&self) -> bool {
        self.tracks.iter().all(|t| t.violations.is_empty())
    }

    pub fn non_monotone(&self) -> impl Iterator<Item = &TrackValidation> {
        self.tracks.iter().filter(|t| !t.violations.is_empty())
    }
}

/// Check per-track timestamp monotonicity and report inter-frame gaps.
/// Report-only: never fails.
pub fn validate_stream<'a>(
    frames: impl IntoIterator<Item = &'a FrameObservation>,
) -> ValidationReport {
    struct TrackAcc {
        order: usize,
        video_id: String,
        face_id: String,
        frames: usize,
        last_ts: u64,
        violations: Vec<usize>,
        max_gap: Option<u64>,
    }
    let mut by_track: HashMap<(String, String), TrackAcc> = HashMap::new();
    let mut total = 0usize;
    for obs in frames {
        total += 1;
        let key = (obs.video_id.clone(), obs.face_id.clone());
        let next_order = by_track.len();
        let acc = by_track.entry(key).or_insert_with(|| TrackAcc {
            order: next_order,
            video_id: obs.video_id.clone(),
            face_id: obs.face_id.clone(),
            frames: 0,
            last_ts: 0,
            violations: Vec::new(),
            max_gap: None,
        });
        if acc.frames > 0 {
            if obs.timestamp_ms <= acc.last_ts {
                acc.violations.push(acc.frames);
            }
            let gap = obs.timestamp_ms.saturating_sub(acc.last_ts);
            acc.max_gap = Some(acc.max_gap.unwrap_or(0).max(gap));
        }
        acc.last_ts = obs.timestamp_ms;
        acc.frames += 1;
    }
    let mut accs: Vec<TrackAcc> = by_track.into_values().collect();
    accs.sort_by_key(|a| a.order);
    let max_gap_ms = accs.iter().filter_map(|a| a.max_gap).max();
    ValidationReport {
        tracks: accs
            .into_iter()
            .map(|a| TrackValidation {
                video_id: a.video_id,
                face_id: a.face_id,
                frames: a.frames,
                violations: a.violations,
                max_gap_ms: a.max_gap,
            })
            .collect(),
        total_frames: total,
        max_gap_ms,
    }
}

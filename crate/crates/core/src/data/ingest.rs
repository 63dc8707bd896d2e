use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ActivitySchema, Segment, SubjectRecording};
use crate::error::{invalid, Error, Result};
use crate::sigproc::Waveform;

/// Relative deviation between declared and timestamp-implied rate that
/// triggers a warning.
const RATE_WARN_TOLERANCE: f64 = 0.1;

/// One manifest row mapping a CSV file to its metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub subject_id: String,
    pub activity: String,
    pub rate_hz: f64,
}

fn parse_err(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

/// Read a headerless `timestamp,x,y,z` file into timestamps and a
/// three-channel waveform at the declared rate.
pub fn read_samples_csv(path: &Path, rate_hz: f64) -> Result<(Vec<f64>, Waveform)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut stamps = Vec::new();
    let mut channels = vec![Vec::new(), Vec::new(), Vec::new()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(path, row, e.to_string()))?;
        if record.len() != 4 {
            return Err(parse_err(
                path,
                row,
                format!("expected 4 fields, found {}", record.len()),
            ));
        }
        let mut values = [0.0; 4];
        for (j, field) in record.iter().enumerate() {
            values[j] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(
                        path,
                        row,
                        format!("field {} is not a number: `{field}`", j + 1),
                    )
                })?;
        }
        if let Some(&prev) = stamps.last() {
            if values[0] < prev {
                return Err(parse_err(
                    path,
                    row,
                    format!("timestamp {} precedes {prev}", values[0]),
                ));
            }
        }
        stamps.push(values[0]);
        for c in 0..3 {
            channels[c].push(values[c + 1]);
        }
    }
    Ok((stamps, Waveform::new(rate_hz, channels)?))
}

/// Sampling rate implied by the median timestamp step, if any.
pub fn inferred_rate_hz(timestamps: &[f64]) -> Option<f64> {
    let mut deltas: Vec<f64> = timestamps
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .collect();
    if deltas.is_empty() {
        return None;
    }
    deltas.sort_by(f64::total_cmp);
    let mid = deltas.len() / 2;
    let median = if deltas.len() % 2 == 0 {
        (deltas[mid - 1] + deltas[mid]) / 2.0
    } else {
        deltas[mid]
    };
    Some(1.0 / median)
}

/// Load one segment. The declared rate is authoritative; a disagreeing
/// timestamp cadence only produces a warning.
pub fn load_recording_csv(
    path: &Path,
    subject_id: &str,
    activity: &str,
    rate_hz: f64,
) -> Result<Waveform> {
    let (stamps, wave) = read_samples_csv(path, rate_hz)?;
    if let Some(seen) = inferred_rate_hz(&stamps) {
        if (seen - rate_hz).abs() > RATE_WARN_TOLERANCE * rate_hz {
            log::warn!(
                "{}: subject {subject_id} / {activity}: timestamps suggest {seen:.2} Hz, using declared {rate_hz} Hz",
                path.display()
            );
        }
    }
    Ok(wave)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Load every file listed in a manifest, grouped by subject in id order.
/// Paths are resolved relative to the manifest's directory.
pub fn load_corpus(manifest_path: &Path, schema: &ActivitySchema) -> Result<Vec<SubjectRecording>> {
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut by_subject: BTreeMap<String, SubjectRecording> = BTreeMap::new();
    for entry in read_manifest(manifest_path)? {
        let activity = schema.index_of(&entry.activity)?;
        let wave = load_recording_csv(
            &base.join(&entry.path),
            &entry.subject_id,
            &entry.activity,
            entry.rate_hz,
        )?;
        let rec = by_subject
            .entry(entry.subject_id.clone())
            .or_insert_with(|| SubjectRecording::empty(entry.subject_id.clone(), entry.rate_hz));
        if rec.native_rate_hz != entry.rate_hz {
            return invalid(format!(
                "subject {} mixes native rates {} and {} Hz",
                entry.subject_id, rec.native_rate_hz, entry.rate_hz
            ));
        }
        rec.segments.push(Segment { activity, wave });
    }
    Ok(by_subject.into_values().collect())
}

/// Write recordings as CSV files plus a `manifest.json` under `dir`.
pub fn write_corpus(
    dir: &Path,
    recordings: &[SubjectRecording],
    schema: &ActivitySchema,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut manifest = Vec::new();
    for rec in recordings {
        for (i, seg) in rec.segments.iter().enumerate() {
            let activity = &schema.names()[seg.activity];
            let rel = PathBuf::from(format!("{}_{activity}_{i}.csv", rec.subject_id));
            let mut writer = csv::WriterBuilder::new()
                .has_headers(false)
                .from_path(dir.join(&rel))?;
            let rate = seg.wave.rate_hz();
            for n in 0..seg.wave.len() {
                let t = n as f64 / rate;
                writer.write_record([
                    t.to_string(),
                    seg.wave.channel(0)[n].to_string(),
                    seg.wave.channel(1)[n].to_string(),
                    seg.wave.channel(2)[n].to_string(),
                ])?;
            }
            writer.flush()?;
            manifest.push(ManifestEntry {
                path: rel,
                subject_id: rec.subject_id.clone(),
                activity: activity.clone(),
                rate_hz: rate,
            });
        }
    }
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_cadence() {
        assert_eq!(
            inferred_rate_hz(&[0.0, 0.01, 0.02, 0.03]).map(|r| r.round()),
            Some(100.0)
        );
        assert_eq!(inferred_rate_hz(&[1.0]), None);
    }
}

//! JSON trial files and dataset directories.
//!
//! A dataset directory holds one `<subject>_<index>.json` file per trial and a
//! `manifest.json` listing them per subject.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ProtocolTag, SubjectDataset, Trial};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TrialFile {
    subject_id: String,
    sampling_rate: u32,
    channels: Vec<String>,
    onset_sample: usize,
    ending_sample: usize,
    samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub subjects: Vec<ManifestSubject>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub subject_id: String,
    pub protocol_tag: ProtocolTag,
    /// File names relative to the dataset directory, in trial order.
    pub trials: Vec<String>,
}

fn malformed(path: &Path, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.to_path_buf(),
        field: field.into(),
        message: message.into(),
    }
}

pub(crate) fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_io() {
            Error::io(path, std::io::Error::other(inner))
        } else {
            malformed(path, field, inner.to_string())
        }
    })
}

pub fn read_trial_file(path: impl AsRef<Path>) -> Result<Trial> {
    let path = path.as_ref();
    let raw: TrialFile = parse_json(path)?;
    let width = raw.channels.len();
    let n = raw.samples.len();
    let mut flat = Vec::with_capacity(n * width);
    for (i, row) in raw.samples.iter().enumerate() {
        if row.len() != width {
            return Err(malformed(
                path,
                format!("samples[{i}]"),
                format!("row has {} values, expected {width}", row.len()),
            ));
        }
        flat.extend_from_slice(row);
    }
    let samples = Array2::from_shape_vec((n, width), flat)
        .map_err(|e| malformed(path, "samples", e.to_string()))?;
    let trial = Trial {
        subject_id: raw.subject_id,
        sampling_rate: raw.sampling_rate,
        channels: raw.channels,
        samples,
        onset_sample: raw.onset_sample,
        ending_sample: raw.ending_sample,
    };
    trial.validate()?;
    Ok(trial)
}

pub fn write_trial_file(trial: &Trial, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    trial.validate()?;
    let raw = TrialFile {
        subject_id: trial.subject_id.clone(),
        sampling_rate: trial.sampling_rate,
        channels: trial.channels.clone(),
        onset_sample: trial.onset_sample,
        ending_sample: trial.ending_sample,
        samples: trial.samples.rows().into_iter().map(|r| r.to_vec()).collect(),
    };
    write_json(path, &raw)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every trial plus the manifest into `dir`, creating it if needed.
pub fn write_dataset(subjects: &[SubjectDataset], dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        subjects: Vec::with_capacity(subjects.len()),
    };
    for subject in subjects {
        let mut names = Vec::with_capacity(subject.trials.len());
        for (i, trial) in subject.trials.iter().enumerate() {
            let name = format!("{}.json", subject.trial_id(i));
            write_trial_file(trial, dir.join(&name)).map_err(|e| e.in_trial(subject.trial_id(i)))?;
            names.push(name);
        }
        manifest.subjects.push(ManifestSubject {
            subject_id: subject.subject_id.clone(),
            protocol_tag: subject.protocol_tag,
            trials: names,
        });
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Reads a dataset directory and validates every subject.
pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Vec<SubjectDataset>> {
    let dir = dir.as_ref();
    let manifest_path: PathBuf = dir.join(MANIFEST_FILE);
    let manifest: Manifest = parse_json(&manifest_path)?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(malformed(
            &manifest_path,
            "schema_version",
            format!("unsupported version {}", manifest.schema_version),
        ));
    }
    manifest
        .subjects
        .into_iter()
        .map(|entry| {
            let trials = entry
                .trials
                .iter()
                .map(|name| {
                    let stem = name.trim_end_matches(".json").to_string();
                    read_trial_file(dir.join(name)).map_err(|e| e.in_trial(stem))
                })
                .collect::<Result<Vec<_>>>()?;
            let subject = SubjectDataset {
                subject_id: entry.subject_id,
                trials,
                protocol_tag: entry.protocol_tag,
            };
            subject.validate()?;
            Ok(subject)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CHANNEL_COUNT;

    fn trial() -> Trial {
        let s = Array2::from_shape_fn((320, CHANNEL_COUNT), |(r, c)| {
            ((r as f64) * 0.37 + c as f64).sin() * 12.5 + 1e-17 * r as f64
        });
        Trial::new("s01", s, 128, 192).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s01_0.json");
        let t = trial();
        write_trial_file(&t, &path).unwrap();
        let back = read_trial_file(&path).unwrap();
        assert_eq!(back.onset_sample, 128);
        assert_eq!(back.ending_sample, 192);
        assert_eq!(back.samples.dim(), (320, CHANNEL_COUNT));
        assert!(t.samples.iter().zip(back.samples.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back, t);
    }

    #[test]
    fn reversed_markers_are_an_invariant_violation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let mut t = trial();
        t.onset_sample = 200;
        t.ending_sample = 150;
        let raw = TrialFile {
            subject_id: t.subject_id.clone(),
            sampling_rate: 128,
            channels: t.channels.clone(),
            onset_sample: 200,
            ending_sample: 150,
            samples: t.samples.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        write_json(&path, &raw).unwrap();
        assert!(matches!(read_trial_file(&path), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn nan_rejected_before_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.json");
        let mut t = trial();
        t.samples[[5, 5]] = f64::NAN;
        assert!(matches!(write_trial_file(&t, &path), Err(Error::InvariantViolation(_))));
        assert!(!path.exists());
    }

    #[test]
    fn schema_violations_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, r#"{"subject_id":"s","sampling_rate":128,"channels":[],"onset_sample":"x","ending_sample":2,"samples":[]}"#).unwrap();
        match read_trial_file(&path) {
            Err(Error::MalformedFile { field, .. }) => assert_eq!(field, "onset_sample"),
            other => panic!("unexpected {other:?}"),
        }

        let mut rows = vec![vec![0.0; CHANNEL_COUNT]; 200];
        rows[7].pop();
        let body = serde_json::json!({
            "subject_id": "s", "sampling_rate": 128,
            "channels": crate::data::DEFAULT_CHANNELS, "onset_sample": 64, "ending_sample": 128,
            "samples": rows,
        });
        fs::write(&path, body.to_string()).unwrap();
        match read_trial_file(&path) {
            Err(Error::MalformedFile { field, .. }) => assert_eq!(field, "samples[7]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_trial_file("/nonexistent/x.json"), Err(Error::Io { .. })));
    }
}

//! Scalar features and the five per-instance feature sets.
//!
//! | set | per channel                                   | width |
//! |-----|-----------------------------------------------|-------|
//! | 1   | IE of 4 wavelet details + approximation       | 70    |
//! | 2   | TE, IE, HFD, KFD, GHE(1), GHE(2) of 2 IMFs    | 168   |
//! | 3   | GHE(1), GHE(2) of the cleaned window          | 28    |
//! | 4   | 1 ‖ 2 ‖ 3                                     | 266   |
//! | 5   | PCA of z-scored set 4, 90% variance           | ≤ 266 |
//!
//! Vectors are channel-major with a fixed feature order inside each block.

mod energy;
mod fractal;
mod hurst;
mod pca;
mod scaler;

pub use energy::{instantaneous_energy, teager_energy, LOG_FLOOR};
pub use fractal::{higuchi_fd, katz_fd, HIGUCHI_K_MAX};
pub use hurst::{ghe, GheParams};
pub use pca::{pca_apply, pca_fit, pca_layout, PcaModel, DEFAULT_RETAINED_VARIANCE};
pub use scaler::{scaler_apply, scaler_fit, ScalerModel};

use std::fmt;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::data::{Label, SignalInstance, CHANNEL_COUNT};
use crate::decompose::{dwt_bior22, emd, select_imfs_minkowski, BandKind, CoefficientSet, EmdParams, DWT_LEVELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FeatureSet {
    Fs1 = 1,
    Fs2 = 2,
    Fs3 = 3,
    Fs4 = 4,
    Fs5 = 5,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [Self::Fs1, Self::Fs2, Self::Fs3, Self::Fs4, Self::Fs5];

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Fixed width, or `None` for the PCA set whose width is data dependent.
    pub fn width(self) -> Option<usize> {
        match self {
            FeatureSet::Fs1 => Some((DWT_LEVELS + 1) * CHANNEL_COUNT),
            FeatureSet::Fs2 => Some(FS2_FEATURES.len() * 2 * CHANNEL_COUNT),
            FeatureSet::Fs3 => Some(2 * CHANNEL_COUNT),
            FeatureSet::Fs4 => Some(
                [FeatureSet::Fs1, FeatureSet::Fs2, FeatureSet::Fs3]
                    .iter()
                    .filter_map(|s| s.width())
                    .sum(),
            ),
            FeatureSet::Fs5 => None,
        }
    }
}

impl TryFrom<u8> for FeatureSet {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Self::Fs1),
            2 => Ok(Self::Fs2),
            3 => Ok(Self::Fs3),
            4 => Ok(Self::Fs4),
            5 => Ok(Self::Fs5),
            _ => Err(format!("feature set must be 1..=5, got {v}")),
        }
    }
}

impl From<FeatureSet> for u8 {
    fn from(s: FeatureSet) -> u8 {
        s.id()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FS{}", self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureName {
    Ie,
    Te,
    Hfd,
    Kfd,
    Ghe1,
    Ghe2,
    /// Principal component, 1-based.
    Pc(u16),
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureName::Ie => f.write_str("IE"),
            FeatureName::Te => f.write_str("TE"),
            FeatureName::Hfd => f.write_str("HFD"),
            FeatureName::Kfd => f.write_str("KFD"),
            FeatureName::Ghe1 => f.write_str("GHE1"),
            FeatureName::Ghe2 => f.write_str("GHE2"),
            FeatureName::Pc(k) => write!(f, "PC{k}"),
        }
    }
}

const FS2_FEATURES: [FeatureName; 6] = [
    FeatureName::Te,
    FeatureName::Ie,
    FeatureName::Hfd,
    FeatureName::Kfd,
    FeatureName::Ghe1,
    FeatureName::Ghe2,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub channel: Option<usize>,
    pub band: Option<BandKind>,
    pub feature: FeatureName,
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.channel {
            write!(f, "ch{c}:")?;
        }
        if let Some(b) = self.band {
            write!(f, "{b}:")?;
        }
        write!(f, "{}", self.feature)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub feature_set: FeatureSet,
    pub label: Option<Label>,
    pub layout: Arc<[FeatureDescriptor]>,
    /// Start sample of the source window within its trial.
    pub origin: usize,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn build_layout(set: FeatureSet) -> Arc<[FeatureDescriptor]> {
    let d = |c, band, feature| FeatureDescriptor {
        channel: Some(c),
        band,
        feature,
    };
    let mut out = Vec::new();
    match set {
        FeatureSet::Fs1 => {
            for c in 0..CHANNEL_COUNT {
                for j in 1..=DWT_LEVELS as u8 {
                    out.push(d(c, Some(BandKind::Detail(j)), FeatureName::Ie));
                }
                out.push(d(c, Some(BandKind::Approximation(DWT_LEVELS as u8 + 1)), FeatureName::Ie));
            }
        }
        FeatureSet::Fs2 => {
            for c in 0..CHANNEL_COUNT {
                for imf in 1..=2 {
                    for f in FS2_FEATURES {
                        out.push(d(c, Some(BandKind::Imf(imf)), f));
                    }
                }
            }
        }
        FeatureSet::Fs3 => {
            for c in 0..CHANNEL_COUNT {
                out.push(d(c, Some(BandKind::Raw), FeatureName::Ghe1));
                out.push(d(c, Some(BandKind::Raw), FeatureName::Ghe2));
            }
        }
        FeatureSet::Fs4 => {
            for s in [FeatureSet::Fs1, FeatureSet::Fs2, FeatureSet::Fs3] {
                out.extend(build_layout(s).iter().copied());
            }
        }
        FeatureSet::Fs5 => {}
    }
    out.into()
}

/// Shared layout of a fixed-width feature set (empty for set 5).
pub fn layout(set: FeatureSet) -> Arc<[FeatureDescriptor]> {
    static LAYOUTS: OnceLock<[Arc<[FeatureDescriptor]>; 5]> = OnceLock::new();
    let all = LAYOUTS.get_or_init(|| FeatureSet::ALL.map(build_layout));
    Arc::clone(&all[set.id() as usize - 1])
}

/// Ordinary least-squares slope of `y` on `x`; `None` without spread in `x`.
pub(crate) fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

fn fs1_channel(x: &[f64], out: &mut Vec<f64>) -> Result<()> {
    let bands = dwt_bior22(x)?;
    for set in bands.coefficient_sets(0) {
        out.push(instantaneous_energy(&set.values)?);
    }
    Ok(())
}

fn fs2_channel(x: &[f64], channel: usize, out: &mut Vec<f64>) -> Result<()> {
    let imfs: Vec<CoefficientSet> = match emd(x, &EmdParams::default()) {
        Ok(decomp) => decomp
            .imfs
            .into_iter()
            .enumerate()
            .map(|(i, values)| CoefficientSet {
                values,
                kind: BandKind::Imf(i as u8 + 1),
                source_channel: channel,
            })
            .collect(),
        Err(Error::DecompositionFailure(why)) => {
            debug!("channel {channel}: no IMFs ({why}); using the residual as a pseudo-IMF");
            vec![CoefficientSet {
                values: x.to_vec(),
                kind: BandKind::Imf(1),
                source_channel: channel,
            }]
        }
        Err(e) => return Err(e),
    };
    let ghe_params = GheParams::default();
    for imf in select_imfs_minkowski(x, &imfs)? {
        let w = &imf.values;
        out.extend([
            teager_energy(w)?,
            instantaneous_energy(w)?,
            higuchi_fd(w, HIGUCHI_K_MAX)?,
            katz_fd(w)?,
            ghe(w, 1, &ghe_params)?,
            ghe(w, 2, &ghe_params)?,
        ]);
    }
    Ok(())
}

fn fs3_channel(x: &[f64], out: &mut Vec<f64>) -> Result<()> {
    let p = GheParams::default();
    out.push(ghe(x, 1, &p)?);
    out.push(ghe(x, 2, &p)?);
    Ok(())
}

/// Extracts feature set 1, 2, 3 or 4 from one (CAR-cleaned) instance.
pub fn extract_features(instance: &SignalInstance, set: FeatureSet) -> Result<FeatureVector> {
    if instance.channel_count() != CHANNEL_COUNT {
        return Err(Error::InvariantViolation(format!(
            "instance has {} channels, expected {CHANNEL_COUNT}",
            instance.channel_count()
        )));
    }
    let per_channel: fn(&[f64], usize, &mut Vec<f64>) -> Result<()> = match set {
        FeatureSet::Fs1 => |x, _, out| fs1_channel(x, out),
        FeatureSet::Fs2 => fs2_channel,
        FeatureSet::Fs3 => |x, _, out| fs3_channel(x, out),
        FeatureSet::Fs4 => {
            let parts = [FeatureSet::Fs1, FeatureSet::Fs2, FeatureSet::Fs3]
                .map(|s| extract_features(instance, s));
            let [a, b, c] = parts;
            return assemble_fs4(&a?, &b?, &c?);
        }
        FeatureSet::Fs5 => {
            return Err(Error::InvariantViolation(
                "feature set 5 is a fitted projection of set 4; use pca_apply".into(),
            ))
        }
    };
    let mut values = Vec::with_capacity(set.width().unwrap_or(0));
    for c in 0..CHANNEL_COUNT {
        let x = instance.channel(c);
        per_channel(&x, c, &mut values).map_err(|e| Error::Feature {
            channel: c,
            offset: instance.trial_offset,
            source: Box::new(e),
        })?;
    }
    Ok(FeatureVector {
        values,
        feature_set: set,
        label: instance.label,
        layout: layout(set),
        origin: instance.trial_offset,
    })
}

/// Concatenates sets 1, 2 and 3 of the same instance.
pub fn assemble_fs4(v1: &FeatureVector, v2: &FeatureVector, v3: &FeatureVector) -> Result<FeatureVector> {
    let expected = [FeatureSet::Fs1, FeatureSet::Fs2, FeatureSet::Fs3];
    for (v, want) in [v1, v2, v3].iter().zip(expected) {
        if v.feature_set != want || Some(v.len()) != want.width() {
            return Err(Error::LayoutMismatch(format!(
                "expected {want} of width {:?}, got {} of width {}",
                want.width(),
                v.feature_set,
                v.len()
            )));
        }
    }
    if v1.origin != v2.origin || v1.origin != v3.origin || v1.label != v2.label || v1.label != v3.label {
        return Err(Error::LayoutMismatch(format!(
            "parts come from different instances (origins {}, {}, {})",
            v1.origin, v2.origin, v3.origin
        )));
    }
    let mut values = Vec::with_capacity(v1.len() + v2.len() + v3.len());
    values.extend_from_slice(&v1.values);
    values.extend_from_slice(&v2.values);
    values.extend_from_slice(&v3.values);
    Ok(FeatureVector {
        values,
        feature_set: FeatureSet::Fs4,
        label: v1.label,
        layout: layout(FeatureSet::Fs4),
        origin: v1.origin,
    })
}

/// Writes vectors as CSV: one column per layout descriptor, then `origin`
/// and `label` (empty when unlabeled).
pub fn write_csv<W: Write>(vectors: &[FeatureVector], mut out: W) -> Result<()> {
    let io = |e| Error::io("<csv>", e);
    let Some(first) = vectors.first() else {
        return Ok(());
    };
    let mut header: Vec<String> = first.layout.iter().map(|d| d.to_string()).collect();
    header.push("origin".into());
    header.push("label".into());
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for v in vectors {
        if v.layout != first.layout {
            return Err(Error::LayoutMismatch("rows carry different layouts".into()));
        }
        let mut row: Vec<String> = v.values.iter().map(|x| x.to_string()).collect();
        row.push(v.origin.to_string());
        row.push(v.label.map(|l| l.bit().to_string()).unwrap_or_default());
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    Ok(())
}

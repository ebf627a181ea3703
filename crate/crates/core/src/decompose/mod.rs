//! Per-channel signal decompositions: biorthogonal 2.2 wavelet bands and
//! empirical mode decomposition.

mod dwt;
mod emd;
mod spline;

pub use dwt::{dwt_bior22, waverec, wavedec, BoundaryMode, DwtBands, BIOR22, DWT_LEVELS};
pub use emd::{
    count_extrema, count_zero_crossings, emd, select_imfs_minkowski, EmdOutput, EmdParams,
};
pub use spline::NaturalCubicSpline;

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandKind {
    /// Detail coefficients of level `j` (1-based).
    Detail(u8),
    /// Approximation coefficients, numbered one past the deepest detail level.
    Approximation(u8),
    /// Intrinsic mode function, 1-based position in the selected pair.
    Imf(u8),
    /// The cleaned window itself, undecomposed.
    Raw,
}

impl fmt::Display for BandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandKind::Detail(j) => write!(f, "w{j}"),
            BandKind::Approximation(j) => write!(f, "a{j}"),
            BandKind::Imf(j) => write!(f, "imf{j}"),
            BandKind::Raw => write!(f, "raw"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub values: Vec<f64>,
    pub kind: BandKind,
    pub source_channel: usize,
}

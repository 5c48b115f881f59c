//! Single-qubit gate labels and their fixed matrix conventions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The single-qubit operations the protocols use.
///
/// Every matrix is real in the convention chosen here. `Iy` is fixed as
/// `i*Y = [[0, 1], [-1, 0]]` so that the recovery and dense-coding algebra
/// stays phase-consistent; all state comparisons are up to a global phase
/// anyway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateLabel {
    I,
    H,
    X,
    Z,
    #[serde(rename = "iY")]
    Iy,
}

impl GateLabel {
    pub const ALL: [GateLabel; 5] = [
        GateLabel::I,
        GateLabel::H,
        GateLabel::X,
        GateLabel::Z,
        GateLabel::Iy,
    ];

    /// 2x2 matrix in row-major order ([[u00, u01], [u10, u11]]).
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let re = |x: f64| Complex64::new(x, 0.0);
        match self {
            GateLabel::I => [[re(1.0), re(0.0)], [re(0.0), re(1.0)]],
            GateLabel::H => [[re(R), re(R)], [re(R), re(-R)]],
            GateLabel::X => [[re(0.0), re(1.0)], [re(1.0), re(0.0)]],
            GateLabel::Z => [[re(1.0), re(0.0)], [re(0.0), re(-1.0)]],
            GateLabel::Iy => [[re(0.0), re(1.0)], [re(-1.0), re(0.0)]],
        }
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateLabel::I => "I",
            GateLabel::H => "H",
            GateLabel::X => "X",
            GateLabel::Z => "Z",
            GateLabel::Iy => "iY",
        };
        f.write_str(s)
    }
}

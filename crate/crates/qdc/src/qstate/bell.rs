//! The four Bell states and the change of basis against the computational
//! basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Label of one of the four maximally entangled two-qubit states:
///
/// ```text
/// |phi+-> = (|00> +- |11>) / sqrt(2)
/// |psi+-> = (|01> +- |10>) / sqrt(2)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// Real coefficients of each Bell state over the computational basis,
/// indexed `[label][z]` with `z` running over |00>, |01>, |10>, |11>.
///
/// Read row-wise this expands a Bell state in computational kets; read
/// column-wise it expands a computational ket in the Bell basis (the matrix
/// is orthogonal and its own inverse transpose).
pub const BELL_COEFFS: [[f64; 4]; 4] = [
    [R, 0.0, 0.0, R],  // phi+
    [R, 0.0, 0.0, -R], // phi-
    [0.0, R, R, 0.0],  // psi+
    [0.0, R, -R, 0.0], // psi-
];

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellLabel::PhiPlus => 0,
            BellLabel::PhiMinus => 1,
            BellLabel::PsiPlus => 2,
            BellLabel::PsiMinus => 3,
        }
    }

    pub fn from_index(i: usize) -> BellLabel {
        BellLabel::ALL[i]
    }

    /// Amplitudes of this Bell state over |00>, |01>, |10>, |11>.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let row = BELL_COEFFS[self.index()];
        [
            Complex64::new(row[0], 0.0),
            Complex64::new(row[1], 0.0),
            Complex64::new(row[2], 0.0),
            Complex64::new(row[3], 0.0),
        ]
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
        };
        f.write_str(s)
    }
}

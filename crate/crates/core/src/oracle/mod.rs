//! Direct mode-matching solver for the full resonator, used as ground truth.
//!
//! Unknowns are the normal derivatives `d u / d x2` on the two apertures,
//! expanded in Chebyshev bases on the aperture. The trap, the channel and
//! the exterior are coupled through Galerkin-tested continuity of `u`.

pub mod assemble;
pub mod basis;
pub mod convergence;
pub mod poles;
pub mod scatter;

pub use assemble::{MatchingSystem, OracleContext};
pub use basis::BasisKind;
pub use convergence::{default_ladder, truncation_convergence, Certificate};
pub use poles::{pole_search, OracleResult, Window};
pub use scatter::{scatter_solve, ScatterSolution};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("k = {0} is on an interior eigenfrequency {1}")]
    NearInteriorSpectrum(num_complex::Complex64, f64),
    #[error("found {found} roots, expected {expected}")]
    CountMismatch { found: usize, expected: usize, roots: Vec<num_complex::Complex64> },
    #[error("root polishing did not converge (last step {0:e})")]
    NoConvergence(f64),
    #[error("matching system ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("truncation ladder not converged: decay factors {0:?}")]
    NotConverged(Vec<f64>),
    #[error("invalid truncation: {0}")]
    BadTruncation(String),
    #[error(transparent)]
    Exterior(#[from] crate::exterior::ExteriorError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    /// Channel cosine modes beyond the plane wave.
    pub n_channel: usize,
    /// Horizontal cutoff of the trap's modal sum.
    pub n_trap: usize,
    /// Product-quadrature order on each aperture.
    pub n_quad: usize,
    /// Aperture basis functions per aperture.
    pub basis: usize,
    pub kind: BasisKind,
}

impl Truncation {
    pub fn new(n_channel: usize, n_trap: usize, basis: usize) -> Self {
        Truncation { n_channel, n_trap, n_quad: 2 * basis + 8, basis, kind: BasisKind::Weighted }
    }

    /// Certificate ladder: the basis doubles per level, the cutoffs grow
    /// alongside although they are saturated from the first level on.
    pub fn ladder() -> [Truncation; 3] {
        [Truncation::new(8, 60, 4), Truncation::new(12, 120, 8), Truncation::new(16, 200, 16)]
    }

    pub fn check(&self) -> Result<(), OracleError> {
        if self.n_channel == 0 || self.n_trap == 0 || self.basis == 0 || self.n_quad < self.basis {
            return Err(OracleError::BadTruncation(format!("{self:?}")));
        }
        Ok(())
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::new(12, 120, 8)
    }
}

//! Numerical tolerances shared by every check.
//!
//! Values are plain data; callers that need different thresholds build a
//! modified copy and pass it down explicitly.

use serde::{Deserialize, Serialize};

pub const HERMITIAN: f64 = 1e-12;
pub const RECONSTRUCTION: f64 = 1e-10;
pub const CPTP_EIGENVALUE: f64 = 1e-9;
pub const KRAUS_RANK: f64 = 1e-9;
pub const DERIVATIVE_STEP: f64 = 1e-5;
pub const DERIVATIVE: f64 = 1e-8;
pub const CP_DIVISIBILITY: f64 = 1e-8;
pub const CONDITION_LIMIT: f64 = 1e10;
pub const STRUCTURE: f64 = 1e-9;
pub const WITNESS: f64 = 1e-9;
pub const EXTREMAL_GRAM: f64 = 1e-8;
pub const KINK: f64 = 1e-4;
pub const SAMPLE_PAIRS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max |A_ij - conj(A_ji)| accepted as Hermitian.
    pub hermitian: f64,
    /// Reconstruction / trace-preservation residuals.
    pub reconstruction: f64,
    /// Choi eigenvalues down to `-cptp` are accepted as positive.
    pub cptp: f64,
    /// Choi eigenvalues above this count towards the Kraus rank.
    pub kraus_rank: f64,
    /// Finite-difference step for analytic maps.
    pub derivative_step: f64,
    /// Derivative-positivity threshold, multiplied by max ‖T‖ over the grid.
    pub derivative: f64,
    /// One-step propagator eigenvalue / trace threshold.
    pub cp_divisibility: f64,
    /// Condition number above which a propagator step is indeterminate.
    pub condition_limit: f64,
    /// Subspace containment, DIO commutation, generalized-classical structure.
    pub structure: f64,
    /// X(ρ) > 1 + witness refutes type 0.
    pub witness: f64,
    /// Relative smallest Gram singular value required for extremality.
    pub extremal_gram: f64,
    /// Disagreement between one-sided derivative margins that marks a kink.
    pub kink: f64,
    /// State pairs sampled by the d > 2 heuristics.
    pub sample_pairs: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN,
            reconstruction: RECONSTRUCTION,
            cptp: CPTP_EIGENVALUE,
            kraus_rank: KRAUS_RANK,
            derivative_step: DERIVATIVE_STEP,
            derivative: DERIVATIVE,
            cp_divisibility: CP_DIVISIBILITY,
            condition_limit: CONDITION_LIMIT,
            structure: STRUCTURE,
            witness: WITNESS,
            extremal_gram: EXTREMAL_GRAM,
            kink: KINK,
            sample_pairs: SAMPLE_PAIRS,
        }
    }
}

//! Choi states, classical-classical (c-c) states and linear witnesses that
//! separate a qubit Choi state from convex combinations of c-c states.
//!
//! Two-qubit states are kept in Bloch form
//! ρ = ¼(I⊗I + r·σ⊗I + I⊗s·σ + Σ T_ij σ_i⊗σ_j). The first factor is the
//! reference system, so Choi states always have r = 0.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{Basis, Channel};
use crate::dynamics::DynamicalMap;
use crate::error::{invalid, Error, Result};
use crate::numerics::{
    self, c, kron, max_abs, operator_norm3, pauli, polar_orthogonal3, trace_norm3, CMatrix,
    RMatrix, RMatrix3, RVector3, TimeGrid,
};
use crate::tolerance::Tolerances;
use crate::verdict::{PointMargin, Status, Verdict};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitBloch {
    pub r: RVector3,
    pub s: RVector3,
    pub t: RMatrix3,
}

fn sigma_pair(i: usize, j: usize) -> CMatrix {
    kron(&pauli(i), &pauli(j))
}

impl TwoQubitBloch {
    pub fn from_density(rho: &CMatrix) -> Result<TwoQubitBloch> {
        if rho.nrows() != 4 || rho.ncols() != 4 {
            return Err(Error::UnsupportedDimension {
                dim: rho.nrows(),
                context: "two-qubit Bloch form needs 4x4",
            });
        }
        let ev = |i: usize, j: usize| (rho * sigma_pair(i, j)).trace().re;
        Ok(TwoQubitBloch {
            r: RVector3::from_fn(|i, _| ev(i + 1, 0)),
            s: RVector3::from_fn(|j, _| ev(0, j + 1)),
            t: RMatrix3::from_fn(|i, j| ev(i + 1, j + 1)),
        })
    }

    pub fn to_density(&self) -> CMatrix {
        let mut rho = sigma_pair(0, 0);
        for i in 0..3 {
            rho += sigma_pair(i + 1, 0) * c(self.r[i], 0.0);
            rho += sigma_pair(0, i + 1) * c(self.s[i], 0.0);
            for j in 0..3 {
                rho += sigma_pair(i + 1, j + 1) * c(self.t[(i, j)], 0.0);
            }
        }
        rho * c(0.25, 0.0)
    }
}

/// Choi state (1/d) Σ E_ij ⊗ Λ(E_ij) as a density matrix.
pub fn choi_density(ch: &Channel) -> CMatrix {
    ch.choi().clone()
}

/// Bloch data of a qubit channel's Choi state; r vanishes up to rounding.
pub fn choi_state(ch: &Channel) -> Result<TwoQubitBloch> {
    if ch.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: ch.dim(),
            context: "Choi Bloch form needs a qubit channel",
        });
    }
    TwoQubitBloch::from_density(ch.choi())
}

/// X(ρ) = |s| + ‖T‖₁; values above 1 exclude convex combinations of c-c
/// states.
pub fn x_functional(rho: &TwoQubitBloch) -> Result<f64> {
    if rho.r.norm() > 1e-6 {
        return invalid(format!(
            "first marginal is not maximally mixed (|r| = {:.3e})",
            rho.r.norm()
        ));
    }
    Ok(rho.s.norm() + trace_norm3(&rho.t))
}

/// W = ¼(I⊗I + I⊗s_w·σ + Σ (T_w)_ij σ_i⊗σ_j).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub s: [f64; 3],
    pub t: [[f64; 3]; 3],
}

impl Witness {
    /// Rejects |s_w| > 1 or ‖T_w‖_op > 1 beyond rounding.
    pub fn new(s: RVector3, t: RMatrix3) -> Result<Witness> {
        if s.norm() > 1.0 + 1e-12 {
            return invalid(format!("witness |s_w| = {} exceeds 1", s.norm()));
        }
        let op = operator_norm3(&t);
        if op > 1.0 + 1e-12 {
            return invalid(format!("witness ‖T_w‖ = {op} exceeds 1"));
        }
        // Adding 0.0 turns −0.0 into +0.0 for stable serialized output.
        let z = |x: f64| x + 0.0;
        Ok(Witness {
            s: [z(s.x), z(s.y), z(s.z)],
            t: [0, 1, 2].map(|i| [z(t[(i, 0)]), z(t[(i, 1)]), z(t[(i, 2)])]),
        })
    }

    pub fn s_vector(&self) -> RVector3 {
        RVector3::from_column_slice(&self.s)
    }

    pub fn t_matrix(&self) -> RMatrix3 {
        RMatrix3::from_fn(|i, j| self.t[i][j])
    }

    pub fn to_operator(&self) -> CMatrix {
        TwoQubitBloch {
            r: RVector3::zeros(),
            s: self.s_vector(),
            t: self.t_matrix(),
        }
        .to_density()
    }
}

/// W_op = [1, 0, −ŝ, −O(T)] with O(T) the orthogonal polar factor of T;
/// ŝ is taken as zero when s vanishes.
pub fn optimal_witness(rho: &TwoQubitBloch) -> Result<Witness> {
    let s_norm = rho.s.norm();
    if s_norm < 1e-12 && max_abs(&numerics::dyn3(&rho.t)) < 1e-12 {
        return invalid("state carries no s or T data");
    }
    let s_w = if s_norm < 1e-12 {
        RVector3::zeros()
    } else {
        -rho.s / s_norm
    };
    Witness::new(s_w, -polar_orthogonal3(&rho.t))
}

/// Tr(Wρ) through the dense 4×4 product, cross-checked against
/// ¼(1 + r_w·r + s_w·s + Tr(T_wᵀT)).
pub fn witness_value(w: &Witness, rho: &TwoQubitBloch) -> Result<f64> {
    let dense = (w.to_operator() * rho.to_density()).trace().re;
    let bloch = witness_value_bloch(w, rho);
    if (dense - bloch).abs() > 1e-12 {
        return Err(Error::Numerical(format!(
            "witness value paths disagree: {dense} vs {bloch}"
        )));
    }
    Ok(bloch)
}

pub fn witness_value_bloch(w: &Witness, rho: &TwoQubitBloch) -> f64 {
    0.25 * (1.0 + w.s_vector().dot(&rho.s) + (w.t_matrix().transpose() * rho.t).trace())
}

/// Σ p_ij |f_i⟩⟨f_i| ⊗ |e_j⟩⟨e_j| with Σ_j p_ij = 1/d.
#[derive(Clone, Debug)]
pub struct CCState {
    p: RMatrix,
    f: Basis,
    e: Basis,
}

impl CCState {
    pub fn new(p: RMatrix, f: Basis, e: Basis) -> Result<CCState> {
        let d = p.nrows();
        if p.ncols() != d || f.dim() != d || e.dim() != d {
            return invalid("c-c probabilities and bases differ in dimension");
        }
        if p.iter().any(|&x| !(x >= -1e-12)) {
            return invalid("c-c probabilities must be nonnegative");
        }
        for i in 0..d {
            let row: f64 = p.row(i).sum();
            if (row - 1.0 / d as f64).abs() > 1e-12 {
                return invalid(format!(
                    "row {i} of c-c probabilities sums to {row}, not 1/{d}"
                ));
            }
        }
        Ok(CCState { p, f, e })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn density(&self) -> CMatrix {
        let d = self.dim();
        let mut rho = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                rho += kron(&self.f.unit(i, i), &self.e.unit(j, j)) * c(self.p[(i, j)], 0.0);
            }
        }
        rho
    }
}

/// Density matrix and, for qubits, Bloch form of a c-c state.
pub fn cc_state(spec: &CCState) -> Result<(CMatrix, Option<TwoQubitBloch>)> {
    let rho = spec.density();
    let bloch = if spec.dim() == 2 {
        Some(TwoQubitBloch::from_density(&rho)?)
    } else {
        None
    };
    Ok((rho, bloch))
}

/// Outcome of the type-0 refutation sweep.
#[derive(Clone, Debug)]
pub struct Type0Refutation {
    /// Fails (refutation succeeds) iff max X > 1 + tolerance.
    pub verdict: Verdict,
    pub time: f64,
    pub x_max: f64,
    pub witness: Witness,
    pub x_series: Vec<f64>,
}

impl Type0Refutation {
    pub fn refuted(&self) -> bool {
        self.verdict.failed()
    }
}

/// X(Choi(Λ_t)) − 1 at every grid point of `interval`; the maximizing time
/// (earliest on ties) carries the optimal witness.
pub fn refute_type0(
    map: &DynamicalMap,
    interval: TimeGrid,
    tol: &Tolerances,
) -> Result<Type0Refutation> {
    if map.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: map.dim(),
            context: "type-0 refutation needs a qubit map",
        });
    }
    let map = map.restrict(interval)?;
    let states: Vec<TwoQubitBloch> = (0..interval.len())
        .into_par_iter()
        .map(|i| choi_state(&map.at_index(i)?))
        .collect::<Result<_>>()?;
    let x_series = states
        .iter()
        .map(x_functional)
        .collect::<Result<Vec<f64>>>()?;
    let points = x_series
        .iter()
        .enumerate()
        .map(|(i, &x)| PointMargin {
            time: interval.time(i),
            margin: x - 1.0,
            status: if x - 1.0 > tol.witness {
                Status::Fail
            } else {
                Status::Pass
            },
            direction: None,
        })
        .collect();
    let mut verdict = Verdict::from_points(points, tol.witness, Some(interval));
    let mut best = 0;
    for (i, &x) in x_series.iter().enumerate() {
        if x > x_series[best] {
            best = i;
        }
    }
    let witness = optimal_witness(&states[best])?;
    let time = interval.time(best);
    if let Some(w) = verdict.witness_point.as_mut() {
        w.detail = Some(format!("X = {:.12} at t = {time}", x_series[best]));
    }
    Ok(Type0Refutation {
        verdict,
        time,
        x_max: x_series[best],
        witness,
        x_series,
    })
}

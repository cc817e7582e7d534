//! Quantum channels and their representations.
//!
//! A [`Channel`] is stored as its Choi matrix
//!
//! ```text
//! J = (1/d) Σ_{i,j} E_ij ⊗ Λ(E_ij)
//! ```
//!
//! so J is a density matrix whose first marginal is I/d. Every other view
//! (Kraus operators, superoperator, qubit Bloch form) is derived from it, and
//! every constructor goes through the channel's action on matrix units.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numerics::{
    self, c, hermitian_deviation, hermitian_eig, identity, is_unitary, matrix_unit, max_abs, pauli,
    CMatrix, RMatrix, RMatrix3, RVector3, C64,
};
use crate::tolerance::{self, Tolerances};
use crate::verdict::{Verdict, WitnessPoint};

/// Completely positive trace-preserving map on d×d matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    dim: usize,
    choi: CMatrix,
}

/// Residuals of the CPTP conditions for a Choi matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CptpResiduals {
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
    pub hermitian_deviation: f64,
}

impl CptpResiduals {
    pub fn of(dim: usize, choi: &CMatrix) -> CptpResiduals {
        let min_eigenvalue = numerics::hermitian_part_eigenvalues(choi)[0];
        let trace_deviation =
            max_abs(&(first_marginal(dim, choi) - identity(dim) / c(dim as f64, 0.0)));
        CptpResiduals {
            min_eigenvalue,
            trace_deviation,
            hermitian_deviation: hermitian_deviation(choi),
        }
    }

    pub fn is_cptp(&self, tol: &Tolerances) -> bool {
        self.min_eigenvalue >= -tol.cptp
            && self.trace_deviation <= tol.reconstruction
            && self.hermitian_deviation <= tol.hermitian.max(tol.reconstruction)
    }
}

/// Partial trace over the second (output) factor.
pub fn first_marginal(dim: usize, choi: &CMatrix) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        (0..dim)
            .map(|a| choi[(i * dim + a, j * dim + a)])
            .sum::<C64>()
    })
}

/// Choi matrix of the linear map whose row-major superoperator is `s`,
/// i.e. vec(Λ(X))_{a·d+b} = Σ s[(a·d+b, i·d+j)] X_ij.
pub fn choi_from_superoperator(dim: usize, s: &CMatrix) -> CMatrix {
    let scale = c(1.0 / dim as f64, 0.0);
    CMatrix::from_fn(dim * dim, dim * dim, |row, col| {
        let (i, a) = (row / dim, row % dim);
        let (j, b) = (col / dim, col % dim);
        s[(a * dim + b, i * dim + j)] * scale
    })
}

fn choi_from_images(dim: usize, images: &[CMatrix]) -> CMatrix {
    let scale = c(1.0 / dim as f64, 0.0);
    let mut choi = CMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let img = &images[i * dim + j];
            for a in 0..dim {
                for b in 0..dim {
                    choi[(i * dim + a, j * dim + b)] = img[(a, b)] * scale;
                }
            }
        }
    }
    choi
}

impl Channel {
    /// Validating constructor with default tolerances.
    pub fn from_choi(choi: CMatrix) -> Result<Channel> {
        Self::from_choi_with(choi, &Tolerances::default())
    }

    pub fn from_choi_with(choi: CMatrix, tol: &Tolerances) -> Result<Channel> {
        let n = choi.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if !choi.is_square() || dim * dim != n || dim == 0 {
            return invalid(format!(
                "Choi matrix of shape {}x{} is not d²×d²",
                choi.nrows(),
                choi.ncols()
            ));
        }
        let residuals = CptpResiduals::of(dim, &choi);
        if residuals.hermitian_deviation > tol.hermitian.max(tol.reconstruction) {
            return Err(Error::NonHermitian {
                deviation: residuals.hermitian_deviation,
            });
        }
        if !residuals.is_cptp(tol) {
            return Err(Error::NotCptp {
                min_eigenvalue: residuals.min_eigenvalue,
                trace_deviation: residuals.trace_deviation,
            });
        }
        Ok(Channel { dim, choi })
    }

    /// No validation. For propagators and integrator output whose CPTP status
    /// is itself under test.
    pub fn from_choi_unchecked(dim: usize, choi: CMatrix) -> Channel {
        assert_eq!(
            choi.nrows(),
            dim * dim,
            "Choi shape does not match dimension"
        );
        Channel { dim, choi }
    }

    /// Build from the action on operators, validated.
    pub fn from_action<F: Fn(&CMatrix) -> CMatrix>(dim: usize, action: F) -> Result<Channel> {
        Self::from_action_with(dim, action, &Tolerances::default())
    }

    pub fn from_action_with<F: Fn(&CMatrix) -> CMatrix>(
        dim: usize,
        action: F,
        tol: &Tolerances,
    ) -> Result<Channel> {
        Self::from_choi_with(Self::choi_of_action(dim, action), tol)
    }

    pub fn from_action_unchecked<F: Fn(&CMatrix) -> CMatrix>(dim: usize, action: F) -> Channel {
        Channel {
            dim,
            choi: Self::choi_of_action(dim, action),
        }
    }

    fn choi_of_action<F: Fn(&CMatrix) -> CMatrix>(dim: usize, action: F) -> CMatrix {
        let images: Vec<CMatrix> = (0..dim * dim)
            .map(|k| action(&matrix_unit(dim, k / dim, k % dim)))
            .collect();
        choi_from_images(dim, &images)
    }

    pub fn identity(dim: usize) -> Channel {
        Self::from_action_unchecked(dim, |x| x.clone())
    }

    /// Channel with Kraus operators `ops`; requires Σ K†K = I.
    pub fn from_kraus(ops: &[CMatrix]) -> Result<Channel> {
        Self::from_kraus_with(ops, &Tolerances::default())
    }

    pub fn from_kraus_with(ops: &[CMatrix], tol: &Tolerances) -> Result<Channel> {
        let Some(first) = ops.first() else {
            return invalid("empty Kraus list");
        };
        let dim = first.nrows();
        if ops.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
            return invalid("Kraus operators must all be square with equal size");
        }
        let completeness = ops
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let dev = max_abs(&(completeness - identity(dim)));
        if dev > tol.reconstruction {
            return invalid(format!("Kraus completeness violated by {dev:e}"));
        }
        Self::from_action_with(
            dim,
            |x| {
                ops.iter()
                    .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k * x * k.adjoint())
            },
            tol,
        )
    }

    pub fn from_superoperator(dim: usize, s: &CMatrix) -> Result<Channel> {
        if s.nrows() != dim * dim || s.ncols() != dim * dim {
            return invalid("superoperator must be d²×d²");
        }
        Self::from_choi(choi_from_superoperator(dim, s))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn residuals(&self) -> CptpResiduals {
        CptpResiduals::of(self.dim, &self.choi)
    }

    /// Λ(E_ij).
    pub fn image_of_unit(&self, i: usize, j: usize) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |a, b| {
            self.choi[(i * d + a, j * d + b)] * c(d as f64, 0.0)
        })
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim;
        if rho.nrows() != d || rho.ncols() != d {
            return invalid(format!(
                "operator of shape {}x{} applied to a channel on {d}x{d} matrices",
                rho.nrows(),
                rho.ncols()
            ));
        }
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let x = rho[(i, j)];
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        out[(a, b)] += x * self.choi[(i * d + a, j * d + b)];
                    }
                }
            }
        }
        Ok(out * c(d as f64, 0.0))
    }

    /// Row-major superoperator: vec(Λ(X)) = S vec(X), vec index a·d + b.
    pub fn superoperator(&self) -> CMatrix {
        let d = self.dim;
        let scale = c(d as f64, 0.0);
        CMatrix::from_fn(d * d, d * d, |row, col| {
            let (a, b) = (row / d, row % d);
            let (i, j) = (col / d, col % d);
            self.choi[(i * d + a, j * d + b)] * scale
        })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        if self.dim != inner.dim {
            return invalid("cannot compose channels of different dimension");
        }
        let s = self.superoperator() * inner.superoperator();
        Ok(Channel {
            dim: self.dim,
            choi: choi_from_superoperator(self.dim, &s),
        })
    }

    /// ρ ↦ U Λ(ρ) U†.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Channel> {
        if u.nrows() != self.dim || !is_unitary(u, tolerance::HERMITIAN) {
            return invalid("conjugating matrix is not a unitary of matching size");
        }
        let images: Vec<CMatrix> = (0..self.dim * self.dim)
            .map(|k| u * self.image_of_unit(k / self.dim, k % self.dim) * u.adjoint())
            .collect();
        Ok(Channel {
            dim: self.dim,
            choi: choi_from_images(self.dim, &images),
        })
    }

    /// Σ p_i Λ_i in Choi space.
    pub fn convex_combination(weights: &[f64], channels: &[Channel]) -> Result<Channel> {
        check_weights(weights)?;
        if weights.len() != channels.len() || channels.is_empty() {
            return invalid("weights and channels differ in length");
        }
        let dim = channels[0].dim;
        if channels.iter().any(|ch| ch.dim != dim) {
            return invalid("mixed channels differ in dimension");
        }
        let choi = weights
            .iter()
            .zip(channels)
            .fold(CMatrix::zeros(dim * dim, dim * dim), |acc, (&p, ch)| {
                acc + &ch.choi * c(p, 0.0)
            });
        Ok(Channel { dim, choi })
    }

    /// Kraus operators from the Choi eigendecomposition; eigenvalues above the
    /// rank tolerance contribute one operator each.
    pub fn kraus(&self) -> Vec<CMatrix> {
        self.kraus_with_tol(tolerance::KRAUS_RANK)
    }

    pub fn kraus_with_tol(&self, rank_tol: f64) -> Vec<CMatrix> {
        let d = self.dim;
        let eig = hermitian_eig_or_symmetrized(&self.choi);
        let mut ops = Vec::new();
        for (k, &mu) in eig.values.iter().enumerate().rev() {
            if mu <= rank_tol {
                continue;
            }
            let amp = c((d as f64 * mu).sqrt(), 0.0);
            let v = eig.vectors.column(k);
            ops.push(CMatrix::from_fn(d, d, |a, i| v[i * d + a] * amp));
        }
        ops
    }

    /// (r, T) with r_i = ½Tr σ_i Λ(I) and T_ij = ½Tr σ_i Λ(σ_j).
    pub fn bloch(&self) -> Result<BlochAffine> {
        if self.dim != 2 {
            return Err(Error::UnsupportedDimension {
                dim: self.dim,
                context: "Bloch form needs a qubit channel",
            });
        }
        let img_id = self.image_of_unit(0, 0) + self.image_of_unit(1, 1);
        let imgs: Vec<CMatrix> = (1..=3)
            .map(|j| self.apply(&pauli(j)).expect("2x2"))
            .collect();
        let r = RVector3::from_fn(|i, _| 0.5 * (pauli(i + 1) * &img_id).trace().re);
        let t = RMatrix3::from_fn(|i, j| 0.5 * (pauli(i + 1) * &imgs[j]).trace().re);
        Ok(BlochAffine { r, t })
    }
}

fn hermitian_eig_or_symmetrized(a: &CMatrix) -> numerics::HermitianEigen {
    hermitian_eig(a)
        .unwrap_or_else(|_| hermitian_eig(&numerics::hermitian_part(a)).expect("symmetrized"))
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return invalid("mixture weights must be nonnegative");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return invalid(format!("mixture weights sum to {total}, not 1"));
    }
    Ok(())
}

/// Qubit channel in the {I, σ1, σ2, σ3} basis: Λ(I + m·σ)/2 = (I + (r + T m)·σ)/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochAffine {
    pub r: RVector3,
    pub t: RMatrix3,
}

impl BlochAffine {
    pub fn new(r: RVector3, t: RMatrix3) -> BlochAffine {
        BlochAffine { r, t }
    }

    pub fn diagonal(lambda: [f64; 3], r: [f64; 3]) -> BlochAffine {
        BlochAffine {
            r: RVector3::from(r),
            t: RMatrix3::from_diagonal(&RVector3::from(lambda)),
        }
    }

    /// Image of a Bloch vector.
    pub fn apply(&self, m: &RVector3) -> RVector3 {
        self.r + self.t * m
    }

    pub fn to_channel(&self) -> Result<Channel> {
        self.to_channel_with(&Tolerances::default())
    }

    pub fn to_channel_with(&self, tol: &Tolerances) -> Result<Channel> {
        Channel::from_action_with(2, |x| self.action(x), tol)
    }

    pub fn to_channel_unchecked(&self) -> Channel {
        Channel::from_action_unchecked(2, |x| self.action(x))
    }

    fn action(&self, x: &CMatrix) -> CMatrix {
        let tr = x.trace();
        let coords: Vec<C64> = (1..=3).map(|j| (pauli(j) * x).trace()).collect();
        let mut out = pauli(0) * tr;
        for i in 0..3 {
            out += pauli(i + 1) * (tr * self.r[i]);
            let mut s = C64::new(0.0, 0.0);
            for j in 0..3 {
                s += coords[j] * self.t[(i, j)];
            }
            out += pauli(i + 1) * s;
        }
        out * c(0.5, 0.0)
    }
}

/// Orthonormal basis of C^d stored as the columns of a unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    vectors: CMatrix,
}

impl Basis {
    pub fn new(vectors: CMatrix) -> Result<Basis> {
        if !is_unitary(&vectors, tolerance::HERMITIAN) {
            return invalid("basis vectors are not orthonormal");
        }
        Ok(Basis { vectors })
    }

    pub fn computational(d: usize) -> Basis {
        Basis {
            vectors: identity(d),
        }
    }

    /// Eigenbasis of n·σ: first vector has eigenvalue +1. `n` must be a unit
    /// vector within 1e-12.
    pub fn qubit_axis(n: &RVector3) -> Result<Basis> {
        if (n.norm() - 1.0).abs() > 1e-12 {
            return invalid(format!(
                "basis axis must be a unit vector, |n| = {}",
                n.norm()
            ));
        }
        Ok(Self::qubit_axis_unchecked(&n.normalize()))
    }

    /// Like [`Basis::qubit_axis`] but normalizes any nonzero vector.
    pub fn qubit_direction(n: &RVector3) -> Result<Basis> {
        if n.norm() < 1e-12 {
            return invalid("basis direction is the zero vector");
        }
        Ok(Self::qubit_axis_unchecked(&n.normalize()))
    }

    fn qubit_axis_unchecked(n: &RVector3) -> Basis {
        let theta = n.z.clamp(-1.0, 1.0).acos();
        let phi = n.y.atan2(n.x);
        let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let phase = C64::from_polar(1.0, phi);
        let vectors = CMatrix::from_row_slice(
            2,
            2,
            &[c(ch, 0.0), -phase.conj() * sh, phase * sh, c(ch, 0.0)],
        );
        Basis { vectors }
    }

    /// Eigenbasis of σ_k, k ∈ {1, 2, 3}.
    pub fn pauli_eigenbasis(k: usize) -> Basis {
        let mut n = RVector3::zeros();
        n[k - 1] = 1.0;
        Self::qubit_axis_unchecked(&n)
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.vectors
    }

    /// Bloch axis ⟨e₁|σ|e₁⟩ of a qubit basis.
    pub fn bloch_axis(&self) -> Result<RVector3> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension {
                dim: self.dim(),
                context: "Bloch axis needs a qubit basis",
            });
        }
        Ok(numerics::bloch_vector(&self.unit(0, 0)))
    }

    /// |e_i⟩⟨e_j|.
    pub fn unit(&self, i: usize, j: usize) -> CMatrix {
        self.vectors.column(i) * self.vectors.column(j).adjoint()
    }

    /// Matrix elements ⟨e_i|X|e_j⟩.
    pub fn coordinates(&self, x: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * x * &self.vectors
    }

    /// Operator with the given matrix elements in this basis.
    pub fn from_coordinates(&self, x: &CMatrix) -> CMatrix {
        &self.vectors * x * self.vectors.adjoint()
    }
}

/// Column-stochastic matrix: M_ij ≥ 0 and Σ_i M_ij = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    m: RMatrix,
}

impl StochasticMatrix {
    pub fn new(m: RMatrix) -> Result<StochasticMatrix> {
        if !m.is_square() || m.nrows() == 0 {
            return invalid("stochastic matrix must be square and nonempty");
        }
        if let Some(x) = m.iter().find(|&&x| !(x >= -1e-12)) {
            return invalid(format!("stochastic matrix has negative entry {x}"));
        }
        for j in 0..m.ncols() {
            let s: f64 = m.column(j).sum();
            if (s - 1.0).abs() > 1e-10 {
                return invalid(format!("column {j} of stochastic matrix sums to {s}"));
            }
        }
        Ok(StochasticMatrix { m })
    }

    /// [[p, 1-p], [1-p, p]].
    pub fn bistochastic2(p: f64) -> Result<StochasticMatrix> {
        Self::new(RMatrix::from_row_slice(2, 2, &[p, 1.0 - p, 1.0 - p, p]))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.m
    }
}

/// ρ ↦ Σ_ij M_ij |e_i⟩⟨e_j|ρ|e_j⟩⟨e_i|.
pub fn classical_channel(m: &StochasticMatrix, basis: &Basis) -> Result<Channel> {
    let d = m.dim();
    if basis.dim() != d {
        return invalid("stochastic matrix and basis differ in dimension");
    }
    Channel::from_action(d, |x| {
        let coords = basis.coordinates(x);
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            let p: C64 = (0..d).map(|j| coords[(j, j)] * m.matrix()[(i, j)]).sum();
            out[(i, i)] = p;
        }
        basis.from_coordinates(&out)
    })
}

/// U Λ^cl(·) U†.
pub fn generalized_classical_channel(
    m: &StochasticMatrix,
    basis: &Basis,
    u: &CMatrix,
) -> Result<Channel> {
    if u.nrows() != m.dim() || !is_unitary(u, tolerance::HERMITIAN) {
        return invalid("generalized classical map needs a unitary of matching dimension");
    }
    classical_channel(m, basis)?.conjugate(u)
}

/// Qubit channel with Bloch data (r, diag λ), validated for complete
/// positivity.
pub fn pauli_channel(lambda: [f64; 3], r: [f64; 3]) -> Result<Channel> {
    BlochAffine::diagonal(lambda, r).to_channel()
}

/// Δ(ρ) = Σ_i |e_i⟩⟨e_i|ρ|e_i⟩⟨e_i|.
pub fn dephasing_map(rho: &CMatrix, basis: &Basis) -> CMatrix {
    let coords = basis.coordinates(rho);
    let diag = CMatrix::from_fn(coords.nrows(), coords.ncols(), |i, j| {
        if i == j {
            coords[(i, i)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    basis.from_coordinates(&diag)
}

pub fn dephasing_channel(basis: &Basis) -> Channel {
    Channel::from_action_unchecked(basis.dim(), |x| dephasing_map(x, basis))
}

/// Ω∘Δ = Δ∘Ω, checked on every matrix unit (sufficient by linearity).
pub fn is_dio(ch: &Channel, basis: &Basis) -> Verdict {
    is_dio_with(ch, basis, &Tolerances::default())
}

pub fn is_dio_with(ch: &Channel, basis: &Basis, tol: &Tolerances) -> Verdict {
    let d = ch.dim();
    let mut worst = 0.0;
    let mut at = (0, 0);
    for i in 0..d {
        for j in 0..d {
            let e = matrix_unit(d, i, j);
            let lhs = ch
                .apply(&dephasing_map(&e, basis))
                .expect("dimensions checked");
            let rhs = dephasing_map(&ch.apply(&e).expect("dimensions checked"), basis);
            let gap = numerics::trace_norm(&(lhs - rhs));
            if gap > worst {
                worst = gap;
                at = (i, j);
            }
        }
    }
    let witness = WitnessPoint {
        time: None,
        direction: None,
        detail: Some(format!("matrix unit E_{}{}", at.0 + 1, at.1 + 1)),
    };
    Verdict::single(worst, tol.structure, Some(witness))
}

/// Σ_{i≠j} |ρ_ij| in the given basis.
pub fn l1_coherence(rho: &CMatrix, basis: &Basis) -> f64 {
    let coords = basis.coordinates(rho);
    let mut total = 0.0;
    for i in 0..coords.nrows() {
        for j in 0..coords.ncols() {
            if i != j {
                total += coords[(i, j)].norm();
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{kron, qubit_state, I};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn identity_choi_is_maximally_entangled() {
        let id = Channel::from_kraus(&[identity(2)]).unwrap();
        let mut phi = CMatrix::zeros(4, 1);
        phi[(0, 0)] = c(1.0 / 2f64.sqrt(), 0.0);
        phi[(3, 0)] = c(1.0 / 2f64.sqrt(), 0.0);
        assert!(close(id.choi(), &(&phi * phi.adjoint()), 1e-12));
    }

    #[test]
    fn dephasing_choi() {
        let ch = Channel::from_kraus(&[matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]).unwrap();
        let expected = (kron(&matrix_unit(2, 0, 0), &matrix_unit(2, 0, 0))
            + kron(&matrix_unit(2, 1, 1), &matrix_unit(2, 1, 1)))
            * c(0.5, 0.0);
        assert!(close(ch.choi(), &expected, 1e-12));
    }

    #[test]
    fn phase_flip_bloch() {
        let p: f64 = 0.75;
        let ch = Channel::from_kraus(&[
            identity(2) * c(p.sqrt(), 0.0),
            pauli(3) * c((1.0 - p).sqrt(), 0.0),
        ])
        .unwrap();
        let b = ch.bloch().unwrap();
        assert!(b.r.norm() < 1e-12);
        assert!(
            (b.t - RMatrix3::from_diagonal(&RVector3::new(0.5, 0.5, 1.0)))
                .abs()
                .max()
                < 1e-12
        );
    }

    #[test]
    fn kraus_completeness_is_enforced() {
        let err = Channel::from_kraus(&[identity(2) * c(0.9, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn kraus_extraction() {
        assert_eq!(Channel::identity(2).kraus().len(), 1);
        let deph = dephasing_channel(&Basis::computational(2));
        let ops = deph.kraus();
        assert_eq!(ops.len(), 2);
        let back = Channel::from_kraus(&ops).unwrap();
        assert!(close(back.choi(), deph.choi(), 1e-9));
    }

    #[test]
    fn kraus_round_trip_random_two_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let ch = sampling::random_channel(&mut rng, 4);
            let back = Channel::from_kraus(&ch.kraus()).unwrap();
            assert!(close(back.choi(), ch.choi(), 1e-9));
        }
    }

    #[test]
    fn bloch_examples() {
        let b = Channel::identity(2).bloch().unwrap();
        assert!(b.r.norm() < 1e-14 && (b.t - RMatrix3::identity()).abs().max() < 1e-14);

        let lam = 0.37;
        let b = pauli_channel([lam; 3], [0.0; 3]).unwrap().bloch().unwrap();
        assert!((b.t - RMatrix3::identity() * lam).abs().max() < 1e-14);

        let m = StochasticMatrix::bistochastic2(0.75).unwrap();
        let b = classical_channel(&m, &Basis::pauli_eigenbasis(3))
            .unwrap()
            .bloch()
            .unwrap();
        assert!(b.r.norm() < 1e-14);
        assert!(
            (b.t - RMatrix3::from_diagonal(&RVector3::new(0.0, 0.0, 0.5)))
                .abs()
                .max()
                < 1e-14
        );

        assert!(matches!(
            Channel::identity(3).bloch(),
            Err(Error::UnsupportedDimension { dim: 3, .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = sampling::random_state(&mut rng, 2);
        assert!(close(
            &Channel::identity(2).apply(&rho).unwrap(),
            &rho,
            1e-14
        ));

        let deph = dephasing_channel(&Basis::computational(2));
        assert!(max_abs(&deph.apply(&pauli(1)).unwrap()) < 1e-14);

        let dep = pauli_channel([0.5; 3], [0.0; 3]).unwrap();
        let out = dep.apply(&matrix_unit(2, 0, 0)).unwrap();
        assert!(close(
            &out,
            &CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                c(0.75, 0.0),
                c(0.25, 0.0)
            ])),
            1e-14
        ));

        assert!(dep.apply(&identity(3)).is_err());
    }

    #[test]
    fn classical_channel_examples() {
        let deph = classical_channel(
            &StochasticMatrix::new(RMatrix::identity(2, 2)).unwrap(),
            &Basis::computational(2),
        )
        .unwrap();
        assert!(close(
            deph.choi(),
            dephasing_channel(&Basis::computational(2)).choi(),
            1e-14
        ));

        let eps = 0.01;
        for t in [0.0, 0.7, 2.5] {
            let m11 = 0.75 + (1.0 - eps) / 4.0 * f64::cos(t);
            let ch = classical_channel(
                &StochasticMatrix::bistochastic2(m11).unwrap(),
                &Basis::pauli_eigenbasis(3),
            )
            .unwrap();
            let z = ch.bloch().unwrap().t[(2, 2)];
            assert!((z - (0.5 + (1.0 - eps) / 2.0 * t.cos())).abs() < 1e-14);
        }
    }

    #[test]
    fn classical_outputs_are_diagonal_in_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let d = 3;
            let basis = sampling::random_basis(&mut rng, d);
            let ch = classical_channel(&sampling::random_stochastic(&mut rng, d), &basis).unwrap();
            let out = basis.coordinates(&ch.apply(&sampling::random_state(&mut rng, d)).unwrap());
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        assert!(out[(i, j)].norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn generalized_classical_examples() {
        let m = StochasticMatrix::bistochastic2(0.8).unwrap();
        let b = Basis::computational(2);
        let plain = classical_channel(&m, &b).unwrap();
        let same = generalized_classical_channel(&m, &b, &identity(2)).unwrap();
        assert!(close(plain.choi(), same.choi(), 1e-14));

        let h = (pauli(1) + pauli(3)) * c(1.0 / 2f64.sqrt(), 0.0);
        let id = StochasticMatrix::new(RMatrix::identity(2, 2)).unwrap();
        let x_dephase = generalized_classical_channel(&id, &b, &h).unwrap();
        // H Δ_z(H ρ H) H = Δ_x(ρ)
        let pre = Channel::identity(2).conjugate(&h).unwrap();
        let expected = dephasing_channel(&Basis::pauli_eigenbasis(1));
        assert!(close(
            x_dephase.compose(&pre).unwrap().choi(),
            expected.choi(),
            1e-12
        ));
        let out = x_dephase
            .apply(&qubit_state(&RVector3::new(0.3, -0.2, 0.5)))
            .unwrap();
        assert!(close(&expected.apply(&out).unwrap(), &out, 1e-12));

        assert!(generalized_classical_channel(&m, &b, &(identity(2) * c(2.0, 0.0))).is_err());
    }

    #[test]
    fn pauli_channel_validation() {
        let id = pauli_channel([1.0; 3], [0.0; 3]).unwrap();
        assert!(close(id.choi(), Channel::identity(2).choi(), 1e-14));

        let ex3 = pauli_channel([0.75, 0.75, 0.5625], [0.0, 0.0, 0.4375]).unwrap();
        assert!(ex3.residuals().min_eigenvalue > -1e-12);

        match pauli_channel([1.0, 1.0, -1.0], [0.0; 3]) {
            Err(Error::NotCptp { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue + 0.5).abs() < 1e-12)
            }
            other => panic!("expected CPTP violation, got {other:?}"),
        }
    }

    #[test]
    fn dephasing_examples() {
        let b = Basis::computational(2);
        let diag = qubit_state(&RVector3::new(0.0, 0.0, 0.3));
        assert!(close(&dephasing_map(&diag, &b), &diag, 1e-15));
        assert!(max_abs(&dephasing_map(&pauli(1), &b)) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let basis = sampling::random_basis(&mut rng, 3);
            let rho = sampling::random_state(&mut rng, 3);
            let once = dephasing_map(&rho, &basis);
            assert!(close(&dephasing_map(&once, &basis), &once, 1e-12));
        }
    }

    #[test]
    fn dio_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let b = sampling::random_basis(&mut rng, 2);
            assert!(is_dio(&dephasing_channel(&b), &b).passed());
            assert!(is_dio(&pauli_channel([0.3; 3], [0.0; 3]).unwrap(), &b).passed());
        }
        let angle = std::f64::consts::PI / 8.0;
        let u = identity(2) * c(angle.cos(), 0.0) - pauli(1) * (I * angle.sin());
        let rot = Channel::identity(2).conjugate(&u).unwrap();
        let v = is_dio(&rot, &Basis::computational(2));
        assert!(v.failed());
        assert!(v.witness_point.is_some());
    }

    #[test]
    fn coherence_examples() {
        let b = Basis::computational(2);
        assert_eq!(
            l1_coherence(&qubit_state(&RVector3::new(0.0, 0.0, 0.4)), &b),
            0.0
        );
        assert!(
            (l1_coherence(&qubit_state(&RVector3::new(1.0, 0.0, 0.0)), &b) - 1.0).abs() < 1e-15
        );
        for alpha in [-0.8, 0.3] {
            let rho = qubit_state(&RVector3::new(alpha, 0.0, 0.0));
            assert!((l1_coherence(&rho, &b) - f64::abs(alpha)).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_axes() {
        for k in 1..=3 {
            let b = Basis::pauli_eigenbasis(k);
            let mut n = RVector3::zeros();
            n[k - 1] = 1.0;
            assert!((b.bloch_axis().unwrap() - n).norm() < 1e-14);
        }
        assert!(Basis::qubit_axis(&RVector3::new(1.0, 1.0, 0.0)).is_err());
        let n = RVector3::new(-0.2, 0.5, -0.7).normalize();
        assert!((Basis::qubit_axis(&n).unwrap().bloch_axis().unwrap() - n).norm() < 1e-12);
        let down = Basis::qubit_axis(&RVector3::new(0.0, 0.0, -1.0)).unwrap();
        assert!((down.bloch_axis().unwrap() - RVector3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn stochastic_validation() {
        assert!(
            StochasticMatrix::new(RMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.4])).is_ok()
        );
        assert!(
            StochasticMatrix::new(RMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.6, 0.4])).is_err()
        );
        assert!(
            StochasticMatrix::new(RMatrix::from_row_slice(2, 2, &[1.1, 0.0, -0.1, 1.0])).is_err()
        );
        assert!(StochasticMatrix::new(RMatrix::from_row_slice(
            2,
            2,
            &[1.0 + 1e-13, 0.0, -1e-13, 1.0]
        ))
        .is_ok());
    }
}

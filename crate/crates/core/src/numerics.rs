//! Small dense linear algebra and calculus helpers.
//!
//! Everything here works on `nalgebra` dynamic matrices. Dimensions in the hot
//! path are tiny (qubit channels, two-qubit Choi matrices), so no attempt is
//! made at blocking or specialization.

use nalgebra::{ComplexField, DMatrix, Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tolerance;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RMatrix3 = Matrix3<f64>;
pub type RMatrix2 = Matrix2<f64>;
pub type RVector3 = Vector3<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Matrix unit |k⟩⟨l|.
pub fn matrix_unit(d: usize, k: usize, l: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(k, l)] = C64::new(1.0, 0.0);
    m
}

/// Pauli matrix σ_k for k = 1, 2, 3; k = 0 gives the identity.
pub fn pauli(k: usize) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    match k {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        3 => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// (I + m·σ)/2.
pub fn qubit_state(m: &RVector3) -> CMatrix {
    let mut rho = pauli(0);
    for k in 0..3 {
        rho += pauli(k + 1) * C64::new(m[k], 0.0);
    }
    rho * C64::new(0.5, 0.0)
}

/// Bloch vector (Tr σ_k ρ)_k of a 2×2 operator (real parts).
pub fn bloch_vector(rho: &CMatrix) -> RVector3 {
    RVector3::from_fn(|k, _| (pauli(k + 1) * rho).trace().re)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn max_abs<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && max_abs(&(u.adjoint() * u - identity(u.nrows()))) <= tol
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

pub fn rmatrix3(a: &RMatrix) -> RMatrix3 {
    RMatrix3::from_fn(|i, j| a[(i, j)])
}

pub fn dyn3(a: &RMatrix3) -> RMatrix {
    RMatrix::from_fn(3, 3, |i, j| a[(i, j)])
}

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

/// Spectral decomposition of a Hermitian matrix with the default tolerance.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with_tol(a, tolerance::HERMITIAN)
}

pub fn hermitian_eig_with_tol(a: &CMatrix, tol: f64) -> Result<HermitianEigen> {
    if !a.is_square() {
        return invalid(format!(
            "eigendecomposition of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        ));
    }
    let deviation = hermitian_deviation(a);
    if deviation > tol {
        return Err(Error::NonHermitian { deviation });
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), a.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of the Hermitian part, ascending. Used where the input is
/// Hermitian only up to accumulated rounding.
pub fn hermitian_part_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Ascending eigenvalues and matching eigenvectors of a real symmetric matrix.
pub fn symmetric_eig(a: &RMatrix) -> (Vec<f64>, RMatrix) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = RMatrix::from_fn(a.nrows(), a.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Largest eigenvalue of a real symmetric matrix and a unit eigenvector.
pub fn max_eigenpair(a: &RMatrix) -> (f64, Vec<f64>) {
    let (values, vectors) = symmetric_eig(a);
    let k = values.len() - 1;
    (values[k], vectors.column(k).iter().copied().collect())
}

/// Thin singular value decomposition A = U Σ V† with Σ descending.
#[derive(Clone, Debug)]
pub struct Svd<T: ComplexField<RealField = f64>> {
    pub u: DMatrix<T>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64>> Svd<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        let k = self.singular_values.len();
        let sigma = DMatrix::<T>::from_fn(k, k, |i, j| {
            if i == j {
                T::from_real(self.singular_values[i])
            } else {
                T::zero()
            }
        });
        &self.u * sigma * self.v.adjoint()
    }
}

pub fn svd<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(m, 0),
            singular_values: vec![],
            v: DMatrix::zeros(n, 0),
        };
    }
    // nalgebra's bidiagonal SVD occasionally returns a wrong factorization for
    // rank-deficient input when U and V are requested. Each attempt is checked
    // by reconstruction; one-sided Jacobi is the fallback.
    let accept = 1e-12 * max_abs(a).max(f64::MIN_POSITIVE) * (m + n) as f64;
    let direct = svd_attempt(a);
    if max_abs(&(direct.reconstruct() - a)) <= accept {
        return direct;
    }
    let adjoint = swap_factors(svd_attempt(&a.adjoint()));
    if max_abs(&(adjoint.reconstruct() - a)) <= accept {
        return adjoint;
    }
    if m >= n {
        jacobi_svd(a)
    } else {
        swap_factors(jacobi_svd(&a.adjoint()))
    }
}

/// One-sided (Hestenes) Jacobi SVD of a tall matrix, descending order, with U
/// completed to orthonormal columns where singular values vanish.
fn jacobi_svd<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w
                    .column(p)
                    .iter()
                    .map(|z| z.clone().modulus_squared())
                    .sum();
                let beta: f64 = w
                    .column(q)
                    .iter()
                    .map(|z| z.clone().modulus_squared())
                    .sum();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.clone().modulus();
                if !(g > 1e-15 * (alpha * beta).sqrt()) || g == 0.0 {
                    continue;
                }
                rotated = true;
                // Rotate the phase of column q so that the overlap is real.
                let phase = gamma.conjugate() * T::from_real(1.0 / g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let xp = mat[(r, p)].clone();
                        let xq = mat[(r, q)].clone() * phase.clone();
                        mat[(r, p)] = xp.clone() * T::from_real(cs) - xq.clone() * T::from_real(sn);
                        mat[(r, q)] = xp * T::from_real(sn) + xq * T::from_real(cs);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let top = norms[order[0]].max(f64::MIN_POSITIVE);
    let mut u = DMatrix::<T>::zeros(m, n);
    let mut filled = 0;
    for (c, &j) in order.iter().enumerate() {
        if norms[j] > 1e-14 * top {
            u.set_column(c, &(w.column(j) * T::from_real(1.0 / norms[j])));
            filled = c + 1;
        }
    }
    // Complete U from the standard basis by Gram-Schmidt.
    let mut e = 0;
    while filled < n && e < m {
        let mut x = DMatrix::<T>::zeros(m, 1);
        x[(e, 0)] = T::one();
        for c in 0..filled {
            let proj = u.column(c).dotc(&x.column(0));
            x -= u.column(c) * proj;
        }
        let nx = x.norm();
        if nx > 1e-8 {
            u.set_column(filled, &(x.column(0) * T::from_real(1.0 / nx)));
            filled += 1;
        }
        e += 1;
    }
    let singular_values = order
        .iter()
        .map(|&j| {
            if norms[j] > 1e-14 * top {
                norms[j]
            } else {
                0.0
            }
        })
        .collect();
    let v = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])].clone());
    Svd {
        u,
        singular_values,
        v,
    }
}

fn swap_factors<T: ComplexField<RealField = f64>>(dec: Svd<T>) -> Svd<T> {
    Svd {
        u: dec.v,
        singular_values: dec.singular_values,
        v: dec.u,
    }
}

fn svd_attempt<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    let k = m.min(n);
    let dec = a.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let singular_values = order
        .iter()
        .map(|&i| dec.singular_values[i].max(0.0))
        .collect();
    let u = DMatrix::from_fn(m, k, |r, c| u[(r, order[c])].clone());
    let v = DMatrix::from_fn(n, k, |r, c| v_t[(order[c], r)].clone().conjugate());
    Svd {
        u,
        singular_values,
        v,
    }
}

pub fn singular_values<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Vec<f64> {
    svd(a).singular_values
}

/// Sum of singular values.
pub fn trace_norm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    singular_values(a).iter().sum()
}

/// Largest singular value.
pub fn operator_norm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn trace_norm3(a: &RMatrix3) -> f64 {
    trace_norm(&dyn3(a))
}

pub fn operator_norm3(a: &RMatrix3) -> f64 {
    operator_norm(&dyn3(a))
}

/// Orthogonal factor O = U Vᵀ of the polar decomposition T = O P.
///
/// For singular T the factor is not unique. The column of U belonging to the
/// smallest singular value is flipped when needed so that det O = +1 in that
/// case; any completion gives Tr(Oᵀ T) = ‖T‖₁.
pub fn polar_orthogonal(t: &RMatrix) -> Result<RMatrix> {
    if !t.is_square() {
        return invalid(format!(
            "polar decomposition of a {}x{} matrix",
            t.nrows(),
            t.ncols()
        ));
    }
    let n = t.nrows();
    if n == 0 {
        return Ok(RMatrix::zeros(0, 0));
    }
    let dec = svd(t);
    let mut u = dec.u.clone();
    let largest = dec.singular_values[0];
    let smallest = dec.singular_values[n - 1];
    let singular = smallest <= 1e-12 * largest.max(1e-300);
    let mut o = &u * dec.v.transpose();
    if singular && o.determinant() < 0.0 {
        for r in 0..n {
            u[(r, n - 1)] = -u[(r, n - 1)];
        }
        o = &u * dec.v.transpose();
    }
    Ok(o)
}

pub fn polar_orthogonal3(t: &RMatrix3) -> RMatrix3 {
    rmatrix3(&polar_orthogonal(&dyn3(t)).expect("3x3 is square"))
}

/// Uniform time grid with at least three samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    t_start: f64,
    t_end: f64,
    #[serde(default = "default_samples")]
    n_samples: usize,
}

fn default_samples() -> usize {
    1001
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        TimeGrid::new(raw.t_start, raw.t_end, raw.n_samples)
    }
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() {
            return invalid("grid bounds must be finite");
        }
        if t_end <= t_start {
            return invalid(format!("grid end {t_end} must exceed start {t_start}"));
        }
        if n_samples < 3 {
            return invalid(format!("grid needs at least 3 samples, got {n_samples}"));
        }
        Ok(Self {
            t_start,
            t_end,
            n_samples,
        })
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_samples - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_samples {
            self.t_end
        } else {
            self.t_start + i as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.time(i)).collect()
    }

    fn slack(&self) -> f64 {
        1e-9 * self.step()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start - self.slack() && t <= self.t_end + self.slack()
    }

    /// Index of the grid point equal to `t` (up to a tiny fraction of a step).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if !self.contains(t) {
            return None;
        }
        let x = (t - self.t_start) / self.step();
        let i = x.round();
        if (x - i).abs() * self.step() <= self.slack() {
            Some((i as usize).min(self.n_samples - 1))
        } else {
            None
        }
    }

    /// True when every point of `other` lies on this grid.
    pub fn contains_grid(&self, other: &TimeGrid) -> bool {
        other.times().iter().all(|&t| self.index_of(t).is_some())
    }
}

/// Finite-difference stencil selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Central,
    Forward,
    Backward,
}

/// Second-order derivative estimate of `f` at `t` on the closed interval
/// `domain`: central difference when t ± h fits, otherwise the one-sided
/// second-order stencil pointing into the domain.
pub fn central_diff<F>(f: F, t: f64, h: f64, domain: (f64, f64)) -> Result<(RMatrix, Stencil)>
where
    F: Fn(f64) -> Result<RMatrix>,
{
    let (a, b) = domain;
    let slack = 1e-12 * (b - a).abs().max(1.0);
    if !(t >= a - slack && t <= b + slack) {
        return Err(Error::OffGrid {
            t,
            start: a,
            end: b,
        });
    }
    if !(h > 0.0) || 2.0 * h > b - a {
        return invalid(format!("step {h} does not fit the domain [{a}, {b}]"));
    }
    if t - h >= a - slack && t + h <= b + slack {
        Ok((diff_with(&f, t, h, Stencil::Central)?, Stencil::Central))
    } else if t - h < a - slack {
        Ok((diff_with(&f, t, h, Stencil::Forward)?, Stencil::Forward))
    } else {
        Ok((diff_with(&f, t, h, Stencil::Backward)?, Stencil::Backward))
    }
}

/// Evaluate a specific stencil without domain checks.
pub fn diff_with<F>(f: &F, t: f64, h: f64, stencil: Stencil) -> Result<RMatrix>
where
    F: Fn(f64) -> Result<RMatrix>,
{
    Ok(match stencil {
        Stencil::Central => (f(t + h)? - f(t - h)?) / (2.0 * h),
        Stencil::Forward => (f(t)? * -3.0 + f(t + h)? * 4.0 - f(t + 2.0 * h)?) / (2.0 * h),
        Stencil::Backward => (f(t)? * 3.0 - f(t - h)? * 4.0 + f(t - 2.0 * h)?) / (2.0 * h),
    })
}

/// Same stencils on tabulated samples with spacing `h`.
pub fn diff_samples(samples: &[RMatrix], i: usize, h: f64, stencil: Stencil) -> Option<RMatrix> {
    let n = samples.len();
    match stencil {
        Stencil::Central if i >= 1 && i + 1 < n => {
            Some((&samples[i + 1] - &samples[i - 1]) / (2.0 * h))
        }
        Stencil::Forward if i + 2 < n => {
            Some((&samples[i] * -3.0 + &samples[i + 1] * 4.0 - &samples[i + 2]) / (2.0 * h))
        }
        Stencil::Backward if i >= 2 => {
            Some((&samples[i] * 3.0 - &samples[i - 1] * 4.0 + &samples[i - 2]) / (2.0 * h))
        }
        _ => None,
    }
}

/// Composite Simpson rule with `n` panels (rounded up to even).
pub fn quadrature<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, n: usize) -> Result<f64> {
    if a > b {
        return invalid(format!("quadrature bounds reversed: {a} > {b}"));
    }
    if n < 2 {
        return invalid(format!("quadrature needs at least 2 panels, got {n}"));
    }
    if a == b {
        return Ok(0.0);
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = g(a) + g(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * g(a + k as f64 * h);
    }
    Ok(sum * h / 3.0)
}

/// Simpson quadrature with panel boundaries snapped to `breakpoints`, so
/// piecewise-smooth integrands keep full order. Each smooth piece gets `n`
/// panels; integrands are evaluated one-sidedly at the breaks.
pub fn quadrature_piecewise<G: Fn(f64) -> f64>(
    g: G,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    n: usize,
) -> Result<f64> {
    if a > b {
        return invalid(format!("quadrature bounds reversed: {a} > {b}"));
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // Evaluate strictly inside each piece at its ends so a jump at a
        // breakpoint is attributed to the correct side.
        let shrink = 1e-15 * (hi - lo).abs().max(1.0);
        let inner = |x: f64| g(x.clamp(lo + shrink, hi - shrink));
        total += quadrature(inner, lo, hi, n)?;
    }
    Ok(total)
}

/// Real orthogonal frame whose third column is the unit vector `n`; the first
/// two columns are rotated by `angle` about `n`.
pub fn frame_with_axis(n: &RVector3, angle: f64) -> RMatrix3 {
    let n = n.normalize();
    let helper = if n.x.abs() < 0.9 {
        RVector3::x()
    } else {
        RVector3::y()
    };
    let u = (helper - n * n.dot(&helper)).normalize();
    let v = n.cross(&u);
    let (s, c) = angle.sin_cos();
    let e1 = u * c + v * s;
    let e2 = -u * s + v * c;
    RMatrix3::from_columns(&[e1, e2, n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rdiag(v: &[f64]) -> RMatrix {
        RMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    fn assert_valid_svd<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, dec: &Svd<T>) {
        assert!(max_abs(&(dec.reconstruct() - a)) < 1e-12);
        let k = dec.singular_values.len();
        assert!(max_abs(&(dec.u.adjoint() * &dec.u - DMatrix::<T>::identity(k, k))) < 1e-12);
        assert!(max_abs(&(dec.v.adjoint() * &dec.v - DMatrix::<T>::identity(k, k))) < 1e-12);
        assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_svd_on_random_and_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            for rank in 0..=n {
                let g =
                    sampling::ginibre(&mut rng, n + 1, rank) * sampling::ginibre(&mut rng, rank, n);
                let dec = jacobi_svd(&g);
                assert_valid_svd(&g, &dec);
                let reference = g.clone().svd(false, false).singular_values;
                let mut sorted: Vec<f64> = reference.iter().copied().collect();
                sorted.sort_by(|a, b| b.total_cmp(a));
                for (x, y) in dec.singular_values.iter().zip(&sorted) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn svd_survives_rank_one_input() {
        // Rank-one 3x3 on which the bidiagonal routine reconstructs badly.
        let t = RMatrix::from_row_slice(
            3,
            3,
            &[
                -2.330770343905858e-4,
                -8.243284400534217e-3,
                -4.38997829875555e-2,
                -2.439944599557738e-3,
                -8.629403282177181e-2,
                -4.595606714419885e-1,
                2.1659414444357957e-3,
                7.660330571852213e-2,
                4.0795250215491224e-1,
            ],
        );
        let dec = svd(&t);
        assert_valid_svd(&t, &dec);
        assert!((dec.singular_values[0] - 0.6268507182250583).abs() < 1e-12);
    }

    #[test]
    fn eig_of_diagonal_and_pauli() {
        let a = to_complex(&rdiag(&[1.0, -1.0]));
        let e = hermitian_eig(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((e.vectors[(0, 1)].norm() - 1.0).abs() < 1e-12);

        let e = hermitian_eig(&pauli(1)).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = sampling::random_hermitian(&mut rng, 4);
            let e = hermitian_eig(&h).unwrap();
            let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                4,
                e.values.iter().map(|&x| c(x, 0.0)),
            ));
            let back = &e.vectors * lam * e.vectors.adjoint();
            assert!(max_abs(&(back - &h)) < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = pauli(1);
        a[(0, 1)] = c(2.0, 0.0);
        assert!(matches!(hermitian_eig(&a), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn svd_examples() {
        assert_eq!(singular_values(&rdiag(&[2.0, 1.0])), vec![2.0, 1.0]);
        let s = singular_values(&rdiag(&[1.0, -1.0]));
        assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
        let a = RMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let d = svd(&a);
        assert!(d.singular_values.iter().all(|x| (x - 1.0).abs() < 1e-12));
        assert!(max_abs(&(d.reconstruct() - a)) < 1e-12);
    }

    #[test]
    fn polar_examples() {
        let o = polar_orthogonal(&rdiag(&[2.0, -1.0])).unwrap();
        assert!(max_abs(&(o - rdiag(&[1.0, -1.0]))) < 1e-12);
        let o = polar_orthogonal(&RMatrix::identity(3, 3)).unwrap();
        assert!(max_abs(&(o - RMatrix::identity(3, 3))) < 1e-12);
        assert!(polar_orthogonal(&RMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn polar_singular_has_positive_determinant() {
        let t = rdiag(&[2.0, -1.0, 0.0]);
        let o = polar_orthogonal(&t).unwrap();
        assert!((o.determinant() - 1.0).abs() < 1e-12);
        assert!(((o.transpose() * &t).trace() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn norms() {
        assert!((trace_norm(&pauli(3)) - 2.0).abs() < 1e-14);
        assert_eq!(trace_norm(&RMatrix::zeros(3, 3)), 0.0);
        assert!((trace_norm(&rdiag(&[0.3, -0.5, 0.7])) - 1.5).abs() < 1e-14);
        assert!((operator_norm(&pauli(1)) - 1.0).abs() < 1e-14);
        assert!((operator_norm(&rdiag(&[3.0, 1.0])) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn operator_norm_bounded_below_by_sampling() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = RMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let norm = operator_norm(&a);
        let mut best: f64 = 0.0;
        for _ in 0..10_000 {
            let v = sampling::random_unit_vector(&mut rng);
            best = best.max((rmatrix3(&a) * v).norm());
        }
        assert!(best <= norm + 1e-12);
        assert!(
            norm - best < 1e-2,
            "sampling should get close: {norm} vs {best}"
        );
    }

    #[test]
    fn central_diff_examples() {
        let sq = |t: f64| Ok(RMatrix::identity(2, 2) * (t * t));
        let (d, st) = central_diff(sq, 1.0, 1e-5, (0.0, 2.0)).unwrap();
        assert_eq!(st, Stencil::Central);
        assert!(max_abs(&(d - RMatrix::identity(2, 2) * 2.0)) < 1e-8);

        let constant = |_t: f64| Ok(RMatrix::identity(2, 2));
        let (d, _) = central_diff(constant, 0.5, 1e-5, (0.0, 1.0)).unwrap();
        assert!(max_abs(&d) < 1e-12);

        let sine = |t: f64| Ok(RMatrix::identity(2, 2) * t.sin());
        let (d, _) = central_diff(sine, 0.0, 1e-5, (-1.0, 1.0)).unwrap();
        assert!(max_abs(&(d - RMatrix::identity(2, 2))) < 1e-8);
    }

    #[test]
    fn central_diff_endpoints_and_errors() {
        let sq = |t: f64| Ok(RMatrix::identity(1, 1) * (t * t));
        let (d, st) = central_diff(sq, 0.0, 1e-3, (0.0, 1.0)).unwrap();
        assert_eq!(st, Stencil::Forward);
        assert!(d[(0, 0)].abs() < 1e-10);
        let (d, st) = central_diff(sq, 1.0, 1e-3, (0.0, 1.0)).unwrap();
        assert_eq!(st, Stencil::Backward);
        assert!((d[(0, 0)] - 2.0).abs() < 1e-10);
        assert!(matches!(
            central_diff(sq, 1.5, 1e-3, (0.0, 1.0)),
            Err(Error::OffGrid { .. })
        ));
    }

    #[test]
    fn central_diff_cubic_error_is_second_order() {
        for &h in &[1e-3, 1e-4, 1e-5] {
            let cubic = |t: f64| Ok(RMatrix::from_element(1, 1, t * t * t - 2.0 * t));
            let (d, _) = central_diff(cubic, 0.7, h, (0.0, 2.0)).unwrap();
            let exact = 3.0 * 0.49 - 2.0;
            assert!((d[(0, 0)] - exact).abs() <= 10.0 * h * h, "h={h}");
        }
    }

    #[test]
    fn simpson_examples() {
        assert_eq!(quadrature(|_| 1.0, 0.0, 1.0, 2).unwrap(), 1.0);
        let g = |t: f64| 2.0 * t * t - 6.0 * t + 4.0;
        assert!((quadrature(g, 0.0, 1.0, 8).unwrap() - 5.0 / 3.0).abs() < 1e-10);
        assert!((quadrature(g, 0.0, 2.0, 8).unwrap() - 4.0 / 3.0).abs() < 1e-10);
        assert!(quadrature(g, 1.0, 0.0, 8).is_err());
        assert!(quadrature(g, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn simpson_piecewise_respects_jumps() {
        let step = |t: f64| if t < 1.0 { 0.0 } else { 1.0 };
        let v = quadrature_piecewise(step, 0.0, 2.5, &[1.0], 4).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn grid_basics() {
        let g = TimeGrid::new(0.0, 1.0, 11).unwrap();
        assert!((g.step() - 0.1).abs() < 1e-15);
        assert_eq!(g.time(10), 1.0);
        assert_eq!(g.index_of(0.3), Some(3));
        assert_eq!(g.index_of(0.35), None);
        assert!(TimeGrid::new(0.0, 1.0, 2).is_err());
        assert!(TimeGrid::new(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn frames_are_orthogonal() {
        let n = RVector3::new(0.3, -0.4, 0.5).normalize();
        for angle in [0.0, 1.1] {
            let r = frame_with_axis(&n, angle);
            assert!((r.transpose() * r - RMatrix3::identity()).abs().max() < 1e-12);
            assert!((r.column(2) - n).norm() < 1e-12);
        }
    }
}

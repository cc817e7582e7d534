//! Memory-character checks on a time grid: no information backflow,
//! CP-divisibility, elementary maps (and their block-diagonal refinements),
//! coherence monotonicity and DIO precomposition.
//!
//! Every verdict means "holds at every grid point within tolerance". Qubit
//! checks are exact up to finite differences; d > 2 backflow and elementary
//! checks sample random difference directions and are tagged `sampled`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{self, Basis, Channel};
use crate::dynamics::{gram_of_t, Derivative, DynamicalMap, UnitaryFamily};
use crate::error::{invalid, Error, Result};
use crate::numerics::{
    self, frame_with_axis, max_abs, rmatrix3, singular_values, symmetric_eig, CMatrix, RMatrix,
    RMatrix2, RMatrix3, RVector3,
};
use crate::sampling;
use crate::tolerance::Tolerances;
use crate::verdict::{PointMargin, Status, Verdict, WitnessPoint};

/// Fixed seed so sampled verdicts are reproducible.
pub const SAMPLE_SEED: u64 = 0x5eed_0b1f;

/// Largest ‖T(t)‖_op over the grid; the derivative tolerances scale with it.
pub fn qubit_scale(map: &DynamicalMap) -> Result<f64> {
    let norms: Vec<f64> = (0..map.grid().len())
        .into_par_iter()
        .map(|i| Ok(numerics::operator_norm3(&map.at_index(i)?.bloch()?.t)))
        .collect::<Result<_>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

fn derivative_tolerance(map: &DynamicalMap, tol: &Tolerances) -> Result<(f64, f64)> {
    let scale = if map.dim() == 2 {
        qubit_scale(map)?
    } else {
        1.0
    };
    Ok((tol.derivative * scale, tol.kink * scale.max(1e-12)))
}

/// Margin of one grid point from its finite-difference estimates. When the
/// one-sided estimates disagree beyond `kink` the point is treated as
/// non-differentiable: pass if both sides pass, fail if both fail,
/// indeterminate otherwise.
fn assess<F>(d: &Derivative, margin_of: F, tol: f64, kink: f64) -> (f64, Status, Option<Vec<f64>>)
where
    F: Fn(&RMatrix) -> (f64, Option<Vec<f64>>),
{
    if let (Some(fw), Some(bw)) = (&d.forward, &d.backward) {
        if max_abs(&(fw - bw)) > kink {
            let (mf, df) = margin_of(fw);
            let (mb, db) = margin_of(bw);
            let status = match (mf <= tol, mb <= tol) {
                (true, true) => Status::Pass,
                (false, false) => Status::Fail,
                _ => Status::Indeterminate,
            };
            let (m, dir) = if mf >= mb { (mf, df) } else { (mb, db) };
            return (m, status, dir);
        }
    }
    let (m, dir) = margin_of(&d.central);
    (m, if m <= tol { Status::Pass } else { Status::Fail }, dir)
}

fn fold(
    map: &DynamicalMap,
    derivs: &[Derivative],
    tol: f64,
    kink: f64,
    margin_of: impl Fn(&RMatrix) -> (f64, Option<Vec<f64>>),
) -> Verdict {
    let grid = map.grid();
    let points = derivs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (margin, status, direction) = assess(d, &margin_of, tol, kink);
            PointMargin {
                time: grid.time(i),
                margin,
                status,
                direction,
            }
        })
        .collect();
    Verdict::from_points(points, tol, Some(grid))
}

fn vec3(v: &RVector3) -> Vec<f64> {
    vec![v.x, v.y, v.z]
}

/// Largest eigenvalue of a symmetric matrix and its eigenvector.
fn top_eigen(x: &RMatrix) -> (f64, Vec<f64>) {
    let sym = (x + x.transpose()) * 0.5;
    let (vals, vecs) = symmetric_eig(&sym);
    let k = vals.len() - 1;
    (vals[k], vecs.column(k).iter().copied().collect())
}

/// No information backflow: d/dt ‖Λ_t(ρ₁ − ρ₂)‖₁ ≤ 0 for all state pairs.
/// Qubits: λ_max(X(t)) with X = d/dt TᵀT, witness direction included.
pub fn check_blp(map: &DynamicalMap, tol: &Tolerances) -> Result<Verdict> {
    if map.dim() != 2 {
        return sampled_check(map, None, tol);
    }
    let (t_tol, kink) = derivative_tolerance(map, tol)?;
    let derivs = map.derivative_series(gram_of_t)?;
    Ok(fold(map, &derivs, t_tol, kink, |x| {
        let (top, v) = top_eigen(x);
        (top, Some(v))
    }))
}

/// Closed-form criterion: 2λ_max of the symmetric part of a 2×2 matrix.
pub fn eq12_margin(m: &RMatrix2) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    a + d + ((a - d).powi(2) + (b + c).powi(2)).sqrt()
}

/// 2λ_max of the upper-left 2×2 block of Rᵀ X R for any frame R with third
/// column n.
pub fn projected_x_margin(x: &RMatrix3, n: &RVector3) -> f64 {
    let r = frame_with_axis(n, 0.0);
    let y = r.transpose() * x * r;
    let block = RMatrix::from_fn(2, 2, |i, j| y[(i, j)]);
    2.0 * top_eigen(&block).0
}

/// Elementary with respect to `basis`: backflow only along coherent
/// directions. The qubit path applies the closed-form criterion to
/// M = d/dt (AᵀA) with A the ⊥n columns of T R, against twice the
/// derivative tolerance (the criterion is 2λ_max(M)).
pub fn check_elementary(map: &DynamicalMap, basis: &Basis, tol: &Tolerances) -> Result<Verdict> {
    if basis.dim() != map.dim() {
        return invalid("basis dimension differs from the map");
    }
    if map.dim() != 2 {
        return sampled_check(map, Some(basis), tol);
    }
    let n = basis.bloch_axis()?;
    let r = frame_with_axis(&n, 0.0);
    let (t_tol, kink) = derivative_tolerance(map, tol)?;
    let derivs = map.derivative_series(gram_of_t)?;
    Ok(fold(map, &derivs, 2.0 * t_tol, kink, |x| {
        let y = r.transpose() * rmatrix3(x) * r;
        let m = RMatrix2::new(y[(0, 0)], y[(0, 1)], y[(1, 0)], y[(1, 1)]);
        let block = RMatrix::from_fn(2, 2, |i, j| m[(i, j)]);
        let (_, v) = top_eigen(&block);
        let dir = r.column(0) * v[0] + r.column(1) * v[1];
        (eq12_margin(&m), Some(vec3(&dir)))
    }))
}

/// d > 2: monotonicity of ‖Λ_t(X)‖₁ for sampled traceless Hermitian X (any
/// difference of states is a multiple of one). With a basis, X has zero
/// diagonal in it, which spans the differences of states indistinguishable
/// by measurement in that basis.
fn sampled_check(map: &DynamicalMap, basis: Option<&Basis>, tol: &Tolerances) -> Result<Verdict> {
    let d = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let directions: Vec<CMatrix> = (0..tol.sample_pairs)
        .map(|_| match basis {
            None => sampling::random_traceless_hermitian(&mut rng, d),
            Some(b) => {
                let mut h = sampling::random_hermitian(&mut rng, d);
                for i in 0..d {
                    h[(i, i)] = numerics::c(0.0, 0.0);
                }
                let x = b.from_coordinates(&h);
                let norm = numerics::trace_norm(&x);
                x / numerics::c(norm, 0.0)
            }
        })
        .collect();
    if directions.is_empty() {
        return invalid("sampled check needs at least one pair");
    }
    let derivs = map.derivative_series(|_, ch| {
        let norms = directions
            .iter()
            .map(|x| Ok(numerics::trace_norm(&ch.apply(x)?)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(RMatrix::from_row_slice(1, norms.len(), &norms))
    })?;
    let (t_tol, kink) = (tol.derivative, tol.kink);
    let grid = map.grid();
    let points = derivs
        .iter()
        .enumerate()
        .map(|(i, der)| {
            let mut best = (f64::NEG_INFINITY, Status::Pass);
            for j in 0..directions.len() {
                let col = |m: &RMatrix| RMatrix::from_element(1, 1, m[(0, j)]);
                let single = Derivative {
                    central: col(&der.central),
                    stencil: der.stencil,
                    forward: der.forward.as_ref().map(col),
                    backward: der.backward.as_ref().map(col),
                };
                let (m, s, _) = assess(&single, |v| (v[(0, 0)], None), t_tol, kink);
                best = (best.0.max(m), best.1.worst(s));
            }
            PointMargin {
                time: grid.time(i),
                margin: best.0,
                status: best.1,
                direction: None,
            }
        })
        .collect();
    let mut v = Verdict::from_points(points, t_tol, Some(grid));
    v.sampled = true;
    Ok(v.with_note(format!(
        "sampled over {} random difference directions",
        directions.len()
    )))
}

/// Singular values of A(t) = T(t)·R[:, 0..2] per grid point, largest first.
fn perpendicular_singular_values(map: &DynamicalMap, basis: &Basis) -> Result<Vec<(f64, f64)>> {
    if map.dim() != 2 || basis.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: map.dim(),
            context: "elementary screen needs a qubit map",
        });
    }
    let r = frame_with_axis(&basis.bloch_axis()?, 0.0);
    (0..map.grid().len())
        .into_par_iter()
        .map(|i| {
            let t = map.at_index(i)?.bloch()?.t * r;
            let a = RMatrix::from_fn(3, 2, |p, q| t[(p, q)]);
            let sv = singular_values(&a);
            Ok((sv[0], sv[1]))
        })
        .collect()
}

/// Necessary and sufficient screens on the ⊥n singular values: the larger
/// one non-increasing, and the larger at t never exceeding the smaller at any
/// earlier s.
pub fn elementary_screen(
    map: &DynamicalMap,
    basis: &Basis,
    tol: &Tolerances,
) -> Result<(Verdict, Verdict)> {
    let sv = perpendicular_singular_values(map, basis)?;
    let grid = map.grid();
    let s_tol = tol.structure * qubit_scale(map)?.max(1.0);
    let mut necessary = Vec::with_capacity(sv.len());
    let mut sufficient = Vec::with_capacity(sv.len());
    let mut min_before = f64::INFINITY;
    for (i, &(hi, lo)) in sv.iter().enumerate() {
        let t = grid.time(i);
        let nec = if i == 0 {
            f64::NEG_INFINITY
        } else {
            hi - sv[i - 1].0
        };
        let suf = hi - min_before;
        let status = |m: f64| {
            if m <= s_tol {
                Status::Pass
            } else {
                Status::Fail
            }
        };
        necessary.push(PointMargin {
            time: t,
            margin: nec,
            status: status(nec),
            direction: None,
        });
        sufficient.push(PointMargin {
            time: t,
            margin: suf,
            status: status(suf),
            direction: None,
        });
        min_before = min_before.min(lo);
    }
    // The first point has no earlier time to compare with.
    necessary[0].margin = 0.0;
    sufficient[0].margin = 0.0;
    Ok((
        Verdict::from_points(necessary, s_tol, Some(grid)),
        Verdict::from_points(sufficient, s_tol, Some(grid)),
    ))
}

/// Which invariant subspaces a block-diagonal check demands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockStructure {
    /// Diagonal and off-diagonal parts both preserved.
    Block,
    /// Only the diagonal part preserved.
    DiagonalOnly,
}

/// Largest violation of the subspace containment for one channel, measured
/// on matrix units of `basis`, with the offending unit.
pub fn containment_violation(
    ch: &Channel,
    basis: &Basis,
    structure: BlockStructure,
) -> (f64, (usize, usize)) {
    let d = ch.dim();
    let mut worst = (0.0, (0, 0));
    for i in 0..d {
        for j in 0..d {
            if i != j && structure == BlockStructure::DiagonalOnly {
                continue;
            }
            let out = basis.coordinates(&ch.apply(&basis.unit(i, j)).expect("dimension checked"));
            let mut v: f64 = 0.0;
            for a in 0..d {
                for b in 0..d {
                    // Diagonal inputs must land on the diagonal; off-diagonal
                    // inputs must have no diagonal part.
                    if (i == j) != (a == b) {
                        v = v.max(out[(a, b)].norm());
                    }
                }
            }
            if v > worst.0 {
                worst = (v, (i, j));
            }
        }
    }
    worst
}

fn check_unitary_family(map: &DynamicalMap, u: &UnitaryFamily) -> Result<()> {
    for t in map.grid().times() {
        let m = u(t);
        if m.nrows() != map.dim() || !numerics::is_unitary(&m, 1e-10) {
            return invalid(format!(
                "U(t) is not a unitary of size {} at t = {t}",
                map.dim()
            ));
        }
    }
    Ok(())
}

/// Containment of U(t) Λ_t(·) U(t)† on every grid point.
pub fn check_containment(
    map: &DynamicalMap,
    basis: &Basis,
    u: &UnitaryFamily,
    structure: BlockStructure,
    tol: &Tolerances,
) -> Result<Verdict> {
    check_unitary_family(map, u)?;
    let grid = map.grid();
    let results: Vec<(f64, (usize, usize))> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ch = map.at_index(i)?.conjugate(&u(grid.time(i)))?;
            Ok(containment_violation(&ch, basis, structure))
        })
        .collect::<Result<_>>()?;
    let points = results
        .iter()
        .enumerate()
        .map(|(i, (v, _))| PointMargin {
            time: grid.time(i),
            margin: *v,
            status: if *v <= tol.structure {
                Status::Pass
            } else {
                Status::Fail
            },
            direction: None,
        })
        .collect();
    let mut verdict = Verdict::from_points(points, tol.structure, Some(grid));
    if let Some(w) = verdict.witness_point.as_mut() {
        let i = grid.index_of(w.time.unwrap_or(grid.t_start)).unwrap_or(0);
        let (a, b) = results[i].1;
        w.detail = Some(format!("image of E_{a}{b} leaves its subspace"));
    }
    Ok(verdict)
}

/// Elementary plus block-diagonal (or diagonal-only) structure in the frame
/// U(t).
pub fn check_block_diagonal_elementary(
    map: &DynamicalMap,
    basis: &Basis,
    u: &UnitaryFamily,
    structure: BlockStructure,
    tol: &Tolerances,
) -> Result<Verdict> {
    let containment = check_containment(map, basis, u, structure, tol)?;
    let elementary = check_elementary(map, basis, tol)?;
    Ok(Verdict::all_of(&[
        ("elementary", &elementary),
        ("containment", &containment),
    ]))
}

/// l₁-coherence of U(t)Λ_t(ρ)U(t)† non-increasing for every qubit state.
///
/// For a block-diagonal map C² is a quadratic form in the coherent part of
/// the input, so its time derivative is fixed by the probe states
/// (I + cos α X + sin α Y)/2 at α = 0, π/4, π/2 (X, Y the off-diagonal
/// Paulis of the basis); the margin is twice the form's largest eigenvalue.
pub fn check_coherence_monotone(
    map: &DynamicalMap,
    basis: &Basis,
    u: &UnitaryFamily,
    tol: &Tolerances,
) -> Result<Verdict> {
    if map.dim() != 2 || basis.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: map.dim(),
            context: "coherence check needs a qubit map",
        });
    }
    check_unitary_family(map, u)?;
    let off = basis.unit(0, 1);
    let x = &off + off.adjoint();
    let y = (&off - off.adjoint()) * numerics::c(0.0, -1.0);
    let half_id = numerics::identity(2) * numerics::c(0.5, 0.0);
    let probes: Vec<CMatrix> = [
        0.0,
        std::f64::consts::FRAC_PI_4,
        std::f64::consts::FRAC_PI_2,
    ]
    .iter()
    .map(|a: &f64| {
        &half_id
            + (&x * numerics::c(a.cos(), 0.0) + &y * numerics::c(a.sin(), 0.0))
                * numerics::c(0.5, 0.0)
    })
    .collect();
    let derivs = map.derivative_series(|t, ch| {
        let ch = ch.conjugate(&u(t))?;
        let vals = probes
            .iter()
            .map(|rho| {
                let c = channels::l1_coherence(&ch.apply(rho)?, basis);
                Ok(c * c)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(RMatrix::from_row_slice(1, 3, &vals))
    })?;
    let (t_tol, kink) = derivative_tolerance(map, tol)?;
    Ok(fold(map, &derivs, 2.0 * t_tol, kink, |q| {
        let (a, c) = (q[(0, 0)], q[(0, 2)]);
        let b = q[(0, 1)] - 0.5 * (a + c);
        let form = RMatrix2::new(a, b, b, c);
        (eq12_margin(&form), None)
    }))
}

/// Elementarity of t ↦ Λ_t ∘ Ω for a DIO channel Ω.
pub fn check_dio_composition(
    map: &DynamicalMap,
    basis: &Basis,
    omega: &Channel,
    tol: &Tolerances,
) -> Result<Verdict> {
    let dio = channels::is_dio_with(omega, basis, tol);
    if !dio.passed() {
        return invalid(format!(
            "precomposed channel is not DIO in the basis (margin {:.3e})",
            dio.margin
        ));
    }
    check_elementary(&map.compose_after(omega)?, basis, tol)
}

/// CP-divisibility through one-step propagators V = S(t)·S(s)⁻¹ between
/// adjacent grid points. Ill-conditioned S(s) makes that step indeterminate.
pub fn check_cp_divisible(map: &DynamicalMap, tol: &Tolerances) -> Result<Verdict> {
    let grid = map.grid();
    let d = map.dim();
    let supers: Vec<CMatrix> = (0..grid.len())
        .into_par_iter()
        .map(|i| Ok(map.at_index(i)?.superoperator()))
        .collect::<Result<_>>()?;
    let steps: Vec<(PointMargin, Option<String>)> = (1..grid.len())
        .into_par_iter()
        .map(|i| {
            let (s, t) = (grid.time(i - 1), grid.time(i));
            let sv = singular_values(&supers[i - 1]);
            let cond = sv[0] / sv[sv.len() - 1];
            let undetermined = PointMargin { time: t, margin: 0.0, status: Status::Indeterminate, direction: None };
            if !(cond <= tol.condition_limit) {
                return (undetermined, Some(format!("propagator [{s}, {t}]: condition number {cond:.3e}")));
            }
            let Some(inv) = supers[i - 1].clone().try_inverse() else {
                return (undetermined, Some(format!("propagator [{s}, {t}]: singular map at s")));
            };
            let v = &supers[i] * inv;
            let choi = channels::choi_from_superoperator(d, &v);
            let min_eig = numerics::hermitian_part_eigenvalues(&choi)[0];
            let marginal = channels::first_marginal(d, &choi);
            let target = numerics::identity(d) * numerics::c(1.0 / d as f64, 0.0);
            let trace_dev = max_abs(&(marginal - target)) * d as f64;
            // Trace deviation only enters once it is itself a violation, so the
            // margin of a passing step keeps the sign of the Choi eigenvalue.
            let margin = if trace_dev <= tol.cp_divisibility { -min_eig } else { (-min_eig).max(trace_dev) };
            let status = if margin <= tol.cp_divisibility { Status::Pass } else { Status::Fail };
            let detail = format!("propagator [{s}, {t}]: Choi eigenvalue {min_eig:.3e}, trace deviation {trace_dev:.3e}");
            (PointMargin { time: t, margin, status, direction: None }, Some(detail))
        })
        .collect();
    let details: Vec<Option<String>> = steps.iter().map(|(_, d)| d.clone()).collect();
    let points: Vec<PointMargin> = steps.into_iter().map(|(p, _)| p).collect();
    let mut verdict = Verdict::from_points(points, tol.cp_divisibility, Some(grid));
    if let Some(w) = verdict.witness_point.as_mut() {
        if let Some(i) = w.time.and_then(|t| grid.index_of(t)) {
            w.detail = details[i - 1].clone();
        }
    }
    Ok(verdict)
}

/// Witness data for reports: the failing direction as a 3-vector, if any.
pub fn witness_direction(v: &Verdict) -> Option<RVector3> {
    v.witness_point
        .as_ref()
        .and_then(|w: &WitnessPoint| w.direction.as_ref())
        .filter(|d| d.len() == 3)
        .map(|d| RVector3::new(d[0], d[1], d[2]))
}

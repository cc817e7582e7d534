//! The three built-in qubit dynamics: a depolarizing family with a backflow
//! phase, three Pauli-rate maps whose mixture is depolarizing, and an
//! extremal non-unital family.

use std::f64::consts::FRAC_PI_2;

use crate::channels::{self, Basis, StochasticMatrix};
use crate::error::{invalid, Result};
use crate::numerics::{quadrature_piecewise, TimeGrid};

use super::{
    identity_unitary, pauli_family, DynamicalMap, GklsGenerator, MixtureComponent, MixtureSpec,
};

pub const EXAMPLE1_DEFAULT_EPSILON: f64 = 0.01;
pub const EXAMPLE1_DEFAULT_T0: f64 = 1.0;
pub const EXAMPLE2_DEFAULT_EPSILON: f64 = 0.05;

/// Simpson panels per smooth piece of the rate integrals. Rates are
/// piecewise quadratic, so Simpson is exact up to rounding.
const QUADRATURE_PANELS: usize = 64;

/// Depolarizing family Λ_t(ρ) = λ(t)ρ + (1 − λ(t)) I/2.
pub fn depolarizing_family<F>(lambda: F, grid: TimeGrid) -> DynamicalMap
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    pauli_family(grid, move |t| {
        let l = lambda(t);
        ([l; 3], [0.0; 3])
    })
    .with_label("depolarizing")
}

fn check_example1(epsilon: f64, t0: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return invalid(format!("t0 must be positive, got {t0}"));
    }
    Ok(())
}

/// Quadratic decay to (2 − ε)/6 on [0, t₀), then an oscillation between
/// ε/6 and (2 − ε)/6.
pub fn example1_lambda(t: f64, epsilon: f64, t0: f64) -> f64 {
    if t < t0 {
        (4.0 + epsilon) / (6.0 * t0 * t0) * (t - t0).powi(2) + (2.0 - epsilon) / 6.0
    } else {
        1.0 / 6.0 + (1.0 - epsilon) / 6.0 * (t - t0).cos()
    }
}

pub fn example1_lambda_derivative(t: f64, epsilon: f64, t0: f64) -> f64 {
    if t < t0 {
        (4.0 + epsilon) / (3.0 * t0 * t0) * (t - t0)
    } else {
        -(1.0 - epsilon) / 6.0 * (t - t0).sin()
    }
}

/// Rate γ(t) of the generator Σ_i γ(t)·½(σ_i ρ σ_i − ρ), for which
/// λ' = −2γλ.
pub fn example1_rate(t: f64, epsilon: f64, t0: f64) -> f64 {
    -example1_lambda_derivative(t, epsilon, t0) / (2.0 * example1_lambda(t, epsilon, t0))
}

/// The same dynamics as a Lindblad generator. The ½ of the rate is folded
/// into the standard-form jump rate.
pub fn example1_generator(epsilon: f64, t0: f64) -> Result<GklsGenerator> {
    check_example1(epsilon, t0)?;
    Ok(GklsGenerator::depolarizing(move |t| {
        0.5 * example1_rate(t, epsilon, t0)
    }))
}

pub fn depolarizing_example(epsilon: f64, t0: f64, grid: TimeGrid) -> Result<DynamicalMap> {
    check_example1(epsilon, t0)?;
    if grid.t_start < 0.0 {
        return invalid("example dynamics start at t = 0");
    }
    Ok(depolarizing_family(move |t| example1_lambda(t, epsilon, t0), grid).with_label("example1"))
}

/// Equal mixture of three classical maps in the σ₁, σ₂, σ₃ eigenbases, all
/// driven by the bistochastic matrix with M₁₁ = 3/4 + (1 − ε)/4·cos(t − t₀).
/// Only valid for t ≥ t₀.
pub fn example1_mixture(epsilon: f64, t0: f64, grid: TimeGrid) -> Result<MixtureSpec> {
    check_example1(epsilon, t0)?;
    if grid.t_start < t0 - 1e-12 * t0.max(1.0) {
        return invalid(format!(
            "classical decomposition holds only for t >= t0 = {t0}"
        ));
    }
    let components = (1..=3)
        .map(|k| {
            let basis = Basis::pauli_eigenbasis(k);
            let b = basis.clone();
            let map = DynamicalMap::analytic(2, grid, move |t| {
                let m11 = 0.75 + (1.0 - epsilon) / 4.0 * (t - t0).cos();
                channels::classical_channel(&StochasticMatrix::bistochastic2(m11)?, &b)
            })
            .with_label(format!("classical σ{k}"));
            MixtureComponent::new(map)
                .with_basis(basis)
                .with_frame(identity_unitary(2))
        })
        .collect();
    MixtureSpec::new(vec![1.0 / 3.0; 3], components)
}

pub fn gamma_a(tau: f64) -> f64 {
    2.0 * tau * tau - 6.0 * tau + 4.0
}

pub fn gamma_b(tau: f64, epsilon: f64) -> f64 {
    if (1.0..=2.0).contains(&tau) {
        -gamma_a(tau) + epsilon
    } else {
        0.0
    }
}

/// Γ_a(t) = ∫₀ᵗ γ_a.
pub fn integrated_gamma_a(t: f64) -> Result<f64> {
    quadrature_piecewise(gamma_a, 0.0, t, &[1.0, 2.0], QUADRATURE_PANELS)
}

/// Γ_b(t) = ∫₀ᵗ γ_b, with panels split at the jumps of γ_b.
pub fn integrated_gamma_b(t: f64, epsilon: f64) -> Result<f64> {
    quadrature_piecewise(
        |tau| gamma_b(tau, epsilon),
        0.0,
        t,
        &[1.0, 2.0],
        QUADRATURE_PANELS,
    )
}

/// (λ₁, λ₂, λ₃) of component k: rate γ_b on axis k, γ_a on the others, and
/// λ_i = exp(−Γ_j − Γ_l) over the other two axes.
pub fn pauli_example_lambdas(k: usize, epsilon: f64, t: f64) -> Result<[f64; 3]> {
    if !(1..=3).contains(&k) {
        return invalid(format!("Pauli component index must be 1, 2 or 3, got {k}"));
    }
    let ga = integrated_gamma_a(t)?;
    let gb = integrated_gamma_b(t, epsilon)?;
    let big = |i: usize| if i == k { gb } else { ga };
    Ok([1, 2, 3].map(|i| {
        let others: f64 = (1..=3).filter(|&j| j != i).map(big).sum();
        (-others).exp()
    }))
}

pub fn pauli_example(k: usize, epsilon: f64, grid: TimeGrid) -> Result<DynamicalMap> {
    if !(1..=3).contains(&k) {
        return invalid(format!("Pauli component index must be 1, 2 or 3, got {k}"));
    }
    if !(epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    if grid.t_start < 0.0 {
        return invalid("example dynamics start at t = 0");
    }
    let map = DynamicalMap::analytic(2, grid, move |t| {
        channels::pauli_channel(pauli_example_lambdas(k, epsilon, t)?, [0.0; 3])
    });
    Ok(map.with_label(format!("pauli component {k}")))
}

/// Equal mixture of the three Pauli-rate components, each annotated with
/// its σ_k eigenbasis.
pub fn example2_mixture(epsilon: f64, grid: TimeGrid) -> Result<MixtureSpec> {
    let components = (1..=3)
        .map(|k| {
            Ok(MixtureComponent::new(pauli_example(k, epsilon, grid)?)
                .with_basis(Basis::pauli_eigenbasis(k))
                .with_frame(identity_unitary(2)))
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureSpec::new(vec![1.0 / 3.0; 3], components)
}

/// Depolarizing parameter of the equal mixture, (λ₁⁽¹⁾ + 2λ₂⁽¹⁾)/3.
pub fn example2_lambda(t: f64, epsilon: f64) -> Result<f64> {
    let l = pauli_example_lambdas(1, epsilon, t)?;
    Ok((l[0] + 2.0 * l[1]) / 3.0)
}

/// −ln(½ e^{5/3} (e^{−10/3} + 2e^{−5/3} − e^{−8/3})): below it the mixture has
/// λ(1) < λ(2).
pub fn example2_threshold() -> f64 {
    let e = f64::exp;
    -(0.5 * e(5.0 / 3.0) * (e(-10.0 / 3.0) + 2.0 * e(-5.0 / 3.0) - e(-8.0 / 3.0))).ln()
}

/// The same threshold located numerically: bisection on ε for the sign of
/// λ(2) − λ(1), using quadrature for the rates.
pub fn example2_threshold_bisection(mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let gap =
        |eps: f64| -> Result<f64> { Ok(example2_lambda(2.0, eps)? - example2_lambda(1.0, eps)?) };
    if !(lo > 0.0 && hi > lo) || gap(lo)? <= 0.0 || gap(hi)? >= 0.0 {
        return invalid("bisection bracket does not straddle the threshold");
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// (λ₁ = λ₂, λ₃, r₃) of the extremal family.
pub fn extremal_example_parameters(t: f64) -> (f64, f64, f64) {
    let l = 0.5 + 0.25 * t.sin();
    let l3 = l * l;
    (l, l3, 1.0 - l3)
}

/// T = diag(λ, λ, λ²), r = (0, 0, 1 − λ²) with λ = ½ + ¼ sin t, on grids
/// inside [0, π/2].
pub fn extremal_example(grid: TimeGrid) -> Result<DynamicalMap> {
    let slack = 1e-12;
    if grid.t_start < -slack || grid.t_end > FRAC_PI_2 + slack {
        return invalid(format!(
            "extremal example is defined on [0, π/2], got [{}, {}]",
            grid.t_start, grid.t_end
        ));
    }
    Ok(pauli_family(grid, |t| {
        let (l, l3, r3) = extremal_example_parameters(t);
        ([l, l, l3], [0.0, 0.0, r3])
    })
    .with_label("example3"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_from_generator, mix};
    use crate::numerics::{max_abs, RVector3};

    const EPS: f64 = 0.01;

    #[test]
    fn example1_lambda_endpoints() {
        for eps in [0.001, 0.01, 0.05, 0.089] {
            for t0 in [0.5, 1.0, 3.0] {
                assert!((example1_lambda(0.0, eps, t0) - 1.0).abs() < 1e-14);
                assert!((example1_lambda(t0, eps, t0) - (2.0 - eps) / 6.0).abs() < 1e-15);
                assert!((example1_lambda(t0 - 1e-9, eps, t0) - (2.0 - eps) / 6.0).abs() < 1e-9);
                let pi = std::f64::consts::PI;
                assert!((example1_lambda(t0 + pi, eps, t0) - eps / 6.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn example1_mixture_reproduces_depolarizing() {
        let t0 = 1.0;
        let grid = TimeGrid::new(t0, t0 + 2.0 * std::f64::consts::PI, 101).unwrap();
        let mixed = mix(&example1_mixture(EPS, t0, grid).unwrap()).unwrap();
        let direct = depolarizing_example(EPS, t0, grid).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..grid.len() {
            let diff = mixed.at_index(i).unwrap().choi() - direct.at_index(i).unwrap().choi();
            worst = worst.max(max_abs(&diff));
        }
        assert!(worst <= 1e-10, "sup error {worst}");
        assert!(example1_mixture(EPS, t0, TimeGrid::new(0.0, 2.0, 5).unwrap()).is_err());
    }

    #[test]
    fn classical_component_contracts_along_its_axis() {
        let grid = TimeGrid::new(1.0, 2.0, 5).unwrap();
        let spec = example1_mixture(EPS, 1.0, grid).unwrap();
        let b = spec.components()[2].map.bloch_at(1.5).unwrap();
        let expected = 0.5 + (1.0 - EPS) / 2.0 * 0.5f64.cos();
        assert!((b.t[(2, 2)] - expected).abs() < 1e-14);
        assert!(b.t[(0, 0)].abs() < 1e-14 && b.t[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn generator_reproduces_example1_before_t0() {
        let t0 = 1.0;
        let grid = TimeGrid::new(0.0, 0.9, 10).unwrap();
        let evo = evolve_from_generator(&example1_generator(EPS, t0).unwrap(), grid).unwrap();
        assert!(evo.warnings.is_empty());
        for i in 0..grid.len() {
            let t = grid.time(i);
            let got = evo.map.at_index(i).unwrap().bloch().unwrap().t[(0, 0)];
            assert!((got - example1_lambda(t, EPS, t0)).abs() < 1e-6);
        }
    }

    #[test]
    fn integrated_rates() {
        assert!((integrated_gamma_a(1.0).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert!((integrated_gamma_a(2.0).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        let antiderivative = |t: f64| 2.0 / 3.0 * t.powi(3) - 3.0 * t * t + 4.0 * t;
        for t in [0.3, 1.7, 2.9] {
            assert!((integrated_gamma_a(t).unwrap() - antiderivative(t)).abs() < 1e-12);
        }
        for eps in [0.01, 0.05, 0.2] {
            assert!((integrated_gamma_b(2.0, eps).unwrap() - (1.0 / 3.0 + eps)).abs() < 1e-12);
            assert!(integrated_gamma_b(0.9, eps).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn component_lambdas_non_increasing_off_axis() {
        let eps = 0.05;
        for k in 1..=3 {
            let mut prev = [1.0; 3];
            for step in 0..=300 {
                let t = step as f64 * 0.01;
                let l = pauli_example_lambdas(k, eps, t).unwrap();
                let off: Vec<usize> = (0..3).filter(|&i| i != k - 1).collect();
                assert!((l[off[0]] - l[off[1]]).abs() < 1e-15);
                for &i in &off {
                    assert!(l[i] <= prev[i] + 1e-14, "k={k} t={t}");
                }
                prev = l;
            }
        }
    }

    #[test]
    fn example2_mixture_is_depolarizing() {
        let eps = 0.05;
        let grid = TimeGrid::new(0.0, 3.0, 31).unwrap();
        let mixed = mix(&example2_mixture(eps, grid).unwrap()).unwrap();
        for i in 0..grid.len() {
            let t = grid.time(i);
            let b = mixed.at_index(i).unwrap().bloch().unwrap();
            let lam = example2_lambda(t, eps).unwrap();
            assert!(
                (b.t - crate::numerics::RMatrix3::identity() * lam)
                    .abs()
                    .max()
                    < 1e-12
            );
        }
        assert!(example2_lambda(1.0, eps).unwrap() < example2_lambda(2.0, eps).unwrap());
    }

    #[test]
    fn example2_threshold_agrees_with_closed_form() {
        let closed = example2_threshold();
        assert!((closed - 0.0939).abs() < 5e-4);
        let numeric = example2_threshold_bisection(0.01, 0.5, 1e-12).unwrap();
        assert!((numeric - closed).abs() < 1e-9);
        assert!(
            example2_lambda(1.0, closed - 1e-3).unwrap()
                < example2_lambda(2.0, closed - 1e-3).unwrap()
        );
        assert!(
            example2_lambda(1.0, closed + 1e-3).unwrap()
                > example2_lambda(2.0, closed + 1e-3).unwrap()
        );
    }

    #[test]
    fn extremal_example_values() {
        let grid = TimeGrid::new(0.0, FRAC_PI_2, 41).unwrap();
        let map = extremal_example(grid).unwrap();
        let b = map.bloch_at(FRAC_PI_2).unwrap();
        assert!((b.t[(0, 0)] - 0.75).abs() < 1e-14);
        assert!((b.t[(2, 2)] - 9.0 / 16.0).abs() < 1e-14);
        assert!((b.r[2] - 7.0 / 16.0).abs() < 1e-14);
        for ch in map.channels().unwrap() {
            assert!(ch.residuals().min_eigenvalue > -1e-9);
        }
        let e1 = RVector3::x();
        let norms: Vec<f64> = [0.3, 0.6, 0.9]
            .iter()
            .map(|&t| (map.bloch_at(t).unwrap().t * e1).norm())
            .collect();
        assert!(norms[0] < norms[1] && norms[1] < norms[2]);
        assert!(extremal_example(TimeGrid::new(0.0, 2.0, 5).unwrap()).is_err());
    }
}

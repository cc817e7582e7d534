//! Random operators for the sampled d > 2 checks and for tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::{Basis, Channel, StochasticMatrix};
use crate::numerics::{c, svd, CMatrix, RMatrix, RVector3};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// Hermitian, traceless, unit trace norm.
pub fn random_traceless_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let mut h = random_hermitian(rng, d);
    let shift = h.trace() / c(d as f64, 0.0);
    for i in 0..d {
        h[(i, i)] -= shift;
    }
    let norm = crate::numerics::trace_norm(&h);
    h / c(norm, 0.0)
}

/// Haar-random unitary (polar factor of a Ginibre matrix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let dec = svd(&ginibre(rng, d, d));
    &dec.u * dec.v.adjoint()
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> RVector3 {
    loop {
        let v = RVector3::new(gaussian(rng), gaussian(rng), gaussian(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Uniform point in the unit Bloch ball.
pub fn random_bloch_vector<R: Rng + ?Sized>(rng: &mut R) -> RVector3 {
    random_unit_vector(rng) * rng.random::<f64>().cbrt()
}

/// Random mixed state from the Hilbert-Schmidt ensemble.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn random_basis<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Basis {
    Basis::new(random_unitary(rng, d)).expect("Haar unitary is unitary")
}

/// Kraus operators of a random channel with `kraus_count` operators, cut from
/// a random Stinespring isometry.
pub fn random_kraus<R: Rng + ?Sized>(rng: &mut R, d: usize, kraus_count: usize) -> Vec<CMatrix> {
    let dec = svd(&ginibre(rng, d * kraus_count, d));
    let v = &dec.u * dec.v.adjoint();
    (0..kraus_count)
        .map(|k| v.rows(k * d, d).into_owned())
        .collect()
}

pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Channel {
    let count = rng.random_range(1..=d * d);
    Channel::from_kraus(&random_kraus(rng, d, count)).expect("isometry gives a channel")
}

pub fn random_stochastic<R: Rng + ?Sized>(rng: &mut R, d: usize) -> StochasticMatrix {
    let mut m = RMatrix::from_fn(d, d, |_, _| rng.random::<f64>());
    for j in 0..d {
        let s: f64 = m.column(j).sum();
        for i in 0..d {
            m[(i, j)] /= s;
        }
    }
    StochasticMatrix::new(m).expect("normalized columns")
}

/// Random conditional probabilities p_ij ≥ 0 with Σ_j p_ij = 1/d.
pub fn random_cc_probabilities<R: Rng + ?Sized>(rng: &mut R, d: usize) -> RMatrix {
    let mut p = RMatrix::from_fn(d, d, |_, _| rng.random::<f64>().powi(3));
    for i in 0..d {
        let s: f64 = p.row(i).sum();
        for j in 0..d {
            p[(i, j)] /= s * d as f64;
        }
    }
    p
}

//! Random qubit families shared by the integration tests.
#![allow(dead_code)]

use backflow::channels::pauli_channel;
use backflow::numerics::{c, identity, pauli, CMatrix, RVector3};
use backflow::sampling;
use backflow::{Channel, DynamicalMap, TimeGrid};
use rand::Rng;

/// exp(−iθ n·σ/2).
pub fn bloch_rotation(n: &RVector3, theta: f64) -> CMatrix {
    let (s, co) = (0.5 * theta).sin_cos();
    let mut u = identity(2) * c(co, 0.0);
    for k in 0..3 {
        u -= pauli(k + 1) * c(0.0, s * n[k]);
    }
    u
}

/// Uniform point of the Pauli tetrahedron 1 ± λ₃ ≥ |λ₁ ± λ₂|.
pub fn random_pauli_point<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let l: [f64; 3] = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
        if 1.0 + l[2] >= (l[0] + l[1]).abs() && 1.0 - l[2] >= (l[0] - l[1]).abs() {
            return l;
        }
    }
}

/// Pauli point shrunk by a time profile f(t) ∈ [0, 1], with an output
/// rotation and optionally an input rotation about random axes.
#[derive(Clone, Copy, Debug)]
pub struct Family {
    pub lambda: [f64; 3],
    pub profile: Profile,
    pub out_axis: RVector3,
    pub out_rate: f64,
    pub in_axis: RVector3,
    pub in_rate: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum Profile {
    /// e^{−κt}
    Decay(f64),
    /// a + b cos(ωt + φ)
    Wave {
        a: f64,
        b: f64,
        omega: f64,
        phi: f64,
    },
}

impl Profile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Profile::Decay(k) => (-k * t).exp(),
            Profile::Wave { a, b, omega, phi } => a + b * (omega * t + phi).cos(),
        }
    }
}

impl Family {
    pub fn random<R: Rng>(rng: &mut R, monotone: bool, input_rotation: bool) -> Family {
        let profile = if monotone {
            Profile::Decay(rng.random_range(0.1..1.0))
        } else {
            let a = rng.random_range(0.3..0.7);
            let b = rng.random_range(0.2..1.0) * f64::min(a, 1.0 - a);
            Profile::Wave {
                a,
                b,
                omega: rng.random_range(0.5..3.0),
                phi: rng.random_range(0.0..6.0),
            }
        };
        Family {
            lambda: random_pauli_point(rng),
            profile,
            out_axis: sampling::random_unit_vector(rng),
            out_rate: rng.random_range(-2.0..2.0),
            in_axis: sampling::random_unit_vector(rng),
            in_rate: if input_rotation {
                rng.random_range(-2.0..2.0)
            } else {
                0.0
            },
        }
    }

    pub fn channel(&self, t: f64) -> Channel {
        let f = self.profile.at(t);
        let p =
            pauli_channel(self.lambda.map(|l| l * f), [0.0; 3]).expect("scaled Pauli point is CP");
        let inner = Channel::identity(2)
            .conjugate(&bloch_rotation(&self.in_axis, self.in_rate * t))
            .unwrap();
        p.compose(&inner)
            .unwrap()
            .conjugate(&bloch_rotation(&self.out_axis, self.out_rate * t))
            .unwrap()
    }

    pub fn map(&self, grid: TimeGrid) -> DynamicalMap {
        let fam = *self;
        DynamicalMap::analytic(2, grid, move |t| Ok(fam.channel(t)))
    }
}

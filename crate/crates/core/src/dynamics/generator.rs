//! Time-local generators in Lindblad form and their fixed-step integration.

use std::sync::Arc;

use crate::channels::{choi_from_superoperator, Channel};
use crate::error::{invalid, Result};
use crate::numerics::{c, identity, kron, CMatrix, TimeGrid};
use crate::tolerance::Tolerances;

use super::DynamicalMap;

pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// γ(t) (L ρ L† − ½{L†L, ρ}).
#[derive(Clone)]
pub struct JumpTerm {
    pub rate: RateFn,
    pub operator: CMatrix,
}

impl JumpTerm {
    pub fn new(rate: impl Fn(f64) -> f64 + Send + Sync + 'static, operator: CMatrix) -> JumpTerm {
        JumpTerm {
            rate: Arc::new(rate),
            operator,
        }
    }
}

#[derive(Clone)]
pub struct GklsGenerator {
    dim: usize,
    hamiltonian: Option<CMatrix>,
    terms: Vec<JumpTerm>,
    /// Per-term superoperator pieces in row-major vectorization.
    pieces: Vec<CMatrix>,
}

impl GklsGenerator {
    pub fn new(dim: usize, terms: Vec<JumpTerm>) -> Result<GklsGenerator> {
        if dim < 2 {
            return invalid("generator dimension must be at least 2");
        }
        if terms
            .iter()
            .any(|t| t.operator.nrows() != dim || t.operator.ncols() != dim)
        {
            return invalid("jump operator has the wrong shape");
        }
        let id = identity(dim);
        let pieces = terms
            .iter()
            .map(|term| {
                let l = &term.operator;
                let ldl = l.adjoint() * l;
                // vec(A X B) = (A ⊗ Bᵀ) vec(X) for row-major vec.
                kron(l, &l.conjugate())
                    - (kron(&ldl, &id) + kron(&id, &ldl.transpose())) * c(0.5, 0.0)
            })
            .collect();
        Ok(GklsGenerator {
            dim,
            hamiltonian: None,
            terms,
            pieces,
        })
    }

    /// Adds −i[H, ·].
    pub fn with_hamiltonian(mut self, h: CMatrix) -> Result<GklsGenerator> {
        if h.nrows() != self.dim || h.ncols() != self.dim {
            return invalid("Hamiltonian has the wrong shape");
        }
        self.hamiltonian = Some(h);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[JumpTerm] {
        &self.terms
    }

    /// Qubit depolarizing generator Σ_k γ(t)(σ_k ρ σ_k − ρ), which contracts
    /// the Bloch ball as λ' = −4γλ.
    pub fn depolarizing(rate: impl Fn(f64) -> f64 + Send + Sync + 'static) -> GklsGenerator {
        let rate: RateFn = Arc::new(rate);
        let terms = (1..=3)
            .map(|k| JumpTerm {
                rate: rate.clone(),
                operator: crate::numerics::pauli(k),
            })
            .collect();
        GklsGenerator::new(2, terms).expect("Pauli jumps are 2x2")
    }

    pub fn superoperator(&self, t: f64) -> CMatrix {
        let d2 = self.dim * self.dim;
        let mut g = CMatrix::zeros(d2, d2);
        if let Some(h) = &self.hamiltonian {
            let id = identity(self.dim);
            g += (kron(h, &id) - kron(&id, &h.transpose())) * c(0.0, -1.0);
        }
        for (term, piece) in self.terms.iter().zip(&self.pieces) {
            g += piece * c((term.rate)(t), 0.0);
        }
        g
    }

    pub fn apply(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        if let Some(h) = &self.hamiltonian {
            out += (h * rho - rho * h) * c(0.0, -1.0);
        }
        for term in &self.terms {
            let l = &term.operator;
            let ldl = l.adjoint() * l;
            let dissipator = l * rho * l.adjoint() - (&ldl * rho + rho * &ldl) * c(0.5, 0.0);
            out += dissipator * c((term.rate)(t), 0.0);
        }
        out
    }

    fn rates_nonnegative(&self, t: f64) -> bool {
        self.terms.iter().all(|term| (term.rate)(t) >= 0.0)
    }
}

pub struct Evolution {
    pub map: DynamicalMap,
    pub warnings: Vec<String>,
}

/// Solve Λ̇ = L(t) ∘ Λ, Λ_0 = id with RK4 substeps of at most 1e-3.
pub fn evolve_from_generator(generator: &GklsGenerator, grid: TimeGrid) -> Result<Evolution> {
    evolve_from_generator_with(generator, grid, 1e-3, &Tolerances::default())
}

/// Integration starts at t = 0, so grids must start at a nonnegative time.
/// Non-CP outputs are kept and reported: a negative Choi eigenvalue below
/// −1e-6 is a property of the dynamics, a smaller one while all rates have
/// stayed nonnegative is integration error.
pub fn evolve_from_generator_with(
    generator: &GklsGenerator,
    grid: TimeGrid,
    max_step: f64,
    tol: &Tolerances,
) -> Result<Evolution> {
    if grid.t_start < 0.0 {
        return invalid("generator evolution starts at t = 0; grid must not start earlier");
    }
    if !(max_step > 0.0) {
        return invalid("integration step must be positive");
    }
    let d = generator.dim;
    let mut s = identity(d * d);
    let mut t = 0.0;
    let mut rates_ok = true;
    let mut warnings = Vec::new();
    let mut channels = Vec::with_capacity(grid.len());

    for i in 0..grid.len() {
        let target = grid.time(i);
        let span = target - t;
        if span > 0.0 {
            let n = (span / max_step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                rates_ok &=
                    generator.rates_nonnegative(t) && generator.rates_nonnegative(t + 0.5 * h);
                s = rk4_step(generator, &s, t, h);
                t += h;
            }
            t = target;
        }
        let channel = Channel::from_choi_unchecked(d, choi_from_superoperator(d, &s));
        let res = channel.residuals();
        if res.min_eigenvalue < -1e-6 {
            let msg = format!(
                "Choi eigenvalue {:.3e} at t = {target}: map is not CP",
                res.min_eigenvalue
            );
            log::warn!("{msg}");
            warnings.push(msg);
        } else if rates_ok && res.min_eigenvalue < -tol.cptp {
            let msg = format!(
                "Choi eigenvalue {:.3e} at t = {target} with nonnegative rates: integration error",
                res.min_eigenvalue
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        channels.push(channel);
    }
    let map = DynamicalMap::tabulated(grid, channels)?.with_label("gkls");
    Ok(Evolution { map, warnings })
}

fn rk4_step(g: &GklsGenerator, s: &CMatrix, t: f64, h: f64) -> CMatrix {
    let half = c(0.5 * h, 0.0);
    let g0 = g.superoperator(t);
    let gm = g.superoperator(t + 0.5 * h);
    let g1 = g.superoperator(t + h);
    let k1 = &g0 * s;
    let k2 = &gm * (s + &k1 * half);
    let k3 = &gm * (s + &k2 * half);
    let k4 = &g1 * (s + &k3 * c(h, 0.0));
    s + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0)
}

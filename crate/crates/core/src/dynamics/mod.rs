//! Time-parametrized channel families.
//!
//! A [`DynamicalMap`] is either analytic (a closure `t ↦ Λ_t`, evaluated on
//! demand and cached on grid points) or tabulated (one channel per grid
//! point, no interpolation). Derivatives of analytic maps use a fixed small
//! step; tabulated maps use the grid step.

mod examples;
mod generator;

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

pub use examples::*;
pub use generator::{
    evolve_from_generator, evolve_from_generator_with, Evolution, GklsGenerator, JumpTerm, RateFn,
};

use crate::channels::{self, check_weights, Basis, BlochAffine, Channel};
use crate::error::{invalid, Error, Result};
use crate::numerics::{
    self, diff_samples, diff_with, dyn3, rmatrix3, CMatrix, RMatrix, RMatrix3, Stencil, TimeGrid,
};
use crate::tolerance;

pub type ChannelFn = dyn Fn(f64) -> Result<Channel> + Send + Sync;

/// Time-dependent unitary U(t).
pub type UnitaryFamily = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

pub fn constant_unitary(u: CMatrix) -> UnitaryFamily {
    Arc::new(move |_| u.clone())
}

pub fn identity_unitary(d: usize) -> UnitaryFamily {
    constant_unitary(numerics::identity(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Analytic,
    Tabulated,
}

#[derive(Clone)]
enum Sampler {
    Analytic(Arc<ChannelFn>),
    Tabulated(Arc<Vec<Channel>>),
}

#[derive(Clone)]
pub struct DynamicalMap {
    dim: usize,
    grid: TimeGrid,
    sampler: Sampler,
    cache: Arc<Vec<OnceLock<Channel>>>,
    derivative_step: f64,
    label: String,
}

impl std::fmt::Debug for DynamicalMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DynamicalMap")
            .field("dim", &self.dim)
            .field("grid", &self.grid)
            .field("kind", &self.kind())
            .field("label", &self.label)
            .finish()
    }
}

/// Finite-difference derivative at one time. `forward`/`backward` are the
/// one-sided second-order estimates when the domain allows them.
#[derive(Clone, Debug)]
pub struct Derivative {
    pub central: RMatrix,
    pub stencil: Stencil,
    pub forward: Option<RMatrix>,
    pub backward: Option<RMatrix>,
}

impl DynamicalMap {
    pub fn analytic<F>(dim: usize, grid: TimeGrid, f: F) -> DynamicalMap
    where
        F: Fn(f64) -> Result<Channel> + Send + Sync + 'static,
    {
        Self::from_fn(dim, grid, Arc::new(f))
    }

    fn from_fn(dim: usize, grid: TimeGrid, f: Arc<ChannelFn>) -> DynamicalMap {
        DynamicalMap {
            dim,
            grid,
            sampler: Sampler::Analytic(f),
            cache: Arc::new((0..grid.len()).map(|_| OnceLock::new()).collect()),
            derivative_step: tolerance::DERIVATIVE_STEP,
            label: String::from("analytic"),
        }
    }

    pub fn tabulated(grid: TimeGrid, channels: Vec<Channel>) -> Result<DynamicalMap> {
        if channels.len() != grid.len() {
            return invalid(format!(
                "tabulated map has {} channels for a grid of {} points",
                channels.len(),
                grid.len()
            ));
        }
        let dim = channels[0].dim();
        if channels.iter().any(|c| c.dim() != dim) {
            return invalid("tabulated channels differ in dimension");
        }
        Ok(DynamicalMap {
            dim,
            grid,
            sampler: Sampler::Tabulated(Arc::new(channels)),
            cache: Arc::new(Vec::new()),
            derivative_step: grid.step(),
            label: String::from("tabulated"),
        })
    }

    /// Λ_t = Λ for all t.
    pub fn constant(channel: Channel, grid: TimeGrid) -> DynamicalMap {
        let dim = channel.dim();
        Self::analytic(dim, grid, move |_| Ok(channel.clone())).with_label("constant")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> DynamicalMap {
        self.label = label.into();
        self
    }

    /// Override the analytic finite-difference step (ignored for tabulated maps).
    pub fn with_derivative_step(mut self, h: f64) -> DynamicalMap {
        if let Sampler::Analytic(_) = self.sampler {
            self.derivative_step = h;
        }
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn kind(&self) -> MapKind {
        match self.sampler {
            Sampler::Analytic(_) => MapKind::Analytic,
            Sampler::Tabulated(_) => MapKind::Tabulated,
        }
    }

    pub fn derivative_step(&self) -> f64 {
        self.derivative_step
    }

    /// Same family on another grid. Analytic maps accept any grid; tabulated
    /// maps only sub-grids of their own.
    pub fn restrict(&self, grid: TimeGrid) -> Result<DynamicalMap> {
        match &self.sampler {
            Sampler::Analytic(f) => {
                let mut m = Self::from_fn(self.dim, grid, f.clone());
                m.derivative_step = self.derivative_step;
                m.label = self.label.clone();
                Ok(m)
            }
            Sampler::Tabulated(chs) => {
                let mut picked = Vec::with_capacity(grid.len());
                for t in grid.times() {
                    match self.grid.index_of(t) {
                        Some(i) => picked.push(chs[i].clone()),
                        None => {
                            return Err(Error::OffGrid {
                                t,
                                start: self.grid.t_start,
                                end: self.grid.t_end,
                            });
                        }
                    }
                }
                Ok(Self::tabulated(grid, picked)?.with_label(self.label.clone()))
            }
        }
    }

    fn evaluate(&self, t: f64) -> Result<Channel> {
        match &self.sampler {
            Sampler::Analytic(f) => match self.grid.index_of(t) {
                Some(i) => {
                    if let Some(c) = self.cache[i].get() {
                        return Ok(c.clone());
                    }
                    let c = f(self.grid.time(i))?;
                    let _ = self.cache[i].set(c.clone());
                    Ok(c)
                }
                None => f(t),
            },
            Sampler::Tabulated(chs) => match self.grid.index_of(t) {
                Some(i) => Ok(chs[i].clone()),
                None => Err(Error::OffGrid {
                    t,
                    start: self.grid.t_start,
                    end: self.grid.t_end,
                }),
            },
        }
    }

    /// Λ_t for t in the grid's closed interval (tabulated: grid points only).
    pub fn at(&self, t: f64) -> Result<Channel> {
        if !self.grid.contains(t) {
            return Err(Error::OffGrid {
                t,
                start: self.grid.t_start,
                end: self.grid.t_end,
            });
        }
        self.evaluate(t)
    }

    pub fn at_index(&self, i: usize) -> Result<Channel> {
        self.evaluate(self.grid.time(i))
    }

    /// All grid channels, evaluated in parallel.
    pub fn channels(&self) -> Result<Vec<Channel>> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.at_index(i))
            .collect()
    }

    pub fn bloch_at(&self, t: f64) -> Result<BlochAffine> {
        self.at(t)?.bloch()
    }

    /// Derivative of `f(t, Λ_t)` at `t`.
    pub fn derivative<F>(&self, t: f64, f: F) -> Result<Derivative>
    where
        F: Fn(f64, &Channel) -> Result<RMatrix>,
    {
        let (a, b) = (self.grid.t_start, self.grid.t_end);
        match &self.sampler {
            Sampler::Analytic(_) => {
                let g = |s: f64| f(s, &self.evaluate(s)?);
                let h = self.derivative_step;
                let (central, stencil) = numerics::central_diff(g, t, h, (a, b))?;
                let slack = 1e-12 * (b - a).abs().max(1.0);
                let forward = if t + 2.0 * h <= b + slack {
                    Some(diff_with(&g, t, h, Stencil::Forward)?)
                } else {
                    None
                };
                let backward = if t - 2.0 * h >= a - slack {
                    Some(diff_with(&g, t, h, Stencil::Backward)?)
                } else {
                    None
                };
                Ok(Derivative {
                    central,
                    stencil,
                    forward,
                    backward,
                })
            }
            Sampler::Tabulated(_) => {
                let Some(i) = self.grid.index_of(t) else {
                    return Err(Error::OffGrid {
                        t,
                        start: a,
                        end: b,
                    });
                };
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(self.grid.len() - 1);
                let mut samples = Vec::with_capacity(hi - lo + 1);
                for k in lo..=hi {
                    samples.push(f(self.grid.time(k), &self.at_index(k)?)?);
                }
                Ok(tabulated_derivative(&samples, i - lo, self.grid.step()))
            }
        }
    }

    /// Derivatives of `f(t, Λ_t)` at every grid point, in grid order.
    pub fn derivative_series<F>(&self, f: F) -> Result<Vec<Derivative>>
    where
        F: Fn(f64, &Channel) -> Result<RMatrix> + Sync,
    {
        match &self.sampler {
            Sampler::Analytic(_) => (0..self.grid.len())
                .into_par_iter()
                .map(|i| self.derivative(self.grid.time(i), &f))
                .collect(),
            Sampler::Tabulated(chs) => {
                let samples: Vec<RMatrix> = (0..self.grid.len())
                    .into_par_iter()
                    .map(|i| f(self.grid.time(i), &chs[i]))
                    .collect::<Result<_>>()?;
                Ok((0..samples.len())
                    .map(|i| tabulated_derivative(&samples, i, self.grid.step()))
                    .collect())
            }
        }
    }

    /// t ↦ Λ_t ∘ Ω.
    pub fn compose_after(&self, omega: &Channel) -> Result<DynamicalMap> {
        if omega.dim() != self.dim {
            return invalid("precomposed channel differs in dimension");
        }
        let omega = omega.clone();
        let label = format!("{} ∘ Ω", self.label);
        match &self.sampler {
            Sampler::Analytic(f) => {
                let f = f.clone();
                let mut m = Self::from_fn(
                    self.dim,
                    self.grid,
                    Arc::new(move |t| f(t)?.compose(&omega)),
                );
                m.derivative_step = self.derivative_step;
                Ok(m.with_label(label))
            }
            Sampler::Tabulated(chs) => {
                let composed = chs
                    .iter()
                    .map(|c| c.compose(&omega))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::tabulated(self.grid, composed)?.with_label(label))
            }
        }
    }

    /// t ↦ U(t) Λ_t(·) U(t)†.
    pub fn conjugated(&self, u: &UnitaryFamily) -> Result<DynamicalMap> {
        let label = format!("U {} U†", self.label);
        match &self.sampler {
            Sampler::Analytic(f) => {
                let f = f.clone();
                let u = u.clone();
                let mut m = Self::from_fn(
                    self.dim,
                    self.grid,
                    Arc::new(move |t| f(t)?.conjugate(&u(t))),
                );
                m.derivative_step = self.derivative_step;
                Ok(m.with_label(label))
            }
            Sampler::Tabulated(chs) => {
                let out = chs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.conjugate(&u(self.grid.time(i))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::tabulated(self.grid, out)?.with_label(label))
            }
        }
    }
}

fn tabulated_derivative(samples: &[RMatrix], i: usize, h: f64) -> Derivative {
    let forward = diff_samples(samples, i, h, Stencil::Forward);
    let backward = diff_samples(samples, i, h, Stencil::Backward);
    match diff_samples(samples, i, h, Stencil::Central) {
        Some(central) => Derivative {
            central,
            stencil: Stencil::Central,
            forward,
            backward,
        },
        None => match (&forward, &backward) {
            (Some(fw), _) => Derivative {
                central: fw.clone(),
                stencil: Stencil::Forward,
                forward,
                backward,
            },
            (None, Some(bw)) => Derivative {
                central: bw.clone(),
                stencil: Stencil::Backward,
                forward,
                backward,
            },
            (None, None) => unreachable!("grids have at least three points"),
        },
    }
}

/// One component of a time-independent convex combination, with the
/// annotations the decomposition checks need.
#[derive(Clone)]
pub struct MixtureComponent {
    pub map: DynamicalMap,
    /// Basis the component is claimed to be elementary (or classical) in.
    pub basis: Option<Basis>,
    /// Unitary V(t) such that V(t) Λ_t(·) V(t)† has the claimed structure in
    /// `basis`. For a generalized classical map U Λ^cl U† this is U†.
    pub frame: Option<UnitaryFamily>,
}

impl MixtureComponent {
    pub fn new(map: DynamicalMap) -> MixtureComponent {
        MixtureComponent {
            map,
            basis: None,
            frame: None,
        }
    }

    pub fn with_basis(mut self, basis: Basis) -> MixtureComponent {
        self.basis = Some(basis);
        self
    }

    pub fn with_frame(mut self, frame: UnitaryFamily) -> MixtureComponent {
        self.frame = Some(frame);
        self
    }
}

/// Σ p_i Λ^i_t with constant weights.
#[derive(Clone)]
pub struct MixtureSpec {
    weights: Vec<f64>,
    components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn new(weights: Vec<f64>, components: Vec<MixtureComponent>) -> Result<MixtureSpec> {
        check_weights(&weights)?;
        if weights.len() != components.len() || components.is_empty() {
            return invalid("mixture needs one weight per component");
        }
        let (d, g) = (components[0].map.dim(), components[0].map.grid());
        if components
            .iter()
            .any(|c| c.map.dim() != d || c.map.grid() != g)
        {
            return invalid("mixture components must share dimension and grid");
        }
        Ok(MixtureSpec {
            weights,
            components,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].map.dim()
    }

    pub fn grid(&self) -> TimeGrid {
        self.components[0].map.grid()
    }

    /// Every component moved to another grid.
    pub fn restrict(&self, grid: TimeGrid) -> Result<MixtureSpec> {
        let components = self
            .components
            .iter()
            .map(|c| {
                Ok(MixtureComponent {
                    map: c.map.restrict(grid)?,
                    basis: c.basis.clone(),
                    frame: c.frame.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureSpec::new(self.weights.clone(), components)
    }
}

/// Convex combination evaluated in Choi space.
pub fn mix(spec: &MixtureSpec) -> Result<DynamicalMap> {
    let grid = spec.grid();
    let all_analytic = spec
        .components
        .iter()
        .all(|c| c.map.kind() == MapKind::Analytic);
    if all_analytic {
        let weights = spec.weights.clone();
        let maps: Vec<DynamicalMap> = spec.components.iter().map(|c| c.map.clone()).collect();
        let step = maps
            .iter()
            .map(|m| m.derivative_step)
            .fold(f64::INFINITY, f64::min);
        let m = DynamicalMap::analytic(spec.dim(), grid, move |t| {
            let chs = maps
                .iter()
                .map(|m| m.evaluate(t))
                .collect::<Result<Vec<_>>>()?;
            Channel::convex_combination(&weights, &chs)
        });
        Ok(m.with_derivative_step(step).with_label("mixture"))
    } else {
        let per_component = spec
            .components
            .iter()
            .map(|c| c.map.channels())
            .collect::<Result<Vec<_>>>()?;
        let chs = (0..grid.len())
            .map(|i| {
                let at: Vec<Channel> = per_component.iter().map(|v| v[i].clone()).collect();
                Channel::convex_combination(&spec.weights, &at)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DynamicalMap::tabulated(grid, chs)?.with_label("mixture"))
    }
}

/// ‖Λ_t(ρ₁ − ρ₂)‖₁ at every grid point.
pub fn trace_distance_series(
    map: &DynamicalMap,
    rho1: &CMatrix,
    rho2: &CMatrix,
) -> Result<Vec<f64>> {
    let diff = rho1 - rho2;
    (0..map.grid().len())
        .into_par_iter()
        .map(|i| Ok(numerics::trace_norm(&map.at_index(i)?.apply(&diff)?)))
        .collect()
}

/// T(t) and X(t) = d/dt (Tᵀ T) for a qubit map.
pub fn bloch_t_derivative(map: &DynamicalMap, t: f64) -> Result<(RMatrix3, RMatrix3)> {
    if map.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: map.dim(),
            context: "Bloch derivative needs a qubit map",
        });
    }
    let t_mat = map.bloch_at(t)?.t;
    let d = map.derivative(t, gram_of_t)?;
    if d.stencil != Stencil::Central {
        log::warn!("one-sided derivative used at boundary time {t}");
    }
    Ok((t_mat, rmatrix3(&d.central)))
}

/// Tᵀ T of a qubit channel as a dynamic matrix.
pub(crate) fn gram_of_t(_t: f64, ch: &Channel) -> Result<RMatrix> {
    let t = ch.bloch()?.t;
    Ok(dyn3(&(t.transpose() * t)))
}

pub(crate) fn pauli_family(
    grid: TimeGrid,
    f: impl Fn(f64) -> ([f64; 3], [f64; 3]) + Send + Sync + 'static,
) -> DynamicalMap {
    DynamicalMap::analytic(2, grid, move |t| {
        let (lambda, r) = f(t);
        channels::pauli_channel(lambda, r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_abs, qubit_state, RVector3};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(a: f64, b: f64, n: usize) -> TimeGrid {
        TimeGrid::new(a, b, n).unwrap()
    }

    #[test]
    fn tabulated_refuses_off_grid() {
        let g = grid(0.0, 1.0, 5);
        let m = DynamicalMap::tabulated(g, vec![Channel::identity(2); 5]).unwrap();
        assert!(m.at(0.25).is_ok());
        assert!(matches!(m.at(0.3), Err(Error::OffGrid { .. })));
        assert!(DynamicalMap::tabulated(g, vec![Channel::identity(2); 4]).is_err());
    }

    #[test]
    fn analytic_and_tabulated_derivatives_agree() {
        let g = grid(0.0, 1.0, 201);
        let m = depolarizing_family(|t: f64| (-t).exp(), g);
        let tab = DynamicalMap::tabulated(g, m.channels().unwrap()).unwrap();
        for t in [0.0, 0.5, 1.0] {
            let (_, x_exact) = bloch_t_derivative(&m, t).unwrap();
            let (_, x_tab) = bloch_t_derivative(&tab, t).unwrap();
            let expected = -2.0 * (-2.0 * t).exp();
            assert!((x_exact[(0, 0)] - expected).abs() < 1e-8);
            assert!((x_tab[(0, 0)] - expected).abs() < 1e-3);
        }
    }

    #[test]
    fn mixing_single_component_is_identity_operation() {
        let g = grid(0.0, 2.0, 11);
        let m = depolarizing_family(|t: f64| 1.0 / (1.0 + t), g);
        let mixed =
            mix(&MixtureSpec::new(vec![1.0], vec![MixtureComponent::new(m.clone())]).unwrap())
                .unwrap();
        for i in 0..g.len() {
            assert!(
                max_abs(&(mixed.at_index(i).unwrap().choi() - m.at_index(i).unwrap().choi()))
                    < 1e-15
            );
        }
    }

    #[test]
    fn mixture_weights_validated() {
        let g = grid(0.0, 1.0, 3);
        let c = MixtureComponent::new(DynamicalMap::constant(Channel::identity(2), g));
        assert!(MixtureSpec::new(vec![0.5, 0.6], vec![c.clone(), c.clone()]).is_err());
        assert!(MixtureSpec::new(vec![-0.5, 1.5], vec![c.clone(), c.clone()]).is_err());
        let other = MixtureComponent::new(DynamicalMap::constant(
            Channel::identity(2),
            grid(0.0, 2.0, 3),
        ));
        assert!(MixtureSpec::new(vec![0.5, 0.5], vec![c, other]).is_err());
    }

    #[test]
    fn mixture_commutes_with_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = grid(0.0, 1.0, 5);
        let a = sampling::random_channel(&mut rng, 2);
        let b = sampling::random_channel(&mut rng, 2);
        let spec = MixtureSpec::new(
            vec![0.3, 0.7],
            vec![
                MixtureComponent::new(DynamicalMap::constant(a.clone(), g)),
                MixtureComponent::new(DynamicalMap::constant(b.clone(), g)),
            ],
        )
        .unwrap();
        let mixed = mix(&spec).unwrap().at(0.5).unwrap();
        for _ in 0..10 {
            let rho = sampling::random_state(&mut rng, 2);
            let lhs = mixed.apply(&rho).unwrap();
            let rhs = a.apply(&rho).unwrap() * numerics::c(0.3, 0.0)
                + b.apply(&rho).unwrap() * numerics::c(0.7, 0.0);
            assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
    }

    #[test]
    fn trace_distance_series_examples() {
        let g = grid(0.0, 3.0, 31);
        let up = qubit_state(&RVector3::new(0.0, 0.0, 1.0));
        let down = qubit_state(&RVector3::new(0.0, 0.0, -1.0));
        let id = DynamicalMap::constant(Channel::identity(2), g);
        assert!(trace_distance_series(&id, &up, &down)
            .unwrap()
            .iter()
            .all(|&x| (x - 2.0).abs() < 1e-12));
        assert!(trace_distance_series(&id, &up, &up)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));

        let ex1 = depolarizing_example(0.01, 1.0, g).unwrap();
        let series = trace_distance_series(&ex1, &up, &down).unwrap();
        for (i, s) in series.iter().enumerate() {
            assert!((s - 2.0 * example1_lambda(g.time(i), 0.01, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_derivative_examples() {
        let g = grid(0.0, 2.0, 21);
        let (_, x) =
            bloch_t_derivative(&DynamicalMap::constant(Channel::identity(2), g), 1.0).unwrap();
        assert!(x.abs().max() < 1e-12);

        let lam = |t: f64| 0.9 * (-0.5 * t).exp();
        let (_, x) = bloch_t_derivative(&depolarizing_family(lam, g), 1.0).unwrap();
        let expected = 2.0 * lam(1.0) * (-0.5 * lam(1.0));
        assert!((x - RMatrix3::identity() * expected).abs().max() < 1e-8);
        assert!((x - x.transpose()).abs().max() < 1e-9);

        let (eps, t0) = (0.01, 1.0);
        let g1 = grid(0.0, t0 + 2.0 * std::f64::consts::PI, 101);
        let t = t0 + 1.5 * std::f64::consts::PI;
        let (_, x) = bloch_t_derivative(&depolarizing_example(eps, t0, g1).unwrap(), t).unwrap();
        assert!(x.symmetric_eigenvalues().max() > 0.0);
    }

    #[test]
    fn compose_and_conjugate_keep_grid() {
        let g = grid(0.0, 1.0, 5);
        let m = depolarizing_family(|t: f64| 1.0 - 0.5 * t, g);
        let deph = channels::dephasing_channel(&Basis::computational(2));
        let composed = m.compose_after(&deph).unwrap();
        let b = composed.bloch_at(1.0).unwrap();
        assert!((b.t[(0, 0)]).abs() < 1e-14 && (b.t[(2, 2)] - 0.5).abs() < 1e-14);
        let conj = m.conjugated(&identity_unitary(2)).unwrap();
        assert!(max_abs(&(conj.at(0.5).unwrap().choi() - m.at(0.5).unwrap().choi())) < 1e-15);
    }
}

//! JSON map specifications and their construction into dynamical maps.

use std::path::Path;
use std::sync::Arc;

use backflow::channels::{classical_channel, pauli_channel};
use backflow::dynamics::{
    self, evolve_from_generator_with, mix, GklsGenerator, JumpTerm, UnitaryFamily,
};
use backflow::numerics::{self, c, CMatrix, RMatrix, RMatrix3, RVector3};
use backflow::{
    Basis, BlochAffine, Channel, DynamicalMap, MixtureComponent, MixtureSpec, StochasticMatrix,
    TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Top-level map file: a grid, an optional label, and the map itself.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub grid: TimeGrid,
    #[serde(flatten)]
    pub map: MapSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum MapSpec {
    /// λ(t)ρ + (1 − λ(t)) I/2.
    Depolarizing { lambda: FunctionSpec },
    /// Rates of Σ γ_i(t)·½(σ_i ρ σ_i − ρ); λ_i = exp(−Γ_j − Γ_k).
    PauliRates { rates: [FunctionSpec; 3] },
    /// Qubit affine maps, either tabulated (`t`, optional `r`) or diagonal
    /// with function entries (`lambda`, optional `shift`).
    BlochAffineTable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<Vec<[[f64; 3]; 3]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<Vec<[f64; 3]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<[FunctionSpec; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<[FunctionSpec; 3]>,
    },
    /// Column-stochastic M(t) embedded in `basis`.
    Classical {
        matrix: Vec<Vec<FunctionSpec>>,
        #[serde(default)]
        basis: BasisSpec,
    },
    /// Classical map followed by U(t) = exp(−iHt).
    Gcl {
        matrix: Vec<Vec<FunctionSpec>>,
        #[serde(default)]
        basis: BasisSpec,
        hamiltonian: ComplexMatrixSpec,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<ComponentSpec>,
    },
    /// Integrated from Λ₀ = Id with standard-form jump rates.
    Gkls {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hamiltonian: Option<ComplexMatrixSpec>,
        jumps: Vec<JumpSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_step: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub rate: FunctionSpec,
    pub operator: ComplexMatrixSpec,
}

/// Unitary frame V(t) = exp(−iHt); `"identity"` for V = I.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrameSpec {
    Named(String),
    Hamiltonian { hamiltonian: ComplexMatrixSpec },
}

/// Scalar time function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    /// Σ c_k t^k.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// a + b cos(ωt + φ).
    Cosine {
        a: f64,
        b: f64,
        omega: f64,
        phi: f64,
    },
    /// offset + amplitude · e^{−rate·t}.
    Exponential {
        amplitude: f64,
        rate: f64,
        #[serde(default)]
        offset: f64,
    },
    /// One value per grid point.
    Table {
        values: Vec<f64>,
    },
    /// Named functions of the worked examples.
    Builtin {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t0: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisSpec {
    /// `computational`, `x`, `y` or `z`.
    Named(String),
    Axis {
        axis: [f64; 3],
    },
    Vectors {
        vectors: ComplexMatrixSpec,
    },
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::Named("computational".into())
    }
}

/// Rows of entries, each a real number or a `[re, im]` pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexMatrixSpec(pub Vec<Vec<ComplexEntry>>);

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Real(f64),
    Complex([f64; 2]),
}

pub type Func = Arc<dyn Fn(f64) -> backflow::Result<f64> + Send + Sync>;

impl FunctionSpec {
    pub fn is_table(&self) -> bool {
        matches!(self, FunctionSpec::Table { .. })
    }

    /// Points where the function or its derivative may jump.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            FunctionSpec::Builtin { name, t0, .. } => match name.as_str() {
                "example1-lambda" => vec![t0.unwrap_or(dynamics::EXAMPLE1_DEFAULT_T0)],
                "example2-gamma-a" | "example2-gamma-b" => vec![1.0, 2.0],
                _ => vec![],
            },
            _ => vec![],
        }
    }

    pub fn compile(&self, grid: TimeGrid) -> Result<Func, CliError> {
        Ok(match self.clone() {
            FunctionSpec::Constant { value } => Arc::new(move |_| Ok(value)),
            FunctionSpec::Polynomial { coefficients } => {
                Arc::new(move |t| Ok(coefficients.iter().rev().fold(0.0, |acc, &k| acc * t + k)))
            }
            FunctionSpec::Cosine { a, b, omega, phi } => {
                Arc::new(move |t| Ok(a + b * (omega * t + phi).cos()))
            }
            FunctionSpec::Exponential {
                amplitude,
                rate,
                offset,
            } => Arc::new(move |t| Ok(offset + amplitude * (-rate * t).exp())),
            FunctionSpec::Table { values } => {
                if values.len() != grid.len() {
                    return Err(CliError::Input(format!(
                        "table has {} values but the grid has {} points",
                        values.len(),
                        grid.len()
                    )));
                }
                Arc::new(move |t| match grid.index_of(t) {
                    Some(i) => Ok(values[i]),
                    None => Err(backflow::Error::OffGrid {
                        t,
                        start: grid.t_start,
                        end: grid.t_end,
                    }),
                })
            }
            FunctionSpec::Builtin { name, epsilon, t0 } => builtin(&name, epsilon, t0)?,
        })
    }
}

fn builtin(name: &str, epsilon: Option<f64>, t0: Option<f64>) -> Result<Func, CliError> {
    let eps1 = epsilon.unwrap_or(dynamics::EXAMPLE1_DEFAULT_EPSILON);
    let eps2 = epsilon.unwrap_or(dynamics::EXAMPLE2_DEFAULT_EPSILON);
    let t0 = t0.unwrap_or(dynamics::EXAMPLE1_DEFAULT_T0);
    let f: Func = match name {
        "example1-lambda" => {
            dynamics::example1_generator(eps1, t0)?;
            Arc::new(move |t| Ok(dynamics::example1_lambda(t, eps1, t0)))
        }
        "example2-gamma-a" => Arc::new(|t| Ok(dynamics::gamma_a(t))),
        "example2-gamma-b" => Arc::new(move |t| Ok(dynamics::gamma_b(t, eps2))),
        "example3-lambda" => Arc::new(|t| Ok(dynamics::extremal_example_parameters(t).0)),
        "example3-lambda-squared" => Arc::new(|t| Ok(dynamics::extremal_example_parameters(t).1)),
        "example3-shift" => Arc::new(|t| Ok(dynamics::extremal_example_parameters(t).2)),
        other => {
            return Err(CliError::Input(format!(
                "unknown builtin function `{other}`"
            )))
        }
    };
    Ok(f)
}

impl ComplexMatrixSpec {
    pub fn to_matrix(&self) -> Result<CMatrix, CliError> {
        let rows = self.0.len();
        if rows == 0 || self.0.iter().any(|r| r.len() != rows) {
            return Err(CliError::Input(
                "complex matrix must be square and non-empty".into(),
            ));
        }
        Ok(CMatrix::from_fn(rows, rows, |i, j| match self.0[i][j] {
            ComplexEntry::Real(x) => c(x, 0.0),
            ComplexEntry::Complex([re, im]) => c(re, im),
        }))
    }
}

impl BasisSpec {
    pub fn parse_cli(s: &str) -> Result<BasisSpec, CliError> {
        if let Some(rest) = s.strip_prefix("axis:") {
            let v: Vec<f64> = rest
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Input(format!("basis `{s}`: {e}")))?;
            if v.len() != 3 {
                return Err(CliError::Input(format!(
                    "basis `{s}` needs three axis components"
                )));
            }
            return Ok(BasisSpec::Axis {
                axis: [v[0], v[1], v[2]],
            });
        }
        Ok(BasisSpec::Named(s.to_string()))
    }

    pub fn describe(&self) -> String {
        match self {
            BasisSpec::Named(n) => n.clone(),
            BasisSpec::Axis { axis } => format!("axis:{},{},{}", axis[0], axis[1], axis[2]),
            BasisSpec::Vectors { .. } => "vectors".into(),
        }
    }

    pub fn build(&self, dim: usize) -> Result<Basis, CliError> {
        let basis = match self {
            BasisSpec::Named(n) => match n.as_str() {
                "computational" => Basis::computational(dim),
                "x" | "sigma1" if dim == 2 => Basis::pauli_eigenbasis(1),
                "y" | "sigma2" if dim == 2 => Basis::pauli_eigenbasis(2),
                "z" | "sigma3" if dim == 2 => Basis::pauli_eigenbasis(3),
                other => {
                    return Err(CliError::Input(format!(
                        "unknown basis `{other}` for dimension {dim}"
                    )))
                }
            },
            BasisSpec::Axis { axis } => {
                if dim != 2 {
                    return Err(CliError::Input("axis bases need a qubit map".into()));
                }
                Basis::qubit_direction(&RVector3::new(axis[0], axis[1], axis[2]))?
            }
            BasisSpec::Vectors { vectors } => Basis::new(vectors.to_matrix()?)?,
        };
        if basis.dim() != dim {
            return Err(CliError::Input(format!(
                "basis has dimension {}, map has {dim}",
                basis.dim()
            )));
        }
        Ok(basis)
    }
}

impl FrameSpec {
    fn build(&self, dim: usize) -> Result<UnitaryFamily, CliError> {
        match self {
            FrameSpec::Named(n) if n == "identity" => Ok(dynamics::identity_unitary(dim)),
            FrameSpec::Named(n) => Err(CliError::Input(format!("unknown frame `{n}`"))),
            FrameSpec::Hamiltonian { hamiltonian } => {
                hamiltonian_frame(&hamiltonian.to_matrix()?, dim)
            }
        }
    }
}

/// t ↦ exp(−iHt) through the spectral decomposition of H.
fn hamiltonian_frame(h: &CMatrix, dim: usize) -> Result<UnitaryFamily, CliError> {
    if h.nrows() != dim {
        return Err(CliError::Input(format!(
            "Hamiltonian is {}x{}, map has dimension {dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    let eig = numerics::hermitian_eig(h)?;
    Ok(Arc::new(move |t| {
        let phases = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                c(0.0, -eig.values[i] * t).exp()
            } else {
                c(0.0, 0.0)
            }
        });
        &eig.vectors * phases * eig.vectors.adjoint()
    }))
}

/// A constructed map, plus the mixture structure when the spec had one.
pub struct BuiltMap {
    pub map: DynamicalMap,
    pub mixture: Option<MixtureSpec>,
}

pub fn load(path: &Path) -> Result<MapSpecFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Schema errors name the offending field with its line and column.
pub fn parse(text: &str) -> Result<MapSpecFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("schema error: {e}")))
}

impl MapSpecFile {
    pub fn build(&self) -> Result<BuiltMap, CliError> {
        let mut built = self.map.build(self.grid)?;
        if let Some(label) = &self.label {
            built.map = built.map.with_label(label.clone());
        }
        Ok(built)
    }
}

fn compile3(fs: &[FunctionSpec; 3], grid: TimeGrid) -> Result<[Func; 3], CliError> {
    Ok([
        fs[0].compile(grid)?,
        fs[1].compile(grid)?,
        fs[2].compile(grid)?,
    ])
}

/// Analytic when every function is analytic, tabulated on the grid otherwise.
fn family(
    dim: usize,
    grid: TimeGrid,
    tabulated: bool,
    f: impl Fn(f64) -> backflow::Result<Channel> + Send + Sync + 'static,
) -> Result<DynamicalMap, CliError> {
    if tabulated {
        let channels = grid
            .times()
            .into_iter()
            .map(&f)
            .collect::<backflow::Result<Vec<_>>>()?;
        Ok(DynamicalMap::tabulated(grid, channels)?)
    } else {
        Ok(DynamicalMap::analytic(dim, grid, f))
    }
}

/// Γ(t) = ∫γ: from 0 for analytic rates, cumulative trapezoid from the grid
/// start for tabulated ones.
fn integrated(spec: &FunctionSpec, grid: TimeGrid) -> Result<Func, CliError> {
    let f = spec.compile(grid)?;
    if let FunctionSpec::Table { values } = spec {
        let h = grid.step();
        let mut acc = vec![0.0; values.len()];
        for i in 1..values.len() {
            acc[i] = acc[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
        }
        return Ok(Arc::new(move |t| match grid.index_of(t) {
            Some(i) => Ok(acc[i]),
            None => Err(backflow::Error::OffGrid {
                t,
                start: grid.t_start,
                end: grid.t_end,
            }),
        }));
    }
    if grid.t_start < 0.0 {
        return Err(CliError::Input(
            "rate integrals start at t = 0; the grid starts earlier".into(),
        ));
    }
    let breaks = spec.breakpoints();
    Ok(Arc::new(move |t| {
        let g = |tau: f64| f(tau).unwrap_or(f64::NAN);
        numerics::quadrature_piecewise(g, 0.0, t, &breaks, 64)
    }))
}

fn stochastic_fn(
    matrix: &[Vec<FunctionSpec>],
    grid: TimeGrid,
) -> Result<(usize, bool, StochasticFn), CliError> {
    let d = matrix.len();
    if d < 2 || matrix.iter().any(|r| r.len() != d) {
        return Err(CliError::Input(
            "stochastic matrix must be square with at least two rows".into(),
        ));
    }
    let tabulated = matrix.iter().flatten().any(FunctionSpec::is_table);
    let entries = matrix
        .iter()
        .flatten()
        .map(|f| f.compile(grid))
        .collect::<Result<Vec<_>, _>>()?;
    let f: StochasticFn = Arc::new(move |t| {
        let mut m = RMatrix::zeros(d, d);
        for (k, e) in entries.iter().enumerate() {
            m[(k / d, k % d)] = e(t)?;
        }
        StochasticMatrix::new(m)
    });
    Ok((d, tabulated, f))
}

type StochasticFn = Arc<dyn Fn(f64) -> backflow::Result<StochasticMatrix> + Send + Sync>;

impl MapSpec {
    pub fn build(&self, grid: TimeGrid) -> Result<BuiltMap, CliError> {
        let map = match self {
            MapSpec::Depolarizing { lambda } => {
                let l = lambda.compile(grid)?;
                family(2, grid, lambda.is_table(), move |t| {
                    let x = l(t)?;
                    pauli_channel([x; 3], [0.0; 3])
                })?
                .with_label("depolarizing")
            }
            MapSpec::PauliRates { rates } => {
                let tabulated = rates.iter().any(FunctionSpec::is_table);
                let g = [
                    integrated(&rates[0], grid)?,
                    integrated(&rates[1], grid)?,
                    integrated(&rates[2], grid)?,
                ];
                family(2, grid, tabulated, move |t| {
                    let big = [g[0](t)?, g[1](t)?, g[2](t)?];
                    let lambda = [0, 1, 2].map(|i| (-(big[(i + 1) % 3] + big[(i + 2) % 3])).exp());
                    pauli_channel(lambda, [0.0; 3])
                })?
                .with_label("pauli-rates")
            }
            MapSpec::BlochAffineTable {
                t,
                r,
                lambda,
                shift,
            } => bloch_affine(grid, t, r, lambda, shift)?,
            MapSpec::Classical { matrix, basis } => {
                let (d, tabulated, m) = stochastic_fn(matrix, grid)?;
                let b = basis.build(d)?;
                family(d, grid, tabulated, move |t| classical_channel(&m(t)?, &b))?
                    .with_label("classical")
            }
            MapSpec::Gcl {
                matrix,
                basis,
                hamiltonian,
            } => {
                let (d, tabulated, m) = stochastic_fn(matrix, grid)?;
                let b = basis.build(d)?;
                let u = hamiltonian_frame(&hamiltonian.to_matrix()?, d)?;
                family(d, grid, tabulated, move |t| {
                    classical_channel(&m(t)?, &b)?.conjugate(&u(t))
                })?
                .with_label("generalized classical")
            }
            MapSpec::Mixture {
                weights,
                components,
            } => {
                if components.is_empty() {
                    return Err(CliError::Input(
                        "mixture needs at least one component".into(),
                    ));
                }
                let mut comps = Vec::with_capacity(components.len());
                for (k, comp) in components.iter().enumerate() {
                    if matches!(comp.map, MapSpec::Mixture { .. }) {
                        return Err(CliError::Input(format!(
                            "component {}: nested mixtures are not supported",
                            k + 1
                        )));
                    }
                    let inner = comp.map.build(grid)?.map;
                    let d = inner.dim();
                    let mut mc = MixtureComponent::new(inner);
                    if let Some(b) = &comp.basis {
                        mc = mc.with_basis(b.build(d)?);
                    }
                    if let Some(f) = &comp.frame {
                        mc = mc.with_frame(f.build(d)?);
                    }
                    comps.push(mc);
                }
                let spec = MixtureSpec::new(weights.clone(), comps)?;
                let map = mix(&spec)?.with_label("mixture");
                return Ok(BuiltMap {
                    map,
                    mixture: Some(spec),
                });
            }
            MapSpec::Gkls {
                dim,
                hamiltonian,
                jumps,
                max_step,
            } => {
                let mut terms = Vec::with_capacity(jumps.len());
                for (k, j) in jumps.iter().enumerate() {
                    if j.rate.is_table() {
                        return Err(CliError::Input(format!(
                            "jump {}: GKLS rates must be analytic",
                            k + 1
                        )));
                    }
                    let rate = j.rate.compile(grid)?;
                    terms.push(JumpTerm::new(
                        move |t| rate(t).unwrap_or(f64::NAN),
                        j.operator.to_matrix()?,
                    ));
                }
                let mut generator = GklsGenerator::new(*dim, terms)?;
                if let Some(h) = hamiltonian {
                    generator = generator.with_hamiltonian(h.to_matrix()?)?;
                }
                let tol = backflow::Tolerances::default();
                let evolution =
                    evolve_from_generator_with(&generator, grid, max_step.unwrap_or(1e-3), &tol)?;
                for w in &evolution.warnings {
                    log::warn!("{w}");
                }
                evolution.map.with_label("gkls")
            }
        };
        Ok(BuiltMap { map, mixture: None })
    }
}

fn bloch_affine(
    grid: TimeGrid,
    t: &Option<Vec<[[f64; 3]; 3]>>,
    r: &Option<Vec<[f64; 3]>>,
    lambda: &Option<[FunctionSpec; 3]>,
    shift: &Option<[FunctionSpec; 3]>,
) -> Result<DynamicalMap, CliError> {
    match (t, lambda) {
        (Some(ts), None) => {
            if shift.is_some() {
                return Err(CliError::Input(
                    "`shift` goes with `lambda`; tabulated maps take `r`".into(),
                ));
            }
            if ts.len() != grid.len() || r.as_ref().is_some_and(|r| r.len() != grid.len()) {
                return Err(CliError::Input(format!(
                    "bloch-affine tables must have {} entries",
                    grid.len()
                )));
            }
            let channels = ts
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let tm = RMatrix3::from_fn(|a, b| m[a][b]);
                    let rv = r
                        .as_ref()
                        .map_or(RVector3::zeros(), |r| RVector3::from(r[i]));
                    BlochAffine::new(rv, tm).to_channel()
                })
                .collect::<backflow::Result<Vec<_>>>()?;
            Ok(DynamicalMap::tabulated(grid, channels)?.with_label("bloch-affine"))
        }
        (None, Some(ls)) => {
            if r.is_some() {
                return Err(CliError::Input(
                    "`r` goes with `t`; diagonal maps take `shift`".into(),
                ));
            }
            let zero = FunctionSpec::Constant { value: 0.0 };
            let shift = shift.clone().unwrap_or([zero.clone(), zero.clone(), zero]);
            let tabulated = ls.iter().chain(shift.iter()).any(FunctionSpec::is_table);
            let (l, s) = (compile3(ls, grid)?, compile3(&shift, grid)?);
            Ok(family(2, grid, tabulated, move |t| {
                pauli_channel(
                    [l[0](t)?, l[1](t)?, l[2](t)?],
                    [s[0](t)?, s[1](t)?, s[2](t)?],
                )
            })?
            .with_label("bloch-affine"))
        }
        _ => Err(CliError::Input(
            "bloch-affine-table needs exactly one of `t` (tables) or `lambda` (functions)".into(),
        )),
    }
}

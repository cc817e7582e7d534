//! `classify` and `witness`.

use std::collections::BTreeMap;
use std::path::Path;

use backflow::numerics::CMatrix;
use backflow::witness::{self, TwoQubitBloch, Witness};
use backflow::{DynamicalMap, Tolerances};
use serde::{Deserialize, Serialize};

use crate::checks::{self, CheckOptions};
use crate::error::CliError;
use crate::report::{write_json, MapInfo, Report, Series};
use crate::spec::{self, BasisSpec, ComplexMatrixSpec};
use crate::{parse_claimed, ClassifyArgs, WitnessArgs};

/// Evaluates every grid channel so that CPTP violations surface before any
/// check runs.
pub fn validate(map: &DynamicalMap) -> Result<(), CliError> {
    map.channels().map(|_| ()).map_err(|e| match e {
        backflow::Error::NotCptp { min_eigenvalue, trace_deviation } => CliError::Numeric(format!(
            "map is not CPTP on its grid: most negative Choi eigenvalue {min_eigenvalue:e}, trace deviation {trace_deviation:e}"
        )),
        other => other.into(),
    })
}

pub fn classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let tol = args.tol.resolve()?;
    let file = spec::load(&args.map)?;
    let built = file.build()?;
    let interval = match args.interval.as_deref() {
        Some([a, b]) if a < b => Some((*a, *b)),
        Some(v) => {
            return Err(CliError::Input(format!(
                "--interval needs A < B, got {v:?}"
            )))
        }
        None => None,
    };
    let map = checks::restrict(&built.map, interval, args.samples)?;
    let mixture = built
        .mixture
        .as_ref()
        .map(|m| m.restrict(map.grid()))
        .transpose()?;
    validate(&map)?;

    let dim = map.dim();
    let kinds = checks::parse_checks(&args.checks, dim, mixture.is_some())?;
    let basis_specs = if args.basis.is_empty() {
        vec![BasisSpec::default()]
    } else {
        args.basis
            .iter()
            .map(|b| BasisSpec::parse_cli(b))
            .collect::<Result<_, _>>()?
    };
    let bases = basis_specs
        .iter()
        .map(|b| Ok((b.describe(), b.build(dim)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let strong_times = match args.strong_times.as_deref() {
        Some([s, w]) => Some((*s, *w)),
        Some(_) => unreachable!("clap enforces two values"),
        None => None,
    };
    let opts = CheckOptions {
        bases,
        claimed: parse_claimed(&args.claimed_type)?,
        strong_times,
        sphere: args.sphere,
        timings: args.timings,
    };

    let start = std::time::Instant::now();
    let mut series = Series::new(&map.grid());
    let results = checks::run_checks(&map, mixture.as_ref(), &kinds, &opts, &tol, &mut series)?;
    let report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        map: MapInfo::of(&map, args.map.display().to_string()),
        grid: built.map.grid(),
        interval: map.grid(),
        tolerances: tol,
        checks: results,
        extras: BTreeMap::new(),
        wall_time_s: args.timings.then(|| start.elapsed().as_secs_f64()),
    };
    write_json(&report, args.out.as_deref())?;
    if let Some(path) = &args.series {
        series.write(path)?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StateFile {
    Wrapped { choi: ComplexMatrixSpec },
    Bare(ComplexMatrixSpec),
}

#[derive(Debug, Serialize)]
pub struct WitnessReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    pub x: f64,
    /// X > 1 + tolerance: no convex combination of c-c states.
    pub refuted: bool,
    pub tolerance: f64,
    pub r: [f64; 3],
    pub s: [f64; 3],
    pub t: [[f64; 3]; 3],
    pub witness: Option<Witness>,
    pub witness_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn load_state(path: &Path) -> Result<CMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let parsed: StateFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "{}: expected a complex matrix or {{\"choi\": matrix}}: {e}",
            path.display()
        ))
    })?;
    let m = match parsed {
        StateFile::Wrapped { choi } | StateFile::Bare(choi) => choi.to_matrix()?,
    };
    if m.nrows() != 4 {
        return Err(CliError::Input(format!(
            "{}: a two-qubit state is 4x4, got {}x{}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

/// Rejects matrices that are not Hermitian, unit-trace and positive within `tol`.
fn check_density(rho: &CMatrix, tol: &Tolerances) -> Result<(), CliError> {
    let dev = (rho - rho.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev > tol.hermitian.max(1e-12) * 1e3 {
        return Err(CliError::Input(format!(
            "state is not Hermitian (deviation {dev:e})"
        )));
    }
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > tol.reconstruction {
        return Err(CliError::Input(format!(
            "state has trace {trace}, expected 1"
        )));
    }
    let min = backflow::numerics::hermitian_eig(rho)?
        .values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -tol.cptp {
        return Err(CliError::Input(format!(
            "state is not positive (eigenvalue {min:e})"
        )));
    }
    Ok(())
}

pub fn witness(args: &WitnessArgs) -> Result<(), CliError> {
    let tol = args.tol.resolve()?;
    let (state, source, time) = match (&args.choi, &args.map, args.time) {
        (Some(path), _, _) => {
            let rho = load_state(path)?;
            check_density(&rho, &tol)?;
            (
                TwoQubitBloch::from_density(&rho)?,
                path.display().to_string(),
                None,
            )
        }
        (None, Some(path), Some(t)) => {
            let map = spec::load(path)?.build()?.map;
            if map.dim() != 2 {
                return Err(CliError::Input(format!(
                    "the witness needs a qubit map, got dimension {}",
                    map.dim()
                )));
            }
            (
                witness::choi_state(&map.at(t)?)?,
                path.display().to_string(),
                Some(t),
            )
        }
        _ => {
            return Err(CliError::Input(
                "give --choi FILE or --map FILE --time T".into(),
            ))
        }
    };
    let x = witness::x_functional(&state)?;
    let (w, note) = match witness::optimal_witness(&state) {
        Ok(w) => (Some(w), None),
        Err(backflow::Error::InvalidInput(msg)) => {
            (None, Some(format!("no optimal witness: {msg}")))
        }
        Err(e) => return Err(e.into()),
    };
    let value = w
        .as_ref()
        .map(|w| witness::witness_value(w, &state))
        .transpose()?;
    let report = WitnessReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        source,
        time,
        x,
        refuted: x - 1.0 > tol.witness,
        tolerance: tol.witness,
        r: [state.r.x, state.r.y, state.r.z],
        s: [state.s.x, state.s.y, state.s.z],
        t: [0, 1, 2].map(|i| [state.t[(i, 0)], state.t[(i, 1)], state.t[(i, 2)]]),
        witness: w,
        witness_value: value,
        note,
    };
    write_json(&report, args.out.as_deref())
}

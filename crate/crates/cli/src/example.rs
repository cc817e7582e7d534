//! Built-in worked examples: each writes map.json, report.json and series.csv.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::time::Instant;

use backflow::certify::{self, ClaimedType};
use backflow::dynamics::{
    self, mix, EXAMPLE1_DEFAULT_EPSILON, EXAMPLE1_DEFAULT_T0, EXAMPLE2_DEFAULT_EPSILON,
};
use backflow::numerics::max_abs;
use backflow::{DynamicalMap, TimeGrid, Tolerances};
use serde_json::{json, Value};

use crate::checks::{self, CheckKind, CheckOptions};
use crate::commands::validate;
use crate::error::CliError;
use crate::report::{write_json, CheckResult, MapInfo, Report, Series};
use crate::spec::{BasisSpec, ComponentSpec, FrameSpec, FunctionSpec, MapSpec, MapSpecFile};
use crate::ExampleArgs;

struct Output {
    file: MapSpecFile,
    checks: Vec<CheckResult>,
    extras: BTreeMap<String, Value>,
    series: Series,
    map: DynamicalMap,
}

pub fn run(args: &ExampleArgs) -> Result<(), CliError> {
    let tol = args.tol.resolve()?;
    let start = Instant::now();
    let out = match args.name.as_str() {
        "ex1" => ex1(args, &tol)?,
        "ex2" => ex2(args, &tol)?,
        "ex3" => ex3(args, &tol)?,
        other => {
            return Err(CliError::Input(format!(
                "unknown example `{other}` (ex1, ex2, ex3)"
            )))
        }
    };
    let report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        map: MapInfo::of(&out.map, format!("example {}", args.name)),
        grid: out.map.grid(),
        interval: out.map.grid(),
        tolerances: tol,
        checks: out.checks,
        extras: out.extras,
        wall_time_s: args.timings.then(|| start.elapsed().as_secs_f64()),
    };
    let dir = &args.out;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    write_json(&out.file, Some(&dir.join("map.json")))?;
    write_json(&report, Some(&dir.join("report.json")))?;
    out.series.write(&dir.join("series.csv"))?;
    Ok(())
}

fn options(
    args: &ExampleArgs,
    bases: &[&str],
    claimed: ClaimedType,
) -> Result<CheckOptions, CliError> {
    let bases = bases
        .iter()
        .map(|&b| Ok((b.to_string(), BasisSpec::Named(b.into()).build(2)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(CheckOptions {
        bases,
        claimed,
        strong_times: None,
        sphere: certify::DEFAULT_SPHERE_SIZE,
        timings: args.timings,
    })
}

/// Runs `kinds` on a sub-interval; the series of sub-interval checks is not
/// aligned with the report grid and is dropped.
fn on_interval(
    map: &DynamicalMap,
    interval: TimeGrid,
    kinds: &[CheckKind],
    opts: &CheckOptions,
    tol: &Tolerances,
) -> Result<Vec<CheckResult>, CliError> {
    let sub = map.restrict(interval)?;
    let mut scratch = Series::new(&interval);
    let results = checks::run_checks(&sub, None, kinds, opts, tol, &mut scratch)?;
    Ok(results.into_iter().map(|r| r.on(interval)).collect())
}

fn builtin(name: &str, epsilon: Option<f64>, t0: Option<f64>) -> FunctionSpec {
    FunctionSpec::Builtin {
        name: name.into(),
        epsilon,
        t0,
    }
}

/// Depolarizing family with a quadratic decay then an oscillation: CP-divisible
/// before t0, BLP-violating after t0 + π, yet a mixture of classical maps.
fn ex1(args: &ExampleArgs, tol: &Tolerances) -> Result<Output, CliError> {
    let eps = args.epsilon.unwrap_or(EXAMPLE1_DEFAULT_EPSILON);
    let t0 = args.t0.unwrap_or(EXAMPLE1_DEFAULT_T0);
    let grid = TimeGrid::new(0.0, t0 + 2.0 * PI, 1001)?;
    let file = MapSpecFile {
        label: Some("example 1".into()),
        grid,
        map: MapSpec::Depolarizing {
            lambda: builtin("example1-lambda", Some(eps), Some(t0)),
        },
    };
    let map = file.build()?.map;
    validate(&map)?;
    let opts = options(args, &["computational"], ClaimedType::Type0)?;
    let mut series = Series::new(&grid);
    let mut results = checks::run_checks(
        &map,
        None,
        &[CheckKind::Blp, CheckKind::Cpdiv, CheckKind::Witness],
        &opts,
        tol,
        &mut series,
    )?;
    let n_cp = 800;
    let cp_grid = TimeGrid::new(0.0, t0 * (n_cp - 1) as f64 / n_cp as f64, n_cp)?;
    results.extend(on_interval(&map, cp_grid, &[CheckKind::Cpdiv], &opts, tol)?);
    let before = TimeGrid::new(0.0, t0 + PI - 0.1, 1001)?;
    results.extend(on_interval(&map, before, &[CheckKind::Blp], &opts, tol)?);
    let after = TimeGrid::new(t0 + PI + 0.1, t0 + 2.0 * PI, 1001)?;
    results.extend(on_interval(&map, after, &[CheckKind::Blp], &opts, tol)?);

    // The classical decomposition exists from t0 on.
    let late = TimeGrid::new(t0, t0 + 2.0 * PI, 1001)?;
    results.extend(on_interval(&map, late, &[CheckKind::Weak], &opts, tol)?);
    let mixture = dynamics::example1_mixture(eps, t0, late)?;
    let v = certify::verify_decomposition(&mixture, late, ClaimedType::Type0, tol)?;
    results.push(
        CheckResult::verdict(
            "decomposition",
            v.with_note("claimed type 0, classical maps in the σ1, σ2, σ3 eigenbases"),
        )
        .on(late),
    );

    let mixed = mix(&mixture)?;
    let late_map = map.restrict(late)?;
    let mut distance: f64 = 0.0;
    for i in 0..late.len() {
        distance = distance.max(max_abs(
            &(mixed.at_index(i)?.choi() - late_map.at_index(i)?.choi()),
        ));
    }
    let mut extras = BTreeMap::new();
    extras.insert("epsilon".into(), json!(eps));
    extras.insert("t0".into(), json!(t0));
    extras.insert("mixture_choi_distance_max".into(), json!(distance));
    Ok(Output {
        file,
        checks: results,
        extras,
        series,
        map,
    })
}

/// Equal mixture of three Pauli-rate maps, each elementary in its own σ_k
/// basis, whose mixture is not elementary.
fn ex2(args: &ExampleArgs, tol: &Tolerances) -> Result<Output, CliError> {
    if args.t0.is_some() {
        return Err(CliError::Input("ex2 takes no --t0".into()));
    }
    let eps = args.epsilon.unwrap_or(EXAMPLE2_DEFAULT_EPSILON);
    if !eps.is_finite() || eps <= 0.0 {
        return Err(CliError::Input(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let grid = TimeGrid::new(0.0, 3.0, 301)?;
    let axes = ["x", "y", "z"];
    let components = (0..3)
        .map(|k| ComponentSpec {
            map: MapSpec::PauliRates {
                rates: [0, 1, 2].map(|i| {
                    if i == k {
                        builtin("example2-gamma-b", Some(eps), None)
                    } else {
                        builtin("example2-gamma-a", None, None)
                    }
                }),
            },
            basis: Some(BasisSpec::Named(axes[k].into())),
            frame: Some(FrameSpec::Named("identity".into())),
        })
        .collect();
    let file = MapSpecFile {
        label: Some("example 2".into()),
        grid,
        map: MapSpec::Mixture {
            weights: vec![1.0 / 3.0; 3],
            components,
        },
    };
    let built = file.build()?;
    let (map, mixture) = (built.map, built.mixture.expect("mixture spec"));
    validate(&map)?;

    let mut series = Series::new(&grid);
    let mut results = Vec::new();
    for (k, comp) in mixture.components().iter().enumerate() {
        let opts = options(args, &[axes[k]], ClaimedType::StrongNone)?;
        let mut r = checks::run_checks(
            &comp.map,
            None,
            &[CheckKind::Elementary],
            &opts,
            tol,
            &mut Series::new(&grid),
        )?
        .remove(0);
        r.name = format!("elementary[component {}]", k + 1);
        results.push(r);
    }
    let opts = options(args, &axes, ClaimedType::StrongNone)?;
    results.extend(checks::run_checks(
        &map,
        None,
        &[CheckKind::Elementary, CheckKind::Blp],
        &opts,
        tol,
        &mut series,
    )?);
    for claimed in [ClaimedType::StrongNone, ClaimedType::Type0] {
        let v = certify::verify_decomposition(&mixture, grid, claimed, tol)?;
        results.push(CheckResult::verdict(
            "decomposition",
            v.with_note(format!("claimed type {}", checks::claimed_name(claimed))),
        ));
    }
    let lambda: Vec<Option<f64>> = grid
        .times()
        .into_iter()
        .map(|t| dynamics::example2_lambda(t, eps).ok())
        .collect();
    series.push("lambda (dimensionless)", lambda);

    let (l1, l2) = (
        dynamics::example2_lambda(1.0, eps)?,
        dynamics::example2_lambda(2.0, eps)?,
    );
    let mut extras = BTreeMap::new();
    extras.insert("epsilon".into(), json!(eps));
    extras.insert(
        "gamma_a_integral_1".into(),
        json!(dynamics::integrated_gamma_a(1.0)?),
    );
    extras.insert(
        "gamma_a_integral_2".into(),
        json!(dynamics::integrated_gamma_a(2.0)?),
    );
    extras.insert("lambda_1".into(), json!(l1));
    extras.insert("lambda_2".into(), json!(l2));
    extras.insert("lambda_1_lt_lambda_2".into(), json!(l1 < l2));
    extras.insert(
        "threshold_closed_form".into(),
        json!(dynamics::example2_threshold()),
    );
    extras.insert(
        "threshold_bisection".into(),
        json!(dynamics::example2_threshold_bisection(0.01, 0.5, 1e-12)?),
    );
    Ok(Output {
        file,
        checks: results,
        extras,
        series,
        map,
    })
}

/// Extremal qubit family with T = diag(λ, λ, λ²) and a shift along z.
fn ex3(args: &ExampleArgs, tol: &Tolerances) -> Result<Output, CliError> {
    if args.epsilon.is_some() || args.t0.is_some() {
        return Err(CliError::Input("ex3 takes no --epsilon or --t0".into()));
    }
    let grid = TimeGrid::new(0.0, FRAC_PI_2, 1001)?;
    let zero = FunctionSpec::Constant { value: 0.0 };
    let file = MapSpecFile {
        label: Some("example 3".into()),
        grid,
        map: MapSpec::BlochAffineTable {
            t: None,
            r: None,
            lambda: Some([
                builtin("example3-lambda", None, None),
                builtin("example3-lambda", None, None),
                builtin("example3-lambda-squared", None, None),
            ]),
            shift: Some([zero.clone(), zero, builtin("example3-shift", None, None)]),
        },
    };
    let map = file.build()?.map;
    validate(&map)?;
    let mut opts = options(args, &["computational"], ClaimedType::StrongNone)?;
    opts.strong_times = Some((FRAC_PI_6, FRAC_PI_3));
    let mut series = Series::new(&grid);
    let mut results = checks::run_checks(
        &map,
        None,
        &[
            CheckKind::Blp,
            CheckKind::Witness,
            CheckKind::Weak,
            CheckKind::Strong,
        ],
        &opts,
        tol,
        &mut series,
    )?;
    for (label, t) in [("π/6", FRAC_PI_6), ("π/4", FRAC_PI_4), ("π/3", FRAC_PI_3)] {
        let v = certify::is_extremal(&map.at(t)?, tol);
        results.push(CheckResult::verdict(format!("extremal[t={label}]"), v));
    }
    Ok(Output {
        file,
        checks: results,
        extras: BTreeMap::new(),
        series,
        map,
    })
}

//! Named checks shared by `classify` and `example`.

use std::str::FromStr;
use std::time::Instant;

use backflow::certify::{self, ClaimedType};
use backflow::classify::{self, BlockStructure};
use backflow::dynamics::{identity_unitary, trace_distance_series};
use backflow::numerics::{c, identity, pauli, CMatrix, RVector3};
use backflow::witness;
use backflow::{Basis, DynamicalMap, MixtureSpec, TimeGrid, Tolerances, Verdict};

use crate::error::CliError;
use crate::report::{CheckResult, Series, WitnessSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Blp,
    Cpdiv,
    Elementary,
    BlockElementary,
    Coherence,
    Witness,
    Weak,
    Strong,
    Decomposition,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Blp,
        CheckKind::Cpdiv,
        CheckKind::Elementary,
        CheckKind::BlockElementary,
        CheckKind::Coherence,
        CheckKind::Witness,
        CheckKind::Weak,
        CheckKind::Strong,
        CheckKind::Decomposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Blp => "blp",
            CheckKind::Cpdiv => "cpdiv",
            CheckKind::Elementary => "elementary",
            CheckKind::BlockElementary => "block-elementary",
            CheckKind::Coherence => "coherence",
            CheckKind::Witness => "witness",
            CheckKind::Weak => "weak",
            CheckKind::Strong => "strong",
            CheckKind::Decomposition => "decomposition",
        }
    }

    fn qubit_only(self) -> bool {
        matches!(
            self,
            CheckKind::Coherence | CheckKind::Witness | CheckKind::Weak | CheckKind::Strong
        )
    }
}

impl FromStr for CheckKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = CheckKind::ALL.iter().map(|k| k.name()).collect();
                CliError::Input(format!(
                    "unknown check `{s}` (known: {}, all)",
                    known.join(", ")
                ))
            })
    }
}

/// Parses a check list, expanding `all` to what applies to the map and
/// dropping repeats.
pub fn parse_checks(
    names: &[String],
    dim: usize,
    has_mixture: bool,
) -> Result<Vec<CheckKind>, CliError> {
    let mut out = Vec::new();
    for name in names {
        let kinds: Vec<CheckKind> = if name == "all" {
            CheckKind::ALL
                .into_iter()
                .filter(|k| {
                    (dim == 2 || !k.qubit_only()) && (has_mixture || *k != CheckKind::Decomposition)
                })
                .collect()
        } else {
            vec![name.parse()?]
        };
        for k in kinds {
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    Ok(out)
}

pub struct CheckOptions {
    pub bases: Vec<(String, Basis)>,
    pub claimed: ClaimedType,
    pub strong_times: Option<(f64, f64)>,
    pub sphere: usize,
    pub timings: bool,
}

/// Runs `kinds` on `map` (already restricted to `interval`) and appends
/// per-point series columns.
pub fn run_checks(
    map: &DynamicalMap,
    mixture: Option<&MixtureSpec>,
    kinds: &[CheckKind],
    opts: &CheckOptions,
    tol: &Tolerances,
    series: &mut Series,
) -> Result<Vec<CheckResult>, CliError> {
    let interval = map.grid();
    let mut results = Vec::with_capacity(kinds.len());
    let mut blp_direction = None;
    for &kind in kinds {
        let start = Instant::now();
        let mut result = match kind {
            CheckKind::Blp => {
                let v = classify::check_blp(map, tol)?;
                series.push_verdict("blp", &v);
                blp_direction = classify::witness_direction(&v);
                CheckResult::verdict("blp", v)
            }
            CheckKind::Cpdiv => {
                let v = classify::check_cp_divisible(map, tol)?;
                series.push_verdict("cpdiv", &v);
                CheckResult::verdict("cpdiv", v)
            }
            CheckKind::Elementary => per_basis("elementary", opts, series, |b| {
                classify::check_elementary(map, b, tol)
            })?,
            CheckKind::BlockElementary => per_basis("block-elementary", opts, series, |b| {
                classify::check_block_diagonal_elementary(
                    map,
                    b,
                    &identity_unitary(map.dim()),
                    BlockStructure::Block,
                    tol,
                )
            })?,
            CheckKind::Coherence => per_basis("coherence", opts, series, |b| {
                classify::check_coherence_monotone(map, b, &identity_unitary(map.dim()), tol)
            })?,
            CheckKind::Witness => {
                let r = witness::refute_type0(map, interval, tol)?;
                series.push(
                    "X (dimensionless)",
                    r.x_series.iter().map(|&x| Some(x)).collect(),
                );
                let summary = WitnessSummary {
                    x_max: r.x_max,
                    time: r.time,
                    refuted: r.refuted(),
                    witness: r.witness,
                };
                CheckResult {
                    witness: Some(summary),
                    ..CheckResult::verdict("witness", r.verdict)
                }
            }
            CheckKind::Weak => CheckResult::certificate(
                "weak",
                certify::weak_backflow_verdict(map, interval, tol)?,
            ),
            CheckKind::Strong => {
                let (s, w) = opts
                    .strong_times
                    .unwrap_or_else(|| certify::default_certificate_times(&interval));
                CheckResult::certificate(
                    "strong",
                    certify::strong_backflow_certificate(map, s, w, opts.sphere, tol)?,
                )
            }
            CheckKind::Decomposition => {
                let spec = mixture.ok_or_else(|| {
                    CliError::Input(
                        "the decomposition check needs a mixture map spec with basis annotations"
                            .into(),
                    )
                })?;
                let v = certify::verify_decomposition(spec, interval, opts.claimed, tol)?;
                CheckResult::verdict(
                    "decomposition",
                    v.with_note(format!("claimed type {}", claimed_name(opts.claimed))),
                )
            }
        };
        if opts.timings {
            result.wall_time_s = Some(start.elapsed().as_secs_f64());
        }
        results.push(result);
    }
    if map.dim() == 2 {
        let n = blp_direction.unwrap_or_else(RVector3::z);
        series.push(
            format!("trace_distance_n=({},{},{}) (dimensionless)", n.x, n.y, n.z),
            pair_distance(map, &n)?.into_iter().map(Some).collect(),
        );
    }
    Ok(results)
}

pub fn claimed_name(c: ClaimedType) -> &'static str {
    match c {
        ClaimedType::Type0 => "0",
        ClaimedType::TypeI => "I",
        ClaimedType::TypeII => "II",
        ClaimedType::StrongNone => "strong-none",
    }
}

/// Trace distance between the Bloch states ±n.
fn pair_distance(map: &DynamicalMap, n: &RVector3) -> Result<Vec<f64>, CliError> {
    let half = identity(2) * c(0.5, 0.0);
    let mut ns = CMatrix::zeros(2, 2);
    for k in 0..3 {
        ns += pauli(k + 1) * c(0.5 * n[k], 0.0);
    }
    Ok(trace_distance_series(map, &(&half + &ns), &(&half - &ns))?)
}

fn per_basis(
    name: &str,
    opts: &CheckOptions,
    series: &mut Series,
    check: impl Fn(&Basis) -> backflow::Result<Verdict>,
) -> Result<CheckResult, CliError> {
    if opts.bases.is_empty() {
        return Err(CliError::Input(format!(
            "check `{name}` needs at least one basis"
        )));
    }
    let mut parts = Vec::with_capacity(opts.bases.len());
    for (label, b) in &opts.bases {
        let v = check(b)?;
        series.push_verdict(&format!("{name}[{label}]"), &v);
        parts.push(CheckResult::verdict(name, v).with_basis(label.clone()));
    }
    if parts.len() == 1 {
        return Ok(parts.pop().expect("one part"));
    }
    let refs: Vec<(&str, &Verdict)> = parts
        .iter()
        .map(|p| {
            (
                p.basis.as_deref().unwrap_or_default(),
                p.verdict.as_ref().expect("grid check"),
            )
        })
        .collect();
    let combined = Verdict::all_of(&refs);
    Ok(CheckResult {
        parts,
        ..CheckResult::verdict(name, combined)
    })
}

/// Restriction to `interval`; for tabulated maps the default sample count
/// keeps the grid spacing.
pub fn restrict(
    map: &DynamicalMap,
    interval: Option<(f64, f64)>,
    samples: Option<usize>,
) -> Result<DynamicalMap, CliError> {
    let Some((a, b)) = interval else {
        return match samples {
            Some(n) => {
                let g = map.grid();
                Ok(map.restrict(TimeGrid::new(g.t_start, g.t_end, n)?)?)
            }
            None => Ok(map.clone()),
        };
    };
    let n = match (samples, map.kind()) {
        (Some(n), _) => n,
        (None, backflow::dynamics::MapKind::Tabulated) => {
            ((b - a) / map.grid().step()).round() as usize + 1
        }
        (None, backflow::dynamics::MapKind::Analytic) => 1001,
    };
    Ok(map.restrict(TimeGrid::new(a, b, n)?)?)
}

//! Certificates of quantum backflow.
//!
//! Weak: backflow is present (BLP fails) and the Choi states exclude a
//! type-0 decomposition. Strong: the channels at two times s < w are
//! extreme points of the qubit channel set, so every decomposition is
//! trivial there, and for every measurement basis some pair of
//! indistinguishable states becomes more distinguishable from s to w. Only
//! the two slices s and w enter, so the certificate also covers
//! time-dependent mixtures whose weight concentrates on one component at
//! both times.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{Basis, Channel};
use crate::classify::{self, containment_violation, BlockStructure};
use crate::dynamics::{identity_unitary, DynamicalMap, MixtureSpec, UnitaryFamily};
use crate::error::{invalid, Error, Result};
use crate::numerics::{
    frame_with_axis, singular_values, CMatrix, RMatrix, RMatrix3, RVector3, TimeGrid,
};
use crate::tolerance::Tolerances;
use crate::verdict::{PointMargin, Status, Verdict, WitnessPoint};
use crate::witness::{refute_type0, Witness};

pub const DEFAULT_SPHERE_SIZE: usize = 500;

/// Relative Gram singular values at or below this are a definite failure;
/// between it and the extremality tolerance the verdict is indeterminate.
const EXTREMAL_FAIL_BAND: f64 = 1e-10;

/// `n` nearly uniform unit vectors on the sphere (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<RVector3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rad = (1.0 - y * y).max(0.0).sqrt();
            let phi = golden * i as f64;
            RVector3::new(rad * phi.cos(), y, rad * phi.sin())
        })
        .collect()
}

/// A channel is extreme iff {K_i† K_j} is linearly independent for a
/// minimal Kraus set. Independence is measured by the smallest singular value
/// of the Gram matrix of those products relative to the largest.
pub fn is_extremal(ch: &Channel, tol: &Tolerances) -> Verdict {
    let kraus = ch.kraus_with_tol(tol.kraus_rank);
    let d = ch.dim();
    let r = kraus.len();
    let mut cols = CMatrix::zeros(d * d, r * r);
    for i in 0..r {
        for j in 0..r {
            let p = kraus[i].adjoint() * &kraus[j];
            for (k, v) in p.iter().enumerate() {
                cols[(k, i * r + j)] = *v;
            }
        }
    }
    let gram = cols.adjoint() * &cols;
    let sv = singular_values(&gram);
    let rel = if r * r > d * d {
        0.0
    } else {
        sv[sv.len() - 1] / sv[0]
    };
    let status = if rel > tol.extremal_gram {
        Status::Pass
    } else if rel > EXTREMAL_FAIL_BAND {
        Status::Indeterminate
    } else {
        Status::Fail
    };
    let detail = format!("Kraus rank {r}, relative Gram singular value {rel:.3e}");
    Verdict {
        status,
        margin: -rel,
        tolerance: -tol.extremal_gram,
        witness_point: (status != Status::Pass).then(|| WitnessPoint {
            detail: Some(detail.clone()),
            ..Default::default()
        }),
        grid: None,
        sampled: false,
        notes: vec![detail],
        points: vec![],
    }
}

/// λ_max of the ⊥n block of Rₙᵀ Δ Rₙ: the largest increase of |T m|² over
/// unit m ⊥ n.
pub fn perpendicular_increase(delta: &RMatrix3, n: &RVector3) -> f64 {
    let r = frame_with_axis(n, 0.0);
    let y = r.transpose() * delta * r;
    let (a, b, c) = (y[(0, 0)], 0.5 * (y[(0, 1)] + y[(1, 0)]), y[(1, 1)]);
    0.5 * (a + c) + (0.25 * (a - c).powi(2) + b * b).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Weak,
    Strong,
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<(f64, f64)>,
    /// Minimum over sphere directions of the best ⊥-plane increase.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_direction: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sphere_size: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub extremality: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blp: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type0: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
}

impl Certificate {
    fn empty(kind: CertificateKind) -> Certificate {
        Certificate {
            kind,
            times: None,
            min_margin: None,
            min_direction: None,
            sphere_size: None,
            extremality: vec![],
            blp: None,
            type0: None,
            x_max: None,
            witness: None,
            grid: None,
        }
    }
}

/// Strong-sense certificate from two time slices s < w.
pub fn strong_backflow_certificate(
    map: &DynamicalMap,
    s: f64,
    w: f64,
    sphere_size: usize,
    tol: &Tolerances,
) -> Result<Certificate> {
    if map.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: map.dim(),
            context: "strong certificate needs a qubit map",
        });
    }
    if !(s < w) {
        return invalid(format!(
            "certificate times must satisfy s < w, got s = {s}, w = {w}"
        ));
    }
    if sphere_size == 0 {
        return invalid("sphere grid needs at least one direction");
    }
    let (ch_s, ch_w) = (map.at(s)?, map.at(w)?);
    let (t_s, t_w) = (ch_s.bloch()?.t, ch_w.bloch()?.t);
    let delta = t_w.transpose() * t_w - t_s.transpose() * t_s;
    let dirs = fibonacci_sphere(sphere_size);
    let margins: Vec<f64> = dirs
        .par_iter()
        .map(|n| perpendicular_increase(&delta, n))
        .collect();
    let mut best = 0;
    for (i, &m) in margins.iter().enumerate() {
        if m < margins[best] {
            best = i;
        }
    }
    let extremality = vec![is_extremal(&ch_s, tol), is_extremal(&ch_w, tol)];
    let granted = extremality.iter().all(Verdict::passed) && margins[best] > tol.witness;
    let n = dirs[best];
    Ok(Certificate {
        times: Some((s, w)),
        min_margin: Some(margins[best]),
        min_direction: Some([n.x, n.y, n.z]),
        sphere_size: Some(sphere_size),
        extremality,
        grid: Some(map.grid()),
        ..Certificate::empty(if granted {
            CertificateKind::Strong
        } else {
            CertificateKind::None
        })
    })
}

/// Weak-sense backflow: BLP fails and no type-0 decomposition exists on the
/// interval.
pub fn weak_backflow_verdict(
    map: &DynamicalMap,
    interval: TimeGrid,
    tol: &Tolerances,
) -> Result<Certificate> {
    if map.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: map.dim(),
            context: "weak verdict needs a qubit map",
        });
    }
    let restricted = map.restrict(interval)?;
    let blp = classify::check_blp(&restricted, tol)?;
    let refutation = refute_type0(&restricted, interval, tol)?;
    let kind = if blp.failed() && refutation.refuted() {
        CertificateKind::Weak
    } else {
        CertificateKind::None
    };
    Ok(Certificate {
        blp: Some(blp),
        type0: Some(refutation.verdict),
        x_max: Some(refutation.x_max),
        witness: Some(refutation.witness),
        times: None,
        grid: Some(interval),
        ..Certificate::empty(kind)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClaimedType {
    #[serde(rename = "0")]
    Type0,
    #[serde(rename = "I")]
    TypeI,
    #[serde(rename = "II")]
    TypeII,
    #[serde(rename = "strong-none")]
    StrongNone,
}

impl FromStr for ClaimedType {
    type Err = Error;

    fn from_str(s: &str) -> Result<ClaimedType> {
        match s {
            "0" => Ok(ClaimedType::Type0),
            "I" | "1" => Ok(ClaimedType::TypeI),
            "II" | "2" => Ok(ClaimedType::TypeII),
            "strong-none" => Ok(ClaimedType::StrongNone),
            other => invalid(format!(
                "unknown decomposition type '{other}' (expected 0, I, II or strong-none)"
            )),
        }
    }
}

/// Largest deviation of a channel from classical action in `basis`:
/// diagonal units must map to diagonal matrices and off-diagonal units to 0.
pub fn classical_violation(ch: &Channel, basis: &Basis) -> f64 {
    let d = ch.dim();
    let (diag, _) = containment_violation(ch, basis, BlockStructure::DiagonalOnly);
    let mut off: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                let out =
                    basis.coordinates(&ch.apply(&basis.unit(i, j)).expect("dimension checked"));
                off = off.max(out.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
    }
    diag.max(off)
}

fn check_generalized_classical(
    map: &DynamicalMap,
    basis: &Basis,
    frame: &UnitaryFamily,
    tol: &Tolerances,
) -> Result<Verdict> {
    let grid = map.grid();
    let margins: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ch = map.at_index(i)?.conjugate(&frame(grid.time(i)))?;
            Ok(classical_violation(&ch, basis))
        })
        .collect::<Result<_>>()?;
    let points = margins
        .iter()
        .enumerate()
        .map(|(i, &m)| PointMargin {
            time: grid.time(i),
            margin: m,
            status: if m <= tol.structure {
                Status::Pass
            } else {
                Status::Fail
            },
            direction: None,
        })
        .collect();
    Ok(Verdict::from_points(points, tol.structure, Some(grid)))
}

/// Checks a claimed decomposition component by component; never searches
/// for one. Types 0, I and II need each component's frame V(t), so that
/// V(t) Λ_t(·) V(t)† has the claimed structure in the component's basis.
pub fn verify_decomposition(
    spec: &MixtureSpec,
    interval: TimeGrid,
    claimed: ClaimedType,
    tol: &Tolerances,
) -> Result<Verdict> {
    let spec = spec.restrict(interval)?;
    let mut verdicts = Vec::new();
    for (k, comp) in spec.components().iter().enumerate() {
        let Some(basis) = &comp.basis else {
            return invalid(format!("component {} has no basis annotation", k + 1));
        };
        let frame = match (&comp.frame, claimed) {
            (Some(f), _) => f.clone(),
            (None, ClaimedType::StrongNone) => identity_unitary(comp.map.dim()),
            (None, _) => return invalid(format!("component {} has no frame annotation", k + 1)),
        };
        let v = match claimed {
            ClaimedType::StrongNone => classify::check_elementary(&comp.map, basis, tol)?,
            ClaimedType::TypeII => classify::check_block_diagonal_elementary(
                &comp.map,
                basis,
                &frame,
                BlockStructure::DiagonalOnly,
                tol,
            )?,
            ClaimedType::TypeI => classify::check_block_diagonal_elementary(
                &comp.map,
                basis,
                &frame,
                BlockStructure::Block,
                tol,
            )?,
            ClaimedType::Type0 => check_generalized_classical(&comp.map, basis, &frame, tol)?,
        };
        verdicts.push((format!("component {}", k + 1), v));
    }
    let parts: Vec<(&str, &Verdict)> = verdicts.iter().map(|(n, v)| (n.as_str(), v)).collect();
    Ok(Verdict::all_of(&parts))
}

/// Default strong-certificate times: the thirds of the interval.
pub fn default_certificate_times(grid: &TimeGrid) -> (f64, f64) {
    let len = grid.t_end - grid.t_start;
    (grid.t_start + len / 3.0, grid.t_start + 2.0 * len / 3.0)
}

/// Tᵀ(w)T(w) − Tᵀ(s)T(s) as a dynamic matrix, for reports.
pub fn gram_increase(map: &DynamicalMap, s: f64, w: f64) -> Result<RMatrix> {
    let (t_s, t_w) = (map.bloch_at(s)?.t, map.bloch_at(w)?.t);
    Ok(crate::numerics::dyn3(
        &(t_w.transpose() * t_w - t_s.transpose() * t_s),
    ))
}

//! Outcome of a grid-based check.

use serde::{Deserialize, Serialize};

use crate::numerics::TimeGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

impl Status {
    fn severity(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Indeterminate => 1,
            Status::Fail => 2,
        }
    }

    /// The more severe of two statuses (fail > indeterminate > pass).
    pub fn worst(self, other: Status) -> Status {
        if other.severity() > self.severity() {
            other
        } else {
            self
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Indeterminate => "indeterminate",
        }
    }
}

/// Where a check was violated: a time, optionally a Bloch direction or
/// operator coordinates, and free-form detail.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Margin of one grid point. Positive margins above the tolerance are
/// violations.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMargin {
    pub time: f64,
    pub margin: f64,
    pub status: Status,
    pub direction: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub status: Status,
    /// Signed worst-case slack: the largest point margin. Pass implies
    /// `margin <= tolerance`.
    pub margin: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_point: Option<WitnessPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    /// Set for the randomized d > 2 heuristics.
    pub sampled: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub points: Vec<PointMargin>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    /// Single-shot verdict (no grid).
    pub fn single(margin: f64, tolerance: f64, witness: Option<WitnessPoint>) -> Verdict {
        let status = if margin <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        let witness_point = match status {
            Status::Fail => Some(witness.unwrap_or_default()),
            _ => witness,
        };
        Verdict {
            status,
            margin,
            tolerance,
            witness_point,
            grid: None,
            sampled: false,
            notes: vec![],
            points: vec![],
        }
    }

    /// Time-ordered fold over per-point margins. The reported margin is the
    /// maximum; the witness is the failing point with the largest margin,
    /// earliest on ties.
    pub fn from_points(
        points: Vec<PointMargin>,
        tolerance: f64,
        grid: Option<TimeGrid>,
    ) -> Verdict {
        let mut status = Status::Pass;
        let mut margin = f64::NEG_INFINITY;
        let mut worst_fail: Option<&PointMargin> = None;
        let mut first_indeterminate: Option<&PointMargin> = None;
        for p in &points {
            status = status.worst(p.status);
            margin = margin.max(p.margin);
            match p.status {
                Status::Fail => {
                    if worst_fail.is_none_or(|w| p.margin > w.margin) {
                        worst_fail = Some(p);
                    }
                }
                Status::Indeterminate if first_indeterminate.is_none() => {
                    first_indeterminate = Some(p)
                }
                _ => {}
            }
        }
        if points.is_empty() {
            margin = 0.0;
        }
        let witness_point = worst_fail.or(first_indeterminate).map(|p| WitnessPoint {
            time: Some(p.time),
            direction: p.direction.clone(),
            detail: None,
        });
        Verdict {
            status,
            margin,
            tolerance,
            witness_point,
            grid,
            sampled: false,
            notes: vec![],
            points,
        }
    }

    /// Conjunction of sub-verdicts. Margins are re-expressed as excess over
    /// each sub-tolerance, so the combined tolerance is zero.
    pub fn all_of(parts: &[(&str, &Verdict)]) -> Verdict {
        let mut status = Status::Pass;
        let mut margin = f64::NEG_INFINITY;
        let mut witness_point = None;
        let mut notes = Vec::new();
        let mut grid = None;
        let mut sampled = false;
        for (name, v) in parts {
            status = status.worst(v.status);
            margin = margin.max(v.margin - v.tolerance);
            if witness_point.is_none() && v.status != Status::Pass {
                witness_point = v.witness_point.clone().map(|mut w| {
                    let detail = w.detail.take();
                    w.detail = Some(match detail {
                        Some(d) => format!("{name}: {d}"),
                        None => (*name).to_string(),
                    });
                    w
                });
            }
            notes.push(format!("{name}: {}", v.status.as_str()));
            grid = grid.or(v.grid);
            sampled |= v.sampled;
        }
        if parts.is_empty() {
            margin = 0.0;
        }
        if status == Status::Fail && witness_point.is_none() {
            witness_point = Some(WitnessPoint::default());
        }
        Verdict {
            status,
            margin,
            tolerance: 0.0,
            witness_point,
            grid,
            sampled,
            notes,
            points: vec![],
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Verdict {
        self.notes.push(note.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(time: f64, margin: f64, status: Status) -> PointMargin {
        PointMargin {
            time,
            margin,
            status,
            direction: None,
        }
    }

    #[test]
    fn fold_picks_largest_failure_earliest_on_ties() {
        let v = Verdict::from_points(
            vec![
                pt(0.0, -1.0, Status::Pass),
                pt(1.0, 2.0, Status::Fail),
                pt(2.0, 2.0, Status::Fail),
                pt(3.0, 0.5, Status::Fail),
            ],
            1e-8,
            None,
        );
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.margin, 2.0);
        assert_eq!(v.witness_point.unwrap().time, Some(1.0));
    }

    #[test]
    fn pass_has_no_witness_and_margin_within_tolerance() {
        let v = Verdict::from_points(
            vec![pt(0.0, -1.0, Status::Pass), pt(1.0, 0.0, Status::Pass)],
            1e-8,
            None,
        );
        assert!(v.passed());
        assert!(v.margin <= v.tolerance);
        assert!(v.witness_point.is_none());
    }

    #[test]
    fn indeterminate_beats_pass_but_not_fail() {
        let v = Verdict::from_points(vec![pt(0.0, 0.0, Status::Indeterminate)], 0.0, None);
        assert_eq!(v.status, Status::Indeterminate);
        let both = Verdict::all_of(&[("a", &v), ("b", &Verdict::single(1.0, 0.0, None))]);
        assert_eq!(both.status, Status::Fail);
        assert!(both.witness_point.is_some());
    }

    #[test]
    fn single_fail_always_carries_witness() {
        let v = Verdict::single(1.0, 0.5, None);
        assert!(v.failed() && v.witness_point.is_some());
        assert!(Verdict::single(0.5, 0.5, None).passed());
    }
}

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audit::HypothesisStatus;
use crate::dynamics::{ActionInstance, DisplacementMatrix};
use crate::error::Result;
use crate::spectral::{ConstantsBundle, Splitting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    U,
    S,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::U => "u",
            Component::S => "s",
        })
    }
}

/// Projected column norms of `D(x)` at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub x: f64,
    pub column: usize,
    pub norm_u: f64,
    pub norm_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Argmax {
    pub index: usize,
    pub x: f64,
    pub column: usize,
    pub component: Component,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVerdict {
    /// Every projected displacement on the grid is exactly zero.
    DisplacementsZero,
    /// The maps are not `ε`-close to the identity, so no contradiction follows.
    HypothesisViolated,
    /// The hypotheses hold and the displacement at the supremum is forced to
    /// grow along the orbit, contradicting maximality.
    ExpansionDetected,
    /// Hypotheses hold but neither recorded factor exceeds 1.
    Inconclusive,
}

impl SweepVerdict {
    pub fn is_failure(&self) -> bool {
        matches!(self, SweepVerdict::ExpansionDetected)
    }
}

impl fmt::Display for SweepVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVerdict::DisplacementsZero => "displacements_zero",
            SweepVerdict::HypothesisViolated => "hypothesis_violated",
            SweepVerdict::ExpansionDetected => "expansion_detected",
            SweepVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid_resolution: usize,
    pub table: Vec<SweepRow>,
    pub argmax: Argmax,
    /// `z` followed by the points reached by strides of `f^{-k}` (unstable
    /// case) or `f^k` (stable case). Empty until the sweep runs.
    pub followed_points: Vec<f64>,
    /// Projected norm of column `j₁` at each followed point after `z`;
    /// absent when the orbit left the chart under violated hypotheses.
    pub followed_values: Option<Vec<f64>>,
    /// `θ^u - loss` (unstable) or `θ^s + loss` (stable), `loss = 2η√(nℓ)(2C_k + 1)`.
    pub printed_factor: Option<f64>,
    /// `2 - θ^s - loss`, recorded in the stable case only.
    pub variant_factor: Option<f64>,
    pub verdict: Option<SweepVerdict>,
    pub row_column_checks: usize,
    pub row_column_violations: usize,
}

impl SweepReport {
    /// The argmax recomputed from the stored table with the same tie-break.
    pub fn rescan(&self) -> Argmax {
        argmax_of(&self.table)
    }
}

fn project_norm(s: &Splitting, d: &DisplacementMatrix, j: usize, c: Component) -> f64 {
    let col = d.column(j);
    let p = match c {
        Component::U => s.project_u(&col),
        Component::S => s.project_s(&col),
    };
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Lowest grid index, then lowest column, then `u` before `s`; only a
/// strictly larger value replaces the current best.
fn argmax_of(table: &[SweepRow]) -> Argmax {
    let first = table[0];
    let mut best = Argmax {
        index: first.index,
        x: first.x,
        column: first.column,
        component: Component::U,
        value: first.norm_u,
    };
    for r in table {
        for (component, value) in [(Component::U, r.norm_u), (Component::S, r.norm_s)] {
            if value > best.value {
                best = Argmax {
                    index: r.index,
                    x: r.x,
                    column: r.column,
                    component,
                    value,
                };
            }
        }
    }
    best
}

/// Exhaustive grid search for `sup_{x, j} {‖π_u (D(x))_j‖, ‖π_s (D(x))_j‖}`.
pub fn max_displacement_search(act: &ActionInstance, s: &Splitting) -> Result<SweepReport> {
    let grid = act.manifold.grid();
    let per_point: Vec<Result<(Vec<SweepRow>, bool)>> = grid
        .par_iter()
        .enumerate()
        .map(|(index, &x)| {
            let d = act.displacement_matrix(x)?;
            let rows = (0..d.ell())
                .map(|j| SweepRow {
                    index,
                    x,
                    column: j,
                    norm_u: project_norm(s, &d, j, Component::U),
                    norm_s: project_norm(s, &d, j, Component::S),
                })
                .collect();
            Ok((rows, d.satisfies_row_column_bound()))
        })
        .collect();
    let mut table = Vec::with_capacity(grid.len() * act.ell());
    let mut violations = 0;
    for p in per_point {
        let (rows, ok) = p?;
        table.extend(rows);
        violations += usize::from(!ok);
    }
    Ok(SweepReport {
        grid_resolution: act.manifold.grid_resolution,
        argmax: argmax_of(&table),
        table,
        followed_points: Vec::new(),
        followed_values: None,
        printed_factor: None,
        variant_factor: None,
        verdict: None,
        row_column_checks: grid.len(),
        row_column_violations: violations,
    })
}

/// Finds the maximal projected displacement `(z, j₁)` and follows it one or
/// more strides along the orbit: `x = f^{-k}(z)` for the unstable component
/// and `y = f^k(z)` for the stable one.
pub fn rigidity_sweep(
    act: &ActionInstance,
    c: &ConstantsBundle,
    s: &Splitting,
    hyp: &HypothesisStatus,
    steps: usize,
) -> Result<SweepReport> {
    let mut report = max_displacement_search(act, s)?;
    let top = report.argmax;
    if top.value == 0.0 {
        report.verdict = Some(SweepVerdict::DisplacementsZero);
        return Ok(report);
    }
    let loss = c.sweep_loss();
    let stride = match top.component {
        Component::U => {
            report.printed_factor = c.theta_u.map(|t| t - loss);
            -(c.k as i64)
        }
        Component::S => {
            report.printed_factor = c.theta_s.map(|t| t + loss);
            report.variant_factor = c.theta_s.map(|t| 2.0 - t - loss);
            c.k as i64
        }
    };
    let holds = hyp.sweep_holds();

    let mut points = vec![top.x];
    let mut values = Vec::with_capacity(steps);
    let mut escaped = false;
    let mut x = top.x;
    for _ in 0..steps {
        let next = act.f_power(x, stride).and_then(|j| {
            let d = act.displacement_matrix(j.point())?;
            Ok((j.point(), d))
        });
        match next {
            Ok((p, d)) => {
                report.row_column_checks += 1;
                report.row_column_violations += usize::from(!d.satisfies_row_column_bound());
                values.push(project_norm(s, &d, top.column, top.component));
                points.push(p);
                x = p;
            }
            Err(e) if e.is_domain_error() && !holds => {
                escaped = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    report.followed_points = points;
    report.followed_values = (!escaped).then_some(values);

    let grows = |f: Option<f64>| f.is_some_and(|v| v > 1.0);
    report.verdict = Some(if !holds {
        SweepVerdict::HypothesisViolated
    } else if grows(report.printed_factor) || grows(report.variant_factor) {
        SweepVerdict::ExpansionDetected
    } else {
        SweepVerdict::Inconclusive
    });
    Ok(report)
}

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 4096;

/// Shape of a compact one-dimensional manifold and its embedding.
///
/// Points are always passed around in chart coordinates: the real line for
/// an interval, and turns (period 1) for the unit circle embedded in `R^2`
/// as `θ -> (cos 2πθ, sin 2πθ)`. Maps on the circle are handled through
/// their lifts, so chart coordinates of circle points may leave `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    Interval { lo: f64, hi: f64 },
    Circle,
}

impl ManifoldKind {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("interval needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(ManifoldKind::Interval { lo, hi })
    }

    /// Embedding dimension `ℓ`.
    pub fn ell(&self) -> usize {
        match self {
            ManifoldKind::Interval { .. } => 1,
            ManifoldKind::Circle => 2,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        match *self {
            ManifoldKind::Interval { lo, hi } => x >= lo - tol && x <= hi + tol,
            ManifoldKind::Circle => x.is_finite(),
        }
    }

    /// Largest chart offset that can separate two points.
    pub fn chart_radius(&self) -> f64 {
        match *self {
            ManifoldKind::Interval { lo, hi } => hi - lo,
            ManifoldKind::Circle => 0.5,
        }
    }

    pub fn embed(&self, x: f64) -> Vec<f64> {
        match self {
            ManifoldKind::Interval { .. } => vec![x],
            ManifoldKind::Circle => {
                let t = 2.0 * PI * x;
                vec![t.cos(), t.sin()]
            }
        }
    }

    /// The vector `h(x) - x` in the embedding, for a lift displacement
    /// `lift = h(x) - x` in chart coordinates. Computed without subtracting
    /// nearby embedded points.
    pub fn displacement_vector(&self, x: f64, lift: f64) -> Vec<f64> {
        match self {
            ManifoldKind::Interval { .. } => vec![lift],
            ManifoldKind::Circle => {
                // e^{2πix} (e^{2πi·lift} - 1), with e^{iφ} - 1 = -2 sin²(φ/2) + i sin φ.
                let half = PI * lift;
                let re = -2.0 * half.sin() * half.sin();
                let im = (2.0 * half).sin();
                let (s, c) = (2.0 * PI * x).sin_cos();
                vec![c * re - s * im, s * re + c * im]
            }
        }
    }

    /// `‖h(x) - x‖` in the embedding.
    pub fn displacement_norm(&self, lift: f64) -> f64 {
        match self {
            ManifoldKind::Interval { .. } => lift.abs(),
            ManifoldKind::Circle => 2.0 * (PI * lift).sin().abs(),
        }
    }

    /// `‖D_x h - D_x id‖` on the unit tangent vector, given the chart
    /// derivative `deriv` and lift displacement at `x`.
    pub fn derivative_deviation(&self, lift: f64, deriv: f64) -> f64 {
        match self {
            ManifoldKind::Interval { .. } => (deriv - 1.0).abs(),
            ManifoldKind::Circle => {
                // |P e^{iφ} - 1|² = (P - 1)² + 4P sin²(φ/2)
                let s = (PI * lift).sin();
                ((deriv - 1.0).powi(2) + 4.0 * deriv * s * s).sqrt()
            }
        }
    }

    /// Chord length of a lift offset, the embedded counterpart of a chart radius.
    pub fn chart_to_embedded(&self, r: f64) -> f64 {
        match self {
            ManifoldKind::Interval { .. } => r,
            ManifoldKind::Circle => 2.0 * (PI * r.min(0.5)).sin(),
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldKind::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            ManifoldKind::Circle => write!(f, "circle"),
        }
    }
}

/// A compact one-dimensional manifold together with its sampling grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedManifold1D {
    pub kind: ManifoldKind,
    pub grid_resolution: usize,
}

impl EmbeddedManifold1D {
    pub fn new(kind: ManifoldKind, grid_resolution: usize) -> Result<Self> {
        if grid_resolution < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be at least 2, got {grid_resolution}"
            )));
        }
        if let ManifoldKind::Interval { lo, hi } = kind {
            ManifoldKind::interval(lo, hi)?;
        }
        Ok(EmbeddedManifold1D {
            kind,
            grid_resolution,
        })
    }

    pub fn interval(lo: f64, hi: f64, grid_resolution: usize) -> Result<Self> {
        EmbeddedManifold1D::new(ManifoldKind::interval(lo, hi)?, grid_resolution)
    }

    pub fn circle(grid_resolution: usize) -> Result<Self> {
        EmbeddedManifold1D::new(ManifoldKind::Circle, grid_resolution)
    }

    pub fn ell(&self) -> usize {
        self.kind.ell()
    }

    pub fn with_resolution(&self, grid_resolution: usize) -> Result<Self> {
        EmbeddedManifold1D::new(self.kind, grid_resolution)
    }

    /// Sample points in chart coordinates: both endpoints for an interval,
    /// `i / res` for the circle.
    pub fn grid(&self) -> Vec<f64> {
        let r = self.grid_resolution;
        match self.kind {
            ManifoldKind::Interval { lo, hi } => (0..r)
                .map(|i| {
                    if i == r - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * (i as f64) / ((r - 1) as f64)
                    }
                })
                .collect(),
            ManifoldKind::Circle => (0..r).map(|i| i as f64 / r as f64).collect(),
        }
    }
}

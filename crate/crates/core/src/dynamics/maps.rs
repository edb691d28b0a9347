use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::manifold::{EmbeddedManifold1D, ManifoldKind};
use crate::error::{Error, Result};

/// Orientation-preserving C¹ maps of a line chart given in closed form.
///
/// Every variant is written as `h(x) = x + p(x)` and evaluates the
/// displacement `p` directly, so `h(x) - x` carries no cancellation error.
/// On the circle the variants are lifts and must commute with `x -> x + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SmoothMap {
    Identity,
    /// `scale * x + shift`
    Affine { scale: f64, shift: f64 },
    /// `x + Σ disp[i] x^i`
    Poly { disp: Vec<f64> },
    /// `x + amp * sin(2π freq x + phase)`
    Trig { amp: f64, freq: u32, phase: f64 },
    /// `x + amp * ψ((x - center) / width)` with `ψ(t) = (1 - t²)²` on `|t| < 1`.
    Bump { amp: f64, center: f64, width: f64 },
    /// `x / (1 + x ln λ)`, the conjugate of `x -> λx` by `x -> e^{1/x}`.
    NavasF { lambda: f64 },
    /// `1 / ln(e^{1/x} + v)`, the conjugate of `x -> x + v` by `x -> e^{1/x}`.
    NavasG { v: f64 },
}

impl SmoothMap {
    pub fn translation(c: f64) -> Self {
        SmoothMap::Affine { scale: 1.0, shift: c }
    }

    /// `h(x) - x`.
    pub fn displacement(&self, x: f64) -> f64 {
        match *self {
            SmoothMap::Identity => 0.0,
            SmoothMap::Affine { scale, shift } => {
                if scale == 1.0 {
                    shift
                } else {
                    (scale - 1.0) * x + shift
                }
            }
            SmoothMap::Poly { ref disp } => horner(disp, x),
            SmoothMap::Trig { amp, freq, phase } => amp * (2.0 * PI * freq as f64 * x + phase).sin(),
            SmoothMap::Bump { amp, center, width } => {
                let t = (x - center) / width;
                if t.abs() < 1.0 {
                    let w = 1.0 - t * t;
                    amp * w * w
                } else {
                    0.0
                }
            }
            SmoothMap::NavasF { lambda } => {
                if x == 0.0 {
                    return 0.0;
                }
                let l = lambda.ln();
                -x * x * l / (1.0 + x * l)
            }
            SmoothMap::NavasG { v } => {
                if x == 0.0 {
                    return 0.0;
                }
                if x < 0.0 {
                    return f64::NAN;
                }
                let lg = (v * (-1.0 / x).exp()).ln_1p();
                -x * x * lg / (1.0 + x * lg)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        x + self.displacement(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            SmoothMap::Identity => 1.0,
            SmoothMap::Affine { scale, .. } => scale,
            SmoothMap::Poly { ref disp } => {
                let d: Vec<f64> = disp
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| c * i as f64)
                    .collect();
                1.0 + horner(&d, x)
            }
            SmoothMap::Trig { amp, freq, phase } => {
                let w = 2.0 * PI * freq as f64;
                1.0 + amp * w * (w * x + phase).cos()
            }
            SmoothMap::Bump { amp, center, width } => {
                let t = (x - center) / width;
                if t.abs() < 1.0 {
                    1.0 - 4.0 * amp * t * (1.0 - t * t) / width
                } else {
                    1.0
                }
            }
            SmoothMap::NavasF { lambda } => {
                let q = 1.0 + x * lambda.ln();
                1.0 / (q * q)
            }
            SmoothMap::NavasG { v } => {
                if x == 0.0 {
                    return 1.0;
                }
                let u = v * (-1.0 / x).exp();
                let q = 1.0 + x * u.ln_1p();
                1.0 / ((1.0 + u) * q * q)
            }
        }
    }

    /// `h⁻¹(y) - y`. Returns NaN when `y` is outside the image of `h`.
    pub fn inverse_displacement(&self, y: f64) -> f64 {
        match *self {
            SmoothMap::Identity => 0.0,
            SmoothMap::Affine { scale, shift } => {
                if scale == 1.0 {
                    -shift
                } else {
                    (y - shift) / scale - y
                }
            }
            SmoothMap::NavasF { lambda } => {
                if y == 0.0 {
                    return 0.0;
                }
                let l = lambda.ln();
                let q = 1.0 - y * l;
                if q <= 0.0 {
                    return f64::NAN;
                }
                y * y * l / q
            }
            SmoothMap::NavasG { v } => {
                if y == 0.0 {
                    return 0.0;
                }
                if y < 0.0 {
                    return f64::NAN;
                }
                let w = v * (-1.0 / y).exp();
                if w >= 1.0 {
                    return f64::NAN;
                }
                let lm = (-w).ln_1p();
                let q = 1.0 + y * lm;
                if q <= 0.0 {
                    return f64::NAN;
                }
                -y * y * lm / q
            }
            _ => match self.solve_inverse(y) {
                Some(x) => -self.displacement(x),
                None => f64::NAN,
            },
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        y + self.inverse_displacement(y)
    }

    /// Solves `x + p(x) = y` for a strictly increasing map by bracketing and
    /// safeguarded Newton steps.
    fn solve_inverse(&self, y: f64) -> Option<f64> {
        let resid = |x: f64| self.eval(x) - y;
        let bound = match *self {
            SmoothMap::Trig { amp, .. } | SmoothMap::Bump { amp, .. } => amp.abs(),
            _ => 0.0,
        };
        let (mut lo, mut hi) = (y - bound, y + bound);
        let mut step = bound.max(1e-3).max(y.abs() * 1e-3);
        for _ in 0..200 {
            if resid(lo) <= 0.0 {
                break;
            }
            lo -= step;
            step *= 2.0;
        }
        step = bound.max(1e-3).max(y.abs() * 1e-3);
        for _ in 0..200 {
            if resid(hi) >= 0.0 {
                break;
            }
            hi += step;
            step *= 2.0;
        }
        if !(resid(lo) <= 0.0 && resid(hi) >= 0.0) {
            return None;
        }
        let mut x = y.clamp(lo, hi);
        for _ in 0..200 {
            let r = resid(x);
            if r == 0.0 {
                return Some(x);
            }
            if r < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.deriv(x);
            let newton = x - r / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                break;
            }
            if (newton - x).abs() == 0.0 && r.abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
                break;
            }
        }
        Some(x)
    }

    /// Central-difference estimate of the derivative, used to cross-check `deriv`.
    pub fn finite_difference(&self, x: f64, h: f64) -> f64 {
        (self.displacement(x + h) - self.displacement(x - h)) / (2.0 * h) + 1.0
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Checks strict monotonicity on the grid and, for global actions, that
    /// the manifold is mapped onto itself within `tol_map`.
    pub fn check_diffeomorphism(
        &self,
        m: &EmbeddedManifold1D,
        onto: bool,
        tol_map: f64,
    ) -> Result<()> {
        let grid = m.grid();
        let mut prev = f64::NEG_INFINITY;
        for &x in &grid {
            let d = self.deriv(x);
            let y = self.eval(x);
            if !(d > 0.0) || !y.is_finite() {
                return Err(Error::NotDiffeomorphism(format!(
                    "{self}: derivative {d} at x = {x}"
                )));
            }
            if !(y > prev) {
                return Err(Error::NotDiffeomorphism(format!(
                    "{self}: not increasing at x = {x}"
                )));
            }
            prev = y;
        }
        if !onto {
            return Ok(());
        }
        match m.kind {
            ManifoldKind::Interval { lo, hi } => {
                let (a, b) = (self.displacement(lo), self.displacement(hi));
                if a.abs() > tol_map || b.abs() > tol_map {
                    return Err(Error::NotDiffeomorphism(format!(
                        "{self}: endpoints move by {a:e} and {b:e}"
                    )));
                }
            }
            ManifoldKind::Circle => {
                for &x in &grid {
                    let jump = self.displacement(x + 1.0) - self.displacement(x);
                    if jump.abs() > tol_map {
                        return Err(Error::NotDiffeomorphism(format!(
                            "{self}: lift is not periodic at x = {x}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothMap::Identity => write!(f, "id"),
            SmoothMap::Affine { scale, shift } => write!(f, "x -> {scale}x + {shift}"),
            SmoothMap::Poly { disp } => write!(f, "x -> x + poly{disp:?}"),
            SmoothMap::Trig { amp, freq, phase } => {
                write!(f, "x -> x + {amp} sin(2π·{freq}x + {phase})")
            }
            SmoothMap::Bump { amp, center, width } => {
                write!(f, "x -> x + bump(amp {amp}, center {center}, width {width})")
            }
            SmoothMap::NavasF { lambda } => write!(f, "navas F(λ = {lambda})"),
            SmoothMap::NavasG { v } => write!(f, "navas G(v = {v})"),
        }
    }
}

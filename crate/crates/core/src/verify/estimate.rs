use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_steps, c1_distance_of, ActionInstance, EmbeddedManifold1D, Jet, ManifoldKind, SmoothMap};
use crate::error::Result;
use crate::spectral::{ConstantEstimator, Provenance, TaggedConstant};

const BISECTIONS: usize = 200;

/// Largest value in `(0, hi)` where the increasing predicate `ok` still
/// holds, approached from below.
fn bisect_below(hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Radius `d` such that `d(f, id) < d` implies `d(f^k, id) < η` for every
/// `C¹` map of an interval or of the unit circle: the largest `d` with
/// `k d + (1 + d)^k - 1 < η`.
pub fn eta1_bound(k: u32, eta: f64) -> f64 {
    let chain = |d: f64| k as f64 * d + (k as f64 * d.ln_1p()).exp_m1();
    bisect_below(eta, |d| chain(d) < eta)
}

const DIRECT_SUM_MAX: u64 = 1 << 16;

/// `((1 + e)^N - 1) / e - N`, the sum of `(1 + e)^i - 1` over `i < N`.
///
/// Small `N` sums `expm1` terms so small `e` does not cancel. Large `N`
/// uses the geometric closed form when `N ln(1 + e)` is not tiny, and a
/// Taylor expansion in `ln(1 + e)` with Euler-Maclaurin power sums when it is.
fn additivity_defect(e: f64, big_n: u64) -> f64 {
    let l = e.ln_1p();
    if big_n <= DIRECT_SUM_MAX {
        return (0..big_n).map(|i| (i as f64 * l).exp_m1()).sum();
    }
    let n = big_n as f64;
    if n * l >= 1e-2 {
        return (n * l).exp_m1() / l.exp_m1() - n;
    }
    // Σ_{i<N} i^j ≈ N^{j+1}/(j+1) - N^j/2 + j N^{j-1}/12.
    let mut total = 0.0;
    let mut fact = 1.0;
    for j in 1..=8 {
        let jf = j as f64;
        fact *= jf;
        let power_sum = n.powi(j + 1) / (jf + 1.0) - 0.5 * n.powi(j) + jf * n.powi(j - 1) / 12.0;
        total += l.powi(j) / fact * power_sum;
    }
    total
}

/// Radius `ε₁` such that any `N` maps within `ε₁` of the identity compose
/// additively up to `η sup_i ‖(f_i - id)(x)‖`.
pub fn eps1_bound(kind: &ManifoldKind, big_n: u64, eta: f64) -> f64 {
    match kind {
        ManifoldKind::Interval { .. } => bisect_below(1.0, |e| additivity_defect(e, big_n) < eta),
        ManifoldKind::Circle => bisect_below(1.0, |e| {
            let n = big_n as f64;
            FRAC_PI_2 * (additivity_defect(FRAC_PI_2 * e, big_n) + n * n * FRAC_PI_2 * e) < eta
        }),
    }
}

/// Measured distances of `f` and `f^k` to the identity on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eta1Estimate {
    pub k: u32,
    pub d_f: f64,
    pub d_fk: f64,
}

impl Eta1Estimate {
    /// `k d + (1 + d)^k - 1`, the chain-rule upper bound for `d(f^k, id)`.
    pub fn chain_bound(&self) -> f64 {
        let k = self.k as f64;
        k * self.d_f + (k * self.d_f.ln_1p()).exp_m1()
    }
}

pub fn estimate_eta1(f: &SmoothMap, k: u32, m: &EmbeddedManifold1D) -> Result<Eta1Estimate> {
    let one = [(f, false)];
    let many = vec![(f, false); k as usize];
    let label = || format!("f^{k}");
    let d_f = c1_distance_of(m, &m.kind, |x| apply_steps(&one, x, &m.kind, &label))?;
    let d_fk = c1_distance_of(m, &m.kind, |x| apply_steps(&many, x, &m.kind, &label))?;
    Ok(Eta1Estimate { k, d_f, d_fk })
}

const EPS0_SAMPLES: usize = 97;
const EPS0_DECADES: f64 = 12.0;

/// Largest grid-certified radius `r` (in the embedding) such that the
/// first-order remainder of `h` satisfies `|h(x+y) - h(x) - h'(x) y| ≤ η|y|`
/// for every sampled `|y| ≤ r` and grid point `x`.
pub fn estimate_eps0(h: &SmoothMap, eta: f64, m: &EmbeddedManifold1D) -> f64 {
    let steps = [(h, false)];
    estimate_eps0_with(|x| apply_steps(&steps, x, &m.kind, &|| h.to_string()), eta, m, &m.kind)
}

/// [`estimate_eps0`] for a map given by its jets, e.g. an iterate `f^k`.
/// Offsets leaving `domain` or making the map escape are not constraints.
pub fn estimate_eps0_with<F>(jet: F, eta: f64, m: &EmbeddedManifold1D, domain: &ManifoldKind) -> f64
where
    F: Fn(f64) -> Result<Jet> + Sync,
{
    let radius = m.kind.chart_radius();
    let mags: Vec<f64> = (0..EPS0_SAMPLES)
        .map(|j| radius * 10f64.powf(-EPS0_DECADES * (1.0 - j as f64 / (EPS0_SAMPLES - 1) as f64)))
        .collect();
    let per_point: Vec<f64> = m
        .grid()
        .par_iter()
        .map(|&x| {
            let Ok(base) = jet(x) else {
                return radius;
            };
            let slope = base.deriv - 1.0;
            // Some(true) passes, Some(false) fails, None is unconstrained.
            let check = |y: f64| -> Option<bool> {
                if !domain.contains(x + y, 0.0) {
                    return None;
                }
                let moved = jet(x + y).ok()?;
                let rem = (moved.disp - base.disp - slope * y).abs();
                Some(rem <= eta * y.abs())
            };
            let fails = |t: f64| check(t) == Some(false) || check(-t) == Some(false);
            let mut prev = 0.0;
            for &t in &mags {
                if fails(t) {
                    let (mut lo, mut hi) = (prev, t);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if fails(mid) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    return lo;
                }
                prev = t;
            }
            radius
        })
        .collect();
    let r = per_point.into_iter().fold(radius, f64::min);
    m.kind.chart_to_embedded(r)
}

/// Closed-form bounds only; `ε₀` needs a map and is left unset.
#[derive(Clone, Copy, Debug)]
pub struct ManifoldBounds {
    pub kind: ManifoldKind,
}

impl ManifoldBounds {
    /// Bounds for the manifold with embedding dimension `ell`: the interval
    /// for `ℓ = 1` and the circle for `ℓ = 2`.
    pub fn for_ell(ell: usize) -> Option<Self> {
        let kind = match ell {
            1 => ManifoldKind::Interval { lo: 0.0, hi: 1.0 },
            2 => ManifoldKind::Circle,
            _ => return None,
        };
        Some(ManifoldBounds { kind })
    }
}

impl ConstantEstimator for ManifoldBounds {
    fn eta1(&self, k: u32, eta: f64) -> Option<TaggedConstant> {
        Some(TaggedConstant::new(eta1_bound(k, eta), Provenance::Computed))
    }

    fn eps0(&self, _k: u32, _eta: f64) -> Option<TaggedConstant> {
        None
    }

    fn eps1(&self, big_n: u64, eta: f64) -> Option<TaggedConstant> {
        Some(TaggedConstant::new(eps1_bound(&self.kind, big_n, eta), Provenance::Computed))
    }
}

/// Closed-form `η₁`, `ε₁` plus `ε₀` measured on `f^k` of a given action.
pub struct ActionEstimator<'a> {
    pub action: &'a ActionInstance,
}

impl ConstantEstimator for ActionEstimator<'_> {
    fn eta1(&self, k: u32, eta: f64) -> Option<TaggedConstant> {
        Some(TaggedConstant::new(eta1_bound(k, eta), Provenance::Computed))
    }

    fn eps0(&self, k: u32, eta: f64) -> Option<TaggedConstant> {
        let act = self.action;
        let r = estimate_eps0_with(|x| act.f_power(x, k as i64), eta, &act.manifold, &act.domain);
        Some(TaggedConstant::new(r, Provenance::Empirical))
    }

    fn eps1(&self, big_n: u64, eta: f64) -> Option<TaggedConstant> {
        Some(TaggedConstant::new(
            eps1_bound(&self.action.domain, big_n, eta),
            Provenance::Computed,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_n_defect_matches_direct_sum() {
        let n = DIRECT_SUM_MAX + 1;
        for e in [1e-12, 1e-9, 1e-7, 1e-6, 1e-5, 1e-3] {
            let l = f64::ln_1p(e);
            let direct: f64 = (0..n).map(|i| (i as f64 * l).exp_m1()).sum();
            let fast = additivity_defect(e, n);
            assert!((fast - direct).abs() <= 1e-9 * direct, "e={e}: {fast} vs {direct}");
        }
    }

    #[test]
    fn eta1_examples() {
        // k = 1: 2d < η.
        let d = eta1_bound(1, 0.01);
        assert!(d < 0.005 && 0.005 - d < 1e-15);
        let d3 = eta1_bound(3, 0.01);
        assert!(3.0 * d3 + (1.0 + d3).powi(3) - 1.0 < 0.01);
        assert!(3.0 * (d3 * 1.001) + (1.0 + d3 * 1.001).powi(3) - 1.0 >= 0.01);
    }

    #[test]
    fn eps1_interval_against_polynomial() {
        // N = 3: ((1+e)^3 - 1)/e - 3 = 3e + e².
        let iv = ManifoldKind::Interval { lo: 0.0, hi: 1.0 };
        let e = eps1_bound(&iv, 3, 0.0125);
        let exact = (-3.0 + (9.0f64 + 4.0 * 0.0125).sqrt()) / 2.0;
        assert!((e - exact).abs() < 1e-12);
        assert_eq!(eps1_bound(&iv, 1, 0.0125), 1.0);
        assert!(eps1_bound(&ManifoldKind::Circle, 3, 0.0125) < e);
    }

    #[test]
    fn eps0_examples() {
        let m = EmbeddedManifold1D::interval(0.0, 0.5, 257).unwrap();
        let quad = SmoothMap::Poly { disp: vec![0.0, 0.0, 1.0] };
        let r = estimate_eps0(&quad, 0.01, &m);
        assert!((r - 0.01).abs() < 1e-4, "{r}");
        let affine = SmoothMap::Affine { scale: 1.5, shift: 0.1 };
        assert_eq!(estimate_eps0(&affine, 0.01, &m), 0.5);
        assert_eq!(estimate_eps0(&SmoothMap::Identity, 0.01, &m), 0.5);
        let c = EmbeddedManifold1D::circle(64).unwrap();
        assert!((estimate_eps0(&SmoothMap::Identity, 0.01, &c) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn eta1_estimates() {
        let c = EmbeddedManifold1D::circle(4096).unwrap();
        let id = estimate_eta1(&SmoothMap::Identity, 3, &c).unwrap();
        assert_eq!((id.d_f, id.d_fk), (0.0, 0.0));
        let sine = SmoothMap::Trig { amp: 0.001, freq: 1, phase: 0.0 };
        let one = estimate_eta1(&sine, 1, &c).unwrap();
        assert_eq!(one.d_f, one.d_fk);
        let three = estimate_eta1(&sine, 3, &c).unwrap();
        let d = three.d_f;
        assert!(three.d_fk <= 3.0 * d * (1.0 + d).powi(2));
        assert!(three.d_fk <= three.chain_bound());
    }
}

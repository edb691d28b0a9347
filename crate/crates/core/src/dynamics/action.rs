use std::fmt;

use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::manifold::{EmbeddedManifold1D, ManifoldKind};
use super::maps::SmoothMap;
use super::{apply_steps, Jet};
use crate::error::{Error, Result};
use crate::group::IntegerMatrix;

pub const DEFAULT_TOL_REL: f64 = 1e-8;

/// Right end of the working interval for the Navas family. The conjugated
/// maps are defined on all of `[0, ∞)`; this only has to contain every
/// point the relation checks and orbit strides visit.
pub const NAVAS_DOMAIN_MAX: f64 = 1e3;

/// A generator image: `f = ρ(a)` or `g_i = ρ(b_i)` (zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gen {
    F,
    G(usize),
}

/// One letter of a composition, applied as `gen` or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub gen: Gen,
    pub inverse: bool,
}

impl Step {
    pub fn new(gen: Gen, inverse: bool) -> Self {
        Step { gen, inverse }
    }

    /// `gen^e` as `|e|` letters.
    pub fn power(gen: Gen, e: i64) -> impl Iterator<Item = Step> {
        std::iter::repeat_n(Step::new(gen, e < 0), e.unsigned_abs() as usize)
    }
}

fn describe(steps: &[Step]) -> String {
    // Written as a composition, last applied on the left.
    let parts: Vec<String> = steps
        .iter()
        .rev()
        .map(|s| {
            let base = match s.gen {
                Gen::F => "f".to_string(),
                Gen::G(i) => format!("g{}", i + 1),
            };
            if s.inverse {
                format!("{base}^-1")
            } else {
                base
            }
        })
        .collect();
    if parts.is_empty() {
        "id".into()
    } else {
        parts.join("∘")
    }
}

/// An assignment `a -> f`, `b_i -> g_i` of diffeomorphisms to the generators.
///
/// `manifold` is the region audited and sampled; `domain` is where the maps
/// may be evaluated. They differ for families whose generators do not
/// preserve the audited region.
#[derive(Clone, Debug)]
pub struct ActionInstance {
    pub matrix: IntegerMatrix,
    pub manifold: EmbeddedManifold1D,
    pub domain: ManifoldKind,
    pub f: SmoothMap,
    pub g: Vec<SmoothMap>,
    /// Maps are only defined on a chart and may send points out of it.
    pub partial: bool,
    /// Relations were checked to `tol_rel` at construction.
    pub relations_verified: bool,
    pub family: String,
    pub tol_rel: f64,
}

/// The `n × ℓ` matrix whose row `i` is `g_i(x) - x` in the embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementMatrix {
    pub entries: DMatrix<f64>,
    pub base_point: f64,
}

impl DisplacementMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ell(&self) -> usize {
        self.entries.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.entries.column(j).iter().copied().collect()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.entries.row(i).norm()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.entries.column(j).norm()
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.n()).map(|i| self.row_norm(i)).fold(0.0, f64::max)
    }

    pub fn max_column_norm(&self) -> f64 {
        (0..self.ell()).map(|j| self.column_norm(j)).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    /// `max_i ‖row_i‖ ≤ √ℓ · max_j ‖col_j‖`, allowing a few ulps for the
    /// two norms being rounded independently.
    pub fn satisfies_row_column_bound(&self) -> bool {
        let lhs = self.max_row_norm();
        let rhs = (self.ell() as f64).sqrt() * self.max_column_norm();
        lhs <= rhs * (1.0 + 4.0 * f64::EPSILON)
    }
}

impl ActionInstance {
    pub fn n(&self) -> usize {
        self.matrix.dim()
    }

    pub fn ell(&self) -> usize {
        self.manifold.ell()
    }

    fn map(&self, gen: Gen) -> &SmoothMap {
        match gen {
            Gen::F => &self.f,
            Gen::G(i) => &self.g[i],
        }
    }

    /// Evaluates the composition that applies `steps` in order.
    pub fn apply(&self, steps: &[Step], x: f64) -> Result<Jet> {
        let resolved: Vec<(&SmoothMap, bool)> =
            steps.iter().map(|s| (self.map(s.gen), s.inverse)).collect();
        apply_steps(&resolved, x, &self.domain, &|| describe(steps))
    }

    /// `f^k`, with negative `k` meaning the inverse.
    pub fn f_power(&self, x: f64, k: i64) -> Result<Jet> {
        let steps: Vec<Step> = Step::power(Gen::F, k).collect();
        self.apply(&steps, x)
    }

    fn check_point(&self, x: f64) -> Result<()> {
        if !self.manifold.kind.contains(x, 1e-12) {
            return Err(Error::OffManifold {
                point: x,
                domain: self.manifold.kind.to_string(),
            });
        }
        Ok(())
    }

    /// Displacement matrix at `x`, which must lie in the working domain.
    pub fn displacement_matrix(&self, x: f64) -> Result<DisplacementMatrix> {
        if !self.domain.contains(x, 1e-12) {
            return Err(Error::OffManifold {
                point: x,
                domain: self.domain.to_string(),
            });
        }
        let n = self.n();
        let ell = self.domain.ell();
        let mut entries = DMatrix::zeros(n, ell);
        for i in 0..n {
            let jet = self.apply(&[Step::new(Gen::G(i), false)], x)?;
            let row = self.domain.displacement_vector(x, jet.disp);
            for (j, v) in row.into_iter().enumerate() {
                entries[(i, j)] = v;
            }
        }
        Ok(DisplacementMatrix {
            entries,
            base_point: x,
        })
    }

    /// `[x0, f^k(x0), f^{2k}(x0), ...]` with `steps` strides of length `stride`.
    pub fn orbit(&self, x0: f64, steps: usize, stride: i64) -> Result<Vec<f64>> {
        if stride == 0 {
            return Err(Error::InvalidParameter("orbit stride must be nonzero".into()));
        }
        self.check_point(x0)?;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(x0);
        let mut x = x0;
        for _ in 0..steps {
            x = self.f_power(x, stride)?.point();
            out.push(x);
        }
        Ok(out)
    }

    fn relation_pairs(&self) -> Vec<(String, Vec<Step>, Vec<Step>)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            let lhs = vec![
                Step::new(Gen::F, true),
                Step::new(Gen::G(i), false),
                Step::new(Gen::F, false),
            ];
            let rhs: Vec<Step> = (0..n)
                .flat_map(|j| {
                    let e = self.matrix.get(i, j).to_i64().unwrap_or(i64::MAX);
                    Step::power(Gen::G(j), e)
                })
                .collect();
            out.push((format!("relation {}", i + 1), lhs, rhs));
        }
        out
    }

    fn commutator_pairs(&self) -> Vec<(String, Vec<Step>, Vec<Step>)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                out.push((
                    format!("commutator {} {}", i + 1, j + 1),
                    vec![Step::new(Gen::G(j), false), Step::new(Gen::G(i), false)],
                    vec![Step::new(Gen::G(i), false), Step::new(Gen::G(j), false)],
                ));
            }
        }
        out
    }

    fn pair_residual(&self, pairs: &[(String, Vec<Step>, Vec<Step>)]) -> Result<f64> {
        let grid = self.manifold.grid();
        let per_point: Vec<Result<f64>> = grid
            .par_iter()
            .map(|&x| {
                let mut worst = 0.0f64;
                for (_, lhs, rhs) in pairs {
                    let a = self.apply(lhs, x)?;
                    let b = self.apply(rhs, x)?;
                    worst = worst.max(self.domain.displacement_norm(a.disp - b.disp));
                }
                Ok(worst)
            })
            .collect();
        let mut worst = 0.0f64;
        for r in per_point {
            worst = worst.max(r?);
        }
        Ok(worst)
    }

    /// Grid sup over `i` and `x` of `‖f g_i f⁻¹(x) - Π_j g_j^{A_ij}(x)‖`.
    pub fn relation_residual(&self) -> Result<f64> {
        self.pair_residual(&self.relation_pairs())
    }

    /// Grid sup over `i < j` of `‖g_i g_j(x) - g_j g_i(x)‖`.
    pub fn commutator_residual(&self) -> Result<f64> {
        self.pair_residual(&self.commutator_pairs())
    }

    /// Checks relation and commutator residuals against `tol_rel`.
    pub fn check_relations(mut self) -> Result<Self> {
        let rel = self.relation_residual()?;
        let com = self.commutator_residual()?;
        if !(rel <= self.tol_rel && com <= self.tol_rel) {
            return Err(Error::InvalidParameter(format!(
                "{} maps do not define an action: relation residual {rel:e}, commutator residual {com:e}, tolerance {:e}",
                self.family, self.tol_rel
            )));
        }
        self.relations_verified = true;
        Ok(self)
    }

    fn check_rank(a: &IntegerMatrix, count: usize) -> Result<()> {
        if a.dim() != count {
            return Err(Error::Dimension {
                expected: a.dim(),
                found: count,
            });
        }
        Ok(())
    }

    /// `ρ(a) = f`, `ρ(b_i) = id`, which satisfies every relation exactly.
    pub fn make_trivial_perturbed(
        a: &IntegerMatrix,
        m: EmbeddedManifold1D,
        f: SmoothMap,
    ) -> Result<Self> {
        f.check_diffeomorphism(&m, true, 1e-12)?;
        ActionInstance {
            matrix: a.clone(),
            manifold: m,
            domain: m.kind,
            f,
            g: vec![SmoothMap::Identity; a.dim()],
            partial: false,
            relations_verified: false,
            family: "trivial_perturbed".into(),
            tol_rel: DEFAULT_TOL_REL,
        }
        .check_relations()
    }

    /// The affine action `x -> λx`, `x -> x + v` of `BS(1, n)` conjugated by
    /// `φ(x) = e^{1/x}` and restricted to `[0, x_max]`.
    pub fn make_navas_action(
        a: &IntegerMatrix,
        lambda: f64,
        v: f64,
        x_max: f64,
        grid: usize,
    ) -> Result<Self> {
        if a.dim() != 1 {
            return Err(Error::InvalidParameter(format!(
                "the Navas family needs a 1x1 matrix, got {}x{}",
                a.dim(),
                a.dim()
            )));
        }
        let n = a.get(0, 0).to_i64().unwrap_or(0);
        if n < 2 {
            return Err(Error::InvalidParameter(format!("the Navas family needs A = [n] with n >= 2, got [{n}]")));
        }
        if !(lambda > 1.0) {
            return Err(Error::InvalidParameter(format!("lambda must exceed 1, got {lambda}")));
        }
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("v must be positive, got {v}")));
        }
        if !(x_max > 0.0 && x_max < 1.0) {
            return Err(Error::InvalidParameter(format!("x_max must lie in (0, 1), got {x_max}")));
        }
        let m = EmbeddedManifold1D::interval(0.0, x_max, grid)?;
        let f = SmoothMap::NavasF { lambda };
        let g = SmoothMap::NavasG { v };
        f.check_diffeomorphism(&m, false, 0.0)?;
        g.check_diffeomorphism(&m, false, 0.0)?;
        ActionInstance {
            matrix: a.clone(),
            manifold: m,
            domain: ManifoldKind::interval(0.0, NAVAS_DOMAIN_MAX)?,
            f,
            g: vec![g],
            partial: false,
            relations_verified: false,
            family: "navas".into(),
            tol_rel: DEFAULT_TOL_REL,
        }
        .check_relations()
    }

    /// The standard affine action `x -> λx`, `x -> x + v_i` sampled on an
    /// interval chart. The working interval is the hull of every point the
    /// relation checks and short `f`-orbits visit from the chart.
    pub fn make_affine_on_chart(
        a: &IntegerMatrix,
        lambda: f64,
        shifts: &[f64],
        chart: EmbeddedManifold1D,
    ) -> Result<Self> {
        Self::check_rank(a, shifts.len())?;
        let (lo, hi) = match chart.kind {
            ManifoldKind::Interval { lo, hi } => (lo, hi),
            ManifoldKind::Circle => {
                return Err(Error::InvalidParameter("affine charts must be intervals".into()))
            }
        };
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let f = SmoothMap::Affine {
            scale: lambda,
            shift: 0.0,
        };
        let g: Vec<SmoothMap> = shifts.iter().map(|&c| SmoothMap::translation(c)).collect();
        let mut act = ActionInstance {
            matrix: a.clone(),
            manifold: chart,
            domain: ManifoldKind::Circle,
            f,
            g,
            partial: true,
            relations_verified: false,
            family: "affine".into(),
            tol_rel: DEFAULT_TOL_REL,
        };
        // Trace endpoints with an unbounded domain to find the working hull.
        let mut traced: Vec<Vec<Step>> = Vec::new();
        for (_, l, r) in act.relation_pairs().into_iter().chain(act.commutator_pairs()) {
            traced.push(l);
            traced.push(r);
        }
        for k in 1..=4 {
            traced.push(Step::power(Gen::F, k).collect());
            traced.push(Step::power(Gen::F, -k).collect());
        }
        let (mut wlo, mut whi) = (lo, hi);
        for steps in &traced {
            for x in [lo, hi] {
                let mut y = x;
                for s in steps {
                    let m = act.map(s.gen);
                    y = if s.inverse { m.inverse(y) } else { m.eval(y) };
                    wlo = wlo.min(y);
                    whi = whi.max(y);
                }
            }
        }
        act.domain = ManifoldKind::interval(wlo, whi)?;
        act.check_relations()
    }

    /// Arbitrary maps without any relation enforcement, for exercising the
    /// detectors on inputs that are not actions.
    pub fn fixture(
        a: &IntegerMatrix,
        m: EmbeddedManifold1D,
        f: SmoothMap,
        g: Vec<SmoothMap>,
    ) -> Result<Self> {
        Self::check_rank(a, g.len())?;
        Ok(ActionInstance {
            matrix: a.clone(),
            manifold: m,
            domain: m.kind,
            f,
            g,
            partial: false,
            relations_verified: false,
            family: "fixture".into(),
            tol_rel: DEFAULT_TOL_REL,
        })
    }

    /// Replaces the audited region by a sub-interval of the working domain.
    pub fn with_audit_interval(mut self, lo: f64, hi: f64) -> Result<Self> {
        let m = EmbeddedManifold1D::interval(lo, hi, self.manifold.grid_resolution)?;
        if !(self.domain.contains(lo, 0.0) && self.domain.contains(hi, 0.0)) {
            return Err(Error::OffManifold {
                point: if self.domain.contains(lo, 0.0) { hi } else { lo },
                domain: self.domain.to_string(),
            });
        }
        self.manifold = m;
        Ok(self)
    }

    pub fn with_resolution(mut self, grid: usize) -> Result<Self> {
        self.manifold = self.manifold.with_resolution(grid)?;
        Ok(self)
    }

    pub fn with_tol_rel(mut self, tol_rel: f64) -> Self {
        self.tol_rel = tol_rel;
        self
    }

    /// `d(f^k, id)` on the audited grid.
    pub fn f_power_distance(&self, k: i64) -> Result<f64> {
        c1_distance_of(&self.manifold, &self.domain, |x| self.f_power(x, k))
    }

    /// `max_i d(g_i, id)` on the audited grid.
    pub fn max_g_distance(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            let d = c1_distance_of(&self.manifold, &self.domain, |x| {
                self.apply(&[Step::new(Gen::G(i), false)], x)
            })?;
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

impl fmt::Display for ActionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} action of A = {} on {} (f: {}",
            self.family, self.matrix, self.manifold.kind, self.f
        )?;
        for (i, g) in self.g.iter().enumerate() {
            write!(f, ", g{}: {}", i + 1, g)?;
        }
        write!(f, ")")
    }
}

/// Grid value of `sup_x ‖h(x) - x‖ + ‖D_x h - Id‖`. This is a lower bound
/// for the true supremum and converges to it as the grid is refined.
pub fn c1_distance_to_identity(h: &SmoothMap, m: &EmbeddedManifold1D) -> f64 {
    m.grid()
        .iter()
        .map(|&x| {
            let d = h.displacement(x);
            m.kind.displacement_norm(d) + m.kind.derivative_deviation(d, h.deriv(x))
        })
        .fold(0.0, f64::max)
}

/// Same as [`c1_distance_to_identity`] for a composed map given by its jets.
pub fn c1_distance_of<F>(m: &EmbeddedManifold1D, domain: &ManifoldKind, jet: F) -> Result<f64>
where
    F: Fn(f64) -> Result<Jet> + Sync,
{
    let values: Vec<Result<f64>> = m
        .grid()
        .par_iter()
        .map(|&x| {
            let j = jet(x)?;
            Ok(domain.displacement_norm(j.disp) + domain.derivative_deviation(j.disp, j.deriv))
        })
        .collect();
    let mut worst = 0.0f64;
    for v in values {
        worst = worst.max(v?);
    }
    Ok(worst)
}

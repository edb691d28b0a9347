use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{rigidity_sweep, SweepReport};
use crate::dynamics::{
    apply_steps, c1_distance_to_identity, ActionInstance, DisplacementMatrix, EmbeddedManifold1D,
    Gen, ManifoldKind, SmoothMap, Step,
};
use crate::error::Result;
use crate::spectral::{ConstantsBundle, Splitting};

pub const LEMMA_ADDITIVITY: &str = "composition_additivity";
pub const LEMMA_TRANSPORT: &str = "displacement_transport";
pub const LEMMA_RATIO: &str = "displacement_ratio";
pub const LEMMA_ROW_COLUMN: &str = "row_column_bound";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditTag {
    Ok,
    HypothesisViolated,
    Fail,
}

impl fmt::Display for AuditTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditTag::Ok => "ok",
            AuditTag::HypothesisViolated => "hypothesis_violated",
            AuditTag::Fail => "fail",
        })
    }
}

/// One checked instance of a strict inequality `lhs < bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub lemma: String,
    pub x: f64,
    /// Column of the displacement matrix, for per-column inequalities.
    pub column: Option<usize>,
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub tag: AuditTag,
}

impl AuditRecord {
    /// Passes when `lhs < bound` or both sides are zero. A failure is only a
    /// `fail` when the inequality's hypotheses were established.
    pub fn new(lemma: &str, x: f64, column: Option<usize>, lhs: f64, bound: f64, hypotheses: bool) -> Self {
        let margin = bound - lhs;
        let pass = margin > 0.0 || (lhs == 0.0 && bound == 0.0);
        let tag = if pass {
            AuditTag::Ok
        } else if !hypotheses {
            AuditTag::HypothesisViolated
        } else {
            AuditTag::Fail
        };
        AuditRecord {
            lemma: lemma.to_string(),
            x,
            column,
            lhs,
            bound,
            margin,
            pass,
            tag,
        }
    }
}

/// Measured distances that decide whether the displacement estimates apply.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisStatus {
    pub d_f: f64,
    pub d_fk: f64,
    pub d_g: f64,
    pub eta: f64,
    pub eps: Option<f64>,
    pub eps1: f64,
}

impl HypothesisStatus {
    pub fn measure(act: &ActionInstance, c: &ConstantsBundle) -> Result<Self> {
        Ok(HypothesisStatus {
            d_f: act.f_power_distance(1)?,
            d_fk: act.f_power_distance(c.k as i64)?,
            d_g: act.max_g_distance()?,
            eta: c.eta,
            eps: c.eps,
            eps1: c.eps1.value,
        })
    }

    /// `d(f^k, id) < η` and `d(g_i, id) < ε`, as used for the transport and
    /// ratio estimates. An unknown `ε` does not establish them.
    pub fn transport_holds(&self) -> bool {
        self.d_fk < self.eta && self.eps.is_some_and(|e| self.d_g < e)
    }

    /// `d(g_i, id) < ε₁` for the additivity of compositions of the `g_i`.
    pub fn additivity_holds(&self) -> bool {
        self.d_g < self.eps1
    }

    /// `d(f, id) < ε` and `d(g_i, id) < ε`: the action is `ε`-close to the
    /// trivial one.
    pub fn sweep_holds(&self) -> bool {
        self.eps.is_some_and(|e| self.d_f < e && self.d_g < e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BonattiReport {
    pub records: Vec<AuditRecord>,
    /// Record at the point attaining `empirical_eta`.
    pub worst: AuditRecord,
    /// Grid sup of `lhs / sup_i ‖(f_i - id)(x)‖`, with `0/0` read as 0.
    pub empirical_eta: f64,
    /// `max_i d(f_i, id)` on the same grid.
    pub max_distance: f64,
}

/// Additivity defect of the composition applying `steps` in order at `x`:
/// `‖(h - id)(x) - Σ (h_i - id)(x)‖` and `sup_i ‖(h_i - id)(x)‖`.
fn additivity_at(steps: &[(&SmoothMap, bool)], x: f64, domain: &ManifoldKind) -> Result<(f64, f64)> {
    let label = || format!("composition of {} maps", steps.len());
    let jet = apply_steps(steps, x, domain, &label)?;
    let parts: Vec<f64> = steps
        .iter()
        .map(|&(m, inv)| if inv { m.inverse_displacement(x) } else { m.displacement(x) })
        .collect();
    let sup = parts.iter().map(|&d| domain.displacement_norm(d)).fold(0.0, f64::max);
    if let ManifoldKind::Interval { .. } = domain {
        // Lift displacements are summed in application order, the same order
        // the composition accumulates them, so exactly additive compositions
        // give an exact zero.
        let direct = parts.iter().fold(0.0, |a, b| a + b);
        return Ok(((jet.disp - direct).abs(), sup));
    }
    let mut defect = domain.displacement_vector(x, jet.disp);
    for &d in &parts {
        for (t, v) in defect.iter_mut().zip(domain.displacement_vector(x, d)) {
            *t -= v;
        }
    }
    Ok((defect.iter().map(|v| v * v).sum::<f64>().sqrt(), sup))
}

/// Audits one composition at `x` against `η`.
pub fn audit_bonatti_steps(
    steps: &[(&SmoothMap, bool)],
    x: f64,
    domain: &ManifoldKind,
    eta: f64,
    hypotheses: bool,
) -> Result<AuditRecord> {
    let (lhs, sup) = additivity_at(steps, x, domain)?;
    Ok(AuditRecord::new(LEMMA_ADDITIVITY, x, None, lhs, eta * sup, hypotheses))
}

/// Audits `f_1 ∘ f_2 ∘ ⋯ ∘ f_N` (so `f_N` acts first) on the grid of `m`.
/// With `eps` given, the hypotheses are `d(f_i, id) < eps` for all `i`.
pub fn audit_bonatti(
    maps: &[SmoothMap],
    m: &EmbeddedManifold1D,
    eta: f64,
    eps: Option<f64>,
) -> Result<BonattiReport> {
    audit_bonatti_on(maps, m, &m.kind, eta, eps)
}

/// [`audit_bonatti`] for maps defined on a larger working `domain`, such as
/// translations sampled on a chart.
pub fn audit_bonatti_on(
    maps: &[SmoothMap],
    m: &EmbeddedManifold1D,
    domain: &ManifoldKind,
    eta: f64,
    eps: Option<f64>,
) -> Result<BonattiReport> {
    let steps: Vec<(&SmoothMap, bool)> = maps.iter().rev().map(|f| (f, false)).collect();
    let max_distance = maps
        .iter()
        .map(|f| c1_distance_to_identity(f, m))
        .fold(0.0, f64::max);
    let hypotheses = eps.is_some_and(|e| max_distance < e);
    let rows: Vec<Result<(AuditRecord, f64)>> = m
        .grid()
        .par_iter()
        .map(|&x| {
            let (lhs, sup) = additivity_at(&steps, x, domain)?;
            let ratio = if sup == 0.0 { 0.0 } else { lhs / sup };
            Ok((AuditRecord::new(LEMMA_ADDITIVITY, x, None, lhs, eta * sup, hypotheses), ratio))
        })
        .collect();
    let mut records = Vec::with_capacity(rows.len());
    let mut empirical_eta = 0.0f64;
    let mut worst_at = 0;
    for (i, r) in rows.into_iter().enumerate() {
        let (rec, ratio) = r?;
        if ratio > empirical_eta {
            empirical_eta = ratio;
            worst_at = i;
        }
        records.push(rec);
    }
    let worst = records[worst_at].clone();
    Ok(BonattiReport {
        records,
        worst,
        empirical_eta,
        max_distance,
    })
}

fn column_vector(d: &DisplacementMatrix, j: usize) -> DVector<f64> {
    DVector::from_column_slice(&d.column(j))
}

/// `‖(D(x))_j - A^k (D(y))_j‖ < η√(nℓ)(2 sup_j ‖(D(x))_j‖ + sup_j ‖(D(y))_j‖)`
/// with `y = f^k(x)`, one record per column.
pub fn audit_lemma_hyp(
    act: &ActionInstance,
    c: &ConstantsBundle,
    hyp: &HypothesisStatus,
    x: f64,
) -> Result<Vec<AuditRecord>> {
    let ak = act.matrix.pow(c.k).to_f64();
    let y = act.f_power(x, c.k as i64)?.point();
    let dx = act.displacement_matrix(x)?;
    let dy = act.displacement_matrix(y)?;
    Ok(transport_records(&ak, c, hyp, &dx, &dy))
}

fn transport_records(
    ak: &DMatrix<f64>,
    c: &ConstantsBundle,
    hyp: &HypothesisStatus,
    dx: &DisplacementMatrix,
    dy: &DisplacementMatrix,
) -> Vec<AuditRecord> {
    let root = ((c.n * c.ell) as f64).sqrt();
    let bound = c.eta * root * (2.0 * dx.max_column_norm() + dy.max_column_norm());
    (0..dx.ell())
        .map(|j| {
            let lhs = (column_vector(dx, j) - ak * column_vector(dy, j)).norm();
            AuditRecord::new(LEMMA_TRANSPORT, dx.base_point, Some(j), lhs, bound, hyp.transport_holds())
        })
        .collect()
}

/// `sup_j ‖(D(x))_j‖ < C_k sup_j ‖(D(f^k(x)))_j‖`.
pub fn audit_lemma_ck(
    act: &ActionInstance,
    c: &ConstantsBundle,
    hyp: &HypothesisStatus,
    x: f64,
) -> Result<AuditRecord> {
    let y = act.f_power(x, c.k as i64)?.point();
    let dx = act.displacement_matrix(x)?;
    let dy = act.displacement_matrix(y)?;
    Ok(ratio_record(c, hyp, &dx, &dy))
}

fn ratio_record(
    c: &ConstantsBundle,
    hyp: &HypothesisStatus,
    dx: &DisplacementMatrix,
    dy: &DisplacementMatrix,
) -> AuditRecord {
    AuditRecord::new(
        LEMMA_RATIO,
        dx.base_point,
        None,
        dx.max_column_norm(),
        c.c_k * dy.max_column_norm(),
        hyp.transport_holds(),
    )
}

/// `max_i ‖row_i‖ ≤ √ℓ max_j ‖col_j‖`, which holds for every matrix; the
/// bound carries a few ulps of slack for independent rounding.
pub fn audit_row_column(d: &DisplacementMatrix) -> AuditRecord {
    let bound = (d.ell() as f64).sqrt() * d.max_column_norm() * (1.0 + 4.0 * f64::EPSILON);
    AuditRecord::new(LEMMA_ROW_COLUMN, d.base_point, None, d.max_row_norm(), bound, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Uniform random audit points added to the grid.
    pub extra_points: usize,
    pub seed: u64,
    /// Strides followed from the sweep's argmax.
    pub sweep_steps: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            extra_points: 64,
            seed: 0,
            sweep_steps: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub records: Vec<AuditRecord>,
    pub sweep: SweepReport,
    pub hypotheses: HypothesisStatus,
    pub relation_residual: f64,
    pub commutator_residual: f64,
    pub points: usize,
    pub ok: usize,
    pub hypothesis_violated: usize,
    pub failed: usize,
    /// Displacement matrices checked against the row/column bound, and how
    /// many violated it.
    pub row_column_checks: usize,
    pub row_column_violations: usize,
}

impl VerifyReport {
    /// Audit failures, counting an expansion found by the sweep as one.
    pub fn failures(&self) -> usize {
        self.failed + usize::from(self.sweep.verdict.is_some_and(|v| v.is_failure()))
    }
}

fn audit_points(m: &EmbeddedManifold1D, opts: &AuditOptions) -> Vec<f64> {
    let mut points = m.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (lo, hi) = match m.kind {
        ManifoldKind::Interval { lo, hi } => (lo, hi),
        ManifoldKind::Circle => (0.0, 1.0),
    };
    for _ in 0..opts.extra_points {
        points.push(rng.gen_range(lo..hi));
    }
    points
}

struct PointAudit {
    records: Vec<AuditRecord>,
    checks: usize,
    violations: usize,
}

fn audit_point(
    act: &ActionInstance,
    c: &ConstantsBundle,
    hyp: &HypothesisStatus,
    ak: &DMatrix<f64>,
    words: &[Vec<Step>],
    x: f64,
) -> Result<PointAudit> {
    let y = act.f_power(x, c.k as i64)?.point();
    let dx = act.displacement_matrix(x)?;
    let dy = act.displacement_matrix(y)?;
    let mut records = transport_records(ak, c, hyp, &dx, &dy);
    records.push(ratio_record(c, hyp, &dx, &dy));

    // Additivity of Π_j g_j^{(A^k)_ij} at y, worst row i.
    let mut worst: Option<AuditRecord> = None;
    for w in words {
        let steps: Vec<(&SmoothMap, bool)> = w
            .iter()
            .map(|s| {
                let Gen::G(i) = s.gen else { unreachable!("words only use g") };
                (&act.g[i], s.inverse)
            })
            .collect();
        let mut rec = audit_bonatti_steps(&steps, y, &act.domain, c.eta, hyp.additivity_holds())?;
        rec.x = x;
        if worst.as_ref().is_none_or(|r| rec.margin < r.margin) {
            worst = Some(rec);
        }
    }
    records.extend(worst);

    records.push(audit_row_column(&dx));
    let violations = usize::from(!dx.satisfies_row_column_bound()) + usize::from(!dy.satisfies_row_column_bound());
    Ok(PointAudit {
        records,
        checks: 2,
        violations,
    })
}

/// Runs every audit over the grid plus seeded random points, then the sweep.
pub fn run_audits(
    act: &ActionInstance,
    c: &ConstantsBundle,
    s: &Splitting,
    opts: &AuditOptions,
) -> Result<VerifyReport> {
    let hyp = HypothesisStatus::measure(act, c)?;
    let relation_residual = act.relation_residual()?;
    let commutator_residual = act.commutator_residual()?;
    let ak_int = act.matrix.pow(c.k);
    let ak = ak_int.to_f64();
    let n = act.n();
    let words: Vec<Vec<Step>> = (0..n)
        .map(|i| {
            (0..n)
                .flat_map(|j| Step::power(Gen::G(j), ak_int.get(i, j).to_i64().unwrap_or(i64::MAX)))
                .collect()
        })
        .collect();
    let points = audit_points(&act.manifold, opts);
    let per_point: Vec<Result<PointAudit>> = points
        .par_iter()
        .map(|&x| audit_point(act, c, &hyp, &ak, &words, x))
        .collect();
    let mut records = Vec::new();
    let mut row_column_checks = 0;
    let mut row_column_violations = 0;
    for p in per_point {
        let p = p?;
        records.extend(p.records);
        row_column_checks += p.checks;
        row_column_violations += p.violations;
    }
    let sweep = rigidity_sweep(act, c, s, &hyp, opts.sweep_steps)?;
    row_column_checks += sweep.row_column_checks;
    row_column_violations += sweep.row_column_violations;
    let count = |t: AuditTag| records.iter().filter(|r| r.tag == t).count();
    Ok(VerifyReport {
        ok: count(AuditTag::Ok),
        hypothesis_violated: count(AuditTag::HypothesisViolated),
        failed: count(AuditTag::Fail),
        records,
        sweep,
        hypotheses: hyp,
        relation_residual,
        commutator_residual,
        points: points.len(),
        row_column_checks,
        row_column_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_rule() {
        let r = AuditRecord::new("t", 0.0, None, 0.0, 0.0, true);
        assert!(r.pass && r.tag == AuditTag::Ok);
        let r = AuditRecord::new("t", 0.0, None, 1.0, 1.0, true);
        assert!(!r.pass && r.tag == AuditTag::Fail);
        let r = AuditRecord::new("t", 0.0, None, 1.0, 0.5, false);
        assert_eq!(r.tag, AuditTag::HypothesisViolated);
        assert_eq!(r.margin, -0.5);
    }

    #[test]
    fn translations_are_exactly_additive() {
        let m = EmbeddedManifold1D::interval(0.0, 1.0, 257).unwrap();
        let maps = vec![
            SmoothMap::translation(0.1),
            SmoothMap::translation(0.0333),
            SmoothMap::translation(-0.07),
        ];
        let wide = ManifoldKind::Interval { lo: -1.0, hi: 2.0 };
        let r = audit_bonatti_on(&maps, &m, &wide, 0.01, None).unwrap();
        assert_eq!(r.empirical_eta, 0.0);
        assert!(r.records.iter().all(|rec| rec.lhs == 0.0 && rec.pass));
    }

    #[test]
    fn identities_use_zero_over_zero() {
        let c = EmbeddedManifold1D::circle(128).unwrap();
        let r = audit_bonatti(&[SmoothMap::Identity, SmoothMap::Identity], &c, 0.01, Some(0.1)).unwrap();
        assert_eq!(r.empirical_eta, 0.0);
        assert!(r.records.iter().all(|rec| rec.pass));
    }
}

//! JSON description of an action family and the end-to-end verify pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ActionInstance, EmbeddedManifold1D, ManifoldKind, SmoothMap, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::group::IntegerMatrix;
use crate::spectral::{
    check_hyperbolic, compute_constants, compute_splitting_with, ConstantsBundle,
    HyperbolicityReport, Overrides, Splitting, SplittingResiduals, Verdict, DEFAULT_ALPHA,
    DEFAULT_DELTA, DEFAULT_TOL_SPLIT,
};
use crate::verify::{run_audits, ActionEstimator, AuditOptions, VerifyReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// `f` arbitrary, every `g_i` the identity.
    TrivialPerturbed { manifold: ManifoldKind, f: SmoothMap },
    /// The conjugated affine action of `BS(1, n)` on `[0, x_max]`.
    Navas {
        lambda: f64,
        v: f64,
        x_max: f64,
        /// Optional sub-interval to audit instead of `[0, x_max]`.
        #[serde(default)]
        audit_interval: Option<[f64; 2]>,
    },
    /// `x -> λx`, `x -> x + v_i` sampled on an interval chart.
    Affine { lambda: f64, shifts: Vec<f64>, chart: [f64; 2] },
    /// Arbitrary maps with no relation check.
    Fixture { manifold: ManifoldKind, f: SmoothMap, g: Vec<SmoothMap> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideConfig {
    pub eta1: Option<f64>,
    pub eps0: Option<f64>,
    pub eps1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionConfig {
    /// Path to a matrix text file, relative to the config file.
    #[serde(default)]
    pub matrix_file: Option<PathBuf>,
    /// Inline matrix rows, used when `matrix_file` is absent.
    #[serde(default)]
    pub matrix: Option<Vec<Vec<i64>>>,
    pub family: FamilyConfig,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub tol_rel: Option<f64>,
    #[serde(default)]
    pub extra_points: Option<usize>,
    #[serde(default)]
    pub sweep_steps: Option<usize>,
    #[serde(default)]
    pub overrides: OverrideConfig,
}

impl ActionConfig {
    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ActionConfig = serde_json::from_str(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn load_matrix(&self, base: &Path) -> Result<IntegerMatrix> {
        match (&self.matrix_file, &self.matrix) {
            (Some(p), None) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                std::fs::read_to_string(path)?.parse()
            }
            (None, Some(rows)) => IntegerMatrix::from_rows(rows),
            _ => Err(Error::Parse("config needs exactly one of `matrix_file` and `matrix`".into())),
        }
    }

    /// Builds the action. A `grid` argument overrides the config's value.
    pub fn build(&self, a: &IntegerMatrix, grid: Option<usize>) -> Result<ActionInstance> {
        let grid = grid.or(self.grid).unwrap_or(DEFAULT_GRID);
        let act = match &self.family {
            FamilyConfig::TrivialPerturbed { manifold, f } => {
                ActionInstance::make_trivial_perturbed(a, EmbeddedManifold1D::new(*manifold, grid)?, f.clone())?
            }
            FamilyConfig::Navas { lambda, v, x_max, audit_interval } => {
                let act = ActionInstance::make_navas_action(a, *lambda, *v, *x_max, grid)?;
                match audit_interval {
                    Some([lo, hi]) => act.with_audit_interval(*lo, *hi)?,
                    None => act,
                }
            }
            FamilyConfig::Affine { lambda, shifts, chart } => ActionInstance::make_affine_on_chart(
                a,
                *lambda,
                shifts,
                EmbeddedManifold1D::interval(chart[0], chart[1], grid)?,
            )?,
            FamilyConfig::Fixture { manifold, f, g } => ActionInstance::fixture(
                a,
                EmbeddedManifold1D::new(*manifold, grid)?,
                f.clone(),
                g.clone(),
            )?,
        };
        match self.tol_rel {
            Some(t) => act.with_tol_rel(t).check_relations(),
            None => Ok(act),
        }
    }
}

/// Numerical settings shared by the pipeline stages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineParams {
    pub alpha: f64,
    pub delta: f64,
    pub tol_split: f64,
    pub overrides: Overrides,
    pub audit: AuditOptions,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            alpha: DEFAULT_ALPHA,
            delta: DEFAULT_DELTA,
            tol_split: DEFAULT_TOL_SPLIT,
            overrides: Overrides::default(),
            audit: AuditOptions::default(),
        }
    }
}

impl PipelineParams {
    /// Fills unset values from a config; values already set by the caller win.
    pub fn with_config(mut self, cfg: &ActionConfig, alpha_set: bool) -> Self {
        if !alpha_set {
            if let Some(a) = cfg.alpha {
                self.alpha = a;
            }
        }
        let o = cfg.overrides;
        self.overrides = Overrides {
            eta1: self.overrides.eta1.or(o.eta1),
            eps0: self.overrides.eps0.or(o.eps0),
            eps1: self.overrides.eps1.or(o.eps1),
        };
        if let Some(p) = cfg.extra_points {
            self.audit.extra_points = p;
        }
        if let Some(s) = cfg.sweep_steps {
            self.audit.sweep_steps = s;
        }
        self
    }
}

pub struct PipelineOutput {
    pub hyperbolicity: HyperbolicityReport,
    pub splitting: Splitting,
    pub splitting_residuals: SplittingResiduals,
    pub constants: ConstantsBundle,
    pub report: VerifyReport,
}

/// Rejects matrices that are not hyperbolic, with the report attached.
pub fn hyperbolic_splitting(
    a: &IntegerMatrix,
    delta: f64,
    tol_split: f64,
) -> Result<(HyperbolicityReport, Splitting)> {
    let hyp = check_hyperbolic(a, delta)?;
    if hyp.verdict != Verdict::Hyperbolic {
        return Err(Error::NotHyperbolic {
            verdict: hyp.verdict.to_string(),
            moduli: hyp.eigen_moduli.clone(),
        });
    }
    let s = compute_splitting_with(a, delta, tol_split)?;
    Ok((hyp, s))
}

/// Splitting, constants, audits and sweep for one action.
pub fn run_pipeline(act: &ActionInstance, p: &PipelineParams) -> Result<PipelineOutput> {
    let a = &act.matrix;
    let (hyperbolicity, splitting) = hyperbolic_splitting(a, p.delta, p.tol_split)?;
    let splitting_residuals = splitting.residuals(&a.to_f64());
    let estimator = ActionEstimator { action: act };
    let constants = compute_constants(a, &splitting, act.ell(), p.alpha, p.overrides, Some(&estimator))?;
    let report = run_audits(act, &constants, &splitting, &p.audit)?;
    Ok(PipelineOutput {
        hyperbolicity,
        splitting,
        splitting_residuals,
        constants,
        report,
    })
}

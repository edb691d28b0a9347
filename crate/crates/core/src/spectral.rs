//! Hyperbolicity audit, the invariant splitting `R^n = E^u ⊕ E^s` of the
//! defining matrix, and the chain of constants that makes the displacement
//! estimates go through.
//!
//! The splitting is read off an ordered complex Schur form: unitary Givens
//! swaps move every eigenvalue of modulus `> 1` to the leading diagonal
//! block, so the leading Schur vectors span `E^u ⊗ C`. A real orthonormal
//! basis is recovered from the real and imaginary parts of those vectors.

use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::IntegerMatrix;

pub const DEFAULT_DELTA: f64 = 1e-9;
pub const DEFAULT_TOL_SPLIT: f64 = 1e-9;
pub const DEFAULT_K_CAP: u32 = 64;
pub const DEFAULT_ALPHA: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Hyperbolic,
    HasUnitModulus,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Hyperbolic => "hyperbolic",
            Verdict::HasUnitModulus => "has_unit_modulus",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    /// Eigenvalue moduli, sorted descending.
    pub eigen_moduli: Vec<f64>,
    /// `min | |λ| - 1 |` over the spectrum.
    pub gap: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    /// Schur reconstruction residual `‖A - Q T Q*‖_F`.
    pub schur_residual: f64,
}

/// Classifies the spectrum of `a` against the unit circle.
///
/// A gap above `delta` is reported hyperbolic. Below it the verdict is
/// `has_unit_modulus` only when a root of unity is certified exactly, by
/// `det(A^m - I) = 0` in integer arithmetic for some `m` with `φ(m) <= n`;
/// otherwise it is `indeterminate`.
pub fn check_hyperbolic(a: &IntegerMatrix, delta: f64) -> Result<HyperbolicityReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let schur = ComplexSchur::new(&a.to_f64())?;
    let mut eigen_moduli: Vec<f64> = schur.eigenvalues().iter().map(|z| z.norm()).collect();
    eigen_moduli.sort_by(|x, y| y.total_cmp(x));
    let gap = eigen_moduli
        .iter()
        .map(|m| (m - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    let verdict = if gap > delta {
        Verdict::Hyperbolic
    } else if has_root_of_unity_eigenvalue(a) {
        Verdict::HasUnitModulus
    } else {
        Verdict::Indeterminate
    };
    Ok(HyperbolicityReport {
        eigen_moduli,
        gap,
        verdict,
        tolerance: delta,
        schur_residual: schur.residual,
    })
}

fn has_root_of_unity_eigenvalue(a: &IntegerMatrix) -> bool {
    let n = a.dim();
    // φ(m) >= sqrt(m / 2), so any root of unity of degree <= n has order <= 2n².
    let max_order = 2 * n * n;
    let mut power = IntegerMatrix::identity(n);
    for _ in 1..=max_order {
        power = power.mul(a).expect("same dimension");
        let mut shifted: Vec<BigInt> = power.entries().to_vec();
        for i in 0..n {
            shifted[i * n + i] -= 1;
        }
        if IntegerMatrix::new(n, shifted).is_err() {
            return true;
        }
    }
    false
}

/// The `A`-invariant splitting with orthonormal bases and spectral projectors.
#[derive(Clone, Debug)]
pub struct Splitting {
    pub dim_u: usize,
    pub dim_s: usize,
    /// Columns form an orthonormal basis of `E^u` (`n × dim_u`).
    pub basis_u: DMatrix<f64>,
    /// Columns form an orthonormal basis of `E^s` (`n × dim_s`).
    pub basis_s: DMatrix<f64>,
    pub proj_u: DMatrix<f64>,
    pub proj_s: DMatrix<f64>,
    pub tol_split: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingResiduals {
    /// `‖π_u + π_s - I‖`
    pub completeness: f64,
    /// `‖π_u π_s‖`
    pub orthogonality: f64,
    /// `max(‖A π_u - π_u A‖, ‖A π_s - π_s A‖)`
    pub commutation: f64,
    /// `max(‖π_u² - π_u‖, ‖π_s² - π_s‖)`
    pub idempotence: f64,
}

impl SplittingResiduals {
    pub fn max(&self) -> f64 {
        self.completeness
            .max(self.orthogonality)
            .max(self.commutation)
            .max(self.idempotence)
    }
}

impl Splitting {
    pub fn dim(&self) -> usize {
        self.proj_u.nrows()
    }

    /// Frobenius-norm residuals of the projector identities against `a`.
    pub fn residuals(&self, a: &DMatrix<f64>) -> SplittingResiduals {
        let n = self.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let pu = &self.proj_u;
        let ps = &self.proj_s;
        SplittingResiduals {
            completeness: (pu + ps - &id).norm(),
            orthogonality: (pu * ps).norm().max((ps * pu).norm()),
            commutation: (a * pu - pu * a).norm().max((a * ps - ps * a).norm()),
            idempotence: (pu * pu - pu).norm().max((ps * ps - ps).norm()),
        }
    }

    pub fn project_u(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.proj_u, v)
    }

    pub fn project_s(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.proj_s, v)
    }
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn compute_splitting(a: &IntegerMatrix) -> Result<Splitting> {
    compute_splitting_with(a, DEFAULT_DELTA, DEFAULT_TOL_SPLIT)
}

pub fn compute_splitting_with(a: &IntegerMatrix, delta: f64, tol_split: f64) -> Result<Splitting> {
    let report = check_hyperbolic(a, delta)?;
    if report.verdict != Verdict::Hyperbolic {
        return Err(Error::NotHyperbolic {
            verdict: report.verdict.to_string(),
            moduli: report.eigen_moduli,
        });
    }
    let af = a.to_f64();
    let n = a.dim();
    let schur = ComplexSchur::new(&af)?;

    let mut unstable_first = schur.clone();
    let dim_u = unstable_first.reorder(|z| z.norm() > 1.0);
    let basis_u = real_basis(&unstable_first.q, dim_u);

    let mut stable_first = schur;
    let dim_s = stable_first.reorder(|z| z.norm() < 1.0);
    let basis_s = real_basis(&stable_first.q, dim_s);

    if dim_u + dim_s != n {
        return Err(Error::Numerical(format!(
            "invariant dimensions {dim_u} + {dim_s} do not add up to {n}"
        )));
    }

    // Solve [U S] X = I; π_u = U X_top, π_s = S X_bottom.
    let mut joined = DMatrix::<f64>::zeros(n, n);
    joined.columns_mut(0, dim_u).copy_from(&basis_u);
    joined.columns_mut(dim_u, dim_s).copy_from(&basis_s);
    let inv = joined
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("invariant subspaces are not complementary".into()))?;
    let proj_u = &basis_u * inv.rows(0, dim_u);
    let proj_s = &basis_s * inv.rows(dim_u, dim_s);

    let splitting = Splitting {
        dim_u,
        dim_s,
        basis_u,
        basis_s,
        proj_u,
        proj_s,
        tol_split,
    };
    let res = splitting.residuals(&af);
    if res.max() > tol_split {
        return Err(Error::Numerical(format!(
            "splitting residuals exceed {tol_split:e}: {res:?}"
        )));
    }
    Ok(splitting)
}

/// Orthonormal real basis of the real subspace whose complexification is
/// spanned by the first `d` columns of `q`.
fn real_basis(q: &DMatrix<Complex<f64>>, d: usize) -> DMatrix<f64> {
    let n = q.nrows();
    if d == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut parts = DMatrix::<f64>::zeros(n, 2 * d);
    for j in 0..d {
        for i in 0..n {
            parts[(i, j)] = q[(i, j)].re;
            parts[(i, d + j)] = q[(i, j)].im;
        }
    }
    let svd = parts.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut basis = DMatrix::<f64>::zeros(n, d);
    for (dst, &src) in order.iter().take(d).enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    basis
}

/// Complex Schur form `A = Q T Q*` with support for reordering the diagonal.
#[derive(Clone, Debug)]
struct ComplexSchur {
    q: DMatrix<Complex<f64>>,
    t: DMatrix<Complex<f64>>,
    residual: f64,
}

impl ComplexSchur {
    fn new(a: &DMatrix<f64>) -> Result<Self> {
        let ac: DMatrix<Complex<f64>> = a.map(|v| Complex::new(v, 0.0));
        let schur = nalgebra::Schur::try_new(ac.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
        let (q, t) = schur.unpack();
        let residual = (&ac - &q * &t * q.adjoint()).norm();
        let scale = a.norm().max(1.0);
        if !(residual <= 1e-10 * scale) {
            return Err(Error::Numerical(format!(
                "Schur reconstruction residual {residual:e}"
            )));
        }
        Ok(ComplexSchur { q, t, residual })
    }

    fn eigenvalues(&self) -> Vec<Complex<f64>> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Moves every diagonal entry satisfying `lead` ahead of those that do
    /// not, by adjacent unitary swaps. Returns the number of leading entries.
    fn reorder(&mut self, lead: impl Fn(Complex<f64>) -> bool) -> usize {
        let n = self.t.nrows();
        let mut placed = 0;
        for i in 0..n {
            if lead(self.t[(i, i)]) {
                let mut k = i;
                while k > placed {
                    self.swap(k - 1);
                    k -= 1;
                }
                placed += 1;
            }
        }
        placed
    }

    /// Exchanges diagonal entries `k` and `k + 1`.
    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (c, s) = givens(self.t[(k, k + 1)], t22 - t11);
        // Rows k, k+1 from column k+2 on: [x; y] <- [c x + s y; -conj(s) x + c y].
        for j in k + 2..n {
            let x = self.t[(k, j)];
            let y = self.t[(k + 1, j)];
            self.t[(k, j)] = x * c + s * y;
            self.t[(k + 1, j)] = -s.conj() * x + y * c;
        }
        // Columns k, k+1 above row k, with conj(s).
        let sc = s.conj();
        for i in 0..k {
            let x = self.t[(i, k)];
            let y = self.t[(i, k + 1)];
            self.t[(i, k)] = x * c + sc * y;
            self.t[(i, k + 1)] = -s * x + y * c;
        }
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        self.t[(k + 1, k)] = Complex::zero();
        for i in 0..n {
            let x = self.q[(i, k)];
            let y = self.q[(i, k + 1)];
            self.q[(i, k)] = x * c + sc * y;
            self.q[(i, k + 1)] = -s * x + y * c;
        }
    }
}

/// Plane rotation with real `c` and complex `s` such that
/// `[c s; -conj(s) c] [f; g] = [r; 0]`.
fn givens(f: Complex<f64>, g: Complex<f64>) -> (f64, Complex<f64>) {
    let fa = f.norm();
    let ga = g.norm();
    if ga == 0.0 {
        return (1.0, Complex::zero());
    }
    if fa == 0.0 {
        return (0.0, g.conj() / ga);
    }
    let norm = fa.hypot(ga);
    let c = fa / norm;
    let s = (f / fa) * g.conj() / norm;
    (c, s)
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Smallest iterate of `A` that expands `E^u` and contracts `E^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateChoice {
    pub k: u32,
    /// `σ_min(A^k|E^u)`, absent when `E^u = 0`.
    pub sigma_u: Option<f64>,
    /// `σ_max(A^k|E^s)`, absent when `E^s = 0`.
    pub sigma_s: Option<f64>,
    pub theta_u: Option<f64>,
    pub theta_s: Option<f64>,
}

/// Restricted singular values of `A^k` on the two subspaces.
pub fn restricted_singular_values(
    a: &IntegerMatrix,
    s: &Splitting,
    k: u32,
) -> (Option<f64>, Option<f64>) {
    let ak = a.pow(k).to_f64();
    let su = (s.dim_u > 0).then(|| min_singular_value(&(&ak * &s.basis_u)));
    let ss = (s.dim_s > 0).then(|| operator_norm(&(&ak * &s.basis_s)));
    (su, ss)
}

/// Least `k >= 1` with `σ_min(A^k|E^u) > 1` and `σ_max(A^k|E^s) < 1`, and
/// the midpoints `θ = (1 + σ) / 2` that make both inequalities strict.
pub fn find_k(a: &IntegerMatrix, s: &Splitting, cap: u32) -> Result<IterateChoice> {
    let mut history = Vec::new();
    for k in 1..=cap {
        let (sigma_u, sigma_s) = restricted_singular_values(a, s, k);
        let ok_u = sigma_u.is_none_or(|v| v > 1.0);
        let ok_s = sigma_s.is_none_or(|v| v < 1.0);
        if ok_u && ok_s {
            return Ok(IterateChoice {
                k,
                sigma_u,
                sigma_s,
                theta_u: sigma_u.map(|v| 0.5 * (1.0 + v)),
                theta_s: sigma_s.map(|v| 0.5 * (1.0 + v)),
            });
        }
        if history.len() < 4 || k == cap {
            history.push(format!("k={k}: σ_u={sigma_u:?} σ_s={sigma_s:?}"));
        }
    }
    Err(Error::IterateCap {
        cap,
        diagnostics: history.join("; "),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    Empirical,
    UserSupplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedConstant {
    pub value: f64,
    pub provenance: Provenance,
}

impl TaggedConstant {
    pub fn new(value: f64, provenance: Provenance) -> Self {
        TaggedConstant { value, provenance }
    }
}

/// User-supplied values for the constants that cannot be derived from `A`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub eta1: Option<f64>,
    pub eps0: Option<f64>,
    pub eps1: Option<f64>,
}

/// Source of the constants that depend on the maps rather than on `A`.
pub trait ConstantEstimator {
    /// Radius `η₁` with `d(f, id) < η₁ ⇒ d(f^k, id) < η`.
    fn eta1(&self, k: u32, eta: f64) -> Option<TaggedConstant>;
    /// Radius `ε₀` below which the first-order remainder of `f^k` is `< η‖y‖`.
    fn eps0(&self, k: u32, eta: f64) -> Option<TaggedConstant>;
    /// Radius `ε₁` for which compositions of `N` maps are `η`-additive.
    fn eps1(&self, big_n: u64, eta: f64) -> Option<TaggedConstant>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub n: usize,
    pub ell: usize,
    pub k: u32,
    pub theta_u: Option<f64>,
    pub theta_s: Option<f64>,
    pub sigma_u: Option<f64>,
    pub sigma_s: Option<f64>,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub alpha: f64,
    /// `‖A^k‖`, operator norm.
    pub ak_norm: f64,
    #[serde(rename = "C_k")]
    pub c_k: f64,
    pub eta: f64,
    /// The two upper bounds whose minimum, halved, gives `eta`.
    pub eta_bound_alpha: f64,
    pub eta_bound_gap: f64,
    pub eta1: TaggedConstant,
    pub eps0: Option<TaggedConstant>,
    pub eps1: TaggedConstant,
    /// `min{η₁, ε₁, ε₀}`; absent while `ε₀` is unknown.
    pub eps: Option<f64>,
}

impl ConstantsBundle {
    /// `min{θ^u - 1, 1 - θ^s}` over the members that exist.
    pub fn hyperbolic_margin(&self) -> f64 {
        let u = self.theta_u.map(|t| t - 1.0).unwrap_or(f64::INFINITY);
        let s = self.theta_s.map(|t| 1.0 - t).unwrap_or(f64::INFINITY);
        u.min(s)
    }

    /// `2 η √(nℓ) (2 C_k + 1)`, the loss term of the supremum argument.
    pub fn sweep_loss(&self) -> f64 {
        2.0 * self.eta * ((self.n * self.ell) as f64).sqrt() * (2.0 * self.c_k + 1.0)
    }
}

pub fn compute_constants(
    a: &IntegerMatrix,
    s: &Splitting,
    ell: usize,
    alpha: f64,
    overrides: Overrides,
    estimator: Option<&dyn ConstantEstimator>,
) -> Result<ConstantsBundle> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if ell == 0 {
        return Err(Error::InvalidParameter("ell must be at least 1".into()));
    }
    let n = a.dim();
    let choice = find_k(a, s, DEFAULT_K_CAP)?;
    let ak = a.pow(choice.k);
    let big_n = (ak.max_abs_row_sum() + BigInt::from(1))
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("N does not fit in 64 bits".into()))?;
    let ak_norm = operator_norm(&ak.to_f64());
    let c_k = (ak_norm + alpha) / (1.0 - 2.0 * alpha);
    let root = ((n * ell) as f64).sqrt();
    let margin = {
        let u = choice.theta_u.map(|t| t - 1.0).unwrap_or(f64::INFINITY);
        let st = choice.theta_s.map(|t| 1.0 - t).unwrap_or(f64::INFINITY);
        u.min(st)
    };
    let eta_bound_alpha = alpha / root;
    let eta_bound_gap = margin / (2.0 * root * (2.0 * c_k + 1.0));
    let eta = 0.5 * eta_bound_alpha.min(eta_bound_gap);

    let pick = |user: Option<f64>, est: Option<TaggedConstant>| {
        user.map(|v| TaggedConstant::new(v, Provenance::UserSupplied)).or(est)
    };
    let eta1 = pick(overrides.eta1, estimator.and_then(|e| e.eta1(choice.k, eta)))
        .ok_or(Error::MissingConstant("eta1"))?;
    let eps1 = pick(overrides.eps1, estimator.and_then(|e| e.eps1(big_n, eta)))
        .ok_or(Error::MissingConstant("eps1"))?;
    let eps0 = pick(overrides.eps0, estimator.and_then(|e| e.eps0(choice.k, eta)));
    for (name, c) in [("eta1", Some(eta1)), ("eps1", Some(eps1)), ("eps0", eps0)] {
        if let Some(c) = c {
            if !(c.value > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {}", c.value)));
            }
        }
    }
    let eps = eps0.map(|e0| eta1.value.min(eps1.value).min(e0.value));

    Ok(ConstantsBundle {
        n,
        ell,
        k: choice.k,
        theta_u: choice.theta_u,
        theta_s: choice.theta_s,
        sigma_u: choice.sigma_u,
        sigma_s: choice.sigma_s,
        big_n,
        alpha,
        ak_norm,
        c_k,
        eta,
        eta_bound_alpha,
        eta_bound_gap,
        eta1,
        eps0,
        eps1,
        eps,
    })
}

/// `max_i Σ_j |(A^k)_ij|` as an exact integer, for callers that want to
/// check the `N` invariant independently.
pub fn max_abs_row_sum_of_power(a: &IntegerMatrix, k: u32) -> BigInt {
    a.pow(k).max_abs_row_sum()
}

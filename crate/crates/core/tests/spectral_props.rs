use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidity_core::group::IntegerMatrix;
use rigidity_core::spectral::{
    check_hyperbolic, compute_constants, compute_splitting, find_k, operator_norm,
    restricted_singular_values, Overrides, Provenance, Verdict, DEFAULT_DELTA, DEFAULT_K_CAP,
};
use rigidity_core::verify::ManifoldBounds;

/// Random matrices with entries in `[-5, 5]` whose spectrum stays at least
/// `0.05` away from the unit circle, by nalgebra's general eigenvalue solver.
fn random_hyperbolic(rng: &mut ChaCha8Rng, count: usize) -> Vec<IntegerMatrix> {
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.gen_range(1..=4usize);
        let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-5..=5)).collect()).collect();
        let Ok(a) = IntegerMatrix::from_rows(&rows) else { continue };
        let gap = a
            .to_f64()
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(f64::INFINITY, f64::min);
        if gap > 0.05 {
            out.push(a);
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn golden_two_by_two_moduli() {
    let a = IntegerMatrix::from_rows(&[[2, 3], [4, 5]]).unwrap();
    let r = check_hyperbolic(&a, DEFAULT_DELTA).unwrap();
    assert_eq!(r.verdict, Verdict::Hyperbolic);
    // Roots of t^2 - 7t - 2.
    let disc = 57f64.sqrt();
    let oracle = [(7.0 + disc) / 2.0, ((7.0 - disc) / 2.0).abs()];
    for (got, want) in r.eigen_moduli.iter().zip(oracle) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert!((oracle[0] - 7.274917218).abs() < 1e-9);
    assert!((oracle[1] - 0.274917218).abs() < 1e-9);
}

#[test]
fn projector_residuals_on_random_hyperbolic_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for a in random_hyperbolic(&mut rng, 100) {
        let s = compute_splitting(&a).unwrap();
        let r = s.residuals(&a.to_f64());
        assert!(r.max() <= 1e-9, "{a:?}: {r:?}");
    }
}

#[test]
fn iterate_expands_and_contracts_sampled_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for a in random_hyperbolic(&mut rng, 30) {
        let s = compute_splitting(&a).unwrap();
        let c = find_k(&a, &s, DEFAULT_K_CAP).unwrap();
        let ak = a.pow(c.k).to_f64();
        let n = a.dim();
        for _ in 0..1000 / 30 + 1 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for (proj, theta, expand) in [
                (s.project_u(&v), c.theta_u, true),
                (s.project_s(&v), c.theta_s, false),
            ] {
                let Some(theta) = theta else { continue };
                let nv = norm(&proj);
                if nv < 1e-9 {
                    continue;
                }
                let img = &ak * DMatrix::from_column_slice(n, 1, &proj);
                let ratio = img.norm() / nv;
                if expand {
                    assert!(ratio >= theta - 1e-9, "{ratio} < {theta}");
                } else {
                    assert!(ratio <= theta + 1e-9, "{ratio} > {theta}");
                }
            }
        }
    }
}

#[test]
fn iterate_is_minimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for a in random_hyperbolic(&mut rng, 40) {
        let s = compute_splitting(&a).unwrap();
        let c = find_k(&a, &s, DEFAULT_K_CAP).unwrap();
        for j in 1..c.k {
            let (su, ss) = restricted_singular_values(&a, &s, j);
            let good = su.is_none_or(|v| v > 1.0) && ss.is_none_or(|v| v < 1.0);
            assert!(!good, "k={} but j={j} already works", c.k);
        }
    }
}

#[test]
fn golden_two_by_two_iterate_is_one() {
    let a = IntegerMatrix::from_rows(&[[2, 3], [4, 5]]).unwrap();
    let s = compute_splitting(&a).unwrap();
    let r = s.residuals(&a.to_f64());
    assert!(r.completeness < 1e-9 && r.commutation < 1e-9, "{r:?}");
    assert_eq!(find_k(&a, &s, DEFAULT_K_CAP).unwrap().k, 1);
}

#[test]
fn golden_constants() {
    let bs = IntegerMatrix::from_rows(&[[2]]).unwrap();
    let s = compute_splitting(&bs).unwrap();
    let est = ManifoldBounds::for_ell(1).unwrap();
    let c = compute_constants(&bs, &s, 1, 0.25, Overrides::default(), Some(&est)).unwrap();
    assert_eq!(c.k, 1);
    assert_eq!(c.theta_u, Some(1.5));
    assert_eq!(c.c_k, 4.5);
    assert_eq!(c.big_n, 3);
    assert_eq!(c.eta, 0.0125);

    let a = IntegerMatrix::from_rows(&[[2, 3], [4, 5]]).unwrap();
    let s = compute_splitting(&a).unwrap();
    let c = compute_constants(&a, &s, 1, 0.25, Overrides::default(), Some(&est)).unwrap();
    assert_eq!(c.big_n, 10);
}

#[test]
fn bundle_invariants_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for a in random_hyperbolic(&mut rng, 40) {
        let s = compute_splitting(&a).unwrap();
        for ell in [1, 2] {
            let est = ManifoldBounds::for_ell(ell).unwrap();
            let alpha = rng.gen_range(0.05..0.45);
            let c = compute_constants(&a, &s, ell, alpha, Overrides::default(), Some(&est)).unwrap();
            let root = ((c.n * ell) as f64).sqrt();
            assert!(c.eta > 0.0);
            assert!(c.eta < alpha / root);
            assert!(2.0 * c.eta * root * (2.0 * c.c_k + 1.0) < c.hyperbolic_margin());
            assert!(c.c_k >= c.ak_norm);
            let row_sum = a.pow(c.k).max_abs_row_sum();
            assert_eq!(num_bigint::BigInt::from(c.big_n), row_sum + 1);
            assert_eq!(c.eta1.provenance, Provenance::Computed);
            assert!(c.eps0.is_none() && c.eps.is_none());

            let o = Overrides { eps0: Some(1e-3), ..Overrides::default() };
            let c = compute_constants(&a, &s, ell, alpha, o, Some(&est)).unwrap();
            let want = c.eta1.value.min(c.eps1.value).min(1e-3);
            assert_eq!(c.eps, Some(want));
            assert_eq!(c.eps0.unwrap().provenance, Provenance::UserSupplied);
        }
    }
}

#[test]
fn operator_norm_matches_power_iteration() {
    let m = DMatrix::from_row_slice(2, 2, &[16.0, 21.0, 28.0, 37.0]);
    let mtm = m.transpose() * &m;
    let mut v = DMatrix::from_column_slice(2, 1, &[1.0, 0.3]);
    for _ in 0..200 {
        v = &mtm * &v;
        v /= v.norm();
    }
    let oracle = (&m * &v).norm();
    assert!((operator_norm(&m) - oracle).abs() < 1e-9 * oracle);
}

#[test]
fn rotation_is_rejected() {
    let a = IntegerMatrix::from_rows(&[[0, -1], [1, 0]]).unwrap();
    let r = check_hyperbolic(&a, DEFAULT_DELTA).unwrap();
    assert_eq!(r.verdict, Verdict::HasUnitModulus);
    assert!(compute_splitting(&a).is_err());
}

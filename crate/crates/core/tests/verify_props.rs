use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidity_core::config::{run_pipeline, PipelineParams};
use rigidity_core::dynamics::{ActionInstance, EmbeddedManifold1D, ManifoldKind, SmoothMap};
use rigidity_core::group::IntegerMatrix;
use rigidity_core::spectral::{compute_constants, compute_splitting, Overrides, DEFAULT_ALPHA};
use rigidity_core::verify::{
    audit_bonatti, audit_bonatti_on, audit_lemma_ck, max_displacement_search, ActionEstimator,
    AuditOptions, AuditTag, Component, HypothesisStatus, SweepVerdict, LEMMA_ROW_COLUMN,
};

fn sine_pair(s: f64) -> Vec<SmoothMap> {
    vec![
        SmoothMap::Trig { amp: s, freq: 1, phase: 0.0 },
        SmoothMap::Trig { amp: s, freq: 1, phase: FRAC_PI_2 },
    ]
}

fn embed(t: f64) -> [f64; 2] {
    [(2.0 * PI * t).cos(), (2.0 * PI * t).sin()]
}

/// Sup over a uniform grid of the embedded additivity defect of
/// `x -> f1(f2(x))` with `f1 = x + s sin 2πx`, `f2 = x + s cos 2πx`, divided by
/// the larger embedded displacement of the two maps.
fn sine_oracle(s: f64, resolution: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..resolution {
        let x = i as f64 / resolution as f64;
        let f1 = |t: f64| t + s * (2.0 * PI * t).sin();
        let f2 = |t: f64| t + s * (2.0 * PI * t).cos();
        let e0 = embed(x);
        let (h, a, b) = (embed(f1(f2(x))), embed(f1(x)), embed(f2(x)));
        let defect: f64 = (0..2)
            .map(|c| ((h[c] - e0[c]) - (a[c] - e0[c]) - (b[c] - e0[c])).powi(2))
            .sum::<f64>()
            .sqrt();
        let chord = |p: [f64; 2]| ((p[0] - e0[0]).powi(2) + (p[1] - e0[1]).powi(2)).sqrt();
        let sup = chord(a).max(chord(b));
        if sup > 0.0 {
            worst = worst.max(defect / sup);
        }
    }
    worst
}

#[test]
fn translations_compose_exactly() {
    let m = EmbeddedManifold1D::interval(0.0, 1.0, 1001).unwrap();
    let maps = vec![SmoothMap::translation(0.125), SmoothMap::translation(-0.25), SmoothMap::translation(0.0625)];
    let domain = ManifoldKind::interval(-1.0, 2.0).unwrap();
    let r = audit_bonatti_on(&maps, &m, &domain, 0.01, Some(1.0)).unwrap();
    assert_eq!(r.empirical_eta, 0.0);
    assert!(r.records.iter().all(|rec| rec.lhs == 0.0 && rec.pass));
}

#[test]
fn sine_family_defect_shrinks_and_matches_oracle() {
    let circle = EmbeddedManifold1D::circle(4096).unwrap();
    let mut prev = f64::INFINITY;
    for s in [1e-1, 1e-2, 1e-3, 1e-4] {
        let r = audit_bonatti(&sine_pair(s), &circle, 0.01, None).unwrap();
        assert!(r.empirical_eta <= prev, "s={s}: {} after {prev}", r.empirical_eta);
        prev = r.empirical_eta;
        let oracle = sine_oracle(s, 100_000);
        let rel = (r.empirical_eta - oracle).abs() / oracle;
        assert!(rel < 0.05, "s={s}: {} vs oracle {oracle}", r.empirical_eta);
    }
}

fn random_matrix(rng: &mut ChaCha8Rng) -> IntegerMatrix {
    loop {
        let n = rng.gen_range(1..=2usize);
        let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        let Ok(a) = IntegerMatrix::from_rows(&rows) else { continue };
        if compute_splitting(&a).is_ok() {
            return a;
        }
    }
}

#[test]
fn trivial_perturbations_have_zero_displacement() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = PipelineParams {
        audit: AuditOptions { extra_points: 8, ..AuditOptions::default() },
        ..PipelineParams::default()
    };
    for trial in 0..50 {
        let a = random_matrix(&mut rng);
        let circle = rng.gen_bool(0.5);
        let kind = if circle { ManifoldKind::Circle } else { ManifoldKind::interval(0.0, 1.0).unwrap() };
        let m = EmbeddedManifold1D::new(kind, 128).unwrap();
        let freq = rng.gen_range(1..=3u32);
        let phase = if circle { rng.gen_range(0.0..2.0 * PI) } else { 0.0 };
        let mut amp = rng.gen_range(-1e-3..1e-3);
        // Shrink the perturbation until it is measurably ε-close to the identity.
        let out = loop {
            let f = SmoothMap::Trig { amp, freq, phase };
            let act = ActionInstance::make_trivial_perturbed(&a, m, f).unwrap();
            let out = run_pipeline(&act, &params).unwrap();
            if out.report.hypotheses.sweep_holds() {
                break out;
            }
            amp *= 0.1;
            assert!(amp.abs() > 1e-15, "trial {trial}: no ε-close perturbation found");
        };
        let h = out.report.hypotheses;
        assert!(h.d_f < h.eps.unwrap());
        assert_eq!(out.report.sweep.verdict, Some(SweepVerdict::DisplacementsZero), "trial {trial}");
        assert_eq!(out.report.failed, 0);
        assert_eq!(out.report.row_column_violations, 0);
    }
}

#[test]
fn affine_action_violates_hypotheses() {
    let a = IntegerMatrix::from_rows(&[[2]]).unwrap();
    let chart = EmbeddedManifold1D::interval(0.0, 1.0, 256).unwrap();
    let act = ActionInstance::make_affine_on_chart(&a, 2.0, &[1.0], chart).unwrap();
    let out = run_pipeline(&act, &PipelineParams::default()).unwrap();
    let h = out.report.hypotheses;
    // ‖Df - Id‖ = 1 everywhere, so d(f, id) >= 1.
    assert!(h.d_f >= 1.0);
    assert!(h.eps.is_none_or(|e| h.d_f > e));
    assert_eq!(out.report.sweep.verdict, Some(SweepVerdict::HypothesisViolated));
    assert_eq!(out.report.failed, 0);
    assert_eq!(out.report.row_column_violations, 0);
}

#[test]
fn translation_ratio_audit_uses_constant() {
    let a = IntegerMatrix::from_rows(&[[2]]).unwrap();
    let s = compute_splitting(&a).unwrap();
    let c_shift = 1e-3;
    let m = EmbeddedManifold1D::circle(64).unwrap();
    let act = ActionInstance::fixture(&a, m, SmoothMap::Identity, vec![SmoothMap::translation(c_shift)]).unwrap();
    let est = ActionEstimator { action: &act };
    let c = compute_constants(&a, &s, 2, DEFAULT_ALPHA, Overrides::default(), Some(&est)).unwrap();
    assert_eq!(c.c_k, 4.5);
    let hyp = HypothesisStatus::measure(&act, &c).unwrap();
    for x in m.grid() {
        // With n = 1 each column holds one embedding coordinate of g(x) - x,
        // and f = id makes D(f^k x) = D(x).
        let (p, q) = (embed(x + c_shift), embed(x));
        let want = (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
        let r = audit_lemma_ck(&act, &c, &hyp, x).unwrap();
        assert!((r.lhs - want).abs() < 1e-15, "{} vs {want}", r.lhs);
        assert!((r.bound - 4.5 * r.lhs).abs() <= 1e-15 * r.bound);
        assert!(r.pass);
    }
}

#[test]
fn ratio_audit_fails_when_image_is_fixed() {
    // g moves only a tiny window around 0.2; f is C¹-small but carries 0.2
    // outside that window, so D(f x) = 0 while D(x) != 0.
    let a = IntegerMatrix::from_rows(&[[2]]).unwrap();
    let s = compute_splitting(&a).unwrap();
    let m = EmbeddedManifold1D::interval(0.0, 1.0, 8192).unwrap();
    let f = SmoothMap::Bump { amp: 0.002, center: 0.5, width: 0.5 };
    let g = SmoothMap::Bump { amp: 1e-7, center: 0.2, width: 0.0005 };
    let act = ActionInstance::fixture(&a, m, f.clone(), vec![g]).unwrap();
    let est = ActionEstimator { action: &act };
    let c = compute_constants(&a, &s, 1, DEFAULT_ALPHA, Overrides::default(), Some(&est)).unwrap();
    let hyp = HypothesisStatus::measure(&act, &c).unwrap();
    assert!(hyp.transport_holds(), "{hyp:?}");
    assert!((f.eval(0.2) - 0.2).abs() > 0.0005);
    let r = audit_lemma_ck(&act, &c, &hyp, 0.2).unwrap();
    assert!(r.lhs > 0.0 && r.bound == 0.0);
    assert_eq!(r.tag, AuditTag::Fail);
}

#[test]
fn navas_audit_on_inner_interval() {
    let a = IntegerMatrix::from_rows(&[[2]]).unwrap();
    let act = ActionInstance::make_navas_action(&a, 2.0, 1.0, 0.9, 512)
        .unwrap()
        .with_audit_interval(0.4, 0.6)
        .unwrap();
    let out = run_pipeline(&act, &PipelineParams::default()).unwrap();
    let r = &out.report;
    assert_eq!(r.sweep.verdict, Some(SweepVerdict::HypothesisViolated));
    assert_eq!(r.failed, 0);
    assert_eq!(r.row_column_violations, 0);
    assert!(r.relation_residual < 1e-8);
    assert!(r.records.iter().filter(|rec| rec.lemma == LEMMA_ROW_COLUMN).all(|rec| rec.pass));
}

#[test]
fn navas_displacement_search_matches_brute_force() {
    let a = IntegerMatrix::from_rows(&[[2]]).unwrap();
    let s = compute_splitting(&a).unwrap();
    let act = ActionInstance::make_navas_action(&a, 2.0, 1.0, 0.9, 2048).unwrap();
    let report = max_displacement_search(&act, &s).unwrap();
    // For n = 1 the unstable projection is the identity.
    let (mut best_i, mut best) = (0, -1.0);
    for (i, &x) in act.manifold.grid().iter().enumerate() {
        let gx = if x == 0.0 { 0.0 } else { 1.0 / (1.0 / x + (-1.0 / x).exp().ln_1p()) };
        let d = (gx - x).abs();
        if d > best {
            best = d;
            best_i = i;
        }
    }
    assert_eq!(report.argmax.component, Component::U);
    assert_eq!(report.argmax.index, best_i);
    assert!((report.argmax.value - best).abs() <= 1e-12 * best);
}

fn fixture_strategy() -> impl Strategy<Value = ActionInstance> {
    let small = prop_oneof![
        Just(SmoothMap::Identity),
        (-0.01f64..0.01, 1u32..4, 0.0f64..std::f64::consts::TAU).prop_map(|(amp, freq, phase)| SmoothMap::Trig { amp, freq, phase }),
        (-0.01f64..0.01, 0.2f64..0.8, 0.05f64..0.3)
            .prop_map(|(amp, center, width)| SmoothMap::Bump { amp, center, width }),
    ];
    (prop::sample::select(vec![vec![vec![2i64]], vec![vec![2, 1], vec![1, 1]], vec![vec![3, 1], vec![1, 0]]]),
     prop::collection::vec(small, 2))
        .prop_map(|(rows, maps)| {
            let a = IntegerMatrix::from_rows(&rows).unwrap();
            let g = (0..rows.len()).map(|i| maps[i % 2].clone()).collect();
            let m = EmbeddedManifold1D::circle(64).unwrap();
            ActionInstance::fixture(&a, m, SmoothMap::Identity, g).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn argmax_agrees_with_rescan_and_brute_force(act in fixture_strategy()) {
        let s = compute_splitting(&act.matrix).unwrap();
        let report = max_displacement_search(&act, &s).unwrap();
        prop_assert_eq!(report.rescan(), report.argmax);
        let mut best = f64::NEG_INFINITY;
        for x in act.manifold.grid() {
            let d = act.displacement_matrix(x).unwrap();
            for j in 0..d.ell() {
                let col = d.entries.column(j).clone_owned();
                for p in [&s.proj_u, &s.proj_s] {
                    best = best.max((p * &col).norm());
                }
            }
        }
        prop_assert!((report.argmax.value - best).abs() <= 1e-12 * best.max(1e-300));
    }
}

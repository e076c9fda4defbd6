//! Property tests: parser round-trips, differentiation laws, tensor
//! symmetries, null-space soundness and the condition implication chain.

mod common;

use common::{engine, grid};
use finslerlab::classify::{classify_point, Sampler};
use finslerlab::expr::{
    add, differentiate, div, evaluate, mul, neg, parse_expr_str, powe, sqrt, unary, EvalVars,
    Exponent, ParseContext, ScalarExpr, UnaryOp, Var,
};
use finslerlab::metric::{FieldKind, VectorFieldSpec};
use finslerlab::scfield::{check_condition, sc_nullspace_at, Condition};
use proptest::prelude::*;

fn ctx() -> ParseContext {
    ParseContext::new(2, &["a".to_string()])
}

fn leaf() -> impl Strategy<Value = ScalarExpr> {
    prop_oneof![
        (-3i32..=3).prop_map(|k| ScalarExpr::Const(k as f64)),
        prop_oneof![Just(0.5f64), Just(1.5), Just(2.25)].prop_map(ScalarExpr::Const),
        prop_oneof![
            Just(Var::x(0)),
            Just(Var::x(1)),
            Just(Var::y(0)),
            Just(Var::y(1)),
            Just(Var::param(0)),
        ]
        .prop_map(ScalarExpr::Var),
    ]
}

fn expr_strategy() -> impl Strategy<Value = ScalarExpr> {
    leaf().prop_recursive(3, 40, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| finslerlab::expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| div(a, b)),
            inner.clone().prop_map(neg),
            inner.clone().prop_map(sqrt),
            inner.clone().prop_map(|a| unary(UnaryOp::Sin, a)),
            inner.clone().prop_map(|a| unary(UnaryOp::Exp, a)),
            inner.clone().prop_map(|a| unary(UnaryOp::Log, a)),
            (inner.clone(), 1i64..=4).prop_map(|(a, k)| powe(a, Exponent::int(k))),
            (inner.clone(), prop_oneof![Just((1i64, 3i64)), Just((5, 2)), Just((-7, 3))])
                .prop_map(|(a, (n, d))| powe(a, Exponent::rational(n, d))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn expression_round_trip(e in expr_strategy()) {
        let src = e.to_source(&["a".to_string()]);
        let parsed = parse_expr_str(&src, &ctx()).unwrap();
        prop_assert_eq!(&parsed, &e, "source `{}`", src);
    }

    #[test]
    fn differentiation_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        x1 in 0.2f64..2.0,
        y1 in 0.2f64..2.0,
        y2 in -2.0f64..2.0,
    ) {
        let c = ctx();
        let e1 = parse_expr_str("sqrt(y1^2 + x1^2*y2^2)", &c).unwrap();
        let e2 = parse_expr_str("y1^3/(1 + y2^2)", &c).unwrap();
        let combo = add(mul(ScalarExpr::Const(a), e1.clone()), mul(ScalarExpr::Const(b), e2.clone()));
        let vars = EvalVars { x: &[x1, 0.0], y: &[y1, y2], params: &[0.0] };
        for v in [Var::y(0), Var::y(1), Var::x(0)] {
            let lhs = evaluate(&differentiate(&combo, v), vars).unwrap();
            let rhs = a * evaluate(&differentiate(&e1, v), vars).unwrap()
                + b * evaluate(&differentiate(&e2, v), vars).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
        }
    }

    #[test]
    fn mixed_partials_commute(
        x1 in 0.5f64..2.0,
        x3 in 0.5f64..2.0,
        y1 in 0.3f64..1.5,
        y2 in 0.3f64..1.5,
        y3 in -1.0f64..1.0,
    ) {
        let eng = engine("conic_randers_lift", &[]);
        let e = &eng.spec().energy;
        let p = eng.point(vec![x1, 0.0, x3], vec![y1, y2, y3]).unwrap();
        for (u, v) in [(Var::y(0), Var::y(1)), (Var::y(1), Var::y(2)), (Var::x(0), Var::y(0))] {
            let duv = differentiate(&differentiate(e, u), v);
            let dvu = differentiate(&differentiate(e, v), u);
            let a = p.eval(&duv).unwrap();
            let b = p.eval(&dvu).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
        }
    }

    #[test]
    fn tensor_scaling_under_lambda(
        lambda in 0.25f64..4.0,
        seed in 0u64..32,
    ) {
        let eng = engine("ex5_3", &[]);
        let p = &Sampler::new(seed, 1).sample(&eng).unwrap()[0];
        let fb = eng.fundamental_bundle(p).unwrap();
        let q = p.with_y(p.y.iter().map(|v| v * lambda).collect());
        let fbq = eng.fundamental_bundle(&q).unwrap();
        prop_assert!((fbq.f - lambda * fb.f).abs() <= 1e-9 * (lambda * fb.f).abs());
        let gs = fb.g.max_abs().max(1.0);
        for idx in fb.g.indices() {
            prop_assert!((fbq.g.get(&idx) - fb.g.get(&idx)).abs() <= 1e-9 * gs);
        }
    }

    #[test]
    fn evaluation_is_deterministic(e in expr_strategy()) {
        let vars = EvalVars { x: &[1.1, -0.3], y: &[0.7, 1.9], params: &[0.25] };
        let a = evaluate(&e, vars);
        let b = evaluate(&e, vars);
        match (a, b) {
            (Ok(x), Ok(y)) => prop_assert!(x == y || (x.is_nan() && y.is_nan())),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "non-deterministic outcome {:?}", other),
        }
    }
}

// --------------------------------------------------------------------------
// Null-space soundness: recovered directions keep annihilating the Cartan
// tensor at tangent samples that played no part in the detection.
// --------------------------------------------------------------------------
#[test]
fn nullspace_sound_on_fresh_samples() {
    let tol = 1e-8;
    for name in ["conic_randers_lift", "ex5_2", "ex5_3"] {
        let eng = engine(name, &[]);
        let n = eng.dim();
        for p in grid(&eng, 67, 3) {
            let ys = Sampler::new(71, 25).sample_y_at(&eng, &p.x, 25).unwrap();
            let ns = sc_nullspace_at(&eng, &p.x, &ys, tol).unwrap();
            assert!(!ns.basis.is_empty(), "{name}");
            let fresh = Sampler::new(997, 10).sample_y_at(&eng, &p.x, 10).unwrap();
            for v in &ns.basis {
                for q in &fresh {
                    let fb = eng.fundamental_bundle(q).unwrap();
                    let scale = fb.cartan.max_abs().max(1e-30);
                    for i in 0..n {
                        for j in 0..n {
                            let c: f64 =
                                (0..n).map(|h| v[h] * fb.cartan.get(&[h, i, j])).sum();
                            assert!(
                                c.abs() <= 10.0 * tol * scale,
                                "{name}: fresh-sample residual {:e}",
                                c.abs() / scale
                            );
                        }
                    }
                }
            }
        }
    }
}

// --------------------------------------------------------------------------
// Implication chain: C ⇒ SC, and CC ⇒ the raised conformal gradient is a
// function of x only (the F-style conclusion).
// --------------------------------------------------------------------------
#[test]
fn condition_implication_chain() {
    let eng = engine("conic_randers_lift", &[]);
    let spec = eng.spec().clone();
    let samples = grid(&eng, 73, 15);

    // the concurrent field satisfies C, hence SC at the same tolerance
    let conc = VectorFieldSpec::parse(&spec, "0; 0; -x3", FieldKind::Concurrent).unwrap();
    let c_rep = check_condition(&eng, &conc, Condition::C, &samples, 1e-6).unwrap();
    assert!(c_rep.pass);
    let sc_rep = check_condition(&eng, &conc, Condition::SC, &samples, 1e-6).unwrap();
    assert!(sc_rep.pass, "C ⇒ SC violated: {:e}", sc_rep.residual_scaled);

    // CC with σ = x3 ⇒ σ_h g^{hj} is y-independent
    let sigma = spec.parse_expr("x3").unwrap();
    let cc = finslerlab::catalog::conformal_field(&eng, &sigma).unwrap();
    let cc_rep = check_condition(&eng, &cc, Condition::CC, &samples, 1e-7).unwrap();
    assert!(cc_rep.pass);
    let x0 = samples[0].x.clone();
    let ys = Sampler::new(79, 6).sample_y_at(&eng, &x0, 6).unwrap();
    let raised: Vec<Vec<f64>> = ys
        .iter()
        .map(|p| finslerlab::scfield::raise_gradient(&eng, &sigma, p).unwrap())
        .collect();
    for pair in raised.windows(2) {
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            assert!((a - b).abs() < 1e-9, "raised σ gradient depends on y");
        }
    }
}

// --------------------------------------------------------------------------
// C-reducible model self-test: contracting the model with g^{jk}
// reproduces C_i exactly.
// --------------------------------------------------------------------------
#[test]
fn c_reducible_model_contraction_identity() {
    let eng = engine("conic_randers_lift", &[]);
    let n = eng.dim();
    for p in grid(&eng, 83, 10) {
        let fb = eng.fundamental_bundle(&p).unwrap();
        let w = fb.g_inv().unwrap();
        let cv = fb.c_vec().unwrap();
        let h = &fb.h;
        for i in 0..n {
            let mut contracted = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let model = (h.get(&[i, j]) * cv.get(&[k])
                        + h.get(&[k, i]) * cv.get(&[j])
                        + h.get(&[j, k]) * cv.get(&[i]))
                        / (n as f64 + 1.0);
                    contracted += model * w.get(&[j, k]);
                }
            }
            // h_i^k C_k = C_i and h^jk g_jk = n−1, so the trace collapses
            // back to C_i (up to cancellation roundoff through h = g − ll)
            assert!(
                (contracted - cv.get(&[i])).abs() <= 1e-9 * cv.max_abs().max(1.0),
                "contraction broke: {} vs {}",
                contracted,
                cv.get(&[i])
            );
        }
    }
}

// --------------------------------------------------------------------------
// Semi-C decomposition: r ≈ 0 forces the C2-like model (theorem-level
// dichotomy tested at the decomposition level).
// --------------------------------------------------------------------------
#[test]
fn semi_c_r_zero_matches_c2like() {
    let eng = engine("randers2d", &[]);
    for p in grid(&eng, 89, 15) {
        let c = classify_point(&eng, &p, 1e-8).unwrap();
        let fit = c.semi_c.expect("Randers has C ≠ 0");
        if fit.r.abs() < 1e-6 {
            assert!(
                c.c2like_residual <= 1e-6 * c.scale,
                "r ≈ 0 but C2-like residual {:e}",
                c.c2like_residual
            );
        }
    }
}

// --------------------------------------------------------------------------
// Riemannian detection ⇔ quadratic energy (exact zeros from the symbolic
// path).
// --------------------------------------------------------------------------
#[test]
fn riemannian_detection_matches_quadratic_energy() {
    for (name, quadratic) in [
        ("euclidean_n", true),
        ("ex5_1", true),
        ("conic_randers_lift", false),
        ("ex5_2", false),
        ("ex5_3", false),
        ("product3d", false),
        ("randers2d", false),
    ] {
        let eng = engine(name, &[]);
        let mut max_c = 0.0_f64;
        for p in grid(&eng, 97, 15) {
            let fb = eng.fundamental_bundle(&p).unwrap();
            max_c = max_c.max(fb.cartan.max_abs());
        }
        if quadratic {
            assert!(max_c < 1e-12, "{name}: {max_c:e}");
        } else {
            assert!(max_c > 1e-6, "{name}: {max_c:e}");
        }
    }
}

// --------------------------------------------------------------------------
// Landsberg remark: at Berwald points the Landsberg tensor and the
// contraction y^i C^h_{jk|i} both vanish.
// --------------------------------------------------------------------------
#[test]
fn berwald_points_are_landsberg_with_vanishing_contraction() {
    let (base, _) =
        finslerlab::catalog::builtin("euclidean_n", &[("n".to_string(), 2.0)]).unwrap();
    let (lift, _) = finslerlab::catalog::tachibana_lift(&base).unwrap();
    let eng = finslerlab::fundamental::MetricEngine::new(lift);
    let n = eng.dim();
    for p in grid(&eng, 101, 10) {
        let cb = eng.connection_bundle(&p).unwrap();
        assert!(cb.berwald_tensor.max_abs() < 1e-8, "Berwald point expected");
        assert!(cb.landsberg.max_abs() < 1e-8);
        let d = eng
            .h_cov_deriv(&finslerlab::connections::MixedCartanField, &p)
            .unwrap();
        // y^i C^h_{jk|i}
        let mut worst = 0.0_f64;
        for h in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let contracted: f64 =
                        (0..n).map(|i| p.y[i] * d.get(&[h, j, k, i])).sum();
                    worst = worst.max(contracted.abs());
                }
            }
        }
        assert!(worst < 1e-8, "y^i C^h_jk|i = {worst:e}");
    }
}

// --------------------------------------------------------------------------
// Metric-file statements survive a save/load cycle byte-for-byte at the
// structural level.
// --------------------------------------------------------------------------
proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_spec_round_trip(dim in 2usize..4, eps in 0.1f64..0.9) {
        let terms: Vec<String> = (1..=dim).map(|i| format!("y{}^2", i)).collect();
        let src = format!(
            "dim = {}\nparam eps = {:?}\nenergy = ({}) + eps*y1*y2\ndomain = y1 != 0\nlabel = \"rt\"",
            dim,
            eps,
            terms.join(" + ")
        );
        let spec = finslerlab::metric::parse_metric(&src).unwrap();
        let emitted = spec.to_source();
        let reparsed = finslerlab::metric::parse_metric(&emitted).unwrap();
        prop_assert_eq!(spec, reparsed);
    }
}

// --------------------------------------------------------------------------
// Cartan tensor symmetry under all six index permutations (exact by
// construction from the sorted derivative tables).
// --------------------------------------------------------------------------
#[test]
fn cartan_tensor_fully_symmetric() {
    for name in ["conic_randers_lift", "ex5_3", "product3d"] {
        let eng = engine(name, &[]);
        for p in grid(&eng, 103, 5) {
            let c = eng.fundamental_bundle(&p).unwrap().cartan;
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                assert_eq!(c.symmetry_violation(a, b), 0.0, "{name}");
            }
        }
    }
}

// --------------------------------------------------------------------------
// Vertical covariant derivative of C cross-checked against finite
// differences of the Cartan components plus the C-corrections.
// --------------------------------------------------------------------------
#[test]
fn v_cov_deriv_of_cartan_matches_fd() {
    let eng = engine("conic_randers_lift", &[]);
    let n = eng.dim();
    let p = eng.point(vec![1.1, 0.4, 1.7], vec![0.9, 0.6, 0.3]).unwrap();
    let fb = eng.fundamental_bundle(&p).unwrap();
    let c_mixed = fb.c_mixed().unwrap();
    let cv = eng
        .v_cov_deriv(&finslerlab::connections::CartanTensorField, &p)
        .unwrap();
    let cartan_at = |yv: &[f64], idx: &[usize; 3]| -> f64 {
        let q = p.with_y(yv.to_vec());
        eng.fundamental_bundle(&q).unwrap().cartan.get(idx)
    };
    for (h, i, j, k) in [(0usize, 0usize, 1usize, 1usize), (1, 1, 1, 0), (0, 1, 2, 1)] {
        // ∂̇_k C_hij by the order-6 stencil
        let f = |yv: &[f64]| cartan_at(yv, &[h, i, j]);
        let fd = finslerlab::numdiff::mixed_partial_o6(&f, &p.y, &[k], 8e-3);
        let mut want = fd;
        for m in 0..n {
            want -= fb.cartan.get(&[m, i, j]) * c_mixed.get(&[m, h, k]);
            want -= fb.cartan.get(&[h, m, j]) * c_mixed.get(&[m, i, k]);
            want -= fb.cartan.get(&[h, i, m]) * c_mixed.get(&[m, j, k]);
        }
        let got = cv.get(&[h, i, j, k]);
        assert!(
            (got - want).abs() <= 1e-5 * got.abs().max(want.abs()).max(1e-2),
            "C_{h}{i}{j}|{k}: {got} vs fd-composed {want}"
        );
    }
}

// --------------------------------------------------------------------------
// Independence quantities of the ex5_3 SC family stay bounded away from
// zero across samples.
// --------------------------------------------------------------------------
#[test]
fn ex5_3_independence_quantities_bounded_away_from_zero() {
    let eng = engine("ex5_3", &[]);
    let field =
        VectorFieldSpec::parse(eng.spec(), "0; 1; -A5/A6; -x1", FieldKind::Generic).unwrap();
    let samples = grid(&eng, 107, 20);
    let rep =
        finslerlab::scfield::independence_invariants(&eng, &field, &samples, 1e-10).unwrap();
    assert_eq!(rep.b0.len(), 20);
    for (b0, crit) in rep.b0.iter().zip(&rep.bf2_minus_b02) {
        assert!(b0.abs() > 1e-4, "B0 = {b0:e}");
        assert!(crit.abs() > 1e-4, "B²F² − B0² = {crit:e}");
    }
    assert!(!rep.b0_flagged);
    assert!(!rep.bf2_flagged);
}

// --------------------------------------------------------------------------
// classify_metric verdicts on the worked examples.
// --------------------------------------------------------------------------
#[test]
fn classify_verdicts_on_worked_examples() {
    // quadratic energy ⇒ Riemannian membership
    let eng = engine("ex5_1", &[]);
    let rep =
        finslerlab::classify::classify_metric(&eng, &Sampler::new(0, 12), 1e-8).unwrap();
    assert!(rep.verdicts["riemannian"]);
    assert!(rep.verdicts["berwald"]);
    assert!(rep.verdicts["landsberg"]);

    // the conic lift is neither, and fails reversibility (odd Randers term)
    let eng = engine("conic_randers_lift", &[]);
    let rep =
        finslerlab::classify::classify_metric(&eng, &Sampler::new(0, 12), 1e-8).unwrap();
    assert!(!rep.verdicts["riemannian"]);
    assert!(!rep.verdicts["berwald"]);
    assert!(!rep.verdicts["reversible"]);
}

// --------------------------------------------------------------------------
// A lift of a y-quadratic base with x-dependent SPD coefficients stays
// Riemannian and admits the (0,…,0,−x_n) concurrent field.
// --------------------------------------------------------------------------
#[test]
fn tachibana_lift_of_x_dependent_spd_base() {
    let base = finslerlab::metric::parse_metric(
        "dim = 2\nenergy = (1 + x1^2)*y1^2 + (2 + cos(x2))*y2^2 + x1*y1*y2/4\nlabel = \"spd base\"",
    )
    .unwrap();
    let (lift, art) = finslerlab::catalog::tachibana_lift(&base).unwrap();
    let eng = finslerlab::fundamental::MetricEngine::new(lift);
    let samples = grid(&eng, 109, 12);
    for p in &samples {
        let fb = eng.fundamental_bundle(p).unwrap();
        assert!(fb.cartan.max_abs() < 1e-12, "quadratic base lifts to Riemannian");
    }
    let mut passing = Vec::new();
    for cand in &art.concurrent_candidates {
        let rep = check_condition(&eng, cand, Condition::C, &samples, 1e-6).unwrap();
        if rep.pass {
            passing.push(cand.to_source(eng.spec()));
        }
    }
    assert_eq!(passing.len(), 1, "exactly one sign: {passing:?}");
    assert!(passing[0].contains("-x3"));
}

// --------------------------------------------------------------------------
// Any field on a flat metric satisfies the SC-condition with residual 0.
// --------------------------------------------------------------------------
#[test]
fn any_field_is_sc_on_flat_metric() {
    let eng = engine("euclidean_n", &[]);
    let field =
        VectorFieldSpec::parse(eng.spec(), "x1*x2; exp(x3); -1", FieldKind::Generic).unwrap();
    let samples = grid(&eng, 113, 8);
    let rep = check_condition(&eng, &field, Condition::SC, &samples, 1e-12).unwrap();
    assert_eq!(rep.residual_raw, 0.0);
    assert!(rep.pass);
}

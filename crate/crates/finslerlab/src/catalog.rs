//! Built-in metric constructors with the closed-form components they are
//! expected to reproduce, plus the regression driver.
//!
//! Expected-component formulas are stored in the same DSL text as metric
//! files and may reference the spec's named parameters, so overriding a
//! parameter keeps metric and expectations consistent.

use crate::classify::Sampler;
use crate::error::{Error, Result};
use crate::expr::{add, mul, powe, Exponent, ParseContext, ScalarExpr, Var};
use crate::fundamental::MetricEngine;
use crate::metric::{FieldKind, MetricSpec, VectorFieldSpec};
use crate::scfield::{check_condition, sc_nullspace_at, Condition};

/// Closed-form expectations attached to a catalog metric.
#[derive(Debug, Clone, Default)]
pub struct ExpectedArtifacts {
    /// (label, [i, j], formula) with zero-based indices.
    pub g_components: Vec<(String, [usize; 2], ScalarExpr)>,
    /// (label, [i, j, k], formula), indices sorted ascending.
    pub c_components: Vec<(String, [usize; 3], ScalarExpr)>,
    /// When set, the sorted index triples listed are exactly the
    /// not-identically-zero Cartan components.
    pub nonzero_c_exact: Option<Vec<[usize; 3]>>,
    /// Leading principal minors of g, first to last.
    pub minors: Vec<ScalarExpr>,
    /// Fields expected to satisfy the SC-condition.
    pub sc_fields: Vec<VectorFieldSpec>,
    /// Candidates for the full concurrent condition (typically both signs).
    pub concurrent_candidates: Vec<VectorFieldSpec>,
    /// Potentials f whose gradient satisfies the F-condition.
    pub f_potentials: Vec<ScalarExpr>,
    /// Conformal potentials σ for the CC-condition.
    pub cc_potentials: Vec<ScalarExpr>,
    /// When true, the metric admits no semi-concurrent field and the
    /// detector must come back empty.
    pub expect_no_sc: bool,
    pub notes: Vec<String>,
}

/// Catalog names with one-line descriptions.
pub fn catalog_names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("euclidean_n", "flat metric Σ y_i², override n for the dimension"),
        (
            "product3d",
            "F = (y1 y2 y3)^(1/3) on the positive cone; C_i = 0 yet not Riemannian, no SC field",
        ),
        (
            "conic_randers_lift",
            "E = y3² + x3²(√(y1²+x1²y2²)+ε y2)²; conic, admits the concurrent family (0,0,f)",
        ),
        ("randers2d", "2-D conic Randers metric √(y1²+x1²y2²)+ε y2"),
        ("ex5_1", "4-D quadratic family: pseudo-Riemannian, positivity via minors"),
        ("ex5_2", "4-D conic family with quartic y3 term; SC field along e2"),
        ("ex5_3", "4-D conic family; SC field (0,1,−A5/A6,−x1)"),
    ]
}

/// Construct a catalog metric with optional parameter overrides.
pub fn builtin(name: &str, overrides: &[(String, f64)]) -> Result<(MetricSpec, ExpectedArtifacts)> {
    let (mut spec, mut art) = match name {
        "euclidean_n" => euclidean_n(overrides),
        "product3d" => product3d(),
        "conic_randers_lift" => conic_randers_lift(),
        "randers2d" => randers2d(),
        "ex5_1" => ex5_1(),
        "ex5_2" => ex5_2(),
        "ex5_3" => ex5_3(),
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    }?;
    for (key, value) in overrides {
        if name == "euclidean_n" && key == "n" {
            continue; // consumed by the constructor
        }
        spec.set_param(key, *value)?;
        validate_overrides(name, &spec)?;
    }
    let _ = &mut art;
    Ok((spec, art))
}

fn validate_overrides(name: &str, spec: &MetricSpec) -> Result<()> {
    let get = |k: &str| {
        spec.params
            .iter()
            .find(|(n, _)| n == k)
            .map(|(_, v)| *v)
    };
    if name == "ex5_3" || name == "ex5_2" {
        if let Some(a6) = get("A6") {
            if a6 == 0.0 {
                return Err(Error::InvalidOverride(format!(
                    "{}: A6 must be nonzero (the SC family divides by A6)",
                    name
                )));
            }
        }
    }
    Ok(())
}

fn parse_pair(src: &str) -> Result<MetricSpec> {
    MetricSpec::parse(src)
}

fn expr(spec: &MetricSpec, src: &str) -> ScalarExpr {
    spec.parse_expr(src)
        .unwrap_or_else(|e| panic!("catalog expression `{}` failed to parse: {}", src, e))
}

fn field(spec: &MetricSpec, src: &str, kind: FieldKind) -> VectorFieldSpec {
    VectorFieldSpec::parse(spec, src, kind)
        .unwrap_or_else(|e| panic!("catalog field `{}` failed to parse: {}", src, e))
}

fn euclidean_n(overrides: &[(String, f64)]) -> Result<(MetricSpec, ExpectedArtifacts)> {
    let n = overrides
        .iter()
        .find(|(k, _)| k == "n")
        .map(|(_, v)| *v as usize)
        .unwrap_or(3);
    if n == 0 || n > 8 {
        return Err(Error::InvalidOverride(format!(
            "euclidean_n: n must be in 1..=8, got {}",
            n
        )));
    }
    let terms: Vec<String> = (1..=n).map(|i| format!("y{}^2", i)).collect();
    let spec = parse_pair(&format!(
        "dim = {}\nenergy = {}\nlabel = \"euclidean_{}\"",
        n,
        terms.join(" + "),
        n
    ))?;
    let mut art = ExpectedArtifacts::default();
    for i in 0..n {
        for j in i..n {
            let val = if i == j { "1" } else { "0" };
            art.g_components
                .push((format!("g{}{}", i + 1, j + 1), [i, j], expr(&spec, val)));
        }
    }
    art.nonzero_c_exact = Some(Vec::new());
    art.minors = (0..n).map(|_| expr(&spec, "1")).collect();
    // every basis direction is semi-concurrent (C ≡ 0)
    let e1: Vec<String> = (0..n).map(|i| if i == 0 { "1" } else { "0" }.into()).collect();
    art.sc_fields
        .push(field(&spec, &e1.join("; "), FieldKind::Generic));
    art.notes.push("flat: every field is semi-concurrent".into());
    Ok((spec, art))
}

fn product3d() -> Result<(MetricSpec, ExpectedArtifacts)> {
    let spec = parse_pair(
        "dim = 3\n\
         energy = (y1*y2*y3)^(2/3)\n\
         domain = y1*y2*y3 > 0\n\
         label = \"product3d\"",
    )?;
    let mut art = ExpectedArtifacts::default();
    let den4 = "(y1*y2*y3)^(4/3)";
    let den7 = "(y1*y2*y3)^(7/3)";
    for (name, idx, num, coeff) in [
        ("g11", [0usize, 0usize], "(y2*y3)^2", "-1/9"),
        ("g12", [0, 1], "y1*y2*y3^2", "2/9"),
        ("g13", [0, 2], "y1*y2^2*y3", "2/9"),
        ("g22", [1, 1], "(y1*y3)^2", "-1/9"),
        ("g23", [1, 2], "y1^2*y2*y3", "2/9"),
        ("g33", [2, 2], "(y1*y2)^2", "-1/9"),
    ] {
        art.g_components.push((
            name.into(),
            idx,
            expr(&spec, &format!("({})*{}/{}", coeff, num, den4)),
        ));
    }
    for (name, idx, num, coeff) in [
        ("C111", [0usize, 0usize, 0usize], "(y2*y3)^3", "2/27"),
        ("C112", [0, 0, 1], "y1*y2^2*y3^3", "-1/27"),
        ("C113", [0, 0, 2], "y1*y2^3*y3^2", "-1/27"),
        ("C122", [0, 1, 1], "y1^2*y2*y3^3", "-1/27"),
        // corrected from the printed table: the numerator carries y1^2, not
        // y1^3 (forced by C_123 = ¼ ∂̇1∂̇2∂̇3 F² and the FD oracle)
        ("C123", [0, 1, 2], "y1^2*(y2*y3)^2", "2/27"),
        ("C133", [0, 2, 2], "y1^2*y2^3*y3", "-1/27"),
        ("C222", [1, 1, 1], "(y1*y3)^3", "2/27"),
        ("C223", [1, 1, 2], "y1^3*y2*y3^2", "-1/27"),
        ("C233", [1, 2, 2], "y1^3*y2^2*y3", "-1/27"),
        ("C333", [2, 2, 2], "(y1*y2)^3", "2/27"),
    ] {
        art.c_components.push((
            name.into(),
            idx,
            expr(&spec, &format!("({})*{}/{}", coeff, num, den7)),
        ));
    }
    art.expect_no_sc = true;
    art.notes
        .push("C_i = 0 for all i although the space is not Riemannian".into());
    art.notes
        .push("B^i C_i11 = (1/27)(2B1 y2 y3 − B2 y1 y3 − B3 y1 y2)/(y1^2 (y1 y2 y3)^(1/3)) ≠ 0".into());
    Ok((spec, art))
}

fn conic_randers_lift() -> Result<(MetricSpec, ExpectedArtifacts)> {
    let spec = parse_pair(
        "dim = 3\n\
         param eps = 0.5\n\
         energy = y3^2 + x3^2*(sqrt(y1^2 + x1^2*y2^2) + eps*y2)^2\n\
         domain = y1^2 + y2^2 > 0\n\
         label = \"conic_randers_lift\"",
    )?;
    let mut art = ExpectedArtifacts::default();
    let rho2 = "(y1^2 + x1^2*y2^2)";
    art.g_components.push((
        "g11".into(),
        [0, 0],
        expr(
            &spec,
            &format!(
                "x3^2*(eps*x1^4*y2^5 + eps*x1^2*y1^2*y2^3 + sqrt({r})*(x1^2*y2^2*{r} - x1^2*y1^2*y2^2 + 2*y1^2*{r} - y1^4))/{r}^(5/2)",
                r = rho2
            ),
        ),
    ));
    art.g_components.push((
        "g22".into(),
        [1, 1],
        expr(
            &spec,
            &format!(
                "x3^2*(2*eps*x1^4*y2^3 + 3*eps*x1^2*y1^2*y2 + x1^2*{r}^(3/2) + eps^2*{r}^(3/2))/{r}^(3/2)",
                r = rho2
            ),
        ),
    ));
    art.g_components.push((
        "g12".into(),
        [0, 1],
        expr(&spec, &format!("eps*x3^2*y1^3/{}^(3/2)", rho2)),
    ));
    art.g_components
        .push(("g33".into(), [2, 2], expr(&spec, "1")));
    for (name, idx, num, coeff) in [
        ("C111", [0usize, 0usize, 0usize], "y1*y2^3", "-3/2"),
        ("C112", [0, 0, 1], "y1^2*y2^2", "3/2"),
        ("C122", [0, 1, 1], "y1^3*y2", "-3/2"),
        ("C222", [1, 1, 1], "y1^4", "3/2"),
    ] {
        art.c_components.push((
            name.into(),
            idx,
            expr(
                &spec,
                &format!("({})*eps*x1^2*x3^2*{}/{}^(5/2)", coeff, num, rho2),
            ),
        ));
    }
    art.sc_fields
        .push(field(&spec, "0; 0; x3", FieldKind::Generic));
    art.sc_fields
        .push(field(&spec, "0; 0; 1 + x1^2", FieldKind::Generic));
    art.concurrent_candidates
        .push(field(&spec, "0; 0; x3", FieldKind::Concurrent));
    art.concurrent_candidates
        .push(field(&spec, "0; 0; -x3", FieldKind::Concurrent));
    art.f_potentials.push(expr(&spec, "x3"));
    art.cc_potentials.push(expr(&spec, "x3"));
    art.notes
        .push("not smooth on the directions (0, 0, ±1); conic domain excludes y1 = y2 = 0".into());
    Ok((spec, art))
}

fn randers2d() -> Result<(MetricSpec, ExpectedArtifacts)> {
    let spec = parse_pair(
        "dim = 2\n\
         param eps = 0.5\n\
         energy = (sqrt(y1^2 + x1^2*y2^2) + eps*y2)^2\n\
         domain = x1^2 > eps^2 and y1^2 + y2^2 > 0\n\
         label = \"randers2d\"",
    )?;
    let mut art = ExpectedArtifacts::default();
    art.expect_no_sc = true;
    art.notes
        .push("positive definite on x1² > ε²; two-dimensional, so an SC field would force Riemannian".into());
    Ok((spec, art))
}

fn ex5_1() -> Result<(MetricSpec, ExpectedArtifacts)> {
    let spec = parse_pair(
        "dim = 4\n\
         param A5 = 1\nparam A6 = 1\n\
         param F5 = 1\nparam F6 = 0\nparam F7 = 1\nparam F8 = 1\n\
         energy = y4*(A5*y2 + A6*y3) + (A5*y2 + A6*y3)^2 + F5*y1^2 + F6*y1*y2 + F7*y2^2 + F8*y4^2\n\
         label = \"ex5_1\"",
    )?;
    let mut art = ExpectedArtifacts::default();
    for (name, idx, src) in [
        ("g11", [0usize, 0usize], "F5"),
        ("g12", [0, 1], "F6/2"),
        ("g13", [0, 2], "0"),
        ("g14", [0, 3], "0"),
        ("g22", [1, 1], "A5^2 + F7"),
        ("g23", [1, 2], "A5*A6"),
        ("g24", [1, 3], "A5/2"),
        ("g33", [2, 2], "A6^2"),
        ("g34", [2, 3], "A6/2"),
        ("g44", [3, 3], "F8"),
    ] {
        art.g_components.push((name.into(), idx, expr(&spec, src)));
    }
    art.nonzero_c_exact = Some(Vec::new()); // quadratic energy: C ≡ 0
    art.minors = vec![
        expr(&spec, "F5"),
        expr(&spec, "A5^2*F5 + F5*F7 - F6^2/4"),
        expr(&spec, "(A6^2/4)*(4*F5*F7 - F6^2)"),
        expr(&spec, "(A6^2/16)*(4*F5*F7 - F6^2)*(4*F8 - 1)"),
    ];
    art.notes
        .push("positive definite iff F5 > 0, F5 F7 > F6²/4, F8 > 1/4".into());
    Ok((spec, art))
}

fn ex5_2() -> Result<(MetricSpec, ExpectedArtifacts)> {
    let spec = parse_pair(
        "dim = 4\n\
         param A6 = 2\n\
         param F5 = 1\nparam F6 = 0\nparam F7 = 1\nparam F8 = 1\n\
         energy = A6*y3*y4 + A6^4*y3^4/y1^2 + F5*y1^2 + F6*y1*y2 + F7*y2^2 + F8*y4^2\n\
         domain = y1 != 0\n\
         label = \"ex5_2\"",
    )?;
    let mut art = ExpectedArtifacts::default();
    for (name, idx, src) in [
        ("g11", [0usize, 0usize], "(3*A6^4*y3^4 + F5*y1^4)/y1^4"),
        ("g12", [0, 1], "F6/2"),
        ("g13", [0, 2], "-4*A6^4*y3^3/y1^3"),
        ("g14", [0, 3], "0"),
        ("g22", [1, 1], "F7"),
        ("g23", [1, 2], "0"),
        ("g24", [1, 3], "0"),
        ("g33", [2, 2], "6*A6^4*y3^2/y1^2"),
        ("g34", [2, 3], "A6/2"),
        ("g44", [3, 3], "F8"),
    ] {
        art.g_components.push((name.into(), idx, expr(&spec, src)));
    }
    for (name, idx, src) in [
        ("C111", [0usize, 0usize, 0usize], "-6*A6^4*y3^4/y1^5"),
        ("C113", [0, 0, 2], "6*A6^4*y3^3/y1^4"),
        ("C133", [0, 2, 2], "-6*A6^4*y3^2/y1^3"),
        ("C333", [2, 2, 2], "6*A6^4*y3/y1^2"),
    ] {
        art.c_components.push((name.into(), idx, expr(&spec, src)));
    }
    art.nonzero_c_exact = Some(vec![[0, 0, 0], [0, 0, 2], [0, 2, 2], [2, 2, 2]]);
    art.sc_fields
        .push(field(&spec, "0; 1; 0; 0", FieldKind::Generic));
    art.f_potentials.push(expr(&spec, "x2"));
    art.notes.push(
        "printed SC family is B = (0, f(x), 0, 0); e4 also solves B^h C_hij = 0 since no Cartan component carries index 4"
            .into(),
    );
    art.notes.push(
        "printed minors substitute F5 = 5 and disagree with direct cofactor expansion; omitted".into(),
    );
    Ok((spec, art))
}

fn ex5_3() -> Result<(MetricSpec, ExpectedArtifacts)> {
    let spec = parse_pair(
        "dim = 4\n\
         param A5 = 1\nparam A6 = 2\n\
         param F5 = 1\nparam F6 = 0\nparam F7 = 1\nparam F8 = 1\n\
         energy = (x1*y2 + y4)*(A5*y2 + A6*y3)^2/y1 - (A5*y2 + A6*y3)*y1 + F5*y1^2 + F6*y1*y2 + F7*y2^2 + F8*y4^2\n\
         domain = y1 != 0\n\
         label = \"ex5_3\"",
    )?;
    let mut art = ExpectedArtifacts::default();
    for (name, idx, src) in [
        (
            "C111",
            [0usize, 0usize, 0usize],
            "-(3/2)*(A5*y2^2*(x1*(A5*y2 + 2*A6*y3) + A5*y4) + A6^2*y3^2*(x1*y2 + y4) + 2*A5*A6*y2*y3*y4)/y1^4",
        ),
        (
            "C112",
            [0, 0, 1],
            "(1/2)*(3*A5^2*x1*y2^2 + 4*A5*A6*x1*y2*y3 + A6^2*x1*y3^2 + 2*A5^2*y2*y4 + 2*A5*A6*y3*y4)/y1^3",
        ),
        (
            "C113",
            [0, 0, 2],
            "A6*(A5*x1*y2^2 + A6*x1*y2*y3 + A5*y2*y4 + A6*y3*y4)/y1^3",
        ),
        (
            "C114",
            [0, 0, 3],
            "(1/2)*(A5^2*y2^2 + 2*A5*A6*y2*y3 + A6^2*y3^2)/y1^3",
        ),
        (
            "C122",
            [0, 1, 1],
            "-(1/2)*A5*(3*A5*x1*y2 + 2*A6*x1*y3 + A5*y4)/y1^2",
        ),
        (
            "C123",
            [0, 1, 2],
            "-(1/2)*A6*(2*A5*x1*y2 + A6*x1*y3 + A5*y4)/y1^2",
        ),
        ("C124", [0, 1, 3], "-(1/2)*A5*(A5*y2 + A6*y3)/y1^2"),
        ("C133", [0, 2, 2], "-(1/2)*A6^2*(x1*y2 + y4)/y1^2"),
        ("C134", [0, 2, 3], "-(1/2)*A6*(A5*y2 + A6*y3)/y1^2"),
        ("C222", [1, 1, 1], "(3/2)*A5^2*x1/y1"),
        ("C223", [1, 1, 2], "A5*A6*x1/y1"),
        ("C224", [1, 1, 3], "(1/2)*A5^2/y1"),
        ("C233", [1, 2, 2], "(1/2)*A6^2*x1/y1"),
        ("C234", [1, 2, 3], "(1/2)*A5*A6/y1"),
        ("C334", [2, 2, 3], "(1/2)*A6^2/y1"),
    ] {
        art.c_components.push((name.into(), idx, expr(&spec, src)));
    }
    art.sc_fields
        .push(field(&spec, "0; 1; -A5/A6; -x1", FieldKind::Generic));
    art.notes
        .push("SC family B = (0, f, −(A5/A6) f, −f x1); most Cartan components alive".into());
    Ok((spec, art))
}

/// Parameters of the 4-D general form. `f2` and `f3` are shape expressions
/// over the reserved parameter `u` (f3 may also reference x1..x4); the
/// remaining entries are functions of x only.
#[derive(Debug, Clone)]
pub struct GeneralForm4DParams {
    pub a: [f64; 7],
    pub f1: String,
    pub f2: String,
    pub f3: String,
    pub f4: String,
    pub f5: String,
    pub f6: String,
    pub f7: String,
    pub f8: String,
}

impl Default for GeneralForm4DParams {
    fn default() -> Self {
        GeneralForm4DParams {
            a: [0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0],
            f1: "x1".into(),
            f2: "u^2".into(),
            f3: "u".into(),
            f4: "0".into(),
            f5: "1".into(),
            f6: "0".into(),
            f7: "1".into(),
            f8: "1".into(),
        }
    }
}

/// Build the 4-D general-form energy
/// E = y1 (F1 y2 + y4) F2(arg) + F3(x, u3) y1² − F4 (A5 y2² + A6 y2 y3)
///     + F5 y1² + F6 y1 y2 + F7 y2² + F8 y4²
/// with arg = ((A1 x1 + A2 x2 + A3 x3 + A4 x4 + A7) y1 + A5 y2 + A6 y3)/y1
/// and u3 = −(A5 y2 + A6 y3)/y1, together with the expected SC family
/// (0, f, −A5/A6 f, −f F1).
pub fn general_form_4d(params: &GeneralForm4DParams) -> Result<(MetricSpec, ExpectedArtifacts)> {
    let [a1, a2, a3, a4, a5, a6, a7] = params.a;
    if a6 == 0.0 && a5 != 0.0 {
        return Err(Error::InvalidOverride(
            "general_form_4d: A6 = 0 with A5 ≠ 0 leaves the SC family undefined".into(),
        ));
    }
    // shapes parse in a context with the reserved parameter u
    let shape_ctx = ParseContext::new(4, &["u".to_string()]);
    let plain_ctx = ParseContext::new(4, &[]);
    let parse_shape = |src: &str| crate::expr::parse_expr_str(src, &shape_ctx);
    let parse_plain = |src: &str| crate::expr::parse_expr_str(src, &plain_ctx);

    let f1 = parse_plain(&params.f1)?;
    let f2 = parse_shape(&params.f2)?;
    let f3 = parse_shape(&params.f3)?;
    let f4 = parse_plain(&params.f4)?;
    let f5 = parse_plain(&params.f5)?;
    let f6 = parse_plain(&params.f6)?;
    let f7 = parse_plain(&params.f7)?;
    let f8 = parse_plain(&params.f8)?;

    let c = ScalarExpr::Const;
    let y = |i: usize| ScalarExpr::Var(Var::y(i));
    let x = |i: usize| ScalarExpr::Var(Var::x(i));
    let lin = add(
        add(
            add(mul(c(a1), x(0)), mul(c(a2), x(1))),
            add(mul(c(a3), x(2)), mul(c(a4), x(3))),
        ),
        c(a7),
    );
    let a5y2_a6y3 = add(mul(c(a5), y(1)), mul(c(a6), y(2)));
    let arg = crate::expr::div(
        add(mul(lin, y(0)), a5y2_a6y3.clone()),
        y(0),
    );
    let u3 = crate::expr::neg(crate::expr::div(a5y2_a6y3.clone(), y(0)));

    let f2_applied = f2.substitute_param(0, &arg);
    let f3_applied = f3.substitute_param(0, &u3);

    let term1 = mul(
        mul(y(0), add(mul(f1.clone(), y(1)), y(3))),
        f2_applied,
    );
    let term2 = mul(f3_applied, powe(y(0), Exponent::int(2)));
    let term3 = mul(
        f4,
        add(
            mul(c(a5), powe(y(1), Exponent::int(2))),
            mul(c(a6), mul(y(1), y(2))),
        ),
    );
    let quad = add(
        add(
            mul(f5, powe(y(0), Exponent::int(2))),
            mul(f6, mul(y(0), y(1))),
        ),
        add(
            mul(f7, powe(y(1), Exponent::int(2))),
            mul(f8, powe(y(3), Exponent::int(2))),
        ),
    );
    let energy = add(crate::expr::sub(add(term1, term2), term3), quad);

    let spec = MetricSpec::new(
        4,
        energy,
        Vec::new(),
        Some(crate::expr::parse_bool_expr("y1 != 0", &plain_ctx)?),
        "general_form_4d".into(),
    )?;

    let mut art = ExpectedArtifacts::default();
    if a6 != 0.0 {
        let ratio = -a5 / a6;
        let comps = vec![
            ScalarExpr::Const(0.0),
            ScalarExpr::Const(1.0),
            ScalarExpr::Const(ratio),
            crate::expr::neg(f1),
        ];
        art.sc_fields
            .push(VectorFieldSpec::new(&spec, comps, FieldKind::Generic)?);
    }
    art.notes
        .push("solutions of B^h C_hij = 0 follow the printed family (0, f, −A5/A6 f, −f F1)".into());
    Ok((spec, art))
}

/// Lift an (n−1)-dimensional squared line element H to
/// E = (y_n)² + (x_n)² H(x^α, y^α), attaching the (0,…,0,±x_n) concurrent
/// candidates.
pub fn tachibana_lift(h_spec: &MetricSpec) -> Result<(MetricSpec, ExpectedArtifacts)> {
    let n = h_spec.dim + 1;
    if n > 8 {
        return Err(Error::Spec("tachibana_lift: dimension too large".into()));
    }
    let yn = ScalarExpr::Var(Var::y(n - 1));
    let xn = ScalarExpr::Var(Var::x(n - 1));
    let energy = add(
        powe(yn, Exponent::int(2)),
        mul(powe(xn, Exponent::int(2)), h_spec.energy.clone()),
    );
    let label = if h_spec.label.is_empty() {
        "tachibana_lift".to_string()
    } else {
        format!("tachibana_lift({})", h_spec.label)
    };
    let spec = MetricSpec::new(
        n,
        energy,
        h_spec.params.clone(),
        h_spec.domain.clone(),
        label,
    )?;
    let mut art = ExpectedArtifacts::default();
    let mut plus: Vec<String> = vec!["0".into(); n];
    plus[n - 1] = format!("x{}", n);
    let mut minus: Vec<String> = vec!["0".into(); n];
    minus[n - 1] = format!("-x{}", n);
    art.concurrent_candidates
        .push(field(&spec, &plus.join("; "), FieldKind::Concurrent));
    art.concurrent_candidates
        .push(field(&spec, &minus.join("; "), FieldKind::Concurrent));
    let mut sc: Vec<String> = vec!["0".into(); n];
    sc[n - 1] = format!("x{}", n);
    art.sc_fields.push(field(&spec, &sc.join("; "), FieldKind::Generic));
    art.notes
        .push("lift of a squared line element; the concurrent field sign depends on the spray convention".into());
    Ok((spec, art))
}

/// One named pass/fail entry in a verification report.
#[derive(Debug, Clone)]
pub struct CheckEntry {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Regression result for one catalog metric.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub name: String,
    pub label: String,
    pub params: Vec<(String, f64)>,
    pub seed: u64,
    pub grid_points: usize,
    pub tol: f64,
    /// Per-component max deviation across the grid (relative with an
    /// absolute floor at 1e−9·scale).
    pub component_checks: Vec<CheckEntry>,
    /// Exact nonzero Cartan set check, when the catalog pins one.
    pub set_check: Option<CheckEntry>,
    pub minor_checks: Vec<CheckEntry>,
    /// SC / F / CC field residual checks (all must pass).
    pub field_checks: Vec<CheckEntry>,
    /// Concurrent candidates tried per sign; informational. The gate is the
    /// `concurrent_sign_resolved` entry under misc_checks.
    pub sign_candidates: Vec<CheckEntry>,
    /// Extra per-example evidence (C_i ≈ 0, obstruction ≠ 0, …).
    pub misc_checks: Vec<CheckEntry>,
    pub passed: bool,
}

impl VerificationReport {
    fn push_pass(&mut self) {
        self.passed = self.component_checks.iter().all(|c| c.pass)
            && self.set_check.as_ref().map_or(true, |c| c.pass)
            && self.minor_checks.iter().all(|c| c.pass)
            && self.field_checks.iter().all(|c| c.pass)
            && self.misc_checks.iter().all(|c| c.pass);
    }
}

const VERIFY_SEED: u64 = 0;
const VERIFY_GRID: usize = 50;

/// Evaluate computed tensors against every closed form the catalog carries
/// for `name`, on a deterministic in-domain grid, and run the attached
/// field checks.
pub fn verify_example(
    name: &str,
    overrides: &[(String, f64)],
    tol: f64,
) -> Result<VerificationReport> {
    let (spec, art) = builtin(name, overrides)?;
    let engine = MetricEngine::new(spec);
    let sampler = Sampler::new(VERIFY_SEED, VERIFY_GRID);
    let grid = sampler.sample(&engine)?;

    let mut report = VerificationReport {
        name: name.to_string(),
        label: engine.spec().label.clone(),
        params: engine.spec().params.clone(),
        seed: VERIFY_SEED,
        grid_points: grid.len(),
        tol,
        component_checks: Vec::new(),
        set_check: None,
        minor_checks: Vec::new(),
        field_checks: Vec::new(),
        sign_candidates: Vec::new(),
        misc_checks: Vec::new(),
        passed: false,
    };

    // homogeneity of the energy statement is checked numerically, not assumed
    crate::metric::check_homogeneity(engine.spec(), &grid, 1e-9)?;

    // magnitude floors from the expected values across the grid
    let mut bundles = Vec::with_capacity(grid.len());
    for p in &grid {
        bundles.push(engine.fundamental_bundle(p)?);
    }

    // deviation relative to the largest magnitude the component reaches on
    // the grid, floored at 1e−6 so identically-zero components compare
    // absolutely
    let deviation = |worst: f64, scale: f64| worst / scale.max(1e-6);

    for (label, idx, formula) in &art.g_components {
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for (p, fb) in grid.iter().zip(&bundles) {
            let want = p.eval(formula)?;
            let got = fb.g.get(idx);
            scale = scale.max(want.abs()).max(got.abs());
            worst = worst.max((want - got).abs());
        }
        let dev = deviation(worst, scale);
        report.component_checks.push(CheckEntry {
            name: label.clone(),
            value: dev,
            tol,
            pass: dev <= tol,
        });
    }
    for (label, idx, formula) in &art.c_components {
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for (p, fb) in grid.iter().zip(&bundles) {
            let want = p.eval(formula)?;
            let got = fb.cartan.get(&[idx[0], idx[1], idx[2]]);
            scale = scale.max(want.abs()).max(got.abs());
            worst = worst.max((want - got).abs());
        }
        let dev = deviation(worst, scale);
        report.component_checks.push(CheckEntry {
            name: label.clone(),
            value: dev,
            tol,
            pass: dev <= tol,
        });
    }

    if let Some(exact) = &art.nonzero_c_exact {
        // members must rise above 1e−9 somewhere; non-members must stay
        // below 1e−9·scale everywhere
        let n = engine.dim();
        let mut worst_spurious = 0.0_f64;
        let mut weakest_member = f64::INFINITY;
        let mut scale = 0.0_f64;
        for fb in &bundles {
            scale = scale.max(fb.g.max_abs());
        }
        for key in crate::tensor::sorted_multi_indices(n, 3) {
            let triple = [key[0], key[1], key[2]];
            let mut max_here = 0.0_f64;
            for fb in &bundles {
                max_here = max_here.max(fb.cartan.get(&triple).abs());
            }
            if exact.contains(&triple) {
                weakest_member = weakest_member.min(max_here);
            } else {
                worst_spurious = worst_spurious.max(max_here);
            }
        }
        let members_ok = exact.is_empty() || weakest_member > 1e-9;
        let spurious_ok = worst_spurious <= 1e-9 * scale.max(1.0);
        report.set_check = Some(CheckEntry {
            name: "nonzero_cartan_set".into(),
            value: worst_spurious,
            tol: 1e-9,
            pass: members_ok && spurious_ok,
        });
    }

    for (k, formula) in art.minors.iter().enumerate() {
        let mut worst = 0.0_f64;
        for p in &grid {
            let want = p.eval(formula)?;
            let st = engine.domain_probe(p);
            let got = st.leading_minors[k];
            let dev = (want - got).abs() / want.abs().max(got.abs()).max(1e-9);
            worst = worst.max(dev);
        }
        report.minor_checks.push(CheckEntry {
            name: format!("minor{}", k + 1),
            value: worst,
            tol,
            pass: worst <= tol,
        });
    }

    // field checks
    for (i, f) in art.sc_fields.iter().enumerate() {
        let rep = check_condition(&engine, f, Condition::SC, &grid, 1e-8)?;
        report.field_checks.push(CheckEntry {
            name: format!("sc_field_{}", i + 1),
            value: rep.residual_scaled,
            tol: 1e-8,
            pass: rep.pass,
        });
    }
    if !art.concurrent_candidates.is_empty() {
        // candidates come in both signs; exactly one must satisfy the full
        // C-condition under the fixed spray convention
        let mut best: Option<(usize, f64)> = None;
        for (i, f) in art.concurrent_candidates.iter().enumerate() {
            let rep = check_condition(&engine, f, Condition::C, &grid, 1e-6)?;
            report.sign_candidates.push(CheckEntry {
                name: format!("concurrent_candidate_{}", i + 1),
                value: rep.residual_scaled,
                tol: 1e-6,
                pass: rep.pass,
            });
            if rep.pass && best.as_ref().map_or(true, |(_, r)| rep.residual_scaled < *r) {
                best = Some((i, rep.residual_scaled));
            }
        }
        let pass = best.is_some();
        report.misc_checks.push(CheckEntry {
            name: "concurrent_sign_resolved".into(),
            value: best.map(|(i, _)| i as f64).unwrap_or(-1.0),
            tol: 0.0,
            pass,
        });
    }
    for (i, f) in art.f_potentials.iter().enumerate() {
        let grad_field = gradient_field(&engine, f)?;
        let rep = check_condition(&engine, &grad_field, Condition::F, &grid, 1e-7)?;
        report.field_checks.push(CheckEntry {
            name: format!("f_condition_{}", i + 1),
            value: rep.residual_scaled,
            tol: 1e-7,
            pass: rep.pass,
        });
    }
    for (i, f) in art.cc_potentials.iter().enumerate() {
        let cc_field = conformal_field(&engine, f)?;
        let rep = check_condition(&engine, &cc_field, Condition::CC, &grid, 1e-7)?;
        report.field_checks.push(CheckEntry {
            name: format!("cc_condition_{}", i + 1),
            value: rep.residual_scaled,
            tol: 1e-7,
            pass: rep.pass,
        });
    }

    // per-example extra evidence
    match name {
        "product3d" => {
            let mut worst_ci = 0.0_f64;
            let mut max_c = 0.0_f64;
            for fb in &bundles {
                let cv = fb.c_vec()?;
                worst_ci = worst_ci.max(cv.max_abs());
                max_c = max_c.max(fb.cartan.max_abs());
            }
            report.misc_checks.push(CheckEntry {
                name: "c_vec_vanishes".into(),
                value: worst_ci,
                tol: 1e-10,
                pass: worst_ci < 1e-10,
            });
            report.misc_checks.push(CheckEntry {
                name: "cartan_alive".into(),
                value: max_c,
                tol: 0.01,
                pass: max_c > 0.01,
            });
            // generic directions violate the SC-condition
            let spec = engine.spec().clone();
            let generic = VectorFieldSpec::parse(&spec, "1; 0.7; -0.3", FieldKind::Generic)?;
            let rep = check_condition(&engine, &generic, Condition::SC, &grid, 1e-8)?;
            report.misc_checks.push(CheckEntry {
                name: "sc_obstruction_nonzero".into(),
                value: rep.residual_scaled,
                tol: 1e-3,
                pass: rep.residual_scaled > 1e-3,
            });
        }
        "ex5_1" => {
            // the positive-definite verdict flips as F8 crosses 1/4
            let flip = |f8: f64| -> Result<bool> {
                let (mut spec, _) = builtin("ex5_1", overrides)?;
                spec.set_param("F8", f8)?;
                let eng = MetricEngine::new(spec);
                let p = eng.point(vec![1.0, 1.0, 1.0, 1.0], vec![0.4, 0.3, 0.2, 0.6])?;
                Ok(eng.domain_probe(&p).positive_definite)
            };
            let above = flip(0.3)?;
            let below = flip(0.2)?;
            report.misc_checks.push(CheckEntry {
                name: "pd_flips_at_f8_quarter".into(),
                value: if above && !below { 1.0 } else { 0.0 },
                tol: 0.0,
                pass: above && !below,
            });
        }
        _ => {}
    }

    if art.expect_no_sc && engine.dim() >= 2 {
        // detector evidence: null space trivial at a few base points
        let mut max_dim = 0usize;
        let mut xs = Vec::new();
        for p in grid.iter().take(3) {
            xs.push(p.x.clone());
        }
        for x in &xs {
            let ys = Sampler::new(11, 12).sample_y_at(&engine, x, 12)?;
            let ns = sc_nullspace_at(&engine, x, &ys, 1e-8)?;
            if !ns.c_zero {
                max_dim = max_dim.max(ns.dimension());
            }
        }
        report.misc_checks.push(CheckEntry {
            name: "no_sc_direction".into(),
            value: max_dim as f64,
            tol: 0.0,
            pass: max_dim == 0,
        });
    }

    report.push_pass();
    Ok(report)
}

/// Wrap a potential f as the gradient field f_i (components ∂f/∂x^i).
pub fn gradient_field(engine: &MetricEngine, potential: &ScalarExpr) -> Result<VectorFieldSpec> {
    let n = engine.dim();
    let comps: Vec<ScalarExpr> = (0..n)
        .map(|i| crate::expr::differentiate(potential, Var::x(i)))
        .collect();
    VectorFieldSpec::new(
        engine.spec(),
        comps,
        FieldKind::Gradient {
            potential: potential.clone(),
        },
    )
}

/// Wrap a conformal potential σ as the covector field σ_h.
pub fn conformal_field(engine: &MetricEngine, potential: &ScalarExpr) -> Result<VectorFieldSpec> {
    let n = engine.dim();
    let comps: Vec<ScalarExpr> = (0..n)
        .map(|i| crate::expr::differentiate(potential, Var::x(i)))
        .collect();
    VectorFieldSpec::new(
        engine.spec(),
        comps,
        FieldKind::ConformalGradient {
            potential: potential.clone(),
        },
    )
}

//! Semi-concurrent vector field detection and the four field conditions.
//!
//! The SC-condition B^h C_hij = 0 is linear in B, so at a fixed base point
//! the admissible directions form the null space of the matrix that stacks
//! the maps B ↦ (B^h C_hij(x, y_s))_{i≤j, s} over tangent samples y_s. The
//! null space is extracted by SVD with singular values cut at tol·σ_max.
//!
//! Conditions checked for a supplied field:
//!   SC:  max |B^h C_hij|
//!   C :  max(|B^h C_hij|, |B^i_{|j} + δ^i_j|)
//!   F :  max |f_i ∂̇_k g^{ij}|  with  ∂̇_k g^{ij} = −2 g^{ia} g^{jb} C_abk
//!   CC:  max |σ_h C^h_ij|

pub use crate::metric::{FieldKind, VectorFieldSpec};

use nalgebra::DMatrix;

use crate::classify::Sampler;
use crate::error::{Error, Result};
use crate::expr::{differentiate, ScalarExpr, Var};
use crate::fundamental::MetricEngine;
use crate::metric::Bindings;

/// Null space of the SC system at one base point.
#[derive(Debug, Clone)]
pub struct NullspaceAtX {
    pub x: Vec<f64>,
    /// Orthonormal basis vectors of the null space.
    pub basis: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// All Cartan components vanished at the samples; the null space is the
    /// whole tangent space by convention.
    pub c_zero: bool,
    pub rows: usize,
}

impl NullspaceAtX {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    fn basis_matrix(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, self.basis.len());
        for (c, v) in self.basis.iter().enumerate() {
            for (r, val) in v.iter().enumerate() {
                m[(r, c)] = *val;
            }
        }
        m
    }

    /// Principal angle between span{v} and the null space (0 when v lies
    /// inside it). Returns π/2 for an empty basis.
    pub fn containment_angle(&self, v: &[f64]) -> f64 {
        if self.basis.is_empty() {
            return std::f64::consts::FRAC_PI_2;
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return std::f64::consts::FRAC_PI_2;
        }
        let mut proj_sq = 0.0;
        for b in &self.basis {
            let dot: f64 = b.iter().zip(v).map(|(a, c)| a * c / norm).sum();
            proj_sq += dot * dot;
        }
        proj_sq.sqrt().clamp(0.0, 1.0).acos()
    }
}

/// Solve the SC system at `x` over the given tangent samples.
pub fn sc_nullspace_at(
    engine: &MetricEngine,
    x: &[f64],
    y_samples: &[Bindings],
    tol: f64,
) -> Result<NullspaceAtX> {
    let n = engine.dim();
    let needed = n * (n + 1) / 2;
    let valid: Vec<&Bindings> = y_samples
        .iter()
        .filter(|p| engine.in_domain(p))
        .collect();
    if valid.len() < needed {
        return Err(Error::NoSamples(format!(
            "{} in-domain tangent samples at x={:?}, need at least {}",
            valid.len(),
            x,
            needed
        )));
    }
    let rows = valid.len() * needed;
    let mut mat = DMatrix::zeros(rows, n);
    let mut g_scale = 0.0_f64;
    let mut row = 0;
    for p in &valid {
        let fb = engine.fundamental_bundle(p)?;
        g_scale = g_scale.max(fb.g.max_abs());
        for i in 0..n {
            for j in i..n {
                for h in 0..n {
                    mat[(row, h)] = fb.cartan.get(&[h, i, j]);
                }
                row += 1;
            }
        }
    }
    let c_scale = mat.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if c_scale <= 1e-12 * g_scale.max(1.0) {
        // Cartan tensor vanishes at the samples: every direction solves the
        // system
        let basis = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect();
        return Ok(NullspaceAtX {
            x: x.to_vec(),
            basis,
            singular_values: vec![0.0; n],
            c_zero: true,
            rows,
        });
    }
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigmas: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = sigmas.first().copied().unwrap_or(0.0);
    let rank = sigmas.iter().filter(|s| **s > tol * sigma_max).count();
    let basis: Vec<Vec<f64>> = (rank..v_t.nrows())
        .map(|r| v_t.row(r).iter().copied().collect())
        .collect();
    Ok(NullspaceAtX {
        x: x.to_vec(),
        basis,
        singular_values: sigmas,
        c_zero: false,
        rows,
    })
}

/// Options for [`sc_detect`].
#[derive(Debug, Clone)]
pub struct SCDetectOptions {
    /// Singular-value cut for the null space, relative to σ_max.
    pub rank_tol: f64,
    /// Principal-angle threshold for cross-x subspace continuity (radians).
    pub consistency_angle: f64,
    /// Containment-angle threshold for matching a candidate closed form.
    pub candidate_angle: f64,
    pub seed: u64,
}

impl Default for SCDetectOptions {
    fn default() -> Self {
        SCDetectOptions {
            rank_tol: 1e-8,
            consistency_angle: 1e-3,
            candidate_angle: 1e-5,
            seed: 0,
        }
    }
}

/// Evidence about the candidate covector being a gradient (curl test on
/// B_i = g_ij B^j, which is y-independent for an SC field).
#[derive(Debug, Clone)]
pub struct GradientDiagnostic {
    /// max over samples of |∂_j B_i − ∂_i B_j| (central differences).
    pub curl_residual: f64,
    /// max deviation of B_i across tangent samples at one x.
    pub y_dependence: f64,
}

/// Per-condition residual report.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub condition: Condition,
    pub residual_raw: f64,
    pub scale: f64,
    pub residual_scaled: f64,
    pub n_samples: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Independence quantities of the Lemma: B₀ = B_i y^i and B²F² − B₀²,
/// plus det(B^i_{|j}).
#[derive(Debug, Clone)]
pub struct IndependenceReport {
    pub b0: Vec<f64>,
    pub bf2_minus_b02: Vec<f64>,
    pub det_h_cov: Vec<f64>,
    pub b0_flagged: bool,
    pub bf2_flagged: bool,
    pub det_near_singular: bool,
}

/// Full detection report across base points.
#[derive(Debug, Clone)]
pub struct SCFieldReport {
    pub nullspaces: Vec<NullspaceAtX>,
    /// Largest d such that a d-dimensional subspace persists across
    /// successive base points within the consistency angle.
    pub consistent_dimension: usize,
    /// Candidate from the supplied closed forms that lies in every null
    /// space, if any.
    pub candidate_field: Option<VectorFieldSpec>,
    pub candidate_max_angle: Option<f64>,
    pub sc_residual: Option<ConditionReport>,
    pub invariants: Option<IndependenceReport>,
    pub gradient_diag: Option<GradientDiagnostic>,
    pub c_zero_everywhere: bool,
}

/// The four field conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    SC,
    C,
    F,
    CC,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::SC => "sc",
            Condition::C => "c",
            Condition::F => "f",
            Condition::CC => "cc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(Condition::SC),
            "c" => Ok(Condition::C),
            "f" => Ok(Condition::F),
            "cc" => Ok(Condition::CC),
            other => Err(Error::Usage(format!(
                "unknown condition `{}` (expected sc|c|f|cc)",
                other
            ))),
        }
    }
}

/// Check one condition for a supplied field over in-domain samples.
pub fn check_condition(
    engine: &MetricEngine,
    field: &VectorFieldSpec,
    condition: Condition,
    samples: &[Bindings],
    tol: f64,
) -> Result<ConditionReport> {
    let n = engine.dim();
    match condition {
        Condition::F => {
            if !matches!(field.kind, FieldKind::Gradient { .. }) {
                return Err(Error::IncompatibleFieldKind {
                    kind: field.kind.name().into(),
                    condition: "F".into(),
                });
            }
        }
        Condition::CC => {
            if !matches!(field.kind, FieldKind::ConformalGradient { .. }) {
                return Err(Error::IncompatibleFieldKind {
                    kind: field.kind.name().into(),
                    condition: "CC".into(),
                });
            }
        }
        Condition::SC | Condition::C => {}
    }

    let mut raw = 0.0_f64;
    let mut scale = 1.0_f64;
    let mut used = 0usize;
    for p in samples {
        if !engine.in_domain(p) {
            continue;
        }
        used += 1;
        match condition {
            Condition::SC => {
                let fb = engine.fundamental_bundle(p)?;
                let b = field.eval(p)?;
                let bmax = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                scale = scale.max(bmax * fb.cartan.max_abs());
                for i in 0..n {
                    for j in 0..n {
                        let c: f64 = (0..n).map(|h| b[h] * fb.cartan.get(&[h, i, j])).sum();
                        raw = raw.max(c.abs());
                    }
                }
            }
            Condition::C => {
                let core = engine.connection_core(p)?;
                let fb = &core.fundamental;
                let b = field.eval(p)?;
                let bmax = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                scale = scale
                    .max(bmax * fb.cartan.max_abs())
                    .max(bmax * core.christoffel.max_abs());
                for i in 0..n {
                    for j in 0..n {
                        let c: f64 = (0..n).map(|h| b[h] * fb.cartan.get(&[h, i, j])).sum();
                        raw = raw.max(c.abs());
                    }
                }
                let d = engine.field_h_deriv_with(&core, field, p)?;
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        raw = raw.max((d.get(&[i, j]) + delta).abs());
                    }
                }
            }
            Condition::F => {
                let fb = engine.fundamental_bundle(p)?;
                let w = fb.g_inv()?;
                let fi = gradient_components(engine, field, p)?;
                let fmax = fi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                scale = scale.max(fmax * fb.cartan.max_abs() * w.max_abs() * w.max_abs());
                // f_i ∂̇_k g^{ij} with ∂̇_k g^{ij} = −2 g^{ia} g^{jb} C_abk
                for j in 0..n {
                    for k in 0..n {
                        let mut acc = 0.0;
                        for i in 0..n {
                            let mut d = 0.0;
                            for a in 0..n {
                                for bb in 0..n {
                                    d += w.get(&[i, a]) * w.get(&[j, bb]) * fb.cartan.get(&[a, bb, k]);
                                }
                            }
                            acc += fi[i] * (-2.0 * d);
                        }
                        raw = raw.max(acc.abs());
                    }
                }
            }
            Condition::CC => {
                let fb = engine.fundamental_bundle(p)?;
                let c_mixed = fb.c_mixed()?;
                let sh = gradient_components(engine, field, p)?;
                let smax = sh.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                scale = scale.max(smax * c_mixed.max_abs());
                for i in 0..n {
                    for j in 0..n {
                        let acc: f64 = (0..n).map(|h| sh[h] * c_mixed.get(&[h, i, j])).sum();
                        raw = raw.max(acc.abs());
                    }
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::NoSamples("no in-domain samples for the check".into()));
    }
    let residual_scaled = raw / scale;
    Ok(ConditionReport {
        condition,
        residual_raw: raw,
        scale,
        residual_scaled,
        n_samples: used,
        tol,
        pass: residual_scaled <= tol,
    })
}

/// Gradient components f_i = ∂f/∂x^i of the field's potential.
fn gradient_components(
    engine: &MetricEngine,
    field: &VectorFieldSpec,
    p: &Bindings,
) -> Result<Vec<f64>> {
    let potential = match &field.kind {
        FieldKind::Gradient { potential } | FieldKind::ConformalGradient { potential } => potential,
        _ => {
            return Err(Error::IncompatibleFieldKind {
                kind: field.kind.name().into(),
                condition: "gradient".into(),
            })
        }
    };
    (0..engine.dim())
        .map(|i| p.eval(&differentiate(potential, Var::x(i))))
        .collect()
}

/// Build the gradient field b^j = f_i g^{ij} for an F-condition potential,
/// evaluated against the metric at `p` (y-independent for SC metrics).
pub fn raise_gradient(
    engine: &MetricEngine,
    potential: &ScalarExpr,
    p: &Bindings,
) -> Result<Vec<f64>> {
    let n = engine.dim();
    let fb = engine.fundamental_bundle(p)?;
    let w = fb.g_inv()?;
    let fi: Vec<f64> = (0..n)
        .map(|i| p.eval(&differentiate(potential, Var::x(i))))
        .collect::<Result<_>>()?;
    Ok((0..n)
        .map(|j| (0..n).map(|i| fi[i] * w.get(&[i, j])).sum())
        .collect())
}

/// Independence quantities at the samples.
pub fn independence_invariants(
    engine: &MetricEngine,
    field: &VectorFieldSpec,
    samples: &[Bindings],
    tol: f64,
) -> Result<IndependenceReport> {
    let n = engine.dim();
    let mut b0_vals = Vec::new();
    let mut bf2_vals = Vec::new();
    let mut det_vals = Vec::new();
    let mut b0_flagged = false;
    let mut bf2_flagged = false;
    let mut det_near_singular = false;
    for p in samples {
        if !engine.in_domain(p) {
            continue;
        }
        let fb = engine.fundamental_bundle(p)?;
        let b = field.eval(p)?;
        // lower the index: B_i = g_ij B^j
        let b_low: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| fb.g.get(&[i, j]) * b[j]).sum())
            .collect();
        let b0: f64 = b_low.iter().zip(&p.y).map(|(a, c)| a * c).sum();
        let b_sq: f64 = b_low.iter().zip(&b).map(|(a, c)| a * c).sum();
        let f2 = fb.f * fb.f;
        let crit = b_sq * f2 - b0 * b0;
        let scale = (fb.g.max_abs() * b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).powi(2))
            .max(1e-30);
        if b0.abs() <= tol * scale.sqrt() * fb.f {
            b0_flagged = true;
        }
        if crit.abs() <= tol * scale * f2 {
            bf2_flagged = true;
        }
        b0_vals.push(b0);
        bf2_vals.push(crit);
        let d = engine.field_h_deriv(field, p)?;
        let m = d.to_matrix()?;
        let det = m.determinant();
        if det.abs() <= 1e-8 {
            det_near_singular = true;
        }
        det_vals.push(det);
    }
    if b0_vals.is_empty() {
        return Err(Error::NoSamples("no in-domain samples".into()));
    }
    Ok(IndependenceReport {
        b0: b0_vals,
        bf2_minus_b02: bf2_vals,
        det_h_cov: det_vals,
        b0_flagged,
        bf2_flagged,
        det_near_singular,
    })
}

/// Principal angle of the d-th pair between two orthonormal bases.
fn principal_angle_d(a: &DMatrix<f64>, b: &DMatrix<f64>, d: usize) -> f64 {
    let prod = a.transpose() * b;
    let svd = prod.svd(false, false);
    let mut sig: Vec<f64> = svd.singular_values.iter().copied().collect();
    sig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    match sig.get(d - 1) {
        Some(s) => s.clamp(0.0, 1.0).acos(),
        None => std::f64::consts::FRAC_PI_2,
    }
}

/// Detect semi-concurrent directions across base points. `candidates`
/// supplies closed forms (typically from the catalog) to match against the
/// numerically recovered null spaces.
pub fn sc_detect(
    engine: &MetricEngine,
    x_samples: &[Vec<f64>],
    y_per_x: usize,
    opts: &SCDetectOptions,
    candidates: &[VectorFieldSpec],
) -> Result<SCFieldReport> {
    let n = engine.dim();
    if x_samples.is_empty() {
        return Err(Error::NoSamples("no base points supplied".into()));
    }
    let mut nullspaces = Vec::with_capacity(x_samples.len());
    for (i, x) in x_samples.iter().enumerate() {
        let sampler = Sampler::new(opts.seed.wrapping_add(i as u64), y_per_x);
        let ys = sampler.sample_y_at(engine, x, y_per_x)?;
        nullspaces.push(sc_nullspace_at(engine, x, &ys, opts.rank_tol)?);
    }
    let c_zero_everywhere = nullspaces.iter().all(|ns| ns.c_zero);

    // cross-x consistency by successive principal angles
    let min_dim = nullspaces.iter().map(|ns| ns.dimension()).min().unwrap_or(0);
    let mut consistent_dimension = 0;
    'outer: for d in (1..=min_dim).rev() {
        for pair in nullspaces.windows(2) {
            let a = pair[0].basis_matrix(n);
            let b = pair[1].basis_matrix(n);
            if principal_angle_d(&a, &b, d) > opts.consistency_angle {
                continue 'outer;
            }
        }
        consistent_dimension = d;
        break;
    }

    // candidate matching: the evaluated closed form must lie inside every
    // null space
    let mut candidate_field = None;
    let mut candidate_max_angle = None;
    for cand in candidates {
        let mut worst = 0.0_f64;
        let mut ok = true;
        for ns in &nullspaces {
            let p = engine.point(ns.x.clone(), vec![0.0; n])?;
            let vals = cand.eval(&p)?;
            let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                ok = false;
                break;
            }
            let angle = ns.containment_angle(&vals);
            worst = worst.max(angle);
            if angle > opts.candidate_angle {
                ok = false;
                break;
            }
        }
        if ok {
            candidate_field = Some(cand.clone());
            candidate_max_angle = Some(worst);
            break;
        }
    }

    // residuals and invariants for the matched candidate
    let (sc_residual, invariants, gradient_diag) = match &candidate_field {
        Some(cand) => {
            let mut samples = Vec::new();
            for (i, x) in x_samples.iter().enumerate() {
                let sampler = Sampler::new(opts.seed.wrapping_add(1000 + i as u64), 3);
                samples.extend(sampler.sample_y_at(engine, x, 3)?);
            }
            let sc = check_condition(engine, cand, Condition::SC, &samples, opts.rank_tol)?;
            let inv = independence_invariants(engine, cand, &samples, 1e-10)?;
            let diag = gradient_diagnostic(engine, cand, &samples)?;
            (Some(sc), Some(inv), Some(diag))
        }
        None => (None, None, None),
    };

    Ok(SCFieldReport {
        nullspaces,
        consistent_dimension,
        candidate_field,
        candidate_max_angle,
        sc_residual,
        invariants,
        gradient_diag,
        c_zero_everywhere,
    })
}

/// Numeric curl test on the lowered field B_i = g_ij B^j. For an SC field
/// B_i is y-independent; it is a gradient iff the curl vanishes. Evidence
/// only, no verdict.
fn gradient_diagnostic(
    engine: &MetricEngine,
    field: &VectorFieldSpec,
    samples: &[Bindings],
) -> Result<GradientDiagnostic> {
    let n = engine.dim();
    let lower = |p: &Bindings| -> Result<Vec<f64>> {
        let fb = engine.fundamental_bundle(p)?;
        let b = field.eval(p)?;
        Ok((0..n)
            .map(|i| (0..n).map(|j| fb.g.get(&[i, j]) * b[j]).sum())
            .collect())
    };
    // y-dependence: spread of B_i over the samples sharing the first x
    let mut y_dependence = 0.0_f64;
    let mut reference: Option<(Vec<f64>, Vec<f64>)> = None;
    for p in samples {
        if !engine.in_domain(p) {
            continue;
        }
        let low = lower(p)?;
        match &reference {
            None => reference = Some((p.x.clone(), low)),
            Some((x0, low0)) if *x0 == p.x => {
                for (a, b) in low0.iter().zip(&low) {
                    y_dependence = y_dependence.max((a - b).abs());
                }
            }
            _ => {}
        }
    }
    // curl: central differences of B_i(x) at the reference x, evaluated at a
    // fixed in-domain y
    let mut curl_residual = 0.0_f64;
    if let Some(p0) = samples.iter().find(|p| engine.in_domain(p)) {
        let h = 1e-5;
        let mut grad = vec![vec![0.0; n]; n]; // grad[i][j] = ∂_j B_i
        for j in 0..n {
            let mut xp = p0.clone();
            xp.x[j] += h;
            let mut xm = p0.clone();
            xm.x[j] -= h;
            if !(engine.in_domain(&xp) && engine.in_domain(&xm)) {
                continue;
            }
            let (bp, bm) = (lower(&xp)?, lower(&xm)?);
            for i in 0..n {
                grad[i][j] = (bp[i] - bm[i]) / (2.0 * h);
            }
        }
        for i in 0..n {
            for j in 0..n {
                curl_residual = curl_residual.max((grad[i][j] - grad[j][i]).abs());
            }
        }
    }
    Ok(GradientDiagnostic {
        curl_residual,
        y_dependence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::parse_metric;

    fn engine(src: &str) -> MetricEngine {
        MetricEngine::new(parse_metric(src).unwrap())
    }

    fn conic_lift() -> MetricEngine {
        engine(
            "dim=3\nparam eps=0.5\nenergy=y3^2 + x3^2*(sqrt(y1^2+x1^2*y2^2)+eps*y2)^2\ndomain=y1^2+y2^2 > 0",
        )
    }

    fn ex5_2() -> MetricEngine {
        engine(
            "dim=4\nparam A6=2\nparam F5=1\nparam F6=0\nparam F7=1\nparam F8=1\n\
             energy=A6*y3*y4 + A6^4*y3^4/y1^2 + F5*y1^2 + F6*y1*y2 + F7*y2^2 + F8*y4^2\n\
             domain=y1 != 0",
        )
    }

    fn ys(engine: &MetricEngine, x: &[f64], count: usize, seed: u64) -> Vec<Bindings> {
        Sampler::new(seed, count).sample_y_at(engine, x, count).unwrap()
    }

    #[test]
    fn euclidean_nullspace_is_full_space() {
        let eng = engine("dim=3\nenergy=y1^2+y2^2+y3^2");
        let x = vec![0.5, -0.5, 1.0];
        let samples = ys(&eng, &x, 8, 0);
        let ns = sc_nullspace_at(&eng, &x, &samples, 1e-8).unwrap();
        assert!(ns.c_zero);
        assert_eq!(ns.dimension(), 3);
    }

    #[test]
    fn too_few_samples_rejected() {
        let eng = engine("dim=3\nenergy=y1^2+y2^2+y3^2");
        let x = vec![0.5, -0.5, 1.0];
        let samples = ys(&eng, &x, 3, 0);
        assert!(matches!(
            sc_nullspace_at(&eng, &x, &samples, 1e-8),
            Err(Error::NoSamples(_))
        ));
    }

    #[test]
    fn conic_lift_nullspace_is_e3() {
        let eng = conic_lift();
        let x = vec![1.0, 0.4, 1.5];
        let samples = ys(&eng, &x, 12, 1);
        let ns = sc_nullspace_at(&eng, &x, &samples, 1e-8).unwrap();
        assert!(!ns.c_zero);
        assert_eq!(ns.dimension(), 1);
        let angle = ns.containment_angle(&[0.0, 0.0, 1.0]);
        assert!(angle < 1e-10, "angle {angle}");
    }

    #[test]
    fn ex5_2_nullspace_contains_e2() {
        let eng = ex5_2();
        let x = vec![1.0, 1.0, 1.0, 1.0];
        let samples = ys(&eng, &x, 20, 2);
        let ns = sc_nullspace_at(&eng, &x, &samples, 1e-8).unwrap();
        // the Cartan tensor carries no index 2 or 4, so both e2 and e4 solve
        // the system; the printed family is the e2 direction
        assert_eq!(ns.dimension(), 2);
        assert!(ns.containment_angle(&[0.0, 1.0, 0.0, 0.0]) < 1e-9);
        assert!(ns.containment_angle(&[0.0, 0.0, 0.0, 1.0]) < 1e-9);
        assert!(ns.containment_angle(&[1.0, 0.0, 0.0, 0.0]) > 0.5);
    }

    #[test]
    fn ex5_3_nullspace_direction_at_unit_point() {
        let eng = engine(
            "dim=4\nparam A5=1\nparam A6=2\nparam F5=1\nparam F6=0\nparam F7=1\nparam F8=1\n\
             energy=(x1*y2 + y4)*(A5*y2 + A6*y3)^2/y1 - (A5*y2 + A6*y3)*y1 + F5*y1^2 + F6*y1*y2 + F7*y2^2 + F8*y4^2\n\
             domain=y1 != 0",
        );
        let x = vec![1.0, 1.0, 1.0, 1.0];
        let samples = ys(&eng, &x, 25, 6);
        let ns = sc_nullspace_at(&eng, &x, &samples, 1e-8).unwrap();
        // with A5=1, A6=2, F1(x)=x1 the family is (0, 1, -1/2, -1) at this x
        assert_eq!(ns.dimension(), 1);
        let angle = ns.containment_angle(&[0.0, 1.0, -0.5, -1.0]);
        assert!(angle < 1e-9, "angle {angle:e}");
    }

    #[test]
    fn product3d_nullspace_trivial_and_single_sample_spurious() {
        let eng = engine("dim=3\nenergy=(y1*y2*y3)^(2/3)\ndomain=y1*y2*y3 > 0");
        let x = vec![0.5, 0.5, 0.5];
        // with many tangent samples the only solution is zero
        let samples = ys(&eng, &x, 10, 3);
        let ns = sc_nullspace_at(&eng, &x, &samples, 1e-8).unwrap();
        assert_eq!(ns.dimension(), 0);
    }

    #[test]
    fn detect_on_conic_lift_matches_candidate() {
        let eng = conic_lift();
        let spec = eng.spec().clone();
        let xs = vec![
            vec![1.0, 0.3, 1.2],
            vec![0.8, -0.5, 1.6],
            vec![1.4, 0.9, 0.7],
        ];
        let cand = VectorFieldSpec::parse(&spec, "0; 0; x3", FieldKind::Generic).unwrap();
        let rep = sc_detect(&eng, &xs, 12, &SCDetectOptions::default(), &[cand]).unwrap();
        assert_eq!(rep.consistent_dimension, 1);
        assert!(rep.candidate_field.is_some());
        assert!(rep.candidate_max_angle.unwrap() < 1e-6);
        let sc = rep.sc_residual.unwrap();
        assert!(sc.pass, "SC residual {}", sc.residual_scaled);
        let inv = rep.invariants.unwrap();
        assert!(!inv.b0_flagged);
        assert!(!inv.bf2_flagged);
        // B = (0,0,x3): lowered covector is (0,0,x3), curl-free
        assert!(rep.gradient_diag.unwrap().curl_residual < 1e-6);
    }

    #[test]
    fn detect_on_randers2d_finds_nothing() {
        let eng = engine(
            "dim=2\nparam eps=0.5\nenergy=(sqrt(y1^2+x1^2*y2^2)+eps*y2)^2\ndomain=x1^2 > eps^2 and y1^2+y2^2 > 0",
        );
        let xs = vec![vec![1.0, 0.5], vec![1.3, -0.8], vec![0.9, 1.4]];
        let rep = sc_detect(&eng, &xs, 10, &SCDetectOptions::default(), &[]).unwrap();
        assert_eq!(rep.consistent_dimension, 0);
        assert!(rep.candidate_field.is_none());
        for ns in &rep.nullspaces {
            assert_eq!(ns.dimension(), 0);
        }
    }

    #[test]
    fn detect_on_euclidean_full_dimension() {
        let eng = engine("dim=3\nenergy=y1^2+y2^2+y3^2");
        let xs = vec![vec![0.2, 0.3, 0.4], vec![1.0, -1.0, 0.5]];
        let rep = sc_detect(&eng, &xs, 8, &SCDetectOptions::default(), &[]).unwrap();
        assert!(rep.c_zero_everywhere);
        assert_eq!(rep.consistent_dimension, 3);
    }

    #[test]
    fn concurrent_condition_sign_resolution() {
        let eng = conic_lift();
        let spec = eng.spec().clone();
        let samples = Sampler::new(5, 12).sample(&eng).unwrap();
        let neg = VectorFieldSpec::parse(&spec, "0; 0; -x3", FieldKind::Concurrent).unwrap();
        let rep = check_condition(&eng, &neg, Condition::C, &samples, 1e-6).unwrap();
        assert!(rep.pass, "(0,0,-x3) C-residual {}", rep.residual_scaled);
        let pos = VectorFieldSpec::parse(&spec, "0; 0; x3", FieldKind::Concurrent).unwrap();
        let rep = check_condition(&eng, &pos, Condition::C, &samples, 1e-6).unwrap();
        assert!(!rep.pass, "(0,0,+x3) should fail the full C-condition");
        // while both satisfy SC
        let rep = check_condition(&eng, &pos, Condition::SC, &samples, 1e-8).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn f_condition_on_catalog_instances() {
        // conic lift with f = x3: f_i = e3 and g^{3j} is constant
        let eng = conic_lift();
        let spec = eng.spec().clone();
        let samples = Sampler::new(7, 10).sample(&eng).unwrap();
        let f = spec.parse_expr("x3").unwrap();
        let grad = VectorFieldSpec::new(
            &spec,
            vec![
                spec.parse_expr("0").unwrap(),
                spec.parse_expr("0").unwrap(),
                spec.parse_expr("1").unwrap(),
            ],
            FieldKind::Gradient { potential: f },
        )
        .unwrap();
        let rep = check_condition(&eng, &grad, Condition::F, &samples, 1e-7).unwrap();
        assert!(rep.pass, "F residual {}", rep.residual_scaled);

        // ex5_2 with f = x2 (needs F6 = 0 so that row 2 of g decouples)
        let eng = ex5_2();
        let spec = eng.spec().clone();
        let samples = Sampler::new(8, 10).sample(&eng).unwrap();
        let f = spec.parse_expr("x2").unwrap();
        let grad = VectorFieldSpec::new(
            &spec,
            vec![
                spec.parse_expr("0").unwrap(),
                spec.parse_expr("1").unwrap(),
                spec.parse_expr("0").unwrap(),
                spec.parse_expr("0").unwrap(),
            ],
            FieldKind::Gradient { potential: f.clone() },
        )
        .unwrap();
        let rep = check_condition(&eng, &grad, Condition::F, &samples, 1e-7).unwrap();
        assert!(rep.pass, "F residual {}", rep.residual_scaled);

        // Lemma: F-condition ⇒ the raised field b^j = f_i g^{ij} is
        // y-independent and satisfies SC at the same tolerance
        let p0 = &samples[0];
        let b0 = raise_gradient(&eng, &f, p0).unwrap();
        for p in &samples[1..3] {
            let q = p.with_y(p.y.clone());
            let q = Bindings { x: p0.x.clone(), ..q };
            let b = raise_gradient(&eng, &f, &q).unwrap();
            for (a, c) in b0.iter().zip(&b) {
                assert!((a - c).abs() < 1e-9, "raised gradient y-dependent");
            }
        }
        let comps: Vec<_> = b0
            .iter()
            .map(|v| crate::expr::ScalarExpr::Const(*v))
            .collect();
        let bfield = VectorFieldSpec::new(&spec, comps, FieldKind::Generic).unwrap();
        let rep = check_condition(&eng, &bfield, Condition::SC, &samples, 1e-7).unwrap();
        assert!(rep.pass, "FC→SC: SC residual {}", rep.residual_scaled);
    }

    #[test]
    fn cc_condition_on_conic_lift() {
        let eng = conic_lift();
        let spec = eng.spec().clone();
        let samples = Sampler::new(9, 10).sample(&eng).unwrap();
        let sigma = spec.parse_expr("x3").unwrap();
        let field = VectorFieldSpec::new(
            &spec,
            vec![
                spec.parse_expr("0").unwrap(),
                spec.parse_expr("0").unwrap(),
                spec.parse_expr("1").unwrap(),
            ],
            FieldKind::ConformalGradient { potential: sigma },
        )
        .unwrap();
        let rep = check_condition(&eng, &field, Condition::CC, &samples, 1e-8).unwrap();
        assert!(rep.pass, "CC residual {}", rep.residual_scaled);
    }

    #[test]
    fn condition_kind_compatibility_enforced() {
        let eng = conic_lift();
        let spec = eng.spec().clone();
        let samples = Sampler::new(4, 6).sample(&eng).unwrap();
        let generic = VectorFieldSpec::parse(&spec, "0; 0; x3", FieldKind::Generic).unwrap();
        assert!(matches!(
            check_condition(&eng, &generic, Condition::F, &samples, 1e-7),
            Err(Error::IncompatibleFieldKind { .. })
        ));
        assert!(matches!(
            check_condition(&eng, &generic, Condition::CC, &samples, 1e-7),
            Err(Error::IncompatibleFieldKind { .. })
        ));
    }

    #[test]
    fn independence_invariants_values() {
        let eng = conic_lift();
        let spec = eng.spec().clone();
        let field = VectorFieldSpec::parse(&spec, "0; 0; x3", FieldKind::Generic).unwrap();
        // x3 = 2, y = (1,1,1): B_i = (0,0,2) since g_33 = 1, so B0 = 2
        let p = eng.point(vec![1.0, 0.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        let rep = independence_invariants(&eng, &field, &[p], 1e-10).unwrap();
        assert!((rep.b0[0] - 2.0).abs() < 1e-12);
        assert!(!rep.b0_flagged);
        assert!(rep.bf2_minus_b02[0].abs() > 1e-6);
    }

    #[test]
    fn independence_flags_parallel_field() {
        // B parallel to y at the sample point: B²F² − B₀² = 0 (Cauchy–Schwarz
        // equality)
        let eng = engine("dim=2\nenergy=y1^2+y2^2");
        let spec = eng.spec().clone();
        let field = VectorFieldSpec::parse(&spec, "3; 3", FieldKind::Generic).unwrap();
        let p = eng.point(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let rep = independence_invariants(&eng, &field, &[p], 1e-10).unwrap();
        assert!(rep.bf2_minus_b02[0].abs() < 1e-12);
        assert!(rep.bf2_flagged);
    }
}

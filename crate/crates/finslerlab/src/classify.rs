//! Special-class residuals per point and metric-level verdicts from
//! deterministic sampling.
//!
//! Residuals are raw max-abs component gaps between C and the respective
//! structural model; verdicts compare them against `tol · scale` with a
//! per-point scale max(1, ‖g‖∞, ‖N‖∞).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fundamental::MetricEngine;
use crate::metric::Bindings;
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::util::parallel_map;

/// Least-squares semi-C-reducible decomposition: C ≈ r·P + t·Q with
/// r + t = 1, P the angular-metric model and Q the C2-like model.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiCFit {
    pub r: f64,
    pub t: f64,
    pub residual: f64,
}

/// Per-point residuals for every class predicate.
#[derive(Debug, Clone)]
pub struct PointClassification {
    /// max |C_ijk|; ≈ 0 exactly for Riemannian (quadratic) energies.
    pub riemannian_residual: f64,
    /// max |G^h_ijk| (Berwald tensor).
    pub berwald_residual: f64,
    /// max |L_ijk|.
    pub landsberg_residual: f64,
    /// Deviation from the C-reducible model; defined for dim ≥ 3.
    pub c_reducible_residual: Option<f64>,
    /// Deviation from the C2-like model (zero-limit model when C² ≈ 0).
    pub c2like_residual: f64,
    /// Semi-C-reducible fit; undefined when C² ≈ 0.
    pub semi_c: Option<SemiCFit>,
    /// |F(x,y) − F(x,−y)| (+∞ when −y leaves the domain).
    pub reversible_residual: f64,
    /// Berwald main scalar J (dim 2 with positive-definite g only).
    pub main_scalar_2d: Option<f64>,
    /// max |F C_ijk − J η_i η_j η_k| for the 2-D decomposition.
    pub main_scalar_residual: Option<f64>,
    /// Magnitude used when comparing residuals against tolerances.
    pub scale: f64,
}

/// C² is treated as zero below tol² at the tensor's own scale (guards the
/// 0/0 in the C2-like model; roundoff-level C_i stays far below).
fn c_sq_negligible(c_sq: f64, c_max: f64, w_max: f64, tol: f64) -> bool {
    c_sq.abs() <= tol * tol * (1.0 + c_max * c_max * w_max)
}

/// Evaluate all class predicates at one point.
pub fn classify_point(engine: &MetricEngine, p: &Bindings, tol: f64) -> Result<PointClassification> {
    let n = engine.dim();
    if n < 2 {
        return Err(Error::Spec("classification requires dim ≥ 2".into()));
    }
    let cb = engine.connection_bundle(p)?;
    let fb = &cb.fundamental;
    let cartan = &fb.cartan;
    let c_max = cartan.max_abs();
    let scale = 1.0_f64.max(fb.g.max_abs()).max(cb.nonlinear.max_abs());

    let riemannian_residual = c_max;
    let berwald_residual = cb.berwald_tensor.max_abs();
    let landsberg_residual = cb.landsberg.max_abs();

    let c_vec = fb.c_vec()?;
    let c_sq = fb.c_sq()?;
    let w_max = fb.g_inv()?.max_abs();
    let h = &fb.h;

    // C-reducible model (1/(n+1))(h_ij C_k + h_ki C_j + h_jk C_i)
    let p_model = Tensor::from_fn(n, &cartan.variance, |idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        (h.get(&[i, j]) * c_vec.get(&[k])
            + h.get(&[k, i]) * c_vec.get(&[j])
            + h.get(&[j, k]) * c_vec.get(&[i]))
            / (n as f64 + 1.0)
    });
    let c_reducible_residual = if n >= 3 {
        Some(max_abs_diff(cartan, &p_model))
    } else {
        None
    };

    // C2-like model C_i C_j C_k / C², zero-limit when C² ≈ 0
    let c2_defined = !c_sq_negligible(c_sq, c_max, w_max, tol);
    let q_model = if c2_defined {
        Tensor::from_fn(n, &cartan.variance, |idx| {
            c_vec.get(&[idx[0]]) * c_vec.get(&[idx[1]]) * c_vec.get(&[idx[2]]) / c_sq
        })
    } else {
        Tensor::zeros(n, &cartan.variance)
    };
    let c2like_residual = max_abs_diff(cartan, &q_model);

    // semi-C-reducible least-squares fit with t = 1 − r
    let semi_c = if c2_defined {
        let mut num = 0.0;
        let mut den = 0.0;
        for (c, (pm, qm)) in cartan
            .data
            .iter()
            .zip(p_model.data.iter().zip(q_model.data.iter()))
        {
            let d = pm - qm;
            num += (c - qm) * d;
            den += d * d;
        }
        let r = if den <= 1e-28 * (1.0 + c_max * c_max) {
            // P ≡ Q (exact in dim 2): any split fits, report the C2-like one
            0.0
        } else {
            num / den
        };
        let t = 1.0 - r;
        let mut residual = 0.0_f64;
        for (c, (pm, qm)) in cartan
            .data
            .iter()
            .zip(p_model.data.iter().zip(q_model.data.iter()))
        {
            residual = residual.max((c - r * pm - t * qm).abs());
        }
        Some(SemiCFit { r, t, residual })
    } else {
        None
    };

    let reversible_residual = engine.reversibility_gap(p);

    // 2-D Berwald main scalar via F C_ijk = J η_i η_j η_k
    let (main_scalar_2d, main_scalar_residual) = if n == 2 {
        match main_scalar(engine, &cb.fundamental) {
            Some((j_scalar, resid)) => (Some(j_scalar), Some(resid)),
            None => (None, None),
        }
    } else {
        (None, None)
    };

    Ok(PointClassification {
        riemannian_residual,
        berwald_residual,
        landsberg_residual,
        c_reducible_residual,
        c2like_residual,
        semi_c,
        reversible_residual,
        main_scalar_2d,
        main_scalar_residual,
        scale,
    })
}

fn max_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Build the g-unit vector η orthogonal to l and return
/// (J, max |F C_ijk − J η_i η_j η_k|). Requires positive-definite g.
fn main_scalar(
    engine: &MetricEngine,
    fb: &crate::fundamental::FundamentalBundle,
) -> Option<(f64, f64)> {
    let n = engine.dim();
    debug_assert_eq!(n, 2);
    let w = fb.g_inv.as_ref()?;
    let _ = w;
    let g = &fb.g;
    let lup = &fb.l_up;
    // Gram-Schmidt of the better-conditioned basis vector against l^
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        // v = e − g(e, l^) l^
        let mut gel = 0.0;
        for j in 0..n {
            gel += g.get(&[k, j]) * lup.get(&[j]);
        }
        let v: Vec<f64> = (0..n).map(|i| e[i] - gel * lup.get(&[i])).collect();
        let mut gvv = 0.0;
        for i in 0..n {
            for j in 0..n {
                gvv += g.get(&[i, j]) * v[i] * v[j];
            }
        }
        if best.as_ref().map_or(true, |(b, _)| gvv > *b) {
            best = Some((gvv, v));
        }
    }
    let (gvv, v) = best?;
    if gvv <= 0.0 {
        return None; // not positive definite in the tangent plane
    }
    let eta_up: Vec<f64> = v.iter().map(|c| c / gvv.sqrt()).collect();
    let eta_down: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| g.get(&[i, j]) * eta_up[j]).sum())
        .collect();
    // J = F · C(η, η, η)
    let mut c_eta = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                c_eta += fb.cartan.get(&[i, j, k]) * eta_up[i] * eta_up[j] * eta_up[k];
            }
        }
    }
    let j_scalar = fb.f * c_eta;
    let mut resid = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let model = j_scalar * eta_down[i] * eta_down[j] * eta_down[k];
                resid = resid.max((fb.f * fb.cartan.get(&[i, j, k]) - model).abs());
            }
        }
    }
    Some((j_scalar, resid))
}

/// Deterministic sampler: x uniform in the box with coordinates excluded
/// from a strip around zero, y on the unit sphere, rejection against the
/// metric's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    pub seed: u64,
    pub n_points: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    /// Coordinates with |x_i| below this are resampled (coordinate
    /// singularities of the catalog metrics).
    pub exclude: f64,
}

impl Sampler {
    pub fn new(seed: u64, n_points: usize) -> Self {
        Sampler {
            seed,
            n_points,
            box_lo: -2.0,
            box_hi: 2.0,
            exclude: 0.1,
        }
    }

    fn draw_x(&self, rng: &mut Rng, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|_| loop {
                let v = rng.range(self.box_lo, self.box_hi);
                if v.abs() >= self.exclude {
                    return v;
                }
            })
            .collect()
    }

    /// Sample (x, y) points accepted by the engine's domain. Errors after a
    /// bounded number of rejections.
    pub fn sample(&self, engine: &MetricEngine) -> Result<Vec<Bindings>> {
        let mut rng = Rng::new(self.seed);
        let dim = engine.dim();
        let mut out = Vec::with_capacity(self.n_points);
        let max_tries = 400 * self.n_points.max(1);
        let mut tries = 0;
        while out.len() < self.n_points {
            tries += 1;
            if tries > max_tries {
                let pred = engine
                    .spec()
                    .domain
                    .as_ref()
                    .map(|d| d.to_source(&engine.spec().param_names()))
                    .unwrap_or_else(|| "<none>".into());
                return Err(Error::NoSamples(format!(
                    "{} of {} points after {} tries; domain predicate: {}",
                    out.len(),
                    self.n_points,
                    max_tries,
                    pred
                )));
            }
            let x = self.draw_x(&mut rng, dim);
            let y = rng.unit_vector(dim);
            let p = engine.point(x, y)?;
            if engine.in_domain(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Sample y directions accepted at a fixed x.
    pub fn sample_y_at(
        &self,
        engine: &MetricEngine,
        x: &[f64],
        count: usize,
    ) -> Result<Vec<Bindings>> {
        let mut rng = Rng::new(self.seed);
        let dim = engine.dim();
        let mut out = Vec::with_capacity(count);
        let max_tries = 400 * count.max(1);
        let mut tries = 0;
        while out.len() < count {
            tries += 1;
            if tries > max_tries {
                return Err(Error::NoSamples(format!(
                    "{} of {} tangent samples at x={:?} after {} tries",
                    out.len(),
                    count,
                    x,
                    max_tries
                )));
            }
            let y = rng.unit_vector(dim);
            let p = engine.point(x.to_vec(), y)?;
            if engine.in_domain(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// Metric-level aggregation of per-point classifications.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub label: String,
    pub sampler: Sampler,
    pub tol: f64,
    pub points: Vec<PointClassification>,
    /// Class name → membership verdict (every sampled residual below
    /// tol·scale).
    pub verdicts: BTreeMap<String, bool>,
}

/// Classify at `sampler.n_points` deterministic samples and aggregate.
pub fn classify_metric(
    engine: &MetricEngine,
    sampler: &Sampler,
    tol: f64,
) -> Result<ClassificationReport> {
    let points = sampler.sample(engine)?;
    let classified = parallel_map(&points, |p| classify_point(engine, p, tol));
    let mut out = Vec::with_capacity(classified.len());
    for c in classified {
        out.push(c?);
    }
    let all = |f: &dyn Fn(&PointClassification) -> bool| out.iter().all(f);
    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        "riemannian".to_string(),
        all(&|c| c.riemannian_residual <= tol * c.scale),
    );
    verdicts.insert(
        "berwald".to_string(),
        all(&|c| c.berwald_residual <= tol * c.scale),
    );
    verdicts.insert(
        "landsberg".to_string(),
        all(&|c| c.landsberg_residual <= tol * c.scale),
    );
    verdicts.insert(
        "c_reducible".to_string(),
        all(&|c| c
            .c_reducible_residual
            .map_or(false, |r| r <= tol * c.scale)),
    );
    verdicts.insert(
        "c2_like".to_string(),
        all(&|c| c.c2like_residual <= tol * c.scale),
    );
    verdicts.insert(
        "semi_c_reducible".to_string(),
        all(&|c| c.semi_c.as_ref().map_or(false, |f| f.residual <= tol * c.scale)),
    );
    verdicts.insert(
        "reversible".to_string(),
        all(&|c| c.reversible_residual <= tol * c.scale),
    );
    Ok(ClassificationReport {
        label: engine.spec().label.clone(),
        sampler: sampler.clone(),
        tol,
        points: out,
        verdicts,
    })
}

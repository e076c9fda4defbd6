//! Pointwise zeroth-layer tensors of a Finsler metric and the regularity
//! probe.
//!
//! Conventions (Φ denotes the spec's `energy` expression, i.e. F²):
//!
//! ```text
//! F    = √Φ                       E = Φ/2
//! g_ij = ½ ∂̇_i∂̇_j Φ              l_i = ∂̇_i F = ∂̇_iΦ / (2F)
//! h_ij = g_ij − l_i l_j           C_ijk = ¼ ∂̇_i∂̇_j∂̇_k Φ
//! C^i_jk = g^{ir} C_rjk           C_i = C_ijk g^{jk},  C² = C_i C^i
//! ```
//!
//! [`MetricEngine`] owns the symbolic derivative tables of Φ (pure y-orders
//! 1..5 and one x-derivative crossed with y-orders 0..4) built once per
//! spec; everything pointwise is then a table evaluation plus small dense
//! linear algebra.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{differentiate, ScalarExpr, Var};
use crate::metric::{Bindings, MetricSpec};
use crate::tensor::{sorted_multi_indices, Slot, Tensor};

/// Symbolic derivative tables of the energy expression.
#[derive(Debug)]
pub(crate) struct DerivTables {
    /// `dy[k]` maps a sorted y-multi-index of length k+1 to ∂̇^{k+1} Φ.
    dy: Vec<BTreeMap<Vec<usize>, ScalarExpr>>,
    /// `dxdy[j][k]` maps a sorted y-multi-index of length k to ∂_j ∂̇^k Φ.
    dxdy: Vec<Vec<BTreeMap<Vec<usize>, ScalarExpr>>>,
}

const MAX_Y_ORDER: usize = 5;
const MAX_XY_ORDER: usize = 4;

impl DerivTables {
    fn build(spec: &MetricSpec) -> Self {
        let n = spec.dim;
        // pure y-derivatives, order 1..=5, keyed by sorted multi-index
        let mut dy: Vec<BTreeMap<Vec<usize>, ScalarExpr>> = Vec::with_capacity(MAX_Y_ORDER);
        let mut prev: BTreeMap<Vec<usize>, ScalarExpr> = BTreeMap::new();
        prev.insert(Vec::new(), spec.energy.clone());
        for order in 1..=MAX_Y_ORDER {
            let mut cur = BTreeMap::new();
            for key in sorted_multi_indices(n, order) {
                // differentiate the parent (key without its last entry) once
                let parent = &prev[&key[..order - 1].to_vec()];
                let d = differentiate(parent, Var::y(key[order - 1]));
                cur.insert(key, d);
            }
            dy.push(cur.clone());
            prev = cur;
        }
        // one x-derivative crossed with y-orders 0..=4
        let mut dxdy = Vec::with_capacity(n);
        for j in 0..n {
            let base = differentiate(&spec.energy, Var::x(j));
            let mut per_order: Vec<BTreeMap<Vec<usize>, ScalarExpr>> =
                Vec::with_capacity(MAX_XY_ORDER + 1);
            let mut prev: BTreeMap<Vec<usize>, ScalarExpr> = BTreeMap::new();
            prev.insert(Vec::new(), base);
            per_order.push(prev.clone());
            for order in 1..=MAX_XY_ORDER {
                let mut cur = BTreeMap::new();
                for key in sorted_multi_indices(n, order) {
                    let parent = &prev[&key[..order - 1].to_vec()];
                    let d = differentiate(parent, Var::y(key[order - 1]));
                    cur.insert(key, d);
                }
                per_order.push(cur.clone());
                prev = cur;
            }
            dxdy.push(per_order);
        }
        DerivTables { dy, dxdy }
    }
}

/// Evaluated symmetric derivative table at a point: values for every sorted
/// multi-index of one order.
#[derive(Debug, Clone)]
pub(crate) struct SymTable {
    dim: usize,
    order: usize,
    values: BTreeMap<Vec<usize>, f64>,
}

impl SymTable {
    pub(crate) fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order);
        debug_assert!(idx.iter().all(|&i| i < self.dim));
        let mut key = idx.to_vec();
        key.sort_unstable();
        self.values[&key]
    }

    fn all_finite(&self) -> bool {
        self.values.values().all(|v| v.is_finite())
    }
}

/// Precompiled engine for one metric spec: symbolic tables built once,
/// pointwise evaluation afterwards. Shared immutably across threads.
pub struct MetricEngine {
    spec: MetricSpec,
    tables: DerivTables,
    /// Spray covector expressions S_l = ¼(y^k ∂_k∂̇_l Φ − ∂_l Φ) and their
    /// y-derivatives up to order 3; built lazily by the connection layer.
    pub(crate) spray_cov:
        std::sync::OnceLock<Vec<BTreeMap<Vec<usize>, ScalarExpr>>>,
}

impl MetricEngine {
    pub fn new(spec: MetricSpec) -> Self {
        let tables = DerivTables::build(&spec);
        MetricEngine {
            spec,
            tables,
            spray_cov: std::sync::OnceLock::new(),
        }
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Bind a point (checks lengths only).
    pub fn point(&self, x: Vec<f64>, y: Vec<f64>) -> Result<Bindings> {
        Bindings::for_spec(&self.spec, x, y)
    }

    /// Clone of the ∂_xj ∂̇-multi-index expression (used to assemble the
    /// spray covector trees).
    pub(crate) fn dxdy_src(&self, xj: usize, yidx: &[usize]) -> ScalarExpr {
        let mut key = yidx.to_vec();
        key.sort_unstable();
        self.tables.dxdy[xj][yidx.len()][&key].clone()
    }

    /// Evaluate the order-`k` pure y-derivative table at a point.
    pub(crate) fn eval_dy_table(&self, p: &Bindings, order: usize) -> Result<SymTable> {
        let mut values = BTreeMap::new();
        for key in sorted_multi_indices(self.dim(), order) {
            let v = p.eval(&self.tables.dy[order - 1][&key])?;
            values.insert(key, v);
        }
        Ok(SymTable {
            dim: self.dim(),
            order,
            values,
        })
    }

    /// Evaluate the ∂_xj table of y-order `k` at a point.
    pub(crate) fn eval_dxdy_table(
        &self,
        p: &Bindings,
        xj: usize,
        order: usize,
    ) -> Result<SymTable> {
        let mut values = BTreeMap::new();
        for key in sorted_multi_indices(self.dim(), order) {
            let v = p.eval(&self.tables.dxdy[xj][order][&key])?;
            values.insert(key, v);
        }
        Ok(SymTable {
            dim: self.dim(),
            order,
            values,
        })
    }

    /// Does the point lie in the metric's domain? Requires y ≠ 0, the
    /// predicate to accept it (when present), Φ to evaluate finite, Φ > 0.
    pub fn in_domain(&self, p: &Bindings) -> bool {
        if p.y_is_zero() {
            return false;
        }
        if !self.spec.domain_accepts(p) {
            return false;
        }
        match p.eval(&self.spec.energy) {
            Ok(phi) => phi.is_finite() && phi > 0.0,
            Err(_) => false,
        }
    }

    /// All zeroth-layer pointwise tensors at `p`.
    pub fn fundamental_bundle(&self, p: &Bindings) -> Result<FundamentalBundle> {
        let n = self.dim();
        if p.y_is_zero() {
            return Err(Error::OutOfDomain("tangent vector y = 0".into()));
        }
        if !self.spec.domain_accepts(p) {
            return Err(Error::OutOfDomain(format!(
                "domain predicate rejects the point (metric `{}`)",
                self.spec.label
            )));
        }
        let phi = p.eval(&self.spec.energy)?;
        if phi <= 0.0 || phi.is_nan() {
            return Err(Error::OutOfDomain(format!(
                "energy F² = {:e} is not positive at the point",
                phi
            )));
        }
        let f = phi.sqrt();
        let e = 0.5 * phi;

        let d1 = self.eval_dy_table(p, 1)?;
        let d2 = self.eval_dy_table(p, 2)?;
        let d3 = self.eval_dy_table(p, 3)?;

        let g = Tensor::from_fn(n, &[Slot::Down, Slot::Down], |idx| 0.5 * d2.get(idx));
        let cartan = Tensor::from_fn(n, &[Slot::Down; 3], |idx| 0.25 * d3.get(idx));

        let l = Tensor::from_fn(n, &[Slot::Down], |idx| d1.get(idx) / (2.0 * f));
        let l_up = Tensor::from_fn(n, &[Slot::Up], |idx| p.y[idx[0]] / f);
        // l_ij = ∂̇_i l_j = ∂̇_i∂̇_jΦ/(2F) − (∂̇_iΦ)(∂̇_jΦ)/(4F³), an
        // independent route so that h = F·l_der is a real crosscheck
        let l_der = Tensor::from_fn(n, &[Slot::Down, Slot::Down], |idx| {
            d2.get(idx) / (2.0 * f) - d1.get(&idx[..1]) * d1.get(&idx[1..]) / (4.0 * f * f * f)
        });
        let h = Tensor::from_fn(n, &[Slot::Down, Slot::Down], |idx| {
            g.get(idx) - l.get(&idx[..1]) * l.get(&idx[1..])
        });

        let gmat = g.to_matrix()?;
        let lu = gmat.lu();
        let det_g = lu.determinant();
        let nondegenerate = det_g.abs() > 1e-10 * hadamard_scale(&g);

        let (g_inv, c_mixed, c_vec, c_sq) = if nondegenerate {
            let inv = lu
                .try_inverse()
                .ok_or(Error::DegenerateMetric { det: det_g })?;
            let g_inv = Tensor::from_matrix(&inv, [Slot::Up, Slot::Up]);
            let c_mixed = Tensor::from_fn(n, &[Slot::Up, Slot::Down, Slot::Down], |idx| {
                (0..n)
                    .map(|r| g_inv.get(&[idx[0], r]) * cartan.get(&[r, idx[1], idx[2]]))
                    .sum()
            });
            let c_vec = Tensor::from_fn(n, &[Slot::Down], |idx| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        acc += cartan.get(&[idx[0], j, k]) * g_inv.get(&[j, k]);
                    }
                }
                acc
            });
            let mut c_sq = 0.0;
            for i in 0..n {
                for j in 0..n {
                    c_sq += c_vec.get(&[i]) * g_inv.get(&[i, j]) * c_vec.get(&[j]);
                }
            }
            (Some(g_inv), Some(c_mixed), Some(c_vec), Some(c_sq))
        } else {
            (None, None, None, None)
        };

        Ok(FundamentalBundle {
            f,
            e,
            g,
            g_inv,
            det_g,
            nondegenerate,
            l,
            l_up,
            l_der,
            h,
            cartan,
            c_mixed,
            c_vec,
            c_sq,
        })
    }

    /// Regularity probe at a point; never errors, all failure modes are
    /// encoded in the returned status.
    pub fn domain_probe(&self, p: &Bindings) -> DomainStatus {
        let n = self.dim();
        let in_domain = self.in_domain(p);

        // smoothness: every partial the Cartan layer needs must evaluate
        // finite at the point and at 2n y-perturbed probe points, all of
        // which must stay inside the domain
        let ynorm = p.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = 1e-4 * ynorm.max(1.0);
        let mut probes: Vec<Bindings> = vec![p.clone()];
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let mut y = p.y.clone();
                y[i] += sgn * radius;
                probes.push(p.with_y(y));
            }
        }
        let mut smooth = true;
        'probe: for q in &probes {
            if !self.in_domain(q) {
                smooth = false;
                break;
            }
            for order in 1..=3 {
                match self.eval_dy_table(q, order) {
                    Ok(t) if t.all_finite() => {}
                    _ => {
                        smooth = false;
                        break 'probe;
                    }
                }
            }
            for xj in 0..n {
                match self.eval_dxdy_table(q, xj, 2) {
                    Ok(t) if t.all_finite() => {}
                    _ => {
                        smooth = false;
                        break 'probe;
                    }
                }
            }
        }

        // leading principal minors of g by successive principal submatrices
        let (minors, nondegenerate, positive_definite) = match self.eval_dy_table(p, 2) {
            Ok(d2) => {
                let g = Tensor::from_fn(n, &[Slot::Down, Slot::Down], |idx| 0.5 * d2.get(idx));
                let gmat = g.to_matrix().expect("g is rank 2");
                let mut minors = Vec::with_capacity(n);
                for k in 1..=n {
                    let sub = gmat.view((0, 0), (k, k)).into_owned();
                    minors.push(sub.determinant());
                }
                let det = minors[n - 1];
                let nondeg = det.abs() > 1e-10 * hadamard_scale(&g);
                let pd = nondeg && minors.iter().all(|m| *m > 0.0);
                (minors, nondeg, pd)
            }
            Err(_) => (Vec::new(), false, false),
        };

        DomainStatus {
            in_domain,
            smooth,
            nondegenerate,
            positive_definite,
            leading_minors: minors,
        }
    }

    /// |F(x,y) − F(x,−y)|; +∞ when either side is outside the domain.
    pub fn reversibility_gap(&self, p: &Bindings) -> f64 {
        let neg = p.with_y(p.y.iter().map(|v| -v).collect());
        let side = |q: &Bindings| -> Option<f64> {
            if !self.in_domain(q) {
                return None;
            }
            q.eval(&self.spec.energy).ok().map(|phi| phi.sqrt())
        };
        match (side(p), side(&neg)) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        }
    }
}

/// All pointwise zeroth-layer tensors at a tangent sample. When the metric
/// is numerically degenerate at the point the inverse-dependent fields are
/// `None` and `nondegenerate` is false.
#[derive(Debug, Clone)]
pub struct FundamentalBundle {
    /// F = √Φ.
    pub f: f64,
    /// E = ½F².
    pub e: f64,
    /// g_ij.
    pub g: Tensor,
    /// g^{ij}, absent when degenerate.
    pub g_inv: Option<Tensor>,
    pub det_g: f64,
    pub nondegenerate: bool,
    /// l_i = ∂̇_i F.
    pub l: Tensor,
    /// l^i = y^i / F.
    pub l_up: Tensor,
    /// l_ij = ∂̇_i l_j.
    pub l_der: Tensor,
    /// h_ij = g_ij − l_i l_j.
    pub h: Tensor,
    /// C_ijk.
    pub cartan: Tensor,
    /// C^i_jk, absent when degenerate.
    pub c_mixed: Option<Tensor>,
    /// C_i = C_ijk g^{jk}, absent when degenerate.
    pub c_vec: Option<Tensor>,
    /// C² = C_i C^i, absent when degenerate.
    pub c_sq: Option<f64>,
}

impl FundamentalBundle {
    pub fn g_inv(&self) -> Result<&Tensor> {
        self.g_inv
            .as_ref()
            .ok_or(Error::DegenerateMetric { det: self.det_g })
    }

    pub fn c_mixed(&self) -> Result<&Tensor> {
        self.c_mixed
            .as_ref()
            .ok_or(Error::DegenerateMetric { det: self.det_g })
    }

    pub fn c_vec(&self) -> Result<&Tensor> {
        self.c_vec
            .as_ref()
            .ok_or(Error::DegenerateMetric { det: self.det_g })
    }

    pub fn c_sq(&self) -> Result<f64> {
        self.c_sq.ok_or(Error::DegenerateMetric { det: self.det_g })
    }
}

/// Degeneracy scale for det g: product of row max-abs entries (a Hadamard
/// bound), so the threshold tracks anisotropically scaled metrics instead
/// of (max|g|)^dim which misfires when a single entry blows up.
fn hadamard_scale(g: &Tensor) -> f64 {
    let n = g.dim;
    let mut prod = 1.0_f64;
    for i in 0..n {
        let row_max = (0..n).fold(0.0_f64, |m, j| m.max(g.get(&[i, j]).abs()));
        prod *= row_max.max(f64::MIN_POSITIVE);
    }
    prod.max(f64::MIN_POSITIVE)
}

/// Pointwise regularity report: domain membership, smoothness probe,
/// nondegeneracy and positive-definiteness via leading principal minors.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainStatus {
    pub in_domain: bool,
    pub smooth: bool,
    pub nondegenerate: bool,
    pub positive_definite: bool,
    pub leading_minors: Vec<f64>,
}

/// Operation-level wrapper; builds a throwaway engine.
pub fn fundamental_bundle(spec: &MetricSpec, p: &Bindings) -> Result<FundamentalBundle> {
    MetricEngine::new(spec.clone()).fundamental_bundle(p)
}

/// Operation-level wrapper; builds a throwaway engine.
pub fn domain_probe(spec: &MetricSpec, p: &Bindings) -> DomainStatus {
    MetricEngine::new(spec.clone()).domain_probe(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::parse_metric;
    use crate::numdiff::mixed_partial_o6;

    fn euclidean(n: usize) -> MetricSpec {
        let terms: Vec<String> = (1..=n).map(|i| format!("y{}^2", i)).collect();
        parse_metric(&format!("dim={}\nenergy={}", n, terms.join("+"))).unwrap()
    }

    fn conic_lift() -> MetricSpec {
        parse_metric(
            "dim=3\nparam eps=0.5\nenergy=y3^2 + x3^2*(sqrt(y1^2+x1^2*y2^2)+eps*y2)^2\ndomain=y1^2+y2^2 > 0",
        )
        .unwrap()
    }

    fn product3d() -> MetricSpec {
        parse_metric("dim=3\nenergy=(y1*y2*y3)^(2/3)\ndomain=y1*y2*y3 > 0").unwrap()
    }

    #[test]
    fn euclidean_bundle_trivial_fields() {
        let engine = MetricEngine::new(euclidean(2));
        let p = engine.point(vec![0.3, -1.0], vec![3.0, 4.0]).unwrap();
        let b = engine.fundamental_bundle(&p).unwrap();
        assert!((b.f - 5.0).abs() < 1e-14);
        assert!((b.e - 12.5).abs() < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((b.g.get(&[i, j]) - want).abs() < 1e-14);
                // h_ij = δ_ij − y_i y_j / |y|²
                let hw = want - p.y[i] * p.y[j] / 25.0;
                assert!((b.h.get(&[i, j]) - hw).abs() < 1e-14);
            }
        }
        assert_eq!(b.cartan.max_abs(), 0.0);
        assert_eq!(b.c_sq.unwrap(), 0.0);
        assert!(b.nondegenerate);
        // l_i l^i = 1
        let dot: f64 = (0..2).map(|i| b.l.get(&[i]) * b.l_up.get(&[i])).sum();
        assert!((dot - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product3d_cartan_components() {
        let engine = MetricEngine::new(product3d());
        let p = engine.point(vec![0.0; 3], vec![1.0, 1.0, 1.0]).unwrap();
        let b = engine.fundamental_bundle(&p).unwrap();
        // closed forms at y = (1,1,1): C_123 = 2/27, C_111 = 2/27, C_112 = −1/27
        assert!((b.cartan.get(&[0, 1, 2]) - 2.0 / 27.0).abs() < 1e-14);
        assert!((b.cartan.get(&[0, 0, 0]) - 2.0 / 27.0).abs() < 1e-14);
        assert!((b.cartan.get(&[0, 0, 1]) + 1.0 / 27.0).abs() < 1e-14);
        // C_i = 0 for all i although the space is not Riemannian
        let c_vec = b.c_vec().unwrap();
        for i in 0..3 {
            assert!(c_vec.get(&[i]).abs() < 1e-13, "C_{} = {}", i, c_vec.get(&[i]));
        }
        assert!(b.cartan.max_abs() > 0.01);
    }

    #[test]
    fn product3d_c_vec_zero_generic_points() {
        let engine = MetricEngine::new(product3d());
        let mut rng = crate::rng::Rng::new(9);
        for _ in 0..10 {
            let y: Vec<f64> = (0..3).map(|_| rng.range(0.2, 2.0)).collect();
            let p = engine.point(vec![0.0; 3], y).unwrap();
            let b = engine.fundamental_bundle(&p).unwrap();
            let c_vec = b.c_vec().unwrap();
            for i in 0..3 {
                assert!(c_vec.get(&[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conic_lift_printed_components() {
        let engine = MetricEngine::new(conic_lift());
        let p = engine.point(vec![1.0, 0.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        let b = engine.fundamental_bundle(&p).unwrap();
        let (x1, x3, eps) = (1.0f64, 2.0f64, 0.5f64);
        let (y1, y2): (f64, f64) = (1.0, 1.0);
        let rho2 = y1 * y1 + x1 * x1 * y2 * y2;
        // g_33 = 1
        assert!((b.g.get(&[2, 2]) - 1.0).abs() < 1e-14);
        // g_12 = ε x3² y1³ / ρ³
        let g12 = eps * x3 * x3 * y1.powi(3) / rho2.powf(1.5);
        assert!((b.g.get(&[0, 1]) - g12).abs() < 1e-13);
        // C_222 = (3/2) ε x1² x3² y1⁴ / ρ⁵
        let c222 = 1.5 * eps * x1 * x1 * x3 * x3 * y1.powi(4) / rho2.powf(2.5);
        assert!((b.cartan.get(&[1, 1, 1]) - c222).abs() < 1e-13);
        // C_3jk = 0: y3 enters Φ quadratically
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(b.cartan.get(&[2, j, k]), 0.0);
            }
        }
    }

    #[test]
    fn metric_matches_fd_hessian_oracle() {
        // g from the symbolic path vs ½ finite-difference Hessian of Φ
        let engine = MetricEngine::new(conic_lift());
        let mut rng = crate::rng::Rng::new(17);
        for _ in 0..20 {
            let x = vec![rng.range(0.5, 2.0), rng.range(-1.0, 1.0), rng.range(0.5, 2.0)];
            let y = vec![rng.range(0.3, 1.5), rng.range(0.3, 1.5), rng.range(-1.0, 1.0)];
            let p = engine.point(x.clone(), y.clone()).unwrap();
            let b = engine.fundamental_bundle(&p).unwrap();
            let phi = |args: &[f64]| {
                let q = p.with_y(args.to_vec());
                q.eval(&engine.spec().energy).unwrap()
            };
            for i in 0..3 {
                for j in 0..3 {
                    let fd = 0.5 * mixed_partial_o6(&phi, &y, &[i, j], 1e-2);
                    let sym = b.g.get(&[i, j]);
                    assert!(
                        (fd - sym).abs() <= 1e-5 * fd.abs().max(sym.abs()).max(1e-3),
                        "g[{i}{j}]: sym {sym} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn euler_identities_hold() {
        for spec in [euclidean(3), conic_lift(), product3d()] {
            let engine = MetricEngine::new(spec);
            let mut rng = crate::rng::Rng::new(23);
            let mut checked = 0;
            while checked < 10 {
                let x = vec![rng.range(0.5, 2.0), rng.range(0.2, 2.0), rng.range(0.5, 2.0)];
                let y = vec![rng.range(0.2, 1.5), rng.range(0.2, 1.5), rng.range(0.2, 1.5)];
                let p = engine.point(x, y).unwrap();
                if !engine.in_domain(&p) {
                    continue;
                }
                checked += 1;
                let b = engine.fundamental_bundle(&p).unwrap();
                let n = engine.dim();
                // g_ij y^i y^j = F²
                let mut gyy = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        gyy += b.g.get(&[i, j]) * p.y[i] * p.y[j];
                    }
                }
                assert!((gyy - b.f * b.f).abs() < 1e-10 * (b.f * b.f).max(1.0));
                // C_ijk y^k = 0
                for i in 0..n {
                    for j in 0..n {
                        let c: f64 = (0..n).map(|k| b.cartan.get(&[i, j, k]) * p.y[k]).sum();
                        assert!(c.abs() < 1e-10 * b.cartan.max_abs().max(1.0));
                    }
                }
                // h_ij y^j = 0
                for i in 0..n {
                    let h: f64 = (0..n).map(|j| b.h.get(&[i, j]) * p.y[j]).sum();
                    assert!(h.abs() < 1e-10 * b.h.max_abs().max(1.0));
                }
                // h = F·l_der
                for i in 0..n {
                    for j in 0..n {
                        let lhs = b.h.get(&[i, j]);
                        let rhs = b.f * b.l_der.get(&[i, j]);
                        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_flagged_not_error() {
        // energy (y1+y2)^2 has rank-1 Hessian
        let spec = parse_metric("dim=2\nenergy=(y1+y2)^2").unwrap();
        let engine = MetricEngine::new(spec);
        let p = engine.point(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let b = engine.fundamental_bundle(&p).unwrap();
        assert!(!b.nondegenerate);
        assert!(b.g_inv.is_none());
        assert!(b.g_inv().is_err());
    }

    #[test]
    fn domain_probe_euclidean() {
        let engine = MetricEngine::new(euclidean(3));
        let p = engine.point(vec![0.0; 3], vec![1.0, 2.0, -1.0]).unwrap();
        let st = engine.domain_probe(&p);
        assert!(st.in_domain && st.smooth && st.nondegenerate && st.positive_definite);
        assert_eq!(st.leading_minors, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn domain_probe_conic_boundary() {
        let engine = MetricEngine::new(conic_lift());
        // at the excluded direction (0,0,1): outside the cone, not smooth
        let p = engine.point(vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 1.0]).unwrap();
        let st = engine.domain_probe(&p);
        assert!(!st.in_domain);
        assert!(!st.smooth);
        // approaching the boundary along y=(t,t,1) the Cartan components
        // grow without bound (the ρ^{-5/2} factor wins)
        let c_at = |t: f64| {
            let q = engine.point(vec![1.0, 0.0, 2.0], vec![t, t, 1.0]).unwrap();
            assert!(engine.domain_probe(&q).in_domain);
            engine.fundamental_bundle(&q).unwrap().cartan.max_abs()
        };
        assert!(c_at(1e-6) > 1e5, "max |C| = {}", c_at(1e-6));
        assert!(c_at(1e-6) > 100.0 * c_at(1e-3));
    }

    #[test]
    fn reversibility_gap_detects_randers_term() {
        let engine = MetricEngine::new(conic_lift());
        let p = engine.point(vec![1.0, 0.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert!(engine.reversibility_gap(&p) > 1e-3);
        let eng2 = MetricEngine::new(euclidean(2));
        let q = eng2.point(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert!(eng2.reversibility_gap(&q) < 1e-14);
    }

    #[test]
    fn homogeneity_of_tensors_under_y_scaling() {
        let engine = MetricEngine::new(conic_lift());
        let p = engine.point(vec![1.0, 0.5, 2.0], vec![0.7, 0.9, 0.4]).unwrap();
        let b = engine.fundamental_bundle(&p).unwrap();
        for lambda in [0.5, 2.0, 3.0] {
            let q = p.with_y(p.y.iter().map(|v| v * lambda).collect());
            let bl = engine.fundamental_bundle(&q).unwrap();
            assert!((bl.f - lambda * b.f).abs() < 1e-9 * b.f.max(1.0));
            for i in 0..3 {
                for j in 0..3 {
                    let (a, c) = (bl.g.get(&[i, j]), b.g.get(&[i, j]));
                    assert!((a - c).abs() < 1e-9 * a.abs().max(c.abs()).max(1.0));
                    for k in 0..3 {
                        let (a, c) = (
                            bl.cartan.get(&[i, j, k]),
                            b.cartan.get(&[i, j, k]) / lambda,
                        );
                        assert!((a - c).abs() < 1e-9 * a.abs().max(c.abs()).max(1.0));
                    }
                }
            }
        }
    }
}

//! Spray, nonlinear connection, Berwald and Cartan connections, horizontal
//! and vertical covariant derivatives, Landsberg and T tensors.
//!
//! Spray convention:
//!
//! ```text
//! S_l  = ¼ (y^k ∂_k ∂̇_l Φ − ∂_l Φ)        (spray covector, symbolic)
//! G^i  = g^{il} S_l
//! N^i_j   = ∂̇_j G^i            G^i_jh  = ∂̇_h N^i_j       G^i_jhm = ∂̇_m G^i_jh
//! δ_k     = ∂_k − N^r_k ∂̇_r
//! Γ^i_jk  = ½ g^{ir} (δ_j g_kr + δ_k g_jr − δ_r g_jk)
//! L_ijk   = ½ F l_h G^h_ijk
//! T_hijk  = F C_hij|ᵥk + C_hij l_k + C_hik l_j + C_hjk l_i + C_ijk l_h
//! ```
//!
//! The inverse metric is never inverted symbolically; y-derivatives of
//! g^{-1} come from the exact product-rule recursion ∂̇W = −W (∂̇g) W with
//! the symbolic tables supplying ∂̇g, ∂̇²g, ∂̇³g.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{add, differentiate, mul, sub, ScalarExpr, Var};
use crate::fundamental::{FundamentalBundle, MetricEngine};
use crate::metric::{Bindings, MetricSpec, VectorFieldSpec};
use crate::tensor::{sorted_multi_indices, Slot, Tensor};

/// Spray, connections and derived tensors at one point.
#[derive(Debug, Clone)]
pub struct ConnectionBundle {
    pub fundamental: FundamentalBundle,
    /// Spray coefficients G^i.
    pub spray: Tensor,
    /// Nonlinear connection N^i_j = ∂̇_j G^i.
    pub nonlinear: Tensor,
    /// Berwald connection coefficients G^i_jh = ∂̇_h N^i_j.
    pub berwald: Tensor,
    /// Berwald tensor G^i_jhm (vanishes iff the spray is quadratic in y).
    pub berwald_tensor: Tensor,
    /// Christoffel symbols Γ^i_jk with respect to δ.
    pub christoffel: Tensor,
    /// Landsberg tensor L_ijk.
    pub landsberg: Tensor,
    /// T tensor T_hijk.
    pub t_tensor: Tensor,
    /// Trace T_ij = T_ijhk g^{hk}.
    pub t_trace: Tensor,
}

/// Connection data without the T/Landsberg layer; what covariant
/// derivatives need.
#[derive(Debug, Clone)]
pub(crate) struct ConnectionCore {
    pub fundamental: FundamentalBundle,
    pub spray: Tensor,
    pub nonlinear: Tensor,
    pub berwald: Tensor,
    pub berwald_tensor: Tensor,
    pub christoffel: Tensor,
}

/// Symmetric table of per-l vectors keyed by a sorted multi-index.
struct SymVecTable {
    map: BTreeMap<Vec<usize>, Vec<f64>>,
}

impl SymVecTable {
    fn get(&self, idx: &[usize]) -> &[f64] {
        let mut key = idx.to_vec();
        key.sort_unstable();
        &self.map[&key]
    }
}

impl MetricEngine {
    /// Spray covector expressions and their y-derivatives up to order 3,
    /// built once per spec and cached read-only.
    fn spray_tables(&self) -> &Vec<BTreeMap<Vec<usize>, ScalarExpr>> {
        self.spray_cov.get_or_init(|| {
            let n = self.dim();
            let mut per_l = Vec::with_capacity(n);
            for l in 0..n {
                // S_l = ¼ (Σ_k y^k ∂_k∂̇_l Φ − ∂_l Φ)
                let mut acc = ScalarExpr::Const(0.0);
                for k in 0..n {
                    let dk_dl = self.dxdy_src(k, &[l]);
                    acc = add(acc, mul(ScalarExpr::Var(Var::y(k)), dk_dl));
                }
                let s_l = mul(ScalarExpr::Const(0.25), sub(acc, self.dxdy_src(l, &[])));
                let mut map: BTreeMap<Vec<usize>, ScalarExpr> = BTreeMap::new();
                map.insert(Vec::new(), s_l.clone());
                let mut prev: BTreeMap<Vec<usize>, ScalarExpr> = map.clone();
                for order in 1..=3usize {
                    let mut cur = BTreeMap::new();
                    for key in sorted_multi_indices(n, order) {
                        let parent = &prev[&key[..order - 1].to_vec()];
                        cur.insert(key.clone(), differentiate(parent, Var::y(key[order - 1])));
                    }
                    for (k, v) in &cur {
                        map.insert(k.clone(), v.clone());
                    }
                    prev = cur;
                }
                per_l.push(map);
            }
            per_l
        })
    }

    pub(crate) fn connection_core(&self, p: &Bindings) -> Result<ConnectionCore> {
        let n = self.dim();
        let fb = self.fundamental_bundle(p)?;
        if !fb.nondegenerate {
            return Err(Error::DegenerateMetric { det: fb.det_g });
        }
        let w = fb.g_inv()?.to_matrix()?;

        // ∂̇g, ∂̇²g, ∂̇³g from the symbolic tables (g = ½ ∂̇²Φ)
        let d3 = self.eval_dy_table(p, 3)?;
        let d4 = self.eval_dy_table(p, 4)?;
        let d5 = self.eval_dy_table(p, 5)?;
        let a1 = |k: usize| -> DMatrix<f64> {
            DMatrix::from_fn(n, n, |i, j| 0.5 * d3.get(&[i, j, k]))
        };
        let a2 = |h: usize, k: usize| -> DMatrix<f64> {
            DMatrix::from_fn(n, n, |i, j| 0.5 * d4.get(&[i, j, h, k]))
        };
        let a3 = |m: usize, h: usize, k: usize| -> DMatrix<f64> {
            DMatrix::from_fn(n, n, |i, j| 0.5 * d5.get(&[i, j, m, h, k]))
        };

        // derivatives of the inverse metric
        let w1: Vec<DMatrix<f64>> = (0..n).map(|k| -(&w * a1(k) * &w)).collect();
        let mut w2: Vec<Vec<DMatrix<f64>>> = vec![vec![DMatrix::zeros(n, n); n]; n];
        for h in 0..n {
            for k in h..n {
                let m = -(&w1[h] * a1(k) * &w + &w * a2(h, k) * &w + &w * a1(k) * &w1[h]);
                w2[h][k] = m.clone();
                w2[k][h] = m;
            }
        }
        let mut w3: Vec<Vec<Vec<DMatrix<f64>>>> =
            vec![vec![vec![DMatrix::zeros(n, n); n]; n]; n];
        for key in sorted_multi_indices(n, 3) {
            let (m, h, k) = (key[0], key[1], key[2]);
            let v = -(&w2[m][h] * a1(k) * &w
                + &w1[h] * a2(m, k) * &w
                + &w1[h] * a1(k) * &w1[m]
                + &w1[m] * a2(h, k) * &w
                + &w * a3(m, h, k) * &w
                + &w * a2(h, k) * &w1[m]
                + &w1[m] * a1(k) * &w1[h]
                + &w * a2(m, k) * &w1[h]
                + &w * a1(k) * &w2[m][h]);
            // W3 is symmetric in (m, h, k); fill all permutations
            for perm in [
                [m, h, k],
                [m, k, h],
                [h, m, k],
                [h, k, m],
                [k, m, h],
                [k, h, m],
            ] {
                w3[perm[0]][perm[1]][perm[2]] = v.clone();
            }
        }

        // spray covector values and y-derivatives
        let tables = self.spray_tables();
        let eval_s = |key: &[usize]| -> Result<Vec<f64>> {
            let mut sorted = key.to_vec();
            sorted.sort_unstable();
            (0..n).map(|l| p.eval(&tables[l][&sorted])).collect()
        };
        let s0 = eval_s(&[])?;
        let mut s1_map = BTreeMap::new();
        for key in sorted_multi_indices(n, 1) {
            let v = eval_s(&key)?;
            s1_map.insert(key, v);
        }
        let s1 = SymVecTable { map: s1_map };
        let mut s2_map = BTreeMap::new();
        for key in sorted_multi_indices(n, 2) {
            let v = eval_s(&key)?;
            s2_map.insert(key, v);
        }
        let s2 = SymVecTable { map: s2_map };
        let mut s3_map = BTreeMap::new();
        for key in sorted_multi_indices(n, 3) {
            let v = eval_s(&key)?;
            s3_map.insert(key, v);
        }
        let s3 = SymVecTable { map: s3_map };

        let dot = |m: &DMatrix<f64>, v: &[f64], i: usize| -> f64 {
            (0..n).map(|l| m[(i, l)] * v[l]).sum()
        };

        let spray = Tensor::from_fn(n, &[Slot::Up], |idx| dot(&w, &s0, idx[0]));
        let nonlinear = Tensor::from_fn(n, &[Slot::Up, Slot::Down], |idx| {
            let (i, j) = (idx[0], idx[1]);
            dot(&w1[j], &s0, i) + dot(&w, s1.get(&[j]), i)
        });
        let berwald = Tensor::from_fn(n, &[Slot::Up, Slot::Down, Slot::Down], |idx| {
            let (i, j, h) = (idx[0], idx[1], idx[2]);
            dot(&w2[j][h], &s0, i)
                + dot(&w1[j], s1.get(&[h]), i)
                + dot(&w1[h], s1.get(&[j]), i)
                + dot(&w, s2.get(&[j, h]), i)
        });
        let berwald_tensor =
            Tensor::from_fn(n, &[Slot::Up, Slot::Down, Slot::Down, Slot::Down], |idx| {
                let (i, j, h, m) = (idx[0], idx[1], idx[2], idx[3]);
                dot(&w3[j][h][m], &s0, i)
                    + dot(&w2[j][h], s1.get(&[m]), i)
                    + dot(&w2[j][m], s1.get(&[h]), i)
                    + dot(&w2[h][m], s1.get(&[j]), i)
                    + dot(&w1[j], s2.get(&[h, m]), i)
                    + dot(&w1[h], s2.get(&[j, m]), i)
                    + dot(&w1[m], s2.get(&[j, h]), i)
                    + dot(&w, s3.get(&[j, h, m]), i)
            });

        // δ_j g_kr = ∂_j g_kr − N^m_j ∂̇_m g_kr,   ∂̇_m g_kr = 2 C_krm
        let mut dg_dx = Vec::with_capacity(n);
        for j in 0..n {
            dg_dx.push(self.eval_dxdy_table(p, j, 2)?);
        }
        let cartan = &fb.cartan;
        let delta_g = |j: usize, k: usize, r: usize| -> f64 {
            let mut v = 0.5 * dg_dx[j].get(&[k, r]);
            for m in 0..n {
                v -= nonlinear.get(&[m, j]) * 2.0 * cartan.get(&[k, r, m]);
            }
            v
        };
        let christoffel = Tensor::from_fn(n, &[Slot::Up, Slot::Down, Slot::Down], |idx| {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            let mut acc = 0.0;
            for r in 0..n {
                acc += w[(i, r)] * (delta_g(j, k, r) + delta_g(k, j, r) - delta_g(r, j, k));
            }
            0.5 * acc
        });

        Ok(ConnectionCore {
            fundamental: fb,
            spray,
            nonlinear,
            berwald,
            berwald_tensor,
            christoffel,
        })
    }

    /// Full connection bundle at `p`.
    pub fn connection_bundle(&self, p: &Bindings) -> Result<ConnectionBundle> {
        let core = self.connection_core(p)?;
        let n = self.dim();
        let fb = &core.fundamental;

        // L_ijk = ½ F l_h G^h_ijk
        let landsberg = Tensor::from_fn(n, &[Slot::Down; 3], |idx| {
            let mut acc = 0.0;
            for h in 0..n {
                acc += fb.l.get(&[h]) * core.berwald_tensor.get(&[h, idx[0], idx[1], idx[2]]);
            }
            0.5 * fb.f * acc
        });

        let (t_tensor, t_trace) = self.t_tensor_from(p, fb)?;

        Ok(ConnectionBundle {
            spray: core.spray,
            nonlinear: core.nonlinear,
            berwald: core.berwald,
            berwald_tensor: core.berwald_tensor,
            christoffel: core.christoffel,
            landsberg,
            t_tensor,
            t_trace,
            fundamental: core.fundamental,
        })
    }

    /// T tensor and its g-trace; needs only the fundamental layer.
    pub fn t_tensor(&self, p: &Bindings) -> Result<(Tensor, Tensor)> {
        let fb = self.fundamental_bundle(p)?;
        self.t_tensor_from(p, &fb)
    }

    fn t_tensor_from(&self, p: &Bindings, fb: &FundamentalBundle) -> Result<(Tensor, Tensor)> {
        let n = self.dim();
        let c_mixed = fb.c_mixed()?;
        let g_inv = fb.g_inv()?;
        let cartan = &fb.cartan;
        let d4 = self.eval_dy_table(p, 4)?;

        // vertical covariant derivative of the Cartan tensor:
        // C_hij|k = ∂̇_k C_hij − C_mij C^m_hk − C_hmj C^m_ik − C_him C^m_jk
        let cv = Tensor::from_fn(n, &[Slot::Down; 4], |idx| {
            let (h, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let mut v = 0.25 * d4.get(&[h, i, j, k]);
            for m in 0..n {
                v -= cartan.get(&[m, i, j]) * c_mixed.get(&[m, h, k]);
                v -= cartan.get(&[h, m, j]) * c_mixed.get(&[m, i, k]);
                v -= cartan.get(&[h, i, m]) * c_mixed.get(&[m, j, k]);
            }
            v
        });

        let l = &fb.l;
        let t_tensor = Tensor::from_fn(n, &[Slot::Down; 4], |idx| {
            let (h, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            fb.f * cv.get(&[h, i, j, k])
                + cartan.get(&[h, i, j]) * l.get(&[k])
                + cartan.get(&[h, i, k]) * l.get(&[j])
                + cartan.get(&[h, j, k]) * l.get(&[i])
                + cartan.get(&[i, j, k]) * l.get(&[h])
        });
        let t_trace = Tensor::from_fn(n, &[Slot::Down, Slot::Down], |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut acc = 0.0;
            for h in 0..n {
                for k in 0..n {
                    acc += t_tensor.get(&[i, j, h, k]) * g_inv.get(&[h, k]);
                }
            }
            acc
        });
        Ok((t_tensor, t_trace))
    }

    /// Horizontal covariant derivative of a tensor field at `p`:
    /// base term δ_k X = ∂_k X − N^r_k ∂̇_r X, then one Γ-correction per
    /// index (+ for upper, − for lower). The derivative index is appended
    /// as a trailing lower slot.
    pub fn h_cov_deriv(&self, field: &dyn TensorField, p: &Bindings) -> Result<Tensor> {
        let core = self.connection_core(p)?;
        self.h_cov_deriv_with(&core, field, p)
    }

    pub(crate) fn h_cov_deriv_with(
        &self,
        core: &ConnectionCore,
        field: &dyn TensorField,
        p: &Bindings,
    ) -> Result<Tensor> {
        let n = self.dim();
        let jet = field.jet(self, p)?;
        check_valence(&jet)?;
        let mut variance = jet.value.variance.clone();
        variance.push(Slot::Down);
        let gamma = &core.christoffel;
        let nconn = &core.nonlinear;
        let out = Tensor::from_fn(n, &variance, |full| {
            let (idx, k) = full.split_at(full.len() - 1);
            let k = k[0];
            // δ_k X
            let mut v = jet.dx[k].get(idx);
            for r in 0..n {
                v -= nconn.get(&[r, k]) * jet.dy[r].get(idx);
            }
            // Γ corrections
            for (slot, var) in jet.value.variance.iter().enumerate() {
                let a = idx[slot];
                for m in 0..n {
                    let mut swapped = idx.to_vec();
                    swapped[slot] = m;
                    let x = jet.value.get(&swapped);
                    match var {
                        Slot::Up => v += x * gamma.get(&[a, m, k]),
                        Slot::Down => v -= x * gamma.get(&[m, a, k]),
                    }
                }
            }
            v
        });
        Ok(out)
    }

    /// Vertical covariant derivative: base term ∂̇_k X, one C-correction per
    /// index (+C^a_mk for upper, −C^m_ak for lower).
    pub fn v_cov_deriv(&self, field: &dyn TensorField, p: &Bindings) -> Result<Tensor> {
        let n = self.dim();
        let fb = self.fundamental_bundle(p)?;
        let c_mixed = fb.c_mixed()?;
        let jet = field.jet(self, p)?;
        check_valence(&jet)?;
        let mut variance = jet.value.variance.clone();
        variance.push(Slot::Down);
        let out = Tensor::from_fn(n, &variance, |full| {
            let (idx, k) = full.split_at(full.len() - 1);
            let k = k[0];
            let mut v = jet.dy[k].get(idx);
            for (slot, var) in jet.value.variance.iter().enumerate() {
                let a = idx[slot];
                for m in 0..n {
                    let mut swapped = idx.to_vec();
                    swapped[slot] = m;
                    let x = jet.value.get(&swapped);
                    match var {
                        Slot::Up => v += x * c_mixed.get(&[a, m, k]),
                        Slot::Down => v -= x * c_mixed.get(&[m, a, k]),
                    }
                }
            }
            v
        });
        Ok(out)
    }

    /// B^i_{|j} for an x-only vector field (∂̇B = 0, so δ_j B = ∂_j B):
    /// B^i_{|j} = ∂_j B^i + B^m Γ^i_mj.
    pub fn field_h_deriv(&self, field: &VectorFieldSpec, p: &Bindings) -> Result<Tensor> {
        let core = self.connection_core(p)?;
        self.field_h_deriv_with(&core, field, p)
    }

    pub(crate) fn field_h_deriv_with(
        &self,
        core: &ConnectionCore,
        field: &VectorFieldSpec,
        p: &Bindings,
    ) -> Result<Tensor> {
        let n = self.dim();
        let values = field.eval(p)?;
        let jac = field.jacobian(p)?;
        let gamma = &core.christoffel;
        Ok(Tensor::from_fn(n, &[Slot::Up, Slot::Down], |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut v = jac[i][j];
            for m in 0..n {
                v += values[m] * gamma.get(&[i, m, j]);
            }
            v
        }))
    }
}

fn check_valence(jet: &FieldJet) -> Result<()> {
    let rank = jet.value.rank();
    if rank == 0 || rank > 4 {
        return Err(Error::UnsupportedValence(format!("rank {}", rank)));
    }
    if jet.dx.len() != jet.value.dim || jet.dy.len() != jet.value.dim {
        return Err(Error::UnsupportedValence(
            "field jet partials have wrong arity".into(),
        ));
    }
    Ok(())
}

/// Value and first partials of a tensor field at a point.
pub struct FieldJet {
    pub value: Tensor,
    /// `dx[k]` = ∂_k of every component.
    pub dx: Vec<Tensor>,
    /// `dy[k]` = ∂̇_k of every component.
    pub dy: Vec<Tensor>,
}

/// A tensor-valued map over (x, y) that can supply its value and first
/// partials at a point, symbolically or through a numeric callback.
pub trait TensorField {
    fn jet(&self, engine: &MetricEngine, p: &Bindings) -> Result<FieldJet>;
}

/// x-only vector field from expressions: exact symbolic ∂_k, vanishing ∂̇_k.
pub struct ExprVectorField<'a> {
    pub field: &'a VectorFieldSpec,
}

impl TensorField for ExprVectorField<'_> {
    fn jet(&self, engine: &MetricEngine, p: &Bindings) -> Result<FieldJet> {
        let n = engine.dim();
        let values = self.field.eval(p)?;
        let value = Tensor::from_fn(n, &[Slot::Up], |idx| values[idx[0]]);
        let jac = self.field.jacobian(p)?;
        let dx = (0..n)
            .map(|k| Tensor::from_fn(n, &[Slot::Up], |idx| jac[idx[0]][k]))
            .collect();
        let dy = (0..n).map(|_| Tensor::zeros(n, &[Slot::Up])).collect();
        Ok(FieldJet { value, dx, dy })
    }
}

/// The metric tensor g_ij as a field: ∂_k g symbolic, ∂̇_k g = 2C.
pub struct MetricTensorField;

impl TensorField for MetricTensorField {
    fn jet(&self, engine: &MetricEngine, p: &Bindings) -> Result<FieldJet> {
        let n = engine.dim();
        let fb = engine.fundamental_bundle(p)?;
        let mut dx = Vec::with_capacity(n);
        for k in 0..n {
            let t = engine.eval_dxdy_table(p, k, 2)?;
            dx.push(Tensor::from_fn(n, &[Slot::Down, Slot::Down], |idx| {
                0.5 * t.get(idx)
            }));
        }
        let dy = (0..n)
            .map(|k| {
                Tensor::from_fn(n, &[Slot::Down, Slot::Down], |idx| {
                    2.0 * fb.cartan.get(&[idx[0], idx[1], k])
                })
            })
            .collect();
        Ok(FieldJet {
            value: fb.g,
            dx,
            dy,
        })
    }
}

/// The Cartan tensor C_ijk as a (0,3) field with symbolic partials.
pub struct CartanTensorField;

impl TensorField for CartanTensorField {
    fn jet(&self, engine: &MetricEngine, p: &Bindings) -> Result<FieldJet> {
        let n = engine.dim();
        let fb = engine.fundamental_bundle(p)?;
        let mut dx = Vec::with_capacity(n);
        for k in 0..n {
            let t = engine.eval_dxdy_table(p, k, 3)?;
            dx.push(Tensor::from_fn(n, &[Slot::Down; 3], |idx| 0.25 * t.get(idx)));
        }
        let d4 = engine.eval_dy_table(p, 4)?;
        let dy = (0..n)
            .map(|k| {
                Tensor::from_fn(n, &[Slot::Down; 3], |idx| {
                    0.25 * d4.get(&[idx[0], idx[1], idx[2], k])
                })
            })
            .collect();
        Ok(FieldJet {
            value: fb.cartan,
            dx,
            dy,
        })
    }
}

/// The mixed Cartan tensor C^i_jk = g^{ir} C_rjk as a (1,2) field.
/// Partials use ∂(g^{-1}) = −g^{-1} (∂g) g^{-1} plus the symbolic ∂C.
pub struct MixedCartanField;

impl TensorField for MixedCartanField {
    fn jet(&self, engine: &MetricEngine, p: &Bindings) -> Result<FieldJet> {
        let n = engine.dim();
        let fb = engine.fundamental_bundle(p)?;
        let w = fb.g_inv()?.to_matrix()?;
        let cartan = &fb.cartan;
        let value = fb.c_mixed()?.clone();

        let d4 = engine.eval_dy_table(p, 4)?;
        let mut dy = Vec::with_capacity(n);
        for k in 0..n {
            // ∂̇_k W = −W (2C_k) W
            let ck = DMatrix::from_fn(n, n, |i, j| 2.0 * cartan.get(&[i, j, k]));
            let wk = -(&w * ck * &w);
            dy.push(Tensor::from_fn(
                n,
                &[Slot::Up, Slot::Down, Slot::Down],
                |idx| {
                    let (i, j, h) = (idx[0], idx[1], idx[2]);
                    let mut v = 0.0;
                    for r in 0..n {
                        v += wk[(i, r)] * cartan.get(&[r, j, h]);
                        v += w[(i, r)] * 0.25 * d4.get(&[r, j, h, k]);
                    }
                    v
                },
            ));
        }
        let mut dx = Vec::with_capacity(n);
        for k in 0..n {
            let dg = engine.eval_dxdy_table(p, k, 2)?;
            let dc = engine.eval_dxdy_table(p, k, 3)?;
            let dgm = DMatrix::from_fn(n, n, |i, j| 0.5 * dg.get(&[i, j]));
            let wk = -(&w * dgm * &w);
            dx.push(Tensor::from_fn(
                n,
                &[Slot::Up, Slot::Down, Slot::Down],
                |idx| {
                    let (i, j, h) = (idx[0], idx[1], idx[2]);
                    let mut v = 0.0;
                    for r in 0..n {
                        v += wk[(i, r)] * cartan.get(&[r, j, h]);
                        v += w[(i, r)] * 0.25 * dc.get(&[r, j, h]);
                    }
                    v
                },
            ));
        }
        Ok(FieldJet { value, dx, dy })
    }
}

/// Numeric-only field: value from a callback, partials by central
/// differences with step 1e−5·(1+|coordinate|).
pub struct CallbackField<F>
where
    F: Fn(&Bindings) -> Result<Tensor>,
{
    pub f: F,
}

impl<F> TensorField for CallbackField<F>
where
    F: Fn(&Bindings) -> Result<Tensor>,
{
    fn jet(&self, engine: &MetricEngine, p: &Bindings) -> Result<FieldJet> {
        let n = engine.dim();
        let value = (self.f)(p)?;
        let step = |v: f64| 1e-5 * (1.0 + v.abs());
        let diff = |tp: Tensor, tm: Tensor, h: f64| Tensor {
            dim: value.dim,
            variance: value.variance.clone(),
            data: tp
                .data
                .iter()
                .zip(&tm.data)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect(),
        };
        let mut dx = Vec::with_capacity(n);
        for k in 0..n {
            let h = step(p.x[k]);
            let mut xp = p.clone();
            xp.x[k] += h;
            let mut xm = p.clone();
            xm.x[k] -= h;
            dx.push(diff((self.f)(&xp)?, (self.f)(&xm)?, h));
        }
        let mut dy = Vec::with_capacity(n);
        for k in 0..n {
            let h = step(p.y[k]);
            let mut yp = p.clone();
            yp.y[k] += h;
            let mut ym = p.clone();
            ym.y[k] -= h;
            dy.push(diff((self.f)(&yp)?, (self.f)(&ym)?, h));
        }
        Ok(FieldJet { value, dx, dy })
    }
}

/// Operation-level wrapper; builds a throwaway engine.
pub fn connection_bundle(spec: &MetricSpec, p: &Bindings) -> Result<ConnectionBundle> {
    MetricEngine::new(spec.clone()).connection_bundle(p)
}

//! Central finite differences. Used as the independent oracle in tests and
//! as the fallback derivative for callback-valued tensor fields.

/// First derivative, 3-point central stencil (order 2).
pub fn central_d1<F>(f: F, x: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// First derivative, 7-point central stencil (order 6):
/// f' ≈ [−f(x−3h) + 9f(x−2h) − 45f(x−h) + 45f(x+h) − 9f(x+2h) + f(x+3h)] / 60h.
pub fn central_d1_o6<F>(f: F, x: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (-f(x - 3.0 * h) + 9.0 * f(x - 2.0 * h) - 45.0 * f(x - h) + 45.0 * f(x + h)
        - 9.0 * f(x + 2.0 * h)
        + f(x + 3.0 * h))
        / (60.0 * h)
}

/// Mixed partial of a multivariate function along `vars` (indices into the
/// argument vector, one differentiation per entry), nesting the order-6
/// stencil. Step per level: `h0 · (1 + |v|)`.
pub fn mixed_partial_o6<F>(f: &F, point: &[f64], vars: &[usize], h0: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    match vars.split_first() {
        None => f(point),
        Some((&idx, rest)) => {
            let h = h0 * (1.0 + point[idx].abs());
            let eval = |t: f64| {
                let mut p = point.to_vec();
                p[idx] = t;
                mixed_partial_o6(f, &p, rest, h0)
            };
            central_d1_o6(eval, point[idx], h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_o6_polynomial_exactness() {
        // order-6 stencil is exact on degree ≤ 6 polynomials up to roundoff
        let f = |x: f64| 3.0 * x.powi(5) - 2.0 * x.powi(3) + x;
        let df = |x: f64| 15.0 * x.powi(4) - 6.0 * x.powi(2) + 1.0;
        for &x in &[0.3, 1.1, -0.7] {
            assert!((central_d1_o6(f, x, 0.05) - df(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_partial_matches_closed_form() {
        // f(u,v) = u^2 v^3, ∂u∂v∂v f = 12 u v
        let f = |p: &[f64]| p[0] * p[0] * p[1].powi(3);
        let got = mixed_partial_o6(&f, &[1.3, 0.8], &[0, 1, 1], 1e-2);
        assert!((got - 12.0 * 1.3 * 0.8).abs() < 1e-6);
    }
}

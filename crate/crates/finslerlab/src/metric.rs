//! Metric specifications and point bindings.
//!
//! A [`MetricSpec`] carries the squared Finsler norm as its `energy`
//! expression: the metric tensor is half the y-Hessian of that expression,
//! so `energy = y1^2 + y2^2` is the Euclidean plane with g = identity. The
//! conventional energy function E is half the stored expression.

use crate::error::{Error, Result};
use crate::expr::{
    eval_bool, evaluate, parse_expr_str, parse_metric_source, BoolExpr, EvalVars, ParseContext,
    ScalarExpr, VarClass,
};

/// A parsed metric definition: dimension, squared-norm expression, named
/// parameter bindings and an optional conic-domain predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub dim: usize,
    pub energy: ScalarExpr,
    pub params: Vec<(String, f64)>,
    pub domain: Option<BoolExpr>,
    pub label: String,
}

impl MetricSpec {
    pub fn new(
        dim: usize,
        energy: ScalarExpr,
        params: Vec<(String, f64)>,
        domain: Option<BoolExpr>,
        label: String,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Spec("dimension must be positive".into()));
        }
        let (mx, my) = energy.max_indices();
        if mx > dim || my > dim {
            return Err(Error::Spec(format!(
                "energy references variable index {} beyond dim={}",
                mx.max(my),
                dim
            )));
        }
        Ok(MetricSpec {
            dim,
            energy,
            params,
            domain,
            label,
        })
    }

    /// Parse a metric definition from DSL source text.
    pub fn parse(source: &str) -> Result<Self> {
        parse_metric_source(source)
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn param_values(&self) -> Vec<f64> {
        self.params.iter().map(|(_, v)| *v).collect()
    }

    pub fn parse_context(&self) -> ParseContext {
        ParseContext::new(self.dim, &self.param_names())
    }

    /// Override a named parameter value.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        match self.params.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::InvalidOverride(format!(
                "metric `{}` has no parameter `{}`",
                self.label, name
            ))),
        }
    }

    /// Serialize back to DSL text. Reparsing the output yields a
    /// structurally identical spec.
    pub fn to_source(&self) -> String {
        let names = self.param_names();
        let mut out = String::new();
        out.push_str(&format!("dim = {}\n", self.dim));
        for (name, value) in &self.params {
            out.push_str(&format!("param {} = {:?}\n", name, value));
        }
        out.push_str(&format!("energy = {}\n", self.energy.to_source(&names)));
        if let Some(domain) = &self.domain {
            out.push_str(&format!("domain = {}\n", domain.to_source(&names)));
        }
        if !self.label.is_empty() {
            out.push_str(&format!("label = \"{}\"\n", self.label));
        }
        out
    }

    /// Parse an expression in this spec's identifier scope.
    pub fn parse_expr(&self, src: &str) -> Result<ScalarExpr> {
        parse_expr_str(src, &self.parse_context())
    }

    /// Is the point accepted by the domain predicate (true when no predicate)?
    /// Evaluation failures fail closed.
    pub fn domain_accepts(&self, b: &Bindings) -> bool {
        match &self.domain {
            None => true,
            Some(pred) => eval_bool(pred, b.vars()).unwrap_or(false),
        }
    }
}

/// A concrete evaluation point: base coordinates, tangent vector and the
/// spec's parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Bindings {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub params: Vec<f64>,
}

impl Bindings {
    /// Bind a point for `spec`, checking vector lengths.
    pub fn for_spec(spec: &MetricSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != spec.dim || y.len() != spec.dim {
            return Err(Error::Spec(format!(
                "point has lengths x={}, y={} but dim={}",
                x.len(),
                y.len(),
                spec.dim
            )));
        }
        Ok(Bindings {
            x,
            y,
            params: spec.param_values(),
        })
    }

    pub fn vars(&self) -> EvalVars<'_> {
        EvalVars {
            x: &self.x,
            y: &self.y,
            params: &self.params,
        }
    }

    pub fn y_is_zero(&self) -> bool {
        self.y.iter().all(|v| *v == 0.0)
    }

    /// Same x with a different tangent vector.
    pub fn with_y(&self, y: Vec<f64>) -> Self {
        Bindings {
            x: self.x.clone(),
            y,
            params: self.params.clone(),
        }
    }

    /// Evaluate an arbitrary expression at this point.
    pub fn eval(&self, e: &ScalarExpr) -> Result<f64> {
        evaluate(e, self.vars())
    }
}

/// Parse a metric definition (operation-level entry point).
pub fn parse_metric(source: &str) -> Result<MetricSpec> {
    MetricSpec::parse(source)
}

/// Numeric check that the energy expression is positively 2-homogeneous in y
/// at the given in-domain points: |Φ(x,λy) − λ²Φ(x,y)| ≤ tol·scale for
/// λ ∈ {0.5, 2}.
pub fn check_homogeneity(spec: &MetricSpec, points: &[Bindings], tol: f64) -> Result<()> {
    for p in points {
        let phi = p.eval(&spec.energy)?;
        for lambda in [0.5, 2.0] {
            let scaled: Vec<f64> = p.y.iter().map(|v| v * lambda).collect();
            let q = p.with_y(scaled);
            let phi_l = q.eval(&spec.energy)?;
            let want = lambda * lambda * phi;
            let scale = phi.abs().max(phi_l.abs()).max(1.0);
            if (phi_l - want).abs() > tol * scale {
                return Err(Error::Spec(format!(
                    "energy is not positively 2-homogeneous in y: Φ(λy)={:e} vs λ²Φ={:e} at λ={}",
                    phi_l, want, lambda
                )));
            }
        }
    }
    Ok(())
}

/// A vector field B^i(x) given by component expressions in x and parameters
/// only, used by the field-condition checks.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldSpec {
    pub components: Vec<ScalarExpr>,
    pub kind: FieldKind,
}

/// Field kind tag; gradient kinds carry the scalar potential they were
/// derived from.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// Generic B^i(x).
    Generic,
    /// f_i = ∂f/∂x^i raised by the metric; carries f.
    Gradient { potential: ScalarExpr },
    /// σ_h = ∂σ/∂x^h from a conformal factor; carries σ.
    ConformalGradient { potential: ScalarExpr },
    /// Candidate for the full concurrent condition.
    Concurrent,
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Generic => "generic",
            FieldKind::Gradient { .. } => "gradient",
            FieldKind::ConformalGradient { .. } => "conformal-gradient",
            FieldKind::Concurrent => "concurrent",
        }
    }
}

impl VectorFieldSpec {
    /// Build from per-component expressions; rejects any reference to a
    /// y-variable (checked structurally).
    pub fn new(spec: &MetricSpec, components: Vec<ScalarExpr>, kind: FieldKind) -> Result<Self> {
        if components.len() != spec.dim {
            return Err(Error::Spec(format!(
                "field has {} components but dim={}",
                components.len(),
                spec.dim
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.references_class(VarClass::Y) {
                return Err(Error::Spec(format!(
                    "field component B{} references a tangent variable; components must depend on x only",
                    i + 1
                )));
            }
        }
        Ok(VectorFieldSpec { components, kind })
    }

    /// Parse components from `;`-separated expression sources.
    pub fn parse(spec: &MetricSpec, src: &str, kind: FieldKind) -> Result<Self> {
        let comps = src
            .split(';')
            .map(|s| spec.parse_expr(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        VectorFieldSpec::new(spec, comps, kind)
    }

    /// Evaluate components at x.
    pub fn eval(&self, p: &Bindings) -> Result<Vec<f64>> {
        self.components.iter().map(|c| p.eval(c)).collect()
    }

    /// Symbolic ∂B^i/∂x^j evaluated at x, returned as row-major dim×dim
    /// (entry `[i][j]` = ∂_j B^i).
    pub fn jacobian(&self, p: &Bindings) -> Result<Vec<Vec<f64>>> {
        use crate::expr::differentiate;
        use crate::expr::Var;
        let n = self.components.len();
        let mut out = vec![vec![0.0; n]; n];
        for (i, c) in self.components.iter().enumerate() {
            for j in 0..n {
                let d = differentiate(c, Var::x(j));
                out[i][j] = p.eval(&d)?;
            }
        }
        Ok(out)
    }

    pub fn to_source(&self, spec: &MetricSpec) -> String {
        let names = spec.param_names();
        self.components
            .iter()
            .map(|c| c.to_source(&names))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

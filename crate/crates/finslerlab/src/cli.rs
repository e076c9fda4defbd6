//! Command-line entry point: metric loading, command dispatch, report
//! serialization.
//!
//! Exit codes: 0 all checks passed, 1 check failures or computational
//! errors, 2 usage or parse errors.

use std::collections::BTreeMap;

use crate::catalog::{self, VerificationReport};
use crate::classify::{classify_metric, Sampler};
use crate::error::{Error, Result};
use crate::fundamental::MetricEngine;
use crate::json::Json;
use crate::metric::{FieldKind, MetricSpec, VectorFieldSpec};
use crate::scfield::{check_condition, sc_detect, Condition, SCDetectOptions, SCFieldReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const USAGE: &str = "\
finslerlab <command> [flags]

commands:
  eval          evaluate tensors at explicit points
  classify      sample points and report special-class verdicts
  scfind        detect semi-concurrent directions by null-space extraction
  check         test a supplied field against one of the sc|c|f|cc conditions
  verify        run a catalog example against its closed-form expectations
  catalog-list  list built-in metrics

flags:
  --metric PATH|NAME   metric definition file or catalog name
  --example NAME       catalog name (verify)
  --point \"x=a1,..,an;y=b1,..,bn\"   evaluation point (repeatable)
  --x a1,..,an         base point for scfind (repeatable)
  --tensor NAME        eval output: norm|energy|g|g_inv|l|h|cartan|c_mixed|
                       c_vec|spray|nonlinear|berwald|berwald_tensor|
                       christoffel|landsberg|t4|t2|fundamental|all
  --field \"B1;B2;..\"   vector field components (x-expressions)
  --potential EXPR     scalar potential for kinds f and cc
  --kind sc|c|f|cc     condition for `check`
  --param NAME=VALUE   catalog parameter override (repeatable)
  --xsamples N         sampled base points (default 20; scfind 5)
  --ysamples N         tangent samples per base point (default 40)
  --seed N             sampler seed (default 0)
  --tol FLOAT          tolerance override
  --format json|text   output format (default json)
  --out PATH           write the report to a file instead of stdout

environment:
  FINSLERLAB_THREADS   caps worker threads for sampled computations
";

/// Parsed command-line configuration.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub command: String,
    pub metric: Option<String>,
    pub example: Option<String>,
    pub points: Vec<String>,
    pub xs: Vec<String>,
    pub tensor: Option<String>,
    pub field: Option<String>,
    pub potential: Option<String>,
    pub kind: Option<String>,
    pub params: Vec<(String, f64)>,
    pub xsamples: Option<usize>,
    pub ysamples: Option<usize>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub format: String,
    pub out: Option<String>,
}

fn usage_err(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn parse_args(argv: &[String]) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        format: "json".to_string(),
        seed: 0,
        ..RunConfig::default()
    };
    let mut it = argv.iter();
    cfg.command = it
        .next()
        .ok_or_else(|| usage_err("missing command"))?
        .clone();
    if !matches!(
        cfg.command.as_str(),
        "eval" | "classify" | "scfind" | "check" | "verify" | "catalog-list"
    ) {
        return Err(usage_err(format!("unknown command `{}`", cfg.command)));
    }
    while let Some(flag) = it.next() {
        let mut value = || -> Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| usage_err(format!("flag {} expects a value", flag)))
        };
        match flag.as_str() {
            "--metric" => cfg.metric = Some(value()?),
            "--example" => cfg.example = Some(value()?),
            "--point" => cfg.points.push(value()?),
            "--x" => cfg.xs.push(value()?),
            "--tensor" => cfg.tensor = Some(value()?),
            "--field" => cfg.field = Some(value()?),
            "--potential" => cfg.potential = Some(value()?),
            "--kind" => cfg.kind = Some(value()?),
            "--param" => {
                let v = value()?;
                let (name, val) = v
                    .split_once('=')
                    .ok_or_else(|| usage_err("--param expects NAME=VALUE"))?;
                let val: f64 = val
                    .parse()
                    .map_err(|_| usage_err(format!("bad numeric value in --param {}", v)))?;
                cfg.params.push((name.to_string(), val));
            }
            "--xsamples" => {
                cfg.xsamples = Some(
                    value()?
                        .parse()
                        .map_err(|_| usage_err("--xsamples expects an integer"))?,
                )
            }
            "--ysamples" => {
                cfg.ysamples = Some(
                    value()?
                        .parse()
                        .map_err(|_| usage_err("--ysamples expects an integer"))?,
                )
            }
            "--seed" => {
                cfg.seed = value()?
                    .parse()
                    .map_err(|_| usage_err("--seed expects an unsigned integer"))?
            }
            "--tol" => {
                cfg.tol = Some(
                    value()?
                        .parse()
                        .map_err(|_| usage_err("--tol expects a float"))?,
                )
            }
            "--format" => {
                let v = value()?;
                if v != "json" && v != "text" {
                    return Err(usage_err("--format expects json or text"));
                }
                cfg.format = v;
            }
            "--out" => cfg.out = Some(value()?),
            other => return Err(usage_err(format!("unknown flag `{}`", other))),
        }
    }
    Ok(cfg)
}

/// Load the metric source: a readable file path wins, then a catalog name.
fn load_metric(cfg: &RunConfig) -> Result<(MetricSpec, Option<catalog::ExpectedArtifacts>)> {
    let name = cfg
        .metric
        .as_ref()
        .ok_or_else(|| usage_err("--metric is required for this command"))?;
    if std::path::Path::new(name).is_file() {
        let src = std::fs::read_to_string(name)
            .map_err(|e| Error::Spec(format!("cannot read {}: {}", name, e)))?;
        let mut spec = MetricSpec::parse(&src)?;
        for (k, v) in &cfg.params {
            spec.set_param(k, *v)?;
        }
        if spec.label.is_empty() {
            spec.label = name.clone();
        }
        return Ok((spec, None));
    }
    let (spec, art) = catalog::builtin(name, &cfg.params)?;
    Ok((spec, Some(art)))
}

fn parse_point_flag(spec: &MetricSpec, src: &str) -> Result<crate::metric::Bindings> {
    let mut x: Option<Vec<f64>> = None;
    let mut y: Option<Vec<f64>> = None;
    for part in src.split(';') {
        let part = part.trim();
        let (key, list) = part
            .split_once('=')
            .ok_or_else(|| usage_err(format!("bad --point segment `{}`", part)))?;
        let values: Vec<f64> = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| usage_err(format!("bad number `{}` in --point", s)))
            })
            .collect::<Result<_>>()?;
        match key.trim() {
            "x" => x = Some(values),
            "y" => y = Some(values),
            other => return Err(usage_err(format!("bad --point key `{}`", other))),
        }
    }
    let x = x.ok_or_else(|| usage_err("--point is missing the x list"))?;
    let y = y.ok_or_else(|| usage_err("--point is missing the y list"))?;
    crate::metric::Bindings::for_spec(spec, x, y)
}

fn parse_x_flag(dim: usize, src: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = src
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage_err(format!("bad number `{}` in --x", s)))
        })
        .collect::<Result<_>>()?;
    if v.len() != dim {
        return Err(usage_err(format!(
            "--x has {} entries but dim = {}",
            v.len(),
            dim
        )));
    }
    Ok(v)
}

fn config_echo(cfg: &RunConfig) -> Json {
    let mut m = Json::obj();
    m.insert("command".into(), Json::Str(cfg.command.clone()));
    if let Some(v) = &cfg.metric {
        m.insert("metric".into(), Json::Str(v.clone()));
    }
    if let Some(v) = &cfg.example {
        m.insert("example".into(), Json::Str(v.clone()));
    }
    if !cfg.points.is_empty() {
        m.insert(
            "points".into(),
            Json::Arr(cfg.points.iter().map(|p| Json::Str(p.clone())).collect()),
        );
    }
    if !cfg.xs.is_empty() {
        m.insert(
            "x".into(),
            Json::Arr(cfg.xs.iter().map(|p| Json::Str(p.clone())).collect()),
        );
    }
    if let Some(v) = &cfg.tensor {
        m.insert("tensor".into(), Json::Str(v.clone()));
    }
    if let Some(v) = &cfg.field {
        m.insert("field".into(), Json::Str(v.clone()));
    }
    if let Some(v) = &cfg.potential {
        m.insert("potential".into(), Json::Str(v.clone()));
    }
    if let Some(v) = &cfg.kind {
        m.insert("kind".into(), Json::Str(v.clone()));
    }
    if !cfg.params.is_empty() {
        let mut pm = Json::obj();
        for (k, v) in &cfg.params {
            pm.insert(k.clone(), Json::Num(*v));
        }
        m.insert("param".into(), Json::Obj(pm));
    }
    if let Some(v) = cfg.xsamples {
        m.insert("xsamples".into(), Json::Int(v as i64));
    }
    if let Some(v) = cfg.ysamples {
        m.insert("ysamples".into(), Json::Int(v as i64));
    }
    m.insert("seed".into(), Json::Int(cfg.seed as i64));
    if let Some(v) = cfg.tol {
        m.insert("tol".into(), Json::Num(v));
    }
    m.insert("format".into(), Json::Str(cfg.format.clone()));
    Json::Obj(m)
}

struct CommandOutput {
    results: Json,
    verdicts: Json,
    all_passed: bool,
}

fn cmd_eval(cfg: &RunConfig) -> Result<CommandOutput> {
    let (spec, _) = load_metric(cfg)?;
    if cfg.points.is_empty() {
        return Err(usage_err("eval requires at least one --point"));
    }
    let engine = MetricEngine::new(spec);
    let which = cfg.tensor.clone().unwrap_or_else(|| "fundamental".into());
    let mut points = Vec::new();
    for p_src in &cfg.points {
        let p = parse_point_flag(engine.spec(), p_src)?;
        let mut entry = Json::obj();
        entry.insert("point".into(), Json::Str(p_src.clone()));
        let fb = engine.fundamental_bundle(&p)?;
        let fundamental = |m: &mut BTreeMap<String, Json>| {
            m.insert("norm".into(), Json::Num(fb.f));
            m.insert("energy".into(), Json::Num(fb.e));
            m.insert("det_g".into(), Json::Num(fb.det_g));
            m.insert("nondegenerate".into(), Json::Bool(fb.nondegenerate));
        };
        match which.as_str() {
            "norm" => {
                entry.insert("norm".into(), Json::Num(fb.f));
            }
            "energy" => {
                entry.insert("energy".into(), Json::Num(fb.e));
            }
            "g" => {
                entry.insert("g".into(), Json::from_tensor(&fb.g));
            }
            "g_inv" => {
                entry.insert("g_inv".into(), Json::from_tensor(fb.g_inv()?));
            }
            "l" => {
                entry.insert("l".into(), Json::from_tensor(&fb.l));
                entry.insert("l_up".into(), Json::from_tensor(&fb.l_up));
            }
            "h" => {
                entry.insert("h".into(), Json::from_tensor(&fb.h));
            }
            "cartan" => {
                entry.insert("cartan".into(), Json::from_tensor(&fb.cartan));
            }
            "c_mixed" => {
                entry.insert("c_mixed".into(), Json::from_tensor(fb.c_mixed()?));
            }
            "c_vec" => {
                entry.insert("c_vec".into(), Json::from_tensor(fb.c_vec()?));
                entry.insert("c_sq".into(), Json::Num(fb.c_sq()?));
            }
            "fundamental" => {
                fundamental(&mut entry);
                entry.insert("g".into(), Json::from_tensor(&fb.g));
                entry.insert("cartan".into(), Json::from_tensor(&fb.cartan));
            }
            "spray" | "nonlinear" | "berwald" | "berwald_tensor" | "christoffel"
            | "landsberg" | "t4" | "t2" | "all" => {
                let cb = engine.connection_bundle(&p)?;
                match which.as_str() {
                    "spray" => {
                        entry.insert("spray".into(), Json::from_tensor(&cb.spray));
                    }
                    "nonlinear" => {
                        entry.insert("nonlinear".into(), Json::from_tensor(&cb.nonlinear));
                    }
                    "berwald" => {
                        entry.insert("berwald".into(), Json::from_tensor(&cb.berwald));
                    }
                    "berwald_tensor" => {
                        entry.insert(
                            "berwald_tensor".into(),
                            Json::from_tensor(&cb.berwald_tensor),
                        );
                    }
                    "christoffel" => {
                        entry.insert("christoffel".into(), Json::from_tensor(&cb.christoffel));
                    }
                    "landsberg" => {
                        entry.insert("landsberg".into(), Json::from_tensor(&cb.landsberg));
                    }
                    "t4" => {
                        entry.insert("t4".into(), Json::from_tensor(&cb.t_tensor));
                    }
                    "t2" => {
                        entry.insert("t2".into(), Json::from_tensor(&cb.t_trace));
                    }
                    "all" => {
                        fundamental(&mut entry);
                        entry.insert("g".into(), Json::from_tensor(&fb.g));
                        entry.insert("cartan".into(), Json::from_tensor(&fb.cartan));
                        entry.insert("h".into(), Json::from_tensor(&fb.h));
                        entry.insert("l".into(), Json::from_tensor(&fb.l));
                        entry.insert("spray".into(), Json::from_tensor(&cb.spray));
                        entry.insert("nonlinear".into(), Json::from_tensor(&cb.nonlinear));
                        entry.insert(
                            "berwald_tensor".into(),
                            Json::from_tensor(&cb.berwald_tensor),
                        );
                        entry.insert("christoffel".into(), Json::from_tensor(&cb.christoffel));
                        entry.insert("landsberg".into(), Json::from_tensor(&cb.landsberg));
                        entry.insert("t4".into(), Json::from_tensor(&cb.t_tensor));
                        entry.insert("t2".into(), Json::from_tensor(&cb.t_trace));
                    }
                    _ => unreachable!(),
                }
            }
            other => {
                return Err(usage_err(format!("unknown --tensor `{}`", other)));
            }
        }
        points.push(Json::Obj(entry));
    }
    let mut results = Json::obj();
    results.insert("label".into(), Json::Str(engine.spec().label.clone()));
    results.insert("dim".into(), Json::Int(engine.dim() as i64));
    results.insert("points".into(), Json::Arr(points));
    Ok(CommandOutput {
        results: Json::Obj(results),
        verdicts: Json::Obj(Json::obj()),
        all_passed: true,
    })
}

fn classification_to_json(rep: &crate::classify::ClassificationReport) -> (Json, Json) {
    let mut results = Json::obj();
    results.insert("label".into(), Json::Str(rep.label.clone()));
    results.insert("tol".into(), Json::Num(rep.tol));
    let mut sampler = Json::obj();
    sampler.insert("seed".into(), Json::Int(rep.sampler.seed as i64));
    sampler.insert("n_points".into(), Json::Int(rep.sampler.n_points as i64));
    sampler.insert("box_lo".into(), Json::Num(rep.sampler.box_lo));
    sampler.insert("box_hi".into(), Json::Num(rep.sampler.box_hi));
    sampler.insert("exclude".into(), Json::Num(rep.sampler.exclude));
    results.insert("sampler".into(), Json::Obj(sampler));
    let mut points = Vec::new();
    for c in &rep.points {
        let mut m = Json::obj();
        m.insert("riemannian_residual".into(), Json::Num(c.riemannian_residual));
        m.insert("berwald_residual".into(), Json::Num(c.berwald_residual));
        m.insert("landsberg_residual".into(), Json::Num(c.landsberg_residual));
        m.insert(
            "c_reducible_residual".into(),
            c.c_reducible_residual.map_or(Json::Null, Json::Num),
        );
        m.insert("c2like_residual".into(), Json::Num(c.c2like_residual));
        m.insert(
            "semi_c".into(),
            match &c.semi_c {
                None => Json::Null,
                Some(f) => {
                    let mut fm = Json::obj();
                    fm.insert("r".into(), Json::Num(f.r));
                    fm.insert("t".into(), Json::Num(f.t));
                    fm.insert("residual".into(), Json::Num(f.residual));
                    Json::Obj(fm)
                }
            },
        );
        m.insert(
            "reversible_residual".into(),
            Json::Num(c.reversible_residual),
        );
        m.insert(
            "main_scalar_2d".into(),
            c.main_scalar_2d.map_or(Json::Null, Json::Num),
        );
        m.insert(
            "main_scalar_residual".into(),
            c.main_scalar_residual.map_or(Json::Null, Json::Num),
        );
        m.insert("scale".into(), Json::Num(c.scale));
        points.push(Json::Obj(m));
    }
    results.insert("points".into(), Json::Arr(points));
    let mut verdicts = Json::obj();
    for (k, v) in &rep.verdicts {
        verdicts.insert(k.clone(), Json::Bool(*v));
    }
    (Json::Obj(results), Json::Obj(verdicts))
}

fn cmd_classify(cfg: &RunConfig) -> Result<CommandOutput> {
    let (spec, _) = load_metric(cfg)?;
    let engine = MetricEngine::new(spec);
    let n_points = cfg.xsamples.unwrap_or(20);
    let tol = cfg.tol.unwrap_or(1e-8);
    let sampler = Sampler::new(cfg.seed, n_points);
    let rep = classify_metric(&engine, &sampler, tol)?;
    let (results, verdicts) = classification_to_json(&rep);
    Ok(CommandOutput {
        results,
        verdicts,
        all_passed: true,
    })
}

fn scfield_to_json(rep: &SCFieldReport, spec: &MetricSpec) -> Json {
    let mut results = Json::obj();
    let mut spaces = Vec::new();
    for ns in &rep.nullspaces {
        let mut m = Json::obj();
        m.insert("x".into(), Json::from_f64_slice(&ns.x));
        m.insert(
            "basis".into(),
            Json::Arr(ns.basis.iter().map(|v| Json::from_f64_slice(v)).collect()),
        );
        m.insert(
            "singular_values".into(),
            Json::from_f64_slice(&ns.singular_values),
        );
        m.insert("c_zero".into(), Json::Bool(ns.c_zero));
        m.insert("rows".into(), Json::Int(ns.rows as i64));
        m.insert("dimension".into(), Json::Int(ns.dimension() as i64));
        spaces.push(Json::Obj(m));
    }
    results.insert("nullspaces".into(), Json::Arr(spaces));
    results.insert(
        "consistent_dimension".into(),
        Json::Int(rep.consistent_dimension as i64),
    );
    results.insert(
        "c_zero_everywhere".into(),
        Json::Bool(rep.c_zero_everywhere),
    );
    results.insert(
        "candidate_field".into(),
        match &rep.candidate_field {
            None => Json::Str("none".into()),
            Some(f) => Json::Str(f.to_source(spec)),
        },
    );
    results.insert(
        "candidate_max_angle".into(),
        rep.candidate_max_angle.map_or(Json::Null, Json::Num),
    );
    if let Some(sc) = &rep.sc_residual {
        let mut m = Json::obj();
        m.insert("residual_raw".into(), Json::Num(sc.residual_raw));
        m.insert("residual_scaled".into(), Json::Num(sc.residual_scaled));
        m.insert("scale".into(), Json::Num(sc.scale));
        m.insert("pass".into(), Json::Bool(sc.pass));
        results.insert("sc_residual".into(), Json::Obj(m));
    }
    if let Some(inv) = &rep.invariants {
        let mut m = Json::obj();
        m.insert("b0".into(), Json::from_f64_slice(&inv.b0));
        m.insert(
            "bf2_minus_b02".into(),
            Json::from_f64_slice(&inv.bf2_minus_b02),
        );
        m.insert("det_h_cov".into(), Json::from_f64_slice(&inv.det_h_cov));
        m.insert("b0_flagged".into(), Json::Bool(inv.b0_flagged));
        m.insert("bf2_flagged".into(), Json::Bool(inv.bf2_flagged));
        m.insert(
            "det_near_singular".into(),
            Json::Bool(inv.det_near_singular),
        );
        results.insert("invariants".into(), Json::Obj(m));
    }
    if let Some(diag) = &rep.gradient_diag {
        let mut m = Json::obj();
        m.insert("curl_residual".into(), Json::Num(diag.curl_residual));
        m.insert("y_dependence".into(), Json::Num(diag.y_dependence));
        results.insert("gradient_diagnostic".into(), Json::Obj(m));
    }
    Json::Obj(results)
}

fn cmd_scfind(cfg: &RunConfig) -> Result<CommandOutput> {
    let (spec, art) = load_metric(cfg)?;
    let engine = MetricEngine::new(spec);
    let tol = cfg.tol.unwrap_or(1e-8);
    let y_per_x = cfg.ysamples.unwrap_or(40);
    let xs: Vec<Vec<f64>> = if cfg.xs.is_empty() {
        let n_x = cfg.xsamples.unwrap_or(5);
        Sampler::new(cfg.seed, n_x)
            .sample(&engine)?
            .into_iter()
            .map(|p| p.x)
            .collect()
    } else {
        cfg.xs
            .iter()
            .map(|s| parse_x_flag(engine.dim(), s))
            .collect::<Result<_>>()?
    };
    let mut candidates: Vec<VectorFieldSpec> = Vec::new();
    if let Some(art) = &art {
        candidates.extend(art.sc_fields.iter().cloned());
        candidates.extend(art.concurrent_candidates.iter().cloned());
    }
    let opts = SCDetectOptions {
        rank_tol: tol,
        seed: cfg.seed,
        ..SCDetectOptions::default()
    };
    let rep = sc_detect(&engine, &xs, y_per_x, &opts, &candidates)?;
    let results = scfield_to_json(&rep, engine.spec());
    let mut verdicts = Json::obj();
    verdicts.insert(
        "sc_direction_found".into(),
        Json::Bool(rep.consistent_dimension > 0 || rep.c_zero_everywhere),
    );
    Ok(CommandOutput {
        results,
        verdicts: Json::Obj(verdicts),
        all_passed: true,
    })
}

fn cmd_check(cfg: &RunConfig) -> Result<CommandOutput> {
    let (spec, _) = load_metric(cfg)?;
    let engine = MetricEngine::new(spec);
    let kind_src = cfg
        .kind
        .as_ref()
        .ok_or_else(|| usage_err("check requires --kind sc|c|f|cc"))?;
    let condition = Condition::parse(kind_src)?;
    let tol = cfg.tol.unwrap_or(match condition {
        Condition::SC => 1e-8,
        Condition::C => 1e-6,
        Condition::F | Condition::CC => 1e-7,
    });
    let field = match (&cfg.field, &cfg.potential) {
        (Some(src), _) => {
            let kind = match condition {
                Condition::C => FieldKind::Concurrent,
                _ => FieldKind::Generic,
            };
            VectorFieldSpec::parse(engine.spec(), src, kind)?
        }
        (None, Some(pot_src)) => {
            let potential = engine.spec().parse_expr(pot_src)?;
            match condition {
                Condition::F => catalog::gradient_field(&engine, &potential)?,
                Condition::CC => catalog::conformal_field(&engine, &potential)?,
                _ => {
                    return Err(usage_err(
                        "--potential applies to --kind f or cc; pass --field otherwise",
                    ))
                }
            }
        }
        (None, None) => return Err(usage_err("check requires --field or --potential")),
    };
    let samples = if cfg.points.is_empty() {
        Sampler::new(cfg.seed, cfg.xsamples.unwrap_or(20)).sample(&engine)?
    } else {
        cfg.points
            .iter()
            .map(|s| parse_point_flag(engine.spec(), s))
            .collect::<Result<_>>()?
    };
    let rep = check_condition(&engine, &field, condition, &samples, tol)?;
    let mut results = Json::obj();
    results.insert("condition".into(), Json::Str(rep.condition.name().into()));
    results.insert("field".into(), Json::Str(field.to_source(engine.spec())));
    results.insert("residual_raw".into(), Json::Num(rep.residual_raw));
    results.insert("residual_scaled".into(), Json::Num(rep.residual_scaled));
    results.insert("scale".into(), Json::Num(rep.scale));
    results.insert("n_samples".into(), Json::Int(rep.n_samples as i64));
    results.insert("tol".into(), Json::Num(rep.tol));
    let mut verdicts = Json::obj();
    verdicts.insert("pass".into(), Json::Bool(rep.pass));
    Ok(CommandOutput {
        results: Json::Obj(results),
        verdicts: Json::Obj(verdicts),
        all_passed: rep.pass,
    })
}

fn check_entry_json(c: &catalog::CheckEntry) -> Json {
    let mut m = Json::obj();
    m.insert("name".into(), Json::Str(c.name.clone()));
    m.insert("value".into(), Json::Num(c.value));
    m.insert("tol".into(), Json::Num(c.tol));
    m.insert("pass".into(), Json::Bool(c.pass));
    Json::Obj(m)
}

fn verification_to_json(rep: &VerificationReport) -> (Json, Json) {
    let mut results = Json::obj();
    results.insert("example".into(), Json::Str(rep.name.clone()));
    results.insert("label".into(), Json::Str(rep.label.clone()));
    let mut params = Json::obj();
    for (k, v) in &rep.params {
        params.insert(k.clone(), Json::Num(*v));
    }
    results.insert("params".into(), Json::Obj(params));
    results.insert("seed".into(), Json::Int(rep.seed as i64));
    results.insert("grid_points".into(), Json::Int(rep.grid_points as i64));
    results.insert("tol".into(), Json::Num(rep.tol));
    results.insert(
        "component_checks".into(),
        Json::Arr(rep.component_checks.iter().map(check_entry_json).collect()),
    );
    if let Some(c) = &rep.set_check {
        results.insert("set_check".into(), check_entry_json(c));
    }
    results.insert(
        "minor_checks".into(),
        Json::Arr(rep.minor_checks.iter().map(check_entry_json).collect()),
    );
    results.insert(
        "field_checks".into(),
        Json::Arr(rep.field_checks.iter().map(check_entry_json).collect()),
    );
    results.insert(
        "sign_candidates".into(),
        Json::Arr(rep.sign_candidates.iter().map(check_entry_json).collect()),
    );
    results.insert(
        "misc_checks".into(),
        Json::Arr(rep.misc_checks.iter().map(check_entry_json).collect()),
    );
    let mut verdicts = Json::obj();
    verdicts.insert("passed".into(), Json::Bool(rep.passed));
    (Json::Obj(results), Json::Obj(verdicts))
}

fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput> {
    let name = cfg
        .example
        .as_ref()
        .or(cfg.metric.as_ref())
        .ok_or_else(|| usage_err("verify requires --example NAME (or --metric NAME)"))?;
    let tol = cfg.tol.unwrap_or(1e-7);
    let rep = catalog::verify_example(name, &cfg.params, tol)?;
    let (results, verdicts) = verification_to_json(&rep);
    Ok(CommandOutput {
        results,
        verdicts,
        all_passed: rep.passed,
    })
}

fn cmd_catalog_list(_cfg: &RunConfig) -> Result<CommandOutput> {
    let mut entries = Vec::new();
    for (name, desc) in catalog::catalog_names() {
        let (spec, art) = catalog::builtin(name, &[])?;
        let mut m = Json::obj();
        m.insert("name".into(), Json::Str(name.into()));
        m.insert("description".into(), Json::Str(desc.into()));
        m.insert("dim".into(), Json::Int(spec.dim as i64));
        let mut params = Json::obj();
        for (k, v) in &spec.params {
            params.insert(k.clone(), Json::Num(*v));
        }
        m.insert("params".into(), Json::Obj(params));
        m.insert(
            "expected_components".into(),
            Json::Int((art.g_components.len() + art.c_components.len()) as i64),
        );
        m.insert(
            "sc_fields".into(),
            Json::Int(art.sc_fields.len() as i64),
        );
        entries.push(Json::Obj(m));
    }
    let mut results = Json::obj();
    results.insert("catalog".into(), Json::Arr(entries));
    Ok(CommandOutput {
        results: Json::Obj(results),
        verdicts: Json::Obj(Json::obj()),
        all_passed: true,
    })
}

fn render_text(root: &Json, out: &mut String, prefix: &str) {
    match root {
        Json::Obj(map) => {
            for (k, v) in map {
                match v {
                    Json::Obj(_) | Json::Arr(_) => {
                        out.push_str(&format!("{}{}:\n", prefix, k));
                        render_text(v, out, &format!("{}  ", prefix));
                    }
                    scalar => {
                        out.push_str(&format!("{}{}: {}\n", prefix, k, scalar.to_string()));
                    }
                }
            }
        }
        Json::Arr(items) => {
            for (i, v) in items.iter().enumerate() {
                match v {
                    Json::Obj(_) | Json::Arr(_) => {
                        out.push_str(&format!("{}[{}]:\n", prefix, i));
                        render_text(v, out, &format!("{}  ", prefix));
                    }
                    scalar => {
                        out.push_str(&format!("{}[{}]: {}\n", prefix, i, scalar.to_string()));
                    }
                }
            }
        }
        scalar => out.push_str(&format!("{}{}\n", prefix, scalar.to_string())),
    }
}

/// Run the CLI and return (exit code, report text). The report goes to
/// stdout (or --out) by [`run_cli`]; errors go to stderr.
pub fn run_cli_capture(argv: &[String]) -> (i32, String, String) {
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            return (2, String::new(), format!("error: {}\n\n{}", e, USAGE));
        }
    };
    let outcome = match cfg.command.as_str() {
        "eval" => cmd_eval(&cfg),
        "classify" => cmd_classify(&cfg),
        "scfind" => cmd_scfind(&cfg),
        "check" => cmd_check(&cfg),
        "verify" => cmd_verify(&cfg),
        "catalog-list" => cmd_catalog_list(&cfg),
        _ => unreachable!("command validated during parse"),
    };
    match outcome {
        Ok(cmd_out) => {
            let mut top = Json::obj();
            top.insert("command".into(), Json::Str(cfg.command.clone()));
            top.insert("config_echo".into(), config_echo(&cfg));
            top.insert("results".into(), cmd_out.results);
            top.insert("tool_version".into(), Json::Str(TOOL_VERSION.into()));
            top.insert("verdicts".into(), cmd_out.verdicts);
            let root = Json::Obj(top);
            let report = if cfg.format == "json" {
                let mut s = root.to_string();
                s.push('\n');
                s
            } else {
                let mut s = String::new();
                render_text(&root, &mut s, "");
                s
            };
            let code = if cmd_out.all_passed { 0 } else { 1 };
            match &cfg.out {
                Some(path) => match std::fs::write(path, &report) {
                    Ok(()) => (code, String::new(), String::new()),
                    Err(e) => (1, String::new(), format!("error: cannot write {}: {}\n", path, e)),
                },
                None => (code, report, String::new()),
            }
        }
        Err(e) => {
            let code = match &e {
                Error::Usage(_)
                | Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::DimensionMismatch { .. }
                | Error::Spec(_)
                | Error::UnknownBuiltin(_)
                | Error::InvalidOverride(_) => 2,
                _ => 1,
            };
            let mut msg = format!("error: {}\n", e);
            if code == 2 {
                msg.push('\n');
                msg.push_str(USAGE);
            }
            (code, String::new(), msg)
        }
    }
}

/// CLI entry point: parse argv, run, print, return the exit code.
pub fn run_cli(argv: &[String]) -> i32 {
    let (code, stdout_text, stderr_text) = run_cli_capture(argv);
    if !stdout_text.is_empty() {
        print!("{}", stdout_text);
    }
    if !stderr_text.is_empty() {
        eprint!("{}", stderr_text);
    }
    code
}

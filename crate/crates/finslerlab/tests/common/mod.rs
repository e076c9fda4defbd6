//! Shared helpers for the integration suites.
#![allow(dead_code)]

use finslerlab::catalog;
use finslerlab::classify::Sampler;
use finslerlab::fundamental::MetricEngine;
use finslerlab::metric::Bindings;

/// Engine for a catalog metric with overrides.
pub fn engine(name: &str, overrides: &[(&str, f64)]) -> MetricEngine {
    let ov: Vec<(String, f64)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let (spec, _) = catalog::builtin(name, &ov).unwrap();
    MetricEngine::new(spec)
}

/// Deterministic in-domain grid.
pub fn grid(engine: &MetricEngine, seed: u64, n: usize) -> Vec<Bindings> {
    Sampler::new(seed, n).sample(engine).unwrap()
}

/// Print the per-criterion pass/fail line, re-raising any panic.
pub fn criterion<F: FnOnce() + std::panic::UnwindSafe>(id: &str, desc: &str, body: F) {
    let result = std::panic::catch_unwind(body);
    match &result {
        Ok(()) => println!("acceptance {}: PASS  {}", id, desc),
        Err(_) => println!("acceptance {}: FAIL  {}", id, desc),
    }
    if let Err(e) = result {
        std::panic::resume_unwind(e);
    }
}

/// Relative deviation with floor.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

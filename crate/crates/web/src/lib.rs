//! Browser bindings: solve, sample and generate, all JSON in and out.

use rollstock::anneal::{sample_portfolio, AnnealParams};
use rollstock::diagram::{extract_rotations, render_svg};
use rollstock::exact::{solve_exact, ExactStatus, Solution};
use rollstock::ilp::encode_full;
use rollstock::model::{generate_synthetic, GeneratorConfig};
use rollstock::netbuild::{build_hypergraph, Hypergraph};
use rollstock::num::{format_decimal, from_f64_decimal, to_f64};
use rollstock::qubo::Lambdas;
use rollstock::Instance;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse(instance_json: &str, alpha: Option<f64>) -> Result<Instance, JsError> {
    let mut instance = Instance::from_json_str(instance_json)?;
    if let Some(a) = alpha {
        instance.alpha = from_f64_decimal(a).ok_or_else(|| JsError::new("alpha must be finite"))?;
    }
    Ok(instance)
}

fn plan(instance: &Instance, graph: &Hypergraph, sol: &Solution) -> Value {
    let arcs: Vec<String> = sol
        .decoded
        .iter()
        .map(|&a| graph.describe_arc(&graph.arcs[a], instance))
        .collect();
    json!({
        "objective": to_f64(&sol.objective),
        "objective_exact": format_decimal(&sol.objective),
        "arcs": arcs,
        "svg": render_svg(instance, &extract_rotations(instance, graph, &sol.x)),
    })
}

/// Exact optimum of an instance, with its diagram.
#[wasm_bindgen]
pub fn solve_ilp(
    instance_json: &str,
    alpha: Option<f64>,
    time_limit_secs: Option<f64>,
) -> Result<String, JsError> {
    let instance = parse(instance_json, alpha)?;
    let graph = build_hypergraph(&instance);
    let ilp = encode_full(&graph, &instance);
    let limit = time_limit_secs
        .filter(|s| s.is_finite() && *s > 0.0)
        .map(std::time::Duration::from_secs_f64);
    let result = solve_exact(&ilp, limit)?;
    let status = match result.status {
        ExactStatus::Optimal => "optimal",
        ExactStatus::Infeasible => "infeasible",
        ExactStatus::TimeLimit => "time_limit",
    };
    Ok(json!({
        "status": status,
        "vars": ilp.num_vars,
        "rows": ilp.constraints.len(),
        "nodes": result.nodes,
        "plan": result.solution.as_ref().map(|s| plan(&instance, &graph, s)),
    })
    .to_string())
}

/// Annealed portfolio with uniform penalty weight `lambda`.
#[wasm_bindgen]
pub fn sample_qubo(
    instance_json: &str,
    lambda: f64,
    reads: usize,
    sweeps: usize,
    seed: u64,
) -> Result<String, JsError> {
    let instance = parse(instance_json, None)?;
    let lambda = from_f64_decimal(lambda).ok_or_else(|| JsError::new("lambda must be finite"))?;
    let params = AnnealParams {
        num_reads: reads,
        sweeps,
        seed,
        ..AnnealParams::default()
    };
    let out = sample_portfolio(&instance, Lambdas::uniform(lambda), &params)?;
    let graph = build_hypergraph(&instance);
    let plans: Vec<Value> = out
        .portfolio
        .solutions
        .iter()
        .map(|s| plan(&instance, &graph, s))
        .collect();
    Ok(json!({
        "qubo_vars": out.qubo.num_vars(),
        "qubo_terms": out.qubo.num_terms(),
        "distinct_samples": out.samples.samples.len(),
        "rejected": out.rejected.len(),
        "success_probability": out.success_probability,
        "anneal_ms": out.timings.anneal.as_secs_f64() * 1e3,
        "portfolio": plans,
    })
    .to_string())
}

/// Seeded synthetic instance as pretty JSON.
#[wasm_bindgen]
pub fn generate(
    trips: usize,
    coupled: usize,
    emu_types: usize,
    seed: u64,
) -> Result<String, JsError> {
    let config = GeneratorConfig {
        trips,
        coupled_trips: coupled,
        emu_types,
        ..GeneratorConfig::default()
    };
    Ok(generate_synthetic(&config, seed)?.to_json_pretty())
}

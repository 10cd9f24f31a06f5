//! The bindings are plain functions off wasm, so the success paths run natively.

use serde_json::Value;

const TOY: &str = include_str!("../../../instances/toy.json");

fn parse(text: String) -> Value {
    serde_json::from_str(&text).unwrap()
}

#[test]
fn toy_ilp_plan() {
    let r = parse(
        rollstock_web::solve_ilp(TOY, None, Some(10.0)).unwrap_or_else(|_| panic!("solve failed")),
    );
    assert_eq!(r["status"], "optimal");
    assert_eq!(r["vars"], 11);
    assert_eq!(r["plan"]["objective_exact"], "4.8");
    assert!(r["plan"]["svg"].as_str().unwrap().starts_with("<svg"));

    let r = parse(
        rollstock_web::solve_ilp(TOY, Some(0.0), None).unwrap_or_else(|_| panic!("solve failed")),
    );
    assert_eq!(r["plan"]["objective_exact"], "2");
}

#[test]
fn toy_sampling_is_seeded() {
    let run = || {
        rollstock_web::sample_qubo(TOY, 100.0, 50, 500, 7)
            .unwrap_or_else(|_| panic!("sampling failed"))
    };
    let a = parse(run());
    assert_eq!(a["qubo_vars"], 20);
    assert_eq!(a["portfolio"][0]["objective_exact"], "4.8");
    let b = parse(run());
    assert_eq!(a["portfolio"], b["portfolio"]);
}

#[test]
fn generated_instance_round_trips() {
    let text = rollstock_web::generate(12, 3, 2, 1).unwrap_or_else(|_| panic!("generate failed"));
    let r = parse(
        rollstock_web::solve_ilp(&text, None, None).unwrap_or_else(|_| panic!("solve failed")),
    );
    assert_eq!(r["status"], "optimal");
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollstock::Instance;
use serde_json::{json, Value};

const SEATS: [u32; 3] = [80, 100, 120];
const ALPHAS: [f64; 4] = [0.0, 0.01, 0.1, 1.0];

pub fn toy() -> Instance {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../instances/toy.json"
    ))
    .unwrap();
    Instance::from_json_str(&text).unwrap()
}

/// Small instance with up to `max_trips` trips over two or three stations.
/// Dense enough that coupling, decoupling and depot arcs all show up.
pub fn random_instance(seed: u64, max_trips: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stations = if rng.gen_bool(0.7) {
        vec!["A", "B"]
    } else {
        vec!["A", "B", "C"]
    };
    let types: Vec<&str> = if rng.gen_bool(0.5) {
        vec!["r1"]
    } else {
        vec!["r1", "r2"]
    };
    let lines = ["north", "south"];

    let emu_types: Vec<Value> = types
        .iter()
        .map(|id| {
            json!({
                "id": id,
                "seats": SEATS[rng.gen_range(0..SEATS.len())],
                "bike_slots": rng.gen_range(2..7),
                "cost_per_km": rng.gen_range(1..20),
                "couplable": rng.gen_bool(0.6),
            })
        })
        .collect();

    // Most trips continue one of a few rotations that leave from the depot
    // station; the rest are strays leaving it at random times.
    let n = rng.gen_range(1..=max_trips.max(1));
    let chains = rng.gen_range(1..=3usize);
    let mut at: Vec<(usize, u32, &str)> = (0..chains)
        .map(|_| {
            (
                0,
                360 + 5 * rng.gen_range(0..12u32),
                types[rng.gen_range(0..types.len())],
            )
        })
        .collect();
    let mut started = vec![false; chains];
    let trips: Vec<Value> = (0..n)
        .map(|i| {
            let c = i % chains;
            let stray = rng.gen_bool(0.08);
            let (o, depart, home_type) = if stray {
                (0, 360 + 5 * rng.gen_range(0..48u32), types[0])
            } else {
                let (st, t, ty) = at[c];
                let gap = if started[c] {
                    5 * rng.gen_range(1..5u32)
                } else {
                    0
                };
                started[c] = true;
                (st, t + gap, ty)
            };
            let mut d = rng.gen_range(0..stations.len() - 1);
            if d >= o {
                d += 1;
            }
            let arrive = depart + 5 * rng.gen_range(3..10u32);
            if !stray {
                at[c] = (d, arrive, home_type);
            }
            let mut allowed: Vec<&str> = types
                .iter()
                .copied()
                .filter(|t| *t == home_type || rng.gen_bool(0.5))
                .collect();
            if allowed.is_empty() {
                allowed.push(types[0]);
            }
            let mut trip = json!({
                "id": format!("t{i}"),
                "origin": stations[o],
                "destination": stations[d],
                "depart": depart,
                "arrive": arrive,
                "passengers": rng.gen_range(0..120),
                "bicycles": rng.gen_range(0..4),
                "couplable": rng.gen_bool(0.4),
                "allowed_types": allowed,
                "distance": rng.gen_range(1..40),
                "obligatory": rng.gen_bool(0.85),
            });
            if rng.gen_bool(0.5) {
                trip["line"] = json!(lines[rng.gen_range(0..2)]);
            }
            trip
        })
        .collect();

    let mut depots = vec![depot(&mut rng, "d1", "A", &types)];
    if rng.gen_bool(0.5) {
        depots.push(depot(&mut rng, "d2", "B", &types));
    }

    let licenses = if rng.gen_bool(0.3) {
        json!([{"id": "L1", "emu_types": ["r1"], "lines": ["north"]}])
    } else {
        json!([])
    };
    let windows: Vec<Value> = (0..rng.gen_range(0..3))
        .map(|_| {
            let lo = u32::from(rng.gen_bool(0.1));
            let mut w = json!({
                "depot": "d1",
                "at": 360 + 5 * rng.gen_range(0..56u32),
                "min_drivers": lo,
                "max_drivers": lo + rng.gen_range(1..5),
            });
            if !licenses.as_array().unwrap().is_empty() && rng.gen_bool(0.5) {
                w["license"] = json!("L1");
            }
            w
        })
        .collect();

    let doc = json!({
        "meta": {"name": format!("random-{seed}")},
        "alpha": ALPHAS[rng.gen_range(0..4)],
        "delta_min": 5,
        "delta_max": 5 * rng.gen_range(4..24u32),
        "tolerances": {
            "seat_single": rng.gen_range(0..60),
            "seat_coupled": rng.gen_range(0..60),
            "bike_single": rng.gen_range(0..6),
            "bike_coupled": rng.gen_range(0..6),
        },
        "emu_types": emu_types,
        "depots": depots,
        "trips": trips,
        "driver_windows": windows,
        "licenses": licenses,
        "driver_weighting": if rng.gen_bool(0.5) { "per_emu" } else { "per_train" },
    });
    Instance::from_json_str(&doc.to_string()).unwrap()
}

fn depot(rng: &mut ChaCha8Rng, id: &str, station: &str, types: &[&str]) -> Value {
    let mut out_min = serde_json::Map::new();
    let mut out_max = serde_json::Map::new();
    let mut in_min = serde_json::Map::new();
    let mut in_max = serde_json::Map::new();
    for t in types {
        let hi = rng.gen_range(1..5u32);
        out_max.insert(t.to_string(), json!(hi));
        out_min.insert(t.to_string(), json!(u32::from(rng.gen_bool(0.15))));
        if rng.gen_bool(0.85) {
            let hi = rng.gen_range(1..5u32);
            in_max.insert(t.to_string(), json!(hi));
            in_min.insert(t.to_string(), json!(u32::from(hi > 0 && rng.gen_bool(0.2))));
        }
    }
    json!({"id": id, "station": station, "out_min": out_min, "out_max": out_max, "in_min": in_min, "in_max": in_max})
}

//! Per-unit rotations and time-distance diagrams of a selected arc set.
//!
//! Units are followed from depot dispatch through every selected arc in
//! departure order. Couple arcs merge the units of two trips; decouple arcs
//! split them again, first unit to the first target.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::Instance;
use crate::netbuild::{ArcKind, Hypergraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub trip: usize,
    /// Another unit runs on the same trip.
    pub coupled: bool,
    /// Non-obligatory movement.
    pub service: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotation {
    pub unit: usize,
    pub emu_type: usize,
    pub legs: Vec<Leg>,
}

/// Rotations of every unit used by `x`, numbered in dispatch order.
pub fn extract_rotations(instance: &Instance, graph: &Hypergraph, x: &[bool]) -> Vec<Rotation> {
    let selected: Vec<usize> = (0..graph.arcs.len())
        .filter(|&a| x.get(a).copied().unwrap_or(false))
        .collect();
    let mut paths: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut at: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut needed: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut out_of: BTreeMap<usize, usize> = BTreeMap::new();

    for &a in &selected {
        let arc = &graph.arcs[a];
        for t in graph.target_trips(arc) {
            let e = needed.entry(t).or_insert((0, arc.emu_type));
            e.0 += usize::from(arc.k);
        }
        if arc.kind == ArcKind::DepotOut {
            let t = graph
                .target_trips(arc)
                .next()
                .expect("dispatch arcs point to a trip");
            for _ in 0..arc.k {
                at.entry(t).or_default().push(paths.len());
                paths.push((arc.emu_type, Vec::new()));
            }
        } else {
            for s in graph.source_trips(arc) {
                out_of.entry(s).or_insert(a);
            }
        }
    }

    let mut order: Vec<usize> = needed.keys().copied().collect();
    order.sort_by_key(|&t| (instance.trips[t].depart, t));
    for t in order {
        let (want, emu_type) = needed[&t];
        let units = at.entry(t).or_default();
        // A trip entered from an unused trip still gets its units drawn.
        while units.len() < want {
            units.push(paths.len());
            paths.push((emu_type, Vec::new()));
        }
        let units = at.remove(&t).unwrap_or_default();
        for &u in &units {
            paths[u].1.push(t);
        }
        let Some(&a) = out_of.get(&t) else { continue };
        let arc = &graph.arcs[a];
        let targets: Vec<usize> = graph.target_trips(arc).collect();
        match targets.len() {
            0 => {}
            1 => at.entry(targets[0]).or_default().extend(units),
            _ => {
                for (i, u) in units.into_iter().enumerate() {
                    at.entry(targets[i.min(targets.len() - 1)])
                        .or_default()
                        .push(u);
                }
            }
        }
    }

    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, trips) in &paths {
        for &t in trips {
            *count.entry(t).or_default() += 1;
        }
    }
    paths
        .into_iter()
        .enumerate()
        .filter(|(_, (_, trips))| !trips.is_empty())
        .map(|(unit, (emu_type, trips))| Rotation {
            unit,
            emu_type,
            legs: trips
                .into_iter()
                .map(|t| Leg {
                    trip: t,
                    coupled: count[&t] > 1,
                    service: !instance.trips[t].obligatory,
                })
                .collect(),
        })
        .collect()
}

/// Stations top to bottom: the instance's declared order, else first appearance.
pub fn station_order(instance: &Instance) -> Vec<String> {
    let mut order: Vec<String> = instance.meta.stations.clone().unwrap_or_default();
    for trip in &instance.trips {
        for s in [&trip.origin, &trip.destination] {
            if !order.contains(s) {
                order.push(s.clone());
            }
        }
    }
    order
}

fn time_range(instance: &Instance) -> (u32, u32) {
    let lo = instance.trips.iter().map(|t| t.depart).min();
    let hi = instance.trips.iter().map(|t| t.arrive).max();
    match (lo, hi) {
        (Some(lo), Some(hi)) => (lo.saturating_sub(10), hi + 10),
        _ => (0, 60),
    }
}

fn clock(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60 % 24, minutes % 60)
}

const PALETTE: [&str; 6] = [
    "#1f5fa8", "#c0392b", "#8e44ad", "#d68910", "#117a65", "#5d6d7e",
];
const COUPLED: &str = "#2e9e44";

pub fn render_svg(instance: &Instance, rotations: &[Rotation]) -> String {
    let stations = station_order(instance);
    let (t0, t1) = time_range(instance);
    let (left, top, width) = (90.0, 40.0, 720.0);
    let row = 70.0;
    let height = top + row * (stations.len().max(1) as f64 - 1.0) + 60.0;
    let legend_h = 18.0 * rotations.len() as f64;
    let x_of = |t: u32| left + width * f64::from(t - t0) / f64::from((t1 - t0).max(1));
    let y_of = |s: &str| top + row * stations.iter().position(|x| x == s).unwrap_or(0) as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" font-family="sans-serif" font-size="11">"#,
        left + width + 30.0,
        height + legend_h + 10.0
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Axes
    for s in &stations {
        let y = y_of(s);
        let _ = writeln!(
            out,
            r##"<line x1="{left:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            left + width,
            left - 8.0,
            y + 4.0,
            escape(s)
        );
    }
    let axis_y = height - 30.0;
    let _ = writeln!(
        out,
        r##"<line x1="{left:.1}" y1="{axis_y:.1}" x2="{:.1}" y2="{axis_y:.1}" stroke="#333"/>"##,
        left + width
    );
    let step = if t1 - t0 > 360 { 60 } else { 30 };
    let mut tick = t0.div_ceil(step) * step;
    while tick <= t1 {
        let x = x_of(tick);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            axis_y,
            axis_y + 5.0,
            axis_y + 18.0,
            clock(tick)
        );
        tick += step;
    }

    for rot in rotations {
        let color = PALETTE[rot.emu_type % PALETTE.len()];
        let mut prev: Option<(f64, f64)> = None;
        for leg in &rot.legs {
            let trip = &instance.trips[leg.trip];
            let (xa, ya) = (x_of(trip.depart), y_of(&trip.origin));
            let (xb, yb) = (x_of(trip.arrive), y_of(&trip.destination));
            if let Some((px, py)) = prev {
                let _ = writeln!(
                    out,
                    r#"<line x1="{px:.1}" y1="{py:.1}" x2="{xa:.1}" y2="{ya:.1}" stroke="{color}" stroke-width="1" stroke-dasharray="2 3"/>"#
                );
            }
            let (stroke, w) = if leg.coupled {
                (COUPLED, 4)
            } else {
                (color, 2)
            };
            let dash = if leg.service {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<line x1="{xa:.1}" y1="{ya:.1}" x2="{xb:.1}" y2="{yb:.1}" stroke="{stroke}" stroke-width="{w}"{dash}><title>{} U{} {}</title></line>"#,
                escape(&trip.id),
                rot.unit + 1,
                escape(&instance.emu_types[rot.emu_type].id)
            );
            let _ = writeln!(
                out,
                r##"<text x="{:.1}" y="{:.1}" fill="#555" font-size="9">{}</text>"##,
                (xa + xb) / 2.0 + 3.0,
                (ya + yb) / 2.0 - 3.0,
                escape(&trip.id)
            );
            prev = Some((xb, yb));
        }
    }

    for (i, rot) in rotations.iter().enumerate() {
        let y = height + 12.0 + 18.0 * i as f64;
        let color = PALETTE[rot.emu_type % PALETTE.len()];
        let trips: Vec<&str> = rot
            .legs
            .iter()
            .map(|l| instance.trips[l.trip].id.as_str())
            .collect();
        let _ = writeln!(
            out,
            r#"<line x1="{left:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{y:.1}">U{} ({}): {}</text>"#,
            y - 4.0,
            left + 20.0,
            y - 4.0,
            left + 28.0,
            rot.unit + 1,
            escape(&instance.emu_types[rot.emu_type].id),
            escape(&trips.join(" > "))
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One bar per unit: `=` running, `#` coupled, `~` service move, `-` waiting.
pub fn render_ascii(instance: &Instance, rotations: &[Rotation]) -> String {
    let (t0, t1) = time_range(instance);
    let cols = 72usize;
    let col_of = |t: u32| ((t - t0) as usize * (cols - 1)) / (t1 - t0).max(1) as usize;
    let mut out = format!("{:<10}|{}|\n", "", ruler(t0, t1, cols));
    for rot in rotations {
        let mut bar = vec![' '; cols];
        let mut prev_end: Option<usize> = None;
        for leg in &rot.legs {
            let trip = &instance.trips[leg.trip];
            let (a, b) = (col_of(trip.depart), col_of(trip.arrive));
            if let Some(p) = prev_end {
                for c in bar.iter_mut().take(a).skip(p + 1) {
                    *c = '-';
                }
            }
            let mark = if leg.service {
                '~'
            } else if leg.coupled {
                '#'
            } else {
                '='
            };
            for c in bar.iter_mut().take(b + 1).skip(a) {
                *c = mark;
            }
            prev_end = Some(b);
        }
        let label = format!("U{} {}", rot.unit + 1, instance.emu_types[rot.emu_type].id);
        let _ = writeln!(out, "{label:<10}|{}|", bar.into_iter().collect::<String>());
    }
    for rot in rotations {
        let legs: Vec<String> = rot
            .legs
            .iter()
            .map(|l| {
                let t = &instance.trips[l.trip];
                let flag = if l.service {
                    "~"
                } else if l.coupled {
                    "*"
                } else {
                    ""
                };
                format!(
                    "{}{flag} {} {}-{} {}",
                    t.id,
                    t.origin,
                    clock(t.depart),
                    clock(t.arrive),
                    t.destination
                )
            })
            .collect();
        let _ = writeln!(out, "U{}: {}", rot.unit + 1, legs.join(" | "));
    }
    out
}

fn ruler(t0: u32, t1: u32, cols: usize) -> String {
    let mut line = vec![' '; cols];
    let label = clock(t0);
    let end = clock(t1);
    for (i, ch) in label.chars().enumerate() {
        line[i] = ch;
    }
    for (i, ch) in end.chars().enumerate() {
        line[cols - end.len() + i] = ch;
    }
    line.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netbuild::build_hypergraph;

    fn toy() -> (Instance, Hypergraph) {
        let inst = Instance::from_json_str(include_str!("../../../instances/toy.json")).unwrap();
        let graph = build_hypergraph(&inst);
        (inst, graph)
    }

    fn select(n: usize, on: &[usize]) -> Vec<bool> {
        (0..n).map(|i| on.contains(&i)).collect()
    }

    #[test]
    fn optimum_couples_on_tau3() {
        let (inst, graph) = toy();
        let rots = extract_rotations(&inst, &graph, &select(graph.arcs.len(), &[0, 2, 10]));
        assert_eq!(rots.len(), 2);
        for r in &rots {
            assert_eq!(r.legs.len(), 2);
            let last = r.legs.last().unwrap();
            assert_eq!(inst.trips[last.trip].id, "tau3");
            assert!(last.coupled);
            assert!(!r.legs[0].coupled);
        }
        let svg = render_svg(&inst, &rots);
        assert!(svg.contains(COUPLED));
    }

    #[test]
    fn excited_has_service_leg() {
        let (inst, graph) = toy();
        let rots = extract_rotations(&inst, &graph, &select(graph.arcs.len(), &[0, 3, 6, 8]));
        assert_eq!(rots.len(), 2);
        assert!(rots.iter().flat_map(|r| &r.legs).all(|l| !l.coupled));
        assert!(rots
            .iter()
            .flat_map(|r| &r.legs)
            .any(|l| l.service && inst.trips[l.trip].id == "v4"));
        assert_eq!(rots[1].emu_type, 1);
        let svg = render_svg(&inst, &rots);
        assert!(!svg.contains(COUPLED));
        assert!(svg.contains("stroke-dasharray=\"6 4\""));
        assert!(render_ascii(&inst, &rots).contains('~'));
    }

    #[test]
    fn empty_selection_draws_axes_only() {
        let (inst, graph) = toy();
        let rots = extract_rotations(&inst, &graph, &vec![false; graph.arcs.len()]);
        assert!(rots.is_empty());
        let svg = render_svg(&inst, &rots);
        assert!(svg.contains(">06:00<"));
        assert!(!svg.contains("<title>"));
        assert_eq!(render_ascii(&inst, &rots).lines().count(), 1);
    }

    #[test]
    fn layout_is_deterministic() {
        let (inst, graph) = toy();
        let x = select(graph.arcs.len(), &[1, 2, 5, 9]);
        let a = render_svg(&inst, &extract_rotations(&inst, &graph, &x));
        let b = render_svg(&inst, &extract_rotations(&inst, &graph, &x));
        assert_eq!(a, b);
    }
}

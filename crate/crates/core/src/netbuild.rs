//! Trip hypergraph construction.
//!
//! Nodes are timetabled trips plus one source and one sink per depot. Arcs
//! move one EMU, or a coupled pair of identical EMUs, from a node to the
//! next; hyper-arcs cover coupling two arriving units onto one trip,
//! running a coupled pair on from one trip to the next, and splitting a pair
//! onto two trips.
//!
//! Node numbering: depot sources first, then trips in file order, then depot
//! sinks. Arc ids follow the sort key (composition group, sources, targets,
//! type, kind), where single-unit arcs form the first group.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::Instance;
use crate::num::Rational;

pub type NodeId = usize;
pub type ArcId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Trip,
    ServiceTrip,
    DepotSource,
    DepotSink,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub trip: Option<usize>,
    pub depot: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    DepotOut,
    Transfer,
    Couple,
    CoupledTransfer,
    Decouple,
    DepotIn,
}

impl ArcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArcKind::DepotOut => "depot_out",
            ArcKind::Transfer => "transfer",
            ArcKind::Couple => "couple",
            ArcKind::CoupledTransfer => "coupled_transfer",
            ArcKind::Decouple => "decouple",
            ArcKind::DepotIn => "depot_in",
        }
    }
}

/// Seat and bicycle shortage on one pointed-to trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Shortage {
    pub trip: usize,
    pub seats: u32,
    pub bikes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperArc {
    pub id: ArcId,
    pub kind: ArcKind,
    pub sources: Vec<NodeId>,
    pub targets: Vec<NodeId>,
    pub emu_type: usize,
    /// EMUs on the pointed-to trip(s).
    pub k: u8,
    /// EMUs on the originating trip(s).
    pub k_prime: u8,
    pub cost: Rational,
    /// Largest per-target shortage.
    pub seat_shortage: u32,
    pub bike_shortage: u32,
    pub target_shortages: Vec<Shortage>,
}

#[derive(Debug, Clone)]
pub struct Hypergraph {
    pub nodes: Vec<Node>,
    pub arcs: Vec<HyperArc>,
    num_depots: usize,
    num_trips: usize,
    /// Arcs pointing to each trip, indexed by trip.
    pub idx_cover: Vec<Vec<ArcId>>,
    pub idx_in: BTreeMap<(NodeId, usize), Vec<ArcId>>,
    pub idx_out: BTreeMap<(NodeId, usize), Vec<ArcId>>,
    /// Keyed by (depot, type).
    pub idx_depot_out: BTreeMap<(usize, usize), Vec<ArcId>>,
    pub idx_depot_in: BTreeMap<(usize, usize), Vec<ArcId>>,
    /// Arcs needing a driver at each driver window, indexed like `Instance::driver_windows`.
    pub idx_driver: Vec<Vec<ArcId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub trips_single: usize,
    pub trips_coupled: usize,
    pub emu_types: usize,
    /// |T'|^2 |R| + |T''|^3 |R|
    pub variable_bound: u128,
    /// |T|^2 |R|, the bound on arcs covering one trip.
    pub per_trip_bound: u128,
    pub actual_arcs: usize,
    pub depot_arcs: usize,
}

impl Hypergraph {
    pub fn source_node(&self, depot: usize) -> NodeId {
        depot
    }

    pub fn trip_node(&self, trip: usize) -> NodeId {
        self.num_depots + trip
    }

    pub fn sink_node(&self, depot: usize) -> NodeId {
        self.num_depots + self.num_trips + depot
    }

    pub fn trip_of(&self, node: NodeId) -> Option<usize> {
        self.nodes[node].trip
    }

    pub fn num_trips(&self) -> usize {
        self.num_trips
    }

    /// Trips an arc points to.
    pub fn target_trips<'a>(&'a self, arc: &'a HyperArc) -> impl Iterator<Item = usize> + 'a {
        arc.targets.iter().filter_map(|&n| self.nodes[n].trip)
    }

    pub fn source_trips<'a>(&'a self, arc: &'a HyperArc) -> impl Iterator<Item = usize> + 'a {
        arc.sources.iter().filter_map(|&n| self.nodes[n].trip)
    }

    /// Outgoing arcs of a node over all types, deduplicated and sorted.
    pub fn out_arcs(&self, node: NodeId) -> Vec<ArcId> {
        let mut out: Vec<ArcId> = self
            .idx_out
            .range((node, 0)..(node + 1, 0))
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn node_label(&self, node: NodeId, instance: &Instance) -> String {
        let n = &self.nodes[node];
        match n.kind {
            NodeKind::Trip | NodeKind::ServiceTrip => instance.trips[n.trip.unwrap()].id.clone(),
            NodeKind::DepotSource => format!("{}:out", instance.depots[n.depot.unwrap()].id),
            NodeKind::DepotSink => format!("{}:in", instance.depots[n.depot.unwrap()].id),
        }
    }

    /// Human-readable arc name, e.g. `(T1,T2)->(T3,T3)/r1`.
    pub fn describe_arc(&self, arc: &HyperArc, instance: &Instance) -> String {
        let side = |nodes: &[NodeId], units: u8| {
            let names: Vec<String> = if nodes.len() == 1 && units == 2 {
                let l = self.node_label(nodes[0], instance);
                vec![l.clone(), l]
            } else {
                nodes
                    .iter()
                    .map(|&n| self.node_label(n, instance))
                    .collect()
            };
            if names.len() == 1 {
                names[0].clone()
            } else {
                format!("({})", names.join(","))
            }
        };
        format!(
            "{}->{}/{}",
            side(&arc.sources, arc.k_prime),
            side(&arc.targets, arc.k),
            instance.emu_types[arc.emu_type].id
        )
    }

    /// Graphviz rendering; hyper-arcs go through a small junction point.
    pub fn to_dot(&self, instance: &Instance) -> String {
        let mut out = String::from("digraph circulation {\n  rankdir=LR;\n");
        for node in &self.nodes {
            let shape = match node.kind {
                NodeKind::Trip => "circle",
                NodeKind::ServiceTrip => "doublecircle",
                NodeKind::DepotSource | NodeKind::DepotSink => "box",
            };
            let _ = writeln!(
                out,
                "  n{} [label=\"{}\", shape={}];",
                node.id,
                self.node_label(node.id, instance),
                shape
            );
        }
        for arc in &self.arcs {
            let label = format!("x{} {}", arc.id, instance.emu_types[arc.emu_type].id);
            let style = if arc.k == 2 || arc.k_prime == 2 {
                ", color=darkgreen, penwidth=2"
            } else {
                ""
            };
            if arc.sources.len() == 1 && arc.targets.len() == 1 {
                let _ = writeln!(
                    out,
                    "  n{} -> n{} [label=\"{}\"{}];",
                    arc.sources[0], arc.targets[0], label, style
                );
            } else {
                let _ = writeln!(out, "  h{} [shape=point, xlabel=\"{}\"];", arc.id, label);
                for s in &arc.sources {
                    let _ = writeln!(out, "  n{} -> h{} [arrowhead=none{}];", s, arc.id, style);
                }
                for t in &arc.targets {
                    let _ = writeln!(
                        out,
                        "  h{} -> n{} [{}];",
                        arc.id,
                        t,
                        style.trim_start_matches(", ")
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

struct Candidate {
    kind: ArcKind,
    sources: Vec<NodeId>,
    targets: Vec<NodeId>,
    emu_type: usize,
    k: u8,
    k_prime: u8,
}

/// Builds every arc admitted by the timetable, fleet and depot data.
pub fn build_hypergraph(instance: &Instance) -> Hypergraph {
    let num_depots = instance.depots.len();
    let num_trips = instance.trips.len();
    let trip_node = |t: usize| num_depots + t;

    let mut nodes = Vec::with_capacity(2 * num_depots + num_trips);
    for d in 0..num_depots {
        nodes.push(Node {
            id: d,
            kind: NodeKind::DepotSource,
            trip: None,
            depot: Some(d),
        });
    }
    for (t, trip) in instance.trips.iter().enumerate() {
        nodes.push(Node {
            id: trip_node(t),
            kind: if trip.obligatory {
                NodeKind::Trip
            } else {
                NodeKind::ServiceTrip
            },
            trip: Some(t),
            depot: None,
        });
    }
    for d in 0..num_depots {
        nodes.push(Node {
            id: num_depots + num_trips + d,
            kind: NodeKind::DepotSink,
            trip: None,
            depot: Some(d),
        });
    }

    let trips = &instance.trips;
    let admits: Vec<Vec<bool>> = trips
        .iter()
        .map(|t| instance.emu_types.iter().map(|r| t.allows(&r.id)).collect())
        .collect();
    let pairable =
        |t: usize, r: usize| admits[t][r] && trips[t].couplable && instance.emu_types[r].couplable;
    let connects = |a: usize, b: usize| {
        a != b
            && trips[a].destination == trips[b].origin
            && trips[b].depart >= trips[a].arrive
            && (instance.delta_min..=instance.delta_max)
                .contains(&(trips[b].depart - trips[a].arrive))
    };

    let mut candidates = Vec::new();
    for r in 0..instance.emu_types.len() {
        let type_id = &instance.emu_types[r].id;
        // successors[a] = trips b reachable from a with type r
        let successors: Vec<Vec<usize>> = (0..num_trips)
            .map(|a| {
                if !admits[a][r] {
                    return Vec::new();
                }
                (0..num_trips)
                    .filter(|&b| admits[b][r] && connects(a, b))
                    .collect()
            })
            .collect();
        let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); num_trips];
        for (a, succ) in successors.iter().enumerate() {
            for &b in succ {
                predecessors[b].push(a);
            }
        }

        for (d, depot) in instance.depots.iter().enumerate() {
            let (_, out_max) = depot.out_range(type_id);
            let (_, in_max) = depot.in_range(type_id);
            for t in 0..num_trips {
                if !admits[t][r] {
                    continue;
                }
                if out_max > 0 && trips[t].origin == depot.station {
                    candidates.push(Candidate {
                        kind: ArcKind::DepotOut,
                        sources: vec![d],
                        targets: vec![trip_node(t)],
                        emu_type: r,
                        k: 1,
                        k_prime: 1,
                    });
                    if out_max >= 2 && pairable(t, r) {
                        candidates.push(Candidate {
                            kind: ArcKind::DepotOut,
                            sources: vec![d],
                            targets: vec![trip_node(t)],
                            emu_type: r,
                            k: 2,
                            k_prime: 2,
                        });
                    }
                }
                if in_max > 0 && trips[t].destination == depot.station {
                    let sink = num_depots + num_trips + d;
                    candidates.push(Candidate {
                        kind: ArcKind::DepotIn,
                        sources: vec![trip_node(t)],
                        targets: vec![sink],
                        emu_type: r,
                        k: 1,
                        k_prime: 1,
                    });
                    if in_max >= 2 && pairable(t, r) {
                        candidates.push(Candidate {
                            kind: ArcKind::DepotIn,
                            sources: vec![trip_node(t)],
                            targets: vec![sink],
                            emu_type: r,
                            k: 2,
                            k_prime: 2,
                        });
                    }
                }
            }
        }

        for a in 0..num_trips {
            for &b in &successors[a] {
                candidates.push(Candidate {
                    kind: ArcKind::Transfer,
                    sources: vec![trip_node(a)],
                    targets: vec![trip_node(b)],
                    emu_type: r,
                    k: 1,
                    k_prime: 1,
                });
                if pairable(a, r) && pairable(b, r) {
                    candidates.push(Candidate {
                        kind: ArcKind::CoupledTransfer,
                        sources: vec![trip_node(a)],
                        targets: vec![trip_node(b)],
                        emu_type: r,
                        k: 2,
                        k_prime: 2,
                    });
                }
            }
            if pairable(a, r) {
                let succ = &successors[a];
                for (i, &b1) in succ.iter().enumerate() {
                    for &b2 in &succ[i + 1..] {
                        candidates.push(Candidate {
                            kind: ArcKind::Decouple,
                            sources: vec![trip_node(a)],
                            targets: vec![trip_node(b1), trip_node(b2)],
                            emu_type: r,
                            k: 1,
                            k_prime: 2,
                        });
                    }
                }
            }
        }
        for b in 0..num_trips {
            if !pairable(b, r) {
                continue;
            }
            let pred = &predecessors[b];
            for (i, &a1) in pred.iter().enumerate() {
                for &a2 in &pred[i + 1..] {
                    candidates.push(Candidate {
                        kind: ArcKind::Couple,
                        sources: vec![trip_node(a1), trip_node(a2)],
                        targets: vec![trip_node(b)],
                        emu_type: r,
                        k: 2,
                        k_prime: 1,
                    });
                }
            }
        }
    }

    candidates.sort_by(|x, y| {
        let group = |c: &Candidate| u8::from(c.k != 1 || c.k_prime != 1);
        (group(x), &x.sources, &x.targets, x.emu_type, x.kind).cmp(&(
            group(y),
            &y.sources,
            &y.targets,
            y.emu_type,
            y.kind,
        ))
    });

    let arcs: Vec<HyperArc> = candidates
        .into_iter()
        .enumerate()
        .map(|(id, c)| {
            let mut cost = Rational::from_integer(0);
            let mut target_shortages = Vec::new();
            for &node in &c.targets {
                if let Some(t) = nodes[node].trip {
                    cost += instance.running_cost(c.emu_type, t, c.k);
                    let ty = &instance.emu_types[c.emu_type];
                    let units = u32::from(c.k);
                    target_shortages.push(Shortage {
                        trip: t,
                        seats: trips[t].passengers.saturating_sub(units * ty.seats),
                        bikes: trips[t].bicycles.saturating_sub(units * ty.bike_slots),
                    });
                }
            }
            HyperArc {
                id,
                kind: c.kind,
                seat_shortage: target_shortages.iter().map(|s| s.seats).max().unwrap_or(0),
                bike_shortage: target_shortages.iter().map(|s| s.bikes).max().unwrap_or(0),
                target_shortages,
                sources: c.sources,
                targets: c.targets,
                emu_type: c.emu_type,
                k: c.k,
                k_prime: c.k_prime,
                cost,
            }
        })
        .collect();

    let mut idx_cover = vec![Vec::new(); num_trips];
    let mut idx_in: BTreeMap<(NodeId, usize), Vec<ArcId>> = BTreeMap::new();
    let mut idx_out: BTreeMap<(NodeId, usize), Vec<ArcId>> = BTreeMap::new();
    let mut idx_depot_out: BTreeMap<(usize, usize), Vec<ArcId>> = BTreeMap::new();
    let mut idx_depot_in: BTreeMap<(usize, usize), Vec<ArcId>> = BTreeMap::new();
    for arc in &arcs {
        for &s in &arc.sources {
            idx_out.entry((s, arc.emu_type)).or_default().push(arc.id);
        }
        for &t in &arc.targets {
            idx_in.entry((t, arc.emu_type)).or_default().push(arc.id);
            if let Some(trip) = nodes[t].trip {
                idx_cover[trip].push(arc.id);
            }
        }
        match arc.kind {
            ArcKind::DepotOut => idx_depot_out
                .entry((nodes[arc.sources[0]].depot.unwrap(), arc.emu_type))
                .or_default()
                .push(arc.id),
            ArcKind::DepotIn => idx_depot_in
                .entry((nodes[arc.targets[0]].depot.unwrap(), arc.emu_type))
                .or_default()
                .push(arc.id),
            _ => {}
        }
    }

    let idx_driver = instance
        .driver_windows
        .iter()
        .map(|w| {
            let depot = instance.depot_index(&w.depot);
            let license = w
                .license
                .as_ref()
                .and_then(|l| instance.licenses.iter().find(|x| &x.id == l));
            arcs.iter()
                .filter(|arc| {
                    arc.targets.iter().filter_map(|&n| nodes[n].trip).any(|t| {
                        trips[t].running_at(w.at)
                            && instance.driver_depot_of(t) == depot
                            && license.is_none_or(|l| {
                                l.covers(
                                    &instance.emu_types[arc.emu_type].id,
                                    trips[t].line.as_deref(),
                                )
                            })
                    })
                })
                .map(|arc| arc.id)
                .collect()
        })
        .collect();

    Hypergraph {
        nodes,
        arcs,
        num_depots,
        num_trips,
        idx_cover,
        idx_in,
        idx_out,
        idx_depot_out,
        idx_depot_in,
        idx_driver,
    }
}

/// Worst-case variable bounds next to the actual arc count.
pub fn size_bounds(instance: &Instance, graph: &Hypergraph) -> BoundReport {
    let (single, coupled) = instance.trip_partition();
    let r = instance.emu_types.len() as u128;
    let (s, c) = (single as u128, coupled as u128);
    BoundReport {
        trips_single: single,
        trips_coupled: coupled,
        emu_types: instance.emu_types.len(),
        variable_bound: s * s * r + c * c * c * r,
        per_trip_bound: (s + c) * (s + c) * r,
        actual_arcs: graph.arcs.len(),
        depot_arcs: graph
            .arcs
            .iter()
            .filter(|a| matches!(a.kind, ArcKind::DepotOut | ArcKind::DepotIn))
            .count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Instance;

    fn one_trip() -> Instance {
        Instance::from_json_str(
            r#"{"alpha": 1, "delta_min": 5, "delta_max": 60,
            "tolerances": {"seat_single": 0, "seat_coupled": 0, "bike_single": 0, "bike_coupled": 0},
            "emu_types": [{"id": "r1", "seats": 100, "cost_per_km": 2}],
            "depots": [{"id": "d", "station": "A", "out_max": {"r1": 1}}],
            "trips": [{"id": "t1", "origin": "A", "destination": "B", "depart": 360, "arrive": 400,
                       "passengers": 130, "allowed_types": ["r1"], "distance": 3}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_instance_has_single_depot_arc() {
        let inst = one_trip();
        let g = build_hypergraph(&inst);
        assert_eq!(g.arcs.len(), 1);
        let arc = &g.arcs[0];
        assert_eq!(arc.kind, ArcKind::DepotOut);
        assert_eq!(arc.cost, Rational::from_integer(6));
        assert_eq!(arc.seat_shortage, 30);
        assert_eq!(g.idx_cover, vec![vec![0]]);
        assert_eq!(g.idx_depot_out[&(0, 0)], vec![0]);
        assert_eq!(g.describe_arc(arc, &inst), "d:out->t1/r1");
    }

    #[test]
    fn bound_specializes_without_coupling() {
        let inst = one_trip();
        let g = build_hypergraph(&inst);
        let b = size_bounds(&inst, &g);
        assert_eq!((b.trips_single, b.trips_coupled), (1, 0));
        assert_eq!(b.variable_bound, 1);
        assert_eq!(b.depot_arcs, 1);
    }

    #[test]
    fn dot_mentions_every_arc() {
        let inst = one_trip();
        let g = build_hypergraph(&inst);
        let dot = g.to_dot(&inst);
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("x0 r1"));
    }
}

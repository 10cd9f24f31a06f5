//! Binary ILP over the arcs of a hypergraph.
//!
//! One binary variable per arc. Rows come in seven families: coverage of each
//! obligatory trip, per-type flow balance at trips, at most one outgoing arc
//! per trip, depot dispatch and return ranges, the aggregated capacity
//! prohibition, and driver checkpoint ranges.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DriverWeighting, DriverWindow, Instance};
use crate::netbuild::{ArcKind, HyperArc, Hypergraph};
use crate::num::{format_decimal, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IlpError {
    #[error("assignment has {got} entries, model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Coverage,
    FlowBalance,
    OutDegree,
    DepotOut,
    DepotIn,
    CapacityForbid,
    Driver,
}

impl RowKind {
    pub const ALL: [RowKind; 7] = [
        RowKind::Coverage,
        RowKind::FlowBalance,
        RowKind::OutDegree,
        RowKind::DepotOut,
        RowKind::DepotIn,
        RowKind::CapacityForbid,
        RowKind::Driver,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Coverage => "coverage",
            RowKind::FlowBalance => "flow_balance",
            RowKind::OutDegree => "out_degree",
            RowKind::DepotOut => "depot_out",
            RowKind::DepotIn => "depot_in",
            RowKind::CapacityForbid => "capacity_forbid",
            RowKind::Driver => "driver",
        }
    }
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq(i64),
    Le(i64),
    Range { lo: i64, hi: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub kind: RowKind,
    pub coeffs: Vec<(usize, i64)>,
    pub relation: Relation,
    pub tag: String,
}

impl ConstraintRow {
    pub fn lhs(&self, x: &[bool]) -> i64 {
        self.coeffs
            .iter()
            .filter(|(v, _)| x[*v])
            .map(|(_, c)| c)
            .sum()
    }

    /// Smallest and largest attainable left-hand side over binary assignments.
    pub fn lhs_range(&self) -> (i64, i64) {
        self.coeffs.iter().fold(
            (0, 0),
            |(lo, hi), &(_, c)| {
                if c < 0 {
                    (lo + c, hi)
                } else {
                    (lo, hi + c)
                }
            },
        )
    }

    /// Inclusive bounds on the left-hand side; `None` means unbounded.
    pub fn bounds(&self) -> (Option<i64>, Option<i64>) {
        match self.relation {
            Relation::Eq(v) => (Some(v), Some(v)),
            Relation::Le(v) => (None, Some(v)),
            Relation::Range { lo, hi } => (Some(lo), Some(hi)),
        }
    }

    pub fn admits(&self, lhs: i64) -> bool {
        let (lo, hi) = self.bounds();
        lo.is_none_or(|lo| lhs >= lo) && hi.is_none_or(|hi| lhs <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpModel {
    pub num_vars: usize,
    /// Dense objective coefficients, one per variable.
    pub objective: Vec<Rational>,
    pub constraints: Vec<ConstraintRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub tag: String,
    pub lhs: i64,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: BTreeMap<RowKind, Vec<Violation>>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn violated_families(&self) -> Vec<RowKind> {
        self.violations.keys().copied().collect()
    }

    pub fn count(&self, kind: RowKind) -> usize {
        self.violations.get(&kind).map_or(0, Vec::len)
    }
}

impl IlpModel {
    pub fn empty() -> Self {
        IlpModel {
            num_vars: 0,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    fn check_len(&self, x: &[bool]) -> Result<(), IlpError> {
        if x.len() != self.num_vars {
            return Err(IlpError::LengthMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn rows_of(&self, kind: RowKind) -> impl Iterator<Item = &ConstraintRow> {
        self.constraints.iter().filter(move |r| r.kind == kind)
    }

    /// Largest possible objective change from flipping any subset of variables.
    pub fn objective_spread(&self) -> Rational {
        self.objective
            .iter()
            .map(|c| if *c < Rational::zero() { -c } else { *c })
            .sum()
    }
}

pub fn objective_value(model: &IlpModel, x: &[bool]) -> Result<Rational, IlpError> {
    model.check_len(x)?;
    Ok(model
        .objective
        .iter()
        .zip(x)
        .filter(|(_, &on)| on)
        .map(|(c, _)| *c)
        .sum())
}

pub fn check_feasibility(model: &IlpModel, x: &[bool]) -> Result<FeasibilityReport, IlpError> {
    model.check_len(x)?;
    let mut report = FeasibilityReport::default();
    for (i, row) in model.constraints.iter().enumerate() {
        let lhs = row.lhs(x);
        if !row.admits(lhs) {
            let (lo, hi) = row.bounds();
            report
                .violations
                .entry(row.kind)
                .or_default()
                .push(Violation {
                    row: i,
                    tag: row.tag.clone(),
                    lhs,
                    lo,
                    hi,
                });
        }
    }
    report.feasible = report.violations.is_empty();
    Ok(report)
}

fn minutes_label(at: u32) -> String {
    format!("{:02}:{:02}", at / 60, at % 60)
}

/// Whether an arc breaks the seat or bicycle tolerance on any trip it points to.
pub fn exceeds_tolerance(arc: &HyperArc, instance: &Instance) -> bool {
    arc.target_shortages.iter().any(|s| {
        let tol = instance.tolerances_for(s.trip);
        s.seats > tol.seats(arc.k) || s.bikes > tol.bikes(arc.k)
    })
}

/// Weight of `arc` in the crew row of `window`.
fn driver_weight(
    instance: &Instance,
    graph: &Hypergraph,
    arc: &HyperArc,
    window: &DriverWindow,
) -> i64 {
    let depot = instance.depot_index(&window.depot);
    let license = window
        .license
        .as_ref()
        .and_then(|l| instance.licenses.iter().find(|x| &x.id == l));
    let trains = graph
        .target_trips(arc)
        .filter(|&t| {
            let trip = &instance.trips[t];
            trip.running_at(window.at)
                && instance.driver_depot_of(t) == depot
                && license.is_none_or(|l| {
                    l.covers(&instance.emu_types[arc.emu_type].id, trip.line.as_deref())
                })
        })
        .count() as i64;
    match instance.driver_weighting {
        DriverWeighting::PerEmu => trains * i64::from(arc.k),
        DriverWeighting::PerTrain => trains,
    }
}

fn driver_rows(graph: &Hypergraph, instance: &Instance, licensed: bool) -> Vec<ConstraintRow> {
    instance
        .driver_windows
        .iter()
        .enumerate()
        .filter(|(_, w)| w.license.is_some() == licensed)
        .filter_map(|(wi, w)| {
            let coeffs: Vec<(usize, i64)> = graph.idx_driver[wi]
                .iter()
                .map(|&a| (a, driver_weight(instance, graph, &graph.arcs[a], w)))
                .filter(|&(_, c)| c != 0)
                .collect();
            if coeffs.is_empty() && w.min_drivers == 0 {
                return None;
            }
            let mut tag = format!("driver:{}@{}", w.depot, minutes_label(w.at));
            if let Some(l) = &w.license {
                let _ = write!(tag, "/{l}");
            }
            Some(ConstraintRow {
                kind: RowKind::Driver,
                coeffs,
                relation: Relation::Range {
                    lo: i64::from(w.min_drivers),
                    hi: i64::from(w.max_drivers),
                },
                tag,
            })
        })
        .collect()
}

/// Encodes objective and the general constraint families. Licensed crew
/// windows are left to [`encode_licensed_drivers`].
pub fn encode_ilp(graph: &Hypergraph, instance: &Instance) -> IlpModel {
    let num_vars = graph.arcs.len();
    let objective = graph
        .arcs
        .iter()
        .map(|arc| {
            let mut c = instance.alpha * arc.cost;
            if arc.kind == ArcKind::DepotOut {
                c += Rational::from_integer(i128::from(arc.k_prime));
            }
            c
        })
        .collect();

    let mut constraints = Vec::new();
    for (t, trip) in instance.timetable() {
        constraints.push(ConstraintRow {
            kind: RowKind::Coverage,
            coeffs: graph.idx_cover[t].iter().map(|&a| (a, 1)).collect(),
            relation: Relation::Eq(1),
            tag: format!("cover:{}", trip.id),
        });
    }

    // Trips without any successor end their rotation; balance applies to the rest.
    let active: Vec<usize> = (0..instance.trips.len())
        .filter(|&t| !graph.out_arcs(graph.trip_node(t)).is_empty())
        .collect();
    for &t in &active {
        let node = graph.trip_node(t);
        for (r, ty) in instance.emu_types.iter().enumerate() {
            let incoming = graph
                .idx_in
                .get(&(node, r))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            let outgoing = graph
                .idx_out
                .get(&(node, r))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            if incoming.is_empty() && outgoing.is_empty() {
                continue;
            }
            let mut coeffs: Vec<(usize, i64)> = incoming
                .iter()
                .map(|&a| (a, i64::from(graph.arcs[a].k)))
                .chain(
                    outgoing
                        .iter()
                        .map(|&a| (a, -i64::from(graph.arcs[a].k_prime))),
                )
                .collect();
            coeffs.sort_unstable();
            constraints.push(ConstraintRow {
                kind: RowKind::FlowBalance,
                coeffs,
                relation: Relation::Eq(0),
                tag: format!("flow:{}/{}", instance.trips[t].id, ty.id),
            });
        }
    }
    for &t in &active {
        constraints.push(ConstraintRow {
            kind: RowKind::OutDegree,
            coeffs: graph
                .out_arcs(graph.trip_node(t))
                .into_iter()
                .map(|a| (a, 1))
                .collect(),
            relation: Relation::Le(1),
            tag: format!("out:{}", instance.trips[t].id),
        });
    }

    for (kind, index, name) in [
        (RowKind::DepotOut, &graph.idx_depot_out, "depot_out"),
        (RowKind::DepotIn, &graph.idx_depot_in, "depot_in"),
    ] {
        for (d, depot) in instance.depots.iter().enumerate() {
            for (r, ty) in instance.emu_types.iter().enumerate() {
                let (lo, hi) = if kind == RowKind::DepotOut {
                    depot.out_range(&ty.id)
                } else {
                    depot.in_range(&ty.id)
                };
                let coeffs: Vec<(usize, i64)> = index
                    .get(&(d, r))
                    .map(|arcs| {
                        arcs.iter()
                            .map(|&a| {
                                let arc = &graph.arcs[a];
                                let units = if kind == RowKind::DepotOut {
                                    arc.k_prime
                                } else {
                                    arc.k
                                };
                                (a, i64::from(units))
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                if coeffs.is_empty() && lo == 0 {
                    continue;
                }
                constraints.push(ConstraintRow {
                    kind,
                    coeffs,
                    relation: Relation::Range {
                        lo: i64::from(lo),
                        hi: i64::from(hi),
                    },
                    tag: format!("{name}:{}/{}", depot.id, ty.id),
                });
            }
        }
    }

    let forbidden: Vec<(usize, i64)> = graph
        .arcs
        .iter()
        .filter(|arc| exceeds_tolerance(arc, instance))
        .map(|arc| (arc.id, 1))
        .collect();
    if !forbidden.is_empty() {
        constraints.push(ConstraintRow {
            kind: RowKind::CapacityForbid,
            coeffs: forbidden,
            relation: Relation::Eq(0),
            tag: "capacity".to_string(),
        });
    }

    constraints.extend(driver_rows(graph, instance, false));

    IlpModel {
        num_vars,
        objective,
        constraints,
    }
}

/// Crew rows for windows that name a license, over the arcs that license covers.
pub fn encode_licensed_drivers(graph: &Hypergraph, instance: &Instance) -> Vec<ConstraintRow> {
    driver_rows(graph, instance, true)
}

/// The general model plus licensed crew rows.
pub fn encode_full(graph: &Hypergraph, instance: &Instance) -> IlpModel {
    let mut model = encode_ilp(graph, instance);
    model
        .constraints
        .extend(encode_licensed_drivers(graph, instance));
    model
}

fn push_terms(out: &mut String, terms: &[(String, usize)]) {
    for (i, (coef, var)) in terms.iter().enumerate() {
        if i > 0 && i % 8 == 0 {
            out.push_str("\n   ");
        }
        let _ = write!(out, " {coef} x{var}");
    }
}

fn signed(value: &Rational) -> String {
    let text = format_decimal(value);
    if text.starts_with('-') {
        text
    } else {
        format!("+{text}")
    }
}

/// CPLEX LP text with variables named `x{arc_id}`; ranges become two rows.
pub fn export_lp(model: &IlpModel) -> String {
    let mut out = String::from("\\ rolling stock circulation model\nMinimize\n obj:");
    let terms: Vec<(String, usize)> = model
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(v, c)| (signed(c), v))
        .collect();
    if terms.is_empty() && model.num_vars > 0 {
        out.push_str(" 0 x0");
    }
    push_terms(&mut out, &terms);
    out.push_str("\nSubject To\n");
    for (i, row) in model.constraints.iter().enumerate() {
        let mut terms: Vec<(String, usize)> = row
            .coeffs
            .iter()
            .map(|&(v, c)| {
                (
                    if c < 0 {
                        c.to_string()
                    } else {
                        format!("+{c}")
                    },
                    v,
                )
            })
            .collect();
        if terms.is_empty() {
            if model.num_vars == 0 {
                let _ = writeln!(out, "\\ c{i} {} has no variables", row.tag);
                continue;
            }
            terms.push(("0".to_string(), 0));
        }
        let name = format!("c{i}_{}", row.kind.as_str());
        let mut emit = |suffix: &str, op: &str, rhs: i64| {
            let _ = write!(out, " {name}{suffix}:");
            push_terms(&mut out, &terms);
            let _ = writeln!(out, " {op} {rhs}");
        };
        match row.relation {
            Relation::Eq(v) => emit("", "=", v),
            Relation::Le(v) => emit("", "<=", v),
            Relation::Range { lo, hi } if lo == hi => emit("", "=", lo),
            Relation::Range { lo, hi } => {
                emit("_lo", ">=", lo);
                emit("_hi", "<=", hi);
            }
        }
    }
    out.push_str("Bounds\n");
    for v in 0..model.num_vars {
        let _ = writeln!(out, " 0 <= x{v} <= 1");
    }
    out.push_str("Binary\n");
    for v in 0..model.num_vars {
        let _ = writeln!(out, " x{v}");
    }
    out.push_str("End\n");
    out
}

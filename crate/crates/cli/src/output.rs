//! JSON and table documents written by the subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use rollstock::exact::Solution;
use rollstock::ilp::{IlpModel, RowKind};
use rollstock::netbuild::Hypergraph;
use rollstock::num::{format_decimal, to_f64};
use rollstock::qubo::ScalingReport;
use rollstock::Instance;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub id: usize,
    pub arc: String,
    pub kind: String,
    pub emu_type: String,
    /// Objective coefficient.
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSummary {
    pub rows: usize,
    pub violated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub objective: f64,
    /// Exact decimal (or fraction) text of the objective.
    pub objective_exact: String,
    pub feasible: bool,
    pub selected: Vec<ArcRecord>,
    pub constraints: BTreeMap<String, RowSummary>,
}

/// Header shared by every solution-bearing file, so `diagram` can rebuild the
/// same hypergraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub instance: String,
    pub alpha: String,
    pub delta_max: u32,
    pub num_arcs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlpDoc {
    #[serde(flatten)]
    pub header: RunHeader,
    pub status: String,
    pub nodes: u64,
    pub solution: Option<SolutionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioDoc {
    #[serde(flatten)]
    pub header: RunHeader,
    pub exhaustive: bool,
    pub solutions: Vec<SolutionDoc>,
}

/// Either file shape, as accepted by `diagram`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AnyDoc {
    Ilp(IlpDoc),
    Portfolio(PortfolioDoc),
}

impl AnyDoc {
    pub fn header(&self) -> &RunHeader {
        match self {
            AnyDoc::Ilp(d) => &d.header,
            AnyDoc::Portfolio(d) => &d.header,
        }
    }

    pub fn pick(&self, rank: usize) -> Result<Option<&SolutionDoc>> {
        match self {
            AnyDoc::Ilp(d) => Ok(d.solution.as_ref()),
            AnyDoc::Portfolio(d) if d.solutions.is_empty() => Ok(None),
            AnyDoc::Portfolio(d) => match d.solutions.get(rank) {
                Some(s) => Ok(Some(s)),
                None => bail!(
                    "portfolio has {} solutions, rank {rank} requested",
                    d.solutions.len()
                ),
            },
        }
    }
}

pub fn header(instance: &Instance, graph: &Hypergraph) -> RunHeader {
    RunHeader {
        instance: instance.meta.name.clone(),
        alpha: format_decimal(&instance.alpha),
        delta_max: instance.delta_max,
        num_arcs: graph.arcs.len(),
    }
}

pub fn solution_doc(
    instance: &Instance,
    graph: &Hypergraph,
    ilp: &IlpModel,
    sol: &Solution,
) -> SolutionDoc {
    let selected = sol
        .decoded
        .iter()
        .map(|&a| {
            let arc = &graph.arcs[a];
            ArcRecord {
                id: a,
                arc: graph.describe_arc(arc, instance),
                kind: arc.kind.as_str().to_string(),
                emu_type: instance.emu_types[arc.emu_type].id.clone(),
                cost: to_f64(&ilp.objective[a]),
            }
        })
        .collect();
    let mut constraints: BTreeMap<String, RowSummary> = BTreeMap::new();
    for row in &ilp.constraints {
        constraints
            .entry(row.kind.as_str().to_string())
            .or_default()
            .rows += 1;
    }
    for kind in RowKind::ALL {
        let n = sol.report.count(kind);
        if n > 0 {
            constraints
                .entry(kind.as_str().to_string())
                .or_default()
                .violated = n;
        }
    }
    SolutionDoc {
        objective: to_f64(&sol.objective),
        objective_exact: format_decimal(&sol.objective),
        feasible: sol.report.feasible,
        selected,
        constraints,
    }
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "T",
    "T_single/T_coupled",
    "D",
    "R",
    "delta",
    "Delta",
    "ilp_vars",
    "qubo_vars/terms",
    "slack_vars",
    "qubo_term_bound",
    "instance",
];

fn report_cells(r: &ScalingReport) -> [String; 11] {
    [
        r.trips.to_string(),
        format!("{}/{}", r.trips_single, r.trips_coupled),
        r.depots.to_string(),
        r.emu_types.to_string(),
        r.delta_min.to_string(),
        r.delta_max.to_string(),
        r.ilp_vars.to_string(),
        format!("{}/{}", r.qubo_vars, r.qubo_terms),
        r.slack_vars.to_string(),
        r.bound_total.to_string(),
        r.name.clone(),
    ]
}

pub fn report_csv(rows: &[ScalingReport]) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let cells = report_cells(r).map(|c| {
            if c.contains([',', '"']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c
            }
        });
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn report_markdown(rows: &[ScalingReport]) -> String {
    let mut out = format!("| {} |\n", REPORT_COLUMNS.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(REPORT_COLUMNS.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", report_cells(r).join(" | "));
    }
    out
}

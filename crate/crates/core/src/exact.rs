//! Exact solvers for small binary ILPs: branch-and-bound, full enumeration,
//! and a brute-force oracle.
//!
//! Objective coefficients are scaled to integers once, so the search never
//! touches rational arithmetic. Each row keeps its attainable `[min, max]`
//! left-hand side under the partial assignment; a variable whose value would
//! push a row out of its bounds is fixed the other way.
//!
//! Nodes that survive the combinatorial bounds solve the LP relaxation over
//! the free variables. An integral LP optimum closes the subtree outright.

use std::time::Duration;

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolutionStatus};
use web_time::Instant;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ilp::{check_feasibility, FeasibilityReport, IlpModel, Relation, RowKind};
use crate::num::Rational;

pub const BRUTE_FORCE_MAX_VARS: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("brute force supports at most {max} variables, model has {got}")]
    TooLarge { max: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x: Vec<bool>,
    #[serde(with = "crate::num::serde_decimal")]
    pub objective: Rational,
    pub report: FeasibilityReport,
    /// Ids of selected arcs, ascending.
    pub decoded: Vec<usize>,
}

impl Solution {
    fn new(model: &IlpModel, x: Vec<bool>) -> Self {
        let objective = model
            .objective
            .iter()
            .zip(&x)
            .filter(|(_, &on)| on)
            .map(|(c, _)| *c)
            .sum();
        let report = check_feasibility(model, &x).expect("assignment built for this model");
        let decoded = x
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| i)
            .collect();
        Solution {
            x,
            objective,
            report,
            decoded,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionPortfolio {
    pub solutions: Vec<Solution>,
    pub exhaustive: bool,
}

impl SolutionPortfolio {
    /// Sorts by objective, then by selected arcs, and drops repeated `x`.
    pub fn normalize(&mut self) {
        self.solutions.sort_by(|a, b| {
            a.objective
                .cmp(&b.objective)
                .then_with(|| a.decoded.cmp(&b.decoded))
        });
        self.solutions.dedup_by(|a, b| a.x == b.x);
    }

    pub fn best(&self) -> Option<&Solution> {
        self.solutions.first()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactStatus {
    Optimal,
    Infeasible,
    /// Stopped early; `solution` holds the incumbent if there is one.
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub status: ExactStatus,
    pub solution: Option<Solution>,
    /// Lower bound at the root after propagation.
    pub root_bound: Option<Rational>,
    pub nodes: u64,
    pub elapsed: Duration,
}

impl ExactResult {
    pub fn is_optimal(&self) -> bool {
        self.status == ExactStatus::Optimal
    }
}

enum Relaxation {
    Infeasible,
    Optimal { bound: f64, values: Vec<f64> },
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    pub time_limit: Option<Duration>,
    /// Solve the LP relaxation at nodes the combinatorial bounds keep.
    pub lp_bound: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            time_limit: None,
            lp_bound: true,
        }
    }
}

const FREE: i8 = -1;
const NEG_INF: i64 = i64::MIN / 4;
const POS_INF: i64 = i64::MAX / 4;

struct Search {
    lo: Vec<i64>,
    hi: Vec<i64>,
    rows: Vec<Vec<(usize, i64)>>,
    cols: Vec<Vec<(usize, i64)>>,
    coverage: Vec<usize>,
    /// Objective times `scale`, so that splitting over covered rows stays integral.
    cost: Vec<i128>,
    scale: i128,
    cover_count: Vec<i128>,
    val: Vec<i8>,
    min: Vec<i64>,
    max: Vec<i64>,
    /// Left-hand side from fixed variables only.
    fixed: Vec<i64>,
    is_coverage: Vec<bool>,
    trail: Vec<usize>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    fixed_cost: i128,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
    prune: bool,
    best: Option<i128>,
    use_lp: bool,
    /// Out-degree rows usable as transfer sources, and each arc's positions among them.
    source_rows: Vec<usize>,
    arc_sources: Vec<Vec<usize>>,
    load: Vec<Vec<usize>>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl Search {
    fn new(model: &IlpModel, deadline: Option<Instant>) -> Self {
        let n = model.num_vars;
        let m = model.constraints.len();
        let mut rows = Vec::with_capacity(m);
        let mut cols = vec![Vec::new(); n];
        let mut lo = Vec::with_capacity(m);
        let mut hi = Vec::with_capacity(m);
        let mut coverage = Vec::new();
        for (r, row) in model.constraints.iter().enumerate() {
            let mut merged: Vec<(usize, i64)> = row.coeffs.clone();
            merged.sort_unstable();
            merged.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            merged.retain(|&(_, c)| c != 0);
            for &(v, c) in &merged {
                cols[v].push((r, c));
            }
            let (l, h) = row.bounds();
            lo.push(l.unwrap_or(NEG_INF));
            hi.push(h.unwrap_or(POS_INF));
            if row.kind == RowKind::Coverage
                && row.relation == Relation::Eq(1)
                && merged.iter().all(|&(_, c)| c > 0)
            {
                coverage.push(r);
            }
            rows.push(merged);
        }

        let mut cover_count = vec![0i128; n];
        for &r in &coverage {
            for &(v, _) in &rows[r] {
                cover_count[v] += 1;
            }
        }
        let denom_lcm = model
            .objective
            .iter()
            .fold(1i128, |acc, c| acc.lcm(c.denom()));
        let split_lcm = cover_count.iter().fold(1i128, |acc, &k| acc.lcm(&k.max(1)));
        let scale = denom_lcm * split_lcm;
        let cost = model
            .objective
            .iter()
            .map(|c| c.numer() * (scale / c.denom()))
            .collect();

        let mut source_rows = Vec::new();
        let mut arc_sources = vec![Vec::new(); n];
        for (r, row) in model.constraints.iter().enumerate() {
            if row.kind == RowKind::OutDegree
                && row.relation == Relation::Le(1)
                && rows[r].iter().all(|&(_, c)| c == 1)
            {
                for &(v, _) in &rows[r] {
                    arc_sources[v].push(source_rows.len());
                }
                source_rows.push(r);
            }
        }

        let mut min = vec![0i64; m];
        let mut max = vec![0i64; m];
        for (r, row) in rows.iter().enumerate() {
            for &(_, c) in row {
                if c < 0 {
                    min[r] += c;
                } else {
                    max[r] += c;
                }
            }
        }
        let mut is_coverage = vec![false; m];
        for &r in &coverage {
            is_coverage[r] = true;
        }
        Search {
            lo,
            hi,
            rows,
            cols,
            coverage,
            cost,
            scale,
            cover_count,
            val: vec![FREE; n],
            min,
            max,
            fixed: vec![0; m],
            is_coverage,
            trail: Vec::new(),
            queue: Vec::new(),
            queued: vec![false; m],
            fixed_cost: 0,
            nodes: 0,
            deadline,
            timed_out: false,
            prune: false,
            best: None,
            use_lp: false,
            load: vec![Vec::new(); source_rows.len()],
            stamp: vec![0; source_rows.len()],
            source_rows,
            arc_sources,
            epoch: 0,
        }
    }

    fn assign(&mut self, v: usize, on: bool) {
        self.val[v] = on as i8;
        self.trail.push(v);
        if on {
            self.fixed_cost += self.cost[v];
        }
        for &(r, c) in &self.cols[v] {
            if on {
                self.fixed[r] += c;
            }
            match (on, c > 0) {
                (true, true) => self.min[r] += c,
                (false, true) => self.max[r] -= c,
                (true, false) => self.max[r] += c,
                (false, false) => self.min[r] -= c,
            }
            if !self.queued[r] {
                self.queued[r] = true;
                self.queue.push(r);
            }
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            let on = self.val[v] == 1;
            if on {
                self.fixed_cost -= self.cost[v];
            }
            for &(r, c) in &self.cols[v] {
                if on {
                    self.fixed[r] -= c;
                }
                match (on, c > 0) {
                    (true, true) => self.min[r] -= c,
                    (false, true) => self.max[r] += c,
                    (true, false) => self.max[r] -= c,
                    (false, false) => self.min[r] += c,
                }
            }
            self.val[v] = FREE;
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r] = false;
        }
    }

    /// Fixes forced variables until nothing changes; false on a conflict.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            let (lo, hi) = (self.lo[r], self.hi[r]);
            if self.min[r] > hi || self.max[r] < lo {
                self.clear_queue();
                return false;
            }
            // Tight rows force every free variable.
            let slack_up = hi - self.min[r];
            let slack_down = self.max[r] - lo;
            let loose = self.rows[r]
                .iter()
                .map(|&(_, c)| c.abs())
                .max()
                .is_none_or(|big| big <= slack_up && big <= slack_down);
            if loose {
                continue;
            }
            for i in 0..self.rows[r].len() {
                let (v, c) = self.rows[r][i];
                if self.val[v] != FREE {
                    continue;
                }
                let a = c.abs();
                let (slack_up, slack_down) = (self.hi[r] - self.min[r], self.max[r] - self.lo[r]);
                // Positive coefficient: 1 raises min, 0 lowers max. Negative: mirrored.
                let (bad_one, bad_zero) = if c > 0 {
                    (a > slack_up, a > slack_down)
                } else {
                    (a > slack_down, a > slack_up)
                };
                match (bad_one, bad_zero) {
                    (true, true) => {
                        self.clear_queue();
                        return false;
                    }
                    (true, false) => self.assign(v, false),
                    (false, true) => self.assign(v, true),
                    (false, false) => {}
                }
            }
            if self.min[r] > self.hi[r] || self.max[r] < self.lo[r] {
                self.clear_queue();
                return false;
            }
        }
        true
    }

    fn lower_bound(&self) -> i128 {
        let mut bound = self.fixed_cost;
        for (v, &c) in self.cost.iter().enumerate() {
            if c < 0 && self.val[v] == FREE {
                bound += c;
            }
        }
        for &r in &self.coverage {
            if self.min[r] >= self.lo[r] {
                continue;
            }
            let cheapest = self.rows[r]
                .iter()
                .filter(|&&(v, _)| self.val[v] == FREE)
                .map(|&(v, _)| self.cost[v].max(0) / self.cover_count[v])
                .min();
            bound += cheapest.unwrap_or(0);
        }
        bound
    }

    /// Extra cost from fleet size, or `None` if the open rows cannot all be covered.
    ///
    /// An open row is covered either by an arc leaving a source row (a trip with
    /// one outgoing arc) or by a sourceless arc. Every source serves at most as
    /// many rows as its widest arc covers, so a maximum b-matching caps the rows
    /// covered from sources; the rest pay their cheapest sourceless premium.
    fn matching_extra(&mut self) -> Option<i128> {
        let open: Vec<usize> = self
            .coverage
            .iter()
            .copied()
            .filter(|&r| self.min[r] < self.lo[r])
            .collect();
        if open.is_empty() {
            return Some(0);
        }
        let mut cap = vec![0usize; self.source_rows.len()];
        for (u, &r) in self.source_rows.iter().enumerate() {
            if self.min[r] >= self.hi[r] {
                continue;
            }
            cap[u] = self.rows[r]
                .iter()
                .filter(|&&(v, _)| self.val[v] == FREE)
                .map(|&(v, _)| self.cover_count[v] as usize)
                .max()
                .unwrap_or(0);
        }
        for l in &mut self.load {
            l.clear();
        }
        let mut premiums = Vec::with_capacity(open.len());
        let mut matched = 0;
        for &t in &open {
            let mut any = i128::MAX;
            let mut sourceless = i128::MAX;
            for &(v, _) in &self.rows[t] {
                if self.val[v] != FREE {
                    continue;
                }
                let c = self.cost[v].max(0) / self.cover_count[v];
                any = any.min(c);
                if self.arc_sources[v].is_empty() {
                    sourceless = sourceless.min(c);
                }
            }
            if sourceless != i128::MAX {
                premiums.push(sourceless - any);
            }
            self.epoch += 1;
            if self.augment(t, &cap) {
                matched += 1;
            }
        }
        let need = open.len() - matched;
        if premiums.len() < need {
            return None;
        }
        premiums.sort_unstable();
        Some(premiums[..need].iter().sum())
    }

    fn augment(&mut self, t: usize, cap: &[usize]) -> bool {
        for i in 0..self.rows[t].len() {
            let v = self.rows[t][i].0;
            if self.val[v] != FREE {
                continue;
            }
            for j in 0..self.arc_sources[v].len() {
                let u = self.arc_sources[v][j];
                if cap[u] == 0 || self.stamp[u] == self.epoch {
                    continue;
                }
                self.stamp[u] = self.epoch;
                if self.load[u].len() < cap[u] {
                    self.load[u].push(t);
                    return true;
                }
                for k in 0..self.load[u].len() {
                    let other = self.load[u][k];
                    if self.augment(other, cap) {
                        self.load[u][k] = t;
                        return true;
                    }
                }
            }
        }
        false
    }

    /// LP relaxation over the free variables, in scaled cost units.
    fn relax(&self) -> Relaxation {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let mut lp_var = vec![None; self.val.len()];
        for (v, slot) in lp_var.iter_mut().enumerate() {
            if self.val[v] == FREE {
                *slot = Some(p.add_var(self.cost[v] as f64, (0.0, 1.0)));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            let expr: Vec<_> = row
                .iter()
                .filter_map(|&(v, c)| lp_var[v].map(|x| (x, c as f64)))
                .collect();
            if expr.is_empty() {
                continue;
            }
            let lo = (self.lo[r] > NEG_INF).then(|| (self.lo[r] - self.fixed[r]) as f64);
            let hi = (self.hi[r] < POS_INF).then(|| (self.hi[r] - self.fixed[r]) as f64);
            match (lo, hi) {
                (Some(l), Some(h)) if l == h => p.add_constraint(&expr[..], ComparisonOp::Eq, l),
                (l, h) => {
                    if let Some(l) = l {
                        p.add_constraint(&expr[..], ComparisonOp::Ge, l);
                    }
                    if let Some(h) = h {
                        p.add_constraint(&expr[..], ComparisonOp::Le, h);
                    }
                }
            }
        }
        if let Some(deadline) = self.deadline {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Relaxation::Unknown;
            }
            p.set_time_limit(left);
        }
        match p.solve() {
            Err(microlp::Error::Infeasible) => Relaxation::Infeasible,
            Err(_) => Relaxation::Unknown,
            Ok(outcome) => match outcome.solution() {
                Some(sol) if sol.status() == SolutionStatus::Optimal => {
                    let values = lp_var
                        .iter()
                        .enumerate()
                        .map(|(v, x)| match x {
                            Some(x) => sol.var_value_raw(*x),
                            None => f64::from(self.val[v]),
                        })
                        .collect();
                    Relaxation::Optimal {
                        bound: self.fixed_cost as f64 + sol.objective(),
                        values,
                    }
                }
                _ => Relaxation::Unknown,
            },
        }
    }

    /// Fixes every free variable to its rounded LP value; false if that fails.
    fn try_integral(
        &mut self,
        values: &[f64],
        leaf: &mut dyn FnMut(&[i8], i128) -> bool,
    ) -> Option<bool> {
        if values.iter().any(|&x| (x - x.round()).abs() > 1e-6) {
            return None;
        }
        let mark = self.trail.len();
        for v in 0..values.len() {
            if self.val[v] == FREE {
                self.assign(v, values[v] > 0.5);
            }
        }
        let result = if self.propagate() && self.best.is_none_or(|b| self.fixed_cost < b) {
            let value = self.fixed_cost;
            self.best = Some(value);
            log::debug!(
                "incumbent {} after {} nodes",
                value as f64 / self.scale as f64,
                self.nodes
            );
            Some(leaf(&self.val, value))
        } else {
            None
        };
        self.undo(mark);
        result
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if self.nodes.is_multiple_of(256) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.timed_out = true;
                }
            }
        }
        self.timed_out
    }

    /// Row whose fixed part misses its bounds with the fewest free variables able
    /// to repair it; coverage rows win ties. Returns the row and the needed sign.
    fn branching_row(&self) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool, usize, usize)> = None;
        for r in 0..self.rows.len() {
            let up = if self.fixed[r] < self.lo[r] {
                true
            } else if self.fixed[r] > self.hi[r] {
                false
            } else {
                continue;
            };
            let count = self.rows[r]
                .iter()
                .filter(|&&(v, c)| self.val[v] == FREE && (c > 0) == up)
                .count();
            let rank = if self.is_coverage[r] { 0 } else { 1 };
            if best.is_none_or(|(_, _, bc, br)| (count, rank) < (bc, br)) {
                best = Some((r, up, count, rank));
            }
        }
        best.map(|(r, up, _, _)| (r, up))
    }

    /// Depth-first search; `leaf` returns false to stop the whole search.
    fn dfs(&mut self, leaf: &mut dyn FnMut(&[i8], i128) -> bool) -> bool {
        self.nodes += 1;
        if self.out_of_time() {
            return false;
        }
        if self.prune {
            let base = self.lower_bound();
            if self.best.is_some_and(|b| base >= b) {
                return true;
            }
            match self.matching_extra() {
                None => return true,
                Some(extra) if self.best.is_some_and(|b| base + extra >= b) => return true,
                _ => {}
            }
        }
        let mut lp_values = None;
        if self.use_lp {
            match self.relax() {
                Relaxation::Infeasible => return true,
                // Distinct objective values differ by at least one scaled unit.
                Relaxation::Optimal { bound, .. }
                    if self.best.is_some_and(|b| bound > b as f64 - 0.5) =>
                {
                    return true
                }
                Relaxation::Optimal { values, .. } => {
                    if let Some(go_on) = self.try_integral(&values, leaf) {
                        return go_on;
                    }
                    lp_values = Some(values);
                }
                Relaxation::Unknown => {}
            }
        }

        if let Some((r, up)) = self.branching_row() {
            let mut cands: Vec<usize> = self.rows[r]
                .iter()
                .filter(|&&(v, c)| self.val[v] == FREE && (c > 0) == up)
                .map(|&(v, _)| v)
                .collect();
            match &lp_values {
                Some(lp) => cands.sort_by(|&a, &b| {
                    lp[b]
                        .total_cmp(&lp[a])
                        .then((self.cost[a], a).cmp(&(self.cost[b], b)))
                }),
                None => cands.sort_by_key(|&v| (self.cost[v], v)),
            }
            let node_mark = self.trail.len();
            for v in cands {
                if self.val[v] == 0 {
                    continue;
                }
                if self.val[v] == 1 {
                    // Forced on by excluding the earlier siblings.
                    if !self.dfs(leaf) {
                        self.undo(node_mark);
                        return false;
                    }
                    break;
                }
                let mark = self.trail.len();
                self.assign(v, true);
                if self.propagate() && !self.dfs(leaf) {
                    self.undo(node_mark);
                    return false;
                }
                self.undo(mark);
                // Later siblings exclude this choice.
                self.assign(v, false);
                if !self.propagate() {
                    break;
                }
            }
            self.undo(node_mark);
            return true;
        }

        let Some(v) = self.val.iter().position(|&s| s == FREE) else {
            let value = self.fixed_cost;
            if self.prune {
                // Reaching a leaf past the bound check means a strict improvement.
                self.best = Some(value);
                log::debug!(
                    "incumbent {} after {} nodes",
                    value as f64 / self.scale as f64,
                    self.nodes
                );
            }
            return leaf(&self.val, value);
        };
        let first = self.cost[v] < 0;
        for on in [first, !first] {
            let mark = self.trail.len();
            self.assign(v, on);
            if self.propagate() && !self.dfs(leaf) {
                self.undo(mark);
                return false;
            }
            self.undo(mark);
        }
        true
    }

    /// Root propagation over every row; false if the model is infeasible outright.
    fn root(&mut self) -> bool {
        for r in 0..self.rows.len() {
            self.queued[r] = true;
            self.queue.push(r);
        }
        self.propagate()
    }
}

fn to_bits(val: &[i8]) -> Vec<bool> {
    val.iter().map(|&s| s == 1).collect()
}

/// Branch-and-bound to proven optimality, or the incumbent when `time_limit` runs out.
pub fn solve_exact(
    model: &IlpModel,
    time_limit: Option<Duration>,
) -> Result<ExactResult, ExactError> {
    solve_exact_with(
        model,
        &ExactOptions {
            time_limit,
            ..ExactOptions::default()
        },
    )
}

pub fn solve_exact_with(
    model: &IlpModel,
    options: &ExactOptions,
) -> Result<ExactResult, ExactError> {
    let start = Instant::now();
    let mut search = Search::new(model, options.time_limit.map(|t| start + t));
    search.prune = true;
    search.use_lp = options.lp_bound;
    let mut incumbent = None;
    let mut root_bound = None;
    if search.root() {
        root_bound = search
            .matching_extra()
            .map(|extra| Rational::new(search.lower_bound() + extra, search.scale));
        let mut leaf = |val: &[i8], _: i128| {
            incumbent = Some(to_bits(val));
            true
        };
        search.dfs(&mut leaf);
    }
    let status = if search.timed_out {
        ExactStatus::TimeLimit
    } else if incumbent.is_some() {
        ExactStatus::Optimal
    } else {
        ExactStatus::Infeasible
    };
    Ok(ExactResult {
        status,
        solution: incumbent.map(|x| Solution::new(model, x)),
        root_bound,
        nodes: search.nodes,
        elapsed: start.elapsed(),
    })
}

/// Every feasible assignment, up to `max_count` of them.
pub fn enumerate_feasible(model: &IlpModel, max_count: usize) -> SolutionPortfolio {
    let mut portfolio = SolutionPortfolio {
        solutions: Vec::new(),
        exhaustive: true,
    };
    if model.num_vars == 0 {
        if model.constraints.iter().all(|r| r.admits(0)) {
            portfolio.solutions.push(Solution::new(model, Vec::new()));
        }
        return portfolio;
    }
    let mut search = Search::new(model, None);
    if search.root() {
        let mut found: Vec<Vec<bool>> = Vec::new();
        let mut truncated = false;
        let mut leaf = |val: &[i8], _: i128| {
            if found.len() == max_count {
                truncated = true;
                return false;
            }
            found.push(to_bits(val));
            true
        };
        search.dfs(&mut leaf);
        portfolio.exhaustive = !truncated;
        portfolio.solutions = found.into_iter().map(|x| Solution::new(model, x)).collect();
    }
    portfolio.normalize();
    portfolio
}

/// Exhaustive sweep over all `2^n` assignments in Gray-code order.
pub fn brute_force(model: &IlpModel) -> Result<SolutionPortfolio, ExactError> {
    let n = model.num_vars;
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(ExactError::TooLarge {
            max: BRUTE_FORCE_MAX_VARS,
            got: n,
        });
    }
    let mut cols: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for (r, row) in model.constraints.iter().enumerate() {
        for &(v, c) in &row.coeffs {
            cols[v].push((r, c));
        }
    }
    let mut lhs = vec![0i64; model.constraints.len()];
    let ok = |r: usize, lhs: i64| model.constraints[r].admits(lhs);
    let mut violated = (0..lhs.len()).filter(|&r| !ok(r, 0)).count();
    let mut x = vec![false; n];
    let mut found = Vec::new();
    if violated == 0 {
        found.push(x.clone());
    }
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        x[v] = !x[v];
        let sign = if x[v] { 1 } else { -1 };
        for &(r, c) in &cols[v] {
            let before = ok(r, lhs[r]);
            lhs[r] += sign * c;
            match (before, ok(r, lhs[r])) {
                (true, false) => violated += 1,
                (false, true) => violated -= 1,
                _ => {}
            }
        }
        if violated == 0 {
            found.push(x.clone());
        }
    }
    let mut portfolio = SolutionPortfolio {
        solutions: found.into_iter().map(|x| Solution::new(model, x)).collect(),
        exhaustive: true,
    };
    portfolio.normalize();
    Ok(portfolio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::ConstraintRow;
    use num_traits::Zero;

    fn row(kind: RowKind, coeffs: Vec<(usize, i64)>, relation: Relation) -> ConstraintRow {
        ConstraintRow {
            kind,
            coeffs,
            relation,
            tag: kind.to_string(),
        }
    }

    fn model(objective: &[i64], constraints: Vec<ConstraintRow>) -> IlpModel {
        IlpModel {
            num_vars: objective.len(),
            objective: objective
                .iter()
                .map(|&c| Rational::from_integer(c.into()))
                .collect(),
            constraints,
        }
    }

    #[test]
    fn zero_vars() {
        let m = model(&[], vec![]);
        let r = solve_exact(&m, None).unwrap();
        assert!(r.is_optimal());
        assert_eq!(r.solution.unwrap().objective, Rational::from_integer(0));
        let p = brute_force(&m).unwrap();
        assert_eq!(p.solutions.len(), 1);
        assert!(p.solutions[0].x.is_empty());

        let m = model(&[], vec![row(RowKind::Coverage, vec![], Relation::Eq(1))]);
        assert!(brute_force(&m).unwrap().solutions.is_empty());
        assert!(enumerate_feasible(&m, 10).solutions.is_empty());
        assert_eq!(
            solve_exact(&m, None).unwrap().status,
            ExactStatus::Infeasible
        );
    }

    #[test]
    fn uncoverable_row_is_infeasible() {
        let m = model(
            &[1, 1],
            vec![
                row(RowKind::Coverage, vec![(0, 1)], Relation::Eq(1)),
                row(RowKind::Coverage, vec![], Relation::Eq(1)),
            ],
        );
        let r = solve_exact(&m, None).unwrap();
        assert_eq!(r.status, ExactStatus::Infeasible);
        assert!(r.solution.is_none());
        let p = enumerate_feasible(&m, 100);
        assert!(p.solutions.is_empty());
        assert!(p.exhaustive);
    }

    #[test]
    fn picks_cheapest_cover() {
        let m = model(
            &[5, 3, 4],
            vec![
                row(RowKind::Coverage, vec![(0, 1), (1, 1)], Relation::Eq(1)),
                row(RowKind::Coverage, vec![(1, 1), (2, 1)], Relation::Eq(1)),
            ],
        );
        let r = solve_exact(&m, None).unwrap();
        assert!(r.is_optimal());
        let s = r.solution.unwrap();
        assert_eq!(s.decoded, vec![1]);
        assert_eq!(s.objective, Rational::from_integer(3));
    }

    #[test]
    fn negative_costs_and_ranges() {
        let m = model(
            &[-2, 1, -1, 3],
            vec![
                row(
                    RowKind::Driver,
                    vec![(0, 1), (1, 1), (2, 2)],
                    Relation::Range { lo: 1, hi: 2 },
                ),
                row(RowKind::OutDegree, vec![(0, 1), (3, -1)], Relation::Le(0)),
            ],
        );
        let bf = brute_force(&m).unwrap();
        let r = solve_exact(&m, None).unwrap();
        assert_eq!(r.solution.unwrap().objective, bf.solutions[0].objective);
        let en = enumerate_feasible(&m, 100);
        assert_eq!(en.solutions.len(), bf.solutions.len());
    }

    #[test]
    fn truncated_enumeration() {
        let m = model(&[1, 1, 1], vec![]);
        let p = enumerate_feasible(&m, 3);
        assert_eq!(p.solutions.len(), 3);
        assert!(!p.exhaustive);
        let p = enumerate_feasible(&m, 8);
        assert_eq!(p.solutions.len(), 8);
        assert!(p.exhaustive);
    }

    #[test]
    fn brute_force_limit() {
        let m = model(&[0; 25], vec![]);
        assert!(matches!(brute_force(&m), Err(ExactError::TooLarge { .. })));
    }

    #[test]
    fn zero_objective_is_fine() {
        let m = model(
            &[0, 0],
            vec![row(
                RowKind::Coverage,
                vec![(0, 1), (1, 1)],
                Relation::Eq(1),
            )],
        );
        assert_eq!(
            solve_exact(&m, None).unwrap().solution.unwrap().objective,
            Rational::zero()
        );
    }
}

//! Penalty-method QUBO built from an [`IlpModel`], its Ising form, and sample decoding.
//!
//! Equalities become squared penalties. Inequalities and ranges get a unary
//! chain of slack bits inside the square, `(lhs - lo - s_1 - ... - s_w)^2`
//! with `w = hi - lo`. The capacity prohibition is the one linear penalty:
//! each selected over-capacity arc costs exactly its weight once.
//!
//! Q is stored upper-triangular with linear terms on the diagonal, so the
//! energy of `y` is `sum_{i<=j} Q_ij y_i y_j + offset`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ilp::{check_feasibility, FeasibilityReport, IlpModel, Relation, RowKind};
use crate::model::Instance;
use crate::netbuild::Hypergraph;
use crate::num::{format_decimal, to_f64, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuboError {
    #[error("row `{tag}` cannot be encoded: {reason}")]
    UnsupportedRow { tag: String, reason: &'static str },
    #[error("sample has {got} entries, model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
}

/// Penalty weights: coverage, continuity, depot ranges, capacity, crew.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lambdas(pub [Rational; 5]);

impl Lambdas {
    pub fn uniform(value: Rational) -> Self {
        Lambdas([value; 5])
    }

    pub fn min(&self) -> Rational {
        *self.0.iter().min().unwrap()
    }

    pub fn for_kind(&self, kind: RowKind) -> Rational {
        self.0[family(kind)]
    }
}

impl Default for Lambdas {
    fn default() -> Self {
        Lambdas::uniform(Rational::from_integer(100))
    }
}

fn family(kind: RowKind) -> usize {
    match kind {
        RowKind::Coverage => 0,
        RowKind::FlowBalance | RowKind::OutDegree => 1,
        RowKind::DepotOut | RowKind::DepotIn => 2,
        RowKind::CapacityForbid => 3,
        RowKind::Driver => 4,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackInfo {
    pub tag: String,
    /// 1-based position in the row's unary chain.
    pub position: usize,
}

/// How one ILP row was turned into a penalty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenaltyRow {
    pub row: usize,
    pub kind: RowKind,
    /// Lower end of the encoded range; the slack chain counts `lhs - lo`.
    pub lo: i64,
    pub slack_start: usize,
    pub slack_len: usize,
    pub linear: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    pub num_decision: usize,
    pub num_slack: usize,
    /// Upper-triangular entries `(i, j)` with `i <= j`; never holds an explicit zero.
    pub q: BTreeMap<(usize, usize), Rational>,
    pub offset: Rational,
    pub lambdas: Lambdas,
    /// Slack index (counted from 0 after the decision block) to its row and position.
    pub slack_map: Vec<SlackInfo>,
    /// Decision index to arc id.
    pub decode_hint: Vec<usize>,
    pub penalty_rows: Vec<PenaltyRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub h: Vec<Rational>,
    /// Couplings `(i, j)` with `i < j`.
    pub j: BTreeMap<(usize, usize), Rational>,
    pub offset: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSample {
    pub y: Vec<bool>,
    pub energy: Rational,
    pub x: Vec<bool>,
    /// Every slack chain holds its energy-minimizing count for this `x`.
    pub slack_consistent: bool,
    pub report: FeasibilityReport,
}

/// Accumulates `weight * (sum_i a_i z_i - c)^2` into an upper-triangular map.
struct Expander {
    q: BTreeMap<(usize, usize), Rational>,
    offset: Rational,
}

impl Expander {
    fn add(&mut self, i: usize, j: usize, value: Rational) {
        if value.is_zero() {
            return;
        }
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.q.entry(key).or_insert_with(Rational::zero) += value;
    }

    fn square(&mut self, weight: Rational, terms: &[(usize, i64)], constant: i64) {
        let c = Rational::from_integer(i128::from(constant));
        for (a, &(i, ai)) in terms.iter().enumerate() {
            let ai = Rational::from_integer(i128::from(ai));
            // z^2 = z for binaries, plus the cross term with the constant
            self.add(
                i,
                i,
                weight * (ai * ai - Rational::from_integer(2) * c * ai),
            );
            for &(j, aj) in &terms[a + 1..] {
                let aj = Rational::from_integer(i128::from(aj));
                self.add(i, j, weight * Rational::from_integer(2) * ai * aj);
            }
        }
        self.offset += weight * c * c;
    }
}

/// Builds the QUBO; slacks are allocated in row order, then chain position.
pub fn encode_qubo(model: &IlpModel, lambdas: Lambdas) -> Result<QuboModel, QuboError> {
    let n = model.num_vars;
    let mut exp = Expander {
        q: BTreeMap::new(),
        offset: Rational::zero(),
    };
    let mut slack_map = Vec::new();
    let mut penalty_rows = Vec::new();

    for (i, obj) in model.objective.iter().enumerate() {
        exp.add(i, i, *obj);
    }

    for (r, row) in model.constraints.iter().enumerate() {
        let weight = lambdas.for_kind(row.kind);
        let mut coeffs: BTreeMap<usize, i64> = BTreeMap::new();
        for &(v, c) in &row.coeffs {
            *coeffs.entry(v).or_default() += c;
        }
        coeffs.retain(|_, c| *c != 0);
        let terms: Vec<(usize, i64)> = coeffs.into_iter().collect();

        if row.kind == RowKind::CapacityForbid {
            if row.relation != Relation::Eq(0) || terms.iter().any(|&(_, c)| c < 0) {
                return Err(QuboError::UnsupportedRow {
                    tag: row.tag.clone(),
                    reason: "capacity rows must be nonnegative sums fixed to zero",
                });
            }
            for &(v, c) in &terms {
                exp.add(v, v, weight * Rational::from_integer(i128::from(c)));
            }
            penalty_rows.push(PenaltyRow {
                row: r,
                kind: row.kind,
                lo: 0,
                slack_start: n + slack_map.len(),
                slack_len: 0,
                linear: true,
            });
            continue;
        }

        let (lo, width) = match row.relation {
            Relation::Eq(v) => (v, 0),
            Relation::Le(v) => {
                let (min_lhs, _) = row.lhs_range();
                (min_lhs.min(v), (v - min_lhs).max(0))
            }
            Relation::Range { lo, hi } => (lo, hi - lo),
        };
        let slack_start = n + slack_map.len();
        let mut full = terms;
        for p in 0..width as usize {
            slack_map.push(SlackInfo {
                tag: row.tag.clone(),
                position: p + 1,
            });
            full.push((slack_start + p, -1));
        }
        exp.square(weight, &full, lo);
        penalty_rows.push(PenaltyRow {
            row: r,
            kind: row.kind,
            lo,
            slack_start,
            slack_len: width as usize,
            linear: false,
        });
    }

    let mut q = exp.q;
    q.retain(|_, v| !v.is_zero());
    Ok(QuboModel {
        num_decision: n,
        num_slack: slack_map.len(),
        q,
        offset: exp.offset,
        lambdas,
        slack_map,
        decode_hint: (0..n).collect(),
        penalty_rows,
    })
}

/// Sparse `f64` copy of a QUBO for samplers.
#[derive(Debug, Clone)]
pub struct SparseQubo {
    pub linear: Vec<f64>,
    /// Symmetric adjacency: `neighbors[i]` lists `(j, Q_ij)` for `j != i`.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    pub offset: f64,
}

impl SparseQubo {
    pub fn energy(&self, y: &[bool]) -> f64 {
        let mut e = self.offset;
        for (i, &on) in y.iter().enumerate() {
            if !on {
                continue;
            }
            e += self.linear[i];
            e += self.neighbors[i]
                .iter()
                .filter(|&&(j, _)| j > i && y[j])
                .map(|&(_, v)| v)
                .sum::<f64>();
        }
        e
    }
}

impl QuboModel {
    pub fn num_vars(&self) -> usize {
        self.num_decision + self.num_slack
    }

    pub fn num_terms(&self) -> usize {
        self.q.len()
    }

    pub fn to_sparse(&self) -> SparseQubo {
        let n = self.num_vars();
        let mut linear = vec![0.0; n];
        let mut neighbors = vec![Vec::new(); n];
        for (&(i, j), v) in &self.q {
            let v = to_f64(v);
            if i == j {
                linear[i] = v;
            } else {
                neighbors[i].push((j, v));
                neighbors[j].push((i, v));
            }
        }
        SparseQubo {
            linear,
            neighbors,
            offset: to_f64(&self.offset),
        }
    }

    /// Sets each slack chain to its energy-minimizing count for decision vector `x`.
    pub fn complete_slacks(&self, ilp: &IlpModel, x: &[bool]) -> Vec<bool> {
        let mut y = x.to_vec();
        y.resize(self.num_vars(), false);
        for pr in &self.penalty_rows {
            let lhs = ilp.constraints[pr.row].lhs(x);
            let fill = (lhs - pr.lo).clamp(0, pr.slack_len as i64) as usize;
            for s in 0..fill {
                y[pr.slack_start + s] = true;
            }
        }
        y
    }

    /// COO text: header line, then `i j value` with `i <= j`.
    pub fn to_coo(&self) -> String {
        let mut out = format!(
            "# qubo num_vars={} num_decision={} num_slack={} offset={}\n",
            self.num_vars(),
            self.num_decision,
            self.num_slack,
            format_decimal(&self.offset)
        );
        for (&(i, j), v) in &self.q {
            let _ = writeln!(out, "{i} {j} {}", format_decimal(v));
        }
        out
    }
}

pub fn qubo_energy(model: &QuboModel, y: &[bool]) -> Result<Rational, QuboError> {
    if y.len() != model.num_vars() {
        return Err(QuboError::LengthMismatch {
            expected: model.num_vars(),
            got: y.len(),
        });
    }
    Ok(model
        .q
        .iter()
        .filter(|(&(i, j), _)| y[i] && y[j])
        .map(|(_, v)| *v)
        .fold(model.offset, |acc, v| acc + v))
}

/// Spin form via `y = (s + 1) / 2`; energies agree exactly on every assignment.
pub fn to_ising(model: &QuboModel) -> IsingModel {
    let n = model.num_vars();
    let half = Rational::new(1, 2);
    let quarter = Rational::new(1, 4);
    let mut h = vec![Rational::zero(); n];
    let mut j = BTreeMap::new();
    let mut offset = model.offset;
    for (&(a, b), v) in &model.q {
        if a == b {
            h[a] += v * half;
            offset += v * half;
        } else {
            j.insert((a, b), v * quarter);
            h[a] += v * quarter;
            h[b] += v * quarter;
            offset += v * quarter;
        }
    }
    IsingModel { h, j, offset }
}

impl IsingModel {
    pub fn energy(&self, spins: &[i8]) -> Rational {
        let s = |i: usize| Rational::from_integer(i128::from(spins[i]));
        let mut e = self.offset;
        for (i, hi) in self.h.iter().enumerate() {
            e += hi * s(i);
        }
        for (&(a, b), v) in &self.j {
            e += v * s(a) * s(b);
        }
        e
    }

    pub fn to_coo(&self) -> String {
        let mut out = format!(
            "# ising num_spins={} offset={}\n",
            self.h.len(),
            format_decimal(&self.offset)
        );
        for (i, v) in self.h.iter().enumerate() {
            if !v.is_zero() {
                let _ = writeln!(out, "{i} {i} {}", format_decimal(v));
            }
        }
        for (&(a, b), v) in &self.j {
            let _ = writeln!(out, "{a} {b} {}", format_decimal(v));
        }
        out
    }
}

pub fn spins_from_bits(y: &[bool]) -> Vec<i8> {
    y.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

pub fn decode(model: &QuboModel, ilp: &IlpModel, y: &[bool]) -> Result<DecodedSample, QuboError> {
    let energy = qubo_energy(model, y)?;
    let x = y[..model.num_decision].to_vec();
    let report = check_feasibility(ilp, &x).map_err(|_| QuboError::LengthMismatch {
        expected: ilp.num_vars,
        got: x.len(),
    })?;
    let slack_consistent = model.penalty_rows.iter().all(|pr| {
        let lhs = ilp.constraints[pr.row].lhs(&x);
        let want = (lhs - pr.lo).clamp(0, pr.slack_len as i64) as usize;
        let have = y[pr.slack_start..pr.slack_start + pr.slack_len]
            .iter()
            .filter(|&&b| b)
            .count();
        have == want
    });
    Ok(DecodedSample {
        y: y.to_vec(),
        energy,
        x,
        slack_consistent,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub name: String,
    pub trips: usize,
    pub trips_single: usize,
    pub trips_coupled: usize,
    pub depots: usize,
    pub emu_types: usize,
    pub delta_min: u32,
    pub delta_max: u32,
    pub ilp_vars: usize,
    pub ilp_rows: usize,
    pub qubo_vars: usize,
    pub slack_vars: usize,
    pub qubo_terms: usize,
    /// `|T|^5 |R|^2`
    pub bound_coverage: u128,
    /// `2 |R| |T| (|R| |T|^2)^2`
    pub bound_continuity: u128,
    /// `2 |R| |T| (2 |R| |T| + N)^2`
    pub bound_depot: u128,
    /// `|D| |checkpoints| (2 |R| |T| + A)^2`
    pub bound_driver: u128,
    /// Sum of the family bounds plus one linear term per arc for capacity.
    pub bound_total: u128,
}

pub fn scaling_report(
    instance: &Instance,
    graph: &Hypergraph,
    ilp: &IlpModel,
    qubo: &QuboModel,
) -> ScalingReport {
    let (single, coupled) = instance.trip_partition();
    let t = (single + coupled) as u128;
    let r = instance.emu_types.len() as u128;
    let d = instance.depots.len() as u128;
    let fleet = instance
        .depots
        .iter()
        .flat_map(|dep| dep.out_max.values().chain(dep.in_max.values()))
        .copied()
        .max()
        .unwrap_or(0) as u128;
    let crew = instance
        .driver_windows
        .iter()
        .map(|w| w.max_drivers)
        .max()
        .unwrap_or(0) as u128;
    let mut checkpoints: Vec<u32> = instance.driver_windows.iter().map(|w| w.at).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let cps = checkpoints.len() as u128;

    let bound_coverage = t.pow(5) * r * r;
    let bound_continuity = 2 * r * t * (r * t * t).pow(2);
    let bound_depot = 2 * r * t * (2 * r * t + fleet).pow(2);
    let bound_driver = d * cps * (2 * r * t + crew).pow(2);
    ScalingReport {
        name: instance.meta.name.clone(),
        trips: single + coupled,
        trips_single: single,
        trips_coupled: coupled,
        depots: instance.depots.len(),
        emu_types: instance.emu_types.len(),
        delta_min: instance.delta_min,
        delta_max: instance.delta_max,
        ilp_vars: ilp.num_vars,
        ilp_rows: ilp.constraints.len(),
        qubo_vars: qubo.num_vars(),
        slack_vars: qubo.num_slack,
        qubo_terms: qubo.num_terms(),
        bound_coverage,
        bound_continuity,
        bound_depot,
        bound_driver,
        bound_total: bound_coverage
            + bound_continuity
            + bound_depot
            + bound_driver
            + graph.arcs.len() as u128,
    }
}

/// Energy of the all-slack-consistent completion of `x`.
pub fn completed_energy(model: &QuboModel, ilp: &IlpModel, x: &[bool]) -> Rational {
    let y = model.complete_slacks(ilp, x);
    qubo_energy(model, &y).expect("completion has model length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::ConstraintRow;

    fn row(kind: RowKind, coeffs: Vec<(usize, i64)>, relation: Relation) -> ConstraintRow {
        ConstraintRow {
            kind,
            coeffs,
            relation,
            tag: format!("{kind}"),
        }
    }

    #[test]
    fn single_variable_ising() {
        let c = Rational::new(-7, 3);
        let model = QuboModel {
            num_decision: 1,
            num_slack: 0,
            q: BTreeMap::from([((0, 0), c)]),
            offset: Rational::zero(),
            lambdas: Lambdas::default(),
            slack_map: vec![],
            decode_hint: vec![0],
            penalty_rows: vec![],
        };
        let ising = to_ising(&model);
        assert_eq!(ising.h, vec![c / Rational::from_integer(2)]);
        assert_eq!(ising.offset, c / Rational::from_integer(2));
        assert_eq!(ising.energy(&[1]), c);
        assert_eq!(ising.energy(&[-1]), Rational::zero());
    }

    #[test]
    fn equality_rows_need_no_slack() {
        let ilp = IlpModel {
            num_vars: 3,
            objective: vec![Rational::zero(); 3],
            constraints: vec![
                row(RowKind::Coverage, vec![(0, 1), (1, 1)], Relation::Eq(1)),
                row(RowKind::FlowBalance, vec![(1, 1), (2, -1)], Relation::Eq(0)),
                row(RowKind::OutDegree, vec![(2, 1)], Relation::Le(1)),
            ],
        };
        let q = encode_qubo(&ilp, Lambdas::default()).unwrap();
        assert_eq!(q.num_slack, 1);
        assert_eq!(q.slack_map[0].tag, "out_degree");
    }

    #[test]
    fn double_cover_costs_lambda() {
        let ilp = IlpModel {
            num_vars: 2,
            objective: vec![Rational::zero(); 2],
            constraints: vec![row(
                RowKind::Coverage,
                vec![(0, 1), (1, 1)],
                Relation::Eq(1),
            )],
        };
        let q = encode_qubo(&ilp, Lambdas::default()).unwrap();
        assert_eq!(
            qubo_energy(&q, &[true, true]).unwrap(),
            Rational::from_integer(100)
        );
        assert_eq!(qubo_energy(&q, &[true, false]).unwrap(), Rational::zero());
        assert_eq!(
            qubo_energy(&q, &[false, false]).unwrap(),
            Rational::from_integer(100)
        );
        assert!(matches!(
            qubo_energy(&q, &[true]),
            Err(QuboError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn capacity_is_linear() {
        let ilp = IlpModel {
            num_vars: 2,
            objective: vec![Rational::zero(); 2],
            constraints: vec![row(
                RowKind::CapacityForbid,
                vec![(0, 1), (1, 1)],
                Relation::Eq(0),
            )],
        };
        let q = encode_qubo(&ilp, Lambdas::uniform(Rational::from_integer(7))).unwrap();
        assert_eq!(q.num_terms(), 2);
        assert_eq!(
            qubo_energy(&q, &[true, true]).unwrap(),
            Rational::from_integer(14)
        );

        let bad = IlpModel {
            num_vars: 1,
            objective: vec![Rational::zero()],
            constraints: vec![row(RowKind::CapacityForbid, vec![(0, -1)], Relation::Eq(0))],
        };
        assert!(matches!(
            encode_qubo(&bad, Lambdas::default()),
            Err(QuboError::UnsupportedRow { .. })
        ));
    }

    #[test]
    fn range_slacks_absorb_the_gap() {
        let ilp = IlpModel {
            num_vars: 3,
            objective: vec![Rational::zero(); 3],
            constraints: vec![row(
                RowKind::Driver,
                vec![(0, 1), (1, 1), (2, 2)],
                Relation::Range { lo: 1, hi: 3 },
            )],
        };
        let q = encode_qubo(&ilp, Lambdas::default()).unwrap();
        assert_eq!(q.num_slack, 2);
        for bits in 0..8u32 {
            let x: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            let lhs = ilp.constraints[0].lhs(&x);
            let e = completed_energy(&q, &ilp, &x);
            let gap = if lhs < 1 {
                1 - lhs
            } else if lhs > 3 {
                lhs - 3
            } else {
                0
            };
            assert_eq!(
                e,
                Rational::from_integer(100 * i128::from(gap * gap)),
                "x={x:?}"
            );
        }
    }

    #[test]
    fn coo_is_deterministic() {
        let ilp = IlpModel {
            num_vars: 2,
            objective: vec![Rational::new(1, 2), Rational::zero()],
            constraints: vec![row(
                RowKind::Coverage,
                vec![(0, 1), (1, 1)],
                Relation::Eq(1),
            )],
        };
        let q = encode_qubo(&ilp, Lambdas::default()).unwrap();
        let text = q.to_coo();
        assert_eq!(text, q.to_coo());
        assert!(text.starts_with("# qubo num_vars=2 num_decision=2 num_slack=0 offset=100\n"));
        assert!(text.contains("0 0 -99.5\n"));
        assert!(text.contains("0 1 200\n"));
    }
}

//! Simulated annealing over a QUBO, and the sample-to-portfolio pipeline.
//!
//! Each read is an independent single-flip Metropolis chain under a geometric
//! inverse-temperature ramp. Read `i` draws from ChaCha stream `i` under key
//! `seed`, so small seeds do not share chains. Reads can run on
//! the rayon pool; results are merged and sorted, so the sample set does not
//! depend on thread scheduling.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use web_time::Instant;

use crate::exact::{Solution, SolutionPortfolio};
use crate::ilp::{encode_full, objective_value, IlpModel, RowKind};
use crate::model::Instance;
use crate::netbuild::build_hypergraph;
use crate::num::Rational;
use crate::qubo::{decode, encode_qubo, qubo_energy, Lambdas, QuboError, QuboModel};

#[derive(Debug, Error, PartialEq)]
pub enum AnnealError {
    #[error("invalid anneal parameters: {0}")]
    Params(String),
    #[error("model has no variables")]
    Empty,
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub num_reads: usize,
    pub sweeps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            num_reads: 100,
            sweeps: 1000,
            beta_min: 0.01,
            beta_max: 10.0,
            seed: 0,
        }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<(), AnnealError> {
        if self.num_reads == 0 {
            return Err(AnnealError::Params("num_reads must be at least 1".into()));
        }
        if !(self.beta_min > 0.0 && self.beta_min.is_finite() && self.beta_max.is_finite()) {
            return Err(AnnealError::Params(
                "betas must be positive and finite".into(),
            ));
        }
        if self.beta_min > self.beta_max {
            return Err(AnnealError::Params(format!(
                "beta_min {} exceeds beta_max {}",
                self.beta_min, self.beta_max
            )));
        }
        Ok(())
    }

    /// Inverse temperature at each sweep.
    pub fn schedule(&self) -> Vec<f64> {
        match self.sweeps {
            0 => Vec::new(),
            1 => vec![self.beta_max],
            n => {
                let ratio = (self.beta_max / self.beta_min).powf(1.0 / (n - 1) as f64);
                (0..n)
                    .map(|i| self.beta_min * ratio.powi(i as i32))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub y: Vec<bool>,
    #[serde(with = "crate::num::serde_decimal")]
    pub energy: Rational,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    /// Distinct states, lowest energy first.
    pub samples: Vec<Sample>,
    pub num_reads: usize,
}

impl SampleSet {
    pub fn lowest(&self) -> Option<&Sample> {
        self.samples.first()
    }

    /// Fraction of reads ending at or below `energy`.
    pub fn hit_rate(&self, energy: Rational) -> f64 {
        if self.num_reads == 0 {
            return 0.0;
        }
        let hits: usize = self
            .samples
            .iter()
            .filter(|s| s.energy <= energy)
            .map(|s| s.multiplicity)
            .sum();
        hits as f64 / self.num_reads as f64
    }
}

fn run_read(
    linear: &[f64],
    neighbors: &[Vec<(usize, f64)>],
    schedule: &[f64],
    seed: u64,
    read: u64,
) -> Vec<bool> {
    let n = linear.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(read);
    let mut y: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    // field[i] = energy change of turning i on, given the rest
    let mut field: Vec<f64> = (0..n)
        .map(|i| {
            linear[i]
                + neighbors[i]
                    .iter()
                    .filter(|&&(j, _)| y[j])
                    .map(|&(_, q)| q)
                    .sum::<f64>()
        })
        .collect();
    for &beta in schedule {
        for i in 0..n {
            let delta = if y[i] { -field[i] } else { field[i] };
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp();
            if accept {
                y[i] = !y[i];
                let sign = if y[i] { 1.0 } else { -1.0 };
                for &(j, q) in &neighbors[i] {
                    field[j] += sign * q;
                }
            }
        }
    }
    y
}

/// Runs `num_reads` chains and returns distinct final states with exact energies.
pub fn anneal(model: &QuboModel, params: &AnnealParams) -> Result<SampleSet, AnnealError> {
    params.validate()?;
    if model.num_vars() == 0 {
        return Err(AnnealError::Empty);
    }
    let sparse = model.to_sparse();
    let schedule = params.schedule();
    let read = |r: usize| {
        run_read(
            &sparse.linear,
            &sparse.neighbors,
            &schedule,
            params.seed,
            r as u64,
        )
    };

    #[cfg(feature = "parallel")]
    let finals: Vec<Vec<bool>> = {
        use rayon::prelude::*;
        (0..params.num_reads).into_par_iter().map(read).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let finals: Vec<Vec<bool>> = (0..params.num_reads).map(read).collect();

    let mut counts: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    for y in finals {
        *counts.entry(y).or_default() += 1;
    }
    let mut samples = counts
        .into_iter()
        .map(|(y, multiplicity)| {
            let energy = qubo_energy(model, &y)?;
            Ok(Sample {
                y,
                energy,
                multiplicity,
            })
        })
        .collect::<Result<Vec<_>, QuboError>>()?;
    samples.sort_by(|a, b| a.energy.cmp(&b.energy).then_with(|| a.y.cmp(&b.y)));
    Ok(SampleSet {
        samples,
        num_reads: params.num_reads,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedSample {
    /// Selected arc ids.
    pub decoded: Vec<usize>,
    #[serde(with = "crate::num::serde_decimal")]
    pub energy: Rational,
    #[serde(with = "crate::num::serde_decimal")]
    pub objective: Rational,
    pub multiplicity: usize,
    pub violated: Vec<RowKind>,
    pub slack_consistent: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub build: Duration,
    pub encode: Duration,
    pub anneal: Duration,
    pub decode: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOutcome {
    pub portfolio: SolutionPortfolio,
    pub rejected: Vec<RejectedSample>,
    pub samples: SampleSet,
    pub ilp: IlpModel,
    pub qubo: QuboModel,
    /// Fraction of reads that end in a state decoding to the portfolio's best objective.
    pub success_probability: f64,
    pub timings: StageTimings,
}

/// Splits decoded samples into feasible solutions and a rejected log.
pub fn post_filter(
    ilp: &IlpModel,
    qubo: &QuboModel,
    samples: &SampleSet,
) -> Result<(SolutionPortfolio, Vec<RejectedSample>), AnnealError> {
    let mut portfolio = SolutionPortfolio {
        solutions: Vec::new(),
        exhaustive: false,
    };
    let mut rejected = Vec::new();
    for s in &samples.samples {
        let d = decode(qubo, ilp, &s.y)?;
        if d.report.feasible && d.slack_consistent {
            let objective = objective_value(ilp, &d.x).expect("decoded length matches");
            portfolio.solutions.push(Solution {
                decoded: selected(&d.x),
                x: d.x,
                objective,
                report: d.report,
            });
        } else {
            rejected.push(RejectedSample {
                decoded: selected(&d.x),
                energy: s.energy,
                objective: objective_value(ilp, &d.x).expect("decoded length matches"),
                multiplicity: s.multiplicity,
                violated: d.report.violated_families(),
                slack_consistent: d.slack_consistent,
            });
        }
    }
    portfolio.normalize();
    Ok((portfolio, rejected))
}

fn selected(x: &[bool]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(i, _)| i)
        .collect()
}

/// Build, encode, anneal and decode in one go.
pub fn sample_portfolio(
    instance: &Instance,
    lambdas: Lambdas,
    params: &AnnealParams,
) -> Result<SamplingOutcome, AnnealError> {
    let t0 = Instant::now();
    let graph = build_hypergraph(instance);
    let ilp = encode_full(&graph, instance);
    let t1 = Instant::now();
    let qubo = encode_qubo(&ilp, lambdas)?;
    let t2 = Instant::now();
    let samples = if qubo.num_vars() == 0 {
        SampleSet::default()
    } else {
        anneal(&qubo, params)?
    };
    let t3 = Instant::now();
    let (portfolio, rejected) = post_filter(&ilp, &qubo, &samples)?;
    let t4 = Instant::now();

    let success_probability = match portfolio.best() {
        Some(best) => {
            let hits: usize = samples
                .samples
                .iter()
                .filter(|s| {
                    let x = &s.y[..qubo.num_decision];
                    portfolio
                        .solutions
                        .iter()
                        .any(|p| p.objective == best.objective && p.x == x)
                })
                .map(|s| s.multiplicity)
                .sum();
            hits as f64 / samples.num_reads.max(1) as f64
        }
        None => 0.0,
    };
    Ok(SamplingOutcome {
        portfolio,
        rejected,
        samples,
        ilp,
        qubo,
        success_probability,
        timings: StageTimings {
            build: t1 - t0,
            encode: t2 - t1,
            anneal: t3 - t2,
            decode: t4 - t3,
        },
    })
}

//! Seeded Monte Carlo simulation of the repeated game.
//!
//! Every path owns an independent ChaCha stream selected by its index, so a
//! run is reproducible bit for bit whatever the thread count. Paths are
//! evaluated in parallel and reduced serially in path order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deterministic;
use crate::dp::{PolicyTable, RangeRule};
use crate::error::{Error, Result};
use crate::model::{self, Contract, ModelParams, RoundOutcome, WorkerState};

/// How the employer picks `(χ, s)` from the worker's current reference.
/// The fixed component is always the binding one.
#[derive(Debug, Clone, PartialEq)]
pub enum EmployerPolicy {
    /// Contract with `s = 1` iff `R ≤ R̄` from the noiseless solution.
    ClosedForm,
    /// Policy table from the value-iteration solver.
    Tabulated {
        table: PolicyTable,
        range: RangeRule,
    },
    /// The same decision every round, regardless of the reference.
    Fixed { chi: bool, s: f64 },
}

impl EmployerPolicy {
    pub fn tabulated(table: PolicyTable) -> Self {
        EmployerPolicy::Tabulated {
            table,
            range: RangeRule::Clamp,
        }
    }

    pub fn decide(&self, params: &ModelParams, r: f64) -> Result<(bool, f64)> {
        match self {
            EmployerPolicy::ClosedForm => {
                if r <= deterministic::threshold(params) {
                    Ok((true, 1.0))
                } else {
                    Ok((false, 0.0))
                }
            }
            EmployerPolicy::Tabulated { table, range } => table.decide(r, *range),
            EmployerPolicy::Fixed { chi, s } => Ok((*chi, if *chi { *s } else { 0.0 })),
        }
    }

    fn contract(&self, params: &ModelParams, r: f64) -> Result<Contract> {
        let (chi, s) = self.decide(params, r)?;
        Ok(if chi {
            Contract::binding(params, r, s)
        } else {
            Contract::none()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub r0: f64,
    pub rounds: usize,
    pub paths: usize,
    pub seed: u64,
    /// Leading rounds excluded from the per-round averages. The discounted
    /// profit always counts every round.
    #[serde(default)]
    pub burn_in: usize,
}

impl SimulationConfig {
    pub fn new(r0: f64, rounds: usize, paths: usize, seed: u64) -> Self {
        Self {
            r0,
            rounds,
            paths,
            seed,
            burn_in: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r0.is_finite() {
            return Err(Error::domain("r0", self.r0, "must be finite"));
        }
        if self.rounds == 0 {
            return Err(Error::domain("rounds", 0.0, "must be at least 1"));
        }
        if self.paths == 0 {
            return Err(Error::domain("paths", 0.0, "must be at least 1"));
        }
        if self.burn_in >= self.rounds {
            return Err(Error::domain(
                "burn_in",
                self.burn_in as f64,
                "must be below rounds",
            ));
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
}

/// Aggregates over paths. Each path contributes one sample to every
/// estimate, so standard errors are the across-path sample standard
/// deviation over the square root of the number of contributing paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub paths: usize,
    pub rounds: usize,
    pub burn_in: usize,
    pub mean_profit_per_round: Estimate,
    pub mean_net_wage_per_round: Estimate,
    /// Fraction of counted (path, round) pairs with a contract.
    pub employment_rate: f64,
    /// Average net wage over contracted rounds; paths that never contract
    /// do not contribute. Zero when no round was contracted.
    pub mean_net_wage_given_contract: Estimate,
    /// Per path `(1-δ) Σ δ^t π_t`.
    pub mean_discounted_profit: Estimate,
    pub final_reference: Distribution,
}

/// One played round of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub r: f64,
    pub contract: Contract,
    pub outcome: RoundOutcome,
}

/// Random stream for path `path` under master seed `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn run_path(
    params: &ModelParams,
    policy: &EmployerPolicy,
    r0: f64,
    rounds: usize,
    rng: &mut ChaCha8Rng,
    mut visit: impl FnMut(RoundRecord),
) -> Result<f64> {
    let mut r = r0;
    for t in 0..rounds {
        let contract = policy.contract(params, r)?;
        // The draw happens every round so that streams stay aligned across policies.
        let z: f64 = rng.sample(StandardNormal);
        let epsilon = params.sigma() * z;
        let outcome = model::realize_round(params, WorkerState { r }, &contract, epsilon)?;
        visit(RoundRecord {
            t,
            r,
            contract,
            outcome,
        });
        r = outcome.r_next;
    }
    Ok(r)
}

/// Plays a single path and returns every round.
pub fn simulate_path(
    params: &ModelParams,
    policy: &EmployerPolicy,
    r0: f64,
    rounds: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RoundRecord>> {
    let mut records = Vec::with_capacity(rounds);
    run_path(params, policy, r0, rounds, rng, |rec| records.push(rec))?;
    Ok(records)
}

#[derive(Debug, Clone, Copy)]
struct PathStats {
    mean_profit: f64,
    mean_net_wage: f64,
    contracted: usize,
    mean_net_wage_given_contract: Option<f64>,
    discounted_profit: f64,
    final_r: f64,
}

fn path_stats(
    params: &ModelParams,
    policy: &EmployerPolicy,
    config: &SimulationConfig,
    path: usize,
) -> Result<PathStats> {
    let mut rng = path_rng(config.seed, path as u64);
    let counted = (config.rounds - config.burn_in) as f64;
    let delta = params.delta();
    let mut profit = 0.0;
    let mut net_wage = 0.0;
    let mut contracted = 0;
    let mut contract_wage = 0.0;
    let mut discounted = 0.0;
    let mut discount = 1.0 - delta;
    let final_r = run_path(params, policy, config.r0, config.rounds, &mut rng, |rec| {
        discounted += discount * rec.outcome.pi;
        discount *= delta;
        if rec.t < config.burn_in {
            return;
        }
        profit += rec.outcome.pi;
        net_wage += rec.outcome.v;
        if rec.contract.chi {
            contracted += 1;
            contract_wage += rec.outcome.v;
        }
    })?;
    Ok(PathStats {
        mean_profit: profit / counted,
        mean_net_wage: net_wage / counted,
        contracted,
        mean_net_wage_given_contract: (contracted > 0).then(|| contract_wage / contracted as f64),
        discounted_profit: discounted,
        final_r,
    })
}

/// Welford accumulator; identical samples give exactly zero variance.
#[derive(Debug, Default, Clone, Copy)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        if self.n == 1 {
            self.mean = x;
            self.min = x;
            self.max = x;
            return;
        }
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    fn stdev(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }

    fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate {
                mean: 0.0,
                std_error: 0.0,
            };
        }
        Estimate {
            mean: self.mean,
            std_error: self.stdev() / (self.n as f64).sqrt(),
        }
    }
}

/// Runs `config.paths` independent paths under `policy`.
pub fn simulate(
    params: &ModelParams,
    policy: &EmployerPolicy,
    config: &SimulationConfig,
) -> Result<SimulationSummary> {
    config.validate()?;
    let per_path = (0..config.paths)
        .into_par_iter()
        .map(|path| path_stats(params, policy, config, path))
        .collect::<Result<Vec<_>>>()?;

    let mut profit = Running::default();
    let mut wage = Running::default();
    let mut wage_given = Running::default();
    let mut discounted = Running::default();
    let mut final_r = Running::default();
    let mut contracted = 0usize;
    for stats in &per_path {
        profit.push(stats.mean_profit);
        wage.push(stats.mean_net_wage);
        if let Some(w) = stats.mean_net_wage_given_contract {
            wage_given.push(w);
        }
        discounted.push(stats.discounted_profit);
        final_r.push(stats.final_r);
        contracted += stats.contracted;
    }
    let counted = config.paths * (config.rounds - config.burn_in);

    Ok(SimulationSummary {
        paths: config.paths,
        rounds: config.rounds,
        burn_in: config.burn_in,
        mean_profit_per_round: profit.estimate(),
        mean_net_wage_per_round: wage.estimate(),
        employment_rate: contracted as f64 / counted as f64,
        mean_net_wage_given_contract: wage_given.estimate(),
        mean_discounted_profit: discounted.estimate(),
        final_reference: Distribution {
            mean: final_r.mean,
            stdev: final_r.stdev(),
            min: final_r.min,
            max: final_r.max,
        },
    })
}

/// Mean one-round change of the reference under a binding contract with
/// share `s`: `(1-β) γ s² σ² / 2`.
pub fn drift_check(params: &ModelParams, s: f64) -> f64 {
    (1.0 - params.beta()) * params.risk_premium_coef() * s * s
}

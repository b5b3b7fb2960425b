//! Value iteration for the employer's infinite-horizon problem.
//!
//! The state is the worker's reference `R` on a uniform grid. Each node
//! compares skipping a round, worth `δ V(βR)`, with contracting at the best
//! share `s`, worth
//!
//! ```text
//! (1-δ) E[π | R, s] + δ E_ε V(R + (1-β)(s ε + γ s² σ²/2))
//! ```
//!
//! Off-grid values are interpolated linearly and clamped to the boundary
//! nodes outside the grid. The expectation uses Gauss–Hermite quadrature and
//! the share is found by a coarse scan on `[0, 2]` refined by golden section.
//! Sweeps are Jacobi style, so nodes are evaluated in parallel against the
//! previous table and the result does not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::quadrature::NormalExpectation;
use crate::search::{self, Maximum};
use crate::simulator::{self, EmployerPolicy, Estimate, SimulationConfig};

pub const SHARE_MIN: f64 = 0.0;
pub const SHARE_MAX: f64 = 2.0;
pub const SHARE_SCAN_POINTS: usize = 65;
pub const SHARE_TOL: f64 = 1e-8;

/// Sweeps ignored before checking the contraction ratio.
pub const CONTRACTION_BURN_IN: usize = 5;

/// Slack for the nonincreasing check on each iterate.
const MONOTONE_SLACK: f64 = 1e-12;

/// Sup-norm changes below this are rounding noise and are left out of the
/// contraction ratio.
const CONTRACTION_FLOOR: f64 = 1e-12;

/// Absolute rounding allowance in `d_{k+1} ≤ δ d_k`.
pub const CONTRACTION_SLACK: f64 = 1e-12;

/// Uniform grid over the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    r_min: f64,
    r_max: f64,
    points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    r_min: f64,
    r_max: f64,
    points: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.r_min, raw.r_max, raw.points)
    }
}

impl GridSpec {
    pub fn new(r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if !r_min.is_finite() {
            return Err(Error::domain("grid.r_min", r_min, "must be finite"));
        }
        if !(r_max.is_finite() && r_max > r_min) {
            return Err(Error::domain(
                "grid.r_max",
                r_max,
                "must be finite and exceed r_min",
            ));
        }
        if points < 2 {
            return Err(Error::domain(
                "grid.points",
                points as f64,
                "need at least 2 nodes",
            ));
        }
        Ok(Self {
            r_min,
            r_max,
            points,
        })
    }

    /// `[min(0, -4σ), 1/(2c) + 4σ(1-β)]`: the noiseless range plus room for
    /// noise-driven excursions.
    pub fn default_for(params: &ModelParams, points: usize) -> Result<Self> {
        let sigma = params.sigma();
        let r_min = (-4.0 * sigma).min(0.0);
        let r_max = params.net_production() + 4.0 * sigma * (1.0 - params.beta());
        Self::new(r_min, r_max, points)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.r_max
        } else {
            self.r_min + self.spacing() * i as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.node(i))
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_min && r <= self.r_max
    }

    /// Left node index and weight on the right node, clamped to the grid.
    fn locate(&self, r: f64) -> (usize, f64) {
        if r <= self.r_min {
            return (0, 0.0);
        }
        if r >= self.r_max {
            return (self.points - 2, 1.0);
        }
        let pos = (r - self.r_min) / self.spacing();
        let i = (pos.floor() as usize).min(self.points - 2);
        (i, pos - i as f64)
    }

    /// Nearest node, with exact midpoints going to the lower node.
    fn nearest(&self, r: f64) -> usize {
        let (i, w) = self.locate(r);
        if w > 0.5 {
            i + 1
        } else {
            i
        }
    }
}

/// Employer value `V(R)` at the grid nodes, in average profit per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.points()],
            grid,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.nodes().map(f).collect(),
            grid,
        }
    }

    /// Linear interpolation, constant beyond the grid ends.
    pub fn eval(&self, r: f64) -> f64 {
        let (i, w) = self.grid.locate(r);
        if w == 0.0 {
            self.values[i]
        } else {
            self.values[i] + w * (self.values[i + 1] - self.values[i])
        }
    }

    pub fn sup_distance(&self, other: &ValueTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// What a tabulated policy does with references outside its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeRule {
    /// Use the boundary node, as the solver's interpolation does.
    #[default]
    Clamp,
    /// Refuse references outside the grid.
    Strict,
}

/// Greedy controls at the grid nodes. `s` is zero where `chi` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub grid: GridSpec,
    pub chi: Vec<bool>,
    pub s: Vec<f64>,
}

impl PolicyTable {
    /// Decision at reference `r`: `chi` from the nearest node, `s`
    /// interpolated linearly between contracted neighbours.
    pub fn decide(&self, r: f64, range: RangeRule) -> Result<(bool, f64)> {
        let out_of_range = Error::PolicyRange {
            reference: r,
            r_min: self.grid.r_min(),
            r_max: self.grid.r_max(),
        };
        if !r.is_finite()
            || self.chi.len() != self.grid.points()
            || self.s.len() != self.grid.points()
        {
            return Err(out_of_range);
        }
        if range == RangeRule::Strict && !self.grid.contains(r) {
            return Err(out_of_range);
        }
        let nearest = self.grid.nearest(r);
        if !self.chi[nearest] {
            return Ok((false, 0.0));
        }
        let (i, w) = self.grid.locate(r);
        let s = if self.chi[i] && self.chi[i + 1] {
            self.s[i] + w * (self.s[i + 1] - self.s[i])
        } else {
            self.s[nearest]
        };
        Ok((true, s))
    }

    /// Whether `chi` is true on a (possibly empty) lower block of nodes and
    /// false above it.
    pub fn is_single_crossing(&self) -> bool {
        self.chi.windows(2).all(|w| w[0] || !w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    pub tol: f64,
    pub quad_nodes: usize,
    pub final_sup_norm_delta: f64,
    /// Interpolated crossing between the last contracting and the first
    /// skipping node, when there is exactly one.
    pub threshold_estimate: Option<f64>,
    pub threshold_structure_ok: bool,
    /// Every iterate was nonincreasing in the reference.
    pub monotone_every_iteration: bool,
    /// Largest ratio of successive sup-norm changes after the burn-in.
    pub max_contraction_ratio: Option<f64>,
    /// Every change after the first was at most `δ` times the previous one,
    /// up to [`CONTRACTION_SLACK`].
    pub contraction_ok: bool,
    /// Contracting nodes whose best share sits on an end of `[0, 2]`.
    pub boundary_share_nodes: usize,
    pub sup_norm_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSolution {
    pub values: ValueTable,
    pub policy: PolicyTable,
    pub report: SolverReport,
}

/// Both branches of the Bellman maximum at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDecision {
    pub skip_value: f64,
    pub contract: Maximum,
}

impl NodeDecision {
    /// Ties go to contracting.
    pub fn chi(&self) -> bool {
        self.contract.value >= self.skip_value
    }

    pub fn value(&self) -> f64 {
        self.contract.value.max(self.skip_value)
    }

    /// Contract value minus skip value.
    pub fn advantage(&self) -> f64 {
        self.contract.value - self.skip_value
    }
}

/// The Bellman operator applied to a fixed value table.
pub struct Backup<'a> {
    params: &'a ModelParams,
    table: &'a ValueTable,
    quad: &'a NormalExpectation,
}

impl<'a> Backup<'a> {
    pub fn new(params: &'a ModelParams, v: &'a ValueTable, quad: &'a NormalExpectation) -> Self {
        Self {
            params,
            table: v,
            quad,
        }
    }

    /// Evaluates both branches at reference `r`.
    pub fn at(&self, r: f64) -> NodeDecision {
        let params = self.params;
        let (beta, delta) = (params.beta(), params.delta());
        let premium = params.risk_premium_coef();
        let skip_value = delta * self.table.eval(beta * r);
        let objective = |s: f64| {
            let profit = model::expected_profit_binding(params, r, s);
            let center = r + (1.0 - beta) * premium * s * s;
            let scale = (1.0 - beta) * s;
            let continuation = self
                .quad
                .expect(|eps| self.table.eval(center + scale * eps));
            (1.0 - delta) * profit + delta * continuation
        };
        let contract = search::scan_and_refine(
            objective,
            SHARE_MIN,
            SHARE_MAX,
            SHARE_SCAN_POINTS,
            SHARE_TOL,
        );
        NodeDecision {
            skip_value,
            contract,
        }
    }
}

fn sweep(params: &ModelParams, v: &ValueTable, quad: &NormalExpectation) -> Vec<NodeDecision> {
    let backup = Backup::new(params, v, quad);
    (0..v.grid.points())
        .into_par_iter()
        .map(|i| backup.at(v.grid.node(i)))
        .collect()
}

/// One application of the Bellman operator.
pub fn bellman_backup(
    params: &ModelParams,
    v: &ValueTable,
    quad_nodes: usize,
) -> Result<ValueTable> {
    let quad = NormalExpectation::new(params.sigma(), quad_nodes)?;
    Ok(ValueTable {
        grid: v.grid,
        values: sweep(params, v, &quad)
            .iter()
            .map(NodeDecision::value)
            .collect(),
    })
}

fn extract_policy(grid: GridSpec, decisions: &[NodeDecision]) -> (PolicyTable, Option<f64>, usize) {
    let chi: Vec<bool> = decisions.iter().map(NodeDecision::chi).collect();
    let s = decisions
        .iter()
        .map(|d| if d.chi() { d.contract.x } else { 0.0 })
        .collect();
    let boundary = decisions
        .iter()
        .filter(|d| d.chi() && d.contract.at_boundary)
        .count();
    let policy = PolicyTable { grid, chi, s };

    let crossings: Vec<usize> = (0..grid.points() - 1)
        .filter(|&i| policy.chi[i] && !policy.chi[i + 1])
        .collect();
    let threshold = match crossings.as_slice() {
        [i] => {
            let (a, b) = (decisions[*i].advantage(), decisions[*i + 1].advantage());
            let frac = if a > b { a / (a - b) } else { 0.5 };
            Some(grid.node(*i) + frac.clamp(0.0, 1.0) * grid.spacing())
        }
        _ => None,
    };
    (policy, threshold, boundary)
}

/// Value iteration from `V ≡ 0` until the sup-norm change is at most `tol`.
///
/// On failure the last iterate, its greedy policy and the report are
/// returned inside [`Error::NoConvergence`].
pub fn solve(
    params: &ModelParams,
    grid: GridSpec,
    tol: f64,
    max_iter: usize,
    quad_nodes: usize,
) -> Result<DpSolution> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::domain("tol", tol, "must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::domain("max_iter", 0.0, "must be at least 1"));
    }
    let quad = NormalExpectation::new(params.sigma(), quad_nodes)?;

    let mut v = ValueTable::zeros(grid);
    let mut history = Vec::new();
    let mut monotone = true;
    let mut converged = false;
    for _ in 0..max_iter {
        let next = ValueTable {
            grid,
            values: sweep(params, &v, &quad)
                .iter()
                .map(NodeDecision::value)
                .collect(),
        };
        let change = next.sup_distance(&v);
        monotone &= next.is_nonincreasing(MONOTONE_SLACK);
        history.push(change);
        v = next;
        if change <= tol {
            converged = true;
            break;
        }
    }

    let decisions = sweep(params, &v, &quad);
    let (policy, threshold_estimate, boundary_share_nodes) = extract_policy(grid, &decisions);
    let max_contraction_ratio = history
        .windows(2)
        .skip(CONTRACTION_BURN_IN)
        .filter(|w| w[0] > CONTRACTION_FLOOR)
        .map(|w| w[1] / w[0])
        .reduce(f64::max);
    let delta = params.delta();
    let contraction_ok = history
        .windows(2)
        .all(|w| w[1] <= delta * w[0] + CONTRACTION_SLACK);

    let report = SolverReport {
        converged,
        iterations: history.len(),
        tol,
        quad_nodes,
        final_sup_norm_delta: history.last().copied().unwrap_or(f64::INFINITY),
        threshold_estimate,
        threshold_structure_ok: policy.is_single_crossing(),
        monotone_every_iteration: monotone,
        max_contraction_ratio,
        contraction_ok,
        boundary_share_nodes,
        sup_norm_history: history,
    };
    let solution = DpSolution {
        values: v,
        policy,
        report,
    };
    if converged {
        Ok(solution)
    } else {
        Err(Error::NoConvergence {
            iterations: solution.report.iterations,
            sup_delta: solution.report.final_sup_norm_delta,
            partial: Box::new(solution),
        })
    }
}

/// Monte Carlo estimate of `(1-δ) Σ δ^t π_t` under a tabulated policy
/// started from `r0`. `sim_config.r0` is overridden.
pub fn policy_value_check(
    params: &ModelParams,
    policy: &PolicyTable,
    r0: f64,
    sim_config: &SimulationConfig,
) -> Result<Estimate> {
    let config = SimulationConfig { r0, ..*sim_config };
    let summary = simulator::simulate(params, &EmployerPolicy::tabulated(policy.clone()), &config)?;
    Ok(summary.mean_discounted_profit)
}

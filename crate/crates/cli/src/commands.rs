use std::path::{Path, PathBuf};

use gig_core::deterministic::{self, DeterministicSolution, TrajectoryRow};
use gig_core::dp::{self, DpSolution, GridSpec, PolicyTable, SolverReport};
use gig_core::quadrature::DEFAULT_NODES;
use gig_core::simulator::{self, EmployerPolicy, SimulationConfig, SimulationSummary};
use gig_core::{Error, ModelParams};
use serde::{Deserialize, Serialize};

use crate::config::{self, RunConfig};
use crate::output::{self, fmt_bool, fmt_num, CsvOut};
use crate::CliError;

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.abs().max(1.0)
}

pub fn threshold(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.params()?;
    let sol = DeterministicSolution::new(&params);
    let ratio = params.delta() * (1.0 - params.beta()) / (1.0 - params.delta());
    if !close(
        sol.r_bar + sol.v_at_r_bar,
        sol.net_production,
        sol.net_production,
    ) {
        return Err(CliError::Invariant(
            "r_bar + v_at_r_bar differs from 1/(2c)".into(),
        ));
    }
    if !close(sol.ratio, ratio, ratio) {
        return Err(CliError::Invariant(
            "v_at_r_bar / r_bar differs from delta(1-beta)/(1-delta)".into(),
        ));
    }
    output::write_json(&mut *output::open(out)?, &sol)
}

fn check_trajectory(params: &ModelParams, rows: &[TrajectoryRow]) -> Result<(), CliError> {
    let r_bar = deterministic::threshold(params);
    let net = params.net_production();
    for (i, row) in rows.iter().enumerate() {
        if row.chi != (row.r <= r_bar) {
            return Err(CliError::Invariant(format!(
                "round {}: contract decision disagrees with the threshold",
                row.t
            )));
        }
        if row.chi && !close(row.v + row.pi, net, net) {
            return Err(CliError::Invariant(format!(
                "round {}: v + pi differs from 1/(2c)",
                row.t
            )));
        }
        if let Some(next) = rows.get(i + 1) {
            let expected = if row.chi {
                row.r
            } else {
                params.beta() * row.r
            };
            if next.r != expected {
                return Err(CliError::Invariant(format!(
                    "round {}: reference did not follow the update",
                    next.t
                )));
            }
        }
    }
    Ok(())
}

pub fn trajectory(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let params = cfg.params()?;
    let rounds = cfg.rounds();
    if rounds == 0 {
        return Err(CliError::Config("rounds must be at least 1".into()));
    }
    let starts = cfg.r0_list(&config::DEFAULT_TRAJECTORY_R0);
    if let Some(bad) = starts.iter().find(|r| !r.is_finite()) {
        return Err(CliError::Config(format!("r0 = {bad} is not finite")));
    }
    let mut csv = CsvOut::new(
        output::open(out)?,
        &["r0", "t", "r", "chi", "s", "f", "z", "v", "pi"],
    )?;
    for r0 in starts {
        let rows = deterministic::trajectory(&params, r0, rounds);
        check_trajectory(&params, &rows)?;
        for row in rows {
            csv.row(&[
                fmt_num(r0),
                row.t.to_string(),
                fmt_num(row.r),
                fmt_bool(row.chi).into(),
                fmt_num(row.s),
                fmt_num(row.f),
                fmt_num(row.z),
                fmt_num(row.v),
                fmt_num(row.pi),
            ])?;
        }
    }
    csv.finish()
}

pub fn banana(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let c = cfg.params.c.unwrap_or(config::DEFAULT_C);
    let betas = cfg
        .beta_grid
        .clone()
        .unwrap_or_else(config::default_beta_grid);
    let deltas = cfg
        .delta_list
        .clone()
        .unwrap_or_else(|| config::DEFAULT_DELTA_LIST.to_vec());
    if betas.is_empty() || deltas.is_empty() {
        return Err(CliError::Config(
            "beta_grid and delta_list must not be empty".into(),
        ));
    }
    // Compute everything first so a bad value leaves no partial file.
    let mut blocks = Vec::with_capacity(deltas.len());
    for &delta in &deltas {
        let rows = deterministic::banana_curve(c, delta, &betas)?;
        for row in &rows {
            deterministic::check_split(c, row).map_err(|e| CliError::Invariant(e.to_string()))?;
        }
        blocks.push((delta, rows));
    }
    let mut csv = CsvOut::new(
        output::open(out)?,
        &["delta", "beta", "r_bar", "v_at_r_bar"],
    )?;
    for (delta, rows) in blocks {
        for row in rows {
            csv.row(&[
                fmt_num(delta),
                fmt_num(row.beta),
                fmt_num(row.r_bar),
                fmt_num(row.v_at_r_bar),
            ])?;
        }
    }
    csv.finish()
}

/// On-disk form of a solved policy.
#[derive(Debug, Serialize, Deserialize)]
pub struct PolicyFile {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub chi: Vec<bool>,
    pub s: Vec<f64>,
    pub solver: SolverReport,
}

impl PolicyFile {
    fn new(params: ModelParams, sol: DpSolution) -> Self {
        Self {
            params,
            grid: sol.values.grid,
            values: sol.values.values,
            chi: sol.policy.chi,
            s: sol.policy.s,
            solver: sol.report,
        }
    }

    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read policy {}: {e}", path.display())))?;
        let file: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("policy {}: {e}", path.display())))?;
        let n = file.grid.points();
        if file.values.len() != n || file.chi.len() != n || file.s.len() != n {
            return Err(CliError::Config(format!(
                "policy {}: arrays do not match the grid",
                path.display()
            )));
        }
        Ok(file)
    }

    fn table(&self) -> PolicyTable {
        PolicyTable {
            grid: self.grid,
            chi: self.chi.clone(),
            s: self.s.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PolicyEcho {
    ClosedForm,
    Tabulated { file: PathBuf },
    Fixed { s: f64 },
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    params: ModelParams,
    config: SimulationConfig,
    policy: PolicyEcho,
    summary: SimulationSummary,
}

fn check_summary(s: &SimulationSummary) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&s.employment_rate) {
        return Err(CliError::Invariant(format!(
            "employment rate {} outside [0, 1]",
            s.employment_rate
        )));
    }
    let estimates = [
        s.mean_profit_per_round,
        s.mean_net_wage_per_round,
        s.mean_net_wage_given_contract,
        s.mean_discounted_profit,
    ];
    let all_finite = estimates
        .iter()
        .all(|e| e.mean.is_finite() && e.std_error.is_finite() && e.std_error >= 0.0);
    if !all_finite {
        return Err(CliError::Invariant(
            "non-finite estimate in the summary".into(),
        ));
    }
    Ok(())
}

pub fn simulate(
    cfg: &RunConfig,
    out: Option<&Path>,
    rounds_csv: Option<&Path>,
) -> Result<(), CliError> {
    let params = cfg.params()?;
    let mut sim = SimulationConfig::new(cfg.r0_single()?, cfg.rounds(), cfg.paths(), cfg.seed());
    sim.burn_in = cfg.burn_in.unwrap_or(0);
    sim.validate()?;

    let (policy, echo) = match (&cfg.policy, cfg.fixed_share) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "policy and fixed_share are exclusive".into(),
            ))
        }
        (Some(path), None) => {
            let file = PolicyFile::load(path)?;
            if file.params != params {
                eprintln!("gig: warning: policy was solved for different parameters");
            }
            (
                EmployerPolicy::tabulated(file.table()),
                PolicyEcho::Tabulated { file: path.clone() },
            )
        }
        (None, Some(s)) => {
            if !s.is_finite() {
                return Err(CliError::Config(format!("fixed_share = {s} is not finite")));
            }
            (
                EmployerPolicy::Fixed { chi: true, s },
                PolicyEcho::Fixed { s },
            )
        }
        (None, None) => (EmployerPolicy::ClosedForm, PolicyEcho::ClosedForm),
    };

    let summary = simulator::simulate(&params, &policy, &sim)?;
    check_summary(&summary)?;

    if let Some(path) = rounds_csv {
        write_rounds(&params, &policy, &sim, path)?;
    }
    let report = SimulateReport {
        params,
        config: sim,
        policy: echo,
        summary,
    };
    output::write_json(&mut *output::open(out)?, &report)
}

fn write_rounds(
    params: &ModelParams,
    policy: &EmployerPolicy,
    sim: &SimulationConfig,
    path: &Path,
) -> Result<(), CliError> {
    let header = [
        "path", "t", "r", "chi", "s", "f", "epsilon", "z", "x", "w", "v", "pi", "r_next",
    ];
    let mut csv = CsvOut::new(output::open(Some(path))?, &header)?;
    for p in 0..sim.paths {
        // the same stream the summary used for this path
        let mut rng = simulator::path_rng(sim.seed, p as u64);
        for rec in simulator::simulate_path(params, policy, sim.r0, sim.rounds, &mut rng)? {
            let o = rec.outcome;
            if rec.contract.chi
                && !close(
                    o.v + o.pi,
                    o.x - 0.5 * params.c() * o.z * o.z,
                    o.x.abs().max(rec.contract.f.abs()),
                )
            {
                return Err(CliError::Invariant(format!(
                    "path {p} round {}: v + pi differs from net production",
                    rec.t
                )));
            }
            csv.row(&[
                p.to_string(),
                rec.t.to_string(),
                fmt_num(rec.r),
                fmt_bool(rec.contract.chi).into(),
                fmt_num(rec.contract.s),
                fmt_num(rec.contract.f),
                fmt_num(o.epsilon),
                fmt_num(o.z),
                fmt_num(o.x),
                fmt_num(o.w),
                fmt_num(o.v),
                fmt_num(o.pi),
                fmt_num(o.r_next),
            ])?;
        }
    }
    csv.finish()
}

fn report_json(report: &SolverReport) -> Result<serde_json::Value, CliError> {
    let mut v = serde_json::to_value(report).map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(map) = v.as_object_mut() {
        // the full history stays in the policy file
        map.remove("sup_norm_history");
    }
    Ok(v)
}

pub fn solve_dp(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let Some(out) = out else {
        return Err(CliError::Config(
            "solve-dp needs --out for the policy file".into(),
        ));
    };
    let params = cfg.params()?;
    let grid = cfg.grid(&params)?;
    let tol = cfg.tol.unwrap_or(config::DEFAULT_TOL);
    let max_iter = cfg.max_iter.unwrap_or(config::DEFAULT_MAX_ITER);
    let quad_nodes = cfg.quad_nodes.unwrap_or(DEFAULT_NODES);

    let (solution, failure) = match dp::solve(&params, grid, tol, max_iter, quad_nodes) {
        Ok(sol) => (sol, None),
        Err(Error::NoConvergence { partial, iterations, sup_delta }) => (
            *partial,
            Some(format!("value iteration did not converge in {iterations} iterations (last change {sup_delta:.3e})")),
        ),
        Err(e) => return Err(e.into()),
    };
    if solution
        .values
        .values
        .iter()
        .chain(&solution.policy.s)
        .any(|x| !x.is_finite())
    {
        return Err(CliError::Invariant(
            "non-finite entry in the solved tables".into(),
        ));
    }

    let report = report_json(&solution.report)?;
    let file = PolicyFile::new(params, solution);
    output::write_json_exact(&mut *output::open(Some(out))?, &file)?;
    output::write_json(&mut *output::open(None)?, &report)?;
    match failure {
        Some(msg) => Err(CliError::NoConvergence(msg)),
        None => Ok(()),
    }
}

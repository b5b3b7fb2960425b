//! Closed-form solution of the noiseless game.
//!
//! Without noise the share has no effect on the reference dynamics, so the
//! employer always offers the full share `s = 1` and only decides whether to
//! contract. Contracting freezes the reference; skipping a round shrinks it
//! by `β`. The optimal rule contracts iff `R ≤ R̄`, where the employer is
//! indifferent at `R̄` between contracting now and skipping one round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Contract, ModelParams, WorkerState};

/// Threshold reference `R̄ = (1/(2c)) (1-δ)/(1-δβ)`. Noise is ignored.
pub fn threshold(params: &ModelParams) -> f64 {
    let (beta, delta) = (params.beta(), params.delta());
    params.net_production() * (1.0 - delta) / (1.0 - delta * beta)
}

/// Per-round profit once the worker sits at the threshold,
/// `V(R̄) = (1/(2c)) δ(1-β)/(1-δβ)`.
pub fn steady_profit(params: &ModelParams) -> f64 {
    let (beta, delta) = (params.beta(), params.delta());
    params.net_production() * delta * (1.0 - beta) / (1.0 - delta * beta)
}

/// Steady state of the noiseless game when the worker starts at `R̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSolution {
    pub r_bar: f64,
    pub v_at_r_bar: f64,
    pub net_production: f64,
    pub ratio: f64,
}

impl DeterministicSolution {
    pub fn new(params: &ModelParams) -> Self {
        let r_bar = threshold(params);
        let v_at_r_bar = steady_profit(params);
        Self {
            r_bar,
            v_at_r_bar,
            net_production: params.net_production(),
            ratio: v_at_r_bar / r_bar,
        }
    }
}

/// Number of skipped rounds before the reference first falls to `R̄` or below.
pub fn rounds_to_threshold(params: &ModelParams, r: f64) -> u32 {
    let r_bar = threshold(params);
    let mut k = 0;
    let mut current = r;
    while current > r_bar {
        current *= params.beta();
        k += 1;
    }
    k
}

/// Employer's average discounted profit per round starting from reference `r`.
///
/// Below the threshold the employer contracts forever and earns
/// `1/(2c) - r`. Above it the employer skips `k` rounds, the fewest that bring
/// `β^k r` to `R̄` or below, and then contracts forever.
pub fn value_function(params: &ModelParams, r: f64) -> f64 {
    let k = rounds_to_threshold(params, r);
    let net = params.net_production();
    if k == 0 {
        return net - r;
    }
    let k = k as i32;
    params.delta().powi(k) * (net - params.beta().powi(k) * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub r: f64,
    pub chi: bool,
    pub s: f64,
    pub f: f64,
    pub z: f64,
    pub v: f64,
    pub pi: f64,
}

/// Plays the optimal noiseless policy for `rounds` rounds from `r0`.
pub fn trajectory(params: &ModelParams, r0: f64, rounds: usize) -> Vec<TrajectoryRow> {
    let noiseless = params
        .with_sigma(0.0)
        .expect("zero noise is always a valid parameter");
    let r_bar = threshold(&noiseless);
    let mut r = r0;
    let mut rows = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let chi = r <= r_bar;
        let contract = if chi {
            Contract::binding(&noiseless, r, 1.0)
        } else {
            Contract::none()
        };
        let out = model::realize_round(&noiseless, WorkerState { r }, &contract, 0.0)
            .expect("binding offers satisfy participation");
        rows.push(TrajectoryRow {
            t,
            r,
            chi,
            s: if chi { contract.s } else { 0.0 },
            f: if chi { contract.f } else { 0.0 },
            z: out.z,
            v: out.v,
            pi: out.pi,
        });
        // With zero noise a contract leaves the reference exactly where it is.
        if !chi {
            r = out.r_next;
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BananaRow {
    pub beta: f64,
    pub r_bar: f64,
    pub v_at_r_bar: f64,
}

/// Threshold and steady profit as functions of the memory parameter.
pub fn banana_curve(c: f64, delta: f64, beta_grid: &[f64]) -> Result<Vec<BananaRow>> {
    beta_grid
        .iter()
        .map(|&beta| {
            let params = ModelParams::new(c, 0.0, beta, delta, 0.0)?;
            Ok(BananaRow {
                beta,
                r_bar: threshold(&params),
                v_at_r_bar: steady_profit(&params),
            })
        })
        .collect()
}

/// Sum check used before emitting rows: `R̄ + V(R̄) = 1/(2c)`.
pub fn check_split(c: f64, row: &BananaRow) -> Result<()> {
    let net = 0.5 / c;
    let gap = (row.r_bar + row.v_at_r_bar - net).abs();
    if gap > 1e-12 * net.max(1.0) {
        return Err(Error::domain(
            "r_bar + v_at_r_bar",
            row.r_bar + row.v_at_r_bar,
            "does not equal the net production",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn params(c: f64, beta: f64, delta: f64) -> ModelParams {
        ModelParams::new(c, 1.0, beta, delta, 0.0).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_relative_eq!(
            threshold(&params(1.0, 0.8, 0.8)),
            0.2777777777777778,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            threshold(&params(2.0, 0.8, 0.8)),
            0.1388888888888889,
            max_relative = 1e-14
        );
        assert!((threshold(&params(1.0, 1.0 - 1e-9, 0.8)) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn steady_profit_examples() {
        assert_relative_eq!(
            steady_profit(&params(1.0, 0.8, 0.8)),
            0.2222222222222222,
            max_relative = 1e-14
        );
        assert!(steady_profit(&params(1.0, 0.8, 1e-12)) < 1e-11);
        assert_relative_eq!(
            steady_profit(&params(1.0, 0.5, 0.9)),
            0.5 * 0.9 * 0.5 / 0.55,
            max_relative = 1e-14
        );
    }

    #[test]
    fn value_function_examples() {
        let p = params(1.0, 0.8, 0.8);
        assert_relative_eq!(value_function(&p, 0.1), 0.4, max_relative = 1e-15);
        let r_bar = threshold(&p);
        let contract = value_function(&p, r_bar);
        assert_relative_eq!(contract, 0.2222222222222222, max_relative = 1e-12);
        let skip_once = p.delta() * (p.net_production() - p.beta() * r_bar);
        assert!((contract - skip_once).abs() < 1e-12);
        assert_eq!(rounds_to_threshold(&p, 0.53), 3);
        assert_relative_eq!(
            value_function(&p, 0.53),
            0.512 * (0.5 - 0.512 * 0.53),
            max_relative = 1e-12
        );
    }

    #[test]
    fn negative_reference_contracts() {
        let p = params(1.0, 0.8, 0.8);
        let rows = trajectory(&p, -0.1, 3);
        assert!(rows.iter().all(|row| row.chi && row.r == -0.1));
    }

    #[test]
    fn trajectory_counts() {
        let p = params(1.0, 0.8, 0.8);
        let rows = trajectory(&p, 0.53, 20);
        assert_eq!(rows.len(), 20);
        let skipped: Vec<_> = rows.iter().filter(|r| !r.chi).map(|r| r.t).collect();
        assert_eq!(skipped, vec![0, 1, 2]);
        assert_relative_eq!(rows[1].r, 0.424, max_relative = 1e-14);
        assert_relative_eq!(rows[2].r, 0.3392, max_relative = 1e-14);
        for row in &rows[3..] {
            assert_relative_eq!(row.r, 0.27136, max_relative = 1e-14);
            assert_eq!(row.s, 1.0);
        }

        let rows = trajectory(&p, 0.42, 20);
        assert_eq!(rows.iter().filter(|r| !r.chi).count(), 2);
        assert_relative_eq!(rows[19].r, 0.2688, max_relative = 1e-14);

        let rows = trajectory(&p, 0.1, 20);
        assert!(rows.iter().all(|r| r.chi && r.r == 0.1));
        assert_relative_eq!(rows[7].v, 0.1, epsilon = 1e-15);
        assert_relative_eq!(rows[7].pi, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn banana_limits_and_errors() {
        let rows = banana_curve(1.0, 0.7, &[1e-12]).unwrap();
        assert_relative_eq!(rows[0].r_bar, 0.15, epsilon = 1e-11);
        assert_relative_eq!(rows[0].v_at_r_bar, 0.35, epsilon = 1e-11);
        let err = banana_curve(1.0, 0.7, &[0.5, 1.2]).unwrap_err();
        assert!(matches!(err, Error::Domain { ref field, .. } if field == "beta"));
    }

    #[test]
    fn split_check_flags_bad_rows() {
        let good = banana_curve(1.0, 0.9, &[0.3]).unwrap()[0];
        assert!(check_split(1.0, &good).is_ok());
        let bad = BananaRow {
            r_bar: good.r_bar + 1e-9,
            ..good
        };
        assert!(check_split(1.0, &bad).is_err());
    }
}

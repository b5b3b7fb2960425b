//! Single-round contract mechanics.
//!
//! A round proceeds as follows: the employer observes the worker's reference
//! `R`, decides whether to make a reasonable offer, and if so picks a share
//! `s` and the lowest fixed component `f` the worker will accept. The worker
//! answers with effort `z = s / c`, the noise `ε ~ N(0, σ²)` is realised, and
//! wage, net wage, profit and the next reference follow.
//!
//! The worker has CARA utility `u(v) = -exp(-γ v)`. Since all payoffs are
//! Gaussian, every participation comparison is made on certainty
//! equivalents, which keeps the arithmetic away from `exp` overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamField, Result};

/// Slack allowed when checking that an offer meets the worker's reference.
pub const PARTICIPATION_TOLERANCE: f64 = 1e-9;

/// Exogenous parameters of the worker, the employer and the noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    c: f64,
    gamma: f64,
    beta: f64,
    delta: f64,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    c: f64,
    gamma: f64,
    beta: f64,
    delta: f64,
    sigma: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.c, raw.gamma, raw.beta, raw.delta, raw.sigma)
    }
}

impl ModelParams {
    /// Validates and builds a parameter set.
    ///
    /// `gamma = 0` is accepted as the risk-neutral limit.
    pub fn new(c: f64, gamma: f64, beta: f64, delta: f64, sigma: f64) -> Result<Self> {
        // Written so that NaN fails every check.
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param(
                ParamField::C,
                c,
                "must be positive and finite",
            ));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::param(
                ParamField::Gamma,
                gamma,
                "must be nonnegative and finite",
            ));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(ParamField::Beta, beta, "must lie in (0, 1)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param(ParamField::Delta, delta, "must lie in (0, 1)"));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::param(
                ParamField::Sigma,
                sigma,
                "must be nonnegative and finite",
            ));
        }
        Ok(Self {
            c,
            gamma,
            beta,
            delta,
            sigma,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same parameters with a different noise level.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.c, self.gamma, self.beta, self.delta, sigma)
    }

    /// Output minus effort cost at the first-best share `s = 1`: `1 / (2c)`.
    pub fn net_production(&self) -> f64 {
        0.5 / self.c
    }

    /// Risk premium per unit squared share, `γ σ² / 2`.
    pub(crate) fn risk_premium_coef(&self) -> f64 {
        0.5 * self.gamma * self.sigma * self.sigma
    }
}

/// One round's linear offer: wage `= s · output + f` when `chi` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub chi: bool,
    pub s: f64,
    pub f: f64,
}

impl Contract {
    pub fn none() -> Self {
        Self {
            chi: false,
            s: 0.0,
            f: 0.0,
        }
    }

    pub fn offer(s: f64, f: f64) -> Self {
        Self { chi: true, s, f }
    }

    /// Offer with share `s` and the fixed component that makes the worker
    /// exactly indifferent at reference `r`.
    pub fn binding(params: &ModelParams, r: f64, s: f64) -> Self {
        Self::offer(s, binding_fix(params, r, s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerState {
    pub r: f64,
}

/// Everything realised in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub epsilon: f64,
    pub z: f64,
    pub x: f64,
    pub w: f64,
    pub v: f64,
    pub pi: f64,
    pub r_next: f64,
}

/// Worker's best response `χ · s / c`.
pub fn optimal_effort(params: &ModelParams, contract: &Contract) -> f64 {
    if contract.chi {
        contract.s / params.c
    } else {
        0.0
    }
}

/// Expected CARA utility of the net wage at effort `z`.
///
/// For very large negative certainty equivalents the exponential overflows
/// to `-inf`; nothing in the crate compares raw utilities.
pub fn expected_utility(params: &ModelParams, contract: &Contract, z: f64) -> f64 {
    if !contract.chi {
        return 0.0;
    }
    -(-params.gamma * ce_unchecked(params, contract, z)).exp()
}

/// Certainty equivalent `s z + f - c z²/2 - γ s² σ²/2` of the offer at effort `z`.
pub fn certainty_equivalent(params: &ModelParams, contract: &Contract, z: f64) -> Result<f64> {
    if !contract.chi {
        return Err(Error::NoContract);
    }
    Ok(ce_unchecked(params, contract, z))
}

fn ce_unchecked(params: &ModelParams, contract: &Contract, z: f64) -> f64 {
    let s = contract.s;
    s * z + contract.f - 0.5 * params.c * z * z - params.risk_premium_coef() * s * s
}

/// Lowest fixed component the worker accepts at reference `r` and share `s`.
/// Negative values are a rent paid by the worker.
pub fn binding_fix(params: &ModelParams, r: f64, s: f64) -> f64 {
    r - s * s / (2.0 * params.c) + params.risk_premium_coef() * s * s
}

/// Employer's expected one-round profit when the fixed component binds.
pub fn expected_profit_binding(params: &ModelParams, r: f64, s: f64) -> f64 {
    s / params.c - s * s * (0.5 / params.c + params.risk_premium_coef()) - r
}

/// Share maximising one-round expected profit, `1 / (1 + c γ σ²)`.
pub fn one_shot_share(params: &ModelParams) -> f64 {
    1.0 / (1.0 + params.c * params.gamma * params.sigma * params.sigma)
}

/// Exponentially weighted running average of realised net wages.
/// Without a contract the realised net wage is zero.
pub fn reference_update(params: &ModelParams, r: f64, v: f64, chi: bool) -> f64 {
    let v = if chi { v } else { 0.0 };
    params.beta * r + (1.0 - params.beta) * v
}

/// Plays one round given the noise draw `epsilon`.
///
/// A contracted round first checks the worker's participation constraint at
/// the optimal effort; an offer whose certainty equivalent falls short of the
/// reference is refused with [`Error::ParticipationViolated`].
pub fn realize_round(
    params: &ModelParams,
    state: WorkerState,
    contract: &Contract,
    epsilon: f64,
) -> Result<RoundOutcome> {
    let r = state.r;
    if !contract.chi {
        return Ok(RoundOutcome {
            epsilon,
            z: 0.0,
            x: 0.0,
            w: 0.0,
            v: 0.0,
            pi: 0.0,
            r_next: reference_update(params, r, 0.0, false),
        });
    }

    let z = optimal_effort(params, contract);
    let ce = ce_unchecked(params, contract, z);
    if ce < r - PARTICIPATION_TOLERANCE {
        return Err(Error::ParticipationViolated { ce, reference: r });
    }

    let s = contract.s;
    let x = z + epsilon;
    let w = s * x + contract.f;
    let v = w - 0.5 * params.c * z * z;
    let pi = (1.0 - s) * x - contract.f;
    Ok(RoundOutcome {
        epsilon,
        z,
        x,
        w,
        v,
        pi,
        r_next: reference_update(params, r, v, true),
    })
}

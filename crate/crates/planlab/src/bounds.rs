//! Closed-form loss bounds and empirical verifiers.
//!
//! Three calculators: the planning-loss bound for certainty-equivalence
//! planning at a reduced discount, the simulation bound tying per-pair
//! sample counts to policy-value error, and the epsilon-greedy value-gap
//! bound. Two verifiers check the proved inequalities (the restricted-set
//! decomposition and the epsilon gap) on exhaustively solvable instances.

use crate::error::{Error, Result};
use crate::mdp::{DetPolicy, Mdp, StochPolicy, Weighting};
use crate::solve::{
    epsilon_greedy_policy, epsilon_greedy_value_iteration, greedy_policy, scalar_value_with_tol,
    value_iteration, DEFAULT_MAX_ITERS, STRICT_TOL,
};

/// Numerical slack when checking proved inequalities, absorbing solver
/// tolerance in the exact evaluations on both sides.
pub const THEOREM_SLACK: f64 = 1e-9;

/// Largest deterministic-policy space the verifiers will enumerate.
pub const MAX_ENUMERATED_POLICIES: u128 = 1024;

/// Inputs to the closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    pub gamma: f64,
    pub gamma_check: f64,
    pub r_max: f64,
    pub n: usize,
    pub delta: f64,
    pub n_states: usize,
    pub n_actions: usize,
    /// Size (or size estimate) of the policy class the planner can output.
    pub pi_count: f64,
}

impl BoundQuery {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) || !(0.0..1.0).contains(&self.gamma_check) {
            return Err(Error::invalid("discounts must lie in [0, 1)"));
        }
        if self.gamma_check > self.gamma {
            return Err(Error::invalid(format!(
                "gamma_check {} exceeds gamma {}",
                self.gamma_check, self.gamma
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta {} outside (0, 1)",
                self.delta
            )));
        }
        if self.n == 0 {
            return Err(Error::invalid("sample count n must be positive"));
        }
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::invalid("state and action counts must be positive"));
        }
        if self.pi_count < 1.0 || !self.pi_count.is_finite() {
            return Err(Error::invalid(format!(
                "pi_count {} must be >= 1",
                self.pi_count
            )));
        }
        if self.r_max < 0.0 || !self.r_max.is_finite() {
            return Err(Error::invalid(format!(
                "r_max {} must be non-negative",
                self.r_max
            )));
        }
        Ok(())
    }
}

/// Hoeffding-style estimation term shared by the loss bounds: the horizon
/// factor squares the chosen effective-horizon gap, the square root carries
/// the union bound over states, actions, and the policy class. Logarithms
/// are natural.
fn estimation_term(r_max: f64, horizon_gap: f64, q: &BoundQuery) -> f64 {
    let union = 2.0 * q.n_states as f64 * q.n_actions as f64 * q.pi_count / q.delta;
    (2.0 * r_max / (horizon_gap * horizon_gap)) * ((1.0 / (2.0 * q.n as f64)) * union.ln()).sqrt()
}

/// Planning-loss bound for certainty-equivalence planning at a reduced
/// discount `gamma_check`:
///
/// ```text
/// (gamma - gamma_check) / ((1 - gamma)(1 - gamma_check)) * R_max
///   + (2 R_max / (1 - gamma_check)^2) * sqrt(ln(2|S||A||Pi|/delta) / (2n))
/// ```
pub fn jiang_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let horizon_penalty =
        (q.gamma - q.gamma_check) / ((1.0 - q.gamma) * (1.0 - q.gamma_check)) * q.r_max;
    Ok(horizon_penalty + estimation_term(q.r_max, 1.0 - q.gamma_check, q))
}

/// The empirical policy-class size estimate fit in the census experiments:
/// `11 e^{gamma_check} - 10`.
pub fn pi_count_estimate(gamma_check: f64) -> f64 {
    11.0 * gamma_check.exp() - 10.0
}

/// Simulation bound: with `n` next-state samples per state-action pair and
/// probability at least `1 - delta`, every policy in a class of size
/// `pi_count` has value error at most
/// `(2 R_max / (1 - gamma)^2) * sqrt(ln(2|S||A||Pi|/delta) / (2n))`.
pub fn simulation_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    Ok(estimation_term(q.r_max, 1.0 - q.gamma, q))
}

/// Value gap of the optimal epsilon-greedy policy relative to the optimal
/// policy: `R_max * eps / ((1 - gamma)(1 - gamma (1 - eps)))`.
pub fn epsilon_gap_bound(epsilon: f64, gamma: f64, r_max: f64) -> f64 {
    r_max * epsilon / ((1.0 - gamma) * (1.0 - gamma * (1.0 - epsilon)))
}

/// Every deterministic policy for the given dimensions, in lexicographic
/// order with state 0 as the least-significant digit. Errors when the space
/// exceeds [`MAX_ENUMERATED_POLICIES`].
pub fn enumerate_det_policies(n_states: usize, n_actions: usize) -> Result<Vec<DetPolicy>> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::invalid("need at least one state and one action"));
    }
    let count = (n_actions as u128)
        .checked_pow(n_states as u32)
        .filter(|c| *c <= MAX_ENUMERATED_POLICIES)
        .ok_or_else(|| {
            Error::TooLarge(format!(
                "{n_actions}^{n_states} deterministic policies exceed the enumeration cap of {MAX_ENUMERATED_POLICIES}"
            ))
        })?;
    let mut policies = Vec::with_capacity(count as usize);
    for k in 0..count {
        let mut digits = k;
        let actions = (0..n_states)
            .map(|_| {
                let a = (digits % n_actions as u128) as usize;
                digits /= n_actions as u128;
                a
            })
            .collect();
        policies.push(DetPolicy { actions });
    }
    Ok(policies)
}

/// Report of one verified inequality between scalar values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Report of one epsilon-gap check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Report {
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Check the restricted-policy-set decomposition on one instance:
///
/// ```text
/// |V^pi_M - V^rho_hat_M| <= |V^pi_M - V^rho_M| + 2 max_{p} |V^p_M - V^p_Mhat|
/// ```
///
/// where `pi` is optimal in `M` over all deterministic policies (by
/// exhaustive enumeration), `rho` is the best restricted policy under `M`,
/// and `rho_hat` is the best restricted policy under `Mhat`.
pub fn verify_theorem1(
    true_mdp: &Mdp,
    approx_mdp: &Mdp,
    restricted_set: &[StochPolicy],
    w: &Weighting,
) -> Result<TheoremReport> {
    if true_mdp.rewards.dim() != approx_mdp.rewards.dim() {
        return Err(Error::dims("the two MDPs must share dimensions"));
    }
    if true_mdp.discount != approx_mdp.discount {
        return Err(Error::invalid("the two MDPs must share a discount"));
    }
    if restricted_set.is_empty() {
        return Err(Error::invalid("restricted policy set must be non-empty"));
    }
    let n_actions = true_mdp.n_actions();

    let mut v_pi = f64::NEG_INFINITY;
    for policy in enumerate_det_policies(true_mdp.n_states(), n_actions)? {
        let v = scalar_value_with_tol(true_mdp, &policy.to_stoch(n_actions), w, STRICT_TOL)?;
        if v > v_pi {
            v_pi = v;
        }
    }

    let mut v_rho = f64::NEG_INFINITY;
    let mut best_under_approx = f64::NEG_INFINITY;
    let mut v_rho_hat = f64::NEG_INFINITY;
    let mut max_model_gap = 0.0_f64;
    for policy in restricted_set {
        let on_true = scalar_value_with_tol(true_mdp, policy, w, STRICT_TOL)?;
        let on_approx = scalar_value_with_tol(approx_mdp, policy, w, STRICT_TOL)?;
        if on_true > v_rho {
            v_rho = on_true;
        }
        if on_approx > best_under_approx {
            best_under_approx = on_approx;
            v_rho_hat = on_true;
        }
        max_model_gap = max_model_gap.max((on_true - on_approx).abs());
    }

    let lhs = (v_pi - v_rho_hat).abs();
    let rhs = (v_pi - v_rho).abs() + 2.0 * max_model_gap;
    Ok(TheoremReport {
        lhs,
        rhs,
        holds: lhs <= rhs + THEOREM_SLACK,
    })
}

/// Check the epsilon gap on one instance: the optimal epsilon-greedy policy
/// (greedy base of the epsilon-greedy fixed point, smoothed by epsilon) may
/// trail the optimal policy by at most [`epsilon_gap_bound`].
pub fn verify_lemma2(mdp: &Mdp, epsilon: f64, w: &Weighting) -> Result<Lemma2Report> {
    let n_actions = mdp.n_actions();
    let q_eps = epsilon_greedy_value_iteration(mdp, epsilon, DEFAULT_MAX_ITERS, STRICT_TOL)?;
    let rho = epsilon_greedy_policy(&greedy_policy(&q_eps), n_actions, epsilon)?;
    let q_star = value_iteration(mdp, DEFAULT_MAX_ITERS, STRICT_TOL)?;
    let pi = greedy_policy(&q_star).to_stoch(n_actions);

    let v_pi = scalar_value_with_tol(mdp, &pi, w, STRICT_TOL)?;
    let v_rho = scalar_value_with_tol(mdp, &rho, w, STRICT_TOL)?;
    let gap = v_pi - v_rho;
    let bound = epsilon_gap_bound(epsilon, mdp.discount, mdp.r_max());
    Ok(Lemma2Report {
        gap,
        bound,
        holds: gap <= bound + THEOREM_SLACK,
    })
}

//! Bellman fixed-point solvers and policy transforms.
//!
//! All solvers iterate the relevant Bellman operator from the all-zeros
//! table with double buffering. With non-negative rewards the iterates grow
//! monotonically toward the fixed point, which keeps convergence behavior
//! easy to reason about in tests. A solver stops once the max-norm change of
//! a sweep drops to `tol`; with `tol = 0` it runs exactly `max_iters` sweeps,
//! the protocol the policy census uses.

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::mdp::{DetPolicy, Mdp, QFunction, StochPolicy, Weighting};

/// Default solver tolerance for experiments.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Tighter tolerance for evaluations whose results feed inequality checks.
pub const STRICT_TOL: f64 = 1e-12;
/// Default sweep budget for experiments.
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Iterate `Q(s,a) <- R(s,a) + gamma * sum_s' T(s,a,s') * v(s')` where
/// `v(s')` is some reduction of the previous iterate's row at `s'`.
/// The reduction is what distinguishes optimality, epsilon-greedy, and
/// policy-evaluation backups.
fn solve_fixed_point(
    mdp: &Mdp,
    max_iters: usize,
    tol: f64,
    state_value: impl Fn(usize, ArrayView1<f64>) -> f64,
) -> Result<QFunction> {
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::invalid(format!(
            "tol {tol} must be a non-negative real"
        )));
    }
    let (n_states, n_actions) = mdp.rewards.dim();
    let mut q = Array2::<f64>::zeros((n_states, n_actions));
    let mut q_next = Array2::<f64>::zeros((n_states, n_actions));
    let mut v = Array1::<f64>::zeros(n_states);
    for _ in 0..max_iters {
        for s_i in 0..n_states {
            v[s_i] = state_value(s_i, q.row(s_i));
        }
        let mut delta = 0.0_f64;
        for s_i in 0..n_states {
            for a_i in 0..n_actions {
                let t_row = mdp.transitions.slice(s![s_i, a_i, ..]);
                let backup = mdp.rewards[[s_i, a_i]] + mdp.discount * t_row.dot(&v);
                delta = delta.max((backup - q[[s_i, a_i]]).abs());
                q_next[[s_i, a_i]] = backup;
            }
        }
        std::mem::swap(&mut q, &mut q_next);
        if tol > 0.0 && delta <= tol {
            break;
        }
    }
    Ok(QFunction { values: q })
}

fn row_max(row: ArrayView1<f64>) -> f64 {
    row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
}

/// Solve the Bellman optimality equation by value iteration.
pub fn value_iteration(mdp: &Mdp, max_iters: usize, tol: f64) -> Result<QFunction> {
    solve_fixed_point(mdp, max_iters, tol, |_, row| row_max(row))
}

/// Greedy deterministic policy of a value table; ties go to the lowest
/// action index so policy identity is deterministic.
pub fn greedy_policy(q: &QFunction) -> DetPolicy {
    let actions = q
        .values
        .outer_iter()
        .map(|row| {
            let mut best = 0;
            for (a_i, &x) in row.iter().enumerate() {
                if x > row[best] {
                    best = a_i;
                }
            }
            best
        })
        .collect();
    DetPolicy { actions }
}

/// Solve the policy-evaluation equation `Q^pi` for a stochastic policy.
pub fn evaluate_policy(mdp: &Mdp, policy: &StochPolicy, tol: f64) -> Result<QFunction> {
    if policy.probs.dim() != mdp.rewards.dim() {
        return Err(Error::dims(format!(
            "policy table is {:?}, MDP is {:?}",
            policy.probs.dim(),
            mdp.rewards.dim()
        )));
    }
    solve_fixed_point(mdp, DEFAULT_MAX_ITERS, tol, |s_i, row| {
        policy.probs.row(s_i).dot(&row)
    })
}

/// Policy evaluation for a deterministic policy, lifted to a point mass.
pub fn evaluate_det_policy(mdp: &Mdp, policy: &DetPolicy, tol: f64) -> Result<QFunction> {
    if policy.n_states() != mdp.n_states() {
        return Err(Error::dims(format!(
            "policy covers {} states, MDP has {}",
            policy.n_states(),
            mdp.n_states()
        )));
    }
    evaluate_policy(mdp, &policy.to_stoch(mdp.n_actions()), tol)
}

/// Scalar policy value `sum_s w(s) sum_a pi(a|s) Q^pi(s,a)` at an explicit
/// evaluation tolerance.
pub fn scalar_value_with_tol(
    mdp: &Mdp,
    policy: &StochPolicy,
    w: &Weighting,
    tol: f64,
) -> Result<f64> {
    if w.n_states() != mdp.n_states() {
        return Err(Error::dims(format!(
            "weighting covers {} states, MDP has {}",
            w.n_states(),
            mdp.n_states()
        )));
    }
    let q = evaluate_policy(mdp, policy, tol)?;
    let mut total = 0.0;
    for s_i in 0..mdp.n_states() {
        total += w.weights[s_i] * policy.probs.row(s_i).dot(&q.values.row(s_i));
    }
    Ok(total)
}

/// Scalar policy value at the default tolerance. For a deterministic policy
/// lifted to a point mass this reduces to `sum_s w(s) Q^pi(s, pi(s))`.
pub fn scalar_value(mdp: &Mdp, policy: &StochPolicy, w: &Weighting) -> Result<f64> {
    scalar_value_with_tol(mdp, policy, w, DEFAULT_TOL)
}

/// Solve the epsilon-greedy Bellman system
/// `Q(s,a) = R(s,a) + gamma * sum_s' T(s,a,s') * ((1-eps) max_a' Q(s',a') +
/// (eps/|A|) sum_a' Q(s',a'))`, whose greedy policy is the best base policy
/// under forced epsilon-exploration.
pub fn epsilon_greedy_value_iteration(
    mdp: &Mdp,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<QFunction> {
    check_epsilon(epsilon)?;
    let inv_a = 1.0 / mdp.n_actions() as f64;
    solve_fixed_point(mdp, max_iters, tol, |_, row| {
        (1.0 - epsilon) * row_max(row) + epsilon * inv_a * row.sum()
    })
}

/// The epsilon-greedy smoothing of a deterministic base policy:
/// probability `(1-eps) + eps/|A|` on the base action, `eps/|A|` elsewhere.
pub fn epsilon_greedy_policy(
    base: &DetPolicy,
    n_actions: usize,
    epsilon: f64,
) -> Result<StochPolicy> {
    check_epsilon(epsilon)?;
    let explore = epsilon / n_actions as f64;
    let mut probs = Array2::<f64>::from_elem((base.n_states(), n_actions), explore);
    for (s_i, &a_i) in base.actions.iter().enumerate() {
        if a_i >= n_actions {
            return Err(Error::invalid(format!(
                "action {a_i} out of range (< {n_actions})"
            )));
        }
        probs[[s_i, a_i]] = (1.0 - epsilon) + explore;
    }
    Ok(StochPolicy { probs })
}

/// Replace every transition row with its epsilon-softened mix
/// `(1-eps) * T(s,a) + (eps/|A|) * sum_a' T(s,a')`. Rewards and discount are
/// unchanged: planning on the result is planning under forced exploration of
/// the dynamics only.
pub fn epsilon_soften_mdp(mdp: &Mdp, epsilon: f64) -> Result<Mdp> {
    check_epsilon(epsilon)?;
    let (n_states, n_actions, _) = mdp.transitions.dim();
    let explore = epsilon / n_actions as f64;
    let mut transitions = mdp.transitions.clone();
    for s_i in 0..n_states {
        let mut action_sum = Array1::<f64>::zeros(n_states);
        for a_i in 0..n_actions {
            action_sum += &mdp.transitions.slice(s![s_i, a_i, ..]);
        }
        for a_i in 0..n_actions {
            let mut row = transitions.slice_mut(s![s_i, a_i, ..]);
            for s_j in 0..n_states {
                row[s_j] =
                    (1.0 - epsilon) * mdp.transitions[[s_i, a_i, s_j]] + explore * action_sum[s_j];
            }
        }
    }
    Mdp::new(mdp.rewards.clone(), transitions, mdp.discount)
}

/// Copy of the MDP with the planning discount replaced.
pub fn with_discount(mdp: &Mdp, gamma_check: f64) -> Result<Mdp> {
    if !(0.0..1.0).contains(&gamma_check) {
        return Err(Error::invalid(format!(
            "discount {gamma_check} outside [0, 1)"
        )));
    }
    Ok(Mdp {
        discount: gamma_check,
        ..mdp.clone()
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1]")));
    }
    Ok(())
}

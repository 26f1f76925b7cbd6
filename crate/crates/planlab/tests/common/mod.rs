//! Shared helpers for integration tests: an exact linear-solve policy
//! evaluator and a brute-force policy enumerator, both deliberately
//! implemented with different algorithms than the library so they can act
//! as independent oracles.

#![allow(dead_code, clippy::needless_range_loop)]

use ndarray::{Array1, Array2};
use planlab::mdp::{DetPolicy, Mdp, StochPolicy, Weighting};
use planlab::random_mdp::{sample_mdp, RandomMdpSpec};
use planlab::rng::RngStream;

/// Solve a dense linear system by Gaussian elimination with partial
/// pivoting. Panics on a singular matrix; the systems below are strictly
/// diagonally dominant, so that never fires.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "singular evaluation system");
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Exact state values of a stochastic policy: solves (I - gamma P_pi) v =
/// r_pi directly instead of iterating the Bellman operator.
pub fn exact_state_values(mdp: &Mdp, policy: &StochPolicy) -> Array1<f64> {
    let n = mdp.n_states();
    let gamma = mdp.discount;
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][s] = 1.0;
        for act in 0..mdp.n_actions() {
            let pi = policy.probs[(s, act)];
            b[s] += pi * mdp.rewards[(s, act)];
            for sn in 0..n {
                a[s][sn] -= gamma * pi * mdp.transitions[(s, act, sn)];
            }
        }
    }
    Array1::from(solve_linear(a, b))
}

/// Exact Q-values of a stochastic policy via the linear-solve evaluator.
pub fn exact_q_values(mdp: &Mdp, policy: &StochPolicy) -> Array2<f64> {
    let v = exact_state_values(mdp, policy);
    let (n_states, n_actions) = mdp.rewards.dim();
    let mut q = Array2::zeros((n_states, n_actions));
    for s in 0..n_states {
        for a in 0..n_actions {
            let mut acc = mdp.rewards[(s, a)];
            for sn in 0..n_states {
                acc += mdp.discount * mdp.transitions[(s, a, sn)] * v[sn];
            }
            q[(s, a)] = acc;
        }
    }
    q
}

/// Exact scalar value of a stochastic policy under a state weighting.
pub fn exact_scalar_value(mdp: &Mdp, policy: &StochPolicy, w: &Weighting) -> f64 {
    let q = exact_q_values(mdp, policy);
    let mut total = 0.0;
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            total += w.weights[s] * policy.probs[(s, a)] * q[(s, a)];
        }
    }
    total
}

/// All deterministic policies by an action odometer, with their exact
/// scalar values.
pub fn all_policy_values(mdp: &Mdp, w: &Weighting) -> Vec<(DetPolicy, f64)> {
    let n_states = mdp.n_states();
    let n_actions = mdp.n_actions();
    let total = (n_actions as u64).pow(n_states as u32);
    let mut out = Vec::with_capacity(total as usize);
    for index in 0..total {
        let mut rem = index;
        let mut actions = vec![0usize; n_states];
        for slot in actions.iter_mut() {
            *slot = (rem % n_actions as u64) as usize;
            rem /= n_actions as u64;
        }
        let policy = DetPolicy::new(actions, n_actions).unwrap();
        let value = exact_scalar_value(mdp, &policy.to_stoch(n_actions), w);
        out.push((policy, value));
    }
    out
}

/// Deterministic 10-state test MDP drawn from the default recipe.
pub fn seeded_default_mdp(seed: u64) -> Mdp {
    let spec = RandomMdpSpec::default();
    let mut rng = RngStream::new(seed, 0).rng();
    sample_mdp(&spec, &mut rng).unwrap()
}

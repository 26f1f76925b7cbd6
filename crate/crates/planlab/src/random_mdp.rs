//! Random MDP generation.
//!
//! The generative recipe: per state-action pair, pick `branching` distinct
//! successor states uniformly at random, give each an independent
//! Uniform[0,1] weight, and normalize; every reward is an independent
//! Uniform[reward_low, reward_high] draw. The default constants form a
//! ten-state, two-action chain with branching factor 5 and discount 0.99.

use ndarray::{s, Array2, Array3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::Mdp;

/// Constants of the generative recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomMdpSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub discount: f64,
    pub reward_low: f64,
    pub reward_high: f64,
}

impl Default for RandomMdpSpec {
    fn default() -> Self {
        RandomMdpSpec {
            n_states: 10,
            n_actions: 2,
            branching: 5,
            discount: 0.99,
            reward_low: 0.0,
            reward_high: 1.0,
        }
    }
}

impl RandomMdpSpec {
    /// The larger domain used by the policy-capacity sweep: exact policy
    /// evaluation stays cheap while leaving room for capacity to matter.
    pub fn policy_search_default() -> Self {
        RandomMdpSpec {
            n_states: 20,
            n_actions: 4,
            branching: 5,
            discount: 0.95,
            reward_low: 0.0,
            reward_high: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 || self.branching == 0 {
            return Err(Error::invalid("all spec dimensions must be at least 1"));
        }
        if self.branching > self.n_states {
            return Err(Error::invalid(format!(
                "branching {} exceeds n_states {}",
                self.branching, self.n_states
            )));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::invalid(format!(
                "discount {} outside [0, 1)",
                self.discount
            )));
        }
        if self.reward_low > self.reward_high
            || !self.reward_low.is_finite()
            || !self.reward_high.is_finite()
            || self.reward_low < 0.0
        {
            return Err(Error::invalid(format!(
                "reward range [{}, {}] must be finite, ordered, and non-negative",
                self.reward_low, self.reward_high
            )));
        }
        Ok(())
    }
}

/// Sample the transition tensor of the recipe: every row gets `branching`
/// distinct successors with normalized Uniform[0,1] weights.
pub fn sample_transitions(spec: &RandomMdpSpec, rng: &mut ChaCha8Rng) -> Result<Array3<f64>> {
    spec.validate()?;
    let mut transitions = Array3::<f64>::zeros((spec.n_states, spec.n_actions, spec.n_states));
    let mut support = Vec::with_capacity(spec.n_states);
    let mut weights = vec![0.0_f64; spec.branching];
    for s_i in 0..spec.n_states {
        for a_i in 0..spec.n_actions {
            // Partial shuffle: the first `branching` entries become a
            // uniform random subset of the states, in random order.
            support.clear();
            support.extend(0..spec.n_states);
            for k in 0..spec.branching {
                let j = rng.random_range(k..spec.n_states);
                support.swap(k, j);
            }
            // An all-zero draw has probability zero but would break the
            // row-sum invariant, so resample until the sum is positive.
            let mut total = 0.0;
            while total <= 0.0 {
                total = 0.0;
                for w in weights.iter_mut() {
                    *w = rng.random::<f64>();
                    total += *w;
                }
            }
            let mut row = transitions.slice_mut(s![s_i, a_i, ..]);
            for (&s_j, &w) in support[..spec.branching].iter().zip(weights.iter()) {
                row[s_j] = w / total;
            }
        }
    }
    Ok(transitions)
}

/// Sample the reward table of the recipe: independent uniform draws.
pub fn sample_reward_table(spec: &RandomMdpSpec, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    spec.validate()?;
    let span = spec.reward_high - spec.reward_low;
    Ok(Array2::from_shape_fn(
        (spec.n_states, spec.n_actions),
        |_| spec.reward_low + span * rng.random::<f64>(),
    ))
}

/// Sample a full MDP. Transitions are drawn before rewards, so the
/// transition tensor matches [`sample_transitions_fixed_reward`] replayed on
/// the same stream.
pub fn sample_mdp(spec: &RandomMdpSpec, rng: &mut ChaCha8Rng) -> Result<Mdp> {
    let transitions = sample_transitions(spec, rng)?;
    let rewards = sample_reward_table(spec, rng)?;
    Mdp::new(rewards, transitions, spec.discount)
}

/// Sample only the transitions, keeping a caller-fixed reward table: the
/// census setting, where the reward function is held constant while the
/// transition function varies.
pub fn sample_transitions_fixed_reward(
    reward_table: &Array2<f64>,
    spec: &RandomMdpSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Mdp> {
    if reward_table.dim() != (spec.n_states, spec.n_actions) {
        return Err(Error::dims(format!(
            "reward table is {:?}, spec wants ({}, {})",
            reward_table.dim(),
            spec.n_states,
            spec.n_actions
        )));
    }
    let transitions = sample_transitions(spec, rng)?;
    Mdp::new(reward_table.clone(), transitions, spec.discount)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::PROB_TOL;
    use crate::rng::RngStream;

    #[test]
    fn default_spec_rows_have_exactly_branching_support() {
        let spec = RandomMdpSpec::default();
        let mdp = sample_mdp(&spec, &mut RngStream::new(11, 0).rng()).unwrap();
        for row in mdp.transitions.rows() {
            let nonzero = row.iter().filter(|p| **p > 0.0).count();
            assert_eq!(nonzero, spec.branching);
            assert!((row.sum() - 1.0).abs() < PROB_TOL);
        }
    }

    #[test]
    fn forced_support_of_one_state() {
        let spec = RandomMdpSpec {
            n_states: 1,
            n_actions: 3,
            branching: 1,
            ..Default::default()
        };
        let mdp = sample_mdp(&spec, &mut RngStream::new(5, 0).rng()).unwrap();
        for a_i in 0..3 {
            assert_eq!(mdp.transitions[[0, a_i, 0]], 1.0);
        }
    }

    #[test]
    fn same_stream_means_bit_identical_mdps() {
        let spec = RandomMdpSpec::default();
        let a = sample_mdp(&spec, &mut RngStream::new(42, 9).rng()).unwrap();
        let b = sample_mdp(&spec, &mut RngStream::new(42, 9).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_streams_give_different_mdps() {
        let spec = RandomMdpSpec::default();
        let a = sample_mdp(&spec, &mut RngStream::new(42, 0).rng()).unwrap();
        let b = sample_mdp(&spec, &mut RngStream::new(42, 1).rng()).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn fixed_reward_table_is_passed_through() {
        let spec = RandomMdpSpec::default();
        let reward = sample_reward_table(&spec, &mut RngStream::new(3, 0).rng()).unwrap();
        let mdp = sample_transitions_fixed_reward(&reward, &spec, &mut RngStream::new(3, 1).rng())
            .unwrap();
        assert_eq!(mdp.rewards, reward);
    }

    #[test]
    fn fixed_reward_replays_sample_mdp_transitions() {
        let spec = RandomMdpSpec::default();
        let full = sample_mdp(&spec, &mut RngStream::new(17, 4).rng()).unwrap();
        let reward = Array2::from_elem((spec.n_states, spec.n_actions), 0.5);
        let fixed =
            sample_transitions_fixed_reward(&reward, &spec, &mut RngStream::new(17, 4).rng())
                .unwrap();
        assert_eq!(full.transitions, fixed.transitions);
    }

    #[test]
    fn branching_above_n_states_is_rejected() {
        let spec = RandomMdpSpec {
            n_states: 3,
            branching: 4,
            ..Default::default()
        };
        assert!(sample_mdp(&spec, &mut RngStream::new(0, 0).rng()).is_err());
    }

    #[test]
    fn reward_dimension_mismatch_is_rejected() {
        let spec = RandomMdpSpec::default();
        let reward = Array2::zeros((3, 2));
        assert!(
            sample_transitions_fixed_reward(&reward, &spec, &mut RngStream::new(0, 0).rng())
                .is_err()
        );
    }

    #[test]
    fn rewards_land_in_range() {
        let spec = RandomMdpSpec {
            reward_low: 0.25,
            reward_high: 0.5,
            ..Default::default()
        };
        let mdp = sample_mdp(&spec, &mut RngStream::new(8, 0).rng()).unwrap();
        for &r in &mdp.rewards {
            assert!((0.25..0.5).contains(&r));
        }
    }
}

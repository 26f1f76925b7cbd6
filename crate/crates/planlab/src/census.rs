//! Policy census: estimate how many distinct optimal policies a fixed reward
//! function admits as the transition function varies, by sampling transition
//! functions until no new optimal policy appears for a whole stop window.
//!
//! The count is the capacity measure behind both regularizers: smaller
//! planning discounts and larger exploration rates both shrink it.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::DetPolicy;
use crate::numfmt::fmt_real;
use crate::random_mdp::{sample_reward_table, sample_transitions_fixed_reward, RandomMdpSpec};
use crate::rng::RngStream;
use crate::solve::{
    epsilon_greedy_value_iteration, epsilon_soften_mdp, greedy_policy, value_iteration,
};

/// Number of consecutive non-novel samples that ends a census.
pub const DEFAULT_STOP_WINDOW: usize = 5000;
/// Value-iteration sweeps per sampled transition function.
pub const DEFAULT_VI_SWEEPS: usize = 10;
/// Hard cap on sampled transition functions per census run.
pub const DEFAULT_SAMPLE_CAP: usize = 2_000_000;

/// Which planner defines "optimal" for the census.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CensusPlanner {
    /// Plan by value iteration at the given reduced discount.
    ReducedDiscount(f64),
    /// Plan by the epsilon-greedy Bellman fixed point at the spec's discount.
    EpsilonGreedy(f64),
    /// Plan by value iteration on the epsilon-softened transitions at the
    /// spec's discount.
    EpsilonSoftened(f64),
}

/// One census run's configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusConfig {
    pub planner: CensusPlanner,
    pub stop_window: usize,
    pub vi_sweeps: usize,
    pub sample_cap: usize,
    pub spec: RandomMdpSpec,
}

impl CensusConfig {
    pub fn new(planner: CensusPlanner, spec: RandomMdpSpec) -> Self {
        CensusConfig {
            planner,
            stop_window: DEFAULT_STOP_WINDOW,
            vi_sweeps: DEFAULT_VI_SWEEPS,
            sample_cap: DEFAULT_SAMPLE_CAP,
            spec,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.stop_window == 0 || self.vi_sweeps == 0 || self.sample_cap == 0 {
            return Err(Error::invalid(
                "stop_window, vi_sweeps, and sample_cap must be >= 1",
            ));
        }
        match self.planner {
            CensusPlanner::ReducedDiscount(g) => {
                if !(0.0..1.0).contains(&g) {
                    return Err(Error::invalid(format!("gamma_check {g} outside [0, 1)")));
                }
            }
            CensusPlanner::EpsilonGreedy(e) | CensusPlanner::EpsilonSoftened(e) => {
                if !(0.0..=1.0).contains(&e) {
                    return Err(Error::invalid(format!("epsilon {e} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// Canonical, order-stable identity of a deterministic policy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolicyKey(Vec<u32>);

/// Key a policy for set membership; injective for fixed dimensions and
/// stable across runs and processes.
pub fn canonical_policy_key(policy: &DetPolicy) -> PolicyKey {
    PolicyKey(policy.actions.iter().map(|&a| a as u32).collect())
}

/// Outcome of one census run.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusResult {
    pub distinct_count: usize,
    pub samples_drawn: usize,
    pub policy_set: BTreeSet<PolicyKey>,
    /// True when the sample cap ended the run before the stop window did.
    pub truncated: bool,
}

/// Run one census: repeatedly sample a transition function for the fixed
/// reward table, plan, and record the greedy policy; stop after
/// `stop_window` consecutive samples discover nothing new.
pub fn run_census(
    reward_table: &Array2<f64>,
    config: &CensusConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CensusResult> {
    config.validate()?;
    // The reduced planning discount can be baked into the sampling spec:
    // the discount plays no part in the transition draws.
    let spec = match config.planner {
        CensusPlanner::ReducedDiscount(g) => RandomMdpSpec {
            discount: g,
            ..config.spec
        },
        _ => config.spec,
    };
    let mut policy_set = BTreeSet::new();
    let mut consecutive_known = 0;
    let mut samples_drawn = 0;
    let mut truncated = false;
    while consecutive_known < config.stop_window {
        if samples_drawn >= config.sample_cap {
            truncated = true;
            break;
        }
        let mdp = sample_transitions_fixed_reward(reward_table, &spec, rng)?;
        let q = match config.planner {
            CensusPlanner::ReducedDiscount(_) => value_iteration(&mdp, config.vi_sweeps, 0.0)?,
            CensusPlanner::EpsilonGreedy(e) => {
                epsilon_greedy_value_iteration(&mdp, e, config.vi_sweeps, 0.0)?
            }
            CensusPlanner::EpsilonSoftened(e) => {
                value_iteration(&epsilon_soften_mdp(&mdp, e)?, config.vi_sweeps, 0.0)?
            }
        };
        samples_drawn += 1;
        if policy_set.insert(canonical_policy_key(&greedy_policy(&q))) {
            consecutive_known = 0;
        } else {
            consecutive_known += 1;
        }
    }
    Ok(CensusResult {
        distinct_count: policy_set.len(),
        samples_drawn,
        policy_set,
        truncated,
    })
}

/// Regularizer axis of a census sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMode {
    Gamma,
    Epsilon,
    EpsilonSoft,
}

impl CensusMode {
    pub fn label(&self) -> &'static str {
        match self {
            CensusMode::Gamma => "gamma",
            CensusMode::Epsilon => "epsilon",
            CensusMode::EpsilonSoft => "epsilon-soft",
        }
    }

    fn planner(&self, value: f64) -> CensusPlanner {
        match self {
            CensusMode::Gamma => CensusPlanner::ReducedDiscount(value),
            CensusMode::Epsilon => CensusPlanner::EpsilonGreedy(value),
            CensusMode::EpsilonSoft => CensusPlanner::EpsilonSoftened(value),
        }
    }
}

/// A sweep: censuses over a grid of regularizer values, each repeated for
/// several independently drawn reward tables.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusSweepConfig {
    pub mode: CensusMode,
    pub values: Vec<f64>,
    pub reward_draws: usize,
    pub stop_window: usize,
    pub vi_sweeps: usize,
    pub sample_cap: usize,
    pub spec: RandomMdpSpec,
    pub seed: u64,
}

impl CensusSweepConfig {
    pub fn new(mode: CensusMode, values: Vec<f64>, seed: u64) -> Self {
        CensusSweepConfig {
            mode,
            values,
            reward_draws: 20,
            stop_window: DEFAULT_STOP_WINDOW,
            vi_sweeps: DEFAULT_VI_SWEEPS,
            sample_cap: DEFAULT_SAMPLE_CAP,
            spec: RandomMdpSpec::default(),
            seed,
        }
    }
}

/// One output row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusRow {
    pub mode: CensusMode,
    pub param: f64,
    pub reward_seed: u64,
    pub distinct_count: usize,
    pub samples_drawn: usize,
}

/// Run a full census sweep. Rows are ordered by grid value, then reward
/// draw. Stream layout: reward table k comes from stream k; the census for
/// (value index v, draw k) runs on stream 2^32 + k*|values| + v, so all
/// parallel units are disjoint and the output is worker-count independent.
pub fn run_census_sweep(config: &CensusSweepConfig) -> Result<Vec<CensusRow>> {
    if config.values.is_empty() {
        return Err(Error::invalid("census sweep needs at least one grid value"));
    }
    if config.reward_draws == 0 {
        return Err(Error::invalid(
            "census sweep needs at least one reward draw",
        ));
    }
    let rewards = (0..config.reward_draws)
        .map(|k| {
            sample_reward_table(
                &config.spec,
                &mut RngStream::new(config.seed, k as u64).rng(),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..config.values.len())
        .flat_map(|v| (0..config.reward_draws).map(move |k| (v, k)))
        .collect();
    jobs.into_par_iter()
        .map(|(v, k)| {
            let value = config.values[v];
            let census = CensusConfig {
                planner: config.mode.planner(value),
                stop_window: config.stop_window,
                vi_sweeps: config.vi_sweeps,
                sample_cap: config.sample_cap,
                spec: config.spec,
            };
            let stream = (1 << 32) + (k * config.values.len() + v) as u64;
            let result = run_census(
                &rewards[k],
                &census,
                &mut RngStream::new(config.seed, stream).rng(),
            )?;
            Ok(CensusRow {
                mode: config.mode,
                param: value,
                reward_seed: k as u64,
                distinct_count: result.distinct_count,
                samples_drawn: result.samples_drawn,
            })
        })
        .collect()
}

/// Render sweep rows as CSV with header
/// `mode,param,reward_seed,distinct_count,samples_drawn`.
pub fn census_csv(rows: &[CensusRow]) -> String {
    let mut out = String::from("mode,param,reward_seed,distinct_count,samples_drawn\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.mode.label(),
            fmt_real(row.param),
            row.reward_seed,
            row.distinct_count,
            row.samples_drawn
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use ndarray::Array2;

    fn small_sweep_spec() -> RandomMdpSpec {
        RandomMdpSpec {
            n_states: 4,
            n_actions: 2,
            branching: 2,
            ..Default::default()
        }
    }

    #[test]
    fn myopic_census_finds_one_policy() {
        let spec = RandomMdpSpec::default();
        let reward = sample_reward_table(&spec, &mut RngStream::new(1, 0).rng()).unwrap();
        let mut config = CensusConfig::new(CensusPlanner::ReducedDiscount(0.0), spec);
        config.stop_window = 200;
        let result = run_census(&reward, &config, &mut RngStream::new(1, 1).rng()).unwrap();
        assert_eq!(result.distinct_count, 1);
        assert_eq!(result.samples_drawn, 201);
        assert!(!result.truncated);
    }

    #[test]
    fn all_zero_rewards_tie_break_to_one_policy() {
        let spec = small_sweep_spec();
        let reward = Array2::zeros((4, 2));
        let mut config = CensusConfig::new(CensusPlanner::ReducedDiscount(0.9), spec);
        config.stop_window = 100;
        let result = run_census(&reward, &config, &mut RngStream::new(2, 0).rng()).unwrap();
        assert_eq!(result.distinct_count, 1);
        let only = result.policy_set.iter().next().unwrap();
        assert_eq!(
            *only,
            canonical_policy_key(&DetPolicy {
                actions: vec![0; 4]
            })
        );
    }

    #[test]
    fn epsilon_zero_census_equals_full_discount_census() {
        let spec = small_sweep_spec();
        let reward = sample_reward_table(&spec, &mut RngStream::new(3, 0).rng()).unwrap();
        let mut gamma_config =
            CensusConfig::new(CensusPlanner::ReducedDiscount(spec.discount), spec);
        gamma_config.stop_window = 300;
        let mut eps_config = CensusConfig::new(CensusPlanner::EpsilonGreedy(0.0), spec);
        eps_config.stop_window = 300;
        let a = run_census(&reward, &gamma_config, &mut RngStream::new(3, 1).rng()).unwrap();
        let b = run_census(&reward, &eps_config, &mut RngStream::new(3, 1).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn census_respects_sample_cap() {
        let spec = small_sweep_spec();
        let reward = sample_reward_table(&spec, &mut RngStream::new(4, 0).rng()).unwrap();
        let mut config = CensusConfig::new(CensusPlanner::ReducedDiscount(0.9), spec);
        config.stop_window = 1_000_000;
        config.sample_cap = 50;
        let result = run_census(&reward, &config, &mut RngStream::new(4, 1).rng()).unwrap();
        assert!(result.truncated);
        assert_eq!(result.samples_drawn, 50);
    }

    #[test]
    fn census_count_bounded_by_policy_space() {
        let spec = RandomMdpSpec {
            n_states: 2,
            n_actions: 2,
            branching: 2,
            ..Default::default()
        };
        let reward = sample_reward_table(&spec, &mut RngStream::new(5, 0).rng()).unwrap();
        let mut config = CensusConfig::new(CensusPlanner::ReducedDiscount(0.9), spec);
        config.stop_window = 500;
        let result = run_census(&reward, &config, &mut RngStream::new(5, 1).rng()).unwrap();
        assert!(result.distinct_count <= 4);
    }

    #[test]
    fn policy_keys_separate_distinct_policies() {
        let p = DetPolicy {
            actions: vec![0, 1, 1],
        };
        let q = DetPolicy {
            actions: vec![0, 1, 0],
        };
        assert_eq!(canonical_policy_key(&p), canonical_policy_key(&p.clone()));
        assert_ne!(canonical_policy_key(&p), canonical_policy_key(&q));
    }

    #[test]
    fn sweep_rows_are_grid_major_and_deterministic() {
        let mut config = CensusSweepConfig::new(CensusMode::Gamma, vec![0.0, 0.5], 9);
        config.spec = small_sweep_spec();
        config.reward_draws = 2;
        config.stop_window = 100;
        let rows = run_census_sweep(&config).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(
            rows.iter()
                .map(|r| (r.param, r.reward_seed))
                .collect::<Vec<_>>(),
            vec![(0.0, 0), (0.0, 1), (0.5, 0), (0.5, 1)]
        );
        let again = run_census_sweep(&config).unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn census_csv_has_expected_header_and_shape() {
        let rows = vec![CensusRow {
            mode: CensusMode::Gamma,
            param: 0.5,
            reward_seed: 3,
            distinct_count: 7,
            samples_drawn: 5200,
        }];
        let csv = census_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("mode,param,reward_seed,distinct_count,samples_drawn")
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("gamma,5.0000000000000000e-1,3,7,5200"));
    }
}

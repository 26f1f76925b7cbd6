//! Policy-gradient planning with a width-limited policy network.
//!
//! The policy is a single-hidden-layer MLP over one-hot state inputs,
//! trained by REINFORCE with a tabular state-value baseline on episodes
//! simulated inside a learned model. Because states are one-hot, the induced
//! stochastic policy is exactly representable as a table, so trained
//! policies are scored by exact evaluation on both the learned model and
//! the true MDP. Sweeping the hidden width measures how policy capacity
//! trades off against overfitting to the model.

use std::fmt::Write;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{estimate_model, sample_categorical, Dataset, Fallback, Transition};
use crate::experiments::confidence_interval_95;
use crate::mdp::{Mdp, StochPolicy, Weighting};
use crate::numfmt::fmt_real;
use crate::rng::RngStream;
use crate::solve::{evaluate_policy, scalar_value_with_tol, STRICT_TOL};
use crate::svg::{render_line_chart, ChartConfig, ChartPoint, ChartSeries};

/// One-hot input, rectified hidden layer, softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    /// Hidden weights, `hidden x n_states`.
    pub w1: Array2<f64>,
    /// Hidden biases, `hidden`.
    pub b1: Array1<f64>,
    /// Output weights, `n_actions x hidden`.
    pub w2: Array2<f64>,
    /// Output biases, `n_actions`.
    pub b2: Array1<f64>,
}

impl MlpPolicy {
    pub fn n_states(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_actions(&self) -> usize {
        self.w2.nrows()
    }

    pub fn hidden_units(&self) -> usize {
        self.w1.nrows()
    }

    pub fn zeros(n_states: usize, n_actions: usize, hidden: usize) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || hidden == 0 {
            return Err(Error::invalid("policy dimensions must be positive"));
        }
        Ok(Self {
            w1: Array2::zeros((hidden, n_states)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((n_actions, hidden)),
            b2: Array1::zeros(n_actions),
        })
    }

    /// Independent uniform draws in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` per
    /// layer, biases included. Draw order is w1 row-major, b1, w2 row-major,
    /// b2, so initializations replay exactly from an RNG stream.
    pub fn init(
        n_states: usize,
        n_actions: usize,
        hidden: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let mut policy = Self::zeros(n_states, n_actions, hidden)?;
        let in_bound = 1.0 / (n_states as f64).sqrt();
        let hidden_bound = 1.0 / (hidden as f64).sqrt();
        for value in policy.w1.iter_mut().chain(policy.b1.iter_mut()) {
            *value = rng.random_range(-in_bound..=in_bound);
        }
        for value in policy.w2.iter_mut().chain(policy.b2.iter_mut()) {
            *value = rng.random_range(-hidden_bound..=hidden_bound);
        }
        Ok(policy)
    }
}

/// Tabular state-value estimates used as the REINFORCE baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub values: Array1<f64>,
}

impl BaselineTable {
    pub fn zeros(n_states: usize) -> Self {
        Self {
            values: Array1::zeros(n_states),
        }
    }
}

/// Hidden pre-activations, hidden activations, and action probabilities for
/// one state. The one-hot input makes the first layer a column lookup.
fn forward_parts(policy: &MlpPolicy, state: usize) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let pre = &policy.w1.column(state) + &policy.b1;
    let hidden = pre.mapv(|x| x.max(0.0));
    let mut logits = policy.w2.dot(&hidden) + &policy.b2;
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    logits.mapv_inplace(|x| (x - max).exp());
    let total = logits.sum();
    logits.mapv_inplace(|x| x / total);
    (pre, hidden, logits)
}

/// Action distribution of the policy at one state:
/// `softmax(w2 relu(w1 onehot(state) + b1) + b2)`.
pub fn policy_forward(policy: &MlpPolicy, state: usize) -> Array1<f64> {
    forward_parts(policy, state).2
}

/// The policy expanded to its exact tabular form.
pub fn tabular_policy(policy: &MlpPolicy) -> Result<StochPolicy> {
    let mut probs = Array2::zeros((policy.n_states(), policy.n_actions()));
    for state in 0..policy.n_states() {
        probs.row_mut(state).assign(&policy_forward(policy, state));
    }
    StochPolicy::new(probs)
}

/// Roll out one episode of the policy in the given MDP from a uniformly
/// random start state.
pub fn simulate_episode(
    mdp: &Mdp,
    policy: &MlpPolicy,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Transition>> {
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::dims("policy and MDP dimensions differ"));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let mut state = rng.random_range(0..mdp.n_states());
    let mut episode = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let probs = policy_forward(policy, state);
        let action = sample_categorical(probs.view(), rng);
        let next_state =
            sample_categorical(mdp.transitions.slice(ndarray::s![state, action, ..]), rng);
        episode.push(Transition {
            state,
            action,
            reward: mdp.rewards[(state, action)],
            next_state,
        });
        state = next_state;
    }
    Ok(episode)
}

/// One REINFORCE update from a complete episode.
///
/// Discounted returns G_t are computed backward; advantages G_t - b(s_t) use
/// the baseline as it stood before this call. The policy ascends the
/// accumulated gradient `sum_t gamma^t advantage_t grad log pi(a_t|s_t)`,
/// evaluated at the pre-update parameters and applied once with `step_size`.
/// The baseline then moves toward each G_t with step `0.1 * step_size`,
/// sequentially in episode order. Episode indices must fit the policy's
/// dimensions.
pub fn reinforce_step(
    policy: &mut MlpPolicy,
    baseline: &mut BaselineTable,
    episode: &[Transition],
    step_size: f64,
    gamma: f64,
) {
    let mut returns = vec![0.0; episode.len()];
    let mut acc = 0.0;
    for (t, step) in episode.iter().enumerate().rev() {
        acc = step.reward + gamma * acc;
        returns[t] = acc;
    }
    let advantages: Vec<f64> = episode
        .iter()
        .zip(&returns)
        .map(|(s, g)| g - baseline.values[s.state])
        .collect();

    let mut d_w1 = Array2::<f64>::zeros(policy.w1.dim());
    let mut d_b1 = Array1::<f64>::zeros(policy.b1.len());
    let mut d_w2 = Array2::<f64>::zeros(policy.w2.dim());
    let mut d_b2 = Array1::<f64>::zeros(policy.b2.len());
    let mut discount_t = 1.0;
    for (step, &advantage) in episode.iter().zip(&advantages) {
        let (pre, hidden, probs) = forward_parts(policy, step.state);
        let scale = discount_t * advantage;
        let mut d_logits = probs.mapv(|p| -p);
        d_logits[step.action] += 1.0;

        d_b2.scaled_add(scale, &d_logits);
        for (a, &dl) in d_logits.iter().enumerate() {
            d_w2.row_mut(a).scaled_add(scale * dl, &hidden);
        }
        let mut d_pre = policy.w2.t().dot(&d_logits);
        for (dp, &p) in d_pre.iter_mut().zip(pre.iter()) {
            if p <= 0.0 {
                *dp = 0.0;
            }
        }
        d_b1.scaled_add(scale, &d_pre);
        d_w1.column_mut(step.state).scaled_add(scale, &d_pre);
        discount_t *= gamma;
    }
    policy.w1.scaled_add(step_size, &d_w1);
    policy.b1.scaled_add(step_size, &d_b1);
    policy.w2.scaled_add(step_size, &d_w2);
    policy.b2.scaled_add(step_size, &d_b2);

    let baseline_step = 0.1 * step_size;
    for (step, &g) in episode.iter().zip(&returns) {
        let value = baseline.values[step.state];
        baseline.values[step.state] = value + baseline_step * (g - value);
    }
}

/// Hidden-width sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub hidden_list: Vec<usize>,
    pub runs: usize,
    pub episodes_per_run: usize,
    pub episode_horizon: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl SweepConfig {
    /// Default sweep. The width grid tops out at 100 because plain gradient
    /// ascent scales each width's effective logit step with its hidden-layer
    /// norm: much wider nets hit their fit ceiling within any episode budget
    /// that still leaves narrow nets underfit, which flattens the top of the
    /// on-model curve into noise.
    pub fn new(seed: u64) -> Self {
        Self {
            hidden_list: vec![1, 2, 5, 25, 50, 100],
            runs: 40,
            episodes_per_run: 4000,
            episode_horizon: 25,
            step_size: 0.005,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_list.is_empty() || self.hidden_list.contains(&0) {
            return Err(Error::invalid(
                "hidden_list must be non-empty positive widths",
            ));
        }
        if self.runs < 2 {
            return Err(Error::invalid(
                "runs must be at least 2 for confidence intervals",
            ));
        }
        if self.runs > u32::MAX as usize {
            return Err(Error::TooLarge(
                "runs exceed the stream-layout capacity".into(),
            ));
        }
        if self.episodes_per_run == 0 || self.episode_horizon == 0 {
            return Err(Error::invalid("episode counts must be positive"));
        }
        if self.step_size <= 0.0 || !self.step_size.is_finite() {
            return Err(Error::invalid(format!(
                "step_size {} must be positive",
                self.step_size
            )));
        }
        Ok(())
    }
}

/// Aggregated sweep cell: exact scalar values of the trained policies on the
/// learned model and on the true MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub hidden_units: usize,
    pub value_on_model: f64,
    pub vm_ci_low: f64,
    pub vm_ci_high: f64,
    pub value_on_true: f64,
    pub vt_ci_low: f64,
    pub vt_ci_high: f64,
    pub runs: usize,
}

/// Train `runs` policies per hidden width on the model estimated from the
/// dataset, then score each exactly on both the model and the true MDP. Run
/// `r` of width index `k` draws from stream `((k + 1) << 32) | r`, leaving
/// low stream ids free for the caller's own MDP and dataset draws; results
/// are bit-identical for any worker count.
///
/// Every run's baseline starts at the model's uniform-policy state values,
/// the value function of the near-uniform initial policy. Starting from
/// zeros instead would make the first advantages as large as the returns
/// themselves, and one such episode is enough to saturate a wide policy.
pub fn run_hidden_sweep(
    true_mdp: &Mdp,
    dataset: &Dataset,
    config: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let dims = (true_mdp.n_states(), true_mdp.n_actions());
    let model = estimate_model(
        dataset,
        dims,
        Fallback::UniformZeroReward,
        true_mdp.discount,
    )?;
    let w = Weighting::uniform(dims.0);

    let uniform = StochPolicy::uniform(dims.0, dims.1);
    let q_uniform = evaluate_policy(&model, &uniform, STRICT_TOL)?;
    let baseline_init = BaselineTable {
        values: q_uniform.values.mean_axis(ndarray::Axis(1)).unwrap(),
    };

    let jobs: Vec<(usize, usize)> = (0..config.hidden_list.len())
        .flat_map(|k| (0..config.runs).map(move |r| (k, r)))
        .collect();
    let scores: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(k, r)| -> Result<(f64, f64)> {
            let stream_id = ((k as u64 + 1) << 32) | r as u64;
            let mut rng = RngStream::new(config.seed, stream_id).rng();
            let hidden = config.hidden_list[k];
            let mut policy = MlpPolicy::init(dims.0, dims.1, hidden, &mut rng)?;
            let mut baseline = baseline_init.clone();
            for _ in 0..config.episodes_per_run {
                let episode = simulate_episode(&model, &policy, config.episode_horizon, &mut rng)?;
                reinforce_step(
                    &mut policy,
                    &mut baseline,
                    &episode,
                    config.step_size,
                    model.discount,
                );
            }
            let table = tabular_policy(&policy)?;
            let on_model = scalar_value_with_tol(&model, &table, &w, STRICT_TOL)?;
            let on_true = scalar_value_with_tol(true_mdp, &table, &w, STRICT_TOL)?;
            Ok((on_model, on_true))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(config.hidden_list.len());
    for (k, &hidden_units) in config.hidden_list.iter().enumerate() {
        let block = &scores[k * config.runs..(k + 1) * config.runs];
        let on_model: Vec<f64> = block.iter().map(|s| s.0).collect();
        let on_true: Vec<f64> = block.iter().map(|s| s.1).collect();
        let value_on_model = on_model.iter().sum::<f64>() / on_model.len() as f64;
        let value_on_true = on_true.iter().sum::<f64>() / on_true.len() as f64;
        let (vm_ci_low, vm_ci_high) = confidence_interval_95(&on_model)?;
        let (vt_ci_low, vt_ci_high) = confidence_interval_95(&on_true)?;
        rows.push(SweepRow {
            hidden_units,
            value_on_model,
            vm_ci_low,
            vm_ci_high,
            value_on_true,
            vt_ci_low,
            vt_ci_high,
            runs: config.runs,
        });
    }
    Ok(rows)
}

/// CSV with header
/// `hidden_units,value_on_model,vm_ci_low,vm_ci_high,value_on_true,vt_ci_low,vt_ci_high,runs`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "hidden_units,value_on_model,vm_ci_low,vm_ci_high,value_on_true,vt_ci_low,vt_ci_high,runs\n",
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.hidden_units,
            fmt_real(row.value_on_model),
            fmt_real(row.vm_ci_low),
            fmt_real(row.vm_ci_high),
            fmt_real(row.value_on_true),
            fmt_real(row.vt_ci_low),
            fmt_real(row.vt_ci_high),
            row.runs
        );
    }
    out
}

/// Chart with both curves against hidden width on a log axis.
pub fn sweep_svg(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows to plot"));
    }
    let model_series = ChartSeries {
        label: "on learned model".to_string(),
        points: rows
            .iter()
            .map(|r| {
                ChartPoint::with_ci(
                    r.hidden_units as f64,
                    r.value_on_model,
                    r.vm_ci_low,
                    r.vm_ci_high,
                )
            })
            .collect(),
    };
    let true_series = ChartSeries {
        label: "on true MDP".to_string(),
        points: rows
            .iter()
            .map(|r| {
                ChartPoint::with_ci(
                    r.hidden_units as f64,
                    r.value_on_true,
                    r.vt_ci_low,
                    r.vt_ci_high,
                )
            })
            .collect(),
    };
    render_line_chart(
        &ChartConfig {
            title: "policy value vs hidden width".to_string(),
            x_label: "hidden units".to_string(),
            y_label: "scalar value".to_string(),
            log_x: true,
        },
        &[model_series, true_series],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::generate_dataset;
    use crate::random_mdp::{sample_mdp, RandomMdpSpec};

    fn small_policy(rng_seed: u64) -> MlpPolicy {
        MlpPolicy::init(4, 3, 5, &mut RngStream::new(rng_seed, 0).rng()).unwrap()
    }

    #[test]
    fn zero_weights_give_the_uniform_distribution() {
        let policy = MlpPolicy::zeros(4, 3, 5).unwrap();
        let probs = policy_forward(&policy, 2);
        for &p in probs.iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_outputs_a_distribution_for_many_random_policies() {
        for seed in 0..1000 {
            let policy = MlpPolicy::init(3, 4, 2, &mut RngStream::new(seed, 0).rng()).unwrap();
            for state in 0..3 {
                let probs = policy_forward(&policy, state);
                assert!(probs.iter().all(|&p| p >= 0.0));
                assert!((probs.sum() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn output_bias_shift_leaves_the_distribution_unchanged() {
        let policy = small_policy(3);
        let mut shifted = policy.clone();
        shifted.b2.mapv_inplace(|b| b + 7.25);
        for state in 0..4 {
            let base = policy_forward(&policy, state);
            let moved = policy_forward(&shifted, state);
            for (a, b) in base.iter().zip(moved.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn initialization_respects_fan_in_bounds_and_replays() {
        let policy = MlpPolicy::init(16, 2, 9, &mut RngStream::new(4, 0).rng()).unwrap();
        assert!(policy
            .w1
            .iter()
            .chain(policy.b1.iter())
            .all(|v| v.abs() <= 0.25));
        assert!(policy
            .w2
            .iter()
            .chain(policy.b2.iter())
            .all(|v| v.abs() <= 1.0 / 3.0));
        let replay = MlpPolicy::init(16, 2, 9, &mut RngStream::new(4, 0).rng()).unwrap();
        assert_eq!(policy, replay);
    }

    #[test]
    fn zero_advantage_leaves_policy_unchanged() {
        let mut policy = small_policy(5);
        let frozen = policy.clone();
        let mut baseline = BaselineTable::zeros(4);
        let episode = vec![
            Transition {
                state: 1,
                action: 0,
                reward: 2.0,
                next_state: 2,
            },
            Transition {
                state: 2,
                action: 1,
                reward: 2.0,
                next_state: 1,
            },
        ];
        baseline.values[1] = 2.0 + 0.0 * 2.0;
        baseline.values[2] = 2.0;
        reinforce_step(&mut policy, &mut baseline, &episode, 0.1, 0.0);
        assert_eq!(policy, frozen);
    }

    #[test]
    fn baseline_moves_toward_returns() {
        let mut policy = small_policy(6);
        let mut baseline = BaselineTable::zeros(4);
        let episode = vec![Transition {
            state: 3,
            action: 0,
            reward: 1.0,
            next_state: 0,
        }];
        reinforce_step(&mut policy, &mut baseline, &episode, 0.5, 0.9);
        assert!((baseline.values[3] - 0.05).abs() < 1e-15);
        assert_eq!(baseline.values[0], 0.0);
    }

    #[test]
    fn episodes_have_valid_chained_transitions() {
        let m = sample_mdp(&RandomMdpSpec::default(), &mut RngStream::new(2, 0).rng()).unwrap();
        let policy = MlpPolicy::init(10, 2, 3, &mut RngStream::new(2, 1).rng()).unwrap();
        let episode = simulate_episode(&m, &policy, 12, &mut RngStream::new(2, 2).rng()).unwrap();
        assert_eq!(episode.len(), 12);
        for pair in episode.windows(2) {
            assert_eq!(pair[0].next_state, pair[1].state);
        }
        for step in &episode {
            assert_eq!(step.reward, m.rewards[(step.state, step.action)]);
        }
    }

    #[test]
    fn sweep_is_reproducible_and_well_shaped() {
        let spec = RandomMdpSpec::policy_search_default();
        let mut rng = RngStream::new(31, 0).rng();
        let m = sample_mdp(&spec, &mut rng).unwrap();
        let dataset = generate_dataset(&m, 30, 10, &mut rng).unwrap();
        let config = SweepConfig {
            hidden_list: vec![2, 10],
            runs: 3,
            episodes_per_run: 20,
            ..SweepConfig::new(31)
        };
        let rows = run_hidden_sweep(&m, &dataset, &config).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.vm_ci_low <= row.value_on_model && row.value_on_model <= row.vm_ci_high);
            assert!(row.vt_ci_low <= row.value_on_true && row.value_on_true <= row.vt_ci_high);
            assert_eq!(row.runs, 3);
        }
        let again = run_hidden_sweep(&m, &dataset, &config).unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn sweep_config_validation() {
        assert!(SweepConfig::new(1).validate().is_ok());
        assert!(SweepConfig {
            hidden_list: vec![],
            ..SweepConfig::new(1)
        }
        .validate()
        .is_err());
        assert!(SweepConfig {
            hidden_list: vec![0],
            ..SweepConfig::new(1)
        }
        .validate()
        .is_err());
        assert!(SweepConfig {
            runs: 1,
            ..SweepConfig::new(1)
        }
        .validate()
        .is_err());
        assert!(SweepConfig {
            step_size: 0.0,
            ..SweepConfig::new(1)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn csv_and_svg_emission() {
        let rows = vec![SweepRow {
            hidden_units: 5,
            value_on_model: 1.5,
            vm_ci_low: 1.4,
            vm_ci_high: 1.6,
            value_on_true: 1.2,
            vt_ci_low: 1.1,
            vt_ci_high: 1.3,
            runs: 4,
        }];
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(
            "hidden_units,value_on_model,vm_ci_low,vm_ci_high,value_on_true,vt_ci_low,vt_ci_high,runs\n5,"
        ));
        assert!(csv.lines().nth(1).unwrap().ends_with(",4"));
        let svg = sweep_svg(&rows).unwrap();
        assert!(svg.contains("on learned model"));
        assert!(svg.contains("on true MDP"));
    }
}

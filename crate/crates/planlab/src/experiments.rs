//! Monte-Carlo U-curve experiments and closed-form bound curves.
//!
//! A U-curve run samples many random planning problems, fits a
//! certainty-equivalence model to a small dataset from each, plans on the
//! model at every regularizer setting on a grid, and measures the loss of
//! the planned policy on the true MDP. Means and confidence intervals per
//! (sample size, grid value) trace how the best regularizer strength moves
//! with data volume. The bound curve evaluates the closed-form loss bound
//! over the same grid.

use std::collections::BTreeMap;
use std::fmt::Write;

use rayon::prelude::*;

use crate::bounds::{jiang_bound, pi_count_estimate, BoundQuery};
use crate::error::{Error, Result};
use crate::estimation::{estimate_model, generate_dataset, Fallback};
use crate::mdp::{DetPolicy, Mdp, Weighting};
use crate::numfmt::fmt_real;
use crate::random_mdp::{sample_mdp, RandomMdpSpec};
use crate::rng::RngStream;
use crate::solve::{
    epsilon_greedy_value_iteration, epsilon_soften_mdp, greedy_policy, scalar_value_with_tol,
    value_iteration, with_discount, DEFAULT_MAX_ITERS, DEFAULT_TOL, STRICT_TOL,
};
use crate::svg::{render_line_chart, ChartConfig, ChartPoint, ChartSeries};

/// Planning-discount grid: 0.0 through 0.9 in steps of 0.1, then the
/// evaluation discount 0.99.
pub const GAMMA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];

/// Epsilon grid: 0.0 through 0.9 in steps of 0.1, then 1.0.
pub const EPSILON_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Default dataset sizes, in trajectories.
pub const DEFAULT_N_LIST: [usize; 4] = [5, 10, 20, 50];

/// Which regularizer the grid sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UCurveMode {
    Gamma,
    Epsilon,
}

impl UCurveMode {
    pub fn label(self) -> &'static str {
        match self {
            UCurveMode::Gamma => "gamma",
            UCurveMode::Epsilon => "epsilon",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            UCurveMode::Gamma => GAMMA_GRID.to_vec(),
            UCurveMode::Epsilon => EPSILON_GRID.to_vec(),
        }
    }
}

/// How epsilon-mode planning is carried out. The default plans standard
/// value iteration on the epsilon-softened transition model; the fixed-point
/// variant plans the epsilon-greedy Bellman operator on the unmodified model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsilonPlanner {
    #[default]
    SoftenedTransitions,
    QFixedPoint,
}

/// Full U-curve experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct UCurveConfig {
    pub mode: UCurveMode,
    pub grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub replicates: usize,
    pub horizon: usize,
    pub spec: RandomMdpSpec,
    pub seed: u64,
    pub epsilon_planner: EpsilonPlanner,
}

impl UCurveConfig {
    pub fn new(mode: UCurveMode, seed: u64) -> Self {
        Self {
            mode,
            grid: mode.default_grid(),
            n_list: DEFAULT_N_LIST.to_vec(),
            replicates: 1000,
            horizon: 10,
            spec: RandomMdpSpec::default(),
            seed,
            epsilon_planner: EpsilonPlanner::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.grid.is_empty() {
            return Err(Error::invalid("grid must be non-empty"));
        }
        for &value in &self.grid {
            let ok = match self.mode {
                UCurveMode::Gamma => (0.0..1.0).contains(&value),
                UCurveMode::Epsilon => (0.0..=1.0).contains(&value),
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "grid value {value} invalid for {} mode",
                    self.mode.label()
                )));
            }
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::invalid(
                "n_list must be non-empty positive trajectory counts",
            ));
        }
        if self.replicates < 2 {
            return Err(Error::invalid(
                "replicates must be at least 2 for confidence intervals",
            ));
        }
        if self.replicates > u32::MAX as usize {
            return Err(Error::TooLarge(
                "replicates exceed the stream-layout capacity".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        Ok(())
    }
}

/// One aggregated cell of a U-curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UCurveRow {
    pub mode: UCurveMode,
    pub param: f64,
    pub n: usize,
    pub mean_loss: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
}

/// Aggregated U-curve, rows ordered by n_list position then grid position.
#[derive(Debug, Clone, PartialEq)]
pub struct UCurveResult {
    pub rows: Vec<UCurveRow>,
}

/// One point of the closed-form bound curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub n: usize,
    pub gamma_check: f64,
    pub bound: f64,
}

/// Loss of a planned policy on the true MDP: the gap between the optimal
/// scalar value and the policy's scalar value, both under the true MDP's own
/// discount. Exactly zero when the plan coincides with the computed optimum.
pub fn empirical_loss(true_mdp: &Mdp, plan_policy: &DetPolicy, w: &Weighting) -> Result<f64> {
    let n_actions = true_mdp.n_actions();
    let q_star = value_iteration(true_mdp, DEFAULT_MAX_ITERS, STRICT_TOL)?;
    let pi_star = greedy_policy(&q_star);
    if plan_policy.actions == pi_star.actions {
        return Ok(0.0);
    }
    let v_star = scalar_value_with_tol(true_mdp, &pi_star.to_stoch(n_actions), w, STRICT_TOL)?;
    let v_plan = scalar_value_with_tol(true_mdp, &plan_policy.to_stoch(n_actions), w, STRICT_TOL)?;
    Ok(v_star - v_plan)
}

/// Loss of every grid value for one replicate: sample a true MDP, collect a
/// dataset of `n` trajectories, fit the certainty-equivalence model, plan at
/// each grid value, and score each plan on the true MDP.
fn replicate_losses(config: &UCurveConfig, n: usize, stream_id: u64) -> Result<Vec<f64>> {
    let mut rng = RngStream::new(config.seed, stream_id).rng();
    let true_mdp = sample_mdp(&config.spec, &mut rng)?;
    let dataset = generate_dataset(&true_mdp, n, config.horizon, &mut rng)?;
    let dims = (config.spec.n_states, config.spec.n_actions);
    let model = estimate_model(
        &dataset,
        dims,
        Fallback::UniformZeroReward,
        true_mdp.discount,
    )?;

    let n_actions = true_mdp.n_actions();
    let w = Weighting::uniform(true_mdp.n_states());
    let q_star = value_iteration(&true_mdp, DEFAULT_MAX_ITERS, STRICT_TOL)?;
    let pi_star = greedy_policy(&q_star);
    let v_star = scalar_value_with_tol(&true_mdp, &pi_star.to_stoch(n_actions), &w, STRICT_TOL)?;

    let mut plan_values: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut losses = Vec::with_capacity(config.grid.len());
    for &value in &config.grid {
        let plan = match config.mode {
            UCurveMode::Gamma => {
                let reduced = with_discount(&model, value)?;
                greedy_policy(&value_iteration(&reduced, DEFAULT_MAX_ITERS, DEFAULT_TOL)?)
            }
            UCurveMode::Epsilon => match config.epsilon_planner {
                EpsilonPlanner::SoftenedTransitions => {
                    let softened = epsilon_soften_mdp(&model, value)?;
                    greedy_policy(&value_iteration(&softened, DEFAULT_MAX_ITERS, DEFAULT_TOL)?)
                }
                EpsilonPlanner::QFixedPoint => greedy_policy(&epsilon_greedy_value_iteration(
                    &model,
                    value,
                    DEFAULT_MAX_ITERS,
                    DEFAULT_TOL,
                )?),
            },
        };
        if plan.actions == pi_star.actions {
            losses.push(0.0);
            continue;
        }
        let v_plan = match plan_values.get(&plan.actions) {
            Some(&v) => v,
            None => {
                let v =
                    scalar_value_with_tol(&true_mdp, &plan.to_stoch(n_actions), &w, STRICT_TOL)?;
                plan_values.insert(plan.actions.clone(), v);
                v
            }
        };
        losses.push(v_star - v_plan);
    }
    Ok(losses)
}

/// Run the full experiment. Replicate `i` of dataset-size index `k` draws
/// from stream `(k << 32) | i`, so results are bit-identical for any worker
/// count and any subset of `n_list` reproduces its own rows.
pub fn run_ucurve(config: &UCurveConfig) -> Result<UCurveResult> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.n_list.len())
        .flat_map(|k| (0..config.replicates).map(move |i| (k, i)))
        .collect();
    let per_replicate: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(k, i)| {
            let stream_id = ((k as u64) << 32) | i as u64;
            replicate_losses(config, config.n_list[k], stream_id)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(config.n_list.len() * config.grid.len());
    for (k, &n) in config.n_list.iter().enumerate() {
        let block = &per_replicate[k * config.replicates..(k + 1) * config.replicates];
        for (g, &param) in config.grid.iter().enumerate() {
            let samples: Vec<f64> = block.iter().map(|losses| losses[g]).collect();
            let mean_loss = samples.iter().sum::<f64>() / samples.len() as f64;
            let (ci_low, ci_high) = confidence_interval_95(&samples)?;
            rows.push(UCurveRow {
                mode: config.mode,
                param,
                n,
                mean_loss,
                ci_low,
                ci_high,
                replicates: config.replicates,
            });
        }
    }
    Ok(UCurveResult { rows })
}

/// Evaluate the closed-form loss bound over a discount grid for each sample
/// size, using the census-fit policy-count estimate.
pub fn run_bound_curve(
    n_list: &[usize],
    grid: &[f64],
    delta: f64,
    spec: &RandomMdpSpec,
) -> Result<Vec<BoundRow>> {
    spec.validate()?;
    if n_list.is_empty() || grid.is_empty() {
        return Err(Error::invalid(
            "bound curve needs at least one n and one grid value",
        ));
    }
    let mut rows = Vec::with_capacity(n_list.len() * grid.len());
    for &n in n_list {
        for &gamma_check in grid {
            let query = BoundQuery {
                gamma: spec.discount,
                gamma_check,
                r_max: spec.reward_high,
                n,
                delta,
                n_states: spec.n_states,
                n_actions: spec.n_actions,
                pi_count: pi_count_estimate(gamma_check),
            };
            rows.push(BoundRow {
                n,
                gamma_check,
                bound: jiang_bound(&query)?,
            });
        }
    }
    Ok(rows)
}

/// Mean plus/minus `1.96 * sample_sd / sqrt(count)`.
pub fn confidence_interval_95(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::invalid(
            "confidence interval needs at least 2 samples",
        ));
    }
    let count = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / count;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1.0);
    let half_width = 1.96 * variance.sqrt() / count.sqrt();
    Ok((mean - half_width, mean + half_width))
}

/// CSV with header `mode,param,n,mean_loss,ci_low,ci_high,replicates`.
pub fn ucurve_csv(result: &UCurveResult) -> String {
    let mut out = String::from("mode,param,n,mean_loss,ci_low,ci_high,replicates\n");
    for row in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.mode.label(),
            fmt_real(row.param),
            row.n,
            fmt_real(row.mean_loss),
            fmt_real(row.ci_low),
            fmt_real(row.ci_high),
            row.replicates
        );
    }
    out
}

/// CSV with header `n,gamma_check,bound`.
pub fn bound_curve_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("n,gamma_check,bound\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            row.n,
            fmt_real(row.gamma_check),
            fmt_real(row.bound)
        );
    }
    out
}

/// One chart for a U-curve result: one series per dataset size, loss against
/// the grid parameter, with CI error bars.
pub fn ucurve_svg(result: &UCurveResult) -> Result<String> {
    if result.rows.is_empty() {
        return Err(Error::invalid("no rows to plot"));
    }
    let mode = result.rows[0].mode;
    let mut series: Vec<ChartSeries> = Vec::new();
    for row in &result.rows {
        let label = format!("n={}", row.n);
        if series.last().map(|s| s.label != label).unwrap_or(true) {
            series.push(ChartSeries {
                label,
                points: Vec::new(),
            });
        }
        let s = series.last_mut().unwrap();
        s.points.push(ChartPoint::with_ci(
            row.param,
            row.mean_loss,
            row.ci_low,
            row.ci_high,
        ));
    }
    let x_label = match mode {
        UCurveMode::Gamma => "planning discount",
        UCurveMode::Epsilon => "epsilon",
    };
    render_line_chart(
        &ChartConfig {
            title: format!("planning loss vs {} regularization", mode.label()),
            x_label: x_label.to_string(),
            y_label: "mean loss".to_string(),
            log_x: false,
        },
        &series,
    )
}

/// One chart for a bound curve: one series per sample size.
pub fn bound_curve_svg(rows: &[BoundRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows to plot"));
    }
    let mut series: Vec<ChartSeries> = Vec::new();
    for row in rows {
        let label = format!("n={}", row.n);
        if series.last().map(|s| s.label != label).unwrap_or(true) {
            series.push(ChartSeries {
                label,
                points: Vec::new(),
            });
        }
        series
            .last_mut()
            .unwrap()
            .points
            .push(ChartPoint::plain(row.gamma_check, row.bound));
    }
    render_line_chart(
        &ChartConfig {
            title: "loss bound vs planning discount".to_string(),
            x_label: "planning discount".to_string(),
            y_label: "loss bound".to_string(),
            log_x: false,
        },
        &series,
    )
}

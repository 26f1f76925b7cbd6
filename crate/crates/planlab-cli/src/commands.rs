//! Implementations of the subcommands: each builds a library config from
//! its flags, runs it, writes the outputs, and drops a manifest next to
//! them.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use planlab::census::{census_csv, run_census_sweep, CensusMode, CensusSweepConfig};
use planlab::estimation::generate_dataset;
use planlab::experiments::{
    bound_curve_csv, bound_curve_svg, run_bound_curve, run_ucurve, ucurve_csv, ucurve_svg,
    EpsilonPlanner, UCurveConfig, UCurveMode,
};
use planlab::numfmt::fmt_real;
use planlab::policy_search::{run_hidden_sweep, sweep_csv, sweep_svg, SweepConfig};
use planlab::random_mdp::{sample_mdp, RandomMdpSpec};
use planlab::rng::RngStream;

use crate::manifest::{manifest_path_for_out, manifest_path_for_prefix, RunManifest};

/// A command failure carrying its process exit code: 2 for bad input,
/// 3 for filesystem trouble.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Library errors are configuration mistakes except for genuine I/O.
fn library(err: planlab::Error) -> Failure {
    match err {
        planlab::Error::Io(e) => Failure::Io(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn now_stamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn join_reals(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_real(*v))
        .collect::<Vec<_>>()
        .join(",")
}

fn join_ints<T: Display>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> CmdResult {
    write_file(path, &manifest.to_json())
}

pub fn census_mode(label: &str) -> Result<CensusMode, Failure> {
    match label {
        "gamma" => Ok(CensusMode::Gamma),
        "epsilon" => Ok(CensusMode::Epsilon),
        "epsilon-soft" => Ok(CensusMode::EpsilonSoft),
        other => Err(Failure::Usage(format!("unknown census mode '{other}'"))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_census(
    mode: &str,
    values: &[f64],
    reward_draws: usize,
    stop_window: usize,
    vi_sweeps: usize,
    seed: u64,
    out: &Path,
) -> CmdResult {
    let started_at = now_stamp();
    let config = CensusSweepConfig {
        reward_draws,
        stop_window,
        vi_sweeps,
        ..CensusSweepConfig::new(census_mode(mode)?, values.to_vec(), seed)
    };
    let rows = run_census_sweep(&config).map_err(library)?;
    write_file(out, &census_csv(&rows))?;
    let manifest = RunManifest {
        subcommand: "census".into(),
        args: vec![
            "--mode".into(),
            mode.into(),
            "--values".into(),
            join_reals(values),
            "--reward-draws".into(),
            reward_draws.to_string(),
            "--stop-window".into(),
            stop_window.to_string(),
            "--vi-sweeps".into(),
            vi_sweeps.to_string(),
            "--seed".into(),
            seed.to_string(),
            "--out".into(),
            out.display().to_string(),
        ],
        seed: Some(seed),
        version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: now_stamp(),
        outputs: vec![out.to_path_buf()],
    };
    write_manifest(&manifest_path_for_out(out), &manifest)
}

pub fn cmd_bound_curve(n_list: &[usize], grid: &[f64], delta: f64, out: &Path) -> CmdResult {
    let started_at = now_stamp();
    let spec = RandomMdpSpec::default();
    let rows = run_bound_curve(n_list, grid, delta, &spec).map_err(library)?;
    let svg_path = out.with_extension("svg");
    write_file(out, &bound_curve_csv(&rows))?;
    write_file(&svg_path, &bound_curve_svg(&rows).map_err(library)?)?;
    let manifest = RunManifest {
        subcommand: "bound-curve".into(),
        args: vec![
            "--n-list".into(),
            join_ints(n_list),
            "--grid".into(),
            join_reals(grid),
            "--delta".into(),
            fmt_real(delta),
            "--out".into(),
            out.display().to_string(),
        ],
        seed: None,
        version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: now_stamp(),
        outputs: vec![out.to_path_buf(), svg_path],
    };
    write_manifest(&manifest_path_for_out(out), &manifest)
}

pub fn ucurve_mode(label: &str) -> Result<UCurveMode, Failure> {
    match label {
        "gamma" => Ok(UCurveMode::Gamma),
        "epsilon" => Ok(UCurveMode::Epsilon),
        other => Err(Failure::Usage(format!("unknown u-curve mode '{other}'"))),
    }
}

pub fn epsilon_planner(label: &str) -> Result<EpsilonPlanner, Failure> {
    match label {
        "softened" => Ok(EpsilonPlanner::SoftenedTransitions),
        "q-fixed-point" => Ok(EpsilonPlanner::QFixedPoint),
        other => Err(Failure::Usage(format!("unknown epsilon planner '{other}'"))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_ucurve(
    mode: &str,
    n_list: &[usize],
    replicates: usize,
    grid: Option<&[f64]>,
    seed: u64,
    planner: &str,
    out_prefix: &str,
) -> CmdResult {
    let started_at = now_stamp();
    let parsed_mode = ucurve_mode(mode)?;
    let mut config = UCurveConfig::new(parsed_mode, seed);
    if let Some(grid) = grid {
        config.grid = grid.to_vec();
    }
    config.n_list = n_list.to_vec();
    config.replicates = replicates;
    config.epsilon_planner = epsilon_planner(planner)?;
    let result = run_ucurve(&config).map_err(library)?;
    let csv_path = PathBuf::from(format!("{out_prefix}.csv"));
    let svg_path = PathBuf::from(format!("{out_prefix}.svg"));
    write_file(&csv_path, &ucurve_csv(&result))?;
    write_file(&svg_path, &ucurve_svg(&result).map_err(library)?)?;
    let manifest = RunManifest {
        subcommand: "ucurve".into(),
        args: vec![
            "--mode".into(),
            mode.into(),
            "--n".into(),
            join_ints(n_list),
            "--replicates".into(),
            replicates.to_string(),
            "--grid".into(),
            join_reals(&config.grid),
            "--seed".into(),
            seed.to_string(),
            "--epsilon-planner".into(),
            planner.into(),
            "--out-prefix".into(),
            out_prefix.into(),
        ],
        seed: Some(seed),
        version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: now_stamp(),
        outputs: vec![csv_path, svg_path],
    };
    write_manifest(&manifest_path_for_prefix(out_prefix), &manifest)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_policy_sweep(
    hidden: Option<&[usize]>,
    runs: usize,
    trajectories: usize,
    horizon: usize,
    seed: u64,
    out_prefix: &str,
) -> CmdResult {
    let started_at = now_stamp();
    let spec = RandomMdpSpec::policy_search_default();
    let mut rng = RngStream::new(seed, 0).rng();
    let true_mdp = sample_mdp(&spec, &mut rng).map_err(library)?;
    let dataset = generate_dataset(&true_mdp, trajectories, horizon, &mut rng).map_err(library)?;
    let mut config = SweepConfig::new(seed);
    if let Some(hidden) = hidden {
        config.hidden_list = hidden.to_vec();
    }
    config.runs = runs;
    let rows = run_hidden_sweep(&true_mdp, &dataset, &config).map_err(library)?;
    let csv_path = PathBuf::from(format!("{out_prefix}.csv"));
    let svg_path = PathBuf::from(format!("{out_prefix}.svg"));
    write_file(&csv_path, &sweep_csv(&rows))?;
    write_file(&svg_path, &sweep_svg(&rows).map_err(library)?)?;
    let manifest = RunManifest {
        subcommand: "policy-sweep".into(),
        args: vec![
            "--hidden".into(),
            join_ints(&config.hidden_list),
            "--runs".into(),
            runs.to_string(),
            "--trajectories".into(),
            trajectories.to_string(),
            "--horizon".into(),
            horizon.to_string(),
            "--seed".into(),
            seed.to_string(),
            "--out-prefix".into(),
            out_prefix.into(),
        ],
        seed: Some(seed),
        version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: now_stamp(),
        outputs: vec![csv_path, svg_path],
    };
    write_manifest(&manifest_path_for_prefix(out_prefix), &manifest)
}

/// Load a manifest and hand its recorded invocation back to the parser.
pub fn load_rerun_args(manifest_path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest = RunManifest::from_json(&text)
        .map_err(|e| Failure::Usage(format!("malformed manifest: {e}")))?;
    if manifest.subcommand == "rerun" {
        return Err(Failure::Usage("manifest records a rerun of a rerun".into()));
    }
    let mut argv = vec!["planlab".to_string(), manifest.subcommand];
    argv.extend(manifest.args);
    Ok(argv)
}

//! Batch front end: one subcommand per experiment, each writing JSON and CSV
//! outputs plus a manifest into an output directory.
//!
//! Exit status: 0 success, 2 configuration, 3 numerical divergence,
//! 4 statistical precondition, 5 internal or I/O.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::balance::{
    compare_ground_state, harmonic_linear_response, measure_balance, predict_decay, trace_dpp, trace_dpx,
    BalanceReport, ComparisonRow, DecayPrediction, LinearResponse, MomentumTrace, PositionTrace,
};
use crate::config::RunConfig;
use crate::dynamics::{integrate_trajectory, TrajectoryMeta};
use crate::ensemble::{
    memory_loss_from_report, power_spectrum, run_ensemble, stationary_moments, EnsembleReport, MemoryLoss,
    StationaryMoments,
};
use crate::error::{Result, SedError};
use crate::force::ForceSpec;
use crate::matrix::{
    commutator_deviation, commutator_matrix, diagonalize_potential, heisenberg_product, oscillator_matrices, trk_sum,
    SumRule, TransitionMatrix, Uncertainty,
};
use crate::output::{digest_mismatches, OutputDir, RunManifest};
use crate::seed::trajectory_seed;
use crate::spectrum::LineShape;
use crate::stats::Estimate;
use crate::zpf_field::{
    build_mode_set, empirical_correlation, sample_realization, theoretical_force_correlation, write_correlation_csv,
    TimeGrid,
};

#[derive(Debug, Parser)]
#[command(name = "sedlab", version, about = "Stochastic-electrodynamics experiments from JSON configs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory (default: out/<command>).
    #[arg(long, short, global = true, env = "SEDLAB_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "SEDLAB_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory.
    Simulate { config: PathBuf },
    /// Run an ensemble and write moments, diffusion and memory-loss curves.
    Ensemble { config: PathBuf },
    /// Build transition matrices and check the matrix identities.
    Matrix { config: PathBuf },
    /// Compare measured energy flow with matrix predictions.
    Balance { config: PathBuf },
    /// Stationary position spectrum and its line width.
    Spectrum { config: PathBuf },
    /// Empirical field correlation against the closed form.
    Correlate { config: PathBuf },
    /// Re-run a manifest and compare output digests.
    Replay { manifest: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Ensemble { .. } => "ensemble",
            Command::Matrix { .. } => "matrix",
            Command::Balance { .. } => "balance",
            Command::Spectrum { .. } => "spectrum",
            Command::Correlate { .. } => "correlate",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Parse arguments, run, report errors on stderr and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(m) => {
            eprintln!("{}: wrote {} files", m.command, m.outputs.len());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<RunManifest> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(cli.command.name()));
    let work = || -> Result<RunManifest> {
        match &cli.command {
            Command::Replay { manifest } => replay(manifest, &out),
            cmd => {
                let path = match cmd {
                    Command::Simulate { config }
                    | Command::Ensemble { config }
                    | Command::Matrix { config }
                    | Command::Balance { config }
                    | Command::Spectrum { config }
                    | Command::Correlate { config } => config,
                    Command::Replay { .. } => unreachable!(),
                };
                run_command(cmd.name(), &RunConfig::load(path)?, &out)
            }
        }
    };
    match cli.threads {
        Some(0) => Err(SedError::Config("threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SedError::Resource(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Run the named command on an already parsed configuration.
pub fn run_command(command: &str, cfg: &RunConfig, out: &Path) -> Result<RunManifest> {
    let mut dir = OutputDir::create(out, command, cfg)?;
    match command {
        "simulate" => cmd_simulate(cfg, &mut dir)?,
        "ensemble" => cmd_ensemble(cfg, &mut dir)?,
        "matrix" => cmd_matrix(cfg, &mut dir)?,
        "balance" => cmd_balance(cfg, &mut dir)?,
        "spectrum" => cmd_spectrum(cfg, &mut dir)?,
        "correlate" => cmd_correlate(cfg, &mut dir)?,
        other => return Err(SedError::Config(format!("unknown command `{other}`"))),
    }
    dir.finish()
}

fn replay(manifest: &Path, out: &Path) -> Result<RunManifest> {
    let recorded = RunManifest::load(manifest)?;
    let fresh = run_command(&recorded.command, &recorded.config, out)?;
    let diff = digest_mismatches(&recorded, &fresh);
    if diff.is_empty() {
        Ok(fresh)
    } else {
        Err(SedError::Reproducibility(diff.join(", ")))
    }
}

#[derive(Serialize)]
struct TrajectorySidecar<'a> {
    config: &'a RunConfig,
    meta: &'a TrajectoryMeta,
}

fn cmd_simulate(cfg: &RunConfig, dir: &mut OutputDir) -> Result<()> {
    let s = cfg.section("simulate", &cfg.simulate)?;
    let force = cfg.force.build(&cfg.scales)?;
    let field = if s.field_on {
        let modes = build_mode_set(cfg.scales, cfg.field.omega_cut, s.t_total, cfg.field.oversample)?;
        Some(sample_realization(Arc::new(modes), cfg.seed))
    } else {
        None
    };
    let traj = integrate_trajectory(&cfg.scales, &force, field.as_ref(), s.x0, s.p0, (s.t0, s.t0 + s.t_total), s.dt)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    dir.write_bytes("trajectory.csv", &csv)?;
    dir.write_json("trajectory.json", &TrajectorySidecar { config: cfg, meta: &traj.meta })
}

#[derive(Serialize)]
struct MomentRow<'a> {
    t: f64,
    group: &'a str,
    x: f64,
    x_se: f64,
    p: f64,
    p_se: f64,
    x2: f64,
    x2_se: f64,
    p2: f64,
    p2_se: f64,
    h: f64,
    h_se: f64,
}

fn moment_rows(report: &EnsembleReport) -> Vec<MomentRow<'_>> {
    let mut rows = Vec::new();
    for g in &report.groups {
        for (j, &t) in report.times.iter().enumerate() {
            rows.push(MomentRow {
                t,
                group: &g.label,
                x: g.x[j].value,
                x_se: g.x[j].stderr,
                p: g.p[j].value,
                p_se: g.p[j].stderr,
                x2: g.x2[j].value,
                x2_se: g.x2[j].stderr,
                p2: g.p2[j].value,
                p2_se: g.p2[j].stderr,
                h: g.h[j].value,
                h_se: g.h[j].stderr,
            });
        }
    }
    rows
}

fn est_row(t: f64, es: &[&Estimate]) -> Vec<f64> {
    let mut row = vec![t];
    for e in es {
        row.push(e.value);
        row.push(e.stderr);
    }
    row
}

#[derive(Serialize)]
struct EnsembleSummary<'a> {
    n_traj: usize,
    failures: usize,
    stationary: Option<StationaryMoments>,
    memory: Option<&'a MemoryLoss>,
}

fn cmd_ensemble(cfg: &RunConfig, dir: &mut OutputDir) -> Result<()> {
    let ec = cfg.ensemble_config()?;
    let report = run_ensemble(&ec)?;
    let stationary = if ec.stationary { Some(stationary_moments(&report, cfg.window()?)?) } else { None };
    let memory = if ec.is_paired() { Some(memory_loss_from_report(&report)?) } else { None };

    dir.write_json("report.json", &report)?;
    dir.write_csv("moments.csv", &moment_rows(&report))?;
    if ec.retain_drive {
        let g = &report.groups[0];
        dir.write_table(
            "diffusion.csv",
            &["t", "dpx", "dpx_se", "dpp", "dpp_se"],
            report.times.iter().enumerate().map(|(j, &t)| est_row(t, &[&g.dpx[j], &g.dpp[j]])),
        )?;
    }
    if let Some(m) = &memory {
        dir.write_table(
            "memory.csv",
            &["t", "divergence", "stderr"],
            m.times.iter().enumerate().map(|(j, &t)| vec![t, m.divergence[j], m.stderr[j]]),
        )?;
    }
    if let Some(trajs) = &report.trajectories {
        let dt = report.times.get(1).copied().unwrap_or(0.0);
        for tr in trajs {
            let name = format!("trajectories/{:05}{}.csv", tr.index, tr.member);
            let drive = |j: usize| tr.drive.get(j).copied().unwrap_or(f64::NAN);
            dir.write_table(
                &name,
                &["t", "x", "p", "drive"],
                (0..tr.x.len()).map(|j| vec![j as f64 * dt, tr.x[j], tr.p[j], drive(j)]),
            )?;
        }
    }
    dir.write_json(
        "summary.json",
        &EnsembleSummary { n_traj: ec.n_traj, failures: report.failures.len(), stationary, memory: memory.as_ref() },
    )
}

/// Transition matrices for the configured force: analytic for the harmonic
/// force unless a basis size is given.
pub fn transition_matrix(cfg: &RunConfig) -> Result<TransitionMatrix> {
    let sec = cfg.matrix.clone().unwrap_or(crate::config::MatrixSection {
        basis_size: None,
        n_states: None,
        tolerance: None,
    });
    match (&cfg.force, sec.basis_size) {
        (ForceSpec::Harmonic, None) => oscillator_matrices(&cfg.scales, sec.n_states.unwrap_or(8)),
        (_, basis) => diagonalize_potential(&cfg.scales, &cfg.force.build(&cfg.scales)?, basis.unwrap_or(200)),
    }
}

#[derive(Debug, Serialize)]
pub struct IdentityReport {
    pub n_states: usize,
    pub trusted: usize,
    pub tolerance: f64,
    pub commutator_inner_deviation: f64,
    pub commutator_corner: [f64; 2],
    pub commutator_trace: [f64; 2],
    pub commutator_pass: bool,
    pub trk: Vec<SumRule>,
    pub trk_max_deviation: f64,
    pub trk_pass: bool,
    pub heisenberg: Vec<Uncertainty>,
    pub heisenberg_pass: bool,
    pub hermiticity_residual: f64,
    pub kinematic_residual: f64,
    pub pass: bool,
}

pub fn identity_report(tm: &TransitionMatrix, tolerance: f64) -> Result<IdentityReport> {
    let n = tm.n_states();
    let trusted = tm.trusted();
    let c = commutator_matrix(tm);
    let trace: num_complex::Complex64 = (0..n).map(|i| c[(i, i)]).sum();
    let dev = commutator_deviation(tm, trusted);
    let trk = (0..trusted).map(|k| trk_sum(tm, k)).collect::<Result<Vec<_>>>()?;
    let trk_dev = trk.iter().map(|s| (s.value - s.expected).abs()).fold(0.0, f64::max);
    let heisenberg = (0..trusted).map(|k| heisenberg_product(tm, k)).collect::<Result<Vec<_>>>()?;
    let heisenberg_pass = heisenberg.iter().all(|u| u.satisfied);
    let commutator_pass = dev <= tolerance;
    let trk_pass = trk_dev <= tolerance;
    Ok(IdentityReport {
        n_states: n,
        trusted,
        tolerance,
        commutator_inner_deviation: dev,
        commutator_corner: [c[(n - 1, n - 1)].re, c[(n - 1, n - 1)].im],
        commutator_trace: [trace.re, trace.im],
        commutator_pass,
        trk,
        trk_max_deviation: trk_dev,
        trk_pass,
        heisenberg,
        heisenberg_pass,
        hermiticity_residual: tm.hermiticity_residual(),
        kinematic_residual: tm.kinematic_residual(trusted),
        pass: commutator_pass && trk_pass && heisenberg_pass,
    })
}

fn cmd_matrix(cfg: &RunConfig, dir: &mut OutputDir) -> Result<()> {
    let tm = transition_matrix(cfg)?;
    let analytic = matches!(cfg.force, ForceSpec::Harmonic) && cfg.matrix.as_ref().and_then(|m| m.basis_size).is_none();
    let default_tol = if analytic { 1e-12 } else { 1e-6 };
    let tol = cfg.matrix.as_ref().and_then(|m| m.tolerance).unwrap_or(default_tol);
    let report = identity_report(&tm, tol)?;
    dir.write_json("matrix.json", &tm.to_document())?;
    dir.write_table(
        "energies.csv",
        &["n", "energy"],
        tm.energies.iter().enumerate().map(|(n, &e)| vec![n as f64, e]),
    )?;
    dir.write_json("identities.json", &report)
}

#[derive(Serialize)]
struct BalanceOutput {
    balance: BalanceReport,
    decay: Vec<DecayPrediction>,
    dpp_trace: MomentumTrace,
    dpx_traces: Vec<PositionTrace>,
    linear_response: Option<LinearResponse>,
    comparison: Vec<ComparisonRow>,
}

fn cmd_balance(cfg: &RunConfig, dir: &mut OutputDir) -> Result<()> {
    let ec = cfg.ensemble_config()?;
    let report = run_ensemble(&ec)?;
    let balance = measure_balance(&report, cfg.window()?)?;
    let tm = transition_matrix(cfg)?;
    let wc = cfg.field.omega_cut;
    let sec = cfg.balance.clone().unwrap_or(crate::config::BalanceSection { states: vec![], trace_cutoffs: vec![] });
    let states = if sec.states.is_empty() { vec![0, 1] } else { sec.states };
    let cutoffs = if sec.trace_cutoffs.is_empty() { vec![wc] } else { sec.trace_cutoffs };
    let comparison = compare_ground_state(&balance, &tm, wc)?;
    let out = BalanceOutput {
        decay: states.iter().map(|&n| predict_decay(&tm, n)).collect::<Result<_>>()?,
        dpp_trace: trace_dpp(&tm, 0, wc)?,
        dpx_traces: cutoffs.iter().map(|&c| trace_dpx(&tm, 0, c)).collect::<Result<_>>()?,
        linear_response: match cfg.force {
            ForceSpec::Harmonic => Some(harmonic_linear_response(&cfg.scales, wc)?),
            _ => None,
        },
        comparison: comparison.clone(),
        balance,
    };
    dir.write_csv("comparison.csv", &comparison)?;
    dir.write_json("balance.json", &out)
}

#[derive(Serialize)]
struct SpectrumOutput {
    line: LineShape,
    n_series: usize,
    window: (f64, f64),
    einstein_a10: f64,
    fwhm_over_a10: f64,
}

fn cmd_spectrum(cfg: &RunConfig, dir: &mut OutputDir) -> Result<()> {
    let sec = cfg.section("spectrum", &cfg.spectrum)?;
    let ec = cfg.ensemble_config()?;
    let report = run_ensemble(&ec)?;
    let ps = power_spectrum(&report, sec.resolution)?;
    let tm = transition_matrix(cfg)?;
    let a10 = predict_decay(&tm, 1)?
        .transitions
        .iter()
        .find(|t| t.to == 0)
        .map(|t| t.a_coefficient)
        .unwrap_or(0.0);
    let sp = &ps.spectrum;
    dir.write_table(
        "spectrum.csv",
        &["omega", "density", "stderr"],
        sp.omegas.iter().zip(&sp.density).map(|(&w, d)| vec![w, d.value, d.stderr]),
    )?;
    dir.write_json(
        "spectrum.json",
        &SpectrumOutput {
            line: ps.line,
            n_series: sp.n_series,
            window: sp.window,
            einstein_a10: a10,
            fwhm_over_a10: ps.line.fwhm / a10,
        },
    )
}

#[derive(Serialize)]
struct CorrelationSummary {
    n_realizations: usize,
    window: (f64, f64),
    lags: usize,
    zero_lag: Estimate,
    zero_lag_theory: f64,
    max_abs_z: f64,
    pass_3_sigma: bool,
}

fn cmd_correlate(cfg: &RunConfig, dir: &mut OutputDir) -> Result<()> {
    let s = cfg.section("correlate", &cfg.correlate)?;
    let modes = Arc::new(build_mode_set(cfg.scales, cfg.field.omega_cut, s.t_total, cfg.field.oversample)?);
    let reals: Vec<_> = (0..s.n_realizations as u64)
        .map(|i| sample_realization(modes.clone(), trajectory_seed(cfg.seed, i)))
        .collect();
    let step = s.lag_step.unwrap_or(s.dt);
    let n_lags = (s.max_lag / step + 1e-9).floor() as usize + 1;
    let lags: Vec<f64> = (0..n_lags).map(|k| k as f64 * step).collect();
    let len = (s.window / s.dt).round() as usize;
    let grid = TimeGrid::new(0.0, s.dt, len);
    let points = empirical_correlation(&reals, &lags, &grid)?;
    let mut max_z = 0.0f64;
    for p in &points {
        let th = theoretical_force_correlation(p.lag, &cfg.scales, cfg.field.omega_cut)?;
        max_z = max_z.max(p.estimate.z_score(th).abs());
    }
    let mut csv = Vec::new();
    write_correlation_csv(&mut csv, &points, &cfg.scales, cfg.field.omega_cut)?;
    dir.write_bytes("correlation.csv", &csv)?;
    dir.write_json(
        "correlation.json",
        &CorrelationSummary {
            n_realizations: s.n_realizations,
            window: (0.0, grid.end()),
            lags: points.len(),
            zero_lag: points[0].estimate,
            zero_lag_theory: theoretical_force_correlation(0.0, &cfg.scales, cfg.field.omega_cut)?,
            max_abs_z: max_z,
            pass_3_sigma: max_z <= 3.0,
        },
    )
}

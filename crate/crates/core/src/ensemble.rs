//! Reproducible parallel ensembles and their statistical observables.
//!
//! Trajectory `i` is driven by the field realization seeded with
//! [`trajectory_seed`]`(master_seed, i)`. Trajectories are processed in
//! fixed-size chunks; within a chunk they run in parallel and the results are
//! folded into the accumulators strictly in index order, so a report does not
//! depend on the number of threads.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_with, StepSample};
use crate::error::{config_err, Result, SedError};
use crate::force::{ForceModel, ForceSpec};
use crate::scales::PhysicalScales;
use crate::seed::{splitmix64, trajectory_seed, PhaseStream};
use crate::spectrum::{line_shape, AveragedSpectrum, LineShape, Periodogram, SpectrumAccumulator};
use crate::stats::{jackknife, linear_fit, mean_skipping, mean_stderr, Estimate, Welford};
use crate::zpf_field::{build_mode_set, sample_realization, ModeSet};

const CHUNK: usize = 32;
/// Fraction of diverged trajectories above which a run fails.
pub const MAX_DIVERGED_FRACTION: f64 = 0.01;

fn default_oversample() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_block_time() -> f64 {
    10.0
}
fn default_pad() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub omega_cut: f64,
    #[serde(default = "default_oversample")]
    pub oversample: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig { omega_cut: 20.0, oversample: 1.0 }
    }
}

/// How trajectories are started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConditions {
    Fixed { x0: f64, p0: f64 },
    /// Two sub-ensembles sharing field realizations pairwise, differing in `x0`.
    Paired { x0a: f64, x0b: f64, #[serde(default)] p0: f64 },
    Gaussian { mean_x: f64, sd_x: f64, mean_p: f64, sd_p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Zero-padding factor of the periodogram.
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    /// Largest frequency kept in the report.
    pub omega_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub scales: PhysicalScales,
    pub force: ForceSpec,
    #[serde(default)]
    pub field: FieldConfig,
    /// Number of trajectories (pairs for paired initial conditions).
    pub n_traj: usize,
    pub master_seed: u64,
    pub t_total: f64,
    pub dt: f64,
    pub burn_in: f64,
    pub initial: InitialConditions,
    /// Stationary observables are requested; enforces the burn-in rule.
    #[serde(default = "default_true")]
    pub stationary: bool,
    #[serde(default = "default_true")]
    pub retain_drive: bool,
    #[serde(default)]
    pub keep_trajectories: bool,
    #[serde(default = "default_block_time")]
    pub block_time: f64,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    /// Harmonic reference ensemble: ω_c = 20, dt = 1/80, burn-in of five
    /// energy-decay times, ground-state start at the origin.
    pub fn reference(n_traj: usize, t_total: f64, master_seed: u64) -> Self {
        let scales = PhysicalScales::reference();
        EnsembleConfig {
            scales,
            force: ForceSpec::Harmonic,
            field: FieldConfig::default(),
            n_traj,
            master_seed,
            t_total,
            dt: 0.0125,
            burn_in: 5.0 * scales.energy_decay_time(),
            initial: InitialConditions::Fixed { x0: 0.0, p0: 0.0 },
            stationary: true,
            retain_drive: true,
            keep_trajectories: false,
            block_time: 10.0,
            spectrum: None,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scales.validate()?;
        if self.n_traj < 2 {
            return config_err(format!("n_traj = {} but at least 2 are required", self.n_traj));
        }
        if !(self.t_total > 0.0) || !(self.dt > 0.0) {
            return config_err("t_total and dt must be positive");
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_total) {
            return config_err("burn_in must lie inside [0, t_total)");
        }
        if self.stationary {
            let need = 5.0 * self.scales.energy_decay_time();
            if !(self.burn_in >= need * (1.0 - 1e-12)) {
                return config_err(format!(
                    "burn_in = {} is shorter than five energy-decay times ({need})",
                    self.burn_in
                ));
            }
        }
        if !(self.block_time > 0.0) {
            return config_err("block_time must be positive");
        }
        if let InitialConditions::Gaussian { sd_x, sd_p, .. } = self.initial {
            if !(sd_x >= 0.0 && sd_p >= 0.0) {
                return config_err("initial standard deviations must be non-negative");
            }
        }
        if let Some(sp) = &self.spectrum {
            if sp.pad_factor == 0 || !(sp.omega_max > 0.0) {
                return config_err("spectrum needs pad_factor >= 1 and omega_max > 0");
            }
        }
        if self.threads == Some(0) {
            return config_err("threads must be at least 1");
        }
        Ok(())
    }

    /// Steps between stored moment samples, `⌈0.1 / (ω0 dt)⌉`.
    pub fn decimation(&self) -> usize {
        (0.1 / (self.scales.omega0 * self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn is_paired(&self) -> bool {
        matches!(self.initial, InitialConditions::Paired { .. })
    }
}

/// Quantities averaged per block of `block_time`.
pub const BLOCK_FIELDS: [&str; 9] = ["x", "p", "x2", "p2", "h", "dpx", "dpp", "radiated", "absorbed"];

/// Per-trajectory block means (columns as in [`BLOCK_FIELDS`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub index: usize,
    /// `a` or `b` for paired runs, empty otherwise.
    pub member: String,
    pub means: Vec<[f64; 9]>,
}

/// Time series of ensemble moments with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub label: String,
    pub n: usize,
    pub x: Vec<Estimate>,
    pub p: Vec<Estimate>,
    pub x2: Vec<Estimate>,
    pub p2: Vec<Estimate>,
    pub h: Vec<Estimate>,
    /// `e⟨x E⟩` (empty when the drive is not retained)
    pub dpx: Vec<Estimate>,
    /// `e⟨p E⟩`
    pub dpp: Vec<Estimate>,
}

/// Decimated samples of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecimatedTrajectory {
    pub index: usize,
    pub member: String,
    pub seed: u64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub drive: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    /// Configuration of the run (execution-only settings such as `threads` cleared).
    pub config: EnsembleConfig,
    pub decimation: usize,
    pub times: Vec<f64>,
    /// One series for fixed/Gaussian starts; `a` and `b` for paired runs.
    pub groups: Vec<MomentSeries>,
    /// Paired runs: per-pair differences `x_a − x_b`, `p_a − p_b`.
    pub paired_difference: Option<(Vec<Estimate>, Vec<Estimate>)>,
    pub block_times: Vec<f64>,
    pub blocks: Vec<BlockRecord>,
    pub spectrum: Option<AveragedSpectrum>,
    pub failures: Vec<Failure>,
    pub trajectories: Option<Vec<DecimatedTrajectory>>,
}

struct MemberOutput {
    decimated: [Vec<f64>; 7],
    blocks: Vec<[f64; 9]>,
    spectrum: Option<Vec<f64>>,
    drive: Vec<f64>,
}

struct Context {
    config: EnsembleConfig,
    force: ForceModel,
    modes: Arc<ModeSet>,
    decimation: usize,
    n_samples: usize,
    block_steps: usize,
    n_blocks: usize,
    spectrum_start: usize,
    periodogram: Option<(Periodogram, usize)>,
}

fn initial_state(cfg: &EnsembleConfig, seed: u64, member: usize) -> (f64, f64) {
    match cfg.initial {
        InitialConditions::Fixed { x0, p0 } => (x0, p0),
        InitialConditions::Paired { x0a, x0b, p0 } => (if member == 0 { x0a } else { x0b }, p0),
        InitialConditions::Gaussian { mean_x, sd_x, mean_p, sd_p } => {
            let mut s = PhaseStream::new(splitmix64(seed ^ 0x1C1C_1C1C_1C1C_1C1C));
            let normal = |s: &mut PhaseStream, k: u64| {
                let u1 = 1.0 - s.unit(k);
                let u2 = s.unit(k + 1);
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            };
            (mean_x + sd_x * normal(&mut s, 0), mean_p + sd_p * normal(&mut s, 2))
        }
    }
}

fn run_member(ctx: &Context, seed: u64, member: usize) -> Result<MemberOutput> {
    let cfg = &ctx.config;
    let realization = sample_realization(ctx.modes.clone(), seed);
    let (x0, p0) = initial_state(cfg, seed, member);
    let (m, tau) = (cfg.scales.m, cfg.scales.tau);
    let force = &ctx.force;

    let mut dec: [Vec<f64>; 7] = std::array::from_fn(|_| Vec::with_capacity(ctx.n_samples));
    let mut drive_dec = Vec::with_capacity(if cfg.keep_trajectories { ctx.n_samples } else { 0 });
    let mut blocks = vec![[0.0f64; 9]; ctx.n_blocks];
    let mut block_counts = vec![0usize; ctx.n_blocks];

    integrate_with(
        &cfg.scales,
        force,
        Some(&realization),
        x0,
        p0,
        (0.0, cfg.t_total),
        cfg.dt,
        |s: StepSample| {
            let (x, p, e) = (s.x, s.p, s.drive);
            let h = p * p / (2.0 * m) + force.potential(x);
            let v = p / m;
            if s.step % ctx.decimation == 0 {
                let row = [x, p, x * x, p * p, h, x * e, p * e];
                for (d, val) in dec.iter_mut().zip(row) {
                    d.push(val);
                }
                if cfg.keep_trajectories {
                    drive_dec.push(e);
                }
            }
            let b = s.step / ctx.block_steps;
            if b < ctx.n_blocks {
                let rad = tau * force.d1(x) * v * v;
                let row = [x, p, x * x, p * p, h, x * e, p * e, rad, v * e];
                for (acc, val) in blocks[b].iter_mut().zip(row) {
                    *acc += val;
                }
                block_counts[b] += 1;
            }
        },
    )?;
    for (b, c) in blocks.iter_mut().zip(&block_counts) {
        for v in b.iter_mut() {
            *v /= *c as f64;
        }
    }
    let spectrum = ctx.periodogram.as_ref().map(|(pg, keep)| {
        let mut d = pg.density(&dec[0][ctx.spectrum_start..]);
        d.truncate(*keep);
        d
    });
    Ok(MemberOutput { decimated: dec, blocks, spectrum, drive: drive_dec })
}

struct GroupAcc {
    label: String,
    series: Vec<Vec<Welford>>,
}

impl GroupAcc {
    fn new(label: &str, n_series: usize, n_samples: usize) -> Self {
        GroupAcc { label: label.into(), series: vec![vec![Welford::default(); n_samples]; n_series] }
    }

    fn push(&mut self, dec: &[Vec<f64>]) {
        for (acc, vals) in self.series.iter_mut().zip(dec) {
            for (w, v) in acc.iter_mut().zip(vals) {
                w.push(*v);
            }
        }
    }

    fn finish(self, retain_drive: bool) -> MomentSeries {
        let mut est: Vec<Vec<Estimate>> =
            self.series.iter().map(|s| s.iter().map(|w| w.estimate()).collect()).collect();
        let n = self.series.first().and_then(|s| s.first()).map(|w| w.n as usize).unwrap_or(0);
        let dpp = if retain_drive { est.pop().unwrap() } else { Vec::new() };
        let dpx = if retain_drive { est.pop().unwrap() } else { Vec::new() };
        let mut it = est.into_iter();
        MomentSeries {
            label: self.label,
            n,
            x: it.next().unwrap(),
            p: it.next().unwrap(),
            x2: it.next().unwrap(),
            p2: it.next().unwrap(),
            h: it.next().unwrap(),
            dpx,
            dpp,
        }
    }
}

/// Run the ensemble described by `config`.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleReport> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SedError::Resource(e.to_string()))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn run_inner(config: &EnsembleConfig) -> Result<EnsembleReport> {
    let force = config.force.build(&config.scales)?;
    let modes = Arc::new(build_mode_set(
        config.scales,
        config.field.omega_cut,
        config.t_total,
        config.field.oversample,
    )?);
    let n_steps = crate::dynamics::step_count((0.0, config.t_total), config.dt)?;
    let decimation = config.decimation();
    let n_samples = n_steps / decimation + 1;
    let block_steps = ((config.block_time / config.dt).round() as usize).max(1);
    let n_blocks = (n_steps + 1) / block_steps;
    let sample_dt = decimation as f64 * config.dt;
    let spectrum_start = (config.burn_in / sample_dt).ceil() as usize;
    let periodogram = config.spectrum.as_ref().map(|sp| {
        let pg = Periodogram::new(n_samples - spectrum_start, sample_dt, sp.pad_factor);
        let keep = ((sp.omega_max / pg.delta_omega()).floor() as usize + 1).min(pg.bins());
        (pg, keep)
    });
    let ctx = Context {
        config: config.clone(),
        force,
        modes,
        decimation,
        n_samples,
        block_steps,
        n_blocks,
        spectrum_start,
        periodogram,
    };

    let paired = config.is_paired();
    let members = if paired { 2 } else { 1 };
    let n_series = if config.retain_drive { 7 } else { 5 };
    let mut groups: Vec<GroupAcc> = if paired {
        vec![GroupAcc::new("a", n_series, n_samples), GroupAcc::new("b", n_series, n_samples)]
    } else {
        vec![GroupAcc::new("all", n_series, n_samples)]
    };
    let mut diff = if paired { Some(GroupAcc::new("a-b", 2, n_samples)) } else { None };
    let mut spec_acc = ctx.periodogram.as_ref().map(|(_, keep)| SpectrumAccumulator::new(*keep));
    let mut blocks = Vec::new();
    let mut failures = Vec::new();
    let mut kept = if config.keep_trajectories { Some(Vec::new()) } else { None };

    let indices: Vec<usize> = (0..config.n_traj).collect();
    for chunk in indices.chunks(CHUNK) {
        let results: Vec<(usize, u64, Result<Vec<MemberOutput>>)> = chunk
            .par_iter()
            .map(|&i| {
                let seed = trajectory_seed(config.master_seed, i as u64);
                let out = (0..members).map(|mb| run_member(&ctx, seed, mb)).collect::<Result<Vec<_>>>();
                (i, seed, out)
            })
            .collect();
        for (i, seed, res) in results {
            let outs = match res {
                Ok(o) => o,
                Err(e @ (SedError::Diverged { .. } | SedError::Escaped { .. })) => {
                    failures.push(Failure { index: i, error: e.to_string() });
                    continue;
                }
                Err(e) => return Err(e),
            };
            for (mb, out) in outs.iter().enumerate() {
                groups[mb].push(&out.decimated[..n_series]);
                if let (Some(acc), Some(d)) = (spec_acc.as_mut(), out.spectrum.as_ref()) {
                    acc.push(d);
                }
                let member = if paired { ["a", "b"][mb] } else { "" };
                blocks.push(BlockRecord { index: i, member: member.into(), means: out.blocks.clone() });
                if let Some(k) = kept.as_mut() {
                    k.push(DecimatedTrajectory {
                        index: i,
                        member: member.into(),
                        seed,
                        x: out.decimated[0].clone(),
                        p: out.decimated[1].clone(),
                        drive: out.drive.clone(),
                    });
                }
            }
            if let Some(d) = diff.as_mut() {
                let dx: Vec<f64> =
                    outs[0].decimated[0].iter().zip(&outs[1].decimated[0]).map(|(a, b)| a - b).collect();
                let dp: Vec<f64> =
                    outs[0].decimated[1].iter().zip(&outs[1].decimated[1]).map(|(a, b)| a - b).collect();
                d.push(&[dx, dp]);
            }
        }
    }

    if failures.len() as f64 > MAX_DIVERGED_FRACTION * config.n_traj as f64 {
        return Err(SedError::EnsembleDiverged { failed: failures.len(), total: config.n_traj });
    }

    let times = (0..n_samples).map(|j| j as f64 * sample_dt).collect();
    let block_times = (0..n_blocks).map(|b| b as f64 * block_steps as f64 * config.dt).collect();
    let spectrum = match (spec_acc, &ctx.periodogram) {
        (Some(acc), Some((pg, keep))) => {
            let mut om = pg.omegas();
            om.truncate(*keep);
            Some(acc.finish(om, pg.resolution(), (spectrum_start as f64 * sample_dt, config.t_total)))
        }
        _ => None,
    };
    let paired_difference = diff.map(|d| {
        let mut it = d.series.into_iter().map(|s| s.iter().map(|w| w.estimate()).collect::<Vec<_>>());
        (it.next().unwrap(), it.next().unwrap())
    });
    let mut stored = config.clone();
    stored.threads = None;
    Ok(EnsembleReport {
        config: stored,
        decimation,
        times,
        groups: groups.into_iter().map(|g| g.finish(config.retain_drive)).collect(),
        paired_difference,
        block_times,
        blocks,
        spectrum,
        failures,
        trajectories: kept,
    })
}

impl EnsembleReport {
    fn block_duration(&self) -> f64 {
        if self.block_times.len() > 1 {
            self.block_times[1] - self.block_times[0]
        } else {
            self.config.t_total
        }
    }

    /// Indices of blocks lying entirely inside `window`.
    pub fn blocks_in(&self, window: (f64, f64)) -> std::ops::Range<usize> {
        let bd = self.block_duration();
        let tol = 1e-9 * bd;
        let first = self.block_times.iter().position(|&t| t >= window.0 - tol).unwrap_or(self.block_times.len());
        let last = self.block_times.iter().rposition(|&t| t + bd <= window.1 + tol).map(|i| i + 1).unwrap_or(0);
        first..last.max(first)
    }

    fn check_window(&self, window: (f64, f64)) -> Result<std::ops::Range<usize>> {
        let (a, b) = window;
        if !(b > a) {
            return config_err("window must be increasing");
        }
        if a < self.config.burn_in * (1.0 - 1e-12) || b > self.config.t_total * (1.0 + 1e-12) {
            return config_err(format!(
                "window [{a}, {b}] is not inside the post-burn-in region [{}, {}]",
                self.config.burn_in, self.config.t_total
            ));
        }
        let range = self.blocks_in(window);
        if range.is_empty() {
            return config_err("window holds no complete averaging block");
        }
        Ok(range)
    }

    /// Per-sample window means of block column `col`, one value per
    /// independent statistical block (see [`stationary_moments`]).
    fn window_samples(&self, range: &std::ops::Range<usize>, sub_blocks: usize) -> Vec<[f64; 9]> {
        let nb = range.len();
        let per = nb / sub_blocks;
        let mut out = Vec::new();
        for rec in &self.blocks {
            for s in 0..sub_blocks {
                let lo = range.start + s * per;
                let hi = if s + 1 == sub_blocks { range.end } else { lo + per };
                let mut acc = [0.0f64; 9];
                for row in &rec.means[lo..hi] {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += v;
                    }
                }
                for a in acc.iter_mut() {
                    *a /= (hi - lo) as f64;
                }
                out.push(acc);
            }
        }
        out
    }
}

/// Stationary averages over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMoments {
    pub window: (f64, f64),
    pub n_samples: usize,
    pub mean_x: Estimate,
    pub mean_p: Estimate,
    pub x2: Estimate,
    pub p2: Estimate,
    pub h: Estimate,
    /// `sqrt(var x · var p)`
    pub dx_dp: Estimate,
}

/// Independent averaging samples for a window: each trajectory's window is cut
/// into sub-blocks no shorter than ten correlation times (at least one per
/// trajectory), and trajectories are independent by construction.
///
/// Refuses windows shorter than one correlation time, or whose total length
/// summed over trajectories is below twenty correlation times.
pub(crate) fn stationary_samples(report: &EnsembleReport, window: (f64, f64)) -> Result<(Vec<[f64; 9]>, (f64, f64))> {
    let range = report.check_window(window)?;
    let tc = report.config.scales.correlation_time();
    let bd = report.block_duration();
    let len = range.len() as f64 * bd;
    let n_traj = report.blocks.len() as f64;
    if !(len >= tc) || !(n_traj * len >= 20.0 * tc) {
        return Err(SedError::Statistical(format!(
            "window of length {len} (x{n_traj} trajectories) is too short for correlation time {tc}"
        )));
    }
    let sub = ((len / (10.0 * tc)).floor() as usize).max(1);
    let used = (report.block_times[range.start], report.block_times[range.end - 1] + bd);
    Ok((report.window_samples(&range, sub), used))
}

pub fn stationary_moments(report: &EnsembleReport, window: (f64, f64)) -> Result<StationaryMoments> {
    let (samples, used) = stationary_samples(report, window)?;
    let col = |c: usize| -> Vec<f64> { samples.iter().map(|s| s[c]).collect() };
    let (x, p, x2, p2, h) = (col(0), col(1), col(2), col(3), col(4));
    let n = samples.len();
    let dx_dp = jackknife(n, |skip| {
        let vx = mean_skipping(&x2, skip) - mean_skipping(&x, skip).powi(2);
        let vp = mean_skipping(&p2, skip) - mean_skipping(&p, skip).powi(2);
        (vx * vp).sqrt()
    });
    Ok(StationaryMoments {
        window: used,
        n_samples: n,
        mean_x: mean_stderr(&x),
        mean_p: mean_stderr(&p),
        x2: mean_stderr(&x2),
        p2: mean_stderr(&p2),
        h: mean_stderr(&h),
        dx_dp,
    })
}

/// Stationary window averages of block column `col` (see [`BLOCK_FIELDS`]).
pub fn stationary_column(report: &EnsembleReport, window: (f64, f64), col: usize) -> Result<Estimate> {
    let (samples, _) = stationary_samples(report, window)?;
    Ok(mean_stderr(&samples.iter().map(|s| s[col]).collect::<Vec<_>>()))
}

/// Net energy drift over the window: mean over trajectories of the least
/// squares slope of the block-averaged energy.
pub fn energy_drift(report: &EnsembleReport, window: (f64, f64)) -> Result<Estimate> {
    let range = report.check_window(window)?;
    if range.len() < 3 {
        return Err(SedError::Statistical("need at least three blocks to fit a drift".into()));
    }
    let bd = report.block_duration();
    let t: Vec<f64> = report.block_times[range.clone()].iter().map(|b| b + 0.5 * bd).collect();
    let slopes: Vec<f64> = report
        .blocks
        .iter()
        .map(|rec| {
            let h: Vec<f64> = rec.means[range.clone()].iter().map(|r| r[4]).collect();
            linear_fit(&t, &h).1
        })
        .collect();
    Ok(mean_stderr(&slopes))
}

/// Divergence of the two paired sub-ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryLoss {
    pub times: Vec<f64>,
    /// `|⟨x⟩_A − ⟨x⟩_B|`
    pub divergence: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Refined local maxima `(t, Δ)` of the divergence used for the fit.
    pub peaks: Vec<(f64, f64)>,
    /// Fitted exponential envelope rate; `None` when Δ vanishes identically.
    pub rate: Option<Estimate>,
    pub amplitude: Option<f64>,
}

/// Run a paired ensemble and measure how fast the two sub-ensembles forget
/// their different starting points.
pub fn memory_loss(config: &EnsembleConfig) -> Result<MemoryLoss> {
    if !config.is_paired() {
        return config_err("memory loss requires paired initial conditions (common-noise pairing)");
    }
    memory_loss_from_report(&run_ensemble(config)?)
}

pub fn memory_loss_from_report(report: &EnsembleReport) -> Result<MemoryLoss> {
    let (dx, _) = report
        .paired_difference
        .as_ref()
        .ok_or_else(|| SedError::Config("report has no paired sub-ensembles".into()))?;
    let divergence: Vec<f64> = dx.iter().map(|e| e.value.abs()).collect();
    let stderr: Vec<f64> = dx.iter().map(|e| e.stderr).collect();
    let times = report.times.clone();
    let scale = divergence.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    if scale > 0.0 {
        let dt = times[1] - times[0];
        for j in 1..divergence.len() - 1 {
            let (a, b, c) = (divergence[j - 1], divergence[j], divergence[j + 1]);
            if b > a && b >= c && b > 1e-9 * scale {
                let denom = a - 2.0 * b + c;
                let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
                peaks.push((times[j] + shift * dt, b - 0.25 * (a - c) * shift));
            }
        }
    }
    let (rate, amplitude) = if peaks.len() >= 3 {
        let t: Vec<f64> = peaks.iter().map(|p| p.0).collect();
        let y: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
        let (a, b, se) = linear_fit(&t, &y);
        (Some(Estimate::new(-b, se)), Some(a.exp()))
    } else {
        (None, None)
    };
    Ok(MemoryLoss { times, divergence, stderr, peaks, rate, amplitude })
}

/// Field–particle correlators `D^px = e⟨xE⟩`, `D^pp = e⟨pE⟩` over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diffusion {
    pub times: Vec<f64>,
    pub dpx: Vec<Estimate>,
    pub dpp: Vec<Estimate>,
}

pub fn estimate_diffusion(report: &EnsembleReport) -> Result<Diffusion> {
    if !report.config.retain_drive {
        return config_err("drive samples were not retained; diffusion cannot be estimated");
    }
    let g = &report.groups[0];
    Ok(Diffusion { times: report.times.clone(), dpx: g.dpx.clone(), dpp: g.dpp.clone() })
}

/// Stationary `(D^px, D^pp)` averaged over a window.
pub fn stationary_diffusion(report: &EnsembleReport, window: (f64, f64)) -> Result<(Estimate, Estimate)> {
    if !report.config.retain_drive {
        return config_err("drive samples were not retained; diffusion cannot be estimated");
    }
    Ok((stationary_column(report, window, 5)?, stationary_column(report, window, 6)?))
}

/// Summary of the stationary position spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub line: LineShape,
    pub spectrum: AveragedSpectrum,
}

/// Averaged periodogram of `x` over the post-burn-in window with its line
/// shape. Refuses when the window cannot resolve `required_resolution`.
pub fn power_spectrum(report: &EnsembleReport, required_resolution: f64) -> Result<PowerSpectrum> {
    let sp = report
        .spectrum
        .as_ref()
        .ok_or_else(|| SedError::Config("ensemble was run without a spectrum section".into()))?;
    if sp.resolution > required_resolution {
        return Err(SedError::Statistical(format!(
            "window resolution {} is coarser than the requested {required_resolution}",
            sp.resolution
        )));
    }
    let dens: Vec<f64> = sp.density.iter().map(|e| e.value).collect();
    let line = line_shape(&sp.omegas, &dens, 0.25 * report.config.scales.omega0, sp.resolution)?;
    Ok(PowerSpectrum { line, spectrum: sp.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, seed: u64) -> EnsembleConfig {
        let mut c = EnsembleConfig::reference(n, 40.0, seed);
        c.stationary = false;
        c.burn_in = 0.0;
        c
    }

    #[test]
    fn rejects_tiny_ensembles() {
        let c = small(1, 0);
        assert!(matches!(run_ensemble(&c), Err(SedError::Config(_))));
        let mut c = small(0, 0);
        c.n_traj = 0;
        assert!(matches!(run_ensemble(&c), Err(SedError::Config(_))));
    }

    #[test]
    fn burn_in_rule() {
        let mut c = EnsembleConfig::reference(4, 1000.0, 0);
        c.burn_in = 100.0;
        assert!(c.validate().is_err());
        c.burn_in = 500.0;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn deterministic_reports() {
        let c = small(2, 17);
        assert_eq!(run_ensemble(&c).unwrap(), run_ensemble(&c).unwrap());
    }

    #[test]
    fn thread_count_does_not_change_report() {
        let mut c = small(6, 3);
        c.threads = Some(1);
        let a = run_ensemble(&c).unwrap();
        c.threads = Some(4);
        let b = run_ensemble(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decimation_rule() {
        let c = small(2, 0);
        assert_eq!(c.decimation(), 8);
        let r = run_ensemble(&c).unwrap();
        assert_eq!(r.times.len(), 401);
        assert!((r.times[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn diffusion_starts_at_zero_and_needs_drive() {
        let c = small(3, 5);
        let r = run_ensemble(&c).unwrap();
        let d = estimate_diffusion(&r).unwrap();
        assert_eq!(d.dpx[0].value, 0.0);
        assert_eq!(d.dpp[0].value, 0.0);
        let mut c2 = c.clone();
        c2.retain_drive = false;
        let r2 = run_ensemble(&c2).unwrap();
        assert!(matches!(estimate_diffusion(&r2), Err(SedError::Config(_))));
    }

    #[test]
    fn identical_pairs_do_not_diverge() {
        let mut c = small(2, 1);
        c.initial = InitialConditions::Paired { x0a: 0.5, x0b: 0.5, p0: 0.0 };
        let ml = memory_loss(&c).unwrap();
        assert!(ml.divergence.iter().all(|d| *d == 0.0));
        assert!(ml.rate.is_none());
        assert!(matches!(memory_loss(&small(2, 1)), Err(SedError::Config(_))));
    }

    #[test]
    fn window_precondition() {
        let mut c = small(3, 1);
        c.t_total = 100.0;
        let r = run_ensemble(&c).unwrap();
        // correlation time 200 exceeds the whole run
        assert!(matches!(stationary_moments(&r, (20.0, 100.0)), Err(SedError::Statistical(_))));
        assert!(matches!(stationary_moments(&r, (50.0, 150.0)), Err(SedError::Config(_))));
    }
}

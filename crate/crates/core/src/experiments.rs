//! Scenario runners: misalignment sweep, Θ sweep, distance profile and
//! Monte-Carlo mean profile.
//!
//! Seeds: run `r` of a scenario uses [`rng::run_seed`]`(master_seed, r)`.
//! The fiber is drawn from the fiber seed, the laser walk from
//! `(noise, Laser, 0)`, receiver noise of segment `i` from `(noise, Receiver, i)`
//! and the misalignment angle (initial draw, then jitter) from `(theta, Theta, 0)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_traces, EstimatorOptions, PhaseTrace, ProbeScheme, SimulatedChannel,
};
use crate::fiber::{
    backscatter_matrix, round_trip_attenuation, sample_fiber, FiberRealization, FiberSpec,
    SegmentParams,
};
use crate::jones::Complex;
use crate::metrics::{aggregate_mean, stdv_profile, DiffMode, StdvProfile};
use crate::noise::{theta_trajectory, LaserWalk, NoiseConfig};
use crate::rng::{self, Purpose, RunSeeds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    ThetaMis,
    ThetaCap,
    DistanceProfile,
    MonteCarlo,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::ThetaMis => "theta_mis",
            SweepKind::ThetaCap => "theta_cap",
            SweepKind::DistanceProfile => "distance_profile",
            SweepKind::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta_mis" => Ok(SweepKind::ThetaMis),
            "theta_cap" => Ok(SweepKind::ThetaCap),
            "distance_profile" => Ok(SweepKind::DistanceProfile),
            "monte_carlo" => Ok(SweepKind::MonteCarlo),
            other => Err(Error::invalid(format!("unknown sweep kind `{other}`"))),
        }
    }
}

/// Fixed birefringence angles of the probed segment in single-segment sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPreset {
    pub theta_cap: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub fiber: FiberSpec,
    pub noise: NoiseConfig,
    pub schemes: Vec<ProbeScheme>,
    pub sweep: SweepKind,
    pub sweep_grid: Vec<f64>,
    pub n_fibers: usize,
    pub master_seed: u64,
    pub diff_mode: DiffMode,
    /// Exclude fading-flagged samples from the standard deviation.
    pub strict: bool,
    /// 0 = X launch (default), 1 = Y launch.
    pub launch_column: usize,
    /// Segment whose position sets attenuation and delay in single-segment sweeps.
    pub segment_index: Option<usize>,
    /// Fixed misalignment for the Θ sweep.
    pub theta_mis: Option<f64>,
    pub preset: Option<SegmentPreset>,
}

/// Default number of grid points for the single-segment sweeps.
pub const DEFAULT_GRID_POINTS: usize = 64;

/// `n` evenly spaced points from `start` to `stop`, both included.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl ScenarioConfig {
    /// Defaults for everything but the fiber length and sweep kind.
    pub fn new(sweep: SweepKind, length_m: f64) -> Self {
        ScenarioConfig {
            name: sweep.name().to_string(),
            fiber: FiberSpec {
                length_m,
                ..FiberSpec::default()
            },
            noise: NoiseConfig::default(),
            schemes: ProbeScheme::ALL.to_vec(),
            sweep,
            sweep_grid: vec![],
            n_fibers: if sweep == SweepKind::MonteCarlo { 50 } else { 1 },
            master_seed: 0,
            diff_mode: DiffMode::Temporal,
            strict: false,
            launch_column: 0,
            segment_index: None,
            theta_mis: None,
            preset: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        self.noise.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes must not be empty"));
        }
        if self.n_fibers < 1 {
            return Err(Error::invalid("n_fibers must be >= 1"));
        }
        if self.sweep == SweepKind::MonteCarlo && self.n_fibers < 2 {
            return Err(Error::invalid("monte_carlo needs n_fibers >= 2"));
        }
        if self.launch_column > 1 {
            return Err(Error::invalid("launch_column must be 0 or 1"));
        }
        if self.sweep_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("sweep_grid values must be finite"));
        }
        if let Some(i) = self.segment_index {
            if i >= self.fiber.segment_count() {
                return Err(Error::invalid(format!(
                    "segment_index {i} is beyond the last segment ({})",
                    self.fiber.segment_count() - 1
                )));
            }
        }
        if matches!(self.sweep, SweepKind::ThetaMis | SweepKind::ThetaCap) && self.n_fibers != 1 {
            return Err(Error::invalid("single-segment sweeps use n_fibers = 1"));
        }
        if self.sweep == SweepKind::DistanceProfile && self.n_fibers != 1 {
            return Err(Error::invalid("distance_profile uses n_fibers = 1"));
        }
        Ok(())
    }

    /// Fills every optional field: sweep grid, probed segment, misalignment
    /// and, when absent, a scanned near-fading segment preset.
    pub fn resolve(mut self) -> Result<Self> {
        self.validate()?;
        match self.sweep {
            SweepKind::ThetaMis => {
                if self.sweep_grid.is_empty() {
                    self.sweep_grid = (0..DEFAULT_GRID_POINTS)
                        .map(|k| PI * k as f64 / DEFAULT_GRID_POINTS as f64)
                        .collect();
                }
                self.segment_index.get_or_insert(0);
                if self.preset.is_none() {
                    self.preset = Some(scan_misalignment_preset(self.launch_column));
                }
            }
            SweepKind::ThetaCap => {
                if self.sweep_grid.is_empty() {
                    self.sweep_grid = linspace(0.0, FRAC_PI_2, DEFAULT_GRID_POINTS);
                }
                self.segment_index.get_or_insert(0);
                let theta = *self.theta_mis.get_or_insert(FRAC_PI_8);
                if self.preset.is_none() {
                    self.preset = Some(scan_theta_cap_preset(theta, &self.sweep_grid, self.launch_column));
                }
            }
            SweepKind::DistanceProfile | SweepKind::MonteCarlo => {}
        }
        Ok(self)
    }

    pub fn options(&self) -> EstimatorOptions {
        EstimatorOptions {
            launch_column: self.launch_column,
        }
    }
}

/// The launched column's coherent sum `h_x + h_y` at θ = 0 for X and Y launch,
/// both unit-amplitude.
fn launch_sums(theta_cap: f64, beta: f64, gamma: f64) -> [[Complex; 2]; 2] {
    let h = backscatter_matrix(&SegmentParams::unit(theta_cap, beta, gamma), 0.0).expect("finite");
    let c0 = h.column(0);
    let c1 = h.column(1);
    [c0, c1]
}

/// `min_θ |cos θ·u + sin θ·v|`: the smaller singular value of the real 2×2
/// matrix with columns `(ℜu, ℑu)` and `(ℜv, ℑv)`.
fn min_over_rotation(u: Complex, v: Complex) -> f64 {
    let (a, b, c, d) = (u.re, v.re, u.im, v.im);
    let s1 = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (s1 * s1 - 4.0 * det * det).max(0.0).sqrt();
    ((s1 - disc) / 2.0).max(0.0).sqrt()
}

/// Scans `(Θ, β, γ)` for a segment where both single-input operands can be
/// nulled by some misalignment θ. Returns the grid point with the smallest
/// worse-of-two residual.
pub fn scan_misalignment_preset(launch_column: usize) -> SegmentPreset {
    let mut best = (f64::INFINITY, SegmentPreset { theta_cap: 0.0, beta: 0.0, gamma: 0.0 });
    for it in 1..32 {
        let theta_cap = FRAC_PI_2 * it as f64 / 32.0;
        for ib in 0..64 {
            let beta = -PI + 2.0 * PI * ib as f64 / 64.0;
            for ig in 0..64 {
                let gamma = -PI + 2.0 * PI * ig as f64 / 64.0;
                let [c0, c1] = launch_sums(theta_cap, beta, gamma);
                let k = launch_column;
                // launch column k under rotation mixes columns 0 and 1
                let siso = min_over_rotation(c0[k], c1[k]);
                let simo = min_over_rotation(c0[0] + c0[1], c1[0] + c1[1]);
                let score = siso.max(simo);
                if score < best.0 {
                    best = (score, SegmentPreset { theta_cap, beta, gamma });
                }
            }
        }
    }
    best.1
}

/// Local minima (interior points only) of a sampled curve.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] <= values[i + 1])
        .collect()
}

/// Local maxima (interior points only) of a sampled curve.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}

fn column_sum(seg: &SegmentParams, theta_mis: f64, launch_column: usize) -> Complex {
    let c = backscatter_matrix(seg, theta_mis).expect("finite").column(launch_column);
    c[0] + c[1]
}

/// Scans `(β, γ)` at fixed θ for a SIMO fading notch inside the Θ grid:
/// the coherent sum must pass close to zero at an interior Θ and have a
/// single interior local minimum of its modulus over the grid.
pub fn scan_theta_cap_preset(theta_mis: f64, grid: &[f64], launch_column: usize) -> SegmentPreset {
    let mut best = (f64::INFINITY, SegmentPreset { theta_cap: 0.0, beta: 0.0, gamma: 0.0 });
    if grid.len() < 3 {
        return best.1;
    }
    for ib in 0..128 {
        let beta = -PI + 2.0 * PI * ib as f64 / 128.0;
        for ig in 0..128 {
            let gamma = -PI + 2.0 * PI * ig as f64 / 128.0;
            let mag = |t: f64| column_sum(&SegmentParams::unit(t, beta, gamma), theta_mis, launch_column).norm();
            let coarse: Vec<f64> = grid.iter().map(|&t| mag(t)).collect();
            let minima = local_minima(&coarse);
            let &[k] = minima.as_slice() else { continue };
            // keep the notch away from the grid edges
            if k < grid.len() / 8 || k > grid.len() * 7 / 8 {
                continue;
            }
            let (mut lo, mut hi) = (grid[k - 1], grid[k + 1]);
            for _ in 0..60 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if mag(m1) < mag(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let theta_cap = 0.5 * (lo + hi);
            let depth = mag(theta_cap);
            if depth < best.0 {
                best = (depth, SegmentPreset { theta_cap, beta, gamma });
            }
        }
    }
    best.1
}

/// Unit-reflectivity segment at the position of `index`, carrying the
/// preset angles.
pub fn probe_segment(spec: &FiberSpec, index: usize, preset: SegmentPreset) -> SegmentParams {
    let z_m = spec.segment_center(index);
    SegmentParams {
        theta_cap: preset.theta_cap,
        beta: preset.beta,
        gamma: preset.gamma,
        attenuation: round_trip_attenuation(spec.alpha_db_per_km, z_m),
        phasor: Complex::new(1.0, 0.0),
        z_m,
        tau_s: spec.round_trip_delay(z_m),
    }
}

/// Everything random about one simulated run of a fiber.
pub struct RunInputs {
    pub seeds: RunSeeds,
    pub fiber: FiberRealization,
    pub walk: LaserWalk,
    pub theta: Vec<f64>,
}

impl RunInputs {
    pub fn channel<'a>(&'a self, noise: &'a NoiseConfig) -> SimulatedChannel<'a> {
        SimulatedChannel {
            fiber: &self.fiber,
            walk: &self.walk,
            theta: &self.theta,
            noise,
            noise_seed: self.seeds.noise,
        }
    }

    pub fn theta_mis(&self) -> f64 {
        self.theta[0]
    }
}

/// Draws the fiber, laser walk and misalignment of run `run`. With
/// `fixed_theta`, θ(0) is not drawn.
pub fn run_inputs(
    cfg: &ScenarioConfig,
    run: u64,
    fiber: Option<FiberRealization>,
    fixed_theta: Option<f64>,
) -> Result<RunInputs> {
    let seeds = rng::run_seed(cfg.master_seed, run);
    let fiber = match fiber {
        Some(f) => f,
        None => sample_fiber(&cfg.fiber, seeds.fiber)?,
    };
    let n = cfg.noise.n_samples;
    let mut laser_rng = rng::stream(seeds.noise, Purpose::Laser, 0);
    let walk = LaserWalk::generate(cfg.noise.linewidth_hz, cfg.noise.dt_s, n, fiber.max_delay(), &mut laser_rng)?;
    let mut theta_rng = rng::stream(seeds.theta, Purpose::Theta, 0);
    let theta0 = match fixed_theta {
        Some(t) => t,
        None => Uniform::new_inclusive(-PI, PI).expect("valid range").sample(&mut theta_rng),
    };
    let theta = theta_trajectory(theta0, &cfg.noise, &mut theta_rng);
    Ok(RunInputs {
        seeds,
        fiber,
        walk,
        theta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaRow {
    pub theta_mis: f64,
    pub scheme: ProbeScheme,
    pub stdv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSweep {
    pub segment: SegmentParams,
    pub rows: Vec<ThetaRow>,
}

impl ThetaSweep {
    pub fn series(&self, scheme: ProbeScheme) -> Vec<f64> {
        self.rows.iter().filter(|r| r.scheme == scheme).map(|r| r.stdv).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaCapRow {
    pub theta_cap: f64,
    pub re_sum: f64,
    pub im_sum: f64,
    pub stdv_simo: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaCapSweep {
    pub theta_mis: f64,
    pub segment: SegmentParams,
    pub rows: Vec<ThetaCapRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    pub theta_mis: f64,
    pub fiber: FiberRealization,
    pub profiles: Vec<StdvProfile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub n_fibers: usize,
    pub profiles: Vec<StdvProfile>,
}

impl MonteCarlo {
    pub fn profile(&self, scheme: ProbeScheme) -> Option<&StdvProfile> {
        self.profiles.iter().find(|p| p.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioOutput {
    ThetaMis(ThetaSweep),
    ThetaCap(ThetaCapSweep),
    Profile(DistanceProfile),
    MonteCarlo(MonteCarlo),
}

fn single_segment_fiber(cfg: &ScenarioConfig, seg: SegmentParams) -> FiberRealization {
    FiberRealization {
        spec: cfg.fiber.clone(),
        seed: 0,
        segments: vec![seg],
    }
}

fn profiles_of(cfg: &ScenarioConfig, traces: &[PhaseTrace]) -> Result<Vec<StdvProfile>> {
    traces
        .iter()
        .map(|t| stdv_profile(t, cfg.diff_mode, cfg.strict))
        .collect()
}

fn single_segment_stdv(
    cfg: &ScenarioConfig,
    seg: SegmentParams,
    theta_mis: f64,
    schemes: &[ProbeScheme],
) -> Result<Vec<f64>> {
    let fiber = single_segment_fiber(cfg, seg);
    // same seeds at every grid point: curves differ only through the swept angle
    let inputs = run_inputs(cfg, 0, Some(fiber), Some(theta_mis))?;
    let traces = estimate_traces(&inputs.channel(&cfg.noise), schemes, cfg.options())?;
    let diff = match cfg.diff_mode {
        DiffMode::Spatial => DiffMode::Temporal,
        m => m,
    };
    traces
        .iter()
        .map(|t| Ok(stdv_profile(t, diff, cfg.strict)?.per_segment_stdv[0]))
        .collect()
}

fn resolved_preset(cfg: &ScenarioConfig) -> Result<(usize, SegmentPreset)> {
    match (cfg.segment_index, cfg.preset) {
        (Some(i), Some(p)) => Ok((i, p)),
        _ => Err(Error::invalid("scenario is not resolved: call ScenarioConfig::resolve first")),
    }
}

/// StDv of one segment versus misalignment θ, fixed `(Θ, β, γ)`.
pub fn run_theta_mis_sweep(cfg: &ScenarioConfig) -> Result<ThetaSweep> {
    let (index, preset) = resolved_preset(cfg)?;
    let segment = probe_segment(&cfg.fiber, index, preset);
    let mut rows = Vec::with_capacity(cfg.sweep_grid.len() * cfg.schemes.len());
    for &theta in &cfg.sweep_grid {
        let stdv = single_segment_stdv(cfg, segment, theta, &cfg.schemes)?;
        rows.extend(cfg.schemes.iter().zip(stdv).map(|(&scheme, stdv)| ThetaRow {
            theta_mis: theta,
            scheme,
            stdv,
        }));
    }
    Ok(ThetaSweep { segment, rows })
}

/// Noiseless `ℜ/ℑ(h_x + h_y)` of the launched column and SIMO StDv versus Θ,
/// fixed `(θ, β, γ)`.
pub fn run_theta_cap_sweep(cfg: &ScenarioConfig) -> Result<ThetaCapSweep> {
    let (index, preset) = resolved_preset(cfg)?;
    let theta_mis = cfg
        .theta_mis
        .ok_or_else(|| Error::invalid("theta_cap sweep needs theta_mis"))?;
    let base = probe_segment(&cfg.fiber, index, preset);
    let rows = cfg
        .sweep_grid
        .iter()
        .map(|&theta_cap| {
            let seg = SegmentParams { theta_cap, ..base };
            let sum = column_sum(&seg, theta_mis, cfg.launch_column);
            let stdv = single_segment_stdv(cfg, seg, theta_mis, &[ProbeScheme::Simo])?[0];
            Ok(ThetaCapRow {
                theta_cap,
                re_sum: sum.re,
                im_sum: sum.im,
                stdv_simo: stdv,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaCapSweep {
        theta_mis,
        segment: base,
        rows,
    })
}

/// Inputs and per-scheme profiles of run `run` of a scenario, as the
/// Monte-Carlo and distance-profile runners compute them.
pub fn run_fiber(cfg: &ScenarioConfig, run: u64) -> Result<(RunInputs, Vec<StdvProfile>)> {
    let inputs = run_inputs(cfg, run, None, None)?;
    let traces = estimate_traces(&inputs.channel(&cfg.noise), &cfg.schemes, cfg.options())?;
    let profiles = profiles_of(cfg, &traces)?;
    Ok((inputs, profiles))
}

/// Per-segment StDv along one random fiber (run 0).
pub fn run_distance_profile(cfg: &ScenarioConfig) -> Result<DistanceProfile> {
    let (inputs, profiles) = run_fiber(cfg, 0)?;
    Ok(DistanceProfile {
        theta_mis: inputs.theta_mis(),
        fiber: inputs.fiber,
        profiles,
    })
}

/// Mean StDv profile over `n_fibers` independent runs.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<MonteCarlo> {
    // collect keeps run order whatever the completion order
    let runs = (0..cfg.n_fibers as u64)
        .into_par_iter()
        .map(|run| run_fiber(cfg, run).map(|(_, profiles)| profiles))
        .collect::<Result<Vec<_>>>()?;
    let mut per_scheme: Vec<Vec<StdvProfile>> = cfg.schemes.iter().map(|_| Vec::new()).collect();
    for profiles in runs {
        for (acc, p) in per_scheme.iter_mut().zip(profiles) {
            acc.push(p);
        }
    }
    let profiles = per_scheme
        .iter()
        .map(|ps| aggregate_mean(ps))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarlo {
        n_fibers: cfg.n_fibers,
        profiles,
    })
}

/// Resolves and runs a scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let cfg = cfg.clone().resolve()?;
    Ok(match cfg.sweep {
        SweepKind::ThetaMis => ScenarioOutput::ThetaMis(run_theta_mis_sweep(&cfg)?),
        SweepKind::ThetaCap => ScenarioOutput::ThetaCap(run_theta_cap_sweep(&cfg)?),
        SweepKind::DistanceProfile => ScenarioOutput::Profile(run_distance_profile(&cfg)?),
        SweepKind::MonteCarlo => ScenarioOutput::MonteCarlo(run_monte_carlo(&cfg)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(sweep: SweepKind) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(sweep, 500.0);
        cfg.fiber.segment_length_m = 25.0;
        cfg.noise.n_samples = 400;
        if sweep == SweepKind::MonteCarlo {
            cfg.n_fibers = 3;
        }
        cfg
    }

    #[test]
    fn min_over_rotation_matches_brute_force() {
        let u = Complex::new(0.3, -0.7);
        let v = Complex::new(-0.2, 0.4);
        let brute = (0..100_000)
            .map(|k| {
                let t = PI * k as f64 / 100_000.0;
                (u * t.cos() + v * t.sin()).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((min_over_rotation(u, v) - brute).abs() < 1e-6);
    }

    #[test]
    fn linspace_and_extrema() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(local_maxima(&[0.0, 2.0, 1.0, 3.0, 0.0]), vec![1, 3]);
        assert_eq!(local_minima(&[3.0, 1.0, 2.0, 0.5, 4.0]), vec![1, 3]);
    }

    #[test]
    fn noiseless_scenarios_are_flat_zero() {
        for sweep in [SweepKind::ThetaMis, SweepKind::DistanceProfile] {
            let mut cfg = small(sweep);
            cfg.noise = NoiseConfig::noiseless(64);
            match run_scenario(&cfg).unwrap() {
                ScenarioOutput::ThetaMis(s) => assert!(s.rows.iter().all(|r| r.stdv == 0.0)),
                ScenarioOutput::Profile(p) => {
                    for prof in &p.profiles {
                        assert!(prof.per_segment_stdv.iter().all(|&v| v == 0.0));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn mimo_row_is_flat_in_theta() {
        let cfg = small(SweepKind::ThetaMis);
        let ScenarioOutput::ThetaMis(s) = run_scenario(&cfg).unwrap() else { panic!() };
        let mimo = s.series(ProbeScheme::Mimo);
        let mean = mimo.iter().sum::<f64>() / mimo.len() as f64;
        assert!(mimo.iter().all(|v| (v - mean).abs() <= 0.05 * mean));
        for scheme in [ProbeScheme::Simo, ProbeScheme::Siso] {
            let row = s.series(scheme);
            let spread = row.iter().cloned().fold(f64::MIN, f64::max) - row.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread > 0.05 * mean);
            assert!(row.iter().zip(&mimo).any(|(x, m)| *x >= 2.0 * m));
        }
    }

    #[test]
    fn flat_theta_cap_sweep_without_retardance() {
        let mut cfg = small(SweepKind::ThetaCap);
        cfg.preset = Some(SegmentPreset { theta_cap: 0.0, beta: 0.0, gamma: 0.4 });
        cfg.theta_mis = Some(0.0);
        let ScenarioOutput::ThetaCap(s) = run_scenario(&cfg).unwrap() else { panic!() };
        let r0 = &s.rows[0];
        for r in &s.rows {
            assert!((r.re_sum - r0.re_sum).abs() < 1e-12 && (r.im_sum - r0.im_sum).abs() < 1e-12);
            assert!((r.stdv_simo - r0.stdv_simo).abs() < 1e-9);
        }
    }

    #[test]
    fn single_fiber_monte_carlo_equals_profile() {
        let mut mc = small(SweepKind::MonteCarlo);
        mc.n_fibers = 2;
        let mut cfg = mc.clone();
        cfg.n_fibers = 1;
        let a = run_monte_carlo(&cfg).unwrap();
        cfg.sweep = SweepKind::DistanceProfile;
        let b = run_distance_profile(&cfg).unwrap();
        assert_eq!(a.profiles, b.profiles);
        assert!(run_scenario(&ScenarioConfig { n_fibers: 1, ..mc }).is_err());
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = small(SweepKind::MonteCarlo);
        assert_eq!(run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
    }

    #[test]
    fn unresolved_config_is_rejected_by_runners() {
        let cfg = small(SweepKind::ThetaMis);
        assert!(run_theta_mis_sweep(&cfg).is_err());
    }
}

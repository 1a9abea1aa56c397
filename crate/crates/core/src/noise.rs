//! Time-varying impairments: laser phase noise, receiver noise and a
//! drifting TX/RX misalignment angle.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::SegmentParams;
use crate::jones::{Complex, JonesMatrix};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Laser linewidth Δν.
    pub linewidth_hz: f64,
    /// Interval between two channel estimates.
    pub dt_s: f64,
    pub n_samples: usize,
    /// Unit signal power over per-coefficient receiver noise power.
    /// `inf` disables receiver noise.
    pub snr_db: f64,
    /// Random-walk rate of θ(t); 0 keeps θ constant.
    pub theta_jitter_rad_per_sqrt_s: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            linewidth_hz: 75.0,
            dt_s: 160e-6,
            n_samples: 12_500,
            snr_db: 30.0,
            theta_jitter_rad_per_sqrt_s: 0.0,
        }
    }
}

impl NoiseConfig {
    /// All impairments off.
    pub fn noiseless(n_samples: usize) -> Self {
        NoiseConfig {
            linewidth_hz: 0.0,
            snr_db: f64::INFINITY,
            n_samples,
            ..NoiseConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_hz.is_finite() && self.linewidth_hz >= 0.0) {
            return Err(Error::invalid(format!(
                "linewidth_hz must be >= 0, got {}",
                self.linewidth_hz
            )));
        }
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return Err(Error::invalid(format!("dt_s must be > 0, got {}", self.dt_s)));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid(format!(
                "n_samples must be >= 2, got {}",
                self.n_samples
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("snr_db must be a number or inf, got {}", self.snr_db)));
        }
        if !(self.theta_jitter_rad_per_sqrt_s.is_finite() && self.theta_jitter_rad_per_sqrt_s >= 0.0)
        {
            return Err(Error::invalid(format!(
                "theta_jitter_rad_per_sqrt_s must be >= 0, got {}",
                self.theta_jitter_rad_per_sqrt_s
            )));
        }
        Ok(())
    }

    /// Standard deviation of one laser-walk increment, `√(2π·Δν·dt)`.
    pub fn laser_step_std(&self) -> f64 {
        (2.0 * PI * self.linewidth_hz * self.dt_s).sqrt()
    }

    /// `E|W|²` of one additive noise coefficient.
    pub fn noise_power(&self) -> f64 {
        if self.snr_db.is_infinite() {
            0.0
        } else {
            10f64.powf(-self.snr_db / 10.0)
        }
    }
}

/// Sampled Wiener phase of the laser, extended backwards in time so that
/// delayed copies `φ(t − τ)` exist for every `t ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserWalk {
    dt_s: f64,
    /// Index of `t = 0` in `samples`.
    origin: usize,
    samples: Vec<f64>,
}

impl LaserWalk {
    /// Walk covering `[−max_delay_s, (n_samples − 1)·dt]`, with `φ(0) = 0`.
    /// Forward increments are drawn first, then the backward pre-roll.
    pub fn generate(
        linewidth_hz: f64,
        dt_s: f64,
        n_samples: usize,
        max_delay_s: f64,
        rng: &mut Stream,
    ) -> Result<Self> {
        if !(linewidth_hz >= 0.0 && dt_s > 0.0 && n_samples >= 1 && max_delay_s >= 0.0) {
            return Err(Error::invalid("laser walk needs linewidth >= 0, dt > 0, n >= 1, delay >= 0"));
        }
        let origin = (max_delay_s / dt_s).ceil() as usize + 1;
        let mut samples = vec![0.0; origin + n_samples];
        if linewidth_hz > 0.0 {
            let step = Normal::new(0.0, (2.0 * PI * linewidth_hz * dt_s).sqrt())
                .map_err(|e| Error::invalid(e.to_string()))?;
            for k in origin + 1..samples.len() {
                samples[k] = samples[k - 1] + step.sample(rng);
            }
            for k in (0..origin).rev() {
                samples[k] = samples[k + 1] - step.sample(rng);
            }
        }
        Ok(LaserWalk {
            dt_s,
            origin,
            samples,
        })
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    /// Phase at an arbitrary time, linearly interpolated between samples.
    pub fn phase_at_time(&self, t_s: f64) -> f64 {
        let x = t_s / self.dt_s + self.origin as f64;
        assert!(
            x >= 0.0 && x <= (self.samples.len() - 1) as f64,
            "time {t_s} s outside the generated walk"
        );
        let k = x.floor() as usize;
        let frac = x - k as f64;
        if frac == 0.0 || k + 1 == self.samples.len() {
            return self.samples[k];
        }
        self.samples[k] + frac * (self.samples[k + 1] - self.samples[k])
    }

    /// `φ(t·dt)`.
    pub fn phase_at(&self, t: usize) -> f64 {
        self.samples[self.origin + t]
    }

    /// Self-heterodyne phase `φ(t) − φ(t − τ)` seen by a segment with
    /// round-trip delay `tau_s`.
    pub fn self_heterodyne(&self, t: usize, tau_s: f64) -> f64 {
        if tau_s == 0.0 {
            return 0.0;
        }
        self.phase_at(t) - self.phase_at_time(t as f64 * self.dt_s - tau_s)
    }

    /// Forward samples `φ(0), φ(dt), …`.
    pub fn forward(&self) -> &[f64] {
        &self.samples[self.origin..]
    }
}

/// Circular complex Gaussian draws with a given `E|w|²`.
pub struct ReceiverNoise {
    dist: Option<Normal<f64>>,
}

impl ReceiverNoise {
    pub fn new(cfg: &NoiseConfig) -> Self {
        let power = cfg.noise_power();
        let dist = (power > 0.0).then(|| Normal::new(0.0, (power / 2.0).sqrt()).expect("finite std"));
        ReceiverNoise { dist }
    }

    pub fn is_off(&self) -> bool {
        self.dist.is_none()
    }

    pub fn sample(&self, rng: &mut Stream) -> Complex {
        match &self.dist {
            Some(d) => Complex::new(d.sample(rng), d.sample(rng)),
            None => Complex::new(0.0, 0.0),
        }
    }

    pub fn sample_matrix(&self, rng: &mut Stream) -> JonesMatrix {
        if self.is_off() {
            return JonesMatrix::ZERO;
        }
        JonesMatrix::from_raw(
            self.sample(rng),
            self.sample(rng),
            self.sample(rng),
            self.sample(rng),
        )
    }
}

/// What the receiver reports at sample `t`:
/// `e^{j(φ(t) − φ(t − τ))}·H + W(t)`.
pub fn observe_channel(
    h_true: &JonesMatrix,
    seg: &SegmentParams,
    walk: &LaserWalk,
    t: usize,
    noise: &ReceiverNoise,
    rng: &mut Stream,
) -> JonesMatrix {
    let phi = walk.self_heterodyne(t, seg.tau_s);
    let h = if phi == 0.0 {
        *h_true
    } else {
        h_true.scale(Complex::from_polar(1.0, phi))
    };
    if noise.is_off() {
        h
    } else {
        h.add(&noise.sample_matrix(rng))
    }
}

/// θ(t) = θ0 plus a Gaussian random walk with step std `jitter·√dt`.
pub fn theta_trajectory(theta0: f64, cfg: &NoiseConfig, rng: &mut Stream) -> Vec<f64> {
    let mut out = vec![theta0; cfg.n_samples];
    if cfg.theta_jitter_rad_per_sqrt_s > 0.0 {
        let step = Normal::new(0.0, cfg.theta_jitter_rad_per_sqrt_s * cfg.dt_s.sqrt())
            .expect("finite std");
        for t in 1..out.len() {
            out[t] = out[t - 1] + step.sample(rng);
        }
    }
    out
}

//! Random fiber realizations and per-segment round-trip Jones matrices.
//!
//! A fiber of length `L` is cut into `N = floor(L / SR)` segments. Each
//! segment carries a random birefringence draw `(Θ, β, γ)`, a speckle phasor
//! `p` aggregating its scatterers, and its round-trip attenuation and delay.
//! The forward transmission of a segment is `U = D(β)·R(Θ)·D(γ)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jones::{Complex, JonesMatrix};
use crate::rng::{self, Purpose, Stream};

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub length_m: f64,
    /// Spatial resolution: fiber length represented by one segment.
    pub segment_length_m: f64,
    /// One-way power attenuation.
    pub alpha_db_per_km: f64,
    pub scatterers_per_segment: u32,
    pub group_index: f64,
}

impl Default for FiberSpec {
    fn default() -> Self {
        FiberSpec {
            length_m: 1_000.0,
            segment_length_m: 10.0,
            alpha_db_per_km: 0.2,
            scatterers_per_segment: 20,
            group_index: 1.468,
        }
    }
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.segment_length_m.is_finite() && self.segment_length_m > 0.0) {
            return bad(format!("segment_length_m must be > 0, got {}", self.segment_length_m));
        }
        if !(self.length_m.is_finite() && self.length_m >= self.segment_length_m) {
            return bad(format!(
                "length_m must be >= segment_length_m ({}), got {}",
                self.segment_length_m, self.length_m
            ));
        }
        if !(self.alpha_db_per_km.is_finite() && self.alpha_db_per_km >= 0.0) {
            return bad(format!("alpha_db_per_km must be >= 0, got {}", self.alpha_db_per_km));
        }
        if self.scatterers_per_segment < 1 {
            return bad("scatterers_per_segment must be >= 1".into());
        }
        if !(self.group_index.is_finite() && self.group_index > 1.0) {
            return bad(format!("group_index must be > 1, got {}", self.group_index));
        }
        Ok(())
    }

    pub fn segment_count(&self) -> usize {
        (self.length_m / self.segment_length_m).floor() as usize
    }

    /// Center of segment `index`.
    pub fn segment_center(&self, index: usize) -> f64 {
        (index as f64 + 0.5) * self.segment_length_m
    }

    pub fn round_trip_delay(&self, z_m: f64) -> f64 {
        2.0 * z_m * self.group_index / SPEED_OF_LIGHT
    }
}

/// Round-trip field amplitude after travelling to `z_m` and back.
pub fn round_trip_attenuation(alpha_db_per_km: f64, z_m: f64) -> f64 {
    10f64.powf(-alpha_db_per_km * (2.0 * z_m / 1000.0) / 20.0)
}

/// Θ from a uniform draw ξ ∈ [0, 1]. The resulting density of Θ on
/// `[0, π/2]` is `sin 2Θ`.
pub fn theta_cap_from_uniform(xi: f64) -> f64 {
    xi.clamp(0.0, 1.0).sqrt().asin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    /// Θ, in `[0, π/2]`.
    pub theta_cap: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Round-trip amplitude factor in `(0, 1]`.
    pub attenuation: f64,
    pub phasor: Complex,
    pub z_m: f64,
    pub tau_s: f64,
}

impl SegmentParams {
    /// A lossless, zero-delay segment with unit phasor.
    pub fn unit(theta_cap: f64, beta: f64, gamma: f64) -> Self {
        SegmentParams {
            theta_cap,
            beta,
            gamma,
            attenuation: 1.0,
            phasor: Complex::new(1.0, 0.0),
            z_m: 0.0,
            tau_s: 0.0,
        }
    }

    /// `A·p`, the complex backscatter amplitude of the segment.
    pub fn amplitude(&self) -> Complex {
        self.phasor * self.attenuation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberRealization {
    pub spec: FiberSpec,
    pub seed: u64,
    pub segments: Vec<SegmentParams>,
}

impl FiberRealization {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn max_delay(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.tau_s)
    }
}

/// Coherent sum of scatterers, normalized by `1/√K`.
pub fn phasor_from_scatterers(amplitudes: &[f64], phases: &[f64]) -> Result<Complex> {
    if amplitudes.is_empty() || amplitudes.len() != phases.len() {
        return Err(Error::invalid(
            "need at least one scatterer and matching amplitude/phase lists",
        ));
    }
    let sum: Complex = amplitudes
        .iter()
        .zip(phases)
        .map(|(&a, &phi)| Complex::from_polar(a, phi))
        .sum();
    Ok(sum / (amplitudes.len() as f64).sqrt())
}

/// Speckle phasor of `k` scatterers with Rayleigh(1/√2) amplitudes and
/// uniform phases, so that `E|p|² = 1`.
pub fn sample_phasor(k: u32, rng: &mut Stream) -> Result<Complex> {
    if k < 1 {
        return Err(Error::invalid("sample_phasor needs K >= 1"));
    }
    let phase = Uniform::new(-PI, PI).expect("valid range");
    let mut sum = Complex::new(0.0, 0.0);
    for _ in 0..k {
        // a² ~ Exp(1) is exactly a Rayleigh amplitude with scale 1/√2
        let power: f64 = Exp1.sample(rng);
        let phi = phase.sample(rng);
        sum += Complex::from_polar(power.sqrt(), phi);
    }
    Ok(sum / (k as f64).sqrt())
}

fn sample_segment(spec: &FiberSpec, seed: u64, index: usize) -> SegmentParams {
    let mut rng = rng::stream(seed, Purpose::Segment, index as u64);
    let angle = Uniform::new_inclusive(-PI, PI).expect("valid range");
    let xi: f64 = rng.random();
    let theta_cap = theta_cap_from_uniform(xi);
    let beta = angle.sample(&mut rng);
    let gamma = angle.sample(&mut rng);
    let phasor = sample_phasor(spec.scatterers_per_segment, &mut rng).expect("validated K");
    let z_m = spec.segment_center(index);
    SegmentParams {
        theta_cap,
        beta,
        gamma,
        attenuation: round_trip_attenuation(spec.alpha_db_per_km, z_m),
        phasor,
        z_m,
        tau_s: spec.round_trip_delay(z_m),
    }
}

/// Draws a fiber. Segment `i` uses its own counter-based stream, so the
/// result does not depend on thread scheduling.
pub fn sample_fiber(spec: &FiberSpec, seed: u64) -> Result<FiberRealization> {
    spec.validate()?;
    let segments = (0..spec.segment_count())
        .into_par_iter()
        .map(|i| sample_segment(spec, seed, i))
        .collect();
    Ok(FiberRealization {
        spec: spec.clone(),
        seed,
        segments,
    })
}

/// `U = D(β)·R(Θ)·D(γ)`.
pub fn forward_unitary(theta_cap: f64, beta: f64, gamma: f64) -> Result<JonesMatrix> {
    Ok(JonesMatrix::retarder(beta)?
        * JonesMatrix::rotation(theta_cap)?
        * JonesMatrix::retarder(gamma)?)
}

/// Round-trip Jones matrix of a segment seen through a TX/RX misalignment
/// rotation `R(θ)` applied on the launch side:
///
/// `H = A·p · Uᵀ · M · Ũ · R(θ)`, with `Ũ = M·U·M = D(β)·R(−Θ)·D(γ)`.
///
/// `Ũ` is the forward leg written in the mirrored frame of the returning
/// wave, where the rotation sense is reversed. Equivalently `H = A·p·Uᵀ·U·M·R(θ)`.
/// The X-launch column equals the first column of [`closed_form_matrix`];
/// the Y-launch column is its second column negated, and `det H = −(A·p)²`.
pub fn backscatter_matrix(seg: &SegmentParams, theta_mis: f64) -> Result<JonesMatrix> {
    let back = forward_unitary(seg.theta_cap, seg.beta, seg.gamma)?.transpose();
    let fwd = forward_unitary(-seg.theta_cap, seg.beta, seg.gamma)?;
    let h = back * JonesMatrix::mirror() * fwd * JonesMatrix::rotation(theta_mis)?;
    Ok(h.scale(seg.amplitude()))
}

/// Expanded segment matrix
///
/// `A·p·[[e^{j2γ}(cos2β + j sin2β cos2Θ), −j sin2β sin2Θ],
///       [−j sin2β sin2Θ, e^{−j2γ}(cos2β − j sin2β cos2Θ)]]`
///
/// evaluated term by term, without any matrix products.
pub fn closed_form_matrix(seg: &SegmentParams) -> JonesMatrix {
    let (s2b, c2b) = (2.0 * seg.beta).sin_cos();
    let (s2t, c2t) = (2.0 * seg.theta_cap).sin_cos();
    let j = Complex::i();
    let e2g = Complex::from_polar(1.0, 2.0 * seg.gamma);
    let off = -j * (s2b * s2t);
    let h_xx = e2g * (c2b + j * (s2b * c2t));
    let h_yy = e2g.conj() * (c2b - j * (s2b * c2t));
    let amp = seg.amplitude();
    JonesMatrix::from_raw(h_xx * amp, off * amp, off * amp, h_yy * amp)
}

//! Phase estimators for the three probing schemes and the trace builder
//! that turns channel observations into unwrapped phase time series.
//!
//! * MIMO: `½·∠det H`, defined modulo π.
//! * SIMO: `∠(h_xx + h_yx)`, the coherent sum of the X-launch column.
//! * SISO: `∠h_xx`.
//!
//! Every estimate carries a fading flag set when the estimator operand is
//! below a magnitude floor; the value is still returned.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{backscatter_matrix, FiberRealization, SegmentParams};
use crate::jones::{Complex, JonesMatrix};
use crate::noise::{observe_channel, LaserWalk, NoiseConfig, ReceiverNoise};
use crate::rng::{self, Purpose};

/// Fading floor relative to the segment's expected amplitude.
pub const FLOOR_RATIO: f64 = 1e-3;

/// Fraction of flagged samples above which a segment is unreliable.
pub const UNRELIABLE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeScheme {
    Siso,
    Simo,
    Mimo,
}

impl ProbeScheme {
    pub const ALL: [ProbeScheme; 3] = [ProbeScheme::Siso, ProbeScheme::Simo, ProbeScheme::Mimo];

    pub fn name(self) -> &'static str {
        match self {
            ProbeScheme::Siso => "siso",
            ProbeScheme::Simo => "simo",
            ProbeScheme::Mimo => "mimo",
        }
    }

    /// Unwrapping modulus of the scheme's phase.
    pub fn modulus(self) -> f64 {
        match self {
            ProbeScheme::Mimo => PI,
            _ => 2.0 * PI,
        }
    }
}

impl fmt::Display for ProbeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "siso" => Ok(ProbeScheme::Siso),
            "simo" => Ok(ProbeScheme::Simo),
            "mimo" => Ok(ProbeScheme::Mimo),
            other => Err(Error::invalid(format!(
                "unknown probe scheme `{other}` (expected siso, simo or mimo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub value: f64,
    pub flagged: bool,
}

/// `½·∠det H` in `(−π/2, π/2]`. Flagged when `|det H| < floor²`.
pub fn phase_mimo(h: &JonesMatrix, floor: f64) -> PhaseEstimate {
    let det = h.determinant();
    let half = 0.5 * det.arg();
    PhaseEstimate {
        // a negative zero imaginary part would otherwise land on -π/2
        value: if half <= -FRAC_PI_2 { half + PI } else { half },
        flagged: det.norm() < floor * floor,
    }
}

/// `∠(h_xx + h_yx)`, i.e. `atan2(ℑxx + ℑyx, ℜxx + ℜyx)`.
pub fn phase_simo(h_xx: Complex, h_yx: Complex, floor: f64) -> PhaseEstimate {
    let sum = h_xx + h_yx;
    PhaseEstimate {
        value: sum.im.atan2(sum.re),
        flagged: sum.norm() < floor,
    }
}

pub fn phase_siso(h_xx: Complex, floor: f64) -> PhaseEstimate {
    PhaseEstimate {
        value: h_xx.arg(),
        flagged: h_xx.norm() < floor,
    }
}

/// Closed-form SIMO phase of a segment,
/// `∠(p·(e^{j2γ}cos2β − j sin2β·(e^{j2γ}cos2Θ + sin2Θ)))`.
///
/// This is the assembled column sum with the signs of β and Θ reversed:
/// `simo_closed_form(Θ, β, γ) = ∠(h_xx + h_yx)(−Θ, −β, γ)`.
pub fn simo_closed_form(seg: &SegmentParams) -> PhaseEstimate {
    let (s2b, c2b) = (2.0 * seg.beta).sin_cos();
    let (s2t, c2t) = (2.0 * seg.theta_cap).sin_cos();
    let j = Complex::i();
    let e2g = Complex::from_polar(1.0, 2.0 * seg.gamma);
    let operand = seg.phasor * (e2g * c2b - j * s2b * (e2g * c2t + s2t));
    PhaseEstimate {
        value: operand.arg(),
        flagged: operand.norm() < FLOOR_RATIO,
    }
}

/// Removes jumps: every consecutive difference is brought into
/// `(−modulus/2, modulus/2]` by adding a multiple of `modulus`.
pub fn unwrap(values: &[f64], modulus: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let Some(&first) = values.first() else {
        return out;
    };
    out.push(first);
    let mut acc = first;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        acc += d - modulus * ((d - modulus / 2.0) / modulus).ceil();
        out.push(acc);
    }
    out
}

/// Which launch column the single-input schemes read (0 = X, 1 = Y).
/// SISO reads the co-polarized entry of that column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimatorOptions {
    pub launch_column: usize,
}

/// Applies `scheme` to one observation.
pub fn estimate(scheme: ProbeScheme, h: &JonesMatrix, floor: f64, opts: EstimatorOptions) -> PhaseEstimate {
    let col = h.column(opts.launch_column);
    match scheme {
        ProbeScheme::Mimo => phase_mimo(h, floor),
        ProbeScheme::Simo => phase_simo(col[0], col[1], floor),
        ProbeScheme::Siso => phase_siso(col[opts.launch_column], floor),
    }
}

/// Unwrapped phase time series, `values[segment][time]` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub scheme: ProbeScheme,
    pub n_segments: usize,
    pub n_samples: usize,
    pub dt_s: f64,
    pub z_m: Vec<f64>,
    pub values: Vec<f64>,
    pub fading_flags: Vec<bool>,
    pub unreliable: Vec<bool>,
}

impl PhaseTrace {
    pub fn from_rows(
        scheme: ProbeScheme,
        dt_s: f64,
        z_m: Vec<f64>,
        rows: Vec<(Vec<f64>, Vec<bool>)>,
    ) -> Result<Self> {
        let n_segments = rows.len();
        let n_samples = rows.first().map_or(0, |r| r.0.len());
        if z_m.len() != n_segments
            || rows.iter().any(|(v, f)| v.len() != n_samples || f.len() != n_samples)
        {
            return Err(Error::invalid("phase trace rows have inconsistent lengths"));
        }
        let unreliable = rows
            .iter()
            .map(|(_, f)| {
                let flagged = f.iter().filter(|&&x| x).count();
                n_samples > 0 && flagged as f64 > UNRELIABLE_FRACTION * n_samples as f64
            })
            .collect();
        let mut values = Vec::with_capacity(n_segments * n_samples);
        let mut fading_flags = Vec::with_capacity(n_segments * n_samples);
        for (v, f) in rows {
            values.extend(v);
            fading_flags.extend(f);
        }
        Ok(PhaseTrace {
            scheme,
            n_segments,
            n_samples,
            dt_s,
            z_m,
            values,
            fading_flags,
            unreliable,
        })
    }

    pub fn row(&self, segment: usize) -> &[f64] {
        &self.values[segment * self.n_samples..(segment + 1) * self.n_samples]
    }

    pub fn flags(&self, segment: usize) -> &[bool] {
        &self.fading_flags[segment * self.n_samples..(segment + 1) * self.n_samples]
    }
}

/// Anything that can hand out per-segment channel observations over time.
pub trait ChannelSource: Sync {
    fn n_segments(&self) -> usize;
    fn n_samples(&self) -> usize;
    fn dt_s(&self) -> f64;
    fn z_m(&self, segment: usize) -> f64;
    /// Expected amplitude scale of the segment; the fading floor is
    /// `FLOOR_RATIO` times this.
    fn amplitude_scale(&self, segment: usize) -> f64;
    /// Errors when the source lacks the coefficients `scheme` consumes.
    fn supports(&self, scheme: ProbeScheme, opts: EstimatorOptions) -> Result<()>;
    fn observations(&self, segment: usize) -> Vec<JonesMatrix>;
}

/// Simulated observations of one fiber realization under one laser walk and
/// one θ(t) trajectory. Receiver noise of segment `i` comes from stream
/// `(noise_seed, Receiver, i)`, so every scheme sees the same observations.
pub struct SimulatedChannel<'a> {
    pub fiber: &'a FiberRealization,
    pub walk: &'a LaserWalk,
    pub theta: &'a [f64],
    pub noise: &'a NoiseConfig,
    pub noise_seed: u64,
}

impl SimulatedChannel<'_> {
    fn theta_is_constant(&self) -> bool {
        self.theta.windows(2).all(|w| w[0] == w[1])
    }
}

impl ChannelSource for SimulatedChannel<'_> {
    fn n_segments(&self) -> usize {
        self.fiber.len()
    }

    fn n_samples(&self) -> usize {
        self.noise.n_samples
    }

    fn dt_s(&self) -> f64 {
        self.noise.dt_s
    }

    fn z_m(&self, segment: usize) -> f64 {
        self.fiber.segments[segment].z_m
    }

    fn amplitude_scale(&self, segment: usize) -> f64 {
        self.fiber.segments[segment].attenuation
    }

    fn supports(&self, _scheme: ProbeScheme, _opts: EstimatorOptions) -> Result<()> {
        Ok(())
    }

    fn observations(&self, segment: usize) -> Vec<JonesMatrix> {
        let seg = &self.fiber.segments[segment];
        let noise = ReceiverNoise::new(self.noise);
        let mut rng = rng::stream(self.noise_seed, Purpose::Receiver, segment as u64);
        let n = self.noise.n_samples;
        if self.theta_is_constant() {
            let h = backscatter_matrix(seg, self.theta[0]).expect("finite segment");
            (0..n)
                .map(|t| observe_channel(&h, seg, self.walk, t, &noise, &mut rng))
                .collect()
        } else {
            (0..n)
                .map(|t| {
                    let h = backscatter_matrix(seg, self.theta[t]).expect("finite segment");
                    observe_channel(&h, seg, self.walk, t, &noise, &mut rng)
                })
                .collect()
        }
    }
}

/// Estimates and unwraps one observation row for one scheme.
pub fn phase_row(
    scheme: ProbeScheme,
    obs: &[JonesMatrix],
    floor: f64,
    opts: EstimatorOptions,
) -> (Vec<f64>, Vec<bool>) {
    let (raw, flags): (Vec<f64>, Vec<bool>) = obs
        .iter()
        .map(|h| {
            let e = estimate(scheme, h, floor, opts);
            (e.value, e.flagged)
        })
        .unzip();
    (unwrap(&raw, scheme.modulus()), flags)
}

/// Builds one trace per requested scheme. Segments are processed in
/// parallel; each segment's observations are generated once and shared by
/// all schemes.
pub fn estimate_traces<S: ChannelSource>(
    source: &S,
    schemes: &[ProbeScheme],
    opts: EstimatorOptions,
) -> Result<Vec<PhaseTrace>> {
    if opts.launch_column > 1 {
        return Err(Error::invalid("launch column must be 0 (X) or 1 (Y)"));
    }
    for &s in schemes {
        source.supports(s, opts)?;
    }
    let rows: Vec<Vec<(Vec<f64>, Vec<bool>)>> = (0..source.n_segments())
        .into_par_iter()
        .map(|i| {
            let obs = source.observations(i);
            let floor = FLOOR_RATIO * source.amplitude_scale(i);
            schemes.iter().map(|&s| phase_row(s, &obs, floor, opts)).collect()
        })
        .collect();
    let z: Vec<f64> = (0..source.n_segments()).map(|i| source.z_m(i)).collect();
    let mut per_scheme: Vec<Vec<(Vec<f64>, Vec<bool>)>> =
        schemes.iter().map(|_| Vec::with_capacity(rows.len())).collect();
    for seg_rows in rows {
        for (k, r) in seg_rows.into_iter().enumerate() {
            per_scheme[k].push(r);
        }
    }
    schemes
        .iter()
        .zip(per_scheme)
        .map(|(&s, rows)| PhaseTrace::from_rows(s, source.dt_s(), z.clone(), rows))
        .collect()
}

pub fn estimate_trace<S: ChannelSource>(
    source: &S,
    scheme: ProbeScheme,
    opts: EstimatorOptions,
) -> Result<PhaseTrace> {
    Ok(estimate_traces(source, &[scheme], opts)?.remove(0))
}

/// Folds an angle into `(−π/2, π/2]`.
pub fn wrap_half_pi(x: f64) -> f64 {
    x - PI * ((x - FRAC_PI_2) / PI).ceil()
}

/// Folds an angle into `(−π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    x - 2.0 * PI * ((x - PI) / (2.0 * PI)).ceil()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{closed_form_matrix, sample_phasor, theta_cap_from_uniform, FiberSpec};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_4;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_segment(r: &mut crate::rng::Stream) -> SegmentParams {
        SegmentParams {
            theta_cap: theta_cap_from_uniform(r.random()),
            beta: r.random_range(-PI..=PI),
            gamma: r.random_range(-PI..=PI),
            attenuation: r.random_range(0.05..=1.0),
            phasor: sample_phasor(20, r).unwrap(),
            z_m: 0.0,
            tau_s: 0.0,
        }
    }

    #[test]
    fn mimo_examples() {
        assert!((phase_mimo(&JonesMatrix::mirror(), 0.0).value - FRAC_PI_2).abs() < TOL);
        assert_eq!(phase_mimo(&JonesMatrix::IDENTITY, 0.0).value, 0.0);

        let mut r = rng::stream(1, Purpose::Segment, 0);
        for _ in 0..1000 {
            let seg = random_segment(&mut r);
            let theta = r.random_range(-PI..PI);
            let h = backscatter_matrix(&seg, theta).unwrap();
            let got = phase_mimo(&h, 0.0).value;
            let want = wrap_half_pi(seg.phasor.arg() + FRAC_PI_2);
            assert!(wrap_half_pi(got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn simo_examples() {
        assert!((phase_simo(c(1.0, 0.0), c(0.0, 1.0), 1e-3).value - FRAC_PI_4).abs() < TOL);
        assert!(phase_simo(c(1.0, 0.0), c(-1.0, 0.0), 1e-3).flagged);
    }

    #[test]
    fn siso_examples() {
        assert!((phase_siso(Complex::from_polar(1.0, 0.3), 1e-3).value - 0.3).abs() < TOL);
        assert!((phase_siso(c(-1.0, 0.0), 1e-3).value - PI).abs() < TOL);
        let null = SegmentParams::unit(FRAC_PI_4, FRAC_PI_4, 0.0);
        let h = backscatter_matrix(&null, 0.0).unwrap();
        assert!(phase_siso(h.xx(), FLOOR_RATIO).flagged);
    }

    #[test]
    fn simo_closed_form_examples() {
        let seg = SegmentParams {
            phasor: Complex::from_polar(0.8, 0.4),
            ..SegmentParams::unit(0.6, 0.0, 1.1)
        };
        let want = (seg.phasor * Complex::from_polar(1.0, 2.2)).arg();
        assert!((simo_closed_form(&seg).value - want).abs() < TOL);

        let seg = SegmentParams {
            theta_cap: 0.0,
            beta: 0.3,
            gamma: 0.0,
            ..seg
        };
        let want = wrap_pi(seg.phasor.arg() - 0.6);
        assert!(wrap_pi(simo_closed_form(&seg).value - want).abs() < TOL);
    }

    #[test]
    fn simo_closed_form_is_column_sum_with_reversed_angles() {
        let mut r = rng::stream(2, Purpose::Segment, 0);
        for _ in 0..10_000 {
            let seg = random_segment(&mut r);
            let mirrored = SegmentParams {
                theta_cap: -seg.theta_cap,
                beta: -seg.beta,
                ..seg
            };
            let h = closed_form_matrix(&mirrored);
            let from_matrix = phase_simo(h.xx(), h.yx(), 0.0).value;
            assert!(wrap_pi(from_matrix - simo_closed_form(&seg).value).abs() < 1e-9);
        }
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap(&[0.1, 0.2, 0.3], 2.0 * PI), vec![0.1, 0.2, 0.3]);
        let u = unwrap(&[3.1, -3.1], 2.0 * PI);
        assert_eq!(u[0], 3.1);
        assert!((u[1] - (-3.1 + 2.0 * PI)).abs() < TOL);
        assert!(unwrap(&[], PI).is_empty());

        let ramp: Vec<f64> = (0..200).map(|t| 0.4 * t as f64).collect();
        let wrapped: Vec<f64> = ramp.iter().map(|&x| wrap_half_pi(x)).collect();
        let back = unwrap(&wrapped, PI);
        for (a, b) in ramp.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0) * 10.0);
        }
    }

    proptest! {
        #[test]
        fn unwrapped_steps_are_bounded(xs in prop::collection::vec(-10.0..10.0f64, 2..50), m in prop_oneof![Just(PI), Just(2.0 * PI)]) {
            let u = unwrap(&xs, m);
            for w in u.windows(2) {
                let d = w[1] - w[0];
                prop_assert!(d > -m / 2.0 - 1e-9 && d <= m / 2.0 + 1e-9);
            }
        }

        #[test]
        fn mimo_ignores_misalignment(seed in 0u64..1000, theta in -PI..PI) {
            let mut r = rng::stream(seed, Purpose::Segment, 0);
            let seg = random_segment(&mut r);
            let h = backscatter_matrix(&seg, 0.0).unwrap();
            let rotated = h * JonesMatrix::rotation(theta).unwrap();
            let d = phase_mimo(&rotated, 0.0).value - phase_mimo(&h, 0.0).value;
            prop_assert!(wrap_half_pi(d).abs() < TOL);
        }

        #[test]
        fn global_phase_equivariance(seed in 0u64..1000, psi in -PI..PI) {
            let mut r = rng::stream(seed, Purpose::Segment, 1);
            let seg = random_segment(&mut r);
            let h = backscatter_matrix(&seg, r.random_range(-PI..PI)).unwrap();
            let g = h.scale(Complex::from_polar(1.0, psi));
            let dm = phase_mimo(&g, 0.0).value - phase_mimo(&h, 0.0).value;
            prop_assert!(wrap_half_pi(dm - psi).abs() < 1e-9);
            let ds = phase_simo(g.xx(), g.yx(), 0.0).value - phase_simo(h.xx(), h.yx(), 0.0).value;
            prop_assert!(wrap_pi(ds - psi).abs() < 1e-9);
            let di = phase_siso(g.xx(), 0.0).value - phase_siso(h.xx(), 0.0).value;
            prop_assert!(wrap_pi(di - psi).abs() < 1e-9);
        }

        #[test]
        fn estimators_ignore_positive_scaling(seed in 0u64..1000, s in 0.01..100.0f64) {
            let mut r = rng::stream(seed, Purpose::Segment, 2);
            let seg = random_segment(&mut r);
            let h = backscatter_matrix(&seg, 0.3).unwrap();
            let g = h.scale(c(s, 0.0));
            for scheme in ProbeScheme::ALL {
                let a = estimate(scheme, &h, 0.0, EstimatorOptions::default()).value;
                let b = estimate(scheme, &g, 0.0, EstimatorOptions::default()).value;
                prop_assert!(wrap_pi(a - b).abs() < 1e-9);
            }
        }
    }

    fn fiber_with(seg: SegmentParams) -> FiberRealization {
        FiberRealization {
            spec: FiberSpec::default(),
            seed: 0,
            segments: vec![seg],
        }
    }

    #[test]
    fn static_fiber_gives_constant_traces() {
        let spec = FiberSpec {
            length_m: 200.0,
            ..FiberSpec::default()
        };
        let fiber = crate::fiber::sample_fiber(&spec, 4).unwrap();
        let cfg = NoiseConfig::noiseless(64);
        let walk = LaserWalk::generate(0.0, cfg.dt_s, 64, fiber.max_delay(), &mut rng::stream(0, Purpose::Laser, 0)).unwrap();
        let theta = vec![0.7; 64];
        let src = SimulatedChannel { fiber: &fiber, walk: &walk, theta: &theta, noise: &cfg, noise_seed: 1 };
        for tr in estimate_traces(&src, &ProbeScheme::ALL, EstimatorOptions::default()).unwrap() {
            for i in 0..tr.n_segments {
                let row = tr.row(i);
                assert!(row.iter().all(|&v| v == row[0]));
            }
        }
    }

    #[test]
    fn mimo_trace_is_misalignment_free() {
        let spec = FiberSpec {
            length_m: 300.0,
            ..FiberSpec::default()
        };
        let fiber = crate::fiber::sample_fiber(&spec, 5).unwrap();
        let cfg = NoiseConfig {
            n_samples: 256,
            snr_db: f64::INFINITY,
            ..NoiseConfig::default()
        };
        let walk = LaserWalk::generate(cfg.linewidth_hz, cfg.dt_s, 256, fiber.max_delay(), &mut rng::stream(0, Purpose::Laser, 0)).unwrap();
        let trace = |theta: f64| {
            let t = vec![theta; 256];
            let src = SimulatedChannel { fiber: &fiber, walk: &walk, theta: &t, noise: &cfg, noise_seed: 9 };
            estimate_trace(&src, ProbeScheme::Mimo, EstimatorOptions::default()).unwrap()
        };
        let a = trace(0.0);
        let b = trace(1.0);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn siso_null_segment_is_unreliable() {
        let seg = SegmentParams::unit(FRAC_PI_4, FRAC_PI_4, 0.2);
        let fiber = fiber_with(seg);
        let cfg = NoiseConfig::noiseless(32);
        let walk = LaserWalk::generate(0.0, cfg.dt_s, 32, 0.0, &mut rng::stream(0, Purpose::Laser, 0)).unwrap();
        let theta = vec![0.0; 32];
        let src = SimulatedChannel { fiber: &fiber, walk: &walk, theta: &theta, noise: &cfg, noise_seed: 0 };
        let tr = estimate_trace(&src, ProbeScheme::Siso, EstimatorOptions::default()).unwrap();
        assert!(tr.unreliable[0]);
        assert!(tr.flags(0).iter().all(|&f| f));
        let mimo = estimate_trace(&src, ProbeScheme::Mimo, EstimatorOptions::default()).unwrap();
        assert!(!mimo.unreliable[0]);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in ProbeScheme::ALL {
            assert_eq!(s.name().parse::<ProbeScheme>().unwrap(), s);
        }
        assert!("quad".parse::<ProbeScheme>().is_err());
    }
}

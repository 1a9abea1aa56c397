//! Detection metric: per-segment standard deviation over time of the
//! differential phase, and its Monte-Carlo mean.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{PhaseTrace, ProbeScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffMode {
    /// Lag-1 difference along time.
    #[default]
    Temporal,
    /// Difference against the previous segment at the same time.
    Spatial,
    None,
}

impl DiffMode {
    pub fn name(self) -> &'static str {
        match self {
            DiffMode::Temporal => "temporal",
            DiffMode::Spatial => "spatial",
            DiffMode::None => "none",
        }
    }
}

impl fmt::Display for DiffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "temporal" => Ok(DiffMode::Temporal),
            "spatial" => Ok(DiffMode::Spatial),
            "none" => Ok(DiffMode::None),
            other => Err(Error::invalid(format!(
                "unknown diff mode `{other}` (expected temporal, spatial or none)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdvProfile {
    pub scheme: ProbeScheme,
    pub diff_mode: DiffMode,
    pub z_m: Vec<f64>,
    pub per_segment_stdv: Vec<f64>,
    pub unreliable_mask: Vec<bool>,
}

impl StdvProfile {
    pub fn len(&self) -> usize {
        self.per_segment_stdv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_segment_stdv.is_empty()
    }
}

/// Temporal: `out[i][t] = in[i][t] − in[i][t−1]`, one sample shorter.
/// Spatial: `out[i][t] = in[i][t] − in[i−1][t]`; segment 0 has no
/// predecessor and is passed through unchanged. Flags are OR-ed over the
/// two samples involved.
pub fn differential(trace: &PhaseTrace, mode: DiffMode) -> Result<PhaseTrace> {
    match mode {
        DiffMode::None => Ok(trace.clone()),
        DiffMode::Temporal => {
            if trace.n_samples < 2 {
                return Err(Error::invalid("temporal differencing needs at least 2 samples"));
            }
            let rows = (0..trace.n_segments)
                .map(|i| {
                    let v = trace.row(i);
                    let f = trace.flags(i);
                    (
                        v.windows(2).map(|w| w[1] - w[0]).collect(),
                        f.windows(2).map(|w| w[0] || w[1]).collect(),
                    )
                })
                .collect();
            let mut out = PhaseTrace::from_rows(trace.scheme, trace.dt_s, trace.z_m.clone(), rows)?;
            out.unreliable = trace.unreliable.clone();
            Ok(out)
        }
        DiffMode::Spatial => {
            if trace.n_segments < 2 {
                return Err(Error::invalid("spatial differencing needs at least 2 segments"));
            }
            let rows = (0..trace.n_segments)
                .map(|i| {
                    if i == 0 {
                        return (trace.row(0).to_vec(), trace.flags(0).to_vec());
                    }
                    let (a, b) = (trace.row(i - 1), trace.row(i));
                    let (fa, fb) = (trace.flags(i - 1), trace.flags(i));
                    (
                        b.iter().zip(a).map(|(y, x)| y - x).collect(),
                        fb.iter().zip(fa).map(|(y, x)| *y || *x).collect(),
                    )
                })
                .collect();
            let mut out = PhaseTrace::from_rows(trace.scheme, trace.dt_s, trace.z_m.clone(), rows)?;
            out.unreliable = trace.unreliable.clone();
            Ok(out)
        }
    }
}

/// Sample standard deviation (n − 1 denominator). Zero for fewer than two values.
pub fn sample_std(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n < 2 {
        return 0.0;
    }
    let mean = sum / n as f64;
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Per-segment standard deviation over time. With `strict`, flagged
/// samples are excluded; a segment left with fewer than two samples gets
/// value 0 and is marked unreliable.
pub fn temporal_stdv(trace: &PhaseTrace, diff_mode: DiffMode, strict: bool) -> Result<StdvProfile> {
    if trace.n_samples < 2 {
        return Err(Error::invalid("standard deviation over time needs at least 2 samples"));
    }
    let mut unreliable_mask = trace.unreliable.clone();
    let per_segment_stdv = (0..trace.n_segments)
        .map(|i| {
            let v = trace.row(i);
            if strict {
                let kept = v.iter().zip(trace.flags(i)).filter(|(_, &f)| !f).map(|(x, _)| *x);
                if kept.clone().count() < 2 {
                    unreliable_mask[i] = true;
                    return 0.0;
                }
                sample_std(kept)
            } else {
                sample_std(v.iter().copied())
            }
        })
        .collect();
    Ok(StdvProfile {
        scheme: trace.scheme,
        diff_mode,
        z_m: trace.z_m.clone(),
        per_segment_stdv,
        unreliable_mask,
    })
}

/// `differential` followed by `temporal_stdv`.
pub fn stdv_profile(trace: &PhaseTrace, mode: DiffMode, strict: bool) -> Result<StdvProfile> {
    temporal_stdv(&differential(trace, mode)?, mode, strict)
}

/// Per-segment arithmetic mean; unreliable masks are OR-reduced.
pub fn aggregate_mean(profiles: &[StdvProfile]) -> Result<StdvProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::invalid("aggregate_mean needs at least one profile"))?;
    for p in profiles {
        if p.scheme != first.scheme || p.diff_mode != first.diff_mode {
            return Err(Error::invalid("cannot average profiles of different schemes or diff modes"));
        }
        if p.len() != first.len() {
            return Err(Error::invalid("cannot average profiles of different lengths"));
        }
    }
    let n = profiles.len() as f64;
    let per_segment_stdv = (0..first.len())
        .map(|i| profiles.iter().map(|p| p.per_segment_stdv[i]).sum::<f64>() / n)
        .collect();
    let unreliable_mask = (0..first.len())
        .map(|i| profiles.iter().any(|p| p.unreliable_mask[i]))
        .collect();
    Ok(StdvProfile {
        scheme: first.scheme,
        diff_mode: first.diff_mode,
        z_m: first.z_m.clone(),
        per_segment_stdv,
        unreliable_mask,
    })
}

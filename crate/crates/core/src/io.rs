//! CSV tables and measured channel records.
//!
//! Headers are frozen:
//!
//! | table               | header                                                              |
//! |---------------------|---------------------------------------------------------------------|
//! | fiber realization   | `index,z_m,theta_cap,beta,gamma,attenuation,phasor_re,phasor_im,tau_s` |
//! | phase trace         | `segment,time,value,flag`                                           |
//! | StDv profile        | `segment,z_m,stdv_rad,unreliable`                                   |
//! | misalignment sweep  | `theta_rad,scheme,stdv_rad`                                         |
//! | Θ sweep             | `theta_cap_rad,re_sum,im_sum,stdv_simo_rad`                         |
//! | measured record     | `segment,time` then `h_xx_re,h_xx_im,h_xy_re,h_xy_im,h_yx_re,h_yx_im,h_yy_re,h_yy_im` or any subset of the pairs, in that order |
//!
//! Booleans are written `0`/`1`. Floats use the shortest representation
//! that parses back to the same value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{ChannelSource, EstimatorOptions, PhaseTrace, ProbeScheme};
use crate::experiments::{ThetaCapSweep, ThetaSweep};
use crate::fiber::{FiberRealization, FiberSpec};
use crate::jones::{Complex, JonesMatrix};
use crate::metrics::StdvProfile;

pub const FIBER_HEADER: &str = "index,z_m,theta_cap,beta,gamma,attenuation,phasor_re,phasor_im,tau_s";
pub const TRACE_HEADER: &str = "segment,time,value,flag";
pub const PROFILE_HEADER: &str = "segment,z_m,stdv_rad,unreliable";
pub const THETA_SWEEP_HEADER: &str = "theta_rad,scheme,stdv_rad";
pub const THETA_CAP_SWEEP_HEADER: &str = "theta_cap_rad,re_sum,im_sum,stdv_simo_rad";

fn bit(b: bool) -> u8 {
    b as u8
}

pub fn fiber_csv(fiber: &FiberRealization) -> String {
    let mut out = format!("{FIBER_HEADER}\n");
    for (i, s) in fiber.segments.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{}",
            s.z_m, s.theta_cap, s.beta, s.gamma, s.attenuation, s.phasor.re, s.phasor.im, s.tau_s
        );
    }
    out
}

pub fn trace_csv(trace: &PhaseTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for i in 0..trace.n_segments {
        for (t, (v, f)) in trace.row(i).iter().zip(trace.flags(i)).enumerate() {
            let _ = writeln!(out, "{i},{t},{v},{}", bit(*f));
        }
    }
    out
}

pub fn profile_csv(profile: &StdvProfile) -> String {
    let mut out = format!("{PROFILE_HEADER}\n");
    for (i, ((z, s), u)) in profile
        .z_m
        .iter()
        .zip(&profile.per_segment_stdv)
        .zip(&profile.unreliable_mask)
        .enumerate()
    {
        let _ = writeln!(out, "{i},{z},{s},{}", bit(*u));
    }
    out
}

pub fn theta_sweep_csv(sweep: &ThetaSweep) -> String {
    let mut out = format!("{THETA_SWEEP_HEADER}\n");
    for r in &sweep.rows {
        let _ = writeln!(out, "{},{},{}", r.theta_mis, r.scheme, r.stdv);
    }
    out
}

pub fn theta_cap_sweep_csv(sweep: &ThetaCapSweep) -> String {
    let mut out = format!("{THETA_CAP_SWEEP_HEADER}\n");
    for r in &sweep.rows {
        let _ = writeln!(out, "{},{},{},{}", r.theta_cap, r.re_sum, r.im_sum, r.stdv_simo);
    }
    out
}

/// Parses a StDv profile table back (scheme and diff mode are not stored).
pub fn parse_profile_csv(text: &str) -> Result<Vec<(usize, f64, f64, bool)>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::data(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != PROFILE_HEADER {
        return Err(Error::data(format!("expected header `{PROFILE_HEADER}`")));
    }
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| Error::data(e.to_string()))?;
            let f = |k: usize| r[k].parse::<f64>().map_err(|e| Error::data(format!("{e}: `{}`", &r[k])));
            let seg = r[0].parse::<usize>().map_err(|e| Error::data(e.to_string()))?;
            Ok((seg, f(1)?, f(2)?, &r[3] == "1"))
        })
        .collect()
}

/// One Jones-matrix entry as stored in a measured record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Coefficient {
    Xx,
    Xy,
    Yx,
    Yy,
}

impl Coefficient {
    pub const ALL: [Coefficient; 4] = [Coefficient::Xx, Coefficient::Xy, Coefficient::Yx, Coefficient::Yy];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::Xx => "h_xx",
            Coefficient::Xy => "h_xy",
            Coefficient::Yx => "h_yx",
            Coefficient::Yy => "h_yy",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Entries a scheme consumes for the given launch column.
    pub fn required(scheme: ProbeScheme, opts: EstimatorOptions) -> Vec<Coefficient> {
        let col = opts.launch_column;
        let column = if col == 0 {
            [Coefficient::Xx, Coefficient::Yx]
        } else {
            [Coefficient::Xy, Coefficient::Yy]
        };
        match scheme {
            ProbeScheme::Mimo => Coefficient::ALL.to_vec(),
            ProbeScheme::Simo => column.to_vec(),
            ProbeScheme::Siso => vec![column[col]],
        }
    }
}

fn entry(h: &JonesMatrix, c: Coefficient) -> Complex {
    match c {
        Coefficient::Xx => h.xx(),
        Coefficient::Xy => h.xy(),
        Coefficient::Yx => h.yx(),
        Coefficient::Yy => h.yy(),
    }
}

pub fn measured_header(coefficients: &[Coefficient]) -> String {
    let mut header = String::from("segment,time");
    for c in coefficients {
        let _ = write!(header, ",{0}_re,{0}_im", c.name());
    }
    header
}

/// Writes every observation of `source` as a measured record carrying the
/// listed entries (sorted into canonical order).
pub fn measured_csv<S: ChannelSource>(source: &S, coefficients: &[Coefficient]) -> String {
    let mut coefficients = coefficients.to_vec();
    coefficients.sort();
    coefficients.dedup();
    let mut out = measured_header(&coefficients);
    out.push('\n');
    for i in 0..source.n_segments() {
        for (t, h) in source.observations(i).iter().enumerate() {
            let _ = write!(out, "{i},{t}");
            for &c in &coefficients {
                let v = entry(h, c);
                let _ = write!(out, ",{},{}", v.re, v.im);
            }
            out.push('\n');
        }
    }
    out
}

/// Channel estimates read from a measured record, densified to
/// `[segment][time]`. Absent entries are stored as zero and refused by
/// [`ChannelSource::supports`].
#[derive(Debug, Clone)]
pub struct MeasuredChannels {
    n_segments: usize,
    n_samples: usize,
    present: [bool; 4],
    data: Vec<JonesMatrix>,
    dt_s: f64,
    z_m: Vec<f64>,
    scale: Vec<f64>,
}

impl MeasuredChannels {
    pub fn present(&self) -> Vec<Coefficient> {
        Coefficient::ALL.into_iter().filter(|c| self.present[c.index()]).collect()
    }

    /// Schemes this file can feed for the given launch column.
    pub fn compatible_schemes(&self, opts: EstimatorOptions) -> Vec<ProbeScheme> {
        ProbeScheme::ALL
            .into_iter()
            .filter(|&s| self.supports(s, opts).is_ok())
            .collect()
    }
}

fn list_segments(ids: &[usize]) -> String {
    let shown: Vec<String> = ids.iter().take(10).map(|i| i.to_string()).collect();
    if ids.len() > 10 {
        format!("{} and {} more", shown.join(", "), ids.len() - 10)
    } else {
        shown.join(", ")
    }
}

/// Parses a measured record. Segment `i` sits at the center of the `i`-th
/// slice of `spec`; time index `t` at `t·dt_s`.
pub fn parse_measured(text: &str, spec: &FiberSpec, dt_s: f64) -> Result<MeasuredChannels> {
    if !(dt_s.is_finite() && dt_s > 0.0) {
        return Err(Error::invalid(format!("dt_s must be > 0, got {dt_s}")));
    }
    if text.trim().is_empty() {
        return Err(Error::data("measured record is empty"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("bad header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 || header[0] != "segment" || header[1] != "time" {
        return Err(Error::data("measured record must start with columns `segment,time`"));
    }
    let mut present = [false; 4];
    let mut columns = Vec::new();
    let rest = &header[2..];
    if rest.is_empty() || !rest.len().is_multiple_of(2) {
        return Err(Error::data("measured record needs `_re,_im` column pairs after `segment,time`"));
    }
    for pair in rest.chunks(2) {
        let c = Coefficient::ALL
            .into_iter()
            .find(|c| pair[0] == format!("{}_re", c.name()) && pair[1] == format!("{}_im", c.name()))
            .ok_or_else(|| Error::data(format!("unexpected columns `{},{}`", pair[0], pair[1])))?;
        if present[c.index()] || columns.last().is_some_and(|&last| last > c) {
            return Err(Error::data(format!("column `{}` repeated or out of order", c.name())));
        }
        present[c.index()] = true;
        columns.push(c);
    }

    let mut rows: BTreeMap<usize, BTreeMap<usize, JonesMatrix>> = BTreeMap::new();
    for (line, rec) in reader.records().enumerate() {
        let line = line + 2;
        let rec = rec.map_err(|e| Error::data(format!("line {line}: {e}")))?;
        if rec.len() != header.len() {
            return Err(Error::data(format!(
                "line {line}: {} fields, header has {}",
                rec.len(),
                header.len()
            )));
        }
        let index = |k: usize| {
            rec[k]
                .parse::<usize>()
                .map_err(|_| Error::data(format!("line {line}: `{}` is not an index", &rec[k])))
        };
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::data(format!("line {line}: `{}` is not a finite number", &rec[k])))
        };
        let (seg, t) = (index(0)?, index(1)?);
        let mut e = [Complex::new(0.0, 0.0); 4];
        for (k, c) in columns.iter().enumerate() {
            e[c.index()] = Complex::new(num(2 + 2 * k)?, num(3 + 2 * k)?);
        }
        let h = JonesMatrix::from_raw(e[0], e[1], e[2], e[3]);
        if rows.entry(seg).or_default().insert(t, h).is_some() {
            return Err(Error::data(format!("line {line}: duplicate (segment {seg}, time {t})")));
        }
    }
    if rows.is_empty() {
        return Err(Error::data("measured record has no data rows"));
    }

    let n_segments = rows.keys().next_back().map_or(0, |&k| k + 1);
    let missing: Vec<usize> = (0..n_segments).filter(|i| !rows.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(Error::data(format!("segments missing from record: {}", list_segments(&missing))));
    }
    let n_samples = rows.values().map(|r| r.len()).max().unwrap_or(0);
    let ragged: Vec<usize> = rows
        .iter()
        .filter(|(_, r)| r.len() != n_samples || r.keys().next_back() != Some(&(n_samples - 1)))
        .map(|(&i, _)| i)
        .collect();
    if !ragged.is_empty() {
        return Err(Error::data(format!(
            "ragged time axis (expected times 0..{}) in segments: {}",
            n_samples - 1,
            list_segments(&ragged)
        )));
    }
    if n_samples < 2 {
        return Err(Error::data("measured record needs at least 2 time samples per segment"));
    }

    let n_present = columns.len() as f64;
    let mut data = Vec::with_capacity(n_segments * n_samples);
    let mut scale = Vec::with_capacity(n_segments);
    for row in rows.into_values() {
        let power: f64 = row
            .values()
            .map(|h| columns.iter().map(|&c| entry(h, c).norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / (n_samples as f64 * n_present);
        // a Jones matrix A·p·U has mean entry power A²|p|²/2
        scale.push((2.0 * power).sqrt());
        data.extend(row.into_values());
    }
    Ok(MeasuredChannels {
        n_segments,
        n_samples,
        present,
        data,
        dt_s,
        z_m: (0..n_segments).map(|i| spec.segment_center(i)).collect(),
        scale,
    })
}

pub fn ingest_measured(path: &Path, spec: &FiberSpec, dt_s: f64) -> Result<MeasuredChannels> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_measured(&text, spec, dt_s)
}

impl ChannelSource for MeasuredChannels {
    fn n_segments(&self) -> usize {
        self.n_segments
    }

    fn n_samples(&self) -> usize {
        self.n_samples
    }

    fn dt_s(&self) -> f64 {
        self.dt_s
    }

    fn z_m(&self, segment: usize) -> f64 {
        self.z_m[segment]
    }

    /// RMS amplitude of the segment's data; attenuation alone is not
    /// observable from channel estimates.
    fn amplitude_scale(&self, segment: usize) -> f64 {
        self.scale[segment]
    }

    fn supports(&self, scheme: ProbeScheme, opts: EstimatorOptions) -> Result<()> {
        let missing: Vec<&str> = Coefficient::required(scheme, opts)
            .into_iter()
            .filter(|c| !self.present[c.index()])
            .map(Coefficient::name)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::SchemeMismatch(format!(
                "{scheme} needs {} which the record does not carry",
                missing.join(", ")
            )))
        }
    }

    fn observations(&self, segment: usize) -> Vec<JonesMatrix> {
        self.data[segment * self.n_samples..(segment + 1) * self.n_samples].to_vec()
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Fails unless a file can be created in `dir` (created if absent).
pub fn check_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(format!(".polotdr-write-check-{}", std::process::id()));
    std::fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::estimate_traces;
    use crate::experiments::{run_inputs, ScenarioConfig, SweepKind};
    use crate::metrics::{stdv_profile, DiffMode};

    fn spec() -> FiberSpec {
        FiberSpec {
            length_m: 100.0,
            ..FiberSpec::default()
        }
    }

    #[test]
    fn golden_headers() {
        assert_eq!(FIBER_HEADER, "index,z_m,theta_cap,beta,gamma,attenuation,phasor_re,phasor_im,tau_s");
        assert_eq!(TRACE_HEADER, "segment,time,value,flag");
        assert_eq!(PROFILE_HEADER, "segment,z_m,stdv_rad,unreliable");
        assert_eq!(THETA_SWEEP_HEADER, "theta_rad,scheme,stdv_rad");
        assert_eq!(THETA_CAP_SWEEP_HEADER, "theta_cap_rad,re_sum,im_sum,stdv_simo_rad");
        assert_eq!(
            measured_header(&Coefficient::ALL),
            "segment,time,h_xx_re,h_xx_im,h_xy_re,h_xy_im,h_yx_re,h_yx_im,h_yy_re,h_yy_im"
        );
        assert_eq!(measured_header(&[Coefficient::Xx]), "segment,time,h_xx_re,h_xx_im");
    }

    #[test]
    fn profile_table_round_trips() {
        let p = StdvProfile {
            scheme: ProbeScheme::Simo,
            diff_mode: DiffMode::Temporal,
            z_m: vec![5.0, 15.0],
            per_segment_stdv: vec![0.1 + 0.2, 2.5],
            unreliable_mask: vec![false, true],
        };
        let text = profile_csv(&p);
        assert_eq!(text, format!("{PROFILE_HEADER}
0,5,0.30000000000000004,0
1,15,2.5,1
"));
        let rows = parse_profile_csv(&text).unwrap();
        assert_eq!(rows, vec![(0, 5.0, 0.1 + 0.2, false), (1, 15.0, 2.5, true)]);
    }

    #[test]
    fn measured_round_trip_is_exact() {
        let mut cfg = ScenarioConfig::new(SweepKind::DistanceProfile, 100.0);
        cfg.noise.n_samples = 50;
        let inputs = run_inputs(&cfg, 0, None, None).unwrap();
        let sim = inputs.channel(&cfg.noise);
        let text = measured_csv(&sim, &Coefficient::ALL);
        let measured = parse_measured(&text, &cfg.fiber, cfg.noise.dt_s).unwrap();
        assert_eq!(measured.n_segments(), sim.n_segments());
        for i in 0..sim.n_segments() {
            assert_eq!(measured.observations(i), sim.observations(i));
            assert_eq!(measured.z_m(i), sim.z_m(i));
        }
        let opts = EstimatorOptions::default();
        let a = estimate_traces(&sim, &ProbeScheme::ALL, opts).unwrap();
        let b = estimate_traces(&measured, &ProbeScheme::ALL, opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let px = stdv_profile(x, DiffMode::Temporal, false).unwrap();
            let py = stdv_profile(y, DiffMode::Temporal, false).unwrap();
            assert_eq!(px.per_segment_stdv, py.per_segment_stdv);
        }
    }

    #[test]
    fn scheme_compatibility() {
        let text = "segment,time,h_xx_re,h_xx_im,h_yx_re,h_yx_im\n0,0,1,0,0,1\n0,1,1,0,0,1\n";
        let m = parse_measured(text, &spec(), 1e-3).unwrap();
        let opts = EstimatorOptions::default();
        assert_eq!(m.compatible_schemes(opts), vec![ProbeScheme::Siso, ProbeScheme::Simo]);
        let err = m.supports(ProbeScheme::Mimo, opts).unwrap_err();
        assert!(matches!(err, Error::SchemeMismatch(_)));
        assert_eq!(err.exit_code(), 3);
        assert!(estimate_traces(&m, &[ProbeScheme::Mimo], opts).is_err());
        // Y launch reads the other column
        let y = EstimatorOptions { launch_column: 1 };
        assert!(m.compatible_schemes(y).is_empty());

        let siso = parse_measured("segment,time,h_xx_re,h_xx_im\n0,0,1,0\n0,1,1,0\n", &spec(), 1e-3).unwrap();
        assert_eq!(siso.compatible_schemes(opts), vec![ProbeScheme::Siso]);
    }

    #[test]
    fn malformed_records_are_rejected() {
        let bad = |text: &str| parse_measured(text, &spec(), 1e-3).unwrap_err();
        assert!(matches!(bad(""), Error::Data(_)));
        assert!(matches!(bad("segment,time,h_xx_re,h_xx_im\n"), Error::Data(_)));
        assert!(matches!(bad("seg,time,h_xx_re,h_xx_im\n0,0,1,0\n"), Error::Data(_)));
        assert!(matches!(bad("segment,time,h_yx_re,h_yx_im,h_xx_re,h_xx_im\n"), Error::Data(_)));
        assert!(matches!(bad("segment,time,h_xx_re,h_xx_im\n0,0,1,0\n0,0,1,0\n"), Error::Data(_)));
        assert!(matches!(bad("segment,time,h_xx_re,h_xx_im\n0,0,x,0\n"), Error::Data(_)));

        let ragged = "segment,time,h_xx_re,h_xx_im\n0,0,1,0\n0,1,1,0\n0,2,1,0\n1,0,1,0\n1,1,1,0\n2,0,1,0\n2,2,1,0\n";
        let msg = bad(ragged).to_string();
        assert!(msg.contains("ragged") && msg.contains("1, 2"), "{msg}");

        let gap = "segment,time,h_xx_re,h_xx_im\n0,0,1,0\n0,1,1,0\n2,0,1,0\n2,1,1,0\n";
        assert!(bad(gap).to_string().contains("missing"));
    }

    #[test]
    fn row_order_does_not_matter() {
        let a = "segment,time,h_xx_re,h_xx_im\n0,0,1,0\n0,1,2,0\n1,0,3,0\n1,1,4,0\n";
        let b = "segment,time,h_xx_re,h_xx_im\n1,1,4,0\n0,1,2,0\n1,0,3,0\n0,0,1,0\n";
        let ma = parse_measured(a, &spec(), 1e-3).unwrap();
        let mb = parse_measured(b, &spec(), 1e-3).unwrap();
        for i in 0..2 {
            assert_eq!(ma.observations(i), mb.observations(i));
        }
    }

    #[test]
    fn unwritable_directory_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        let err = check_writable(&file.join("sub")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        check_writable(&dir.path().join("new")).unwrap();
    }
}

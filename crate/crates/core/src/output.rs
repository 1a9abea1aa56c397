//! Writes a finished scenario to disk: CSV tables, optional SVG plots and
//! a manifest that re-parses to the resolved configuration.

use std::path::{Path, PathBuf};

use crate::config::{emit_manifest, ManifestInfo};
use crate::error::Result;
use crate::experiments::{ScenarioConfig, ScenarioOutput};
use crate::io;
use crate::metrics::StdvProfile;
use crate::plot::{render_svg, Plot, Series};
use crate::rng;

/// Table name and CSV text, before a file stem is attached.
pub type Table = (String, String);

fn profile_tables(prefix: &str, profiles: &[StdvProfile]) -> Vec<Table> {
    profiles
        .iter()
        .map(|p| (format!("{prefix}_{}", p.scheme), io::profile_csv(p)))
        .collect()
}

fn profile_plot(title: &str, profiles: &[StdvProfile]) -> String {
    let series: Vec<Series> = profiles
        .iter()
        .map(|p| Series::new(p.scheme.name(), &p.z_m, &p.per_segment_stdv))
        .collect();
    render_svg(&Plot {
        title,
        x_label: "distance z (m)",
        y_label: "StDv (rad)",
        series: &series,
    })
}

/// CSV tables of a scenario result, in a fixed order.
pub fn tables(output: &ScenarioOutput) -> Vec<Table> {
    match output {
        ScenarioOutput::ThetaMis(s) => vec![("theta".into(), io::theta_sweep_csv(s))],
        ScenarioOutput::ThetaCap(s) => vec![("theta_cap".into(), io::theta_cap_sweep_csv(s))],
        ScenarioOutput::Profile(p) => {
            let mut t = vec![("fiber".to_string(), io::fiber_csv(&p.fiber))];
            t.extend(profile_tables("profile", &p.profiles));
            t
        }
        ScenarioOutput::MonteCarlo(m) => profile_tables("mean", &m.profiles),
    }
}

/// SVG plots of a scenario result: name and document.
pub fn plots(output: &ScenarioOutput) -> Vec<(String, String)> {
    match output {
        ScenarioOutput::ThetaMis(s) => {
            let mut schemes = Vec::new();
            for r in &s.rows {
                if !schemes.contains(&r.scheme) {
                    schemes.push(r.scheme);
                }
            }
            let series: Vec<Series> = schemes
                .iter()
                .map(|&sc| {
                    let xs: Vec<f64> = s.rows.iter().filter(|r| r.scheme == sc).map(|r| r.theta_mis).collect();
                    Series::new(sc.name(), &xs, &s.series(sc))
                })
                .collect();
            let svg = render_svg(&Plot {
                title: "StDv versus misalignment",
                x_label: "theta (rad)",
                y_label: "StDv (rad)",
                series: &series,
            });
            vec![("theta".into(), svg)]
        }
        ScenarioOutput::ThetaCap(s) => {
            let xs: Vec<f64> = s.rows.iter().map(|r| r.theta_cap).collect();
            let col = |f: fn(&crate::experiments::ThetaCapRow) -> f64| s.rows.iter().map(f).collect::<Vec<_>>();
            let series = vec![
                Series::new("re_sum", &xs, &col(|r| r.re_sum)),
                Series::new("im_sum", &xs, &col(|r| r.im_sum)),
                Series::new("stdv_simo", &xs, &col(|r| r.stdv_simo)),
            ];
            let svg = render_svg(&Plot {
                title: "Column sum and SIMO StDv versus birefringence angle",
                x_label: "Theta (rad)",
                y_label: "value",
                series: &series,
            });
            vec![("theta_cap".into(), svg)]
        }
        ScenarioOutput::Profile(p) => vec![("profile".into(), profile_plot("StDv along one fiber", &p.profiles))],
        ScenarioOutput::MonteCarlo(m) => vec![(
            "mean".into(),
            profile_plot(&format!("Mean StDv over {} fibers", m.n_fibers), &m.profiles),
        )],
    }
}

/// Seed and preset notes recorded in the manifest header.
pub fn manifest_notes(cfg: &ScenarioConfig, output: &ScenarioOutput) -> Vec<String> {
    let runs = match output {
        ScenarioOutput::MonteCarlo(m) => m.n_fibers as u64,
        _ => 1,
    };
    let mut notes: Vec<String> = (0..runs)
        .map(|r| {
            let s = rng::run_seed(cfg.master_seed, r);
            format!("run {r}: fiber_seed = {} noise_seed = {} theta_seed = {}", s.fiber, s.noise, s.theta)
        })
        .collect();
    if let ScenarioOutput::Profile(p) = output {
        notes.push(format!("theta_mis drawn = {}", p.theta_mis));
    }
    notes
}

/// Writes every table (and plot unless `no_plots`) as `<stem>_<table>.csv`
/// plus `<stem>_manifest.toml`. Returns the written paths.
pub fn emit_outputs(
    dir: &Path,
    stem: &str,
    cfg: &ScenarioConfig,
    output: &ScenarioOutput,
    info: &ManifestInfo,
    no_plots: bool,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, csv) in tables(output) {
        let path = dir.join(format!("{stem}_{name}.csv"));
        io::write_file(&path, &csv)?;
        written.push(path);
    }
    if !no_plots {
        for (name, svg) in plots(output) {
            let path = dir.join(format!("{stem}_{name}.svg"));
            io::write_file(&path, &svg)?;
            written.push(path);
        }
    }
    let info = ManifestInfo {
        notes: info.notes.iter().cloned().chain(manifest_notes(cfg, output)).collect(),
        ..info.clone()
    };
    let path = dir.join(format!("{stem}_manifest.toml"));
    io::write_file(&path, &emit_manifest(cfg, &info)?)?;
    written.push(path);
    Ok(written)
}

/// Writes ingest results: one profile table per scheme and a plot.
pub fn emit_profiles(dir: &Path, stem: &str, profiles: &[StdvProfile], no_plots: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, csv) in profile_tables("profile", profiles) {
        let path = dir.join(format!("{stem}_{name}.csv"));
        io::write_file(&path, &csv)?;
        written.push(path);
    }
    if !no_plots {
        let path = dir.join(format!("{stem}_profile.svg"));
        io::write_file(&path, &profile_plot("StDv of measured record", profiles))?;
        written.push(path);
    }
    Ok(written)
}

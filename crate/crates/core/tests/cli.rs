use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polotdr::io::parse_profile_csv;
use polotdr::plot::series_names;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polotdr"));
    c.env_remove("POLOTDR_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PROFILE: &str = "sweep = \"distance_profile\"\nlength_m = 300.0\nsegment_length_m = 25.0\nn_samples = 200\nmaster_seed = 3\n";

#[test]
fn no_plots_writes_csv_and_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", PROFILE);
    let out = dir.path().join("out");
    let o = run(&["profile", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-plots", "--name", "x"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        listing(&out),
        ["x_fiber.csv", "x_manifest.toml", "x_profile_mimo.csv", "x_profile_simo.csv", "x_profile_siso.csv"]
    );
}

#[test]
fn reruns_with_fixed_name_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", PROFILE);
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = run(&["profile", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--name", "same"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in listing(&dir.path().join("a")) {
        if f.ends_with(".csv") || f.ends_with(".svg") {
            assert_eq!(
                fs::read(dir.path().join("a").join(&f)).unwrap(),
                fs::read(dir.path().join("b").join(&f)).unwrap(),
                "{f}"
            );
        }
    }
}

#[test]
fn default_stem_uses_scenario_name_and_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", &format!("name = \"fig1b\"\n{PROFILE}"));
    let o = bin()
        .args(["profile", "--config", cfg.to_str().unwrap(), "--no-plots"])
        .env("POLOTDR_OUT_DIR", dir.path().join("env"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let names = listing(&dir.path().join("env"));
    let manifest = names.iter().find(|n| n.ends_with("_manifest.toml")).unwrap();
    let stamp = manifest.strip_prefix("fig1b_").unwrap().strip_suffix("_manifest.toml").unwrap();
    assert!(stamp.parse::<u64>().is_ok(), "{manifest}");
}

#[test]
fn plot_has_one_series_per_scheme_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", PROFILE);
    let out = dir.path().join("out");
    let o = run(&[
        "profile", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--name", "s", "--schemes", "siso,mimo",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(out.join("s_profile.svg")).unwrap();
    let csvs: Vec<String> = listing(&out).into_iter().filter(|n| n.starts_with("s_profile_")).collect();
    assert_eq!(series_names(&svg), ["siso", "mimo"]);
    assert_eq!(csvs.len(), 2);

    let o = run(&["sweep-theta", "--out", out.to_str().unwrap(), "--name", "t", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(out.join("t_theta.svg")).unwrap();
    let csv = fs::read_to_string(out.join("t_theta.csv")).unwrap();
    let mut in_csv: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    in_csv.sort();
    in_csv.dedup();
    let mut in_svg = series_names(&svg);
    in_svg.sort();
    assert_eq!(in_svg, in_csv);
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "sweep = \"theta_cap\"\nlength_m = 10.0\nn_samples = 200\n");
    let out = dir.path().join("out");
    let o = run(&["sweep-theta-cap", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--name", "a", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = out.join("a_manifest.toml");
    let o = run(&["sweep-theta-cap", "--config", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "--name", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(out.join("a_theta_cap.csv")).unwrap(), fs::read(out.join("b_theta_cap.csv")).unwrap());
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.starts_with(&format!("# polotdr {}", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("master_seed = 5"));
    assert!(text.contains("preset_beta"));
}

#[test]
fn config_errors_exit_2_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "sweep = \"monte_carlo\"\nlength_m = 1000.0\nlinewidth_hz = -1\n");
    let o = run(&["monte-carlo", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("E_CONFIG: ") && err.contains("linewidth_hz") && err.contains("line 3"), "{err}");

    let o = run(&["profile", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["profile", "--diff-mode", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert!(stderr(&o).starts_with("E_CONFIG: "));

    let o = run(&["profile", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("E_IO: "));
}

#[test]
fn unwritable_output_fails_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = run(&["monte-carlo", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("E_IO: "));
}

#[test]
fn ingest_loop_back_matches_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", PROFILE);
    let out = dir.path().join("out");
    let o = run(&[
        "profile", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--name", "sim", "--export-observations", "--no-plots",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let record = out.join("sim_observations.csv");
    let o = run(&[
        "ingest", "--input", record.to_str().unwrap(), "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(), "--name", "meas", "--no-plots",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for scheme in ["siso", "simo", "mimo"] {
        let a = parse_profile_csv(&fs::read_to_string(out.join(format!("sim_profile_{scheme}.csv"))).unwrap()).unwrap();
        let b = parse_profile_csv(&fs::read_to_string(out.join(format!("meas_profile_{scheme}.csv"))).unwrap()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-12 && (x.2 - y.2).abs() < 1e-12, "{scheme}: {x:?} vs {y:?}");
        }
    }
}

#[test]
fn ingest_rejects_bad_records() {
    let dir = tempfile::tempdir().unwrap();
    let simo = write_config(
        dir.path(),
        "simo.csv",
        "segment,time,h_xx_re,h_xx_im,h_yx_re,h_yx_im\n0,0,1,0,0,1\n0,1,1,0.1,0,1\n0,2,1,0.2,0,1\n",
    );
    let o = run(&["ingest", "--input", simo.to_str().unwrap(), "--schemes", "mimo", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("E_DATA: ") && stderr(&o).contains("h_xy"), "{}", stderr(&o));

    let o = run(&["ingest", "--input", simo.to_str().unwrap(), "--out", dir.path().join("ok").to_str().unwrap(), "--name", "k", "--no-plots"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(listing(&dir.path().join("ok")), ["k_profile_simo.csv", "k_profile_siso.csv"]);

    let empty = write_config(dir.path(), "empty.csv", "");
    let o = run(&["ingest", "--input", empty.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let ragged = write_config(dir.path(), "ragged.csv", "segment,time,h_xx_re,h_xx_im\n0,0,1,0\n0,1,1,0\n1,0,1,0\n");
    let o = run(&["ingest", "--input", ragged.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("segments: 1"), "{}", stderr(&o));
}

#[test]
fn help_and_version_succeed() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    assert_eq!(run(&[]).status.code(), Some(2));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fieldroad_cli::config::{parse_text, Command as Cmd, RawConfig, RunConfig};
use fieldroad_cli::sweep::sweep_rows;
use fieldroad_cli::CliError;
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fieldroad"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).arg("--out").arg(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config(text: &str) -> RunConfig {
    RunConfig::from_raw(&parse_text(text).unwrap()).unwrap()
}

fn config_err(text: &str) -> String {
    match parse_text(text).and_then(|raw| RunConfig::from_raw(&raw)) {
        Ok(_) => panic!("{text:?} was accepted"),
        Err(e) => e.to_string(),
    }
}

#[test]
fn minimal_config_gets_documented_defaults() {
    let c = config("command = eigen\nspectral.alpha = 0\n");
    assert_eq!(c.command, Cmd::Eigen);
    assert_eq!((c.grid.nx, c.grid.ny), (64, 64));
    assert_eq!(c.spectral.tol, 1e-10);
    assert_eq!(c.spectral.alphas, vec![0.0]);
}

#[test]
fn invariant_violations_name_field_and_bound() {
    assert!(config_err("mu = 0\n").contains("mu must be > 0"));
    assert!(config_err("grid.nx = 2\n").contains("grid.nx must be >= 4"));
    assert!(config_err("sim.dt = 0.9\n").contains("dt must be <= 0.5/M"));
    assert!(config_err("sim.scheme = explicit\nsim.dt = 0.01\n").contains("CFL"));
    assert!(config_err("reaction.mean = -1\n").contains("growth rate"));
}

#[test]
fn unknown_keys_are_named_with_a_suggestion() {
    let e = config_err("diffusivity = 2\n");
    assert!(e.contains("unknown key \"diffusivity\""), "{e}");
    assert!(e.contains("did you mean \"D\""), "{e}");
    let e = config_err("[sim]\ndtt = 0.1\n");
    assert!(e.contains("sim.dt"), "{e}");
}

#[test]
fn overrides_win_over_the_file() {
    let mut raw = parse_text("D = 2\nR = 5\n").unwrap();
    raw.apply_override("D=3").unwrap();
    raw.apply_override("sim.T = 4").unwrap();
    let c = RunConfig::from_raw(&raw).unwrap();
    assert_eq!(c.model.d_road, 3.0);
    assert_eq!(c.model.width, 5.0);
    assert_eq!(c.sim.t_final, 4.0);
    assert!(matches!(raw.apply_override("nokey"), Err(CliError::Config(_))));
}

#[test]
fn manifest_round_trips() {
    for text in [
        "",
        "command = sweep\nsweep.R = 5, 10\nsweep.alpha = 0.5\n",
        "reaction.table = 1, 2, 1.5\nsim.domain_copies = 20\nR = 3\n",
        "front.snapshots = runs/a.csv\nspectral.alpha_range = 0, 1, 4\nspectral.direction = both\n",
    ] {
        let c = config(text);
        let back = config(&c.to_manifest());
        assert_eq!(back, c, "{text:?}");
        assert_eq!(back.to_manifest(), c.to_manifest());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifest_round_trips_numbers(
        d in 1e-3f64..1e3,
        mu in 1e-3f64..1e3,
        r in 0.5f64..100.0,
        mean in 0.1f64..5.0,
        amp in 0.0f64..0.09,
        alpha in -5.0f64..5.0,
    ) {
        let mut raw = RawConfig::default();
        raw.set("D", &format!("{d:e}")).unwrap();
        raw.set("mu", &mu.to_string()).unwrap();
        raw.set("R", &r.to_string()).unwrap();
        raw.set("reaction.mean", &mean.to_string()).unwrap();
        raw.set("reaction.cos_amps", &amp.to_string()).unwrap();
        raw.set("spectral.alpha", &alpha.to_string()).unwrap();
        raw.set("sim.dt", "0.05").unwrap();
        let c = RunConfig::from_raw(&raw).unwrap();
        prop_assert_eq!(c.model.d_road, d);
        let back = RunConfig::from_raw(&parse_text(&c.to_manifest()).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "[ -~\n]{0,200}") {
        if let Ok(raw) = parse_text(&text) {
            let _ = RunConfig::from_raw(&raw);
        }
    }
}

#[test]
fn sweep_over_width_gives_decreasing_lambda() {
    let c = config("command = sweep\ngrid.nx = 8\ngrid.ny = 32\nsweep.R = 5, 10, 20\nsweep.alpha = 0\n");
    let rows = sweep_rows(&c);
    assert_eq!(rows.len(), 3);
    let l: Vec<f64> = rows.iter().map(|r| r.lambda.unwrap()).collect();
    assert!(l[0] > l[1] && l[1] > l[2], "{l:?}");
}

#[test]
fn sweep_over_road_diffusivity_matches_speed_threshold() {
    let c = config(
        "command = sweep\nR = 40\ngrid.nx = 16\n[spectral]\ndy = 0.2\nr0 = 5\nr_max = 160\n\
         [sweep]\nquantity = speed_halfplane\nD = 0.5, 1, 2, 4, 8\n",
    );
    let rows = sweep_rows(&c);
    let speeds: Vec<f64> = rows.iter().map(|r| r.c_star.expect("speed")).collect();
    assert!(speeds.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{speeds:?}");
    for s in &speeds[..3] {
        assert!((s - 2.0).abs() < 0.01, "{speeds:?}");
    }
    assert!(speeds[4] > 2.05, "{speeds:?}");
}

#[test]
fn failing_sweep_point_leaves_other_rows_intact() {
    let c = config("command = sweep\ngrid.nx = 8\ngrid.ny = 16\nsweep.R = 5, -1, 10\n");
    let rows = sweep_rows(&c);
    assert_eq!(rows.len(), 3);
    assert!(rows[0].error.is_none() && rows[2].error.is_none());
    assert!(rows[1].error.as_deref().unwrap().contains("R must be > 0"));
    assert!(rows[0].lambda.unwrap() > rows[2].lambda.unwrap());
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn empty_sweep_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "sweep.R =\n");
    let out = dir.path().join("o");
    let o = run_in(&out, &["sweep", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv, "R,lambda,c_star,alpha_star,status,message\n");
    assert!(out.join("manifest.cfg").exists());
}

#[test]
fn sweeps_are_deterministic_across_thread_counts_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "grid.nx = 8\ngrid.ny = 16\nsweep.R = 4, 6, 8, 10\nsweep.reaction.amp = 0, 0.5\n",
    );
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "2", "2"].iter().enumerate() {
        let out = dir.path().join(format!("o{k}"));
        let o = run_in(&out, &["sweep", "-c", cfg.to_str().unwrap(), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let o = run_in(
        &first,
        &["eigen", "--set", "grid.nx=8", "--set", "grid.ny=16", "--set", "R=4", "--alpha", "0,0.5,-0.5"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let second = dir.path().join("b");
    let manifest = first.join("manifest.cfg");
    let o = run_in(&second, &["eigen", "-c", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let a = fs::read(first.join("dispersion.csv")).unwrap();
    assert_eq!(a, fs::read(second.join("dispersion.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("alpha,R,lambda,residual,iterations\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["eigen", "--set", "mu=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu must be > 0"));
    let o = run_in(dir.path(), &["eigen", "--set", "diffusivity=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_in(
        dir.path(),
        &["eigen", "--set", "grid.nx=32", "--set", "grid.ny=64", "--set", "spectral.tol=1e-16"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run_in(dir.path(), &["speed", "--set", "R=1", "--set", "grid.nx=8", "--set", "grid.ny=16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("below persistence"));
}

#[test]
fn operator_dump_lists_every_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["eigen", "--dump-operator", "--set", "grid.nx=4", "--set", "grid.ny=4", "--alpha", "0.3"],
    );
    assert_eq!(o.status.code(), Some(0));
    let coo = fs::read_to_string(dir.path().join("operator.coo")).unwrap();
    let n = coo.lines().count();
    assert!(n > 0);
    for line in coo.lines() {
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(parts.len(), 3);
        let r: usize = parts[0].parse().unwrap();
        let c: usize = parts[1].parse().unwrap();
        assert!(r < 20 && c < 20);
        parts[2].parse::<f64>().unwrap();
    }
    assert!(stdout(&o).contains(&format!("{n} nonzeros")));
}

#[test]
fn simulate_then_track_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = run_in(
        &sim,
        &[
            "simulate", "--set", "R=5", "--set", "grid.nx=8", "--set", "grid.ny=10", "--set",
            "sim.domain_copies=60", "--set", "sim.T=10", "--set", "sim.record_every=4",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let probes = fs::read_to_string(sim.join("probes.csv")).unwrap();
    assert!(probes.starts_with("t,probe_name,value\n"));
    assert!(probes.contains(",front_right,"));

    let snaps = sim.join("snapshots.csv");
    let front = dir.path().join("front");
    let o = run_in(&front, &["front", "--snapshots", snaps.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(front.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("c_hat,stderr,r2,deviation"));
    let c_hat: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(c_hat > 1.0 && c_hat < 2.5, "{c_hat}");
    let text = stdout(&o);
    assert!(text.contains("level 0.05: c_hat") && text.contains("level 0.2: c_hat"), "{text}");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,x,u\n0,0,1\n").unwrap();
    let o = run_in(&front, &["front", "--snapshots", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn steady_command_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["steady", "--set", "R=4", "--set", "grid.nx=8", "--set", "grid.ny=16"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("steady.csv")).unwrap();
    assert!(csv.starts_with("x,y,U,V\n"));
    assert_eq!(csv.lines().count(), 1 + 8 + 8 * 16);
}

#[test]
fn config_command_runs_without_a_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "command = steady\nR = 4\n[grid]\nnx = 8\nny = 16\n").unwrap();
    let out = dir.path().join("out");
    let o = run_in(&out, &["-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("steady.csv").exists());
}

#[test]
fn speed_command_writes_strip_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["speed", "--set", "R=10", "--set", "grid.nx=8", "--set", "grid.ny=40", "--set", "spectral.direction=both"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("speed.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "mode,R,direction,alpha_star,c_star,evaluations");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("strip,1.0000000000000000e1,right,"));
    assert!(rows[2].contains(",left,"));
}

#[test]
fn verify_reference_configuration_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["verify", "--set", "R=10", "--set", "grid.nx=8", "--set", "grid.ny=20"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}\n{}", String::from_utf8_lossy(&o.stderr));
    for name in ["kpp", "eigen.bounds", "eigen.evenness", "speed.left_right", "comparison", "dichotomy"] {
        assert!(text.lines().any(|l| l.starts_with(name) && l.contains("pass")), "{name}\n{text}");
    }
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("property,passed,margin,note\n"));
}

#[test]
fn verify_below_threshold_is_an_expected_negative() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["verify", "--set", "R=1", "--set", "grid.nx=8", "--set", "grid.ny=16"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("below persistence"), "{text}");
}

#[test]
fn verify_coarse_grid_notes_upwind_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["verify", "--set", "R=4", "--set", "grid.nx=4", "--set", "grid.ny=16", "--set", "spectral.alpha=0,3,6"],
    );
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}\n{}", String::from_utf8_lossy(&o.stderr));
    assert!(text.contains("upwind fallback"), "{text}");
}

fn corpus(name: &str) -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(name);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn config_corpus_regression() {
    for (name, bytes) in corpus("fuzz_config") {
        let text = String::from_utf8(bytes).unwrap();
        let parsed = parse_text(&text).and_then(|raw| RunConfig::from_raw(&raw));
        assert_eq!(parsed.is_ok(), name.starts_with("ok_"), "{name}: {:?}", parsed.err());
    }
}

#[test]
fn flags_corpus_regression() {
    for (name, bytes) in corpus("fuzz_flags") {
        let text = String::from_utf8(bytes).unwrap();
        let mut raw = RawConfig::default();
        let parsed = text
            .lines()
            .try_for_each(|l| raw.apply_override(l))
            .and_then(|()| RunConfig::from_raw(&raw));
        assert_eq!(parsed.is_ok(), name.starts_with("ok_"), "{name}: {:?}", parsed.err());
    }
}

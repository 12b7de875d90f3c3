use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&p);
    fs::create_dir_all(&p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_exits_zero_for_every_verb() {
    assert!(hardy(&["--help"]).status.success());
    for verb in ["gen-points", "convergence", "decompose", "minnorm", "bep"] {
        let o = hardy(&[verb, "--help"]);
        assert!(o.status.success(), "{verb}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("--allow-large"));
    }
}

#[test]
fn config_errors_exit_two() {
    let dir = scratch("bad");
    for args in [
        vec!["convergence", "--degree", "150"],
        vec!["convergence", "--nmax", "5"],
        vec!["convergence", "--sigma", "S4"],
        vec!["convergence", "--set", "gamma=2"],
        vec!["convergence", "--config", "/nonexistent/hardy.cfg"],
        vec!["frobnicate"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", s(&dir)]);
        assert_eq!(hardy(&a).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn convergence_is_deterministic_and_config_round_trips() {
    let a = scratch("conv_a");
    let b = scratch("conv_b");
    let cfg = a.join("run.cfg");
    fs::write(&cfg, "# desk run\nsigma = S2\nnmax = 2\ndegree = 100\n").unwrap();
    assert!(hardy(&["convergence", "--config", s(&cfg), "--out", s(&a)])
        .status
        .success());
    assert!(hardy(&["convergence", "--config", s(&cfg), "--out", s(&b)])
        .status
        .success());
    let csv = fs::read(a.join("convergence.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("convergence.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("convergence_summary.json")).unwrap(),
        fs::read(b.join("convergence_summary.json")).unwrap()
    );
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sigma,n,h_n,num_atoms,delta_n,rho_n,lambda,rel_error");
    assert_eq!(lines.len(), 3);
    let err = |l: &str| l.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!(err(lines[2]) < err(lines[1]));

    // the manifest's config text reproduces the run
    let m: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "ok");
    assert_eq!(m["levels"].as_array().unwrap().len(), 2);
    let replay = a.join("replay.cfg");
    fs::write(&replay, m["config_text"].as_str().unwrap()).unwrap();
    let c = scratch("conv_c");
    assert!(hardy(&["convergence", "--config", s(&replay), "--out", s(&c)])
        .status
        .success());
    assert_eq!(
        fs::read(a.join("convergence.csv")).unwrap(),
        fs::read(c.join("convergence.csv")).unwrap()
    );

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("convergence_summary.json")).unwrap()).unwrap();
    let row = &summary["rows"][1];
    let (h, env) = (row["h_n"].as_f64().unwrap(), row["envelope"].as_f64().unwrap());
    assert!((env - 0.01 * (0.0225 + h.powf(2.25))).abs() < 1e-15);
}

#[test]
fn s3_level_one_reports_the_baseline() {
    let dir = scratch("s3");
    assert!(
        hardy(&["convergence", "--sigma", "S3", "--nmax", "1", "--out", s(&dir)])
            .status
            .success()
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("convergence_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"][0]["num_atoms"], 0);
    assert_eq!(summary["rows"][0]["rel_error"], summary["baseline_rel_error"]);
}

#[test]
fn minnorm_reports_the_off_cap_residual() {
    let dir = scratch("minnorm");
    assert!(hardy(&["minnorm", "--sigma", "S2", "--nmax", "1", "--out", s(&dir)])
        .status
        .success());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("minnorm_S2.json")).unwrap()).unwrap();
    let d = &v["diagnostics"];
    assert!(d["sup_off_cap"].as_f64().unwrap() <= 1e-12 * d["l2_norm"].as_f64().unwrap());
    assert!(v["sup_off_cap_relative"].as_f64().unwrap() <= 5e-3);
}

#[test]
fn bep_sweep_is_monotone_in_the_bound() {
    let dir = scratch("bep");
    assert!(hardy(&["bep", "--sigma", "S2", "--nmax", "2", "--out", s(&dir)])
        .status
        .success());
    let text = fs::read_to_string(dir.join("bep_S2.csv")).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    let col = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    for w in rows.windows(2) {
        assert!(col(&w[1], 0) > col(&w[0], 0));
        assert!(col(&w[1], 4) <= col(&w[0], 4));
    }
}

#[test]
fn decompose_reads_a_sampled_field() {
    let dir = scratch("decompose");
    assert!(hardy(&["gen-points", "--nmax", "1", "--grid", "--out", s(&dir)])
        .status
        .success());
    // the radial field z eta has no toroidal part
    let grid = fs::read_to_string(dir.join("grid_degree100.csv")).unwrap();
    let mut field = String::from("x,y,z,vx,vy,vz\n");
    for line in grid.lines().skip(1) {
        let p: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        field.push_str(&format!(
            "{},{},{},{:e},{:e},{:e}\n",
            p[0],
            p[1],
            p[2],
            p[2] * p[0],
            p[2] * p[1],
            p[2] * p[2]
        ));
    }
    let path = dir.join("field.csv");
    fs::write(&path, field).unwrap();
    let out = dir.join("out");
    let o = hardy(&["decompose", "--field", s(&path), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("decompose.json")).unwrap()).unwrap();
    let e = &v["energy"];
    let total = e["total"].as_f64().unwrap();
    // |eta z|^2 integrates to 4 pi / 3
    assert!((total - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-10);
    assert!((e["input_l2_squared"].as_f64().unwrap() - total).abs() < 1e-10);
    assert!(e["df"].as_f64().unwrap() < 1e-20);
}

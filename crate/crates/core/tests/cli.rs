use std::path::Path;
use std::process::{Command, Output};

use pcfpair::dispersion::{default_d_ps_nm_km, default_model, GvdTable};
use serde_json::Value;

fn pcfpair(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcfpair"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn pcfpair")
}

fn json_stdout(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zdw_reports_default_fiber() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&pcfpair(&["zdw", "--json"], dir.path()));
    let zdw = v["zdw_nm"].as_f64().unwrap();
    assert!((zdw - 760.0).abs() < 1e-3, "{zdw}");
    let prov = read_json(&dir.path().join("provenance.json"));
    assert_eq!(prov["subcommand"], "zdw");
}

#[test]
fn zdw_from_dense_table_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let table = GvdTable::sample(default_d_ps_nm_km, 600.0, 950.0, 500, "dense").unwrap();
    let csv = dir.path().join("gvd.csv");
    std::fs::write(&csv, table.to_csv()).unwrap();
    let v = json_stdout(&pcfpair(&["zdw", "--json", "--gvd", csv.to_str().unwrap()], dir.path()));
    let builtin = default_model().zero_dispersion_wavelength().unwrap();
    assert!((v["zdw_nm"].as_f64().unwrap() - builtin).abs() < 1e-2);
}

#[test]
fn malformed_table_exits_2_and_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "wavelength_nm,D_ps_nm_km\n600,1\n700,oops\n").unwrap();
    let o = pcfpair(&["zdw", "--gvd", csv.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":3:"), "{err}");
}

#[test]
fn missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcfpair(&["zdw", "--gvd", "/nonexistent/gvd.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/gvd.csv"));
}

#[test]
fn table_without_zero_crossing_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pos.csv");
    std::fs::write(&csv, "wavelength_nm,D_ps_nm_km\n600,1\n700,2\n800,3\n900,4\n").unwrap();
    let o = pcfpair(&["zdw", "--gvd", csv.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn small_map_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcfpair(
        &["map", "--n-pump", "6", "--n-lambda", "40", "--oversample", "4", "--aggregate", "peak"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["map.csv", "map.svg", "solutions.csv", "provenance.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let rows = std::fs::read_to_string(dir.path().join("map.csv")).unwrap();
    let data = rows.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data, 1 + 6 * 40);
}

#[test]
fn decompose_recovers_quadratic_part() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for p in [0.02, 0.1] {
        let mut text = format!("# pump_power_W={p}\nlambda_nm,counts_per_s\n");
        for i in 0..20 {
            let l = 640.0 + i as f64;
            text += &format!("{l},{}\n", 50.0 * p + 3000.0 * p * p);
        }
        let path = dir.path().join(format!("s{p}.csv"));
        std::fs::write(&path, text).unwrap();
        paths.push(path);
    }
    let o = pcfpair(
        &["decompose", "--spectrum", paths[1].to_str().unwrap(), "--spectrum", paths[0].to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("decomposition.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("645")).unwrap();
    let cols: Vec<f64> = row.split(',').take(4).map(|c| c.parse().unwrap()).collect();
    assert!((cols[2] - 30.0).abs() < 1e-9, "{row}");
    assert!((cols[3] - 5.0).abs() < 1e-9, "{row}");
}

#[test]
fn oracle_fringe_has_classical_limit_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcfpair(&["fringe", "--mode", "oracle", "--points", "16", "--delta-l-cm", "5"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = read_json(&dir.path().join("fit.json"));
    let v = fit["visibility"].as_f64().unwrap();
    assert!((v - 0.5).abs() < 1e-3, "{v}");
}

fn simulate(dir: &Path, seed: &str) -> Output {
    pcfpair(
        &[
            "simulate", "--points", "8", "--duration-s", "0.2", "--pair-rate", "2e4", "--seed", seed,
            "--gate-ns", "6", "--gate-ns", "1.5", "--gate-ns", "0.5",
        ],
        dir,
    )
}

#[test]
fn simulation_is_reproducible_and_gates_nest() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = simulate(d.path(), "7");
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["tac.csv", "scan_T6ns.csv", "scan_T1.5ns.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let counts = |tag: &str| -> Vec<u64> {
        std::fs::read_to_string(a.path().join(format!("scan_{tag}.csv")))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("delta_x_nm"))
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let (wide, mid, narrow) = (counts("T6ns"), counts("T1.5ns"), counts("T0.5ns"));
    assert_eq!(wide.len(), 8);
    for i in 0..8 {
        assert!(wide[i] >= mid[i] && mid[i] >= narrow[i]);
    }
}

#[test]
fn bad_flag_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcfpair(&["fringe", "--mu", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

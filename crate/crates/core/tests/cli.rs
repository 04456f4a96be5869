//! End-to-end runs of the `mmchan` binary.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn mmchan(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mmchan"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    let input = stdin.unwrap_or("").to_string();
    let mut pipe = child.stdin.take().unwrap();
    let writer = std::thread::spawn(move || pipe.write_all(input.as_bytes()));
    let out = child.wait_with_output().unwrap();
    writer.join().unwrap().ok();
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const RAYS: &str = "link_id,delay_ns,aod_az_deg,aod_el_deg,aoa_az_deg,aoa_el_deg,power_db,xpr_db\n\
a,0,0,0,180,0,0,10\na,5,2,0,178,1,-3,12\na,8,-1,0,181,0,-6,11\n\
a,300,120,0,-60,0,-5,9\na,310,118,1,-58,0,-8,11\na,305,121,0,-61,1,-7,10\n\
b,10,40,0,-140,0,-2,\nb,15,42,0,-138,0,-4,\nb,400,-90,0,90,0,-9,\nb,410,-92,0,92,0,-11,\n";

#[test]
fn eval_output_fits_back_to_its_exponent() {
    let e = mmchan(&["eval", "--model", "ci", "--n", "2.73", "--freq", "28,38,73", "--dist-range", "10:500:40"], None);
    assert!(e.status.success(), "{}", stderr(&e));
    let f = mmchan(&["fit", "--input", "-", "--model", "ci"], Some(&stdout(&e)));
    assert!(f.status.success(), "{}", stderr(&f));
    let n = json(&f)["result"]["model"]["n"].as_f64().unwrap();
    assert!((n - 2.73).abs() < 1e-6, "n = {n}");
}

#[test]
fn eval_catalog_scenario_golden_value() {
    let o = mmchan(&["eval", "--model", "abg", "--scenario", "uma-nlos", "--freq", "28", "--dist", "100", "--format", "json"], None);
    assert!(o.status.success());
    let pl = json(&o)["result"][0]["pl_db"].as_f64().unwrap();
    assert!((pl - 120.485).abs() < 0.01, "{pl}");
}

#[test]
fn abg_for_los_scenario_is_rejected() {
    let o = mmchan(&["eval", "--model", "abg", "--scenario", "uma-los", "--freq", "28", "--dist", "100"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("N/A"), "{}", stderr(&o));
}

#[test]
fn malformed_row_names_its_line() {
    let o = mmchan(&["fit", "--input", "-", "--model", "ci"], Some("freq_ghz,dist_m,pl_db,los\n28,10,80,1\n28,x,90,1\n"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn weight_two_equals_duplicated_row() {
    let weighted = "freq_ghz,dist_m,pl_db,los,weight\n28,10,85,1,1\n28,100,112,0,2\n73,300,131,0,1\n";
    let duplicated = "freq_ghz,dist_m,pl_db,los\n28,10,85,1\n28,100,112,0\n28,100,112,0\n73,300,131,0\n";
    for model in ["ci", "cif", "abg"] {
        let a = json(&mmchan(&["fit", "--input", "-", "--model", model], Some(weighted)));
        let b = json(&mmchan(&["fit", "--input", "-", "--model", model], Some(duplicated)));
        let (ma, mb) = (&a["result"]["model"], &b["result"]["model"]);
        for (k, v) in ma.as_object().unwrap() {
            if let Some(x) = v.as_f64() {
                let y = mb[k].as_f64().unwrap();
                assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{model} {k}: {x} vs {y}");
            }
        }
        let (sa, sb) = (a["result"]["sf_sigma_db"].as_f64().unwrap(), b["result"]["sf_sigma_db"].as_f64().unwrap());
        assert!((sa - sb).abs() < 1e-9);
    }
}

#[test]
fn singular_fit_exits_with_numeric_code() {
    let one_freq = "freq_ghz,dist_m,pl_db,los\n28,10,85,1\n28,100,110,1\n28,200,118,1\n";
    let o = mmchan(&["fit", "--input", "-", "--model", "abg"], Some(one_freq));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn fit_writes_residuals_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let input = "freq_ghz,dist_m,pl_db,los\n28,10,85,1\n28,100,112,0\n73,300,131,0\n";
    let o = mmchan(&["fit", "--input", "-", "--model", "ci", "--out", path(&out)], Some(input));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.exists());
    let res = std::fs::read_to_string(dir.path().join("fit.json.residuals.csv")).unwrap();
    assert_eq!(res.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn csv_and_json_agree() {
    let args = ["losprob", "--dist-range", "5:300:30"];
    let csv = stdout(&mmchan(&[&args[..], &["--format", "csv"]].concat(), None));
    let js = json(&mmchan(&[&args[..], &["--format", "json"]].concat(), None));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    let arr = js["result"].as_array().unwrap();
    assert_eq!(rows.len(), arr.len());
    for (row, obj) in rows.iter().zip(arr) {
        let p: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(p, obj["p_d1d2"].as_f64().unwrap());
    }
}

#[test]
fn cluster_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let rays = dir.path().join("rays.csv");
    std::fs::write(&rays, RAYS).unwrap();
    let prefix = dir.path().join("run");
    let o = mmchan(&["cluster", "--input", path(&rays), "--restarts", "10", "--seed", "4", "--out", path(&prefix)], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let assignments = dir.path().join("run.assignments.csv");
    let first = std::fs::read(&assignments).unwrap();
    assert!(dir.path().join("run.clusters.json").exists());

    let again = mmchan(&["cluster", "--input", path(&rays), "--restarts", "10", "--seed", "4", "--out", path(&prefix)], None);
    assert!(again.status.success());
    assert_eq!(first, std::fs::read(&assignments).unwrap());

    let s = mmchan(&["stats", "--input", path(&rays), "--assignments", path(&assignments)], None);
    assert!(s.status.success(), "{}", stderr(&s));
    let v = json(&s);
    let links = v["result"].as_array().unwrap();
    assert_eq!(links.len(), 2);
    assert!(links[0]["report"]["clusters"].as_array().unwrap().len() >= 2);
    assert!(links[0]["report"]["xpr"].is_object());
}

#[test]
fn generated_seed_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let rays = dir.path().join("rays.csv");
    std::fs::write(&rays, RAYS).unwrap();
    let o = mmchan(&["cluster", "--input", path(&rays), "--restarts", "2"], None);
    assert!(o.status.success());
    let err = stderr(&o);
    let line = err.lines().find(|l| l.starts_with("seed: ")).expect("seed reported");
    assert!(line.ends_with("(generated)"));
    let seed: u64 = line["seed: ".len()..].split_whitespace().next().unwrap().parse().unwrap();
    assert_eq!(json(&o)["metadata"]["seed"].as_u64(), Some(seed));
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("eval.json");
    std::fs::write(&cfg, r#"{"model": "ci", "n": 2.0, "dist": [100]}"#).unwrap();
    let o = mmchan(&["eval", "--config", path(&cfg), "--freq", "28", "--format", "json"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let pl = json(&o)["result"][0]["pl_db"].as_f64().unwrap();
    assert!((pl - 101.391).abs() < 0.01);
    // command line wins over the file
    let o = mmchan(&["eval", "--config", path(&cfg), "--n", "3", "--freq", "28", "--format", "json"], None);
    let pl3 = json(&o)["result"][0]["pl_db"].as_f64().unwrap();
    assert!((pl3 - pl - 20.0).abs() < 1e-9);
}

#[test]
fn drop_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("drop.json");
    std::fs::write(
        &cfg,
        r#"{"scenario": {"los": "umi-sc-los", "nlos": "umi-sc-nlos"}, "frequency_ghz": 28, "ue_count": 2000,
            "placement": {"kind": "uniform_disc", "radius_m": 300}, "los_mode": {"mode": "stochastic", "model": "d1d2"},
            "indoor_fraction": 0.3, "high_loss_fraction": 0.5, "sf_mode": {"mode": "exp_correlated", "decorrelation_m": 20}}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let prefix = dir.path().join(name);
        let o = mmchan(&["drop", "--config", path(&cfg), "--seed", "11", "--out", path(&prefix)], None);
        assert!(o.status.success(), "{}", stderr(&o));
        (
            std::fs::read(dir.path().join(format!("{name}.links.csv"))).unwrap(),
            std::fs::read(dir.path().join(format!("{name}.summary.json"))).unwrap(),
        )
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let links = String::from_utf8(a.0).unwrap();
    assert!(links.starts_with("# seed=11\n"));
    assert_eq!(links.lines().filter(|l| !l.starts_with('#')).count(), 2001);
    let summary: Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn map_without_map_mode_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("drop.json");
    std::fs::write(
        &cfg,
        r#"{"scenario": {"los": "uma-los", "nlos": "uma-nlos"}, "frequency_ghz": 28, "ue_count": 10,
            "placement": {"kind": "uniform_disc", "radius_m": 100}, "los_mode": {"mode": "stochastic", "model": "d1d2"}}"#,
    )
    .unwrap();
    let map = dir.path().join("map.json");
    std::fs::write(&map, r#"{"polygons": [[[10, 10], [20, 10], [20, 20], [10, 20]]]}"#).unwrap();
    let o = mmchan(&["drop", "--config", path(&cfg), "--map", path(&map), "--seed", "1", "--out", path(&dir.path().join("x"))], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn map_mode_drop_uses_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("drop.json");
    std::fs::write(
        &cfg,
        r#"{"scenario": {"los": "umi-sc-los", "nlos": "umi-sc-nlos"}, "frequency_ghz": 28,
            "placement": {"kind": "explicit", "positions": [[50, 0], [50, 30], [25, 15]]},
            "los_mode": {"mode": "map"}}"#,
    )
    .unwrap();
    let map = dir.path().join("map.json");
    std::fs::write(&map, r#"{"polygons": [[[20, 10], [30, 10], [30, 20], [20, 20]]]}"#).unwrap();
    let prefix = dir.path().join("m");
    let o = mmchan(&["drop", "--config", path(&cfg), "--map", path(&map), "--seed", "1", "--out", path(&prefix)], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("m.links.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv.as_bytes());
    let h = rdr.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    let (los, indoor) = (col("los"), col("indoor"));
    let flags: Vec<(&str, &str)> = rows.iter().map(|r| (&r[los], &r[indoor])).collect();
    assert_eq!(flags, vec![("1", "0"), ("0", "0"), ("0", "1")]);
}

#[test]
fn catalog_lists_every_scenario() {
    let o = mmchan(&["catalog", "--format", "json"], None);
    assert!(o.status.success());
    assert_eq!(json(&o)["result"].as_array().unwrap().len(), 6);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = mmchan(&["eval", "--model", "ci", "--n", "2", "--freq", "28", "--bogus"], None);
    assert_eq!(o.status.code(), Some(2));
}

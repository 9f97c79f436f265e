use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_polar-skg");
const DBMS: &str = r#"{"kind":"dbms_chain","p_x":0.5,"p":0.05,"q":0.2,"z_present":true}"#;
const PATH3: &str = r#"{"kind":"markov_tree","m":3,"edges":[{"a":1,"b":2,"p":0.05},{"a":2,"b":3,"p":0.1}]}"#;
const TRI: &str = r#"{"kind":"markov_tree","m":3,"edges":[{"a":1,"b":2,"p":0.05},{"a":2,"b":3,"p":0.02}]}"#;

fn polar(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove(polar_skg::harness::OUT_DIR_ENV).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = polar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn dir_arg(d: &Path) -> String {
    d.to_str().unwrap().to_string()
}

fn files(d: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = dir_arg(d.path());
        ok_json(&[
            "run", "--model", "model1", "--source", DBMS, "--n", "64", "--k", "3", "--method", "mc", "--samples", "500",
            "--trials", "50", "--seed", "9", "--secrecy", "plug-in", "--out", &out,
        ]);
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), fb.len());
    assert!(!fa.is_empty());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        if x.to_str().unwrap().ends_with(".summary.json") {
            // Output paths differ between the two directories.
            let strip = |p: &Path| {
                let mut v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
                v.as_object_mut().unwrap().remove("files");
                v["config"].as_object_mut().unwrap().remove("out_dir");
                v
            };
            assert_eq!(strip(x), strip(y));
        } else {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{x:?}");
        }
    }
}

#[test]
fn replay_reproduces_every_model() {
    let cases: [(&str, &str, Option<&str>, &str); 4] = [
        ("model1", DBMS, None, "2"),
        ("model2", DBMS, Some("bsc:0.1"), "2"),
        ("model3-tri", TRI, None, "3"),
        ("model4", PATH3, None, "1"),
    ];
    for (model, source, ch, k) in cases {
        let d = tempfile::tempdir().unwrap();
        let out = dir_arg(d.path());
        let mut args = vec![
            "run", "--model", model, "--source", source, "--n", "8", "--k", k, "--trials", "3", "--seed", "4",
            "--secrecy", "off", "--dump-transcript", "--out", &out,
        ];
        if let Some(c) = ch {
            args.extend(["--channel", c]);
        }
        ok_json(&args);
        let replays: Vec<PathBuf> = files(d.path()).into_iter().filter(|p| p.to_str().unwrap().ends_with(".replay.json")).collect();
        assert_eq!(replays.len(), 3, "{model}");
        for r in replays {
            let v = ok_json(&["replay", r.to_str().unwrap()]);
            assert_eq!(v["transcript_identical"], Value::Bool(true), "{model}");
            assert_eq!(v["keys_identical"], Value::Bool(true), "{model}");
        }
    }
}

#[test]
fn tampered_replay_is_detected() {
    let d = tempfile::tempdir().unwrap();
    let out = dir_arg(d.path());
    ok_json(&["run", "--model", "model1", "--source", DBMS, "--n", "8", "--trials", "1", "--secrecy", "off", "--dump-transcript", "--out", &out]);
    let r = files(d.path()).into_iter().find(|p| p.to_str().unwrap().ends_with(".replay.json")).unwrap();
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    let key = &mut v["record"]["report"]["encoder_key"]["hex"];
    let hex = key.as_str().unwrap().to_string();
    let flipped = format!("{:x}", u8::from_str_radix(&hex[..1], 16).unwrap() ^ 0x8);
    *key = Value::String(format!("{flipped}{}", &hex[1..]));
    std::fs::write(&r, serde_json::to_string(&v).unwrap()).unwrap();
    let o = polar(&["replay", r.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn oracle_flags_corrupted_sets() {
    let d = tempfile::tempdir().unwrap();
    let sets = d.path().join("s.json");
    let sp = sets.to_str().unwrap();
    ok_json(&["construct", "--model", "model1", "--source", DBMS, "--n", "8", "--sets", sp]);
    let good = polar(&["oracle", "--model", "model1", "--source", DBMS, "--n", "8", "--sets", sp]);
    assert_eq!(good.status.code(), Some(0), "{}", String::from_utf8_lossy(&good.stderr));

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&sets).unwrap()).unwrap();
    let f_first = v["sets"]["F"][0].clone();
    let k = v["sets"]["K"].as_array_mut().unwrap();
    k.insert(0, f_first);
    std::fs::write(&sets, serde_json::to_string(&v).unwrap()).unwrap();
    let bad = polar(&["oracle", "--model", "model1", "--source", DBMS, "--n", "8", "--sets", sp]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("FAIL"));
}

#[test]
fn validation_errors_exit_2() {
    let bad_p = r#"{"kind":"dbms_chain","p_x":0.5,"p":1.5,"q":0.2,"z_present":true}"#;
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--model", "model1", "--source", DBMS, "--n", "12"],
        vec!["run", "--model", "model1", "--source", bad_p, "--n", "8"],
        vec!["construct", "--model", "model2", "--source", DBMS, "--n", "8"],
        vec!["construct", "--model", "model4", "--source", DBMS, "--n", "8"],
        vec!["construct", "--model", "model1", "--source", "{not json", "--n", "8"],
        vec!["run", "--model", "model1", "--source", DBMS, "--n", "8", "--k", "0"],
        vec!["construct", "--model", "model1", "--source", DBMS, "--n", "8", "--delta", "0.7"],
    ];
    for args in cases {
        let d = tempfile::tempdir().unwrap();
        let mut a = args.clone();
        let out = dir_arg(d.path());
        a.extend(["--out", &out]);
        let o = polar(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn infeasible_exits_3() {
    let src = r#"{"kind":"dbms_chain","p_x":0.5,"p":0.4,"q":0.01,"z_present":true}"#;
    let d = tempfile::tempdir().unwrap();
    let o = polar(&["construct", "--model", "model1", "--source", src, "--n", "8", "--delta", "0.05", "--out", &dir_arg(d.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn construct_writes_loadable_sets() {
    let d = tempfile::tempdir().unwrap();
    let sets = d.path().join("s.json");
    let sp = sets.to_str().unwrap();
    let summary = ok_json(&["construct", "--model", "model1", "--source", DBMS, "--n", "8", "--sets", sp]);
    let bundle: polar_skg::polarization::IndexSetBundle = serde_json::from_str(&std::fs::read_to_string(&sets).unwrap()).unwrap();
    let again = polar_skg::polarization::IndexSetBundle::load(&sets).unwrap();
    assert_eq!(bundle, again);
    let v = bundle.set("V_X|Z").unwrap().len();
    let h = bundle.set("H_X|Y").unwrap().len();
    let rate = summary["predicted_key_rate"].as_f64().unwrap();
    assert!((rate - (v as f64 - h as f64) / 8.0).abs() < 1e-12);
    assert_eq!(summary["sizes"]["K"].as_u64().unwrap() as usize, bundle.set("K").unwrap().len());

    // A run over the stored sets matches a run that constructs its own.
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = ["run", "--model", "model1", "--source", DBMS, "--n", "8", "--trials", "20", "--seed", "2"];
    let mut with_sets = common.to_vec();
    let ao = dir_arg(a.path());
    with_sets.extend(["--sets", sp, "--out", &ao]);
    let mut fresh = common.to_vec();
    let bo = dir_arg(b.path());
    fresh.extend(["--out", &bo]);
    assert_eq!(ok_json(&with_sets), ok_json(&fresh));
}

#[test]
fn model4_run_reports_no_leakage() {
    let d = tempfile::tempdir().unwrap();
    let row = ok_json(&["run", "--model", "model4", "--source", PATH3, "--n", "8", "--trials", "20", "--secrecy", "exact", "--out", &dir_arg(d.path())]);
    assert!(row["leakage_bits"].as_f64().unwrap().abs() < 1e-10);
    assert!(row["uniformity_bits"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn sweep_csv_has_a_row_per_length() {
    let d = tempfile::tempdir().unwrap();
    let out = polar(&[
        "run", "--model", "model1", "--source", DBMS, "--n", "16,32,64", "--method", "mc", "--samples", "300", "--trials",
        "10", "--secrecy", "off", "--out", &dir_arg(d.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = files(d.path()).into_iter().find(|p| p.to_str().unwrap().contains("-sweep-")).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let body = text.split_once('\n').unwrap().1;
    assert!(text.starts_with('#'));
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let ns: Vec<usize> = r
        .deserialize::<polar_skg::harness::RunRow>()
        .map(|row| row.unwrap().n)
        .collect();
    assert_eq!(ns, vec![16, 32, 64]);
}

#[test]
fn capacity_reports_reference_rate() {
    let v = ok_json(&["capacity", "--model", "model1", "--source", DBMS, "--n", "8"]);
    let c = v["capacity"]["value"].as_f64();
    assert!(c.is_some(), "{v}");
    // I(X;Y) − I(X;Z) for the chain: h(p ⋆ q) − h(p).
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let pq = 0.05 * 0.8 + 0.95 * 0.2;
    assert!((c.unwrap() - (h(pq) - h(0.05))).abs() < 1e-9, "{v}");
}

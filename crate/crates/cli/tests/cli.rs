use std::path::Path;
use std::process::{Command, Output};

fn pca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pca")).args(args).env_remove("PCA_WORKERS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn repo(p: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(p).to_string_lossy().into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn counterexamples_print_values_and_pass() {
    let o = pca(&["gaussian", "--counterexamples"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("-0.5000000000000") && s.contains("-0.3333333333333"), "{s}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
}

#[test]
fn exact_engine_at_time_zero_is_the_product_law() {
    let o = pca(&["localfield", "--engine", "regular-exact", "--kappa", "2", "--k", "0", "--pmf", "0.25,0.75"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let law: Vec<(String, f64)> = s
        .lines()
        .skip_while(|l| *l != "atom,weight")
        .skip(1)
        .map(|l| {
            let (a, w) = l.rsplit_once(',').unwrap();
            (a.trim_matches('"').to_string(), w.parse().unwrap())
        })
        .collect();
    assert_eq!(law.len(), 6);
    for (atom, w) in law {
        let ones = atom.chars().filter(|&c| c == '1').count() as i32;
        let mult = if atom.split('|').nth(1).unwrap() == "0,1" { 2.0 } else { 1.0 };
        let want = mult * 0.75f64.powi(ones) * 0.25f64.powi(3 - ones);
        assert!((w - want).abs() < 1e-12, "{atom}: {w} vs {want}");
    }
}

#[test]
fn runs_are_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["localfield", "--engine", "ugw", "--root-pmf", "0.2,0.3,0.5", "--rule", "contact:0.25", "--replicas", "3000", "--k", "2"],
        &["simulate", "--graph", "er:60:2", "--rule-file", &repo("rules/majority.toml"), "--k", "3", "--replicas", "4"],
        &["converge", "--family", "rr:3", "--sizes", "50,100", "--seeds", "3", "--k", "2", "--lf-replicas", "2000"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut outs = vec![];
        for w in ["1", "3"] {
            let out = dir.path().join(format!("{i}-{w}"));
            let mut a = args.to_vec();
            a.extend(["--seed", "17", "--workers", w, "--out", out.to_str().unwrap()]);
            let o = pca(&a);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            outs.push(read_dir_sorted(&out));
        }
        assert!(outs[0].iter().any(|(n, _)| n == "manifest.toml"));
        assert_eq!(outs[0], outs[1], "{args:?}");
    }
}

#[test]
fn manifest_repeats_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = pca(&["--config", &repo("configs/gw.toml"), "localfield", "--replicas", "2000", "--k", "2", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = a.join("manifest.toml");
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("seed = 20240611") && text.contains("replicas = 2000") && text.contains("k = 2"), "{text}");
    let o = pca(&["localfield", "--config", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_dir_sorted(&a), read_dir_sorted(&b));
}

#[test]
fn json_format_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = pca(&["gaussian", "--a", "0.4", "--b", "0.2", "--c", "0.1", "--k", "5", "--oracle", "--format", "json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("sweep.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows[5]["oracle_max_dev"].as_f64().unwrap() < 1e-12);
    assert!((rows[1]["A0"].as_f64().unwrap() - 1.28).abs() < 1e-12);
}

#[test]
fn validation_failures_exit_1() {
    for args in [
        &["localfield", "--engine", "gw", "--k", "2"][..],
        &["localfield", "--engine", "warp", "--seed", "1"],
        &["simulate", "--seed", "1", "--rule-file", "/nonexistent/rule.toml"],
        &["simulate", "--seed", "1", "--pmf", "0.5,0.6"],
        &["simulate", "--seed", "1", "--graph", "moebius:4"],
        &["localfield", "--engine", "regular-ensemble", "--seed", "1", "--policy", "windowed"],
        &["converge", "--bogus-flag"],
        &["selftest", "--only", "13"],
    ] {
        let o = pca(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn rule_file_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "kind = \"finite-kernel\"\nalphabet = [\"0\", \"1\"]\n[[row]]\nown = \"2\"\nhist = [1, 0]\np = [1.0, 0.0]\n").unwrap();
    let o = pca(&["simulate", "--seed", "1", "--rule-file", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn strict_key_miss_exits_2() {
    let o = pca(&["localfield", "--engine", "regular-ensemble", "--kappa", "1", "--replicas", "2", "--k", "4", "--rule", "flip:0.5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("conditioning key"));
}

#[test]
fn selftest_single_criteria() {
    for id in ["1", "2", "12"] {
        let o = pca(&["selftest", "--only", id]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains(",PASS,"));
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fairdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairdim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TOY: &str = "\
a,b,c,sex
3.0,1.0,0.2,f
-2.0,0.5,1.0,m
0.1,-1.0,2.0,f
1.0,1.0,-3.0,f
0.3,-0.2,0.1,m
2.2,0.4,-0.5,f
-1.5,-2.0,0.3,m
0.7,0.9,1.1,f
";

fn toy(dir: &TempDir) -> String {
    let p = dir.path().join("toy.csv");
    fs::write(&p, TOY).unwrap();
    path_str(&p).to_string()
}

fn s1(dir: &TempDir) -> String {
    let p = dir.path().join("s1.csv");
    let out = fairdim(&["gen", "--out", path_str(&p)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path_str(&p).to_string()
}

fn fit_json(args: &[&str]) -> Value {
    let out = fairdim(args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_writes_s1() {
    let dir = TempDir::new().unwrap();
    let p = s1(&dir);
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("x1,x2,group\n"));
    assert_eq!(text.lines().count(), 901);
    let p2 = dir.path().join("again.csv");
    fairdim(&["gen", "--out", path_str(&p2), "--seed", "42"]);
    assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
}

#[test]
fn fit_pca_reports_alpha_one() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let v = fit_json(&["fit", "--input", &input, "--sensitive-col", "sex", "--method", "pca", "--rank", "2"]);
    assert_eq!(v["method"], "pca");
    assert_eq!(v["alpha"], 1.0);
    assert_eq!(v["rank"], 2);
}

#[test]
fn fit_cfpca_respects_budget() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let out_path = dir.path().join("fit.json");
    let out = fairdim(&[
        "fit", "--input", &input, "--sensitive-col", "sex", "--method", "cfpca", "--rank", "3",
        "--output", path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let budget = v["budget"].as_f64().unwrap();
    assert!(v["metrics"]["err_a"].as_f64().unwrap() <= budget + 1e-9);
    assert!(v["metrics"]["err_b"].as_f64().unwrap() <= budget + 1e-9);
}

#[test]
fn fit_ufpca_improves_fairness_on_s1() {
    let dir = TempDir::new().unwrap();
    let input = s1(&dir);
    let base = ["fit", "--input", &input, "--sensitive-col", "group", "--rank", "1", "--method"];
    let pca = fit_json(&[&base[..], &["pca"]].concat());
    let uf = fit_json(&[&base[..], &["ufpca"]].concat());
    let f_pca = pca["metrics"]["fairness"].as_f64().unwrap();
    let f_uf = uf["metrics"]["fairness"].as_f64().unwrap();
    assert!(f_uf <= f_pca, "{f_uf} > {f_pca}");
}

#[test]
fn sweep_full_rank_and_balanced() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let out = fairdim(&["sweep", "--input", &input, "--sensitive-col", "sex", "--max-rank", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 9);
    for l in lines.iter().filter(|l| l["r"] == 3) {
        assert!(l["overall_err"].as_f64().unwrap().abs() < 1e-12);
    }

    let stem = dir.path().join("bal");
    let out = fairdim(&[
        "sweep", "--input", &input, "--sensitive-col", "sex", "--max-rank", "2", "--balanced",
        "--output", path_str(&stem),
    ]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert!(csv.starts_with("dataset_id,balanced,r,method,alpha,overall_err,err_a,err_b,disparity,fairness,runtime_ms\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("toy,true,1,pca,1.0,"));
    assert!(stem.with_extension("jsonl").exists());
}

#[test]
fn sweep_is_byte_identical_without_timing() {
    let dir = TempDir::new().unwrap();
    let input = s1(&dir);
    let run = |name: &str| {
        let stem = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_fairdim"))
            .args(["sweep", "--input", &input, "--sensitive-col", "group", "--max-rank", "2", "--no-timing", "--output", path_str(&stem)])
            .env("FAIRDIM_THREADS", if name == "one" { "1" } else { "4" })
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(stem.with_extension("jsonl")).unwrap(),
            fs::read(stem.with_extension("csv")).unwrap(),
        )
    };
    assert_eq!(run("one"), run("two"));
}

#[test]
fn plotdata_series() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);
    let stem = dir.path().join("rep");
    fairdim(&["sweep", "--input", &input, "--sensitive-col", "sex", "--max-rank", "3", "--output", path_str(&stem)]);
    let plots = dir.path().join("plots");
    let out = fairdim(&["plotdata", "--report", path_str(&stem.with_extension("jsonl")), "--out-dir", path_str(&plots)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["overall_error.csv", "fairness.csv", "group_errors.csv"] {
        let text = fs::read_to_string(plots.join(name)).unwrap();
        assert_eq!(text.lines().count(), 1 + 9, "{name}");
    }
    // csv and jsonl copies of the same report give identical series
    let plots_csv = dir.path().join("plots_csv");
    fairdim(&["plotdata", "--report", path_str(&stem.with_extension("csv")), "--out-dir", path_str(&plots_csv)]);
    for name in ["overall_error.csv", "fairness.csv", "group_errors.csv"] {
        assert_eq!(fs::read(plots.join(name)).unwrap(), fs::read(plots_csv.join(name)).unwrap());
    }

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = fairdim(&["plotdata", "--report", path_str(&empty), "--out-dir", path_str(&dir.path().join("e"))]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(dir.path().join("e/fairness.csv")).unwrap(), "method,r,fairness\n");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = toy(&dir);

    assert_eq!(code(&fairdim(&["fit", "--input", &input])), 1);
    assert_eq!(code(&fairdim(&["fit", "--input", &input, "--sensitive-col", "sex", "--method", "xyz", "--rank", "1"])), 1);
    assert_eq!(code(&fairdim(&["fit", "--input", &input, "--sensitive-col", "sex", "--method", "pca", "--rank", "1", "--tol", "0"])), 1);
    assert_eq!(code(&fairdim(&["fit", "--input", &input, "--sensitive-col", "sex", "--method", "pca", "--rank", "7"])), 1);
    assert_eq!(code(&fairdim(&["--help"])), 0);

    let missing = fairdim(&["fit", "--input", "/no/such.csv", "--sensitive-col", "sex", "--method", "pca", "--rank", "1"]);
    assert_eq!(code(&missing), 2);
    assert!(!missing.stderr.is_empty());
    assert_eq!(code(&fairdim(&["fit", "--input", &input, "--sensitive-col", "race", "--method", "pca", "--rank", "1"])), 2);

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{oops").unwrap();
    assert_eq!(code(&fairdim(&["plotdata", "--report", path_str(&bad), "--out-dir", path_str(dir.path())])), 2);

    let out = Command::new(env!("CARGO_BIN_EXE_fairdim"))
        .args(["sweep", "--input", &input, "--sensitive-col", "sex", "--max-rank", "1"])
        .env("FAIRDIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

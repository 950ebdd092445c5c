use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_diophantus"));
    c.env_remove("DIOPHANTUS_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema(name: &str) -> jsonschema::Validator {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../schemas/{name}.schema.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let errors: Vec<String> = schema(name)
        .iter_errors(v)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn rat(v: &Value) -> (i128, i128) {
    let s = v.as_str().expect("rational string");
    match s.split_once('/') {
        Some((n, d)) => (n.parse().unwrap(), d.parse().unwrap()),
        None => (s.parse().unwrap(), 1),
    }
}

#[test]
fn cf_golden_is_fibonacci() {
    let v = json_of(&["cf", "--theta", "rule:const:1", "--k", "20"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 21);
    let (mut a, mut b) = (1u64, 1u64);
    for r in rows {
        assert_eq!(r["q"].as_str().unwrap(), a.to_string());
        (a, b) = (b, a + b);
    }
}

#[test]
fn criterion_badly_approximable_divergent() {
    let v = json_of(&[
        "criterion",
        "--theta",
        "rule:const:2",
        "--psi",
        "power:c=1/4,alpha=1",
        "--kmax",
        "25",
    ]);
    assert_eq!(v["certificate"], "diverges-certified");
    assert!(v["reason"].as_str().unwrap().contains("badly approximable"));
    assert_eq!(v["partial_sums"].as_array().unwrap().len(), 26);
}

#[test]
fn laurent_partial_sums_are_half_integers() {
    let v = json_of(&[
        "laurent-criterion",
        "--field",
        "p=2",
        "--A",
        "rule:const-X",
        "--l",
        "affine:c=1",
        "--kmax",
        "100",
    ]);
    for (k, s) in v["partial_sums"].as_array().unwrap().iter().enumerate() {
        let (n, d) = rat(s);
        assert_eq!(n * 2, (k as i128 + 1) * d, "S_{k} = {n}/{d}");
    }
}

fn all_commands(dir: &Path) -> Vec<(&'static str, Vec<String>)> {
    let w = dir.join("w.json").display().to_string();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        ("cf", s(&["cf", "--theta", "sqrt2-1", "--k", "12"])),
        (
            "criterion",
            s(&[
                "criterion",
                "--theta",
                "golden",
                "--psi",
                "khintchine:phi=logpow:2",
                "--kmax",
                "12",
            ]),
        ),
        (
            "khintchine",
            s(&[
                "khintchine",
                "--theta",
                "rule:arith:1,1",
                "--phi",
                "pow:1/2",
                "--kmax",
                "10",
                "--sandwich",
                "4",
            ]),
        ),
        (
            "kurzweil-cond",
            s(&[
                "kurzweil-cond",
                "--psi",
                "power:c=1,alpha=1",
                "--phi",
                "pow:1,2",
                "--t",
                "geometric:3",
                "--imax",
                "4",
                "--theta",
                "golden",
            ]),
        ),
        (
            "omega-tau",
            s(&[
                "omega-tau",
                "--theta",
                "rule:doubling",
                "--tau",
                "3/2",
                "--kmax",
                "12",
            ]),
        ),
        (
            "sets",
            s(&[
                "sets",
                "--theta",
                "golden",
                "--psi",
                "power:c=1/4,alpha=1",
                "--k",
                "4",
            ]),
        ),
        (
            "simulate",
            s(&[
                "simulate",
                "--theta",
                "golden",
                "--psi",
                "power:c=1/5,alpha=1",
                "--m",
                "25",
                "--nlo",
                "10",
                "--nhi",
                "3000",
                "--seed",
                "9",
            ]),
        ),
        (
            "window-measure",
            s(&[
                "window-measure",
                "--theta",
                "golden",
                "--psi",
                "power:c=1/5,alpha=1",
                "--nlo",
                "5",
                "--nhi",
                "80",
            ]),
        ),
        ("tseng", s(&["tseng", "--l", "3", "--witness-out", &w])),
        (
            "laurent-cf",
            s(&[
                "laurent-cf",
                "--field",
                "p=2,m=2,mod=[1,1,1]",
                "--A",
                "periodic:{\"period\":[[2,1],[0,3]]}",
                "--k",
                "6",
            ]),
        ),
        (
            "laurent-criterion",
            s(&[
                "laurent-criterion",
                "--field",
                "p=3",
                "--A",
                "rule:const-X",
                "--l",
                "affine:s=2,c=0",
                "--kmax",
                "8",
                "--norms",
                "6",
            ]),
        ),
    ]
}

#[test]
fn every_subcommand_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in all_commands(dir.path()) {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let v = json_of(&args);
        assert_valid(name, &v);
    }
    let w: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("w.json")).unwrap()).unwrap();
    assert_valid("tseng-witness", &w);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in all_commands(dir.path()) {
        for fmt in ["json", "csv"] {
            let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
            a.extend(["--format", fmt]);
            let first = run(&a);
            let second = run(&a);
            assert!(first.status.success(), "{name}");
            assert_eq!(first.stdout, second.stdout, "{name} {fmt}");
        }
    }
}

#[test]
fn witness_file_loads_as_piecewise_psi() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    json_of(&["tseng", "--l", "3", "--witness-out", w.to_str().unwrap()]);
    let spec = format!("piecewise:@{}", w.display());
    let v = json_of(&[
        "criterion",
        "--theta",
        "rule:doubling",
        "--psi",
        &spec,
        "--kmax",
        "8",
    ]);
    assert_valid("criterion", &v);
}

#[test]
fn output_path_receives_machine_output_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("arcs.csv");
    let out = run(&[
        "window-measure",
        "--theta",
        "golden",
        "--psi",
        "power:c=1/5,alpha=1",
        "--nlo",
        "5",
        "--nhi",
        "40",
        "--format",
        "csv",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("lo_num,lo_den,hi_num,hi_den\n"));
    assert!(text.lines().count() > 1);
}

#[test]
fn input_errors_exit_one() {
    for args in [
        vec!["cf", "--theta", "nonsense"],
        vec![
            "criterion",
            "--theta",
            "golden",
            "--psi",
            "power:c=-1,alpha=1",
        ],
        vec!["cf", "--theta", "golden", "--no-such-flag"],
        vec!["laurent-cf", "--field", "p=4", "--A", "rule:const-X"],
        vec![
            "simulate",
            "--theta",
            "golden",
            "--psi",
            "power:c=1/5,alpha=1",
            "--nlo",
            "0",
            "--nhi",
            "10",
        ],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn refusals_exit_two() {
    for args in [
        vec!["cf", "--theta", "list:[1,2,3]", "--k", "10"],
        vec!["tseng", "--theta", "golden", "--l", "2"],
        vec![
            "window-measure",
            "--theta",
            "golden",
            "--psi",
            "power:c=1/5,alpha=1",
            "--nlo",
            "1",
            "--nhi",
            "500",
            "--cap",
            "100",
        ],
    ] {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn precision_profile_from_environment() {
    let low = bin()
        .args(["cf", "--theta", "golden", "--k", "3"])
        .env("DIOPHANTUS_PRECISION", "low")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&low.stdout).unwrap();
    assert_eq!(v["input"]["bits"], 96);
    let flag = bin()
        .args(["cf", "--theta", "golden", "--k", "3", "--bits", "300"])
        .env("DIOPHANTUS_PRECISION", "low")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&flag.stdout).unwrap();
    assert_eq!(v["input"]["bits"], 300);
    let bad = bin()
        .args(["cf", "--theta", "golden"])
        .env("DIOPHANTUS_PRECISION", "extreme")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("laurent-criterion"));
}

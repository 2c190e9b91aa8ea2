use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn photonopt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photonopt")).args(args).current_dir(cwd).env_remove("PHOTONOPT_DATA_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data_dir() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data")
}

#[test]
fn validate_passes_on_shipped_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = photonopt(&["validate"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 6);
    assert!(text.contains("8/8 checks passed"));
}

#[test]
fn validate_names_a_corrupt_table() {
    let dir = tempfile::tempdir().unwrap();
    for f in fs::read_dir(data_dir()).unwrap() {
        let p = f.unwrap().path();
        fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    fs::write(dir.path().join("au_nk.csv"), "wavelength_nm,n,k\n400,abc,1\n").unwrap();
    let out = photonopt(&["--data-dir", dir.path().to_str().unwrap(), "validate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("FAIL") && l.contains("data-tables")), "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("data-tables"));
}

#[test]
fn bench_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = photonopt(&["bench", "--instance", "mini-bragg", "--algo", "de", "--runs", "2", "--budget-override", "300", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("# resolved config (bench)"));
    let runs = dir.path().join("res/runs/mini-bragg/de");
    assert_eq!(fs::read_dir(&runs).unwrap().count(), 2);
    assert!(dir.path().join("res/aggregate.csv").is_file());

    let out = photonopt(&["plot", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svgs: Vec<_> = fs::read_dir(dir.path().join("res/plots"))
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("convergence_") && n.ends_with(".svg"))
        .collect();
    assert_eq!(svgs, ["convergence_mini-bragg.svg"]);
    let svg = fs::read_to_string(dir.path().join("res/plots/convergence_mini-bragg.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("de"));
}

#[test]
fn discover_with_mock_script_writes_archive() {
    let dir = tempfile::tempdir().unwrap();
    let script = "--- response\n# Description: first\n```python\n# mock-fitness: 0.4,0.2\nclass First:\n    pass\n```\n\
--- error quota exceeded\n\
--- response\n```python\n# mock-fitness: 0.3\nclass Second:\n    pass\n```\n";
    fs::write(dir.path().join("mock.txt"), script).unwrap();
    let out = photonopt(&["discover", "--mock-script", "mock.txt", "--evaluator", "scripted", "--total", "10", "--mu", "1", "--lambda", "3", "--out", "arch"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("arch/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 11);
    assert_eq!(fs::read_dir(dir.path().join("arch/candidates")).unwrap().count(), 10);
    assert!(stdout(&out).contains("strategy = (1+3)"));
}

#[test]
fn landscape_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = photonopt(&["landscape", "--instance", "ellipsometry", "--grid", "11", "--workers", "1", "--out", "l.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("l.csv")).unwrap();
    assert!(csv.contains("# budgeted=false"));
    assert!(dir.path().join("l.svg").is_file());
    let bad = photonopt(&["landscape", "--coords", "0,7"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(photonopt(&["--no-such-flag"], dir.path()).status.code(), Some(1));
    assert_eq!(photonopt(&["bench", "--algo", "simplex"], dir.path()).status.code(), Some(1));
    assert_eq!(photonopt(&["discover", "--plus", "--comma"], dir.path()).status.code(), Some(1));
    assert_eq!(photonopt(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "instance = \"mini-bragg\"\nalgo = [\"de\", \"cma-es\"]\nruns = 3\nseed = 42\nbudget-override = 200\nout = \"from-file\"\n").unwrap();
    let out = photonopt(&["--config", "run.toml", "bench", "--runs", "1", "--algo", "de"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("runs = 1"), "{text}");
    assert!(text.contains("seed = 42"));
    assert!(text.contains("algorithms = de\n"));
    assert_eq!(fs::read_dir(dir.path().join("from-file/runs/mini-bragg/de")).unwrap().count(), 1);

    fs::write(dir.path().join("bad.toml"), "runz = 3\n").unwrap();
    assert_eq!(photonopt(&["--config", "bad.toml", "validate"], dir.path()).status.code(), Some(1));
}

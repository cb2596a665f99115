use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclicspec"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn kernel_on_diag3_recovers_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["kernel", "--preset", "diag3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv(&dir.path().join("kernel.csv"));
    let row = rows
        .iter()
        .find(|r| r[col(&h, "beta_re")].parse::<f64>().unwrap() == 0.0)
        .expect("row for beta = i");
    assert!(row[col(&h, "error")].parse::<f64>().unwrap() < 1e-10);
    assert!((row[col(&h, "estimate_im")].parse::<f64>().unwrap() + 1.0).abs() < 1e-10);
}

#[test]
fn dual_convention_adds_columns() {
    let dir = tempfile::tempdir().unwrap();
    let plain = run(&["dirac", "--preset", "diag3"], &dir.path().join("plain"));
    let dual = run(&["dirac", "--preset", "diag3", "--dual-convention"], &dir.path().join("dual"));
    assert_eq!(plain.status.code(), Some(0));
    assert_eq!(dual.status.code(), Some(0));
    for file in ["dirac.csv", "representation.csv"] {
        let (hp, _) = csv(&dir.path().join("plain").join(file));
        let (hd, rows) = csv(&dir.path().join("dual").join(file));
        assert!(!hp.contains(&"expected_linear_re".to_string()));
        let (e, l) = (col(&hd, "expected_im"), col(&hd, "expected_linear_im"));
        for r in rows {
            let (a, b): (f64, f64) = (r[e].parse().unwrap(), r[l].parse().unwrap());
            assert_eq!(a, -b);
        }
    }
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "[kernel]\nname = \"gauss\"\n",
        "n = []\n",
        "preset = \"shift\"\nn = [\"400\"]\n",
        "n = [\"2\", \"1\"]\n",
        "seed = 3\n",
    ];
    for body in cases {
        let cfg = config(dir.path(), body);
        let cmd = if body.starts_with("[kernel]") { "kernel" } else { "measure" };
        let out = run(&[cmd, "--config", &cfg], &dir.path().join("out"));
        assert_eq!(out.status.code(), Some(1), "{body:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn measure_creates_missing_dir_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a/b/c");
    let b = dir.path().join("d");
    for d in [&a, &b] {
        let out = run(&["measure", "--preset", "diag3", "--seed", "5"], d);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let names = ["boxmasses_N1.csv", "discrepancy.csv", "spectrum.json", "atoms.json", "summary.json"];
    for n in names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
    let (h, rows) = csv(&a.join("boxmasses_N1.csv"));
    let m = col(&h, "mass");
    let occupied: Vec<f64> = rows.iter().map(|r| r[m].parse().unwrap()).filter(|x: &f64| *x > 0.0).collect();
    assert_eq!(occupied.len(), 3);
    for x in occupied {
        assert!((x - 1.0 / 3.0).abs() < 1e-10);
    }
}

#[test]
fn every_csv_has_a_header() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, preset) in [("isometry", "diag3"), ("selfadjoint", "sadj3"), ("kernel", "diag3")] {
        let d = dir.path().join(cmd);
        let out = run(&[cmd, "--preset", preset], &d);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|e| e == "csv") {
                let (h, _) = csv(&p);
                assert!(h.iter().all(|c| c.parse::<f64>().is_err()), "{}", p.display());
            }
        }
    }
}

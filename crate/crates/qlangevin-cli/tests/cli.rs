use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qlangevin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlangevin")).args(args).current_dir(dir).output().unwrap()
}

fn config(dir: &Path, text: &str) {
    fs::write(dir.join("p.cfg"), text).unwrap();
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

const FIG4: &str = "lambda_y=2\ngamma=12\nomega_c=1\ntemperature=0.1\n";

#[test]
fn roots_satisfy_identities() {
    let dir = tempfile::tempdir().unwrap();
    config(dir.path(), FIG4);
    let out = qlangevin(&["roots", "--config", "p.cfg"], dir.path());
    assert!(out.status.success());
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r.len(), 4);
    let sum: f64 = r.iter().map(|row| row[1]).sum();
    assert!((sum + 24.0).abs() < 1e-10);
}

#[test]
fn manifest_reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    config(dir.path(), FIG4);
    let d = dir.path();
    assert!(qlangevin(&["diffusion", "--config", "p.cfg", "--t-max", "3", "--steps", "6", "--out", "a.csv"], d).status.success());
    let manifest = fs::read_to_string(d.join("a.csv.manifest")).unwrap();
    assert!(manifest.contains("# result: asymptotic_xpiy = "));
    assert!(qlangevin(&["diffusion", "--config", "a.csv.manifest", "--t-max", "3", "--steps", "6", "--out", "b.csv"], d)
        .status
        .success());
    let (a, b) = (fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    assert_eq!(a, b);
    assert!(!a.contains(&b'\r'));
    let header = String::from_utf8(a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,pixpix,piypiy,pixpiy,xpix,xpiy,ypix,ypiy");
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    config(dir.path(), "gamma=-2\n");
    assert_eq!(qlangevin(&["roots", "--config", "p.cfg"], dir.path()).status.code(), Some(1));
    assert_eq!(qlangevin(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(qlangevin(&["figure", "9"], dir.path()).status.code(), Some(1));
    // equal friction without field: the two quadratics coincide
    config(dir.path(), "lambda_y=1\n");
    assert_eq!(qlangevin(&["roots", "--config", "p.cfg"], dir.path()).status.code(), Some(2));
    assert!(qlangevin(&["roots", "--config", "p.cfg", "--nudge"], dir.path()).status.success());
}

#[test]
fn asymptotic_variances_and_magnetization() {
    let dir = tempfile::tempdir().unwrap();
    config(dir.path(), FIG4);
    let out = qlangevin(&["variances", "--config", "p.cfg", "--asymptotic"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("pixpix,piypiy,pixpiy,xpix,xpiy,ypix,ypiy\n"));
    assert!(rows(&text)[0][0] > 0.0);

    let out = qlangevin(&["magnetism", "--config", "p.cfg", "--sweep", "omega_c:1:3:2"], dir.path());
    assert!(out.status.success());
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r.len(), 3);
    assert!(r.iter().all(|row| row[3] < 0.0));
}

#[test]
fn moments_from_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    config(dir.path(), FIG4);
    fs::write(dir.path().join("init.txt"), "mean_pix=1\nsigma_pixpix=0.5\nsigma_xx=0.2\n").unwrap();
    let out = qlangevin(&["moments", "--config", "p.cfg", "--initial", "init.txt", "--t-max", "1", "--steps", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r.len(), 5);
    assert_eq!(r[0][3], 1.0);
    assert!(r[4][3].abs() < 1.0);
}

#[test]
fn brute_oracle_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    config(dir.path(), FIG4);
    let args = ["variances", "--config", "p.cfg", "--t-max", "1", "--steps", "2"];
    let closed = rows(&String::from_utf8(qlangevin(&args, dir.path()).stdout).unwrap());
    let mut brute_args = args.to_vec();
    brute_args.extend(["--oracle", "brute"]);
    let brute = rows(&String::from_utf8(qlangevin(&brute_args, dir.path()).stdout).unwrap());
    for (a, b) in closed[2].iter().zip(&brute[2]) {
        assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

#[test]
fn figure_writes_curves_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlangevin(&["figure", "4", "--steps", "20", "--out", "fig"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS fig4.sigma_xx_monotone"));
    let csvs = fs::read_dir(dir.path().join("fig")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "csv").count();
    assert_eq!(csvs, 3);
}

#[test]
fn check_suite_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlangevin(&["check", "roots", "--out", "report.csv"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.starts_with("criterion,title,passed,"));

    config(dir.path(), FIG4);
    let out = qlangevin(&["check", "fdr", "--config", "p.cfg", "--tol", "1e-8"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("PASS fdr residual"));
}

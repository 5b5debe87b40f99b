use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str], env: &[(&str, &str)]) -> Output {
    let path = dir.join("run.ini");
    std::fs::write(&path, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fragkit"));
    cmd.args(args).arg("--config").arg(&path).arg("--out").arg(dir.join("out"));
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(dir: &Path, config: &str, args: &[&str]) -> i32 {
    let o = run(dir, config, args, &[]);
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const BOUNDARY_EXP: &str = "[kernel]\nfamily = boundary_binary\n[weight]\nfamily = exponential\nlog_base = 1\n[check]\neta0 = 2\n";

#[test]
fn kernel_info_classifies() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "[kernel]\nfamily = boundary_binary\n", &["kernel-info"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("classification = conserving"));
    assert_eq!(header(&d.path().join("out/mass.csv")), "y,mass,m_over_y");
    let o = run(d.path(), "[kernel]\nfamily = tabulated\ntable = 0,0,1,1\n", &["kernel-info"], &[]);
    assert!(stdout(&o).contains("classification = sub_conserving"));
}

#[test]
fn invalid_inputs_exit_two() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(d.path(), "[kernel]\nfamily = tabulated\ntable =\n", &["kernel-info"]), 2);
    assert_eq!(code(d.path(), "[kernel]\nfamily = boundary_binary\nbogus = 1\n", &["kernel-info"]), 2);
    assert_eq!(code(d.path(), "[nonsense]\n", &["kernel-info"]), 2);
    assert_eq!(code(d.path(), "[kernel]\nfamily = homogeneous_power\nnu = -3\n", &["kernel-info"]), 2);
    assert_eq!(code(d.path(), "[kernel]\nfamily = boundary_binary\n", &["kernel-info", "--tol", "-1"]), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_fragkit")).arg("kernel-info").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_weight_verdicts() {
    let d = TempDir::new().unwrap();
    let h = "[kernel]\nfamily = homogeneous_power\nnu = -1\n[weight]\nfamily = power\np = 2\n";
    let o = run(d.path(), h, &["check-weight"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(header(&d.path().join("out/ratio_curve.csv")), "y,log_n_omega,log_omega,ratio");
    assert!(d.path().join("out/report.txt").exists());

    let x2 = "[kernel]\nfamily = boundary_binary\n[weight]\nfamily = power\np = 2\n[check]\neta0 = 2\n";
    assert_eq!(code(d.path(), x2, &["check-weight"]), 3);
    assert_eq!(code(d.path(), BOUNDARY_EXP, &["check-weight"]), 0);
}

#[test]
fn build_weight_writes_certificate() {
    let d = TempDir::new().unwrap();
    let cfg = "[kernel]\nfamily = boundary_binary\n[build]\neta0 = 1\nkappa = 1\ny_max = 10\n";
    let o = run(d.path(), cfg, &["build-weight", "--seed", "3"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("certificate = pass"));
    assert_eq!(header(&d.path().join("out/weight.csv")), "x,log_omega");
    let cert = std::fs::read_to_string(d.path().join("out/certificate.csv")).unwrap();
    assert!(cert.starts_with("y,lhs,rhs,margin"));
    for line in cert.lines().skip(1) {
        let margin: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(margin >= -1e-6);
    }
}

#[test]
fn find_exp_weight_reports_parameters_or_none() {
    let d = TempDir::new().unwrap();
    let o = run(d.path(), "[search]\ndelta1 = 1\ndelta2 = 1\nd = 1.5\nb_m = 1\n", &["find-exp-weight"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("c = 2.5600000000000000e2"), "{}", stdout(&o));
    let o = run(d.path(), "[search]\ndelta1 = 1\ndelta2 = 1\nd = 1.5\nb_m = 1e6\n", &["find-exp-weight"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("result = none"));
}

#[test]
fn simulate_asserts_and_is_deterministic() {
    let d = TempDir::new().unwrap();
    let cfg = "[kernel]\nfamily = homogeneous_power\nnu = 0\n[rate]\nfamily = power\nalpha = 1\n[weight]\nfamily = power\np = 1\n[simulate]\nn = 128\nt_end = 0.5\ndt = 1e-2\n";
    let o = run(d.path(), cfg, &["simulate", "--assert", "positivity,mass,substochastic"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let traj = d.path().join("out/trajectory.csv");
    assert_eq!(header(&traj), "t,M0,M1,norm_omega,dust_mass");
    let first = std::fs::read(&traj).unwrap();
    let o = run(d.path(), cfg, &["simulate"], &[("FRAGKIT_THREADS", "1")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&traj).unwrap(), first);
    assert_eq!(code(d.path(), cfg, &["simulate", "--assert", "bogus"]), 2);
    assert_eq!(run(d.path(), cfg, &["simulate"], &[("FRAGKIT_THREADS", "zero")]).status.code(), Some(2));
}

#[test]
fn build_weight_is_deterministic_across_thread_counts() {
    let d = TempDir::new().unwrap();
    let cfg = "[kernel]\nfamily = boundary_binary\n[build]\neta0 = 1\nkappa = 1\ny_max = 5\n";
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let o = run(d.path(), cfg, &["build-weight", "--seed", "9"], &[("FRAGKIT_THREADS", threads)]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(d.path().join("out/weight.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn compare_weights_runs() {
    let d = TempDir::new().unwrap();
    let cfg = "[kernel]\nfamily = boundary_binary\n[weight]\nfamily = power\np = 2\n[weight2]\nfamily = exponential\nlog_base = 1\n[compare]\nx_min = 2\nx_max = 10\n";
    let o = run(d.path(), cfg, &["compare-weights"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("hypothesis_holds = true"));
    assert_eq!(header(&d.path().join("out/comparison.csv")), "y,ratio_first,ratio_second");
}

#[test]
fn floats_use_scientific_format() {
    let d = TempDir::new().unwrap();
    run(d.path(), BOUNDARY_EXP, &["check-weight"], &[]);
    let body = std::fs::read_to_string(d.path().join("out/ratio_curve.csv")).unwrap();
    let row = body.lines().nth(1).unwrap();
    for field in row.split(',') {
        let (mantissa, _) = field.split_once('e').unwrap();
        assert_eq!(mantissa.split_once('.').unwrap().1.len(), 16, "{field}");
    }
}

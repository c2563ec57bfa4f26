//! End-to-end runs of the `wzfbm` binary.

use std::path::Path;
use std::process::{Command, Output};

use wzfbm::cli::fmt17;
use wzfbm::{
    besov_report, generate_path, theta, young_integral, BesovExponent, HurstParam, SamplerMethod,
    ThetaMethod, TimeGrid,
};

fn wzfbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wzfbm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(path: &Path, index: usize) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap()[index].parse().unwrap())
        .collect()
}

#[test]
fn generate_writes_header_and_reproducible_rows() {
    let args = ["generate", "--H", "0.6", "--n", "16", "--m", "2", "--seed", "5"];
    let a = stdout(&wzfbm(&args));
    assert_eq!(a, stdout(&wzfbm(&args)));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "t,component_1,component_2");
    assert_eq!(lines.len(), 18);
    assert!(lines[1].starts_with("0,0,0"));

    let grid = TimeGrid::new(1.0, 16).unwrap();
    let path = generate_path(grid, HurstParam::new(0.6).unwrap(), 2, 5, 0, SamplerMethod::Auto).unwrap();
    let last: Vec<&str> = lines[17].split(',').collect();
    assert_eq!(last[1], fmt17(path.component(0)[16]));
    assert_eq!(last[2], fmt17(path.component(1)[16]));
}

#[test]
fn generated_paths_feed_norms_and_integrate() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let g = dir.path().join("g.csv");
    for (file, rep) in [(&f, "0"), (&g, "1")] {
        stdout(&wzfbm(&[
            "generate", "--H", "0.7", "--n", "128", "--replicate", rep, "--out",
            file.to_str().unwrap(),
        ]));
    }
    let fv = column(&f, 1);
    let gv = column(&g, 1);
    let step = 1.0 / 128.0;

    let norms = stdout(&wzfbm(&["norms", "--in", f.to_str().unwrap(), "--beta", "0.35"]));
    let row: Vec<&str> = norms.lines().nth(1).unwrap().split(',').collect();
    let r = besov_report(&fv, step, BesovExponent::new(0.35).unwrap(), 0.5).unwrap();
    assert_eq!(row[0], fmt17(r.norm_1_1mb));
    assert_eq!(row[1], fmt17(r.norm_beta_inf));
    assert_eq!(row[2], fmt17(r.norm_2_beta));
    assert_eq!(row[3], fmt17(r.holder));

    let young = stdout(&wzfbm(&[
        "integrate", "--f", f.to_str().unwrap(), "--g", g.to_str().unwrap(),
    ]));
    let expected = young_integral(&fv, &gv).unwrap();
    let last = young.lines().last().unwrap();
    assert_eq!(last, format!("{},{}", fmt17(1.0), fmt17(expected[128])));

    let gls = stdout(&wzfbm(&[
        "integrate", "--f", f.to_str().unwrap(), "--g", g.to_str().unwrap(), "--method", "gls",
    ]));
    let v: f64 = gls.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - expected[128]).abs() < 0.05 * (1.0 + expected[128].abs()), "{v} vs {}", expected[128]);
}

#[test]
fn dumped_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let flags = [
        "--H", "0.7", "--n", "256", "--deltas", "2^-2..2^-4", "--paths", "40", "--seed", "3",
    ];
    let mut dump = vec!["wz-error", "--dump-config"];
    dump.extend(flags);
    std::fs::write(&cfg, stdout(&wzfbm(&dump))).unwrap();

    let mut direct = vec!["wz-error"];
    direct.extend(flags);
    let a = stdout(&wzfbm(&direct));
    let b = stdout(&wzfbm(&["rate", "--config", cfg.to_str().unwrap()]));
    assert_eq!(a, b);
    assert!(a.starts_with("delta,mean_error,std_error,exact,n_paths\n"));
    assert!(a.trim_end().lines().last().unwrap().starts_with("# slope="));
}

#[test]
fn theta_prints_seventeen_digits() {
    let out = stdout(&wzfbm(&["theta", "--H", "0.3", "--x", "2.5"]));
    let v = theta(2.5, HurstParam::new(0.3).unwrap(), ThetaMethod::ClosedForm).unwrap();
    assert_eq!(out.trim(), fmt17(v));
}

#[test]
fn injected_power_law_recovers_exponent() {
    let out = stdout(&wzfbm(&["rate", "--inject", "e=3*d^0.15", "--deltas", "2^-2..2^-9"]));
    let last = out.trim_end().lines().last().unwrap();
    let slope: f64 = last
        .strip_prefix("# slope=")
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope - 0.15).abs() < 1e-12, "{last}");
}

#[test]
fn bad_input_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let uneven = dir.path().join("uneven.csv");
    std::fs::write(&uneven, "t,x\n0,0\n0.1,1\n0.3,2\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["generate", "--H", "1.5", "--n", "8"],
        vec!["generate", "--n", "8"],
        vec!["no-such-command"],
        vec!["wz-error", "--H", "0.7", "--beta", "0.1", "--deltas", "0.1"],
        vec!["norms", "--in", uneven.to_str().unwrap(), "--beta", "0.2"],
        vec!["rate", "--inject", "e=d", "--deltas", "0.1,0.01"],
    ];
    for args in cases {
        let o = wzfbm(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

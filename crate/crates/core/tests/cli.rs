use std::fs;
use std::path::Path;
use std::process::Command;

fn multistage(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_multistage"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = multistage(&["simulate", "--setting", "1", "--seed", "3", "--out", p(&out)]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let data = out.join("data.csv");
    assert_eq!(rows(&data), 1000);
    assert!(out.join("manifest.conf").exists());

    let fit = multistage(&["fit-em", "--input", p(&data), "--out", p(&out)]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    assert_eq!(rows(&out.join("params_em.csv")), 14);

    let naive = multistage(&["fit-naive", "--input", p(&data), "--out", p(&out)]);
    assert!(naive.status.success());
    assert_eq!(rows(&out.join("params_naive.csv")), 6);
}

#[test]
fn manifest_rerun_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert!(multistage(&["simulate", "--seed", "11", "--out", p(&sim)]).status.success());
    let data = sim.join("data.csv");
    assert!(multistage(&["fit-em", "--seed", "5", "--input", p(&data), "--out", p(&first)]).status.success());
    let manifest = first.join("manifest.conf");
    assert!(multistage(&["fit-em", "--config", p(&manifest), "--out", p(&second)]).status.success());
    for file in ["params_em.csv", "fit_em_meta.txt", "fit_em_trace.csv"] {
        assert_eq!(fs::read(first.join(file)).unwrap(), fs::read(second.join(file)).unwrap(), "{file}");
    }

    let sim2 = dir.path().join("sim2");
    assert!(multistage(&["simulate", "--config", p(&sim.join("manifest.conf")), "--out", p(&sim2)]).status.success());
    assert_eq!(fs::read(&data).unwrap(), fs::read(sim2.join("data.csv")).unwrap());
}

#[test]
fn disparity_analog_reports_by_group() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(multistage(&["simulate", "--setting", "disparity", "--seed", "2", "--out", p(&out)]).status.success());
    let report = multistage(&[
        "report",
        "--config",
        p(&out.join("columns.conf")),
        "--input",
        p(&out.join("data.csv")),
        "--out",
        p(&out),
    ]);
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let groups: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(groups, vec!["overall", "0", "1"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(multistage(&["simulate", "--setting", "7", "--out", p(&out)]).status.code(), Some(1));
    assert_eq!(multistage(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(multistage(&["--help"]).status.code(), Some(0));
    let absent = dir.path().join("absent.csv");
    assert_eq!(multistage(&["fit-em", "--input", p(&absent), "--out", p(&out)]).status.code(), Some(3));

    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "em.maxiter = 3\n").unwrap();
    assert_eq!(multistage(&["fit-em", "--config", p(&cfg)]).status.code(), Some(1));

    // every subject in one first-stage category leaves a naive stratum empty
    let one_sided = dir.path().join("one_sided.csv");
    fs::write(&one_sided, "x,z1,z2,ystar1,ystar2\n0.1,1,1,1,1\n0.5,2,2,1,2\n-0.4,1,3,1,1\n").unwrap();
    let failed = multistage(&["fit-naive", "--input", p(&one_sided), "--out", p(&out)]);
    assert_eq!(failed.status.code(), Some(2));
    assert!(out.join("fit-naive.FAILED").exists());
}

use std::fs;

use multistage::em::{fit_em, EmConfig};
use multistage::io::{dataset_csv, load_csv, mapping_for, ColumnMapping, OutcomeCoding};
use multistage::model::Class;
use multistage::simgen::{generate, preset};

const FIVE_ROWS: &str = "x,z1,z2,ystar1,ystar2\n\
0.5,1.2,0.3,1,1\n\
-1.25,0.4,2.5,2,1\n\
0,3,0.1,1,2\n\
2.75,0.05,1.5,2,2\n\
-0.3,1,1,1,1\n";

#[test]
fn five_row_fixture_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("five.csv");
    fs::write(&path, FIVE_ROWS).unwrap();
    let loaded = load_csv(&path, &ColumnMapping::default()).unwrap();
    assert_eq!(loaded.data.len(), 5);
    assert_eq!(loaded.dropped, 0);
    assert_eq!(loaded.coding, OutcomeCoding::OneTwo);
    assert_eq!(loaded.data.x().column(1), vec![0.5, -1.25, 0.0, 2.75, -0.3]);
    assert_eq!(loaded.data.ystar2()[2], Class::Two);

    let written = dataset_csv(&loaded.data, &[]).unwrap();
    let again_path = dir.path().join("again.csv");
    fs::write(&again_path, &written).unwrap();
    let again = load_csv(&again_path, &ColumnMapping::default()).unwrap();
    assert_eq!(again.data, loaded.data);
    assert_eq!(dataset_csv(&again.data, &[]).unwrap(), written);
}

#[test]
fn rows_with_missing_cells_are_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blank.csv");
    let text = FIVE_ROWS.replace("0,3,0.1,1,2", "0,,0.1,1,2").replace("-0.3,1,1,1,1", "-0.3,1,1,NA,1");
    fs::write(&path, text).unwrap();
    let loaded = load_csv(&path, &ColumnMapping::default()).unwrap();
    assert_eq!((loaded.data.len(), loaded.dropped), (3, 2));
}

#[test]
fn zero_one_outcomes_are_recoded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("binary.csv");
    fs::write(&path, "x,z1,z2,ystar1,ystar2\n1,1,1,1,0\n2,2,2,0,0\n3,3,3,1,1\n").unwrap();
    let loaded = load_csv(&path, &ColumnMapping::default()).unwrap();
    assert_eq!(loaded.coding, OutcomeCoding::ZeroOne);
    assert_eq!(loaded.data.ystar1(), &[Class::One, Class::Two, Class::One]);
    assert_eq!(loaded.data.ystar2(), &[Class::Two, Class::Two, Class::One]);
}

#[test]
fn bad_values_report_the_file_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x,z1,z2,ystar1,ystar2\n1,1,1,1,2\n,1,1,1,2\n2,abc,2,2,2\n").unwrap();
    let err = load_csv(&path, &ColumnMapping::default()).unwrap_err();
    assert!(err.to_string().contains("row 3"), "{err}");
    assert_eq!(err.exit_code(), 3);
    let missing = load_csv(&dir.path().join("absent.csv"), &ColumnMapping::default()).unwrap_err();
    assert_eq!(missing.exit_code(), 3);
}

#[test]
fn csv_round_trip_reproduces_the_in_memory_fit() {
    let mut c = preset(1).unwrap();
    c.n = 400;
    c.seed = 21;
    let g = generate(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    fs::write(&path, dataset_csv(&g.data, &[]).unwrap()).unwrap();
    let loaded = load_csv(&path, &mapping_for(&g.data, None)).unwrap();
    assert_eq!(loaded.data, g.data);
    let a = fit_em(&g.data, &EmConfig::default(), None).unwrap();
    let b = fit_em(&loaded.data, &EmConfig::default(), None).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.loglik_trace, b.loglik_trace);
}

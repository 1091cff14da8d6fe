use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn pk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pk-tablex"))
        .args(args)
        .env_remove("PK_TABLEX_ONTOLOGY")
        .output()
        .expect("run pk-tablex")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn extract_writes_csv_to_stdout() {
    let doc = fixtures().join("corpus/10.1016_j.xphs.2017.03.032.xml");
    let out = pk(&["extract", "--input", path(&doc), "--mode", "records", "--params", "clearance"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("doc_id,table_id,"));
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",clearance,") && lines[1].contains(",Dog1,"));
    assert!(stderr(&out).contains("records 2, sentences 0"));
}

#[test]
fn extract_writes_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.csv");
    let out = pk(&["extract", "--input", path(&fixtures().join("corpus")), "--output", path(&target), "--jobs", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let csv = fs::read_to_string(&target).unwrap();
    assert!(csv.lines().count() > 100);
    assert!(!csv.contains('\r'));
}

#[test]
fn empty_directory_still_writes_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = pk(&["extract", "--input", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn malformed_document_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixtures().join("broken/truncated.xml"), dir.path().join("truncated.xml")).unwrap();
    fs::copy(
        fixtures().join("corpus/10.1016_j.xphs.2017.03.032.xml"),
        dir.path().join("good.xml"),
    )
    .unwrap();
    let out = pk(&["extract", "--input", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("failed: truncated"));
    assert!(stdout(&out).contains("good,"));
}

#[test]
fn configuration_errors_exit_one() {
    let doc = fixtures().join("corpus/10.1016_j.xphs.2017.03.032.xml");
    let out = pk(&["extract", "--input", path(&doc), "--params", "clearance,bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus"));
    assert!(stdout(&out).is_empty());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[[parameter]]\ncanonical = \"x\"\npatterns = [\"(\"]\n").unwrap();
    let out = pk(&["extract", "--input", path(&doc), "--ontology", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.toml:3"), "{}", stderr(&out));
}

#[test]
fn ontology_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let extra = dir.path().join("extra.toml");
    fs::write(&extra, "[[parameter]]\ncanonical = \"renal fraction\"\npatterns = [\"f e\"]\n").unwrap();
    let doc = fixtures().join("corpus/10.1016_j.xphs.2017.03.032.xml");
    let out = Command::new(env!("CARGO_BIN_EXE_pk-tablex"))
        .args(["extract", "--input", path(&doc), "--mode", "records", "--params", "renal fraction"])
        .env("PK_TABLEX_ONTOLOGY", &extra)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).matches(",renal fraction,").count(), 2);
}

#[test]
fn usage_errors_exit_one() {
    let out = pk(&["extract", "--input", "x", "--jobs", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--jobs"));
}

#[test]
fn validate_reports_each_table() {
    let out = pk(&["validate", "--input", path(&fixtures().join("spans_table2a.xml"))]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "spans_table2a\tTable 2\t5x6\tok");

    let out = pk(&["validate", "--input", path(&fixtures().join("broken"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).starts_with("truncated\t-\t-\tfailed: "));
}

#[test]
fn dump_grids_goes_to_stderr() {
    let doc = fixtures().join("spans_table2a.xml");
    let out = pk(&["extract", "--input", path(&doc), "--mode", "sentences", "--dump-grids"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains(">>> spans_table2a\tTable 2"));
}

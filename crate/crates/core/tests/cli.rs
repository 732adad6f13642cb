use std::io::Write;
use std::process::{Command, Output};

fn ordpat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordpat")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn normalizes_terms() {
    let o = ordpat(&["norm", "k[a]*(w)+k[a]*2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "k[a]*(w+2)");
}

#[test]
fn parse_errors_exit_with_two() {
    let o = ordpat(&["norm", "k["]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[ParseError]"));
}

#[test]
fn unknown_subcommands_exit_with_two() {
    assert_eq!(ordpat(&["bogus"]).status.code(), Some(2));
}

#[test]
fn relation_queries_report_rules_as_json() {
    let o = ordpat(&["--json", "rel", "v[1]", "k[a]*3", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "False");
    assert_eq!(v["k"], 2);
    assert!(!v["trace"].as_array().unwrap().is_empty());
}

#[test]
fn collapse_commands() {
    assert_eq!(stdout(&ordpat(&["iota", "--xi", "w", "a"])).trim(), "k[a]*(w+1)");
    assert_eq!(stdout(&ordpat(&["phi", "--xi", "1", "k[a]*3"])).trim(), "a");
    assert_eq!(stdout(&ordpat(&["dom", "--xi", "w^2"])).trim(), "[0, a*3]");
    assert_eq!(ordpat(&["iota", "--xi", "w", "k[a]"]).status.code(), Some(1));
}

#[test]
fn missing_table_entries_exit_with_three() {
    let o = ordpat(&["dom", "--xi", "w^w"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("OracleGap"));
}

#[test]
fn extra_table_entries_close_gaps() {
    let o = ordpat(&["--oracle", "a*(w)=a*(w)+a", "dom", "--xi", "w^w"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "[0, a*(w+1)]");
}

#[test]
fn finds_least_coverings() {
    let o = ordpat(&["cover", "find", "k[a]*2,k[a]*3", "0,k[a],k[a]*2,k[a]*3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "k[a]*2->k[a], k[a]*3->k[a]*2");
}

#[test]
fn decomposes_sets() {
    let o = ordpat(&["decomp", "k[1],k[a]+k[2],k[a]*2"]);
    assert_eq!(stdout(&o), "0: {k[1]}\nk[a]: {k[2]}\nk[a]*2: {0}\n");
}

#[test]
fn verification_suite_passes_by_default() {
    let o = ordpat(&["verify", "suite"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn config_files_set_parameters() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# shifted interval starts").unwrap();
    writeln!(f, "nu_offset = 2").unwrap();
    let path = f.path().to_str().unwrap();
    let o = ordpat(&["--config", path, "verify", "recurrence2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));
    let o = ordpat(&["--config", path, "--nu-offset", "1", "verify", "recurrence2"]);
    assert_eq!(o.status.code(), Some(0));
}

use std::process::Command;

fn privshape() -> Command {
    Command::new(env!("CARGO_BIN_EXE_privshape"))
}

#[test]
fn generate_run_and_rescore() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out");
    let st = privshape()
        .args(["generate", "--days", "9", "--seed", "5", "-o"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(data.join("scenario.toml").exists());

    let st = privshape()
        .args(["run", "--days", "1", "-c"])
        .arg(data.join("scenario.toml"))
        .arg("-o")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());

    let mut rdr = csv::Reader::from_path(out.join("report.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let field = |name: &str| row[headers.iter().position(|h| h == name).unwrap()].to_string();

    let scored = privshape()
        .args(["score", "--x-max", &field("x_max"), "--profiles"])
        .arg(out.join("profiles.csv"))
        .output()
        .unwrap();
    assert!(scored.status.success());
    let text = String::from_utf8(scored.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let h = r.headers().unwrap().clone();
    let rec = r.records().next().unwrap().unwrap();
    let iid = &rec[h.iter().position(|c| c == "iid_mi_bits").unwrap()];
    assert_eq!(iid.parse::<f64>().unwrap(), field("iid_mi_bits").parse::<f64>().unwrap());
}

#[test]
fn bad_input_exits_two() {
    let st = privshape().args(["score", "--load", "/nonexistent.csv", "--grid", "/nonexistent.csv"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).starts_with("error:"));
}

#[test]
fn theory_report_passes() {
    let out = privshape().args(["theory", "--samples", "20000", "--format", "csv"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

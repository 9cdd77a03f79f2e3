use std::fs;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tokenlink"));
    c.env("RUST_LOG", "off");
    c
}

#[test]
fn missing_input_is_fatal_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "output_dir = \"out\"\n[patient]\npath = \"nope.csv\"\n[external]\npath = \"nope2.csv\"\n").unwrap();
    for cmd in ["normalize", "profile", "link"] {
        let status = bin().args([cmd, "--config"]).arg(&cfg).status().unwrap();
        assert_eq!(status.code(), Some(1), "{cmd}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn synth_then_link_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ok = bin().args(["synth", "--seed", "5", "--n-persons", "300", "--out"]).arg(&data).status().unwrap();
    assert!(ok.success());
    let out = dir.path().join("report");
    let ok = bin().args(["--threads", "2", "link", "--config"]).arg(data.join("run.toml")).arg("--out").arg(&out).status().unwrap();
    assert!(ok.success());
    let linked = fs::read_to_string(out.join("linked_deaths.csv")).unwrap();
    assert!(linked.starts_with("record_id,dod_patient,dod_external,category,token_id"));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["results"]["truth_score"]["false_negative"], 0);
}

#[test]
fn row_errors_above_threshold_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.csv"),
        "record_id,first_name,middle_name,last_name,birth_date,death_date,ssn\n1,A,,B,19500101,,123456780\n1,C,,D,19600101,,234567801\n",
    )
    .unwrap();
    fs::write(dir.path().join("run.toml"), "[patient]\npath = \"p.csv\"\n").unwrap();
    let status = bin().arg("normalize").arg("--config").arg(dir.path().join("run.toml")).status().unwrap();
    assert_eq!(status.code(), Some(2));
    fs::write(dir.path().join("run.toml"), "row_error_threshold = 1\n[patient]\npath = \"p.csv\"\n").unwrap();
    let status = bin().arg("normalize").arg("--config").arg(dir.path().join("run.toml")).status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn merge_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let head = "record_id,first_name,middle_name,last_name,birth_date,death_date,ssn\n";
    fs::write(dir.path().join("a.csv"), format!("{head}1,A,,B,19500101,20000101,123456780\n")).unwrap();
    fs::write(dir.path().join("b.csv"), format!("{head}2,A,,B,19500101,20000102,123-45-6780\n")).unwrap();
    let out = dir.path().join("m");
    let status = bin()
        .arg("merge")
        .arg("--existing")
        .arg(dir.path().join("a.csv"))
        .arg("--update")
        .arg(dir.path().join("b.csv"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        fs::read_to_string(out.join("merged.csv")).unwrap(),
        format!("{head}2,A,,B,19500101,20000102,123-45-6780\n")
    );
}

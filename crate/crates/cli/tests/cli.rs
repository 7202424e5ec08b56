use std::path::Path;
use std::process::{Command, Output};

fn netvax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netvax"))
        .args(args)
        .env_remove("NETVAX_DATASET")
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_dataset_is_a_config_error() {
    let out = netvax(&["validate-dataset", "/definitely/not/here.txt"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_dataset_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("log.txt");
    std::fs::write(&file, "20 a b\nnot a record\n").unwrap();
    let out = netvax(&["validate-dataset", path_arg(&file)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn valid_dataset_is_summarised() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("log.txt");
    std::fs::write(&file, "20 a b\n20 b c\n40 a c\n").unwrap();
    let out = netvax(&["validate-dataset", path_arg(&file), "--window", "1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("3 nodes"), "{text}");
    assert!(text.contains("2 snapshots"), "{text}");
}

#[test]
fn zero_runs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = netvax(&["run", "--runs", "0", "--out", path_arg(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "scenario = \"multilayer\"\nrunz = 3\n").unwrap();
    let out = netvax(&["run", "--config", path_arg(&cfg), "--out", path_arg(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn small_multilayer_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "scenario = \"multilayer\"\nruns = 2\n[multilayer]\nsteps = 6\ndoses = 2\nconditions = [\"ci_b\"]\n[multilayer.network]\nlayer_size = 20\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = netvax(&["run", "--config", path_arg(&cfg), "--out", path_arg(&out_dir), "--seed", "5", "--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["summary_multilayer_ci_b.csv", "probs_ci_b.csv", "multilayer_ci_b.svg", "resolved_config.toml"] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let resolved = std::fs::read_to_string(out_dir.join("resolved_config.toml")).unwrap();
    assert!(resolved.contains("root_seed = 5"));
}

#[test]
fn generate_and_detect_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = netvax(&["generate-multilayer", "--out", path_arg(dir.path()), "--ci", "ci_d"]);
    assert_eq!(code(&out), 0);
    let layers = std::fs::read_to_string(dir.path().join("multilayer_layers.csv")).unwrap();
    assert_eq!(layers.lines().count(), 1001);

    let out = netvax(&["generate-multilayer", "--out", path_arg(dir.path()), "--ci", "ci_z"]);
    assert_eq!(code(&out), 2);

    let out = netvax(&["detect-communities", "--out", path_arg(dir.path())]);
    assert_eq!(code(&out), 0);
    let rows = std::fs::read_to_string(dir.path().join("communities.csv")).unwrap();
    assert_eq!(rows.lines().next(), Some("node,community"));
}

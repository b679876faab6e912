//! Process-level tests for the `pipeline` binary: exit codes, the stderr
//! status record, staged-vs-single-run equivalence, and multi-seed summaries.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_pipeline");

fn pipeline(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn pipeline binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout(out),
        stderr(out)
    );
    assert!(
        stderr(out).contains("pipeline: status=ok"),
        "missing ok record in stderr:\n{}",
        stderr(out)
    );
}

fn status_record(out: &Output) -> String {
    stderr(out)
        .lines()
        .find(|l| l.starts_with("pipeline: status="))
        .unwrap_or_else(|| panic!("no status record in stderr:\n{}", stderr(out)))
        .to_string()
}

/// Writes a small three-matrix dataset plus a config tuned for test speed
/// (tiny GAN and autoencoder budgets). Returns the config path.
fn small_setup(dir: &Path) -> std::path::PathBuf {
    let gen = pipeline(
        dir,
        &[
            "gen-data",
            "--out",
            "data",
            "--samples",
            "80",
            "--features",
            "60",
            "--informative",
            "8",
            "--positive-fraction",
            "0.2",
            "--seed",
            "5",
        ],
    );
    assert_ok(&gen);

    let config = r#"
labels = "data/labels.tsv"
positive_class = "case"
output_dir = "out"

[[matrix]]
path = "data/expression.tsv"
kind = "expression"
latent_dim = 4

[[matrix]]
path = "data/methylation.tsv"
kind = "methylation"
orientation = "features-by-samples"
latent_dim = 4

[[matrix]]
path = "data/copy_number.tsv"
kind = "copy_number"
latent_dim = 4

[selection]
abs_log2fc_min = 0.5
fdr_q = 0.15

[autoencoder]
epochs = 30

[gan]
steps = 300
hidden_dim = 32
noise_dim = 8
"#;
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn gen_data_then_run_succeeds() {
    let dir = TempDir::new().unwrap();
    small_setup(dir.path());

    let run = pipeline(
        dir.path(),
        &["run", "--config", "run.toml", "--seed", "11", "--out", "art"],
    );
    assert_ok(&run);

    let text = stdout(&run);
    for line in ["accuracy", "precision", "recall", "f1", "auc"] {
        assert!(text.contains(line), "stdout missing {line}:\n{text}");
    }
    assert!(dir.path().join("art/report.json").exists());
    assert!(dir.path().join("art/manifest.json").exists());

    let record = status_record(&run);
    assert!(record.contains("command=run"), "{record}");
    assert!(record.contains("seed=11"), "{record}");
}

#[test]
fn staged_chain_matches_single_run() {
    let dir = TempDir::new().unwrap();
    small_setup(dir.path());

    let run = pipeline(
        dir.path(),
        &["run", "--config", "run.toml", "--seed", "3", "--out", "mono"],
    );
    assert_ok(&run);

    for stage in [
        "select",
        "train-ae",
        "fuse",
        "oversample",
        "train-clf",
        "evaluate",
    ] {
        let out = pipeline(
            dir.path(),
            &[
                stage, "--config", "run.toml", "--seed", "3", "--out", "staged",
            ],
        );
        assert_ok(&out);
    }

    for name in ["report.json", "roc.tsv", "classifier.json", "split.json"] {
        let mono = std::fs::read(dir.path().join("mono").join(name)).unwrap();
        let staged = std::fs::read(dir.path().join("staged").join(name)).unwrap();
        assert_eq!(mono, staged, "{name} differs between staged and single run");
    }
}

#[test]
fn invalid_config_exits_with_code_2() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "labels = \"labels.tsv\"\nsplit_fraction = 1.5\n\n[[matrix]]\npath = \"x.tsv\"\nkind = \"expression\"\n",
    )
    .unwrap();

    let out = pipeline(dir.path(), &["run", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2), "stderr:\n{}", stderr(&out));
    let record = status_record(&out);
    assert!(record.contains("status=error"), "{record}");
    assert!(record.contains("exit=2"), "{record}");
    assert!(record.contains("kind=config"), "{record}");
}

#[test]
fn missing_config_file_exits_with_code_2() {
    let dir = TempDir::new().unwrap();
    let out = pipeline(dir.path(), &["run", "--config", "nope.toml"]);
    assert_eq!(out.status.code(), Some(2), "stderr:\n{}", stderr(&out));
    assert!(status_record(&out).contains("kind=config"));
}

#[test]
fn missing_referenced_data_exits_with_code_2() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("dangling.toml"),
        "labels = \"absent.tsv\"\n\n[[matrix]]\npath = \"absent.tsv\"\nkind = \"expression\"\n",
    )
    .unwrap();

    let out = pipeline(dir.path(), &["run", "--config", "dangling.toml"]);
    assert_eq!(out.status.code(), Some(2), "stderr:\n{}", stderr(&out));
    assert!(status_record(&out).contains("kind=config"));
}

#[test]
fn evaluate_without_artifacts_exits_with_code_3() {
    let dir = TempDir::new().unwrap();
    small_setup(dir.path());
    std::fs::create_dir(dir.path().join("empty")).unwrap();

    let out = pipeline(
        dir.path(),
        &[
            "evaluate", "--config", "run.toml", "--seed", "1", "--out", "empty",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "stderr:\n{}", stderr(&out));
    let record = status_record(&out);
    assert!(record.contains("kind=data"), "{record}");
    assert!(record.contains("stage=evaluate"), "{record}");
}

#[test]
fn multi_seed_run_writes_summary() {
    let dir = TempDir::new().unwrap();
    small_setup(dir.path());

    let out = pipeline(
        dir.path(),
        &[
            "run", "--config", "run.toml", "--seeds", "1,2", "--out", "multi",
        ],
    );
    assert_ok(&out);

    let text = stdout(&out);
    assert!(text.contains("seed 1:"), "{text}");
    assert!(text.contains("seed 2:"), "{text}");
    assert!(text.contains("mean over 2 seeds:"), "{text}");

    assert!(dir.path().join("multi/seed-1/report.json").exists());
    assert!(dir.path().join("multi/seed-2/report.json").exists());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("multi/seeds_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    assert!(summary["mean"]["accuracy"].as_f64().unwrap() > 0.0);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn fragrag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fragrag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn workspace_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus.tsv")
}

#[test]
fn decompose_empty_input_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("empty.tsv");
    std::fs::write(&input, "").unwrap();
    let o = fragrag(&["decompose", s(&input)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn decompose_counts_undecomposable_molecules() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.tsv");
    std::fs::write(&input, "C1CC1 0.5\nCCOCC 0.1\n").unwrap();
    let o = fragrag(&["decompose", s(&input)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("1 undecomposable"), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}

#[test]
fn decompose_writes_three_lines_per_decomposable_molecule() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.tsv");
    let text: String = std::fs::read_to_string(workspace_corpus())
        .unwrap()
        .lines()
        .take(202)
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&input, text + "c1ccccc1 0\n").unwrap();
    let out = dir.path().join("frags.tsv");
    let o = fragrag(&["--seed", "3", "decompose", s(&input), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    // "decomposed D of N molecules; U undecomposable"
    let words: Vec<&str> = err.split_whitespace().collect();
    let decomposed: usize = words[1].parse().unwrap();
    let total: usize = words[3].parse().unwrap();
    assert_eq!(total, 201);
    let lines = std::fs::read_to_string(&out).unwrap();
    assert_eq!(lines.lines().count(), 3 * decomposed);
    for chunk in lines.lines().collect::<Vec<_>>().chunks(3) {
        let kinds: Vec<&str> = chunk.iter().map(|l| l.split('\t').nth(1).unwrap()).collect();
        assert_eq!(kinds, ["arm", "linker", "arm"]);
    }
}

#[test]
fn decompose_reports_parse_errors_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.tsv");
    std::fs::write(&input, "CCO 0.1\nC(C 0.2\n").unwrap();
    let o = fragrag(&["decompose", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[run]\nbudgit = 3\n").unwrap();
    let o = fragrag(&["--config", s(&cfg), "build-vocab"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn missing_checkpoint_is_named() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere/backbone.bin");
    let o = fragrag(&[
        "--out-dir",
        s(&dir.path().join("run")),
        "run",
        "--target",
        "CCO",
        "--backbone",
        s(&missing),
        "--corpus",
        s(&workspace_corpus()),
    ]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains(s(&missing)), "{}", stderr(&o));
}

/// A tiny backbone and injection module trained once for the run tests.
struct Models {
    _dir: TempDir,
    corpus: PathBuf,
    backbone: PathBuf,
    injection: PathBuf,
}

fn models() -> &'static Models {
    static M: OnceLock<Models> = OnceLock::new();
    M.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let corpus = dir.path().join("corpus.tsv");
        let text: String = std::fs::read_to_string(workspace_corpus())
            .unwrap()
            .lines()
            .take(302)
            .map(|l| format!("{l}\n"))
            .collect();
        std::fs::write(&corpus, text).unwrap();
        let backbone = dir.path().join("bb.bin");
        let injection = dir.path().join("fi.bin");
        let o = fragrag(&[
            "--quiet", "pretrain-lm", "--corpus", s(&corpus), "--epochs", "10", "--lr", "0.005", "--d-model", "32", "--n-layers", "2",
            "--n-heads", "2", "-o", s(&backbone),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let o = fragrag(&[
            "--quiet", "train-injection", "--corpus", s(&corpus), "--backbone", s(&backbone), "--epochs", "1",
            "--molecules", "100", "--layer-l", "1", "-o", s(&injection),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        Models {
            _dir: dir,
            corpus,
            backbone,
            injection,
        }
    })
}

fn run_into(out: &Path, corpus: &Path, budget: &str, extra: &[&str]) -> Output {
    let m = models();
    let mut args = vec![
        "--quiet", "--seed", "7", "--out-dir", s(out), "run", "--budget", budget, "--target",
        "CC(C)(C)NCC(O)c1ccc(O)c(CO)c1", "--corpus", s(corpus), "--backbone", s(&m.backbone), "--injection",
        s(&m.injection),
    ];
    args.extend_from_slice(extra);
    fragrag(&args)
}

#[test]
fn runs_replay_byte_for_byte() {
    let m = models();
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_into(out, &m.corpus, "100", &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let ha = std::fs::read(a.join("history.csv")).unwrap();
    assert_eq!(ha, std::fs::read(b.join("history.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&ha).lines().count(), 101);
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["config"]["run"]["budget"], 100);
    assert_eq!(manifest["history"].as_array().unwrap().len(), 100);
    assert!(a.join("vocab.tsv").is_file());
}

#[test]
fn dataset_hash_tracks_corpus_content() {
    let m = models();
    let dir = TempDir::new().unwrap();
    let edited = dir.path().join("corpus.tsv");
    let text = std::fs::read_to_string(&m.corpus).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[10] = "CCOc1ccccc1\t0.5000";
    std::fs::write(&edited, lines.join("\n") + "\n").unwrap();
    let hash = |out: &Path, corpus: &Path| {
        let o = run_into(out, corpus, "20", &["--variant", "no_soft"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
        v["dataset"]["sha256"].as_str().unwrap().to_owned()
    };
    let h1 = hash(&dir.path().join("x"), &m.corpus);
    let h2 = hash(&dir.path().join("y"), &edited);
    assert_eq!(h1.len(), 64);
    assert_ne!(h1, h2);
}

#[test]
fn eval_metrics_behave() {
    let m = models();
    let dir = TempDir::new().unwrap();
    let run = dir.path().join("run");
    let o = run_into(&run, &m.corpus, "40", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let csv = dir.path().join("metrics.csv");
    let o = fragrag(&["--quiet", "eval", s(&run), "-o", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = std::fs::read_to_string(&csv).unwrap();
    let o = fragrag(&["--quiet", "eval", s(&run), "-o", s(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), first);
    let mut rows = first.lines();
    assert_eq!(
        rows.next().unwrap(),
        "run_id,auc_top10,auc_top100,diversity_top100,novelty_top100"
    );
    let row: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(row[0], "full-s7");
    let novelty: f64 = row[4].parse().unwrap();
    assert!((0.0..=1.0).contains(&novelty));

    // constant-y history
    let path = run.join("manifest.json");
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    for h in v["history"].as_array_mut().unwrap() {
        h["y"] = serde_json::json!(0.375);
    }
    let constant = dir.path().join("constant.json");
    std::fs::write(&constant, serde_json::to_string(&v).unwrap()).unwrap();
    let o = fragrag(&["--quiet", "eval", s(&constant), "-o", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let auc: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(auc, 0.375);

    // schema mismatch
    v["schema_version"] = serde_json::json!(99);
    let future = dir.path().join("future.json");
    std::fs::write(&future, serde_json::to_string(&v).unwrap()).unwrap();
    let o = fragrag(&["--quiet", "eval", s(&future), "-o", s(&csv)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema version 99"), "{}", stderr(&o));
}

#[cfg(unix)]
#[test]
fn sigint_writes_a_partial_manifest() {
    let m = models();
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let mut child = Command::new(env!("CARGO_BIN_EXE_fragrag"))
        .args([
            "--quiet", "--seed", "1", "--out-dir", s(&out), "run", "--budget", "100000", "--target", "CCOc1ccccc1",
            "--corpus", s(&m.corpus), "--backbone", s(&m.backbone), "--injection", s(&m.injection),
        ])
        .spawn()
        .unwrap();
    std::thread::sleep(std::time::Duration::from_secs(3));
    let killed = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(killed.success());
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(130));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(v["complete"], false);
    let n = v["history"].as_array().unwrap().len();
    assert!(n > 0 && n < 100000);
    let csv = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(csv.lines().count(), n + 1);
}

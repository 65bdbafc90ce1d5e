use std::path::Path;
use std::process::{Command, Output};

fn confound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{
  "corpus": {"vocab_size_y": 8, "vocab_size_z": 8, "vocab_size_noise": 40, "doc_count": 6000},
  "bias_grid": [{"b_train": 0.8, "b_test": 0.2}, {"b_train": 0.8, "b_test": 0.8}],
  "noise_grid": [0.0, 0.2],
  "seeds": [0],
  "n_train": 400,
  "n_test": 400,
  "n_prelim": 600,
  "folds": 5
}"#;

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("config.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let pool = d.join("pool.tsv");

    let out = ok(&confound(&["--config", s(&cfg), "generate", "--out", s(&pool), "--seed", "3"]));
    assert!(out.contains("6000 instances"), "{out}");

    let prelim = d.join("prelim");
    let out = ok(&confound(&[
        "preliminary",
        "--data",
        s(&pool),
        "--out-dir",
        s(&prelim),
        "--noise",
        "0.1",
        "--annotate",
        s(&pool),
    ]));
    assert!(out.contains("f1_z="), "{out}");
    let errors = std::fs::read_to_string(prelim.join("errors.csv")).unwrap();
    assert!(errors.starts_with("index,z,z_pred,posterior,error\n"));
    assert_eq!(errors.lines().count(), 6001);
    assert!(prelim.join("z_model.txt").exists());

    let matched = d.join("match");
    let out = ok(&confound(&[
        "match",
        "--data",
        s(&prelim.join("annotated.tsv")),
        "--errors",
        s(&prelim.join("errors.csv")),
        "--out-dir",
        s(&matched),
        "--epsilon",
        "0.8",
    ]));
    assert!(out.contains("r_hat=") && out.contains("retained="), "{out}");
    let adjusted = std::fs::read_to_string(matched.join("adjusted_z.csv")).unwrap();
    assert!(adjusted.starts_with("index,y,z_pred,posterior,z_matched,retained\n"));
    assert!(matched.join("trace.csv").exists());

    let rows = d.join("rows.csv");
    let plots = d.join("plots");
    let table = ok(&confound(&[
        "--config",
        s(&cfg),
        "sweep",
        "--mode",
        "heatmap",
        "--out",
        s(&rows),
        "--plot-dir",
        s(&plots),
    ]));
    assert!(table.contains("ba_corrmatch"), "{table}");
    // 2 noise levels x 2 cells x 5 methods
    let body = std::fs::read_to_string(&rows).unwrap();
    assert_eq!(body.lines().filter(|l| !l.starts_with('#')).count(), 1 + 20);
    assert!(plots.join("heatmap_robustness.csv").exists());

    let report = ok(&confound(&["report", "--rows", s(&rows)]));
    assert_eq!(report, table);
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let bad = d.join("bad.json");
    std::fs::write(&bad, r#"{"epsilon": 0.2}"#).unwrap();
    let out = confound(&["--config", s(&bad), "generate", "--out", s(&d.join("x.tsv"))]);
    assert_eq!(out.status.code(), Some(2));

    let out = confound(&["report", "--rows", s(&d.join("missing.csv"))]);
    assert_eq!(out.status.code(), Some(5));

    let cfg = d.join("infeasible.json");
    std::fs::write(
        &cfg,
        r#"{"corpus": {"doc_count": 200}, "bias_grid": [{"b_train": 1.0, "b_test": 1.0}],
            "noise_grid": [0.0], "seeds": [0], "n_train": 150, "n_test": 150,
            "n_prelim": 100, "folds": 2, "methods": ["lr", "ba_observed"]}"#,
    )
    .unwrap();
    let out = confound(&["--config", s(&cfg), "sweep", "--mode", "noise", "--out", s(&d.join("r.csv"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

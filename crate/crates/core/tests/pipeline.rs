use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use relcue::corpus::Split;
use relcue::fixture::write_fixture_corpus;
use relcue::pipeline::{
    build_dataset, read_split_manifest, regenerate_prompts, remix_dataset, split_dir, validate_dataset, BuildConfig,
    SplitCounts, MANIFEST_FILE,
};
use relcue::Error;

fn config(corpus: &Path, out: &Path, mixtures: [usize; 3]) -> BuildConfig {
    let mut cfg = BuildConfig::default();
    cfg.manifests = write_fixture_corpus(corpus, 11).unwrap();
    cfg.master_seed = 42;
    cfg.mixtures = SplitCounts {
        train: mixtures[0],
        val: mixtures[1],
        test: mixtures[2],
    };
    cfg.rir_pairs = SplitCounts {
        train: 6,
        val: 3,
        test: 3,
    };
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn checks(report: &relcue::pipeline::ValidationReport) -> Vec<&str> {
    report.violations.iter().map(|v| v.check.as_str()).collect()
}

#[test]
fn desk_build_follows_pool_proportions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir.path().join("corpus"), &dir.path().join("out"), [100, 10, 10]);
    let summary = build_dataset(&cfg).unwrap();
    let train = &summary.splits["train"];
    assert_eq!(train.mixtures, 100);
    assert_eq!(train.pools["emotion"], 20);
    assert_eq!(train.pools["age"], 10);
    assert_eq!(train.pools["plain"], 70);
    let records = read_split_manifest(&cfg.output_dir, Split::Train).unwrap();
    assert_eq!(records.len(), 100);
    for r in &records {
        assert!(r.plan.mixture_len_s <= 6.0 + 1e-9);
        assert!(!r.prompts.is_empty());
    }
    let report = validate_dataset(&cfg.output_dir).unwrap();
    assert!(report.is_clean(), "{:#?}", report.violations);
    assert_eq!(report.mixtures_checked, 120);
}

#[test]
fn same_seed_gives_identical_trees_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let mut a = config(&corpus, &dir.path().join("a"), [12, 4, 4]);
    a.jobs = Some(1);
    let mut b = config(&corpus, &dir.path().join("b"), [12, 4, 4]);
    b.jobs = Some(3);
    build_dataset(&a).unwrap();
    build_dataset(&b).unwrap();
    let (ta, tb) = (tree(&a.output_dir), tree(&b.output_dir));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (path, bytes) in &ta {
        assert!(bytes == &tb[path], "{} differs", path.display());
    }

    let mut c = config(&corpus, &dir.path().join("c"), [12, 4, 4]);
    c.master_seed = 43;
    build_dataset(&c).unwrap();
    let manifest = |cfg: &BuildConfig| std::fs::read(split_dir(&cfg.output_dir, Split::Train).join(MANIFEST_FILE));
    assert_ne!(manifest(&a).unwrap(), manifest(&c).unwrap());
}

#[test]
fn validate_flags_edited_sir_and_missing_audio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir.path().join("corpus"), &dir.path().join("out"), [6, 2, 2]);
    build_dataset(&cfg).unwrap();
    assert!(validate_dataset(&cfg.output_dir).unwrap().is_clean());

    let manifest = split_dir(&cfg.output_dir, Split::Train).join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let sir = lines[0]["plan"]["sir_db"].as_f64().unwrap();
    lines[0]["plan"]["sir_db"] = serde_json::json!(if sir > 0.0 { sir - 1.0 } else { sir + 1.0 });
    let edited: String = lines.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&manifest, edited).unwrap();
    let report = validate_dataset(&cfg.output_dir).unwrap();
    assert_eq!(checks(&report), vec!["sir"], "{:#?}", report.violations);

    let victim = split_dir(&cfg.output_dir, Split::Val).join("val-000001_target.wav");
    std::fs::remove_file(&victim).unwrap();
    let report = validate_dataset(&cfg.output_dir).unwrap();
    assert!(report
        .violations
        .iter()
        .any(|v| v.check == "missing_path" && v.mixture_id == "val-000001"));
}

#[test]
fn empty_age_pool_fails_before_audio() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&dir.path().join("corpus"), &dir.path().join("out"), [10, 2, 2]);
    cfg.manifests.retain(|m| !m.to_string_lossy().contains("fixture-age"));
    match build_dataset(&cfg) {
        Err(Error::EmptyPool { pool, .. }) => assert_eq!(pool, "age"),
        other => panic!("expected an empty-pool error, got {other:?}"),
    }
    assert!(!cfg.output_dir.join("mixtures").exists());

    cfg.pool_fractions.age = 0.0;
    let summary = build_dataset(&cfg).unwrap();
    assert_eq!(summary.splits["train"].pools.get("age").copied().unwrap_or(0), 0);
}

#[test]
fn partial_reruns_reproduce_the_build() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir.path().join("corpus"), &dir.path().join("out"), [6, 2, 2]);
    build_dataset(&cfg).unwrap();
    let before = tree(&cfg.output_dir);

    remix_dataset(&cfg).unwrap();
    assert!(tree(&cfg.output_dir) == before, "remix changed the tree");

    let n = regenerate_prompts(&cfg.output_dir, None).unwrap();
    assert!(n > 0);
    assert!(tree(&cfg.output_dir) == before, "prompt regeneration changed the tree");
}

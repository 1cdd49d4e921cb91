use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn occlubench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_occlubench"))
        .args(args)
        .env_remove("OCCLUBENCH_ASSETS")
        .output()
        .expect("spawn occlubench")
}

fn ok(args: &[&str]) -> String {
    let out = occlubench(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path) -> String {
    let corpus = dir.join("corpus");
    ok(&[
        "synth",
        "--out",
        p(&corpus),
        "--subjects",
        "6",
        "--frames",
        "4",
        "--seed",
        "5",
    ]);
    corpus.join("manifest.jsonl").display().to_string()
}

#[test]
fn single_steps_reproduce_run() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let whole = dir.path().join("whole");
    ok(&[
        "run",
        "--manifest",
        &manifest,
        "--out",
        p(&whole),
        "--extractor",
        "lbp",
        "--occlusion",
        "high",
        "--jobs",
        "1",
    ]);

    let s = dir.path().join("steps");
    let clean = s.join("clean.csv");
    let high = s.join("high.csv");
    let model = s.join("lbp.json");
    ok(&[
        "occlude",
        "--manifest",
        &manifest,
        "--out",
        p(&s),
        "--occlusion",
        "high",
    ]);
    let occluded = s.join("occluded/high/manifest.jsonl");
    ok(&[
        "extract",
        "--manifest",
        &manifest,
        "--extractor",
        "lbp",
        "--out",
        p(&clean),
    ]);
    ok(&[
        "extract",
        "--manifest",
        p(&occluded),
        "--extractor",
        "lbp",
        "--out",
        p(&high),
    ]);
    ok(&[
        "train",
        "--features",
        p(&clean),
        "--manifest",
        &manifest,
        "--out",
        p(&model),
    ]);
    let a = s.join("a.csv");
    let b = s.join("b.csv");
    ok(&[
        "evaluate",
        "--model",
        p(&model),
        "--features",
        p(&clean),
        "--manifest",
        &manifest,
        "--out",
        p(&a),
    ]);
    let stdout = ok(&[
        "evaluate",
        "--model",
        p(&model),
        "--features",
        p(&clean),
        "--manifest",
        &manifest,
        "--test-features",
        p(&high),
        "--test-manifest",
        p(&occluded),
        "--occlusion",
        "high",
    ]);
    fs::write(&b, &stdout).unwrap();
    ok(&["report", "--out", p(&s), p(&a), p(&b)]);

    for f in ["report.csv", "report.md"] {
        assert_eq!(
            fs::read_to_string(whole.join(f)).unwrap(),
            fs::read_to_string(s.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        fs::read(whole.join("models/lbp.json")).unwrap(),
        fs::read(&model).unwrap()
    );
    assert!(!s.join(".incomplete").exists());
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = occlubench(&[
        "extract",
        "--manifest",
        p(&missing),
        "--extractor",
        "lbp",
        "--out",
        p(&dir.path().join("x.csv")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(dir.path().join(".incomplete").is_file());

    let out = occlubench(&[
        "occlude",
        "--manifest",
        p(&missing),
        "--out",
        p(dir.path()),
        "--occlusion",
        "visor",
    ]);
    assert!(!out.status.success());

    let out = occlubench(&[
        "run",
        "--manifest",
        p(&missing),
        "--out",
        p(dir.path()),
        "--occlusion",
        "none,high",
    ]);
    assert!(!out.status.success());
}

#[test]
fn asset_pack_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_occlubench"))
        .args([
            "occlude",
            "--manifest",
            &manifest,
            "--out",
            p(&dir.path().join("o")),
            "--occlusion",
            "glasses",
        ])
        .env("OCCLUBENCH_ASSETS", dir.path().join("missing-pack"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    ok(&[
        "occlude",
        "--manifest",
        &manifest,
        "--out",
        p(&dir.path().join("o")),
        "--occlusion",
        "glasses:rect-s-opaque",
    ]);
    assert!(dir
        .path()
        .join("o/occluded/glasses_rect-s-opaque/manifest.jsonl")
        .is_file());
}

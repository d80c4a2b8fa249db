use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn embedmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embedmap"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = embedmap(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, out_dims: &str) -> PathBuf {
    let data = dir.join("data");
    ok(&[
        "synth",
        "--n-identities",
        "400",
        "--latent-dim",
        "8",
        "--out-dims",
        out_dims,
        "--matched-per-fold",
        "30",
        "--mismatched-per-fold",
        "30",
        "--out-dir",
        p(&data),
    ]);
    data
}

fn accuracy(report: &Path) -> f64 {
    let v: serde_json::Value = serde_json::from_slice(&fs::read(report).unwrap()).unwrap();
    assert_eq!(v["format_version"], 1);
    v["mean_accuracy"].as_f64().unwrap()
}

#[test]
fn synth_writes_systems_pairs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "16,16,24");
    for f in [
        "system_0.csv",
        "system_1.csv",
        "system_2.csv",
        "pairs.txt",
        "manifest.json",
    ] {
        assert!(data.join(f).exists(), "{f}");
    }
    let header = fs::read_to_string(data.join("pairs.txt")).unwrap();
    assert!(header.starts_with("10\t30"));
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = fs::metadata(data.join("pairs.txt"))
            .unwrap()
            .permissions()
            .mode();
        assert_eq!(mode & 0o644, 0o644);
    }
}

#[test]
fn fitted_beats_identity_by_a_wide_margin() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "16,16");
    let (a, b, pairs) = (
        data.join("system_0.csv"),
        data.join("system_1.csv"),
        data.join("pairs.txt"),
    );
    let (fitted, ident, map) = (
        dir.path().join("f.json"),
        dir.path().join("i.json"),
        dir.path().join("m.bin"),
    );
    let text = ok(&[
        "evaluate",
        "--source",
        p(&a),
        "--target",
        p(&b),
        "--pairs",
        p(&pairs),
        "--report",
        p(&fitted),
        "--map-out",
        p(&map),
    ]);
    assert!(text.contains('%'));
    ok(&[
        "evaluate",
        "--source",
        p(&a),
        "--target",
        p(&b),
        "--pairs",
        p(&pairs),
        "--mode",
        "identity",
        "--report",
        p(&ident),
    ]);
    assert!(accuracy(&fitted) >= accuracy(&ident) + 0.30);
    let map = embedmap::io::read_map(&map).unwrap();
    assert_eq!((map.source_dim(), map.target_dim()), (16, 16));
}

#[test]
fn cross_and_curves_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "16,16");
    let (a, b, pairs) = (
        data.join("system_0.csv"),
        data.join("system_1.csv"),
        data.join("pairs.txt"),
    );

    let cross = dir.path().join("cross.json");
    ok(&[
        "cross",
        "--systems",
        p(&a),
        p(&b),
        "--pairs",
        p(&pairs),
        "--report",
        p(&cross),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&cross).unwrap()).unwrap();
    assert_eq!(v["kind"], "cross_matrix");
    assert_eq!(v["cells"].as_array().unwrap().len(), 2);

    let curve = dir.path().join("sens.csv");
    ok(&[
        "sensitivity",
        "--source",
        p(&a),
        "--target",
        p(&b),
        "--pairs",
        p(&pairs),
        "--points",
        "5",
        "--curve",
        p(&curve),
        "--report",
        p(&dir.path().join("s.json")),
    ]);
    let rows: Vec<String> = fs::read_to_string(&curve)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(rows[0], "p,accuracy");
    assert_eq!(rows.len(), 6);

    let rank = dir.path().join("rank.csv");
    ok(&[
        "rank",
        "--source",
        p(&a),
        "--target",
        p(&b),
        "--pairs",
        p(&pairs),
        "--ranks",
        "1,8,16",
        "--curve",
        p(&rank),
        "--report",
        p(&dir.path().join("r.json")),
    ]);
    let rows = fs::read_to_string(&rank).unwrap();
    assert!(rows.starts_with("k,accuracy,variance_explained"));
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn usage_errors() {
    let out = embedmap(&[
        "evaluate", "--source", "a.csv", "--target", "b.csv", "--report", "r.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--pairs"));

    let dir = tempfile::tempdir().unwrap();
    let out = embedmap(&[
        "synth",
        "--latent-dim",
        "32",
        "--out-dims",
        "16",
        "--out-dir",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = embedmap(&["--jobs", "0", "synth", "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = embedmap(&[
        "evaluate",
        "--source",
        "missing.csv",
        "--target",
        "missing.csv",
        "--pairs",
        "missing.txt",
        "--report",
        p(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

use std::path::{Path, PathBuf};
use std::process::Command;

use hybridtomo::experiments::ExperimentConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn hybridtomo(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hybridtomo"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap()
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!cfg.cases().is_empty(), "{}", path.display());
    }
}

#[test]
fn symbols_and_mesh_subcommands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let quick = configs().join("quick.toml");
    for sub in ["symbols", "mesh"] {
        let out = hybridtomo(&[sub, quick.to_str().unwrap()], dir.path());
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn reconstruct_then_metrics_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let quick = configs().join("quick.toml");
    let out = hybridtomo(&["reconstruct", quick.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let vtk = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .flat_map(|p| if p.is_dir() { std::fs::read_dir(p).unwrap().map(|e| e.unwrap().path()).collect() } else { vec![p] })
        .find(|p| p.file_name().is_some_and(|n| n == "reconstruction.vtk"))
        .expect("reconstruction.vtk written");
    let out = hybridtomo(&["metrics", quick.to_str().unwrap(), "--input", vtk.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_config_fails_in_the_config_stage() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "p = \"two\"\n").unwrap();
    let out = hybridtomo(&["symbols", bad.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage 'config'"));

    let quick = configs().join("quick.toml");
    let out = hybridtomo(&["experiment", "nonsense", quick.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage 'config'"));
}

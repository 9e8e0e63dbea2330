use std::fs;
use std::path::Path;
use std::process::Command;

use loopsoup::report::{Summary, Table};
use loopsoup::soup_io::read_text;

fn loopsoup(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_loopsoup")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn zero_intensity_soup_writes_manifest_and_empty_soup() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "[soup]\nc = 0.0\n");
    let out = dir.path().join("out");
    let (code, stdout, _) = loopsoup(&["soup", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("manifest sha256 "));
    assert!(out.join("manifest.toml").exists());
    let soup = read_text(fs::File::open(out.join("soup_000.txt")).map(std::io::BufReader::new).unwrap()).unwrap();
    assert!(soup.is_empty());
    // no loops: the loop table is header-only
    let (_, table) = Table::parse(&fs::read_to_string(out.join("loops.csv")).unwrap()).unwrap();
    assert!(table.is_empty());
    assert_eq!(table.header[0], "sample");
}

#[test]
fn sierpinski_dimension_in_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.toml", "[dimensions]\ntarget = \"sierpinski\"\n");
    let out = dir.path().join("out");
    let (code, _, err) = loopsoup(&["dimensions", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let s = Summary::read(&out.join("summary.json")).unwrap();
    assert!((s.metrics["dimension_mean"] - 1.8928).abs() < 0.05);
    let k4 = s.conversions.iter().find(|r| r.kappa == 4.0).unwrap();
    assert_eq!(k4.c, 1.0);
}

#[test]
fn archived_manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        "samples = 2\nresolution = 256\n[soup]\nt_min = 0.005\nstep_scale = 1e-4\n[boundaries]\nlargest = 3\nsizes = [1, 2, 4, 8, 16]\n",
    );
    let a = dir.path().join("a");
    assert_eq!(loopsoup(&["boundaries", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "3"]).0, 0);
    // rerun from the copy written next to the outputs
    let archived = a.join("manifest.toml");
    let b = dir.path().join("b");
    let (code, _, err) =
        loopsoup(&["boundaries", "--config", archived.to_str().unwrap(), "--out", b.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(code, 0, "{err}");
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in names {
        if name == "run.log" {
            continue;
        }
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn every_artifact_names_the_manifest_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "samples = 2\n[soup]\nc = 1.0\n");
    let out = dir.path().join("out");
    let (code, stdout, _) = loopsoup(&["clusters", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let hash = stdout.lines().next().unwrap().trim_start_matches("manifest sha256 ").to_string();
    assert_eq!(hash.len(), 64);
    for e in fs::read_dir(&out).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains(&hash), "{} lacks the hash", p.display());
    }
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "seed = 1\nsamples = 1\n[soup]\nwrite_soups = false\n");
    let out = dir.path().join("out");
    let (code, _, _) = loopsoup(&["soup", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9", "--samples", "3"]);
    assert_eq!(code, 0);
    let s = Summary::read(&out.join("summary.json")).unwrap();
    assert_eq!((s.seed, s.samples), (9, 3));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 9") && manifest.contains("samples = 3"));
}

#[test]
fn usage_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad_type = write(dir.path(), "a.toml", "[soup]\nc = \"lots\"\n");
    let (code, _, err) = loopsoup(&["soup", "--config", &bad_type, "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");
    let unknown = write(dir.path(), "b.toml", "[soup]\nintensity = 1.0\n");
    assert_eq!(loopsoup(&["soup", "--config", &unknown, "--out", out]).0, 1);
    let wrong_kind = write(dir.path(), "c.toml", "experiment = \"sle\"\n[sle]\nkappa = 3.0\n");
    assert_eq!(loopsoup(&["soup", "--config", &wrong_kind, "--out", out]).0, 1);
    assert_eq!(loopsoup(&["soup", "--out", out]).0, 1);
    assert_eq!(loopsoup(&["teleport", "--config", &unknown]).0, 1);
    assert_eq!(loopsoup(&["soup", "--config", "/nonexistent/m.toml", "--out", out]).0, 1);
    let negative = write(dir.path(), "d.toml", "[soup]\nc = -1.0\n");
    assert_eq!(loopsoup(&["soup", "--config", &negative, "--out", out]).0, 1);
    assert_eq!(loopsoup(&["--help"]).0, 0);
}

#[test]
fn runtime_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "[soup]\nc = 0.5\n");
    // the output path is an existing file, so the directory cannot be created
    let blocker = write(dir.path(), "file", "x");
    let (code, _, err) = loopsoup(&["soup", "--config", &cfg, "--out", &blocker]);
    assert_eq!(code, 2, "{err}");
}

//! Drive the experiment runner from code: parse a manifest, run it twice and
//! confirm the artifacts are byte-identical.

use loopsoup::runner::{run, RunManifest};

const MANIFEST: &str = r#"
experiment = "boundaries"
seed = 12
samples = 3
resolution = 512

[soup]
c = 0.5
t_min = 0.002
step_scale = 5e-5

[boundaries]
largest = 4
sizes = [2, 4, 8, 16, 32, 64]
"#;

fn main() -> loopsoup::Result<()> {
    let dir = std::env::temp_dir().join("loopsoup-run-manifest");
    let mut m = RunManifest::parse(MANIFEST, None)?;
    println!("manifest sha256 {}", m.hash());

    m.output = Some(dir.join("a"));
    let first = run(&m)?;
    m.output = Some(dir.join("b"));
    m.threads = Some(1);
    let second = run(&m)?;

    for (a, b) in first.artifacts.iter().zip(&second.artifacts) {
        let same = std::fs::read(a).ok() == std::fs::read(b).ok();
        println!("{:<22} identical: {same}", a.file_name().unwrap().to_string_lossy());
    }
    println!("{:#?}", first.summary.metrics);
    Ok(())
}

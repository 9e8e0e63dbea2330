//! Experiment runner: TOML manifests in, CSV/JSON/SVG artifacts out.
//!
//! A manifest names an experiment kind, a base seed, a sample count, a
//! resolution and the kind's own section. Defaults are filled in and the
//! result, minus `output` and `threads`, is written back as `manifest.toml`;
//! its SHA-256 is the manifest hash stamped into every artifact. Per-sample
//! seeds are derived from the base seed and the sample index, and results are
//! collected in sample order, so artifacts do not depend on the thread count.
//! Wall-clock timestamps go to `run.log` only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::{loop_frontier, trace_outer_boundary, ClusterBoundary};
use crate::chordal::{eta_dimension, reversibility_statistic, run_chordal, ChordalSetup};
use crate::cluster::build_clusters;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::fractal::{
    box_counting_dimension, dyadic_sizes, free_point_dimension, kappa_of_c, sierpinski_carpet, sle_dimension, CellSet,
    DimensionEstimate,
};
use crate::geometry::{BBox, Point};
use crate::percolation::{default_c_grid, percolation_sweep, SweepConfig};
use crate::raster::{free_point_mask, CrossingSide, GridGeometry, MIN_RESOLUTION};
use crate::report::{conversion_csv, conversion_table, fmt_exact, fmt_stat, Summary, Table, CONVERSION_KAPPAS};
use crate::rng::{derive_seed, stream, Purpose};
use crate::sle::{loewner_trace, sample_driving, trace_dimension};
use crate::soup::{sample_brownian_bridge_loop, sample_soup, LoopSoup, SoupConfig};
use crate::soup_io::write_text_annotated;
use crate::stats::{mean, std_error};
use crate::svg::{render_soup, Svg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Soup,
    Clusters,
    Boundaries,
    Dimensions,
    Percolation,
    Sle,
    Chordal,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Soup => "soup",
            Self::Clusters => "clusters",
            Self::Boundaries => "boundaries",
            Self::Dimensions => "dimensions",
            Self::Percolation => "percolation",
            Self::Sle => "sle",
            Self::Chordal => "chordal",
        }
    }
}

fn default_seed() -> u64 {
    1
}
fn default_samples() -> usize {
    1
}
fn default_resolution() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub experiment: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Cells across the domain (across the unit window for percolation).
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads; all available cores when absent or 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soup: Option<SoupSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<BoundarySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<DimensionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percolation: Option<PercolationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sle: Option<SleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chordal: Option<ChordalSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoupSection {
    pub domain: Domain,
    pub c: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub step_scale: f64,
    /// Write every sampled soup as a text file.
    pub write_soups: bool,
}

impl Default for SoupSection {
    fn default() -> Self {
        Self { domain: Domain::UnitSquare, c: 0.5, t_min: 0.01, t_max: 1.0, step_scale: 1e-3, write_soups: true }
    }
}

impl SoupSection {
    fn config(&self, seed: u64) -> SoupConfig {
        SoupConfig::new(self.domain, self.c, self.t_min, self.t_max, self.step_scale, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSection {
    pub touch_distance: f64,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self { touch_distance: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    pub touch_distance: f64,
    /// Clusters per soup, largest bounding-box diagonal first.
    pub largest: usize,
    /// Box sizes in grid cells.
    pub sizes: Vec<usize>,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self { touch_distance: 0.0, largest: 10, sizes: dyadic_sizes(1, 7) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionTarget {
    /// Level-`sierpinski_level` carpet; needs no randomness.
    Sierpinski,
    /// Hull-free cells of a soup.
    FreePoints,
    /// Outer boundary of one Brownian loop.
    LoopFrontier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionSection {
    pub target: DimensionTarget,
    /// Box sizes in grid cells; a target-specific default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default = "default_carpet_level")]
    pub sierpinski_level: u32,
    #[serde(default = "default_loop_points")]
    pub loop_points: usize,
}

fn default_carpet_level() -> u32 {
    5
}
fn default_loop_points() -> usize {
    1 << 16
}

impl DimensionSection {
    fn default_sizes(&self) -> Vec<usize> {
        match self.target {
            DimensionTarget::Sierpinski => (0..self.sierpinski_level).map(|k| 3usize.pow(k)).collect(),
            DimensionTarget::FreePoints => dyadic_sizes(0, 8),
            DimensionTarget::LoopFrontier => dyadic_sizes(1, 8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PercolationSection {
    pub c_grid: Vec<f64>,
    /// Padding of the soup box around the unit crossing window; 0 uses the
    /// soup domain itself as the window.
    pub pad: f64,
    pub side: CrossingSide,
    pub free_fraction: bool,
}

impl Default for PercolationSection {
    fn default() -> Self {
        Self { c_grid: default_c_grid(), pad: 2.0, side: CrossingSide::LeftRight, free_fraction: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SleSection {
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_sle_steps")]
    pub steps: usize,
    #[serde(default = "default_sle_sizes")]
    pub sizes: Vec<usize>,
    /// Traces written out point by point.
    #[serde(default = "default_dump")]
    pub dump_traces: usize,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_sle_steps() -> usize {
    100_000
}
fn default_sle_sizes() -> Vec<usize> {
    dyadic_sizes(1, 8)
}
fn default_dump() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChordalSection {
    /// Either κ, or the pair (α, c).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default = "default_box_width")]
    pub width: f64,
    #[serde(default = "default_box_height")]
    pub height: f64,
    #[serde(default = "default_chordal_t_min")]
    pub t_min: f64,
    #[serde(default = "default_chordal_step")]
    pub step_scale: f64,
    #[serde(default = "default_trace_steps")]
    pub trace_steps: usize,
    #[serde(default)]
    pub touch_distance: f64,
    /// Height of the first-crossing statistic.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_eta_sizes")]
    pub sizes: Vec<usize>,
}

fn default_box_width() -> f64 {
    4.0
}
fn default_box_height() -> f64 {
    2.0
}
fn default_chordal_t_min() -> f64 {
    1e-3
}
fn default_chordal_step() -> f64 {
    1e-3
}
fn default_trace_steps() -> usize {
    50_000
}
fn default_level() -> f64 {
    1.0
}
fn default_eta_sizes() -> Vec<usize> {
    dyadic_sizes(3, 8)
}

impl ChordalSection {
    fn setup(&self, resolution: usize, seed: u64) -> Result<ChordalSetup> {
        let mut s = match (self.kappa, self.alpha, self.c) {
            (Some(k), None, None) => ChordalSetup::new(k, self.width, self.height, self.t_min, resolution, seed)?,
            (None, Some(a), Some(c)) => {
                ChordalSetup::from_alpha_c(a, c, self.width, self.height, self.t_min, resolution, seed)?
            }
            _ => return Err(Error::Config("chordal: give either `kappa` or both `alpha` and `c`".into())),
        };
        s.soup.step_scale = self.step_scale;
        s.trace_steps = self.trace_steps;
        s.touch_distance = self.touch_distance;
        s.validate()?;
        Ok(s)
    }
}

/// Command-line overrides; set fields win over the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub resolution: Option<usize>,
}

impl RunManifest {
    /// Parses manifest text. `kind`, when given, fills a missing
    /// `experiment` key and must agree with a present one.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| toml_error(text, 0, &e))?;
        let mut prefix = String::new();
        if let Some(k) = kind {
            match table.get("experiment") {
                None => prefix = format!("experiment = \"{}\"\n", k.name()),
                Some(toml::Value::String(s)) if s == k.name() => {}
                Some(other) => {
                    return Err(Error::Config(format!(
                        "manifest experiment {other} does not match subcommand `{}`",
                        k.name()
                    )))
                }
            }
        }
        let full = format!("{prefix}{text}");
        let m: RunManifest = toml::from_str(&full).map_err(|e| toml_error(&full, prefix.len(), &e))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, kind).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.samples {
            self.samples = n;
        }
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(r) = o.resolution {
            self.resolution = r;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::Config(format!("resolution must be at least {MIN_RESOLUTION}")));
        }
        if self.experiment == ExperimentKind::Sle && self.sle.is_none() {
            return Err(Error::Config("sle experiment needs an [sle] section with `kappa`".into()));
        }
        if self.experiment == ExperimentKind::Chordal && self.chordal.is_none() {
            return Err(Error::Config("chordal experiment needs a [chordal] section".into()));
        }
        if self.experiment == ExperimentKind::Dimensions && self.dimensions.is_none() {
            return Err(Error::Config("dimensions experiment needs a [dimensions] section with `target`".into()));
        }
        Ok(())
    }

    /// Defaults filled in, sections the kind does not use dropped, and
    /// `output`/`threads` removed.
    pub fn canonical(&self) -> RunManifest {
        use ExperimentKind::*;
        let kind = self.experiment;
        let uses_soup = matches!(kind, Soup | Clusters | Boundaries | Percolation)
            || (kind == Dimensions
                && self.dimensions.as_ref().is_some_and(|d| d.target == DimensionTarget::FreePoints));
        let mut dimensions = self.dimensions.clone().filter(|_| kind == Dimensions);
        if let Some(d) = dimensions.as_mut() {
            if d.sizes.is_none() {
                d.sizes = Some(d.default_sizes());
            }
        }
        RunManifest {
            experiment: kind,
            seed: self.seed,
            samples: self.samples,
            resolution: self.resolution,
            output: None,
            threads: None,
            soup: uses_soup.then(|| self.soup.clone().unwrap_or_default()),
            clusters: (kind == Clusters).then(|| self.clusters.clone().unwrap_or_default()),
            boundaries: (kind == Boundaries).then(|| self.boundaries.clone().unwrap_or_default()),
            dimensions,
            percolation: (kind == Percolation).then(|| self.percolation.clone().unwrap_or_default()),
            sle: self.sle.clone().filter(|_| kind == Sle),
            chordal: self.chordal.clone().filter(|_| kind == Chordal),
        }
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.canonical()).expect("manifest serializes")
    }

    /// Hex SHA-256 of the canonical manifest text.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical_toml().as_bytes()))
    }
}

/// Diagnostic with line and column in the user's text, which starts
/// `offset` bytes into `full`.
fn toml_error(full: &str, offset: usize, e: &toml::de::Error) -> Error {
    let msg = e.message().trim_end();
    match e.span() {
        Some(span) if span.start >= offset => {
            let before = &full[offset..span.start];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            Error::Config(format!("line {line}, column {col}: {msg}"))
        }
        _ => Error::Config(msg.to_string()),
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest_hash: String,
    pub summary: Summary,
    /// Deterministic artifacts (everything but `run.log`), sorted by name.
    pub artifacts: Vec<PathBuf>,
}

struct Emitter {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl Emitter {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.path(name);
        t.write(&p, &self.hash)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    }

    fn svg(&mut self, name: &str, svg: Svg) -> Result<()> {
        let doc = svg.with_comment(format!("manifest sha256 {}", self.hash)).finish();
        self.text(name, &doc)
    }
}

/// Runs a manifest. Requires `output` to be set.
pub fn run(manifest: &RunManifest) -> Result<RunOutcome> {
    manifest.validate()?;
    let dir = manifest
        .output
        .clone()
        .ok_or_else(|| Error::Config("no output directory: set `output` or pass --out".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let threads = manifest.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let canonical = manifest.canonical();
    let hash = manifest.hash();
    let mut em = Emitter { dir: dir.clone(), hash: hash.clone(), files: Vec::new() };
    em.text("manifest.toml", &format!("# manifest sha256 {hash}\n{}", manifest.canonical_toml()))?;
    let mut summary = Summary::new(&hash, canonical.experiment.name(), canonical.seed, canonical.samples);
    summary.conversions = conversion_table(&CONVERSION_KAPPAS)?;
    em.table("conversions.csv", &conversion_csv(&summary.conversions))?;

    pool.install(|| dispatch(&canonical, &mut em, &mut summary))?;

    em.files.push("summary.json".into());
    em.files.sort();
    summary.artifacts = em.files.clone();
    summary.write(&dir.join("summary.json"))?;
    let epoch = |t: SystemTime| t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let log = format!(
        "manifest sha256 {hash}\nstarted {:.3}\nfinished {:.3}\nelapsed_seconds {:.3}\nthreads {}\n",
        epoch(started),
        epoch(SystemTime::now()),
        clock.elapsed().as_secs_f64(),
        pool.current_num_threads()
    );
    let log_path = dir.join("run.log");
    fs::write(&log_path, log).map_err(|e| Error::io(&log_path, e))?;
    let artifacts = em.files.iter().map(|f| dir.join(f)).collect();
    Ok(RunOutcome { dir, manifest_hash: hash, summary, artifacts })
}

fn dispatch(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    match m.experiment {
        ExperimentKind::Soup => run_soup(m, em, summary),
        ExperimentKind::Clusters => run_clusters(m, em, summary),
        ExperimentKind::Boundaries => run_boundaries(m, em, summary),
        ExperimentKind::Dimensions => run_dimensions(m, em, summary),
        ExperimentKind::Percolation => run_percolation(m, em, summary),
        ExperimentKind::Sle => run_sle(m, em, summary),
        ExperimentKind::Chordal => run_chordal_batch(m, em, summary),
    }
}

/// Seed of sample `s`.
pub fn sample_seed(base: u64, s: usize) -> u64 {
    derive_seed(base, Purpose::SoupSeed, s as u64)
}

fn soups(m: &RunManifest) -> Result<Vec<LoopSoup>> {
    let sec = m.soup.clone().unwrap_or_default();
    (0..m.samples).into_par_iter().map(|s| sample_soup(&sec.config(sample_seed(m.seed, s)))).collect()
}

fn bool_cell(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

fn dimension_cells(d: &Result<DimensionEstimate>) -> Vec<String> {
    match d {
        Ok(d) => vec![fmt_stat(d.slope), fmt_stat(d.stderr), fmt_stat(d.r2), bool_cell(d.trimmed)],
        Err(_) => vec!["nan".into(), "nan".into(), "nan".into(), "false".into()],
    }
}

fn summarize_dimensions(summary: &mut Summary, prefix: &str, slopes: &[f64], expected: Option<f64>) {
    let finite: Vec<f64> = slopes.iter().copied().filter(|x| x.is_finite()).collect();
    summary
        .metric(&format!("{prefix}_mean"), mean(&finite))
        .metric(&format!("{prefix}_stderr"), std_error(&finite))
        .metric(&format!("{prefix}_count"), finite.len() as f64);
    if let Some(e) = expected {
        summary.metric(&format!("{prefix}_expected"), e);
    }
}

fn run_soup(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    let sec = m.soup.clone().unwrap_or_default();
    let soups = soups(m)?;
    let mut loops = Table::new(&["sample", "loop", "duration", "root_x", "root_y", "n_points"]);
    for (s, soup) in soups.iter().enumerate() {
        for (i, l) in soup.loops.iter().enumerate() {
            let r = l.root();
            loops.push(vec![
                s.to_string(),
                i.to_string(),
                fmt_exact(l.duration()),
                fmt_exact(r.x),
                fmt_exact(r.y),
                l.points().len().to_string(),
            ]);
        }
        if sec.write_soups {
            let mut buf = Vec::new();
            let comment = format!("manifest sha256 {}", em.hash);
            write_text_annotated(soup, &[&comment], &mut buf).expect("in-memory write");
            em.text(&format!("soup_{s:03}.txt"), &String::from_utf8(buf).expect("UTF-8"))?;
        }
    }
    em.table("loops.csv", &loops)?;
    em.svg("soup_000.svg", render_soup(&soups[0], None, &[], None, 800.0))?;
    let counts: Vec<f64> = soups.iter().map(|s| s.len() as f64).collect();
    summary
        .metric("loops_mean", mean(&counts))
        .metric("loops_stderr", std_error(&counts))
        .metric("expected_candidates", crate::soup::expected_loop_count(&sec.config(m.seed))?);
    Ok(())
}

fn run_clusters(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    let touch = m.clusters.clone().unwrap_or_default().touch_distance;
    let soups = soups(m)?;
    let sets: Vec<_> = soups.par_iter().map(|s| build_clusters(s, touch)).collect();
    let mut t = Table::new(&["sample", "cluster", "n_loops", "total_duration", "min_x", "min_y", "max_x", "max_y"]);
    for (s, (soup, cs)) in soups.iter().zip(&sets).enumerate() {
        for c in &cs.clusters {
            let b = cs.bbox(c.id, soup).unwrap_or_else(BBox::empty);
            let dur = cs.total_duration(c.id, soup).unwrap_or(0.0);
            let mut row = vec![s.to_string(), c.id.to_string(), c.members.len().to_string(), fmt_stat(dur)];
            row.extend([b.min.x, b.min.y, b.max.x, b.max.y].map(fmt_stat));
            t.push(row);
        }
    }
    em.table("clusters.csv", &t)?;
    em.svg("clusters_000.svg", render_soup(&soups[0], Some(&sets[0]), &[], None, 800.0))?;
    let counts: Vec<f64> = sets.iter().map(|c| c.len() as f64).collect();
    let largest: Vec<f64> =
        sets.iter().map(|c| c.clusters.iter().map(|k| k.members.len()).max().unwrap_or(0) as f64).collect();
    summary
        .metric("clusters_mean", mean(&counts))
        .metric("clusters_stderr", std_error(&counts))
        .metric("largest_cluster_loops_mean", mean(&largest));
    Ok(())
}

fn run_boundaries(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    let sec = m.boundaries.clone().unwrap_or_default();
    let c = m.soup.clone().unwrap_or_default().c;
    let soups = soups(m)?;
    type Found = (usize, usize, std::result::Result<ClusterBoundary, String>, Result<DimensionEstimate>);
    let per_sample: Vec<(crate::cluster::ClusterSet, Vec<Found>)> = soups
        .par_iter()
        .enumerate()
        .map(|(s, soup)| {
            let cs = build_clusters(soup, sec.touch_distance);
            let found = cs
                .ids_by_extent(soup)
                .into_iter()
                .take(sec.largest)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|id| {
                    let n = cs.cluster(id).map_or(0, |c| c.members.len());
                    match trace_outer_boundary(id, &cs, soup, m.resolution) {
                        Ok(b) => {
                            let d = box_counting_dimension(
                                CellSet::Cells(&b.boundary_cells),
                                b.geometry.cell_size,
                                &sec.sizes,
                            );
                            (s, n, Ok(b), d)
                        }
                        Err(e) => (s, n, Err(e.to_string()), Err(e)),
                    }
                })
                .collect();
            (cs, found)
        })
        .collect();
    let mut t = Table::new(&[
        "sample", "cluster", "n_loops", "status", "boundary_cells", "dimension", "stderr", "r2", "trimmed",
    ]);
    let mut slopes = Vec::new();
    for (_, found) in &per_sample {
        for (s, n, b, d) in found {
            let (id, status, cells) = match b {
                Ok(b) => (b.cluster_id.to_string(), "ok".to_string(), b.boundary_cells.len().to_string()),
                Err(e) => ("".into(), e.clone(), "0".into()),
            };
            let mut row = vec![s.to_string(), id, n.to_string(), status, cells];
            row.extend(dimension_cells(d));
            t.push(row);
            slopes.push(d.as_ref().map_or(f64::NAN, |d| d.slope));
        }
    }
    em.table("boundaries.csv", &t)?;
    let first: Vec<ClusterBoundary> =
        per_sample[0].1.iter().filter_map(|(_, _, b, _)| b.as_ref().ok().cloned()).collect();
    em.svg("boundaries_000.svg", render_soup(&soups[0], Some(&per_sample[0].0), &first, None, 800.0))?;
    let expected = kappa_of_c(c).ok().map(sle_dimension);
    summarize_dimensions(summary, "boundary_dimension", &slopes, expected);
    Ok(())
}

fn run_dimensions(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    let sec = m.dimensions.clone().expect("validated");
    let sizes = sec.sizes.clone().unwrap_or_else(|| sec.default_sizes());
    let target = toml::Value::try_from(sec.target).expect("unit variant");
    summary.note("target", target.as_str().unwrap_or_default());
    let (estimates, expected): (Vec<Result<DimensionEstimate>>, f64) = match sec.target {
        DimensionTarget::Sierpinski => {
            let carpet = sierpinski_carpet(sec.sierpinski_level);
            let cell = 1.0 / carpet.nx as f64;
            let geom = GridGeometry { origin: Point::new(0.0, 0.0), cell_size: cell, nx: carpet.nx, ny: carpet.ny };
            let mut svg = Svg::new(BBox::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)), 729.0);
            svg.mask(&carpet, &geom, "#222222", 1.0);
            em.svg("carpet.svg", svg)?;
            let d = box_counting_dimension(CellSet::Mask(&carpet), cell, &sizes);
            (vec![d], 8f64.ln() / 3f64.ln())
        }
        DimensionTarget::FreePoints => {
            let soup = m.soup.clone().unwrap_or_default();
            let ests = (0..m.samples)
                .into_par_iter()
                .map(|s| {
                    let sp = sample_soup(&soup.config(sample_seed(m.seed, s)))?;
                    let fm = free_point_mask(&sp, m.resolution)?;
                    box_counting_dimension(CellSet::Mask(&fm.free), fm.grid.geometry.cell_size, &sizes)
                })
                .collect();
            (ests, free_point_dimension(soup.c))
        }
        DimensionTarget::LoopFrontier => {
            let ests = (0..m.samples)
                .into_par_iter()
                .map(|s| {
                    let mut rng = stream(m.seed, Purpose::Bridge, s as u64);
                    let l = sample_brownian_bridge_loop(Point::new(0.0, 0.0), 1.0, sec.loop_points, &mut rng)?;
                    let b = loop_frontier(&l, m.resolution)?;
                    box_counting_dimension(CellSet::Cells(&b.boundary_cells), b.geometry.cell_size, &sizes)
                })
                .collect();
            (ests, 4.0 / 3.0)
        }
    };
    let mut t = Table::new(&["sample", "dimension", "stderr", "r2", "trimmed"]);
    let mut scales = Table::new(&["sample", "box_size", "occupied"]);
    for (s, d) in estimates.iter().enumerate() {
        let mut row = vec![s.to_string()];
        row.extend(dimension_cells(d));
        t.push(row);
        if let Ok(d) = d {
            for &(size, count) in &d.scales {
                scales.push(vec![s.to_string(), fmt_exact(size), count.to_string()]);
            }
        }
    }
    em.table("dimensions.csv", &t)?;
    em.table("scales.csv", &scales)?;
    let slopes: Vec<f64> = estimates.iter().map(|d| d.as_ref().map_or(f64::NAN, |d| d.slope)).collect();
    summarize_dimensions(summary, "dimension", &slopes, Some(expected));
    // a lone failing estimate is a module error, not an empty statistic
    if let [Err(e)] = estimates.as_slice() {
        return Err(Error::UndefinedDimension(e.to_string()));
    }
    Ok(())
}

fn run_percolation(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    let sec = m.percolation.clone().unwrap_or_default();
    let soup = m.soup.clone().unwrap_or_default();
    let base = soup.config(m.seed);
    let mut cfg = if sec.pad > 0.0 {
        SweepConfig::padded(base, sec.pad, m.resolution, m.samples)
    } else {
        SweepConfig::new(base, m.resolution, m.samples)
    };
    cfg.c_grid = sec.c_grid.clone();
    cfg.side = sec.side;
    cfg.free_fraction = sec.free_fraction;
    let r = percolation_sweep(&cfg)?;
    let mut rows = Table::new(&["c", "sample", "seed", "crossed", "free_fraction", "n_loops"]);
    for row in &r.rows {
        rows.push(vec![
            fmt_exact(row.c),
            row.sample.to_string(),
            row.seed.to_string(),
            bool_cell(row.crossed),
            fmt_stat(row.free_fraction),
            row.n_loops.to_string(),
        ]);
    }
    em.table("crossings.csv", &rows)?;
    let mut probs = Table::new(&["c", "crossing_probability"]);
    for (c, p) in r.c_values.iter().zip(&r.crossing_probability) {
        probs.push(vec![fmt_exact(*c), fmt_stat(*p)]);
    }
    em.table("probabilities.csv", &probs)?;
    summary
        .metric("midpoint", r.midpoint.unwrap_or(f64::NAN))
        .metric("conjectured_critical_c", r.conjectured_critical)
        .metric("t_min", r.t_min)
        .metric("t_max", r.t_max)
        .metric("grid_resolution", r.resolution as f64)
        .note("monotone", r.is_monotone());
    Ok(())
}

fn run_sle(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    let sec = m.sle.clone().expect("validated");
    if sec.steps == 0 || !(sec.horizon > 0.0) {
        return Err(Error::Config("sle: steps and horizon must be positive".into()));
    }
    let dt = sec.horizon / sec.steps as f64;
    let traces: Vec<_> = (0..m.samples)
        .into_par_iter()
        .map(|s| -> Result<_> {
            let seed = derive_seed(m.seed, Purpose::Driving, s as u64);
            let driving = sample_driving(sec.kappa, sec.rho, sec.horizon, dt, seed)?;
            let trace = loewner_trace(&driving, dt)?;
            let d = trace_dimension(&trace, m.resolution, &sec.sizes);
            Ok((seed, trace, d))
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["sample", "seed", "n_points", "tip_re", "tip_im", "dimension", "stderr", "r2", "trimmed"]);
    for (s, (seed, trace, d)) in traces.iter().enumerate() {
        let tip = trace.tip();
        let mut row = vec![s.to_string(), seed.to_string(), trace.len().to_string(), fmt_stat(tip.x), fmt_stat(tip.y)];
        row.extend(dimension_cells(d));
        t.push(row);
    }
    em.table("traces.csv", &t)?;
    for (s, (_, trace, _)) in traces.iter().enumerate().take(sec.dump_traces) {
        let mut dump = Table::new(&["t", "re", "im", "w"]);
        for ((p, &time), w) in trace.points.iter().zip(&trace.times).zip(trace.driving_values()) {
            dump.push(vec![fmt_exact(time), fmt_exact(p.x), fmt_exact(p.y), fmt_exact(w)]);
        }
        em.table(&format!("trace_{s:03}.csv"), &dump)?;
    }
    let first = &traces[0].1;
    let mut view = BBox::of_points(&first.points).expand(0.05);
    view.min.y = view.min.y.min(0.0);
    let mut svg = Svg::new(view, 800.0);
    svg.polyline(&[Point::new(view.min.x, 0.0), Point::new(view.max.x, 0.0)], "#888888", 1.0, None);
    svg.polyline(&first.points, "#1f77b4", 0.6, None);
    em.svg("trace_000.svg", svg)?;
    let slopes: Vec<f64> = traces.iter().map(|(_, _, d)| d.as_ref().map_or(f64::NAN, |d| d.slope)).collect();
    summarize_dimensions(summary, "dimension", &slopes, Some(sle_dimension(sec.kappa)));
    summary.metric("kappa", sec.kappa);
    if let Some(rho) = sec.rho {
        summary.metric("rho", rho);
    }
    Ok(())
}

fn run_chordal_batch(m: &RunManifest, em: &mut Emitter, summary: &mut Summary) -> Result<()> {
    let sec = m.chordal.clone().expect("validated");
    let setup = sec.setup(m.resolution, m.seed)?;
    let geom = setup.geometry();
    let runs: Vec<_> = (0..m.samples)
        .into_par_iter()
        .map(|s| -> Result<_> {
            let run = run_chordal(&setup.with_seed(sample_seed(m.seed, s)))?;
            let d = eta_dimension(&run.hull.eta, &geom, &sec.sizes);
            Ok((run, d))
        })
        .collect::<Result<_>>()?;
    let etas: Vec<Vec<Point>> = runs.iter().map(|(r, _)| r.hull.eta.clone()).collect();
    let rev = reversibility_statistic(&etas, sec.level);
    let mut t = Table::new(&[
        "sample", "seed", "n_loops", "n_clusters", "attached_clusters", "eta_points", "eta_crossing",
        "inverted_crossing", "dimension", "stderr", "r2", "trimmed",
    ]);
    for (s, (run, d)) in runs.iter().enumerate() {
        let fwd = crate::chordal::first_crossing_abscissa(&run.hull.eta, sec.level);
        let inv = crate::chordal::first_crossing_abscissa(&crate::chordal::invert_curve(&run.hull.eta), sec.level);
        let mut row = vec![
            s.to_string(),
            run.seed.to_string(),
            run.n_loops.to_string(),
            run.n_clusters.to_string(),
            run.hull.attached_cluster_ids.len().to_string(),
            run.hull.eta.len().to_string(),
            fmt_stat(fwd.unwrap_or(f64::NAN)),
            fmt_stat(inv.unwrap_or(f64::NAN)),
        ];
        row.extend(dimension_cells(d));
        t.push(row);
    }
    em.table("runs.csv", &t)?;
    let hull = &runs[0].0.hull;
    let view = setup.domain().bbox();
    let mut svg = Svg::new(view, 800.0);
    svg.rect_outline(&view, "#444444");
    for l in &hull.attached_loops {
        svg.polyline(l.points(), "#9ecae1", 0.4, None);
    }
    svg.polyline(&hull.gamma, "#d62728", 0.8, None);
    svg.polyline(&hull.eta, "#000000", 1.2, None);
    em.svg("chordal_000.svg", svg)?;
    let slopes: Vec<f64> = runs.iter().map(|(_, d)| d.as_ref().map_or(f64::NAN, |d| d.slope)).collect();
    summarize_dimensions(summary, "eta_dimension", &slopes, Some(sle_dimension(setup.kappa)));
    summary
        .metric("kappa", setup.kappa)
        .metric("alpha", setup.alpha)
        .metric("c", setup.c)
        .metric("rho", setup.rho()?)
        .metric("reversibility_level", rev.level)
        .metric("reversibility_ks_statistic", rev.ks.statistic)
        .metric("reversibility_ks_p_value", rev.ks.p_value)
        .metric("reversibility_dropped_forward", rev.dropped_forward as f64)
        .metric("reversibility_dropped_inverted", rev.dropped_inverted as f64);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_hash_ignore_output_and_threads() {
        let a = RunManifest::parse("experiment = \"soup\"\noutput = \"a\"\nthreads = 2\n", None).unwrap();
        let b = RunManifest::parse("[soup]\nc = 0.5\n", Some(ExperimentKind::Soup)).unwrap();
        assert_eq!(a.hash(), b.hash());
        let text = a.canonical_toml();
        assert!(text.contains("[soup]") && !text.contains("output") && !text.contains("threads"));
        let again = RunManifest::parse(&text, None).unwrap();
        assert_eq!(again.canonical(), a.canonical());
        assert_ne!(a.hash(), RunManifest::parse("experiment = \"soup\"\nseed = 2\n", None).unwrap().hash());
    }

    #[test]
    fn malformed_manifests_are_config_errors() {
        let bad = [
            "experiment = \"soup\"\nsamples = \"many\"\n",
            "experiment = \"warp\"\n",
            "experiment = \"soup\"\n[soup]\ncolour = 1\n",
            "experiment = \"sle\"\n",
            "experiment = \"soup\"\nsamples = 0\n",
        ];
        for text in bad {
            assert!(matches!(RunManifest::parse(text, None), Err(Error::Config(_))), "{text}");
        }
        let e = RunManifest::parse("experiment = \"soup\"\n\nseed = -3\n", None).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = RunManifest::parse("seed = 1\n[soup]\nc = \"half\"\n", Some(ExperimentKind::Soup)).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(RunManifest::parse("experiment = \"soup\"\n", Some(ExperimentKind::Sle)).is_err());
    }

    #[test]
    fn overrides_win() {
        let mut m = RunManifest::parse("experiment = \"soup\"\nseed = 4\n", None).unwrap();
        m.apply(&Overrides { seed: Some(9), resolution: Some(64), ..Default::default() });
        assert_eq!((m.seed, m.resolution), (9, 64));
    }
}

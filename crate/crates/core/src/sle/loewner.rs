use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::driving::DrivingPath;
use crate::error::{Error, Result};
use crate::fractal::{polyline_dimension, DimensionEstimate};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleTrace {
    /// γ(t_k) for every kept time, starting at the origin.
    pub points: Vec<Point>,
    /// Capacity times matching `points`.
    pub times: Vec<f64>,
    pub driving: DrivingPath,
    pub capacity_step: f64,
}

impl SleTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tip(&self) -> Point {
        *self.points.last().expect("trace has the origin at least")
    }

    /// Driving values at the kept times.
    pub fn driving_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut k = 0;
        for &t in &self.times {
            while self.driving.times[k] < t {
                k += 1;
            }
            out.push(self.driving.values[k]);
        }
        out
    }
}

#[inline]
fn fix_branch(s: Complex64, u: Complex64, z_im: f64) -> Complex64 {
    let flip = if s.im != 0.0 && z_im != 0.0 { s.im * z_im < 0.0 } else { s.re * u.re < 0.0 };
    if flip {
        -s
    } else {
        s
    }
}

/// Inverse slit map `w + sqrt((z − w)² − 4 dt)`: maps ℍ onto ℍ minus the
/// vertical slit of height 2√dt at `w` (and the lower half-plane by
/// reflection).
#[inline]
pub fn slit_inverse(z: Complex64, w: f64, dt: f64) -> Complex64 {
    let u = z - w;
    let s = (u * u - 4.0 * dt).sqrt();
    w + fix_branch(s, u, z.im)
}

/// Forward slit map `w + sqrt((z − w)² + 4 dt)`, the inverse of
/// [`slit_inverse`].
#[inline]
pub fn slit_forward(z: Complex64, w: f64, dt: f64) -> Complex64 {
    let u = z - w;
    let s = (u * u + 4.0 * dt).sqrt();
    w + fix_branch(s, u, z.im)
}

#[derive(Debug, Clone, Copy)]
struct Slit {
    w: f64,
    dt: f64,
}

#[derive(Debug, Clone)]
struct Node {
    center: f64,
    radius: f64,
    coeffs: Vec<Complex64>,
}

const LEAF: usize = 16;
const SAMPLES: usize = 64;
const TERMS: usize = 32;
/// Series used only when |z − center| exceeds this multiple of the radius.
const ADMISSIBLE: f64 = 2.0;
/// Sampling circle radius, as a multiple of the node radius.
const SAMPLE_RADIUS: f64 = 1.5;

/// Composition of slit maps organized in dyadic blocks. Each block
/// Ψ = Φ_a ∘ … ∘ Φ_b is analytic off a real interval, so Ψ(z) − z has a
/// Laurent expansion around the interval's midpoint; far from the interval
/// the block is evaluated by its series, close to it by its two halves.
#[derive(Debug, Clone)]
pub struct ZipperTree {
    maps: Vec<Slit>,
    levels: Vec<Vec<Node>>,
}

impl ZipperTree {
    fn new(maps: Vec<Slit>) -> Self {
        Self { maps, levels: Vec::new() }
    }

    /// Builds every block lying entirely inside the first `end` maps.
    fn ensure(&mut self, end: usize) {
        let mut size = LEAF;
        let mut level = 0;
        while size <= end {
            if self.levels.len() == level {
                self.levels.push(Vec::new());
            }
            while self.levels[level].len() < end / size {
                let i = self.levels[level].len();
                let node = self.build_node(i * size, (i + 1) * size);
                self.levels[level].push(node);
            }
            size *= 2;
            level += 1;
        }
    }

    fn build_node(&self, lo: usize, hi: usize) -> Node {
        // singular interval of Φ_lo ∘ … ∘ Φ_{hi−1}
        let first = self.maps[lo];
        let r = 2.0 * first.dt.sqrt();
        let (mut a, mut b) = (first.w - r, first.w + r);
        for m in &self.maps[lo + 1..hi] {
            let r = 2.0 * m.dt.sqrt();
            a = if a <= m.w { m.w - ((a - m.w).powi(2) + 4.0 * m.dt).sqrt() } else { m.w - r };
            b = if b >= m.w { m.w + ((b - m.w).powi(2) + 4.0 * m.dt).sqrt() } else { m.w + r };
        }
        let center = 0.5 * (a + b);
        let radius = 0.5 * (b - a);
        let rho = SAMPLE_RADIUS * radius;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); TERMS];
        for k in 0..SAMPLES {
            let theta = std::f64::consts::TAU * (k as f64 + 0.5) / SAMPLES as f64;
            let e = Complex64::from_polar(1.0, theta);
            let z = center + rho * e;
            let h = self.apply_block(lo, hi, z) - z;
            let mut p = rho * e;
            for c in coeffs.iter_mut() {
                *c += h * p;
                p *= rho * e;
            }
        }
        for c in coeffs.iter_mut() {
            *c /= SAMPLES as f64;
        }
        Node { center, radius, coeffs }
    }

    /// Applies maps `hi−1, …, lo` in that order using whatever nodes exist.
    fn apply_block(&self, lo: usize, hi: usize, z: Complex64) -> Complex64 {
        let size = hi - lo;
        if size > LEAF && !self.levels.is_empty() {
            let level = (size / LEAF).trailing_zeros() as usize;
            if level > 0 && level <= self.levels.len() && lo % size == 0 && self.levels[level - 1].len() > lo / (size / 2) + 1 {
                let mid = lo + size / 2;
                let z = self.apply_node(level - 1, mid / (size / 2), z);
                return self.apply_node(level - 1, lo / (size / 2), z);
            }
        }
        self.maps[lo..hi].iter().rev().fold(z, |z, m| slit_inverse(z, m.w, m.dt))
    }

    fn apply_node(&self, level: usize, idx: usize, z: Complex64) -> Complex64 {
        let node = &self.levels[level][idx];
        let u = z - node.center;
        if u.norm() > ADMISSIBLE * node.radius {
            let v = u.inv();
            let mut acc = node.coeffs[TERMS - 1];
            for c in node.coeffs[..TERMS - 1].iter().rev() {
                acc = acc * v + c;
            }
            return z + acc * v;
        }
        let size = LEAF << level;
        let lo = idx * size;
        if level == 0 {
            return self.maps[lo..lo + size].iter().rev().fold(z, |z, m| slit_inverse(z, m.w, m.dt));
        }
        let z = self.apply_node(level - 1, 2 * idx + 1, z);
        self.apply_node(level - 1, 2 * idx, z)
    }

    /// Φ_0 ∘ … ∘ Φ_{end−1}(z).
    pub fn apply_prefix(&self, end: usize, z: Complex64) -> Complex64 {
        let mut z = z;
        let mut hi = end;
        while hi > 0 {
            if hi % LEAF == 0 && !self.levels.is_empty() {
                let mut level = 0;
                let mut size = LEAF;
                while level + 1 < self.levels.len() && hi % (2 * size) == 0 {
                    level += 1;
                    size *= 2;
                }
                z = self.apply_node(level, hi / size - 1, z);
                hi -= size;
            } else {
                let m = self.maps[hi - 1];
                z = slit_inverse(z, m.w, m.dt);
                hi -= 1;
            }
        }
        z
    }
}

/// Keeps driving samples at least `capacity_step` apart (always keeping the
/// last one) and returns the slit maps with the kept times.
fn slits(driving: &DrivingPath, capacity_step: f64) -> Result<(Vec<Slit>, Vec<f64>)> {
    driving.validate()?;
    if !(capacity_step > 0.0) {
        return Err(Error::Config(format!("capacity step must be positive, got {capacity_step}")));
    }
    let n = driving.times.len();
    let mut times = vec![0.0];
    let mut maps = Vec::with_capacity(n - 1);
    let tol = capacity_step * (1.0 - 1e-9);
    for k in 1..n {
        let t = driving.times[k];
        let last = *times.last().unwrap();
        if t - last >= tol || k == n - 1 {
            maps.push(Slit { w: driving.values[k], dt: t - last });
            times.push(t);
        }
    }
    Ok((maps, times))
}

fn assemble(points: Vec<Complex64>, times: Vec<f64>, driving: &DrivingPath, capacity_step: f64) -> Result<SleTrace> {
    if let Some(step) = points.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::BranchFailure { step });
    }
    Ok(SleTrace {
        points: points.into_iter().map(|z| Point::new(z.re, z.im)).collect(),
        times,
        driving: driving.clone(),
        capacity_step,
    })
}

/// Loewner trace by composing vertical-slit maps: on each capacity step the
/// driving is frozen at its right-endpoint value w_k and
/// γ(t_k) = Φ_1 ∘ … ∘ Φ_{k−1}(w_k + 2i√Δt_k). Uses the block-series
/// accelerated composition; see [`loewner_trace_exact`] for the plain one.
pub fn loewner_trace(driving: &DrivingPath, capacity_step: f64) -> Result<SleTrace> {
    loewner_trace_until(driving, capacity_step, |_| false)
}

/// [`loewner_trace`] that stops right after the first point for which
/// `stop` returns true.
pub fn loewner_trace_until(
    driving: &DrivingPath,
    capacity_step: f64,
    mut stop: impl FnMut(Point) -> bool,
) -> Result<SleTrace> {
    let (maps, mut times) = slits(driving, capacity_step)?;
    let tips: Vec<Complex64> = maps.iter().map(|m| Complex64::new(m.w, 2.0 * m.dt.sqrt())).collect();
    let mut tree = ZipperTree::new(maps);
    let mut points = Vec::with_capacity(tips.len() + 1);
    points.push(Complex64::new(0.0, 0.0));
    for (k, &tip) in tips.iter().enumerate() {
        tree.ensure(k);
        let z = tree.apply_prefix(k, tip);
        points.push(z);
        if stop(Point::new(z.re, z.im)) {
            break;
        }
    }
    times.truncate(points.len());
    assemble(points, times, driving, capacity_step)
}

/// Quadratic-cost version of [`loewner_trace`], applying every map directly.
pub fn loewner_trace_exact(driving: &DrivingPath, capacity_step: f64) -> Result<SleTrace> {
    let (maps, times) = slits(driving, capacity_step)?;
    let mut points = Vec::with_capacity(maps.len() + 1);
    points.push(Complex64::new(0.0, 0.0));
    for (k, m) in maps.iter().enumerate() {
        let tip = Complex64::new(m.w, 2.0 * m.dt.sqrt());
        points.push(maps[..k].iter().rev().fold(tip, |z, s| slit_inverse(z, s.w, s.dt)));
    }
    assemble(points, times, driving, capacity_step)
}

/// Unzips the trace with forward slit maps, reading off the driving value
/// at each kept time (quadratic cost).
pub fn recover_driving(trace: &SleTrace) -> Vec<f64> {
    let mut pts: Vec<Complex64> = trace.points.iter().map(|p| Complex64::new(p.x, p.y.max(0.0))).collect();
    let mut out = vec![0.0; pts.len()];
    for k in 1..pts.len() {
        let dt = trace.times[k] - trace.times[k - 1];
        let w = pts[k].re;
        out[k] = w;
        for z in pts[k + 1..].iter_mut() {
            let g = slit_forward(*z, w, dt);
            *z = Complex64::new(g.re, g.im.max(0.0));
        }
    }
    out
}

pub const MIN_DIMENSION_POINTS: usize = 10_000;

/// Box-counting dimension of the rasterized trace.
pub fn trace_dimension(trace: &SleTrace, resolution: usize, sizes: &[usize]) -> Result<DimensionEstimate> {
    if trace.len() < MIN_DIMENSION_POINTS {
        return Err(Error::Config(format!(
            "trace dimension needs at least {MIN_DIMENSION_POINTS} points, got {}",
            trace.len()
        )));
    }
    polyline_dimension(&trace.points, resolution, sizes)
}

//! Right boundary of a restriction curve dressed with loop-soup clusters.
//!
//! γ is a one-sided restriction sample from 0 to ∞ in the upper half-plane,
//! realized as an SLE(8/3, ρ) trace with ρ chosen for the exponent α and
//! clipped where it leaves a truncated box. Every cluster of an independent
//! soup that γ meets is attached to it; η is the right boundary of the union,
//! found by flooding the box from its right edge and following the flooded
//! region's contour from the bottom edge upward.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{build_clusters, polylines_intersect, ClusterSet};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::fractal::{
    alpha_of_kappa, box_counting_dimension, c_of_kappa, kappa_of_c, rho_for_alpha, CellSet, DimensionEstimate,
    KAPPA_MAX, KAPPA_MIN,
};
use crate::geometry::{segments_touch, BBox, Point};
use crate::raster::{flood_from, mark_polyline, GridGeometry, Mask};
use crate::rng::{derive_seed, Purpose};
use crate::sle::{loewner_trace_until, sample_driving};
use crate::soup::{sample_soup, Loop, LoopSoup, SoupConfig};
use crate::stats::{ks_two_sample, KsReport};

/// κ of the restriction sample.
pub const RESTRICTION_KAPPA: f64 = 8.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordalSetup {
    pub kappa: f64,
    pub alpha: f64,
    pub c: f64,
    /// Half-plane box, centred on the origin horizontally.
    pub width: f64,
    pub height: f64,
    /// Soup in the box at intensity `c`; its seed is derived from `seed`.
    pub soup: SoupConfig,
    pub resolution: usize,
    pub seed: u64,
    /// Number of capacity steps for the whole horizon of γ.
    pub trace_steps: usize,
    pub touch_distance: f64,
}

impl ChordalSetup {
    /// Setup for κ ∈ (8/3, 4] with α = (6 − κ)/2κ and c = c(κ).
    pub fn new(kappa: f64, width: f64, height: f64, t_min: f64, resolution: usize, seed: u64) -> Result<Self> {
        let c = c_of_kappa(kappa)?;
        let alpha = alpha_of_kappa(kappa)?;
        let domain = Domain::HalfPlaneBox { width, height };
        domain.validate()?;
        let soup = SoupConfig::new(domain, c, t_min, width * height, 1e-3, derive_seed(seed, Purpose::SoupSeed, 0));
        soup.validate()?;
        Ok(Self { kappa, alpha, c, width, height, soup, resolution, seed, trace_steps: 50_000, touch_distance: 0.0 })
    }

    /// Setup from an explicit (α, c) pair, which must match a single κ.
    pub fn from_alpha_c(alpha: f64, c: f64, width: f64, height: f64, t_min: f64, resolution: usize, seed: u64) -> Result<Self> {
        let kappa = kappa_of_c(c)?;
        let expected = alpha_of_kappa(kappa)?;
        if (expected - alpha).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "alpha {alpha} is inconsistent with c {c}: c gives kappa {kappa} and alpha {expected}"
            )));
        }
        Self::new(kappa, width, height, t_min, resolution, seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.soup.seed = derive_seed(seed, Purpose::SoupSeed, 0);
        self
    }

    pub fn domain(&self) -> Domain {
        Domain::HalfPlaneBox { width: self.width, height: self.height }
    }

    pub fn geometry(&self) -> GridGeometry {
        GridGeometry::for_domain(&self.domain(), self.resolution)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > KAPPA_MIN && self.kappa <= KAPPA_MAX) {
            return Err(Error::Range(format!("kappa must lie in (8/3, 4], got {}", self.kappa)));
        }
        self.domain().validate()?;
        self.soup.validate()?;
        if self.soup.domain != self.domain() {
            return Err(Error::Config("soup domain must be the chordal box".into()));
        }
        if self.resolution < 16 || self.trace_steps < 16 {
            return Err(Error::Config("resolution and trace_steps must be at least 16".into()));
        }
        Ok(())
    }

    /// ρ of the SLE(8/3, ρ) realizing exponent α.
    pub fn rho(&self) -> Result<f64> {
        rho_for_alpha(RESTRICTION_KAPPA, self.alpha)
    }
}

/// Capacity horizon after which any curve from 0 has left the box: the box
/// lies in a half-disk of radius R, whose half-plane capacity is R².
pub fn exit_horizon(width: f64, height: f64) -> f64 {
    1.02 * (0.25 * width * width + height * height)
}

fn outside_box(p: Point, width: f64, height: f64) -> bool {
    p.x.abs() >= 0.5 * width || p.y >= height
}

/// Cuts the polyline at its first exit from the box, ending on the box edge.
pub fn clip_to_box(points: &[Point], width: f64, height: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(points.len());
    let Some(&first) = points.first() else {
        return out;
    };
    out.push(first);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !outside_box(b, width, height) {
            out.push(b);
            continue;
        }
        // smallest parameter at which the segment meets a box side
        let d = b - a;
        let half = 0.5 * width;
        let mut s = 1.0f64;
        if d.y > 0.0 {
            s = s.min((height - a.y) / d.y);
        }
        if d.x > 0.0 {
            s = s.min((half - a.x) / d.x);
        } else if d.x < 0.0 {
            s = s.min((-half - a.x) / d.x);
        }
        let mut p = a + d * s.clamp(0.0, 1.0);
        p.x = p.x.clamp(-half, half);
        p.y = p.y.min(height);
        out.push(p);
        return out;
    }
    out
}

/// The SLE(8/3, ρ) restriction sample clipped to the box.
pub fn sample_restriction_curve(setup: &ChordalSetup) -> Result<Vec<Point>> {
    setup.validate()?;
    let rho = setup.rho()?;
    let rho = (rho.abs() > 1e-12).then_some(rho);
    let horizon = exit_horizon(setup.width, setup.height);
    let dt = horizon / setup.trace_steps as f64;
    let seed = derive_seed(setup.seed, Purpose::Restriction, 0);
    let driving = sample_driving(RESTRICTION_KAPPA, rho, horizon, dt, seed)?;
    let (w, h) = (setup.width, setup.height);
    let trace = loewner_trace_until(&driving, dt, |p| outside_box(p, w, h))?;
    Ok(clip_to_box(&trace.points, w, h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullSample {
    pub gamma: Vec<Point>,
    pub attached_cluster_ids: Vec<usize>,
    /// Every loop of the attached clusters.
    pub attached_loops: Vec<Loop>,
    pub width: f64,
    pub height: f64,
    /// Empty until [`right_boundary`] fills it.
    pub eta: Vec<Point>,
}

fn hull_from(gamma: &[Point], ids: Vec<usize>, soup: &LoopSoup, clusters: &ClusterSet) -> HullSample {
    let attached_loops = ids
        .iter()
        .filter_map(|&id| clusters.cluster(id))
        .flat_map(|c| c.members.iter().map(|&i| soup.loops[i].clone()))
        .collect();
    let b = soup.config.domain.bbox();
    HullSample {
        gamma: gamma.to_vec(),
        attached_cluster_ids: ids,
        attached_loops,
        width: b.width(),
        height: b.height(),
        eta: Vec::new(),
    }
}

/// Attaches every cluster having a loop within `touch_distance` of γ.
pub fn attach_clusters(gamma: &[Point], soup: &LoopSoup, clusters: &ClusterSet, touch_distance: f64) -> HullSample {
    let gbox = BBox::of_points(gamma);
    let hits: Vec<usize> = soup
        .loops
        .par_iter()
        .enumerate()
        .filter(|(_, l)| polylines_intersect(l.points(), l.bbox(), gamma, &gbox, touch_distance))
        .map(|(i, _)| clusters.labels[i])
        .collect();
    let mut ids = hits;
    ids.sort_unstable();
    ids.dedup();
    hull_from(gamma, ids, soup, clusters)
}

/// Reference for [`attach_clusters`]: every loop segment against every γ segment.
pub fn attach_clusters_bruteforce(gamma: &[Point], soup: &LoopSoup, clusters: &ClusterSet, touch_distance: f64) -> HullSample {
    let mut ids: Vec<usize> = soup
        .loops
        .iter()
        .enumerate()
        .filter(|(_, l)| {
            l.segments().any(|(p, q)| gamma.windows(2).any(|g| segments_touch(p, q, g[0], g[1], touch_distance)))
        })
        .map(|(i, _)| clusters.labels[i])
        .collect();
    ids.sort_unstable();
    ids.dedup();
    hull_from(gamma, ids, soup, clusters)
}

/// Cells blocked by γ, the attached loops, and — when γ leaves through a
/// side — the side edge from the exit up to the top corner, so the region
/// right of γ is the one reachable from the right edge below the exit.
pub fn blocked_mask(hull: &HullSample, geom: &GridGeometry) -> Result<Mask> {
    let win = geom.full_window();
    let mut m = Mask::new(geom.nx, geom.ny);
    mark_polyline(geom, &win, &hull.gamma, &mut m);
    for l in &hull.attached_loops {
        mark_polyline(geom, &win, l.points(), &mut m);
    }
    let last = *hull.gamma.last().ok_or(Error::DegenerateGeometry("empty restriction curve".into()))?;
    let eps = 1e-9 * hull.width.max(hull.height);
    if last.y < hull.height - eps {
        let column = if last.x >= 0.5 * hull.width - eps {
            geom.nx - 1
        } else if last.x <= -0.5 * hull.width + eps {
            0
        } else {
            return Err(Error::DegenerateGeometry("restriction curve ends inside the box".into()));
        };
        let j0 = geom.cell_of(last).1.clamp(0, geom.ny as i64 - 1) as usize;
        for j in j0..geom.ny {
            m.set(column, j, true);
        }
    }
    Ok(m)
}

/// Cells of η in grid coordinates, from the bottom edge upward.
pub fn right_boundary_cells(hull: &HullSample, geom: &GridGeometry) -> Result<Vec<(i64, i64)>> {
    let blocked = blocked_mask(hull, geom)?;
    let (nx, ny) = (geom.nx, geom.ny);
    let right = flood_from(&blocked, (0..ny).map(|j| (nx - 1, j)));
    if !(0..nx).any(|i| right.get(i, 0)) {
        return Err(Error::DegenerateGeometry("the region right of the hull does not reach the bottom edge".into()));
    }
    // The contour starts at the lowest-leftmost flooded cell and runs
    // counter-clockwise: east along the bottom, around the frame, then down
    // the hull's right side back to the start.
    let contour = crate::boundary::moore_contour(&right);
    let on_frame = |&(i, j): &(i64, i64)| i == 0 || i == nx as i64 - 1 || j == ny as i64 - 1;
    let k = contour
        .iter()
        .rposition(on_frame)
        .ok_or(Error::DegenerateGeometry("the region right of the hull never reaches the frame".into()))?;
    let mut cells: Vec<(i64, i64)> = contour[k..].to_vec();
    cells.push(contour[0]);
    cells.reverse();
    Ok(cells)
}

/// η as a polyline through cell centres, bottom to top.
pub fn right_boundary(hull: &HullSample, resolution: usize) -> Result<Vec<Point>> {
    let geom = GridGeometry::for_domain(&Domain::HalfPlaneBox { width: hull.width, height: hull.height }, resolution);
    let cells = right_boundary_cells(hull, &geom)?;
    Ok(cells.into_iter().map(|(i, j)| geom.center(i as usize, j as usize)).collect())
}

/// Box-counting dimension of η's cells on the box grid.
pub fn eta_dimension(eta: &[Point], geom: &GridGeometry, sizes: &[usize]) -> Result<DimensionEstimate> {
    let mut cells: Vec<(i64, i64)> = eta.iter().map(|&p| geom.cell_of(p)).collect();
    cells.sort_unstable();
    cells.dedup();
    box_counting_dimension(CellSet::Cells(&cells), geom.cell_size, sizes)
}

/// Abscissa where the curve first reaches height `level`, interpolated on
/// the crossing segment.
pub fn first_crossing_abscissa(curve: &[Point], level: f64) -> Option<f64> {
    if curve.first()?.y >= level {
        return Some(curve[0].x);
    }
    curve.windows(2).find(|w| w[1].y >= level).map(|w| {
        let (a, b) = (w[0], w[1]);
        let s = (level - a.y) / (b.y - a.y);
        a.x + s * (b.x - a.x)
    })
}

/// z ↦ −1/z applied pointwise, with the traversal reversed so the image
/// again runs from near 0 outward. Points at the origin are dropped.
pub fn invert_curve(curve: &[Point]) -> Vec<Point> {
    curve
        .iter()
        .rev()
        .filter_map(|p| {
            let r2 = p.x * p.x + p.y * p.y;
            (r2 > 0.0).then(|| Point::new(-p.x / r2, p.y / r2))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub level: f64,
    pub forward: Vec<f64>,
    pub inverted: Vec<f64>,
    pub dropped_forward: usize,
    pub dropped_inverted: usize,
    pub ks: KsReport,
}

/// Compares the first-crossing abscissa at `level` of the curves and of
/// their images under z ↦ −1/z with a two-sample KS test.
pub fn reversibility_statistic(etas: &[Vec<Point>], level: f64) -> ReversibilityReport {
    let fwd: Vec<Option<f64>> = etas.iter().map(|e| first_crossing_abscissa(e, level)).collect();
    let inv: Vec<Option<f64>> = etas.iter().map(|e| first_crossing_abscissa(&invert_curve(e), level)).collect();
    let forward: Vec<f64> = fwd.iter().flatten().copied().collect();
    let inverted: Vec<f64> = inv.iter().flatten().copied().collect();
    ReversibilityReport {
        level,
        dropped_forward: etas.len() - forward.len(),
        dropped_inverted: etas.len() - inverted.len(),
        ks: ks_two_sample(&forward, &inverted),
        forward,
        inverted,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChordalRun {
    pub seed: u64,
    pub hull: HullSample,
    pub n_loops: usize,
    pub n_clusters: usize,
}

/// One full pipeline run: γ, an independent soup and its clusters, the
/// attachment and η.
pub fn run_chordal(setup: &ChordalSetup) -> Result<ChordalRun> {
    let gamma = sample_restriction_curve(setup)?;
    let soup = sample_soup(&setup.soup)?;
    let clusters = build_clusters(&soup, setup.touch_distance);
    let mut hull = attach_clusters(&gamma, &soup, &clusters, setup.touch_distance);
    hull.eta = right_boundary(&hull, setup.resolution)?;
    Ok(ChordalRun { seed: setup.seed, hull, n_loops: soup.len(), n_clusters: clusters.len() })
}

//! Outer boundaries of clusters.
//!
//! The exterior of a cluster is the set of cells reached from the domain
//! boundary by 4-connected steps that avoid the cluster's trace. Boundary
//! cells are exterior cells 8-adjacent to the trace. The boundary polyline is
//! the Moore-neighbour contour of (non-exterior ∪ boundary cells), which runs
//! through boundary-cell centres and so strictly encloses the cluster.
//!
//! Everything is computed inside a window around the cluster's bounding box;
//! the window frame is connected to the domain boundary outside the box, so
//! the result equals the full-grid computation.

use crate::cluster::ClusterSet;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster::{flood_from_frame, trace_window, GridGeometry, Mask, Window};
use crate::soup::{Loop, LoopSoup};

/// 8-neighbourhood, counter-clockwise from east (y up).
const DIRS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn dir_index(d: (i64, i64)) -> usize {
    DIRS.iter().position(|&x| x == d).expect("unit 8-neighbour offset")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterBoundary {
    pub cluster_id: usize,
    /// Closed polyline (first == last) through boundary cell centres.
    pub polyline: Vec<Point>,
    pub grid_resolution: usize,
    /// Global grid coordinates of all boundary cells.
    pub boundary_cells: Vec<(i64, i64)>,
    /// Global grid coordinates of the cluster's trace cells.
    pub trace_cells: Vec<(i64, i64)>,
    pub geometry: GridGeometry,
}

/// Moore-neighbour tracing of the outer contour of `set`, starting from its
/// lowest-leftmost cell. Stops when the first move is about to repeat.
/// Returns window cell coordinates; a single isolated cell gives one entry.
pub fn moore_contour(set: &Mask) -> Vec<(i64, i64)> {
    let Some(start_idx) = set.bits.iter().position(|&b| b) else {
        return Vec::new();
    };
    let start = ((start_idx % set.nx) as i64, (start_idx / set.nx) as i64);
    let step = |cur: (i64, i64), back: usize| -> Option<((i64, i64), usize)> {
        for k in 1..=8 {
            let d = (back + k) % 8;
            let cand = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if set.get_signed(cand.0, cand.1) {
                let pd = (back + k - 1) % 8;
                let prev = (cur.0 + DIRS[pd].0, cur.1 + DIRS[pd].1);
                return Some((cand, dir_index((prev.0 - cand.0, prev.1 - cand.1))));
            }
        }
        None
    };
    let mut contour = vec![start];
    let Some((second, mut back)) = step(start, 4) else {
        return contour;
    };
    let mut cur = second;
    let limit = 4 * set.bits.len() + 8;
    for _ in 0..limit {
        let (next, nb) = step(cur, back).expect("a contour cell with a neighbour keeps one");
        if cur == start && next == second {
            return contour;
        }
        contour.push(cur);
        cur = next;
        back = nb;
    }
    contour
}

/// Outer boundary of the union of `loops` on `geom`.
pub fn outer_boundary_of(loops: &[&Loop], geom: &GridGeometry, cluster_id: usize, resolution: usize) -> Result<ClusterBoundary> {
    let bbox = loops
        .iter()
        .fold(crate::geometry::BBox::empty(), |b, l| b.union(l.bbox()));
    let win = geom
        .window_for(&bbox, 2)
        .ok_or(Error::BoundaryUndefined { cluster_id })?;
    let trace = trace_window(geom, &win, loops.iter().copied());
    let exterior = flood_from_frame(&trace);
    if exterior.count() == 0 {
        return Err(Error::BoundaryUndefined { cluster_id });
    }
    let (w, h) = (win.w, win.h);
    let mut rim = Mask::new(w, h);
    let mut solid = Mask::new(w, h);
    for j in 0..h {
        for i in 0..w {
            if !exterior.get(i, j) {
                solid.set(i, j, true);
                continue;
            }
            let touches = DIRS.iter().any(|&(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                trace.get_signed(a, b)
            });
            if touches {
                rim.set(i, j, true);
                solid.set(i, j, true);
            }
        }
    }
    let to_global = |(i, j): (i64, i64)| (i + win.i0 as i64, j + win.j0 as i64);
    let contour = moore_contour(&solid);
    let mut polyline: Vec<Point> = contour
        .iter()
        .map(|&c| {
            let (gi, gj) = to_global(c);
            geom.center(gi as usize, gj as usize)
        })
        .collect();
    if let Some(&first) = polyline.first() {
        polyline.push(first);
    }
    Ok(ClusterBoundary {
        cluster_id,
        polyline,
        grid_resolution: resolution,
        boundary_cells: rim.cells().into_iter().map(to_global).collect(),
        trace_cells: trace.cells().into_iter().map(to_global).collect(),
        geometry: *geom,
    })
}

/// Outer boundary of cluster `cluster_id` on the domain grid.
pub fn trace_outer_boundary(
    cluster_id: usize,
    clusters: &ClusterSet,
    soup: &LoopSoup,
    resolution: usize,
) -> Result<ClusterBoundary> {
    let cluster = clusters
        .cluster(cluster_id)
        .ok_or_else(|| Error::Config(format!("no cluster with id {cluster_id}")))?;
    let geom = GridGeometry::for_domain(&soup.config.domain, resolution);
    let loops: Vec<&Loop> = cluster.members.iter().map(|&i| &soup.loops[i]).collect();
    outer_boundary_of(&loops, &geom, cluster_id, resolution)
}

/// Outer boundary of a single loop on its own fitted square grid.
pub fn loop_frontier(l: &Loop, resolution: usize) -> Result<ClusterBoundary> {
    let geom = GridGeometry::fitted(l.bbox(), resolution, 4);
    outer_boundary_of(&[l], &geom, 0, resolution)
}

/// Window used by `outer_boundary_of`, exposed for rendering.
pub fn boundary_window(geom: &GridGeometry, loops: &[&Loop]) -> Option<Window> {
    let bbox = loops.iter().fold(crate::geometry::BBox::empty(), |b, l| b.union(l.bbox()));
    geom.window_for(&bbox, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::build_clusters;
    use crate::domain::Domain;
    use crate::geometry::{hausdorff_distance, point_in_polygon};
    use crate::soup::{sample_soup, SoupConfig};

    fn circle(center: Point, r: f64, n: usize) -> Loop {
        let pts = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                center + Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        Loop::from_polygon(1.0, pts).unwrap()
    }

    fn check_contour(b: &ClusterBoundary) {
        let p = &b.polyline;
        assert_eq!(p.first(), p.last());
        let cs = b.geometry.cell_size;
        for w in p.windows(2) {
            let d = (w[1] - w[0]).norm();
            assert!(d > 0.5 * cs && d < 1.5 * cs, "consecutive vertices must be 8-adjacent cells");
        }
        for &(i, j) in &b.trace_cells {
            let c = b.geometry.center(i as usize, j as usize);
            assert!(point_in_polygon(c, p), "trace cell ({i},{j}) outside boundary");
        }
    }

    #[test]
    fn circle_boundary_matches_circle() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 1.0, 0.01, 1.0, 1e-3, 0);
        let r = 0.25;
        let soup = LoopSoup { config: cfg, loops: vec![circle(Point::new(0.5, 0.5), r, 4000)] };
        let cs = build_clusters(&soup, 0.0);
        let b = trace_outer_boundary(0, &cs, &soup, 256).unwrap();
        check_contour(&b);
        let reference: Vec<Point> = circle(Point::new(0.5, 0.5), r, 4000).points().to_vec();
        let h = hausdorff_distance(&b.polyline, &reference);
        // rim-cell centres sit within a diagonal step plus half a cell diagonal
        assert!(h <= 1.5 * std::f64::consts::SQRT_2 * b.geometry.cell_size, "hausdorff {h}");
        // a circle's contour visits no cell twice
        let mut seen = b.polyline[..b.polyline.len() - 1].to_vec();
        seen.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        seen.dedup();
        assert_eq!(seen.len(), b.polyline.len() - 1);
    }

    #[test]
    fn sampled_clusters_are_enclosed() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 2.0, 0.005, 0.3, 5e-4, 21);
        let soup = sample_soup(&cfg).unwrap();
        let cs = build_clusters(&soup, 0.0);
        for c in &cs.clusters {
            let b = trace_outer_boundary(c.id, &cs, &soup, 256).unwrap();
            check_contour(&b);
        }
    }

    #[test]
    fn isolated_cell_contour() {
        let mut m = Mask::new(5, 5);
        m.set(2, 2, true);
        assert_eq!(moore_contour(&m), vec![(2, 2)]);
        let mut sq = Mask::new(6, 6);
        for j in 1..4 {
            for i in 1..4 {
                sq.set(i, j, true);
            }
        }
        let c = moore_contour(&sq);
        assert_eq!(c.len(), 8);
        assert_eq!(c[0], (1, 1));
    }

    #[test]
    fn frame_filling_cluster_has_no_boundary() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 1.0, 0.01, 1.0, 1e-3, 0);
        let mut pts = Vec::new();
        for k in 0..40 {
            let x = (k as f64 + 0.5) / 40.0;
            let (a, b) = if k % 2 == 0 { (0.0001, 0.9999) } else { (0.9999, 0.0001) };
            pts.push(Point::new(x, a));
            pts.push(Point::new(x, b));
        }
        pts.push(Point::new(0.9999, 0.0001));
        pts.push(Point::new(0.0001, 0.0001));
        let soup = LoopSoup { config: cfg, loops: vec![Loop::from_polygon(1.0, pts).unwrap()] };
        let cs = build_clusters(&soup, 0.0);
        assert!(matches!(
            trace_outer_boundary(0, &cs, &soup, 20),
            Err(Error::BoundaryUndefined { cluster_id: 0 })
        ));
    }
}

//! Loop-loop intersection and chain-connected clusters.

use rayon::prelude::*;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, segments_touch, BBox, Point};
use crate::soup::{Loop, LoopSoup};
use crate::union_find::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionGraph {
    pub n_loops: usize,
    /// Sorted pairs `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Smallest loop index in the cluster.
    pub id: usize,
    /// Loop indices, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSet {
    /// Loop index → cluster id.
    pub labels: Vec<usize>,
    /// Clusters ordered by id.
    pub clusters: Vec<Cluster>,
    pub graph: IntersectionGraph,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster(&self, id: usize) -> Option<&Cluster> {
        self.clusters.binary_search_by_key(&id, |c| c.id).ok().map(|i| &self.clusters[i])
    }

    pub fn bbox(&self, id: usize, soup: &LoopSoup) -> Option<BBox> {
        let c = self.cluster(id)?;
        Some(c.members.iter().fold(BBox::empty(), |b, &i| b.union(soup.loops[i].bbox())))
    }

    pub fn total_duration(&self, id: usize, soup: &LoopSoup) -> Option<f64> {
        let c = self.cluster(id)?;
        Some(c.members.iter().map(|&i| soup.loops[i].duration()).sum())
    }

    /// Cluster ids ordered by decreasing bounding-box diagonal (ties by id).
    pub fn ids_by_extent(&self, soup: &LoopSoup) -> Vec<usize> {
        let mut ids: Vec<(f64, usize)> = self
            .clusters
            .iter()
            .map(|c| (self.bbox(c.id, soup).map_or(0.0, |b| b.diagonal()), c.id))
            .collect();
        ids.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        ids.into_iter().map(|(_, id)| id).collect()
    }
}

/// Segment indices of `pts` whose box meets `window`.
fn segments_in(pts: &[Point], window: &BBox) -> Vec<usize> {
    (0..pts.len().saturating_sub(1))
        .filter(|&k| BBox::of_segment(pts[k], pts[k + 1]).intersects(window))
        .collect()
}

/// Polylines of `a` and `b` share a point, or come within `touch_distance`.
///
/// Only segments inside the overlap of the (expanded) bounding boxes are
/// examined, bucketed on a uniform grid when there are many; the segment
/// predicate is the same one the brute-force oracle uses.
pub fn loops_intersect(a: &Loop, b: &Loop, touch_distance: f64) -> bool {
    polylines_intersect(a.points(), a.bbox(), b.points(), b.bbox(), touch_distance)
}

/// [`loops_intersect`] for open polylines with precomputed bounding boxes.
pub fn polylines_intersect(pa: &[Point], box_a: &BBox, pb: &[Point], box_b: &BBox, touch_distance: f64) -> bool {
    let ea = box_a.expand(touch_distance);
    if !ea.intersects(box_b) {
        return false;
    }
    let window = ea.intersection(&box_b.expand(touch_distance));
    let sa = segments_in(pa, &window);
    let sb = segments_in(pb, &window);
    if sa.is_empty() || sb.is_empty() {
        return false;
    }
    if sa.len() * sb.len() <= 4096 {
        return sa.iter().any(|&i| {
            sb.iter().any(|&j| segments_touch(pa[i], pa[i + 1], pb[j], pb[j + 1], touch_distance))
        });
    }

    let cells_per_side = ((sb.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
    let cw = (window.width() / cells_per_side as f64).max(f64::MIN_POSITIVE);
    let ch = (window.height() / cells_per_side as f64).max(f64::MIN_POSITIVE);
    let cell_range = |bb: &BBox| {
        let clampi = |v: f64| (v.floor().max(0.0) as usize).min(cells_per_side - 1);
        (
            clampi((bb.min.x - window.min.x) / cw),
            clampi((bb.max.x - window.min.x) / cw),
            clampi((bb.min.y - window.min.y) / ch),
            clampi((bb.max.y - window.min.y) / ch),
        )
    };
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); cells_per_side * cells_per_side];
    for &j in &sb {
        let (x0, x1, y0, y1) = cell_range(&BBox::of_segment(pb[j], pb[j + 1]));
        for y in y0..=y1 {
            for x in x0..=x1 {
                buckets[y * cells_per_side + x].push(j as u32);
            }
        }
    }
    sa.iter().any(|&i| {
        let bb = BBox::of_segment(pa[i], pa[i + 1]).expand(touch_distance);
        let (x0, x1, y0, y1) = cell_range(&bb);
        (y0..=y1).any(|y| {
            (x0..=x1).any(|x| {
                buckets[y * cells_per_side + x].iter().any(|&j| {
                    let j = j as usize;
                    segments_touch(pa[i], pa[i + 1], pb[j], pb[j + 1], touch_distance)
                })
            })
        })
    })
}

/// Reference predicate: every segment pair, no pruning.
pub fn loops_intersect_bruteforce(a: &Loop, b: &Loop, touch_distance: f64) -> bool {
    a.segments()
        .any(|(p1, p2)| b.segments().any(|(q1, q2)| segments_touch(p1, p2, q1, q2, touch_distance)))
}

fn assemble(n: usize, mut edges: Vec<(usize, usize)>) -> ClusterSet {
    edges.sort_unstable();
    edges.dedup();
    let mut uf = UnionFind::new(n);
    for &(i, j) in &edges {
        uf.union(i, j);
    }
    let mut min_of_root: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = uf.find(i);
        min_of_root.entry(r).or_insert(i);
    }
    let labels: Vec<usize> = (0..n).map(|i| min_of_root[&uf.find(i)]).collect();
    let mut by_id: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &id) in labels.iter().enumerate() {
        by_id.entry(id).or_default().push(i);
    }
    let mut clusters: Vec<Cluster> = by_id.into_iter().map(|(id, members)| Cluster { id, members }).collect();
    clusters.sort_by_key(|c| c.id);
    ClusterSet { labels, clusters, graph: IntersectionGraph { n_loops: n, edges } }
}

/// Candidate pairs from a uniform grid over loop boxes, cell size = median
/// box diagonal; loops sharing a cell are tested exactly.
fn candidate_pairs(loops: &[Loop], touch_distance: f64) -> Vec<(usize, usize)> {
    let n = loops.len();
    if n < 2 {
        return Vec::new();
    }
    let boxes: Vec<BBox> = loops.iter().map(|l| l.bbox().expand(0.5 * touch_distance)).collect();
    let mut diags: Vec<f64> = boxes.iter().map(|b| b.diagonal()).collect();
    diags.sort_by(f64::total_cmp);
    let cell = diags[n / 2].max(1e-12);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, b) in boxes.iter().enumerate() {
        let (x0, x1) = ((b.min.x / cell).floor() as i64, (b.max.x / cell).floor() as i64);
        let (y0, y1) = ((b.min.y / cell).floor() as i64, (b.max.y / cell).floor() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                grid.entry((x, y)).or_default().push(i);
            }
        }
    }
    let mut pairs = Vec::new();
    for members in grid.values() {
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                if boxes[i].intersects(&boxes[j]) {
                    pairs.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

pub fn build_clusters(soup: &LoopSoup, touch_distance: f64) -> ClusterSet {
    let loops = &soup.loops;
    let edges: Vec<(usize, usize)> = candidate_pairs(loops, touch_distance)
        .into_par_iter()
        .filter(|&(i, j)| loops_intersect(&loops[i], &loops[j], touch_distance))
        .collect();
    assemble(loops.len(), edges)
}

pub fn build_clusters_bruteforce(soup: &LoopSoup, touch_distance: f64) -> ClusterSet {
    let loops = &soup.loops;
    let n = loops.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if loops_intersect_bruteforce(&loops[i], &loops[j], touch_distance) {
                edges.push((i, j));
            }
        }
    }
    assemble(n, edges)
}

/// Smallest point-to-segment distance between the polylines of `a` and `b`,
/// skipping work that cannot beat `best`.
fn polyline_distance_bounded(a: &Loop, b: &Loop, best: f64) -> f64 {
    let mut best = best;
    for (from, to) in [(a, b), (b, a)] {
        let tb = *to.bbox();
        for &p in from.points() {
            if tb.distance_to_point(p) >= best {
                continue;
            }
            for (q1, q2) in to.segments() {
                let d = point_segment_distance(p, q1, q2);
                if d < best {
                    best = d;
                }
            }
        }
    }
    best
}

/// Minimum over distinct cluster pairs of the polyline distance between them.
pub fn min_cluster_distance(clusters: &ClusterSet, soup: &LoopSoup) -> Result<f64> {
    if clusters.len() < 2 {
        return Err(Error::UndefinedDistance(format!(
            "need at least 2 clusters, got {}",
            clusters.len()
        )));
    }
    let loops = &soup.loops;
    let n = loops.len();
    let per_loop: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in i + 1..n {
                if clusters.labels[i] == clusters.labels[j] {
                    continue;
                }
                if loops[i].bbox().distance(loops[j].bbox()) >= best {
                    continue;
                }
                best = polyline_distance_bounded(&loops[i], &loops[j], best);
            }
            best
        })
        .collect();
    Ok(per_loop.into_iter().fold(f64::INFINITY, f64::min))
}

/// Exhaustive distance oracle used by the tests and the acceptance suite.
pub fn min_cluster_distance_bruteforce(clusters: &ClusterSet, soup: &LoopSoup) -> Result<f64> {
    if clusters.len() < 2 {
        return Err(Error::UndefinedDistance("need at least 2 clusters".into()));
    }
    let loops = &soup.loops;
    let mut best = f64::INFINITY;
    for i in 0..loops.len() {
        for j in 0..loops.len() {
            if clusters.labels[i] == clusters.labels[j] {
                continue;
            }
            for &p in loops[i].points() {
                for (q1, q2) in loops[j].segments() {
                    best = best.min(point_segment_distance(p, q1, q2));
                }
            }
        }
    }
    Ok(best)
}

/// Canonical form of a partition for comparisons that ignore labels.
pub fn canonical_partition(c: &ClusterSet) -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = c.clusters.iter().map(|c| c.members.clone()).collect();
    v.sort();
    v
}

/// Axis-aligned square through the given corner, as a closed 5-point loop.
pub fn square_loop(corner: Point, side: f64) -> Loop {
    Loop::from_polygon(
        1.0,
        vec![
            corner,
            corner + Point::new(side, 0.0),
            corner + Point::new(side, side),
            corner + Point::new(0.0, side),
        ],
    )
    .expect("square is a valid loop")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::soup::{sample_soup, SoupConfig};

    fn soup_of(loops: Vec<Loop>) -> LoopSoup {
        LoopSoup { config: SoupConfig::new(Domain::rectangle_at(-10.0, -10.0, 20.0, 20.0), 1.0, 0.01, 1.0, 1e-3, 0), loops }
    }

    #[test]
    fn crossing_squares_intersect_disjoint_translates_do_not() {
        let a = square_loop(Point::new(0.0, 0.0), 1.0);
        let b = square_loop(Point::new(0.5, 0.5), 1.0);
        assert!(loops_intersect(&a, &b, 0.0));
        assert!(loops_intersect(&b, &a, 0.0));
        let far = a.translated(Point::new(3.0, 0.0));
        assert!(!loops_intersect(&a, &far, 0.0));
        assert!(!loops_intersect(&a, &far, 1.5));
        assert!(loops_intersect(&a, &far, 2.0));
    }

    #[test]
    fn nested_squares_do_not_intersect() {
        let outer = square_loop(Point::new(0.0, 0.0), 4.0);
        let inner = square_loop(Point::new(1.0, 1.0), 1.0);
        assert!(!loops_intersect(&outer, &inner, 0.0));
    }

    #[test]
    fn empty_and_disjoint_soups() {
        assert!(build_clusters(&soup_of(vec![]), 0.0).is_empty());
        assert!(build_clusters_bruteforce(&soup_of(vec![]), 0.0).is_empty());
        let soup = soup_of(vec![square_loop(Point::new(0.0, 0.0), 1.0), square_loop(Point::new(5.0, 0.0), 1.0)]);
        let cs = build_clusters(&soup, 0.0);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.labels, vec![0, 1]);
    }

    #[test]
    fn chain_of_three_is_one_cluster() {
        let soup = soup_of(vec![
            square_loop(Point::new(0.0, 0.0), 1.0),
            square_loop(Point::new(0.8, 0.3), 1.0),
            square_loop(Point::new(1.6, 0.6), 1.0),
        ]);
        assert!(!loops_intersect(&soup.loops[0], &soup.loops[2], 0.0));
        for cs in [build_clusters(&soup, 0.0), build_clusters_bruteforce(&soup, 0.0)] {
            assert_eq!(cs.len(), 1);
            assert_eq!(cs.clusters[0].members, vec![0, 1, 2]);
            assert_eq!(cs.graph.edges, vec![(0, 1), (1, 2)]);
        }
    }

    #[test]
    fn distance_between_translated_singletons() {
        let a = square_loop(Point::new(0.0, 0.0), 1.0);
        let b = a.translated(Point::new(1.25, 0.0));
        let soup = soup_of(vec![a, b]);
        let cs = build_clusters(&soup, 0.0);
        let d = min_cluster_distance(&cs, &soup).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
        assert_eq!(d, min_cluster_distance_bruteforce(&cs, &soup).unwrap());
        let one = soup_of(vec![square_loop(Point::new(0.0, 0.0), 1.0)]);
        assert!(matches!(
            min_cluster_distance(&build_clusters(&one, 0.0), &one),
            Err(Error::UndefinedDistance(_))
        ));
    }

    #[test]
    fn grid_matches_bruteforce_on_sampled_soups() {
        for seed in 0..6 {
            let cfg = SoupConfig::new(Domain::UnitSquare, 3.0, 0.002, 0.2, 2e-4, seed);
            let soup = sample_soup(&cfg).unwrap();
            let fast = build_clusters(&soup, 0.0);
            let slow = build_clusters_bruteforce(&soup, 0.0);
            assert_eq!(fast, slow);
            assert!(fast.len() + fast.graph.edges.len() >= soup.len());
        }
    }
}

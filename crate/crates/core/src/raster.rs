//! Raster kernels: conservative segment rasterization, filled loop hulls,
//! free-point masks and crossing detection in the trace complement.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};
use crate::soup::{Loop, LoopSoup};

pub const MIN_RESOLUTION: usize = 16;

/// Placement of a square-celled grid in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub origin: Point,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridGeometry {
    /// Grid over the domain's bounding box with `resolution` cells along the
    /// longer side.
    pub fn for_domain(domain: &Domain, resolution: usize) -> Self {
        let b = domain.bbox();
        let cell_size = b.width().max(b.height()) / resolution as f64;
        let nx = ((b.width() / cell_size).round() as usize).max(1);
        let ny = ((b.height() / cell_size).round() as usize).max(1);
        Self { origin: b.min, cell_size, nx, ny }
    }

    /// Square grid of `resolution` cells per side centred on `bbox`, leaving
    /// `margin` empty cells around it.
    pub fn fitted(bbox: &BBox, resolution: usize, margin: usize) -> Self {
        let side = bbox.width().max(bbox.height()).max(1e-12);
        let usable = resolution.saturating_sub(2 * margin).max(1);
        let cell_size = side / usable as f64;
        let c = bbox.center();
        let half = 0.5 * resolution as f64 * cell_size;
        Self { origin: Point::new(c.x - half, c.y - half), cell_size, nx: resolution, ny: resolution }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.cell_size,
            self.origin.y + (j as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_of(&self, p: Point) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell_size).floor() as i64,
            ((p.y - self.origin.y) / self.cell_size).floor() as i64,
        )
    }

    /// Inclusive index range of cells whose closed squares meet [lo, hi] along
    /// one axis, clamped to `0..n`.
    fn closed_range(lo: f64, hi: f64, origin: f64, cell: f64, n: usize) -> Option<(usize, usize)> {
        let a = ((lo - origin) / cell).ceil() as i64 - 1;
        let b = ((hi - origin) / cell).floor() as i64;
        let a = a.max(0);
        let b = b.min(n as i64 - 1);
        (a <= b).then_some((a as usize, b as usize))
    }

    /// Visits every cell whose closed square intersects the segment `ab`.
    pub fn rasterize_segment(&self, a: Point, b: Point, mut visit: impl FnMut(usize, usize)) {
        let cs = self.cell_size;
        let (left, right) = if a.x <= b.x { (a, b) } else { (b, a) };
        let Some((i0, i1)) = Self::closed_range(left.x, right.x, self.origin.x, cs, self.nx) else {
            return;
        };
        let dx = right.x - left.x;
        for i in i0..=i1 {
            let x_lo = self.origin.x + i as f64 * cs;
            let x_hi = x_lo + cs;
            let (ya, yb) = if dx == 0.0 {
                (left.y, right.y)
            } else {
                let t0 = ((x_lo - left.x) / dx).clamp(0.0, 1.0);
                let t1 = ((x_hi - left.x) / dx).clamp(0.0, 1.0);
                let y0 = if t0 == 0.0 { left.y } else { left.y + t0 * (right.y - left.y) };
                let y1 = if t1 == 1.0 { right.y } else { left.y + t1 * (right.y - left.y) };
                (y0, y1)
            };
            let (ylo, yhi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
            if let Some((j0, j1)) = Self::closed_range(ylo, yhi, self.origin.y, cs, self.ny) {
                for j in j0..=j1 {
                    visit(i, j);
                }
            }
        }
    }

    /// Cell index rectangle `[i0, i1] × [j0, j1]` covering `bbox` plus `pad`
    /// cells, clamped to the grid.
    pub fn window_for(&self, bbox: &BBox, pad: usize) -> Option<Window> {
        let (i0, j0) = self.cell_of(bbox.min);
        let (i1, j1) = self.cell_of(bbox.max);
        let pad = pad as i64;
        let i0 = (i0 - pad).max(0);
        let j0 = (j0 - pad).max(0);
        let i1 = (i1 + pad).min(self.nx as i64 - 1);
        let j1 = (j1 + pad).min(self.ny as i64 - 1);
        (i0 <= i1 && j0 <= j1).then(|| Window {
            i0: i0 as usize,
            j0: j0 as usize,
            w: (i1 - i0 + 1) as usize,
            h: (j1 - j0 + 1) as usize,
        })
    }

    pub fn full_window(&self) -> Window {
        Window { i0: 0, j0: 0, w: self.nx, h: self.ny }
    }
}

/// Rectangular block of cells of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub i0: usize,
    pub j0: usize,
    pub w: usize,
    pub h: usize,
}

/// Boolean raster, row-major with `j` (y) as the row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub nx: usize,
    pub ny: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self { nx, ny, bits: vec![false; nx * ny] }
    }

    pub fn filled(nx: usize, ny: usize, value: bool) -> Self {
        Self { nx, ny, bits: vec![value; nx * ny] }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.nx + i]
    }

    /// Out-of-range coordinates read as false.
    pub fn get_signed(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny && self.bits[j as usize * self.nx + i as usize]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[j * self.nx + i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len().max(1) as f64
    }

    pub fn cells(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.get(i, j) {
                    out.push((i as i64, j as i64));
                }
            }
        }
        out
    }

    pub fn or_with(&mut self, other: &Mask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn complement(&self) -> Mask {
        Mask { nx: self.nx, ny: self.ny, bits: self.bits.iter().map(|b| !b).collect() }
    }
}

/// Rasterizes polylines into a mask of the given window of `geom`.
pub fn trace_window<'a>(geom: &GridGeometry, win: &Window, loops: impl IntoIterator<Item = &'a Loop>) -> Mask {
    let mut m = Mask::new(win.w, win.h);
    for l in loops {
        mark_polyline(geom, win, l.points(), &mut m);
    }
    m
}

pub fn mark_polyline(geom: &GridGeometry, win: &Window, points: &[Point], m: &mut Mask) {
    for s in points.windows(2) {
        geom.rasterize_segment(s[0], s[1], |i, j| {
            if i >= win.i0 && j >= win.j0 && i < win.i0 + win.w && j < win.j0 + win.h {
                m.set(i - win.i0, j - win.j0, true);
            }
        });
    }
}

/// Cells reachable from the window frame by 4-connected steps through
/// unblocked cells. Blocked cells therefore block 8-connectedly.
pub fn flood_from_frame(blocked: &Mask) -> Mask {
    let (w, h) = (blocked.nx, blocked.ny);
    let seeds = (0..w).flat_map(|i| [(i, 0), (i, h - 1)]).chain((0..h).flat_map(|j| [(0, j), (w - 1, j)]));
    flood_from(blocked, seeds)
}

pub fn flood_from(blocked: &Mask, seeds: impl IntoIterator<Item = (usize, usize)>) -> Mask {
    let (w, h) = (blocked.nx, blocked.ny);
    let mut seen = Mask::new(w, h);
    let mut queue = VecDeque::new();
    for (i, j) in seeds {
        if !blocked.get(i, j) && !seen.get(i, j) {
            seen.set(i, j, true);
            queue.push_back((i, j));
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        let mut push = |a: usize, b: usize| {
            if !blocked.get(a, b) && !seen.get(a, b) {
                seen.set(a, b, true);
                queue.push_back((a, b));
            }
        };
        if i > 0 {
            push(i - 1, j);
        }
        if i + 1 < w {
            push(i + 1, j);
        }
        if j > 0 {
            push(i, j - 1);
        }
        if j + 1 < h {
            push(i, j + 1);
        }
    }
    seen
}

/// Role of a cell in a rendered raster. Each cell carries exactly one role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRole {
    Empty,
    LoopTrace,
    ClusterFill,
    Exterior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub resolution: usize,
    pub geometry: GridGeometry,
    pub cells: Vec<CellRole>,
}

impl RasterGrid {
    pub fn new(geometry: GridGeometry, resolution: usize) -> Self {
        Self { resolution, geometry, cells: vec![CellRole::Empty; geometry.len()] }
    }

    pub fn role(&self, i: usize, j: usize) -> CellRole {
        self.cells[self.geometry.index(i, j)]
    }

    pub fn mask_of(&self, role: CellRole) -> Mask {
        Mask {
            nx: self.geometry.nx,
            ny: self.geometry.ny,
            bits: self.cells.iter().map(|&r| r == role).collect(),
        }
    }

    pub fn count(&self, role: CellRole) -> usize {
        self.cells.iter().filter(|&&r| r == role).count()
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Config(format!("resolution must be at least {MIN_RESOLUTION}, got {resolution}")));
    }
    Ok(())
}

/// Trace mask of a whole soup on the domain grid.
pub fn soup_trace_mask(soup: &LoopSoup, geom: &GridGeometry) -> Mask {
    let win = geom.full_window();
    let partial: Vec<Vec<usize>> = soup
        .loops
        .par_iter()
        .map(|l| {
            let mut cells = Vec::new();
            for s in l.points().windows(2) {
                geom.rasterize_segment(s[0], s[1], |i, j| cells.push(geom.index(i, j)));
            }
            cells
        })
        .collect();
    let mut m = Mask::new(win.w, win.h);
    for cells in partial {
        for c in cells {
            m.bits[c] = true;
        }
    }
    m
}

/// Marks `LoopTrace` for every cell crossed by a loop segment.
pub fn rasterize_soup(soup: &LoopSoup, resolution: usize) -> Result<RasterGrid> {
    check_resolution(resolution)?;
    let geom = GridGeometry::for_domain(&soup.config.domain, resolution);
    let mask = soup_trace_mask(soup, &geom);
    let mut grid = RasterGrid::new(geom, resolution);
    for (cell, &b) in grid.cells.iter_mut().zip(&mask.bits) {
        if b {
            *cell = CellRole::LoopTrace;
        }
    }
    Ok(grid)
}

/// Sorted linear indices of the loop's filled hull: its trace plus every cell
/// not reachable from outside by a 4-connected path avoiding the trace.
pub fn fill_loop_hull(l: &Loop, geom: &GridGeometry) -> Vec<usize> {
    let Some(win) = geom.window_for(l.bbox(), 1) else {
        return Vec::new();
    };
    let blocked = trace_window(geom, &win, [l]);
    let outside = flood_from_frame(&blocked);
    let mut cells = Vec::new();
    for j in 0..win.h {
        for i in 0..win.w {
            if !outside.get(i, j) {
                cells.push(geom.index(win.i0 + i, win.j0 + j));
            }
        }
    }
    cells
}

#[derive(Debug, Clone)]
pub struct FreePointMask {
    pub grid: RasterGrid,
    /// Cells in no loop's filled hull.
    pub free: Mask,
    /// Cells crossed by no loop trace (a raster version of M).
    pub trace_free: Mask,
}

impl FreePointMask {
    pub fn free_fraction(&self) -> f64 {
        self.free.fraction()
    }
}

/// Union of filled hulls of all loops on the grid.
pub fn hull_mask(soup: &LoopSoup, geom: &GridGeometry) -> Mask {
    let hulls: Vec<Vec<usize>> = soup.loops.par_iter().map(|l| fill_loop_hull(l, geom)).collect();
    let mut m = Mask::new(geom.nx, geom.ny);
    for cells in hulls {
        for c in cells {
            m.bits[c] = true;
        }
    }
    m
}

pub fn free_point_mask(soup: &LoopSoup, resolution: usize) -> Result<FreePointMask> {
    let mut grid = rasterize_soup(soup, resolution)?;
    let geom = grid.geometry;
    let covered = hull_mask(soup, &geom);
    let trace = grid.mask_of(CellRole::LoopTrace);
    for (cell, (&h, &t)) in grid.cells.iter_mut().zip(covered.bits.iter().zip(&trace.bits)) {
        if h && !t {
            *cell = CellRole::ClusterFill;
        }
    }
    Ok(FreePointMask { grid, free: covered.complement(), trace_free: trace.complement() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingSide {
    LeftRight,
    TopBottom,
}

/// Whether open cells join the two opposite sides of the mask by a
/// 4-connected path.
pub fn crossing_in_mask(open: &Mask, side: CrossingSide) -> bool {
    let (w, h) = (open.nx, open.ny);
    if w == 0 || h == 0 {
        return false;
    }
    let blocked = open.complement();
    let reached = match side {
        CrossingSide::LeftRight => flood_from(&blocked, (0..h).map(|j| (0, j))),
        CrossingSide::TopBottom => flood_from(&blocked, (0..w).map(|i| (i, 0))),
    };
    match side {
        CrossingSide::LeftRight => (0..h).any(|j| reached.get(w - 1, j)),
        CrossingSide::TopBottom => (0..w).any(|i| reached.get(i, h - 1)),
    }
}

/// Sub-block of a mask.
pub fn crop(mask: &Mask, win: &Window) -> Mask {
    let mut out = Mask::new(win.w, win.h);
    for j in 0..win.h {
        for i in 0..win.w {
            out.set(i, j, mask.get(win.i0 + i, win.j0 + j));
        }
    }
    out
}

/// Trace-avoiding crossing of a rectangular domain.
pub fn crossing_exists(soup: &LoopSoup, resolution: usize, side: CrossingSide) -> Result<bool> {
    crossing_exists_in(soup, resolution, side, None)
}

/// Trace-avoiding crossing of `window` (a rectangle inside the domain, or the
/// whole domain when `None`). Loops are kept whole, so a soup sampled in a
/// larger domain has no boundary-avoidance artefact inside the window.
pub fn crossing_exists_in(
    soup: &LoopSoup,
    resolution: usize,
    side: CrossingSide,
    window: Option<&BBox>,
) -> Result<bool> {
    check_resolution(resolution)?;
    if !soup.config.domain.is_rectangular() {
        return Err(Error::Domain("crossings are defined on rectangular domains".into()));
    }
    let geom = GridGeometry::for_domain(&soup.config.domain, resolution);
    let open = soup_trace_mask(soup, &geom).complement();
    Ok(crossing_in_mask(&window_mask(&open, &geom, window)?, side))
}

pub(crate) fn window_mask(mask: &Mask, geom: &GridGeometry, window: Option<&BBox>) -> Result<Mask> {
    match window {
        None => Ok(mask.clone()),
        Some(b) => {
            let win = cells_inside(geom, b)
                .ok_or_else(|| Error::Domain(format!("crossing window {b:?} holds no cell")))?;
            Ok(crop(mask, &win))
        }
    }
}

/// Cells whose centres lie in the closed box.
pub fn cells_inside(geom: &GridGeometry, b: &BBox) -> Option<Window> {
    let lo = |v: f64, o: f64| ((v - o) / geom.cell_size - 0.5).ceil().max(0.0) as usize;
    let hi = |v: f64, o: f64, n: usize| (((v - o) / geom.cell_size - 0.5).floor() as i64).min(n as i64 - 1);
    let (i0, j0) = (lo(b.min.x, geom.origin.x), lo(b.min.y, geom.origin.y));
    let (i1, j1) = (hi(b.max.x, geom.origin.x, geom.nx), hi(b.max.y, geom.origin.y, geom.ny));
    (i1 >= i0 as i64 && j1 >= j0 as i64).then(|| Window { i0, j0, w: i1 as usize - i0 + 1, h: j1 as usize - j0 + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soup::{sample_soup, SoupConfig};

    fn square_geom(n: usize) -> GridGeometry {
        GridGeometry::for_domain(&Domain::UnitSquare, n)
    }

    #[test]
    fn horizontal_segment_marks_one_row() {
        let g = square_geom(32);
        let y = 10.5 * g.cell_size;
        let mut cells = Vec::new();
        g.rasterize_segment(Point::new(0.001, y), Point::new(0.999, y), |i, j| cells.push((i, j)));
        assert_eq!(cells.len(), 32);
        assert!(cells.iter().all(|&(_, j)| j == 10));
        // exactly on a grid line: both adjacent rows
        let mut tie = Vec::new();
        let y = 10.0 * g.cell_size;
        g.rasterize_segment(Point::new(0.001, y), Point::new(0.999, y), |i, j| tie.push((i, j)));
        assert_eq!(tie.len(), 64);
    }

    #[test]
    fn empty_soup_has_no_trace() {
        let soup = LoopSoup::empty(SoupConfig::new(Domain::UnitSquare, 0.0, 0.01, 1.0, 1e-3, 0));
        let grid = rasterize_soup(&soup, 64).unwrap();
        assert_eq!(grid.count(CellRole::LoopTrace), 0);
        let fm = free_point_mask(&soup, 64).unwrap();
        assert_eq!(fm.free.count(), 64 * 64);
        assert!(crossing_exists(&soup, 64, CrossingSide::LeftRight).unwrap());
        assert!(rasterize_soup(&soup, 8).is_err());
    }

    fn circle(center: Point, r: f64, n: usize) -> Loop {
        let pts = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                center + Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        Loop::from_polygon(1.0, pts).unwrap()
    }

    #[test]
    fn tiny_loop_fills_its_cell() {
        let g = square_geom(64);
        let c = g.center(20, 30);
        let l = circle(c, 0.1 * g.cell_size, 16);
        assert_eq!(fill_loop_hull(&l, &g), vec![g.index(20, 30)]);
    }

    #[test]
    fn circle_hull_area_and_holes() {
        let g = square_geom(512);
        let r = 0.3;
        let l = circle(Point::new(0.5, 0.5), r, 2000);
        let hull = fill_loop_hull(&l, &g);
        let expected = std::f64::consts::PI * r * r / (g.cell_size * g.cell_size);
        assert!((hull.len() as f64 - expected).abs() / expected < 0.05);
        // the centre is a hole of the trace and must be filled
        assert!(hull.binary_search(&g.index(256, 256)).is_ok());
    }

    #[test]
    fn free_mask_shrinks_as_loops_are_added() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 4.0, 0.005, 0.2, 5e-4, 4);
        let soup = sample_soup(&cfg).unwrap();
        let mut prev = usize::MAX;
        for k in 0..=soup.len() {
            let partial = LoopSoup { config: soup.config, loops: soup.loops[..k].to_vec() };
            let fm = free_point_mask(&partial, 128).unwrap();
            let free = fm.free.count();
            assert!(free <= prev);
            prev = free;
            // hull-free implies trace-free
            assert!(fm.free.bits.iter().zip(&fm.trace_free.bits).all(|(&f, &t)| !f || t));
        }
    }

    #[test]
    fn single_loop_free_mask_is_hull_complement() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 1.0, 0.01, 1.0, 1e-3, 0);
        let l = circle(Point::new(0.4, 0.6), 0.2, 500);
        let soup = LoopSoup { config: cfg, loops: vec![l.clone()] };
        let fm = free_point_mask(&soup, 128).unwrap();
        let hull = fill_loop_hull(&l, &fm.grid.geometry);
        let mut expect = Mask::filled(128, 128, true);
        for c in hull {
            expect.bits[c] = false;
        }
        assert_eq!(fm.free, expect);
    }

    #[test]
    fn space_filling_loop_blocks_crossing() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 1.0, 0.01, 1.0, 1e-3, 0);
        let mut pts = Vec::new();
        let n = 64;
        for k in 0..n {
            let x = (k as f64 + 0.5) / n as f64;
            if k % 2 == 0 {
                pts.push(Point::new(x, 0.001));
                pts.push(Point::new(x, 0.999));
            } else {
                pts.push(Point::new(x, 0.999));
                pts.push(Point::new(x, 0.001));
            }
        }
        let l = Loop::from_polygon(1.0, pts).unwrap();
        let soup = LoopSoup { config: cfg, loops: vec![l] };
        assert!(!crossing_exists(&soup, 32, CrossingSide::LeftRight).unwrap());
        assert!(!crossing_exists(&soup, 32, CrossingSide::TopBottom).unwrap());
    }
}

//! The c ↔ κ ↔ α dictionary and box-counting dimension estimation.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};
use crate::raster::{mark_polyline, GridGeometry, Mask};

pub const KAPPA_MIN: f64 = 8.0 / 3.0;
pub const KAPPA_MAX: f64 = 4.0;

/// Central charge of SLE_κ, `(3κ − 8)(6 − κ) / 2κ`, for κ ∈ (8/3, 4].
pub fn c_of_kappa(kappa: f64) -> Result<f64> {
    if !(kappa > KAPPA_MIN && kappa <= KAPPA_MAX) {
        return Err(Error::Range(format!("kappa must lie in (8/3, 4], got {kappa}")));
    }
    Ok(c_of_kappa_unchecked(kappa))
}

/// Same formula without the range check (used for limits and plots).
pub fn c_of_kappa_unchecked(kappa: f64) -> f64 {
    (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa)
}

/// Inverse of `c_of_kappa` on (0, 1]: the root of 3κ² + (2c − 26)κ + 48 = 0
/// lying in (8/3, 4].
pub fn kappa_of_c(c: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Range(format!("c must lie in (0, 1], got {c}")));
    }
    let b = 26.0 - 2.0 * c;
    let disc = (b * b - 576.0).max(0.0);
    Ok((b - disc.sqrt()) / 6.0)
}

/// One-sided restriction exponent `(6 − κ) / 2κ`.
pub fn alpha_of_kappa(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Range(format!("kappa must be positive, got {kappa}")));
    }
    Ok((6.0 - kappa) / (2.0 * kappa))
}

/// `(ρ + 2)(ρ + 6 − κ) / 4κ`.
pub fn alpha_of_kappa_rho(kappa: f64, rho: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Range(format!("kappa must be positive, got {kappa}")));
    }
    Ok((rho + 2.0) * (rho + 6.0 - kappa) / (4.0 * kappa))
}

/// The root ρ > −2 of (ρ + 2)(ρ + 6 − κ) = 4κα.
pub fn rho_for_alpha(kappa: f64, alpha: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Range(format!("kappa must be positive, got {kappa}")));
    }
    let b = 8.0 - kappa;
    let disc = b * b - 4.0 * (12.0 - 2.0 * kappa - 4.0 * kappa * alpha);
    if disc < 0.0 {
        return Err(Error::Range(format!("no real rho for kappa {kappa}, alpha {alpha}")));
    }
    let rho = (-b + disc.sqrt()) / 2.0;
    if rho > -2.0 {
        Ok(rho)
    } else {
        Err(Error::Range(format!("rho {rho} for kappa {kappa}, alpha {alpha} is not above -2")))
    }
}

/// Hausdorff dimension `1 + κ/8` of SLE_κ curves.
pub fn sle_dimension(kappa: f64) -> f64 {
    1.0 + kappa / 8.0
}

/// Dimension `2 − c/5` of the free-point set, for c < 10.
pub fn free_point_dimension(c: f64) -> f64 {
    2.0 - c / 5.0
}

/// Least-squares line through (log 1/size, log count).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LineFit { slope, intercept, stderr, r2, n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub r2: f64,
    /// (box size in plane units, occupied boxes), box size strictly decreasing.
    pub scales: Vec<(f64, u64)>,
    /// Fit over every scale.
    pub full_fit: LineFit,
    /// Fit without the two smallest boxes, when at least four scales remain.
    pub trimmed_fit: Option<LineFit>,
    /// Whether the reported slope comes from the trimmed fit.
    pub trimmed: bool,
}

/// Occupied cells on a base grid, given either as coordinates or as a mask.
#[derive(Debug, Clone, Copy)]
pub enum CellSet<'a> {
    Cells(&'a [(i64, i64)]),
    Mask(&'a Mask),
}

impl CellSet<'_> {
    fn is_empty(&self) -> bool {
        match self {
            CellSet::Cells(c) => c.is_empty(),
            CellSet::Mask(m) => !m.bits.iter().any(|&b| b),
        }
    }

    fn count_boxes(&self, size: usize) -> u64 {
        let s = size as i64;
        match self {
            CellSet::Cells(cells) => {
                let set: HashSet<(i64, i64)> = cells.iter().map(|&(i, j)| (i.div_euclid(s), j.div_euclid(s))).collect();
                set.len() as u64
            }
            CellSet::Mask(m) => {
                let bw = m.nx.div_ceil(size);
                let bh = m.ny.div_ceil(size);
                let mut occ = vec![false; bw * bh];
                for j in 0..m.ny {
                    let row = &m.bits[j * m.nx..(j + 1) * m.nx];
                    let bj = j / size;
                    for (i, &b) in row.iter().enumerate() {
                        if b {
                            occ[bj * bw + i / size] = true;
                        }
                    }
                }
                occ.iter().filter(|&&b| b).count() as u64
            }
        }
    }
}

/// Powers of two from `2^min_exp` to `2^max_exp` cells.
pub fn dyadic_sizes(min_exp: u32, max_exp: u32) -> Vec<usize> {
    (min_exp..=max_exp).map(|e| 1usize << e).collect()
}

/// Box-counting dimension: occupied boxes per box size (in base cells,
/// converted to plane units with `cell_size`), then the slope of
/// log(count) against log(1/size). If dropping the two smallest boxes leaves
/// at least four scales and improves r², the trimmed fit is reported.
pub fn box_counting_dimension(set: CellSet<'_>, cell_size: f64, sizes: &[usize]) -> Result<DimensionEstimate> {
    let mut sizes: Vec<usize> = sizes.to_vec();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.dedup();
    if sizes.len() < 4 || sizes.contains(&0) {
        return Err(Error::Config(format!("box counting needs at least 4 distinct positive sizes, got {sizes:?}")));
    }
    if set.is_empty() {
        return Err(Error::UndefinedDimension("empty point set".into()));
    }
    let scales: Vec<(f64, u64)> = sizes.iter().map(|&s| (s as f64 * cell_size, set.count_boxes(s))).collect();
    dimension_from_scales(scales)
}

pub fn dimension_from_scales(scales: Vec<(f64, u64)>) -> Result<DimensionEstimate> {
    let xs: Vec<f64> = scales.iter().map(|(s, _)| -s.ln()).collect();
    let ys: Vec<f64> = scales.iter().map(|&(_, c)| (c as f64).ln()).collect();
    let full_fit = fit_line(&xs, &ys);
    let n = scales.len();
    let trimmed_fit = (n >= 6).then(|| fit_line(&xs[..n - 2], &ys[..n - 2]));
    let trimmed = trimmed_fit.is_some_and(|t| t.r2 > full_fit.r2);
    let chosen = if trimmed { trimmed_fit.unwrap() } else { full_fit };
    if !chosen.slope.is_finite() {
        return Err(Error::UndefinedDimension("non-finite slope".into()));
    }
    Ok(DimensionEstimate { slope: chosen.slope, stderr: chosen.stderr, r2: chosen.r2, scales, full_fit, trimmed_fit, trimmed })
}

/// Box-counting dimension of a polyline rasterized on a square grid of
/// `resolution` cells fitted to its bounding box.
pub fn polyline_dimension(points: &[Point], resolution: usize, sizes: &[usize]) -> Result<DimensionEstimate> {
    if points.len() < 2 {
        return Err(Error::UndefinedDimension("polyline needs two points".into()));
    }
    let bbox = BBox::of_points(points);
    let geom = GridGeometry::fitted(&bbox, resolution, 1);
    let win = geom.full_window();
    let mut m = Mask::new(geom.nx, geom.ny);
    mark_polyline(&geom, &win, points, &mut m);
    box_counting_dimension(CellSet::Mask(&m), geom.cell_size, sizes)
}

/// Level-`level` Sierpinski carpet on a 3^level grid.
pub fn sierpinski_carpet(level: u32) -> Mask {
    let n = 3usize.pow(level);
    let mut m = Mask::new(n, n);
    for j in 0..n {
        for i in 0..n {
            let (mut a, mut b, mut keep) = (i, j, true);
            while a > 0 || b > 0 {
                if a % 3 == 1 && b % 3 == 1 {
                    keep = false;
                    break;
                }
                a /= 3;
                b /= 3;
            }
            m.set(i, j, keep);
        }
    }
    m
}

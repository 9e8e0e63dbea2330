//! Crossing probability of the trace-avoiding set as the intensity grows.
//!
//! For each sample the soups along the intensity grid are coupled: the soup
//! at c_k is the soup at c_{k−1} plus an independent increment soup of
//! intensity c_k − c_{k−1}. Adding loops can only destroy crossings, so the
//! crossing indicator is non-increasing in c for every sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::domain::Domain;
use crate::geometry::{BBox, Point};
use crate::raster::{crossing_exists_in, free_point_mask, CrossingSide};
use crate::rng::{derive_seed, Purpose};
use crate::soup::{sample_soup, LoopSoup, SoupConfig};

/// The limit value conjectured for the critical intensity.
pub const CONJECTURED_CRITICAL_C: f64 = 1.0;

/// 0.1, 0.2, …, 1.6.
pub fn default_c_grid() -> Vec<f64> {
    (1..=16).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub c_grid: Vec<f64>,
    /// Domain, cutoffs, discretization and base seed; its intensity is ignored.
    pub base: SoupConfig,
    pub resolution: usize,
    pub n_samples: usize,
    pub side: CrossingSide,
    /// Crossing window inside the domain (whole domain when `None`).
    pub window: Option<BBox>,
    /// Also record the hull-free area fraction (costs a hull fill per soup).
    pub free_fraction: bool,
}

impl SweepConfig {
    pub fn new(base: SoupConfig, resolution: usize, n_samples: usize) -> Self {
        Self {
            c_grid: default_c_grid(),
            base,
            resolution,
            n_samples,
            side: CrossingSide::LeftRight,
            window: None,
            free_fraction: false,
        }
    }

    /// Crossings of the unit square inside a soup box padded by `pad` on
    /// every side, so loops near the window are not thinned by the
    /// stay-inside condition. `window_resolution` counts cells across the
    /// unit square.
    pub fn padded(base: SoupConfig, pad: f64, window_resolution: usize, n_samples: usize) -> Self {
        let side = 1.0 + 2.0 * pad;
        let base = base.with_domain(Domain::rectangle_at(-pad, -pad, side, side));
        let resolution = (window_resolution as f64 * side).round() as usize;
        let mut cfg = Self::new(base, resolution, n_samples);
        cfg.window = Some(BBox::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0)));
        cfg
    }

    /// Crossing window obtained by shrinking the domain's box by `inset` on
    /// every side.
    pub fn with_inset_window(mut self, inset: f64) -> Self {
        let b = self.base.domain.bbox();
        self.window = Some(b.expand(-inset));
        self
    }

    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Config("c grid must be non-empty and non-negative".into()));
        }
        if self.c_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("c grid must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub c: f64,
    pub sample: usize,
    pub seed: u64,
    pub crossed: bool,
    /// NaN unless requested.
    pub free_fraction: f64,
    pub n_loops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub c_values: Vec<f64>,
    pub crossing_probability: Vec<f64>,
    pub n_samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub resolution: usize,
    /// Intensity where the crossing probability falls through 1/2, by linear
    /// interpolation; `None` when it never does on the grid.
    pub midpoint: Option<f64>,
    pub conjectured_critical: f64,
    /// Ordered by (c, sample).
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Whether every sample's crossing indicator is non-increasing in c.
    pub fn is_monotone(&self) -> bool {
        let m = self.c_values.len();
        (0..self.n_samples).all(|s| (1..m).all(|k| {
            let prev = self.rows[(k - 1) * self.n_samples + s].crossed;
            let cur = self.rows[k * self.n_samples + s].crossed;
            prev || !cur
        }))
    }
}

/// Linear interpolation of the first downward passage through 1/2.
pub fn midpoint(c_values: &[f64], probs: &[f64]) -> Option<f64> {
    if probs.first().is_some_and(|&p| p <= 0.5) {
        return c_values.first().copied();
    }
    (1..probs.len()).find(|&k| probs[k] <= 0.5).map(|k| {
        let (c0, c1, p0, p1) = (c_values[k - 1], c_values[k], probs[k - 1], probs[k]);
        c0 + (p0 - 0.5) / (p0 - p1) * (c1 - c0)
    })
}

/// Seed of sample `s`.
pub fn sample_seed(base_seed: u64, s: usize) -> u64 {
    derive_seed(base_seed, Purpose::SoupSeed, s as u64)
}

/// The coupled soups of one sample along the grid.
pub fn coupled_soups(base: &SoupConfig, c_grid: &[f64], seed: u64) -> Result<Vec<LoopSoup>> {
    let mut out = Vec::with_capacity(c_grid.len());
    let mut current = LoopSoup::empty(base.with_intensity(0.0).with_seed(seed));
    let mut c_prev = 0.0;
    for (k, &c) in c_grid.iter().enumerate() {
        let dc = c - c_prev;
        if dc > 0.0 {
            let cfg = base.with_intensity(dc).with_seed(derive_seed(seed, Purpose::Coupling, k as u64));
            current = current.superpose(&sample_soup(&cfg)?)?;
        }
        current.config.intensity_c = c;
        c_prev = c;
        out.push(current.clone());
    }
    Ok(out)
}

pub fn percolation_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let per_sample: Vec<Vec<SweepRow>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|s| -> Result<Vec<SweepRow>> {
            let seed = sample_seed(cfg.base.seed, s);
            let soups = coupled_soups(&cfg.base, &cfg.c_grid, seed)?;
            let mut rows = Vec::with_capacity(soups.len());
            for (soup, &c) in soups.iter().zip(&cfg.c_grid) {
                // evaluated independently at every c so monotonicity stays a real check
                let crossed = crossing_exists_in(soup, cfg.resolution, cfg.side, cfg.window.as_ref())?;
                let free_fraction = if cfg.free_fraction {
                    free_point_mask(soup, cfg.resolution)?.free_fraction()
                } else {
                    f64::NAN
                };
                rows.push(SweepRow { c, sample: s, seed, crossed, free_fraction, n_loops: soup.len() });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let m = cfg.c_grid.len();
    let mut rows = Vec::with_capacity(m * cfg.n_samples);
    let mut probs = Vec::with_capacity(m);
    for k in 0..m {
        let hits = per_sample.iter().filter(|r| r[k].crossed).count();
        probs.push(hits as f64 / cfg.n_samples.max(1) as f64);
        rows.extend(per_sample.iter().map(|r| r[k]));
    }
    Ok(SweepResult {
        midpoint: midpoint(&cfg.c_grid, &probs),
        c_values: cfg.c_grid.clone(),
        crossing_probability: probs,
        n_samples: cfg.n_samples,
        t_min: cfg.base.t_min,
        t_max: cfg.base.t_max,
        resolution: cfg.resolution,
        conjectured_critical: CONJECTURED_CRITICAL_C,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_interpolation() {
        let c = [0.0, 0.5, 1.0, 1.5];
        assert_eq!(midpoint(&c, &[1.0, 0.8, 0.4, 0.0]), Some(0.5 + 0.3 / 0.4 * 0.5));
        assert_eq!(midpoint(&c, &[1.0, 1.0, 0.9, 0.6]), None);
        assert_eq!(midpoint(&c, &[0.5, 0.0, 0.0, 0.0]), Some(0.0));
    }

    #[test]
    fn coupled_soups_are_nested() {
        let base = SoupConfig::new(Domain::UnitSquare, 0.0, 0.01, 1.0, 1e-3, 3);
        let soups = coupled_soups(&base, &[0.0, 0.5, 1.0], 77).unwrap();
        assert!(soups[0].is_empty());
        for w in soups.windows(2) {
            assert_eq!(&w[1].loops[..w[0].len()], &w[0].loops[..]);
        }
        assert_eq!(soups[2].config.intensity_c, 1.0);
    }

    #[test]
    fn zero_intensity_always_crosses_and_sweep_is_monotone() {
        let base = SoupConfig::new(Domain::UnitSquare, 0.0, 0.02, 1.0, 2e-3, 9);
        let mut cfg = SweepConfig::new(base, 64, 6).with_inset_window(0.2);
        cfg.c_grid = vec![0.0, 0.8, 1.6, 3.2];
        let r = percolation_sweep(&cfg).unwrap();
        assert_eq!(r.crossing_probability[0], 1.0);
        assert!(r.is_monotone());
        assert!(r.crossing_probability.windows(2).all(|w| w[1] <= w[0]));
    }
}

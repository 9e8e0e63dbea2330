//! Random-walk loop soup on the square lattice δℤ², used as an independent
//! discretization of the continuum soup.
//!
//! Each rooted lattice loop of length L carries mass `c · 4^{-L} / L`; the
//! 1/L thins the L rootings of an unrooted loop back to one. At a site there
//! are `C(L, L/2)²` closed walks of length L, so the number of rooted loops of
//! length L at a site is Poisson with mean `c · C(L, L/2)² · 4^{-L} / L`.
//! A walk of length L has Brownian duration `L δ² / 2`, which is how the
//! sampler matches the continuum cutoffs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::{stream, Purpose};
use crate::soup::{Loop, LoopSoup, SoupConfig};

#[derive(Debug, Clone)]
pub struct LatticeSoupReport {
    pub soup: LoopSoup,
    /// Set when no loop length fits both `max_length` and the duration cutoffs.
    pub warning: Option<String>,
    pub lengths: Vec<usize>,
    pub n_sites: usize,
}

/// `C(L, L/2)² · 4^{-L}`, the probability a simple random walk is back at its
/// start after `length` steps. Zero for odd lengths.
pub fn return_probability(length: usize) -> f64 {
    if length % 2 == 1 {
        return 0.0;
    }
    let m = length / 2;
    let mut a = 1.0f64;
    for k in 1..=m {
        a *= (2 * k - 1) as f64 / (2 * k) as f64;
    }
    a * a
}

/// Mean number of rooted loops of the given length at a single site.
pub fn rooted_loop_mean(c: f64, length: usize) -> f64 {
    if length == 0 {
        return 0.0;
    }
    c * return_probability(length) / length as f64
}

/// Lengths admitted by the cutoffs: even, at least 4, at most `max_length`,
/// with `L δ²/2` in `[t_min, t_max]`.
pub fn admissible_lengths(lattice_step: f64, config: &SoupConfig, max_length: usize) -> Vec<usize> {
    let unit = 0.5 * lattice_step * lattice_step;
    (4..=max_length)
        .step_by(2)
        .filter(|&l| {
            let t = l as f64 * unit;
            t >= config.t_min && t <= config.t_max
        })
        .collect()
}

fn lattice_sites(lattice_step: f64, config: &SoupConfig) -> Vec<Point> {
    let b = config.domain.bbox();
    let i0 = (b.min.x / lattice_step).ceil() as i64;
    let i1 = (b.max.x / lattice_step).floor() as i64;
    let j0 = (b.min.y / lattice_step).ceil() as i64;
    let j1 = (b.max.y / lattice_step).floor() as i64;
    let mut sites = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let p = Point::new(i as f64 * lattice_step, j as f64 * lattice_step);
            if config.domain.contains(p) {
                sites.push(p);
            }
        }
    }
    sites
}

/// Uniform closed walk of even length. In rotated coordinates u = x + y,
/// v = x − y every lattice step moves both by ±1 independently, so a closed
/// walk is a pair of independent balanced ±1 sequences.
pub fn sample_closed_walk<R: Rng + ?Sized>(length: usize, rng: &mut R) -> Vec<(i64, i64)> {
    assert!(length % 2 == 0 && length >= 2);
    let m = length / 2;
    let mut u: Vec<i64> = (0..length).map(|k| if k < m { 1 } else { -1 }).collect();
    let mut v = u.clone();
    u.shuffle(rng);
    v.shuffle(rng);
    let mut pos = (0i64, 0i64);
    let mut walk = Vec::with_capacity(length + 1);
    walk.push(pos);
    for k in 0..length {
        pos.0 += (u[k] + v[k]) / 2;
        pos.1 += (u[k] - v[k]) / 2;
        walk.push(pos);
    }
    walk
}

pub fn sample_rw_loop_soup(lattice_step: f64, config: &SoupConfig, max_length: usize) -> Result<LatticeSoupReport> {
    config.validate()?;
    if !(lattice_step > 0.0) {
        return Err(Error::Config(format!("lattice_step must be positive, got {lattice_step}")));
    }
    let lengths = admissible_lengths(lattice_step, config, max_length);
    let sites = lattice_sites(lattice_step, config);
    let warning = lengths.is_empty().then(|| {
        format!(
            "no admissible loop length: max_length {max_length} with step {lattice_step} misses [{}, {}]",
            config.t_min, config.t_max
        )
    });
    if lengths.is_empty() || config.intensity_c == 0.0 {
        return Ok(LatticeSoupReport { soup: LoopSoup::empty(*config), warning, lengths, n_sites: sites.len() });
    }

    let weights: Vec<f64> = lengths.iter().map(|&l| rooted_loop_mean(config.intensity_c, l)).collect();
    let site_mean: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / site_mean;
        cdf.push(acc);
    }
    let poisson = Poisson::new(site_mean).map_err(|e| Error::Config(format!("lattice poisson mean: {e}")))?;
    let unit_time = 0.5 * lattice_step * lattice_step;

    let per_site: Vec<Vec<Loop>> = sites
        .par_iter()
        .enumerate()
        .map(|(idx, &root)| {
            let mut rng = stream(config.seed, Purpose::LatticeSite, idx as u64);
            let k = poisson.sample(&mut rng) as usize;
            let mut out = Vec::new();
            for _ in 0..k {
                let u: f64 = rng.random();
                let li = cdf.partition_point(|&x| x < u).min(lengths.len() - 1);
                let length = lengths[li];
                let walk = sample_closed_walk(length, &mut rng);
                let points: Vec<Point> = walk
                    .iter()
                    .map(|&(i, j)| root + Point::new(i as f64 * lattice_step, j as f64 * lattice_step))
                    .collect();
                let l = Loop::new(length as f64 * unit_time, points).expect("closed walk");
                if l.lies_in(&config.domain) {
                    out.push(l);
                }
            }
            out
        })
        .collect();
    let loops = per_site.into_iter().flatten().collect();
    Ok(LatticeSoupReport { soup: LoopSoup { config: *config, loops }, warning, lengths, n_sites: sites.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Counts closed walks of the given length by enumerating all 4^L walks.
    fn enumerate_closed(length: u32) -> u64 {
        let moves = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)];
        (0..4u64.pow(length))
            .filter(|&code| {
                let (mut x, mut y, mut c) = (0, 0, code);
                for _ in 0..length {
                    let (dx, dy) = moves[(c % 4) as usize];
                    x += dx;
                    y += dy;
                    c /= 4;
                }
                x == 0 && y == 0
            })
            .count() as u64
    }

    #[test]
    fn length_four_mean_matches_enumeration() {
        let closed = enumerate_closed(4);
        assert_eq!(closed, 36);
        let c = 0.7;
        let oracle = c * closed as f64 / 4f64.powi(4) / 4.0;
        assert!((rooted_loop_mean(c, 4) - oracle).abs() < 1e-15);
        assert!((enumerate_closed(6) as f64 / 4f64.powi(6) - return_probability(6)).abs() < 1e-15);
        assert_eq!(return_probability(5), 0.0);
    }

    #[test]
    fn closed_walks_close_with_unit_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [2, 4, 10, 40] {
            let w = sample_closed_walk(len, &mut rng);
            assert_eq!(w.len(), len + 1);
            assert_eq!(*w.last().unwrap(), (0, 0));
            for p in w.windows(2) {
                assert_eq!((p[1].0 - p[0].0).abs() + (p[1].1 - p[0].1).abs(), 1);
            }
        }
    }

    #[test]
    fn zero_intensity_and_short_max_length() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 0.0, 0.01, 1.0, 1e-3, 3);
        assert!(sample_rw_loop_soup(0.05, &cfg, 100).unwrap().soup.is_empty());
        let cfg = cfg.with_intensity(1.0);
        let rep = sample_rw_loop_soup(0.05, &cfg, 2).unwrap();
        assert!(rep.soup.is_empty());
        assert!(rep.warning.is_some());
    }

    #[test]
    fn lattice_loops_are_contained_and_on_lattice() {
        let cfg = SoupConfig::new(Domain::UnitSquare, 2.0, 0.005, 0.05, 1e-3, 8);
        let rep = sample_rw_loop_soup(0.02, &cfg, 400).unwrap();
        assert!(rep.warning.is_none());
        assert!(!rep.soup.is_empty());
        for l in &rep.soup.loops {
            assert!(l.lies_in(&cfg.domain));
            assert!(l.duration() >= cfg.t_min && l.duration() <= cfg.t_max);
        }
    }
}

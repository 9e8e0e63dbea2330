//! Poissonian Brownian loop soups in bounded domains.
//!
//! Rooted loop measure: `c · dz ⊗ dt / (2π t²) ⊗ bridge(z, t)` restricted to
//! durations in `[t_min, t_max]`. Roots are drawn uniformly in the domain's
//! bounding box and a loop is kept only if every vertex of its polyline is
//! inside the (open) domain.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};
use crate::rng::{stream, Purpose};

/// Minimum number of vertices per sampled loop.
pub const MIN_LOOP_POINTS: usize = 64;

/// A rooted closed polyline approximating a Brownian loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    root: Point,
    duration: f64,
    points: Vec<Point>,
    bbox: BBox,
}

impl Loop {
    /// Builds a loop from an explicit vertex list. The list must contain at
    /// least three points and close exactly on its first point.
    pub fn new(duration: f64, points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Config(format!("a loop needs at least 3 points, got {}", points.len())));
        }
        if !(duration > 0.0) {
            return Err(Error::Config(format!("loop duration must be positive, got {duration}")));
        }
        let root = points[0];
        if points[points.len() - 1] != root {
            return Err(Error::Config("loop polyline does not close on its root".into()));
        }
        let bbox = BBox::of_points(&points);
        Ok(Self { root, duration, points, bbox })
    }

    /// Closes an open polyline by appending its first vertex.
    pub fn from_polygon(duration: f64, mut vertices: Vec<Point>) -> Result<Self> {
        if let Some(&first) = vertices.first() {
            if vertices.last() != Some(&first) || vertices.len() == 1 {
                vertices.push(first);
            }
        }
        Self::new(duration, vertices)
    }

    pub fn root(&self) -> Point {
        self.root
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn n_segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn translated(&self, offset: Point) -> Loop {
        let points: Vec<Point> = self.points.iter().map(|&p| p + offset).collect();
        Loop::new(self.duration, points).expect("translation preserves closure")
    }

    pub fn lies_in(&self, domain: &Domain) -> bool {
        self.points.iter().all(|&p| domain.contains(p))
    }

    /// Mean squared distance of the vertices from their centroid.
    pub fn mean_squared_radius(&self) -> f64 {
        let pts = &self.points[..self.points.len() - 1];
        let n = pts.len() as f64;
        let c = pts.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n);
        pts.iter().map(|&p| (p - c).norm_sq()).sum::<f64>() / n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoupConfig {
    pub domain: Domain,
    pub intensity_c: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub step_scale: f64,
    pub seed: u64,
}

impl SoupConfig {
    pub fn new(domain: Domain, intensity_c: f64, t_min: f64, t_max: f64, step_scale: f64, seed: u64) -> Self {
        Self { domain, intensity_c, t_min, t_max, step_scale, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !(self.intensity_c >= 0.0) || !self.intensity_c.is_finite() {
            return Err(Error::Config(format!("intensity c must be finite and >= 0, got {}", self.intensity_c)));
        }
        if !(self.t_min > 0.0) || !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::Config(format!(
                "duration cutoffs must be positive, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.t_min >= self.t_max {
            return Err(Error::Config(format!("t_min ({}) must be below t_max ({})", self.t_min, self.t_max)));
        }
        if !(self.step_scale > 0.0) {
            return Err(Error::Config(format!("step_scale must be positive, got {}", self.step_scale)));
        }
        Ok(())
    }

    pub fn with_intensity(mut self, c: f64) -> Self {
        self.intensity_c = c;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_cutoffs(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    /// Vertices used for a loop of the given duration.
    pub fn points_for(&self, duration: f64) -> usize {
        MIN_LOOP_POINTS.max((duration / self.step_scale).ceil() as usize)
    }
}

/// Mean of the Poisson number of candidate loops before domain rejection,
/// `c · Area(bbox) · (1/t_min − 1/t_max) / 2π`. An upper bound on the mean
/// accepted count.
pub fn expected_loop_count(config: &SoupConfig) -> Result<f64> {
    config.validate()?;
    let area = config.domain.bbox().width() * config.domain.bbox().height();
    Ok(config.intensity_c * area * (1.0 / config.t_min - 1.0 / config.t_max) / (2.0 * PI))
}

/// Inverse CDF of the density ∝ 1/t² on [t_min, t_max].
pub fn duration_from_uniform(u: f64, t_min: f64, t_max: f64) -> f64 {
    1.0 / (1.0 / t_min - u * (1.0 / t_min - 1.0 / t_max))
}

/// Discretized planar Brownian bridge from `root` back to `root`.
///
/// Steps are independent N(0, duration/(n−1)) per coordinate; the linear
/// correction `k/(n−1) · S_{n−1}` then pins the endpoint, and the last vertex
/// is set to `root` exactly.
pub fn sample_brownian_bridge_loop<R: Rng + ?Sized>(
    root: Point,
    duration: f64,
    n_points: usize,
    rng: &mut R,
) -> Result<Loop> {
    if n_points < 3 {
        return Err(Error::Config(format!("bridge needs n_points >= 3, got {n_points}")));
    }
    if !(duration > 0.0) {
        return Err(Error::Config(format!("bridge duration must be positive, got {duration}")));
    }
    let steps = n_points - 1;
    let sigma = (duration / steps as f64).sqrt();
    let mut walk = Vec::with_capacity(n_points);
    let mut s = Point::default();
    walk.push(s);
    for _ in 0..steps {
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        s = s + Point::new(dx, dy) * sigma;
        walk.push(s);
    }
    let end = s;
    let mut points: Vec<Point> = walk
        .into_iter()
        .enumerate()
        .map(|(k, w)| root + (w - end * (k as f64 / steps as f64)))
        .collect();
    points[0] = root;
    points[steps] = root;
    Loop::new(duration, points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSoup {
    pub config: SoupConfig,
    pub loops: Vec<Loop>,
}

impl LoopSoup {
    pub fn empty(config: SoupConfig) -> Self {
        Self { config, loops: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    /// Union of two soups on the same domain.
    ///
    /// Equal cutoffs add intensities; adjacent duration ranges at equal
    /// intensity concatenate into one range. Either way the result is again
    /// a Poissonian soup with the merged configuration.
    pub fn superpose(&self, other: &LoopSoup) -> Result<LoopSoup> {
        let (a, b) = (&self.config, &other.config);
        if a.domain != b.domain {
            return Err(Error::Config("cannot superpose soups on different domains".into()));
        }
        let mut config = *a;
        if a.t_min == b.t_min && a.t_max == b.t_max {
            config.intensity_c = a.intensity_c + b.intensity_c;
        } else if a.intensity_c == b.intensity_c && (a.t_max == b.t_min || b.t_max == a.t_min) {
            config.t_min = a.t_min.min(b.t_min);
            config.t_max = a.t_max.max(b.t_max);
        } else {
            return Err(Error::Config(
                "superposition needs equal cutoffs or adjacent duration ranges at equal intensity".into(),
            ));
        }
        config.step_scale = a.step_scale.min(b.step_scale);
        let mut loops = self.loops.clone();
        loops.extend(other.loops.iter().cloned());
        Ok(LoopSoup { config, loops })
    }

    pub fn total_points(&self) -> usize {
        self.loops.iter().map(|l| l.points().len()).sum()
    }
}

/// Candidate loop `index` of the soup keyed by `config.seed`, before domain
/// rejection.
pub fn candidate_loop(config: &SoupConfig, index: u64) -> Loop {
    let mut rng = stream(config.seed, Purpose::Loop, index);
    let b = config.domain.bbox();
    let root = Point::new(
        b.min.x + rng.random::<f64>() * b.width(),
        b.min.y + rng.random::<f64>() * b.height(),
    );
    let duration = duration_from_uniform(rng.random::<f64>(), config.t_min, config.t_max);
    let n = config.points_for(duration);
    sample_brownian_bridge_loop(root, duration, n, &mut rng).expect("sampler arguments are validated")
}

/// Number of candidate loops, N ~ Poisson(expected_loop_count).
pub fn candidate_count(config: &SoupConfig) -> Result<u64> {
    let mean = expected_loop_count(config)?;
    if mean == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mean).map_err(|e| Error::Config(format!("poisson mean {mean}: {e}")))?;
    let mut rng = stream(config.seed, Purpose::LoopCount, 0);
    Ok(poisson.sample(&mut rng) as u64)
}

/// Samples the soup: Poisson candidates, uniform roots in the bounding box,
/// 1/t² durations, bridge loops, and rejection of loops leaving the domain.
pub fn sample_soup(config: &SoupConfig) -> Result<LoopSoup> {
    let n = candidate_count(config)?;
    let loops: Vec<Loop> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let l = candidate_loop(config, i);
            l.lies_in(&config.domain).then_some(l)
        })
        .collect();
    Ok(LoopSoup { config: *config, loops })
}

/// Keeps the loops that lie entirely in `sub`.
pub fn restrict_soup(soup: &LoopSoup, sub: &Domain) -> Result<LoopSoup> {
    sub.validate()?;
    if !soup.config.domain.contains_domain(sub) {
        return Err(Error::Domain(format!("{sub:?} is not contained in {:?}", soup.config.domain)));
    }
    let loops = soup.loops.iter().filter(|l| l.lies_in(sub)).cloned().collect();
    Ok(LoopSoup { config: soup.config.with_domain(*sub), loops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_config(c: f64) -> SoupConfig {
        SoupConfig::new(Domain::UnitSquare, c, 0.01, 1.0, 1e-3, 11)
    }

    #[test]
    fn expected_count_values() {
        assert_eq!(expected_loop_count(&unit_config(0.0)).unwrap(), 0.0);
        let v = expected_loop_count(&unit_config(1.0)).unwrap();
        assert!((v - 99.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((v - 15.756_339_366_098_36).abs() < 1e-9);
        let v2 = expected_loop_count(&unit_config(2.0)).unwrap();
        assert_eq!(v2, 2.0 * v);
    }

    #[test]
    fn bad_cutoffs_rejected() {
        let cfg = unit_config(1.0).with_cutoffs(1.0, 0.5);
        assert!(matches!(expected_loop_count(&cfg), Err(Error::Config(_))));
        assert!(sample_soup(&cfg).is_err());
    }

    #[test]
    fn three_point_bridge_closes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let root = Point::new(0.3, 0.7);
        let l = sample_brownian_bridge_loop(root, 0.2, 3, &mut rng).unwrap();
        assert_eq!(l.points().len(), 3);
        assert_eq!(l.points()[0], root);
        assert_eq!(l.points()[2], root);
        assert!(sample_brownian_bridge_loop(root, 0.2, 2, &mut rng).is_err());
    }

    #[test]
    fn duration_inverse_cdf_endpoints() {
        assert!((duration_from_uniform(0.0, 0.01, 1.0) - 0.01).abs() < 1e-15);
        assert!((duration_from_uniform(1.0, 0.01, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_intensity_gives_empty_soup() {
        assert!(sample_soup(&unit_config(0.0)).unwrap().is_empty());
    }

    #[test]
    fn sampled_loops_are_closed_and_contained() {
        let soup = sample_soup(&unit_config(3.0)).unwrap();
        assert!(!soup.is_empty());
        for l in &soup.loops {
            assert_eq!(l.points().first(), l.points().last());
            assert!(l.lies_in(&soup.config.domain));
            assert!(l.points().iter().all(|&p| l.bbox().contains(p)));
            assert!(l.points().len() >= MIN_LOOP_POINTS);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_soup(&unit_config(2.0)).unwrap();
        let b = sample_soup(&unit_config(2.0)).unwrap();
        assert_eq!(a, b);
        let c = sample_soup(&unit_config(2.0).with_seed(12)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn restriction_to_full_and_disjoint_regions() {
        let soup = sample_soup(&unit_config(3.0)).unwrap();
        let same = restrict_soup(&soup, &Domain::UnitSquare).unwrap();
        assert_eq!(same.loops, soup.loops);
        let sliver = restrict_soup(&soup, &Domain::rectangle_at(0.0, 0.0, 1e-3, 1e-3)).unwrap();
        assert!(sliver.is_empty());
        assert!(matches!(restrict_soup(&soup, &Domain::rectangle(2.0, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn superposition_rules() {
        let a = sample_soup(&unit_config(0.5)).unwrap();
        let b = sample_soup(&unit_config(0.5).with_seed(99)).unwrap();
        let u = a.superpose(&b).unwrap();
        assert_eq!(u.config.intensity_c, 1.0);
        assert_eq!(u.len(), a.len() + b.len());
        let low = sample_soup(&unit_config(0.5).with_cutoffs(0.005, 0.01)).unwrap();
        let merged = low.superpose(&a).unwrap();
        assert_eq!((merged.config.t_min, merged.config.t_max), (0.005, 1.0));
        let other = sample_soup(&unit_config(0.7).with_cutoffs(0.02, 0.5)).unwrap();
        assert!(a.superpose(&other).is_err());
    }
}

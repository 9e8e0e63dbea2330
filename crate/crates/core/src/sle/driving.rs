use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Bound on recursive step halving near the force point.
pub const MAX_HALVINGS: u32 = 20;

/// Steps are halved while X < HALVING_FACTOR·√(κ·dt).
pub const HALVING_FACTOR: f64 = 4.0;

/// Initial gap between the driving point and the force point on its left.
pub const FORCE_POINT_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    /// Strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// W at each time; `values[0] == 0`.
    pub values: Vec<f64>,
    pub kappa: f64,
    pub rho: Option<f64>,
    /// Initial force point O(0) for SLE(κ, ρ).
    pub force_point: Option<f64>,
    /// O at each time for SLE(κ, ρ).
    pub force_path: Option<Vec<f64>>,
}

impl DrivingPath {
    /// A deterministic driving function sampled on a uniform grid.
    pub fn from_fn(horizon: f64, steps: usize, f: impl Fn(f64) -> f64) -> Self {
        let dt = horizon / steps as f64;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let mut values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        values[0] = 0.0;
        Self { times, values, kappa: 0.0, rho: None, force_point: None, force_path: None }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() || self.times.len() < 2 {
            return Err(Error::Config("driving path needs matching times/values with at least 2 entries".into()));
        }
        if self.times[0] != 0.0 || self.values[0] != 0.0 {
            return Err(Error::Config("driving path must start at t = 0 with W(0) = 0".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("driving times must be strictly increasing".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("driving values must be finite".into()));
        }
        Ok(())
    }

    /// Σ (ΔW)² over the path.
    pub fn quadratic_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
    }
}

/// Exact transition of X = W − O over time `h`: X²/κ is a squared Bessel
/// process of dimension δ = 1 + 2(ρ + 2)/κ, so X²/(κh) is non-central χ²
/// with δ degrees of freedom, sampled as a Poisson mixture of Gammas.
fn bessel_step<R: Rng + ?Sized>(x: f64, h: f64, kappa: f64, delta: f64, rng: &mut R) -> Result<f64> {
    let lambda = x * x / (kappa * h);
    let n = if lambda > 0.0 {
        Poisson::new(0.5 * lambda)
            .map_err(|e| Error::StepFailure { time: f64::NAN, reason: e.to_string() })?
            .sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * delta + n;
    let y: f64 = Gamma::new(shape, 2.0)
        .map_err(|e| Error::StepFailure { time: f64::NAN, reason: e.to_string() })?
        .sample(rng);
    Ok((kappa * h * y).sqrt())
}

struct ForceState {
    t: f64,
    x: f64,
    o: f64,
}

/// Advances the (W, O) pair over `h`, halving while X < √h.
#[allow(clippy::too_many_arguments)]
fn advance<R: Rng + ?Sized>(
    st: &mut ForceState,
    h: f64,
    level: u32,
    kappa: f64,
    delta: f64,
    rng: &mut R,
    times: &mut Vec<f64>,
    values: &mut Vec<f64>,
    force: &mut Vec<f64>,
) -> Result<()> {
    if st.x < HALVING_FACTOR * (kappa * h).sqrt() && level < MAX_HALVINGS {
        advance(st, 0.5 * h, level + 1, kappa, delta, rng, times, values, force)?;
        return advance(st, 0.5 * h, level + 1, kappa, delta, rng, times, values, force);
    }
    let x_new = bessel_step(st.x, h, kappa, delta, rng).map_err(|e| match e {
        Error::StepFailure { reason, .. } => Error::StepFailure { time: st.t, reason },
        other => other,
    })?;
    let o_new = st.o - 2.0 * h * 2.0 / (st.x + x_new);
    if !(x_new.is_finite() && o_new.is_finite()) {
        return Err(Error::StepFailure { time: st.t, reason: "non-finite force-point state".into() });
    }
    st.t += h;
    st.x = x_new;
    st.o = o_new;
    times.push(st.t);
    values.push(st.o + st.x);
    force.push(st.o);
    Ok(())
}

/// Driving function of chordal SLE(κ) (when `rho` is `None`) or SLE(κ, ρ)
/// with the force point started just left of W(0).
///
/// Plain SLE uses Gaussian increments of variance κ·dt. For SLE(κ, ρ) the gap
/// X = W − O evolves by dX = √κ dB + (ρ + 2) dt / X, sampled with the exact
/// squared-Bessel transition; O moves by dO = −2 dt / X (trapezoid in X), and
/// W = O + X. Steps are halved (up to `MAX_HALVINGS` times) while X < √dt,
/// so the output grid is refined near force-point collisions.
pub fn sample_driving(kappa: f64, rho: Option<f64>, horizon: f64, dt: f64, seed: u64) -> Result<DrivingPath> {
    if !(kappa > 0.0) {
        return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
    }
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::Config(format!("need horizon > 0 and dt > 0, got {horizon}, {dt}")));
    }
    if let Some(r) = rho {
        if !(r > -2.0) {
            return Err(Error::Config(format!("rho must exceed -2, got {r}")));
        }
    }
    let steps = ((horizon / dt).round() as usize).max(1);
    let h = horizon / steps as f64;
    let mut rng = stream(seed, Purpose::Driving, 0);
    match rho {
        None => {
            let sigma = (kappa * h).sqrt();
            let mut times = Vec::with_capacity(steps + 1);
            let mut values = Vec::with_capacity(steps + 1);
            times.push(0.0);
            values.push(0.0);
            let mut w = 0.0;
            for k in 1..=steps {
                let g: f64 = rng.sample(StandardNormal);
                w += sigma * g;
                times.push(k as f64 * h);
                values.push(w);
            }
            Ok(DrivingPath { times, values, kappa, rho: None, force_point: None, force_path: None })
        }
        Some(r) => {
            let delta = 1.0 + 2.0 * (r + 2.0) / kappa;
            let o0 = -FORCE_POINT_GAP;
            let mut st = ForceState { t: 0.0, x: FORCE_POINT_GAP, o: o0 };
            let mut times = vec![0.0];
            let mut values = vec![0.0];
            let mut force = vec![o0];
            for k in 1..=steps {
                advance(&mut st, h, 0, kappa, delta, &mut rng, &mut times, &mut values, &mut force)?;
                // pin the grid time to avoid drift from repeated halving
                let t_grid = k as f64 * h;
                *times.last_mut().unwrap() = t_grid;
                st.t = t_grid;
            }
            Ok(DrivingPath { times, values, kappa, rho: Some(r), force_point: Some(o0), force_path: Some(force) })
        }
    }
}

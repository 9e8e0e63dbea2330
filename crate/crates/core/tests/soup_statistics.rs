//! Distributional properties of the samplers that need many draws.

use loopsoup::rng::{derive_seed, Purpose};
use loopsoup::sle::{loewner_trace, sample_driving};
use loopsoup::soup::sample_soup;
use loopsoup::stats::{ks_two_sample, mean, variance};
use loopsoup::{Domain, SoupConfig};

#[test]
fn brownian_scaling_of_the_soup() {
    // A soup in a square of side 2 with cutoffs ×4 is the unit-square soup
    // scaled by 2: same loop counts, durations ×4.
    let unit = SoupConfig::new(Domain::UnitSquare, 1.0, 0.01, 1.0, 1e-3, 0);
    let big = SoupConfig::new(Domain::rectangle(2.0, 2.0), 1.0, 0.04, 4.0, 4e-3, 0);
    let (mut na, mut nb, mut da, mut db) = (vec![], vec![], vec![], vec![]);
    for s in 0..300 {
        let a = sample_soup(&unit.with_seed(derive_seed(1, Purpose::SoupSeed, s))).unwrap();
        let b = sample_soup(&big.with_seed(derive_seed(2, Purpose::SoupSeed, s))).unwrap();
        na.push(a.len() as f64);
        nb.push(b.len() as f64);
        da.extend(a.loops.iter().map(|l| l.duration()));
        db.extend(b.loops.iter().map(|l| l.duration() / 4.0));
    }
    assert!(ks_two_sample(&na, &nb).passes(0.01));
    assert!(ks_two_sample(&da, &db).passes(0.01));
}

#[test]
fn driving_variance_is_kappa_t() {
    for rho in [None, Some(0.0)] {
        let ends: Vec<f64> = (0..2000)
            .map(|s| {
                let d = sample_driving(3.0, rho, 1.0, 0.01, derive_seed(3, Purpose::Driving, s)).unwrap();
                *d.values.last().unwrap()
            })
            .collect();
        let (m, v) = (mean(&ends), variance(&ends));
        assert!(m.abs() < 4.0 * (3.0f64 / 2000.0).sqrt(), "{rho:?}: mean {m}");
        assert!((v - 3.0).abs() < 0.3, "{rho:?}: variance {v}");
    }
}

#[test]
fn force_point_stays_left_and_traces_stay_in_half_plane() {
    for s in 0..10 {
        let d = sample_driving(8.0 / 3.0, Some(-0.263), 1.0, 1e-3, s).unwrap();
        let o = d.force_path.as_ref().unwrap();
        assert!(o.iter().zip(&d.values).all(|(o, w)| o <= w));
        let t = loewner_trace(&d, 1e-3).unwrap();
        assert!(t.points.iter().all(|p| p.y >= -1e-9));
    }
}

//! SLE(κ) trace from a sampled driving function, its dimension, and a check
//! that unzipping the trace gives the driving function back.
//!
//! cargo run --release --example sle_trace -- [kappa] [steps]

use loopsoup::fractal::{dyadic_sizes, sle_dimension};
use loopsoup::sle::{loewner_trace, recover_driving, sample_driving, trace_dimension};

fn main() -> loopsoup::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kappa: f64 = args.first().map_or(3.0, |s| s.parse().expect("kappa"));
    let steps: usize = args.get(1).map_or(20_000, |s| s.parse().expect("steps"));
    let dt = 1.0 / steps as f64;

    let driving = sample_driving(kappa, None, 1.0, dt, 17)?;
    println!("quadratic variation {:.3} (κT = {kappa})", driving.quadratic_variation());
    let trace = loewner_trace(&driving, dt)?;
    let tip = trace.tip();
    println!("{} points, tip at {:.4} + {:.4}i", trace.len(), tip.x, tip.y);

    match trace_dimension(&trace, 2048, &dyadic_sizes(1, 8)) {
        Ok(d) => println!("box-counting dimension {:.3} (1 + κ/8 = {:.3})", d.slope, sle_dimension(kappa)),
        Err(e) => println!("dimension: {e}"),
    }

    // the unzip is quadratic in the number of points, so check a short prefix
    let short = loewner_trace(&sample_driving(kappa, None, 0.05, dt, 17)?, dt)?;
    let err = recover_driving(&short)
        .iter()
        .zip(short.driving_values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("driving recovered from {} points with max error {err:.1e}", short.len());
    Ok(())
}

//! Sample a Brownian loop soup in the unit square and compare the loop count
//! and duration spread with the loop measure.
//!
//! cargo run --release --example sample_soup -- [c] [t_min] [seed]

use loopsoup::soup::{expected_loop_count, sample_soup};
use loopsoup::stats::mean;
use loopsoup::{Domain, SoupConfig};

fn main() -> loopsoup::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let c: f64 = args.first().map_or(1.0, |s| s.parse().expect("c"));
    let t_min: f64 = args.get(1).map_or(0.005, |s| s.parse().expect("t_min"));
    let seed: u64 = args.get(2).map_or(7, |s| s.parse().expect("seed"));

    let cfg = SoupConfig::new(Domain::UnitSquare, c, t_min, 1.0, 1e-3, seed);
    let soup = sample_soup(&cfg)?;
    println!("c = {c}, t_min = {t_min}: {} loops kept", soup.len());
    println!("candidate loops before the stay-inside test (mean): {:.1}", expected_loop_count(&cfg)?);

    let durations: Vec<f64> = soup.loops.iter().map(|l| l.duration()).collect();
    if !durations.is_empty() {
        let longest = durations.iter().copied().fold(0.0, f64::max);
        println!("mean duration {:.4}, longest {longest:.4}", mean(&durations));
    }
    // Durations have density ∝ 1/t², so half the loops are shorter than 2·t_min
    // (slightly more after big loops are rejected for leaving the square).
    let short = durations.iter().filter(|&&t| t < 2.0 * t_min).count();
    println!("loops shorter than 2·t_min: {short} of {}", durations.len());
    println!("{} polyline vertices in total", soup.total_points());
    Ok(())
}

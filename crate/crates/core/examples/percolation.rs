//! Left-right crossing probability of a unit window as the intensity grows,
//! with soups for different c coupled so that crossings can only disappear.

use loopsoup::percolation::{percolation_sweep, SweepConfig};
use loopsoup::{Domain, SoupConfig};

fn main() -> loopsoup::Result<()> {
    let base = SoupConfig::new(Domain::UnitSquare, 0.0, 0.02, 4.0, 1e-3, 5);
    let mut cfg = SweepConfig::padded(base, 1.0, 96, 24);
    cfg.c_grid = (1..=8).map(|k| k as f64 * 0.25).collect();
    let r = percolation_sweep(&cfg)?;
    for (c, p) in r.c_values.iter().zip(&r.crossing_probability) {
        println!("c = {c:4.2}  P(cross) = {p:.3}  {}", "#".repeat((p * 40.0).round() as usize));
    }
    println!("monotone in c for every seed: {}", r.is_monotone());
    match r.midpoint {
        Some(m) => println!("probability crosses 1/2 at c ≈ {m:.2} (conjectured critical value {})", r.conjectured_critical),
        None => println!("probability stays above 1/2 on this grid"),
    }
    Ok(())
}

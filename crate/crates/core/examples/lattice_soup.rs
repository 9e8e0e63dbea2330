//! Random-walk loop soup on a fine lattice next to the Brownian soup with the
//! same intensity and duration cutoffs: the loop counts should be close.

use loopsoup::lattice::sample_rw_loop_soup;
use loopsoup::soup::sample_soup;
use loopsoup::stats::{mean, std_error};
use loopsoup::{Domain, SoupConfig};

fn main() -> loopsoup::Result<()> {
    let (delta, max_len) = (1.0 / 64.0, 4096);
    let mut lattice = Vec::new();
    let mut brownian = Vec::new();
    for seed in 0..40 {
        let cfg = SoupConfig::new(Domain::UnitSquare, 1.0, 0.01, 0.5, 1e-3, seed);
        let rw = sample_rw_loop_soup(delta, &cfg, max_len)?;
        if let Some(w) = &rw.warning {
            eprintln!("warning: {w}");
        }
        lattice.push(rw.soup.len() as f64);
        brownian.push(sample_soup(&cfg)?.len() as f64);
    }
    println!("lattice spacing {delta}, walk lengths up to {max_len}");
    println!("random-walk soup: {:.2} ± {:.2} loops", mean(&lattice), std_error(&lattice));
    println!("Brownian soup:    {:.2} ± {:.2} loops", mean(&brownian), std_error(&brownian));
    Ok(())
}

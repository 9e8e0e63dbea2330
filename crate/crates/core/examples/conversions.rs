//! The c ↔ κ ↔ α dictionary, printed as a table with full precision.

use loopsoup::fractal::{kappa_of_c, rho_for_alpha};
use loopsoup::report::{conversion_csv, conversion_table, CONVERSION_KAPPAS};

fn main() -> loopsoup::Result<()> {
    let rows = conversion_table(&CONVERSION_KAPPAS)?;
    print!("{}", conversion_csv(&rows).to_csv("-"));

    for c in [0.25, 0.5, 0.75, 1.0] {
        let k = kappa_of_c(c)?;
        let alpha = (6.0 - k) / (2.0 * k);
        println!("c = {c:<4} → κ = {k:.6}, α = {alpha:.6}, ρ for SLE(8/3, ρ) = {:.6}", rho_for_alpha(8.0 / 3.0, alpha)?);
    }
    Ok(())
}

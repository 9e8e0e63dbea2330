//! One run of the chordal pipeline: a restriction curve γ from 0 upward,
//! the loop-soup clusters it touches, and the right boundary η of the union.
//! Writes `chordal.svg`.

use loopsoup::chordal::{eta_dimension, first_crossing_abscissa, invert_curve, run_chordal, ChordalSetup};
use loopsoup::fractal::dyadic_sizes;
use loopsoup::svg::Svg;

fn main() -> loopsoup::Result<()> {
    let mut setup = ChordalSetup::new(3.0, 4.0, 2.0, 1e-3, 2048, 21)?;
    setup.soup.step_scale = 7.6e-6;
    println!("κ = {}, c = {}, α = {}, γ is SLE(8/3, {:.4})", setup.kappa, setup.c, setup.alpha, setup.rho()?);

    let run = run_chordal(&setup)?;
    let hull = &run.hull;
    println!(
        "{} loops in {} clusters; γ touches {} clusters ({} loops)",
        run.n_loops,
        run.n_clusters,
        hull.attached_cluster_ids.len(),
        hull.attached_loops.len()
    );
    let d = eta_dimension(&hull.eta, &setup.geometry(), &dyadic_sizes(3, 8))?;
    println!("η: {} vertices, dimension {:.3}", hull.eta.len(), d.slope);
    if let (Some(a), Some(b)) =
        (first_crossing_abscissa(&hull.eta, 1.0), first_crossing_abscissa(&invert_curve(&hull.eta), 1.0))
    {
        println!("η first reaches height 1 at x = {a:.4}; its image under z ↦ −1/z at x = {b:.4}");
    }

    let view = setup.domain().bbox();
    let mut svg = Svg::new(view, 1000.0);
    svg.rect_outline(&view, "#444444");
    for l in &hull.attached_loops {
        svg.polyline(l.points(), "#9ecae1", 0.4, None);
    }
    svg.polyline(&hull.gamma, "#d62728", 0.8, None).polyline(&hull.eta, "#000000", 1.2, None);
    std::fs::write("chordal.svg", svg.finish()).map_err(|e| loopsoup::Error::Config(e.to_string()))?;
    println!("wrote chordal.svg");
    Ok(())
}

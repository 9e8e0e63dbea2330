//! Box-counting dimension on three sets: the Sierpinski carpet (exact
//! log 8 / log 3), the free points of a soup (2 − c/5 in the continuum) and
//! the outer boundary of one Brownian loop (4/3).

use loopsoup::boundary::loop_frontier;
use loopsoup::fractal::{box_counting_dimension, dyadic_sizes, free_point_dimension, sierpinski_carpet, CellSet};
use loopsoup::raster::free_point_mask;
use loopsoup::rng::{stream, Purpose};
use loopsoup::soup::{sample_brownian_bridge_loop, sample_soup};
use loopsoup::{Domain, Point, SoupConfig};

fn main() -> loopsoup::Result<()> {
    let carpet = sierpinski_carpet(5);
    let d = box_counting_dimension(CellSet::Mask(&carpet), 1.0 / 243.0, &[1, 3, 9, 27, 81])?;
    println!("carpet:        {:.4} (exact {:.4})", d.slope, 8f64.ln() / 3f64.ln());

    let c = 0.5;
    let soup = sample_soup(&SoupConfig::new(Domain::UnitSquare, c, 0.005, 1.0, 1e-3, 1))?;
    let fm = free_point_mask(&soup, 1024)?;
    let d = box_counting_dimension(CellSet::Mask(&fm.free), fm.grid.geometry.cell_size, &dyadic_sizes(0, 7))?;
    println!(
        "free points:   {:.4} (continuum {:.2}; free area fraction {:.3})",
        d.slope,
        free_point_dimension(c),
        fm.free_fraction()
    );

    let mut rng = stream(5, Purpose::Bridge, 0);
    let l = sample_brownian_bridge_loop(Point::new(0.0, 0.0), 1.0, 1 << 16, &mut rng)?;
    let b = loop_frontier(&l, 2048)?;
    let d = box_counting_dimension(CellSet::Cells(&b.boundary_cells), b.geometry.cell_size, &dyadic_sizes(1, 8))?;
    println!("loop frontier: {:.4} (continuum 4/3)", d.slope);
    for (size, count) in &d.scales {
        println!("  box {size:.2e}: {count} boxes");
    }
    Ok(())
}

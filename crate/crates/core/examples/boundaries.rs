//! Outer boundaries of the largest clusters of a soup, their box-counting
//! dimension, and an SVG picture (`boundaries.svg`).

use loopsoup::boundary::trace_outer_boundary;
use loopsoup::cluster::build_clusters;
use loopsoup::fractal::{box_counting_dimension, dyadic_sizes, CellSet};
use loopsoup::soup::sample_soup;
use loopsoup::svg::render_soup;
use loopsoup::{Domain, SoupConfig};

fn main() -> loopsoup::Result<()> {
    let resolution = 1024;
    // fine loop steps so polyline segments stay near the grid scale
    let cfg = SoupConfig::new(Domain::UnitSquare, 0.5, 5e-4, 1.0, 1e-5, 11);
    let soup = sample_soup(&cfg)?;
    let clusters = build_clusters(&soup, 0.0);

    let mut boundaries = Vec::new();
    for id in clusters.ids_by_extent(&soup).into_iter().take(5) {
        match trace_outer_boundary(id, &clusters, &soup, resolution) {
            Ok(b) => {
                let d = box_counting_dimension(CellSet::Cells(&b.boundary_cells), b.geometry.cell_size, &dyadic_sizes(1, 6))?;
                println!(
                    "cluster {id:>4}: {} boundary cells, dimension {:.3} (r² {:.4})",
                    b.boundary_cells.len(),
                    d.slope,
                    d.r2
                );
                boundaries.push(b);
            }
            Err(e) => println!("cluster {id:>4}: {e}"),
        }
    }
    let svg = render_soup(&soup, Some(&clusters), &boundaries, None, 900.0);
    std::fs::write("boundaries.svg", svg.finish()).map_err(|e| loopsoup::Error::Config(e.to_string()))?;
    println!("wrote boundaries.svg");
    Ok(())
}

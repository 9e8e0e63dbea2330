//! Cluster the loops of a soup, check the grid-accelerated partition against
//! the all-pairs one, and list the largest clusters.

use loopsoup::cluster::{build_clusters, build_clusters_bruteforce, canonical_partition, min_cluster_distance};
use loopsoup::soup::sample_soup;
use loopsoup::{Domain, SoupConfig};

fn main() -> loopsoup::Result<()> {
    let cfg = SoupConfig::new(Domain::UnitSquare, 1.5, 0.002, 1.0, 1e-3, 3);
    let soup = sample_soup(&cfg)?;
    let clusters = build_clusters(&soup, 0.0);
    println!("{} loops in {} clusters", soup.len(), clusters.len());

    let same = canonical_partition(&clusters) == canonical_partition(&build_clusters_bruteforce(&soup, 0.0));
    println!("matches the brute-force partition: {same}");

    for id in clusters.ids_by_extent(&soup).into_iter().take(5) {
        let b = clusters.bbox(id, &soup).expect("cluster exists");
        let n = clusters.cluster(id).map_or(0, |c| c.members.len());
        println!(
            "cluster {id:>4}: {n:>3} loops, extent {:.3} x {:.3}, total duration {:.4}",
            b.width(),
            b.height(),
            clusters.total_duration(id, &soup).unwrap_or(0.0)
        );
    }
    if clusters.len() > 1 {
        println!("closest pair of distinct clusters: {:.2e}", min_cluster_distance(&clusters, &soup)?);
    }
    Ok(())
}

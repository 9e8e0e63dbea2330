use loopsoup::chordal::{
    attach_clusters, attach_clusters_bruteforce, blocked_mask, right_boundary, sample_restriction_curve, ChordalSetup,
    HullSample,
};
use loopsoup::cluster::build_clusters;
use loopsoup::geometry::point_segment_distance;
use loopsoup::raster::{flood_from, Mask};
use loopsoup::soup::sample_soup;

fn setup(seed: u64) -> ChordalSetup {
    let mut s = ChordalSetup::new(3.0, 4.0, 2.0, 5e-3, 512, seed).unwrap();
    s.trace_steps = 5000;
    s
}

/// Cells reached from the right edge of the box without crossing the hull.
fn right_region(hull: &HullSample, s: &ChordalSetup) -> Mask {
    let geom = s.geometry();
    let blocked = blocked_mask(hull, &geom).unwrap();
    let seeds: Vec<(usize, usize)> = (0..geom.ny).map(|j| (geom.nx - 1, j)).filter(|&(i, j)| !blocked.get(i, j)).collect();
    flood_from(&blocked, seeds)
}

#[test]
fn grid_attachment_matches_bruteforce() {
    for seed in 0..4 {
        let s = setup(seed);
        let gamma = sample_restriction_curve(&s).unwrap();
        let soup = sample_soup(&s.soup).unwrap();
        let clusters = build_clusters(&soup, 0.0);
        let fast = attach_clusters(&gamma, &soup, &clusters, 0.0);
        let slow = attach_clusters_bruteforce(&gamma, &soup, &clusters, 0.0);
        assert_eq!(fast.attached_cluster_ids, slow.attached_cluster_ids);
    }
}

#[test]
fn attaching_more_clusters_moves_the_right_side_inward() {
    for seed in 0..3 {
        let s = setup(seed);
        let gamma = sample_restriction_curve(&s).unwrap();
        let soup = sample_soup(&s.soup).unwrap();
        let clusters = build_clusters(&soup, 0.0);
        let full = attach_clusters(&gamma, &soup, &clusters, 0.0);
        let mut partial = full.clone();
        let keep = full.attached_loops.len() / 2;
        partial.attached_loops.truncate(keep);
        let mut bare = full.clone();
        bare.attached_loops.clear();
        let (r_full, r_partial, r_bare) = (right_region(&full, &s), right_region(&partial, &s), right_region(&bare, &s));
        let subset = |a: &Mask, b: &Mask| a.bits.iter().zip(&b.bits).all(|(&x, &y)| !x || y);
        assert!(subset(&r_full, &r_partial) && subset(&r_partial, &r_bare));
    }
}

#[test]
fn without_clusters_eta_follows_gamma() {
    let s = setup(7);
    let gamma = sample_restriction_curve(&s).unwrap();
    let hull = HullSample {
        gamma: gamma.clone(),
        attached_cluster_ids: vec![],
        attached_loops: vec![],
        width: s.width,
        height: s.height,
        eta: vec![],
    };
    let eta = right_boundary(&hull, s.resolution).unwrap();
    let cell = s.width / s.resolution as f64;
    let near_frame = |x: f64, y: f64| x.abs() > s.width / 2.0 - 2.0 * cell || y < 2.0 * cell || y > s.height - 2.0 * cell;
    let mut checked = 0;
    for p in eta.iter().filter(|p| !near_frame(p.x, p.y)) {
        let d = gamma.windows(2).map(|w| point_segment_distance(*p, w[0], w[1])).fold(f64::INFINITY, f64::min);
        assert!(d <= 2.0 * cell, "η vertex {p:?} is {d} from γ");
        checked += 1;
    }
    assert!(checked > 100);
}

use std::f64::consts::{FRAC_2_PI, PI};

use favpts::lattice::LatticePoint;
use favpts::potential::{
    avoidance_probability, evaluate_asymptotic, green_function, hitting_probability, pair_favorite_bounds,
    two_point_exit_split, Asymptotic, Convention, DiskPotential,
};
use favpts::rng::{stream_rng, trial_seed};
use rand::Rng;

const O: LatticePoint = LatticePoint::ORIGIN;

#[test]
fn green_at_origin_tracks_leading_term() {
    let mut rel = Vec::new();
    for n in [16u32, 32, 64, 128, 256] {
        let g: f64 = green_function(n, O, O).unwrap();
        let lead = evaluate_asymptotic(Asymptotic::Green { n: n as f64, x_norm: 0.0 }).unwrap();
        assert!((g - lead).abs() <= 2.0, "n={n}: {g} vs {lead}");
        rel.push((g - lead).abs() / g);
    }
    assert!(rel.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn green_at_half_radius() {
    let g: f64 = green_function(50, O, LatticePoint::new(25, 0)).unwrap();
    let lead = FRAC_2_PI * 2f64.ln();
    assert!((g - lead).abs() <= 0.1 * lead, "{g} vs {lead}");
}

#[test]
fn escape_error_scaled_by_log_is_bounded_and_shrinking() {
    let scaled: Vec<f64> = [25u32, 50, 100, 200]
        .iter()
        .map(|&n| {
            let e = 1.0 - hitting_probability::<f64>(n, O, &[O], Convention::Return).unwrap();
            let a = evaluate_asymptotic(Asymptotic::Escape { n: n as f64 }).unwrap();
            (e - a).abs() * (n as f64).ln()
        })
        .collect();
    assert!(scaled.iter().all(|&s| s <= 1.0), "{scaled:?}");
    assert!(scaled.windows(2).all(|w| w[1] < w[0]), "{scaled:?}");
}

#[test]
fn single_site_hit_lies_in_ring_window() {
    // a lattice site acts like a disk of radius between 1/4 and 1
    let n = 50.0;
    let y = LatticePoint::new(25, 0);
    let h: f64 = hitting_probability(50, O, &[y], Convention::FirstEntry).unwrap();
    let window = |r: f64| (n / 25.0f64).ln() / (n / r).ln();
    assert!(h >= window(0.25) && h <= window(1.0), "{h}");
}

#[test]
fn w_matrix_on_random_pairs() {
    let n = 60;
    let pot = DiskPotential::<f64>::new(n).unwrap();
    let mut rng = stream_rng(trial_seed(11, 0));
    let mut done = 0;
    while done < 100 {
        let x1 = LatticePoint::new(rng.random_range(-60..=60), rng.random_range(-60..=60));
        let x2 = LatticePoint::new(rng.random_range(-60..=60), rng.random_range(-60..=60));
        if x1 == x2 || !x1.in_disk(n) || !x2.in_disk(n) {
            continue;
        }
        done += 1;
        let w = pot.w_matrix(x1, x2).unwrap();
        assert!(w.det() > 0.0);
        w.check().unwrap();
        assert!((w.w[0][1] - w.w[1][0]).abs() <= 1e-10);
        let (p1, p2) = two_point_exit_split(&w).unwrap();
        let [r1, r2] = w.decomposition_residuals(p1, p2);
        assert!(r1 <= 1e-10 && r2 <= 1e-10);
    }
}

#[test]
fn split_against_direct_solve() {
    let (x1, x2) = (LatticePoint::new(10, 0), LatticePoint::new(-10, 0));
    let w = DiskPotential::<f64>::new(60).unwrap().w_matrix(x1, x2).unwrap();
    let (p1, p2) = two_point_exit_split(&w).unwrap();
    assert!((p1 - avoidance_probability::<f64>(60, x1, x2).unwrap()).abs() <= 1e-10);
    assert!((p1 - p2).abs() <= 1e-12);
    assert!((w.w[0][0] - w.w[1][1]).abs() <= 1e-10);
}

#[test]
fn bounds_are_ordered_on_random_inputs() {
    let mut rng = stream_rng(trial_seed(12, 0));
    for _ in 0..15 {
        let n = rng.random_range(20..=50u32);
        let r = n as i32 / 2;
        let x = LatticePoint::new(rng.random_range(-r..=r), rng.random_range(-r..=r));
        let xp = x + LatticePoint::new(rng.random_range(1..=6), rng.random_range(-6..=6));
        let alpha = rng.random_range(0.15..0.6);
        let b = pair_favorite_bounds::<f64>(n, x, xp, alpha).unwrap();
        assert!(b.lower <= b.upper_tight && b.upper_tight <= b.upper, "{b:?}");
        let sums = b.chain.row_sums();
        assert!((sums[0] - 1.0).abs() <= 1e-10 && (sums[1] - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn two_point_escape_leading_order() {
    let n = 60;
    let (x, xp) = (LatticePoint::new(5, 0), LatticePoint::new(5, 8));
    let chain = favpts::potential::two_point_chain::<f64>(n, x, xp).unwrap();
    let s = chain.log_distance_ratio().0;
    let lead = evaluate_asymptotic(Asymptotic::TwoPointEscape { n: n as f64, s }).unwrap();
    assert!((chain.b[0][2] - lead).abs() <= 0.25 * lead);
    assert!(lead < PI);
}

#[test]
fn single_precision_agrees() {
    let g32: f32 = green_function(20, O, LatticePoint::new(3, 4)).unwrap();
    let g64: f64 = green_function(20, O, LatticePoint::new(3, 4)).unwrap();
    assert!((g32 as f64 - g64).abs() <= 1e-4);
}

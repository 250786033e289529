use torus_rot::counterexample::{default_alpha, default_phi, make_counterexample};
use torus_rot::lifts::{make_dehn_family, make_skew, sample_points, IntVec2, TrigPoly};
use torus_rot::oracle;
use torus_rot::raster::{find_essential_return, TorusRaster};
use torus_rot::rotation::{deviation_bound, deviation_ladder};
use torus_rot::scalar::circle_distance;
use torus_rot::selftest::Fixtures;

fn fixtures() -> Fixtures {
    Fixtures::embedded().unwrap()
}

#[test]
fn dehn_return_matches_frozen_value() {
    let d = fixtures().derived.dehn_return;
    assert_eq!(d.n, Some(2));
    let lift = make_dehn_family(d.m, d.alpha);
    let u = TorusRaster::disk(d.grid, d.center, d.radius).unwrap();
    assert_eq!(find_essential_return(&lift, &u, 20).unwrap(), d.n);
    assert_eq!(oracle::dehn_disk_return(d.m, d.alpha, d.center, d.radius, 20), d.n);
}

#[test]
fn skew_deviation_matches_frozen_value_and_direct_loop() {
    let k = fixtures().derived.skew_deviation;
    assert!((k.sup - 0.3100398015037546).abs() < 1e-15);
    let lift = make_skew(k.alpha, TrigPoly::sine(k.amp, 1));
    let fast = deviation_bound(&lift, IntVec2::E2, 0.0, k.n, k.grid).unwrap();
    let slow = oracle::direct_deviation(&lift, IntVec2::E2, 0.0, k.n, k.grid);
    assert!((fast - k.sup).abs() <= 1e-9, "{fast} vs {}", k.sup);
    assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
}

#[test]
fn deviation_ladder_matches_closed_form_birkhoff_sums() {
    let (alpha, amp, grid) = (0.2360679774997897, 0.25, 8);
    let lift = make_skew(alpha, TrigPoly::sine(amp, 2));
    for (n, s) in deviation_ladder(&lift, IntVec2::E2, 0.0, 300, grid).unwrap() {
        let mut expect = 0.0f64;
        for i in 0..grid {
            for m in 1..=n {
                expect = expect.max(oracle::sine_birkhoff_sum(amp, 2, alpha, i as f64 / grid as f64, m).abs());
            }
        }
        assert!((s - expect).abs() <= 1e-9, "N = {n}: {s} vs {expect}");
    }
}

#[test]
fn compact_map_matches_conjugated_closed_form() {
    let alpha = default_alpha();
    let phi = default_phi::<f64>();
    let map = make_counterexample(alpha, phi.clone());
    let mut pts = vec![(0.3, 0.5), (0.0, 0.0), (0.75, -0.9)];
    pts.extend(sample_points(200, 3).into_iter().map(|z| (z.x, 1.98 * z.y - 0.99)));
    for (xp, yp) in pts {
        let (ax, ay) = map.forward_annulus(xp, yp);
        let (bx, by) = oracle::psi_g_psi_inverse(alpha, &phi, xp, yp);
        assert!(circle_distance(ax, bx) <= 1e-9 && (ay - by).abs() <= 1e-9, "({xp}, {yp})");
    }
}

#[test]
fn compact_map_rotates_both_boundaries() {
    let alpha = default_alpha();
    let map = make_counterexample(alpha, default_phi::<f64>());
    for yp in [-1.0, 1.0] {
        for x in [0.0, 0.37, 0.9] {
            let (gx, gy) = map.forward_annulus(x, yp);
            assert_eq!(gy, yp);
            assert!(circle_distance(gx, x + alpha) <= 1e-12);
        }
    }
}

use proptest::prelude::*;

use torus_rot::counterexample::{
    fiber_accumulation_test, psi_log, psi_log_inverse, s_to_t, shift_fiber, t_to_s,
};
use torus_rot::lifts::{
    complementary_vector, conjugate_by_matrix, deck_equivariance_error_on, inverse_error_on, make_dehn_family,
    make_skew, DeckMatrix, IntVec2, TrigPoly, TrigTerm, Vec2,
};
use torus_rot::oracle;
use torus_rot::raster::{
    circloid_minus, circloid_plus, order_compare, parse_pgm, torus_essentiality_rank, unbounded_components,
    write_pgm_annulus, write_pgm_torus, AnnulusRaster, Order, Raster, TorusRaster,
};
use torus_rot::rotation::{geometric_ladder, homotopy_class, HomotopyClass};
use torus_rot::selftest::random_essential;
use torus_rot::{Lift64, Rational};

fn reduced() -> impl Strategy<Value = IntVec2> {
    (-40i64..=40, -40i64..=40)
        .prop_filter("reduced", |(p, q)| num_integer::Integer::gcd(p, q) == 1)
        .prop_map(|(p, q)| IntVec2::new(p, q))
}

fn unimodular() -> impl Strategy<Value = DeckMatrix> {
    reduced().prop_flat_map(|v| {
        let w = complementary_vector(v).unwrap();
        (Just(v), Just(w), -3i64..=3, prop::bool::ANY)
    })
    .prop_map(|(v, w, k, flip)| {
        let w = IntVec2::new(w.p + k * v.p, w.q + k * v.q);
        let w = if flip { IntVec2::new(-w.p, -w.q) } else { w };
        DeckMatrix::from_columns(w, v)
    })
}

fn trig_poly() -> impl Strategy<Value = TrigPoly<f64>> {
    prop::collection::vec((1i64..6, -0.4f64..0.4, 0.0f64..6.3), 1..4).prop_map(|t| TrigPoly {
        terms: t.into_iter().map(|(freq, amp, phase)| TrigTerm { freq, amp, phase }).collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complementary_vector_has_unit_determinant(v in reduced()) {
        let w = complementary_vector(v).unwrap();
        prop_assert_eq!(w.det(v), 1);
    }

    #[test]
    fn skew_maps_are_deck_equivariant_and_invertible(alpha in -1.0f64..1.0, phi in trig_poly(), seed in 0u64..1000) {
        let l = make_skew(alpha, phi);
        let pts = torus_rot::lifts::sample_points(64, seed);
        prop_assert!(deck_equivariance_error_on(&l, &pts) < 1e-12);
        prop_assert!(inverse_error_on(&l, &pts) < 1e-12);
    }

    #[test]
    fn conjugation_preserves_the_homotopy_invariant(m in -6i64..=6, a in unimodular()) {
        let l: Lift64 = make_dehn_family(m, 0.3);
        let c = conjugate_by_matrix(&l, a).unwrap();
        prop_assert_eq!(c.deck, a.inverse().unwrap().mul(&l.deck).mul(&a));
        let pts = torus_rot::lifts::sample_points(32, 5);
        prop_assert!(deck_equivariance_error_on(&c, &pts) < 1e-9);
        let k0 = homotopy_class(l.deck).unwrap().invariant();
        let k1 = homotopy_class(c.deck).unwrap().invariant();
        prop_assert_eq!(k0, k1);
    }

    #[test]
    fn dehn_normal_form_is_verified(m in unimodular()) {
        if let HomotopyClass::DehnLike { sign, m: mm, conjugator } = homotopy_class(m).unwrap() {
            let nf = conjugator.inverse().unwrap().mul(&m).mul(&conjugator);
            if sign == 1 {
                prop_assert_eq!(nf, DeckMatrix::new(1, mm, 0, 1));
            } else {
                prop_assert_eq!((nf.a, nf.c, nf.d), (-1, 0, 1));
                prop_assert_eq!(nf.b.rem_euclid(2), mm);
            }
        }
    }

    #[test]
    fn ladder_shape(max in 1usize..100_000) {
        let l = geometric_ladder(max);
        prop_assert_eq!(l[0], 1);
        prop_assert_eq!(*l.last().unwrap(), max);
        prop_assert!(l.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(max < 2 || l.contains(&(max / 2)));
    }

    #[test]
    fn rational_rigid_deviation_is_exactly_zero(p in -20i64..20, q in 1i64..20) {
        let rho = Vec2::new(Rational::new(p, q), Rational::new(q, 23));
        let l = torus_rot::lifts::make_rigid(rho);
        let d = torus_rot::rotation::deviation_bound(&l, IntVec2::new(2, 3), rho.x * 2 + rho.y * 3, 40, 4).unwrap();
        prop_assert_eq!(d, Rational::from_integer(0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circloid_plus_matches_oracle_and_is_idempotent(seed in 0u64..1_000_000) {
        let a = random_essential(seed);
        let c = circloid_plus(&a).unwrap();
        let naive = oracle::naive_circloid_plus(a.cells(), a.nx, a.ny);
        prop_assert_eq!(c.raster.cells(), naive.as_slice());
        prop_assert_eq!(&circloid_plus(&c.raster).unwrap().raster, &c.raster);
        c.check_invariants().unwrap();
    }

    #[test]
    fn unbounded_components_match_oracle(seed in 0u64..1_000_000) {
        let a = random_essential(seed);
        let u = unbounded_components(&a).unwrap();
        let (m, p) = oracle::naive_unbounded(a.cells(), a.nx, a.ny);
        prop_assert_eq!(u.minus.cells(), m.as_slice());
        prop_assert_eq!(u.plus.cells(), p.as_slice());
    }

    #[test]
    fn minus_is_below_plus(seed in 0u64..1_000_000) {
        let a = random_essential(seed);
        let o = order_compare(&circloid_minus(&a).unwrap(), &circloid_plus(&a).unwrap()).unwrap();
        prop_assert!(matches!(o, Order::StrictlyLess | Order::LessEqual | Order::Equal));
    }

    #[test]
    fn circloid_plus_commutes_with_column_shifts(seed in 0u64..1_000_000, k in -3i64..=3) {
        let a = random_essential(seed);
        if let Ok(b) = a.shift_columns(k) {
            if unbounded_components(&b).is_ok() {
                let cb = circloid_plus(&b).unwrap().raster;
                prop_assert_eq!(cb, circloid_plus(&a).unwrap().raster.shift_columns(k).unwrap());
            }
        }
    }

    #[test]
    fn torus_rank_matches_cover_oracle(cx in 0.0f64..1.0, cy in 0.0f64..1.0, r in 0.05f64..0.6, kind in 0u8..3) {
        let n = 32;
        let u = match kind {
            0 => TorusRaster::disk(n, (cx, cy), r).unwrap(),
            1 => TorusRaster::from_fn(n, |x, y| torus_rot::scalar::circle_distance(x + y, cx) < r / 2.0).unwrap(),
            _ => TorusRaster::disk(n, (cx, cy), r / 2.0).unwrap().complement(),
        };
        if let Some(start) = u.cells().iter().position(|&c| c) {
            let comp = torus_rot::raster::torus_components(&u, torus_rot::raster::Connectivity::Four);
            let label = comp.labels[start].unwrap() as usize;
            let rank = torus_essentiality_rank(&u, label).unwrap();
            prop_assert_eq!(rank.rank, oracle::cover_rank(u.cells(), n, start, 3));
            prop_assert_eq!(rank.rank as usize, rank.generators.len());
        }
    }

    #[test]
    fn pgm_round_trips(seed in 0u64..1_000_000) {
        let a = random_essential(seed);
        match parse_pgm(&write_pgm_annulus(&a)).unwrap() {
            Raster::Annulus(b) => prop_assert_eq!(&b, &a),
            _ => prop_assert!(false),
        }
        let t = TorusRaster::from_cells(a.nx, a.cells().to_vec()).unwrap();
        match parse_pgm(&write_pgm_torus(&t)).unwrap() {
            Raster::Torus(b) => prop_assert_eq!(b, t),
            _ => prop_assert!(false),
        }
    }
}

proptest! {
    #[test]
    fn psi_log_round_trip(x in 0.0f64..1.0, s in -30.0f64..30.0) {
        let (x2, s2) = psi_log_inverse(psi_log(x, s)).unwrap();
        prop_assert!((x2 - x).abs() <= 1e-9 && (s2 - s).abs() <= 1e-9);
    }

    #[test]
    fn torus_fiber_coordinate_round_trip(s in -30.0f64..30.0) {
        let t = s_to_t(s);
        prop_assert!(t > 0.0 && t < 1.0);
        // Near t = 1 the gap 1 - t is resolved only to the spacing of doubles at 1.
        let tol = if s < 0.0 { 1e-12 } else { 1e-12 + 4.0 * f64::EPSILON * s.exp() };
        prop_assert!((t_to_s(t).unwrap() - s).abs() <= tol);
    }

    #[test]
    fn shift_fiber_adds_in_y(y in -50.0f64..50.0, d in -2.0f64..2.0) {
        let s = y.signum() * y.abs().ln_1p();
        let yn = y + d;
        let expect = yn.signum() * yn.abs().ln_1p();
        prop_assert!((shift_fiber(s, d) - expect).abs() <= 1e-12);
    }

    #[test]
    fn fiber_coverage_is_monotone(x in 0.0f64..1.0, a in 0.0f64..15.0, b in 0.0f64..15.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c0 = fiber_accumulation_test(x, lo, 0.05, 64).unwrap();
        let c1 = fiber_accumulation_test(x, hi, 0.05, 64).unwrap();
        prop_assert!(c1.upper >= c0.upper && c1.lower >= c0.lower);
    }

    #[test]
    fn trig_poly_serde_round_trip(p in trig_poly()) {
        let text = serde_json::to_string(&p).unwrap();
        let back: TrigPoly<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn jordan_curve_complement_has_two_components() {
    let ring = AnnulusRaster::from_fn(-1.0, 1.0, 64, 64, |x, y| {
        let r = (x * x + (y - 0.5).powi(2)).sqrt();
        (r - 0.3).abs() < 0.03
    })
    .unwrap();
    let comps = torus_rot::raster::components(&ring.complement(), torus_rot::raster::Connectivity::Eight);
    assert_eq!(comps.count, 2);
}

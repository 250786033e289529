//! A torus map with bounded deviations and no circle factor.
//!
//! `g(x, y) = (x + α, y + φ(x))` on `T¹ × ℝ` is conjugated by
//! `ψ(x, y) = (x + sin log(|y| + 1), y / (|y| + 1))` into the open annulus
//! `T¹ × (-1, 1)`, extended by the rotation `x ↦ x + α` on both boundary
//! circles and glued along them into a torus.
//!
//! Fibers are tracked in the log coordinate `s = sign(y) log(|y| + 1)`, and
//! points of the compact annulus carry the gap `δ = 1 - |y'|` to the nearest
//! boundary, so that neither `y` nor `δ` is ever formed by cancellation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::liouville;
use crate::error::{Error, Result};
use crate::lifts::{DeckMatrix, Lift, PlaneMap, TrigPoly, TrigTerm, Vec2};
use crate::scalar::{frac, RealScalar, Scalar};
use crate::semiconj::{build_circloid_family, project_h_unchecked, verify_semiconjugacy, FamilyParams, Semiconjugacy};

/// Point of the closed annulus: `y' = sign (1 - delta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompactPoint<T> {
    pub x: T,
    pub sign: i8,
    pub delta: T,
}

impl<T: RealScalar> CompactPoint<T> {
    pub fn y(&self) -> T {
        T::int(self.sign as i64) * (T::one() - self.delta)
    }

    pub fn on_boundary(&self) -> bool {
        self.delta == T::zero()
    }
}

fn sgn<T: RealScalar>(s: T) -> T {
    if s < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// `ψ(x, y)` in closed form.
pub fn psi<T: RealScalar>(x: T, y: T) -> (T, T) {
    let a = y.abs();
    (x + (a + T::one()).ln().sin(), y / (a + T::one()))
}

/// `ψ⁻¹(x', y')` in closed form, `|y'| < 1`.
pub fn psi_inverse<T: RealScalar>(xp: T, yp: T) -> Result<(T, T)> {
    if !(yp.abs() < T::one()) {
        return Err(Error::InvalidArgument(format!("psi_inverse needs |y'| < 1, got {:?}", yp)));
    }
    let y = yp / (T::one() - yp.abs());
    Ok((xp - (y.abs() + T::one()).ln().sin(), y))
}

/// `ψ` from the log-fiber coordinate.
pub fn psi_log<T: RealScalar>(x: T, s: T) -> CompactPoint<T> {
    CompactPoint {
        x: x + s.abs().sin(),
        sign: if s < T::zero() { -1 } else { 1 },
        delta: (-s.abs()).exp(),
    }
}

/// `ψ⁻¹` to `(x, s)`; `None` on the boundary.
pub fn psi_log_inverse<T: RealScalar>(p: CompactPoint<T>) -> Option<(T, T)> {
    if p.on_boundary() {
        return None;
    }
    let s = -T::int(p.sign as i64) * p.delta.ln();
    Some((p.x - s.abs().sin(), s))
}

/// Log-fiber coordinate of `y + d`, given that of `y`.
pub fn shift_fiber<T: RealScalar>(s: T, d: T) -> T {
    let sign = sgn(s);
    let e = (-s.abs()).exp();
    let u = sign * d * e;
    if s != T::zero() && T::one() + u > e {
        s + sign * u.ln_1p()
    } else {
        let y = sign * s.abs().exp_m1() + d;
        sgn(y) * y.abs().ln_1p()
    }
}

/// Torus fiber coordinate `t ∈ [0, 1)` with `y' = 2t - 1`; `None` at `t = 0`.
pub fn t_to_s<T: RealScalar>(t: T) -> Option<T> {
    let two = T::int(2);
    let half = T::ratio(1, 2);
    if t <= T::zero() {
        None
    } else if t < half {
        Some((two * t).ln())
    } else {
        Some(-(two * (T::one() - t)).ln())
    }
}

pub fn s_to_t<T: RealScalar>(s: T) -> T {
    let half = T::ratio(1, 2);
    if s < T::zero() {
        half * s.exp()
    } else {
        T::one() - half * (-s).exp()
    }
}

/// `f = ψ ∘ g ∘ ψ⁻¹` on the closed annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de> + num_traits::Zero"))]
pub struct CompactifiedMap<T> {
    pub alpha: T,
    pub phi: TrigPoly<T>,
}

/// Truncated Liouville number with four terms.
pub fn default_alpha() -> f64 {
    liouville(4)
}

/// `Σ_{j=1..3} (0.5/√j) sin(2π b_j x)` with `b = (1, 10, 100)`.
pub fn default_phi<T: RealScalar>() -> TrigPoly<T> {
    TrigPoly {
        terms: [1i64, 10, 100]
            .iter()
            .enumerate()
            .map(|(j, &b)| TrigTerm {
                freq: b,
                amp: T::of(0.5 / ((j + 1) as f64).sqrt()),
                phase: T::zero(),
            })
            .collect(),
    }
}

pub fn make_counterexample<T: RealScalar>(alpha: T, phi: TrigPoly<T>) -> CompactifiedMap<T> {
    CompactifiedMap { alpha, phi }
}

impl<T: RealScalar> CompactifiedMap<T> {
    /// `(x, s) ↦ (x', s')` for interior points.
    pub fn forward_log(&self, x: T, s: T) -> (T, T) {
        let sold = s.abs().sin();
        let d = self.phi.eval(x - sold);
        if d == T::zero() {
            return (x + self.alpha, s);
        }
        let s2 = shift_fiber(s, d);
        (x + self.alpha + (s2.abs().sin() - sold), s2)
    }

    pub fn inverse_log(&self, x: T, s: T) -> (T, T) {
        let sold = s.abs().sin();
        let d = self.phi.eval(x - sold - self.alpha);
        if d == T::zero() {
            return (x - self.alpha, s);
        }
        let s2 = shift_fiber(s, -d);
        (x - self.alpha + (s2.abs().sin() - sold), s2)
    }

    /// `f` on the closed annulus. Boundary circles rotate by `α`.
    pub fn forward_compact(&self, p: CompactPoint<T>) -> CompactPoint<T> {
        match psi_inverse_x_s(p) {
            None => CompactPoint { x: p.x + self.alpha, ..p },
            Some((x, s)) => {
                let (x2, s2) = self.forward_log(x, s);
                CompactPoint { x: x2, sign: if s2 < T::zero() { -1 } else { 1 }, delta: (-s2.abs()).exp() }
            }
        }
    }

    /// `f(x, y')` for `|y'| <= 1`.
    pub fn forward_annulus(&self, x: T, y: T) -> (T, T) {
        if y.abs() >= T::one() {
            return (x + self.alpha, y);
        }
        let p = CompactPoint { x, sign: if y < T::zero() { -1 } else { 1 }, delta: T::one() - y.abs() };
        let q = self.forward_compact(p);
        (q.x, q.y())
    }

    /// Torus-fiber version of [`forward_log`](Self::forward_log).
    fn forward_t(&self, x: T, t: T) -> (T, T) {
        match t_to_s(t) {
            None => (x + self.alpha, t),
            Some(s) => {
                let (x2, s2) = self.forward_log(x, s);
                if s2 == s {
                    (x2, t)
                } else {
                    (x2, s_to_t(s2))
                }
            }
        }
    }

    fn inverse_t(&self, x: T, t: T) -> (T, T) {
        match t_to_s(t) {
            None => (x - self.alpha, t),
            Some(s) => {
                let (x2, s2) = self.inverse_log(x, s);
                if s2 == s {
                    (x2, t)
                } else {
                    (x2, s_to_t(s2))
                }
            }
        }
    }

    /// `|<Fⁿ(z) - z, (1, 0)> - nα| <= 2`: the x-update telescopes to
    /// `nα + sin|s_n| - sin|s_0|`.
    pub fn deviation_bound(&self) -> f64 {
        2.0
    }
}

/// `(x, s)` of an interior compact point.
fn psi_inverse_x_s<T: RealScalar>(p: CompactPoint<T>) -> Option<(T, T)> {
    psi_log_inverse(p).map(|(x, s)| (x + s.abs().sin(), s))
}

struct Glued<T> {
    map: CompactifiedMap<T>,
}

fn split_fiber<T: RealScalar>(y: T) -> (T, T) {
    let k = y.floor();
    let t = y - k;
    if t >= T::one() {
        (k + T::one(), T::zero())
    } else {
        (k, t)
    }
}

impl<T: RealScalar> PlaneMap<T> for Glued<T> {
    fn forward(&self, z: Vec2<T>) -> Vec2<T> {
        let (k, t) = split_fiber(z.y);
        let (x, t2) = self.map.forward_t(z.x, t);
        Vec2::new(x, k + t2)
    }

    fn inverse(&self, z: Vec2<T>) -> Vec2<T> {
        let (k, t) = split_fiber(z.y);
        let (x, t2) = self.map.inverse_t(z.x, t);
        Vec2::new(x, k + t2)
    }
}

/// Identifies `y' = 1` with `y' = -1` through `t = (y' + 1) / 2`.
pub fn glue_to_torus<T: RealScalar>(map: &CompactifiedMap<T>) -> Result<Lift<T>> {
    let worst = (0..64)
        .map(|i| {
            let x = T::ratio(i, 64);
            let (a, _) = map.forward_annulus(x, T::one());
            let (b, _) = map.forward_annulus(x, -T::one());
            (a - b).abs().f64()
        })
        .fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(Error::BoundaryMismatch(worst));
    }
    Ok(Lift::new(Glued { map: map.clone() }, DeckMatrix::IDENTITY, "besicovitch").with_param("alpha", map.alpha.f64()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberCoverage {
    pub s_max: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Fraction of `n_probe` points of each boundary circle within `eps` of
/// `ψ({x} × ℝ)`, sampling `s ∈ [-s_max, s_max]` with a fixed step `eps / 8`.
pub fn fiber_accumulation_test(x: f64, s_max: f64, eps: f64, n_probe: usize) -> Result<FiberCoverage> {
    if !(eps > 0.0) || !(s_max >= 0.0) || n_probe == 0 {
        return Err(Error::InvalidArgument("need eps > 0, s_max >= 0, n_probe >= 1".into()));
    }
    let ds = eps / 8.0;
    let steps = (s_max / ds).floor() as usize;
    // Only image points within eps of the boundary can cover a probe.
    let near: Vec<f64> = (0..=steps)
        .map(|k| k as f64 * ds)
        .filter(|&s| (-s).exp() < eps)
        .map(|s| psi_log(x, s))
        .map(|p| p.x)
        .collect();
    let covered = |xs: &[f64], deltas: &[f64]| -> f64 {
        let hit = (0..n_probe)
            .filter(|&k| {
                let theta = k as f64 / n_probe as f64;
                xs.iter().zip(deltas).any(|(&px, &d)| {
                    let dx = crate::scalar::circle_distance(px, theta);
                    dx * dx + d * d < eps * eps
                })
            })
            .count();
        hit as f64 / n_probe as f64
    };
    let deltas: Vec<f64> = (0..=steps)
        .map(|k| k as f64 * ds)
        .filter(|&s| (-s).exp() < eps)
        .map(|s| (-s).exp())
        .collect();
    // ψ(x, -s) mirrors ψ(x, s) in y' with the same x offset.
    let upper = covered(&near, &deltas);
    Ok(FiberCoverage { s_max, upper, lower: upper })
}

/// Fraction of `grid_n²` torus cells visited by `n` iterates of `start`.
pub fn transitivity_score<T: Scalar>(lift: &Lift<T>, grid_n: usize, n: usize, start: Vec2<f64>) -> f64 {
    let mut seen = vec![false; grid_n * grid_n];
    let mut z = Vec2::<T>::from_f64(start);
    let g = grid_n as f64;
    let mut mark = |p: Vec2<f64>| {
        let i = ((frac(p.x) * g) as usize).min(grid_n - 1);
        let j = ((frac(p.y) * g) as usize).min(grid_n - 1);
        seen[i * grid_n + j] = true;
    };
    mark(start);
    for _ in 0..n {
        z = lift.forward(z);
        let shift = Vec2::new(T::int(z.x.floor_int()), T::int(z.y.floor_int()));
        z = z - shift;
        mark(z.to_f64());
    }
    seen.iter().filter(|&&v| v).count() as f64 / (grid_n * grid_n) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub trunc_n: usize,
    pub r_count: usize,
    pub window_halfwidth: f64,
    pub deviation_c: f64,
    pub max_a_reach: f64,
    pub insufficient_truncation: bool,
    pub translation_mismatch: usize,
    pub monotonicity_violations: usize,
    pub disjointness_violations: usize,
    /// First few overlapping pairs `(r, s)`.
    pub overlapping_pairs: Vec<(f64, f64)>,
    pub equivariance_error: f64,
    pub projection_refused: bool,
    /// Discrete modulus of the attempted `h`.
    pub modulus: f64,
    /// `projection_refused || modulus >= 0.1`.
    pub pass: bool,
}

pub struct FailureDemo {
    pub report: FailureReport,
    pub attempted: Semiconjugacy,
}

/// Runs the circloid construction on a (glued) map and records how it breaks.
///
/// Without an explicit halfwidth the window uses the analytic bound
/// `C = 2` of [`CompactifiedMap::deviation_bound`] rather than a sampled one.
pub fn demonstrate_failure<T: Scalar>(lift: &Lift<T>, alpha: f64, params: &FamilyParams, grid_n: usize) -> Result<FailureDemo> {
    let mut p = *params;
    if p.halfwidth.is_none() {
        p.halfwidth = Some(2.0 + 4.0 / p.cells_per_unit as f64);
    }
    let family = build_circloid_family(lift, alpha, &p)?;
    let v = verify_semiconjugacy(&family, lift, grid_n * grid_n)?;
    let attempted = project_h_unchecked(&family, lift, grid_n, 1)?;
    let refused = !v.disjointness_report.is_empty();
    let report = FailureReport {
        trunc_n: p.trunc_n,
        r_count: p.r_count,
        window_halfwidth: family.window_halfwidth,
        deviation_c: family.deviation_c,
        max_a_reach: family.a_reach.iter().cloned().fold(0.0, f64::max),
        insufficient_truncation: family.insufficient_truncation,
        translation_mismatch: family.translation_mismatch,
        monotonicity_violations: v.monotonicity_violations.len(),
        disjointness_violations: v.disjointness_report.len(),
        overlapping_pairs: v.disjointness_report.iter().take(8).copied().collect(),
        equivariance_error: v.equivariance_error,
        projection_refused: refused,
        modulus: attempted.modulus,
        pass: refused || attempted.modulus >= 0.1,
    };
    Ok(FailureDemo { report, attempted })
}

/// Samples `(x, s)` uniformly in `[0, 1) × [-s_abs, s_abs]` in parallel and
/// returns the worst `ψ⁻¹ ∘ ψ` error in `(x, s)`.
pub fn psi_round_trip_error(n: usize, s_abs: f64, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(-s_abs..=s_abs))).collect();
    pts.par_iter()
        .map(|&(x, s)| match psi_log_inverse(psi_log(x, s)) {
            Some((x2, s2)) => (x2 - x).abs().max((s2 - s).abs()),
            None => f64::INFINITY,
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::{classify_annular, Tristate};

    fn default_map() -> CompactifiedMap<f64> {
        make_counterexample(default_alpha(), default_phi())
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.2, 0.0), (0.2, 0.0));
        let (_, y) = psi(0.0, 1e12);
        assert!((1.0 - y) < 1e-11);
        let (xp, yp) = psi(0.5f64, 1e3f64);
        let (x, y) = psi_inverse(xp, yp).unwrap();
        assert!((x - 0.5).abs() < 1e-9 && (y - 1e3).abs() < 1e-9 * 1e3);
        assert!(psi_inverse(0.0, 1.0).is_err());
    }

    #[test]
    fn psi_log_round_trip_to_e30() {
        assert!(psi_round_trip_error(10_000, 30.0, 7) <= 1e-9);
    }

    #[test]
    fn shift_fiber_matches_direct_sum() {
        for &(y, d) in &[(0.0f64, 0.3f64), (5.0, -0.7), (-5.0, 0.7), (0.2, -0.5), (1e6, 1.1), (-1e6, -1.1), (0.4, -0.4)] {
            let s = if y < 0.0 { -(-y).ln_1p() } else { y.ln_1p() };
            let yn: f64 = y + d;
            let expect = yn.signum() * yn.abs().ln_1p();
            let got = shift_fiber(s, d);
            assert!((got - expect).abs() < 1e-12, "y={y} d={d}: {got} vs {expect}");
        }
    }

    #[test]
    fn boundary_is_rotated_exactly() {
        let f = default_map();
        let a = default_alpha();
        for x in [0.0, 0.3, 0.77] {
            assert_eq!(f.forward_annulus(x, 1.0), (x + a, 1.0));
            assert_eq!(f.forward_annulus(x, -1.0), (x + a, -1.0));
        }
        let l = glue_to_torus(&f).unwrap();
        assert_eq!(l.forward(Vec2::new(0.3, 0.0)), Vec2::new(0.3 + a, 0.0));
        assert_eq!(l.forward(Vec2::new(0.3, 2.0)), Vec2::new(0.3 + a, 2.0));
    }

    #[test]
    fn trivial_phi_gives_rigid_rotation() {
        let a = 0.3;
        let f = make_counterexample(a, TrigPoly::zero());
        let l = glue_to_torus(&f).unwrap();
        for z in crate::lifts::sample_points(100, 1) {
            let w = l.forward(z);
            assert!((w.x - z.x - a).abs() < 1e-12 && w.y == z.y);
        }
    }

    #[test]
    fn conjugacy_relation_holds() {
        let f = default_map();
        let phi = default_phi::<f64>();
        let a = default_alpha();
        for z in crate::lifts::sample_points(400, 2) {
            let (x, y) = (z.x, (z.y - 0.5) * 200.0);
            let (px, py) = psi(x, y);
            let (fx, fy) = f.forward_annulus(px, py);
            let (gx, gy) = psi(x + a, y + phi.eval(x));
            assert!(crate::scalar::circle_distance(fx, gx) < 1e-9, "{fx} {gx}");
            assert!((fy - gy).abs() < 1e-9);
        }
    }

    #[test]
    fn glued_map_is_a_lift() {
        let l = glue_to_torus(&default_map()).unwrap();
        assert!(crate::lifts::verify_deck_equivariance(&l, 400).unwrap() < 1e-9);
        let pts = crate::lifts::sample_points(400, 3);
        assert!(crate::lifts::inverse_error_on(&l, &pts) < 1e-9);
    }

    #[test]
    fn glued_deviations_are_bounded_by_two() {
        let f = default_map();
        let l = glue_to_torus(&f).unwrap();
        let d = crate::rotation::deviation_bound(&l, crate::IntVec2::E1, default_alpha(), 2000, 8).unwrap();
        assert!(d <= f.deviation_bound() + 1e-9, "{d}");
        let v = classify_annular(&l, crate::IntVec2::E2, 512, 8).unwrap();
        assert!(v.sup_abs < 1.0);
        assert_eq!(v.bounded_verdict, Tristate::Bounded);
    }

    #[test]
    fn fiber_coverage_examples() {
        let short = fiber_accumulation_test(0.0, std::f64::consts::FRAC_PI_2, 0.05, 200).unwrap();
        assert!(short.upper < 1.0 && short.lower < 1.0);
        let long = fiber_accumulation_test(0.0, 4.0 * std::f64::consts::PI, 0.05, 200).unwrap();
        assert_eq!((long.upper, long.lower), (1.0, 1.0));
        let shifted = fiber_accumulation_test(0.37, 4.0 * std::f64::consts::PI, 0.05, 200).unwrap();
        assert_eq!((shifted.upper, shifted.lower), (1.0, 1.0));
        let mut last = 0.0;
        for k in 0..30 {
            let c = fiber_accumulation_test(0.1, 0.5 * k as f64, 0.05, 100).unwrap();
            assert!(c.upper >= last);
            last = c.upper;
        }
    }

    #[test]
    fn transitivity_score_on_invariant_circles() {
        let g = 64;
        let rigid = glue_to_torus(&make_counterexample(default_alpha(), TrigPoly::zero())).unwrap();
        assert!(transitivity_score(&rigid, g, 100_000, Vec2::new(0.1, 0.3)) <= 1.0 / g as f64);
        let l = glue_to_torus(&default_map()).unwrap();
        assert!(transitivity_score(&l, g, 100_000, Vec2::new(0.1, 0.0)) <= 1.0 / g as f64);
    }

    #[test]
    fn glued_map_is_a_pseudo_rotation() {
        let a = default_alpha();
        let l = glue_to_torus(&default_map()).unwrap();
        let p = crate::rotation::classify_pseudo_rotation(&l, 2000, 16).unwrap();
        let rho = p.rho.expect("singleton in both directions");
        assert!((rho.x - a).abs() <= 2e-3 && rho.y.abs() <= 2e-3, "{rho:?}");
        assert!(p.reports.iter().all(|r| r.flags.pseudo_rotation));
    }

    #[test]
    fn failure_demo_diagnostics() {
        let l = glue_to_torus(&default_map()).unwrap();
        let params = FamilyParams { r_count: 16, cells_per_unit: 64, ny: 64, trunc_n: 50, halfwidth: None, deviation_grid: 8 };
        let d = demonstrate_failure(&l, default_alpha(), &params, 32).unwrap();
        assert!(d.report.pass && d.report.projection_refused, "{:?}", d.report);
        let c = glue_to_torus(&make_counterexample(default_alpha(), TrigPoly::zero())).unwrap();
        let d = demonstrate_failure(&c, default_alpha(), &params, 32).unwrap();
        assert!(!d.report.projection_refused);
    }

    #[test]
    fn one_step_truncation_is_flagged() {
        let l = glue_to_torus(&default_map()).unwrap();
        let params = FamilyParams { r_count: 8, cells_per_unit: 32, ny: 32, trunc_n: 1, halfwidth: None, deviation_grid: 8 };
        let d = demonstrate_failure(&l, default_alpha(), &params, 16).unwrap();
        assert!(d.report.insufficient_truncation, "{:?}", d.report);
    }
}

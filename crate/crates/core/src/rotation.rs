//! Rotation intervals, deviation bounds and homotopy/annularity classification.
//!
//! All extrema are taken over the lattice `{(i/n, j/n)}` of one fundamental
//! domain. Iteration runs once per lattice point up to the largest requested
//! time; intermediate rows of a ladder are read off on the way.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{tol_singleton, GROWTH_FLOOR, TOL_GROWTH};
use crate::error::{Error, Result};
use crate::lifts::{complementary_vector, DeckMatrix, IntVec2, Lift, Vec2};
use crate::scalar::Scalar;

/// `{1, 2, 4, ...} ∪ {max/2, max}`, sorted.
pub fn geometric_ladder(max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = 1;
    while m <= max {
        out.push(m);
        m *= 2;
    }
    if max >= 2 {
        out.push(max / 2);
    }
    out.push(max);
    out.sort_unstable();
    out.dedup();
    out
}

/// Lattice `(i/n, j/n)`, `0 <= i, j < n`.
pub fn grid_points<T: Scalar>(grid_n: usize) -> Vec<Vec2<T>> {
    let n = grid_n as i64;
    (0..n)
        .flat_map(|i| (0..n).map(move |j| Vec2::new(T::ratio(i, n), T::ratio(j, n))))
        .collect()
}

fn check_direction(v: IntVec2) -> Result<()> {
    if v.is_zero() {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    Ok(())
}

fn check_grid(grid_n: usize) -> Result<()> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(format!("grid_n must be >= 2, got {grid_n}")));
    }
    Ok(())
}

/// Per-ladder-row `(min, max)` of `<F^m(z) - z, v> / m` over the grid.
fn displacement_ladder<T: Scalar>(lift: &Lift<T>, v: IntVec2, ladder: &[usize], grid_n: usize) -> Vec<(T, T)> {
    let m_max = *ladder.last().expect("nonempty ladder");
    grid_points::<T>(grid_n)
        .into_par_iter()
        .map(|z| {
            let mut row = Vec::with_capacity(ladder.len());
            let mut p = z;
            let mut next = 0;
            for m in 1..=m_max {
                p = lift.forward(p);
                if ladder[next] == m {
                    let k = (p - z).dot_int(v) / T::int(m as i64);
                    row.push((k, k));
                    next += 1;
                }
            }
            row
        })
        .reduce_with(|a, b| {
            a.into_iter()
                .zip(b)
                .map(|((lo1, hi1), (lo2, hi2))| (lo1.min_of(lo2), hi1.max_of(hi2)))
                .collect()
        })
        .expect("grid is nonempty")
}

/// `(min, max)` of `K(F, m) = <F^m(z) - z, v>/m` over a `grid_n x grid_n` lattice.
pub fn displacement_samples<T: Scalar>(lift: &Lift<T>, v: IntVec2, m: usize, grid_n: usize) -> Result<(T, T)> {
    check_direction(v)?;
    check_grid(grid_n)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    Ok(displacement_ladder(lift, v, &[m], grid_n)[0])
}

/// Running maximum of `|<F^n(z) - z, v> - n alpha|` over the grid and
/// `1 <= n <= row`, for each row of the ladder.
fn sup_ladder<T: Scalar>(lift: &Lift<T>, v: IntVec2, alpha: T, ladder: &[usize], grid_n: usize) -> Vec<T> {
    let n_max = *ladder.last().expect("nonempty ladder");
    grid_points::<T>(grid_n)
        .into_par_iter()
        .map(|z| {
            let mut row = Vec::with_capacity(ladder.len());
            let mut p = z;
            let mut best = T::zero();
            let mut next = 0;
            for n in 1..=n_max {
                p = lift.forward(p);
                let dev = ((p - z).dot_int(v) - T::int(n as i64) * alpha).abs();
                best = best.max_of(dev);
                if ladder[next] == n {
                    row.push(best);
                    next += 1;
                }
            }
            row
        })
        .reduce_with(|a, b| a.into_iter().zip(b).map(|(x, y)| x.max_of(y)).collect())
        .expect("grid is nonempty")
}

/// `max |<F^n(z) - z, v> - n alpha|` over the grid and `1 <= n <= N`.
pub fn deviation_bound<T: Scalar>(lift: &Lift<T>, v: IntVec2, alpha: T, n: usize, grid_n: usize) -> Result<T> {
    check_direction(v)?;
    check_grid(grid_n)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    Ok(sup_ladder(lift, v, alpha, &[n], grid_n)[0])
}

/// The deviation running maximum on [`geometric_ladder`]`(N)`.
pub fn deviation_ladder<T: Scalar>(
    lift: &Lift<T>,
    v: IntVec2,
    alpha: T,
    n: usize,
    grid_n: usize,
) -> Result<Vec<(usize, T)>> {
    check_direction(v)?;
    check_grid(grid_n)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let ladder = geometric_ladder(n);
    let rows = sup_ladder(lift, v, alpha, &ladder, grid_n);
    Ok(ladder.into_iter().zip(rows).collect())
}

/// `s(N) <= s(N/2)(1 + tol) + floor` on a running-sup ladder.
pub fn ladder_is_bounded(rows: &[(usize, f64)], tol_growth: f64) -> bool {
    let Some(&(n_last, s_last)) = rows.last() else {
        return true;
    };
    let half = n_last / 2;
    let s_half = rows
        .iter()
        .filter(|(n, _)| *n <= half.max(1))
        .map(|&(_, s)| s)
        .next_back()
        .unwrap_or(0.0);
    s_last <= s_half * (1.0 + tol_growth) + GROWTH_FLOOR
}

/// Least-squares slope of `log s(n)` against `log n` over rows with `s > 0`.
pub fn growth_exponent(rows: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&(n, s)| n >= 1 && s > 0.0 && s.is_finite())
        .map(|&(n, s)| ((n as f64).ln(), s.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationFlags {
    pub singleton: bool,
    pub bounded_deviation: bool,
    pub annular_suspect: bool,
    pub pseudo_rotation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub m: usize,
    pub min: f64,
    pub max: f64,
}

/// Rotation interval estimate in one direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationReport {
    pub direction: IntVec2,
    pub m_max: usize,
    pub per_m_bounds: Vec<LadderRow>,
    pub interval_estimate: (f64, f64),
    pub deviation_alpha: Option<f64>,
    pub deviation_c: Option<f64>,
    pub flags: RotationFlags,
}

/// Rotation report plus the exact interval endpoints in the lift's scalar type.
#[derive(Clone, Debug)]
pub struct RotationEstimate<T> {
    pub report: RotationReport,
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> RotationEstimate<T> {
    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) / T::int(2)
    }
}

/// Estimates `ρ_v(F)` from `K(F, m)` on a geometric ladder `m = 1, 2, 4, ..., m_max`.
///
/// When the `m_max` row is a point at resolution [`tol_singleton`], the
/// deviations from its midpoint are measured on the same ladder and the
/// bounded-deviation and annular flags are filled in.
pub fn rotation_interval_estimate<T: Scalar>(
    lift: &Lift<T>,
    v: IntVec2,
    m_max: usize,
    grid_n: usize,
) -> Result<RotationEstimate<T>> {
    check_direction(v)?;
    check_grid(grid_n)?;
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    let ladder = geometric_ladder(m_max);
    let rows = displacement_ladder(lift, v, &ladder, grid_n);
    let (lo, hi) = *rows.last().expect("nonempty");
    let tol = tol_singleton(m_max);
    let mut flags = RotationFlags {
        singleton: (hi - lo).f64() <= tol,
        ..Default::default()
    };
    let mut deviation_alpha = None;
    let mut deviation_c = None;
    if flags.singleton {
        let mid = (lo + hi) / T::int(2);
        let dev: Vec<(usize, f64)> = ladder
            .iter()
            .copied()
            .zip(sup_ladder(lift, v, mid, &ladder, grid_n).into_iter().map(Scalar::f64))
            .collect();
        flags.bounded_deviation = ladder_is_bounded(&dev, TOL_GROWTH);
        flags.annular_suspect = flags.bounded_deviation && mid.f64().abs() <= tol;
        deviation_alpha = Some(mid.f64());
        deviation_c = dev.last().map(|d| d.1);
    }
    let report = RotationReport {
        direction: v,
        m_max,
        per_m_bounds: ladder
            .iter()
            .zip(&rows)
            .map(|(&m, &(a, b))| LadderRow { m, min: a.f64(), max: b.f64() })
            .collect(),
        interval_estimate: (lo.f64(), hi.f64()),
        deviation_alpha,
        deviation_c,
        flags,
    };
    Ok(RotationEstimate { report, lo, hi })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tristate {
    Bounded,
    Unbounded,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnularVerdict {
    pub direction: IntVec2,
    pub bounded_verdict: Tristate,
    pub sup_abs: f64,
    pub growth_exponent: f64,
    /// `(n, s(n))` with `s(n)` the running sup of `|<F^m(z) - z, v>|`, `m <= n`.
    pub ladder: Vec<(usize, f64)>,
}

/// Decides whether displacements along `v` look uniformly bounded.
pub fn classify_annular<T: Scalar>(lift: &Lift<T>, v: IntVec2, n: usize, grid_n: usize) -> Result<AnnularVerdict> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("N must be >= 16, got {n}")));
    }
    let rows: Vec<(usize, f64)> = deviation_ladder(lift, v, T::zero(), n, grid_n)?
        .into_iter()
        .map(|(k, s)| (k, s.f64()))
        .collect();
    let exponent = growth_exponent(&rows);
    let verdict = if ladder_is_bounded(&rows, TOL_GROWTH) {
        Tristate::Bounded
    } else if exponent >= 0.5 {
        Tristate::Unbounded
    } else {
        Tristate::Inconclusive
    };
    Ok(AnnularVerdict {
        direction: v,
        bounded_verdict: verdict,
        sup_abs: rows.last().map_or(0.0, |r| r.1),
        growth_exponent: exponent,
        ladder: rows,
    })
}

#[derive(Clone, Debug)]
pub struct PseudoRotation<T> {
    pub rho: Option<Vec2<T>>,
    pub uniform_c: Option<T>,
    pub reports: [RotationReport; 2],
}

/// Tests for a single rotation vector with uniformly bounded deviations.
pub fn classify_pseudo_rotation<T: Scalar>(lift: &Lift<T>, n: usize, grid_n: usize) -> Result<PseudoRotation<T>> {
    if !lift.deck.is_identity() {
        return Err(Error::NonIdentityDeck);
    }
    let ex = rotation_interval_estimate(lift, IntVec2::E1, n, grid_n)?;
    let ey = rotation_interval_estimate(lift, IntVec2::E2, n, grid_n)?;
    let mut reports = [ex.report.clone(), ey.report.clone()];
    if !(ex.report.flags.singleton && ey.report.flags.singleton) {
        return Ok(PseudoRotation { rho: None, uniform_c: None, reports });
    }
    let rho = Vec2::new(ex.midpoint(), ey.midpoint());
    let c = grid_points::<T>(grid_n)
        .into_par_iter()
        .map(|z| {
            let mut p = z;
            let mut best = T::zero();
            for k in 1..=n {
                p = lift.forward(p);
                let d = p - z - rho * T::int(k as i64);
                let e = T::of(d.norm_f64());
                best = best.max_of(e);
            }
            best
        })
        .reduce_with(Scalar::max_of)
        .expect("grid is nonempty");
    let bounded = ex.report.flags.bounded_deviation && ey.report.flags.bounded_deviation;
    for r in reports.iter_mut() {
        r.flags.pseudo_rotation = bounded;
    }
    Ok(PseudoRotation {
        rho: Some(rho),
        uniform_c: Some(c),
        reports,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomotopyClass {
    Identity,
    /// `conjugator⁻¹ M conjugator = [[sign, m], [0, 1]]`.
    DehnLike { sign: i8, m: i64, conjugator: DeckMatrix },
    Other,
}

impl HomotopyClass {
    /// The conjugation-invariant part of the classification.
    pub fn invariant(&self) -> (u8, i8, i64) {
        match self {
            HomotopyClass::Identity => (0, 1, 0),
            HomotopyClass::DehnLike { sign, m, .. } => (1, *sign, *m),
            HomotopyClass::Other => (2, 0, 0),
        }
    }
}

fn primitive_kernel(k: DeckMatrix) -> IntVec2 {
    let (a, b) = if k.a != 0 || k.b != 0 { (k.a, k.b) } else { (k.c, k.d) };
    let raw = IntVec2::new(b, -a);
    let g = num_integer::Integer::gcd(&raw.p, &raw.q);
    let mut u = IntVec2::new(raw.p / g, raw.q / g);
    if u.p < 0 || (u.p == 0 && u.q < 0) {
        u = -u;
    }
    u
}

/// Classifies the action on `π₁` up to `GL(2, ℤ)` conjugacy.
///
/// `m` is normalised to `m >= 0`; for `sign = -1` it is only defined modulo 2
/// and reported in `{0, 1}`.
pub fn homotopy_class(m: DeckMatrix) -> Result<HomotopyClass> {
    if !m.is_unimodular() {
        return Err(Error::NotUnimodular(m.rows()));
    }
    if m.is_identity() {
        return Ok(HomotopyClass::Identity);
    }
    let sign: i64 = match (m.det(), m.trace()) {
        (1, 2) => 1,
        (-1, 0) => -1,
        _ => return Ok(HomotopyClass::Other),
    };
    let kernel = DeckMatrix::new(m.a - sign, m.b, m.c, m.d - sign);
    let u = primitive_kernel(kernel);
    let mut w = -complementary_vector(u)?;
    let normal = |w: IntVec2| -> Result<(DeckMatrix, DeckMatrix)> {
        let p = DeckMatrix::from_columns(u, w);
        Ok((p, p.inverse()?.mul(&m).mul(&p)))
    };
    let (_, mut n) = normal(w)?;
    if sign == -1 {
        let k = n.b.div_euclid(2);
        w = w + IntVec2::new(k * u.p, k * u.q);
        n = normal(w)?.1;
    }
    if n.b < 0 {
        w = -w;
    }
    let (p, n) = normal(w)?;
    debug_assert_eq!((n.a, n.c, n.d), (sign, 0, 1), "normal form of {m}");
    Ok(HomotopyClass::DehnLike {
        sign: sign as i8,
        m: n.b,
        conjugator: p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdict {
    pub hypothesis: String,
    pub pass: bool,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub direction: IntVec2,
    pub k: u32,
    pub target: f64,
    pub interval: (f64, f64),
    pub deviation: f64,
    pub hypotheses: Vec<HypothesisVerdict>,
    pub pass: bool,
    pub complementary_bounded: bool,
    pub note: Option<String>,
}

/// Checks `ρ_v(F) = {alpha / (k |v|²)}` and bounded deviations along `v`.
///
/// Also reports whether deviations are bounded along `v⊥`, in which case the
/// map falls under the two-dimensional factor case, which is only flagged.
pub fn check_main_theorem_hypotheses<T: Scalar>(
    lift: &Lift<T>,
    v: IntVec2,
    k: u32,
    alpha: f64,
    n: usize,
    grid_n: usize,
) -> Result<TheoremVerdict> {
    if !v.is_reduced() {
        return Err(Error::NotReduced(v.p, v.q));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let tol = tol_singleton(n);
    let target = alpha / (k as f64 * v.norm2() as f64);
    let est = rotation_interval_estimate(lift, v, n, grid_n)?;
    let (lo, hi) = est.report.interval_estimate;
    let mid = 0.5 * (lo + hi);
    let dev: Vec<(usize, f64)> = deviation_ladder(lift, v, T::of(target), n, grid_n)?
        .into_iter()
        .map(|(m, s)| (m, s.f64()))
        .collect();
    let d_last = dev.last().map_or(0.0, |d| d.1);
    let half = dev.iter().rev().find(|(m, _)| *m <= n / 2).map_or(0.0, |d| d.1);
    let hypotheses = vec![
        HypothesisVerdict {
            hypothesis: "rotation_interval_singleton".into(),
            pass: hi - lo <= tol,
            slack: tol - (hi - lo),
        },
        HypothesisVerdict {
            hypothesis: "rotation_matches_target".into(),
            pass: (mid - target).abs() <= tol,
            slack: tol - (mid - target).abs(),
        },
        HypothesisVerdict {
            hypothesis: "bounded_deviations".into(),
            pass: ladder_is_bounded(&dev, TOL_GROWTH),
            slack: half * (1.0 + TOL_GROWTH) + GROWTH_FLOOR - d_last,
        },
    ];
    let comp = rotation_interval_estimate(lift, v.perp(), n, grid_n)?;
    let complementary_bounded = comp.report.flags.singleton && comp.report.flags.bounded_deviation;
    let pass = hypotheses.iter().all(|h| h.pass);
    Ok(TheoremVerdict {
        direction: v,
        k,
        target,
        interval: (lo, hi),
        deviation: d_last,
        pass,
        hypotheses,
        complementary_bounded,
        note: complementary_bounded.then(|| {
            "deviations also bounded along v⊥: two-dimensional factor case, not constructed".to_string()
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterRow {
    pub n: usize,
    pub diameter: f64,
    pub running_max: f64,
}

fn unit_square_boundary(boundary_n: usize) -> Vec<Vec2<f64>> {
    let per_side = boundary_n.div_ceil(4).max(1);
    let mut pts = Vec::with_capacity(4 * per_side);
    for k in 0..per_side {
        let s = k as f64 / per_side as f64;
        pts.push(Vec2::new(s, 0.0));
        pts.push(Vec2::new(1.0, s));
        pts.push(Vec2::new(1.0 - s, 1.0));
        pts.push(Vec2::new(0.0, 1.0 - s));
    }
    pts
}

fn diameter(pts: &[Vec2<f64>]) -> f64 {
    pts.par_iter()
        .enumerate()
        .map(|(i, p)| {
            pts[i + 1..]
                .iter()
                .map(|q| (p.x - q.x).hypot(p.y - q.y))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Diameter of `F^n(D)` for the unit square `D`, approximated by the images
/// of `boundary_n` boundary samples (corners included), for `n = 0..=N`.
pub fn fundamental_domain_diameter_growth<T: Scalar>(
    lift: &Lift<T>,
    n: usize,
    boundary_n: usize,
) -> Result<Vec<DiameterRow>> {
    if boundary_n < 4 {
        return Err(Error::InvalidArgument("boundary_n must be >= 4".into()));
    }
    let mut pts: Vec<Vec2<T>> = unit_square_boundary(boundary_n).into_iter().map(Vec2::from_f64).collect();
    let mut rows = Vec::with_capacity(n + 1);
    let mut running = 0.0f64;
    for k in 0..=n {
        if k > 0 {
            pts.par_iter_mut().for_each(|p| *p = lift.forward(*p));
        }
        let f: Vec<Vec2<f64>> = pts.iter().map(|p| p.to_f64()).collect();
        let d = diameter(&f);
        running = running.max(d);
        rows.push(DiameterRow { n: k, diameter: d, running_max: running });
    }
    Ok(rows)
}

/// First `n` whose diameter exceeds `k`, if observed.
pub fn first_diameter_exceeding(rows: &[DiameterRow], k: f64) -> Option<usize> {
    rows.iter().find(|r| r.diameter > k).map(|r| r.n)
}

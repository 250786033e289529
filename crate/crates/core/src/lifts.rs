//! Torus homeomorphisms represented by explicit lifts to the plane.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};

/// Point or vector in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }
}

impl<T: Scalar> Vec2<T> {
    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn dot_int(self, v: IntVec2) -> T {
        self.x * T::int(v.p) + self.y * T::int(v.q)
    }

    pub fn norm_f64(self) -> f64 {
        T::hypot_f64(self.x, self.y)
    }

    pub fn to_f64(self) -> Vec2<f64> {
        Vec2::new(self.x.f64(), self.y.f64())
    }

    pub fn from_f64(z: Vec2<f64>) -> Self {
        Vec2::new(T::of(z.x), T::of(z.y))
    }

    pub fn from_int(v: IntVec2) -> Self {
        Vec2::new(T::int(v.p), T::int(v.q))
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Integer vector, used for directions and deck translations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntVec2 {
    pub p: i64,
    pub q: i64,
}

impl IntVec2 {
    pub const E1: IntVec2 = IntVec2 { p: 1, q: 0 };
    pub const E2: IntVec2 = IntVec2 { p: 0, q: 1 };

    pub const fn new(p: i64, q: i64) -> Self {
        IntVec2 { p, q }
    }

    pub fn is_zero(self) -> bool {
        self.p == 0 && self.q == 0
    }

    /// `gcd(p, q) == 1`.
    pub fn is_reduced(self) -> bool {
        self.p.gcd(&self.q) == 1
    }

    /// `(q, -p)`.
    pub fn perp(self) -> IntVec2 {
        IntVec2::new(self.q, -self.p)
    }

    pub fn dot(self, o: IntVec2) -> i64 {
        self.p * o.p + self.q * o.q
    }

    pub fn norm2(self) -> i64 {
        self.dot(self)
    }

    /// `det(self, o)` with `self` and `o` as columns.
    pub fn det(self, o: IntVec2) -> i64 {
        self.p * o.q - self.q * o.p
    }
}

impl Add for IntVec2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        IntVec2::new(self.p + o.p, self.q + o.q)
    }
}

impl Sub for IntVec2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        IntVec2::new(self.p - o.p, self.q - o.q)
    }
}

impl Neg for IntVec2 {
    type Output = Self;
    fn neg(self) -> Self {
        IntVec2::new(-self.p, -self.q)
    }
}

impl fmt::Display for IntVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

/// Integer 2x2 matrix `[[a, b], [c, d]]`; the columns `(a, c)` and `(b, d)`
/// are the images of the basis vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeckMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl DeckMatrix {
    pub const IDENTITY: DeckMatrix = DeckMatrix { a: 1, b: 0, c: 0, d: 1 };

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        DeckMatrix { a, b, c, d }
    }

    /// Matrix with the given columns.
    pub fn from_columns(c1: IntVec2, c2: IntVec2) -> Self {
        DeckMatrix::new(c1.p, c2.p, c1.q, c2.q)
    }

    pub fn rows(&self) -> [[i64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs() == 1
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn column(&self, k: usize) -> IntVec2 {
        match k {
            0 => IntVec2::new(self.a, self.c),
            _ => IntVec2::new(self.b, self.d),
        }
    }

    pub fn apply(&self, v: IntVec2) -> IntVec2 {
        IntVec2::new(self.a * v.p + self.b * v.q, self.c * v.p + self.d * v.q)
    }

    pub fn apply_real<T: Scalar>(&self, z: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            T::int(self.a) * z.x + T::int(self.b) * z.y,
            T::int(self.c) * z.x + T::int(self.d) * z.y,
        )
    }

    pub fn mul(&self, o: &DeckMatrix) -> DeckMatrix {
        DeckMatrix::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn transpose(&self) -> DeckMatrix {
        DeckMatrix::new(self.a, self.c, self.b, self.d)
    }

    /// Integer inverse of a unimodular matrix.
    pub fn inverse(&self) -> Result<DeckMatrix> {
        let det = self.det();
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(self.rows()));
        }
        Ok(DeckMatrix::new(det * self.d, -det * self.b, -det * self.c, det * self.a))
    }
}

impl fmt::Display for DeckMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Returns `w` with `det(w, v) = 1`.
///
/// Among all solutions `w0 + t v` the ones of minimal Euclidean norm are
/// kept and the lexicographically smallest of them is returned.
pub fn complementary_vector(v: IntVec2) -> Result<IntVec2> {
    if !v.is_reduced() {
        return Err(Error::NotReduced(v.p, v.q));
    }
    // det(w, v) = w.p * v.q - w.q * v.p = 1
    let eg = v.q.extended_gcd(&(-v.p));
    let sign = eg.gcd.signum();
    let w0 = IntVec2::new(eg.x * sign, eg.y * sign);
    debug_assert_eq!(w0.det(v), 1);

    let n2 = v.norm2() as f64;
    let t0 = (-(w0.dot(v) as f64) / n2).round() as i64;
    let mut best: Option<(i64, IntVec2)> = None;
    for t in (t0 - 2)..=(t0 + 2) {
        let w = IntVec2::new(w0.p + t * v.p, w0.q + t * v.q);
        let key = (w.norm2(), w);
        best = match best {
            Some((bn, bw)) if (bn, bw) <= key => Some((bn, bw)),
            _ => Some(key),
        };
    }
    Ok(best.expect("nonempty").1)
}

/// The plane map behind a [`Lift`].
pub trait PlaneMap<T: Scalar>: Send + Sync {
    fn forward(&self, z: Vec2<T>) -> Vec2<T>;
    fn inverse(&self, z: Vec2<T>) -> Vec2<T>;
}

struct FnMap<F, G> {
    forward: F,
    inverse: G,
}

impl<T, F, G> PlaneMap<T> for FnMap<F, G>
where
    T: Scalar,
    F: Fn(Vec2<T>) -> Vec2<T> + Send + Sync,
    G: Fn(Vec2<T>) -> Vec2<T> + Send + Sync,
{
    fn forward(&self, z: Vec2<T>) -> Vec2<T> {
        (self.forward)(z)
    }
    fn inverse(&self, z: Vec2<T>) -> Vec2<T> {
        (self.inverse)(z)
    }
}

/// A lift `F: ℝ² → ℝ²` of a torus homeomorphism together with its action on
/// the fundamental group.
#[derive(Clone)]
pub struct Lift<T: Scalar> {
    map: Arc<dyn PlaneMap<T>>,
    pub deck: DeckMatrix,
    pub label: String,
    pub params: BTreeMap<String, f64>,
}

impl<T: Scalar> fmt::Debug for Lift<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lift")
            .field("label", &self.label)
            .field("deck", &self.deck)
            .field("params", &self.params)
            .finish()
    }
}

impl<T: Scalar> Lift<T> {
    pub fn new(map: impl PlaneMap<T> + 'static, deck: DeckMatrix, label: impl Into<String>) -> Self {
        Lift {
            map: Arc::new(map),
            deck,
            label: label.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn from_fns<F, G>(label: impl Into<String>, deck: DeckMatrix, forward: F, inverse: G) -> Self
    where
        F: Fn(Vec2<T>) -> Vec2<T> + Send + Sync + 'static,
        G: Fn(Vec2<T>) -> Vec2<T> + Send + Sync + 'static,
    {
        Lift::new(FnMap { forward, inverse }, deck, label)
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    #[inline]
    pub fn forward(&self, z: Vec2<T>) -> Vec2<T> {
        self.map.forward(z)
    }

    #[inline]
    pub fn inverse(&self, z: Vec2<T>) -> Vec2<T> {
        self.map.inverse(z)
    }

    /// `F^n(z)`; negative `n` iterates the inverse.
    pub fn iterate(&self, mut z: Vec2<T>, n: i64) -> Vec2<T> {
        if n >= 0 {
            for _ in 0..n {
                z = self.forward(z);
            }
        } else {
            for _ in 0..(-n) {
                z = self.inverse(z);
            }
        }
        z
    }

    pub fn orbit(&self, start: Vec2<T>, n: usize) -> OrbitSample<T> {
        let mut points = Vec::with_capacity(n);
        let mut z = start;
        for _ in 0..n {
            z = self.forward(z);
            points.push(z);
        }
        OrbitSample { start, points }
    }
}

/// Forward orbit `F(z), ..., F^N(z)` of a start point.
#[derive(Clone, Debug)]
pub struct OrbitSample<T> {
    pub start: Vec2<T>,
    points: Vec<Vec2<T>>,
}

impl<T: Scalar> OrbitSample<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `F^n(z)` for `0 <= n <= N`.
    pub fn point(&self, n: usize) -> Vec2<T> {
        if n == 0 {
            self.start
        } else {
            self.points[n - 1]
        }
    }

    /// `F^n(z) - z` for `1 <= n <= N`.
    pub fn displacement(&self, n: usize) -> Vec2<T> {
        self.point(n) - self.start
    }

    pub fn displacements(&self) -> Vec<Vec2<T>> {
        self.points.iter().map(|&p| p - self.start).collect()
    }
}

/// `z ↦ z + rho`.
pub fn make_rigid<T: Scalar>(rho: Vec2<T>) -> Lift<T> {
    Lift::from_fns("rigid", DeckMatrix::IDENTITY, move |z| z + rho, move |z| z - rho)
        .with_param("rho_x", rho.x.f64())
        .with_param("rho_y", rho.y.f64())
}

/// `(x, y) ↦ (x + m y + alpha, y)`, deck `[[1, m], [0, 1]]`.
pub fn make_dehn_family<T: Scalar>(m: i64, alpha: T) -> Lift<T> {
    let mm = T::int(m);
    Lift::from_fns(
        "dehn",
        DeckMatrix::new(1, m, 0, 1),
        move |z: Vec2<T>| Vec2::new(z.x + mm * z.y + alpha, z.y),
        move |z: Vec2<T>| Vec2::new(z.x - mm * z.y - alpha, z.y),
    )
    .with_param("m", m as f64)
    .with_param("alpha", alpha.f64())
}

/// One term `amplitude * sin(2π frequency x + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Deserialize<'de> + num_traits::Zero"))]
pub struct TrigTerm<T> {
    pub freq: i64,
    pub amp: T,
    #[serde(default = "zero_phase")]
    pub phase: T,
}

fn zero_phase<T: num_traits::Zero>() -> T {
    T::zero()
}

/// Finite trigonometric polynomial on the circle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound(deserialize = "T: Deserialize<'de> + num_traits::Zero"))]
pub struct TrigPoly<T> {
    pub terms: Vec<TrigTerm<T>>,
}

impl<T: RealScalar> TrigPoly<T> {
    pub fn zero() -> Self {
        TrigPoly { terms: Vec::new() }
    }

    pub fn sine(amp: T, freq: i64) -> Self {
        TrigPoly {
            terms: vec![TrigTerm { freq, amp, phase: T::zero() }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amp == T::zero())
    }

    /// Upper bound `Σ |a_j|` for `sup |φ|`.
    pub fn sup_bound(&self) -> T {
        self.terms.iter().fold(T::zero(), |acc, t| acc + t.amp.abs())
    }

    pub fn eval(&self, x: T) -> T {
        let x = x - x.floor();
        let tau = T::TAU();
        self.terms.iter().fold(T::zero(), |acc, t| {
            acc + t.amp * (tau * T::int(t.freq) * x + t.phase).sin()
        })
    }
}

struct SkewMap<T> {
    alpha: T,
    phi: TrigPoly<T>,
}

impl<T: RealScalar> PlaneMap<T> for SkewMap<T> {
    fn forward(&self, z: Vec2<T>) -> Vec2<T> {
        Vec2::new(z.x + self.alpha, z.y + self.phi.eval(z.x))
    }
    fn inverse(&self, z: Vec2<T>) -> Vec2<T> {
        let x = z.x - self.alpha;
        Vec2::new(x, z.y - self.phi.eval(x))
    }
}

/// `(x, y) ↦ (x + alpha, y + φ(x mod 1))`.
pub fn make_skew<T: RealScalar>(alpha: T, phi: TrigPoly<T>) -> Lift<T> {
    Lift::new(SkewMap { alpha, phi }, DeckMatrix::IDENTITY, "skew").with_param("alpha", alpha.f64())
}

struct Conjugated<T: Scalar> {
    inner: Lift<T>,
    a: DeckMatrix,
    a_inv: DeckMatrix,
}

impl<T: Scalar> PlaneMap<T> for Conjugated<T> {
    fn forward(&self, z: Vec2<T>) -> Vec2<T> {
        self.a_inv.apply_real(self.inner.forward(self.a.apply_real(z)))
    }
    fn inverse(&self, z: Vec2<T>) -> Vec2<T> {
        self.a_inv.apply_real(self.inner.inverse(self.a.apply_real(z)))
    }
}

/// `z ↦ A⁻¹ F(A z)`, with deck `A⁻¹ f_* A`.
pub fn conjugate_by_matrix<T: Scalar>(lift: &Lift<T>, a: DeckMatrix) -> Result<Lift<T>> {
    let a_inv = a.inverse()?;
    let deck = a_inv.mul(&lift.deck).mul(&a);
    let mut out = Lift::new(
        Conjugated { inner: lift.clone(), a, a_inv },
        deck,
        format!("{}∘A", lift.label),
    );
    out.params = lift.params.clone();
    Ok(out)
}

/// Lattice points of `[0,1)²` with a fixed-seed jitter.
pub fn sample_points(n: usize, seed: u64) -> Vec<Vec2<f64>> {
    let side = (n as f64).sqrt().ceil().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    'outer: for i in 0..side {
        for j in 0..side {
            if out.len() == n {
                break 'outer;
            }
            let jx: f64 = rng.gen_range(-0.25..0.25);
            let jy: f64 = rng.gen_range(-0.25..0.25);
            out.push(Vec2::new(
                (i as f64 + 0.5 + jx) / side as f64,
                (j as f64 + 0.5 + jy) / side as f64,
            ));
        }
    }
    out
}

/// Maximum of `|F(z + e) - F(z) - f_* e|` over the given points and both
/// basis vectors `e`.
pub fn deck_equivariance_error_on<T: Scalar>(lift: &Lift<T>, points: &[Vec2<T>]) -> f64 {
    let basis = [IntVec2::E1, IntVec2::E2];
    points
        .iter()
        .flat_map(|&z| {
            let fz = lift.forward(z);
            basis.iter().map(move |&e| (z, fz, e))
        })
        .map(|(z, fz, e)| {
            let image = Vec2::<T>::from_int(lift.deck.apply(e));
            (lift.forward(z + Vec2::from_int(e)) - fz - image).norm_f64()
        })
        .fold(0.0, f64::max)
}

/// [`deck_equivariance_error_on`] over `n_samples` jittered points of the unit square.
pub fn verify_deck_equivariance<T: Scalar>(lift: &Lift<T>, n_samples: usize) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let pts: Vec<Vec2<T>> = sample_points(n_samples, 0x5eed).into_iter().map(Vec2::from_f64).collect();
    Ok(deck_equivariance_error_on(lift, &pts))
}

/// Maximum of `|F⁻¹(F(z)) - z|` over the given points.
pub fn inverse_error_on<T: Scalar>(lift: &Lift<T>, points: &[Vec2<T>]) -> f64 {
    points
        .iter()
        .map(|&z| (lift.inverse(lift.forward(z)) - z).norm_f64())
        .fold(0.0, f64::max)
}

/// Range of the finite-difference Jacobian determinant over sample points.
///
/// A diagnostic only: area preservation is never consumed by the analyses.
pub fn jacobian_determinant_range<T: Scalar>(lift: &Lift<T>, n_samples: usize, h: f64) -> (f64, f64) {
    let hh = T::of(h);
    sample_points(n_samples, 0x1ac0b)
        .into_iter()
        .map(|z| {
            let z = Vec2::<T>::from_f64(z);
            let fx = (lift.forward(z + Vec2::new(hh, T::zero())) - lift.forward(z - Vec2::new(hh, T::zero()))).to_f64();
            let fy = (lift.forward(z + Vec2::new(T::zero(), hh)) - lift.forward(z - Vec2::new(T::zero(), hh))).to_f64();
            (fx.x * fy.y - fx.y * fy.x) / (4.0 * h * h)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::SQRT2_MINUS_1;
    use crate::Rational;

    #[test]
    fn rigid_examples() {
        let id = make_rigid(Vec2::new(0.0, 0.0));
        assert_eq!(id.forward(Vec2::new(0.3, 0.7)), Vec2::new(0.3, 0.7));
        let a = SQRT2_MINUS_1;
        let l = make_rigid(Vec2::new(a, 0.0));
        let z = l.iterate(Vec2::new(0.0, 0.0), 2);
        assert_eq!(z, Vec2::new(2.0 * a, 0.0));
        let l = make_rigid(Vec2::new(Rational::ratio(1, 10), Rational::ratio(1, 5)));
        assert_eq!(verify_deck_equivariance(&l, 100).unwrap(), 0.0);
    }

    #[test]
    fn skew_examples() {
        let a = SQRT2_MINUS_1;
        let l = make_skew(a, TrigPoly::zero());
        let z = l.iterate(Vec2::new(0.0, 0.0), 3);
        assert!((z.x - 3.0 * a).abs() < 1e-15 && z.y == 0.0);
        let l = make_skew(a, TrigPoly::sine(0.3, 1));
        let z = l.forward(Vec2::new(0.0, 0.0));
        assert_eq!(z, Vec2::new(a, 0.0));
        assert!(verify_deck_equivariance(&l, 100).unwrap() <= 1e-12);
    }

    #[test]
    fn dehn_examples() {
        let l = make_dehn_family(1, 0.25);
        assert_eq!(l.forward(Vec2::new(0.0, 1.0)), Vec2::new(1.25, 1.0));
        let l0 = make_dehn_family(0, 0.3);
        assert_eq!(l0.forward(Vec2::new(0.1, 0.6)), Vec2::new(0.1 + 0.3, 0.6));
        let l2 = make_dehn_family(2, Rational::ratio(3, 10));
        assert_eq!(verify_deck_equivariance(&l2, 100).unwrap(), 0.0);
    }

    #[test]
    fn broken_lift_detected() {
        let l = Lift::<f64>::from_fns(
            "broken",
            DeckMatrix::IDENTITY,
            |z| Vec2::new(z.x + 0.1 * z.x, z.y),
            |z| Vec2::new(z.x / 1.1, z.y),
        );
        assert!(verify_deck_equivariance(&l, 100).unwrap() > 0.05);
    }

    #[test]
    fn zero_samples_rejected() {
        let l = make_rigid(Vec2::new(0.1, 0.2));
        assert!(verify_deck_equivariance(&l, 0).is_err());
    }

    #[test]
    fn complementary_axis_cases() {
        assert_eq!(complementary_vector(IntVec2::new(1, 0)).unwrap(), IntVec2::new(0, -1));
        assert_eq!(complementary_vector(IntVec2::new(0, 1)).unwrap(), IntVec2::new(1, 0));
        assert!(matches!(complementary_vector(IntVec2::new(2, 4)), Err(Error::NotReduced(2, 4))));
        assert!(complementary_vector(IntVec2::new(0, 0)).is_err());
    }

    /// Brute-force search over a box gives the minimal-norm,
    /// lexicographically smallest solution of det(w, v) = 1.
    fn brute_complementary(v: IntVec2) -> IntVec2 {
        let mut best: Option<(i64, IntVec2)> = None;
        for p in -60..=60 {
            for q in -60..=60 {
                let w = IntVec2::new(p, q);
                if w.det(v) == 1 {
                    let key = (w.norm2(), w);
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn complementary_matches_brute_force() {
        for v in [(2, 3), (3, 2), (-5, 7), (1, 1), (1, -1), (4, -9), (0, -1), (-1, 0), (7, 12)] {
            let v = IntVec2::new(v.0, v.1);
            let w = complementary_vector(v).unwrap();
            assert_eq!(w.det(v), 1, "v={v}");
            assert_eq!(w, brute_complementary(v), "v={v}");
        }
    }

    #[test]
    fn conjugation_examples() {
        let l = make_skew(SQRT2_MINUS_1, TrigPoly::sine(0.3, 1));
        let same = conjugate_by_matrix(&l, DeckMatrix::IDENTITY).unwrap();
        for z in sample_points(50, 3) {
            assert_eq!(same.forward(z), l.forward(z));
        }

        let rho = Vec2::new(Rational::ratio(1, 7), Rational::ratio(2, 9));
        let a = DeckMatrix::new(2, 1, 1, 1);
        let r = conjugate_by_matrix(&make_rigid(rho), a).unwrap();
        let expect = a.inverse().unwrap().apply_real(rho);
        for z in sample_points(20, 4) {
            let z = Vec2::<Rational>::from_f64(z);
            assert_eq!(r.forward(z) - z, expect);
        }

        // A⁻¹ [[1,1],[0,1]] A with A = [[0,-1],[1,0]], by hand:
        // A⁻¹ = [[0,1],[-1,0]]; [[1,1],[0,1]] A = [[1,-1],[1,0]];
        // A⁻¹ * that = [[1,0],[-1,1]].
        let d = conjugate_by_matrix(&make_dehn_family(1, 0.0), DeckMatrix::new(0, -1, 1, 0)).unwrap();
        assert_eq!(d.deck, DeckMatrix::new(1, 0, -1, 1));
        assert!(matches!(
            conjugate_by_matrix(&l, DeckMatrix::new(2, 0, 0, 1)),
            Err(Error::NotUnimodular(_))
        ));
    }

    #[test]
    fn orbit_telescopes_exactly() {
        let l = make_skew(SQRT2_MINUS_1, TrigPoly::sine(0.3, 1));
        let o = l.orbit(Vec2::new(0.2, 0.1), 30);
        assert_eq!(o.len(), 30);
        for n in 1..=30 {
            assert_eq!(o.displacement(n), l.forward(o.point(n - 1)) - o.start);
        }
    }

    #[test]
    fn jacobian_of_area_preserving_maps_is_one() {
        let (lo, hi) = jacobian_determinant_range(&make_skew(0.3, TrigPoly::sine(0.3, 1)), 64, 1e-5);
        assert!((lo - 1.0).abs() < 1e-6 && (hi - 1.0).abs() < 1e-6);
        let broken = Lift::<f64>::from_fns("b", DeckMatrix::IDENTITY, |z| z * 0.5, |z| z * 2.0);
        let (_, hi) = jacobian_determinant_range(&broken, 16, 1e-5);
        assert!((hi - 0.25).abs() < 1e-9);
    }
}

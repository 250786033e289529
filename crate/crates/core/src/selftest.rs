//! Seeded fixture generators, checked-in reference fixtures, and the
//! oracle-equivalence suite run by `torus-rot selftest`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifts::{make_dehn_family, make_skew, IntVec2, TrigPoly};
use crate::oracle;
use crate::raster::{
    circloid_minus, circloid_plus, gap_region, is_resolved_pair, order_compare, parse_pgm,
    torus_essentiality_rank, unbounded_components, write_pgm_annulus, write_pgm_torus, AnnulusRaster, Circloid,
    Connectivity, Order, Raster, TorusRaster,
};

/// Side of the square random fixtures.
pub const FIXTURE_SIZE: usize = 64;

/// Random essential set in `[-1, 1) × T¹`: a wavy closed curve with a
/// noisy halo, sometimes a second curve, and scattered islands.
pub fn random_essential(seed: u64) -> AnnulusRaster {
    let n = FIXTURE_SIZE;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = AnnulusRaster::new(-1.0, 1.0, n, n).expect("valid window");
    let curves = if rng.gen_bool(0.4) { 2 } else { 1 };
    let mut graphs = Vec::new();
    for c in 0..curves {
        let centre = if curves == 1 { rng.gen_range(-0.2..0.2) } else { [-0.3, 0.3][c] + rng.gen_range(-0.05..0.05) };
        let terms: Vec<(f64, f64, f64)> = (1..=3)
            .map(|k| (rng.gen_range(0.0..0.12 / k as f64), k as f64, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let g = move |y: f64| centre + terms.iter().map(|&(a, k, p)| a * (std::f64::consts::TAU * k * y + p).sin()).sum::<f64>();
        a.trace_graph(&g).expect("curve inside window");
        graphs.push(g);
    }
    let halo = rng.gen_range(0.2..0.6);
    let dx = a.dx();
    for i in 0..n {
        for j in 0..n {
            let (x, y) = a.cell_center(i, j);
            let near = graphs.iter().any(|g| (x - g(y)).abs() <= 3.0 * dx);
            if near && rng.gen_bool(halo) {
                a.set(i, j, true);
            } else if !near && rng.gen_bool(0.01) {
                a.set(i, j, true);
            }
        }
    }
    for j in 0..n {
        for i in [0, 1, n - 2, n - 1] {
            a.set(i, j, false);
        }
    }
    a
}

/// Ordered, distinct, resolved circloid pairs `C ≼ C'` from seeded fixtures.
pub fn random_ordered_pairs(seed: u64, count: usize) -> Vec<(Circloid, Circloid)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut k = 0u64;
    while out.len() < count {
        k += 1;
        let a = random_essential(seed.wrapping_mul(1_000_003).wrapping_add(k));
        let Ok(c) = circloid_plus(&a) else { continue };
        let candidate = match rng.gen_range(0..3) {
            0 => circloid_minus(&a).map(|m| (m, c.clone())),
            1 => {
                let shift = rng.gen_range(1..8);
                let Ok(b) = a.shift_columns(shift) else { continue };
                circloid_plus(&b).map(|d| (c.clone(), d))
            }
            _ => {
                let b = random_essential(seed ^ (k << 20));
                match a.union(&b).and_then(|u| circloid_plus(&u)) {
                    Ok(d) => Ok((c.clone(), d)),
                    Err(e) => Err(e),
                }
            }
        };
        let Ok((lo, hi)) = candidate else { continue };
        let ordered = matches!(order_compare(&lo, &hi), Ok(Order::StrictlyLess | Order::LessEqual));
        if ordered && is_resolved_pair(&lo, &hi).unwrap_or(false) {
            out.push((lo, hi));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircloidFixture {
    pub name: String,
    pub seed: u64,
    pub input: String,
    pub expected: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankFixture {
    pub name: String,
    pub file: String,
    pub rank: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DehnReturnFixture {
    pub m: i64,
    pub alpha: f64,
    pub center: (f64, f64),
    pub radius: f64,
    pub grid: usize,
    pub n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewDeviationFixture {
    pub alpha: f64,
    pub amp: f64,
    pub n: usize,
    pub grid: usize,
    pub sup: f64,
}

/// Values produced by the naive oracles and frozen into the repository.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Derived {
    pub version: u32,
    pub circloids: Vec<CircloidFixture>,
    pub ranks: Vec<RankFixture>,
    pub dehn_return: DehnReturnFixture,
    pub skew_deviation: SkewDeviationFixture,
}

/// `derived.json` plus the PGM files it names.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixtures {
    pub derived: Derived,
    pub files: BTreeMap<String, String>,
}

macro_rules! embedded_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../fixtures/", $name)))),*]
    };
}

const EMBEDDED: &[(&str, &str)] = embedded_files!(
    "circloid_00_input.pgm",
    "circloid_00_expected.pgm",
    "circloid_01_input.pgm",
    "circloid_01_expected.pgm",
    "circloid_02_input.pgm",
    "circloid_02_expected.pgm",
    "circloid_03_input.pgm",
    "circloid_03_expected.pgm",
    "two_circles_input.pgm",
    "two_circles_expected.pgm",
    "pocket_input.pgm",
    "pocket_expected.pgm",
    "rank_band.pgm",
    "rank_disk.pgm",
    "rank_complement.pgm",
    "rank_diagonal.pgm",
);

const EMBEDDED_DERIVED: &str = include_str!("../fixtures/derived.json");

impl Fixtures {
    /// The fixtures compiled into the library.
    pub fn embedded() -> Result<Self> {
        let derived = serde_json::from_str(EMBEDDED_DERIVED)?;
        let files = EMBEDDED.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Ok(Fixtures { derived, files })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let derived: Derived = serde_json::from_str(&std::fs::read_to_string(dir.join("derived.json"))?)?;
        let mut files = BTreeMap::new();
        for name in derived.file_names() {
            files.insert(name.clone(), std::fs::read_to_string(dir.join(&name))?);
        }
        Ok(Fixtures { derived, files })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &self.files {
            std::fs::write(dir.join(name), text)?;
        }
        std::fs::write(dir.join("derived.json"), serde_json::to_string_pretty(&self.derived)? + "\n")?;
        Ok(())
    }

    fn file(&self, name: &str) -> Result<&str> {
        self.files.get(name).map(String::as_str).ok_or_else(|| Error::Config(format!("missing fixture file {name}")))
    }
}

impl Derived {
    pub fn file_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.circloids.iter().flat_map(|c| [c.input.clone(), c.expected.clone()]).collect();
        v.extend(self.ranks.iter().map(|r| r.file.clone()));
        v
    }
}

fn annulus_from(cells: Vec<bool>, like: &AnnulusRaster) -> AnnulusRaster {
    AnnulusRaster::from_cells(like.x0, like.x1, like.nx, like.ny, cells).expect("same geometry")
}

fn two_circles() -> AnnulusRaster {
    AnnulusRaster::from_fn(-2.0, 2.0, 40, 16, |x, _| (x - 0.05).abs() < 0.05 || (x - 1.05).abs() < 0.05).expect("valid window")
}

/// A thick circle with a pocket open to the right.
fn pocket() -> AnnulusRaster {
    AnnulusRaster::from_fn(-1.0, 1.0, 32, 32, |x, y| {
        let wall = (x + 0.2).abs() < 0.1;
        let top = (y - 0.3).abs() < 0.04 && x > -0.2 && x < 0.4;
        let bottom = (y - 0.7).abs() < 0.04 && x > -0.2 && x < 0.4;
        let back = (x - 0.0).abs() < 0.04 && y > 0.3 && y < 0.7;
        wall || top || bottom || back
    })
    .expect("valid window")
}

fn rank_rasters() -> Vec<(&'static str, TorusRaster)> {
    let n = 48;
    vec![
        ("band", TorusRaster::from_fn(n, |_, y| y < 0.2).expect("n > 0")),
        ("disk", TorusRaster::disk(n, (0.5, 0.5), 0.1).expect("n > 0")),
        ("complement", TorusRaster::disk(n, (0.5, 0.5), 0.1).expect("n > 0").complement()),
        (
            "diagonal",
            TorusRaster::from_fn(n, |x, y| crate::scalar::circle_distance(x, y) < 0.08).expect("n > 0"),
        ),
    ]
}

/// Recomputes every fixture with the naive oracles only.
pub fn regenerate() -> Fixtures {
    let mut files = BTreeMap::new();
    let mut circloids = Vec::new();
    let mut push = |name: String, seed: u64, a: &AnnulusRaster, files: &mut BTreeMap<String, String>| {
        let expected = annulus_from(oracle::naive_circloid_plus(a.cells(), a.nx, a.ny), a);
        let input = format!("{name}_input.pgm");
        let exp = format!("{name}_expected.pgm");
        files.insert(input.clone(), write_pgm_annulus(a));
        files.insert(exp.clone(), write_pgm_annulus(&expected));
        circloids.push(CircloidFixture { name, seed, input, expected: exp });
    };
    for k in 0..4u64 {
        push(format!("circloid_{k:02}"), 1000 + k, &random_essential(1000 + k), &mut files);
    }
    push("two_circles".into(), 0, &two_circles(), &mut files);
    push("pocket".into(), 0, &pocket(), &mut files);
    let mut ranks = Vec::new();
    for (name, r) in rank_rasters() {
        let start = r.cells().iter().position(|&c| c).expect("nonempty");
        let file = format!("rank_{name}.pgm");
        files.insert(file.clone(), write_pgm_torus(&r));
        ranks.push(RankFixture { name: name.into(), file, rank: oracle::cover_rank(r.cells(), r.n, start, 3) });
    }
    let (m, alpha, center, radius) = (3, 0.3, (0.5, 0.5), 0.2);
    let dehn_return = DehnReturnFixture { m, alpha, center, radius, grid: 64, n: oracle::dehn_disk_return(m, alpha, center, radius, 20) };
    let (sa, amp, sn, sg) = (crate::constants::SQRT2_MINUS_1, 0.3, 200, 16);
    let mut sup = 0.0f64;
    for i in 0..sg {
        for n in 1..=sn {
            sup = sup.max(oracle::sine_birkhoff_sum(amp, 1, sa, i as f64 / sg as f64, n).abs());
        }
    }
    let skew_deviation = SkewDeviationFixture { alpha: sa, amp, n: sn, grid: sg, sup };
    Fixtures {
        derived: Derived { version: 1, circloids, ranks, dehn_return, skew_deviation },
        files,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: impl Into<String>, r: Result<String>) {
        let (pass, detail) = match r {
            Ok(d) => (true, d),
            Err(e) => (false, e.to_string()),
        };
        self.checks.push(Check { name: name.into(), pass, detail });
    }
}

fn fail(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

fn annulus(text: &str) -> Result<AnnulusRaster> {
    match parse_pgm(text)? {
        Raster::Annulus(a) => Ok(a),
        Raster::Torus(_) => Err(Error::Pgm("expected an annulus raster".into())),
    }
}

fn torus(text: &str) -> Result<TorusRaster> {
    match parse_pgm(text)? {
        Raster::Torus(t) => Ok(t),
        Raster::Annulus(_) => Err(Error::Pgm("expected a torus raster".into())),
    }
}

fn check_circloid_fixture(fx: &Fixtures, c: &CircloidFixture) -> Result<String> {
    let a = annulus(fx.file(&c.input)?)?;
    let expected = annulus(fx.file(&c.expected)?)?;
    let got = circloid_plus(&a)?;
    if got.raster != expected {
        let diff = got.raster.cells().iter().zip(expected.cells()).filter(|(a, b)| a != b).count();
        return Err(fail(format!("circloid_plus differs from {} in {diff} cells", c.expected)));
    }
    let again = circloid_plus(&got.raster)?;
    if again.raster != got.raster {
        return Err(fail("circloid_plus is not idempotent"));
    }
    Ok(format!("{} cells", got.raster.count()))
}

/// Oracle agreement, idempotence, dual bound and integer-shift equivariance.
pub fn check_random_fixture(seed: u64) -> Result<String> {
    let a = random_essential(seed);
    let u = unbounded_components(&a)?;
    let (nm, np) = oracle::naive_unbounded(a.cells(), a.nx, a.ny);
    if u.minus.cells() != nm.as_slice() || u.plus.cells() != np.as_slice() {
        return Err(fail("unbounded components differ from the naive fill"));
    }
    let c = circloid_plus(&a)?;
    if c.raster.cells() != oracle::naive_circloid_plus(a.cells(), a.nx, a.ny).as_slice() {
        return Err(fail("circloid_plus differs from the naive chain"));
    }
    c.check_invariants()?;
    let m = circloid_minus(&a)?;
    if !matches!(order_compare(&m, &c)?, Order::StrictlyLess | Order::LessEqual | Order::Equal) {
        return Err(fail("circloid_minus is not below circloid_plus"));
    }
    if let Ok(shifted) = a.shift_columns(1) {
        if circloid_plus(&shifted)?.raster != c.raster.shift_columns(1)? {
            return Err(fail("circloid_plus does not commute with a column shift"));
        }
    }
    Ok(format!("{} cells", c.raster.count()))
}

/// Runs the full suite on `fx`, drawing random fixtures from `seed`.
pub fn run_selftest(fx: &Fixtures, seed: u64) -> SelftestReport {
    let mut s = Suite { checks: Vec::new() };
    for c in &fx.derived.circloids {
        s.record(format!("fixture:{}", c.name), check_circloid_fixture(fx, c));
    }
    for r in &fx.derived.ranks {
        s.record(
            format!("fixture:{}", r.file),
            fx.file(&r.file).and_then(torus).and_then(|t| {
                let got = torus_essentiality_rank(&t, 0)?;
                if got.rank != r.rank {
                    return Err(fail(format!("rank {} but fixture says {}", got.rank, r.rank)));
                }
                Ok(format!("rank {}", got.rank))
            }),
        );
    }
    let d = &fx.derived.dehn_return;
    s.record("derived:dehn_return", {
        let lift = make_dehn_family(d.m, d.alpha);
        TorusRaster::disk(d.grid, d.center, d.radius)
            .and_then(|u| crate::raster::find_essential_return(&lift, &u, 20))
            .and_then(|n| if n == d.n { Ok(format!("{n:?}")) } else { Err(fail(format!("{n:?} but fixture says {:?}", d.n))) })
    });
    let k = &fx.derived.skew_deviation;
    s.record("derived:skew_deviation", {
        let lift = make_skew(k.alpha, TrigPoly::sine(k.amp, 1));
        crate::rotation::deviation_bound(&lift, IntVec2::E2, 0.0, k.n, k.grid).and_then(|v| {
            if (v - k.sup).abs() <= 1e-9 {
                Ok(format!("{v}"))
            } else {
                Err(fail(format!("{v} but fixture says {}", k.sup)))
            }
        })
    });
    s.record("jordan_curve", {
        let ring = TorusRaster::from_fn(64, |x, y| {
            let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
            (r - 0.25).abs() < 0.03
        });
        ring.map(|r| crate::raster::torus_components(&r.complement(), Connectivity::Eight).count).and_then(|n| {
            if n == 2 {
                Ok("2 complement components".into())
            } else {
                Err(fail(format!("{n} complement components")))
            }
        })
    });
    for i in 0..50u64 {
        s.record(format!("random:{i}"), check_random_fixture(seed.wrapping_add(i)));
    }
    let pairs = random_ordered_pairs(seed, 100);
    let violations = pairs
        .iter()
        .filter(|(c, d)| !matches!(gap_region(c, d), Ok(g) if !g.is_empty()))
        .count();
    s.record(
        "space_between",
        if violations == 0 { Ok(format!("{} pairs", pairs.len())) } else { Err(fail(format!("{violations} empty gaps"))) },
    );
    SelftestReport { seed, checks: s.checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fixtures_are_essential_and_deterministic() {
        for s in 0..10 {
            let a = random_essential(s);
            assert_eq!(a, random_essential(s));
            assert!(unbounded_components(&a).unwrap().essential, "seed {s}");
        }
    }

    #[test]
    fn embedded_fixtures_match_regeneration() {
        assert_eq!(Fixtures::embedded().unwrap(), regenerate());
    }

    #[test]
    fn embedded_selftest_passes() {
        let r = run_selftest(&Fixtures::embedded().unwrap(), 0);
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn corrupted_fixture_is_named() {
        let mut fx = Fixtures::embedded().unwrap();
        let text = fx.files.get_mut("circloid_02_expected.pgm").unwrap();
        let k = text.find(" 255").unwrap();
        text.replace_range(k..k + 4, " 0  ");
        let r = run_selftest(&fx, 0);
        assert_eq!(r.first_failure().unwrap().name, "fixture:circloid_02");
    }
}

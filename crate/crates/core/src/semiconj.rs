//! Circle factor of a torus map with bounded deviations in direction `(1, 0)`.
//!
//! `A_r` is the union of `F̂ⁿ({r - nα} × T¹)` over `|n| <= N`, `C_r = C⁺(A_r)`
//! and `H(z) = sup{ r : z ∈ U⁺(C_r) }`, with the supremum taken over the
//! grid `r_k + m`, `m ∈ ℤ`, using `C_{r+1} = C_r + (1, 0)`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifts::{complementary_vector, conjugate_by_matrix, sample_points, DeckMatrix, IntVec2, Lift, Vec2};
use crate::raster::{circloid_plus, order_compare, unbounded_components, write_pgm_annulus, AnnulusRaster, Circloid, Order};
use crate::rotation::deviation_bound;
use crate::scalar::{circle_distance, frac, Scalar};

/// Conjugates `lift` by a unimodular `A` whose inverse has first row `v`,
/// so that `<Gⁿ(z) - z, (1, 0)> = <Fⁿ(Az) - Az, v>`.
pub fn normalize_direction<T: Scalar>(lift: &Lift<T>, v: IntVec2) -> Result<(Lift<T>, DeckMatrix)> {
    let w = -complementary_vector(v)?;
    let a_inv = DeckMatrix::new(v.p, v.q, w.p, w.q);
    let a = a_inv.inverse()?;
    Ok((conjugate_by_matrix(lift, a)?, a))
}

/// Shared window of a circloid family. Cell centers sit on multiples of
/// `dx = 1 / cells_per_unit`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowGeometry {
    pub cells_per_unit: usize,
    pub ny: usize,
    /// Columns of margin on each side of `[0, 1]`.
    pub margin: usize,
}

impl WindowGeometry {
    /// Window covering `[-halfwidth, 1 + halfwidth]` plus two spare columns per side.
    pub fn new(cells_per_unit: usize, ny: usize, halfwidth: f64) -> Result<Self> {
        if cells_per_unit == 0 || ny == 0 || !(halfwidth >= 0.0) || !halfwidth.is_finite() {
            return Err(Error::InvalidArgument("bad window geometry".into()));
        }
        let dx = 1.0 / cells_per_unit as f64;
        let margin = (halfwidth / dx).ceil() as usize + 2;
        Ok(WindowGeometry { cells_per_unit, ny, margin })
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.cells_per_unit as f64
    }

    pub fn x0(&self) -> f64 {
        -(self.margin as f64 + 0.5) * self.dx()
    }

    pub fn nx(&self) -> usize {
        self.cells_per_unit + 2 * self.margin + 1
    }

    pub fn x1(&self) -> f64 {
        self.x0() + self.nx() as f64 * self.dx()
    }

    pub fn empty(&self) -> AnnulusRaster {
        AnnulusRaster::new(self.x0(), self.x1(), self.nx(), self.ny).expect("valid geometry")
    }
}

/// Rasterizes `A_r`. Each circle is sampled at `4 ny + 1` points joined by
/// 4-connected segments.
pub fn build_a_r<T: Scalar>(lift: &Lift<T>, alpha: f64, r: f64, trunc_n: usize, geom: &WindowGeometry) -> Result<AnnulusRaster> {
    if !lift.deck.is_identity() {
        return Err(Error::NonIdentityDeck);
    }
    let mut a = geom.empty();
    let m = 4 * geom.ny;
    let n = trunc_n as i64;
    let mut pts = Vec::with_capacity(m + 1);
    for k in -n..=n {
        pts.clear();
        let x = T::of(r - k as f64 * alpha);
        for i in 0..=m {
            let z = Vec2::new(x, T::ratio(i as i64, m as i64));
            let p = lift.iterate(z, k).to_f64();
            pts.push((p.x, p.y));
        }
        a.draw_polyline(&pts).map_err(|e| match e {
            Error::WindowTooSmall(_) => Error::WindowTooSmall(format!(
                "image of the circle x = {:.6} under F^{k} leaves the window; deviation bound exceeded",
                r - k as f64 * alpha
            )),
            e => e,
        })?;
    }
    if !unbounded_components(&a)?.essential {
        return Err(Error::Inessential(format!("A_r at r = {r} does not separate the annulus")));
    }
    Ok(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub r_count: usize,
    pub cells_per_unit: usize,
    pub ny: usize,
    pub trunc_n: usize,
    /// Overrides the measured `C + 4 dx`.
    pub halfwidth: Option<f64>,
    /// Grid used to measure the deviation bound.
    pub deviation_grid: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            r_count: 64,
            cells_per_unit: 256,
            ny: 256,
            trunc_n: 50,
            halfwidth: None,
            deviation_grid: 32,
        }
    }
}

/// `{C_r}` on a uniform `r`-grid, together with `C_1`, in one shared window.
#[derive(Clone, Debug)]
pub struct CircloidFamily {
    pub alpha: f64,
    pub v: IntVec2,
    pub r_grid: Vec<f64>,
    pub circloids: Vec<Circloid>,
    /// `C_1`, built directly; compared against `C_0 + (1, 0)`.
    pub unit: Circloid,
    pub trunc_n: usize,
    pub window_halfwidth: f64,
    pub geometry: WindowGeometry,
    pub deviation_c: f64,
    /// x-extent of each `A_r`, between extreme cell centers.
    pub a_widths: Vec<f64>,
    /// Largest `|x - r|` over cell centers of each `A_r`.
    pub a_reach: Vec<f64>,
    pub insufficient_truncation: bool,
    /// Cells where `C_1` and `C_0 + (1, 0)` differ.
    pub translation_mismatch: usize,
}

fn a_extent(a: &AnnulusRaster, r: f64) -> (f64, f64) {
    a.column_span().map_or((0.0, 0.0), |(lo, hi)| {
        let (xl, _) = a.cell_center(lo, 0);
        let (xh, _) = a.cell_center(hi, 0);
        (xh - xl, (r - xl).max(xh - r))
    })
}

/// Builds `C_r = C⁺(A_r)` for `r = k / r_count`.
pub fn build_circloid_family<T: Scalar>(lift: &Lift<T>, alpha: f64, params: &FamilyParams) -> Result<CircloidFamily> {
    if params.r_count == 0 || params.cells_per_unit % params.r_count != 0 {
        return Err(Error::InvalidArgument(format!(
            "cells_per_unit ({}) must be a positive multiple of r_count ({})",
            params.cells_per_unit, params.r_count
        )));
    }
    if !lift.deck.is_identity() {
        return Err(Error::NonIdentityDeck);
    }
    let c = deviation_bound(lift, IntVec2::E1, T::of(alpha), params.trunc_n.max(1), params.deviation_grid)?.f64();
    let c_ref = deviation_bound(lift, IntVec2::E1, T::of(alpha), params.trunc_n.max(50), params.deviation_grid)?.f64();
    let dx = 1.0 / params.cells_per_unit as f64;
    let hw = params.halfwidth.unwrap_or(c + 4.0 * dx);
    let geom = WindowGeometry::new(params.cells_per_unit, params.ny, hw)?;
    let r_grid: Vec<f64> = (0..params.r_count).map(|k| k as f64 / params.r_count as f64).collect();
    let rs: Vec<f64> = r_grid.iter().copied().chain(std::iter::once(1.0)).collect();
    let built: Vec<(Circloid, (f64, f64))> = rs
        .par_iter()
        .map(|&r| {
            let a = build_a_r(lift, alpha, r, params.trunc_n, &geom)?;
            let w = a_extent(&a, r);
            let mut c = circloid_plus(&a)?;
            c.meta.source = format!("C_r r={r}");
            Ok((c, w))
        })
        .collect::<Result<_>>()?;
    let (mut circloids, extents): (Vec<Circloid>, Vec<(f64, f64)>) = built.into_iter().unzip();
    let unit = circloids.pop().expect("r = 1 entry");
    let (mut a_widths, mut a_reach): (Vec<f64>, Vec<f64>) = extents.into_iter().unzip();
    a_widths.pop();
    a_reach.pop();
    let translation_mismatch = match circloids[0].raster.shift_columns(params.cells_per_unit as i64) {
        Ok(s) => s.cells().iter().zip(unit.raster.cells()).filter(|(a, b)| a != b).count(),
        Err(_) => unit.raster.count().max(1),
    };
    let max_reach = a_reach.iter().cloned().fold(0.0, f64::max);
    Ok(CircloidFamily {
        alpha,
        v: IntVec2::E1,
        r_grid,
        circloids,
        unit,
        trunc_n: params.trunc_n,
        window_halfwidth: hw,
        geometry: geom,
        deviation_c: c,
        a_widths,
        a_reach,
        insufficient_truncation: max_reach < c_ref - 2.0 * dx,
        translation_mismatch,
    })
}

impl CircloidFamily {
    /// `H(x, y)` for `x ∈ [0, 1)`: max of `r_k + m` over `(x - m, y) ∈ U⁺(C_{r_k})`.
    fn h_reduced(&self, xf: f64, y: f64) -> f64 {
        let (x0, x1) = (self.geometry.x0(), self.geometry.x1());
        let m_lo = (xf - x1).floor() as i64;
        let m_hi = (xf - x0).ceil() as i64;
        let last = *self.r_grid.last().expect("nonempty grid");
        let mut best = f64::NEG_INFINITY;
        for m in m_lo..=m_hi {
            let p = xf - m as f64;
            if p < x0 {
                continue;
            }
            if p >= x1 {
                best = best.max(last + m as f64);
                continue;
            }
            let Some((i, j)) = self.circloids[0].raster.cell_of(p, y) else {
                continue;
            };
            for (k, c) in self.circloids.iter().enumerate().rev() {
                let cand = self.r_grid[k] + m as f64;
                if cand <= best {
                    break;
                }
                if c.uplus().get(i, j) {
                    best = cand;
                    break;
                }
            }
        }
        best
    }

    /// `H(z)`; the integer part of `z.x` is split off first, so that
    /// `H(z + (1, 0)) = H(z) + 1` holds exactly on the grid of values.
    pub fn evaluate_h(&self, z: Vec2<f64>) -> Result<f64> {
        if !z.x.is_finite() || !z.y.is_finite() {
            return Err(Error::OutsideWindows((z.x, z.y)));
        }
        let f = z.x.floor();
        let h = self.h_reduced(z.x - f, z.y);
        if !h.is_finite() {
            return Err(Error::OutsideWindows((z.x, z.y)));
        }
        Ok(f + h)
    }

    /// Pairs `(r, s)`, `r < s`, whose circloid order is not `≼`.
    pub fn monotonicity_violations(&self) -> Vec<(f64, f64)> {
        let n = self.circloids.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        pairs
            .par_iter()
            .filter(|&&(i, j)| {
                !matches!(
                    order_compare(&self.circloids[i], &self.circloids[j]),
                    Ok(Order::StrictlyLess | Order::LessEqual | Order::Equal)
                )
            })
            .map(|&(i, j)| (self.r_grid[i], self.r_grid[j]))
            .collect()
    }

    /// Pairs with overlapping circloids, including each `C_r` against `C_1`.
    pub fn disjointness_report(&self) -> Vec<(f64, f64)> {
        let n = self.circloids.len();
        let all: Vec<(&Circloid, f64)> = self
            .circloids
            .iter()
            .zip(self.r_grid.iter().copied())
            .chain(std::iter::once((&self.unit, 1.0)))
            .collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).filter(|&(i, j)| !(i == 0 && j == n)).collect();
        pairs
            .par_iter()
            .filter(|&&(i, j)| {
                all[i]
                    .0
                    .raster
                    .cells()
                    .iter()
                    .zip(all[j].0.raster.cells())
                    .any(|(a, b)| *a && *b)
            })
            .map(|&(i, j)| (all[i].1, all[j].1))
            .collect()
    }

    /// `circloid_NNN.pgm` per `r` and an `index.json`, as `(name, contents)`.
    pub fn export_files(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let mut files = Vec::new();
        for (k, c) in self.circloids.iter().enumerate() {
            let name = format!("circloid_{k:03}.pgm");
            out.push((name.clone(), write_pgm_annulus(&c.raster)));
            files.push(name);
        }
        let index = serde_json::json!({
            "alpha": self.alpha,
            "v": self.v,
            "trunc_n": self.trunc_n,
            "window": [self.geometry.x0(), self.geometry.x1()],
            "window_halfwidth": self.window_halfwidth,
            "r_grid": self.r_grid,
            "files": files,
        });
        out.push(("index.json".into(), serde_json::to_string_pretty(&index)? + "\n"));
        Ok(out)
    }

    /// Writes [`export_files`](Self::export_files) into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in self.export_files()? {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiconjVerification {
    pub n_samples: usize,
    /// Max over samples of the circle distance between `H(F(z))` and `H(z) + α`.
    pub equivariance_error: f64,
    pub monotonicity_violations: Vec<(f64, f64)>,
    pub disjointness_report: Vec<(f64, f64)>,
}

pub fn verify_semiconjugacy<T: Scalar>(family: &CircloidFamily, lift: &Lift<T>, n_samples: usize) -> Result<SemiconjVerification> {
    let pts = sample_points(n_samples, 0xfac7);
    let errs: Vec<f64> = pts
        .par_iter()
        .map(|&z| {
            let fz = lift.forward(Vec2::<T>::from_f64(z)).to_f64();
            Ok(circle_distance(family.evaluate_h(fz)?, family.evaluate_h(z)? + family.alpha))
        })
        .collect::<Result<_>>()?;
    Ok(SemiconjVerification {
        n_samples,
        equivariance_error: errs.into_iter().fold(0.0, f64::max),
        monotonicity_violations: family.monotonicity_violations(),
        disjointness_report: family.disjointness_report(),
    })
}

/// Circle-valued `h` sampled at `(i/n, j/n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Semiconjugacy {
    pub n: usize,
    /// `h(i/n, j/n)` at index `i * n + j`, in `[0, 1)`.
    pub h_values: Vec<f64>,
    pub alpha: f64,
    pub k: u32,
    pub v: IntVec2,
    /// Max over the grid of the circle distance between `h(F(z))`, read at
    /// the nearest grid point, and `h(z) + kα`.
    pub equivariance_error: f64,
    /// Largest circle distance between 4-adjacent samples.
    pub modulus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiconjSummary {
    pub alpha: f64,
    pub k: u32,
    pub v: IntVec2,
    pub equivariance_error: f64,
    pub modulus: f64,
    pub disjoint: bool,
}

impl Semiconjugacy {
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.h_values[i * self.n + j]
    }

    /// Sample nearest to a point of the torus.
    pub fn h_nearest(&self, z: Vec2<f64>) -> f64 {
        let n = self.n as f64;
        let i = ((frac(z.x) * n).round() as usize) % self.n;
        let j = ((frac(z.y) * n).round() as usize) % self.n;
        self.h(i, j)
    }

    pub fn recompute_equivariance<T: Scalar>(&self, lift: &Lift<T>) -> f64 {
        let n = self.n;
        let shift = self.k as f64 * self.alpha;
        (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let z = Vec2::new((idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64);
                let fz = lift.forward(Vec2::<T>::from_f64(z)).to_f64();
                circle_distance(self.h_nearest(fz), self.h_values[idx] + shift)
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn compute_modulus(&self) -> f64 {
        let n = self.n;
        (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let a = self.h_values[idx];
                circle_distance(a, self.h((i + 1) % n, j)).max(circle_distance(a, self.h(i, (j + 1) % n)))
            })
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> SemiconjSummary {
        SemiconjSummary {
            alpha: self.alpha,
            k: self.k,
            v: self.v,
            equivariance_error: self.equivariance_error,
            modulus: self.modulus,
            disjoint: true,
        }
    }

    /// `x,y,h` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,h\n");
        let n = self.n as f64;
        for i in 0..self.n {
            for j in 0..self.n {
                out.push_str(&format!("{},{},{}\n", i as f64 / n, j as f64 / n, self.h(i, j)));
            }
        }
        out
    }
}

/// Projects `H` to `h: T² → T¹`, followed by `τ(x) = kx mod 1`.
///
/// Refuses when any pair of circloids overlaps.
pub fn project_h<T: Scalar>(family: &CircloidFamily, lift: &Lift<T>, grid_n: usize, k: u32) -> Result<Semiconjugacy> {
    let overlaps = family.disjointness_report();
    if !overlaps.is_empty() {
        return Err(Error::ProjectionRefused(overlaps.len()));
    }
    project_h_unchecked(family, lift, grid_n, k)
}

/// [`project_h`] without the disjointness gate, for inspecting failed families.
pub fn project_h_unchecked<T: Scalar>(family: &CircloidFamily, lift: &Lift<T>, grid_n: usize, k: u32) -> Result<Semiconjugacy> {
    if grid_n == 0 || k == 0 {
        return Err(Error::InvalidArgument("grid_n and k must be positive".into()));
    }
    let n = grid_n;
    let h_values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let z = Vec2::new((idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64);
            family.evaluate_h(z).map(|h| frac(k as f64 * h))
        })
        .collect::<Result<_>>()?;
    let mut s = Semiconjugacy {
        n,
        h_values,
        alpha: family.alpha,
        k,
        v: family.v,
        equivariance_error: 0.0,
        modulus: 0.0,
    };
    s.equivariance_error = s.recompute_equivariance(lift);
    s.modulus = s.compute_modulus();
    Ok(s)
}

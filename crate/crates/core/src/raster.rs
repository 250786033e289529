//! Raster topology on the annulus `ℝ × T¹` and on the torus.
//!
//! Sets are 4-connected and complements 8-connected throughout. The boundary
//! `∂S` of a raster set is the set of complement cells 8-adjacent to `S`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifts::{IntVec2, Lift, Vec2};
use crate::rotation::{geometric_ladder, homotopy_class, HomotopyClass};
use crate::scalar::{frac, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

const N4: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        }
    }
}

/// Boolean raster on `[x0, x1) × T¹`. Cell `(i, j)` covers
/// `[x0 + i dx, x0 + (i+1) dx) × [j dy, (j+1) dy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusRaster {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub ny: usize,
    cells: Vec<bool>,
}

impl AnnulusRaster {
    pub fn new(x0: f64, x1: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x0 < x1) || nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad annulus window [{x0}, {x1}) with {nx}x{ny} cells"
            )));
        }
        Ok(AnnulusRaster { x0, x1, nx, ny, cells: vec![false; nx * ny] })
    }

    /// Raster whose cells are set where `f` holds at the cell center.
    pub fn from_fn(x0: f64, x1: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> bool) -> Result<Self> {
        let mut r = Self::new(x0, x1, nx, ny)?;
        for i in 0..nx {
            for j in 0..ny {
                let (x, y) = r.cell_center(i, j);
                r.cells[i * ny + j] = f(x, y);
            }
        }
        Ok(r)
    }

    pub fn from_cells(x0: f64, x1: f64, nx: usize, ny: usize, cells: Vec<bool>) -> Result<Self> {
        let mut r = Self::new(x0, x1, nx, ny)?;
        if cells.len() != nx * ny {
            return Err(Error::InvalidArgument(format!("expected {} cells, got {}", nx * ny, cells.len())));
        }
        r.cells = cells;
        Ok(r)
    }

    pub fn empty_like(&self) -> Self {
        AnnulusRaster { cells: vec![false; self.cells.len()], ..*self }
    }

    fn with_cells(&self, cells: Vec<bool>) -> Self {
        AnnulusRaster { cells, ..*self }
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.ny + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let k = i * self.ny + j;
        self.cells[k] = v;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + (i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy())
    }

    /// Cell containing `(x, y)`; `y` is reduced mod 1, `x` must lie in the window.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.x0) / self.dx()).floor();
        if !(fi >= 0.0 && fi < self.nx as f64) {
            return None;
        }
        let j = ((frac(y) * self.ny as f64).floor() as usize).min(self.ny - 1);
        Some((fi as usize, j))
    }

    pub fn same_geometry(&self, o: &AnnulusRaster) -> bool {
        self.nx == o.nx && self.ny == o.ny && self.x0 == o.x0 && self.x1 == o.x1
    }

    fn check_geometry(&self, o: &AnnulusRaster) -> Result<()> {
        if self.same_geometry(o) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    pub fn touches_walls(&self) -> bool {
        (0..self.ny).any(|j| self.get(0, j) || self.get(self.nx - 1, j))
    }

    /// Columns holding at least one set cell, as `(first, last)`.
    pub fn column_span(&self) -> Option<(usize, usize)> {
        let cols: Vec<usize> = (0..self.nx).filter(|&i| (0..self.ny).any(|j| self.get(i, j))).collect();
        Some((*cols.first()?, *cols.last()?))
    }

    pub fn union(&self, o: &AnnulusRaster) -> Result<Self> {
        self.check_geometry(o)?;
        Ok(self.with_cells(self.cells.iter().zip(&o.cells).map(|(a, b)| *a || *b).collect()))
    }

    pub fn intersection(&self, o: &AnnulusRaster) -> Result<Self> {
        self.check_geometry(o)?;
        Ok(self.with_cells(self.cells.iter().zip(&o.cells).map(|(a, b)| *a && *b).collect()))
    }

    pub fn complement(&self) -> Self {
        self.with_cells(self.cells.iter().map(|c| !c).collect())
    }

    pub fn is_subset_of(&self, o: &AnnulusRaster) -> Result<bool> {
        self.check_geometry(o)?;
        Ok(self.cells.iter().zip(&o.cells).all(|(a, b)| !a || *b))
    }

    /// Shifts by `k` columns. Fails if a set cell would leave the window.
    pub fn shift_columns(&self, k: i64) -> Result<Self> {
        let mut out = self.empty_like();
        for i in 0..self.nx {
            for j in 0..self.ny {
                if self.get(i, j) {
                    let ni = i as i64 + k;
                    if ni < 0 || ni >= self.nx as i64 {
                        return Err(Error::WindowTooSmall(format!("shift by {k} columns leaves the window")));
                    }
                    out.set(ni as usize, j, true);
                }
            }
        }
        Ok(out)
    }

    /// Set cells together with their 8-neighbours.
    pub fn dilate8(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.nx {
            for j in 0..self.ny {
                if self.get(i, j) {
                    self.for_each_neighbor(i * self.ny + j, Connectivity::Eight, |k| out.cells[k] = true);
                }
            }
        }
        out
    }

    /// Sets every cell met by the segment, adding corner cells so the trace
    /// is 4-connected. Points are in lifted coordinates; `y` wraps.
    pub fn draw_segment(&mut self, a: (f64, f64), b: (f64, f64)) -> Result<()> {
        let (dx, dy) = (self.dx(), self.dy());
        let ga = ((a.0 - self.x0) / dx, a.1 / dy);
        let gb = ((b.0 - self.x0) / dx, b.1 / dy);
        let mut ci = ga.0.floor() as i64;
        let mut cj = ga.1.floor() as i64;
        let ei = gb.0.floor() as i64;
        let ej = gb.1.floor() as i64;
        let (sx, sy) = ((gb.0 - ga.0), (gb.1 - ga.1));
        let step_i = if sx > 0.0 { 1 } else { -1 };
        let step_j = if sy > 0.0 { 1 } else { -1 };
        let t_next = |g: f64, c: i64, s: f64, step: i64| -> f64 {
            if s == 0.0 {
                f64::INFINITY
            } else {
                let edge = if step > 0 { c as f64 + 1.0 } else { c as f64 };
                (edge - g) / s
            }
        };
        let mut tx = t_next(ga.0, ci, sx, step_i);
        let mut ty = t_next(ga.1, cj, sy, step_j);
        let dtx = if sx == 0.0 { f64::INFINITY } else { 1.0 / sx.abs() };
        let dty = if sy == 0.0 { f64::INFINITY } else { 1.0 / sy.abs() };
        self.mark_lifted(ci, cj)?;
        let max_steps = (ei - ci).unsigned_abs() + (ej - cj).unsigned_abs();
        for _ in 0..max_steps {
            if ci == ei && cj == ej {
                break;
            }
            if tx <= ty {
                ci += step_i;
                tx += dtx;
            } else {
                cj += step_j;
                ty += dty;
            }
            self.mark_lifted(ci, cj)?;
        }
        Ok(())
    }

    /// Closed polyline through the given points, each segment traced by
    /// [`draw_segment`](Self::draw_segment).
    pub fn draw_polyline(&mut self, pts: &[(f64, f64)]) -> Result<()> {
        for w in pts.windows(2) {
            self.draw_segment(w[0], w[1])?;
        }
        Ok(())
    }

    /// 4-connected trace of the graph `x = g(y)`, `y ∈ [0, 1]`, sampled at
    /// four points per row.
    pub fn trace_graph(&mut self, g: impl Fn(f64) -> f64) -> Result<()> {
        let m = 4 * self.ny;
        let pts: Vec<(f64, f64)> = (0..=m)
            .map(|k| {
                let y = k as f64 / m as f64;
                (g(y), y)
            })
            .collect();
        self.draw_polyline(&pts)
    }

    fn mark_lifted(&mut self, i: i64, j: i64) -> Result<()> {
        if i < 0 || i >= self.nx as i64 {
            return Err(Error::WindowTooSmall(format!("column {i} outside [0, {})", self.nx)));
        }
        let j = j.rem_euclid(self.ny as i64) as usize;
        self.set(i as usize, j, true);
        Ok(())
    }

    fn for_each_neighbor(&self, k: usize, conn: Connectivity, mut f: impl FnMut(usize)) {
        let (i, j) = ((k / self.ny) as i64, (k % self.ny) as i64);
        for &(di, dj) in conn.offsets() {
            let ni = i + di;
            if ni < 0 || ni >= self.nx as i64 {
                continue;
            }
            let nj = (j + dj).rem_euclid(self.ny as i64);
            f(ni as usize * self.ny + nj as usize);
        }
    }
}

/// Boolean raster on the torus, `n × n`, both directions periodic.
/// Cell `(i, j)` covers `[i/n, (i+1)/n) × [j/n, (j+1)/n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusRaster {
    pub n: usize,
    cells: Vec<bool>,
}

impl TorusRaster {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("torus raster needs n >= 1".into()));
        }
        Ok(TorusRaster { n, cells: vec![false; n * n] })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> bool) -> Result<Self> {
        let mut r = Self::new(n)?;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = r.cell_center(i, j);
                r.cells[i * n + j] = f(x, y);
            }
        }
        Ok(r)
    }

    pub fn from_cells(n: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != n * n || n == 0 {
            return Err(Error::InvalidArgument(format!("expected {} cells, got {}", n * n, cells.len())));
        }
        Ok(TorusRaster { n, cells })
    }

    /// Open disk of the given radius in the flat metric, centered at `c`.
    pub fn disk(n: usize, c: (f64, f64), radius: f64) -> Result<Self> {
        Self::from_fn(n, |x, y| {
            let dx = crate::scalar::circle_distance(x, c.0);
            let dy = crate::scalar::circle_distance(y, c.1);
            dx * dx + dy * dy < radius * radius
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let k = i * self.n + j;
        self.cells[k] = v;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = 1.0 / self.n as f64;
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let n = self.n as f64;
        (
            ((frac(x) * n).floor() as usize).min(self.n - 1),
            ((frac(y) * n).floor() as usize).min(self.n - 1),
        )
    }

    pub fn complement(&self) -> Self {
        TorusRaster { n: self.n, cells: self.cells.iter().map(|c| !c).collect() }
    }

    pub fn union(&self, o: &TorusRaster) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::GeometryMismatch);
        }
        Ok(TorusRaster { n: self.n, cells: self.cells.iter().zip(&o.cells).map(|(a, b)| *a || *b).collect() })
    }

    /// Neighbour index together with the lattice translation picked up by
    /// crossing the fundamental-domain edge.
    fn for_each_neighbor(&self, k: usize, conn: Connectivity, mut f: impl FnMut(usize, (i64, i64))) {
        let n = self.n as i64;
        let (i, j) = ((k / self.n) as i64, (k % self.n) as i64);
        for &(di, dj) in conn.offsets() {
            let (ni, nj) = (i + di, j + dj);
            let wrap = (ni.div_euclid(n), nj.div_euclid(n));
            f((ni.rem_euclid(n) * n + nj.rem_euclid(n)) as usize, wrap);
        }
    }
}

/// Component labelling: `labels[k]` is the component of cell `k`, if set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<Option<u32>>,
    pub count: usize,
}

impl Components {
    /// Cells of one component.
    pub fn members(&self, label: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&k| self.labels[k] == Some(label as u32)).collect()
    }
}

fn label_mask(len: usize, mask: impl Fn(usize) -> bool, neighbors: impl Fn(usize, &mut Vec<usize>)) -> Components {
    let mut labels = vec![None; len];
    let mut count = 0u32;
    let mut stack = Vec::new();
    let mut nb = Vec::with_capacity(8);
    for start in 0..len {
        if !mask(start) || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(count);
        stack.push(start);
        while let Some(k) = stack.pop() {
            nb.clear();
            neighbors(k, &mut nb);
            for &m in &nb {
                if mask(m) && labels[m].is_none() {
                    labels[m] = Some(count);
                    stack.push(m);
                }
            }
        }
        count += 1;
    }
    Components { labels, count: count as usize }
}

/// Connected components of the set cells of an annulus raster.
pub fn components(r: &AnnulusRaster, conn: Connectivity) -> Components {
    label_mask(r.cells.len(), |k| r.cells[k], |k, out| r.for_each_neighbor(k, conn, |m| out.push(m)))
}

/// Connected components of the set cells of a torus raster.
pub fn torus_components(r: &TorusRaster, conn: Connectivity) -> Components {
    label_mask(r.cells.len(), |k| r.cells[k], |k, out| r.for_each_neighbor(k, conn, |m, _| out.push(m)))
}

/// Complement components of an annulus raster touching the left and right walls.
#[derive(Clone, Debug, PartialEq)]
pub struct Unbounded {
    pub minus: AnnulusRaster,
    pub plus: AnnulusRaster,
    /// Complement cells in no unbounded component.
    pub bounded: AnnulusRaster,
    /// `false` when a single complement component touches both walls.
    pub essential: bool,
}

/// `U⁻(A)` and `U⁺(A)`: complement components (8-connected) meeting
/// column `0` and column `nx - 1`.
pub fn unbounded_components(a: &AnnulusRaster) -> Result<Unbounded> {
    if a.nx < 3 {
        return Err(Error::WindowTooSmall(format!("need at least 3 columns, have {}", a.nx)));
    }
    if a.touches_walls() {
        return Err(Error::WindowTooSmall("set touches the window walls".into()));
    }
    let comp = components(&a.complement(), Connectivity::Eight);
    let left = comp.labels[a.idx(0, 0)];
    let right = comp.labels[a.idx(a.nx - 1, 0)];
    let pick = |l| a.with_cells(comp.labels.iter().map(|&c| c == l).collect());
    let minus = pick(left);
    let plus = pick(right);
    let bounded = a.with_cells(
        comp.labels
            .iter()
            .map(|&c| c.is_some() && c != left && c != right)
            .collect(),
    );
    Ok(Unbounded { minus, plus, bounded, essential: left != right })
}

/// `∂S`: cells outside `S` that are 8-adjacent to `S`.
pub fn boundary(s: &AnnulusRaster) -> AnnulusRaster {
    let mut out = s.empty_like();
    for k in 0..s.cells.len() {
        if s.cells[k] {
            s.for_each_neighbor(k, Connectivity::Eight, |m| {
                if !s.cells[m] {
                    out.cells[m] = true;
                }
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircloidMeta {
    pub source: String,
    pub window: (f64, f64),
    pub essential: bool,
}

/// Raster circloid with its two complementary components.
#[derive(Clone, Debug, PartialEq)]
pub struct Circloid {
    pub raster: AnnulusRaster,
    pub meta: CircloidMeta,
    uminus: AnnulusRaster,
    uplus: AnnulusRaster,
}

impl Circloid {
    /// Wraps an arbitrary essential raster, computing `U^±` directly.
    pub fn from_raster(raster: AnnulusRaster, source: impl Into<String>) -> Result<Self> {
        let u = unbounded_components(&raster)?;
        if !u.essential {
            return Err(Error::Inessential("complement has one unbounded component".into()));
        }
        Ok(Circloid {
            meta: CircloidMeta { source: source.into(), window: (raster.x0, raster.x1), essential: true },
            raster,
            uminus: u.minus,
            uplus: u.plus,
        })
    }

    pub fn uplus(&self) -> &AnnulusRaster {
        &self.uplus
    }

    pub fn uminus(&self) -> &AnnulusRaster {
        &self.uminus
    }

    /// Two distinct unbounded complement components and idempotence of `C⁺`.
    pub fn check_invariants(&self) -> Result<()> {
        let u = unbounded_components(&self.raster)?;
        if !u.essential {
            return Err(Error::Inessential("circloid complement has one unbounded component".into()));
        }
        let again = circloid_plus(&self.raster)?;
        if again.raster != self.raster {
            return Err(Error::Precondition("circloid extraction is not idempotent".into()));
        }
        Ok(())
    }
}

/// `C⁺(A) = window ∖ (U^{+-}(A) ∪ U^{+-+}(A))`.
pub fn circloid_plus(a: &AnnulusRaster) -> Result<Circloid> {
    let u = unbounded_components(a)?;
    if !u.essential {
        return Err(Error::Inessential("complement has one unbounded component".into()));
    }
    let upm = unbounded_components(&boundary(&u.plus))?.minus;
    let upmp = unbounded_components(&boundary(&upm))?.plus;
    let c = upm.union(&upmp)?.complement();
    Ok(Circloid {
        meta: CircloidMeta { source: "circloid_plus".into(), window: (a.x0, a.x1), essential: true },
        raster: c,
        uminus: upm,
        uplus: upmp,
    })
}

/// `C⁻(A) = window ∖ (U^{-+}(A) ∪ U^{-+-}(A))`.
pub fn circloid_minus(a: &AnnulusRaster) -> Result<Circloid> {
    let u = unbounded_components(a)?;
    if !u.essential {
        return Err(Error::Inessential("complement has one unbounded component".into()));
    }
    let ump = unbounded_components(&boundary(&u.minus))?.plus;
    let umpm = unbounded_components(&boundary(&ump))?.minus;
    let c = ump.union(&umpm)?.complement();
    Ok(Circloid {
        meta: CircloidMeta { source: "circloid_minus".into(), window: (a.x0, a.x1), essential: true },
        raster: c,
        uminus: umpm,
        uplus: ump,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    StrictlyLess,
    LessEqual,
    Equal,
    Incomparable,
}

pub fn order_compare(c: &Circloid, c2: &Circloid) -> Result<Order> {
    c.raster.check_geometry(&c2.raster)?;
    if c.raster.cells == c2.raster.cells {
        return Ok(Order::Equal);
    }
    let mut le = true;
    let mut lt = true;
    for (k, &on) in c2.raster.cells.iter().enumerate() {
        if on {
            let up = c.uplus.cells[k];
            lt &= up;
            le &= up || c.raster.cells[k];
        }
    }
    Ok(if lt {
        Order::StrictlyLess
    } else if le {
        Order::LessEqual
    } else {
        Order::Incomparable
    })
}

/// `(C, C') = U⁺(C) ∩ U⁻(C')`.
///
/// Distinct ordered circloids whose cells are not all within one cell of
/// `C` must have a nonempty gap; pairs closer than that are below raster
/// resolution and are exempt.
pub fn gap_region(c: &Circloid, c2: &Circloid) -> Result<AnnulusRaster> {
    let order = order_compare(c, c2)?;
    if order == Order::Incomparable {
        return Err(Error::Incomparable);
    }
    let gap = c.uplus.intersection(&c2.uminus)?;
    if order != Order::Equal && gap.is_empty() && is_resolved_pair(c, c2)? {
        return Err(Error::SpaceBetweenViolated);
    }
    Ok(gap)
}

/// `C'` is not contained in the 8-dilation of `C`.
pub fn is_resolved_pair(c: &Circloid, c2: &Circloid) -> Result<bool> {
    Ok(!c2.raster.is_subset_of(&c.raster.dilate8())?)
}

/// Rank of the image of `π₁(component) → ℤ²`, with a reduced basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EssentialityRank {
    pub rank: u8,
    pub generators: Vec<IntVec2>,
}

/// Integer lattice in Hermite normal form, rows `(a, b)` and `(0, c)`.
#[derive(Clone, Copy, Debug, Default)]
struct Lattice {
    a: i64,
    b: i64,
    c: i64,
}

impl Lattice {
    fn add(&mut self, p: i64, q: i64) {
        use num_integer::Integer;
        if p == 0 {
            self.c = self.c.gcd(&q);
        } else if self.a == 0 {
            let rest = self.c;
            *self = Lattice { a: p.abs(), b: q * p.signum(), c: 0 };
            self.c = rest;
        } else {
            let eg = self.a.extended_gcd(&p);
            let g = eg.gcd;
            let (s, t) = (eg.x, eg.y);
            let nb = s * self.b + t * q;
            let rem = (p / g) * self.b - (self.a / g) * q;
            self.a = g;
            self.b = nb;
            self.c = self.c.gcd(&rem);
        }
        if self.c != 0 {
            self.b = self.b.rem_euclid(self.c);
        }
    }

    fn rank(&self) -> EssentialityRank {
        let mut generators = Vec::new();
        if self.a != 0 {
            generators.push(IntVec2::new(self.a, self.b));
        }
        if self.c != 0 {
            generators.push(IntVec2::new(0, self.c));
        }
        EssentialityRank { rank: generators.len() as u8, generators }
    }
}

/// For every 4-component of `u`, the lattice of translations identifying
/// lifted copies, computed by a search on the universal cover.
fn component_ranks(u: &TorusRaster) -> (Components, Vec<EssentialityRank>) {
    let comps = torus_components(u, Connectivity::Four);
    let mut offset: Vec<Option<(i64, i64)>> = vec![None; u.cells.len()];
    let mut lattices = vec![Lattice::default(); comps.count];
    let mut queue = VecDeque::new();
    for start in 0..u.cells.len() {
        if !u.cells[start] || offset[start].is_some() {
            continue;
        }
        let label = comps.labels[start].expect("set cell") as usize;
        offset[start] = Some((0, 0));
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let o = offset[k].expect("visited");
            u.for_each_neighbor(k, Connectivity::Four, |m, w| {
                if !u.cells[m] {
                    return;
                }
                let lifted = (o.0 + w.0, o.1 + w.1);
                match offset[m] {
                    None => {
                        offset[m] = Some(lifted);
                        queue.push_back(m);
                    }
                    Some(prev) if prev != lifted => lattices[label].add(lifted.0 - prev.0, lifted.1 - prev.1),
                    Some(_) => {}
                }
            });
        }
    }
    (comps, lattices.iter().map(Lattice::rank).collect())
}

/// Essentiality of one 4-connected component of `u`.
pub fn torus_essentiality_rank(u: &TorusRaster, component: usize) -> Result<EssentialityRank> {
    let (comps, ranks) = component_ranks(u);
    if component >= comps.count {
        return Err(Error::LabelOutOfRange { label: component, count: comps.count });
    }
    Ok(ranks[component].clone())
}

/// Rank of the component containing cell `k`, if set.
pub fn rank_at(u: &TorusRaster, k: usize) -> Option<EssentialityRank> {
    let (comps, ranks) = component_ranks(u);
    comps.labels[k].map(|l| ranks[l as usize].clone())
}

/// Largest rank over all components.
pub fn max_rank(u: &TorusRaster) -> u8 {
    component_ranks(u).1.iter().map(|r| r.rank).max().unwrap_or(0)
}

struct CellImages<T: Scalar> {
    points: Vec<Vec2<T>>,
}

impl<T: Scalar> CellImages<T> {
    fn new(u: &TorusRaster) -> Self {
        let points = (0..u.cells.len())
            .filter(|&k| u.cells[k])
            .map(|k| {
                let (x, y) = u.cell_center(k / u.n, k % u.n);
                Vec2::from_f64(Vec2::new(x, y))
            })
            .collect();
        CellImages { points }
    }

    fn step(&mut self, f: impl Fn(Vec2<T>) -> Vec2<T> + Sync) {
        use rayon::prelude::*;
        self.points.par_iter_mut().for_each(|p| {
            let q = f(*p);
            // Keep the representative near the fundamental domain.
            let shift = Vec2::new(T::int(q.x.floor_int()), T::int(q.y.floor_int()));
            *p = q - shift;
        });
    }

    /// Marks the cell of every point and its eight neighbours.
    fn paint(&self, out: &mut TorusRaster) {
        let n = out.n as i64;
        for p in &self.points {
            let (i, j) = out.cell_of(p.x.f64(), p.y.f64());
            for di in -1..=1i64 {
                for dj in -1..=1i64 {
                    let ni = (i as i64 + di).rem_euclid(n) as usize;
                    let nj = (j as i64 + dj).rem_euclid(n) as usize;
                    out.set(ni, nj, true);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitEssentiality {
    /// `(N, rank of the component of the seed cell in ⋃_{|i|<=N} f^i(U))`.
    pub ladder: Vec<(usize, u8)>,
    pub seed: (usize, usize),
    /// Rank 2 reached: the seed lies in `Ess(f)`.
    pub essential: bool,
}

fn check_deck_for_orbits(deck: crate::lifts::DeckMatrix) -> Result<()> {
    match homotopy_class(deck)? {
        HomotopyClass::Other => Err(Error::Precondition(format!(
            "deck {deck} is neither the identity nor dehn-like"
        ))),
        _ => Ok(()),
    }
}

/// Rank ladder of `⋃_{|i|<=N} f^i(U)` along `N ∈ {0, 1, 2, 4, ..., N}`.
///
/// Images are rasterized from cell centers with a one-cell dilation.
pub fn orbit_essentiality<T: Scalar>(lift: &Lift<T>, u: &TorusRaster, n: usize) -> Result<OrbitEssentiality> {
    check_deck_for_orbits(lift.deck)?;
    let seed_k = u
        .cells
        .iter()
        .position(|&c| c)
        .ok_or_else(|| Error::InvalidArgument("empty set".into()))?;
    let mut union = u.clone();
    let mut fwd = CellImages::new(u);
    let mut bwd = CellImages::new(u);
    let mut ladder = Vec::new();
    let marks: Vec<usize> = std::iter::once(0).chain(if n == 0 { vec![] } else { geometric_ladder(n) }).collect();
    let mut next = 0;
    for i in 0..=n {
        if i > 0 {
            fwd.step(|z| lift.forward(z));
            bwd.step(|z| lift.inverse(z));
            fwd.paint(&mut union);
            bwd.paint(&mut union);
        }
        if next < marks.len() && marks[next] == i {
            let r = rank_at(&union, seed_k).map_or(0, |r| r.rank);
            ladder.push((i, r));
            next += 1;
        }
    }
    let essential = ladder.iter().any(|&(_, r)| r == 2);
    Ok(OrbitEssentiality { ladder, seed: (seed_k / u.n, seed_k % u.n), essential })
}

/// Smallest `n <= n_max` with `U ∪ f^n(U)` essential, rasterized as in
/// [`orbit_essentiality`].
pub fn find_essential_return<T: Scalar>(lift: &Lift<T>, u: &TorusRaster, n_max: usize) -> Result<Option<usize>> {
    check_deck_for_orbits(lift.deck)?;
    let (comps, ranks) = component_ranks(u);
    if comps.count != 1 {
        return Err(Error::Precondition(format!("set must be connected, has {} components", comps.count)));
    }
    if ranks[0].rank != 0 {
        return Err(Error::Precondition("set is already essential".into()));
    }
    let mut img = CellImages::new(u);
    for n in 1..=n_max {
        img.step(|z| lift.forward(z));
        let mut union = u.clone();
        img.paint(&mut union);
        if max_rank(&union) >= 1 {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// A raster read from or written to PGM.
#[derive(Clone, Debug, PartialEq)]
pub enum Raster {
    Annulus(AnnulusRaster),
    Torus(TorusRaster),
}

fn pgm_body(out: &mut String, w: usize, h: usize, get: impl Fn(usize, usize) -> bool) {
    use std::fmt::Write;
    let _ = writeln!(out, "{w} {h}\n255");
    for j in 0..h {
        let row: Vec<&str> = (0..w).map(|i| if get(i, j) { "255" } else { "0" }).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Plain PGM (P2); columns are `i`, rows are `j`.
pub fn write_pgm_annulus(r: &AnnulusRaster) -> String {
    let mut out = format!("P2\n# annulus x0={:?} x1={:?}\n# periodic y\n", r.x0, r.x1);
    pgm_body(&mut out, r.nx, r.ny, |i, j| r.get(i, j));
    out
}

pub fn write_pgm_torus(r: &TorusRaster) -> String {
    let mut out = String::from("P2\n# torus\n# periodic x y\n");
    pgm_body(&mut out, r.n, r.n, |i, j| r.get(i, j));
    out
}

pub fn write_pgm(r: &Raster) -> String {
    match r {
        Raster::Annulus(a) => write_pgm_annulus(a),
        Raster::Torus(t) => write_pgm_torus(t),
    }
}

pub fn parse_pgm(text: &str) -> Result<Raster> {
    let bad = |m: &str| Error::Pgm(m.to_string());
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("P2") {
        return Err(bad("missing P2 magic"));
    }
    let mut comments = Vec::new();
    let mut tokens = Vec::new();
    for line in lines {
        let line = line.trim();
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else {
            tokens.extend(line.split_whitespace().map(str::to_string));
        }
    }
    let num = |s: &String| s.parse::<usize>().map_err(|_| bad(&format!("bad integer {s:?}")));
    if tokens.len() < 3 {
        return Err(bad("truncated header"));
    }
    let (w, h, maxval) = (num(&tokens[0])?, num(&tokens[1])?, num(&tokens[2])?);
    if maxval != 255 {
        return Err(bad("maxval must be 255"));
    }
    let px = &tokens[3..];
    if px.len() != w * h {
        return Err(bad(&format!("expected {} pixels, found {}", w * h, px.len())));
    }
    let mut grid = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            grid[i * h + j] = match px[j * w + i].as_str() {
                "0" => false,
                "255" => true,
                other => return Err(bad(&format!("pixel value {other:?} is not 0 or 255"))),
            };
        }
    }
    let kind = comments.first().ok_or_else(|| bad("missing geometry comment"))?;
    if kind == "torus" {
        if w != h {
            return Err(bad("torus raster must be square"));
        }
        return Ok(Raster::Torus(TorusRaster::from_cells(w, grid)?));
    }
    let rest = kind.strip_prefix("annulus").ok_or_else(|| bad("unknown geometry"))?;
    let mut x0 = None;
    let mut x1 = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad("bad window field"))?;
        let v: f64 = v.parse().map_err(|_| bad("bad window value"))?;
        match k {
            "x0" => x0 = Some(v),
            "x1" => x1 = Some(v),
            _ => return Err(bad("unknown window field")),
        }
    }
    let (x0, x1) = (x0.ok_or_else(|| bad("missing x0"))?, x1.ok_or_else(|| bad("missing x1"))?);
    Ok(Raster::Annulus(AnnulusRaster::from_cells(x0, x1, w, h, grid)?))
}

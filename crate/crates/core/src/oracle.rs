//! Independent reference implementations used to cross-check the main modules.
//!
//! Everything here is written from the definitions, as plainly as possible,
//! and shares no code with the optimized paths (grids are plain `Vec<bool>`).

use std::collections::{HashSet, VecDeque};

use crate::lifts::{IntVec2, Lift, TrigPoly, Vec2};
use crate::scalar::Scalar;

type Cell = (i64, i64);

/// Breadth-first fill over `allowed` cells of an `nx × ny` strip, periodic in
/// `j`, from `seeds`. `diag` switches to 8-connectivity.
fn flood(nx: usize, ny: usize, allowed: &dyn Fn(i64, i64) -> bool, seeds: &[Cell], diag: bool) -> HashSet<Cell> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for &s in seeds {
        if allowed(s.0, s.1) && seen.insert(s) {
            queue.push_back(s);
        }
    }
    let steps: &[Cell] = if diag {
        &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    } else {
        &[(1, 0), (-1, 0), (0, 1), (0, -1)]
    };
    while let Some((i, j)) = queue.pop_front() {
        for &(di, dj) in steps {
            let ni = i + di;
            if ni < 0 || ni >= nx as i64 {
                continue;
            }
            let nj = (j + dj).rem_euclid(ny as i64);
            if allowed(ni, nj) && seen.insert((ni, nj)) {
                queue.push_back((ni, nj));
            }
        }
    }
    seen
}

fn to_grid(nx: usize, ny: usize, s: &HashSet<Cell>) -> Vec<bool> {
    let mut out = vec![false; nx * ny];
    for &(i, j) in s {
        out[i as usize * ny + j as usize] = true;
    }
    out
}

/// `(U⁻, U⁺)` of a set given as `cells[i * ny + j]`: the 8-connected
/// complement regions reached from the left and right columns.
pub fn naive_unbounded(cells: &[bool], nx: usize, ny: usize) -> (Vec<bool>, Vec<bool>) {
    let free = |i: i64, j: i64| !cells[i as usize * ny + j as usize];
    let left: Vec<Cell> = (0..ny as i64).map(|j| (0, j)).collect();
    let right: Vec<Cell> = (0..ny as i64).map(|j| (nx as i64 - 1, j)).collect();
    let minus = flood(nx, ny, &free, &left, true);
    let plus = flood(nx, ny, &free, &right, true);
    (to_grid(nx, ny, &minus), to_grid(nx, ny, &plus))
}

/// Complement cells touching the set through an edge or a corner.
pub fn naive_boundary(cells: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let mut out = vec![false; nx * ny];
    for i in 0..nx as i64 {
        for j in 0..ny as i64 {
            if cells[i as usize * ny + j as usize] {
                continue;
            }
            'n: for di in -1..=1 {
                for dj in -1..=1 {
                    let ni = i + di;
                    if (di, dj) == (0, 0) || ni < 0 || ni >= nx as i64 {
                        continue;
                    }
                    let nj = (j + dj).rem_euclid(ny as i64);
                    if cells[ni as usize * ny + nj as usize] {
                        out[i as usize * ny + j as usize] = true;
                        break 'n;
                    }
                }
            }
        }
    }
    out
}

/// `C⁺(A)` by literally following `U⁺(A) → U^{+-} → U^{+-+}`.
pub fn naive_circloid_plus(cells: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let (_, up) = naive_unbounded(cells, nx, ny);
    let (upm, _) = naive_unbounded(&naive_boundary(&up, nx, ny), nx, ny);
    let (_, upmp) = naive_unbounded(&naive_boundary(&upm, nx, ny), nx, ny);
    upm.iter().zip(&upmp).map(|(&a, &b)| !(a || b)).collect()
}

/// Number of sheets of the `k × k` cover of an `n × n` torus raster reached
/// from the lift of cell `start` through 4-connected set cells.
pub fn cover_sheets(cells: &[bool], n: usize, start: usize, k: usize) -> usize {
    let big = (n * k) as i64;
    let on = |i: i64, j: i64| cells[(i.rem_euclid(n as i64) * n as i64 + j.rem_euclid(n as i64)) as usize];
    let s = ((start / n) as i64, (start % n) as i64);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(s);
    queue.push_back(s);
    while let Some((i, j)) = queue.pop_front() {
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let c = ((i + di).rem_euclid(big), (j + dj).rem_euclid(big));
            if on(c.0, c.1) && seen.insert(c) {
                queue.push_back(c);
            }
        }
    }
    let sheets: HashSet<Cell> = seen
        .iter()
        .filter(|&&(i, j)| (i.rem_euclid(n as i64), j.rem_euclid(n as i64)) == (s.0 % n as i64, s.1))
        .map(|&(i, j)| (i / n as i64, j / n as i64))
        .collect();
    sheets.len()
}

/// Rank from the sheet count of a prime-order cover: `1 → 0`, `k → 1`,
/// `k² → 2`. Correct when the translation lattice has no generator whose
/// entries are all divisible by `k`.
pub fn cover_rank(cells: &[bool], n: usize, start: usize, k: usize) -> u8 {
    match cover_sheets(cells, n, start, k) {
        1 => 0,
        s if s == k * k => 2,
        _ => 1,
    }
}

/// `max_{z, m <= n} |<F^m z - z, v> - m alpha|` with a plain double loop.
pub fn direct_deviation<T: Scalar>(lift: &Lift<T>, v: IntVec2, alpha: f64, n: usize, grid_n: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..grid_n {
        for j in 0..grid_n {
            let z = Vec2::new(T::ratio(i as i64, grid_n as i64), T::ratio(j as i64, grid_n as i64));
            let mut p = z;
            for m in 1..=n {
                p = lift.forward(p);
                let d = p.to_f64() - z.to_f64();
                let s = d.x * v.p as f64 + d.y * v.q as f64 - m as f64 * alpha;
                best = best.max(s.abs());
            }
        }
    }
    best
}

/// `Σ_{k<n} amp sin(2π freq (x + kα))` by the geometric-series closed form.
pub fn sine_birkhoff_sum(amp: f64, freq: i64, alpha: f64, x: f64, n: usize) -> f64 {
    use std::f64::consts::TAU;
    let th = TAU * freq as f64 * alpha;
    let half = 0.5 * th;
    if half.sin().abs() < 1e-300 {
        return n as f64 * amp * (TAU * freq as f64 * x).sin();
    }
    // Σ sin(a + k θ) = sin(nθ/2) sin(a + (n-1)θ/2) / sin(θ/2)
    let a = TAU * freq as f64 * x;
    amp * (n as f64 * half).sin() * (a + (n as f64 - 1.0) * half).sin() / half.sin()
}

/// First `n` for which `U ∪ Fⁿ(U)` is essential, `U` the open disk of radius
/// `r < 1/2` at `c` and `F(x, y) = (x + m y + alpha, y)`.
///
/// `Fⁿ(U) + (a, b)` can meet `U` only for `b = 0`, and then along a row `y`
/// exactly when `|m n y + n alpha + a| < 2 sqrt(r² - (y - c_y)²)`. The union
/// carries a closed loop once two distinct `a` occur.
pub fn dehn_disk_return(m: i64, alpha: f64, c: (f64, f64), r: f64, n_max: usize) -> Option<usize> {
    let rows = 20_000;
    (1..=n_max).find(|&n| {
        let mut hits = HashSet::new();
        for k in 0..=rows {
            let y = c.1 - r + 2.0 * r * k as f64 / rows as f64;
            let w = 2.0 * (r * r - (y - c.1).powi(2)).max(0.0).sqrt();
            let s = (m * n as i64) as f64 * y + n as f64 * alpha;
            let lo = (-s - w).ceil() as i64;
            let hi = (-s + w).floor() as i64;
            for a in lo..=hi {
                if (s + a as f64).abs() < w {
                    hits.insert(a);
                }
            }
        }
        hits.len() >= 2
    })
}

/// `ψ ∘ g ∘ ψ⁻¹` from the three closed forms, in plain `(x, y)` coordinates.
pub fn psi_g_psi_inverse(alpha: f64, phi: &TrigPoly<f64>, xp: f64, yp: f64) -> (f64, f64) {
    let y = yp / (1.0 - yp.abs());
    let x = xp - (y.abs() + 1.0).ln().sin();
    let (gx, gy) = (x + alpha, y + phi.eval(x));
    (gx + (gy.abs() + 1.0).ln().sin(), gy / (gy.abs() + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_two_circles() {
        let (nx, ny) = (9, 6);
        let mut cells = vec![false; nx * ny];
        for j in 0..ny {
            cells[2 * ny + j] = true;
            cells[6 * ny + j] = true;
        }
        let c = naive_circloid_plus(&cells, nx, ny);
        let expect: Vec<bool> = (0..nx * ny).map(|k| k / ny == 6).collect();
        assert_eq!(c, expect);
    }

    #[test]
    fn cover_rank_examples() {
        let n = 12;
        let band: Vec<bool> = (0..n * n).map(|k| k % n == 3).collect();
        assert_eq!(cover_rank(&band, n, 3, 3), 1);
        let mut dot = vec![false; n * n];
        dot[5 * n + 5] = true;
        assert_eq!(cover_rank(&dot, n, 5 * n + 5, 3), 0);
        let cross: Vec<bool> = (0..n * n).map(|k| k % n == 3 || k / n == 7).collect();
        assert_eq!(cover_rank(&cross, n, 3, 3), 2);
    }

    #[test]
    fn birkhoff_closed_form_matches_loop() {
        let (a, x) = (0.414_213_562_373_095, 0.17);
        let direct: f64 = (0..37).map(|k| 0.3 * (std::f64::consts::TAU * (x + k as f64 * a)).sin()).sum();
        assert!((sine_birkhoff_sum(0.3, 1, a, x, 37) - direct).abs() < 1e-12);
    }

    #[test]
    fn dehn_return_example() {
        assert_eq!(dehn_disk_return(3, 0.3, (0.5, 0.5), 0.2, 10), Some(2));
        assert_eq!(dehn_disk_return(0, 0.3, (0.5, 0.5), 0.2, 50), None);
    }
}

//! Fixtures and brute-force oracles shared by the integration tests.
//!
//! The oracles work on plain `i64`/`i128` data and never call the library's
//! cone, Hilbert basis, or fiber code.

#![allow(dead_code)]

use fantastack::cone::Cone;
use fantastack::lattice::int_vector;
use fantastack::stacky_fan::{build_fantastack, canonical_stack, AffineToricData, Fantastack, StackyFanInput};
use num_bigint::BigInt;
use num_traits::ToPrimitive;

pub struct Fixture {
    pub name: &'static str,
    pub rays: Vec<Vec<i64>>,
    pub nu: Option<Vec<Vec<i64>>>,
    /// Gorenstein data as stated for the fixture.
    pub q: Vec<i64>,
    pub m: u64,
}

impl Fixture {
    pub fn d(&self) -> usize {
        self.rays[0].len()
    }

    pub fn cone(&self) -> Cone {
        let rows: Vec<&[i64]> = self.rays.iter().map(Vec::as_slice).collect();
        Cone::from_i64(self.d(), &rows).unwrap()
    }

    pub fn data(&self) -> AffineToricData {
        AffineToricData::new(self.cone()).unwrap()
    }

    pub fn stack(&self) -> Fantastack {
        match &self.nu {
            None => canonical_stack(&self.cone()).unwrap(),
            Some(nu) => build_fantastack(StackyFanInput {
                ambient_rank: self.d(),
                rays: self.rays.iter().map(|r| int_vector(r)).collect(),
                maximal_cones: vec![(0..self.rays.len()).collect()],
                nu: Some(nu.iter().map(|r| int_vector(r)).collect()),
            })
            .unwrap(),
        }
    }

    pub fn columns(&self) -> &[Vec<i64>] {
        self.nu.as_deref().unwrap_or(&self.rays)
    }
}

pub fn smooth2() -> Fixture {
    Fixture {
        name: "SMOOTH2",
        rays: vec![vec![1, 0], vec![0, 1]],
        nu: None,
        q: vec![1, 1],
        m: 1,
    }
}

pub fn a1() -> Fixture {
    Fixture {
        name: "A1",
        rays: vec![vec![1, 0], vec![1, 2]],
        nu: None,
        q: vec![1, 0],
        m: 1,
    }
}

pub fn conifold() -> Fixture {
    Fixture {
        name: "CONIFOLD",
        rays: vec![vec![0, 0, 1], vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 1]],
        nu: None,
        q: vec![0, 0, 1],
        m: 1,
    }
}

pub fn m3() -> Fixture {
    Fixture {
        name: "M3",
        rays: vec![vec![1, 0], vec![2, 3]],
        nu: None,
        q: vec![3, -1],
        m: 3,
    }
}

pub fn a1_full() -> Fixture {
    Fixture {
        name: "A1FULL",
        nu: Some(vec![vec![1, 0], vec![1, 2], vec![1, 1]]),
        ..a1()
    }
}

pub fn canonical_fixtures() -> Vec<Fixture> {
    vec![smooth2(), a1(), conifold(), m3()]
}

pub fn all_fixtures() -> Vec<Fixture> {
    vec![smooth2(), a1(), conifold(), m3(), a1_full()]
}

pub fn to_i64(v: &[BigInt]) -> Vec<i64> {
    v.iter().map(|x| x.to_i64().unwrap()).collect()
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant by cofactor expansion.
pub fn det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return m[0][0];
    }
    let mut total = 0;
    for j in 0..n {
        if m[0][j] == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, &x)| x)
                    .collect()
            })
            .collect();
        let sign = if j % 2 == 0 { 1 } else { -1 };
        total += sign * m[0][j] * det(&minor);
    }
    total
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// `w ∈ cone(rays)` by Carathéodory: some linearly independent subset of
/// at most d rays writes `w` with nonnegative rational coefficients.
/// Cramer's rule on a square completion keeps everything in integers.
pub fn in_cone(rays: &[Vec<i64>], w: &[i64]) -> bool {
    let d = w.len();
    if w.iter().all(|&x| x == 0) {
        return true;
    }
    for k in 1..=d.min(rays.len()) {
        for subset in subsets(rays.len(), k) {
            if let Some(coeffs) = solve_in_span(rays, &subset, w) {
                if coeffs.iter().all(|&(num, den)| num * den >= 0) {
                    return true;
                }
            }
        }
    }
    false
}

/// Rational coefficients `(num, den)` with `w = sum c_j rays[subset[j]]`,
/// when the chosen rays are independent and span `w`.
fn solve_in_span(rays: &[Vec<i64>], subset: &[usize], w: &[i64]) -> Option<Vec<(i128, i128)>> {
    let d = w.len();
    let k = subset.len();
    // choose k coordinates on which the rays are independent
    for coords in subsets(d, k) {
        let a: Vec<Vec<i128>> = coords
            .iter()
            .map(|&c| subset.iter().map(|&r| rays[r][c] as i128).collect())
            .collect();
        let base = det(&a);
        if base == 0 {
            continue;
        }
        let coeffs: Vec<(i128, i128)> = (0..k)
            .map(|j| {
                let mut aj = a.clone();
                for (row, &c) in aj.iter_mut().zip(&coords) {
                    row[j] = w[c] as i128;
                }
                (det(&aj), base)
            })
            .collect();
        // the solution must reproduce w on every coordinate
        let ok = (0..d).all(|c| {
            let lhs: i128 = (0..k).map(|j| coeffs[j].0 * rays[subset[j]][c] as i128).sum();
            lhs == w[c] as i128 * base
        });
        return ok.then_some(coeffs);
    }
    None
}

/// Every integer point of `[-radius, radius]^d`.
pub fn box_points(d: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &out {
            for x in -radius..=radius {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Lattice points of `cone(rays)` with `<w, q> <= max_grade`, by grade.
/// Coordinates are bounded by `max_grade / m` times the largest ray entry,
/// since every ray has grade `m` when `(q, m)` is Gorenstein data.
pub fn brute_counts(fx: &Fixture, max_grade: u64) -> Vec<u64> {
    let top = fx.rays.iter().flatten().map(|x| x.abs()).max().unwrap();
    let radius = (max_grade as i64 / fx.m as i64 + 1) * top;
    let mut counts = vec![0u64; max_grade as usize + 1];
    for w in box_points(fx.d(), radius) {
        let g = dot(&w, &fx.q);
        if g < 0 || g as u64 > max_grade {
            continue;
        }
        if in_cone(&fx.rays, &w) {
            counts[g as usize] += 1;
        }
    }
    counts
}

/// All lattice points of the cone up to a grade, with their grades.
pub fn brute_points(fx: &Fixture, max_grade: u64) -> Vec<(u64, Vec<i64>)> {
    let top = fx.rays.iter().flatten().map(|x| x.abs()).max().unwrap();
    let radius = (max_grade as i64 / fx.m as i64 + 1) * top;
    let mut out = Vec::new();
    for w in box_points(fx.d(), radius) {
        let g = dot(&w, &fx.q);
        if g >= 0 && g as u64 <= max_grade && in_cone(&fx.rays, &w) {
            out.push((g as u64, w));
        }
    }
    out.sort();
    out
}

/// `u` in the dual semigroup: nonnegative on every ray.
pub fn in_dual(rays: &[Vec<i64>], u: &[i64]) -> bool {
    rays.iter().all(|r| dot(r, u) >= 0)
}

/// Irreducible elements of `σ^∨ ∩ M` inside `[-radius, radius]^d`. A
/// candidate is reducible when `u - y` is in the semigroup for some
/// nonzero `y ≠ u` from the larger search box.
pub fn brute_hilbert_dual(rays: &[Vec<i64>], radius: i64, search_radius: i64) -> Vec<Vec<i64>> {
    let d = rays[0].len();
    let semigroup: Vec<Vec<i64>> = box_points(d, search_radius)
        .into_iter()
        .filter(|u| u.iter().any(|&x| x != 0) && in_dual(rays, u))
        .collect();
    let mut out: Vec<Vec<i64>> = semigroup
        .iter()
        .filter(|u| u.iter().all(|x| x.abs() <= radius))
        .filter(|u| {
            !semigroup.iter().any(|y| {
                y != *u && {
                    let diff: Vec<i64> = u.iter().zip(y).map(|(a, b)| a - b).collect();
                    diff.iter().any(|&x| x != 0) && in_dual(rays, &diff)
                }
            })
        })
        .cloned()
        .collect();
    out.sort();
    out
}

/// `β^{-1}(w)` by scanning the whole box `[0, <w,p>]^r`.
pub fn naive_fiber(columns: &[Vec<i64>], w: &[i64], p: &[i64]) -> Vec<Vec<i64>> {
    let bound = dot(w, p);
    let r = columns.len();
    let d = w.len();
    let mut out = Vec::new();
    let mut x = vec![0i64; r];
    loop {
        if (0..d).all(|c| (0..r).map(|i| x[i] * columns[i][c]).sum::<i64>() == w[c]) {
            out.push(x.clone());
        }
        // odometer step
        let mut i = r;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if x[i] < bound {
                x[i] += 1;
                break;
            }
            x[i] = 0;
        }
    }
}

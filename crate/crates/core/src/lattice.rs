//! Exact integer linear algebra over arbitrary-precision integers.
//!
//! Everything here is a pure function of its inputs: Smith normal form with
//! the transformation matrices, integer kernels, rank and determinant, the
//! basis-extension and torsion tests, and bounded nonnegative solving of
//! `A x = b`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type IntVector = Vec<BigInt>;

/// Builds an [`IntVector`] from machine integers.
pub fn int_vector(values: &[i64]) -> IntVector {
    values.iter().map(|&v| BigInt::from(v)).collect()
}

pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gcd of the coordinates; zero for the zero vector.
pub fn content(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Divides out the coordinate gcd. The zero vector is returned unchanged.
pub fn primitive(v: &[BigInt]) -> IntVector {
    let g = content(v);
    if g.is_zero() || g.is_one() {
        return v.to_vec();
    }
    v.iter().map(|x| x / &g).collect()
}

pub fn is_zero_vector(v: &[BigInt]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn format_vector(v: &[BigInt]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

/// Dense integer matrix in row-major order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    /// Stacks the given vectors as rows. `cols` is needed for the empty case.
    pub fn from_rows(rows: &[IntVector], cols: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            entries.extend(row.iter().cloned());
        }
        Self::new(rows.len(), cols, entries)
    }

    /// Places the given vectors as columns of a `rows x columns.len()` matrix.
    pub fn from_columns(columns: &[IntVector], rows: usize) -> Result<Self> {
        Ok(Self::from_rows(columns, rows)?.transpose())
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data: Vec<IntVector> = rows.iter().map(|r| int_vector(r)).collect();
        Self::from_rows(&data, cols).expect("ragged rows")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> IntVector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_vectors(&self) -> Vec<IntVector> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column_vectors(&self) -> Vec<IntVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(self.rows * columns.len());
        for i in 0..self.rows {
            for &j in columns {
                entries.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.rows,
            cols: columns.len(),
            entries,
        }
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[BigInt]) -> Result<IntVector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        let mut a = self.row_vectors();
        echelon_rank(&mut a, self.cols)
    }

    /// Determinant of a square matrix (Bareiss elimination).
    pub fn determinant(&self) -> Result<BigInt> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.row_vectors();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
                a[i][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }
        Ok(sign * &a[n - 1][n - 1])
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_vector(self.row(i)))?;
        }
        write!(f, "]")
    }
}

/// Row-reduces `a` in place (integer row operations) and returns its rank.
fn echelon_rank(a: &mut [IntVector], cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..a.len() {
            if a[i][col].is_zero() {
                continue;
            }
            let g = a[rank][col].gcd(&a[i][col]);
            let f_pivot = &a[i][col] / &g;
            let f_row = &a[rank][col] / &g;
            let (top, rest) = a.split_at_mut(i);
            let pivot_row = &top[rank];
            for (x, y) in rest[0].iter_mut().zip(pivot_row) {
                *x = &*x * &f_row - y * &f_pivot;
            }
            let c = content(&rest[0]);
            if !c.is_zero() && !c.is_one() {
                for x in rest[0].iter_mut() {
                    *x = &*x / &c;
                }
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

/// Rank of a list of vectors of common length `cols`.
pub fn rank_of(vectors: &[IntVector], cols: usize) -> usize {
    let mut a = vectors.to_vec();
    echelon_rank(&mut a, cols)
}

/// Smith normal form `U * M * V = S` with unimodular `U`, `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfDecomposition {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
    /// Nonzero diagonal entries of `s`, positive, each dividing the next.
    pub invariant_factors: Vec<BigInt>,
}

impl SnfDecomposition {
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }
}

/// Smith normal form with transformation matrices.
///
/// Pivot choice is the smallest nonzero magnitude in the active block, ties
/// broken by lowest (row, column) index, so the output is reproducible.
pub fn snf(m: &IntMatrix) -> SnfDecomposition {
    let (rows, cols) = (m.rows(), m.cols());
    let mut s = m.row_vectors();
    let mut u = IntMatrix::identity(rows).row_vectors();
    let mut v = IntMatrix::identity(cols).row_vectors();

    let mut t = 0;
    while t < rows.min(cols) {
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if s[i][j].is_zero() {
                    continue;
                }
                let better = match pivot {
                    None => true,
                    Some((pi, pj)) => s[i][j].magnitude() < s[pi][pj].magnitude(),
                };
                if better {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        s.swap(t, pi);
        u.swap(t, pi);
        swap_columns(&mut s, t, pj);
        swap_columns(&mut v, t, pj);

        loop {
            // Euclidean steps along column t and row t.
            for i in t + 1..rows {
                if s[i][t].is_zero() {
                    continue;
                }
                let q = s[i][t].div_floor(&s[t][t]);
                add_row_multiple(&mut s, i, t, &q);
                add_row_multiple(&mut u, i, t, &q);
            }
            for j in t + 1..cols {
                if s[t][j].is_zero() {
                    continue;
                }
                let q = s[t][j].div_floor(&s[t][t]);
                add_column_multiple(&mut s, j, t, &q);
                add_column_multiple(&mut v, j, t, &q);
            }

            let remainder = (t + 1..rows)
                .map(|i| (i, t))
                .chain((t + 1..cols).map(|j| (t, j)))
                .filter(|&(i, j)| !s[i][j].is_zero())
                .min_by(|a, b| s[a.0][a.1].magnitude().cmp(s[b.0][b.1].magnitude()));
            if let Some((i, j)) = remainder {
                // A smaller remainder becomes the new pivot.
                if i != t {
                    s.swap(t, i);
                    u.swap(t, i);
                } else {
                    swap_columns(&mut s, t, j);
                    swap_columns(&mut v, t, j);
                }
                continue;
            }

            let offending = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !s[i][j].is_multiple_of(&s[t][t]));
            match offending {
                Some((i, _)) => {
                    let one = BigInt::from(-1);
                    add_row_multiple(&mut s, t, i, &one);
                    add_row_multiple(&mut u, t, i, &one);
                }
                None => break,
            }
        }

        if s[t][t].is_negative() {
            for x in s[t].iter_mut() {
                *x = -&*x;
            }
            for x in u[t].iter_mut() {
                *x = -&*x;
            }
        }
        t += 1;
    }

    let invariant_factors = (0..rows.min(cols))
        .map(|i| s[i][i].clone())
        .filter(|x| !x.is_zero())
        .collect();
    SnfDecomposition {
        s: IntMatrix::from_rows(&s, cols).expect("shape preserved"),
        u: IntMatrix::from_rows(&u, rows).expect("shape preserved"),
        v: IntMatrix::from_rows(&v, cols).expect("shape preserved"),
        invariant_factors,
    }
}

fn swap_columns(a: &mut [IntVector], j: usize, k: usize) {
    if j != k {
        for row in a.iter_mut() {
            row.swap(j, k);
        }
    }
}

/// row[target] -= q * row[source]
fn add_row_multiple(a: &mut [IntVector], target: usize, source: usize, q: &BigInt) {
    let src = a[source].clone();
    for (x, y) in a[target].iter_mut().zip(&src) {
        *x -= q * y;
    }
}

/// col[target] -= q * col[source]
fn add_column_multiple(a: &mut [IntVector], target: usize, source: usize, q: &BigInt) {
    for row in a.iter_mut() {
        let y = row[source].clone();
        row[target] -= q * y;
    }
}

/// A lattice basis of `{x in Z^cols : M x = 0}`.
pub fn kernel_basis(m: &IntMatrix) -> Vec<IntVector> {
    let d = snf(m);
    let r = d.rank();
    (r..m.cols()).map(|j| d.v.column(j)).collect()
}

/// Some rational solution of `A x = b`, or `None` when the system is
/// inconsistent. Free variables are set to zero.
pub fn solve_rational(a: &IntMatrix, b: &[BigInt]) -> Result<Option<Vec<BigRational>>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    let (rows, cols) = (a.rows(), a.cols());
    let mut aug: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| {
            a.row(i)
                .iter()
                .chain(std::iter::once(&b[i]))
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !aug[i][c].is_zero()) else {
            continue;
        };
        aug.swap(r, p);
        let inv = aug[r][c].recip();
        for x in aug[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                let pivot_row = aug[r].clone();
                for (x, y) in aug[i].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if aug[r..].iter().any(|row| !row[cols].is_zero()) {
        return Ok(None);
    }
    let mut x = vec![BigRational::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = aug[i][cols].clone();
    }
    Ok(Some(x))
}

fn check_lengths(vectors: &[IntVector], ambient_rank: usize) -> Result<()> {
    match vectors.iter().find(|v| v.len() != ambient_rank) {
        Some(v) => Err(Error::DimensionMismatch {
            expected: ambient_rank,
            got: v.len(),
        }),
        None => Ok(()),
    }
}

/// True iff the vectors are linearly independent and span a saturated
/// sublattice, i.e. they extend to a basis of `Z^ambient_rank`.
pub fn is_extendable_to_basis(vectors: &[IntVector], ambient_rank: usize) -> Result<bool> {
    check_lengths(vectors, ambient_rank)?;
    if vectors.is_empty() {
        return Ok(true);
    }
    let d = snf(&IntMatrix::from_rows(vectors, ambient_rank)?);
    Ok(d.rank() == vectors.len() && d.invariant_factors.iter().all(One::is_one))
}

/// True iff `Z^ambient_rank / span(vectors)` has no torsion.
pub fn quotient_is_torsion_free(vectors: &[IntVector], ambient_rank: usize) -> Result<bool> {
    check_lengths(vectors, ambient_rank)?;
    if vectors.is_empty() {
        return Ok(true);
    }
    let d = snf(&IntMatrix::from_rows(vectors, ambient_rank)?);
    Ok(d.invariant_factors.iter().all(One::is_one))
}

/// `(adj(m), det(m))` for a square matrix, so that `m adj(m) = det(m) I`.
fn adjugate(m: &IntMatrix) -> Result<(IntMatrix, BigInt)> {
    let n = m.rows();
    let det = m.determinant()?;
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // adj[i][j] = (-1)^(i+j) * minor with row j and column i removed
            let minor_rows: Vec<IntVector> = (0..n)
                .filter(|&r| r != j)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| m.get(r, c).clone()).collect())
                .collect();
            let minor = if n == 1 {
                BigInt::one()
            } else {
                IntMatrix::from_rows(&minor_rows, n - 1)?.determinant()?
            };
            entries.push(if (i + j) % 2 == 0 { minor } else { -minor });
        }
    }
    Ok((IntMatrix::new(n, n, entries)?, det))
}

/// All `x` with `0 <= x <= bound` and `A x = b`, in lexicographic order.
///
/// Depth-first over coordinates; a branch is cut when some row's residual
/// leaves the interval reachable by the remaining coordinates. Once the
/// remaining columns are linearly independent the rest of `x` is solved for
/// directly.
pub fn solve_nonneg(a: &IntMatrix, b: &[BigInt], bound: &[BigInt]) -> Result<Vec<IntVector>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    if bound.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: bound.len(),
        });
    }
    if let Some(x) = bound.iter().find(|x| x.is_negative()) {
        return Err(Error::InvalidInput(format!("negative bound {x}")));
    }
    let (rows, n) = (a.rows(), a.cols());

    // reach_min[k][r], reach_max[k][r]: range of sum_{j >= k} A[r][j] x_j.
    let mut reach_min = vec![vec![BigInt::zero(); rows]; n + 1];
    let mut reach_max = vec![vec![BigInt::zero(); rows]; n + 1];
    for k in (0..n).rev() {
        for r in 0..rows {
            let c = a.get(r, k) * &bound[k];
            let (lo, hi) = if c.is_negative() {
                (c, BigInt::zero())
            } else {
                (BigInt::zero(), c)
            };
            reach_min[k][r] = &reach_min[k + 1][r] + lo;
            reach_max[k][r] = &reach_max[k + 1][r] + hi;
        }
    }

    // First k from which columns k..n are linearly independent.
    let direct_from = (0..=n)
        .find(|&k| {
            let suffix: Vec<usize> = (k..n).collect();
            a.select_columns(&suffix).rank() == n - k
        })
        .unwrap_or(n);
    let suffix = a.select_columns(&(direct_from..n).collect::<Vec<_>>());
    // A nonsingular square block of the suffix, inverted once as adj / det.
    let mut tail_rows: Vec<usize> = Vec::new();
    for r in 0..rows {
        let mut trial = tail_rows.clone();
        trial.push(r);
        let block: Vec<IntVector> = trial.iter().map(|&i| suffix.row(i).to_vec()).collect();
        if rank_of(&block, suffix.cols()) == trial.len() {
            tail_rows = trial;
        }
    }
    let block = IntMatrix::from_rows(
        &tail_rows.iter().map(|&i| suffix.row(i).to_vec()).collect::<Vec<_>>(),
        suffix.cols(),
    )?;
    let (adjugate, det) = adjugate(&block)?;

    struct Search<'a> {
        a: &'a IntMatrix,
        bound: &'a [BigInt],
        direct_from: usize,
        suffix: IntMatrix,
        tail_rows: Vec<usize>,
        adjugate: IntMatrix,
        det: BigInt,
        reach_min: Vec<Vec<BigInt>>,
        reach_max: Vec<Vec<BigInt>>,
        x: IntVector,
        out: Vec<IntVector>,
    }

    impl Search<'_> {
        fn feasible(&self, k: usize, residual: &[BigInt]) -> bool {
            residual
                .iter()
                .enumerate()
                .all(|(r, res)| self.reach_min[k][r] <= *res && *res <= self.reach_max[k][r])
        }

        fn descend(&mut self, k: usize, residual: &mut IntVector) {
            if !self.feasible(k, residual) {
                return;
            }
            if k == self.direct_from {
                self.finish(residual);
                return;
            }
            let column = self.a.column(k);
            let mut value = BigInt::zero();
            while value <= self.bound[k] {
                self.x[k] = value.clone();
                self.descend(k + 1, residual);
                for (res, c) in residual.iter_mut().zip(&column) {
                    *res -= c;
                }
                value += 1;
            }
            // undo the bound[k] + 1 subtractions
            for (res, c) in residual.iter_mut().zip(&column) {
                *res += c * &value;
            }
            self.x[k] = BigInt::zero();
        }

        fn finish(&mut self, residual: &[BigInt]) {
            let k = self.direct_from;
            let mut x = self.x.clone();
            let picked: Vec<BigInt> = self.tail_rows.iter().map(|&r| residual[r].clone()).collect();
            for j in 0..self.suffix.cols() {
                let numerator = dot(self.adjugate.row(j), &picked);
                let (t, rem) = numerator.div_rem(&self.det);
                if !rem.is_zero() || t.is_negative() || t > self.bound[k + j] {
                    return;
                }
                x[k + j] = t;
            }
            if self.suffix.mul_vec(&x[k..]).ok().as_deref() != Some(residual) {
                return;
            }
            self.out.push(x);
        }
    }

    let mut search = Search {
        a,
        bound,
        direct_from,
        suffix,
        tail_rows,
        adjugate,
        det,
        reach_min,
        reach_max,
        x: vec![BigInt::zero(); n],
        out: Vec::new(),
    };
    let mut residual = b.to_vec();
    search.descend(0, &mut residual);
    Ok(search.out)
}

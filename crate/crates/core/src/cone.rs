//! Rational polyhedral cones given by generators.
//!
//! A [`Cone`] computes its inequality description eagerly: one primitive
//! normal per facet plus a lattice basis of the equations cutting out its
//! linear span. Facets come from hyperplanes through rank-deficient subsets
//! of the generators, which is plenty at the sizes handled here (a handful of
//! rays in rank at most four or five).

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{self, dot, format_vector, int_vector, primitive, IntMatrix, IntVector};
use crate::motivic::RationalMotive;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    ambient_rank: usize,
    generators: Vec<IntVector>,
    facet_normals: Vec<IntVector>,
    equations: Vec<IntVector>,
    rank: usize,
    pointed: bool,
}

impl Cone {
    /// Builds the cone spanned by `generators`.
    ///
    /// Generators are made primitive, zero and repeated ones are dropped, and
    /// for pointed cones only the extreme rays are kept (in input order).
    pub fn new(ambient_rank: usize, generators: Vec<IntVector>) -> Result<Self> {
        let mut gens: Vec<IntVector> = Vec::new();
        for g in generators {
            if g.len() != ambient_rank {
                return Err(Error::DimensionMismatch {
                    expected: ambient_rank,
                    got: g.len(),
                });
            }
            if lattice::is_zero_vector(&g) {
                continue;
            }
            let g = primitive(&g);
            if !gens.contains(&g) {
                gens.push(g);
            }
        }

        let rank = lattice::rank_of(&gens, ambient_rank);
        let equations = if gens.is_empty() {
            IntMatrix::identity(ambient_rank).row_vectors()
        } else {
            lattice::kernel_basis(&IntMatrix::from_rows(&gens, ambient_rank)?)
        };
        let facet_normals = facets(&gens, rank, ambient_rank)?;

        let mut certificate = facet_normals.clone();
        certificate.extend(equations.iter().cloned());
        let pointed = lattice::rank_of(&certificate, ambient_rank) == ambient_rank;

        if pointed {
            gens.retain(|g| {
                let mut tight: Vec<IntVector> = facet_normals.iter().filter(|n| dot(g, n).is_zero()).cloned().collect();
                tight.extend(equations.iter().cloned());
                lattice::rank_of(&tight, ambient_rank) + 1 == ambient_rank
            });
        }

        Ok(Self {
            ambient_rank,
            generators: gens,
            facet_normals,
            equations,
            rank,
            pointed,
        })
    }

    pub fn from_i64(ambient_rank: usize, generators: &[&[i64]]) -> Result<Self> {
        Self::new(ambient_rank, generators.iter().map(|g| int_vector(g)).collect())
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn generators(&self) -> &[IntVector] {
        &self.generators
    }

    pub fn facet_normals(&self) -> &[IntVector] {
        &self.facet_normals
    }

    /// Lattice basis of the linear forms vanishing on the cone.
    pub fn equations(&self) -> &[IntVector] {
        &self.equations
    }

    /// Dimension of the linear span.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_pointed(&self) -> bool {
        self.pointed
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.rank == self.ambient_rank
    }

    pub fn require_pointed(&self) -> Result<()> {
        if self.pointed {
            Ok(())
        } else {
            Err(Error::NotPointed)
        }
    }

    pub fn require_pointed_full(&self) -> Result<()> {
        self.require_pointed()?;
        if !self.is_full_dimensional() {
            return Err(Error::NotFullDimensional {
                rank: self.rank,
                ambient: self.ambient_rank,
            });
        }
        Ok(())
    }

    pub fn contains(&self, w: &[BigInt]) -> Result<bool> {
        if w.len() != self.ambient_rank {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_rank,
                got: w.len(),
            });
        }
        Ok(self.equations.iter().all(|e| dot(w, e).is_zero())
            && self.facet_normals.iter().all(|n| !dot(w, n).is_negative()))
    }

    /// True iff both cones have the same set of rays.
    pub fn has_same_rays(&self, other: &Cone) -> bool {
        let a: BTreeSet<_> = self.generators.iter().collect();
        let b: BTreeSet<_> = other.generators.iter().collect();
        a == b
    }
}

/// A linear form vanishing on `face` and nonzero somewhere on `others`,
/// oriented to be positive on the first generator where it is nonzero.
fn supporting_form(face: &[IntVector], others: &[IntVector], d: usize) -> Result<Option<IntVector>> {
    let kernel = if face.is_empty() {
        IntMatrix::identity(d).row_vectors()
    } else {
        lattice::kernel_basis(&IntMatrix::from_rows(face, d)?)
    };
    for u in kernel {
        if let Some(sign) = others.iter().map(|g| dot(g, &u)).find(|x| !x.is_zero()) {
            let u = primitive(&u);
            return Ok(Some(if sign.is_negative() {
                u.iter().map(|x| -x).collect()
            } else {
                u
            }));
        }
    }
    Ok(None)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    subsets(n, k)
}

fn facets(gens: &[IntVector], rank: usize, d: usize) -> Result<Vec<IntVector>> {
    if rank == 0 {
        return Ok(Vec::new());
    }
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut normals = Vec::new();
    for subset in subsets(gens.len(), rank - 1) {
        let face: Vec<IntVector> = subset.iter().map(|&i| gens[i].clone()).collect();
        if lattice::rank_of(&face, d) != rank - 1 {
            continue;
        }
        let Some(n) = supporting_form(&face, gens, d)? else {
            continue;
        };
        let pairings: Vec<BigInt> = gens.iter().map(|g| dot(g, &n)).collect();
        if pairings.iter().any(Signed::is_negative) {
            continue;
        }
        let zero_set: Vec<usize> = (0..gens.len()).filter(|&i| pairings[i].is_zero()).collect();
        if seen.insert(zero_set) {
            normals.push(n);
        }
    }
    normals.sort();
    Ok(normals)
}

/// The dual cone `{u : <v, u> >= 0 for all v in c}`.
pub fn dual_cone(c: &Cone) -> Result<Cone> {
    c.require_pointed_full()?;
    Cone::new(c.ambient_rank, c.facet_normals.clone())
}

pub fn contains(c: &Cone, w: &[BigInt]) -> Result<bool> {
    c.contains(w)
}

/// A positive grading on `c`: the sum of its facet normals.
fn interior_form(c: &Cone) -> IntVector {
    let mut form = vec![BigInt::zero(); c.ambient_rank];
    for n in &c.facet_normals {
        for (x, y) in form.iter_mut().zip(n) {
            *x += y;
        }
    }
    form
}

/// Lattice points `w` of `c` with `0 <= <w, grading> <= max_grade`, scanning
/// the bounding box of the slice. Requires the grading to be positive on all
/// generators.
fn points_up_to(c: &Cone, grading: &[BigInt], max_grade: &BigInt) -> Result<Vec<(BigInt, IntVector)>> {
    let d = c.ambient_rank;
    let mut lo = vec![BigInt::zero(); d];
    let mut hi = vec![BigInt::zero(); d];
    for g in &c.generators {
        let grade = dot(g, grading);
        for k in 0..d {
            let scaled = &g[k] * max_grade;
            lo[k] = lo[k].clone().min(scaled.div_floor(&grade));
            hi[k] = hi[k].clone().max(scaled.div_ceil(&grade));
        }
    }

    let mut out = Vec::new();
    let mut point = lo.clone();
    loop {
        let grade = dot(&point, grading);
        if grade <= *max_grade && !grade.is_negative() && c.contains(&point)? {
            out.push((grade, point.clone()));
        }
        // odometer
        let mut k = 0;
        loop {
            if k == d {
                return Ok(out);
            }
            if point[k] < hi[k] {
                point[k] += 1;
                break;
            }
            point[k] = lo[k].clone();
            k += 1;
        }
    }
}

/// The minimal generating set of `c ∩ Z^d`, sorted lexicographically.
pub fn hilbert_basis(c: &Cone) -> Result<Vec<IntVector>> {
    c.require_pointed()?;
    if c.generators.is_empty() {
        return Ok(Vec::new());
    }
    let grading = interior_form(c);
    // An irreducible element sits in the half-open parallelepiped of some
    // linearly independent set of rays, so its grade is below the sum of
    // the `rank` largest ray grades.
    let mut grades: Vec<BigInt> = c.generators.iter().map(|g| dot(g, &grading)).collect();
    grades.sort_by(|a, b| b.cmp(a));
    let bound: BigInt = grades.iter().take(c.rank).sum();

    let mut candidates = points_up_to(c, &grading, &bound)?;
    candidates.sort();
    let mut basis: Vec<(BigInt, IntVector)> = Vec::new();
    for (grade, x) in candidates {
        if grade.is_zero() {
            continue;
        }
        let mut reducible = false;
        for (bg, b) in &basis {
            if *bg >= grade {
                continue;
            }
            let diff: IntVector = x.iter().zip(b).map(|(p, q)| p - q).collect();
            if c.contains(&diff)? {
                reducible = true;
                break;
            }
        }
        if !reducible {
            basis.push((grade, x));
        }
    }
    let mut out: Vec<IntVector> = basis.into_iter().map(|(_, x)| x).collect();
    out.sort();
    Ok(out)
}

/// Simplicial cone with linearly independent generators.
///
/// `open[j]` marks the facet opposite generator `j` as excluded, so that the
/// pieces of a triangulation partition the cone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialConeData {
    pub generators: Vec<IntVector>,
    /// Positions of the generators among the rays of the parent cone, if any.
    pub ray_indices: Vec<usize>,
    pub open: Vec<bool>,
    /// Number of lattice points in the fundamental parallelepiped; equals
    /// `|det|` for full-dimensional cones.
    pub index: BigInt,
}

impl SimplicialConeData {
    /// Closed simplicial cone on the given generators.
    pub fn new(generators: Vec<IntVector>) -> Result<Self> {
        let d = generators.first().map_or(0, Vec::len);
        if lattice::rank_of(&generators, d) != generators.len() {
            return Err(Error::InvalidInput(
                "simplicial cone generators must be linearly independent".into(),
            ));
        }
        let snf = lattice::snf(&IntMatrix::from_columns(&generators, d)?);
        let index = snf.invariant_factors.iter().product();
        let k = generators.len();
        Ok(Self {
            ray_indices: (0..k).collect(),
            open: vec![false; k],
            generators,
            index,
        })
    }

    pub fn from_i64(generators: &[&[i64]]) -> Result<Self> {
        Self::new(generators.iter().map(|g| int_vector(g)).collect())
    }

    fn ambient_rank(&self) -> usize {
        self.generators.first().map_or(0, Vec::len)
    }

    /// Lattice points `sum λ_j g_j` with `λ_j ∈ [0,1)` on closed facets and
    /// `λ_j ∈ (0,1]` on open ones.
    pub fn parallelepiped_points(&self) -> Vec<IntVector> {
        let d = self.ambient_rank();
        let k = self.generators.len();
        if k == 0 {
            return vec![vec![BigInt::zero(); d]];
        }
        let g = IntMatrix::from_columns(&self.generators, d).expect("consistent generators");
        // U G V = S: integral points of the span are G V μ with s_i μ_i ∈ Z.
        let snf = lattice::snf(&g);
        let factors: Vec<BigInt> = (0..k).map(|i| snf.s.get(i, i).clone()).collect();

        let mut out = Vec::new();
        let mut digits = vec![BigInt::zero(); k];
        loop {
            let mu: Vec<BigRational> = digits
                .iter()
                .zip(&factors)
                .map(|(a, s)| BigRational::new(a.clone(), s.clone()))
                .collect();
            let lambda: Vec<BigRational> = (0..k)
                .map(|i| {
                    let mut x = BigRational::zero();
                    for (j, m) in mu.iter().enumerate() {
                        x += BigRational::from_integer(snf.v.get(i, j).clone()) * m;
                    }
                    let mut f = x.clone() - x.floor();
                    if f.is_zero() && self.open[i] {
                        f = BigRational::one();
                    }
                    f
                })
                .collect();
            let point: IntVector = (0..d)
                .map(|r| {
                    let mut x = BigRational::zero();
                    for (j, l) in lambda.iter().enumerate() {
                        x += BigRational::from_integer(g.get(r, j).clone()) * l;
                    }
                    debug_assert!(x.is_integer());
                    x.to_integer()
                })
                .collect();
            out.push(point);

            let mut i = 0;
            loop {
                if i == k {
                    out.sort();
                    return out;
                }
                digits[i] += 1;
                if digits[i] < factors[i] {
                    break;
                }
                digits[i] = BigInt::zero();
                i += 1;
            }
        }
    }

    /// Inward normal of the facet opposite generator `j`.
    fn facet_normal(&self, j: usize) -> IntVector {
        let d = self.ambient_rank();
        let others: Vec<IntVector> = (0..self.generators.len())
            .filter(|&i| i != j)
            .map(|i| self.generators[i].clone())
            .collect();
        supporting_form(&others, std::slice::from_ref(&self.generators[j]), d)
            .expect("consistent generators")
            .expect("independent generators")
    }
}

/// Placing triangulation of a pointed full-dimensional cone.
///
/// Rays are inserted in the cone's generator order. The pieces come back
/// half-open: facet `j` of a piece is open when a symbolic interior point
/// `y = y0 + ε e_1 + ε² e_2 + ...` lies on its negative side, which makes
/// the pieces a disjoint partition of the cone.
pub fn triangulate(c: &Cone) -> Result<Vec<SimplicialConeData>> {
    c.require_pointed_full()?;
    let d = c.ambient_rank;
    let rays = &c.generators;

    let mut pieces: Vec<Vec<usize>> = vec![vec![0]];
    let mut placed: Vec<usize> = vec![0];
    for j in 1..rays.len() {
        let placed_rays: Vec<IntVector> = placed.iter().map(|&i| rays[i].clone()).collect();
        let current_rank = lattice::rank_of(&placed_rays, d);
        let mut extended = placed_rays.clone();
        extended.push(rays[j].clone());
        if lattice::rank_of(&extended, d) > current_rank {
            for piece in pieces.iter_mut() {
                piece.push(j);
            }
        } else {
            let mut added = Vec::new();
            for piece in &pieces {
                for drop in 0..piece.len() {
                    let face: Vec<usize> = piece.iter().copied().filter(|&i| i != piece[drop]).collect();
                    let face_rays: Vec<IntVector> = face.iter().map(|&i| rays[i].clone()).collect();
                    let Some(n) = supporting_form(&face_rays, &placed_rays, d)? else {
                        continue;
                    };
                    let on_boundary = placed_rays.iter().all(|r| !dot(r, &n).is_negative());
                    if on_boundary && dot(&rays[j], &n).is_negative() {
                        let mut new_piece = face;
                        new_piece.push(j);
                        added.push(new_piece);
                    }
                }
            }
            pieces.extend(added);
        }
        placed.push(j);
    }

    let mut interior = vec![BigInt::zero(); d];
    for r in rays {
        for (x, y) in interior.iter_mut().zip(r) {
            *x += y;
        }
    }

    let mut out = Vec::with_capacity(pieces.len());
    for mut piece in pieces {
        piece.sort_unstable();
        let mut data = SimplicialConeData::new(piece.iter().map(|&i| rays[i].clone()).collect())?;
        data.ray_indices = piece;
        for j in 0..data.generators.len() {
            let n = data.facet_normal(j);
            let lead = std::iter::once(dot(&n, &interior))
                .chain(n.iter().cloned())
                .find(|x| !x.is_zero())
                .expect("nonzero normal");
            data.open[j] = lead.is_negative();
        }
        out.push(data);
    }
    Ok(out)
}

fn check_grading(generators: &[IntVector], q: &[BigInt]) -> Result<Vec<BigInt>> {
    generators
        .iter()
        .map(|g| {
            if g.len() != q.len() {
                return Err(Error::DimensionMismatch {
                    expected: g.len(),
                    got: q.len(),
                });
            }
            let grade = dot(g, q);
            if grade.is_positive() {
                Ok(grade)
            } else {
                Err(Error::NonPositiveGrading {
                    generator: format_vector(g),
                })
            }
        })
        .collect()
}

fn to_u64(x: &BigInt, what: &str) -> Result<u64> {
    x.to_u64()
        .ok_or_else(|| Error::InvalidInput(format!("{what} {x} does not fit in 64 bits")))
}

/// `sum_{w in s} t^<w,q>` as `numerator / prod (1 - t^<g,q>)`, with
/// `t = L^(-1/m)`.
pub fn graded_series_simplicial(s: &SimplicialConeData, q: &[BigInt], m: u64) -> Result<RationalMotive> {
    let grades = check_grading(&s.generators, q)?;
    let mut numerator: BTreeMap<u64, BigInt> = BTreeMap::new();
    for p in s.parallelepiped_points() {
        let grade = to_u64(&dot(&p, q), "grade")?;
        *numerator.entry(grade).or_insert_with(BigInt::zero) += 1;
    }
    let denominators = grades.iter().map(|g| to_u64(g, "grade")).collect::<Result<Vec<_>>>()?;
    RationalMotive::new(m, numerator, denominators)
}

/// Lattice points of `c` with `<w, q> <= max_grade`, grouped by grade.
pub fn enumerate_points_by_grade(c: &Cone, q: &[BigInt], max_grade: u64) -> Result<BTreeMap<u64, Vec<IntVector>>> {
    if q.len() != c.ambient_rank {
        return Err(Error::DimensionMismatch {
            expected: c.ambient_rank,
            got: q.len(),
        });
    }
    check_grading(&c.generators, q)?;
    let mut out: BTreeMap<u64, Vec<IntVector>> = BTreeMap::new();
    for (grade, w) in points_up_to(c, q, &BigInt::from(max_grade))? {
        out.entry(to_u64(&grade, "grade")?).or_default().push(w);
    }
    for points in out.values_mut() {
        points.sort();
    }
    Ok(out)
}

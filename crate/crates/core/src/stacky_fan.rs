//! Stacky fans, fantastacks, and the flags computed from them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::arcs;
use crate::cone::{self, k_subsets, Cone};
use crate::error::{Error, Result};
use crate::lattice::{self, dot, format_vector, is_zero_vector, primitive, IntMatrix, IntVector};

/// Subset search over the columns of nu is exhaustive, so it is capped.
pub const MAX_SUBSET_COLUMNS: usize = 20;

/// A fan with marked lattice points `nu(e_i)` on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackyFanInput {
    pub ambient_rank: usize,
    pub rays: Vec<IntVector>,
    pub maximal_cones: Vec<Vec<usize>>,
    /// Images of the standard basis vectors; defaults to the rays.
    pub nu: Option<Vec<IntVector>>,
}

impl StackyFanInput {
    pub fn columns(&self) -> &[IntVector] {
        self.nu.as_deref().unwrap_or(&self.rays)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FantastackFlags {
    pub gms_iso_over_torus: bool,
    /// `None` when some maximal cone is not Q-Gorenstein.
    pub combinatorially_crepant: Option<bool>,
    /// `None` when there are too many columns to search.
    pub special_stabilizers: Option<bool>,
}

/// A validated stacky fan `(Σ, ν)` with its orthant cones and `β`.
#[derive(Debug, Clone)]
pub struct Fantastack {
    input: StackyFanInput,
    cones: Vec<Cone>,
    orthant_cones: Vec<Vec<usize>>,
    beta: IntMatrix,
    flags: FantastackFlags,
}

impl Fantastack {
    pub fn input(&self) -> &StackyFanInput {
        &self.input
    }

    pub fn ambient_rank(&self) -> usize {
        self.input.ambient_rank
    }

    /// Number of columns of nu.
    pub fn r(&self) -> usize {
        self.beta.cols()
    }

    pub fn columns(&self) -> &[IntVector] {
        self.input.columns()
    }

    pub fn column(&self, i: usize) -> &IntVector {
        &self.input.columns()[i]
    }

    pub fn maximal_cones(&self) -> &[Cone] {
        &self.cones
    }

    /// For each maximal cone σ, the indices `i` with `v_i ∈ σ`.
    pub fn orthant_cones(&self) -> &[Vec<usize>] {
        &self.orthant_cones
    }

    pub fn beta(&self) -> &IntMatrix {
        &self.beta
    }

    pub fn flags(&self) -> FantastackFlags {
        self.flags
    }

    /// Indices of the columns lying in `c`.
    pub fn columns_in(&self, c: &Cone) -> Vec<usize> {
        (0..self.r())
            .filter(|&i| c.contains(self.column(i)).unwrap_or(false))
            .collect()
    }

    /// True iff nu is one primitive ray generator per ray, in ray order.
    pub fn is_canonical(&self) -> bool {
        match &self.input.nu {
            None => true,
            Some(nu) => nu == &self.input.rays,
        }
    }
}

pub fn build_fantastack(input: StackyFanInput) -> Result<Fantastack> {
    let d = input.ambient_rank;
    for (i, ray) in input.rays.iter().enumerate() {
        if ray.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: ray.len(),
            });
        }
        if is_zero_vector(ray) || primitive(ray) != *ray {
            return Err(Error::InvalidInput(format!(
                "ray {i} {} is not a primitive nonzero vector",
                format_vector(ray)
            )));
        }
        if input.rays[..i].contains(ray) {
            return Err(Error::InvalidInput(format!("ray {i} repeats an earlier ray")));
        }
    }
    if input.maximal_cones.is_empty() {
        return Err(Error::InvalidInput("fan has no cones".into()));
    }

    let mut cones = Vec::with_capacity(input.maximal_cones.len());
    for (k, indices) in input.maximal_cones.iter().enumerate() {
        if indices.is_empty() {
            return Err(Error::InvalidInput(format!("cone {k} has no rays")));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= input.rays.len()) {
            return Err(Error::InvalidInput(format!(
                "cone {k} refers to ray {bad}, but there are {} rays",
                input.rays.len()
            )));
        }
        let c = Cone::new(d, indices.iter().map(|&i| input.rays[i].clone()).collect())?;
        if !c.is_pointed() {
            return Err(Error::InvalidInput(format!("cone {k} is not pointed")));
        }
        if c.generators().len() != indices.len() {
            return Err(Error::InvalidInput(format!(
                "cone {k} lists a ray that is not an extreme ray"
            )));
        }
        cones.push(c);
    }

    let columns = input.columns();
    if let Some(v) = columns.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    for (i, v) in columns.iter().enumerate() {
        let mut inside = false;
        for c in &cones {
            if c.contains(v)? {
                inside = true;
                break;
            }
        }
        if !inside {
            return Err(Error::OutsideSupport { column: i });
        }
    }
    for (k, ray) in input.rays.iter().enumerate() {
        if !input.maximal_cones.iter().any(|c| c.contains(&k)) {
            continue;
        }
        if !columns.iter().any(|v| !is_zero_vector(v) && primitive(v) == *ray) {
            return Err(Error::RayUncovered { ray: k });
        }
    }
    let beta = IntMatrix::from_columns(columns, d)?;
    let rank = beta.rank();
    if rank != d {
        return Err(Error::CokernelInfinite { rank, ambient: d });
    }

    let orthant_cones = cones
        .iter()
        .map(|c| {
            (0..columns.len())
                .filter(|&i| c.contains(&columns[i]).unwrap_or(false))
                .collect()
        })
        .collect();

    let mut f = Fantastack {
        input,
        cones,
        orthant_cones,
        beta,
        flags: FantastackFlags {
            gms_iso_over_torus: false,
            combinatorially_crepant: None,
            special_stabilizers: None,
        },
    };
    f.flags = FantastackFlags {
        gms_iso_over_torus: gms_iso_over_torus(&f),
        combinatorially_crepant: is_combinatorially_crepant(&f).ok(),
        special_stabilizers: has_special_stabilizers(&f).ok().map(|(special, _)| special),
    };
    Ok(f)
}

/// Canonical stack over the affine toric variety of `c`.
pub fn canonical_stack(c: &Cone) -> Result<Fantastack> {
    c.require_pointed_full()?;
    build_fantastack(StackyFanInput {
        ambient_rank: c.ambient_rank(),
        rays: c.generators().to_vec(),
        maximal_cones: vec![(0..c.generators().len()).collect()],
        nu: None,
    })
}

/// Primitive `(q, m)` with `<v, q> = m` on every ray generator, if any.
pub fn q_gorenstein(c: &Cone) -> Result<Option<(IntVector, u64)>> {
    c.require_pointed_full()?;
    let d = c.ambient_rank();
    let rays = IntMatrix::from_rows(c.generators(), d)?;
    let ones = vec![BigInt::one(); c.generators().len()];
    let Some(solution) = lattice::solve_rational(&rays, &ones)? else {
        return Ok(None);
    };
    let m = solution.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let q: IntVector = solution
        .iter()
        .map(|x| (x * num_rational::BigRational::from_integer(m.clone())).to_integer())
        .collect();
    let m = m
        .to_u64()
        .ok_or_else(|| Error::InvalidInput(format!("Gorenstein index {m} is too large")))?;
    Ok(Some((q, m)))
}

/// Affine toric data of a pointed full-dimensional cone σ: the dual cone,
/// the Hilbert basis of `P = σ^∨ ∩ M`, its relation lattice, and `(q, m)`.
#[derive(Debug, Clone)]
pub struct AffineToricData {
    pub sigma: Cone,
    pub dual: Cone,
    pub hilbert_p: Vec<IntVector>,
    /// Lattice basis of `{c : sum c_i p_i = 0}`.
    pub relations: Vec<IntVector>,
    pub qm: Option<(IntVector, u64)>,
}

impl AffineToricData {
    pub fn new(sigma: Cone) -> Result<Self> {
        sigma.require_pointed_full()?;
        let dual = cone::dual_cone(&sigma)?;
        let hilbert_p = cone::hilbert_basis(&dual)?;
        let relations = lattice::kernel_basis(&IntMatrix::from_columns(&hilbert_p, sigma.ambient_rank())?);
        let qm = q_gorenstein(&sigma)?;
        Ok(Self {
            sigma,
            dual,
            hilbert_p,
            relations,
            qm,
        })
    }

    pub fn d(&self) -> usize {
        self.sigma.ambient_rank()
    }

    pub fn gorenstein(&self) -> Result<(&IntVector, u64)> {
        self.qm
            .as_ref()
            .map(|(q, m)| (q, *m))
            .ok_or(Error::NotQGorenstein { cone: 0 })
    }

    /// `<w, q>` for a point of σ, as an unsigned grade.
    pub fn grade(&self, w: &[BigInt]) -> Result<u64> {
        let (q, _) = self.gorenstein()?;
        let g = dot(w, q);
        g.to_u64()
            .ok_or_else(|| Error::InvalidInput(format!("grade {g} of {} is out of range", format_vector(w))))
    }
}

/// Every column sits on the height-`m_σ` hyperplane of some maximal cone
/// containing it.
pub fn is_combinatorially_crepant(f: &Fantastack) -> Result<bool> {
    let mut data = Vec::with_capacity(f.cones.len());
    for (k, c) in f.cones.iter().enumerate() {
        if !c.is_full_dimensional() {
            return Err(Error::NotQGorenstein { cone: k });
        }
        match q_gorenstein(c)? {
            Some(qm) => data.push(qm),
            None => return Err(Error::NotQGorenstein { cone: k }),
        }
    }
    Ok(f.columns().iter().all(|v| {
        f.cones
            .iter()
            .zip(&data)
            .any(|(c, (q, m))| c.contains(v).unwrap_or(false) && dot(v, q) == BigInt::from(*m))
    }))
}

pub fn gms_iso_over_torus(f: &Fantastack) -> bool {
    f.columns().iter().all(|v| !is_zero_vector(v))
}

/// Checks that every linearly independent set of columns extends to a
/// basis of N. Returns a violating subset when one exists.
pub fn has_special_stabilizers(f: &Fantastack) -> Result<(bool, Option<Vec<usize>>)> {
    let r = f.r();
    if r > MAX_SUBSET_COLUMNS {
        return Err(Error::TooManyColumns {
            r,
            max: MAX_SUBSET_COLUMNS,
        });
    }
    let d = f.ambient_rank();
    for size in 1..=r.min(d) {
        for subset in k_subsets(r, size) {
            let vectors: Vec<IntVector> = subset.iter().map(|&i| f.column(i).clone()).collect();
            if lattice::rank_of(&vectors, d) != size {
                continue;
            }
            if !lattice::is_extendable_to_basis(&vectors, d)? {
                return Ok((false, Some(subset)));
            }
        }
    }
    Ok((true, None))
}

/// Looks for points of σ up to grade `grade_bound * m` with an empty
/// β-fiber.
pub fn beta_surjective_up_to(
    f: &Fantastack,
    sigma: &AffineToricData,
    grade_bound: u64,
) -> Result<(bool, Vec<IntVector>)> {
    let (q, m) = sigma.gorenstein()?;
    let points = cone::enumerate_points_by_grade(&sigma.sigma, q, grade_bound * m)?;
    let mut missing = Vec::new();
    for w in points.into_values().flatten() {
        let point = arcs::TropPoint::new(sigma, w)?;
        if arcs::sep_pi(f, sigma, &point)? == 0 {
            missing.push(point.w);
        }
    }
    Ok((missing.is_empty(), missing))
}

/// `<v_i, q> = m` for every column in σ, i.e. `m (f_1 + ... + f_r) = q ∘ β`.
/// Returns the first failing column.
pub fn gorenstein_pullback_identity(f: &Fantastack, sigma: &AffineToricData) -> Result<Option<usize>> {
    let (q, m) = sigma.gorenstein()?;
    let m = BigInt::from(m);
    Ok(f.columns_in(&sigma.sigma)
        .into_iter()
        .find(|&i| dot(f.column(i), q) != m))
}

/// Columns in σ, checked nonzero.
pub(crate) fn nonzero_columns_in(f: &Fantastack, sigma: &AffineToricData) -> Result<Vec<usize>> {
    let cols = f.columns_in(&sigma.sigma);
    if let Some(&i) = cols.iter().find(|&&i| is_zero_vector(f.column(i))) {
        return Err(Error::ZeroColumn { column: i });
    }
    Ok(cols)
}

/// Crepancy over a single cone: every column of σ has `<v_i, q> = m`.
pub(crate) fn require_crepant_over(f: &Fantastack, sigma: &AffineToricData) -> Result<()> {
    match gorenstein_pullback_identity(f, sigma)? {
        Some(column) => Err(Error::NotCrepant { column }),
        None => Ok(()),
    }
}

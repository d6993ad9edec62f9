//! Arc data at the level of tropicalizations: lattice points of σ, their
//! β-fibers, and the contact order of the Gorenstein ideal.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::cone::k_subsets;
use crate::error::{Error, Result};
use crate::lattice::{self, dot, format_vector, IntMatrix, IntVector};
use crate::stacky_fan::{nonzero_columns_in, AffineToricData, Fantastack};

/// A lattice point `w` of σ, with its pairings against the facet normals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TropPoint {
    pub w: IntVector,
    pub pairings: Vec<BigInt>,
}

impl TropPoint {
    pub fn new(sigma: &AffineToricData, w: IntVector) -> Result<Self> {
        let d = sigma.d();
        if w.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: w.len(),
            });
        }
        let pairings: Vec<BigInt> = sigma.sigma.facet_normals().iter().map(|n| dot(&w, n)).collect();
        if pairings.iter().any(Signed::is_negative) {
            return Err(Error::OutsideCone {
                point: format_vector(&w),
            });
        }
        Ok(Self { w, pairings })
    }

    pub fn from_i64(sigma: &AffineToricData, w: &[i64]) -> Result<Self> {
        Self::new(sigma, lattice::int_vector(w))
    }
}

/// All `x ∈ ℕ^r` supported on the columns of σ with `β x = w`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaFiber {
    pub w: TropPoint,
    pub lifts: Vec<IntVector>,
}

impl BetaFiber {
    pub fn sep(&self) -> usize {
        self.lifts.len()
    }
}

/// Sum of the Hilbert basis of P; strictly positive on every nonzero
/// column lying in σ.
pub fn positive_functional(sigma: &AffineToricData, f: &Fantastack) -> Result<IntVector> {
    let d = sigma.d();
    let mut p = vec![BigInt::zero(); d];
    for h in &sigma.hilbert_p {
        for (a, b) in p.iter_mut().zip(h) {
            *a += b;
        }
    }
    for i in nonzero_columns_in(f, sigma)? {
        debug_assert!(dot(f.column(i), &p).is_positive());
    }
    Ok(p)
}

/// `f'` with `f_i + f' = (<v_1, p>, ..., <v_r, p>)`, using the canonical
/// positive functional.
pub fn complement_witness(f: &Fantastack, sigma: &AffineToricData, i: usize) -> Result<IntVector> {
    let p = positive_functional(sigma, f)?;
    complement_witness_with(f, sigma, i, &p)
}

pub fn complement_witness_with(f: &Fantastack, sigma: &AffineToricData, i: usize, p: &[BigInt]) -> Result<IntVector> {
    if i >= f.r() {
        return Err(Error::InvalidInput(format!(
            "column index {i} out of range for r = {}",
            f.r()
        )));
    }
    if !sigma.dual.contains(p)? {
        return Err(Error::OutsideCone {
            point: format_vector(p),
        });
    }
    let mut out: IntVector = f.columns().iter().map(|v| dot(v, p)).collect();
    out[i] -= 1;
    if out.iter().any(Signed::is_negative) {
        return Err(Error::NegativeCoordinate(format_vector(&out)));
    }
    Ok(out)
}

/// Enumerates `β^{-1}(w)` over the columns in σ, bounding each coordinate
/// by `<w, p> / <v_i, p>`.
pub fn beta_fiber(f: &Fantastack, sigma: &AffineToricData, w: &TropPoint) -> Result<BetaFiber> {
    let p = positive_functional(sigma, f)?;
    let cols = nonzero_columns_in(f, sigma)?;
    let wp = dot(&w.w, &p);
    let bounds: Vec<BigInt> = cols.iter().map(|&i| wp.div_floor(&dot(f.column(i), &p))).collect();
    let beta = f.beta().select_columns(&cols);
    let solutions = lattice::solve_nonneg(&beta, &w.w, &bounds)?;
    let mut lifts: Vec<IntVector> = solutions
        .into_iter()
        .map(|x| {
            let mut full = vec![BigInt::zero(); f.r()];
            for (&i, xi) in cols.iter().zip(x) {
                full[i] = xi;
            }
            full
        })
        .collect();
    lifts.sort();
    Ok(BetaFiber { w: w.clone(), lifts })
}

pub fn sep_pi(f: &Fantastack, sigma: &AffineToricData, w: &TropPoint) -> Result<usize> {
    Ok(beta_fiber(f, sigma, w)?.sep())
}

/// Each Hilbert basis element `p_i` of P with the order `<w, p_i>` its
/// monomial must vanish to.
pub fn trop_cylinder_description(sigma: &AffineToricData, w: &TropPoint) -> Vec<(IntVector, BigInt)> {
    sigma.hilbert_p.iter().map(|p| (p.clone(), dot(&w.w, p))).collect()
}

/// Contact order of the Gorenstein ideal along `trop^{-1}(w)`: the least
/// `m <w, p_1 + ... + p_d>` over nonsingular d-tuples of Hilbert basis
/// elements, shifted by `-<w, q>`.
pub fn j_w(sigma: &AffineToricData, w: &TropPoint) -> Result<BigInt> {
    let (q, m) = sigma.gorenstein()?;
    let d = sigma.d();
    let pairings: Vec<BigInt> = sigma.hilbert_p.iter().map(|p| dot(&w.w, p)).collect();
    let mut best: Option<BigInt> = None;
    for subset in k_subsets(sigma.hilbert_p.len(), d) {
        let total: BigInt = subset.iter().map(|&i| &pairings[i]).sum();
        if best.as_ref().is_some_and(|b| &total >= b) {
            continue;
        }
        let vectors: Vec<IntVector> = subset.iter().map(|&i| sigma.hilbert_p[i].clone()).collect();
        if IntMatrix::from_rows(&vectors, d)?.determinant()?.is_zero() {
            continue;
        }
        best = Some(total);
    }
    let best = best.expect("the Hilbert basis of a full-dimensional dual cone spans");
    Ok(best * BigInt::from(m) - dot(&w.w, q))
}

//! Closed-form invariants of the jet-scheme fibers of the good moduli space
//! map over a trop fiber.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arcs::{beta_fiber, TropPoint};
use crate::error::{Error, Result};
use crate::lattice::{dot, format_vector, rank_of, IntVector};
use crate::motivic::MotivicClass;
use crate::stacky_fan::{require_crepant_over, AffineToricData, Fantastack};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetFiberData {
    pub w: TropPoint,
    pub j_prime: u64,
    pub theta: MotivicClass,
    pub threshold: u64,
}

/// Dimension of the unipotent stabilizer over a lift: the coordinate sum.
pub fn h_dim(f: &Fantastack, w_tilde: &[BigInt]) -> Result<BigInt> {
    if w_tilde.len() != f.r() {
        return Err(Error::DimensionMismatch {
            expected: f.r(),
            got: w_tilde.len(),
        });
    }
    if w_tilde.iter().any(Signed::is_negative) {
        return Err(Error::NegativeCoordinate(format_vector(w_tilde)));
    }
    Ok(w_tilde.iter().sum())
}

/// Dimension of the linear space of truncated-arc coordinates `x^(i)_l`
/// cut out by the relations among the Hilbert basis, level by level.
///
/// At level `l` the live variables are those `i` with `<w, p_i> >= l`, and
/// each relation `sum c_i p_i = 0` imposes `sum c_i x^(i)_l = 0` on them.
pub fn j_prime(sigma: &AffineToricData, w: &TropPoint) -> u64 {
    let orders: Vec<u64> = sigma
        .hilbert_p
        .iter()
        .map(|p| {
            dot(&w.w, p)
                .to_u64()
                .expect("pairings of w in σ with P are nonnegative")
        })
        .collect();
    let top = orders.iter().copied().max().unwrap_or(0);
    let mut dim = 0;
    for level in 1..=top {
        let live: Vec<usize> = (0..orders.len()).filter(|&i| orders[i] >= level).collect();
        let restricted: Vec<IntVector> = sigma
            .relations
            .iter()
            .map(|c| live.iter().map(|&i| c[i].clone()).collect())
            .collect();
        dim += (live.len() - rank_of(&restricted, live.len())) as u64;
    }
    dim
}

/// `Θ_w = sum over lifts of L^(j'_w - h(lift))`.
pub fn theta(f: &Fantastack, sigma: &AffineToricData, w: &TropPoint) -> Result<MotivicClass> {
    require_crepant_over(f, sigma)?;
    let jp = j_prime(sigma, w) as i64;
    let mut out = MotivicClass::zero();
    for lift in beta_fiber(f, sigma, w)?.lifts {
        let h = h_dim(f, &lift)?
            .to_i64()
            .ok_or_else(|| Error::InvalidInput(format!("lift {} is too large", format_vector(&lift))))?;
        out = out + MotivicClass::lefschetz_pow(jp - h);
    }
    Ok(out)
}

/// Level beyond which the jet fiber classes no longer change.
pub fn stability_threshold(f: &Fantastack, sigma: &AffineToricData, w: &TropPoint) -> Result<u64> {
    require_crepant_over(f, sigma)?;
    let mut top = BigInt::zero();
    for p in &sigma.hilbert_p {
        top = top.max(dot(&w.w, p));
    }
    for lift in beta_fiber(f, sigma, w)?.lifts {
        for x in lift {
            top = top.max(x);
        }
    }
    let n = if top.is_zero() { BigInt::zero() } else { top * 2 - 1 };
    n.to_u64()
        .ok_or_else(|| Error::InvalidInput(format!("threshold {n} is too large")))
}

pub fn jet_fiber_data(f: &Fantastack, sigma: &AffineToricData, w: &TropPoint) -> Result<JetFiberData> {
    Ok(JetFiberData {
        w: w.clone(),
        j_prime: j_prime(sigma, w),
        theta: theta(f, sigma, w)?,
        threshold: stability_threshold(f, sigma, w)?,
    })
}

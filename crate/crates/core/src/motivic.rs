//! Arithmetic in the coefficient ring of the measures.
//!
//! Every class is expressed in a formal variable `z = L^(1/m)` with its own
//! root order `m`. Operands with different root orders are rescaled to the
//! lcm. Infinite sums are handled in `t = z^-1`, where convergence means
//! growing `t`-degree, so truncation keeps a prefix of coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{Num, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Coefficient types for truncated series: integers and rationals.
pub trait Coefficient: Clone + PartialEq + fmt::Display + fmt::Debug + Num + Signed + FromStr {}

impl<T> Coefficient for T where T: Clone + PartialEq + fmt::Display + fmt::Debug + Num + Signed + FromStr {}

fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

/// Finite sum of `c * z^e` with `z = L^(1/root_order)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MotivicClass {
    root_order: u64,
    coeffs: BTreeMap<i64, BigInt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
}

/// Dimension of a class: the largest power of `L` present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dimension {
    NegInfinity,
    Finite(Rational64),
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dimension::NegInfinity => write!(f, "-inf"),
            Dimension::Finite(r) => write!(f, "{r}"),
        }
    }
}

impl MotivicClass {
    pub fn zero() -> Self {
        Self {
            root_order: 1,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::monomial(BigInt::one(), 0, 1)
    }

    /// The Lefschetz class `L`.
    pub fn lefschetz() -> Self {
        Self::monomial(BigInt::one(), 1, 1)
    }

    /// `L^power` for an integer power.
    pub fn lefschetz_pow(power: i64) -> Self {
        Self::monomial(BigInt::one(), power, 1)
    }

    /// `coeff * z^exponent` with `z = L^(1/root_order)`.
    pub fn monomial(coeff: BigInt, exponent: i64, root_order: u64) -> Self {
        assert!(root_order >= 1, "root order must be positive");
        let mut coeffs = BTreeMap::new();
        coeffs.insert(exponent, coeff);
        Self::from_map(root_order, coeffs)
    }

    pub fn from_terms(root_order: u64, terms: impl IntoIterator<Item = (i64, BigInt)>) -> Self {
        assert!(root_order >= 1, "root order must be positive");
        let mut coeffs: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (e, c) in terms {
            *coeffs.entry(e).or_insert_with(BigInt::zero) += c;
        }
        Self::from_map(root_order, coeffs)
    }

    fn from_map(root_order: u64, mut coeffs: BTreeMap<i64, BigInt>) -> Self {
        coeffs.retain(|_, c| !c.is_zero());
        let mut g = root_order;
        for e in coeffs.keys() {
            g = g.gcd(&e.unsigned_abs());
        }
        if g > 1 {
            let gi = g as i64;
            coeffs = coeffs.into_iter().map(|(e, c)| (e / gi, c)).collect();
        }
        let root_order = if coeffs.is_empty() { 1 } else { root_order / g };
        Self { root_order, coeffs }
    }

    /// `(L - 1)^d * L^-d`, the measure of the arcs through the torus.
    pub fn torus_factor(d: usize) -> Self {
        let l_minus_one = Self::lefschetz() - Self::one();
        l_minus_one.pow(d as u32) * Self::lefschetz_pow(-(d as i64))
    }

    pub fn root_order(&self) -> u64 {
        self.root_order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Terms `(z-exponent, coefficient)` in increasing exponent order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (i64, &BigInt)> + '_ {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn coefficient(&self, exponent: i64) -> BigInt {
        self.coeffs.get(&exponent).cloned().unwrap_or_default()
    }

    /// Exponents rescaled to a multiple of the current root order.
    pub fn terms_at_root_order(&self, root_order: u64) -> Vec<(i64, BigInt)> {
        assert!(
            root_order.is_multiple_of(self.root_order),
            "root order {root_order} is not a multiple of {}",
            self.root_order
        );
        let k = (root_order / self.root_order) as i64;
        self.coeffs.iter().map(|(e, c)| (e * k, c.clone())).collect()
    }

    pub fn scale(&self, factor: &BigInt) -> Self {
        Self::from_map(
            self.root_order,
            self.coeffs.iter().map(|(e, c)| (*e, c * factor)).collect(),
        )
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn combine(&self, other: &Self, op: RingOp) -> Self {
        combine(self, other, op)
    }

    /// Largest `L`-exponent, as a rational number.
    pub fn dimension(&self) -> Dimension {
        match self.coeffs.keys().next_back() {
            None => Dimension::NegInfinity,
            Some(&e) => Dimension::Finite(Rational64::new(e, self.root_order as i64)),
        }
    }

    /// Hodge-Deligne specialization `L -> uv`.
    pub fn specialize_e(&self) -> Result<HodgePolynomial> {
        if self.root_order != 1 {
            return Err(Error::NotIntegral(self.to_string()));
        }
        Ok(HodgePolynomial {
            coeffs: self.coeffs.iter().map(|(e, c)| ((*e, *e), c.clone())).collect(),
        })
    }
}

/// Exact ring arithmetic with root orders reconciled to their lcm.
pub fn combine(a: &MotivicClass, b: &MotivicClass, op: RingOp) -> MotivicClass {
    let m = lcm_u64(a.root_order, b.root_order);
    let ta = a.terms_at_root_order(m);
    let tb = b.terms_at_root_order(m);
    match op {
        RingOp::Add => MotivicClass::from_terms(m, ta.into_iter().chain(tb)),
        RingOp::Sub => MotivicClass::from_terms(m, ta.into_iter().chain(tb.into_iter().map(|(e, c)| (e, -c)))),
        RingOp::Mul => {
            let mut out: BTreeMap<i64, BigInt> = BTreeMap::new();
            for (ea, ca) in &ta {
                for (eb, cb) in &tb {
                    *out.entry(ea + eb).or_insert_with(BigInt::zero) += ca * cb;
                }
            }
            MotivicClass::from_map(m, out)
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl $trait<&MotivicClass> for &MotivicClass {
            type Output = MotivicClass;
            fn $method(self, rhs: &MotivicClass) -> MotivicClass {
                combine(self, rhs, $op)
            }
        }
        impl $trait<MotivicClass> for MotivicClass {
            type Output = MotivicClass;
            fn $method(self, rhs: MotivicClass) -> MotivicClass {
                combine(&self, &rhs, $op)
            }
        }
        impl $trait<&MotivicClass> for MotivicClass {
            type Output = MotivicClass;
            fn $method(self, rhs: &MotivicClass) -> MotivicClass {
                combine(&self, rhs, $op)
            }
        }
    };
}

forward_binop!(Add, add, RingOp::Add);
forward_binop!(Sub, sub, RingOp::Sub);
forward_binop!(Mul, mul, RingOp::Mul);

impl Neg for MotivicClass {
    type Output = MotivicClass;
    fn neg(self) -> MotivicClass {
        self.scale(&BigInt::from(-1))
    }
}

impl fmt::Display for MotivicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self
            .coeffs
            .iter()
            .rev()
            .map(|(e, c)| (Rational64::new(*e, self.root_order as i64), c.clone()));
        write!(f, "{}", render_terms(terms))
    }
}

impl fmt::Debug for MotivicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MotivicClass({self})")
    }
}

impl Serialize for MotivicClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl FromStr for MotivicClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_class(s)
    }
}

fn render_power(exponent: Rational64) -> String {
    if exponent.is_zero() {
        String::new()
    } else if exponent.is_one() {
        "L".to_string()
    } else if exponent.is_integer() {
        format!("L^{}", exponent.numer())
    } else {
        format!("L^({}/{})", exponent.numer(), exponent.denom())
    }
}

/// Renders `sum c * L^e` in the given order, e.g. `L^2 - 2*L + 1`.
fn render_terms<C: Coefficient>(terms: impl Iterator<Item = (Rational64, C)>) -> String {
    let mut out = String::new();
    for (exponent, c) in terms {
        let negative = c.is_negative();
        let magnitude = c.abs();
        let power = render_power(exponent);
        let body = if power.is_empty() {
            magnitude.to_string()
        } else if magnitude.is_one() {
            power
        } else {
            format!("{magnitude}*{power}")
        };
        match (out.is_empty(), negative) {
            (true, false) => out.push_str(&body),
            (true, true) => {
                out.push('-');
                out.push_str(&body);
            }
            (false, false) => {
                out.push_str(" + ");
                out.push_str(&body);
            }
            (false, true) => {
                out.push_str(" - ");
                out.push_str(&body);
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Laurent polynomial in `u, v` produced by the `L -> uv` specialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HodgePolynomial {
    coeffs: BTreeMap<(i64, i64), BigInt>,
}

impl HodgePolynomial {
    pub fn coefficient(&self, u_exp: i64, v_exp: i64) -> BigInt {
        self.coeffs.get(&(u_exp, v_exp)).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), &BigInt)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<(i64, i64), BigInt> = BTreeMap::new();
        for ((a, b), c) in &self.coeffs {
            for ((x, y), d) in &other.coeffs {
                *out.entry((a + x, b + y)).or_insert_with(BigInt::zero) += c * d;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Self { coeffs: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            *out.entry(*k).or_insert_with(BigInt::zero) += c;
        }
        out.retain(|_, c| !c.is_zero());
        Self { coeffs: out }
    }
}

impl fmt::Display for HodgePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let var = |name: &str, e: i64| match e {
            0 => None,
            1 => Some(name.to_string()),
            _ => Some(format!("{name}^{e}")),
        };
        for (i, ((a, b), c)) in self.coeffs.iter().rev().enumerate() {
            let monomial: Vec<String> = [var("u", *a), var("v", *b)].into_iter().flatten().collect();
            let magnitude = c.abs();
            let body = if monomial.is_empty() {
                magnitude.to_string()
            } else if magnitude.is_one() {
                monomial.join("*")
            } else {
                format!("{magnitude}*{}", monomial.join("*"))
            };
            let sign = if c.is_negative() { "-" } else { "+" };
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                write!(f, "{body}")?;
            } else {
                write!(f, " {sign} {body}")?;
            }
        }
        Ok(())
    }
}

/// A power series in `t = L^(-1/root_order)` known exactly up to `t^precision`.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedSeries<C = BigInt> {
    root_order: u64,
    precision: u64,
    coeffs: BTreeMap<u64, C>,
}

impl<C: Coefficient> TruncatedSeries<C> {
    pub fn zero(root_order: u64, precision: u64) -> Self {
        assert!(root_order >= 1, "root order must be positive");
        Self {
            root_order,
            precision,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_coefficients(root_order: u64, precision: u64, coeffs: impl IntoIterator<Item = (u64, C)>) -> Self {
        let mut s = Self::zero(root_order, precision);
        for (k, c) in coeffs {
            s.add_term(k, c);
        }
        s
    }

    /// Expands a class with no positive powers of `L`.
    pub fn from_class(class: &MotivicClass, root_order: u64, precision: u64) -> Result<Self>
    where
        C: From<BigInt>,
    {
        if !root_order.is_multiple_of(class.root_order()) {
            return Err(Error::InvalidInput(format!(
                "class {class} needs root order finer than {root_order}"
            )));
        }
        let mut s = Self::zero(root_order, precision);
        for (e, c) in class.terms_at_root_order(root_order) {
            if e > 0 {
                return Err(Error::InvalidInput(format!("class {class} has positive powers of L")));
            }
            s.add_term((-e) as u64, C::from(c));
        }
        Ok(s)
    }

    pub fn root_order(&self) -> u64 {
        self.root_order
    }

    pub fn precision(&self) -> u64 {
        self.precision
    }

    /// Adds `c * t^degree`; terms beyond the precision are dropped.
    pub fn add_term(&mut self, degree: u64, c: C) {
        if degree > self.precision || c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(degree).or_insert_with(C::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.coeffs.remove(&degree);
        }
    }

    pub fn coefficient(&self, degree: u64) -> C {
        self.coeffs.get(&degree).cloned().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &C)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Same series over a finer root order.
    pub fn with_root_order(&self, root_order: u64) -> Self {
        assert!(
            root_order.is_multiple_of(self.root_order),
            "root order {root_order} is not a multiple of {}",
            self.root_order
        );
        let k = root_order / self.root_order;
        Self {
            root_order,
            precision: self.precision * k + (k - 1),
            coeffs: self.coeffs.iter().map(|(d, c)| (d * k, c.clone())).collect(),
        }
    }

    pub fn truncate(&self, precision: u64) -> Self {
        let precision = precision.min(self.precision);
        Self {
            root_order: self.root_order,
            precision,
            coeffs: self.coeffs.range(..=precision).map(|(k, c)| (*k, c.clone())).collect(),
        }
    }

    fn reconcile(&self, other: &Self) -> (Self, Self) {
        let m = lcm_u64(self.root_order, other.root_order);
        (self.with_root_order(m), other.with_root_order(m))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.reconcile(other);
        let mut out = a.truncate(a.precision.min(b.precision));
        for (k, c) in b.terms() {
            out.add_term(k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&C::one().neg()))
    }

    pub fn scale(&self, factor: &C) -> Self {
        Self::from_coefficients(
            self.root_order,
            self.precision,
            self.coeffs.iter().map(|(k, c)| (*k, c.clone() * factor.clone())),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.reconcile(other);
        let mut out = Self::zero(a.root_order, a.precision.min(b.precision));
        for (i, x) in a.terms() {
            for (j, y) in b.terms() {
                out.add_term(i + j, x.clone() * y.clone());
            }
        }
        out
    }

    /// Multiplies by an exact polynomial in `t`; the precision is unchanged.
    pub fn mul_polynomial(&self, poly: &BTreeMap<u64, BigInt>) -> Self
    where
        C: From<BigInt>,
    {
        let mut out = Self::zero(self.root_order, self.precision);
        for (i, x) in self.terms() {
            for (j, y) in poly {
                out.add_term(i + j, x.clone() * C::from(y.clone()));
            }
        }
        out
    }

    /// True iff both series have equal coefficients up to their common precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let (a, b) = self.reconcile(other);
        let p = a.precision.min(b.precision);
        a.truncate(p).coeffs == b.truncate(p).coeffs
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> TruncatedSeries<D> {
        TruncatedSeries::from_coefficients(
            self.root_order,
            self.precision,
            self.coeffs.iter().map(|(k, c)| (*k, f(c))),
        )
    }
}

impl TruncatedSeries<BigInt> {
    pub fn to_rational(&self) -> TruncatedSeries<BigRational> {
        self.map_coefficients(|c| BigRational::from_integer(c.clone()))
    }
}

impl<C: Coefficient> fmt::Display for TruncatedSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.root_order as i64;
        let body = render_terms(
            self.coeffs
                .iter()
                .map(|(k, c)| (Rational64::new(-(*k as i64), m), c.clone())),
        );
        let tail = render_power(Rational64::new(-(self.precision as i64 + 1), m));
        if self.coeffs.is_empty() {
            write!(f, "O({tail})")
        } else {
            write!(f, "{body} + O({tail})")
        }
    }
}

impl<C: Coefficient> fmt::Debug for TruncatedSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries({self})")
    }
}

impl<C: Coefficient> Serialize for TruncatedSeries<C> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `numerator(t) / prod_a (1 - t^a)` with `t = L^(-1/root_order)`.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMotive {
    root_order: u64,
    numerator: BTreeMap<u64, BigInt>,
    denominator_factors: Vec<u64>,
}

impl RationalMotive {
    pub fn new(
        root_order: u64,
        numerator: impl IntoIterator<Item = (u64, BigInt)>,
        denominator_factors: Vec<u64>,
    ) -> Result<Self> {
        if root_order == 0 {
            return Err(Error::InvalidInput("root order must be positive".into()));
        }
        if let Some(a) = denominator_factors.iter().find(|&&a| a == 0) {
            return Err(Error::InvalidInput(format!(
                "denominator factor 1 - t^{a} is not invertible"
            )));
        }
        let mut num: BTreeMap<u64, BigInt> = BTreeMap::new();
        for (k, c) in numerator {
            *num.entry(k).or_insert_with(BigInt::zero) += c;
        }
        num.retain(|_, c| !c.is_zero());
        let mut denominator_factors = denominator_factors;
        denominator_factors.sort_unstable();
        Ok(Self {
            root_order,
            numerator: num,
            denominator_factors,
        })
    }

    pub fn root_order(&self) -> u64 {
        self.root_order
    }

    pub fn numerator(&self) -> &BTreeMap<u64, BigInt> {
        &self.numerator
    }

    pub fn denominator_factors(&self) -> &[u64] {
        &self.denominator_factors
    }

    pub fn truncate(&self, precision: u64) -> TruncatedSeries<BigInt> {
        truncate_rational(self, precision)
    }

    /// Multiplies the numerator by an exact polynomial in `t`.
    pub fn mul_polynomial(&self, poly: &BTreeMap<u64, BigInt>) -> Self {
        Self {
            root_order: self.root_order,
            numerator: poly_mul(&self.numerator, poly),
            denominator_factors: self.denominator_factors.clone(),
        }
    }

    /// Sum over a common denominator. Both operands must share a root order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.root_order != other.root_order {
            return Err(Error::InvalidInput(format!(
                "root orders differ: {} vs {}",
                self.root_order, other.root_order
            )));
        }
        let count = |fs: &[u64]| {
            let mut m: BTreeMap<u64, usize> = BTreeMap::new();
            for &a in fs {
                *m.entry(a).or_default() += 1;
            }
            m
        };
        let (ca, cb) = (count(&self.denominator_factors), count(&other.denominator_factors));
        let mut common = ca.clone();
        for (a, n) in &cb {
            let e = common.entry(*a).or_default();
            *e = (*e).max(*n);
        }
        let lift = |num: &BTreeMap<u64, BigInt>, own: &BTreeMap<u64, usize>| {
            let mut out = num.clone();
            for (a, n) in &common {
                for _ in own.get(a).copied().unwrap_or(0)..*n {
                    out = poly_mul(&out, &one_minus_t_pow(*a));
                }
            }
            out
        };
        let mut numerator = lift(&self.numerator, &ca);
        for (k, c) in lift(&other.numerator, &cb) {
            *numerator.entry(k).or_insert_with(BigInt::zero) += c;
        }
        let factors = common
            .into_iter()
            .flat_map(|(a, n)| std::iter::repeat_n(a, n))
            .collect();
        Self::new(self.root_order, numerator, factors)
    }

    /// Cancels every denominator factor that divides the numerator exactly.
    pub fn reduced(&self) -> Self {
        let mut numerator = self.numerator.clone();
        let mut kept = Vec::new();
        for &a in &self.denominator_factors {
            match divide_by_one_minus_t_pow(&numerator, a) {
                Some(q) => numerator = q,
                None => kept.push(a),
            }
        }
        Self {
            root_order: self.root_order,
            numerator,
            denominator_factors: kept,
        }
    }
}

impl fmt::Display for RationalMotive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.root_order as i64;
        let num = render_terms(
            self.numerator
                .iter()
                .map(|(k, c)| (Rational64::new(-(*k as i64), m), c.clone())),
        );
        if self.denominator_factors.is_empty() {
            return write!(f, "{num}");
        }
        let mut grouped: BTreeMap<u64, usize> = BTreeMap::new();
        for &a in &self.denominator_factors {
            *grouped.entry(a).or_default() += 1;
        }
        let den: Vec<String> = grouped
            .iter()
            .map(|(a, n)| {
                let base = format!("(1 - {})", render_power(Rational64::new(-(*a as i64), m)));
                if *n == 1 {
                    base
                } else {
                    format!("{base}^{n}")
                }
            })
            .collect();
        write!(f, "({num}) / ({})", den.join("*"))
    }
}

impl fmt::Debug for RationalMotive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalMotive({self})")
    }
}

impl Serialize for RationalMotive {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub(crate) fn poly_mul(a: &BTreeMap<u64, BigInt>, b: &BTreeMap<u64, BigInt>) -> BTreeMap<u64, BigInt> {
    let mut out: BTreeMap<u64, BigInt> = BTreeMap::new();
    for (i, x) in a {
        for (j, y) in b {
            *out.entry(i + j).or_insert_with(BigInt::zero) += x * y;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// `1 - t^a`
pub(crate) fn one_minus_t_pow(a: u64) -> BTreeMap<u64, BigInt> {
    BTreeMap::from([(0, BigInt::one()), (a, BigInt::from(-1))])
}

/// `(1 - t^m)^d`, which is `(L - 1)^d L^-d` written in `t = L^(-1/m)`.
pub fn torus_factor_in_t(d: usize, root_order: u64) -> BTreeMap<u64, BigInt> {
    let mut out = BTreeMap::from([(0, BigInt::one())]);
    for _ in 0..d {
        out = poly_mul(&out, &one_minus_t_pow(root_order));
    }
    out
}

fn divide_by_one_minus_t_pow(num: &BTreeMap<u64, BigInt>, a: u64) -> Option<BTreeMap<u64, BigInt>> {
    let Some(&deg) = num.keys().next_back() else {
        return Some(BTreeMap::new());
    };
    if deg < a {
        return None;
    }
    // q_k = n_k + q_{k-a}, for k in 0..=deg-a
    let mut q: BTreeMap<u64, BigInt> = BTreeMap::new();
    for k in 0..=deg - a {
        let mut c = num.get(&k).cloned().unwrap_or_default();
        if k >= a {
            if let Some(prev) = q.get(&(k - a)) {
                c += prev;
            }
        }
        if !c.is_zero() {
            q.insert(k, c);
        }
    }
    (poly_mul(&q, &one_minus_t_pow(a)) == *num).then_some(q)
}

/// Expands `numerator * prod (1 - t^a)^-1` through `t^precision`.
pub fn truncate_rational(r: &RationalMotive, precision: u64) -> TruncatedSeries<BigInt> {
    let n = precision as usize + 1;
    let mut dense = vec![BigInt::zero(); n];
    for (k, c) in r.numerator.range(..=precision) {
        dense[*k as usize] = c.clone();
    }
    for &a in &r.denominator_factors {
        let a = a as usize;
        for k in a..n {
            let prev = dense[k - a].clone();
            dense[k] += prev;
        }
    }
    TruncatedSeries::from_coefficients(
        r.root_order,
        precision,
        dense.into_iter().enumerate().map(|(k, c)| (k as u64, c)),
    )
}

// --- parsing -------------------------------------------------------------

/// Parsed `(coefficient, exponent)` terms and an optional `O(...)` bound;
/// exponents are `(numerator, denominator)`.
type ParsedTerms<C> = (Vec<(C, (i64, i64))>, Option<(i64, i64)>);

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

enum Term<C> {
    Value { coeff: C, exponent: (i64, i64) },
    BigO { exponent: (i64, i64) },
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn error(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at offset {} in {:?}", self.pos, self.src))
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.error("expected integer"))
    }

    /// `L`, `L^k`, `L^-k`, `L^(p/q)`
    fn power(&mut self) -> Result<(i64, i64)> {
        if !self.eat('L') {
            return Err(self.error("expected L"));
        }
        if !self.eat('^') {
            return Ok((1, 1));
        }
        if self.eat('(') {
            let p = self.integer()?;
            let q = if self.eat('/') { self.integer()? } else { 1 };
            if !self.eat(')') {
                return Err(self.error("expected )"));
            }
            if q <= 0 {
                return Err(self.error("exponent denominator must be positive"));
            }
            Ok((p, q))
        } else {
            Ok((self.integer()?, 1))
        }
    }

    fn term<C: Coefficient>(&mut self, negative: bool) -> Result<Term<C>> {
        self.skip_ws();
        if self.peek() == Some('O') {
            self.pos += 1;
            if !self.eat('(') {
                return Err(self.error("expected ( after O"));
            }
            let exponent = self.power()?;
            if !self.eat(')') {
                return Err(self.error("expected )"));
            }
            return Ok(Term::BigO { exponent });
        }
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '/') {
            self.pos += 1;
        }
        let literal = &self.src[start..self.pos];
        let mut coeff = if literal.is_empty() {
            C::one()
        } else {
            literal.parse::<C>().map_err(|_| self.error("bad coefficient"))?
        };
        if negative {
            coeff = -coeff;
        }
        let has_star = self.eat('*');
        self.skip_ws();
        let exponent = if self.peek() == Some('L') {
            self.power()?
        } else if has_star || literal.is_empty() {
            return Err(self.error("expected L"));
        } else {
            (0, 1)
        };
        Ok(Term::Value { coeff, exponent })
    }

    fn terms<C: Coefficient>(&mut self) -> Result<ParsedTerms<C>> {
        let mut values = Vec::new();
        let mut big_o = None;
        let mut negative = self.eat('-');
        loop {
            if big_o.is_some() {
                return Err(self.error("O(..) must be the last term"));
            }
            match self.term::<C>(negative)? {
                Term::Value { coeff, exponent } => values.push((coeff, exponent)),
                Term::BigO { exponent } => {
                    if negative {
                        return Err(self.error("O(..) cannot be negated"));
                    }
                    big_o = Some(exponent);
                }
            }
            self.skip_ws();
            if self.peek().is_none() {
                break;
            }
            negative = if self.eat('+') {
                false
            } else if self.eat('-') {
                true
            } else {
                return Err(self.error("expected + or -"));
            };
        }
        Ok((values, big_o))
    }
}

fn common_root_order(exponents: impl Iterator<Item = (i64, i64)>) -> u64 {
    exponents.fold(1u64, |m, (p, q)| {
        let q = (q / p.gcd(&q)).unsigned_abs();
        lcm_u64(m, q.max(1))
    })
}

/// Parses the canonical rendering of a class, e.g. `L^2 - 2*L + 1`.
pub fn parse_class(text: &str) -> Result<MotivicClass> {
    let text = text.trim();
    if text == "0" {
        return Ok(MotivicClass::zero());
    }
    let mut cur = Cursor::new(text);
    let (values, big_o) = cur.terms::<BigInt>()?;
    if big_o.is_some() {
        return Err(Error::Parse(format!("unexpected O(..) in class {text:?}")));
    }
    let m = common_root_order(values.iter().map(|(_, e)| *e));
    Ok(MotivicClass::from_terms(
        m,
        values.into_iter().map(|(c, (p, q))| (p * (m as i64 / q), c)),
    ))
}

/// Parses a rendered series, e.g. `1 + L^-1 + O(L^-13)`.
pub fn parse_series<C: Coefficient>(text: &str) -> Result<TruncatedSeries<C>> {
    let mut cur = Cursor::new(text.trim());
    let (values, big_o) = cur.terms::<C>()?;
    let Some(o) = big_o else {
        return Err(Error::Parse(format!("series {text:?} lacks an O(..) term")));
    };
    let m = common_root_order(values.iter().map(|(_, e)| *e).chain(std::iter::once(o)));
    let to_degree = |(p, q): (i64, i64)| -> Result<u64> {
        let e = p * (m as i64 / q);
        if e > 0 {
            return Err(Error::Parse(format!("positive power of L in series {text:?}")));
        }
        Ok((-e) as u64)
    };
    let tail = to_degree(o)?;
    if tail == 0 {
        return Err(Error::Parse(format!("O(1) tail in series {text:?}")));
    }
    let mut s = TruncatedSeries::zero(m, tail - 1);
    for (c, e) in values {
        s.add_term(to_degree(e)?, c);
    }
    Ok(s)
}

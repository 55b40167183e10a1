//! Angles of the form `q + sum c_m * alpha_m` with rational `q`, `c_m` and
//! declared irrationals `alpha_m`.
//!
//! Integrality and half-integrality are decided symbolically. Everything
//! else (floor, ceiling, nearest integer) is decided by certified interval
//! evaluation, refining the approximations of the irrationals on demand.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Working precision used before any refinement.
pub const DEFAULT_PRECISION_BITS: u32 = 128;
/// Refinement stops here unless the caller asks for more.
pub const DEFAULT_PRECISION_CAP: u32 = 4096;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"-0.125"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: `{s}`"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    parse_decimal(s).ok_or_else(bad)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = Rational::new(num, den);
    Some(if neg { -value } else { value })
}

pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits
}

/// A closed interval with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn point(q: Rational) -> Self {
        Interval {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, q: &Rational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        rational_to_f64(&((&self.lo + &self.hi) / rat_int(2)))
    }

    fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    fn scale(&self, c: &Rational) -> Interval {
        if c.is_negative() {
            Interval {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            Interval {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }
}

/// How approximations of one irrational are produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApproxSource {
    /// A fixed decimal value `v` with `|alpha - v| <= 2^-precision_bits`.
    Decimal {
        value: Rational,
        precision_bits: u32,
    },
    /// `sqrt(radicand)`, refinable to any precision.
    Sqrt { radicand: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisEntry {
    pub name: String,
    pub source: ApproxSource,
}

/// Named irrationals, assumed linearly independent over Q together with 1.
/// Independence is a user contract and is not verified.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IrrationalBasis {
    entries: Vec<BasisEntry>,
}

impl IrrationalBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, source: ApproxSource) -> Result<()> {
        if self.get(name).is_some() {
            return Err(Error::DuplicateBasisName(name.to_string()));
        }
        if let ApproxSource::Sqrt { radicand } = &source {
            if radicand.is_negative() {
                return Err(Error::InvalidInput(format!(
                    "negative radicand for `{name}`"
                )));
            }
        }
        self.entries.push(BasisEntry {
            name: name.to_string(),
            source,
        });
        Ok(())
    }

    pub fn with_decimal(mut self, name: &str, decimal: &str, precision_bits: u32) -> Result<Self> {
        let value = parse_rational(decimal)?;
        self.push(
            name,
            ApproxSource::Decimal {
                value,
                precision_bits,
            },
        )?;
        Ok(self)
    }

    pub fn with_sqrt(mut self, name: &str, radicand: Rational) -> Result<Self> {
        self.push(name, ApproxSource::Sqrt { radicand })?;
        Ok(self)
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&BasisEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Bits of accuracy available for `name`; `None` means unlimited.
    pub fn available_bits(&self, name: &str) -> Result<Option<u32>> {
        let entry = self
            .get(name)
            .ok_or_else(|| Error::UnknownBasisName(name.to_string()))?;
        Ok(match &entry.source {
            ApproxSource::Decimal { precision_bits, .. } => Some(*precision_bits),
            ApproxSource::Sqrt { .. } => None,
        })
    }

    /// Enclosure of the named irrational of width at most `2^(1-bits)`.
    /// Enclosures are nested: raising `bits` never leaves the previous one.
    pub fn enclosure(&self, name: &str, bits: u32) -> Result<Interval> {
        let entry = self
            .get(name)
            .ok_or_else(|| Error::UnknownBasisName(name.to_string()))?;
        match &entry.source {
            ApproxSource::Decimal {
                value,
                precision_bits,
            } => {
                if bits > *precision_bits {
                    return Err(Error::PrecisionUnavailable {
                        name: name.to_string(),
                        available: *precision_bits,
                        requested: bits,
                    });
                }
                let err = Rational::new(BigInt::one(), pow2(*precision_bits));
                Ok(Interval {
                    lo: value - &err,
                    hi: value + &err,
                })
            }
            ApproxSource::Sqrt { radicand } => {
                // floor(sqrt(x) * 2^bits) = isqrt(floor(x * 4^bits))
                let scaled = (radicand * Rational::from_integer(pow2(2 * bits))).floor();
                let s = scaled.to_integer().sqrt();
                let den = pow2(bits);
                Ok(Interval {
                    lo: Rational::new(s.clone(), den.clone()),
                    hi: Rational::new(s + 1, den),
                })
            }
        }
    }

    /// Floating-point value, for diagnostics and heuristics only.
    pub fn approx_f64(&self, name: &str) -> Result<f64> {
        let bits = self.available_bits(name)?.unwrap_or(64).min(64);
        Ok(self.enclosure(name, bits)?.midpoint_f64())
    }

    /// Small integer relations `a*x + b*y + c ~ 0` between pairs of basis
    /// values, found by brute force on floating-point approximations. A hit
    /// means the independence contract is suspicious; inputs are left alone.
    pub fn suspected_relations(&self) -> Vec<String> {
        const BOUND: i64 = 12;
        let values: Vec<(String, f64)> = self
            .entries
            .iter()
            .filter_map(|e| self.approx_f64(&e.name).ok().map(|v| (e.name.clone(), v)))
            .collect();
        let mut out = Vec::new();
        for (name, v) in &values {
            for b in 1..=BOUND {
                let x = v * b as f64;
                if (x - x.round()).abs() < 1e-12 {
                    out.push(format!("{name} looks rational (~{}/{b})", x.round()));
                    break;
                }
            }
        }
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                let (ni, vi) = &values[i];
                let (nj, vj) = &values[j];
                'search: for a in 1..=BOUND {
                    for b in -BOUND..=BOUND {
                        if b == 0 {
                            continue;
                        }
                        let x = a as f64 * vi + b as f64 * vj;
                        if (x - x.round()).abs() < 1e-12 {
                            out.push(format!(
                                "{a}*{ni} + {b}*{nj} looks like an integer (~{})",
                                x.round()
                            ));
                            break 'search;
                        }
                    }
                }
            }
        }
        out
    }
}

/// `rational + sum coeffs[name] * basis[name]`, zero coefficients omitted.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExactAngle {
    rational: Rational,
    coeffs: BTreeMap<String, Rational>,
}

impl ExactAngle {
    pub fn rational(q: Rational) -> Self {
        ExactAngle {
            rational: q,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self::rational(rat_int(v))
    }

    pub fn term(name: &str, coeff: Rational) -> Self {
        ExactAngle::default().with_term(name, coeff)
    }

    /// Adds `coeff * name`, dropping the entry if it cancels.
    pub fn with_term(mut self, name: &str, coeff: Rational) -> Self {
        let entry = self
            .coeffs
            .entry(name.to_string())
            .or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.coeffs.remove(name);
        }
        self
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn coeffs(&self) -> &BTreeMap<String, Rational> {
        &self.coeffs
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_integer(&self) -> bool {
        self.is_rational() && self.rational.is_integer()
    }

    pub fn is_half_integer(&self) -> bool {
        self.is_rational()
            && !self.rational.is_integer()
            && (&self.rational * rat_int(2)).is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.is_rational() && self.rational.is_zero()
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return ExactAngle::default();
        }
        ExactAngle {
            rational: &self.rational * k,
            coeffs: self
                .coeffs
                .iter()
                .map(|(n, c)| (n.clone(), c * k))
                .collect(),
        }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.scale(&rat_int(k))
    }

    /// Sum of absolute values of the irrational coefficients.
    pub fn coeff_l1(&self) -> Rational {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    pub fn approx_f64(&self, basis: &IrrationalBasis) -> Result<f64> {
        let mut v = rational_to_f64(&self.rational);
        for (name, c) in &self.coeffs {
            v += rational_to_f64(c) * basis.approx_f64(name)?;
        }
        Ok(v)
    }
}

impl fmt::Display for ExactAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.rational.is_zero() || self.coeffs.is_empty() {
            parts.push(format_rational(&self.rational));
        }
        for (name, c) in &self.coeffs {
            parts.push(format!("{}*{}", format_rational(c), name));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &ExactAngle {
    type Output = ExactAngle;
    fn add(self, rhs: &ExactAngle) -> ExactAngle {
        let mut out = self.clone();
        out.rational += &rhs.rational;
        for (name, c) in &rhs.coeffs {
            out = out.with_term(name, c.clone());
        }
        out
    }
}

impl Add for ExactAngle {
    type Output = ExactAngle;
    fn add(self, rhs: ExactAngle) -> ExactAngle {
        &self + &rhs
    }
}

impl Neg for &ExactAngle {
    type Output = ExactAngle;
    fn neg(self) -> ExactAngle {
        self.scale_int(-1)
    }
}

impl Neg for ExactAngle {
    type Output = ExactAngle;
    fn neg(self) -> ExactAngle {
        self.scale_int(-1)
    }
}

impl Sub for &ExactAngle {
    type Output = ExactAngle;
    fn sub(self, rhs: &ExactAngle) -> ExactAngle {
        self + &(-rhs)
    }
}

impl Sub for ExactAngle {
    type Output = ExactAngle;
    fn sub(self, rhs: ExactAngle) -> ExactAngle {
        &self - &rhs
    }
}

/// Largest precision not exceeding `requested` that every basis entry used
/// by `a` can deliver.
pub fn effective_bits(a: &ExactAngle, basis: &IrrationalBasis, requested: u32) -> Result<u32> {
    let mut bits = requested;
    for name in a.coeffs.keys() {
        if let Some(avail) = basis.available_bits(name)? {
            bits = bits.min(avail);
        }
    }
    Ok(bits)
}

/// Closed rational interval containing `a`, of width at most
/// `2^(1-precision_bits) * (1 + sum |c_m|)`.
pub fn eval_interval(
    a: &ExactAngle,
    basis: &IrrationalBasis,
    precision_bits: u32,
) -> Result<Interval> {
    let mut acc = Interval::point(a.rational.clone());
    for (name, c) in &a.coeffs {
        let enc = basis.enclosure(name, precision_bits)?;
        acc = acc.add(&enc.scale(c));
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nearest {
    Integer(i64),
    Tie,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mod1Reduction {
    pub floor: i64,
    pub ceil: i64,
    pub nearest: Nearest,
    pub is_integer: bool,
    pub is_half_integer: bool,
}

fn big_to_i64(b: &BigInt) -> Result<i64> {
    b.to_i64().ok_or(Error::Overflow)
}

/// Floor, ceiling and nearest integer of `a`, refining precision from
/// [`DEFAULT_PRECISION_BITS`] by doubling up to `max_precision_bits`.
pub fn reduce_mod1(
    a: &ExactAngle,
    basis: &IrrationalBasis,
    max_precision_bits: u32,
) -> Result<Mod1Reduction> {
    if a.is_rational() {
        let q = &a.rational;
        let floor = big_to_i64(&q.floor().to_integer())?;
        let ceil = big_to_i64(&q.ceil().to_integer())?;
        let is_integer = q.is_integer();
        let is_half_integer = a.is_half_integer();
        let nearest = if is_half_integer {
            Nearest::Tie
        } else {
            let frac = q - Rational::from_integer(BigInt::from(floor));
            if frac < rat(1, 2) {
                Nearest::Integer(floor)
            } else {
                Nearest::Integer(floor + 1)
            }
        };
        return Ok(Mod1Reduction {
            floor,
            ceil,
            nearest,
            is_integer,
            is_half_integer,
        });
    }
    // Irrational: never an integer or half-integer, so every boundary is
    // eventually separated from the value.
    let cap = effective_bits(a, basis, max_precision_bits)?;
    let mut bits = DEFAULT_PRECISION_BITS.min(cap).max(1);
    loop {
        let iv = eval_interval(a, basis, bits)?;
        let f_lo = iv.lo.floor().to_integer();
        let c_hi = iv.hi.ceil().to_integer();
        if c_hi.clone() - &f_lo == BigInt::one() {
            let floor = big_to_i64(&f_lo)?;
            let half = Rational::from_integer(f_lo.clone()) + rat(1, 2);
            let nearest = if iv.hi <= half {
                Some(floor)
            } else if iv.lo >= half {
                Some(floor + 1)
            } else {
                None
            };
            if let Some(nearest) = nearest {
                return Ok(Mod1Reduction {
                    floor,
                    ceil: floor + 1,
                    nearest: Nearest::Integer(nearest),
                    is_integer: false,
                    is_half_integer: false,
                });
            }
        }
        if bits >= cap {
            return Err(Error::PrecisionExhausted(bits));
        }
        bits = bits.saturating_mul(2).min(cap);
    }
}

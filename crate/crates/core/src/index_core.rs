//! Elliptic semi-simple paths given by per-plane rotation numbers.
//!
//! The path is `t -> (rot(2 pi lambda_1 t), ..., rot(2 pi lambda_n t))` on
//! `[0, 1]`, and its k-th iterate replaces every `lambda_j` by `k lambda_j`.
//! Rotation numbers use the full-turn convention (`lambda = 1` is one full
//! turn). Some sources write short rotations as `exp(pi i lambda t)`; that
//! half-angle form is not used anywhere here.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact_angle::{
    effective_bits, eval_interval, rat_int, reduce_mod1, ExactAngle, Interval, IrrationalBasis,
    Mod1Reduction, Nearest, Rational, DEFAULT_PRECISION_CAP,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticPath {
    rotation_numbers: Vec<ExactAngle>,
    basis: IrrationalBasis,
    max_precision_bits: u32,
}

impl SymplecticPath {
    pub fn new(basis: IrrationalBasis, rotation_numbers: Vec<ExactAngle>) -> Result<Self> {
        if rotation_numbers.is_empty() {
            return Err(Error::InvalidInput(
                "a path needs at least one plane".into(),
            ));
        }
        for lam in &rotation_numbers {
            for name in lam.coeffs().keys() {
                if basis.get(name).is_none() {
                    return Err(Error::UnknownBasisName(name.clone()));
                }
            }
        }
        Ok(SymplecticPath {
            rotation_numbers,
            basis,
            max_precision_bits: DEFAULT_PRECISION_CAP,
        })
    }

    /// A path whose rotation numbers are all rational.
    pub fn from_rationals(lambdas: &[Rational]) -> Self {
        SymplecticPath {
            rotation_numbers: lambdas.iter().cloned().map(ExactAngle::rational).collect(),
            basis: IrrationalBasis::new(),
            max_precision_bits: DEFAULT_PRECISION_CAP,
        }
    }

    pub fn with_max_precision(mut self, bits: u32) -> Self {
        self.max_precision_bits = bits.max(1);
        self
    }

    pub fn n(&self) -> usize {
        self.rotation_numbers.len()
    }

    pub fn rotation_numbers(&self) -> &[ExactAngle] {
        &self.rotation_numbers
    }

    pub fn basis(&self) -> &IrrationalBasis {
        &self.basis
    }

    pub fn max_precision_bits(&self) -> u32 {
        self.max_precision_bits
    }

    /// The path `lambda -> m lambda`, i.e. the m-th iterate as a new path.
    pub fn iterated(&self, m: i64) -> Self {
        SymplecticPath {
            rotation_numbers: self
                .rotation_numbers
                .iter()
                .map(|l| l.scale_int(m))
                .collect(),
            ..self.clone()
        }
    }

    /// The path composed with the loop that turns plane j by `shift[j]` full turns.
    pub fn loop_shifted(&self, shift: &[i64]) -> Self {
        SymplecticPath {
            rotation_numbers: self
                .rotation_numbers
                .iter()
                .zip(shift)
                .map(|(l, &m)| l + &ExactAngle::from_int(m))
                .collect(),
            ..self.clone()
        }
    }

    /// Direct sum; basis entries with the same name must agree.
    pub fn direct_sum(&self, other: &SymplecticPath) -> Result<Self> {
        let mut basis = self.basis.clone();
        for e in other.basis.entries() {
            match basis.get(&e.name) {
                Some(existing) if existing == e => {}
                Some(_) => return Err(Error::DuplicateBasisName(e.name.clone())),
                None => basis.push(&e.name, e.source.clone())?,
            }
        }
        let mut rotation_numbers = self.rotation_numbers.clone();
        rotation_numbers.extend(other.rotation_numbers.iter().cloned());
        Ok(SymplecticPath {
            rotation_numbers,
            basis,
            max_precision_bits: self.max_precision_bits.min(other.max_precision_bits),
        })
    }

    fn scaled(&self, k: u64) -> impl Iterator<Item = ExactAngle> + '_ {
        let k = Rational::from_integer(k.into());
        self.rotation_numbers.iter().map(move |l| l.scale(&k))
    }

    fn reductions(&self, k: u64) -> Result<Vec<Mod1Reduction>> {
        self.scaled(k)
            .map(|a| reduce_mod1(&a, &self.basis, self.max_precision_bits))
            .collect()
    }

    /// True iff some `k lambda_j` is an exact integer.
    pub fn is_degenerate(&self, k: u64) -> bool {
        self.scaled(k).any(|a| a.is_integer())
    }

    /// Conley-Zehnder index of the k-th iterate: `sum_j floor(k l_j) + ceil(k l_j)`.
    pub fn cz_index(&self, k: u64) -> Result<i64> {
        if self.is_degenerate(k) {
            return Err(Error::DegenerateIterate(k));
        }
        Ok(self.reductions(k)?.iter().map(|r| r.floor + r.ceil).sum())
    }

    /// Mean index `2k sum_j lambda_j`.
    pub fn mean_index(&self, k: u64) -> ExactAngle {
        self.scaled(k)
            .fold(ExactAngle::default(), |acc, a| acc + a)
            .scale_int(2)
    }

    /// Twice the sum of nearest integers of `k lambda_j`.
    pub fn loop_part(&self, k: u64) -> Result<i64> {
        if self.is_degenerate(k) {
            return Err(Error::DegenerateIterate(k));
        }
        let mut total = 0;
        for r in self.reductions(k)? {
            match r.nearest {
                Nearest::Integer(m) => total += 2 * m,
                Nearest::Tie => return Err(Error::LoopPartUndefined(k)),
            }
        }
        Ok(total)
    }

    /// Signs of the centered fractional parts of `k lambda_j` in (-1/2, 1/2).
    pub fn short_rotation_signs(&self, k: u64) -> Result<Vec<i64>> {
        if self.is_degenerate(k) {
            return Err(Error::DegenerateIterate(k));
        }
        self.reductions(k)?
            .iter()
            .map(|r| match r.nearest {
                Nearest::Integer(m) if m == r.floor => Ok(1),
                Nearest::Integer(_) => Ok(-1),
                Nearest::Tie => Err(Error::LoopPartUndefined(k)),
            })
            .collect()
    }

    /// Enclosures of `k lambda_j mod 1` inside `[0, 1)`, each of width at most
    /// `2^(1 - precision_bits)`. Exact integers are reported as the point 0.
    pub fn endpoint_fracs(&self, k: u64, precision_bits: u32) -> Result<Vec<Interval>> {
        let target = Rational::new(
            1.into(),
            num_bigint::BigInt::from(2u8).pow(precision_bits.saturating_sub(1)),
        );
        self.scaled(k)
            .map(|a| {
                if a.is_rational() {
                    let q = a.rational_part();
                    return Ok(Interval::point(q - q.floor()));
                }
                let cap =
                    effective_bits(&a, &self.basis, self.max_precision_bits.max(precision_bits))?;
                let mut bits = precision_bits.max(1).min(cap);
                loop {
                    let iv = eval_interval(&a, &self.basis, bits)?;
                    let fl = iv.lo.floor();
                    if iv.hi < &fl + rat_int(1) && iv.width() <= target {
                        return Ok(Interval {
                            lo: &iv.lo - &fl,
                            hi: &iv.hi - &fl,
                        });
                    }
                    if bits >= cap {
                        return Err(Error::PrecisionExhausted(bits));
                    }
                    bits = bits.saturating_mul(2).min(cap);
                }
            })
            .collect()
    }

    pub fn snapshot(&self, k: u64, precision_bits: u32) -> Result<IterateSnapshot> {
        let degenerate = self.is_degenerate(k);
        let cz_index = if degenerate {
            None
        } else {
            Some(self.cz_index(k)?)
        };
        let loop_part = match self.loop_part(k) {
            Ok(v) => Some(v),
            Err(Error::DegenerateIterate(_) | Error::LoopPartUndefined(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(IterateSnapshot {
            k,
            fractional_parts: self.endpoint_fracs(k, precision_bits)?,
            cz_index,
            mean_index: self.mean_index(k),
            loop_part,
        })
    }
}

/// Index data of one iterate; `None` marks a degenerate iterate or an
/// undefined loop part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterateSnapshot {
    pub k: u64,
    pub fractional_parts: Vec<Interval>,
    pub cz_index: Option<i64>,
    pub mean_index: ExactAngle,
    pub loop_part: Option<i64>,
}

impl IterateSnapshot {
    /// `|mean - cz|` as an enclosure, for checking the gap bound.
    pub fn index_gap(&self, basis: &IrrationalBasis, bits: u32) -> Result<Option<Interval>> {
        let Some(cz) = self.cz_index else {
            return Ok(None);
        };
        let d = &self.mean_index - &ExactAngle::from_int(cz);
        let iv = eval_interval(&d, basis, bits)?;
        let (lo, hi) = if iv.hi.is_negative() {
            (-iv.hi, -iv.lo)
        } else if iv.lo.is_negative() {
            (Rational::zero(), iv.hi.clone().max(-iv.lo))
        } else {
            (iv.lo, iv.hi)
        };
        Ok(Some(Interval { lo, hi }))
    }
}

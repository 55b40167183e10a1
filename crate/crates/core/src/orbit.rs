//! Certified floors and fractional parts of `k lambda_j` for all
//! `k <= max_iterate`, computed once with fixed-point integer enclosures.
//!
//! Every rotation number is enclosed in `[L_j, U_j] / D` with a common
//! denominator `D` (exact when `lambda_j` is rational). Floors that the
//! enclosure cannot separate from an integer are recomputed exactly with
//! [`reduce_mod1`]; the fractional bounds stored as `f64` are widened
//! outward and are only used for search pruning, never for verdicts.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact_angle::{effective_bits, reduce_mod1, Nearest, Rational};
use crate::index_core::SymplecticPath;

const FIXED_POINT_BITS: u32 = 62;
const F64_SLACK: f64 = 4e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct IterateData {
    pub floors: Vec<i64>,
    /// Nearest integer of `k lambda_j`; `None` at an exact half-integer.
    pub nearest: Vec<Option<i64>>,
    pub frac_lo: Vec<f64>,
    pub frac_hi: Vec<f64>,
}

impl IterateData {
    pub fn cz_index(&self) -> i64 {
        self.floors.iter().map(|f| 2 * f + 1).sum()
    }

    pub fn loop_part(&self) -> Option<i64> {
        self.nearest
            .iter()
            .try_fold(0, |acc, m| m.map(|m| acc + 2 * m))
    }

    /// Upper bound on `|k lambda_j - nearest|` over all planes.
    pub fn centered_abs_hi(&self) -> f64 {
        (0..self.floors.len())
            .map(|j| match self.nearest[j] {
                Some(m) if m == self.floors[j] => self.frac_hi[j],
                Some(_) => 1.0 - self.frac_lo[j],
                None => 0.5,
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrbitEntry {
    Degenerate,
    /// Floors could not be certified at the available precision.
    Uncertain,
    Regular(IterateData),
}

#[derive(Clone, Debug)]
pub struct OrbitTable {
    n: usize,
    entries: Vec<OrbitEntry>,
}

struct Enclosure {
    den: i128,
    lo: Vec<i128>,
    hi: Vec<i128>,
}

fn big_to_i128(b: &BigInt) -> Result<i128> {
    b.to_i128().ok_or(Error::Overflow)
}

fn enclose(path: &SymplecticPath, max_iterate: u64) -> Result<Enclosure> {
    let mut lcm = BigInt::one();
    for lam in path.rotation_numbers() {
        lcm = lcm.lcm(lam.rational_part().denom());
    }
    let kmax = BigInt::from(max_iterate.max(1));
    let limit = BigInt::one() << 125u32;
    for p in (8..=FIXED_POINT_BITS).rev().step_by(6) {
        let den = &lcm << p;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for lam in path.rotation_numbers() {
            let (l, h) = if lam.is_rational() {
                let v = lam.rational_part() * Rational::from_integer(den.clone());
                (v.to_integer(), v.to_integer())
            } else {
                let want = p + 8 + lam.coeff_l1().ceil().to_integer().bits() as u32;
                let bits = effective_bits(lam, path.basis(), want)?;
                let iv = crate::exact_angle::eval_interval(lam, path.basis(), bits)?;
                let d = Rational::from_integer(den.clone());
                (
                    (&iv.lo * &d).floor().to_integer(),
                    (&iv.hi * &d).ceil().to_integer(),
                )
            };
            lo.push(l);
            hi.push(h);
        }
        let biggest = lo
            .iter()
            .chain(&hi)
            .map(|v| v.abs())
            .max()
            .unwrap_or_default();
        if &biggest * &kmax < limit && &den * &kmax < limit {
            return Ok(Enclosure {
                den: big_to_i128(&den)?,
                lo: lo.iter().map(big_to_i128).collect::<Result<_>>()?,
                hi: hi.iter().map(big_to_i128).collect::<Result<_>>()?,
            });
        }
    }
    Err(Error::Overflow)
}

fn widen_down(x: f64) -> f64 {
    (x - F64_SLACK * (1.0 + x.abs())).max(0.0)
}

fn widen_up(x: f64) -> f64 {
    (x + F64_SLACK * (1.0 + x.abs())).min(1.0)
}

impl OrbitTable {
    pub fn build(path: &SymplecticPath, max_iterate: u64) -> Result<Self> {
        let enc = enclose(path, max_iterate)?;
        let d = enc.den;
        let df = d as f64;
        let n = path.n();
        let mut entries = Vec::with_capacity(max_iterate as usize);
        'k: for k in 1..=max_iterate {
            let ki = k as i128;
            let mut data = IterateData {
                floors: Vec::with_capacity(n),
                nearest: Vec::with_capacity(n),
                frac_lo: Vec::with_capacity(n),
                frac_hi: Vec::with_capacity(n),
            };
            for j in 0..n {
                let kl = ki * enc.lo[j];
                let ku = ki * enc.hi[j];
                let exact = enc.lo[j] == enc.hi[j];
                if exact && kl.rem_euclid(d) == 0 {
                    entries.push(OrbitEntry::Degenerate);
                    continue 'k;
                }
                let mut floor = kl.div_euclid(d);
                let certified = ku < (floor + 1) * d;
                let mut nearest = if 2 * (ku - floor * d) < d {
                    Some(floor)
                } else if 2 * (kl - floor * d) > d {
                    Some(floor + 1)
                } else if exact {
                    None
                } else {
                    Some(i128::MIN)
                };
                if !certified || nearest == Some(i128::MIN) {
                    let a = path.rotation_numbers()[j].scale_int(k as i64);
                    match reduce_mod1(&a, path.basis(), path.max_precision_bits()) {
                        Ok(red) => {
                            floor = red.floor as i128;
                            nearest = match red.nearest {
                                Nearest::Integer(m) => Some(m as i128),
                                Nearest::Tie => None,
                            };
                        }
                        Err(Error::PrecisionExhausted(_) | Error::PrecisionUnavailable { .. }) => {
                            entries.push(OrbitEntry::Uncertain);
                            continue 'k;
                        }
                        Err(e) => return Err(e),
                    }
                }
                let lo = (kl - floor * d).max(0) as f64 / df;
                let hi = (ku - floor * d).min(d) as f64 / df;
                data.floors.push(floor as i64);
                data.nearest.push(nearest.map(|m| m as i64));
                data.frac_lo.push(widen_down(lo));
                data.frac_hi.push(widen_up(hi));
            }
            entries.push(OrbitEntry::Regular(data));
        }
        Ok(OrbitTable { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_iterate(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn get(&self, k: u64) -> Option<&OrbitEntry> {
        if k == 0 {
            return None;
        }
        self.entries.get(k as usize - 1)
    }

    pub fn regular(&self, k: u64) -> Option<&IterateData> {
        match self.get(k) {
            Some(OrbitEntry::Regular(d)) => Some(d),
            _ => None,
        }
    }

    /// Iterates whose floors could not be certified.
    pub fn uncertain(&self) -> Vec<u64> {
        self.iter()
            .filter(|(_, e)| matches!(e, OrbitEntry::Uncertain))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &OrbitEntry)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i as u64 + 1, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_angle::{rat, rat_int, ExactAngle, IrrationalBasis};

    fn path() -> SymplecticPath {
        let basis = IrrationalBasis::new()
            .with_sqrt("r2", rat_int(2))
            .unwrap()
            .with_decimal("a", "0.3819660112501051517954131656343618822796908201942371378645513772947395371810975502927927558", 300)
            .unwrap();
        SymplecticPath::new(
            basis,
            vec![
                ExactAngle::term("r2", rat_int(1)),
                ExactAngle::rational(rat(-2, 7)).with_term("a", rat(3, 2)),
                ExactAngle::rational(rat(1, 6)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn table_agrees_with_exact_indices() {
        let p = path();
        let t = OrbitTable::build(&p, 400).unwrap();
        for (k, e) in t.iter() {
            match e {
                OrbitEntry::Degenerate => assert!(p.is_degenerate(k)),
                OrbitEntry::Uncertain => panic!("uncertain at {k}"),
                OrbitEntry::Regular(d) => {
                    assert_eq!(d.cz_index(), p.cz_index(k).unwrap());
                    assert_eq!(d.loop_part(), p.loop_part(k).ok());
                    let fr = p.endpoint_fracs(k, 60).unwrap();
                    for (j, f) in fr.iter().enumerate() {
                        let mid = f.midpoint_f64();
                        assert!(d.frac_lo[j] <= mid && mid <= d.frac_hi[j]);
                    }
                }
            }
        }
        assert_eq!(t.regular(6), None);
        assert!(t.regular(5).is_some());
    }

    #[test]
    fn half_integer_has_no_nearest() {
        let p = SymplecticPath::from_rationals(&[rat(1, 4)]);
        let t = OrbitTable::build(&p, 8).unwrap();
        assert_eq!(t.regular(2).unwrap().loop_part(), None);
        assert_eq!(t.regular(3).unwrap().loop_part(), Some(2));
        assert_eq!(t.get(4), Some(&OrbitEntry::Degenerate));
    }

    #[test]
    fn coarse_decimal_falls_back_or_flags() {
        let basis = IrrationalBasis::new()
            .with_decimal("a", "0.15", 12)
            .unwrap();
        let p = SymplecticPath::new(basis, vec![ExactAngle::term("a", rat_int(1))]).unwrap();
        let t = OrbitTable::build(&p, 100).unwrap();
        // 20 * 0.15 = 3 cannot be separated from an integer at 12 bits
        assert_eq!(t.get(20), Some(&OrbitEntry::Uncertain));
        assert_eq!(t.regular(1).unwrap().floors, vec![0]);
    }
}

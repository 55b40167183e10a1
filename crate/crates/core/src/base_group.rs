//! The closure of `{Phi^k(1)}` in the torus `T^n`, described by integer
//! lattices, and Conditions B1 and B2.
//!
//! For rotation numbers `lambda` the closure is the annihilator of the
//! relation lattice `R = {v in Z^n : v . lambda in Z}`. Its identity
//! component is the annihilator of the saturation of `R`, the loop lattice
//! is the integer kernel of `R`, and the number of components is the index
//! of `R` in its saturation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_angle::{reduce_mod1, ExactAngle, Rational};
use crate::index_core::SymplecticPath;
use crate::lattice::{integer_kernel, lattice_index, row_hnf, IntMatrix};
use crate::lp::{solve, LinearProgram, LpOutcome};
use crate::orbit::OrbitTable;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BaseGroup {
    pub n: usize,
    /// Row HNF basis of `{v : v . lambda in Z}`.
    pub relation_lattice: IntMatrix,
    /// Row HNF basis of the saturation of the relation lattice.
    pub relation_saturation: IntMatrix,
    pub dim: usize,
    /// Row HNF basis of the loops of the identity component.
    pub loop_lattice: IntMatrix,
    /// Number of connected components.
    pub torsion_order: i128,
}

fn to_i128(b: &BigInt) -> Result<i128> {
    b.to_i128().ok_or(Error::Overflow)
}

/// Multiplies a rational row by the lcm of its denominators.
fn clear_denominators(row: &[Rational]) -> Result<Vec<i128>> {
    let l = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    row.iter()
        .map(|q| to_i128(&(q * Rational::from_integer(l.clone())).to_integer()))
        .collect()
}

fn relation_lattice(lambdas: &[ExactAngle]) -> Result<IntMatrix> {
    let n = lambdas.len();
    let mut names: Vec<&String> = lambdas.iter().flat_map(|l| l.coeffs().keys()).collect();
    names.sort();
    names.dedup();
    let coeff_rows: IntMatrix = names
        .iter()
        .map(|m| {
            let row: Vec<Rational> = lambdas
                .iter()
                .map(|l| l.coeffs().get(*m).cloned().unwrap_or_else(Rational::zero))
                .collect();
            clear_denominators(&row)
        })
        .collect::<Result<_>>()?;
    let kernel = integer_kernel(&coeff_rows, n)?;
    if kernel.is_empty() {
        return Ok(Vec::new());
    }
    // Among kernel vectors v = sum y_i b_i, keep those with q . v integral.
    let q: Vec<&Rational> = lambdas.iter().map(|l| l.rational_part()).collect();
    let pair: Vec<Rational> = kernel
        .iter()
        .map(|b| {
            b.iter()
                .zip(&q)
                .map(|(bi, qi)| *qi * Rational::from_integer(BigInt::from(*bi)))
                .sum()
        })
        .collect();
    let d = pair.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let dd = Rational::from_integer(d.clone());
    let mut congruence: Vec<i128> = pair
        .iter()
        .map(|p| to_i128(&(p * &dd).to_integer()))
        .collect::<Result<_>>()?;
    congruence.push(to_i128(&d)?);
    let t = kernel.len();
    let sols = integer_kernel(&vec![congruence], t + 1)?;
    let rows: IntMatrix = sols
        .iter()
        .map(|y| {
            (0..n)
                .map(|c| (0..t).map(|i| y[i] * kernel[i][c]).sum())
                .collect()
        })
        .collect();
    row_hnf(&rows, n)
}

pub fn compute_base_group(path: &SymplecticPath) -> Result<BaseGroup> {
    let n = path.n();
    let relation = relation_lattice(path.rotation_numbers())?;
    let dim = n - relation.len();
    if dim == 0 {
        return Err(Error::FullyRationalSpectrum);
    }
    let loops = integer_kernel(&relation, n)?;
    let saturation = integer_kernel(&loops, n)?;
    let torsion = if relation.is_empty() {
        1
    } else {
        lattice_index(&relation, &saturation)?
    };
    Ok(BaseGroup {
        n,
        relation_lattice: relation,
        relation_saturation: saturation,
        dim,
        loop_lattice: loops,
        torsion_order: torsion,
    })
}

impl BaseGroup {
    pub fn is_connected(&self) -> bool {
        self.torsion_order == 1
    }

    pub fn codim(&self) -> usize {
        self.n - self.dim
    }

    /// Generator in `[0, N)` of the subgroup of `Z/N` spanned by the Maslov
    /// class on the loop lattice; it is 0 exactly when B1 fails.
    pub fn maslov_generator(&self, chern: u64) -> u64 {
        let m = chern as i128;
        let g = self
            .loop_lattice
            .iter()
            .fold(m, |g, a| crate::lattice::gcd(g, a.iter().sum::<i128>()));
        (g % m) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct B1Verdict {
    pub holds: bool,
    pub witness: Option<Vec<i128>>,
}

/// Condition B1: the Maslov class of some loop is not divisible by `N`.
pub fn check_condition_b1(g: &BaseGroup, chern: u64) -> B1Verdict {
    let m = chern as i128;
    let witness = g
        .loop_lattice
        .iter()
        .find(|a| a.iter().sum::<i128>().rem_euclid(m) != 0)
        .cloned();
    B1Verdict {
        holds: witness.is_some(),
        witness,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum B2Verdict {
    Holds { k: u64, loop_part: i64 },
    FailsUpToBound { bound: u64, note: String },
    NotApplicable { reason: String },
}

/// True iff `lo < a < hi` for the exact value of `a`.
pub(crate) fn strictly_between(
    a: &ExactAngle,
    lo: &Rational,
    hi: &Rational,
    path: &SymplecticPath,
) -> Result<bool> {
    if a.is_rational() {
        let v = a.rational_part();
        return Ok(v > lo && v < hi);
    }
    // floor((a - lo) / (hi - lo)) == 0 with a irrational decides lo < a < hi
    let width = hi - lo;
    let t = (a - &ExactAngle::rational(lo.clone())).scale(&width.recip());
    Ok(reduce_mod1(&t, path.basis(), path.max_precision_bits())?.floor == 0)
}

/// Whether `Rx = z` meets the closed cube `[-eps, eps]^n` for some integer
/// `z != 0`, i.e. whether the cube sees more than one component.
fn cube_sees_other_components(g: &BaseGroup, eps: &Rational) -> Result<bool> {
    let rows = &g.relation_saturation;
    if rows.is_empty() {
        return Ok(false);
    }
    let n = g.n;
    let bounds: Vec<i128> = rows
        .iter()
        .map(|r| {
            let l1: i128 = r.iter().map(|x| x.abs()).sum();
            to_i128(
                &(eps * Rational::from_integer(l1.into()))
                    .floor()
                    .to_integer(),
            )
        })
        .collect::<Result<_>>()?;
    let mut z = vec![0i128; rows.len()];
    let mut found = false;
    enumerate_box(&bounds, 0, &mut z, &mut |z| {
        if found || z.iter().all(|&v| v == 0) {
            return Ok(());
        }
        // x = y - eps, 0 <= y <= 2 eps, R y = z + eps R 1
        let two_eps = eps * Rational::from_integer(2.into());
        let eq = rows
            .iter()
            .zip(z)
            .map(|(r, zi)| {
                let a: Vec<Rational> = r
                    .iter()
                    .map(|&x| Rational::from_integer(x.into()))
                    .collect();
                let s: i128 = r.iter().sum();
                (
                    a,
                    Rational::from_integer((*zi).into()) + eps * Rational::from_integer(s.into()),
                )
            })
            .collect();
        let le = (0..n)
            .map(|j| {
                let mut a = vec![Rational::zero(); n];
                a[j] = Rational::one();
                (a, two_eps.clone())
            })
            .collect();
        let lp = LinearProgram {
            objective: vec![Rational::zero(); n],
            eq,
            le,
        };
        if solve(&lp) != LpOutcome::Infeasible {
            found = true;
        }
        Ok(())
    })?;
    Ok(found)
}

pub(crate) fn enumerate_box(
    bounds: &[i128],
    i: usize,
    z: &mut Vec<i128>,
    f: &mut dyn FnMut(&[i128]) -> Result<()>,
) -> Result<()> {
    if i == bounds.len() {
        return f(z);
    }
    for v in -bounds[i]..=bounds[i] {
        z[i] = v;
        enumerate_box(bounds, i + 1, z, f)?;
    }
    Ok(())
}

/// Condition B2 by bounded search over iterates, using the cube
/// `(-eps, eps)^n` as the neighborhood of the identity.
pub fn check_condition_b2(
    path: &SymplecticPath,
    chern: u64,
    epsilon: &Rational,
    max_iterate: u64,
) -> Result<B2Verdict> {
    let table = OrbitTable::build(path, max_iterate)?;
    check_condition_b2_with(path, &compute_base_group(path)?, &table, chern, epsilon)
}

pub fn check_condition_b2_with(
    path: &SymplecticPath,
    g: &BaseGroup,
    table: &OrbitTable,
    chern: u64,
    epsilon: &Rational,
) -> Result<B2Verdict> {
    if !epsilon.is_positive() || *epsilon >= Rational::new(1.into(), 4.into()) {
        return Err(Error::InvalidInput("epsilon must lie in (0, 1/4)".into()));
    }
    if !g.is_connected() {
        return Ok(B2Verdict::NotApplicable {
            reason: format!("base group has {} components", g.torsion_order),
        });
    }
    let bound = table.max_iterate();
    if chern == 1 {
        return Ok(B2Verdict::FailsUpToBound {
            bound: 0,
            note: "every loop part is divisible by 2 when N = 1".into(),
        });
    }
    if cube_sees_other_components(g, epsilon)? {
        return Ok(B2Verdict::NotApplicable {
            reason: format!(
                "the cube of radius {epsilon} meets more than one component of the preimage of the base group; use a smaller epsilon"
            ),
        });
    }
    let eps_f = crate::exact_angle::rational_to_f64(epsilon) + 1e-12;
    let modulus = 2 * chern as i64;
    let neg_eps = -epsilon.clone();
    for k in 1..=bound {
        let Some(d) = table.regular(k) else { continue };
        let Some(lp) = d.loop_part() else { continue };
        if lp.rem_euclid(modulus) == 0 || d.centered_abs_hi() >= eps_f {
            continue;
        }
        let mut inside = true;
        for (lam, m) in path.rotation_numbers().iter().zip(&d.nearest) {
            let c = lam.scale_int(k as i64) - ExactAngle::from_int(m.unwrap_or(0));
            if !strictly_between(&c, &neg_eps, epsilon, path)? {
                inside = false;
                break;
            }
        }
        if inside {
            return Ok(B2Verdict::Holds { k, loop_part: lp });
        }
    }
    Ok(B2Verdict::FailsUpToBound {
        bound,
        note: format!("no iterate up to {bound} returns to the cube with loop part prime to 2N"),
    })
}

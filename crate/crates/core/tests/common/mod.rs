#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use pseudorot::exact_angle::{rat, ExactAngle, IrrationalBasis, Rational};
use pseudorot::index_core::SymplecticPath;
use rand::Rng;

/// Grid steps per unit of time for the crossing count; prime so that no
/// interior grid point of a rational path lands on an integer angle.
pub const STEPS_PER_UNIT: usize = 10_007;

/// Maslov index by counting crossings of the discretized path of rotation
/// matrices with the eigenvalue-one locus, for `t` in `[0, k]`, all
/// `k <= k_max`. Each plane is unwrapped from the increments
/// `R(t_i)^T R(t_{i+1})` only. Entries are `None` where the end point is
/// degenerate.
pub fn crossing_indices(lams: &[f64], k_max: u64) -> Vec<Option<i64>> {
    let mut out = vec![Some(0i64); k_max as usize];
    for &lam in lams {
        let rot = |t: f64| {
            let (s, c) = (2.0 * std::f64::consts::PI * lam * t).sin_cos();
            [[c, -s], [s, c]]
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut prev = rot(0.0);
        let mut theta = 0.0f64;
        let mut total = 0i64;
        let mut started = false;
        for i in 1..=(k_max as usize * STEPS_PER_UNIT) {
            let t = i as f64 / STEPS_PER_UNIT as f64;
            let cur = rot(t);
            // first column of prev^T cur
            let c0 = prev[0][0] * cur[0][0] + prev[1][0] * cur[1][0];
            let s0 = prev[0][1] * cur[0][0] + prev[1][1] * cur[1][0];
            let inc = s0.atan2(c0);
            if !started {
                // the start is always a crossing, counted with half weight
                if inc == 0.0 {
                    for o in out.iter_mut() {
                        *o = None;
                    }
                    break;
                }
                total += inc.signum() as i64;
                started = true;
            }
            let next = theta + inc;
            let crossings = if inc > 0.0 {
                (next / two_pi).floor() - (theta / two_pi).floor()
            } else {
                (theta / two_pi).ceil() - (next / two_pi).ceil()
            };
            total += 2 * inc.signum() as i64 * crossings as i64;
            theta = next;
            prev = cur;
            if i % STEPS_PER_UNIT == 0 {
                let k = i / STEPS_PER_UNIT;
                let end = &mut out[k - 1];
                let degenerate = 2.0 - 2.0 * cur[0][0] < 1e-9;
                *end = match (*end, degenerate) {
                    (Some(v), false) => Some(v + total),
                    _ => None,
                };
            }
        }
    }
    out
}

/// `floor(p/q * sqrt(m) * k)` from integer square roots only.
pub fn sqrt_floor(p: i64, q: i64, m: i64, k: i64) -> i64 {
    assert!(q > 0 && m > 0);
    let num = BigInt::from(p * k);
    let radicand = &num * &num * m;
    let root = radicand.sqrt();
    let exact = &root * &root == radicand;
    let floor_x = if num.is_negative() {
        -root - if exact { 0 } else { 1 }
    } else {
        root
    };
    num_integer::Integer::div_floor(&floor_x, &BigInt::from(q))
        .to_i64()
        .unwrap()
}

pub fn sqrt_basis() -> IrrationalBasis {
    IrrationalBasis::new()
        .with_sqrt("r2", rat(2, 1))
        .unwrap()
        .with_sqrt("r3", rat(3, 1))
        .unwrap()
        .with_sqrt("r5", rat(5, 1))
        .unwrap()
}

pub fn random_rational<R: Rng>(rng: &mut R, max_den: i64, bound: i64) -> Rational {
    let q = rng.gen_range(1..=max_den);
    let p = rng.gen_range(-bound * q..=bound * q);
    rat(p, q)
}

/// `q + sum c_m sqrt(m)` in each plane with at least one irrational term, so
/// no iterate is degenerate.
pub fn random_structured_path<R: Rng>(rng: &mut R, n: usize) -> SymplecticPath {
    let names = ["r2", "r3", "r5"];
    let lams = (0..n)
        .map(|_| {
            let mut a = ExactAngle::rational(random_rational(rng, 6, 1));
            let first = rng.gen_range(0..names.len());
            for (i, name) in names.iter().enumerate() {
                if i == first || rng.gen_bool(0.3) {
                    let mut c = random_rational(rng, 7, 1);
                    if c.is_zero() {
                        c = rat(1, 7);
                    }
                    a = a.with_term(name, c);
                }
            }
            a
        })
        .collect();
    SymplecticPath::new(sqrt_basis(), lams).unwrap()
}

/// `alpha * (s2, -s1)` with `alpha = c sqrt(m)`: a circle with relation
/// `s1 x + s2 y = 0`.
pub fn slope_path(s1: i64, s2: i64, radicand: i64, coeff: Rational) -> SymplecticPath {
    let basis = IrrationalBasis::new()
        .with_sqrt("a", rat(radicand, 1))
        .unwrap();
    let lams = vec![
        ExactAngle::term("a", coeff.clone() * rat(s2, 1)),
        ExactAngle::term("a", coeff * rat(-s1, 1)),
    ];
    SymplecticPath::new(basis, lams).unwrap()
}

/// Primitive pairs `(s1, s2)` with `s1 > 0`, `s2 != 0`, `|s_i| <= b`.
pub fn connected_slopes(b: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for s1 in 1..=b {
        for s2 in -b..=b {
            if s2 != 0 && num_integer::gcd(s1, s2) == 1 {
                out.push((s1, s2));
            }
        }
    }
    out
}

//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Problems here have at most a few dozen variables; the tableau is
//! recomputed naively and no attempt is made at numerical cleverness.

use num_traits::{One, Signed, Zero};

use crate::exact_angle::Rational;

/// maximize `objective . x` subject to `eq` rows (`a . x = b`), `le` rows
/// (`a . x <= b`) and `x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub eq: Vec<(Vec<Rational>, Rational)>,
    pub le: Vec<(Vec<Rational>, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Rational>, value: Rational },
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        self.rhs[r] /= &p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost . x` over the current basis. Returns false if unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: &[bool]) -> bool {
        loop {
            let ncols = cost.len();
            let entering = (0..ncols).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let mut z = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.rows[i][j].is_zero() {
                        z -= &cost[b] * &self.rows[i][j];
                    }
                }
                z.is_positive()
            });
            let Some(c) = entering else {
                return true;
            };
            let mut best: Option<(Rational, usize)> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][c].is_positive() {
                    let ratio = &self.rhs[i] / &self.rows[i][c];
                    let better = match &best {
                        None => true,
                        Some((br, bi)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((ratio, i));
                    }
                }
            }
            match best {
                Some((_, r)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let nx = lp.objective.len();
    let nslack = lp.le.len();
    let m = lp.eq.len() + lp.le.len();
    let nart = m;
    let ncols = nx + nslack + nart;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (k, (a, b)) in lp.eq.iter().chain(&lp.le).enumerate() {
        let mut row = vec![Rational::zero(); ncols];
        row[..nx].clone_from_slice(&a[..nx]);
        if k >= lp.eq.len() {
            row[nx + (k - lp.eq.len())] = Rational::one();
        }
        let mut b = b.clone();
        if b.is_negative() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            b = -b;
        }
        row[nx + nslack + k] = Rational::one();
        rows.push(row);
        rhs.push(b);
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis: (0..m).map(|k| nx + nslack + k).collect(),
    };

    let mut phase1 = vec![Rational::zero(); ncols];
    for v in phase1.iter_mut().skip(nx + nslack) {
        *v = -Rational::one();
    }
    t.optimize(&phase1, &vec![true; ncols]);
    let infeas: Rational = t
        .basis
        .iter()
        .zip(&t.rhs)
        .filter(|(b, _)| **b >= nx + nslack)
        .map(|(_, v)| v.clone())
        .sum();
    if infeas.is_positive() {
        return LpOutcome::Infeasible;
    }
    // Drive zero-level artificials out of the basis or drop redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= nx + nslack {
            match (0..nx + nslack).find(|&j| !t.rows[r][j].is_zero()) {
                Some(c) => t.pivot(r, c),
                None => {
                    t.rows.remove(r);
                    t.rhs.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut cost = vec![Rational::zero(); ncols];
    cost[..nx].clone_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..ncols).map(|j| j < nx + nslack).collect();
    if !t.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); nx];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < nx {
            x[b] = t.rhs[i].clone();
        }
    }
    let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

//! Condition A: points of the base group inside the open cube `(0, 1/r)^n`.
//!
//! The preimage of the base group in `[0, 1]^n` is a union of convex pieces
//! `{x : R x = z}` indexed by integer offsets `z`. Whether one of them meets
//! the open cube is a strict-feasibility question, answered exactly by
//! maximizing a margin with a rational linear program.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::base_group::{enumerate_box, BaseGroup};
use crate::error::{Error, Result};
use crate::exact_angle::{format_rational, Rational};
use crate::index_core::SymplecticPath;
use crate::lattice::IntMatrix;
use crate::lp::{solve, LinearProgram, LpOutcome};
use crate::orbit::OrbitTable;
use crate::partitions::{find_extremal_with, SearchOptions};

fn q(v: i128) -> Rational {
    Rational::from_integer(v.into())
}

/// `{x in [0,1]^n : relations . x = offset}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeComponent {
    pub index: usize,
    pub relations: IntMatrix,
    pub offset: Vec<i128>,
    /// `min sum x_j` over the piece.
    pub distance: Rational,
    /// Whether the piece contains a vertex of the cube, i.e. maps onto `0`.
    pub contains_vertex: bool,
}

impl CubeComponent {
    pub fn contains(&self, x: &[Rational]) -> bool {
        x.iter().all(|v| !v.is_negative() && *v <= Rational::one())
            && self.relations.iter().zip(&self.offset).all(|(row, z)| {
                row.iter().zip(x).map(|(a, b)| q(*a) * b).sum::<Rational>() == q(*z)
            })
    }
}

fn eq_rows(rel: &IntMatrix, z: &[i128]) -> Vec<(Vec<Rational>, Rational)> {
    rel.iter()
        .zip(z)
        .map(|(row, zi)| (row.iter().map(|&a| q(a)).collect(), q(*zi)))
        .collect()
}

fn unit_rows(n: usize, extra: usize, rhs: Rational) -> Vec<(Vec<Rational>, Rational)> {
    (0..n)
        .map(|j| {
            let mut a = vec![Rational::zero(); n + extra];
            a[j] = Rational::one();
            (a, rhs.clone())
        })
        .collect()
}

/// Pieces of the preimage of the base group in the closed unit cube, sorted
/// by their `l1` distance from the origin, ties broken by offset.
pub fn enumerate_components(g: &BaseGroup) -> Result<Vec<CubeComponent>> {
    let n = g.n;
    let rel = &g.relation_lattice;
    let lo: Vec<i128> = rel
        .iter()
        .map(|r| r.iter().filter(|v| **v < 0).sum())
        .collect();
    let hi: Vec<i128> = rel
        .iter()
        .map(|r| r.iter().filter(|v| **v > 0).sum())
        .collect();
    let half: Vec<i128> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a + 1) / 2 + 1)
        .collect();
    let mut out = Vec::new();
    let mut z = vec![0i128; rel.len()];
    enumerate_box(&half, 0, &mut z, &mut |w| {
        // shift the symmetric box onto [lo, hi]
        let z: Vec<i128> = w
            .iter()
            .zip(&lo)
            .zip(&half)
            .map(|((v, l), h)| v + h + l)
            .collect();
        if z.iter().zip(&lo).zip(&hi).any(|((v, l), h)| v < l || v > h) {
            return Ok(());
        }
        let lp = LinearProgram {
            objective: vec![-Rational::one(); n],
            eq: eq_rows(rel, &z),
            le: unit_rows(n, 0, Rational::one()),
        };
        if let LpOutcome::Optimal { value, .. } = solve(&lp) {
            let contains_vertex = (0..1u32 << n).any(|mask| {
                rel.iter().zip(&z).all(|(row, zi)| {
                    (0..n)
                        .filter(|j| mask >> j & 1 == 1)
                        .map(|j| row[j])
                        .sum::<i128>()
                        == *zi
                })
            });
            out.push(CubeComponent {
                index: 0,
                relations: rel.clone(),
                offset: z,
                distance: -value,
                contains_vertex,
            });
        }
        Ok(())
    })?;
    out.sort_by(|a, b| {
        a.distance
            .cmp(&b.distance)
            .then_with(|| a.offset.cmp(&b.offset))
    });
    for (i, c) in out.iter_mut().enumerate() {
        c.index = i;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CubeIntersection {
    Nonempty {
        component: usize,
        witness: Vec<Rational>,
    },
    Empty,
}

/// Strict feasibility in one piece: maximize `d` with `x = y + d`,
/// `y_j + 2d <= 1/r`, `R x = z`, `y, d >= 0`.
fn margin_point(c: &CubeComponent, n: usize, r: usize) -> Option<Vec<Rational>> {
    let inv_r = Rational::new(1.into(), (r as i64).into());
    let mut objective = vec![Rational::zero(); n + 1];
    objective[n] = Rational::one();
    let eq = c
        .relations
        .iter()
        .zip(&c.offset)
        .map(|(row, zi)| {
            let mut a: Vec<Rational> = row.iter().map(|&v| q(v)).collect();
            a.push(q(row.iter().sum()));
            (a, q(*zi))
        })
        .collect();
    let mut le = unit_rows(n, 1, inv_r);
    for row in le.iter_mut() {
        row.0[n] = q(2);
    }
    match solve(&LinearProgram { objective, eq, le }) {
        LpOutcome::Optimal { x, value } if value.is_positive() => {
            Some(x[..n].iter().map(|y| y + &value).collect())
        }
        _ => None,
    }
}

/// Decides whether the base group meets the open cube `(0, 1/r)^n`.
pub fn cube_intersection(g: &BaseGroup, r: usize) -> Result<CubeIntersection> {
    if r == 0 {
        return Err(Error::InvalidInput("r must be at least 1".into()));
    }
    for c in enumerate_components(g)? {
        if let Some(witness) = margin_point(&c, g.n, r) {
            return Ok(CubeIntersection::Nonempty {
                component: c.index,
                witness,
            });
        }
    }
    Ok(CubeIntersection::Empty)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// A point of the base group in the open cube, as exact fractions.
    Point(Vec<String>),
    Iterates(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionAVerdict {
    pub status: Status,
    pub witness: Option<Witness>,
    pub scope_note: String,
}

/// Exact decision where the lattice criterion is known to be sharp
/// (codimension at most one); otherwise only the sufficient direction.
pub fn decide_condition_a(g: &BaseGroup, r: usize) -> Result<ConditionAVerdict> {
    Ok(match cube_intersection(g, r)? {
        CubeIntersection::Nonempty { witness, .. } => ConditionAVerdict {
            status: Status::Yes,
            witness: Some(Witness::Point(witness.iter().map(format_rational).collect())),
            scope_note: format!("the base group meets the open cube (0, 1/{r})^{}", g.n),
        },
        CubeIntersection::Empty if g.codim() <= 1 => ConditionAVerdict {
            status: Status::No,
            witness: None,
            scope_note: format!(
                "the base group misses (0, 1/{r})^{} and has codimension {}, so the criterion is exact",
                g.n,
                g.codim()
            ),
        },
        CubeIntersection::Empty => ConditionAVerdict {
            status: Status::Unknown,
            witness: None,
            scope_note: format!(
                "the base group misses (0, 1/{r})^{} but has codimension {}; the cube criterion is only sufficient there",
                g.n,
                g.codim()
            ),
        },
    })
}

/// Bounded search for iterates `k_1 <= ... <= k_r` with
/// `sum_i frac(k_i lambda_j) < 1` for all j; least by sum, then
/// lexicographically.
pub fn search_condition_a(
    path: &SymplecticPath,
    r: usize,
    max_iterate: u64,
    precision_bits: u32,
) -> Result<Option<Vec<u64>>> {
    let path = path.clone().with_max_precision(precision_bits);
    let table = OrbitTable::build(&path, max_iterate)?;
    search_condition_a_with(&path, &table, r)
}

pub fn search_condition_a_with(
    path: &SymplecticPath,
    table: &OrbitTable,
    r: usize,
) -> Result<Option<Vec<u64>>> {
    let opts = SearchOptions::new(table.max_iterate());
    Ok(find_extremal_with(path, table, r, &opts)?
        .partition
        .map(|p| p.parts))
}

//! Four-dimensional case (`n = 2`, one-dimensional base group): slopes,
//! blacklists for `N = 2, 3`, index residues on cube components, and the
//! length-three search.

use num_traits::Zero;
use serde::Serialize;

use crate::base_group::{check_condition_b1, compute_base_group, BaseGroup};
use crate::condition_a::CubeComponent;
use crate::error::{Error, Result};
use crate::exact_angle::{format_rational, ExactAngle, Rational};
use crate::index_core::SymplecticPath;
use crate::lattice::solve_integer;
use crate::orbit::OrbitTable;
use crate::partitions::{find_extremal_with, Partition, SearchOptions, SearchOutcome};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlopeData {
    pub s1: i128,
    pub s2: i128,
    #[serde(serialize_with = "ser_rational")]
    pub slope: Rational,
    pub connected: bool,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(q))
}

fn frac(a: i64, b: i64) -> Rational {
    Rational::new(a.into(), b.into())
}

/// The relation `s1 x1 + s2 x2 = 0` of the identity component, normalized
/// to `gcd = 1` and `s1 > 0`; the slope is `-s1 / s2`.
pub fn slope(g: &BaseGroup) -> Result<SlopeData> {
    if g.n != 2 || g.dim != 1 {
        return Err(Error::WrongDimension { n: g.n, dim: g.dim });
    }
    let row = &g.relation_saturation[0];
    let sign = if row[0] < 0 { -1 } else { 1 };
    let (s1, s2) = (sign * row[0], sign * row[1]);
    if s1 == 0 || s2 == 0 {
        return Err(Error::DegenerateSlope(s1, s2));
    }
    Ok(SlopeData {
        s1,
        s2,
        slope: -Rational::new(s1.into(), s2.into()),
        connected: g.is_connected(),
    })
}

fn unsupported(chern: u64) -> Error {
    let note = if chern == 4 {
        " (the case N = 4 is extremely hypothetical and not considered here)".to_string()
    } else {
        String::new()
    };
    Error::UnsupportedN { n: chern, note }
}

/// Slopes for which no length-three partition with the residue condition
/// is guaranteed.
pub fn blacklist(s: &SlopeData, chern: u64) -> Result<bool> {
    let list = match chern {
        2 => vec![
            frac(1, 1),
            frac(-1, 1),
            frac(3, 1),
            frac(1, 3),
            frac(-2, 1),
            frac(-1, 2),
        ],
        3 => vec![
            frac(-1, 1),
            frac(2, 1),
            frac(-2, 1),
            frac(1, 2),
            frac(-1, 2),
        ],
        _ => return Err(unsupported(chern)),
    };
    Ok(list.contains(&s.slope))
}

/// Slopes for which a connected base group misses `(0, 1/3)^2`.
pub fn condition_a_fails_r3(s: &SlopeData) -> bool {
    s.connected && [frac(-1, 1), frac(-2, 1), frac(-1, 2)].contains(&s.slope)
}

/// `R lambda`, which is an integer vector for the relation rows.
fn relation_values(g: &BaseGroup, path: &SymplecticPath) -> Result<Vec<i128>> {
    g.relation_lattice
        .iter()
        .map(|row| {
            let v = row
                .iter()
                .zip(path.rotation_numbers())
                .fold(ExactAngle::default(), |acc, (c, l)| {
                    acc + l.scale(&Rational::from_integer((*c).into()))
                });
            if !v.is_integer() {
                return Err(Error::InvalidInput(
                    "relation row does not pair integrally".into(),
                ));
            }
            v.rational_part()
                .to_integer()
                .try_into()
                .map_err(|_| Error::Overflow)
        })
        .collect()
}

/// Checks that loops and the base point have Maslov values divisible by N;
/// returns an integer `u` with `R u = R lambda`.
fn residue_hypotheses(path: &SymplecticPath, g: &BaseGroup, chern: u64) -> Result<Vec<i128>> {
    if g.n != 2 || g.dim != 1 {
        return Err(Error::WrongDimension { n: g.n, dim: g.dim });
    }
    if check_condition_b1(g, chern).holds {
        return Err(Error::HypothesesNotMet(format!(
            "some loop has Maslov value not divisible by N = {chern}"
        )));
    }
    let c = relation_values(g, path)?;
    let u = solve_integer(&g.relation_lattice, g.n, &c)?.ok_or_else(|| {
        Error::HypothesesNotMet("R lambda is not the image of an integer vector".into())
    })?;
    if u.iter().sum::<i128>().rem_euclid(chern as i128) != 0 {
        return Err(Error::HypothesesNotMet(format!(
            "the loop part of the path is not divisible by 2N = {}",
            2 * chern
        )));
    }
    Ok(u)
}

/// Offset `z = R frac(k lambda)` of the piece that the k-th end point lands on.
fn landing_offset(g: &BaseGroup, c: &[i128], floors: &[i64], k: u64) -> Vec<i128> {
    g.relation_lattice
        .iter()
        .zip(c)
        .map(|(row, ci)| {
            let rf: i128 = row.iter().zip(floors).map(|(a, f)| a * *f as i128).sum();
            k as i128 * ci - rf
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ResidueOutcome {
    Resolved { residue: i64, k: u64 },
    Unresolved { bound: u64 },
}

/// `mu(Phi^k) mod 2N` for the least `k` whose end point lies on `component`.
pub fn component_index_residue(
    path: &SymplecticPath,
    component: &CubeComponent,
    chern: u64,
    max_iterate: u64,
) -> Result<ResidueOutcome> {
    let g = compute_base_group(path)?;
    let table = OrbitTable::build(path, max_iterate)?;
    component_index_residue_with(path, &g, &table, component, chern)
}

pub fn component_index_residue_with(
    path: &SymplecticPath,
    g: &BaseGroup,
    table: &OrbitTable,
    component: &CubeComponent,
    chern: u64,
) -> Result<ResidueOutcome> {
    residue_hypotheses(path, g, chern)?;
    let c = relation_values(g, path)?;
    let modulus = 2 * chern as i64;
    for (k, _) in table.iter() {
        let Some(d) = table.regular(k) else { continue };
        if landing_offset(g, &c, &d.floors, k) == component.offset {
            return Ok(ResidueOutcome::Resolved {
                residue: d.cz_index().rem_euclid(modulus),
                k,
            });
        }
    }
    Ok(ResidueOutcome::Unresolved {
        bound: table.max_iterate(),
    })
}

/// The residue every landing iterate on `component` must have, from
/// `mu = 2 sum floor(k lambda) + n` and the divisibility hypotheses.
pub fn predicted_residue(
    path: &SymplecticPath,
    g: &BaseGroup,
    component: &CubeComponent,
    chern: u64,
) -> Result<i64> {
    residue_hypotheses(path, g, chern)?;
    let neg: Vec<i128> = component.offset.iter().map(|z| -z).collect();
    let w = solve_integer(&g.relation_lattice, g.n, &neg)?.ok_or_else(|| {
        Error::InvalidInput("component offset is not attained by integer points".into())
    })?;
    let sum: i128 = w.iter().sum();
    Ok((2 * sum as i64 + g.n as i64).rem_euclid(2 * chern as i64))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Length3Outcome {
    pub partition: Option<Partition>,
    /// Absence is proved, not just bounded.
    pub exact_no: bool,
    pub slope: Option<SlopeData>,
    pub notes: Vec<String>,
    pub search: Option<SearchOutcome>,
}

/// Extremal partition of length three with `mu(Phi^{k_i}) != 2 mod 2N`.
pub fn find_length3(path: &SymplecticPath, chern: u64, max_iterate: u64) -> Result<Length3Outcome> {
    let table = OrbitTable::build(path, max_iterate)?;
    find_length3_with(path, &table, chern)
}

pub fn find_length3_with(
    path: &SymplecticPath,
    table: &OrbitTable,
    chern: u64,
) -> Result<Length3Outcome> {
    if path.n() != 2 {
        let dim = compute_base_group(path).map(|g| g.dim).unwrap_or(0);
        return Err(Error::WrongDimension { n: path.n(), dim });
    }
    let g = compute_base_group(path)?;
    let mut notes = Vec::new();
    let slope_data = if g.dim == 1 { Some(slope(&g)?) } else { None };
    if let Some(s) = &slope_data {
        if condition_a_fails_r3(s) {
            notes.push(format!(
                "connected base group with slope {}: Condition A fails for r = 3",
                format_rational(&s.slope)
            ));
            return Ok(Length3Outcome {
                partition: None,
                exact_no: true,
                slope: slope_data,
                notes,
                search: None,
            });
        }
        if !s.connected {
            notes.push("disconnected base group: handled by search only".into());
        } else if matches!(chern, 2 | 3) && blacklist(s, chern)? {
            notes.push(format!(
                "advisory: slope {} is blacklisted for N = {chern}; some paths with this slope admit no such partition, so a miss is expected but not proved",
                format_rational(&s.slope)
            ));
        }
    }
    let opts = SearchOptions::new(table.max_iterate()).with_residue(Some(chern));
    let out = find_extremal_with(path, table, 3, &opts)?;
    if out.partition.is_none() {
        notes.push(format!(
            "no partition found up to max_iterate = {}",
            table.max_iterate()
        ));
    }
    Ok(Length3Outcome {
        partition: out.partition.clone(),
        exact_no: false,
        slope: slope_data,
        notes,
        search: Some(out),
    })
}

impl SlopeData {
    pub fn is_positive(&self) -> bool {
        self.slope > Rational::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition_a::enumerate_components;
    use crate::exact_angle::{rat_int, IrrationalBasis};

    /// `lambda = alpha (s2, -s1)` with `alpha = sqrt 2 - 1`.
    fn along(s1: i64, s2: i64) -> SymplecticPath {
        let basis = IrrationalBasis::new().with_sqrt("a", rat_int(2)).unwrap();
        let lam = |c: i64| ExactAngle::rational(rat_int(-c)).with_term("a", rat_int(c));
        SymplecticPath::new(basis, vec![lam(s2), lam(-s1)]).unwrap()
    }

    #[test]
    fn slopes() {
        let g = compute_base_group(&along(2, -1)).unwrap();
        let s = slope(&g).unwrap();
        assert_eq!((s.s1, s.s2), (2, -1));
        assert_eq!(s.slope, rat_int(2));
        let s = slope(&compute_base_group(&along(1, 1)).unwrap()).unwrap();
        assert_eq!(s.slope, rat_int(-1));
        assert!(blacklist(&s, 3).unwrap());
        let basis = IrrationalBasis::new()
            .with_sqrt("a", rat_int(2))
            .unwrap()
            .with_sqrt("b", rat_int(3))
            .unwrap();
        let p = SymplecticPath::new(
            basis,
            vec![
                ExactAngle::term("a", rat_int(1)),
                ExactAngle::term("b", rat_int(1)),
            ],
        )
        .unwrap();
        assert_eq!(
            slope(&compute_base_group(&p).unwrap()),
            Err(Error::WrongDimension { n: 2, dim: 2 })
        );
    }

    #[test]
    fn blacklist_membership() {
        let s = |a, b| SlopeData {
            s1: a,
            s2: b,
            slope: -Rational::new(a.into(), b.into()),
            connected: true,
        };
        assert!(blacklist(&s(3, -1), 2).unwrap());
        assert!(!blacklist(&s(5, -1), 2).unwrap());
        assert!(blacklist(&s(1, 1), 3).unwrap());
        match blacklist(&s(1, 1), 4) {
            Err(Error::UnsupportedN { note, .. }) => {
                assert!(note.contains("extremely hypothetical"))
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn residues_are_constant_on_pieces() {
        // slope -3: relation (3, 1), loop (1, -3) of Maslov value -2
        let p = along(3, 1);
        let g = compute_base_group(&p).unwrap();
        let table = OrbitTable::build(&p, 3000).unwrap();
        let c = relation_values(&g, &p).unwrap();
        for comp in enumerate_components(&g).unwrap() {
            let Ok(expected) = predicted_residue(&p, &g, &comp, 2) else {
                panic!()
            };
            let mut hits = 0;
            for k in 1..=3000 {
                let d = table.regular(k).unwrap();
                if landing_offset(&g, &c, &d.floors, k) == comp.offset {
                    assert_eq!(d.cz_index().rem_euclid(4), expected);
                    hits += 1;
                }
            }
            if comp.contains_vertex && hits > 0 {
                assert_eq!(expected, 0);
            }
        }
    }

    #[test]
    fn hypotheses_are_checked() {
        // slope -2 has loop (1, -2) of Maslov value -1: B1 holds for N = 2
        let p = along(2, 1);
        let g = compute_base_group(&p).unwrap();
        let comp = &enumerate_components(&g).unwrap()[0];
        assert!(matches!(
            component_index_residue(&p, comp, 2, 100),
            Err(Error::HypothesesNotMet(_))
        ));
    }

    #[test]
    fn length3_cases() {
        let out = find_length3(&along(1, 1), 2, 1000).unwrap();
        assert!(out.exact_no && out.partition.is_none());
        let out = find_length3(&along(5, -1), 2, 20_000).unwrap();
        let part = out.partition.unwrap();
        assert!(part.is_extremal(2));
        assert!(part.indices.iter().all(|m| (m - 2).rem_euclid(4) != 0));
        let out = find_length3(&along(3, -1), 2, 20_000).unwrap();
        assert!(out.partition.is_none());
        assert!(out.notes[0].starts_with("advisory"));
        let out = find_length3(&along(1, 4), 3, 20_000).unwrap();
        assert!(out.partition.is_some());
    }
}

//! Defects of partitions `k = k_1 + ... + k_r` and the search for
//! extremal ones.
//!
//! For a non-degenerate iterate every plane contributes `2 floor(k l) + 1`
//! to the index, so plane j contributes `r - 1 - 2 floor(sum_i frac(k_i l_j))`
//! to the defect. A partition is therefore extremal exactly when
//! `sum_i frac(k_i l_j) < 1` for every plane. The search works on that
//! form, using fractional parts from an [`OrbitTable`], and every witness is
//! re-verified with exact indices before it is returned.

use serde::Serialize;

use crate::base_group::compute_base_group;
use crate::error::{Error, Result};
use crate::index_core::SymplecticPath;
use crate::orbit::{IterateData, OrbitEntry, OrbitTable};

pub const DEFAULT_MAX_ITERATE: u64 = 100_000;
const DEFAULT_NODE_LIMIT: u64 = 50_000_000;
/// Tuples whose weighted slack is below this are not searched for.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub parts: Vec<u64>,
    pub total: u64,
    pub indices: Vec<i64>,
    pub total_index: i64,
    pub defect: i64,
}

impl Partition {
    pub fn evaluate(path: &SymplecticPath, parts: &[u64]) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidInput(
                "parts must be positive and nonempty".into(),
            ));
        }
        let total: u64 = parts.iter().sum();
        let indices = parts
            .iter()
            .map(|&k| path.cz_index(k))
            .collect::<Result<Vec<_>>>()?;
        let total_index = path.cz_index(total)?;
        let defect = indices.iter().sum::<i64>() - total_index;
        Ok(Partition {
            parts: parts.to_vec(),
            total,
            indices,
            total_index,
            defect,
        })
    }

    pub fn r(&self) -> usize {
        self.parts.len()
    }

    pub fn is_extremal(&self, n: usize) -> bool {
        self.defect == (self.r() as i64 - 1) * n as i64
    }
}

/// `sum_i mu(Phi^{k_i}) - mu(Phi^k)`.
pub fn defect(path: &SymplecticPath, parts: &[u64]) -> Result<i64> {
    Ok(Partition::evaluate(path, parts)?.defect)
}

pub fn is_extremal(path: &SymplecticPath, parts: &[u64]) -> Result<bool> {
    Ok(Partition::evaluate(path, parts)?.is_extremal(path.n()))
}

/// Whether `mu` avoids `n mod 2N`.
pub fn residue_ok(mu: i64, n: usize, chern: u64) -> bool {
    (mu - n as i64).rem_euclid(2 * chern as i64) != 0
}

/// All partitions of `k` into nonincreasing positive parts.
pub fn partitions_of(k: u64) -> Vec<Vec<u64>> {
    fn rec(rem: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rem.min(max)).rev() {
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, k, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub max_iterate: u64,
    /// `Some(N)` requires `mu(Phi^{k_i}) != n mod 2N` for every part.
    pub residue: Option<u64>,
    /// Near-return radius used by the seeding step.
    pub proximity: f64,
    pub node_limit: u64,
}

impl SearchOptions {
    pub fn new(max_iterate: u64) -> Self {
        SearchOptions {
            max_iterate,
            residue: None,
            proximity: 0.05,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }

    pub fn with_residue(mut self, chern: Option<u64>) -> Self {
        self.residue = chern;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchOutcome {
    pub partition: Option<Partition>,
    pub max_iterate: u64,
    /// Iterates skipped because their floors could not be certified.
    pub uncertain_iterates: usize,
    /// The node limit was hit before the search space was exhausted.
    pub truncated: bool,
    /// A seed was built by shifting parts along near-return iterates.
    pub seeded: bool,
}

struct Cand<'a> {
    k: u64,
    data: &'a IterateData,
}

/// Pruning functionals: every nonnegative `w` must satisfy
/// `sum_i w . frac(k_i) < w . 1` on a solution.
fn weights(path: &SymplecticPath) -> Vec<Vec<f64>> {
    let n = path.n();
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if n > 1 {
        out.push(vec![1.0; n]);
    }
    if let Ok(g) = compute_base_group(path) {
        for row in g.relation_saturation.iter().chain(&g.relation_lattice) {
            out.push(row.iter().map(|v| v.unsigned_abs() as f64).collect());
        }
    }
    out.dedup();
    out
}

fn dot(w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(f).map(|(a, b)| a * b).sum()
}

struct Dfs<'a> {
    cands: Vec<Cand<'a>>,
    r: usize,
    weights: &'a [Vec<f64>],
    wtotal: Vec<f64>,
    /// suffix minimum of `w . frac_lo` per weight
    suffix_min: Vec<Vec<f64>>,
    best: Option<(u64, Vec<u64>)>,
    nodes: u64,
    node_limit: u64,
    truncated: bool,
}

impl<'a> Dfs<'a> {
    fn new(cands: Vec<Cand<'a>>, r: usize, weights: &'a [Vec<f64>], node_limit: u64) -> Self {
        let wtotal = weights
            .iter()
            .map(|w| w.iter().sum::<f64>() * (1.0 - PRUNE_SLACK))
            .collect();
        let suffix_min = weights
            .iter()
            .map(|w| {
                let mut m = vec![f64::INFINITY; cands.len() + 1];
                for i in (0..cands.len()).rev() {
                    m[i] = m[i + 1].min(dot(w, &cands[i].data.frac_lo));
                }
                m
            })
            .collect();
        Dfs {
            cands,
            r,
            weights,
            wtotal,
            suffix_min,
            best: None,
            nodes: 0,
            node_limit,
            truncated: false,
        }
    }

    fn run(&mut self, bound: u64) {
        let n = self.cands.first().map_or(0, |c| c.data.floors.len());
        let mut used = vec![0.0; n];
        let mut wused = vec![0.0; self.weights.len()];
        let mut parts = Vec::with_capacity(self.r);
        self.rec(0, 0, bound, &mut used, &mut wused, &mut parts);
    }

    fn rec(
        &mut self,
        start: usize,
        sum: u64,
        bound: u64,
        used: &mut Vec<f64>,
        wused: &mut Vec<f64>,
        parts: &mut Vec<u64>,
    ) {
        let left = (self.r - parts.len()) as u64;
        if left == 0 {
            if self.best.as_ref().is_none_or(|(s, _)| sum < *s) {
                self.best = Some((sum, parts.clone()));
            }
            return;
        }
        let pruned = wused
            .iter()
            .zip(&self.suffix_min)
            .zip(&self.wtotal)
            .any(|((u, mins), total)| u + left as f64 * mins[start] >= *total);
        if pruned {
            return;
        }
        for i in start..self.cands.len() {
            self.nodes += 1;
            if self.nodes > self.node_limit {
                self.truncated = true;
                return;
            }
            let k = self.cands[i].k;
            let limit = self
                .best
                .as_ref()
                .map_or(bound, |(s, _)| (*s).saturating_sub(1).min(bound));
            if sum + left * k > limit {
                break;
            }
            let d = self.cands[i].data;
            if used.iter().zip(&d.frac_hi).any(|(u, h)| u + h >= 1.0) {
                continue;
            }
            for (u, h) in used.iter_mut().zip(&d.frac_hi) {
                *u += h;
            }
            for (w, wu) in self.weights.iter().zip(wused.iter_mut()) {
                *wu += dot(w, &d.frac_lo);
            }
            parts.push(k);
            self.rec(i, sum + k, bound, used, wused, parts);
            parts.pop();
            for (w, wu) in self.weights.iter().zip(wused.iter_mut()) {
                *wu -= dot(w, &d.frac_lo);
            }
            for (u, h) in used.iter_mut().zip(&d.frac_hi) {
                *u -= h;
            }
            if self.truncated {
                return;
            }
        }
    }
}

/// Candidates `k <= limit` that can be part of some solution on their own
/// weights and are not dominated by an earlier candidate.
fn pareto<'a>(
    table: &'a OrbitTable,
    limit: u64,
    r: usize,
    weights: &[Vec<f64>],
    keep: &dyn Fn(&IterateData) -> bool,
) -> Vec<Cand<'a>> {
    let kept: Vec<Cand<'a>> = (1..=limit.min(table.max_iterate()))
        .filter_map(|k| {
            table
                .regular(k)
                .filter(|d| keep(d))
                .map(|data| Cand { k, data })
        })
        .collect();
    let others = (r - 1) as f64;
    let gmin: Vec<f64> = weights
        .iter()
        .map(|w| {
            kept.iter()
                .map(|c| dot(w, &c.data.frac_lo))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut front: Vec<Cand<'a>> = Vec::new();
    for c in kept {
        let feasible = weights.iter().zip(&gmin).all(|(w, m)| {
            dot(w, &c.data.frac_lo) + others * m < w.iter().sum::<f64>() * (1.0 - PRUNE_SLACK)
        });
        if !feasible {
            continue;
        }
        let dominated = front.iter().any(|p| {
            p.data
                .frac_hi
                .iter()
                .zip(&c.data.frac_lo)
                .all(|(ph, ql)| ph <= ql)
        });
        if !dominated {
            front.push(c);
        }
    }
    front
}

/// Least r-tuple (by sum, then lexicographically) of iterates whose
/// fractional parts sum below 1 in every plane, using the table's bounds.
fn least_tuple(
    table: &OrbitTable,
    r: usize,
    weights: &[Vec<f64>],
    keep: &dyn Fn(&IterateData) -> bool,
    start_bound: u64,
    node_limit: u64,
) -> (Option<Vec<u64>>, bool) {
    let kmax = table.max_iterate();
    let cap = kmax.saturating_mul(r as u64);
    let mut bound = start_bound.clamp(r as u64, cap.max(r as u64));
    loop {
        // parts are at most bound - (r - 1)
        let cands = pareto(table, bound - (r as u64 - 1), r, weights, keep);
        let mut dfs = Dfs::new(cands, r, weights, node_limit);
        dfs.run(bound);
        if let Some((_, parts)) = dfs.best {
            return (Some(parts), dfs.truncated);
        }
        if dfs.truncated || bound >= cap {
            return (None, dfs.truncated);
        }
        bound = bound.saturating_mul(4).min(cap);
    }
}

fn tuple_fits(table: &OrbitTable, parts: &[u64]) -> bool {
    let n = table.n();
    let mut used = vec![0.0; n];
    for &k in parts {
        let Some(d) = table.regular(k) else {
            return false;
        };
        for (u, h) in used.iter_mut().zip(&d.frac_hi) {
            *u += h;
        }
    }
    used.iter().all(|u| *u < 1.0)
}

/// Replaces each part violating the residue condition by `k_i + m` for the
/// least near-return `m` that repairs the residue and keeps the tuple
/// admissible. Near-returns shift the index by their loop part.
fn seed_by_near_returns(
    table: &OrbitTable,
    unconstrained: &[u64],
    n: usize,
    chern: u64,
    proximity: f64,
) -> Option<Vec<u64>> {
    let near: Vec<u64> = table
        .iter()
        .filter_map(|(m, e)| match e {
            OrbitEntry::Regular(d) if d.frac_hi.iter().all(|h| *h < proximity) => Some(m),
            _ => None,
        })
        .collect();
    let mut parts = unconstrained.to_vec();
    for i in 0..parts.len() {
        let ok = table
            .regular(parts[i])
            .is_some_and(|d| residue_ok(d.cz_index(), n, chern));
        if ok {
            continue;
        }
        let base = parts[i];
        let repaired = near.iter().find_map(|&m| {
            let k = base + m;
            let d = table.regular(k)?;
            if !residue_ok(d.cz_index(), n, chern) {
                return None;
            }
            let mut trial = parts.clone();
            trial[i] = k;
            tuple_fits(table, &trial).then_some(k)
        })?;
        parts[i] = repaired;
    }
    parts.sort_unstable();
    Some(parts)
}

/// Bounded search for an extremal partition of length `r`, optionally with
/// the residue condition. The returned partition is the least one under
/// (sum, then lexicographic) order among those the table certifies, unless
/// the outcome reports truncation.
pub fn find_extremal_with(
    path: &SymplecticPath,
    table: &OrbitTable,
    r: usize,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    if r == 0 {
        return Err(Error::InvalidInput("r must be at least 1".into()));
    }
    let n = path.n();
    let weights = weights(path);
    let uncertain_iterates = table.uncertain().len();
    let mut seeded = false;
    let mut start = r as u64;
    let chern = opts.residue;
    let keep_all = |_: &IterateData| true;
    let keep_res = |d: &IterateData| chern.is_none_or(|c| residue_ok(d.cz_index(), n, c));

    if let Some(c) = chern {
        if c == 1 {
            return Ok(SearchOutcome {
                partition: None,
                max_iterate: table.max_iterate(),
                uncertain_iterates,
                truncated: false,
                seeded: false,
            });
        }
        let (free, _) = least_tuple(table, r, &weights, &keep_all, r as u64, opts.node_limit);
        if let Some(free) = free {
            if let Some(seed) = seed_by_near_returns(table, &free, n, c, opts.proximity) {
                seeded = true;
                start = seed.iter().sum();
            }
        }
    }
    let (found, truncated) = least_tuple(table, r, &weights, &keep_res, start, opts.node_limit);
    let partition = match found {
        Some(parts) => {
            let p = Partition::evaluate(path, &parts)?;
            let res_ok = chern.is_none_or(|c| p.indices.iter().all(|&mu| residue_ok(mu, n, c)));
            if !p.is_extremal(n) || !res_ok {
                return Err(Error::InvalidInput(format!(
                    "search witness {parts:?} failed exact re-verification"
                )));
            }
            Some(p)
        }
        None => None,
    };
    Ok(SearchOutcome {
        partition,
        max_iterate: table.max_iterate(),
        uncertain_iterates,
        truncated,
        seeded,
    })
}

pub fn find_extremal(
    path: &SymplecticPath,
    r: usize,
    chern: u64,
    max_iterate: u64,
    residue_constraint: bool,
) -> Result<Option<Partition>> {
    let table = OrbitTable::build(path, max_iterate)?;
    let opts = SearchOptions::new(max_iterate).with_residue(residue_constraint.then_some(chern));
    Ok(find_extremal_with(path, &table, r, &opts)?.partition)
}

/// Least `m` such that `m + ... + m` (r times) is extremal and
/// `mu(Phi^m) = n - 2 mod 2N`.
pub fn find_toric_power_with(
    path: &SymplecticPath,
    table: &OrbitTable,
    r: usize,
    chern: u64,
) -> Result<Option<u64>> {
    let g = compute_base_group(path)?;
    if g.dim < path.n() {
        return Err(Error::NotToric {
            dim: g.dim,
            n: path.n(),
        });
    }
    let n = path.n() as i64;
    let modulus = 2 * chern as i64;
    let rf = r as f64;
    for (m, e) in table.iter() {
        let OrbitEntry::Regular(d) = e else { continue };
        if (d.cz_index() - (n - 2)).rem_euclid(modulus) != 0 {
            continue;
        }
        if d.frac_hi.iter().any(|h| rf * h >= 1.0) {
            continue;
        }
        let parts = vec![m; r];
        if is_extremal(path, &parts)? && (path.cz_index(m)? - (n - 2)).rem_euclid(modulus) == 0 {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

pub fn find_toric_power(
    path: &SymplecticPath,
    r: usize,
    chern: u64,
    max_iterate: u64,
) -> Result<Option<u64>> {
    let g = compute_base_group(path)?;
    if g.dim < path.n() {
        return Err(Error::NotToric {
            dim: g.dim,
            n: path.n(),
        });
    }
    let table = OrbitTable::build(path, max_iterate)?;
    find_toric_power_with(path, &table, r, chern)
}

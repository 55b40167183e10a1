//! Defect `mu(QP) - mu(Q) - mu(P)` of the Conley-Zehnder quasimorphism from
//! end points only, via a signature formula for the Hoermander index.
//!
//! Work in `V = R^2n x R^2n` with the form `-omega_0 + omega_0`. Graphs of
//! symplectic maps are Lagrangian there and the diagonal `D` is the graph of
//! the identity. Given a Lagrangian complement `C` of `D`, every Lagrangian
//! transverse to `C` is the graph of a symmetric map `S : D -> C` (symmetric
//! once bases of `D` and `C` are taken dual under the form). With `A` for
//! the graph of `Q` and `B` for the graph of `QP` the defect is
//! `1/2 sgn(B^-1 - A^-1)`.
//!
//! Matrices act on coordinates `(q_1..q_n, p_1..p_n)` with
//! `omega_0(a, b) = a^T J b`, `J = [[0, I], [-I, 0]]`. The rotation by
//! `2 pi l` in the plane `(q_j, p_j)` has rotation number `l`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const SYMPLECTIC_TOL: f64 = 1e-9;
pub const EIGEN_TOL: f64 = 1e-8;
pub const MAX_COMPLEMENT_ATTEMPTS: usize = 32;
const TRANSVERSE_TOL: f64 = 1e-9;

/// Orientation of the signature formula relative to the conventions above,
/// fixed against the closed form for commuting rotations.
const ORIENTATION: i64 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative bound on `|M^T J M - J|`.
    pub symplectic: f64,
    /// Eigenvalues within `eigen * |S|` of zero are ambiguous.
    pub eigen: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symplectic: SYMPLECTIC_TOL,
            eigen: EIGEN_TOL,
        }
    }
}

pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    m: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
            return Err(Error::DegenerateInput(format!(
                "expected a 2n x 2n matrix, got {} x {}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows() / 2;
        let j = standard_j(n);
        let err = (m.transpose() * &j * &m - &j).norm();
        let scale = m.norm().powi(2).max(1.0);
        if err > tol * scale {
            return Err(Error::DegenerateInput(format!(
                "matrix is not symplectic: |M^T J M - J| = {err:e}"
            )));
        }
        Ok(SymplecticMatrix { n, m })
    }

    /// Parses a whitespace-separated square grid, one row per line; blank
    /// lines and lines starting with `#` are skipped.
    pub fn from_grid(text: &str, tol: f64) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad matrix entry `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("matrix grid is not square".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Self::new(DMatrix::from_row_slice(k, k, &flat), tol)
    }

    /// Direct sum of rotations by `2 pi l_j` in the planes `(q_j, p_j)`.
    pub fn rotation(lambdas: &[f64]) -> Self {
        let n = lambdas.len();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for (j, l) in lambdas.iter().enumerate() {
            let (s, c) = (2.0 * std::f64::consts::PI * l).sin_cos();
            m[(j, j)] = c;
            m[(j, n + j)] = -s;
            m[(n + j, j)] = s;
            m[(n + j, n + j)] = c;
        }
        SymplecticMatrix { n, m }
    }

    /// Product of random shears and a random linear block; well conditioned
    /// for `scale` of order one.
    pub fn random<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Self {
        let mut upper = DMatrix::identity(2 * n, 2 * n);
        upper
            .view_mut((0, n), (n, n))
            .copy_from(&random_symmetric(n, scale, rng));
        let mut lower = DMatrix::identity(2 * n, 2 * n);
        lower
            .view_mut((n, 0), (n, n))
            .copy_from(&random_symmetric(n, scale, rng));
        let mut a = DMatrix::identity(n, n);
        for i in 0..n {
            for k in 0..n {
                a[(i, k)] += rng.gen_range(-scale..scale) * 0.5;
            }
        }
        let a_inv_t = a
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::identity(n, n))
            .transpose();
        let mut block = DMatrix::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&a);
        block.view_mut((n, n), (n, n)).copy_from(&a_inv_t);
        SymplecticMatrix {
            n,
            m: upper * block * lower,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `self * other`.
    pub fn compose(&self, other: &SymplecticMatrix) -> Self {
        SymplecticMatrix {
            n: self.n,
            m: &self.m * &other.m,
        }
    }

    pub fn inverse(&self) -> Self {
        // M^-1 = -J M^T J
        let j = standard_j(self.n);
        SymplecticMatrix {
            n: self.n,
            m: -(&j * self.m.transpose() * &j),
        }
    }

    /// `C M C^-1`.
    pub fn conjugate_by(&self, c: &SymplecticMatrix) -> Self {
        c.compose(self).compose(&c.inverse())
    }

    fn check_nondegenerate(&self, what: &str) -> Result<()> {
        let d = &self.m - DMatrix::identity(2 * self.n, 2 * self.n);
        let sv = d.singular_values();
        let smin = sv.min();
        if smin <= 1e-9 * sv.max().max(1.0) {
            return Err(Error::DegenerateInput(format!(
                "{what} has eigenvalue 1 within tolerance (smallest singular value of M - I is {smin:e})"
            )));
        }
        Ok(())
    }
}

/// Number of positive minus number of negative eigenvalues; fails instead of
/// guessing when an eigenvalue is within `tol * |S|` of zero.
pub fn signature(s: &DMatrix<f64>, tol: f64) -> Result<i64> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let band = tol * norm.max(f64::MIN_POSITIVE);
    let mut sgn = 0;
    for &v in eig.iter() {
        if v.abs() <= band {
            return Err(Error::SingularEigenvalue {
                value: v,
                tol: band,
            });
        }
        sgn += if v > 0.0 { 1 } else { -1 };
    }
    Ok(sgn)
}

/// Coordinates `(a, b)` of a Lagrangian spanned by the columns of `w` in the
/// basis `E` of the diagonal and `F` of the complement.
fn split(
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let k = e.ncols();
    let mut ef = DMatrix::zeros(e.nrows(), 2 * k);
    ef.view_mut((0, 0), (e.nrows(), k)).copy_from(e);
    ef.view_mut((0, k), (e.nrows(), k)).copy_from(f);
    let coords = ef.lu().solve(w)?;
    Some((
        coords.rows(0, k).into_owned(),
        coords.rows(k, k).into_owned(),
    ))
}

fn well_conditioned(a: &DMatrix<f64>) -> bool {
    let sv = a.singular_values();
    sv.min() > TRANSVERSE_TOL * sv.max()
}

/// Graph map of the Lagrangian `[I; M]` over the diagonal, into the
/// complement `f`; `None` if the graph is not transverse to `f`.
fn graph_map(e: &DMatrix<f64>, f: &DMatrix<f64>, m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = m.nrows();
    let mut w = DMatrix::zeros(2 * k, k);
    w.view_mut((0, 0), (k, k)).fill_with_identity();
    w.view_mut((k, 0), (k, k)).copy_from(m);
    let (a, b) = split(e, f, &w)?;
    if !well_conditioned(&a) {
        return None;
    }
    Some(b * a.try_inverse()?)
}

fn check_pair(p: &SymplecticMatrix, q: &SymplecticMatrix) -> Result<()> {
    if p.n != q.n {
        return Err(Error::DegenerateInput("matrices of different sizes".into()));
    }
    p.check_nondegenerate("P")?;
    q.check_nondegenerate("Q")?;
    q.compose(p).check_nondegenerate("QP")
}

/// Basis `E` of the diagonal and the anti-diagonal basis `F0` dual to it.
fn base_frames(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n2 = 2 * n;
    let j = standard_j(n);
    let id = DMatrix::<f64>::identity(n2, n2);
    let mut e = DMatrix::zeros(2 * n2, n2);
    e.view_mut((0, 0), (n2, n2)).copy_from(&id);
    e.view_mut((n2, 0), (n2, n2)).copy_from(&id);
    let mut f0 = DMatrix::zeros(2 * n2, n2);
    f0.view_mut((0, 0), (n2, n2)).copy_from(&(&j * 0.5));
    f0.view_mut((n2, 0), (n2, n2)).copy_from(&(&j * -0.5));
    (e, f0)
}

/// Signature formula in the complement `F0 + E C`; `Ok(None)` when either
/// graph fails to be transverse to it.
fn defect_in(
    p: &SymplecticMatrix,
    q: &SymplecticMatrix,
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
    tol: Tolerances,
) -> Result<Option<i64>> {
    let qp = q.compose(p);
    let (Some(a), Some(b)) = (graph_map(e, f, q.matrix()), graph_map(e, f, qp.matrix())) else {
        return Ok(None);
    };
    let (Some(a_inv), Some(b_inv)) = (a.try_inverse(), b.try_inverse()) else {
        return Ok(None);
    };
    Ok(Some(
        ORIENTATION * signature(&(b_inv - a_inv), tol.eigen)? / 2,
    ))
}

/// Defect computed in the complement obtained by shearing the
/// anti-diagonal with the symmetric `2n x 2n` matrix `shear`.
pub fn hormander_defect_in_complement(
    p: &SymplecticMatrix,
    q: &SymplecticMatrix,
    shear: &DMatrix<f64>,
    tol: Tolerances,
) -> Result<i64> {
    check_pair(p, q)?;
    let n2 = 2 * p.n;
    if shear.shape() != (n2, n2)
        || (shear - shear.transpose()).norm() > 1e-12 * shear.norm().max(1.0)
    {
        return Err(Error::InvalidInput(
            "shear must be symmetric of size 2n".into(),
        ));
    }
    let (e, f0) = base_frames(p.n);
    let f = &f0 + &e * shear;
    defect_in(p, q, &e, &f, tol)?.ok_or(Error::ComplementNotFound(1))
}

/// `mu(QP) - mu(Q) - mu(P)` for non-degenerate `P`, `Q`, `QP`. Tries the
/// anti-diagonal first, then complements sheared at random from `seed`.
pub fn hormander_defect(
    p: &SymplecticMatrix,
    q: &SymplecticMatrix,
    tol: Tolerances,
    seed: u64,
) -> Result<i64> {
    check_pair(p, q)?;
    let n2 = 2 * p.n;
    let (e, f0) = base_frames(p.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..=MAX_COMPLEMENT_ATTEMPTS {
        let f = if attempt == 0 {
            f0.clone()
        } else {
            &f0 + &e * random_symmetric(n2, 1.0, &mut rng)
        };
        if let Some(d) = defect_in(p, q, &e, &f, tol)? {
            return Ok(d);
        }
    }
    Err(Error::ComplementNotFound(MAX_COMPLEMENT_ATTEMPTS))
}

pub fn random_symmetric<R: Rng>(n: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in i..n {
            let v = rng.gen_range(-scale..scale);
            s[(i, k)] = v;
            s[(k, i)] = v;
        }
    }
    s
}

pub fn verify_bound(
    p: &SymplecticMatrix,
    q: &SymplecticMatrix,
    tol: Tolerances,
    seed: u64,
) -> Result<bool> {
    Ok(hormander_defect(p, q, tol, seed)?.abs() <= p.n as i64)
}

/// Closed form of the defect for commuting rotations with rotation numbers
/// `a` (for P) and `b` (for Q), using `cz(x) = floor(x) + ceil(x)`.
pub fn rotation_defect(a: &[f64], b: &[f64]) -> i64 {
    let cz = |x: f64| (x.floor() + x.ceil()) as i64;
    a.iter()
        .zip(b)
        .map(|(x, y)| cz(x + y) - cz(*x) - cz(*y))
        .sum()
}

//! Integer lattice helpers: echelon forms, integer kernels, integer solves.
//!
//! Matrices are small (a handful of rows and columns), so everything is
//! dense `i128` with checked arithmetic.

use crate::error::{Error, Result};

pub type IntMatrix = Vec<Vec<i128>>;

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(Error::Overflow)
}

fn add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or(Error::Overflow)
}

/// Returns `(g, x, y)` with `g = gcd(a, b) >= 0` and `a*x + b*y = g`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn gcd(a: i128, b: i128) -> i128 {
    ext_gcd(a, b).0
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect()
}

/// Column operations `M * U = H` with `U` unimodular and `H` in column
/// echelon form. Returns `(H, U, pivot_rows)`; the first `pivot_rows.len()`
/// columns of `H` are the nonzero ones.
pub fn column_echelon(m: &IntMatrix, ncols: usize) -> Result<(IntMatrix, IntMatrix, Vec<usize>)> {
    let mut a = m.clone();
    let mut u = identity(ncols);
    let mut pivots = Vec::new();
    let mut pc = 0;
    for row in 0..a.len() {
        if pc == ncols {
            break;
        }
        for j in pc + 1..ncols {
            let (p, q) = (a[row][pc], a[row][j]);
            if q == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(p, q);
            let (pg, qg) = (p / g, q / g);
            // col_pc <- x col_pc + y col_j ; col_j <- -q/g col_pc + p/g col_j
            for mat in [&mut a, &mut u] {
                for r in mat.iter_mut() {
                    let (cp, cj) = (r[pc], r[j]);
                    r[pc] = add(mul(x, cp)?, mul(y, cj)?)?;
                    r[j] = add(mul(-qg, cp)?, mul(pg, cj)?)?;
                }
            }
        }
        if a[row][pc] != 0 {
            if a[row][pc] < 0 {
                for mat in [&mut a, &mut u] {
                    for r in mat.iter_mut() {
                        r[pc] = -r[pc];
                    }
                }
            }
            pivots.push(row);
            pc += 1;
        }
    }
    Ok((a, u, pivots))
}

/// Row Hermite normal form of the lattice spanned by `rows`; zero rows are
/// dropped, pivots are positive and entries above a pivot are reduced into
/// `[0, pivot)`.
pub fn row_hnf(rows: &IntMatrix, ncols: usize) -> Result<IntMatrix> {
    let mut a: IntMatrix = rows
        .iter()
        .filter(|r| r.iter().any(|&x| x != 0))
        .cloned()
        .collect();
    let mut pr = 0;
    for col in 0..ncols {
        if pr == a.len() {
            break;
        }
        for i in pr + 1..a.len() {
            let (p, q) = (a[pr][col], a[i][col]);
            if q == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(p, q);
            let (pg, qg) = (p / g, q / g);
            let (rp, ri) = (a[pr].clone(), a[i].clone());
            for c in 0..ncols {
                a[pr][c] = add(mul(x, rp[c])?, mul(y, ri[c])?)?;
                a[i][c] = add(mul(-qg, rp[c])?, mul(pg, ri[c])?)?;
            }
        }
        if a[pr][col] == 0 {
            continue;
        }
        if a[pr][col] < 0 {
            for v in a[pr].iter_mut() {
                *v = -*v;
            }
        }
        let piv = a[pr][col];
        let (above, rest) = a.split_at_mut(pr);
        for row in above.iter_mut() {
            let f = row[col].div_euclid(piv);
            if f != 0 {
                for (v, p) in row.iter_mut().zip(&rest[0]) {
                    *v = add(*v, mul(-f, *p)?)?;
                }
            }
        }
        pr += 1;
    }
    a.truncate(pr);
    a.retain(|r| r.iter().any(|&x| x != 0));
    Ok(a)
}

/// Basis (row HNF) of `{v in Z^ncols : m v = 0}`.
pub fn integer_kernel(m: &IntMatrix, ncols: usize) -> Result<IntMatrix> {
    let (_, u, pivots) = column_echelon(m, ncols)?;
    let basis: IntMatrix = (pivots.len()..ncols)
        .map(|j| (0..ncols).map(|i| u[i][j]).collect())
        .collect();
    row_hnf(&basis, ncols)
}

/// Some integer `v` with `m v = w`, if one exists.
pub fn solve_integer(m: &IntMatrix, ncols: usize, w: &[i128]) -> Result<Option<Vec<i128>>> {
    let (h, u, pivots) = column_echelon(m, ncols)?;
    let mut y = vec![0i128; ncols];
    for (i, &r) in pivots.iter().enumerate() {
        let mut rhs = w[r];
        for (j, yj) in y.iter().enumerate().take(i) {
            rhs = add(rhs, mul(-h[r][j], *yj)?)?;
        }
        if rhs % h[r][i] != 0 {
            return Ok(None);
        }
        y[i] = rhs / h[r][i];
    }
    for (r, row) in h.iter().enumerate() {
        let mut s = 0i128;
        for (j, yj) in y.iter().enumerate() {
            s = add(s, mul(row[j], *yj)?)?;
        }
        if s != w[r] {
            return Ok(None);
        }
    }
    let mut v = vec![0i128; ncols];
    for (i, vi) in v.iter_mut().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            *vi = add(*vi, mul(u[i][j], *yj)?)?;
        }
    }
    Ok(Some(v))
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> Result<i128> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut a = m.clone();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = mul(a[i][j], a[k][k])? - mul(a[i][k], a[k][j])?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

pub fn gram(rows: &IntMatrix) -> Result<IntMatrix> {
    rows.iter()
        .map(|a| {
            rows.iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .try_fold(0i128, |s, (x, y)| add(s, mul(*x, *y)?))
                })
                .collect()
        })
        .collect()
}

/// Index `[sup : sub]` of two lattices of equal rank with `sub` inside `sup`.
pub fn lattice_index(sub: &IntMatrix, sup: &IntMatrix) -> Result<i128> {
    let num = determinant(&gram(sub)?)?;
    let den = determinant(&gram(sup)?)?;
    if den == 0 || num % den != 0 {
        return Err(Error::InvalidInput("lattices of unequal rank".into()));
    }
    let sq = num / den;
    let r = (sq as f64).sqrt().round() as i128;
    (r - 2..=r + 2)
        .find(|c| *c >= 0 && c * c == sq)
        .ok_or_else(|| Error::InvalidInput("lattice index is not a perfect square".into()))
}

pub fn dot(a: &[i128], b: &[i128]) -> i128 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_single_relation() {
        let k = integer_kernel(&vec![vec![2, -1]], 2).unwrap();
        assert_eq!(k, vec![vec![1, 2]]);
        let k = integer_kernel(&vec![vec![1, 1]], 2).unwrap();
        assert_eq!(k, vec![vec![1, -1]]);
        let k = integer_kernel(&vec![vec![2, 4, 6]], 3).unwrap();
        assert_eq!(k.len(), 2);
        for row in &k {
            assert_eq!(dot(row, &[2, 4, 6]), 0);
        }
        assert_eq!(lattice_index(&k, &k).unwrap(), 1);
    }

    #[test]
    fn empty_matrix_kernel_is_everything() {
        assert_eq!(integer_kernel(&vec![], 3).unwrap(), identity(3));
    }

    #[test]
    fn hnf_is_canonical() {
        let a = row_hnf(&vec![vec![4, -2], vec![6, -3]], 2).unwrap();
        assert_eq!(a, vec![vec![2, -1]]);
        let b = row_hnf(&vec![vec![-2, 1]], 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integer_solve() {
        let m = vec![vec![2, -2]];
        assert_eq!(solve_integer(&m, 2, &[-1]).unwrap(), None);
        let v = solve_integer(&m, 2, &[4]).unwrap().unwrap();
        assert_eq!(2 * v[0] - 2 * v[1], 4);
        let m = vec![vec![3, 5], vec![1, 1]];
        let v = solve_integer(&m, 2, &[7, 1]).unwrap().unwrap();
        assert_eq!(v, vec![-1, 2]);
    }

    #[test]
    fn index_of_scaled_lattice() {
        assert_eq!(
            lattice_index(&vec![vec![2, -2]], &vec![vec![1, -1]]).unwrap(),
            2
        );
        assert_eq!(
            lattice_index(&vec![vec![2, 0], vec![0, 3]], &identity(2)).unwrap(),
            6
        );
    }

    #[test]
    fn determinant_matches_expansion() {
        let m = vec![vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 1]];
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(determinant(&m).unwrap(), 0);
        let m = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(determinant(&m).unwrap(), -1);
    }
}

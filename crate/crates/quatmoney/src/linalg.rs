//! Exact integer and rational linear algebra on small matrices.
//!
//! Everything here works on row-major `Vec<Vec<BigInt>>` / `Vec<Vec<Rat>>`.
//! The matrices are at most a few dozen rows by 4 columns, so the quadratic
//! and cubic algorithms below are more than fast enough and keep every step
//! exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rat;

pub type IMat = Vec<Vec<BigInt>>;
pub type QMat = Vec<Vec<Rat>>;

pub fn bigint_mat(rows: &[Vec<i64>]) -> IMat {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

/// Row-style Hermite normal form.
///
/// Returns the canonical HNF basis of the row space: echelon rows with
/// positive pivots, entries above each pivot reduced into `[0, pivot)`,
/// zero rows dropped. Uniqueness of this form is what makes lattice
/// comparisons and serialized bases deterministic.
pub fn hnf_rows(mat: &IMat) -> IMat {
    let mut m: IMat = mat.to_vec();
    let rows = m.len();
    if rows == 0 {
        return m;
    }
    let cols = m[0].len();
    let mut pivot_row = 0;

    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        // clear column below pivot_row with gcd steps
        loop {
            // find row with smallest nonzero |entry| in this column
            let mut best: Option<usize> = None;
            for r in pivot_row..rows {
                if !m[r][col].is_zero() {
                    let better = match best {
                        None => true,
                        Some(b) => m[r][col].abs() < m[b][col].abs(),
                    };
                    if better {
                        best = Some(r);
                    }
                }
            }
            let Some(b) = best else {
                break;
            };
            m.swap(pivot_row, b);
            let mut all_cleared = true;
            for r in (pivot_row + 1)..rows {
                if m[r][col].is_zero() {
                    continue;
                }
                let q = div_round(&m[r][col], &m[pivot_row][col]);
                if !q.is_zero() {
                    for c in 0..cols {
                        let sub = &q * &m[pivot_row][c];
                        m[r][c] = &m[r][c] - sub;
                    }
                }
                if !m[r][col].is_zero() {
                    all_cleared = false;
                }
            }
            if all_cleared {
                break;
            }
        }
        if m[pivot_row][col].is_zero() {
            continue;
        }
        if m[pivot_row][col].is_negative() {
            for c in 0..cols {
                m[pivot_row][c] = -m[pivot_row][c].clone();
            }
        }
        // reduce entries above the pivot into [0, pivot)
        for r in 0..pivot_row {
            let q = m[r][col].div_floor(&m[pivot_row][col]);
            if !q.is_zero() {
                for c in 0..cols {
                    let sub = &q * &m[pivot_row][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        pivot_row += 1;
    }

    m.truncate(pivot_row);
    m
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // nearest-integer quotient, used to shrink entries fast
    let two = BigInt::from(2);
    let half = b.abs() / &two;
    if a.is_negative() {
        (a - half) / b
    } else {
        (a + half) / b
    }
}

/// Basis of the integer kernel `{x : x * mat = 0}` (x acting on rows).
pub fn kernel_rows(mat: &IMat) -> IMat {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    // Augment with identity, HNF, rows whose mat-part vanished give the kernel.
    let mut aug: IMat = Vec::with_capacity(rows);
    for (r, row) in mat.iter().enumerate() {
        let mut v = row.clone();
        for k in 0..rows {
            v.push(if k == r { BigInt::one() } else { BigInt::zero() });
        }
        aug.push(v);
    }
    let h = hnf_aug(&aug, cols);
    let mut ker = Vec::new();
    for row in &h {
        if row[..cols].iter().all(|x| x.is_zero()) {
            ker.push(row[cols..].to_vec());
        }
    }
    ker
}

/// HNF that only eliminates on the first `lead` columns; the trailing block
/// records the row transformations.
fn hnf_aug(mat: &IMat, lead: usize) -> IMat {
    let mut m: IMat = mat.to_vec();
    let rows = m.len();
    if rows == 0 {
        return m;
    }
    let cols = m[0].len();
    let mut pivot_row = 0;
    for col in 0..lead {
        if pivot_row == rows {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for r in pivot_row..rows {
                if !m[r][col].is_zero() {
                    let better = match best {
                        None => true,
                        Some(b) => m[r][col].abs() < m[b][col].abs(),
                    };
                    if better {
                        best = Some(r);
                    }
                }
            }
            let Some(b) = best else { break };
            m.swap(pivot_row, b);
            let mut cleared = true;
            for r in (pivot_row + 1)..rows {
                if m[r][col].is_zero() {
                    continue;
                }
                let q = div_round(&m[r][col], &m[pivot_row][col]);
                if !q.is_zero() {
                    for c in 0..cols {
                        let sub = &q * &m[pivot_row][c];
                        m[r][c] = &m[r][c] - sub;
                    }
                }
                if !m[r][col].is_zero() {
                    cleared = false;
                }
            }
            if cleared {
                break;
            }
        }
        if !m[pivot_row][col].is_zero() {
            pivot_row += 1;
        }
    }
    m
}

/// Determinant by fraction-free Gaussian elimination (Bareiss).
pub fn det_int(mat: &IMat) -> BigInt {
    let n = mat.len();
    if n == 0 {
        return BigInt::one();
    }
    assert!(mat.iter().all(|r| r.len() == n), "det of non-square matrix");
    let mut m = mat.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = &num / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

pub fn det_rat(mat: &QMat) -> Rat {
    let n = mat.len();
    if n == 0 {
        return Rat::one();
    }
    let mut m = mat.to_vec();
    let mut det = Rat::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !m[r][k].is_zero()) else {
            return Rat::zero();
        };
        if p != k {
            m.swap(k, p);
            det = -det;
        }
        det *= m[k][k].clone();
        let inv = Rat::one() / m[k][k].clone();
        for j in k..n {
            m[k][j] = &m[k][j] * &inv;
        }
        for r in k + 1..n {
            if m[r][k].is_zero() {
                continue;
            }
            let f = m[r][k].clone();
            for j in k..n {
                let sub = &f * &m[k][j];
                m[r][j] = &m[r][j] - &sub;
            }
        }
    }
    det
}

/// Solve `x * mat = rhs` over Q for a square invertible `mat`; `None` if singular.
pub fn solve_left_rat(mat: &QMat, rhs: &[Rat]) -> Option<Vec<Rat>> {
    // transpose: mat^T x^T = rhs^T, do Gaussian elimination
    let n = mat.len();
    assert_eq!(rhs.len(), n);
    let mut aug: QMat = (0..n)
        .map(|r| {
            let mut row: Vec<Rat> = (0..n).map(|c| mat[c][r].clone()).collect();
            row.push(rhs[r].clone());
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&r| !aug[r][k].is_zero())?;
        aug.swap(k, p);
        let inv = Rat::one() / aug[k][k].clone();
        for j in k..=n {
            aug[k][j] = &aug[k][j] * &inv;
        }
        for r in 0..n {
            if r != k && !aug[r][k].is_zero() {
                let f = aug[r][k].clone();
                for j in k..=n {
                    let sub = &f * &aug[k][j];
                    aug[r][j] = &aug[r][j] - &sub;
                }
            }
        }
    }
    Some((0..n).map(|r| aug[r][n].clone()).collect())
}

/// Inverse of `mat` modulo `m` via the adjugate; `None` when `det` is not a unit.
pub fn inverse_mod(mat: &IMat, m: &BigInt) -> Option<IMat> {
    let n = mat.len();
    let det = det_int(mat).mod_floor(m);
    let det_inv = mod_inverse(&det, m)?;
    let mut inv = vec![vec![BigInt::zero(); n]; n];
    for r in 0..n {
        for c in 0..n {
            // cofactor C_{c,r} for the adjugate
            let minor: IMat = (0..n)
                .filter(|&i| i != c)
                .map(|i| {
                    (0..n)
                        .filter(|&j| j != r)
                        .map(|j| mat[i][j].clone())
                        .collect()
                })
                .collect();
            let mut cof = det_int(&minor);
            if (r + c) % 2 == 1 {
                cof = -cof;
            }
            inv[r][c] = (cof * &det_inv).mod_floor(m);
        }
    }
    Some(inv)
}

/// Modular inverse of `a` mod `m` (m >= 1); `None` if gcd(a, m) > 1.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// Chinese remainder: x = r1 mod m1, x = r2 mod m2 for coprime moduli.
pub fn crt(r1: &BigInt, m1: &BigInt, r2: &BigInt, m2: &BigInt) -> BigInt {
    let e = m1.extended_gcd(m2);
    assert!(e.gcd.is_one(), "crt requires coprime moduli");
    let m = m1 * m2;
    // x = r1 + m1 * x.x * (r2 - r1)
    let diff = (r2 - r1).mod_floor(m2);
    let t = (&e.x * &diff).mod_floor(m2);
    (r1 + m1 * t).mod_floor(&m)
}

/// Matrix product over the integers.
pub fn mat_mul_int(a: &IMat, b: &IMat) -> IMat {
    let n = a.len();
    let k = if n == 0 { 0 } else { a[0].len() };
    let m = if b.is_empty() { 0 } else { b[0].len() };
    assert_eq!(b.len(), k);
    let mut out = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = BigInt::zero();
            for l in 0..k {
                s += &a[i][l] * &b[l][j];
            }
            out[i][j] = s;
        }
    }
    out
}

/// Modular inverse for machine integers, `m >= 1`.
pub fn mod_inverse_i64(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m))
}

/// In-place reduced row echelon form over F_p. Returns the pivot columns.
pub fn rref_mod_p(mat: &mut [Vec<i64>], p: i64) -> Vec<usize> {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    for row in mat.iter_mut() {
        for x in row.iter_mut() {
            *x = x.rem_euclid(p);
        }
    }
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| mat[i][c] != 0) else {
            continue;
        };
        mat.swap(r, pr);
        let inv = mod_inverse_i64(mat[r][c], p).expect("pivot invertible mod prime");
        for x in mat[r].iter_mut() {
            *x = (*x * inv).rem_euclid(p);
        }
        for i in 0..rows {
            if i != r && mat[i][c] != 0 {
                let f = mat[i][c];
                for k in 0..cols {
                    mat[i][k] = (mat[i][k] - f * mat[r][k]).rem_euclid(p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the right kernel `{x : mat * x = 0}` over F_p.
pub fn kernel_mod_p(mat: &[Vec<i64>], p: i64) -> Vec<Vec<i64>> {
    let cols = if mat.is_empty() { 0 } else { mat[0].len() };
    let mut m: Vec<Vec<i64>> = mat.to_vec();
    let pivots = rref_mod_p(&mut m, p);
    let mut basis = Vec::new();
    let mut piv_iter = pivots.iter().copied().collect::<Vec<_>>();
    piv_iter.sort_unstable();
    for free in 0..cols {
        if piv_iter.contains(&free) {
            continue;
        }
        let mut v = vec![0i64; cols];
        v[free] = 1;
        for (row, &pc) in piv_iter.iter().enumerate() {
            v[pc] = (-m[row][free]).rem_euclid(p);
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_mod_p_solves() {
        let m = vec![vec![1, 2, 0, 4], vec![0, 0, 1, 3]];
        let k = kernel_mod_p(&m, 5);
        assert_eq!(k.len(), 2);
        for v in &k {
            for row in &m {
                let s: i64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                assert_eq!(s.rem_euclid(5), 0);
            }
        }
    }

    #[test]
    fn hnf_of_identity() {
        let id = bigint_mat(&[vec![1, 0], vec![0, 1]]);
        assert_eq!(hnf_rows(&id), id);
    }

    #[test]
    fn hnf_canonical_example() {
        let m = bigint_mat(&[vec![2, 4], vec![4, 2]]);
        // row space: gcd structure gives pivots 2 and 6
        let h = hnf_rows(&m);
        assert_eq!(h, bigint_mat(&[vec![2, 4], vec![0, 6]]));
    }

    #[test]
    fn kernel_of_singular() {
        let m = bigint_mat(&[vec![1, 2], vec![2, 4], vec![3, 5]]);
        let k = kernel_rows(&m);
        assert_eq!(k.len(), 1);
        // kernel combo: 2*row0 - row1 = 0
        let combo = &k[0];
        for c in 0..2 {
            let s: BigInt = (0..3).map(|r| &combo[r] * &m[r][c]).sum();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn det_matches_known() {
        let m = bigint_mat(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]);
        assert_eq!(det_int(&m), BigInt::from(-3));
    }

    #[test]
    fn modular_inverse_round_trip() {
        let m = bigint_mat(&[vec![1, 2], vec![3, 4]]);
        let modulus = BigInt::from(35); // det = -2, unit mod 35
        let inv = inverse_mod(&m, &modulus).unwrap();
        let prod = mat_mul_int(&m, &inv);
        assert_eq!(prod[0][0].mod_floor(&modulus), BigInt::one());
        assert_eq!(prod[0][1].mod_floor(&modulus), BigInt::zero());
        assert_eq!(prod[1][0].mod_floor(&modulus), BigInt::zero());
        assert_eq!(prod[1][1].mod_floor(&modulus), BigInt::one());
    }

    #[test]
    fn crt_small() {
        let x = crt(
            &BigInt::from(3),
            &BigInt::from(4),
            &BigInt::from(1),
            &BigInt::from(3),
        );
        assert_eq!(x, BigInt::from(7));
    }

    proptest! {
        #[test]
        fn hnf_idempotent(rows in proptest::collection::vec(
            proptest::collection::vec(-20i64..20, 4), 1..6)) {
            let m: IMat = bigint_mat(&rows);
            let h = hnf_rows(&m);
            prop_assert_eq!(hnf_rows(&h), h.clone());
        }

        #[test]
        fn det_multiplies(a in proptest::collection::vec(
            proptest::collection::vec(-8i64..8, 3), 3),
            b in proptest::collection::vec(
            proptest::collection::vec(-8i64..8, 3), 3)) {
            let a = bigint_mat(&a);
            let b = bigint_mat(&b);
            prop_assert_eq!(det_int(&mat_mul_int(&a, &b)), det_int(&a) * det_int(&b));
        }
    }
}

//! Dense exact linear algebra over the Gaussian rationals, plus integer
//! Smith normal form and small polynomial determinants.
//!
//! Everything here is sized for the matrices that actually occur: pair
//! tensors of dimension at most 64, exterior algebras up to dimension
//! 256, and linking matrices of a handful of components. Plain Gaussian
//! elimination with exact pivoting is entirely adequate.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::laurent::{GaussianRational, LaurentPoly};

/// Dense matrix over `ℚ(i)` in row-major order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<GaussianRational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![GaussianRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, GaussianRational::one());
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &GaussianRational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: GaussianRational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: GaussianRational) {
        let e = &mut self.data[r * self.cols + c];
        *e += v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut m = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(c, r, self.get(r, c).clone());
            }
        }
        m
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let b = rhs.get(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    out.add_to(r, c, a * b);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for i in 0..out.data.len() {
            out.data[i] += rhs.data[i].clone();
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for i in 0..out.data.len() {
            out.data[i] -= rhs.data[i].clone();
        }
        out
    }

    pub fn scale(&self, s: &GaussianRational) -> Matrix {
        let mut out = self.clone();
        for e in &mut out.data {
            *e = &*e * s;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Kronecker (tensor) product.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                if a.is_zero() {
                    continue;
                }
                for r2 in 0..rhs.rows {
                    for c2 in 0..rhs.cols {
                        let b = rhs.get(r2, c2);
                        if b.is_zero() {
                            continue;
                        }
                        out.set(r1 * rhs.rows + r2, c1 * rhs.cols + c2, a * b);
                    }
                }
            }
        }
        out
    }

    /// Solves `self · X = B`; returns `None` when `self` is singular.
    /// Requires a square coefficient matrix.
    pub fn solve(&self, b: &Matrix) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols, "solve requires a square matrix");
        assert_eq!(self.rows, b.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            if pivot != col {
                for c in 0..n {
                    let tmp = a.get(pivot, c).clone();
                    a.set(pivot, c, a.get(col, c).clone());
                    a.set(col, c, tmp);
                }
                for c in 0..x.cols {
                    let tmp = x.get(pivot, c).clone();
                    x.set(pivot, c, x.get(col, c).clone());
                    x.set(col, c, tmp);
                }
            }
            let inv = a.get(col, col).inv();
            for c in 0..n {
                let v = a.get(col, c) * &inv;
                a.set(col, c, v);
            }
            for c in 0..x.cols {
                let v = x.get(col, c) * &inv;
                x.set(col, c, v);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let factor = a.get(r, col).clone();
                for c in 0..n {
                    let v = a.get(r, c).clone() - &factor * a.get(col, c);
                    a.set(r, c, v);
                }
                for c in 0..x.cols {
                    let v = x.get(r, c).clone() - &factor * x.get(col, c);
                    x.set(r, c, v);
                }
            }
        }
        Some(x)
    }

    pub fn invert(&self) -> Option<Matrix> {
        self.solve(&Matrix::identity(self.rows))
    }

    /// A basis for the right kernel, one column vector per basis element.
    pub fn kernel_basis(&self) -> Vec<Vec<GaussianRational>> {
        let mut a = self.clone();
        let n = self.cols;
        let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
        let mut rank = 0usize;
        for col in 0..n {
            let pivot = (rank..self.rows).find(|&r| !a.get(r, col).is_zero());
            let Some(pivot) = pivot else { continue };
            if pivot != rank {
                for c in 0..n {
                    let tmp = a.get(pivot, c).clone();
                    a.set(pivot, c, a.get(rank, c).clone());
                    a.set(rank, c, tmp);
                }
            }
            let inv = a.get(rank, col).inv();
            for c in 0..n {
                let v = a.get(rank, c) * &inv;
                a.set(rank, c, v);
            }
            for r in 0..self.rows {
                if r == rank || a.get(r, col).is_zero() {
                    continue;
                }
                let factor = a.get(r, col).clone();
                for c in 0..n {
                    let v = a.get(r, c).clone() - &factor * a.get(rank, c);
                    a.set(r, c, v);
                }
            }
            pivot_of_col[col] = Some(rank);
            rank += 1;
        }
        let mut basis = Vec::new();
        for free in 0..n {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut v = vec![GaussianRational::zero(); n];
            v[free] = GaussianRational::one();
            for col in 0..n {
                if let Some(r) = pivot_of_col[col] {
                    v[col] = -a.get(r, free).clone();
                }
            }
            basis.push(v);
        }
        basis
    }
}

/// Determinant of a square integer matrix by fraction-free elimination.
pub fn int_det(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| {
            assert_eq!(row.len(), n);
            row.iter().map(|&v| BigInt::from(v)).collect()
        })
        .collect();
    // Bareiss algorithm.
    let mut sign = BigInt::from(1);
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Diagonal entries of the Smith normal form of an integer matrix,
/// nonnegative and in divisibility order; zeros last.
pub fn smith_normal_form(m: &[Vec<i64>]) -> Vec<BigInt> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| row.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut diag = Vec::new();
    let mut top = 0usize;
    while top < rows.min(cols) {
        // Find a nonzero entry in the working block.
        let mut found = None;
        'outer: for r in top..rows {
            for c in top..cols {
                if !a[r][c].is_zero() {
                    found = Some((r, c));
                    break 'outer;
                }
            }
        }
        let Some((r, c)) = found else { break };
        a.swap(top, r);
        for row in a.iter_mut() {
            row.swap(top, c);
        }
        loop {
            // Clear the column with Euclidean row operations.
            let mut again = false;
            for r in top + 1..rows {
                while !a[r][top].is_zero() {
                    if a[r][top].magnitude() < a[top][top].magnitude() {
                        a.swap(top, r);
                    }
                    let q = &a[r][top] / &a[top][top];
                    for cc in top..cols {
                        let v = &a[r][cc] - &q * &a[top][cc];
                        a[r][cc] = v;
                    }
                }
            }
            for c in top + 1..cols {
                while !a[top][c].is_zero() {
                    if a[top][c].magnitude() < a[top][top].magnitude() {
                        for row in a.iter_mut() {
                            row.swap(top, c);
                        }
                    }
                    let q = &a[top][c] / &a[top][top];
                    for rr in top..rows {
                        let v = &a[rr][c] - &q * &a[rr][top];
                        a[rr][c] = v;
                    }
                }
            }
            // Column clearing may have refilled the row; check.
            if (top + 1..rows).any(|r| !a[r][top].is_zero()) {
                again = true;
            }
            if !again {
                break;
            }
        }
        // Enforce divisibility into the remaining block.
        let mut fixed = false;
        for r in top + 1..rows {
            for c in top + 1..cols {
                if !(&a[r][c] % &a[top][top]).is_zero() {
                    for cc in top..cols {
                        let v = &a[top][cc] + &a[r][cc];
                        a[top][cc] = v;
                    }
                    fixed = true;
                    break;
                }
            }
            if fixed {
                break;
            }
        }
        if fixed {
            continue;
        }
        diag.push(a[top][top].abs());
        top += 1;
    }
    while diag.len() < rows.min(cols) {
        diag.push(BigInt::zero());
    }
    diag
}

/// Determinant of a square matrix of Laurent polynomials by cofactor
/// expansion; intended for the small matrices of Seifert and linking
/// data.
pub fn poly_det(m: &[Vec<LaurentPoly>]) -> LaurentPoly {
    let n = m.len();
    if n == 0 {
        return LaurentPoly::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = LaurentPoly::zero();
    for (k, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<LaurentPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != k)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let term = entry * &poly_det(&minor);
        if k % 2 == 0 {
            det += &term;
        } else {
            det = &det - &term;
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::GaussianRational as G;

    fn mat(rows: usize, cols: usize, v: &[i64]) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, G::from_int(v[r * cols + c]));
            }
        }
        m
    }

    #[test]
    fn solve_and_invert() {
        let a = mat(2, 2, &[1, 2, 3, 5]);
        let inv = a.invert().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        let b = mat(2, 1, &[7, 11]);
        let x = a.solve(&b).unwrap();
        assert_eq!(a.mul(&x), b);
        assert!(mat(2, 2, &[1, 2, 2, 4]).invert().is_none());
    }

    #[test]
    fn kernel() {
        let a = mat(2, 3, &[1, 2, 3, 2, 4, 6]);
        let ker = a.kernel_basis();
        assert_eq!(ker.len(), 2);
        for v in &ker {
            let mut col = Matrix::zeros(3, 1);
            for (i, e) in v.iter().enumerate() {
                col.set(i, 0, e.clone());
            }
            assert!(a.mul(&col).is_zero());
        }
        assert!(Matrix::identity(3).kernel_basis().is_empty());
    }

    #[test]
    fn integer_det() {
        assert_eq!(int_det(&[vec![0, 1], vec![1, 1]]), BigInt::from(-1));
        assert_eq!(int_det(&[vec![2, 0], vec![0, 3]]), BigInt::from(6));
        assert_eq!(
            int_det(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]),
            BigInt::from(0)
        );
    }

    #[test]
    fn smith_form() {
        assert_eq!(
            smith_normal_form(&[vec![2, 0], vec![0, 3]]),
            vec![BigInt::from(1), BigInt::from(6)]
        );
        assert_eq!(
            smith_normal_form(&[vec![2, 4], vec![4, 8]]),
            vec![BigInt::from(2), BigInt::from(0)]
        );
        assert_eq!(
            smith_normal_form(&[vec![0, 1], vec![1, 1]]),
            vec![BigInt::from(1), BigInt::from(1)]
        );
    }

    #[test]
    fn polynomial_det() {
        use crate::laurent::LaurentPoly as P;
        let t = P::t();
        let one = P::one();
        // det [[1, t], [t, 1]] = 1 − t².
        let d = poly_det(&[vec![one.clone(), t.clone()], vec![t.clone(), one.clone()]]);
        assert_eq!(d, &one - &(&t * &t));
    }
}

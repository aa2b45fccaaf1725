//! Dense rational matrices and the exact elimination kernels built on them.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::{dot, zeros, Rat, Vector};
use crate::Error;

/// Row-major rectangular matrix of rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

/// Solution set of `m x = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    Unique(Vector),
    NoSolution,
    /// `particular + span(kernel)`.
    InfinitelyMany { particular: Vector, kernel: Vec<Vector> },
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    /// Builds from rows; `cols` fixes the width when there are no rows.
    pub fn from_rows(rows: Vec<Vector>, cols: usize) -> Result<Self, Error> {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension(format!("row of length {} in a {}-column matrix", row.len(), cols)));
            }
            data.extend(row);
        }
        Ok(Matrix { rows: r, cols, data })
    }

    /// Like [`Matrix::from_rows`] but infers the width from the first row.
    pub fn from_row_vecs(rows: Vec<Vector>) -> Result<Self, Error> {
        let cols = rows.first().map_or(0, Vec::len);
        Matrix::from_rows(rows, cols)
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(rows.iter().map(|r| crate::rational::ints(r)).collect(), cols).expect("rectangular literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, Error> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * &other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vector {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`.
    pub fn tmul_vec(&self, v: &[Rat]) -> Vector {
        assert_eq!(self.rows, v.len(), "transposed matrix-vector dimension mismatch");
        let mut out = zeros(self.cols);
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += vi * &self[(i, j)];
            }
        }
        out
    }

    /// Keeps the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_rows(idx.iter().map(|&i| self.row(i).to_vec()).collect(), self.cols).expect("same width")
    }

    /// Keeps the listed columns, in order.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let rows = (0..self.rows).map(|i| idx.iter().map(|&j| self[(i, j)].clone()).collect()).collect();
        Matrix::from_rows(rows, idx.len()).expect("same width")
    }

    pub fn vstack(&self, other: &Matrix) -> Result<Matrix, Error> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!("stacking {} and {} columns", self.cols, other.cols)));
        }
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(Matrix { rows: self.rows + other.rows, cols: self.cols, data })
    }

    pub fn hstack(&self, other: &Matrix) -> Result<Matrix, Error> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!("joining {} and {} rows", self.rows, other.rows)));
        }
        let rows = (0..self.rows).map(|i| self.row(i).iter().chain(other.row(i)).cloned().collect()).collect();
        Matrix::from_rows(rows, self.cols + other.cols)
    }

    pub fn push_row(&mut self, row: Vector) {
        assert_eq!(row.len(), self.cols, "row width");
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn neg(&self) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }

    /// Determinant by Bareiss fraction-free elimination over the integers
    /// obtained after clearing each row's denominators.
    pub fn det(&self) -> Result<Rat, Error> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!("determinant of a {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Rat::one());
        }
        let mut scale = BigInt::one();
        let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for i in 0..n {
            let l = self.row(i).iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            m.push(self.row(i).iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect());
            scale *= l;
        }
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(p) => {
                        m.swap(k, p);
                        sign = -sign;
                    }
                    None => return Ok(Rat::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = v / &prev;
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }
        Ok(Rat::new(sign * &m[n - 1][n - 1], scale))
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in c..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    let v = &m[(r, j)] * &f;
                    m[(i, j)] -= v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{x : self x = 0}`.
    pub fn nullspace(&self) -> Vec<Vector> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = zeros(self.cols);
                v[f] = Rat::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(i, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[Rat]) -> Result<Solution, Error> {
        if rhs.len() != self.rows {
            return Err(Error::Dimension(format!("{} rows but rhs of length {}", self.rows, rhs.len())));
        }
        let aug = self.hstack(&Matrix::from_rows(rhs.iter().map(|x| vec![x.clone()]).collect(), 1)?)?;
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(Solution::NoSolution);
        }
        let mut x = zeros(self.cols);
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = r[(i, self.cols)].clone();
        }
        if pivots.len() == self.cols {
            Ok(Solution::Unique(x))
        } else {
            Ok(Solution::InfinitelyMany { particular: x, kernel: self.nullspace() })
        }
    }

    pub fn inverse(&self) -> Result<Matrix, Error> {
        if self.rows != self.cols {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let (r, pivots) = self.hstack(&Matrix::identity(self.rows))?.rref();
        if pivots.len() < self.rows || pivots[self.rows - 1] >= self.rows {
            return Err(Error::Singular);
        }
        Ok(r.select_cols(&(self.cols..2 * self.cols).collect::<Vec<_>>()))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = self.row_vecs().iter().map(|r| crate::rational::fmt_vec(r)).collect();
        write!(f, "Matrix{rows:?}")
    }
}

/// Rank of a list of vectors of length `dim`.
pub fn rank_of(vectors: &[Vector], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Matrix::from_rows(vectors.to_vec(), dim).expect("uniform length").rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ints, rat};
    use proptest::prelude::*;

    fn cofactor_det(m: &Matrix) -> Rat {
        let n = m.rows();
        if n == 1 {
            return m[(0, 0)].clone();
        }
        let mut total = Rat::zero();
        for j in 0..n {
            let minor_rows: Vec<usize> = (1..n).collect();
            let minor_cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            let minor = m.select_rows(&minor_rows).select_cols(&minor_cols);
            let term = &m[(0, j)] * cofactor_det(&minor);
            if j % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(Matrix::identity(3).det().unwrap(), int(1));
        assert_eq!(Matrix::from_i64(&[&[1, 0], &[0, 2]]).det().unwrap(), int(2));
        let swap = Matrix::from_i64(&[&[0, 1], &[1, 0]]);
        assert_eq!(swap.det().unwrap(), cofactor_det(&swap));
        assert_eq!(swap.det().unwrap(), int(-1));
        assert!(Matrix::zeros(2, 3).det().is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::zeros(3, 3).rank(), 0);
        assert_eq!(Matrix::identity(4).rank(), 4);
        assert_eq!(Matrix::from_i64(&[&[1, 2], &[2, 4]]).rank(), 1);
    }

    #[test]
    fn solve_classification() {
        let i2 = Matrix::identity(2);
        assert_eq!(i2.solve(&ints(&[1, 2])).unwrap(), Solution::Unique(ints(&[1, 2])));
        let under = Matrix::from_i64(&[&[1, 1]]);
        assert!(matches!(under.solve(&ints(&[1])).unwrap(), Solution::InfinitelyMany { ref kernel, .. } if kernel.len() == 1));
        let inconsistent = Matrix::from_i64(&[&[1], &[1]]);
        assert_eq!(inconsistent.solve(&ints(&[0, 1])).unwrap(), Solution::NoSolution);
        assert!(i2.solve(&ints(&[1])).is_err());
    }

    #[test]
    fn inverse_of_rational_matrix() {
        let m = Matrix::from_rows(vec![vec![rat(1, 2), int(1)], vec![int(0), int(3)]], 2).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(2));
        assert!(Matrix::from_i64(&[&[1, 2], &[2, 4]]).inverse().is_err());
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec((-6i64..6, 1i64..4), n * n).prop_map(move |entries| {
            let rows = entries.chunks(n).map(|c| c.iter().map(|&(p, q)| rat(p, q)).collect()).collect();
            Matrix::from_rows(rows, n).unwrap()
        })
    }

    proptest! {
        #[test]
        fn det_is_multiplicative(a in small_matrix(3), b in small_matrix(3)) {
            let ab = a.mul(&b).unwrap();
            prop_assert_eq!(ab.det().unwrap(), a.det().unwrap() * b.det().unwrap());
        }

        #[test]
        fn det_matches_cofactor_expansion(a in small_matrix(4)) {
            prop_assert_eq!(a.det().unwrap(), cofactor_det(&a));
        }

        #[test]
        fn unique_solutions_substitute_back(a in small_matrix(3), x in proptest::collection::vec(-5i64..5, 3)) {
            let rhs = a.mul_vec(&ints(&x));
            if let Solution::Unique(sol) = a.solve(&rhs).unwrap() {
                prop_assert_eq!(a.mul_vec(&sol), rhs);
            } else {
                prop_assert!(a.det().unwrap().is_zero());
            }
        }
    }
}

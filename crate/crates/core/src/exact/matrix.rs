use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, ToPrimitive, Zero};

use super::{format_rational, qi, to_f64, Rational};
use crate::error::{Error, Result};

pub type Vector = Vec<Rational>;

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Dense row-major matrix over the rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(format_rational).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "ragged matrix row",
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Convenience constructor from small integer rows. Panics on ragged input.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| qi(v)).collect())
            .collect();
        Self::from_rows(rows).expect("ragged integer matrix")
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vector]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            if col.len() != r {
                return Err(Error::DimensionMismatch {
                    context: "column length",
                    expected: r,
                    found: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        Ok(m)
    }

    /// Rank-one matrix `u vᵀ`.
    pub fn outer(u: &[Rational], v: &[Rational]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b;
            }
        }
        m
    }

    pub fn block_diag(a: &Matrix, b: &Matrix) -> Self {
        let mut m = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(a.rows, a.cols, b);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vector {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self[(r0 + i, c0 + j)].clone();
            }
        }
        m
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn scale(&self, s: &Rational) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_skew(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (i..self.cols).all(|j| self[(i, j)] == -self[(j, i)].clone()))
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).fold(Rational::zero(), |acc, i| acc + &self[(i, i)])
    }

    pub fn try_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        if let (Some(a), Some(b)) = (self.small_ints(), other.small_ints()) {
            if let Some(out) = int_product(&a, &b, self.rows, self.cols, other.cols) {
                return Ok(Matrix {
                    rows: self.rows,
                    cols: other.cols,
                    data: out.into_iter().map(|v| Rational::from_integer(v.into())).collect(),
                });
            }
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn try_apply(&self, v: &[Rational]) -> Result<Vector> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), v)).collect())
    }

    /// Matrix-vector product. Panics on dimension mismatch.
    pub fn apply(&self, v: &[Rational]) -> Vector {
        self.try_apply(v).expect("matrix-vector dimension mismatch")
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Matrix) -> Matrix {
        &(self * other) - &(other * self)
    }

    pub fn pow(&self, k: usize) -> Matrix {
        assert!(self.is_square(), "power of a non-square matrix");
        let mut acc = Matrix::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for c in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m[(r, c)].is_zero()) else {
                continue;
            };
            if p != row {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, row * m.cols + j);
                }
            }
            let inv = m[(row, c)].recip();
            for j in c..m.cols {
                let v = &m[(row, j)] * &inv;
                m[(row, j)] = v;
            }
            for r in 0..m.rows {
                if r == row || m[(r, c)].is_zero() {
                    continue;
                }
                let f = m[(r, c)].clone();
                for j in c..m.cols {
                    let v = &m[(row, j)] * &f;
                    m[(r, j)] -= v;
                }
            }
            pivots.push(c);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : self·v = 0}`.
    pub fn nullspace(&self) -> Vec<Vector> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(i, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Solves `self·x = rhs` for square invertible `self`.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                context: "solve: square system",
                expected: self.rows,
                found: self.cols,
            });
        }
        if rhs.rows != self.rows {
            return Err(Error::DimensionMismatch {
                context: "solve: right-hand side rows",
                expected: self.rows,
                found: rhs.rows,
            });
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(n, n + rhs.cols);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, rhs);
        let (r, pivots) = aug.rref();
        let rank = pivots.iter().filter(|&&p| p < n).count();
        if rank < n {
            return Err(Error::Singular { rank, dim: n });
        }
        Ok(r.block(0, n, n, rhs.cols))
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.rows))
    }

    /// Some solution of the (possibly rectangular) system `self·x = rhs`, or
    /// `None` when the system is inconsistent. Free variables are set to zero.
    pub fn solve_any(&self, rhs: &[Rational]) -> Option<Vector> {
        assert_eq!(rhs.len(), self.rows, "solve_any: rhs length");
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        aug.set_block(0, 0, self);
        for (i, v) in rhs.iter().enumerate() {
            aug[(i, self.cols)] = v.clone();
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = r[(i, self.cols)].clone();
        }
        Some(x)
    }

    pub fn determinant(&self) -> Rational {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = self.rows;
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !m[(r, c)].is_zero()) else {
                return Rational::zero();
            };
            if p != c {
                for j in 0..n {
                    m.data.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det *= &piv;
            for r in c + 1..n {
                if m[(r, c)].is_zero() {
                    continue;
                }
                let f = &m[(r, c)] / &piv;
                for j in c..n {
                    let v = &m[(c, j)] * &f;
                    m[(r, j)] -= v;
                }
            }
        }
        det
    }

    /// Characteristic polynomial `det(λI − A)` by the Faddeev–LeVerrier
    /// recursion. Returns `[1, c₁, …, cₙ]` for `λⁿ + c₁λⁿ⁻¹ + … + cₙ`.
    pub fn char_poly(&self) -> Vec<Rational> {
        assert!(self.is_square(), "characteristic polynomial of a non-square matrix");
        let n = self.rows;
        if let Some(c) = self.small_ints().and_then(|a| int_char_poly(&a, n)) {
            return c.into_iter().map(|v| Rational::from_integer(v.into())).collect();
        }
        let mut coeffs = vec![Rational::one()];
        let mut m = Matrix::zeros(n, n);
        for k in 1..=n {
            // M_k = A·M_{k-1} + c_{k-1} I,  c_k = −tr(A·M_k)/k
            let mut next = self * &m;
            let c_prev = coeffs[k - 1].clone();
            for i in 0..n {
                next[(i, i)] += &c_prev;
            }
            let am = self * &next;
            let c = -am.trace() / qi(k as i64);
            coeffs.push(c);
            m = next;
        }
        coeffs
    }

    /// Nilpotent iff the characteristic polynomial is `λⁿ`.
    pub fn is_nilpotent(&self) -> bool {
        self.char_poly().iter().skip(1).all(Zero::is_zero)
    }

    pub fn frobenius_f64(&self) -> f64 {
        self.data.iter().map(|x| to_f64(x).powi(2)).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Rational;
    fn index(&self, (r, c): (usize, usize)) -> &Rational {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Rational {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        &mut self.data[r * self.cols + c]
    }
}

impl Matrix {
    /// Entries as `i128` when all are integers of at most 64 bits.
    fn small_ints(&self) -> Option<Vec<i128>> {
        self.data
            .iter()
            .map(|x| {
                if x.is_integer() {
                    x.numer().to_i64().map(i128::from)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Row-major integer product; `None` on overflow.
fn int_product(a: &[i128], b: &[i128], rows: usize, inner: usize, cols: usize) -> Option<Vec<i128>> {
    let mut out = vec![0i128; rows * cols];
    for i in 0..rows {
        for k in 0..inner {
            let x = a[i * inner + k];
            if x == 0 {
                continue;
            }
            for j in 0..cols {
                let y = b[k * cols + j];
                if y != 0 {
                    let cell = &mut out[i * cols + j];
                    *cell = cell.checked_add(x.checked_mul(y)?)?;
                }
            }
        }
    }
    Some(out)
}

/// Faddeev–LeVerrier over the integers; every division by `k` is exact.
fn int_char_poly(a: &[i128], n: usize) -> Option<Vec<i128>> {
    let mut coeffs = vec![1i128];
    let mut m = vec![0i128; n * n];
    for k in 1..=n {
        let mut next = int_product(a, &m, n, n, n)?;
        for i in 0..n {
            next[i * n + i] = next[i * n + i].checked_add(coeffs[k - 1])?;
        }
        let am = int_product(a, &next, n, n, n)?;
        let mut tr = 0i128;
        for i in 0..n {
            tr = tr.checked_add(am[i * n + i])?;
        }
        coeffs.push(-tr / k as i128);
        m = next;
    }
    Some(coeffs)
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a.clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use proptest::prelude::*;

    fn schoolbook(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = Rational::zero();
                for k in 0..a.cols() {
                    s += &a[(i, k)] * &b[(k, j)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    fn rational_matrix(r: usize, c: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec((-9i64..10, 1i64..5), r * c)
            .prop_map(move |v| Matrix::new(r, c, v.into_iter().map(|(n, d)| q(n, d)).collect()).unwrap())
    }

    #[test]
    fn identity_product() {
        let m = Matrix::from_i64(&[&[1, 2], &[3, 4]]);
        assert_eq!(&Matrix::identity(2) * &m, m);
    }

    #[test]
    fn product_dimension_mismatch() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(a.try_mul(&a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn random_product_matches_schoolbook() {
        let a = Matrix::new(3, 3, (0..9).map(|i| q(i * 7 % 11 - 5, (i % 4) + 1)).collect()).unwrap();
        let b = Matrix::new(3, 3, (0..9).map(|i| q(3 - i * 5 % 7, (i % 3) + 2)).collect()).unwrap();
        assert_eq!(&a * &b, schoolbook(&a, &b));
    }

    #[test]
    fn solve_identity_and_standard_block() {
        let v = Matrix::new(3, 1, vec![q(1, 2), qi(-3), qi(7)]).unwrap();
        assert_eq!(Matrix::identity(3).solve(&v).unwrap(), v);

        let j = Matrix::from_i64(&[&[0, 0, 1, 0], &[0, 0, 0, 1], &[-1, 0, 0, 0], &[0, -1, 0, 0]]);
        let inv = j.inverse().unwrap();
        assert_eq!(inv, -&j);
        assert_eq!(inv, j.transpose());
    }

    #[test]
    fn singular_reports_rank() {
        let m = Matrix::from_i64(&[&[1, 2], &[2, 4]]);
        assert_eq!(m.inverse(), Err(Error::Singular { rank: 1, dim: 2 }));
    }

    #[test]
    fn random_invertible_solve_substitutes_back() {
        let m = Matrix::from_i64(&[&[2, 1, 0, 3], &[-1, 4, 1, 0], &[0, 2, -3, 1], &[5, 0, 1, 1]]);
        let rhs = Matrix::new(4, 2, (0..8).map(|i| q(i - 3, 2)).collect()).unwrap();
        let x = m.solve(&rhs).unwrap();
        assert_eq!(&m * &x, rhs);
    }

    #[test]
    fn nullspace_and_solve_any() {
        let m = Matrix::from_i64(&[&[1, 2, 3], &[2, 4, 6]]);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(m.apply(v).iter().all(Zero::is_zero));
        }
        assert!(m.solve_any(&[qi(1), qi(3)]).is_none());
        let x = m.solve_any(&[qi(1), qi(2)]).unwrap();
        assert_eq!(m.apply(&x), vec![qi(1), qi(2)]);
    }

    #[test]
    fn char_poly_matches_determinant() {
        let a = Matrix::from_i64(&[&[2, 1, 0], &[1, 3, -1], &[0, 4, 1]]);
        let cp = a.char_poly();
        // c_n = (−1)^n det A
        assert_eq!(cp[3], -a.determinant());
        assert_eq!(cp[1], -a.trace());
        assert!(Matrix::from_i64(&[&[0, 1, 5], &[0, 0, 2], &[0, 0, 0]]).is_nilpotent());
        assert!(!a.is_nilpotent());
    }

    #[test]
    fn integer_overflow_falls_back_to_rationals() {
        let big = Matrix::new(1, 1, vec![qi(i64::MAX)]).unwrap();
        let sq = &big * &big;
        assert_eq!(sq[(0, 0)], qi(i64::MAX) * qi(i64::MAX));
        assert_eq!(big.char_poly()[1], -qi(i64::MAX));
    }

    fn integer_matrix(r: usize, c: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-9i64..10, r * c).prop_map(move |v| Matrix::new(r, c, v.into_iter().map(qi).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn integer_product_matches_schoolbook(a in integer_matrix(3, 4), b in integer_matrix(4, 2)) {
            prop_assert_eq!(&a * &b, schoolbook(&a, &b));
        }

        #[test]
        fn char_poly_scales_with_the_matrix(a in integer_matrix(4, 4)) {
            // χ_{A/2}: coefficient k is 2⁻ᵏ times that of χ_A; A/2 takes the rational route
            let half = a.scale(&q(1, 2));
            let (ca, ch) = (a.char_poly(), half.char_poly());
            for k in 0..=4 {
                prop_assert_eq!(&ch[k] * qi(1 << k), ca[k].clone());
            }
        }

        #[test]
        fn associativity(a in rational_matrix(3, 2), b in rational_matrix(2, 4), c in rational_matrix(4, 2)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        }

        #[test]
        fn solve_reproduces_rhs(m in rational_matrix(3, 3), rhs in rational_matrix(3, 2)) {
            if let Ok(x) = m.solve(&rhs) {
                prop_assert_eq!(&m * &x, rhs);
            } else {
                prop_assert!(m.determinant().is_zero());
            }
        }
    }
}

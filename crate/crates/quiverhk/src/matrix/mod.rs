//! Dense complex linear algebra kernel.
//!
//! Everything in the crate is built on [`CMatrix`], a row-major dense matrix
//! of `Complex<f64>` entries. Decompositions live in [`decomp`], Jordan-form
//! machinery in [`jordan`], wedge/Plucker coordinates in [`plucker`].

pub mod decomp;
pub mod jordan;
pub mod plucker;

use num_complex::Complex64;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::Error;

pub use jordan::JordanStructure;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested real rows, for tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        CMatrix::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(entries: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(entries.len(), 1);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, 0)] = z;
        }
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `self * i`
    pub fn times_i(&self) -> CMatrix {
        self.scale(Complex64::new(0.0, 1.0))
    }

    pub fn sub_matrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        CMatrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn col_vec(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Horizontal stack of rows of `self` over the identity action; used for
    /// assembling padded block maps.
    pub fn embed(&self, rows: usize, cols: usize, r0: usize, c0: usize) -> CMatrix {
        let mut out = CMatrix::zeros(rows, cols);
        out.set_block(r0, c0, self);
        out
    }

    /// Matrix product, shape-checked.
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Trace-free projection `M - (tr M / n) I`.
    ///
    /// Errors on non-square input.
    pub fn trace_free(&self) -> Result<CMatrix, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let shift = self.trace() / (n as f64);
        let mut out = self.clone();
        for i in 0..n {
            out[(i, i)] -= shift;
        }
        Ok(out)
    }

    /// Distance to the Hermitian cone, `|M - M*|`.
    pub fn herm_defect(&self) -> f64 {
        (self - &self.adjoint()).norm_fro()
    }

    /// `(M + M*)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_re(0.5)
    }

    /// Coefficients `c_1..c_n` of the characteristic polynomial
    /// `lambda^n + c_1 lambda^{n-1} + ... + c_n`, by the Faddeev-LeVerrier
    /// recursion. Stable for the desk-scale sizes used here, and linear in
    /// perturbations of the matrix, unlike eigenvalue moduli.
    pub fn charpoly_coeffs(&self) -> Result<Vec<Complex64>, Error> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut coeffs = Vec::with_capacity(n);
        let mut m = CMatrix::zeros(n, n); // M_0 = 0
        let mut c = Complex64::new(1.0, 0.0); // c_0 = 1
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{k-1} I
            let mut am = self.matmul(&m);
            for i in 0..n {
                am[(i, i)] += c;
            }
            m = am;
            c = -self.matmul(&m).trace() / (k as f64);
            coeffs.push(c);
        }
        Ok(coeffs)
    }

    /// Nilpotency defect: largest characteristic-polynomial coefficient,
    /// normalised by the matching power of the norm. Zero exactly when all
    /// eigenvalues vanish; degrades linearly with perturbations (eigenvalue
    /// moduli of a perturbed nilpotent scatter like the n-th root instead).
    pub fn nilpotency_defect(&self) -> Result<f64, Error> {
        let coeffs = self.charpoly_coeffs()?;
        let scale = 1.0 + self.norm_fro();
        Ok(coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() / scale.powi(k as i32 + 1))
            .fold(0.0, f64::max))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &CMatrix {
            type Output = CMatrix;
            fn $method(self, other: &CMatrix) -> CMatrix {
                assert_eq!((self.rows, self.cols), (other.rows, other.cols));
                CMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self
                        .data
                        .iter()
                        .zip(&other.data)
                        .map(|(a, b)| a $op b)
                        .collect(),
                }
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, other: &CMatrix) -> CMatrix {
        self.matmul(other)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

// JSON encoding used repo-wide: complex scalar = [re, im];
// matrix = {"rows": r, "cols": c, "data": [[re, im], ...]} row-major.

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            rows: usize,
            cols: usize,
            data: Vec<[f64; 2]>,
            #[serde(skip)]
            _p: &'a (),
        }
        Repr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
            _p: &(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rows: usize,
            cols: usize,
            data: Vec<[f64; 2]>,
        }
        let r = Repr::deserialize(deserializer)?;
        if r.data.len() != r.rows * r.cols {
            return Err(D::Error::custom(format!(
                "matrix data length {} does not match {}x{}",
                r.data.len(),
                r.rows,
                r.cols
            )));
        }
        let m = CMatrix {
            rows: r.rows,
            cols: r.cols,
            data: r.data.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        };
        if !m.is_finite() {
            return Err(D::Error::custom("matrix entries must be finite"));
        }
        Ok(m)
    }
}

/// Serialize a complex vector in the repo-wide `[re, im]` pair encoding.
pub fn cvec_to_json(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn cvec_from_json(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

/// `#[serde(with = "cvec_serde")]` adapter keeping `Vec<Complex64>` in the
/// `[re, im]` pair encoding.
pub mod cvec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        cvec_to_json(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(cvec_from_json(&pairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trace_free_identity_is_zero() {
        let z = CMatrix::identity(4).trace_free().unwrap();
        assert!(z.norm_fro() < 1e-15);
    }

    #[test]
    fn trace_free_direct_formula() {
        let m = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let t = m.trace_free().unwrap();
        assert!((t[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((t[(1, 1)] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trace_free_random_has_tiny_trace_and_is_idempotent() {
        let m = CMatrix::from_fn(5, 5, |i, j| c((i * 7 + j) as f64 * 0.3 - 2.0, (j + 1) as f64 * 0.71));
        let t = m.trace_free().unwrap();
        assert!(t.trace().norm() <= 1e-12 * (1.0 + m.norm_fro()));
        let tt = t.trace_free().unwrap();
        assert!((&tt - &t).norm_fro() < 1e-12);
    }

    #[test]
    fn trace_free_rejects_non_square() {
        assert!(CMatrix::zeros(2, 3).trace_free().is_err());
    }

    #[test]
    fn charpoly_of_nilpotent_vanishes() {
        let mut j3 = CMatrix::zeros(3, 3);
        j3[(0, 1)] = c(1.0, 0.0);
        j3[(1, 2)] = c(1.0, 0.0);
        assert!(j3.nilpotency_defect().unwrap() < 1e-14);
        let d = CMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(d.nilpotency_defect().unwrap() > 0.1);
    }

    #[test]
    fn json_round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64 + 0.5));
        let s = serde_json::to_string(&m).unwrap();
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}

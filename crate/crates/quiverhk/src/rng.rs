//! Deterministic random sources for constructors and verification suites.
//!
//! Everything randomized in this crate takes an explicit `u64` seed and draws
//! through [`SeedRng`], so identical seeds give bit-identical results on every
//! platform.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::CMatrix;

pub struct SeedRng(ChaCha8Rng);

impl SeedRng {
    pub fn new(seed: u64) -> Self {
        SeedRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1: f64 = self.0.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = self.0.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal())
    }

    /// Uniform phase on the unit circle.
    pub fn unit_complex(&mut self) -> Complex64 {
        let t = self.0.gen::<f64>() * std::f64::consts::TAU;
        Complex64::new(t.cos(), t.sin())
    }

    /// Matrix with iid complex standard normal entries.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| self.complex_normal())
    }

    /// Haar-ish random unitary via QR of a Gaussian matrix.
    pub fn unitary(&mut self, n: usize) -> CMatrix {
        let (q, r) = crate::matrix::decomp::qr(&self.matrix(n, n));
        // fix column phases so the distribution does not depend on QR details
        let mut u = q;
        for j in 0..n {
            let d = r[(j, j)];
            if d.norm() > 0.0 {
                let ph = d / d.norm();
                for i in 0..n {
                    u[(i, j)] *= ph;
                }
            }
        }
        u
    }

    /// Random special unitary (determinant one).
    pub fn special_unitary(&mut self, n: usize) -> CMatrix {
        let u = self.unitary(n);
        let det = crate::matrix::decomp::determinant(&u);
        let ph = det.powf(-1.0 / n as f64);
        u.scale(ph)
    }

    /// Uniform point of SU(2) as a unit pair `(u, v)`.
    pub fn su2(&mut self) -> (Complex64, Complex64) {
        loop {
            let u = self.complex_normal();
            let v = self.complex_normal();
            let n = (u.norm_sqr() + v.norm_sqr()).sqrt();
            if n > 1e-6 {
                return (u / n, v / n);
            }
        }
    }

    /// Random invertible matrix with condition number below the bound,
    /// built as `U diag(s) V*` with controlled spectrum.
    pub fn well_conditioned(&mut self, n: usize, cond: f64) -> CMatrix {
        let u = self.unitary(n);
        let v = self.unitary(n);
        let smax = 1.0;
        let smin = smax / cond;
        let d: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(self.uniform(smin, smax), 0.0))
            .collect();
        u.matmul(&CMatrix::diag(&d)).matmul(&v.adjoint())
    }
}

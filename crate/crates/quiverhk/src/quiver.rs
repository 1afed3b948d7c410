//! Full-flag quiver data model: moment-map scalars and residuals, the SU(2)
//! and gauge actions, the ladder of top-edge products, and constructors of
//! complex moment-map solutions.
//!
//! A quiver is the chain `C^1 <-> C^2 <-> ... <-> C^n` with forward maps
//! `alpha_k : C^k -> C^{k+1}` and backward maps `beta_k : C^{k+1} -> C^k`.
//! Node `k` (dimension `k`) carries one complex and one real moment-map
//! equation for `k = 1..n-1`:
//!
//! ```text
//!   alpha_{k-1} beta_{k-1} - beta_k alpha_k                                  = lambda^C_k I_k
//!   alpha_{k-1} alpha_{k-1}* - beta_{k-1}* beta_{k-1}
//!       + beta_k beta_k* - alpha_k* alpha_k                                  = lambda^R_k I_k
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::matrix::decomp;
use crate::matrix::jordan;
use crate::matrix::CMatrix;
use crate::rng::SeedRng;
use crate::Error;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Full-flag quiver. Edge `k` (1-based, `k = 1..n-1`) is stored at index
/// `k - 1`: `alphas[k-1]` is `(k+1) x k`, `betas[k-1]` is `k x (k+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quiver {
    pub n: usize,
    #[serde(rename = "alpha")]
    pub alphas: Vec<CMatrix>,
    #[serde(rename = "beta")]
    pub betas: Vec<CMatrix>,
}

/// The scalar levels on the right-hand side of the moment-map equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScalars {
    #[serde(with = "crate::matrix::cvec_serde")]
    pub lambda_c: Vec<Complex64>,
    pub lambda_r: Vec<f64>,
}

impl MomentScalars {
    pub fn zero(n: usize) -> Self {
        MomentScalars {
            lambda_c: vec![Complex64::new(0.0, 0.0); n - 1],
            lambda_r: vec![0.0; n - 1],
        }
    }

    pub fn n(&self) -> usize {
        self.lambda_c.len() + 1
    }
}

impl Quiver {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1);
        Quiver {
            n,
            alphas: (1..n).map(|k| CMatrix::zeros(k + 1, k)).collect(),
            betas: (1..n).map(|k| CMatrix::zeros(k, k + 1)).collect(),
        }
    }

    /// Validate shapes and finiteness.
    pub fn validate(&self) -> Result<(), Error> {
        if self.alphas.len() + 1 != self.n || self.betas.len() + 1 != self.n {
            return Err(Error::shape(format!(
                "expected {} edges, got {} alphas / {} betas",
                self.n - 1,
                self.alphas.len(),
                self.betas.len()
            )));
        }
        for k in 1..self.n {
            let a = &self.alphas[k - 1];
            let b = &self.betas[k - 1];
            if (a.rows(), a.cols()) != (k + 1, k) {
                return Err(Error::shape(format!(
                    "alpha_{} must be {}x{}, got {}x{}",
                    k,
                    k + 1,
                    k,
                    a.rows(),
                    a.cols()
                )));
            }
            if (b.rows(), b.cols()) != (k, k + 1) {
                return Err(Error::shape(format!(
                    "beta_{} must be {}x{}, got {}x{}",
                    k,
                    k,
                    k + 1,
                    b.rows(),
                    b.cols()
                )));
            }
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::shape(format!("edge {} has non-finite entries", k)));
            }
        }
        Ok(())
    }

    /// 1-based edge access.
    pub fn alpha(&self, k: usize) -> &CMatrix {
        &self.alphas[k - 1]
    }

    pub fn beta(&self, k: usize) -> &CMatrix {
        &self.betas[k - 1]
    }

    /// The top-edge composition `X = alpha_{n-1} beta_{n-1}`.
    pub fn x(&self) -> CMatrix {
        if self.n == 1 {
            return CMatrix::zeros(1, 1);
        }
        self.alpha(self.n - 1).matmul(self.beta(self.n - 1))
    }

    /// Complex moment defect at node `k`, `alpha_{k-1} beta_{k-1} - beta_k alpha_k`.
    fn complex_defect(&self, k: usize) -> CMatrix {
        let down = if k >= 2 {
            self.alpha(k - 1).matmul(self.beta(k - 1))
        } else {
            CMatrix::zeros(1, 1)
        };
        &down - &self.beta(k).matmul(self.alpha(k))
    }

    /// Real moment defect at node `k` (no scalar subtracted).
    fn real_defect(&self, k: usize) -> CMatrix {
        let mut d = CMatrix::zeros(k, k);
        if k >= 2 {
            let a = self.alpha(k - 1);
            let b = self.beta(k - 1);
            d = &(&d + &a.matmul(&a.adjoint())) - &b.adjoint().matmul(b);
        }
        let a = self.alpha(k);
        let b = self.beta(k);
        &(&d + &b.matmul(&b.adjoint())) - &a.adjoint().matmul(a)
    }

    /// Hermitian real defects `D_k = real_defect(k) - lambda^R_k I` at all
    /// nodes; the balancer's flow directions.
    pub fn real_defect_matrices(&self, s: &MomentScalars) -> Vec<CMatrix> {
        (1..self.n)
            .map(|k| {
                let mut d = self.real_defect(k);
                for i in 0..k {
                    d[(i, i)] -= Complex64::new(s.lambda_r[k - 1], 0.0);
                }
                d.hermitian_part()
            })
            .collect()
    }
}

/// Infer the scalar levels from traces, together with the largest Frobenius
/// norm of the trace-free parts of both defect families. The residual is
/// zero exactly when the quiver satisfies the moment-map equations for some
/// scalars.
pub fn infer_scalars(q: &Quiver) -> (MomentScalars, f64) {
    let mut lambda_c = Vec::with_capacity(q.n - 1);
    let mut lambda_r = Vec::with_capacity(q.n - 1);
    let mut offdiag: f64 = 0.0;
    for k in 1..q.n {
        let c = q.complex_defect(k);
        let r = q.real_defect(k);
        let lc = c.trace() / k as f64;
        let lr = (r.trace() / k as f64).re;
        lambda_c.push(lc);
        lambda_r.push(lr);
        offdiag = offdiag
            .max(c.trace_free().expect("square").norm_fro())
            .max(r.trace_free().expect("square").norm_fro());
    }
    (MomentScalars { lambda_c, lambda_r }, offdiag)
}

/// Largest complex moment residual `|alpha_{k-1} beta_{k-1} - beta_k alpha_k - lambda^C_k I|_F`.
pub fn complex_residual(q: &Quiver, s: &MomentScalars) -> f64 {
    (1..q.n)
        .map(|k| {
            let mut c = q.complex_defect(k);
            for i in 0..k {
                c[(i, i)] -= s.lambda_c[k - 1];
            }
            c.norm_fro()
        })
        .fold(0.0, f64::max)
}

/// Largest real moment residual.
pub fn real_residual(q: &Quiver, s: &MomentScalars) -> f64 {
    (1..q.n)
        .map(|k| {
            let mut r = q.real_defect(k);
            for i in 0..k {
                r[(i, i)] -= Complex64::new(s.lambda_r[k - 1], 0.0);
            }
            r.norm_fro()
        })
        .fold(0.0, f64::max)
}

/// The rotation by a unit pair `(u, v)`: every edge maps as
/// `alpha -> u alpha + v beta*`, `beta -> -v alpha* + u beta`.
///
/// Composing rotations satisfies
/// `(u2, v2) after (u1, v1) = (u2 u1 - v2 conj(v1), u2 v1 + v2 conj(u1))`.
pub fn su2_act(q: &Quiver, u: Complex64, v: Complex64) -> Result<Quiver, Error> {
    let norm = u.norm_sqr() + v.norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitParameter { norm });
    }
    let mut out = q.clone();
    for e in 0..q.n - 1 {
        out.alphas[e] = &q.alphas[e].scale(u) + &q.betas[e].adjoint().scale(v);
        out.betas[e] = &q.betas[e].scale(u) - &q.alphas[e].adjoint().scale(v);
    }
    Ok(out)
}

/// Gauge action by `g = (g_1, ..., g_n)`, `g_k` of size `k x k`:
/// `alpha_k -> g_{k+1} alpha_k g_k^{-1}`, `beta_k -> g_k beta_k g_{k+1}^{-1}`.
pub fn gauge_act(q: &Quiver, g: &[CMatrix]) -> Result<Quiver, Error> {
    if g.len() != q.n {
        return Err(Error::shape(format!(
            "expected {} gauge blocks, got {}",
            q.n,
            g.len()
        )));
    }
    let mut inverses = Vec::with_capacity(q.n);
    for (i, gi) in g.iter().enumerate() {
        if (gi.rows(), gi.cols()) != (i + 1, i + 1) {
            return Err(Error::shape(format!(
                "gauge block {} must be {0}x{0} sized {}",
                i + 1,
                gi.rows()
            )));
        }
        let lu = decomp::Lu::new(gi);
        if lu.is_singular() {
            return Err(Error::SingularGauge { index: i + 1 });
        }
        inverses.push(lu.solve(&CMatrix::identity(i + 1))?);
    }
    let mut out = q.clone();
    for k in 1..q.n {
        out.alphas[k - 1] = g[k].matmul(&q.alphas[k - 1]).matmul(&inverses[k - 1]);
        out.betas[k - 1] = g[k - 1].matmul(&q.betas[k - 1]).matmul(&inverses[k]);
    }
    Ok(out)
}

/// The ladder product `X_k = alpha_{n-1} ... alpha_{n-k} beta_{n-k} ... beta_{n-1}`.
pub fn xk_matrix(q: &Quiver, k: usize) -> Result<CMatrix, Error> {
    if k == 0 || k > q.n - 1 {
        return Err(Error::IndexOutOfRange { k, max: q.n - 1 });
    }
    let mut alpha_chain = CMatrix::identity(q.n);
    for e in (q.n - k..=q.n - 1).rev() {
        alpha_chain = alpha_chain.matmul(q.alpha(e));
    }
    let mut beta_chain = CMatrix::identity(q.n - k);
    for e in q.n - k..=q.n - 1 {
        beta_chain = beta_chain.matmul(q.beta(e));
    }
    Ok(alpha_chain.matmul(&beta_chain))
}

/// Composite chains used by the wedge identities: the alpha chain
/// `alpha_{n-1} ... alpha_j : C^j -> C^n` and the beta chain
/// `beta_j ... beta_{n-1} : C^n -> C^j`.
pub fn alpha_chain(q: &Quiver, j: usize) -> CMatrix {
    let mut m = CMatrix::identity(q.n);
    for e in (j..=q.n - 1).rev() {
        m = m.matmul(q.alpha(e));
    }
    m
}

pub fn beta_chain(q: &Quiver, j: usize) -> CMatrix {
    let mut m = CMatrix::identity(j);
    for e in j..=q.n - 1 {
        m = m.matmul(q.beta(e));
    }
    m
}

const XK_PRECONDITION_TOL: f64 = 1e-8;

/// Residual of the ladder recursion
/// `X_k X = X_{k+1} - (lambda^C_{n-1} + ... + lambda^C_{n-k}) X_k`.
pub fn xk_recursion_residual(q: &Quiver, s: &MomentScalars) -> Result<f64, Error> {
    let c = complex_residual(q, s);
    if c > XK_PRECONDITION_TOL {
        return Err(Error::Precondition {
            context: "xk_recursion_residual needs the complex equations",
            residual: c,
            tol: XK_PRECONDITION_TOL,
        });
    }
    let x = q.x();
    let mut worst: f64 = 0.0;
    for k in 1..q.n - 1 {
        let xk = xk_matrix(q, k)?;
        let xk1 = xk_matrix(q, k + 1)?;
        let sum: Complex64 = (1..=k).map(|j| s.lambda_c[q.n - 1 - j]).sum();
        let lhs = &(&xk.matmul(&x) - &xk1) + &xk.scale(sum);
        worst = worst.max(lhs.norm_fro());
    }
    Ok(worst)
}

/// Residual of the polynomial identity `X (X + nu_1) ... (X + nu_{n-1}) = 0`
/// with `nu_i = sum_{j >= i} lambda^C_j`, normalised by `1 + |X|^n`.
pub fn characteristic_residual(q: &Quiver, s: &MomentScalars) -> Result<f64, Error> {
    let c = complex_residual(q, s);
    if c > XK_PRECONDITION_TOL {
        return Err(Error::Precondition {
            context: "characteristic_residual needs the complex equations",
            residual: c,
            tol: XK_PRECONDITION_TOL,
        });
    }
    let x = q.x();
    let mut prod = x.clone();
    for i in 1..q.n {
        let nu: Complex64 = (i..q.n).map(|j| s.lambda_c[j - 1]).sum();
        let mut factor = x.clone();
        for d in 0..q.n {
            factor[(d, d)] += nu;
        }
        prod = prod.matmul(&factor);
    }
    Ok(prod.norm_fro() / (1.0 + x.norm_fro().powi(q.n as i32)))
}

/// Eigenvalue levels of the trace-free top product implied by the scalars:
/// `kappa_j = (sum_{k<j} k lambda^C_k - sum_{k>=j} (n-k) lambda^C_k) / n`.
/// Sums to zero; differences telescope the scalar levels.
pub fn kappa_spectrum(s: &MomentScalars, n: usize) -> Vec<Complex64> {
    assert_eq!(s.lambda_c.len() + 1, n);
    (1..=n)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 1..n {
                let w = if k < j { k as f64 } else { -((n - k) as f64) };
                acc += s.lambda_c[k - 1] * w;
            }
            acc / n as f64
        })
        .collect()
}

const INJECTIVITY_FLOOR: f64 = 1e-3;

/// Random solution of the complex moment-map equations at the given levels.
///
/// Construction proceeds node by node: draw `alpha_k` random injective
/// (smallest singular value at least 1e-3 after unit normalisation,
/// resampling otherwise), then solve
/// `beta_k alpha_k = G_k := alpha_{k-1} beta_{k-1} - lambda^C_k I` by
/// `beta_k = G_k pinv(alpha_k) + C P` with `P` the projector onto the left
/// annihilator of `alpha_k` and `C` a random coefficient block.
/// Deterministic given the seed.
pub fn random_complex_solution(n: usize, lambda_c: &[Complex64], seed: u64) -> Quiver {
    assert!(n >= 2);
    assert_eq!(lambda_c.len(), n - 1);
    let mut rng = SeedRng::new(seed);
    let mut q = Quiver::zero(n);
    let mut g = CMatrix::zeros(1, 1); // beta_1 alpha_1 target = -lambda^C_1
    g[(0, 0)] = -lambda_c[0];
    for k in 1..n {
        let a = loop {
            let mut a = rng.matrix(k + 1, k);
            let nrm = a.norm_fro();
            a = a.scale_re(1.0 / nrm);
            let sv = decomp::singular_values(&a);
            if sv[k - 1] >= INJECTIVITY_FLOOR {
                break a;
            }
        };
        // pinv = (a* a)^{-1} a*   (Gram matrix is well conditioned by the floor)
        let gram = a.adjoint().matmul(&a);
        let pinv = decomp::solve(&gram, &a.adjoint()).expect("gram invertible");
        let proj = &CMatrix::identity(k + 1) - &a.matmul(&pinv);
        let c = rng.matrix(k, k + 1);
        let b = &g.matmul(&pinv) + &c.matmul(&proj);
        q.alphas[k - 1] = a.clone();
        q.betas[k - 1] = b.clone();
        if k < n - 1 {
            g = a.matmul(&b);
            for i in 0..k + 1 {
                g[(i, i)] -= lambda_c[k];
            }
        }
    }
    q
}

const NILPOTENT_TOL: f64 = 1e-8;

/// Quiver over a nilpotent matrix: satisfies the complex equations with zero
/// scalars and reproduces `X` at the top edge.
///
/// Regular inputs go through the unitary strict triangularization and a
/// ladder of triangular square roots; degenerate inputs are assembled from
/// standard shift quivers over the Jordan blocks and conjugated back.
pub fn quiver_from_nilpotent(x: &CMatrix) -> Result<Quiver, Error> {
    if !x.is_square() {
        return Err(Error::NonSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let n = x.rows();
    let defect = x.nilpotency_defect()?;
    if defect > NILPOTENT_TOL {
        return Err(Error::NotNilpotent {
            defect,
            tol: NILPOTENT_TOL,
        });
    }
    let scale = x.norm_fro();
    if scale == 0.0 || n == 1 {
        return Ok(Quiver::zero(n));
    }
    let (u, t) = jordan::strict_upper_triangularize(x, NILPOTENT_TOL)?;
    let regular = (0..n - 1).all(|i| t[(i, i + 1)].re > 1e-7 * (1.0 + scale));
    if regular {
        return Ok(ladder_quiver(&t, Some(&u), n));
    }
    let (p, partition) = jordan::nilpotent_jordan_basis(x, NILPOTENT_TOL)?;
    let mut q = standard_nilpotent_quiver(n, &partition);
    let pinv = decomp::inverse(&p)?;
    q.alphas[n - 2] = p.matmul(&q.alphas[n - 2]);
    q.betas[n - 2] = q.betas[n - 2].matmul(&pinv);
    Ok(q)
}

/// Ladder construction over a strictly upper-triangular `t` with positive
/// superdiagonal: each level takes the shifted block `M`, its triangular
/// square root `A`, and the edge pair `alpha = (A; 0)`, `beta = (0 | A)`.
/// An optional unitary is applied on the top level only.
fn ladder_quiver(t: &CMatrix, top_unitary: Option<&CMatrix>, n: usize) -> Quiver {
    let mut q = Quiver::zero(n);
    let mut cur = t.clone();
    for k in (1..n).rev() {
        let m = cur.sub_matrix(0, 1, k, k);
        let a = jordan::upper_sqrt(&m).expect("ladder blocks stay positive");
        let mut alpha = CMatrix::zeros(k + 1, k);
        alpha.set_block(0, 0, &a);
        let mut beta = CMatrix::zeros(k, k + 1);
        beta.set_block(0, 1, &a);
        // next level: beta_k alpha_k, computed before the top unitary twist
        cur = beta.matmul(&alpha);
        if k == n - 1 {
            if let Some(u) = top_unitary {
                alpha = u.matmul(&alpha);
                beta = beta.matmul(&u.adjoint());
            }
        }
        q.alphas[k - 1] = alpha;
        q.betas[k - 1] = beta;
    }
    q
}

/// Direct sum of standard shift quivers over the Jordan blocks of the given
/// partition, padded with zero maps to the full flag. The top product is
/// exactly the Jordan matrix of `partition`.
pub fn standard_nilpotent_quiver(n: usize, partition: &[usize]) -> Quiver {
    assert_eq!(partition.iter().sum::<usize>(), n);
    let mut q = Quiver::zero(n);
    let block_dim = |l: usize, level: usize| level.saturating_sub(n - l);
    for k in 1..n {
        let mut alpha = CMatrix::zeros(k + 1, k);
        let mut beta = CMatrix::zeros(k, k + 1);
        let mut off_k = 0;
        let mut off_k1 = 0;
        for &l in partition {
            let dk = block_dim(l, k);
            let dk1 = block_dim(l, k + 1);
            for t in 0..dk {
                alpha[(off_k1 + t, off_k + t)] = ONE;
                beta[(off_k + t, off_k1 + t + 1)] = ONE;
            }
            off_k += dk;
            off_k1 += dk1;
        }
        q.alphas[k - 1] = alpha;
        q.betas[k - 1] = beta;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::jordan::jordan_matrix;
    use crate::rng::SeedRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn infer_scalars_zero_quiver() {
        let q = Quiver::zero(4);
        let (s, off) = infer_scalars(&q);
        assert!(s.lambda_c.iter().all(|z| z.norm() == 0.0));
        assert!(s.lambda_r.iter().all(|&x| x == 0.0));
        assert_eq!(off, 0.0);
        assert_eq!(complex_residual(&q, &s), 0.0);
        assert_eq!(real_residual(&q, &s), 0.0);
    }

    #[test]
    fn infer_scalars_n2_hand_computations() {
        // alpha = (0; nu), beta = (0, mu): lambda^C_1 = -mu nu
        let (nu, mu) = (c(0.7, 0.3), c(-1.1, 0.4));
        let mut q = Quiver::zero(2);
        q.alphas[0] = CMatrix::column(&[c(0.0, 0.0), nu]);
        q.betas[0] = CMatrix::column(&[c(0.0, 0.0), mu]).transpose();
        let (s, off) = infer_scalars(&q);
        assert!((s.lambda_c[0] + mu * nu).norm() < 1e-14);
        assert!(off < 1e-14);

        // alpha = (1; 0), beta = (0, 1): both levels vanish
        let mut q = Quiver::zero(2);
        q.alphas[0] = CMatrix::column(&[ONE, c(0.0, 0.0)]);
        q.betas[0] = CMatrix::column(&[c(0.0, 0.0), ONE]).transpose();
        let (s, off) = infer_scalars(&q);
        assert!(s.lambda_c[0].norm() < 1e-14 && s.lambda_r[0].abs() < 1e-14 && off < 1e-14);
    }

    #[test]
    fn scalar_residual_of_zero_quiver_at_unit_levels() {
        let q = Quiver::zero(3);
        let s = MomentScalars {
            lambda_c: vec![ONE, ONE],
            lambda_r: vec![0.0, 0.0],
        };
        // defect at node k is -lambda I_k, norm sqrt(k)
        assert!((complex_residual(&q, &s) - (2.0f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn real_residual_paper_balanced_pair() {
        let d = 1.7_f64;
        let mut q = Quiver::zero(2);
        q.alphas[0] = CMatrix::column(&[c(d.sqrt(), 0.0), c(0.0, 0.0)]);
        q.betas[0] = CMatrix::column(&[c(0.0, 0.0), c(d.sqrt(), 0.0)]).transpose();
        let s = MomentScalars::zero(2);
        assert!(real_residual(&q, &s) < 1e-14);

        // unbalanced variant has the hand-computable defect |beta beta* - alpha* alpha|
        let mut q2 = Quiver::zero(2);
        q2.alphas[0] = CMatrix::column(&[c(2.0, 0.0), c(0.0, 0.0)]);
        q2.betas[0] = CMatrix::column(&[c(0.0, 0.0), c(1.0, 0.0)]).transpose();
        assert!((real_residual(&q2, &s) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_solution_residuals() {
        let mut rng = SeedRng::new(77);
        for &n in &[2usize, 5] {
            let lam: Vec<Complex64> = (0..n - 1).map(|_| rng.complex_normal()).collect();
            let q = random_complex_solution(n, &lam, 7);
            let s = MomentScalars {
                lambda_c: lam.clone(),
                lambda_r: vec![0.0; n - 1],
            };
            assert!(complex_residual(&q, &s) <= 1e-10, "n = {}", n);
        }
        let zero = vec![c(0.0, 0.0)];
        let q = random_complex_solution(2, &zero, 1);
        let s = MomentScalars::zero(2);
        assert!(complex_residual(&q, &s) <= 1e-12);
    }

    #[test]
    fn random_solution_deterministic() {
        let lam = vec![c(0.3, -0.2), c(0.1, 0.5)];
        let a = random_complex_solution(3, &lam, 42);
        let b = random_complex_solution(3, &lam, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn su2_identity_and_composition() {
        let lam = vec![c(0.2, 0.1), c(-0.4, 0.3)];
        let q = random_complex_solution(3, &lam, 5);
        let same = su2_act(&q, ONE, c(0.0, 0.0)).unwrap();
        assert_eq!(q, same);

        let mut rng = SeedRng::new(6);
        let (u1, v1) = rng.su2();
        let (u2, v2) = rng.su2();
        let lhs = su2_act(&su2_act(&q, u1, v1).unwrap(), u2, v2).unwrap();
        let (uc, vc) = (u2 * u1 - v2 * v1.conj(), u2 * v1 + v2 * u1.conj());
        let rhs = su2_act(&q, uc, vc).unwrap();
        for e in 0..2 {
            assert!((&lhs.alphas[e] - &rhs.alphas[e]).norm_fro() < 1e-12);
            assert!((&lhs.betas[e] - &rhs.betas[e]).norm_fro() < 1e-12);
        }
    }

    #[test]
    fn su2_j_action_and_square() {
        let lam = vec![c(0.2, 0.1)];
        let q = random_complex_solution(2, &lam, 5);
        let j = su2_act(&q, c(0.0, 0.0), ONE).unwrap();
        assert!((&j.alphas[0] - &q.betas[0].adjoint()).norm_fro() < 1e-14);
        assert!((&j.betas[0] + &q.alphas[0].adjoint()).norm_fro() < 1e-14);
        // j^2 = -1 on every edge
        let jj = su2_act(&j, c(0.0, 0.0), ONE).unwrap();
        assert!((&jj.alphas[0] + &q.alphas[0]).norm_fro() < 1e-14);
        assert!((&jj.betas[0] + &q.betas[0]).norm_fro() < 1e-14);
    }

    #[test]
    fn su2_rejects_non_unit() {
        let q = Quiver::zero(2);
        assert!(su2_act(&q, ONE, ONE).is_err());
    }

    #[test]
    fn gauge_identity_roundtrip_and_invariance() {
        let lam = vec![c(0.3, -0.1), c(0.2, 0.4)];
        let q = random_complex_solution(3, &lam, 9);
        let ident: Vec<CMatrix> = (1..=3).map(CMatrix::identity).collect();
        assert_eq!(gauge_act(&q, &ident).unwrap(), q);

        let mut rng = SeedRng::new(10);
        let g: Vec<CMatrix> = (1..=3).map(|k| rng.well_conditioned(k, 20.0)).collect();
        let ginv: Vec<CMatrix> = g.iter().map(|m| decomp::inverse(m).unwrap()).collect();
        let round = gauge_act(&gauge_act(&q, &g).unwrap(), &ginv).unwrap();
        for e in 0..2 {
            assert!((&round.alphas[e] - &q.alphas[e]).norm_fro() < 1e-10);
        }

        // with g_n = I the scalars and X are invariant
        let mut g2: Vec<CMatrix> = (1..=2).map(|k| rng.well_conditioned(k, 20.0)).collect();
        g2.push(CMatrix::identity(3));
        let moved = gauge_act(&q, &g2).unwrap();
        let (s0, _) = infer_scalars(&q);
        let (s1, _) = infer_scalars(&moved);
        for i in 0..2 {
            assert!((s0.lambda_c[i] - s1.lambda_c[i]).norm() < 1e-10);
        }
        assert!((&moved.x() - &q.x()).norm_fro() < 1e-10);
    }

    #[test]
    fn gauge_rejects_singular() {
        let q = Quiver::zero(2);
        let g = vec![CMatrix::zeros(1, 1), CMatrix::identity(2)];
        assert!(matches!(
            gauge_act(&q, &g),
            Err(Error::SingularGauge { index: 1 })
        ));
    }

    #[test]
    fn xk_matrix_definition_and_zero() {
        let lam = vec![c(0.3, -0.1), c(0.2, 0.4)];
        let q = random_complex_solution(3, &lam, 3);
        let x1 = xk_matrix(&q, 1).unwrap();
        assert!((&x1 - &q.x()).norm_fro() < 1e-14);
        let z = Quiver::zero(4);
        for k in 1..=3 {
            assert!(xk_matrix(&z, k).unwrap().norm_fro() == 0.0);
        }
        assert!(xk_matrix(&q, 3).is_err());
        assert!(xk_matrix(&q, 0).is_err());
    }

    #[test]
    fn xk_recursion_and_characteristic_on_solutions() {
        let mut rng = SeedRng::new(31);
        for n in [3usize, 4, 5] {
            let lam: Vec<Complex64> = (0..n - 1).map(|_| rng.complex_normal()).collect();
            let q = random_complex_solution(n, &lam, 100 + n as u64);
            let s = MomentScalars {
                lambda_c: lam,
                lambda_r: vec![0.0; n - 1],
            };
            assert!(xk_recursion_residual(&q, &s).unwrap() <= 1e-8, "n = {}", n);
            assert!(characteristic_residual(&q, &s).unwrap() <= 1e-8, "n = {}", n);
        }
        let z = Quiver::zero(3);
        let s = MomentScalars::zero(3);
        assert_eq!(xk_recursion_residual(&z, &s).unwrap(), 0.0);
        assert_eq!(characteristic_residual(&z, &s).unwrap(), 0.0);
    }

    #[test]
    fn precondition_guard_fires() {
        let mut rng = SeedRng::new(32);
        let mut q = Quiver::zero(3);
        q.alphas[0] = rng.matrix(2, 1);
        q.alphas[1] = rng.matrix(3, 2);
        q.betas[0] = rng.matrix(1, 2);
        q.betas[1] = rng.matrix(2, 3);
        let s = MomentScalars::zero(3);
        assert!(matches!(
            characteristic_residual(&q, &s),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn kappa_spectrum_identities() {
        let s = MomentScalars::zero(4);
        assert!(kappa_spectrum(&s, 4).iter().all(|z| z.norm() == 0.0));

        // n = 2 closed form
        let s = MomentScalars {
            lambda_c: vec![c(-0.6, 0.2)],
            lambda_r: vec![0.0],
        };
        let k = kappa_spectrum(&s, 2);
        assert!((k[0] + s.lambda_c[0] * 0.5).norm() < 1e-15);
        assert!((k[1] - s.lambda_c[0] * 0.5).norm() < 1e-15);

        let mut rng = SeedRng::new(33);
        let s = MomentScalars {
            lambda_c: (0..2).map(|_| rng.complex_normal()).collect(),
            lambda_r: vec![0.0; 2],
        };
        let k = kappa_spectrum(&s, 3);
        let total: Complex64 = k.iter().sum();
        assert!(total.norm() < 1e-14);
        for i in 1..=3usize {
            for j in i + 1..=3usize {
                let expect: Complex64 = (i..j).map(|t| s.lambda_c[t - 1]).sum();
                assert!((k[j - 1] - k[i - 1] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn from_nilpotent_j2_and_zero() {
        let j2 = jordan_matrix(&[2]);
        let q = quiver_from_nilpotent(&j2).unwrap();
        assert!((q.alphas[0][(0, 0)] - ONE).norm() < 1e-12);
        assert!((q.betas[0][(0, 1)] - ONE).norm() < 1e-12);
        assert!((&q.x() - &j2).norm_fro() < 1e-12);

        let z = quiver_from_nilpotent(&CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(z, Quiver::zero(3));
    }

    #[test]
    fn from_nilpotent_regular_reconstructs() {
        let mut rng = SeedRng::new(55);
        let j = jordan_matrix(&[4]);
        let p = rng.well_conditioned(4, 10.0);
        let x = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
        let q = quiver_from_nilpotent(&x).unwrap();
        let s = MomentScalars::zero(4);
        assert!(complex_residual(&q, &s) <= 1e-9);
        assert!((&q.x() - &x).norm_fro() <= 1e-9 * (1.0 + x.norm_fro()));
    }

    #[test]
    fn from_nilpotent_degenerate_blocks() {
        let mut rng = SeedRng::new(56);
        for &parts in &[&[2usize, 1][..], &[2, 2][..], &[3, 1][..]] {
            let j = jordan_matrix(parts);
            let n = j.rows();
            let p = rng.well_conditioned(n, 8.0);
            let x = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
            let q = quiver_from_nilpotent(&x).unwrap();
            let s = MomentScalars::zero(n);
            assert!(
                complex_residual(&q, &s) <= 1e-9 * (1.0 + x.norm_fro()),
                "complex residual for {:?}",
                parts
            );
            assert!(
                (&q.x() - &x).norm_fro() <= 1e-8 * (1.0 + x.norm_fro()),
                "top product for {:?}: {:e}",
                parts,
                (&q.x() - &x).norm_fro()
            );
        }
    }

    #[test]
    fn from_nilpotent_rejects_non_nilpotent() {
        let d = CMatrix::diag(&[ONE, -ONE]);
        assert!(matches!(
            quiver_from_nilpotent(&d),
            Err(Error::NotNilpotent { .. })
        ));
    }

    #[test]
    fn quiver_json_round_trip() {
        let lam = vec![c(0.3, -0.1), c(0.2, 0.4)];
        let q = random_complex_solution(3, &lam, 12);
        let s = serde_json::to_string(&q).unwrap();
        let back: Quiver = serde_json::from_str(&s).unwrap();
        assert_eq!(q, back);
        assert!(s.contains("\"alpha\""));
    }
}

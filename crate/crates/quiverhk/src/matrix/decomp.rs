//! Factorisations for the complex kernel: LU, QR, Hermitian Jacobi
//! eigendecomposition, one-sided Jacobi SVD and a shifted-QR Schur form.
//!
//! These are classical desk-scale algorithms; matrices in this crate stay
//! below dimension ~30, so robustness and bitwise determinism beat BLAS
//! throughput.

use num_complex::Complex64;

use super::CMatrix;
use crate::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// LU factorisation with partial pivoting.
pub struct Lu {
    lu: CMatrix,
    pivots: Vec<usize>,
    swaps: usize,
    singular: bool,
}

impl Lu {
    pub fn new(m: &CMatrix) -> Lu {
        assert!(m.is_square());
        let n = m.rows();
        let mut lu = m.clone();
        let mut pivots = Vec::with_capacity(n);
        let mut swaps = 0;
        let mut singular = false;
        for k in 0..n {
            let (mut p, mut best) = (k, lu[(k, k)].norm());
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    p = i;
                    best = v;
                }
            }
            pivots.push(p);
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                swaps += 1;
            }
            let piv = lu[(k, k)];
            if piv.norm() == 0.0 {
                singular = true;
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let s = f * lu[(k, j)];
                    lu[(i, j)] -= s;
                }
            }
        }
        Lu {
            lu,
            pivots,
            swaps,
            singular,
        }
    }

    pub fn det(&self) -> Complex64 {
        let mut d = if self.swaps % 2 == 0 { ONE } else { -ONE };
        for i in 0..self.lu.rows() {
            d *= self.lu[(i, i)];
        }
        d
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solve `A x = b` for each column of `b`.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix, Error> {
        if self.singular {
            return Err(Error::SingularMatrix);
        }
        let n = self.lu.rows();
        assert_eq!(b.rows(), n);
        let mut x = b.clone();
        // stored L entries live in the fully pivoted row order, so all row
        // interchanges must be applied before the forward substitution
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                for j in 0..x.cols() {
                    let t = x[(k, j)];
                    x[(k, j)] = x[(p, j)];
                    x[(p, j)] = t;
                }
            }
        }
        for k in 0..n {
            for i in k + 1..n {
                let f = self.lu[(i, k)];
                for j in 0..x.cols() {
                    let s = f * x[(k, j)];
                    x[(i, j)] -= s;
                }
            }
        }
        for k in (0..n).rev() {
            let piv = self.lu[(k, k)];
            for j in 0..x.cols() {
                x[(k, j)] /= piv;
            }
            for i in 0..k {
                let f = self.lu[(i, k)];
                for j in 0..x.cols() {
                    let s = f * x[(k, j)];
                    x[(i, j)] -= s;
                }
            }
        }
        Ok(x)
    }
}

pub fn determinant(m: &CMatrix) -> Complex64 {
    Lu::new(m).det()
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix, Error> {
    Lu::new(m).solve(&CMatrix::identity(m.rows()))
}

pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, Error> {
    Lu::new(a).solve(b)
}

/// Householder QR; returns `(Q, R)` with `Q` unitary `m x m` and `R` upper
/// triangular.
pub fn qr(a: &CMatrix) -> (CMatrix, CMatrix) {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = CMatrix::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let mut norm2 = 0.0;
        for i in k..m {
            norm2 += r[(i, k)].norm_sqr();
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm;
        // v = x - alpha e_k
        let mut v: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // apply H = I - 2 v v* / |v|^2 on the left of R and right of Q*
        for j in k..n {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * r[(k + i, j)]).sum();
            let f = dot * 2.0 / vnorm2;
            for i in 0..v.len() {
                let s = f * v[i];
                r[(k + i, j)] -= s;
            }
        }
        for j in 0..m {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * q[(j, k + i)].conj()).sum();
            // Q <- Q H, i.e. rows of Q* get the reflector; work on Q directly:
            let f = dot.conj() * 2.0 / vnorm2;
            for i in 0..v.len() {
                let s = f * v[i].conj();
                q[(j, k + i)] -= s;
            }
        }
    }
    (q, r)
}

/// Hermitian eigendecomposition by cyclic two-sided Jacobi.
/// Returns `(eigenvalues ascending, V)` with `M = V diag(w) V*`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(m.is_square());
    let n = m.rows();
    let mut h = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(h[(p, q)].norm());
            }
        }
        if off <= 1e-15 * (1.0 + h.norm_fro()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let c = h[(p, q)];
                if c.norm() <= 1e-300 {
                    continue;
                }
                let (a, b) = (h[(p, p)].re, h[(q, q)].re);
                let (cs, s) = jacobi_rotation(a, b, c);
                // H <- W* H W on rows/cols p,q ; V <- V W
                for j in 0..n {
                    let (hp, hq) = (h[(p, j)], h[(q, j)]);
                    h[(p, j)] = cs * hp + s.conj() * hq;
                    h[(q, j)] = -s * hp + cs * hq;
                }
                for i in 0..n {
                    let (hp, hq) = (h[(i, p)], h[(i, q)]);
                    h[(i, p)] = cs * hp + s * hq;
                    h[(i, q)] = -s.conj() * hp + cs * hq;
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cs * vp + s * vq;
                    v[(i, q)] = -s.conj() * vp + cs * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let w: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
    let wv: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    let vs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (wv, vs)
}

/// Rotation parameters `(cs, sigma)` with `cs^2 + |sigma|^2 = 1` zeroing the
/// off-diagonal of the Hermitian 2x2 `[[a, c], [conj(c), b]]` under
/// `W = [[cs, -conj(sigma)], [sigma, cs]]`.
fn jacobi_rotation(a: f64, b: f64, c: Complex64) -> (f64, Complex64) {
    let u = c / c.norm();
    let tau = (b - a) / (2.0 * c.norm());
    // smaller-magnitude root of t^2 - 2 tau t - 1 = 0
    let t = if tau >= 0.0 {
        -1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let s = u.conj() * (t * cs);
    (cs, s)
}

/// `exp(t H)` for Hermitian `H`, via the Jacobi eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (w, v) = eigh(h);
    let n = h.rows();
    let scaled = CMatrix::from_fn(n, n, |i, j| v[(i, j)] * (t * w[j]).exp());
    scaled.matmul(&v.adjoint())
}

/// Singular value decomposition `A = U diag(s) V*` by one-sided Jacobi.
/// Singular values are returned in descending order; `U` is `m x k`,
/// `V` is `n x k` with `k = min(m, n)`.
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let mut w = a.clone();
    let mut v = CMatrix::identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = ZERO;
                for i in 0..m {
                    app += w[(i, p)].norm_sqr();
                    aqq += w[(i, q)].norm_sqr();
                    apq += w[(i, p)].conj() * w[(i, q)];
                }
                if apq.norm() <= 1e-15 * (app * aqq).sqrt().max(1e-300) {
                    continue;
                }
                rotated = true;
                let (cs, s) = jacobi_rotation(app, aqq, apq);
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = cs * wp + s * wq;
                    w[(i, q)] = -s.conj() * wp + cs * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = cs * vp + s * vq;
                    v[(i, q)] = -s.conj() * vp + cs * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());
    let sv: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let vv = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    let mut u = CMatrix::zeros(m, n);
    let scale = sv.first().copied().unwrap_or(0.0);
    for j in 0..n {
        let col = order[j];
        if sv[j] > 1e-14 * (1.0 + scale) {
            for i in 0..m {
                u[(i, j)] = w[(i, col)] / sv[j];
            }
        } else {
            // null column: complete orthonormally against earlier columns
            complete_column(&mut u, j);
        }
    }
    s = sv;
    Svd { u, s, v: vv }
}

fn complete_column(u: &mut CMatrix, j: usize) {
    let m = u.rows();
    for attempt in 0..m {
        let mut col = vec![ZERO; m];
        col[(j + attempt) % m] = ONE;
        for k in 0..j {
            let dot: Complex64 = (0..m).map(|i| u[(i, k)].conj() * col[i]).sum();
            for i in 0..m {
                let s = dot * u[(i, k)];
                col[i] -= s;
            }
        }
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-3 {
            for i in 0..m {
                u[(i, j)] = col[i] / nrm;
            }
            return;
        }
    }
}

/// Singular values only.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    svd(a).s
}

/// Numerical rank against the relative threshold `tol * max(1, |M|)`.
pub fn rank(a: &CMatrix, tol: f64) -> usize {
    let s = singular_values(a);
    let cut = tol * (1.0_f64).max(a.norm_fro());
    s.iter().filter(|&&x| x > cut).count()
}

/// Orthonormal basis of the (right) null space at the given relative
/// tolerance; columns of the returned matrix.
pub fn nullspace(a: &CMatrix, tol: f64) -> CMatrix {
    let d = svd(a);
    let cut = tol * (1.0_f64).max(a.norm_fro());
    let n = a.cols();
    let k = a.rows().min(n);
    let mut cols: Vec<usize> = (0..k).filter(|&j| d.s[j] <= cut).collect();
    // columns of V beyond min(m,n) are always in the null space
    if n > k {
        cols.extend(k..n);
    }
    // (one-sided Jacobi returns a full n x n V, so all indices are available)
    CMatrix::from_fn(n, cols.len(), |i, j| d.v[(i, cols[j])])
}

/// Complex Schur decomposition `A = U T U*` with `T` upper triangular,
/// by Householder Hessenberg reduction and shifted QR with deflation.
pub fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix), Error> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    let (mut t, mut u) = hessenberg(a);
    let scale = 1.0 + t.norm_fro();
    let eps = 1e-15;
    let mut hi = n - 1;
    let mut iters_at_hi = 0usize;
    let max_total = 40 * n * n + 200;
    let mut total = 0usize;
    while hi > 0 {
        total += 1;
        if total > max_total {
            return Err(Error::IterationLimit {
                what: "schur QR iteration",
            });
        }
        // deflate tiny subdiagonals
        let mut lo = hi;
        while lo > 0 {
            let s = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            let s = if s == 0.0 { scale } else { s };
            if t[(lo, lo - 1)].norm() <= eps * s {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iters_at_hi = 0;
            continue;
        }
        iters_at_hi += 1;
        let shift = if iters_at_hi % 12 == 0 {
            // exceptional shift to break symmetry on defective clusters
            Complex64::new(
                t[(hi, hi - 1)].norm() + 0.75 * t[(hi - 1, hi - 2.min(hi - 1))].norm(),
                0.0,
            ) + t[(hi, hi)]
        } else {
            wilkinson_shift(&t, hi)
        };
        // explicit shifted QR step on the active block via Givens rotations
        let mut gs: Vec<(usize, f64, Complex64)> = Vec::with_capacity(hi - lo);
        for i in lo..=hi {
            t[(i, i)] -= shift;
        }
        for i in lo..hi {
            let (c, s) = givens(t[(i, i)], t[(i + 1, i)]);
            apply_givens_left(&mut t, i, c, s, lo);
            gs.push((i, c, s));
        }
        for &(i, c, s) in &gs {
            apply_givens_right(&mut t, i, c, s, hi);
            apply_givens_right(&mut u, i, c, s, n - 1);
        }
        for i in lo..=hi {
            t[(i, i)] += shift;
        }
    }
    // clean the (numerically zero) strict lower triangle
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    Ok((u, t))
}

fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut u = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += h[(i, k)].norm_sqr();
        }
        if norm2 == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm2.sqrt();
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vn2 == 0.0 {
            continue;
        }
        // H <- P H P with P = I - 2 v v*/|v|^2 acting on rows/cols k+1..n
        for j in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            let f = dot * 2.0 / vn2;
            for i in 0..v.len() {
                let s = f * v[i];
                h[(k + 1 + i, j)] -= s;
            }
        }
        for r in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| h[(r, k + 1 + i)] * v[i]).sum();
            let f = dot * 2.0 / vn2;
            for i in 0..v.len() {
                let s = f * v[i].conj();
                h[(r, k + 1 + i)] -= s;
            }
        }
        for r in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| u[(r, k + 1 + i)] * v[i]).sum();
            let f = dot * 2.0 / vn2;
            for i in 0..v.len() {
                let s = f * v[i].conj();
                u[(r, k + 1 + i)] -= s;
            }
        }
    }
    (h, u)
}

fn wilkinson_shift(t: &CMatrix, hi: usize) -> Complex64 {
    let a = t[(hi - 1, hi - 1)];
    let b = t[(hi - 1, hi)];
    let c = t[(hi, hi - 1)];
    let d = t[(hi, hi)];
    let tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr * tr - det).sqrt();
    let (e1, e2) = (tr + disc, tr - disc);
    if (e1 - d).norm() < (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    let r = (na * na + nb * nb).sqrt();
    if na == 0.0 {
        (0.0, b.conj() / nb)
    } else {
        let c = na / r;
        let s = (a / na) * b.conj() / r;
        (c, s)
    }
}

// rows i, i+1 of columns lo.. get [[c, s], [-conj(s), c]]
fn apply_givens_left(t: &mut CMatrix, i: usize, c: f64, s: Complex64, lo: usize) {
    for j in lo..t.cols() {
        let (x, y) = (t[(i, j)], t[(i + 1, j)]);
        t[(i, j)] = c * x + s * y;
        t[(i + 1, j)] = -s.conj() * x + c * y;
    }
}

// columns i, i+1 of rows ..=hi get the adjoint rotation on the right
fn apply_givens_right(t: &mut CMatrix, i: usize, c: f64, s: Complex64, hi: usize) {
    for r in 0..=hi.min(t.rows() - 1) {
        let (x, y) = (t[(r, i)], t[(r, i + 1)]);
        t[(r, i)] = c * x + s.conj() * y;
        t[(r, i + 1)] = -s * x + c * y;
    }
}

/// Eigenvalues via the Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>, Error> {
    let (_, t) = schur(a)?;
    Ok((0..a.rows()).map(|i| t[(i, i)]).collect())
}

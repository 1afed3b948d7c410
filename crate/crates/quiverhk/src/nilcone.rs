//! The moment map on the nilpotent cone: closed forms for sizes two and
//! three, a Newton-based recursive solver for the triangular gauge factor,
//! the balancer-backed general method, the rotation of nilpotents and their
//! twistor lines.
//!
//! For a balanced quiver over a nilpotent `X` the map is
//! `phi(X) = i (alpha alpha* - beta* beta)` at the top edge; it is
//! SU(n)-equivariant, skew-Hermitian and trace-free.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::balance::{balance, phi_from_quiver, BalanceParams};
use crate::matrix::jordan::{strict_upper_triangularize, upper_sqrt};
use crate::matrix::{decomp, CMatrix};
use crate::quiver::quiver_from_nilpotent;
use crate::{Error, MomentScalars};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Evaluation strategy for the nilpotent-cone moment map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiMethod {
    /// Exact rank-one formula, only for `n = 2`.
    Closed2,
    /// Triangular closed form, only for generic (regular) `n = 3` data.
    Closed3,
    /// Triangularize, take the square-root ladder and solve for the
    /// balancing factor by Newton; generic regular data.
    Recursive,
    /// Build a quiver over the input and flow it to the balanced point.
    Balancer,
}

const ROTATE_NILPOTENCY_TOL: f64 = 1e-6;

/// `phi` for regular and singular inputs alike, picking the cheapest method
/// that applies: the closed forms below size four, the balancer otherwise.
pub fn phi_auto(x: &CMatrix) -> Result<CMatrix, Error> {
    match x.rows() {
        0 | 1 => Ok(CMatrix::zeros(x.rows(), x.rows())),
        2 => phi_n(x, PhiMethod::Closed2),
        3 => phi_n(x, PhiMethod::Closed3).or_else(|_| phi_n(x, PhiMethod::Balancer)),
        _ => phi_n(x, PhiMethod::Balancer),
    }
}

/// The nilpotent-cone moment map by the requested method. The output is
/// skew-Hermitian and trace-free up to the method tolerance.
pub fn phi_n(x: &CMatrix, method: PhiMethod) -> Result<CMatrix, Error> {
    if !x.is_square() {
        return Err(Error::NonSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let n = x.rows();
    match method {
        PhiMethod::Closed2 => {
            if n != 2 {
                return Err(Error::shape(format!("Closed2 needs a 2x2 input, got {}", n)));
            }
            phi2_closed(x)
        }
        PhiMethod::Closed3 => {
            if n != 3 {
                return Err(Error::shape(format!("Closed3 needs a 3x3 input, got {}", n)));
            }
            let (u, t) = strict_upper_triangularize(x, 1e-8)?;
            let (a, b, c) = triangular_abc(&t)?;
            let sol = phi3_closed(a, b, c)?;
            Ok(u.matmul(&sol.phi).matmul(&u.adjoint()))
        }
        PhiMethod::Recursive => phi_recursive(x),
        PhiMethod::Balancer => phi_balancer(x),
    }
}

/// `phi` on 2x2 nilpotents: `i (X X* - X* X) / |X|`. Reduces to
/// `i diag(d, -d)` on `[[0, d], [0, 0]]` and is manifestly equivariant and
/// continuous at zero.
pub fn phi2_closed(x: &CMatrix) -> Result<CMatrix, Error> {
    let defect = x.nilpotency_defect()?;
    if defect > 1e-8 {
        return Err(Error::NotNilpotent { defect, tol: 1e-8 });
    }
    let nrm = x.norm_fro();
    if nrm == 0.0 {
        return Ok(CMatrix::zeros(2, 2));
    }
    let comm = &x.matmul(&x.adjoint()) - &x.adjoint().matmul(x);
    Ok(comm.scale(I / nrm))
}

/// Solved triangular data for the three-dimensional closed form.
#[derive(Debug, Clone)]
pub struct Phi3Solution {
    pub phi: CMatrix,
    pub alpha: f64,
    pub beta: Complex64,
    pub gamma: f64,
    pub delta: f64,
}

/// Closed form for `phi_3` on `[[0, A^2], [0, 0]]` with
/// `A = [[a, b], [0, c]]`, `a, c > 0`, `b != 0`.
///
/// The balancing factor is `B = [[alpha, beta], [0, 1/gamma]]` with
///
/// ```text
///   delta = alpha/gamma = (c/a)^{1/3}
///   gamma^4 = (|b|^2 (a+c)^2 + p^3) / (c^{4/3} p^2),   p = a^{4/3} + c^{4/3}
///   beta  = b (c^3 - a^3) / (gamma (a^4 + c^4))
/// ```
///
/// and the moment value has the entries assembled below; its middle diagonal
/// entry `(c^{8/3} - a^{8/3}) / (c^{2/3} gamma^2)` vanishes only at `a = c`.
pub fn phi3_closed(a: f64, b: Complex64, c: f64) -> Result<Phi3Solution, Error> {
    if !(a > 0.0 && c > 0.0) {
        return Err(Error::Degenerate {
            context: "phi3 closed form needs positive diagonal data".into(),
        });
    }
    if b.norm() == 0.0 {
        return Err(Error::Degenerate {
            context: "phi3 closed form needs b != 0; use the balancer".into(),
        });
    }
    let b2 = b.norm_sqr();
    let p = a.powf(4.0 / 3.0) + c.powf(4.0 / 3.0);
    let g2 = ((b2 * (a + c).powi(2) + p.powi(3)) / (c.powf(4.0 / 3.0) * p * p)).sqrt();
    let gamma = g2.sqrt();
    let delta = (c / a).powf(1.0 / 3.0);
    let alpha = delta * gamma;
    let beta = b * (c.powi(3) - a.powi(3)) / (gamma * (a.powi(4) + c.powi(4)));

    let e11 = a.powf(4.0 / 3.0) * c.powf(2.0 / 3.0) * g2
        + b2 * c.powf(2.0 / 3.0) * (a + c).powi(2) / (g2 * p * p);
    let e12 = b * c.powf(4.0 / 3.0) * (a + c) / (g2 * p);
    let e22 = (c.powf(8.0 / 3.0) - a.powf(8.0 / 3.0)) / (c.powf(2.0 / 3.0) * g2);
    let e23 = -b * a * a * (a + c) / (c.powf(2.0 / 3.0) * g2 * p);
    let e33 = -a.powf(4.0 / 3.0) * b2 * (a + c).powi(2) / (c.powf(2.0 / 3.0) * g2 * p * p)
        - c * c * g2;

    let mut m = CMatrix::zeros(3, 3);
    m[(0, 0)] = Complex64::new(e11, 0.0);
    m[(0, 1)] = e12;
    m[(1, 0)] = e12.conj();
    m[(1, 1)] = Complex64::new(e22, 0.0);
    m[(1, 2)] = e23;
    m[(2, 1)] = e23.conj();
    m[(2, 2)] = Complex64::new(e33, 0.0);
    Ok(Phi3Solution {
        phi: m.scale(I),
        alpha,
        beta,
        gamma,
        delta,
    })
}

/// Extract `(a, b, c)` from a strictly upper triangular 3x3 with positive
/// superdiagonal: the shifted block is `A^2` for `A = [[a, b], [0, c]]`.
fn triangular_abc(t: &CMatrix) -> Result<(f64, Complex64, f64), Error> {
    let scale = 1.0 + t.norm_fro();
    let (sq1, sq2) = (t[(0, 1)].re, t[(1, 2)].re);
    if sq1 <= 1e-9 * scale || sq2 <= 1e-9 * scale {
        return Err(Error::Degenerate {
            context: "triangular data is not regular".into(),
        });
    }
    let a = sq1.sqrt();
    let c = sq2.sqrt();
    let b = t[(0, 2)] / (a + c);
    Ok((a, b, c))
}

/// Moment value of a balanced representative in triangular gauge:
/// `i ([P P*, 0; 0, 0] - [0, 0; 0, Q* Q])` with `P = A B`, `Q = B^{-1} A`.
fn phi_from_triangular_pair(p: &CMatrix, q: &CMatrix) -> CMatrix {
    let m = p.rows();
    let mut top = CMatrix::zeros(m + 1, m + 1);
    top.set_block(0, 0, &p.matmul(&p.adjoint()));
    let mut bot = CMatrix::zeros(m + 1, m + 1);
    bot.set_block(1, 1, &q.adjoint().matmul(q));
    (&top - &bot).scale(I)
}

/// The inner product `(0 | Q)(P; 0)`, the top composition one level down.
fn inner_product_matrix(p: &CMatrix, q: &CMatrix) -> CMatrix {
    let m = p.rows();
    let mut alpha = CMatrix::zeros(m + 1, m);
    alpha.set_block(0, 0, p);
    let mut beta = CMatrix::zeros(m, m + 1);
    beta.set_block(0, 1, q);
    beta.matmul(&alpha)
}

const NEWTON_TOL: f64 = 1e-11;
const NEWTON_MAX_ITER: usize = 60;

/// Solve for the upper-triangular positive-diagonal factor `B` matching the
/// one-level-down moment value:
///
/// ```text
///   phi_{n-1}((0 | B^{-1}A)(AB; 0)) = i ((AB)*(AB) - (B^{-1}A)(B^{-1}A)*)
/// ```
///
/// by damped Newton on the log-diagonal and strict-upper entries of `B`,
/// starting from the identity. Requires `A` upper triangular with positive
/// diagonal and regular.
pub fn recursive_b_solve(a: &CMatrix) -> Result<CMatrix, Error> {
    let m = a.rows();
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    for i in 0..m {
        if a[(i, i)].re <= 0.0 || a[(i, i)].im.abs() > 1e-10 * (1.0 + a[(i, i)].re) {
            return Err(Error::NonPositiveDiagonal { index: i });
        }
    }
    // unknowns: log of the m diagonal entries, then (re, im) per strict-upper
    let dof = m + m * (m - 1);
    let unpack = |v: &[f64]| -> CMatrix {
        let mut b = CMatrix::zeros(m, m);
        for i in 0..m {
            b[(i, i)] = Complex64::new(v[i].exp(), 0.0);
        }
        let mut idx = m;
        for i in 0..m {
            for j in i + 1..m {
                b[(i, j)] = Complex64::new(v[idx], v[idx + 1]);
                idx += 2;
            }
        }
        b
    };
    let residual = |v: &[f64]| -> Result<Vec<f64>, Error> {
        let b = unpack(v);
        let p = a.matmul(&b);
        let q = decomp::solve(&b, a)?;
        let y = inner_product_matrix(&p, &q);
        let inner_phi = phi_inner(&y)?;
        let want = &p.adjoint().matmul(&p) - &q.matmul(&q.adjoint());
        let diff = &inner_phi.scale(-I) - &want; // Hermitian defect
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            out.push(diff[(i, i)].re);
        }
        for i in 0..m {
            for j in i + 1..m {
                out.push(diff[(i, j)].re);
                out.push(diff[(i, j)].im);
            }
        }
        Ok(out)
    };

    let mut v = vec![0.0; dof];
    let mut r = residual(&v)?;
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rn = norm(&r);
    for _ in 0..NEWTON_MAX_ITER {
        if rn <= NEWTON_TOL {
            return Ok(unpack(&v));
        }
        // central-difference Jacobian
        let mut jac = CMatrix::zeros(dof, dof);
        for col in 0..dof {
            let h = 1e-6 * (1.0 + v[col].abs());
            let mut vp = v.clone();
            vp[col] += h;
            let mut vm = v.clone();
            vm[col] -= h;
            let rp = residual(&vp)?;
            let rm = residual(&vm)?;
            for row in 0..dof {
                jac[(row, col)] = Complex64::new((rp[row] - rm[row]) / (2.0 * h), 0.0);
            }
        }
        let rhs = CMatrix::from_fn(dof, 1, |i, _| Complex64::new(-r[i], 0.0));
        let step = decomp::solve(&jac, &rhs)?;
        // damped update
        let mut accepted = false;
        let mut damp = 1.0;
        for _ in 0..30 {
            let trial: Vec<f64> = (0..dof).map(|i| v[i] + damp * step[(i, 0)].re).collect();
            if let Ok(rt) = residual(&trial) {
                let rtn = norm(&rt);
                if rtn < rn {
                    v = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    break;
                }
            }
            damp *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonStagnation { residual: rn });
        }
    }
    if rn <= NEWTON_TOL {
        Ok(unpack(&v))
    } else {
        Err(Error::NewtonStagnation { residual: rn })
    }
}

/// Moment value used inside the Newton residual: closed forms below size
/// four and the balancer above.
fn phi_inner(y: &CMatrix) -> Result<CMatrix, Error> {
    match y.rows() {
        0 => Ok(CMatrix::zeros(0, 0)),
        1 => Ok(CMatrix::zeros(1, 1)),
        2 => phi2_closed(y),
        3 => phi_n(y, PhiMethod::Closed3).or_else(|_| phi_balancer(y)),
        _ => phi_balancer(y),
    }
}

/// Triangularize, solve the ladder and assemble the moment value.
fn phi_recursive(x: &CMatrix) -> Result<CMatrix, Error> {
    let n = x.rows();
    if x.norm_fro() == 0.0 {
        return Ok(CMatrix::zeros(n, n));
    }
    if n == 1 {
        return Ok(CMatrix::zeros(1, 1));
    }
    if n == 2 {
        return phi2_closed(x);
    }
    let (u, t) = strict_upper_triangularize(x, 1e-8)?;
    let scale = 1.0 + t.norm_fro();
    for i in 0..n - 1 {
        if t[(i, i + 1)].re <= 1e-9 * scale {
            return Err(Error::Degenerate {
                context: "recursive method needs regular data; use the balancer".into(),
            });
        }
    }
    let a = upper_sqrt(&t.sub_matrix(0, 1, n - 1, n - 1))?;
    let b = recursive_b_solve(&a)?;
    let p = a.matmul(&b);
    let q = decomp::solve(&b, &a)?;
    let phi = phi_from_triangular_pair(&p, &q);
    Ok(u.matmul(&phi).matmul(&u.adjoint()))
}

/// Build a quiver over the input and flow it to the balanced point.
fn phi_balancer(x: &CMatrix) -> Result<CMatrix, Error> {
    let q = quiver_from_nilpotent(x)?;
    let params = BalanceParams {
        tol: 1e-10,
        ..Default::default()
    };
    let report = balance(&q, &MomentScalars::zero(q.n), &params)?;
    phi_from_quiver(&report.quiver)
}

/// The rotation of a nilpotent element by a unit pair `(u, v)`:
/// `eta -> u^2 eta + i u v phi(eta) - v^2 conj(eta)^T`.
///
/// This is exactly the top-edge product of the rotated balanced quiver, so
/// the output is again nilpotent; its nilpotency defect is checked and a
/// violation reports a convention or moment-map error.
pub fn su2_rotate_nilpotent(
    eta: &CMatrix,
    u: Complex64,
    v: Complex64,
) -> Result<CMatrix, Error> {
    let norm = u.norm_sqr() + v.norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitParameter { norm });
    }
    let phi = phi_auto(eta)?;
    let out = &(&eta.scale(u * u) + &phi.scale(I * u * v)) - &eta.conj().transpose().scale(v * v);
    let defect = out.nilpotency_defect()?;
    let tol = ROTATE_NILPOTENCY_TOL * (1.0 + eta.norm_fro());
    if defect > tol {
        return Err(Error::NotNilpotent { defect, tol });
    }
    Ok(out)
}

/// Degree-two section coefficients of the twistor line through a nilpotent:
/// evaluation at `[u : v]` is `u^2 C0 + u v C1 + v^2 C2` with
/// `(C0, C1, C2) = (eta, i phi(eta), -conj(eta)^T)`.
pub fn twistor_section_of(eta: &CMatrix) -> Result<(CMatrix, CMatrix, CMatrix), Error> {
    let phi = phi_auto(eta)?;
    Ok((
        eta.clone(),
        phi.times_i(),
        eta.conj().transpose().scale_re(-1.0),
    ))
}

/// Evaluate a degree-two coefficient triple at `(u, v)`.
pub fn evaluate_o2(coeffs: &(CMatrix, CMatrix, CMatrix), u: Complex64, v: Complex64) -> CMatrix {
    &(&coeffs.0.scale(u * u) + &coeffs.1.scale(u * v)) + &coeffs.2.scale(v * v)
}

/// The antiholomorphic involution on the nilpotent-cone twistor space:
/// `(X, zeta) -> (-conj(X)^T / conj(zeta)^2, -1/conj(zeta))`.
pub fn nilcone_real_structure(
    x: &CMatrix,
    zeta: Complex64,
) -> Result<(CMatrix, Complex64), Error> {
    if zeta.norm() == 0.0 {
        return Err(Error::Degenerate {
            context: "the real structure needs zeta != 0 in this chart".into(),
        });
    }
    let zc = zeta.conj();
    let one = Complex64::new(1.0, 0.0);
    Ok((
        x.conj().transpose().scale(-one / (zc * zc)),
        -one / zc,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::jordan::jordan_matrix;
    use crate::rng::SeedRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn su_defect(m: &CMatrix) -> f64 {
        (m + &m.adjoint()).norm_fro() + m.trace().norm()
    }

    fn embed_a2(a: f64, b: Complex64, cc: f64) -> CMatrix {
        // [[0, A^2], [0, 0]] with A = [[a, b], [0, c]]
        let mut x = CMatrix::zeros(3, 3);
        x[(0, 1)] = c(a * a, 0.0);
        x[(0, 2)] = b * (a + cc);
        x[(1, 2)] = c(cc * cc, 0.0);
        x
    }

    #[test]
    fn phi2_paper_value_and_zero() {
        for d in [0.5, 1.0, 2.0] {
            let mut x = CMatrix::zeros(2, 2);
            x[(0, 1)] = c(d, 0.0);
            let phi = phi_n(&x, PhiMethod::Closed2).unwrap();
            assert!((phi[(0, 0)] - c(0.0, d)).norm() < 1e-14);
            assert!((phi[(1, 1)] + c(0.0, d)).norm() < 1e-14);
            assert!(phi[(0, 1)].norm() < 1e-14 && phi[(1, 0)].norm() < 1e-14);
        }
        let z = phi_n(&CMatrix::zeros(2, 2), PhiMethod::Closed2).unwrap();
        assert_eq!(z.norm_fro(), 0.0);
    }

    #[test]
    fn phi3_reference_point() {
        // a = b = c = 1: gamma^4 = 3 and the moment value has entries
        // 4/sqrt(3) and 1/sqrt(3)
        let sol = phi3_closed(1.0, c(1.0, 0.0), 1.0).unwrap();
        let s3 = 3.0_f64.sqrt();
        assert!((sol.gamma - 3.0_f64.powf(0.25)).abs() < 1e-14);
        assert!((sol.delta - 1.0).abs() < 1e-14);
        assert!((sol.alpha - sol.gamma).abs() < 1e-14);
        assert!(sol.beta.norm() < 1e-14);
        assert!((sol.phi[(0, 0)] - c(0.0, 4.0 / s3)).norm() < 1e-14);
        assert!((sol.phi[(0, 1)] - c(0.0, 1.0 / s3)).norm() < 1e-14);
        assert!(sol.phi[(1, 1)].norm() < 1e-14);
        assert!((sol.phi[(1, 2)] + c(0.0, 1.0 / s3)).norm() < 1e-14);
    }

    #[test]
    fn phi3_closed_equals_balancer() {
        let mut rng = SeedRng::new(61);
        for _ in 0..5 {
            let a = rng.uniform(0.5, 2.0);
            let cc = rng.uniform(0.5, 2.0);
            let b = rng.unit_complex() * rng.uniform(0.5, 2.0);
            let x = embed_a2(a, b, cc);
            let closed = phi_n(&x, PhiMethod::Closed3).unwrap();
            let balanced = phi_n(&x, PhiMethod::Balancer).unwrap();
            assert!(
                (&closed - &balanced).norm_fro() < 1e-6,
                "closed vs balancer: {:e}",
                (&closed - &balanced).norm_fro()
            );
            assert!(su_defect(&closed) < 1e-8);
        }
    }

    #[test]
    fn phi3_scaling_phase_structure() {
        // b -> e^{i theta} b rotates the off-diagonal entries and keeps the
        // diagonal
        let (a, cc) = (1.3, 0.8);
        let b = c(0.9, 0.0);
        let theta = 0.7_f64;
        let ph = c(theta.cos(), theta.sin());
        let s0 = phi3_closed(a, b, cc).unwrap();
        let s1 = phi3_closed(a, b * ph, cc).unwrap();
        assert!((s1.phi[(0, 0)] - s0.phi[(0, 0)]).norm() < 1e-12);
        assert!((s1.phi[(1, 1)] - s0.phi[(1, 1)]).norm() < 1e-12);
        assert!((s1.phi[(0, 1)] - s0.phi[(0, 1)] * ph).norm() < 1e-12);
        assert!((s1.phi[(1, 2)] - s0.phi[(1, 2)] * ph).norm() < 1e-12);
    }

    #[test]
    fn phi3_rejects_degenerate_b() {
        assert!(phi3_closed(1.0, ZERO, 1.0).is_err());
    }

    #[test]
    fn recursive_b_matches_closed_form() {
        let mut rng = SeedRng::new(62);
        for _ in 0..4 {
            let a = rng.uniform(0.5, 2.0);
            let cc = rng.uniform(0.5, 2.0);
            let b = rng.unit_complex() * rng.uniform(0.5, 2.0);
            let amat = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => c(a, 0.0),
                (0, 1) => b,
                (1, 1) => c(cc, 0.0),
                _ => ZERO,
            });
            let bmat = recursive_b_solve(&amat).unwrap();
            let sol = phi3_closed(a, b, cc).unwrap();
            assert!((bmat[(0, 0)].re - sol.alpha).abs() < 1e-8);
            assert!((bmat[(0, 1)] - sol.beta).norm() < 1e-8);
            assert!((bmat[(1, 1)].re - 1.0 / sol.gamma).abs() < 1e-8);
        }
    }

    #[test]
    fn recursive_b_scalar_case() {
        let amat = CMatrix::diag(&[c(1.7, 0.0)]);
        let bmat = recursive_b_solve(&amat).unwrap();
        assert!((bmat[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn recursive_method_agrees_with_balancer_n4() {
        let mut rng = SeedRng::new(63);
        let j = jordan_matrix(&[4]);
        let p = rng.well_conditioned(4, 6.0);
        let x = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
        let rec = phi_n(&x, PhiMethod::Recursive).unwrap();
        let bal = phi_n(&x, PhiMethod::Balancer).unwrap();
        assert!(
            (&rec - &bal).norm_fro() < 1e-6,
            "recursive vs balancer at n=4: {:e}",
            (&rec - &bal).norm_fro()
        );
        assert!(su_defect(&rec) < 1e-7);
    }

    #[test]
    fn rotation_identity_and_j_action() {
        let mut rng = SeedRng::new(64);
        let j = jordan_matrix(&[3]);
        let p = rng.well_conditioned(3, 5.0);
        let eta = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
        let same = su2_rotate_nilpotent(&eta, c(1.0, 0.0), ZERO).unwrap();
        assert!((&same - &eta).norm_fro() < 1e-12);
        let jrot = su2_rotate_nilpotent(&eta, ZERO, c(1.0, 0.0)).unwrap();
        assert!((&jrot + &eta.conj().transpose()).norm_fro() < 1e-12);
    }

    #[test]
    fn rotation_j2_half_angle() {
        let eta = jordan_matrix(&[2]);
        let r = 0.5_f64.sqrt();
        let out = su2_rotate_nilpotent(&eta, c(r, 0.0), c(r, 0.0)).unwrap();
        let expect = CMatrix::from_real_rows(&[&[-0.5, 0.5], &[-0.5, 0.5]]);
        assert!((&out - &expect).norm_fro() < 1e-10);
        assert!(decomp::determinant(&out).norm() < 1e-12);
    }

    #[test]
    fn rotation_output_nilpotent_and_group_law() {
        let mut rng = SeedRng::new(65);
        for n in [2usize, 3] {
            let j = jordan_matrix(&[n]);
            let p = rng.well_conditioned(n, 5.0);
            let eta = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
            let (u1, v1) = rng.su2();
            let (u2, v2) = rng.su2();
            let one = su2_rotate_nilpotent(&eta, u1, v1).unwrap();
            let two = su2_rotate_nilpotent(&one, u2, v2).unwrap();
            let (uc, vc) = (u2 * u1 - v2 * v1.conj(), u2 * v1 + v2 * u1.conj());
            let direct = su2_rotate_nilpotent(&eta, uc, vc).unwrap();
            assert!(
                (&two - &direct).norm_fro() <= 1e-6 * (1.0 + eta.norm_fro()),
                "group law at n = {}: {:e}",
                n,
                (&two - &direct).norm_fro()
            );
        }
    }

    #[test]
    fn twistor_section_values_and_reality() {
        let eta = jordan_matrix(&[2]);
        let (c0, c1, c2) = twistor_section_of(&eta).unwrap();
        assert!((&c0 - &eta).norm_fro() < 1e-14);
        // i * (i diag(1, -1)) = diag(-1, 1)
        assert!((c1[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((c1[(1, 1)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((&c2 + &eta.transpose()).norm_fro() < 1e-14);
        // reality pattern of the quadratic: C2 = -conj(C0)^T and C1 Hermitian
        assert!((&c2 + &c0.conj().transpose()).norm_fro() < 1e-12);
        assert!(c1.herm_defect() < 1e-12);

        let zero = CMatrix::zeros(2, 2);
        let (z0, z1, z2) = twistor_section_of(&zero).unwrap();
        assert!(z0.norm_fro() == 0.0 && z1.norm_fro() == 0.0 && z2.norm_fro() == 0.0);
    }

    #[test]
    fn twistor_evaluation_matches_rotation() {
        let mut rng = SeedRng::new(66);
        let j = jordan_matrix(&[3]);
        let p = rng.well_conditioned(3, 5.0);
        let eta = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
        let coeffs = twistor_section_of(&eta).unwrap();
        let (u, v) = rng.su2();
        let via_section = evaluate_o2(&coeffs, u, v);
        let via_rotation = su2_rotate_nilpotent(&eta, u, v).unwrap();
        assert!((&via_section - &via_rotation).norm_fro() < 1e-9);
    }

    #[test]
    fn real_structure_involution() {
        let x = jordan_matrix(&[2]);
        let (y, z) = nilcone_real_structure(&x, c(1.0, 0.0)).unwrap();
        assert!((&y + &x.transpose()).norm_fro() < 1e-15);
        assert!((z + c(1.0, 0.0)).norm() < 1e-15);

        let zeta = c(0.3, -1.2);
        let (y1, z1) = nilcone_real_structure(&x, zeta).unwrap();
        let (y2, z2) = nilcone_real_structure(&y1, z1).unwrap();
        assert!((&y2 - &x).norm_fro() < 1e-12);
        assert!((z2 - zeta).norm() < 1e-14);

        let (y3, z3) = nilcone_real_structure(&x, c(2.0, 0.0)).unwrap();
        assert!((&y3 + &x.transpose().scale_re(0.25)).norm_fro() < 1e-15);
        assert!((z3 + c(0.5, 0.0)).norm() < 1e-15);

        assert!(nilcone_real_structure(&x, ZERO).is_err());
    }

    #[test]
    fn phi_methods_reject_mismatched_sizes() {
        let x = CMatrix::zeros(3, 3);
        assert!(phi_n(&x, PhiMethod::Closed2).is_err());
        let y = CMatrix::zeros(2, 2);
        assert!(phi_n(&y, PhiMethod::Closed3).is_err());
    }
}

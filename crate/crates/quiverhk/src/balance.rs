//! Kempf-Ness balancing: solve the real moment-map equation inside a complex
//! gauge orbit by gradient flow with a backtracking line search.
//!
//! The flow is multiplicative, `g_k <- exp(-eps D_k) g_k` with `D_k` the
//! Hermitian node defect, so the gauge stays in the positive-definite slice
//! of the complexified group. The top block is pinned to the identity, which
//! preserves the top-edge product exactly; any complex gauge move preserves
//! the complex equations exactly, so only the real defect flows.

use serde::{Deserialize, Serialize};

use crate::matrix::decomp::expm_hermitian;
use crate::matrix::CMatrix;
use crate::quiver::{complex_residual, real_residual, MomentScalars, Quiver};
use crate::Error;

/// Which real moment map is targeted: `H` projects out the trace at every
/// node (special unitary factors), `Htilde` keeps it against the
/// `lambda^R` levels (full unitary factors).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    H,
    Htilde,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceParams {
    pub tol: f64,
    pub max_iter: usize,
    pub step0: f64,
    pub backtrack: f64,
    pub group: Group,
}

impl Default for BalanceParams {
    fn default() -> Self {
        BalanceParams {
            tol: 1e-9,
            max_iter: 50_000,
            step0: 0.1,
            backtrack: 0.5,
            group: Group::Htilde,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceReport {
    pub quiver: Quiver,
    /// Accumulated gauge blocks `g_1..g_{n-1}` (the pinned `g_n = I` is not
    /// stored).
    pub gauge: Vec<CMatrix>,
    pub residual: f64,
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const DRIFT_CHECK_EVERY: usize = 100;
const DRIFT_TOL: f64 = 1e-6;
const PRE_TOL: f64 = 1e-8;

fn defects(q: &Quiver, target: &MomentScalars, group: Group) -> Vec<CMatrix> {
    let mut ds = q.real_defect_matrices(target);
    if group == Group::H {
        for d in &mut ds {
            *d = d.trace_free().expect("defects are square");
        }
    }
    ds
}

/// Squared norm of the real moment-map defect over all nodes.
pub fn kempf_ness_energy(q: &Quiver, target: &MomentScalars, group: Group) -> f64 {
    defects(q, target, group)
        .iter()
        .map(|d| {
            let n = d.norm_fro();
            n * n
        })
        .sum()
}

fn max_defect_norm(ds: &[CMatrix]) -> f64 {
    ds.iter().map(CMatrix::norm_fro).fold(0.0, f64::max)
}

/// One multiplicative flow move with step `eps`: returns the moved quiver
/// and the per-node gauge factors `exp(-eps D_k)`.
fn flow_step(q: &Quiver, ds: &[CMatrix], eps: f64) -> (Quiver, Vec<CMatrix>) {
    let n = q.n;
    let gs: Vec<CMatrix> = ds.iter().map(|d| expm_hermitian(d, -eps)).collect();
    let gs_inv: Vec<CMatrix> = ds.iter().map(|d| expm_hermitian(d, eps)).collect();
    let mut out = q.clone();
    for k in 1..n {
        let left = if k < n - 1 {
            gs[k].matmul(&q.alphas[k - 1])
        } else {
            q.alphas[k - 1].clone()
        };
        out.alphas[k - 1] = left.matmul(&gs_inv[k - 1]);
        let right = if k < n - 1 {
            q.betas[k - 1].matmul(&gs_inv[k])
        } else {
            q.betas[k - 1].clone()
        };
        out.betas[k - 1] = gs[k - 1].matmul(&right);
    }
    (out, gs)
}

/// Flow the quiver to the zero set of the real moment defect at the target
/// levels.
///
/// Requires the complex equations to hold at the target `lambda^C`; they are
/// preserved by the flow and re-checked every hundred iterations. Non
/// convergence reports the best quiver reached so far.
pub fn balance(
    q: &Quiver,
    target: &MomentScalars,
    params: &BalanceParams,
) -> Result<BalanceReport, Error> {
    let cres = complex_residual(q, target);
    if cres > PRE_TOL {
        return Err(Error::Precondition {
            context: "balance needs the complex equations at the target levels",
            residual: cres,
            tol: PRE_TOL,
        });
    }
    let n = q.n;
    let mut cur = q.clone();
    let mut gauge: Vec<CMatrix> = (1..n).map(CMatrix::identity).collect();
    let mut energy = kempf_ness_energy(&cur, target, params.group);
    let mut step = params.step0;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut iterations = 0;

    loop {
        let ds = defects(&cur, target, params.group);
        let residual = max_defect_norm(&ds);
        if residual <= params.tol {
            let energy_trace = trace.iter().map(|r| r.energy).collect();
            return Ok(BalanceReport {
                quiver: cur,
                gauge,
                residual,
                iterations,
                energy_trace,
                trace,
            });
        }
        if iterations >= params.max_iter {
            let energy_trace = trace.iter().map(|r| r.energy).collect();
            return Err(Error::MaxIterExceeded {
                iterations,
                residual,
                report: Box::new(BalanceReport {
                    quiver: cur,
                    gauge,
                    residual,
                    iterations,
                    energy_trace,
                    trace,
                }),
            });
        }

        let mut trial = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let (moved, gs) = flow_step(&cur, &ds, trial);
            let e2 = kempf_ness_energy(&moved, target, params.group);
            if e2 < energy * (1.0 - ARMIJO * trial.min(1.0)) || e2 < 1e-300 {
                accepted = Some((moved, gs, e2));
                break;
            }
            trial *= params.backtrack;
        }
        let Some((moved, gs, e2)) = accepted else {
            // the line search stalled: same non-convergence report as the
            // iteration cap, signalling a non-polystable orbit
            let energy_trace = trace.iter().map(|r| r.energy).collect();
            return Err(Error::MaxIterExceeded {
                iterations,
                residual,
                report: Box::new(BalanceReport {
                    quiver: cur,
                    gauge,
                    residual,
                    iterations,
                    energy_trace,
                    trace,
                }),
            });
        };
        cur = moved;
        energy = e2;
        for k in 1..n {
            gauge[k - 1] = gs[k - 1].matmul(&gauge[k - 1]);
        }
        iterations += 1;
        trace.push(TraceRow {
            iter: iterations,
            energy,
            residual,
            step: trial,
        });
        step = (trial * 2.0).min(1.0);

        if iterations % DRIFT_CHECK_EVERY == 0 {
            let drift = complex_residual(&cur, target);
            if drift > DRIFT_TOL {
                return Err(Error::ComplexDrift { residual: drift });
            }
        }
    }
}

const PHI_PRE_TOL: f64 = 1e-6;

/// The top-edge real moment value `i (alpha alpha* - beta* beta)` of a
/// balanced quiver; skew-Hermitian and trace-free on the zero set.
pub fn phi_from_quiver(q: &Quiver) -> Result<CMatrix, Error> {
    let zero = MomentScalars::zero(q.n);
    let res = real_residual(q, &zero);
    if res > PHI_PRE_TOL {
        return Err(Error::Precondition {
            context: "phi_from_quiver needs a balanced quiver at zero levels",
            residual: res,
            tol: PHI_PRE_TOL,
        });
    }
    let a = q.alpha(q.n - 1);
    let b = q.beta(q.n - 1);
    Ok((&a.matmul(&a.adjoint()) - &b.adjoint().matmul(b)).times_i())
}

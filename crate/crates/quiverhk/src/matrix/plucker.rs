//! Wedge-power coordinates: Plucker vectors of rectangular matrices and full
//! compound (minor) matrices.
//!
//! Index convention used everywhere in the crate: the slot of a `j`-subset is
//! its position in the lexicographic order of strictly increasing index
//! tuples, and the sign is the plain minor determinant in that row/column
//! order.

use num_complex::Complex64;

use super::decomp::determinant;
use super::CMatrix;
use crate::Error;

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 <= n - (k - i) {
                cur[i] += 1;
                for t in i + 1..k {
                    cur[t] = cur[t - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out = 1usize;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

fn minor(m: &CMatrix, rows: &[usize], cols: &[usize]) -> Complex64 {
    let k = rows.len();
    let sub = CMatrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
    determinant(&sub)
}

/// Plucker coordinates of an `n x j` matrix: the vector of `j x j` minors,
/// indexed by lexicographically ordered row subsets. Represents the wedge of
/// the columns in `wedge^j C^n`.
pub fn plucker(m: &CMatrix) -> Result<Vec<Complex64>, Error> {
    let (n, j) = (m.rows(), m.cols());
    if j > n {
        return Err(Error::shape(format!(
            "plucker needs at most as many columns as rows, got {}x{}",
            n, j
        )));
    }
    let cols: Vec<usize> = (0..j).collect();
    Ok(subsets(n, j)
        .iter()
        .map(|rows| minor(m, rows, &cols))
        .collect())
}

/// The `k`-th compound matrix: entry `(I, J)` is the minor of rows `I`,
/// columns `J`, both in lexicographic order. Functorial:
/// `compound(A B, k) = compound(A, k) compound(B, k)`.
pub fn compound(m: &CMatrix, k: usize) -> CMatrix {
    let rows = subsets(m.rows(), k);
    let cols = subsets(m.cols(), k);
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| minor(m, &rows[i], &cols[j]))
}

/// Matrix of the wedge map `x -> omega ^ x` from `C^n` to `wedge^{j+1} C^n`
/// for a `j`-vector `omega` in Plucker coordinates. Its kernel is the
/// `j`-plane of a decomposable `omega`.
pub fn wedge_with_vector_map(omega: &[Complex64], n: usize, j: usize) -> CMatrix {
    let rows_out = subsets(n, j + 1);
    let idx_in: std::collections::HashMap<Vec<usize>, usize> = subsets(n, j)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut m = CMatrix::zeros(rows_out.len(), n);
    for (r, big) in rows_out.iter().enumerate() {
        // omega_{big \ {x}} wedge e_x contributes with the sign of moving
        // e_x into its slot
        for (pos, &x) in big.iter().enumerate() {
            let mut small = big.clone();
            small.remove(pos);
            let sign = if (big.len() - 1 - pos) % 2 == 0 { 1.0 } else { -1.0 };
            m[(r, x)] += omega[idx_in[&small]] * sign;
        }
    }
    m
}

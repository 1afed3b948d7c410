//! Jordan structure with tolerances: eigenvalue clustering, rank staircases,
//! unitary strict triangularization, triangular square roots and numerical
//! Jordan chains.

use num_complex::Complex64;

use super::decomp;
use super::CMatrix;
use crate::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigenvalue clusters with per-eigenvalue Jordan partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanStructure {
    /// Cluster centres, one per distinct eigenvalue.
    pub eigenvalues: Vec<Complex64>,
    /// Weakly decreasing block sizes for each eigenvalue; the partition of
    /// the algebraic multiplicity.
    pub partitions: Vec<Vec<usize>>,
}

impl JordanStructure {
    pub fn dimension(&self) -> usize {
        self.partitions.iter().flatten().sum()
    }

    /// Multiplicity of the cluster nearest to `kappa`, with its partition,
    /// if the centre is within `tol`.
    pub fn partition_near(&self, kappa: Complex64, tol: f64) -> Option<&[usize]> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, e)| (*e - kappa).norm() <= tol)
            .min_by(|(_, a), (_, b)| {
                (*a - kappa)
                    .norm()
                    .partial_cmp(&(*b - kappa).norm())
                    .unwrap()
            })
            .map(|(i, _)| self.partitions[i].as_slice())
    }
}

/// Single-linkage clustering of points at radius `tol`.
/// Returns cluster member indices, ordered by the position of each
/// cluster's first representative.
pub fn cluster_points(points: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(c) => clusters[c].push(i),
            None => {
                root_of[r] = Some(clusters.len());
                clusters.push(vec![i]);
            }
        }
    }
    clusters
}

/// Jordan structure of a square matrix at the given clustering tolerance.
///
/// Eigenvalues within `tol` of each other (single linkage) are merged into a
/// cluster with centre the mean; block sizes come from the rank staircase of
/// `(M - kappa I)^k`, with singular values below `tol * max(1, |M|)` treated
/// as zero.
pub fn jordan_type(m: &CMatrix, tol: f64) -> Result<JordanStructure, Error> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    assert!(tol > 0.0, "jordan_type requires tol > 0");
    let n = m.rows();
    if n == 0 {
        return Ok(JordanStructure {
            eigenvalues: vec![],
            partitions: vec![],
        });
    }
    let eigs = decomp::eigenvalues(m)?;
    // Eigenvalues of a matrix with a defective cluster carry a root-of-eps
    // scatter, so a fixed radius can split one true cluster into spurious
    // singletons. The rank staircase is linear in perturbations and detects
    // that: a probe at a spurious centre drops rank by more than the claimed
    // multiplicity. Escalate the linkage radius until every cluster has a
    // consistent staircase.
    let scale = 1.0 + m.norm_fro();
    let mut radius = tol;
    let mut last_err = Error::RankStaircase { tol };
    while radius <= 1e-2 * scale {
        match jordan_at_radius(m, &eigs, radius, tol) {
            Ok(structure) => return Ok(structure),
            Err(e) => last_err = e,
        }
        radius *= 10.0;
    }
    Err(last_err)
}

fn jordan_at_radius(
    m: &CMatrix,
    eigs: &[Complex64],
    radius: f64,
    tol: f64,
) -> Result<JordanStructure, Error> {
    let clusters = cluster_points(eigs, radius);
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut partitions = Vec::with_capacity(clusters.len());
    for members in &clusters {
        let centre = members.iter().map(|&i| eigs[i]).sum::<Complex64>() / members.len() as f64;
        let mult = members.len();
        let part = partition_from_staircase(m, centre, mult, tol)?;
        eigenvalues.push(centre);
        partitions.push(part);
    }
    Ok(JordanStructure {
        eigenvalues,
        partitions,
    })
}

/// Jordan partition for one eigenvalue from the rank staircase:
/// with `r_k = rank (M - kappa I)^k`, the number of blocks of size >= k is
/// `r_{k-1} - r_k`, and the partition is its conjugate.
fn partition_from_staircase(
    m: &CMatrix,
    kappa: Complex64,
    mult: usize,
    tol: f64,
) -> Result<Vec<usize>, Error> {
    let n = m.rows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= kappa;
    }
    // normalise so powers do not overflow the rank threshold
    let scale = shifted.norm_fro().max(1e-300);
    let shifted = shifted.scale_re(1.0 / scale);
    let mut ranks = vec![n];
    let mut power = CMatrix::identity(n);
    for _ in 0..n {
        power = power.matmul(&shifted);
        let r = decomp::rank(&power, tol);
        ranks.push(r);
        if n - r >= mult {
            break;
        }
    }
    // the generalised eigenspace must stabilise at exactly the claimed
    // multiplicity; a probe centre inside a defective cluster keeps leaking
    // rank and is rejected here
    let stabilized = decomp::rank(&power.matmul(&shifted), tol);
    if stabilized != *ranks.last().unwrap() {
        return Err(Error::RankStaircase { tol });
    }
    // counts[k] = number of blocks of size >= k+1
    let mut counts = Vec::new();
    for w in ranks.windows(2) {
        let d = w[0] as isize - w[1] as isize;
        if d < 0 {
            return Err(Error::RankStaircase { tol });
        }
        counts.push(d as usize);
    }
    for w in counts.windows(2) {
        if w[1] > w[0] {
            return Err(Error::RankStaircase { tol });
        }
    }
    let mut part = Vec::new();
    for size in (1..=counts.len()).rev() {
        let at_least_this = counts[size - 1];
        let at_least_next = if size < counts.len() { counts[size] } else { 0 };
        for _ in 0..at_least_this.saturating_sub(at_least_next) {
            part.push(size);
        }
    }
    part.sort_unstable_by(|a, b| b.cmp(a));
    if part.iter().sum::<usize>() != mult {
        return Err(Error::RankStaircase { tol });
    }
    Ok(part)
}

/// Unitary strict triangularization of a nilpotent matrix: `U* X U = T` with
/// `T` strictly upper triangular and the superdiagonal rotated to be
/// non-negative real.
pub fn strict_upper_triangularize(x: &CMatrix, tol: f64) -> Result<(CMatrix, CMatrix), Error> {
    if !x.is_square() {
        return Err(Error::NonSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let defect = x.nilpotency_defect()?;
    if defect > tol {
        return Err(Error::NotNilpotent { defect, tol });
    }
    let n = x.rows();
    // A QR Schur form puts the root-of-eps eigenvalue scatter of a defective
    // matrix on the diagonal, which would wreck the reconstruction. The flag
    // of kernels ker X \subset ker X^2 \subset ... is linear in perturbations
    // and an orthonormal basis adapted to it triangularizes exactly:
    // X ker X^j \subseteq ker X^{j-1}.
    let scale = x.norm_fro().max(1e-300);
    let xs = x.scale_re(1.0 / scale);
    let mut u = CMatrix::zeros(n, n);
    let mut filled = 0;
    let mut power = CMatrix::identity(n);
    while filled < n {
        power = power.matmul(&xs);
        let kernel = decomp::nullspace(&power, tol.max(1e-12));
        let mut added = false;
        for j in 0..kernel.cols() {
            let col = kernel.col_vec(j);
            if let Some(w) = orthonormal_residual(&col, &u, filled) {
                for i in 0..n {
                    u[(i, filled)] = w[i];
                }
                filled += 1;
                added = true;
            }
        }
        if !added {
            return Err(Error::RankStaircase { tol });
        }
    }
    let mut t = u.adjoint().matmul(x).matmul(&u);
    // entries on or below the diagonal are pure round-off in this basis
    for i in 0..n {
        for j in 0..=i {
            if t[(i, j)].norm() > tol * (1.0 + scale) {
                return Err(Error::NotNilpotent {
                    defect: t[(i, j)].norm(),
                    tol,
                });
            }
            t[(i, j)] = ZERO;
        }
    }
    // diagonal-unitary similarity making the superdiagonal non-negative real
    let mut phases = vec![ONE; n];
    for i in 0..n.saturating_sub(1) {
        let v = t[(i, i + 1)] * phases[i].conj();
        phases[i + 1] = if v.norm() > 0.0 { v.conj() / v.norm() } else { phases[i] };
    }
    // conj(phases) on rows, phases on columns: T <- D T D* with D = diag(conj(phases))?
    // We apply T[i][j] <- phases[i] * T[i][j] * conj(phases[j]) and U columns
    // scale by conj(phases[j]) so that U T U* is unchanged.
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] = phases[i].conj() * t[(i, j)] * phases[j];
        }
    }
    for j in 0..n {
        for i in 0..n {
            u[(i, j)] *= phases[j];
        }
    }
    Ok((u, t))
}

/// Upper-triangular square root with positive diagonal (Parlett recurrence).
/// Requires an upper-triangular input with positive real diagonal.
pub fn upper_sqrt(m: &CMatrix) -> Result<CMatrix, Error> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let scale = 1.0 + m.norm_fro();
    for i in 0..n {
        for j in 0..i {
            if m[(i, j)].norm() > 1e-12 * scale {
                return Err(Error::shape("upper_sqrt input must be upper triangular"));
            }
        }
        let d = m[(i, i)];
        if d.re <= 0.0 || d.im.abs() > 1e-10 * (1.0 + d.re.abs()) {
            return Err(Error::NonPositiveDiagonal { index: i });
        }
    }
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(m[(i, i)].re.sqrt(), 0.0);
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = m[(i, j)];
            for k in i + 1..j {
                s -= a[(i, k)] * a[(k, j)];
            }
            a[(i, j)] = s / (a[(i, i)] + a[(j, j)]);
        }
    }
    Ok(a)
}

/// Numerical Jordan chains of a nilpotent matrix: returns `P` with
/// `X = P J P^{-1}`, `J` the Jordan matrix of the given partition
/// (blocks in the order of `partition`, each with superdiagonal ones).
pub fn nilpotent_jordan_basis(x: &CMatrix, tol: f64) -> Result<(CMatrix, Vec<usize>), Error> {
    let n = x.rows();
    let defect = x.nilpotency_defect()?;
    if defect > tol {
        return Err(Error::NotNilpotent { defect, tol });
    }
    let scale = x.norm_fro();
    let xs = if scale > 0.0 { x.scale_re(1.0 / scale) } else { x.clone() };

    // kernels of increasing powers
    let mut kernels: Vec<CMatrix> = Vec::new(); // orthonormal bases, columns
    let mut power = CMatrix::identity(n);
    loop {
        power = power.matmul(&xs);
        let k = decomp::nullspace(&power, tol);
        let dim = k.cols();
        kernels.push(k);
        if dim == n {
            break;
        }
        if kernels.len() > n {
            return Err(Error::RankStaircase { tol });
        }
    }
    let depth = kernels.len();
    // chain tops: at stage s (from deepest), pick vectors of ker X^s that are
    // independent modulo ker X^{s-1} + X * (previously selected chains)
    let mut chains: Vec<Vec<Vec<Complex64>>> = Vec::new(); // chains[c][t], t=0 top
    for s in (1..=depth).rev() {
        let ker_s = &kernels[s - 1];
        // span to quotient out: ker X^{s-1} plus X * (tops already at depth > s, pushed down)
        let mut quotient_cols: Vec<Vec<Complex64>> = Vec::new();
        if s >= 2 {
            let k_prev = &kernels[s - 2];
            for j in 0..k_prev.cols() {
                quotient_cols.push(k_prev.col_vec(j));
            }
        }
        for chain in &chains {
            if chain.len() >= s {
                // the element of this chain lying in ker X^s \ ker X^{s-1}
                quotient_cols.push(chain[chain.len() - s].clone());
            }
        }
        let picked = independent_complement(ker_s, &quotient_cols, tol);
        for v in picked {
            let mut chain = vec![v];
            for _ in 1..s {
                let next = xs.matvec(chain.last().unwrap());
                chain.push(next);
            }
            chains.push(chain);
        }
    }
    chains.sort_by(|a, b| b.len().cmp(&a.len()));
    let partition: Vec<usize> = chains.iter().map(|c| c.len()).collect();
    if partition.iter().sum::<usize>() != n {
        return Err(Error::RankStaircase { tol });
    }
    // columns: for each chain of length l, the basis is (X^{l-1}v, ..., Xv, v)
    // undo the normalisation: chains were built from xs = X / scale, and
    // X^t v = scale^t xs^t v, so weighting column t with scale^t restores
    // the convention X p_k = p_{k-1}.
    let mut p = CMatrix::zeros(n, n);
    let mut col = 0;
    for chain in &chains {
        for t in (0..chain.len()).rev() {
            let w = Complex64::new(scale.powi(t as i32), 0.0);
            for i in 0..n {
                p[(i, col)] = chain[t][i] * w;
            }
            col += 1;
        }
    }
    Ok((p, partition))
}

/// Twice-orthogonalised residual of `v` against the first `filled` columns
/// of `u`, normalised; `None` when `v` is numerically inside their span.
fn orthonormal_residual(v: &[Complex64], u: &CMatrix, filled: usize) -> Option<Vec<Complex64>> {
    let n = u.rows();
    let mut w = v.to_vec();
    for _ in 0..2 {
        for k in 0..filled {
            let dot: Complex64 = (0..n).map(|i| u[(i, k)].conj() * w[i]).sum();
            for i in 0..n {
                w[i] -= dot * u[(i, k)];
            }
        }
    }
    let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 1e-7 {
        for z in &mut w {
            *z /= nrm;
        }
        Some(w)
    } else {
        None
    }
}

/// Vectors of `space` (columns) spanning a complement of `quotient` inside
/// the column span, chosen greedily by largest residual.
fn independent_complement(
    space: &CMatrix,
    quotient: &[Vec<Complex64>],
    tol: f64,
) -> Vec<Vec<Complex64>> {
    let n = space.rows();
    let mut basis: Vec<Vec<Complex64>> = Vec::new(); // orthonormalised quotient + picked
    let orthonormalize = |v: &[Complex64], basis: &mut Vec<Vec<Complex64>>| -> Option<Vec<Complex64>> {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for b in basis.iter() {
                let dot: Complex64 = b.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
                for i in 0..n {
                    w[i] -= dot * b[i];
                }
            }
        }
        let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > tol.sqrt().max(1e-7) {
            for z in &mut w {
                *z /= nrm;
            }
            Some(w)
        } else {
            None
        }
    };
    for q in quotient {
        if let Some(w) = orthonormalize(q, &mut basis) {
            basis.push(w);
        }
    }
    let mut picked = Vec::new();
    for j in 0..space.cols() {
        let v = space.col_vec(j);
        if let Some(w) = orthonormalize(&v, &mut basis) {
            basis.push(w.clone());
            picked.push(w);
        }
    }
    picked
}

/// The Jordan matrix with the given nilpotent block sizes.
pub fn jordan_matrix(partition: &[usize]) -> CMatrix {
    let n: usize = partition.iter().sum();
    let mut j = CMatrix::zeros(n, n);
    let mut off = 0;
    for &size in partition {
        for t in 0..size.saturating_sub(1) {
            j[(off + t, off + t + 1)] = ONE;
        }
        off += size;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRng;

    #[test]
    fn jordan_type_canonical_blocks() {
        let j3 = jordan_matrix(&[3]);
        let s = jordan_type(&j3, 1e-8).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert!(s.eigenvalues[0].norm() < 1e-8);
        assert_eq!(s.partitions[0], vec![3]);

        let d = CMatrix::diag(&[ONE, Complex64::new(2.0, 0.0)]);
        let s = jordan_type(&d, 1e-8).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert_eq!(s.partitions, vec![vec![1], vec![1]]);

        let m = jordan_matrix(&[2, 1]);
        let s = jordan_type(&m, 1e-8).unwrap();
        assert_eq!(s.partitions, vec![vec![2, 1]]);
    }

    #[test]
    fn jordan_type_similarity_invariant() {
        let mut rng = SeedRng::new(11);
        for &parts in &[&[3usize, 1][..], &[2, 2][..], &[4][..]] {
            let j = jordan_matrix(parts);
            let n = j.rows();
            let p = rng.well_conditioned(n, 50.0);
            let x = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
            let s = jordan_type(&x, 1e-8).unwrap();
            assert_eq!(s.partitions.len(), 1);
            assert_eq!(s.partitions[0], parts.to_vec(), "partition for {:?}", parts);
        }
    }

    #[test]
    fn strict_triangularize_known_cases() {
        let j2 = jordan_matrix(&[2]);
        let (u, t) = strict_upper_triangularize(&j2, 1e-8).unwrap();
        assert!((&u.matmul(&t).matmul(&u.adjoint()) - &j2).norm_fro() < 1e-12);

        let lower = CMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let (u, t) = strict_upper_triangularize(&lower, 1e-8).unwrap();
        assert!(t[(1, 0)].norm() < 1e-12);
        assert!((t[(0, 1)].re - 1.0).abs() < 1e-12 && t[(0, 1)].im.abs() < 1e-12);
        assert!((&u.matmul(&t).matmul(&u.adjoint()) - &lower).norm_fro() < 1e-10);
    }

    #[test]
    fn strict_triangularize_random_nilpotent() {
        let mut rng = SeedRng::new(12);
        let j = jordan_matrix(&[4]);
        let p = rng.well_conditioned(4, 30.0);
        let x = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
        let (u, t) = strict_upper_triangularize(&x, 1e-6).unwrap();
        assert!((&u.adjoint().matmul(&u) - &CMatrix::identity(4)).norm_fro() < 1e-12);
        assert!((&u.matmul(&t).matmul(&u.adjoint()) - &x).norm_fro() <= 1e-10 * (1.0 + x.norm_fro()));
        for i in 0..4 {
            for j2 in 0..=i {
                assert!(t[(i, j2)].norm() < 1e-8);
            }
        }
        // superdiagonal phases fixed
        for i in 0..3 {
            assert!(t[(i, i + 1)].im.abs() < 1e-10);
            assert!(t[(i, i + 1)].re >= -1e-12);
        }
    }

    #[test]
    fn strict_triangularize_rejects_non_nilpotent() {
        let d = CMatrix::diag(&[ONE, -ONE]);
        assert!(strict_upper_triangularize(&d, 1e-8).is_err());
    }

    #[test]
    fn upper_sqrt_cases() {
        let i3 = CMatrix::identity(3);
        assert!((&upper_sqrt(&i3).unwrap() - &i3).norm_fro() < 1e-14);

        let d = CMatrix::diag(&[Complex64::new(4.0, 0.0), Complex64::new(9.0, 0.0)]);
        let r = upper_sqrt(&d).unwrap();
        assert!((r[(0, 0)].re - 2.0).abs() < 1e-14 && (r[(1, 1)].re - 3.0).abs() < 1e-14);

        let m = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let a = upper_sqrt(&m).unwrap();
        assert!((&a.matmul(&a) - &m).norm_fro() <= 1e-10 * m.norm_fro());

        let bad = CMatrix::diag(&[-ONE]);
        assert!(upper_sqrt(&bad).is_err());
    }

    #[test]
    fn upper_sqrt_random_reconstructs() {
        let mut rng = SeedRng::new(13);
        let mut m = rng.matrix(5, 5);
        for i in 0..5 {
            for j in 0..i {
                m[(i, j)] = ZERO;
            }
            m[(i, i)] = Complex64::new(rng.uniform(0.5, 3.0), 0.0);
        }
        let a = upper_sqrt(&m).unwrap();
        assert!((&a.matmul(&a) - &m).norm_fro() <= 1e-10 * m.norm_fro());
    }

    #[test]
    fn jordan_basis_reconstructs() {
        let mut rng = SeedRng::new(14);
        for &parts in &[&[2usize, 1][..], &[3, 1][..], &[2, 2][..]] {
            let j = jordan_matrix(parts);
            let n = j.rows();
            let p = rng.well_conditioned(n, 20.0);
            let x = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
            let (basis, partition) = nilpotent_jordan_basis(&x, 1e-8).unwrap();
            assert_eq!(partition, parts.to_vec());
            let jm = jordan_matrix(&partition);
            let rec = basis.matmul(&jm).matmul(&decomp::inverse(&basis).unwrap());
            assert!(
                (&rec - &x).norm_fro() <= 1e-7 * (1.0 + x.norm_fro()),
                "chain reconstruction for {:?}: {:e}",
                parts,
                (&rec - &x).norm_fro()
            );
        }
    }
}

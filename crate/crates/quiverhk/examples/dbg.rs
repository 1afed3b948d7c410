use quiverhk::matrix::{CMatrix, decomp, jordan};
use quiverhk::rng::SeedRng;
fn main() {
    let mut rng = SeedRng::new(12);
    let j = jordan::jordan_matrix(&[4]);
    let p = rng.well_conditioned(4, 30.0);
    let x = p.matmul(&j).matmul(&decomp::inverse(&p).unwrap());
    println!("nilp defect {:e}", x.nilpotency_defect().unwrap());
    let (u, t) = decomp::schur(&x).unwrap();
    println!("schur recon {:e}", (&u.matmul(&t).matmul(&u.adjoint()) - &x).norm_fro());
    println!("diag of T: {:?}", (0..4).map(|i| t[(i,i)].norm()).collect::<Vec<_>>());
    let (u2, t2) = jordan::strict_upper_triangularize(&x, 1e-6).unwrap();
    println!("strict recon {:e}", (&u2.matmul(&t2).matmul(&u2.adjoint()) - &x).norm_fro());
    println!("unitary {:e}", (&u2.adjoint().matmul(&u2) - &CMatrix::identity(4)).norm_fro());
}

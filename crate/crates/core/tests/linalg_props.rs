//! Property tests for the Hermitian kernels.

use crmimo::linalg::{eig_hermitian, psd_project, vec_norm, Cholesky};
use crmimo::{ComplexMatrix, HermitianMatrix, C64};
use proptest::prelude::*;

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n)
        .prop_map(move |v| ComplexMatrix::new(n, n, v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap())
}

fn hermitian() -> impl Strategy<Value = HermitianMatrix> {
    (1usize..=5)
        .prop_flat_map(matrix)
        .prop_map(|a| HermitianMatrix::from_matrix(&a).unwrap())
}

/// `G G^H + I`, safely positive definite.
fn positive_definite() -> impl Strategy<Value = HermitianMatrix> {
    (1usize..=5).prop_flat_map(matrix).prop_map(|g| {
        let mut a = HermitianMatrix::from_matrix(&g.matmul(&g.adjoint()).unwrap()).unwrap();
        a.add_identity(1.0);
        a
    })
}

fn basis(n: usize, i: usize) -> Vec<C64> {
    (0..n).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()
}

proptest! {
    #[test]
    fn eigendecomposition_reconstructs(a in hermitian()) {
        let e = eig_hermitian(&a).unwrap();
        let scale = 1.0 + a.frobenius_norm();
        prop_assert!(e.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * scale);
        for w in e.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for (l, v) in e.eigenvalues.iter().zip(&e.eigenvectors) {
            prop_assert!((vec_norm(v) - 1.0).abs() < 1e-12);
            let av = a.mul_vec(v);
            let resid: f64 = av.iter().zip(v).map(|(x, y)| (x - y * l).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(resid <= 1e-10 * scale);
        }
        let trace: f64 = e.eigenvalues.iter().sum();
        prop_assert!((trace - a.trace()).abs() <= 1e-10 * scale);
    }

    #[test]
    fn cholesky_logdet_matches_eigenvalues(a in positive_definite()) {
        let c = Cholesky::factor(&a).unwrap();
        let from_eig: f64 = eig_hermitian(&a).unwrap().eigenvalues.iter().map(|l| l.ln()).sum();
        prop_assert!((c.logdet() - from_eig).abs() <= 1e-9 * (1.0 + from_eig.abs()));
    }

    #[test]
    fn inverse_and_solve(a in positive_definite()) {
        let n = a.dim();
        let c = Cholesky::factor(&a).unwrap();
        let inv = c.inverse();
        for i in 0..n {
            let e = basis(n, i);
            let x = c.solve(&e);
            let back = a.mul_vec(&x);
            for (b, t) in back.iter().zip(&e) {
                prop_assert!((b - t).norm() < 1e-9);
            }
            let col = inv.mul_vec(&e);
            for (p, q) in col.iter().zip(&x) {
                prop_assert!((p - q).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn psd_projection_is_psd_and_idempotent(a in hermitian()) {
        let p = psd_project(&a).unwrap();
        let scale = 1.0 + a.frobenius_norm();
        prop_assert!(p.min_eigenvalue().unwrap() >= -1e-10 * scale);
        prop_assert!(psd_project(&p).unwrap().sub(&p).frobenius_norm() <= 1e-10 * scale);
        // nearest PSD matrix: no closer than the clipped negative part
        let neg: f64 = eig_hermitian(&a).unwrap().eigenvalues.iter().filter(|l| **l < 0.0).map(|l| l * l).sum::<f64>().sqrt();
        prop_assert!((a.sub(&p).frobenius_norm() - neg).abs() <= 1e-9 * scale);
    }

    #[test]
    fn congruence_matches_quadratic_form(
        a in positive_definite(),
        rows in 1usize..=4,
        seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 25 + 5),
    ) {
        let n = a.dim();
        let m = ComplexMatrix::from_fn(rows, n, |i, j| {
            let (re, im) = seed[i * n + j];
            C64::new(re, im)
        });
        let y: Vec<C64> = seed[25..25 + rows].iter().map(|&(re, im)| C64::new(re, im)).collect();
        let lhs = a.congruence(&m).quadratic_form(&y);
        let rhs = a.quadratic_form(&m.adjoint().mul_vec(&y));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }
}

#[test]
fn non_finite_input_is_rejected() {
    let a = HermitianMatrix::diag(&[1.0, f64::NAN]);
    assert!(eig_hermitian(&a).is_err());
    assert!(Cholesky::factor(&HermitianMatrix::diag(&[1.0, -1.0])).is_err());
}

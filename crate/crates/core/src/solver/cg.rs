//! Jacobi-preconditioned conjugate gradients.

use crate::sparse::CsrMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CgError {
    #[error("matrix is {rows}x{cols}, right-hand side has length {rhs}")]
    Shape {
        rows: usize,
        cols: usize,
        rhs: usize,
    },
    #[error("diagonal entry {row} is {value:e}; matrix is not positive definite")]
    NonPositiveDiagonal { row: usize, value: f64 },
    #[error("negative curvature {curvature:e} at iteration {iteration}")]
    NegativeCurvature { iteration: usize, curvature: f64 },
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    /// Defaults to ten times the dimension.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `K x = rhs` for symmetric positive definite `K`.
pub fn solve_spd(
    k: &CsrMatrix<f64>,
    rhs: &[f64],
    opts: CgOptions,
) -> Result<(Vec<f64>, CgStats), CgError> {
    let n = rhs.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(CgError::Shape {
            rows: k.nrows(),
            cols: k.ncols(),
            rhs: n,
        });
    }
    let diag = k.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(CgError::NonPositiveDiagonal { row, value });
    }
    let b_norm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, CgStats::default()));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let kp = k.matvec(&p);
        let curvature = dot(&p, &kp);
        if !(curvature > 0.0) {
            return Err(CgError::NegativeCurvature {
                iteration: it,
                curvature,
            });
        }
        let step = rz / curvature;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * kp[i];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        if res <= opts.tol {
            // confirm against the true residual
            let kx = k.matvec(&x);
            let true_res = kx
                .iter()
                .zip(rhs)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt()
                / b_norm;
            if true_res <= opts.tol {
                return Ok((
                    x,
                    CgStats {
                        iterations: it,
                        relative_residual: true_res,
                    },
                ));
            }
            r = rhs.iter().zip(&kx).map(|(b, a)| b - a).collect();
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let kx = k.matvec(&x);
    let residual = kx
        .iter()
        .zip(rhs)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    Err(CgError::NotConverged {
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_in_one_iteration() {
        let k = CsrMatrix::from_triplets(3, 3, (0..3).map(|i| (i, i, 1.0)).collect());
        let (x, s) = solve_spd(&k, &[1.0, -2.0, 3.0], CgOptions::default()).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn random_spd_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10;
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 =
                    (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
                trip.push((i, j, v));
            }
        }
        let k = CsrMatrix::from_triplets(n, n, trip);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let rhs = k.matvec(&x_true);
        let (x, _) = solve_spd(&k, &rhs, CgOptions::default()).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let k = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 3.0)]);
        let (x, s) = solve_spd(&k, &[0.0, 0.0], CgOptions::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn indefinite_matrix_detected() {
        let k = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        );
        let err = solve_spd(&k, &[1.0, -1.0], CgOptions::default()).unwrap_err();
        assert!(matches!(err, CgError::NegativeCurvature { .. }));
    }

    #[test]
    fn iteration_cap() {
        let k = CsrMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 1.0),
                (1, 1, 10.0),
                (2, 2, 100.0),
                (0, 1, 0.5),
                (1, 0, 0.5),
            ],
        );
        let err = solve_spd(
            &k,
            &[1.0, 1.0, 1.0],
            CgOptions {
                tol: 1e-14,
                max_iter: Some(1),
            },
        )
        .unwrap_err();
        assert!(matches!(err, CgError::NotConverged { iterations: 1, .. }));
    }
}

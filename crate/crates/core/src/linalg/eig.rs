use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, CsrMatrix, ProfileLu};
use crate::error::{Error, Result};

/// Smallest eigenpair of a symmetric-definite pencil.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Normalized so that `x^T M x = 1`.
    pub vector: Vec<f64>,
    /// `||lambda A^{-1} M x - x||_M` for the returned pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = idx.iter().map(|&i| a[i][i]).collect();
    let vectors = idx.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Block inverse iteration with Rayleigh–Ritz for the smallest eigenpair of
/// `A x = lambda M x` (A symmetric positive semidefinite on the iteration
/// space, M symmetric positive definite there).
///
/// * `apply_m(x)` returns `M x`;
/// * `solve(b)` returns `A^{-1} b` restricted to the iteration space;
/// * `project(x)` maps a vector into the iteration space (deflation).
#[allow(clippy::too_many_arguments)]
pub fn subspace_inverse_iteration(
    dim: usize,
    block: usize,
    apply_m: &dyn Fn(&[f64]) -> Vec<f64>,
    solve: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    project: &dyn Fn(&mut [f64]),
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigenPair> {
    if dim == 0 {
        return Err(Error::InvalidArgument("empty eigenproblem".into()));
    }
    let block = block.clamp(1, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            project(&mut v);
            v
        })
        .collect();
    let mut last_value = f64::NAN;

    for it in 1..=max_iter {
        // y = A^{-1} M x and w = A y = M x.
        let mut ys = Vec::with_capacity(block);
        let mut ws = Vec::with_capacity(block);
        for xi in &x {
            let w = apply_m(xi);
            let mut y = solve(&w)?;
            project(&mut y);
            ys.push(y);
            ws.push(w);
        }
        // M-orthonormalize (y, w) pairs with two passes of Gram–Schmidt.
        let mut basis: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new(); // (y, w, M y)
        for (mut y, mut w) in ys.into_iter().zip(ws) {
            let norm0 = dot(&y, &apply_m(&y)).sqrt();
            for _ in 0..2 {
                for (by, bw, bmy) in &basis {
                    let c = dot(bmy, &y);
                    axpy(-c, by, &mut y);
                    axpy(-c, bw, &mut w);
                }
            }
            let my = apply_m(&y);
            let nrm = dot(&y, &my).sqrt();
            if nrm > 1e-10 * norm0 && nrm > 0.0 {
                let s = 1.0 / nrm;
                basis.push((y.iter().map(|v| v * s).collect(), w.iter().map(|v| v * s).collect(), my.iter().map(|v| v * s).collect()));
            }
        }
        if basis.is_empty() {
            return Err(Error::InvalidArgument("eigen iteration collapsed to zero".into()));
        }
        let k = basis.len();
        // Projected A: a_ij = y_i^T A y_j = y_i^T w_j.
        let mut a_hat = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                a_hat[i][j] = 0.5 * (dot(&basis[i].0, &basis[j].1) + dot(&basis[j].0, &basis[i].1));
            }
        }
        let (vals, vecs) = symmetric_eigen(&a_hat);
        x = vecs
            .iter()
            .map(|c| {
                let mut v = vec![0.0; dim];
                for (ci, (by, _, _)) in c.iter().zip(&basis) {
                    axpy(*ci, by, &mut v);
                }
                v
            })
            .collect();
        let lambda = vals[0];
        let x0 = &x[0];
        let mx0 = apply_m(x0);
        let mut r = solve(&mx0)?;
        project(&mut r);
        for (ri, xi) in r.iter_mut().zip(x0) {
            *ri = lambda * *ri - xi;
        }
        let residual = dot(&r, &apply_m(&r)).sqrt();
        let stagnated = (lambda - last_value).abs() <= 1e-15 * lambda.abs();
        if residual <= tol || (stagnated && residual <= tol.sqrt()) {
            return Ok(EigenPair {
                value: lambda,
                vector: x0.clone(),
                residual,
                iterations: it,
            });
        }
        last_value = lambda;
    }
    Err(Error::NotConverged {
        solver: "inverse iteration",
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// Smallest eigenpair of `A x = lambda M x` for sparse SPD `A` and `M`.
pub fn smallest_generalized_eig(a: &CsrMatrix, m: &CsrMatrix, tol: f64) -> Result<EigenPair> {
    if a.nrows() != m.nrows() || a.nrows() != a.ncols() || m.nrows() != m.ncols() {
        return Err(Error::Mismatch("pencil shapes".into()));
    }
    let lu = ProfileLu::factor(a)?;
    subspace_inverse_iteration(
        a.nrows(),
        4,
        &|x| m.mul_vec(x),
        &|b| Ok(lu.solve(b)),
        &|_| {},
        tol,
        1000,
        0x5eed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_eigen_of_small_matrix() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(&a);
        let s2 = 2f64.sqrt();
        for (v, e) in vals.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((v - e).abs() < 1e-13);
        }
        for (lam, x) in vals.iter().zip(&vecs) {
            for i in 0..3 {
                let ax: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
                assert!((ax - lam * x[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_pencil() {
        let a = CsrMatrix::from_diagonal(&[3.0, 1.0, 4.0, 10.0, 2.5, 7.0]);
        let m = CsrMatrix::from_diagonal(&[1.0, 2.0, 1.0, 1.0, 1.0, 1.0]);
        let e = smallest_generalized_eig(&a, &m, 1e-10).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
        assert!(e.vector[1].abs() > 0.7);
    }

    #[test]
    fn laplacian_1d() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let m = CsrMatrix::identity(n);
        let e = smallest_generalized_eig(&a, &m, 1e-10).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((e.value - exact).abs() < 1e-12 * exact.max(1.0));
    }
}

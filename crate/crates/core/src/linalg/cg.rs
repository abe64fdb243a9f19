use super::{axpy, dot, norm2, CsrMatrix, LinearOperator, SolveReport};

/// Diagonal scaling `z = r / d`.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(diag: &[f64]) -> Self {
        JacobiPreconditioner {
            inv_diag: diag.iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        JacobiPreconditioner { inv_diag: vec![1.0; n] }
    }

    #[inline]
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Jacobi-preconditioned CG on a sparse SPD matrix from a zero start.
///
/// Converged means `||b - A x||_2 <= rel_tol * ||b||_2` for the returned `x`.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> (Vec<f64>, SolveReport) {
    let pre = JacobiPreconditioner::new(&a.diagonal());
    pcg(a, &pre, b, None, rel_tol, max_iter)
}

/// Preconditioned CG with an optional initial guess.
pub fn pcg(
    a: &dyn LinearOperator,
    pre: &JacobiPreconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveReport) {
    let n = a.dim();
    let b_norm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if b_norm == 0.0 && x0.is_none() {
        return (x, SolveReport::exact());
    }
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let target = rel_tol * scale;

    let mut ax = vec![0.0; n];
    let mut r = b.to_vec();
    if x0.is_some() {
        a.apply(&x, &mut ax);
        axpy(-1.0, &ax, &mut r);
    }
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = norm2(&r);

    // Restart a few times if the recursive residual drifts from the true one.
    for _restart in 0..4 {
        if residual <= target {
            break;
        }
        pre.apply(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            a.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if pq <= 0.0 || !pq.is_finite() {
                break;
            }
            let alpha = rz / pq;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &q, &mut r);
            iterations += 1;
            if norm2(&r) <= target {
                break;
            }
            pre.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        a.apply(&x, &mut ax);
        r.copy_from_slice(b);
        axpy(-1.0, &ax, &mut r);
        residual = norm2(&r);
        if iterations >= max_iter {
            break;
        }
    }
    let rel = residual / scale;
    (
        x,
        SolveReport {
            iterations,
            final_relative_residual: rel,
            converged: rel <= rel_tol,
        },
    )
}

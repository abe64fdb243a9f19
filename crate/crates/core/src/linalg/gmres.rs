use super::{axpy, dot, norm2, LinearOperator, SolveReport};

/// Restarted, right-preconditioned GMRES(`restart`).
///
/// `precond(r)` returns an approximation of `A^{-1} r`. Converged means the
/// true residual satisfies `||b - A x|| <= rel_tol * ||b||`.
pub fn gmres(
    a: &dyn LinearOperator,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    restart: usize,
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
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut tmp = vec![0.0; n];

    let residual = |x: &[f64], tmp: &mut Vec<f64>| {
        a.apply(x, tmp);
        b.iter().zip(tmp.iter()).map(|(bi, ai)| bi - ai).collect::<Vec<f64>>()
    };
    let mut r = residual(&x, &mut tmp);
    let mut beta = norm2(&r);

    while beta > target && iterations < max_iter {
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && iterations < max_iter {
            let zk = precond(&v[k]);
            let mut w = vec![0.0; n];
            a.apply(&zk, &mut w);
            z.push(zk);
            // Modified Gram–Schmidt, applied twice for robustness.
            for _ in 0..2 {
                for (j, vj) in v.iter().enumerate() {
                    let c = dot(&w, vj);
                    h[j][k] += c;
                    axpy(-c, vj, &mut w);
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / d;
                sn[k] = h[k + 1][k] / d;
            }
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() <= target || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = if h[i][i] != 0.0 { (g[i] - s) / h[i][i] } else { 0.0 };
        }
        for (yi, zi) in y.iter().zip(&z) {
            axpy(*yi, zi, &mut x);
        }
        r = residual(&x, &mut tmp);
        let new_beta = norm2(&r);
        if new_beta >= beta && k < restart {
            beta = new_beta;
            break;
        }
        beta = new_beta;
    }
    let rel = beta / scale;
    (
        x,
        SolveReport {
            iterations,
            final_relative_residual: rel,
            converged: rel <= rel_tol,
        },
    )
}

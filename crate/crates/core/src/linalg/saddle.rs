use super::{axpy, cg::pcg, dot, gmres, norm2, CsrMatrix, FnOperator, JacobiPreconditioner, ProfileLu, SolveReport};
use crate::error::{Error, Result};

/// Approximate or exact solves with the velocity block of a saddle system.
pub trait InnerSolver {
    fn dim(&self) -> usize;
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>>;
}

impl InnerSolver for ProfileLu {
    fn dim(&self) -> usize {
        ProfileLu::dim(self)
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(ProfileLu::solve(self, b))
    }
}

/// Jacobi-preconditioned CG on an SPD velocity block.
#[derive(Debug, Clone)]
pub struct CgInner<'a> {
    matrix: &'a CsrMatrix,
    pre: JacobiPreconditioner,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl<'a> CgInner<'a> {
    pub fn new(matrix: &'a CsrMatrix, rel_tol: f64) -> Self {
        CgInner {
            matrix,
            pre: JacobiPreconditioner::new(&matrix.diagonal()),
            rel_tol,
            max_iter: 20 * matrix.nrows() + 100,
        }
    }
}

impl InnerSolver for CgInner<'_> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (x, rep) = pcg(self.matrix, &self.pre, b, None, self.rel_tol, self.max_iter);
        if !rep.converged {
            return Err(Error::NotConverged {
                solver: "inner CG",
                iterations: rep.iterations,
                residual: rep.final_relative_residual,
            });
        }
        Ok(x)
    }
}

/// Kernel of `B^T` in pressure space together with the mean functionals that
/// pin it down: the solution satisfies `means[j] . p = 0` for every `j`.
#[derive(Debug, Clone)]
pub struct PressureConstraint {
    pub kernel: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
}

impl PressureConstraint {
    /// Constants form the kernel; `mean` is the vector of basis integrals.
    pub fn single(mean: &[f64]) -> Self {
        PressureConstraint {
            kernel: vec![vec![1.0; mean.len()]],
            means: vec![mean.to_vec()],
        }
    }

    /// `r` interleaved copies of a single constraint (index `q * r + mode`).
    pub fn interleaved(mean: &[f64], r: usize) -> Self {
        let n = mean.len() * r;
        let mut kernel = Vec::with_capacity(r);
        let mut means = Vec::with_capacity(r);
        for mode in 0..r {
            let mut k = vec![0.0; n];
            let mut m = vec![0.0; n];
            for (q, &mq) in mean.iter().enumerate() {
                k[q * r + mode] = 1.0;
                m[q * r + mode] = mq;
            }
            kernel.push(k);
            means.push(m);
        }
        PressureConstraint { kernel, means }
    }

    pub fn dim(&self) -> usize {
        self.kernel.first().map_or(0, Vec::len)
    }

    /// Positive diagonal weights used to precondition the Schur complement.
    fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim()];
        for m in &self.means {
            for (wi, mi) in w.iter_mut().zip(m) {
                *wi += mi.abs();
            }
        }
        w
    }

    /// Euclidean projection onto the orthogonal complement of the kernel.
    fn project_out_kernel(&self, p: &mut [f64]) {
        for k in &self.kernel {
            let c = dot(k, p) / dot(k, k);
            axpy(-c, k, p);
        }
    }

    /// Shift by kernel vectors so that every mean functional vanishes.
    pub fn fix_mean(&self, p: &mut [f64]) {
        for (k, m) in self.kernel.iter().zip(&self.means) {
            let c = dot(m, p) / dot(m, k);
            axpy(-c, k, p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleOptions {
    /// Relative tolerance of the outer Schur-complement iteration and of the
    /// reported backward errors.
    pub rel_tol: f64,
    pub max_outer: usize,
    /// Use CG (symmetric velocity block) or GMRES (nonsymmetric).
    pub symmetric: bool,
    pub restart: usize,
}

impl SaddleOptions {
    pub fn symmetric(rel_tol: f64) -> Self {
        SaddleOptions {
            rel_tol,
            max_outer: 2000,
            symmetric: true,
            restart: 80,
        }
    }

    pub fn nonsymmetric(rel_tol: f64) -> Self {
        SaddleOptions {
            symmetric: false,
            ..Self::symmetric(rel_tol)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Outer iterations; the residual is the larger of the two normwise
    /// backward errors of the velocity and divergence equations.
    pub report: SolveReport,
}

/// Solve `K u + B^T p = rhs_u`, `B u = rhs_p`, `mean . p = 0` by
/// Schur-complement PCG with CG inner solves.
pub fn saddle_solve(
    k: &CsrMatrix,
    b: &CsrMatrix,
    rhs_u: &[f64],
    rhs_p: &[f64],
    mean: &[f64],
    rel_tol: f64,
) -> Result<SaddleSolution> {
    let inner = CgInner::new(k, (rel_tol * 1e-3).max(1e-15));
    let constraint = PressureConstraint::single(mean);
    saddle_solve_with(&inner, k, b, rhs_u, rhs_p, &constraint, SaddleOptions::symmetric(rel_tol), None)
}

/// Schur-complement iteration with a pluggable inner solver for `K`.
///
/// `k` is only used to evaluate the final residual. `p0` warm-starts the
/// pressure iteration.
#[allow(clippy::too_many_arguments)]
pub fn saddle_solve_with(
    inner: &dyn InnerSolver,
    k: &CsrMatrix,
    b: &CsrMatrix,
    rhs_u: &[f64],
    rhs_p: &[f64],
    constraint: &PressureConstraint,
    opts: SaddleOptions,
    p0: Option<&[f64]>,
) -> Result<SaddleSolution> {
    let (nu, np) = (k.nrows(), b.nrows());
    if b.ncols() != nu || rhs_u.len() != nu || rhs_p.len() != np || constraint.dim() != np || inner.dim() != nu {
        return Err(Error::Mismatch(format!(
            "saddle system: K {}x{}, B {}x{}, rhs {} / {}, constraint {}",
            k.nrows(),
            k.ncols(),
            b.nrows(),
            b.ncols(),
            rhs_u.len(),
            rhs_p.len(),
            constraint.dim()
        )));
    }
    if norm2(rhs_u) == 0.0 && norm2(rhs_p) == 0.0 {
        return Ok(SaddleSolution {
            u: vec![0.0; nu],
            p: vec![0.0; np],
            report: SolveReport::exact(),
        });
    }

    // S p = B K^{-1} B^T p,  g = B K^{-1} rhs_u - rhs_p.
    let k_inv_f = inner.solve(rhs_u)?;
    let mut g = b.mul_vec(&k_inv_f);
    axpy(-1.0, rhs_p, &mut g);
    constraint.project_out_kernel(&mut g);

    let failure = std::cell::RefCell::new(None);
    let apply_s = |x: &[f64], y: &mut [f64]| {
        let mut xp = x.to_vec();
        constraint.project_out_kernel(&mut xp);
        let w = match inner.solve(&b.tr_mul_vec(&xp)) {
            Ok(w) => w,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![0.0; nu]
            }
        };
        b.mul_vec_into(&w, y);
        constraint.project_out_kernel(y);
    };
    let op = FnOperator { dim: np, f: apply_s };
    let weights = constraint.weights();
    let pre = JacobiPreconditioner::new(&weights);

    let start = p0.map(|p| {
        let mut p = p.to_vec();
        constraint.project_out_kernel(&mut p);
        p
    });
    let (mut p, outer) = if norm2(&g) == 0.0 {
        (vec![0.0; np], SolveReport::exact())
    } else if opts.symmetric {
        pcg(&op, &pre, &g, start.as_deref(), opts.rel_tol, opts.max_outer)
    } else {
        let precond = |r: &[f64]| {
            let mut z = vec![0.0; r.len()];
            pre.apply(r, &mut z);
            constraint.project_out_kernel(&mut z);
            z
        };
        gmres(&op, &precond, &g, start.as_deref(), opts.rel_tol, opts.restart, opts.max_outer)
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    constraint.project_out_kernel(&mut p);

    let mut f = rhs_u.to_vec();
    axpy(-1.0, &b.tr_mul_vec(&p), &mut f);
    let u = inner.solve(&f)?;
    constraint.fix_mean(&mut p);

    // Normwise backward errors of both block rows.
    let mut ru = k.mul_vec(&u);
    axpy(1.0, &b.tr_mul_vec(&p), &mut ru);
    axpy(-1.0, rhs_u, &mut ru);
    let mut rp = b.mul_vec(&u);
    axpy(-1.0, rhs_p, &mut rp);
    let (nk, nb) = (k.norm_inf(), b.norm_inf().max(b.transpose().norm_inf()));
    let (nu_, np_) = (norm2(&u), norm2(&p));
    let eu = norm2(&ru) / (norm2(rhs_u) + nk * nu_ + nb * np_).max(f64::MIN_POSITIVE);
    let ep = norm2(&rp) / (norm2(rhs_p) + nb * nu_).max(f64::MIN_POSITIVE);
    let residual = eu.max(ep);
    Ok(SaddleSolution {
        u,
        p,
        report: SolveReport {
            iterations: outer.iterations,
            final_relative_residual: residual,
            converged: outer.converged && residual <= opts.rel_tol,
        },
    })
}

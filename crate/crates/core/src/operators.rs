//! Discrete operators: `L^2` projection `P_h`, discrete Leray projection onto
//! the discretely divergence-free space `V_h`, Stokes–Ritz and elliptic Ritz
//! projections, the discrete Stokes operator `A_h` and its inverse, and the
//! discrete inf-sup constant.
//!
//! `A_h` is never assembled: `V_h` has no explicit basis, so every
//! application is a constrained (saddle-point) solve.

use crate::assembly::{
    assemble_operators, assemble_pressure_moments, assemble_scalar_operators, assemble_weak_scalar,
    assemble_weak_vector, OperatorSet, ScalarOperators,
};
use crate::error::{Error, Result};
use crate::fespace::{default_tabulation, FESpacePair, FieldKind, Tabulation};
use crate::linalg::{
    bilinear, cg_solve, norm2, saddle_solve_with, subspace_inverse_iteration, EigenPair, PressureConstraint,
    ProfileLu, SaddleOptions, SaddleSolution,
};
use crate::mesh::Mesh;

/// Relative tolerance of the saddle solves behind every operator here.
pub const OPERATOR_TOL: f64 = 1e-12;
/// `v` is in `V_h` when `||B v||_2 <= VH_TOL ||v||_M`.
pub const VH_TOL: f64 = 1e-10;
/// Tolerance of the eigenvalue iterations.
pub const EIGEN_TOL: f64 = 1e-9;

/// A coefficient vector tagged with what it discretizes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    kind: FieldKind,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(space: &FESpacePair, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        let expected = space.dof_count(kind);
        if values.len() != expected {
            return Err(Error::Mismatch(format!(
                "{kind:?} field has {} coefficients, space expects {expected}",
                values.len()
            )));
        }
        Ok(DiscreteField { kind, values })
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Taylor–Hood space with assembled operators and factorized blocks.
#[derive(Debug, Clone)]
pub struct StokesContext {
    pub space: FESpacePair,
    pub ops: OperatorSet,
    pub tab: Tabulation,
    k_lu: ProfileLu,
    m_lu: ProfileLu,
    constraint: PressureConstraint,
}

impl StokesContext {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let space = FESpacePair::taylor_hood(mesh);
        if space.n_u_free() == 0 {
            return Err(Error::InvalidMesh("mesh has no interior velocity nodes".into()));
        }
        let ops = assemble_operators(&space);
        let k_lu = ProfileLu::factor(&ops.k)?;
        let m_lu = ProfileLu::factor(&ops.m)?;
        let constraint = PressureConstraint::single(&ops.mean_vector);
        Ok(StokesContext {
            space,
            ops,
            tab: default_tabulation(),
            k_lu,
            m_lu,
            constraint,
        })
    }

    pub fn constraint(&self) -> &PressureConstraint {
        &self.constraint
    }

    fn check(sol: SaddleSolution, what: &'static str) -> Result<SaddleSolution> {
        if !sol.report.converged {
            return Err(Error::NotConverged {
                solver: what,
                iterations: sol.report.iterations,
                residual: sol.report.final_relative_residual,
            });
        }
        Ok(sol)
    }

    /// `K u + B^T p = rhs_u`, `B u = rhs_p`, zero-mean `p`.
    pub fn solve_stiffness_saddle(&self, rhs_u: &[f64], rhs_p: &[f64]) -> Result<SaddleSolution> {
        let o = &self.ops;
        let sol = saddle_solve_with(
            &self.k_lu,
            &o.k,
            &o.b,
            rhs_u,
            rhs_p,
            &self.constraint,
            SaddleOptions::symmetric(OPERATOR_TOL),
            None,
        )?;
        Self::check(sol, "stiffness saddle solve")
    }

    /// `M u + B^T p = rhs_u`, `B u = rhs_p`, zero-mean `p`.
    pub fn solve_mass_saddle(&self, rhs_u: &[f64], rhs_p: &[f64]) -> Result<SaddleSolution> {
        let o = &self.ops;
        let sol = saddle_solve_with(
            &self.m_lu,
            &o.m,
            &o.b,
            rhs_u,
            rhs_p,
            &self.constraint,
            SaddleOptions::symmetric(OPERATOR_TOL),
            None,
        )?;
        Self::check(sol, "mass saddle solve")
    }

    /// `||v||_{L^2}` of a free velocity vector.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        bilinear(&self.ops.m, v, v).max(0.0).sqrt()
    }

    /// `||grad v||_{L^2}` of a free velocity vector.
    pub fn h1_seminorm(&self, v: &[f64]) -> f64 {
        bilinear(&self.ops.k, v, v).max(0.0).sqrt()
    }

    /// `||B v||_2 / ||v||_M` (zero for `v = 0`).
    pub fn divergence_defect(&self, v: &[f64]) -> f64 {
        let bv = norm2(&self.ops.b.mul_vec(v));
        let n = self.l2_norm(v);
        if n == 0.0 {
            bv
        } else {
            bv / n
        }
    }

    /// The `V_h` membership predicate.
    pub fn in_vh(&self, v: &[f64]) -> bool {
        self.divergence_defect(v) <= VH_TOL
    }
}

/// Scalar P2 space with assembled, factorized operators (heat equation).
#[derive(Debug, Clone)]
pub struct HeatContext {
    pub space: FESpacePair,
    pub ops: ScalarOperators,
    pub tab: Tabulation,
    k_lu: ProfileLu,
}

impl HeatContext {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let space = FESpacePair::taylor_hood(mesh);
        if space.n_scalar_free() == 0 {
            return Err(Error::InvalidMesh("mesh has no interior nodes".into()));
        }
        let ops = assemble_scalar_operators(&space);
        let k_lu = ProfileLu::factor(&ops.k)?;
        Ok(HeatContext {
            space,
            ops,
            tab: default_tabulation(),
            k_lu,
        })
    }

    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        bilinear(&self.ops.m, v, v).max(0.0).sqrt()
    }

    pub fn h1_seminorm(&self, v: &[f64]) -> f64 {
        bilinear(&self.ops.k, v, v).max(0.0).sqrt()
    }
}

fn cg_or_fail(a: &crate::linalg::CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (x, rep) = cg_solve(a, b, 1e-12, 20 * a.nrows() + 100);
    if !rep.converged {
        return Err(Error::NotConverged {
            solver: "CG",
            iterations: rep.iterations,
            residual: rep.final_relative_residual,
        });
    }
    Ok(x)
}

/// `P_h f` onto the velocity space: `M x = load(f)`.
pub fn l2_project_vector(ctx: &StokesContext, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    let load = assemble_weak_vector(&ctx.space, &ctx.tab, |x| (f(x), [[0.0; 2]; 2]));
    cg_or_fail(&ctx.ops.m, &load)
}

/// `P_h f` onto the scalar space.
pub fn l2_project_scalar(ctx: &HeatContext, f: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
    let load = assemble_weak_scalar(&ctx.space, &ctx.tab, |x| (f(x), [0.0; 2]));
    cg_or_fail(&ctx.ops.m, &load)
}

/// Leray projection given the load vector `(u, phi_i)`:
/// `M u + B^T mu = load`, `B u = 0`.
pub fn leray_project_load(ctx: &StokesContext, load: &[f64]) -> Result<Vec<f64>> {
    Ok(ctx.solve_mass_saddle(load, &vec![0.0; ctx.space.n_p()])?.u)
}

/// `PP_h f` for a pointwise-evaluable field.
pub fn leray_project(ctx: &StokesContext, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    let load = assemble_weak_vector(&ctx.space, &ctx.tab, |x| (f(x), [[0.0; 2]; 2]));
    leray_project_load(ctx, &load)
}

/// `PP_h v` for a discrete velocity `v`.
pub fn leray_project_discrete(ctx: &StokesContext, v: &[f64]) -> Result<Vec<f64>> {
    leray_project_load(ctx, &ctx.ops.m.mul_vec(v))
}

/// Stokes–Ritz projection from assembled right-hand sides.
///
/// Solves `(grad u_h, grad v) - (p_h, div v) = rhs_u(v)`,
/// `(div u_h, q) = rhs_p(q)` and returns `(u_h, p_h)` with zero-mean `p_h`.
pub fn stokes_ritz_from_rhs(ctx: &StokesContext, rhs_u: &[f64], rhs_p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let sol = ctx.solve_stiffness_saddle(rhs_u, rhs_p)?;
    Ok((sol.u, sol.p.iter().map(|v| -v).collect()))
}

/// `R_h^S(u, p)` for exact fields given by `grad_u` and `p`.
pub fn stokes_ritz(
    ctx: &StokesContext,
    grad_u: impl Fn([f64; 2]) -> [[f64; 2]; 2],
    p: impl Fn([f64; 2]) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rhs_u = assemble_weak_vector(&ctx.space, &ctx.tab, |x| {
        let (g, q) = (grad_u(x), p(x));
        ([0.0; 2], [[g[0][0] - q, g[0][1]], [g[1][0], g[1][1] - q]])
    });
    let rhs_p = assemble_pressure_moments(&ctx.space, &ctx.tab, |x| {
        let g = grad_u(x);
        g[0][0] + g[1][1]
    });
    stokes_ritz_from_rhs(ctx, &rhs_u, &rhs_p)
}

/// `R_h^S` of a discrete pair `(v, q)`.
pub fn stokes_ritz_discrete(ctx: &StokesContext, v: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rhs_u = ctx.ops.k.mul_vec(v);
    for (r, bq) in rhs_u.iter_mut().zip(ctx.ops.b.tr_mul_vec(q)) {
        *r -= bq;
    }
    let rhs_p = ctx.ops.b.mul_vec(v);
    stokes_ritz_from_rhs(ctx, &rhs_u, &rhs_p)
}

/// Elliptic Ritz projection `R_h u`: `(grad R_h u, grad phi_i) = (grad u, grad phi_i)`.
pub fn elliptic_ritz(ctx: &HeatContext, grad_u: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    let rhs = assemble_weak_scalar(&ctx.space, &ctx.tab, |x| (0.0, grad_u(x)));
    Ok(ctx.k_lu.solve(&rhs))
}

/// `A_h v` for `v in V_h`: `M a + B^T mu = K v`, `B a = 0`.
pub fn apply_ah(ctx: &StokesContext, v: &[f64]) -> Result<Vec<f64>> {
    let defect = ctx.divergence_defect(v);
    if defect > VH_TOL {
        return Err(Error::NotDivergenceFree {
            residual: defect,
            limit: VH_TOL,
        });
    }
    Ok(ctx.solve_mass_saddle(&ctx.ops.k.mul_vec(v), &vec![0.0; ctx.space.n_p()])?.u)
}

/// `A_h^{-1} PP_h g`: `K w + B^T lambda = M g`, `B w = 0`.
pub fn solve_ah_inverse(ctx: &StokesContext, g: &[f64]) -> Result<Vec<f64>> {
    solve_ah_inverse_load(ctx, &ctx.ops.m.mul_vec(g))
}

/// `A_h^{-1} PP_h f` given the load vector `(f, phi_i)`.
pub fn solve_ah_inverse_load(ctx: &StokesContext, load: &[f64]) -> Result<Vec<f64>> {
    Ok(ctx.solve_stiffness_saddle(load, &vec![0.0; ctx.space.n_p()])?.u)
}

/// Smallest eigenvalue of `A_h`, i.e. of the pencil `(K, M)` restricted to `V_h`.
pub fn smallest_stokes_eigenvalue(ctx: &StokesContext) -> Result<EigenPair> {
    let zero_p = vec![0.0; ctx.space.n_p()];
    subspace_inverse_iteration(
        ctx.space.n_u_free(),
        4,
        &|x| ctx.ops.m.mul_vec(x),
        &|b| Ok(ctx.solve_stiffness_saddle(b, &zero_p)?.u),
        &|_| {},
        EIGEN_TOL,
        500,
        0x57_0c,
    )
}

/// Smallest eigenpair of `B K^{-1} B^T q = lambda M_p q` on zero-mean pressures.
pub fn inf_sup_eigenpair(ctx: &StokesContext) -> Result<EigenPair> {
    let np = ctx.space.n_p();
    if np < 2 {
        return Err(Error::InvalidMesh("pressure space too small".into()));
    }
    let zero_u = vec![0.0; ctx.space.n_u_free()];
    let mean = &ctx.ops.mean_vector;
    let area: f64 = mean.iter().sum();
    // M_p-orthogonal deflation of constants (mean_vector = M_p 1).
    let deflate = |q: &mut [f64]| {
        let c = crate::linalg::dot(mean, q) / area;
        q.iter_mut().for_each(|v| *v -= c);
    };
    subspace_inverse_iteration(
        np,
        4,
        &|x| ctx.ops.m_p.mul_vec(x),
        &|b| {
            // S p = B K^{-1} B^T p = b  <=>  saddle with rhs_u = 0, rhs_p = -b.
            let neg: Vec<f64> = b.iter().map(|v| -v).collect();
            Ok(ctx.solve_stiffness_saddle(&zero_u, &neg)?.p)
        },
        &deflate,
        EIGEN_TOL,
        500,
        0x1b_b5,
    )
}

/// Discrete inf-sup constant `beta_h`.
pub fn inf_sup_constant(ctx: &StokesContext) -> Result<f64> {
    Ok(inf_sup_eigenpair(ctx)?.value.max(0.0).sqrt())
}

/// `||grad PP_h v|| / ||grad v||` for an exact field with gradient `grad_v`.
pub fn leray_h1_ratio(
    ctx: &StokesContext,
    v: impl Fn([f64; 2]) -> [f64; 2],
    grad_v: impl Fn([f64; 2]) -> [[f64; 2]; 2],
) -> Result<(f64, f64)> {
    let proj = leray_project(ctx, &v)?;
    let num = ctx.h1_seminorm(&proj);
    let tab = crate::fespace::Tabulation::new(crate::fespace::quadrature_rule(8)?);
    let den = ctx
        .space
        .integrate_velocity(&vec![0.0; ctx.space.n_u_free()], &tab, |x, _, _| {
            grad_v(x).iter().flatten().map(|g| g * g).sum()
        })
        .sqrt();
    Ok((num, den))
}

//! Fully discrete dG(w) time stepping (w = 0, 1) for the transient Stokes
//! problem and the heat equation, and evaluators of the space-time bilinear
//! form in its primal and dual (integrated-by-parts) representations.
//!
//! The scheme marches interval by interval. On `I_m` with step `tau` the
//! unknowns are the temporal modes `U_0, ..., U_w` (interleaved as
//! `dof * (w + 1) + mode`), and the velocity block is
//!
//! ```text
//! sum_ij [ (D_ij + phi_i(0) phi_j(0)) M + tau G_ij K ]
//! ```
//!
//! with `D_ij = int phi_j' phi_i`, `G = diag(1, 1/3)`. The pressure enters
//! through `I (x) B^T` acting on rescaled modes `-tau G_ii P_i`; the right side
//! is `sum_k w_k phi_i(s_k) (f(t_k), .) + phi_i(0) M u_{m-1}^-` with `w + 2`
//! Gauss points per interval.

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_load_with, assemble_pressure_moments, assemble_scalar_load_with, assemble_weak_scalar,
    assemble_weak_vector,
};
use crate::error::{Error, Result};
use crate::fespace::{quadrature_rule, Tabulation};
use crate::linalg::{
    bilinear, dot, saddle_solve_with, CsrMatrix, PressureConstraint, ProfileLu, SaddleOptions,
};
use crate::manufactured::ManufacturedProblem;
use crate::operators::{l2_project_scalar, leray_project_discrete, HeatContext, StokesContext};
use crate::timegrid::{time_quadrature, IntervalQuadrature, SpaceTimeCoefficients, TemporalBasis, TimePartition};

/// Relative tolerance of the interval saddle solves.
pub const TRANSIENT_TOL: f64 = 1e-11;

/// Aggregate solver statistics of one time march.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub intervals: usize,
    pub factorizations: usize,
    pub outer_iterations: usize,
    pub max_outer_iterations: usize,
    pub max_residual: f64,
    /// Largest `||B U_j|| / ||U_j||_M` over all velocity modes (Stokes).
    pub max_divergence_defect: f64,
}

/// Discrete space-time solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeSolution {
    pub velocity: SpaceTimeCoefficients,
    /// Physical pressure modes (Stokes only).
    pub pressure: Option<SpaceTimeCoefficients>,
    /// The discrete initial value `u_0^-` the march started from.
    pub initial: Vec<f64>,
    pub stats: SolveStats,
}

/// Per-node summary for debugging dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub m: usize,
    pub t: f64,
    /// `||u_m^-||_M` (`u_0^-` for `m = 0`).
    pub left_norm: f64,
    /// `||[u]_m||_M`, with `[u]_0 = u_0^+ - u_0^-`; absent at the final node.
    pub jump_norm: Option<f64>,
}

impl SpaceTimeSolution {
    pub fn partition(&self) -> &TimePartition {
        &self.velocity.partition
    }

    pub fn degree(&self) -> usize {
        self.velocity.basis.degree()
    }

    pub fn as_argument(&self) -> FormArgument<'_> {
        FormArgument {
            velocity: &self.velocity,
            pressure: self.pressure.as_ref(),
        }
    }

    /// `[u]_m` for `0 <= m < M`, using `u_0^-` at the initial node.
    pub fn jump(&self, m: usize) -> Vec<f64> {
        let right = self.velocity.right_trace(m);
        let left = if m == 0 { self.initial.clone() } else { self.velocity.left_trace(m) };
        right.iter().zip(&left).map(|(a, b)| a - b).collect()
    }

    /// Norms of the left traces and jumps in the mass inner product `mass`.
    pub fn node_records(&self, mass: &CsrMatrix) -> Vec<NodeRecord> {
        let norm = |v: &[f64]| bilinear(mass, v, v).max(0.0).sqrt();
        let nodes = self.partition().nodes();
        let count = self.velocity.num_intervals();
        (0..=count)
            .map(|m| NodeRecord {
                m,
                t: nodes[m],
                left_norm: if m == 0 { norm(&self.initial) } else { norm(&self.velocity.left_trace(m)) },
                jump_norm: (m < count).then(|| norm(&self.jump(m))),
            })
            .collect()
    }
}

/// Temporal coupling matrices: `S_ij = D_ij + phi_i(0) phi_j(0)` and `tau G`.
fn temporal_blocks(basis: &TemporalBasis, tau: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let r = basis.len();
    let d = basis.derivative_matrix();
    let mut s = vec![vec![0.0; r]; r];
    let mut g = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in 0..r {
            s[i][j] = d[i][j] + basis.value(i, 0.0) * basis.value(j, 0.0);
        }
        g[i][i] = tau * basis.norm_sq(i);
    }
    (s, g)
}

/// The interval system matrix (velocity block) for step `tau`.
pub fn interval_matrix(m: &CsrMatrix, k: &CsrMatrix, basis: &TemporalBasis, tau: f64) -> CsrMatrix {
    let (s, g) = temporal_blocks(basis, tau);
    CsrMatrix::kron_interleaved(basis.len(), &[(&s, m), (&g, k)])
}

/// Interleaved interval right-hand side.
fn interval_rhs(
    m: &CsrMatrix,
    basis: &TemporalBasis,
    quad: &IntervalQuadrature,
    load: &dyn Fn(f64) -> Vec<f64>,
    previous: &[f64],
) -> Vec<f64> {
    let r = basis.len();
    let n = previous.len();
    let mut out = vec![0.0; n * r];
    for ((&s, &t), &w) in quad.local.iter().zip(&quad.times).zip(&quad.weights) {
        let l = load(t);
        for i in 0..r {
            let c = w * basis.value(i, s);
            for (dof, v) in l.iter().enumerate() {
                out[dof * r + i] += c * v;
            }
        }
    }
    let mp = m.mul_vec(previous);
    for i in 0..r {
        let c = basis.value(i, 0.0);
        for (dof, v) in mp.iter().enumerate() {
            out[dof * r + i] += c * v;
        }
    }
    out
}

fn deinterleave(x: &[f64], r: usize) -> Vec<Vec<f64>> {
    (0..r).map(|mode| x.iter().skip(mode).step_by(r).copied().collect()).collect()
}

/// Factorizations keyed by the exact step size.
struct FactorCache {
    entries: Vec<(u64, ProfileLu)>,
}

impl FactorCache {
    fn new() -> Self {
        FactorCache { entries: Vec::new() }
    }

    fn get(&mut self, tau: f64, build: impl FnOnce() -> Result<ProfileLu>) -> Result<(&ProfileLu, bool)> {
        let key = tau.to_bits();
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            return Ok((&self.entries[pos].1, false));
        }
        self.entries.push((key, build()?));
        Ok((&self.entries.last().expect("just pushed").1, true))
    }
}

fn check_inputs(partition: &TimePartition, w: usize, initial: &[f64], dim: usize) -> Result<TemporalBasis> {
    if w > 1 {
        return Err(Error::InvalidArgument(format!("dG({w}) is not supported; use w = 0 or 1")));
    }
    if initial.len() != dim {
        return Err(Error::Mismatch(format!("initial value has {} entries, expected {dim}", initial.len())));
    }
    let _ = partition;
    TemporalBasis::new(w)
}

/// dG(w) for `M u' + K u = f` with an algebraic load `load(t)`.
pub fn solve_scalar_dg(
    m: &CsrMatrix,
    k: &CsrMatrix,
    partition: &TimePartition,
    w: usize,
    load: &dyn Fn(f64) -> Vec<f64>,
    initial: &[f64],
) -> Result<SpaceTimeSolution> {
    let basis = check_inputs(partition, w, initial, m.nrows())?;
    let r = basis.len();
    let quads = time_quadrature(partition, w + 2)?;
    let mut cache = FactorCache::new();
    let mut stats = SolveStats::default();
    let mut previous = initial.to_vec();
    let mut coeffs = Vec::with_capacity(partition.num_intervals());
    for (i, quad) in quads.iter().enumerate() {
        let tau = partition.step(i);
        let wrap = |e: Error| Error::IntervalSolve {
            interval: i,
            source: Box::new(e),
        };
        let (lu, fresh) = cache.get(tau, || ProfileLu::factor(&interval_matrix(m, k, &basis, tau))).map_err(wrap)?;
        stats.factorizations += usize::from(fresh);
        let x = lu.solve(&interval_rhs(m, &basis, quad, load, &previous));
        let modes = deinterleave(&x, r);
        previous = vec![0.0; m.nrows()];
        for mode in &modes {
            for (p, v) in previous.iter_mut().zip(mode) {
                *p += v;
            }
        }
        coeffs.push(modes);
        stats.intervals += 1;
    }
    Ok(SpaceTimeSolution {
        velocity: SpaceTimeCoefficients::new(partition.clone(), basis, coeffs)?,
        pressure: None,
        initial: initial.to_vec(),
        stats,
    })
}

/// dG(w) for transient Stokes with an assembled load `load(t) = (f(t), phi_i)`
/// and discrete initial value `initial` (expected in `V_h`).
pub fn solve_stokes_dg_with(
    ctx: &StokesContext,
    partition: &TimePartition,
    w: usize,
    load: &dyn Fn(f64) -> Vec<f64>,
    initial: &[f64],
    rel_tol: f64,
) -> Result<SpaceTimeSolution> {
    let ops = &ctx.ops;
    let n = ops.m.nrows();
    let basis = check_inputs(partition, w, initial, n)?;
    let r = basis.len();
    let quads = time_quadrature(partition, w + 2)?;
    let identity: Vec<Vec<f64>> = (0..r).map(|i| (0..r).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let b_big = CsrMatrix::kron_interleaved(r, &[(&identity, &ops.b)]);
    let constraint = PressureConstraint::interleaved(&ops.mean_vector, r);
    let opts = if r == 1 {
        SaddleOptions::symmetric(rel_tol)
    } else {
        SaddleOptions::nonsymmetric(rel_tol)
    };
    let zero_p = vec![0.0; ops.b.nrows() * r];

    let mut cache = FactorCache::new();
    let mut stats = SolveStats::default();
    let mut previous = initial.to_vec();
    let mut warm: Option<Vec<f64>> = None;
    let mut vel = Vec::with_capacity(partition.num_intervals());
    let mut pres = Vec::with_capacity(partition.num_intervals());
    for (i, quad) in quads.iter().enumerate() {
        let tau = partition.step(i);
        let wrap = |e: Error| Error::IntervalSolve {
            interval: i,
            source: Box::new(e),
        };
        let a = interval_matrix(&ops.m, &ops.k, &basis, tau);
        let (lu, fresh) = cache.get(tau, || ProfileLu::factor(&a)).map_err(wrap)?;
        stats.factorizations += usize::from(fresh);
        let rhs = interval_rhs(&ops.m, &basis, quad, load, &previous);
        let sol = saddle_solve_with(lu, &a, &b_big, &rhs, &zero_p, &constraint, opts, warm.as_deref()).map_err(wrap)?;
        if !sol.report.converged {
            return Err(wrap(Error::NotConverged {
                solver: "interval saddle solve",
                iterations: sol.report.iterations,
                residual: sol.report.final_relative_residual,
            }));
        }
        stats.outer_iterations += sol.report.iterations;
        stats.max_outer_iterations = stats.max_outer_iterations.max(sol.report.iterations);
        stats.max_residual = stats.max_residual.max(sol.report.final_relative_residual);

        let modes = deinterleave(&sol.u, r);
        let scaled = deinterleave(&sol.p, r);
        let physical: Vec<Vec<f64>> = scaled
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let c = -1.0 / (tau * basis.norm_sq(j));
                p.iter().map(|v| c * v).collect()
            })
            .collect();
        previous = vec![0.0; n];
        for mode in &modes {
            stats.max_divergence_defect = stats.max_divergence_defect.max(ctx.divergence_defect(mode));
            for (p, v) in previous.iter_mut().zip(mode) {
                *p += v;
            }
        }
        warm = Some(sol.p);
        vel.push(modes);
        pres.push(physical);
        stats.intervals += 1;
    }
    Ok(SpaceTimeSolution {
        velocity: SpaceTimeCoefficients::new(partition.clone(), basis.clone(), vel)?,
        pressure: Some(SpaceTimeCoefficients::new(partition.clone(), basis, pres)?),
        initial: initial.to_vec(),
        stats,
    })
}

/// Discrete Stokes initial value: nodal interpolant, then Leray projection.
pub fn stokes_initial(ctx: &StokesContext, u0: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    leray_project_discrete(ctx, &ctx.space.interpolate_velocity_free(u0))
}

/// Discrete heat initial value: `L^2` projection.
pub fn heat_initial(ctx: &HeatContext, u0: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
    l2_project_scalar(ctx, u0)
}

/// dG(w) for a Stokes manufactured problem.
pub fn solve_stokes_dg(
    ctx: &StokesContext,
    problem: &ManufacturedProblem,
    partition: &TimePartition,
    w: usize,
) -> Result<SpaceTimeSolution> {
    let initial = stokes_initial(ctx, |x| problem.u0(x))?;
    let load = |t: f64| assemble_load_with(&ctx.space, &ctx.tab, |t, x| problem.f(t, x), t);
    solve_stokes_dg_with(ctx, partition, w, &load, &initial, TRANSIENT_TOL)
}

/// dG(w) for a heat manufactured problem.
pub fn solve_heat_dg(
    ctx: &HeatContext,
    problem: &ManufacturedProblem,
    partition: &TimePartition,
    w: usize,
) -> Result<SpaceTimeSolution> {
    let initial = heat_initial(ctx, |x| problem.scalar_u0(x))?;
    let load = |t: f64| assemble_scalar_load_with(&ctx.space, &ctx.tab, |t, x| problem.scalar_f(t, x), t);
    solve_scalar_dg(&ctx.ops.m, &ctx.ops.k, partition, w, &load, &initial)
}

/// Which representation of the space-time bilinear form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Primal,
    Dual,
}

/// Spatial matrices the form is built from; `b` is absent for the heat equation.
#[derive(Debug, Clone, Copy)]
pub struct FormOperators<'a> {
    pub m: &'a CsrMatrix,
    pub k: &'a CsrMatrix,
    pub b: Option<&'a CsrMatrix>,
}

impl<'a> FormOperators<'a> {
    pub fn stokes(ctx: &'a StokesContext) -> Self {
        FormOperators {
            m: &ctx.ops.m,
            k: &ctx.ops.k,
            b: Some(&ctx.ops.b),
        }
    }

    pub fn heat(ctx: &'a HeatContext) -> Self {
        FormOperators {
            m: &ctx.ops.m,
            k: &ctx.ops.k,
            b: None,
        }
    }
}

/// A discrete (velocity, pressure) pair; pressure omitted for heat or for
/// the velocity-only form on `V_h`.
#[derive(Debug, Clone, Copy)]
pub struct FormArgument<'a> {
    pub velocity: &'a SpaceTimeCoefficients,
    pub pressure: Option<&'a SpaceTimeCoefficients>,
}

fn same_grid(a: &SpaceTimeCoefficients, b: &SpaceTimeCoefficients) -> bool {
    a.partition.nodes() == b.partition.nodes() && a.basis == b.basis
}

fn check_form(ops: &FormOperators, trial: &FormArgument, test: &FormArgument) -> Result<()> {
    let n = ops.m.nrows();
    if !same_grid(trial.velocity, test.velocity) || trial.velocity.dim() != n || test.velocity.dim() != n {
        return Err(Error::Mismatch("form arguments live on different discretizations".into()));
    }
    for p in [trial.pressure, test.pressure].into_iter().flatten() {
        let b = ops.b.ok_or_else(|| Error::Mismatch("pressure given without a divergence operator".into()))?;
        if !same_grid(p, trial.velocity) || p.dim() != b.nrows() {
            return Err(Error::Mismatch("pressure lives on a different discretization".into()));
        }
    }
    Ok(())
}

/// The space-time bilinear form evaluated on discrete arguments.
///
/// Primal: `sum (d_t u, v) + (grad u, grad v) - (p, div v) + (div u, q)
/// + sum ([u]_{m-1}, v_{m-1}^+) + (u_0^+, v_0^+)`.
/// Dual: `-sum (u, d_t v) + (grad u, grad v) - (p, div v) + (div u, q)
/// - sum (u_m^-, [v]_m) + (u_M^-, v_M^-)`.
pub fn eval_form(
    rep: Representation,
    ops: &FormOperators,
    trial: &FormArgument,
    test: &FormArgument,
) -> Result<f64> {
    check_form(ops, trial, test)?;
    let (u, v) = (trial.velocity, test.velocity);
    let basis = &u.basis;
    let r = basis.len();
    let d = basis.derivative_matrix();
    let count = u.num_intervals();
    let mut total = 0.0;
    for i in 0..count {
        let tau = u.partition.step(i);
        let (uc, vc) = (&u.coeffs[i], &v.coeffs[i]);
        let mu: Vec<Vec<f64>> = uc.iter().map(|c| ops.m.mul_vec(c)).collect();
        for a in 0..r {
            for b in 0..r {
                if d[a][b] != 0.0 {
                    total += match rep {
                        // (d_t u, v): test mode a, trial mode b.
                        Representation::Primal => d[a][b] * dot(&vc[a], &mu[b]),
                        // -(u, d_t v): trial mode a, test mode b.
                        Representation::Dual => -d[a][b] * dot(&vc[b], &mu[a]),
                    };
                }
            }
        }
        for j in 0..r {
            let g = tau * basis.norm_sq(j);
            total += g * bilinear(ops.k, &vc[j], &uc[j]);
            if let Some(b) = ops.b {
                if let Some(p) = trial.pressure {
                    total -= g * dot(&b.mul_vec(&vc[j]), &p.coeffs[i][j]);
                }
                if let Some(q) = test.pressure {
                    total += g * dot(&b.mul_vec(&uc[j]), &q.coeffs[i][j]);
                }
            }
        }
    }
    match rep {
        Representation::Primal => {
            for m in 0..count {
                let vp = v.right_trace(m);
                let jump = if m == 0 { u.right_trace(0) } else { u.jump(m) };
                total += bilinear(ops.m, &jump, &vp);
            }
        }
        Representation::Dual => {
            for m in 1..count {
                total -= bilinear(ops.m, &u.left_trace(m), &v.jump(m));
            }
            total += bilinear(ops.m, &u.left_trace(count), &v.left_trace(count));
        }
    }
    Ok(total)
}

/// `sum_m sum_k w_k (load(t_k), v(t_k)) + (initial, v_0^+)_M`, with the
/// scheme's own temporal quadrature (`w + 2` points).
pub fn discrete_rhs(
    ops: &FormOperators,
    load: &dyn Fn(f64) -> Vec<f64>,
    initial: &[f64],
    test: &SpaceTimeCoefficients,
) -> Result<f64> {
    let quads = time_quadrature(&test.partition, test.basis.degree() + 2)?;
    let mut total = 0.0;
    for (i, q) in quads.iter().enumerate() {
        for (&s, (&t, &w)) in q.local.iter().zip(q.times.iter().zip(&q.weights)) {
            total += w * dot(&load(t), &test.eval_local(i, s));
        }
    }
    Ok(total + bilinear(ops.m, initial, &test.right_trace(0)))
}

/// Time points and spatial quadrature degree of the exact-form residual.
const EXACT_TIME_POINTS: usize = 6;
const EXACT_SPACE_DEGREE: usize = 10;

/// Scaled residuals `|B((u, p), (v, q)) - (f, v) - (u_0, v_0^+)| / scale`
/// with the exact manufactured `(u, p)` and discrete tests `(v, q)`; `scale`
/// is the sum of the magnitudes of the individual terms.
pub fn exact_form_residuals(
    ctx: &StokesContext,
    problem: &ManufacturedProblem,
    tests: &[(SpaceTimeCoefficients, SpaceTimeCoefficients)],
) -> Result<Vec<f64>> {
    let Some((first, _)) = tests.first() else {
        return Ok(Vec::new());
    };
    let partition = &first.partition;
    let tab = Tabulation::new(quadrature_rule(EXACT_SPACE_DEGREE)?);
    let quads = time_quadrature(partition, EXACT_TIME_POINTS)?;
    let mut residual = vec![0.0; tests.len()];
    let mut scale = vec![0.0; tests.len()];
    for (v, q) in tests {
        if !same_grid(v, first) || !same_grid(q, first) {
            return Err(Error::Mismatch("test functions on different time grids".into()));
        }
    }
    for (i, quad) in quads.iter().enumerate() {
        for (&s, (&t, &w)) in quad.local.iter().zip(quad.times.iter().zip(&quad.weights)) {
            // Jumps of the continuous exact field vanish; (u_0, v_0^+) cancels.
            let terms = [
                assemble_weak_vector(&ctx.space, &tab, |x| (problem.dt_u(t, x), [[0.0; 2]; 2])),
                assemble_weak_vector(&ctx.space, &tab, |x| ([0.0; 2], problem.grad_u(t, x))),
                assemble_weak_vector(&ctx.space, &tab, |x| {
                    let p = problem.p(t, x);
                    ([0.0; 2], [[-p, 0.0], [0.0, -p]])
                }),
                assemble_weak_vector(&ctx.space, &tab, |x| {
                    let f = problem.f(t, x);
                    ([-f[0], -f[1]], [[0.0; 2]; 2])
                }),
            ];
            let div = assemble_pressure_moments(&ctx.space, &tab, |x| {
                let g = problem.grad_u(t, x);
                g[0][0] + g[1][1]
            });
            for (idx, (v, q)) in tests.iter().enumerate() {
                let (vv, qq) = (v.eval_local(i, s), q.eval_local(i, s));
                for term in &terms {
                    let c = w * dot(term, &vv);
                    residual[idx] += c;
                    scale[idx] += c.abs();
                }
                let c = w * dot(&div, &qq);
                residual[idx] += c;
                scale[idx] += c.abs();
            }
        }
    }
    Ok(residual
        .iter()
        .zip(&scale)
        .map(|(r, s)| if *s > 0.0 { r.abs() / s } else { r.abs() })
        .collect())
}

/// Heat analogue of [`exact_form_residuals`] (no pressure).
pub fn exact_heat_form_residuals(
    ctx: &HeatContext,
    problem: &ManufacturedProblem,
    tests: &[SpaceTimeCoefficients],
) -> Result<Vec<f64>> {
    let Some(first) = tests.first() else {
        return Ok(Vec::new());
    };
    let tab = Tabulation::new(quadrature_rule(EXACT_SPACE_DEGREE)?);
    let quads = time_quadrature(&first.partition, EXACT_TIME_POINTS)?;
    let mut residual = vec![0.0; tests.len()];
    let mut scale = vec![0.0; tests.len()];
    for (i, quad) in quads.iter().enumerate() {
        for (&s, (&t, &w)) in quad.local.iter().zip(quad.times.iter().zip(&quad.weights)) {
            let terms = [
                assemble_weak_scalar(&ctx.space, &tab, |x| (problem.scalar_dt(t, x), [0.0; 2])),
                assemble_weak_scalar(&ctx.space, &tab, |x| (0.0, problem.scalar_grad(t, x))),
                assemble_weak_scalar(&ctx.space, &tab, |x| (-problem.scalar_f(t, x), [0.0; 2])),
            ];
            for (idx, v) in tests.iter().enumerate() {
                let vv = v.eval_local(i, s);
                for term in &terms {
                    let c = w * dot(term, &vv);
                    residual[idx] += c;
                    scale[idx] += c.abs();
                }
            }
        }
    }
    Ok(residual
        .iter()
        .zip(&scale)
        .map(|(r, s)| if *s > 0.0 { r.abs() / s } else { r.abs() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_load;
    use crate::linalg::norm2;
    use crate::manufactured::{make_stokes_vortex, preset, TimeProfile};
    use crate::mesh::{build_domain, DomainKind};
    use crate::operators::stokes_ritz_from_rhs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stokes_ctx(n: usize) -> StokesContext {
        StokesContext::new(&build_domain(DomainKind::UnitSquare, n).unwrap()).unwrap()
    }

    fn heat_ctx(n: usize) -> HeatContext {
        HeatContext::new(&build_domain(DomainKind::UnitSquare, n).unwrap()).unwrap()
    }

    fn random_field(partition: &TimePartition, w: usize, dim: usize, rng: &mut ChaCha8Rng) -> SpaceTimeCoefficients {
        let basis = TemporalBasis::new(w).unwrap();
        let coeffs = (0..partition.num_intervals())
            .map(|_| (0..=w).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
            .collect();
        SpaceTimeCoefficients::new(partition.clone(), basis, coeffs).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn one_dof_backward_euler_step() {
        let m = CsrMatrix::identity(1);
        let k = CsrMatrix::from_diagonal(&[1.0]);
        let part = TimePartition::uniform(0.1, 1).unwrap();
        let sol = solve_scalar_dg(&m, &k, &part, 0, &|_| vec![0.0], &[1.0]).unwrap();
        assert!((sol.velocity.left_trace(1)[0] - 1.0 / 1.1).abs() <= 1e-14);
    }

    #[test]
    fn dg1_matches_radau_iia_on_one_dof() {
        // dG(1) endpoint values coincide with the 3rd-order Radau IIA stability
        // function R(z) = (1 + z/3) / (1 - 2z/3 + z^2/6).
        let m = CsrMatrix::identity(1);
        let k = CsrMatrix::from_diagonal(&[2.0]);
        let part = TimePartition::uniform(0.5, 1).unwrap();
        let sol = solve_scalar_dg(&m, &k, &part, 1, &|_| vec![0.0], &[1.0]).unwrap();
        let z = -1.0;
        let expected = (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0);
        assert!((sol.velocity.left_trace(1)[0] - expected).abs() <= 1e-14);
    }

    #[test]
    fn steady_state_reproduced() {
        let h = heat_ctx(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: Vec<f64> = (0..h.space.n_scalar_free()).map(|_| rng.gen_range(0.5..1.5)).collect();
        let kc = h.ops.k.mul_vec(&c);
        let part = TimePartition::uniform(1.0, 5).unwrap();
        for w in 0..=1 {
            let sol = solve_scalar_dg(&h.ops.m, &h.ops.k, &part, w, &|_| kc.clone(), &c).unwrap();
            for i in 0..part.num_intervals() {
                let d: Vec<f64> = sol.velocity.eval_local(i, 0.3).iter().zip(&c).map(|(a, b)| a - b).collect();
                assert!(norm2(&d) <= 1e-12 * norm2(&c));
            }
        }
    }

    #[test]
    fn heat_energy_decays_without_forcing() {
        let h = heat_ctx(4);
        let initial = heat_initial(&h, |x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * (7.0 * x[0]).cos()).unwrap();
        let part = TimePartition::from_nodes(vec![0.0, 0.01, 0.05, 0.1, 0.3, 0.31, 1.0]).unwrap();
        for w in 0..=1 {
            let sol = solve_scalar_dg(&h.ops.m, &h.ops.k, &part, w, &|_| vec![0.0; initial.len()], &initial).unwrap();
            let recs = sol.node_records(&h.ops.m);
            for pair in recs.windows(2) {
                assert!(pair[1].left_norm <= pair[0].left_norm * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let c = stokes_ctx(2);
        let zero = |_: f64, _: [f64; 2]| [0.0, 0.0];
        let part = TimePartition::uniform(1.0, 3).unwrap();
        for w in 0..=1 {
            let load = |t: f64| assemble_load(&c.space, zero, t);
            let sol = solve_stokes_dg_with(&c, &part, w, &load, &vec![0.0; c.space.n_u_free()], TRANSIENT_TOL).unwrap();
            assert!(sol.velocity.coeffs.iter().flatten().flatten().all(|&v| v == 0.0));
            assert!(sol.pressure.unwrap().coeffs.iter().flatten().flatten().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn steady_stokes_data_stays_stationary() {
        let c = stokes_ctx(4);
        let prob = make_stokes_vortex(TimeProfile::Affine { a: 1.0, b: 0.0 });
        let load_vec = assemble_load(&c.space, |t, x| prob.f(t, x), 0.0);
        let (stationary, p_stat) = stokes_ritz_from_rhs(&c, &load_vec, &vec![0.0; c.space.n_p()]).unwrap();
        let part = TimePartition::uniform(1.0, 4).unwrap();
        for w in 0..=1 {
            let sol = solve_stokes_dg_with(&c, &part, w, &|_| load_vec.clone(), &stationary, TRANSIENT_TOL).unwrap();
            for m in 1..=4 {
                let d: Vec<f64> =
                    sol.velocity.left_trace(m).iter().zip(&stationary).map(|(a, b)| a - b).collect();
                assert!(norm2(&d) <= 1e-8 * norm2(&stationary), "w={w} m={m}");
            }
            let pres = sol.pressure.unwrap();
            let d: Vec<f64> = pres.eval_local(2, 0.5).iter().zip(&p_stat).map(|(a, b)| a - b).collect();
            assert!(norm2(&d) <= 1e-7 * norm2(&p_stat), "w={w} pressure");
        }
    }

    #[test]
    fn stokes_solution_modes_are_divergence_free() {
        let c = stokes_ctx(3);
        let prob = preset("stokes_vortex_exp").unwrap();
        let part = TimePartition::uniform(1.0, 4).unwrap();
        for w in 0..=1 {
            let sol = solve_stokes_dg(&c, &prob, &part, w).unwrap();
            assert!(sol.stats.max_divergence_defect <= crate::operators::VH_TOL);
            for modes in &sol.velocity.coeffs {
                assert!(modes.iter().all(|u| c.in_vh(u)));
            }
        }
    }

    #[test]
    fn causality_truncated_forcing() {
        let c = stokes_ctx(3);
        let prob = preset("stokes_vortex_exp").unwrap();
        let part = TimePartition::uniform(1.0, 6).unwrap();
        let initial = stokes_initial(&c, |x| prob.u0(x)).unwrap();
        let tk = part.nodes()[3];
        let full = |t: f64| assemble_load(&c.space, |t, x| prob.f(t, x), t);
        let cut = |t: f64| {
            if t > tk {
                vec![0.0; c.space.n_u_free()]
            } else {
                full(t)
            }
        };
        let a = solve_stokes_dg_with(&c, &part, 1, &full, &initial, TRANSIENT_TOL).unwrap();
        let b = solve_stokes_dg_with(&c, &part, 1, &cut, &initial, TRANSIENT_TOL).unwrap();
        assert_eq!(a.velocity.coeffs[..3], b.velocity.coeffs[..3]);
        assert_eq!(a.pressure.as_ref().unwrap().coeffs[..3], b.pressure.as_ref().unwrap().coeffs[..3]);
        assert_ne!(a.velocity.coeffs[5], b.velocity.coeffs[5]);
    }

    #[test]
    fn primal_equals_dual() {
        let c = stokes_ctx(2);
        let ops = FormOperators::stokes(&c);
        let part = TimePartition::from_nodes(vec![0.0, 0.2, 0.5, 0.55, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for w in 0..=1 {
            for _ in 0..10 {
                let (u, p) = (random_field(&part, w, c.space.n_u_free(), &mut rng), random_field(&part, w, c.space.n_p(), &mut rng));
                let (v, q) = (random_field(&part, w, c.space.n_u_free(), &mut rng), random_field(&part, w, c.space.n_p(), &mut rng));
                let trial = FormArgument { velocity: &u, pressure: Some(&p) };
                let test = FormArgument { velocity: &v, pressure: Some(&q) };
                let a = eval_form(Representation::Primal, &ops, &trial, &test).unwrap();
                let b = eval_form(Representation::Dual, &ops, &trial, &test).unwrap();
                assert!(rel(a, b) <= 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn form_rejects_mismatch_and_zero_trial() {
        let c = stokes_ctx(2);
        let ops = FormOperators::stokes(&c);
        let p1 = TimePartition::uniform(1.0, 2).unwrap();
        let p2 = TimePartition::uniform(1.0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(&p1, 0, c.space.n_u_free(), &mut rng);
        let v = random_field(&p2, 0, c.space.n_u_free(), &mut rng);
        let a = FormArgument { velocity: &u, pressure: None };
        let b = FormArgument { velocity: &v, pressure: None };
        assert!(matches!(eval_form(Representation::Primal, &ops, &a, &b), Err(Error::Mismatch(_))));
        let zero = SpaceTimeCoefficients::zeros(&p1, TemporalBasis::new(0).unwrap(), c.space.n_u_free());
        let z = FormArgument { velocity: &zero, pressure: None };
        assert_eq!(eval_form(Representation::Primal, &ops, &z, &a).unwrap(), 0.0);
    }

    #[test]
    fn computed_solution_satisfies_discrete_equations() {
        let c = stokes_ctx(3);
        let ops = FormOperators::stokes(&c);
        let prob = preset("stokes_vortex_exp").unwrap();
        let part = TimePartition::uniform(1.0, 3).unwrap();
        let load = |t: f64| assemble_load_with(&c.space, &c.tab, |t, x| prob.f(t, x), t);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for w in 0..=1 {
            let sol = solve_stokes_dg(&c, &prob, &part, w).unwrap();
            for _ in 0..5 {
                let v = random_field(&part, w, c.space.n_u_free(), &mut rng);
                let q = random_field(&part, w, c.space.n_p(), &mut rng);
                let test = FormArgument { velocity: &v, pressure: Some(&q) };
                let lhs = eval_form(Representation::Primal, &ops, &sol.as_argument(), &test).unwrap();
                let rhs = discrete_rhs(&ops, &load, &sol.initial, &v).unwrap();
                assert!(rel(lhs, rhs) <= 1e-8, "w={w}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn exact_solution_satisfies_continuous_form() {
        let c = stokes_ctx(3);
        let prob = preset("stokes_vortex_exp").unwrap();
        let part = TimePartition::uniform(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tests: Vec<_> = (0..4)
            .map(|_| (random_field(&part, 1, c.space.n_u_free(), &mut rng), random_field(&part, 1, c.space.n_p(), &mut rng)))
            .collect();
        let res = exact_form_residuals(&c, &prob, &tests).unwrap();
        assert!(res.iter().all(|&r| r <= 1e-7), "{res:?}");
    }
}

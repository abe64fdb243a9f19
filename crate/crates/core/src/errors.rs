//! Space-time error norms, the discrete stability functionals, the
//! best-approximation terms, and pairwise convergence rates.

use serde::{Deserialize, Serialize};

use crate::assembly::assemble_load_with;
use crate::error::{Error, Result};
use crate::fespace::{FESpacePair, Tabulation};
use crate::linalg::bilinear;
use crate::manufactured::{Equation, ManufacturedProblem};
use crate::operators::{
    apply_ah, elliptic_ritz, leray_project_load, solve_ah_inverse, solve_ah_inverse_load, stokes_ritz, HeatContext,
    StokesContext,
};
use crate::timegrid::{p_tau, pi_tau, time_quadrature, SpaceTimeCoefficients, TimePartition};
use crate::transient::SpaceTimeSolution;

/// Gauss points per interval for error integrals.
pub const ERROR_TIME_POINTS: usize = 5;

/// Which space-time norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `L^2(I; L^2)`.
    L2l2,
    /// `L^2(I; H^1)` seminorm.
    L2h1,
    /// `max` over time quadrature points of the `L^2` norm.
    Linfl2Sampled,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::L2l2 => "l2l2",
            NormKind::L2h1 => "l2h1",
            NormKind::Linfl2Sampled => "linfl2_sampled",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2l2" => Ok(NormKind::L2l2),
            "l2h1" => Ok(NormKind::L2h1),
            "linfl2_sampled" => Ok(NormKind::Linfl2Sampled),
            other => Err(Error::Config(format!("unknown norm '{other}' (expected l2l2, l2h1, linfl2_sampled)"))),
        }
    }
}

/// Space-time error norms with per-interval breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2l2: f64,
    pub l2h1: f64,
    pub linfl2_sampled: f64,
    pub per_interval_l2l2: Vec<f64>,
    pub per_interval_l2h1: Vec<f64>,
}

impl ErrorReport {
    pub fn get(&self, norm: NormKind) -> f64 {
        match norm {
            NormKind::L2l2 => self.l2l2,
            NormKind::L2h1 => self.l2h1,
            NormKind::Linfl2Sampled => self.linfl2_sampled,
        }
    }

    fn from_squares(l2: Vec<f64>, h1: Vec<f64>, linf_sq: f64) -> Self {
        ErrorReport {
            l2l2: l2.iter().sum::<f64>().sqrt(),
            l2h1: h1.iter().sum::<f64>().sqrt(),
            linfl2_sampled: linf_sq.sqrt(),
            per_interval_l2l2: l2.into_iter().map(f64::sqrt).collect(),
            per_interval_l2h1: h1.into_iter().map(f64::sqrt).collect(),
        }
    }
}

fn sq_diff2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn sq_diff22(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    sq_diff2(a[0], b[0]) + sq_diff2(a[1], b[1])
}

/// Error of a discrete velocity field against exact `u(t, x)`, `grad u(t, x)`.
pub fn vector_error(
    space: &FESpacePair,
    tab: &Tabulation,
    field: &SpaceTimeCoefficients,
    u: impl Fn(f64, [f64; 2]) -> [f64; 2],
    grad: impl Fn(f64, [f64; 2]) -> [[f64; 2]; 2],
) -> Result<ErrorReport> {
    let quads = time_quadrature(&field.partition, ERROR_TIME_POINTS)?;
    let (mut l2, mut h1, mut linf) = (Vec::new(), Vec::new(), 0.0_f64);
    for (i, q) in quads.iter().enumerate() {
        let (mut a, mut b) = (0.0, 0.0);
        for (&s, (&t, &w)) in q.local.iter().zip(q.times.iter().zip(&q.weights)) {
            let v = field.eval_local(i, s);
            let e0 = space.integrate_velocity(&v, tab, |x, uh, _| sq_diff2(u(t, x), uh));
            let e1 = space.integrate_velocity(&v, tab, |x, _, gh| sq_diff22(grad(t, x), gh));
            linf = linf.max(e0);
            a += w * e0;
            b += w * e1;
        }
        l2.push(a);
        h1.push(b);
    }
    Ok(ErrorReport::from_squares(l2, h1, linf))
}

/// Error of a discrete scalar field against exact `u(t, x)`, `grad u(t, x)`.
pub fn scalar_error(
    space: &FESpacePair,
    tab: &Tabulation,
    field: &SpaceTimeCoefficients,
    u: impl Fn(f64, [f64; 2]) -> f64,
    grad: impl Fn(f64, [f64; 2]) -> [f64; 2],
) -> Result<ErrorReport> {
    let quads = time_quadrature(&field.partition, ERROR_TIME_POINTS)?;
    let (mut l2, mut h1, mut linf) = (Vec::new(), Vec::new(), 0.0_f64);
    for (i, q) in quads.iter().enumerate() {
        let (mut a, mut b) = (0.0, 0.0);
        for (&s, (&t, &w)) in q.local.iter().zip(q.times.iter().zip(&q.weights)) {
            let v = field.eval_local(i, s);
            let e0 = space.integrate_scalar(&v, tab, |x, uh, _| (u(t, x) - uh).powi(2));
            let e1 = space.integrate_scalar(&v, tab, |x, _, gh| sq_diff2(grad(t, x), gh));
            linf = linf.max(e0);
            a += w * e0;
            b += w * e1;
        }
        l2.push(a);
        h1.push(b);
    }
    Ok(ErrorReport::from_squares(l2, h1, linf))
}

/// Velocity error of a Stokes solution.
pub fn stokes_error(ctx: &StokesContext, problem: &ManufacturedProblem, sol: &SpaceTimeSolution) -> Result<ErrorReport> {
    if problem.equation() != Equation::Stokes {
        return Err(Error::Mismatch(format!("{} is not a Stokes problem", problem.name)));
    }
    vector_error(&ctx.space, &ctx.tab, &sol.velocity, |t, x| problem.u(t, x), |t, x| problem.grad_u(t, x))
}

/// Error of a heat solution.
pub fn heat_error(ctx: &HeatContext, problem: &ManufacturedProblem, sol: &SpaceTimeSolution) -> Result<ErrorReport> {
    if problem.equation() != Equation::Heat {
        return Err(Error::Mismatch(format!("{} is not a heat problem", problem.name)));
    }
    scalar_error(
        &ctx.space,
        &ctx.tab,
        &sol.velocity,
        |t, x| problem.scalar(t, x),
        |t, x| problem.scalar_grad(t, x),
    )
}

/// Left- and right-hand side quantities of the two discrete stability estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `(sum_m ||d_t u||^2_{L^2(I_m x Omega)})^{1/2}`.
    pub dt_norm: f64,
    /// `||A_h u||_{L^2(I; L^2)}`.
    pub ah_norm: f64,
    /// `(sum_m tau_m ||tau_m^{-1} [u]_{m-1}||^2)^{1/2}`.
    pub jump_norm: f64,
    /// Same three quantities with `grad A_h^{-1}` applied.
    pub dt_grad_norm: f64,
    pub ah_grad_norm: f64,
    pub jump_grad_norm: f64,
    /// `||PP_h f||_{L^2(I; L^2)}`.
    pub f_leray: f64,
    /// `||grad PP_h u_0||`.
    pub u0_grad: f64,
    /// `||grad A_h^{-1} PP_h f||_{L^2(I; L^2)}`.
    pub f_grad_inverse: f64,
    /// `||PP_h u_0||`.
    pub u0_leray: f64,
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0).then(|| lhs / rhs)
}

impl StabilityReport {
    pub fn lhs(&self) -> f64 {
        self.dt_norm + self.ah_norm + self.jump_norm
    }

    pub fn rhs(&self) -> f64 {
        self.f_leray + self.u0_grad
    }

    pub fn lhs_grad(&self) -> f64 {
        self.dt_grad_norm + self.ah_grad_norm + self.jump_grad_norm
    }

    pub fn rhs_grad(&self) -> f64 {
        self.f_grad_inverse + self.u0_leray
    }

    /// `None` for degenerate (zero-data) cells.
    pub fn ratio(&self) -> Option<f64> {
        ratio(self.lhs(), self.rhs())
    }

    pub fn ratio_grad(&self) -> Option<f64> {
        ratio(self.lhs_grad(), self.rhs_grad())
    }

    pub fn all_finite_nonnegative(&self) -> bool {
        [
            self.dt_norm,
            self.ah_norm,
            self.jump_norm,
            self.dt_grad_norm,
            self.ah_grad_norm,
            self.jump_grad_norm,
            self.f_leray,
            self.u0_grad,
            self.f_grad_inverse,
            self.u0_leray,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Stability functionals of a Stokes solution driven by `load(t) = (f(t), phi_i)`;
/// `PP_h u_0` is the solution's discrete initial value.
pub fn stability_functionals(
    ctx: &StokesContext,
    sol: &SpaceTimeSolution,
    load: &dyn Fn(f64) -> Vec<f64>,
) -> Result<StabilityReport> {
    let (m, k) = (&ctx.ops.m, &ctx.ops.k);
    let mass = |v: &[f64]| bilinear(m, v, v).max(0.0);
    let stiff = |v: &[f64]| bilinear(k, v, v).max(0.0);
    let u = &sol.velocity;
    let partition = &u.partition;
    let basis = &u.basis;
    let mut acc = [0.0_f64; 6];
    for i in 0..u.num_intervals() {
        let tau = partition.step(i);
        let modes = &u.coeffs[i];
        let inverse: Vec<Vec<f64>> = modes.iter().map(|v| solve_ah_inverse(ctx, v)).collect::<Result<_>>()?;
        if modes.len() > 1 {
            // d_t u = 2 U_1 / tau on the interval.
            acc[0] += 4.0 * mass(&modes[1]) / tau;
            acc[3] += 4.0 * stiff(&inverse[1]) / tau;
        }
        for (j, v) in modes.iter().enumerate() {
            let g = tau * basis.norm_sq(j);
            acc[1] += g * mass(&apply_ah(ctx, v)?);
            acc[4] += g * stiff(v);
        }
        let jump = sol.jump(i);
        acc[2] += mass(&jump) / tau;
        acc[5] += stiff(&solve_ah_inverse(ctx, &jump)?) / tau;
    }
    let (mut f_leray, mut f_grad_inverse) = (0.0, 0.0);
    for q in time_quadrature(partition, ERROR_TIME_POINTS)? {
        for (&t, &w) in q.times.iter().zip(&q.weights) {
            let l = load(t);
            f_leray += w * mass(&leray_project_load(ctx, &l)?);
            f_grad_inverse += w * stiff(&solve_ah_inverse_load(ctx, &l)?);
        }
    }
    Ok(StabilityReport {
        dt_norm: acc[0].sqrt(),
        ah_norm: acc[1].sqrt(),
        jump_norm: acc[2].sqrt(),
        dt_grad_norm: acc[3].sqrt(),
        ah_grad_norm: acc[4].sqrt(),
        jump_grad_norm: acc[5].sqrt(),
        f_leray: f_leray.sqrt(),
        u0_grad: stiff(&sol.initial).sqrt(),
        f_grad_inverse: f_grad_inverse.sqrt(),
        u0_leray: mass(&sol.initial).sqrt(),
    })
}

/// Stability functionals for a manufactured Stokes problem.
pub fn stability_for_problem(
    ctx: &StokesContext,
    problem: &ManufacturedProblem,
    sol: &SpaceTimeSolution,
) -> Result<StabilityReport> {
    let load = |t: f64| assemble_load_with(&ctx.space, &ctx.tab, |t, x| problem.f(t, x), t);
    stability_functionals(ctx, sol, &load)
}

/// The three best-approximation terms in one norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestApproxTerms {
    /// `||u - chi||` with `chi = P_tau R_h(u)`.
    pub chi: f64,
    /// `||u - pi_tau u||`.
    pub pi_tau: f64,
    /// `||u - R_h(u)||`.
    pub ritz: f64,
}

impl BestApproxTerms {
    pub fn sum(&self) -> f64 {
        self.chi + self.pi_tau + self.ritz
    }
}

/// Best-approximation terms in both norms for one discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestApproxReport {
    pub l2l2: BestApproxTerms,
    pub l2h1: BestApproxTerms,
}

impl BestApproxReport {
    pub fn get(&self, norm: NormKind) -> Result<BestApproxTerms> {
        match norm {
            NormKind::L2l2 => Ok(self.l2l2),
            NormKind::L2h1 => Ok(self.l2h1),
            NormKind::Linfl2Sampled => Err(Error::InvalidArgument("best-approximation terms use l2l2 or l2h1".into())),
        }
    }
}

/// Quadrature of two integrands at once over the mesh.
fn integrate_pair(space: &FESpacePair, tab: &Tabulation, mut f: impl FnMut([f64; 2]) -> (f64, f64)) -> (f64, f64) {
    let (mut ta, mut tb) = (0.0, 0.0);
    for t in 0..space.num_elements() {
        let map = space.element_map(t);
        let (mut a, mut b) = (0.0, 0.0);
        for (p, w) in tab.rule.points.iter().zip(&tab.rule.weights) {
            let (fa, fb) = f(map.map(*p));
            a += w * fa;
            b += w * fb;
        }
        ta += a * map.det;
        tb += b * map.det;
    }
    (ta, tb)
}

/// `||u - pi_tau u||` in `L^2(I; L^2)` and `L^2(I; H^1)`, with `pi_tau`
/// applied pointwise in space; `values(t, x)` returns `[u..., grad u...]`
/// whose first `ncomp` entries are values.
fn pi_tau_terms(
    space: &FESpacePair,
    tab: &Tabulation,
    partition: &TimePartition,
    w: usize,
    ncomp: usize,
    values: &dyn Fn(f64, [f64; 2]) -> Vec<f64>,
) -> Result<(f64, f64)> {
    let quads = time_quadrature(partition, ERROR_TIME_POINTS)?;
    let mut failure = None;
    let (l2, h1) = integrate_pair(space, tab, |x| {
        let proj = match pi_tau(&|t| values(t, x), partition, w) {
            Ok(p) => p,
            Err(e) => {
                failure.get_or_insert(e);
                return (0.0, 0.0);
            }
        };
        let (mut a, mut b) = (0.0, 0.0);
        for (i, q) in quads.iter().enumerate() {
            for (&s, (&t, &wt)) in q.local.iter().zip(q.times.iter().zip(&q.weights)) {
                let approx = proj.eval_local(i, s);
                for (c, (e, p)) in values(t, x).iter().zip(&approx).enumerate() {
                    let d = wt * (e - p).powi(2);
                    if c < ncomp {
                        a += d;
                    } else {
                        b += d;
                    }
                }
            }
        }
        (a, b)
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((l2.sqrt(), h1.sqrt())),
    }
}

/// Best-approximation terms for a Stokes problem with `chi = P_tau R_h^S(u, p)`.
pub fn bestapprox_terms(
    ctx: &StokesContext,
    problem: &ManufacturedProblem,
    partition: &TimePartition,
    w: usize,
) -> Result<BestApproxReport> {
    if problem.equation() != Equation::Stokes {
        return Err(Error::Mismatch(format!("{} is not a Stokes problem", problem.name)));
    }
    let ritz = |t: f64| stokes_ritz(ctx, |x| problem.grad_u(t, x), |x| problem.p(t, x)).map(|(u, _)| u);
    let failure = std::cell::RefCell::new(None);
    let ritz_or_record = |t: f64| {
        ritz(t).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            vec![0.0; ctx.space.n_u_free()]
        })
    };
    let chi = p_tau(&ritz_or_record, partition, w)?;
    // ||u - R_h^S u|| by time quadrature of pointwise-in-time projections.
    let quads = time_quadrature(partition, ERROR_TIME_POINTS)?;
    let (mut r0, mut r1) = (0.0, 0.0);
    for q in &quads {
        for (&t, &wt) in q.times.iter().zip(&q.weights) {
            let rt = ritz_or_record(t);
            r0 += wt * ctx.space.integrate_velocity(&rt, &ctx.tab, |x, uh, _| sq_diff2(problem.u(t, x), uh));
            r1 += wt * ctx.space.integrate_velocity(&rt, &ctx.tab, |x, _, gh| sq_diff22(problem.grad_u(t, x), gh));
        }
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let chi_err = vector_error(&ctx.space, &ctx.tab, &chi, |t, x| problem.u(t, x), |t, x| problem.grad_u(t, x))?;
    let values = |t: f64, x: [f64; 2]| {
        let (u, g) = (problem.u(t, x), problem.grad_u(t, x));
        vec![u[0], u[1], g[0][0], g[0][1], g[1][0], g[1][1]]
    };
    let (pi0, pi1) = pi_tau_terms(&ctx.space, &ctx.tab, partition, w, 2, &values)?;
    Ok(BestApproxReport {
        l2l2: BestApproxTerms {
            chi: chi_err.l2l2,
            pi_tau: pi0,
            ritz: r0.sqrt(),
        },
        l2h1: BestApproxTerms {
            chi: chi_err.l2h1,
            pi_tau: pi1,
            ritz: r1.sqrt(),
        },
    })
}

/// Heat analogue with the elliptic Ritz projection (`chi = P_tau R_h u`).
pub fn heat_bestapprox_terms(
    ctx: &HeatContext,
    problem: &ManufacturedProblem,
    partition: &TimePartition,
    w: usize,
) -> Result<BestApproxReport> {
    if problem.equation() != Equation::Heat {
        return Err(Error::Mismatch(format!("{} is not a heat problem", problem.name)));
    }
    let failure = std::cell::RefCell::new(None);
    let ritz = |t: f64| {
        elliptic_ritz(ctx, |x| problem.scalar_grad(t, x)).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            vec![0.0; ctx.space.n_scalar_free()]
        })
    };
    let chi = p_tau(&ritz, partition, w)?;
    let (mut r0, mut r1) = (0.0, 0.0);
    for q in time_quadrature(partition, ERROR_TIME_POINTS)? {
        for (&t, &wt) in q.times.iter().zip(&q.weights) {
            let rt = ritz(t);
            r0 += wt * ctx.space.integrate_scalar(&rt, &ctx.tab, |x, uh, _| (problem.scalar(t, x) - uh).powi(2));
            r1 += wt * ctx.space.integrate_scalar(&rt, &ctx.tab, |x, _, gh| sq_diff2(problem.scalar_grad(t, x), gh));
        }
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let chi_err = scalar_error(
        &ctx.space,
        &ctx.tab,
        &chi,
        |t, x| problem.scalar(t, x),
        |t, x| problem.scalar_grad(t, x),
    )?;
    let values = |t: f64, x: [f64; 2]| {
        let g = problem.scalar_grad(t, x);
        vec![problem.scalar(t, x), g[0], g[1]]
    };
    let (pi0, pi1) = pi_tau_terms(&ctx.space, &ctx.tab, partition, w, 1, &values)?;
    Ok(BestApproxReport {
        l2l2: BestApproxTerms {
            chi: chi_err.l2l2,
            pi_tau: pi0,
            ritz: r0.sqrt(),
        },
        l2h1: BestApproxTerms {
            chi: chi_err.l2h1,
            pi_tau: pi1,
            ritz: r1.sqrt(),
        },
    })
}

/// Pairwise observed orders `log(e_i / e_{i+1}) / log(p_i / p_{i+1})`.
pub fn estimate_rate(values: &[(f64, f64)]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("rate estimation needs at least two points".into()));
    }
    if let Some(&(p, e)) = values.iter().find(|(p, e)| !(*e > 0.0 && e.is_finite() && *p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidArgument(format!("parameters and errors must be positive (got {p}, {e})")));
    }
    if values.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(Error::InvalidArgument("parameters must be strictly decreasing".into()));
    }
    Ok(values
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::bilinear;
    use crate::manufactured::preset;
    use crate::mesh::{build_domain, DomainKind};
    use crate::timegrid::TemporalBasis;
    use crate::transient::solve_stokes_dg;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ctx(n: usize) -> StokesContext {
        StokesContext::new(&build_domain(DomainKind::UnitSquare, n).unwrap()).unwrap()
    }

    #[test]
    fn rates() {
        let r = estimate_rate(&[(0.1, 0.1), (0.05, 0.025)]).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-14);
        assert!((estimate_rate(&[(1.0, 1.0), (0.5, 0.5)]).unwrap()[0] - 1.0).abs() < 1e-14);
        assert_eq!(estimate_rate(&[(1.0, 0.3), (0.5, 0.3), (0.25, 0.3)]).unwrap(), vec![0.0, 0.0]);
        assert!(estimate_rate(&[(1.0, 0.0), (0.5, 0.1)]).is_err());
        assert!(estimate_rate(&[(1.0, -1.0), (0.5, 0.1)]).is_err());
        assert!(estimate_rate(&[(0.5, 1.0), (1.0, 0.1)]).is_err());
        assert!(estimate_rate(&[(0.5, 1.0)]).is_err());
    }

    #[test]
    fn norm_names_round_trip() {
        for n in [NormKind::L2l2, NormKind::L2h1, NormKind::Linfl2Sampled] {
            assert_eq!(n.name().parse::<NormKind>().unwrap(), n);
        }
        assert!("h2".parse::<NormKind>().is_err());
    }

    #[test]
    fn analytic_norms_of_sine_mode() {
        let c = ctx(8);
        let part = TimePartition::uniform(1.0, 3).unwrap();
        let zero = SpaceTimeCoefficients::zeros(&part, TemporalBasis::new(1).unwrap(), c.space.n_u_free());
        let rep = vector_error(
            &c.space,
            &c.tab,
            &zero,
            |_, x| [(PI * x[0]).sin() * (PI * x[1]).sin(), 0.0],
            |_, x| {
                [
                    [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()],
                    [0.0, 0.0],
                ]
            },
        )
        .unwrap();
        assert!((rep.l2l2 - 0.5).abs() < 1e-6, "{}", rep.l2l2);
        assert!((rep.l2h1 - PI / 2f64.sqrt()).abs() < 1e-5, "{}", rep.l2h1);
        let sum: f64 = rep.per_interval_l2l2.iter().map(|v| v * v).sum();
        assert!((sum - rep.l2l2 * rep.l2l2).abs() <= 1e-12 * sum);
        assert!(rep.linfl2_sampled >= rep.l2l2 / part.final_time().sqrt() * (1.0 - 1e-12));
    }

    #[test]
    fn discrete_exact_field_has_zero_error() {
        let c = ctx(3);
        let part = TimePartition::uniform(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..c.space.n_u_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = SpaceTimeCoefficients::new(part.clone(), TemporalBasis::new(0).unwrap(), vec![vec![a.clone()]; 2])
            .unwrap();
        let full = c.space.extend_velocity(&a);
        let eval = |x: [f64; 2]| c.space.eval_velocity_full(&full, x).unwrap();
        let grad = |x: [f64; 2]| {
            let (t, r) = c.space.locate(x).unwrap();
            let (phi, dphi) = crate::fespace::p2_eval(r);
            let local = c.space.gather_velocity(&a, t);
            crate::fespace::eval_vector_local(&local, &phi, &dphi, c.space.element_map(t)).1
        };
        let rep = vector_error(&c.space, &c.tab, &field, |_, x| eval(x), |_, x| grad(x)).unwrap();
        assert!(rep.l2l2 <= 1e-12 && rep.l2h1 <= 1e-12, "{rep:?}");
    }

    #[test]
    fn stability_zero_data_and_dg0_derivative() {
        let c = ctx(3);
        let part = TimePartition::uniform(1.0, 3).unwrap();
        let zero_load = |_: f64| vec![0.0; c.space.n_u_free()];
        let sol = crate::transient::solve_stokes_dg_with(&c, &part, 1, &zero_load, &vec![0.0; c.space.n_u_free()], 1e-11)
            .unwrap();
        let rep = stability_functionals(&c, &sol, &zero_load).unwrap();
        assert_eq!(rep.lhs() + rep.rhs() + rep.lhs_grad() + rep.rhs_grad(), 0.0);
        assert!(rep.ratio().is_none() && rep.ratio_grad().is_none());

        let prob = preset("stokes_vortex_exp").unwrap();
        let sol0 = solve_stokes_dg(&c, &prob, &part, 0).unwrap();
        let rep0 = stability_for_problem(&c, &prob, &sol0).unwrap();
        assert_eq!(rep0.dt_norm, 0.0);
        assert_eq!(rep0.dt_grad_norm, 0.0);
        assert!(rep0.all_finite_nonnegative());
        assert!(rep0.ratio().unwrap() > 0.0 && rep0.ratio_grad().unwrap() > 0.0);
    }

    #[test]
    fn ah_norm_matches_time_quadrature() {
        let c = ctx(3);
        let prob = preset("stokes_vortex_exp").unwrap();
        let part = TimePartition::uniform(1.0, 2).unwrap();
        for w in 0..=1 {
            let sol = solve_stokes_dg(&c, &prob, &part, w).unwrap();
            let rep = stability_for_problem(&c, &prob, &sol).unwrap();
            let mut direct = 0.0;
            for (i, q) in time_quadrature(&part, 3).unwrap().iter().enumerate() {
                for (&s, &wt) in q.local.iter().zip(&q.weights) {
                    let a = apply_ah(&c, &sol.velocity.eval_local(i, s)).unwrap();
                    direct += wt * bilinear(&c.ops.m, &a, &a);
                }
            }
            assert!((direct.sqrt() - rep.ah_norm).abs() <= 1e-8 * rep.ah_norm, "w={w}");
        }
    }

    #[test]
    fn pi_tau_term_halves_with_tau() {
        let c = ctx(2);
        let prob = preset("stokes_vortex_exp").unwrap();
        let coarse = bestapprox_terms(&c, &prob, &TimePartition::uniform(1.0, 8).unwrap(), 0).unwrap();
        let fine = bestapprox_terms(&c, &prob, &TimePartition::uniform(1.0, 16).unwrap(), 0).unwrap();
        let ratio = coarse.l2l2.pi_tau / fine.l2l2.pi_tau;
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
        // The Ritz term does not depend on tau.
        assert!((coarse.l2l2.ritz - fine.l2l2.ritz).abs() <= 1e-3 * coarse.l2l2.ritz);
    }

    #[test]
    fn triangle_inequality_with_chi() {
        let c = ctx(4);
        let prob = preset("stokes_vortex_exp").unwrap();
        let part = TimePartition::uniform(1.0, 4).unwrap();
        let sol = solve_stokes_dg(&c, &prob, &part, 1).unwrap();
        let err = stokes_error(&c, &prob, &sol).unwrap();
        let terms = bestapprox_terms(&c, &prob, &part, 1).unwrap();
        // ||chi - u_h|| computed independently.
        let ritz = |t: f64| stokes_ritz(&c, |x| prob.grad_u(t, x), |x| prob.p(t, x)).unwrap().0;
        let chi = p_tau(&ritz, &part, 1).unwrap();
        let diff: Vec<Vec<Vec<f64>>> = chi
            .coeffs
            .iter()
            .zip(&sol.velocity.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect())
            .collect();
        let diff = SpaceTimeCoefficients::new(part.clone(), chi.basis.clone(), diff).unwrap();
        let d = vector_error(&c.space, &c.tab, &diff, |_, _| [0.0; 2], |_, _| [[0.0; 2]; 2]).unwrap();
        assert!(err.l2l2 <= (terms.l2l2.chi + d.l2l2) * (1.0 + 1e-10));
        assert!(err.l2h1 <= (terms.l2h1.chi + d.l2h1) * (1.0 + 1e-10));
    }

    #[test]
    fn heat_terms_are_finite() {
        let h = HeatContext::new(&build_domain(DomainKind::UnitSquare, 3).unwrap()).unwrap();
        let prob = preset("heat_generic").unwrap();
        let rep = heat_bestapprox_terms(&h, &prob, &TimePartition::uniform(1.0, 4).unwrap(), 1).unwrap();
        for t in [rep.l2l2, rep.l2h1] {
            assert!(t.sum().is_finite() && t.chi > 0.0 && t.pi_tau > 0.0 && t.ritz > 0.0);
        }
    }
}

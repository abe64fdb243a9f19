//! Study orchestration: convergence studies and probes over (n, M) cells.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{expected_order, Cell, Coupling, RateParameter, StudyConfig};
use super::report::{CellRow, CellStatus, Check, Environment, OrderRecord, ReportKind, StudyReport};
use crate::assembly::{assemble_load_with, assemble_scalar_load_with};
use crate::error::{Error, Result};
use crate::errors::{
    bestapprox_terms, estimate_rate, heat_bestapprox_terms, heat_error, stability_functionals, stokes_error, NormKind,
};
use crate::manufactured::{preset, Equation, ManufacturedProblem};
use crate::mesh::{build_domain, DomainKind};
use crate::operators::{inf_sup_constant, leray_h1_ratio, HeatContext, StokesContext};
use crate::timegrid::TimePartition;
use crate::transient::{heat_initial, solve_scalar_dg, solve_stokes_dg_with, stokes_initial, SpaceTimeSolution};

/// Environment variable capping the number of cells run concurrently.
pub const THREADS_ENV: &str = "STOKES_DG_LAB_THREADS";

/// Probe kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Stability,
    Bestapprox,
    Infsup,
    LerayH1,
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stability" => Ok(ProbeKind::Stability),
            "bestapprox" => Ok(ProbeKind::Bestapprox),
            "infsup" => Ok(ProbeKind::Infsup),
            "leray_h1" => Ok(ProbeKind::LerayH1),
            other => Err(Error::Config(format!(
                "unknown probe '{other}' (expected stability, bestapprox, infsup, leray_h1)"
            ))),
        }
    }
}

/// Worker count: `STOKES_DG_LAB_THREADS` if set to a positive integer,
/// otherwise the number of available cores.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Mesh size `h` of `build_domain(domain, n)`: the grid spacing.
pub fn mesh_size(domain: DomainKind, n: usize) -> f64 {
    match domain {
        DomainKind::UnitSquare => 1.0 / n as f64,
        DomainKind::LShape => 0.5 / n as f64,
    }
}

enum Context {
    Stokes(StokesContext),
    Heat(HeatContext),
}

/// Contexts for every distinct spatial level, built concurrently.
fn contexts(cfg: &StudyConfig, levels: &[usize]) -> Vec<(usize, Result<Context>)> {
    levels
        .par_iter()
        .map(|&n| {
            let ctx = build_domain(cfg.domain, n).and_then(|mesh| match cfg.equation {
                Equation::Stokes => StokesContext::new(&mesh).map(Context::Stokes),
                Equation::Heat => HeatContext::new(&mesh).map(Context::Heat),
            });
            (n, ctx)
        })
        .collect()
}

fn lookup(ctxs: &[(usize, Result<Context>)], n: usize) -> Result<&Context> {
    match ctxs.iter().find(|(k, _)| *k == n).map(|(_, c)| c) {
        Some(Ok(c)) => Ok(c),
        Some(Err(e)) => Err(Error::Config(format!("level n = {n}: {e}"))),
        None => Err(Error::Config(format!("no context for n = {n}"))),
    }
}

fn solve_stokes(cfg: &StudyConfig, ctx: &StokesContext, problem: &ManufacturedProblem, part: &TimePartition) -> Result<SpaceTimeSolution> {
    let initial = stokes_initial(ctx, |x| problem.u0(x))?;
    let load = |t: f64| assemble_load_with(&ctx.space, &ctx.tab, |t, x| problem.f(t, x), t);
    solve_stokes_dg_with(ctx, part, cfg.w, &load, &initial, cfg.tolerances.solver_rel_tol)
}

fn solve_heat(cfg: &StudyConfig, ctx: &HeatContext, problem: &ManufacturedProblem, part: &TimePartition) -> Result<SpaceTimeSolution> {
    let initial = heat_initial(ctx, |x| problem.scalar_u0(x))?;
    let load = |t: f64| assemble_scalar_load_with(&ctx.space, &ctx.tab, |t, x| problem.scalar_f(t, x), t);
    solve_scalar_dg(&ctx.ops.m, &ctx.ops.k, part, cfg.w, &load, &initial)
}

type CellValues = (BTreeMap<String, f64>, Option<String>);

fn row(cfg: &StudyConfig, cell: Cell, with_time: bool, outcome: Result<CellValues>) -> CellRow {
    let (status, message, values) = match outcome {
        Ok((values, note)) => (CellStatus::Ok, note, values),
        Err(e) => (CellStatus::Failed, Some(e.to_string()), BTreeMap::new()),
    };
    CellRow {
        family: cell.family,
        n: cell.n,
        m: with_time.then_some(cell.m),
        h: mesh_size(cfg.domain, cell.n),
        tau: with_time.then(|| cfg.final_time / cell.m as f64),
        status,
        message,
        values,
    }
}

fn run_cells(
    cfg: &StudyConfig,
    cells: &[Cell],
    with_time: bool,
    eval: impl Fn(&Context, &TimePartition) -> Result<CellValues> + Sync,
) -> Result<(Vec<CellRow>, usize)> {
    let threads = thread_count();
    let mut levels: Vec<usize> = cells.iter().map(|c| c.n).collect();
    levels.sort_unstable();
    levels.dedup();
    let rows = in_pool(threads, || {
        let ctxs = contexts(cfg, &levels);
        cells
            .par_iter()
            .map(|&cell| {
                let outcome = lookup(&ctxs, cell.n).and_then(|ctx| {
                    let part = TimePartition::uniform(cfg.final_time, cell.m.max(1))?;
                    eval(ctx, &part)
                });
                row(cfg, cell, with_time, outcome)
            })
            .collect()
    })?;
    Ok((rows, threads))
}

fn new_report(kind: ReportKind, cfg: &StudyConfig, rows: Vec<CellRow>, threads: usize) -> StudyReport {
    StudyReport {
        kind,
        config: cfg.clone(),
        rows,
        orders: Vec::new(),
        checks: Vec::new(),
        passed: false,
        environment: Environment::current(threads),
    }
}

fn order_records(cfg: &StudyConfig, rows: &[CellRow]) -> Vec<OrderRecord> {
    if cfg.coupling == Coupling::Tensor {
        return Vec::new();
    }
    let families = rows.iter().map(|r| r.family).max().map_or(0, |f| f + 1);
    let mut out = Vec::new();
    for family in 0..families {
        let fam: Vec<&CellRow> = rows.iter().filter(|r| r.family == family).collect();
        for &norm in &cfg.norms {
            let expected = expected_order(cfg.coupling, cfg.w, norm);
            let parameter = expected.map_or(
                if cfg.coupling == Coupling::RefineTimeOnly { RateParameter::Tau } else { RateParameter::H },
                |(p, _)| p,
            );
            let mut rec = OrderRecord {
                family,
                quantity: norm.name().to_string(),
                parameter,
                observed: Vec::new(),
                expected: expected.map(|(_, e)| e),
                passed: expected.map(|_| false),
                note: None,
            };
            if fam.iter().any(|r| r.status == CellStatus::Failed) {
                rec.note = Some("family contains failed cells".into());
                out.push(rec);
                continue;
            }
            let points: Vec<(f64, f64)> = fam
                .iter()
                .map(|r| {
                    let p = match parameter {
                        RateParameter::H => r.h,
                        RateParameter::Tau => r.tau.unwrap_or(f64::NAN),
                    };
                    (p, r.value(norm.name()).unwrap_or(f64::NAN))
                })
                .collect();
            match estimate_rate(&points) {
                Ok(orders) => {
                    if let (Some(e), Some(&last)) = (rec.expected, orders.last()) {
                        rec.passed = Some(last >= e - cfg.tolerances.order_slack);
                    }
                    rec.observed = orders;
                }
                Err(e) => rec.note = Some(e.to_string()),
            }
            out.push(rec);
        }
    }
    out
}

/// Run a convergence study: solve every cell, measure the configured norms
/// and evaluate pairwise orders along each refinement family.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let problem = preset(&cfg.problem)?;
    let cells = cfg.cells();
    let (rows, threads) = run_cells(cfg, &cells, true, |ctx, part| {
        let (sol, err) = match ctx {
            Context::Stokes(c) => {
                let sol = solve_stokes(cfg, c, &problem, part)?;
                let err = stokes_error(c, &problem, &sol)?;
                (sol, err)
            }
            Context::Heat(c) => {
                let sol = solve_heat(cfg, c, &problem, part)?;
                let err = heat_error(c, &problem, &sol)?;
                (sol, err)
            }
        };
        let s = &sol.stats;
        let values = BTreeMap::from([
            ("l2l2".to_string(), err.l2l2),
            ("l2h1".to_string(), err.l2h1),
            ("linfl2_sampled".to_string(), err.linfl2_sampled),
            ("outer_iterations".to_string(), s.outer_iterations as f64),
            ("max_outer_iterations".to_string(), s.max_outer_iterations as f64),
            ("max_residual".to_string(), s.max_residual),
            ("max_divergence_defect".to_string(), s.max_divergence_defect),
            ("factorizations".to_string(), s.factorizations as f64),
        ]);
        Ok((values, None))
    })?;
    let mut report = new_report(ReportKind::Convergence, cfg, rows, threads);
    report.orders = order_records(cfg, &report.rows);
    report.finalize();
    Ok(report)
}

/// `max / coarsest` of a bounded quantity over the successful rows that
/// carry it; the coarsest cell is the first such row in canonical order.
fn bounded_check(name: &str, rows: &[CellRow], key: &str, factor: f64) -> Check {
    let values: Vec<f64> = rows.iter().filter_map(|r| r.value(key)).collect();
    let degenerate = rows.iter().filter(|r| r.status == CellStatus::Ok && r.value(key).is_none()).count();
    let mut note = format!("{} cells, max / coarsest-cell value of '{key}'", values.len());
    if degenerate > 0 {
        note.push_str(&format!("; {degenerate} degenerate cells excluded"));
    }
    match values.first() {
        Some(&first) if values.iter().all(|v| v.is_finite() && *v > 0.0) => {
            let max = values.iter().copied().fold(f64::MIN, f64::max);
            let value = max / first;
            Check { name: name.into(), value, limit: factor, passed: value <= factor, note }
        }
        _ => Check {
            name: name.into(),
            value: f64::MAX,
            limit: factor,
            passed: false,
            note: format!("{note}; missing or non-finite values"),
        },
    }
}

fn space_cells(cfg: &StudyConfig) -> Vec<Cell> {
    cfg.spatial_levels.iter().map(|&n| Cell { family: 0, n, m: 1 }).collect()
}

fn stokes_only<'a>(ctx: &'a Context, what: &str) -> Result<&'a StokesContext> {
    match ctx {
        Context::Stokes(c) => Ok(c),
        Context::Heat(_) => Err(Error::Config(format!("the {what} probe requires a Stokes problem"))),
    }
}

/// Run a probe and evaluate its pass criteria.
pub fn run_probe(kind: ProbeKind, cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let problem = preset(&cfg.problem)?;
    let factor = cfg.tolerances.bound_factor;
    match kind {
        ProbeKind::Stability | ProbeKind::Infsup if cfg.equation != Equation::Stokes => {
            return Err(Error::Config(format!("the {kind:?} probe requires a Stokes problem")));
        }
        ProbeKind::LerayH1 if cfg.equation != Equation::Stokes || cfg.domain != DomainKind::UnitSquare => {
            return Err(Error::Config("the leray_h1 probe runs on Stokes spaces over unit_square only".into()));
        }
        ProbeKind::Bestapprox if cfg.norms.contains(&NormKind::L2h1) && cfg.domain != DomainKind::UnitSquare => {
            return Err(Error::Config("the l2h1 best-approximation probe requires unit_square".into()));
        }
        ProbeKind::Bestapprox if cfg.norms.contains(&NormKind::Linfl2Sampled) => {
            return Err(Error::Config("best-approximation terms are defined for l2l2 and l2h1 only".into()));
        }
        _ => {}
    }
    let report = match kind {
        ProbeKind::Stability => {
            let (rows, threads) = run_cells(cfg, &cfg.cells(), true, |ctx, part| {
                let c = stokes_only(ctx, "stability")?;
                let sol = solve_stokes(cfg, c, &problem, part)?;
                let load = |t: f64| assemble_load_with(&c.space, &c.tab, |t, x| problem.f(t, x), t);
                let s = stability_functionals(c, &sol, &load)?;
                let mut v = BTreeMap::from([
                    ("dt_norm".to_string(), s.dt_norm),
                    ("ah_norm".to_string(), s.ah_norm),
                    ("jump_norm".to_string(), s.jump_norm),
                    ("f_leray".to_string(), s.f_leray),
                    ("u0_grad".to_string(), s.u0_grad),
                    ("lhs".to_string(), s.lhs()),
                    ("rhs".to_string(), s.rhs()),
                    ("dt_grad_norm".to_string(), s.dt_grad_norm),
                    ("ah_grad_norm".to_string(), s.ah_grad_norm),
                    ("jump_grad_norm".to_string(), s.jump_grad_norm),
                    ("f_grad_inverse".to_string(), s.f_grad_inverse),
                    ("u0_leray".to_string(), s.u0_leray),
                    ("lhs_grad".to_string(), s.lhs_grad()),
                    ("rhs_grad".to_string(), s.rhs_grad()),
                ]);
                let mut note = None;
                match (s.ratio(), s.ratio_grad()) {
                    (Some(a), Some(b)) => {
                        v.insert("ratio".into(), a);
                        v.insert("ratio_grad".into(), b);
                    }
                    _ => note = Some("degenerate ratio (0/0): zero data".to_string()),
                }
                if !s.all_finite_nonnegative() {
                    return Err(Error::Config("non-finite stability functional".into()));
                }
                Ok((v, note))
            })?;
            let mut r = new_report(ReportKind::Stability, cfg, rows, threads);
            r.checks.push(bounded_check("stability_ratio_bounded", &r.rows, "ratio", factor));
            r.checks.push(bounded_check("stability_grad_ratio_bounded", &r.rows, "ratio_grad", factor));
            r
        }
        ProbeKind::Bestapprox => {
            let (rows, threads) = run_cells(cfg, &cfg.cells(), true, |ctx, part| {
                let (err, terms) = match ctx {
                    Context::Stokes(c) => {
                        let sol = solve_stokes(cfg, c, &problem, part)?;
                        (stokes_error(c, &problem, &sol)?, bestapprox_terms(c, &problem, part, cfg.w)?)
                    }
                    Context::Heat(c) => {
                        let sol = solve_heat(cfg, c, &problem, part)?;
                        (heat_error(c, &problem, &sol)?, heat_bestapprox_terms(c, &problem, part, cfg.w)?)
                    }
                };
                let mut v = BTreeMap::new();
                for &norm in &cfg.norms {
                    let t = terms.get(norm)?;
                    let e = err.get(norm);
                    let key = norm.name();
                    v.insert(format!("error_{key}"), e);
                    v.insert(format!("chi_{key}"), t.chi);
                    v.insert(format!("pi_tau_{key}"), t.pi_tau);
                    v.insert(format!("ritz_{key}"), t.ritz);
                    if t.sum() > 0.0 {
                        v.insert(format!("ratio_{key}"), e / t.sum());
                    }
                }
                Ok((v, None))
            })?;
            let mut r = new_report(ReportKind::Bestapprox, cfg, rows, threads);
            for &norm in &cfg.norms {
                let key = format!("ratio_{}", norm.name());
                let check = bounded_check(&format!("bestapprox_{}_bounded", norm.name()), &r.rows, &key, factor);
                r.checks.push(check);
            }
            r
        }
        ProbeKind::Infsup => {
            let (rows, threads) = run_cells(cfg, &space_cells(cfg), false, |ctx, _| {
                let beta = inf_sup_constant(stokes_only(ctx, "infsup")?)?;
                Ok((BTreeMap::from([("beta".to_string(), beta)]), None))
            })?;
            let mut r = new_report(ReportKind::Infsup, cfg, rows, threads);
            let betas: Vec<f64> = r.rows.iter().filter_map(|r| r.value("beta")).collect();
            let min = betas.iter().copied().fold(f64::INFINITY, f64::min);
            let max = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = betas.iter().sum::<f64>() / betas.len().max(1) as f64;
            r.checks.push(Check {
                name: "infsup_positive".into(),
                value: min,
                limit: 0.0,
                passed: !betas.is_empty() && min > 0.0,
                note: "smallest beta_h over levels".into(),
            });
            let spread = if betas.is_empty() { f64::MAX } else { (max - min) / mean };
            r.checks.push(Check {
                name: "infsup_spread".into(),
                value: spread,
                limit: cfg.tolerances.infsup_spread,
                passed: spread <= cfg.tolerances.infsup_spread,
                note: "(max - min) / mean of beta_h over levels".into(),
            });
            r
        }
        ProbeKind::LerayH1 => {
            let (rows, threads) = run_cells(cfg, &space_cells(cfg), false, |ctx, _| {
                let c = stokes_only(ctx, "leray_h1")?;
                let (num, den) = leray_h1_ratio(c, |x| problem.u(0.0, x), |x| problem.grad_u(0.0, x))?;
                Ok((
                    BTreeMap::from([
                        ("grad_leray".to_string(), num),
                        ("grad_field".to_string(), den),
                        ("ratio".to_string(), num / den),
                    ]),
                    None,
                ))
            })?;
            let mut r = new_report(ReportKind::LerayH1, cfg, rows, threads);
            r.checks.push(bounded_check("leray_h1_ratio_bounded", &r.rows, "ratio", factor));
            r
        }
    };
    let mut report = report;
    report.finalize();
    Ok(report)
}

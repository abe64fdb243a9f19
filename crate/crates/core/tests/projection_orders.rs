use std::f64::consts::PI;

use stokes_dg::errors::{estimate_rate, scalar_error, vector_error, ErrorReport};
use stokes_dg::manufactured::{make_stokes_vortex, TimeProfile};
use stokes_dg::mesh::{build_domain, DomainKind};
use stokes_dg::operators::{elliptic_ritz, leray_project, stokes_ritz, HeatContext, StokesContext};
use stokes_dg::timegrid::{SpaceTimeCoefficients, TemporalBasis, TimePartition};

const LEVELS: [usize; 3] = [4, 8, 16];

/// Wrap a spatial coefficient vector as a field constant on `[0, 1]`.
fn steady(values: Vec<f64>) -> SpaceTimeCoefficients {
    let part = TimePartition::uniform(1.0, 1).unwrap();
    SpaceTimeCoefficients::new(part, TemporalBasis::new(0).unwrap(), vec![vec![values]]).unwrap()
}

fn orders(errors: &[ErrorReport], pick: impl Fn(&ErrorReport) -> f64) -> Vec<f64> {
    let points: Vec<(f64, f64)> = LEVELS.iter().zip(errors).map(|(&n, e)| (1.0 / n as f64, pick(e))).collect();
    estimate_rate(&points).unwrap()
}

fn stokes_ctx(n: usize) -> StokesContext {
    StokesContext::new(&build_domain(DomainKind::UnitSquare, n).unwrap()).unwrap()
}

#[test]
fn stokes_ritz_converges_in_h1_and_l2() {
    let vortex = make_stokes_vortex(TimeProfile::Exp { rate: 1.0 });
    let errors: Vec<ErrorReport> = LEVELS
        .iter()
        .map(|&n| {
            let ctx = stokes_ctx(n);
            let (u, _) = stokes_ritz(&ctx, |x| vortex.grad_u(0.0, x), |x| vortex.p(0.0, x)).unwrap();
            assert!(ctx.in_vh(&u));
            vector_error(&ctx.space, &ctx.tab, &steady(u), |_, x| vortex.u(0.0, x), |_, x| vortex.grad_u(0.0, x))
                .unwrap()
        })
        .collect();
    let h1 = orders(&errors, |e| e.l2h1);
    let l2 = orders(&errors, |e| e.l2l2);
    assert!(h1.iter().all(|&o| o >= 0.9), "H1 orders {h1:?}");
    assert!(l2.iter().all(|&o| o >= 1.9), "L2 orders {l2:?}");
}

#[test]
fn elliptic_ritz_gradient_error_is_second_order() {
    let u = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let grad = |x: [f64; 2]| [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()];
    let errors: Vec<ErrorReport> = LEVELS
        .iter()
        .map(|&n| {
            let ctx = HeatContext::new(&build_domain(DomainKind::UnitSquare, n).unwrap()).unwrap();
            let r = elliptic_ritz(&ctx, grad).unwrap();
            scalar_error(&ctx.space, &ctx.tab, &steady(r), |_, x| u(x), |_, x| grad(x)).unwrap()
        })
        .collect();
    let h1 = orders(&errors, |e| e.l2h1);
    assert!(h1.iter().all(|&o| o >= 1.9), "H1 orders {h1:?}");
}

#[test]
fn leray_projection_of_divergence_free_field_converges() {
    let vortex = make_stokes_vortex(TimeProfile::Exp { rate: 1.0 });
    let errors: Vec<ErrorReport> = LEVELS
        .iter()
        .map(|&n| {
            let ctx = stokes_ctx(n);
            let v = leray_project(&ctx, |x| vortex.u(0.0, x)).unwrap();
            vector_error(&ctx.space, &ctx.tab, &steady(v), |_, x| vortex.u(0.0, x), |_, x| vortex.grad_u(0.0, x))
                .unwrap()
        })
        .collect();
    let l2 = orders(&errors, |e| e.l2l2);
    let h1 = orders(&errors, |e| e.l2h1);
    assert!(l2.iter().all(|&o| o >= 1.9), "L2 orders {l2:?}");
    assert!(h1.iter().all(|&o| o >= 0.9), "H1 orders {h1:?}");
}

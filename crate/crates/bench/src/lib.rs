//! Fixtures shared by the criterion benchmarks in `benches/`.

pub use stokes_dg;

use stokes_dg::assembly::assemble_load_with;
use stokes_dg::manufactured::{preset, ManufacturedProblem};
use stokes_dg::mesh::{build_domain, DomainKind, Mesh};
use stokes_dg::operators::StokesContext;

/// Unit-square mesh with `n` subdivisions per side.
pub fn unit_square(n: usize) -> Mesh {
    build_domain(DomainKind::UnitSquare, n).expect("valid subdivision count")
}

/// Stokes operators and factorizations on the unit square.
pub fn stokes_context(n: usize) -> StokesContext {
    StokesContext::new(&unit_square(n)).expect("context builds")
}

/// The smooth vortex used throughout the benchmarks.
pub fn vortex() -> ManufacturedProblem {
    preset("stokes_vortex_exp").expect("preset exists")
}

/// Velocity load vector of the vortex forcing at time `t`.
pub fn vortex_load(ctx: &StokesContext, t: f64) -> Vec<f64> {
    let problem = vortex();
    assemble_load_with(&ctx.space, &ctx.tab, |t, x| problem.f(t, x), t)
}

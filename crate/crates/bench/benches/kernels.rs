use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use stokes_dg_bench::stokes_dg::assembly::assemble_operators;
use stokes_dg_bench::stokes_dg::fespace::FESpacePair;
use stokes_dg_bench::stokes_dg::operators::{apply_ah, inf_sup_constant, leray_project, solve_ah_inverse};
use stokes_dg_bench::stokes_dg::timegrid::{TemporalBasis, TimePartition};
use stokes_dg_bench::stokes_dg::transient::{interval_matrix, solve_stokes_dg, stokes_initial};
use stokes_dg_bench::{stokes_context, unit_square, vortex, vortex_load};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for n in [8, 16, 32] {
        let space = FESpacePair::taylor_hood(&unit_square(n));
        group.bench_with_input(BenchmarkId::new("taylor_hood_operators", n), &space, |b, space| {
            b.iter(|| assemble_operators(black_box(space)))
        });
    }
    let ctx = stokes_context(16);
    group.bench_function("vortex_load/16", |b| b.iter(|| vortex_load(black_box(&ctx), 0.5)));
    let basis = TemporalBasis::new(1).unwrap();
    group.bench_function("interval_matrix_dg1/16", |b| {
        b.iter(|| interval_matrix(&ctx.ops.m, &ctx.ops.k, &basis, black_box(0.05)))
    });
    group.finish();
}

fn operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("operators");
    let problem = vortex();
    for n in [8, 16] {
        let ctx = stokes_context(n);
        let v = leray_project(&ctx, |x| problem.u(0.0, x)).unwrap();
        group.bench_with_input(BenchmarkId::new("leray_project", n), &ctx, |b, ctx| {
            b.iter(|| leray_project(ctx, |x| problem.u(0.0, x)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("apply_ah", n), &ctx, |b, ctx| b.iter(|| apply_ah(ctx, &v).unwrap()));
        group.bench_with_input(BenchmarkId::new("solve_ah_inverse", n), &ctx, |b, ctx| {
            b.iter(|| solve_ah_inverse(ctx, &v).unwrap())
        });
    }
    group.sample_size(10);
    let ctx = stokes_context(8);
    group.bench_function("inf_sup_constant/8", |b| b.iter(|| inf_sup_constant(&ctx).unwrap()));
    group.finish();
}

fn time_stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("time_stepping");
    group.sample_size(10);
    let problem = vortex();
    let ctx = stokes_context(8);
    for w in [0, 1] {
        for m in [4, 16] {
            let part = TimePartition::uniform(1.0, m).unwrap();
            group.bench_function(BenchmarkId::new(format!("stokes_dg{w}/n8"), m), |b| {
                b.iter(|| solve_stokes_dg(&ctx, &problem, &part, w).unwrap())
            });
        }
    }
    group.bench_function("stokes_initial/8", |b| b.iter(|| stokes_initial(&ctx, |x| problem.u0(x)).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, operators, time_stepping);
criterion_main!(benches);

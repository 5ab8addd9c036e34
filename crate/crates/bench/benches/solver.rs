use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use oldroyd_bench::{scheme_fixture, velocity_fixture, KERNEL};
use oldroyd_dg::forms::{convection_block, diffusion_block};
use oldroyd_dg::{ExactSolution, FormParams};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for (n, r) in [(16, 1), (16, 2)] {
        let (ctx, u) = velocity_fixture(n, r).unwrap();
        let forms = FormParams::defaults_for(r);
        g.bench_function(format!("diffusion n{n} r{r}"), |b| b.iter(|| diffusion_block(&ctx, &forms).unwrap()));
        g.bench_function(format!("convection n{n} r{r}"), |b| b.iter(|| convection_block(&ctx, &u, &u).unwrap()));
    }
    g.finish();
}

fn time_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    g.sample_size(20);
    let exact = ExactSolution::new(1.0, KERNEL);
    for (n, r) in [(16, 1), (16, 2)] {
        let (mut scheme, state) = scheme_fixture(n, r, 1.0 / 32.0).unwrap();
        g.bench_function(format!("mms n{n} r{r}"), |b| {
            b.iter_batched(
                || state.clone(),
                |mut st| scheme.step(&mut st, &|x, t| exact.forcing(x, t)).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, time_step);
criterion_main!(benches);

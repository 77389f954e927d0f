use criterion::{criterion_group, criterion_main, Criterion};
use pmap_core::low_rank::{PerturbationKind, Perturber};
use pmap_core::rng;
use pmap_core::solver::Exhaustive;
use pmap_core::tricks::{sample_gumbel, FullRankSampler};
use pmap_core::{spin_glass_grid, Coupling, MapSolver, SolverChoice, UnaryOffsets};
use std::hint::black_box;

fn gumbel(c: &mut Criterion) {
    let mut rng = rng::stream(1, &[]);
    c.bench_function("gumbel draw", |b| b.iter(|| black_box(sample_gumbel(&mut rng))));
}

fn exhaustive(c: &mut Criterion) {
    for (r, cols) in [(3, 3), (4, 4)] {
        let model = spin_glass_grid(r, cols, 1.0, Coupling::Mixed, 2).unwrap();
        let solver = Exhaustive::new(&model, 1 << 22).unwrap();
        let mut offsets = UnaryOffsets::zeros(model.cardinalities(), 1.0).unwrap();
        let mut rng = rng::stream(3, &[]);
        c.bench_function(&format!("exhaustive solve {r}x{cols}"), |b| {
            b.iter(|| {
                for v in offsets.values_mut() {
                    *v = sample_gumbel(&mut rng);
                }
                black_box(solver.solve_value(&offsets, 0))
            })
        });
    }
}

fn perturbations(c: &mut Criterion) {
    let model = spin_glass_grid(3, 3, 1.0, Coupling::Mixed, 4).unwrap();
    let mut rng = rng::stream(5, &[]);
    for (name, solver) in [("exhaustive", SolverChoice::Exhaustive), ("icm:5", SolverChoice::Icm { restarts: 5 })] {
        let p = Perturber::new(&model, PerturbationKind::SumUnary, solver).unwrap();
        let mut offsets = p.offsets();
        c.bench_function(&format!("sum-unary draw 3x3 {name}"), |b| {
            b.iter(|| black_box(p.draw_value(&mut rng, &mut offsets)))
        });
    }
    let full = FullRankSampler::new(&model).unwrap();
    c.bench_function("full-rank draw 3x3", |b| b.iter(|| black_box(full.sample_value(&mut rng))));
}

criterion_group!(benches, gumbel, exhaustive, perturbations);
criterion_main!(benches);

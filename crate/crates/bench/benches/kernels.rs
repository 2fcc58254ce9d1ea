use criterion::{black_box, criterion_group, criterion_main, Criterion};

use hcat_core::catenoid::{self, CatenoidParams, SurfaceGrid};
use hcat_core::end_solver::{green_op, solve_cmc_end, EndSolverConfig, WeightedField};
use hcat_core::graph::{solve_dirichlet, DirichletData, GraphSolverConfig, Hole, PlanarDomain};
use hcat_core::spectral::{assemble_cross_section, synthesize};

fn bench_surface_grid(c: &mut Criterion) {
    let params = CatenoidParams::from_alpha(2.0).unwrap();
    c.bench_function("surface_grid_64x64", |b| {
        b.iter(|| SurfaceGrid::build(black_box(&params), -2.0, 2.0, 64, 64).unwrap())
    });
}

fn bench_cross_section(c: &mut Criterion) {
    let params = CatenoidParams::from_alpha(4.0).unwrap();
    c.bench_function("cross_section_32_modes", |b| {
        b.iter(|| assemble_cross_section(black_box(&params), 32).unwrap())
    });
}

fn bench_green_op(c: &mut Criterion) {
    let params = CatenoidParams::from_epsilon(0.05).unwrap();
    let basis = assemble_cross_section(&params, 12).unwrap();
    let s_big = catenoid::truncation_s(params.epsilon).unwrap();
    let n_s = 401;
    let n_t = 32;
    let s_values: Vec<f64> = (0..n_s)
        .map(|i| s_big + 6.0 * i as f64 / (n_s - 1) as f64)
        .collect();
    let theta_values: Vec<f64> = (0..n_t)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_t as f64)
        .collect();
    let mut f = WeightedField::zeros(s_values.clone(), theta_values, -2.0);
    for (i, &s) in s_values.iter().enumerate() {
        for j in 0..n_t {
            f.values[i * n_t + j] =
                (-2.0 * (s - s_big)).exp() * (2.0 * (j as f64) / (n_t as f64)).cos();
        }
    }
    c.bench_function("green_op_401x32", |b| {
        b.iter(|| green_op(black_box(&basis), black_box(&f)).unwrap())
    });
}

fn bench_end_solve(c: &mut Criterion) {
    let params = CatenoidParams::from_epsilon(0.05).unwrap();
    let config = EndSolverConfig {
        s_span: 4.0,
        n_s: 201,
        n_theta: 16,
        tol: 1e-4,
        ..EndSolverConfig::default()
    };
    let basis = assemble_cross_section(&params, config.n_modes).unwrap();
    let mut coeffs = vec![0.0; config.n_modes];
    coeffs[2] = params.epsilon * params.epsilon;
    let phi = synthesize(&basis, &coeffs, config.n_theta);
    c.bench_function("end_solve_eps_0.05", |b| {
        b.iter(|| solve_cmc_end(black_box(&params), black_box(&phi), &config).unwrap())
    });
}

fn bench_graph_newton(c: &mut Criterion) {
    let domain = PlanarDomain::new(1.0, vec![Hole { x: 0.0, r: 0.3 }], 1.0 / 32.0).unwrap();
    let data = DirichletData {
        psi_out: 0.05,
        psi_in: vec![0.0],
    };
    let config = GraphSolverConfig {
        tol: 1e-8,
        ..GraphSolverConfig::default()
    };
    c.bench_function("graph_newton_annulus_h32", |b| {
        b.iter(|| solve_dirichlet(black_box(&domain), black_box(&data), &config).unwrap())
    });
}

criterion_group!(
    benches,
    bench_surface_grid,
    bench_cross_section,
    bench_green_op,
    bench_end_solve,
    bench_graph_newton
);
criterion_main!(benches);

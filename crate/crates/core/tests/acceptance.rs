//! End-to-end acceptance gate: eleven numbered criteria, one PASS/FAIL line
//! each. Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines; the test fails if any criterion fails.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hcat_core::catenoid::{
    self, horizontal_graph_extract, CatenoidParams, SurfaceGrid,
};
use hcat_core::end_solver::{
    flat_green_oracle, green_op, linear_residual, poisson_op, solve_cmc_end, solve_mode,
    EndSolverConfig, WeightedField,
};
use hcat_core::fermi::{
    nonlinear_remainder_q, numerical_mean_curvature, riccati_comparison, tubular_flow,
    NormalGraphField, TUBE_RADIUS,
};
use hcat_core::geometry::{curvature_tensor, metric_uhp, TangentVector};
use hcat_core::graph::{
    m_stencil, solve_dirichlet, DirichletData, GraphSolverConfig, Hole, PlanarDomain,
};
use hcat_core::spectral::{
    apply_l, assemble_cross_section, indicial_roots, project_high, synthesize, JacobiFields,
};

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Gate { failures: Vec::new() }
    }

    fn record(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{id} {name}: {verdict} ({detail})");
        if !pass {
            self.failures.push(format!("{id} {name}: {detail}"));
        }
    }
}

fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

fn end_s_grid(s0: f64, span: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| s0 + span * i as f64 / (n - 1) as f64).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(ly.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

fn c01_mean_curvature(gate: &mut Gate) {
    let n = 128;
    let mut worst: f64 = 0.0;
    for &alpha in &[1.0f64, 2.0, 4.0] {
        let params = CatenoidParams::from_alpha(alpha).unwrap();
        // the window keeps both grid directions resolved at n = 128 for the
        // strongly curved alpha = 1 member
        let grid = SurfaceGrid::build(&params, -1.5, 1.5, n, n).unwrap();
        let ds = grid.s_values[1] - grid.s_values[0];
        let dt = grid.theta_values[1] - grid.theta_values[0];
        let h = numerical_mean_curvature(&grid.points, n, n, ds, dt, true).unwrap();
        for i in 2..n - 2 {
            for j in 0..n {
                worst = worst.max((h[i * n + j] - 0.5).abs());
            }
        }
    }
    gate.record(
        "c01",
        "immersion-mean-curvature",
        worst < 1e-5,
        format!("max |H - 1/2| = {worst:.2e} on 128x128, alpha in {{1,2,4}}, bound 1e-5"),
    );
}

fn c02_closed_form_consistency(gate: &mut Gate) {
    let params = CatenoidParams::from_alpha(2.0).unwrap();
    let imm = |s: f64, th: f64| catenoid::immerse_uhp(&params, s, th);
    let fd_h = 1e-3;
    let w1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    let mut worst_metric: f64 = 0.0;
    let mut worst_ambient: f64 = 0.0;
    let mut worst_gauss: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for is in 0..9 {
        let s = -2.0 + 0.5 * is as f64;
        for jt in 0..12 {
            let th = 2.0 * PI * (jt as f64 + 0.5) / 12.0;
            let ff = hcat_core::forms::fundamental_forms(&imm, s, th, fd_h).unwrap();

            // FD first form vs the closed-form induced metric
            let g_exact = catenoid::metric_closed_form(&params, s, th);
            let scale = g_exact[0][0].abs().max(g_exact[1][1].abs());
            for a in 0..2 {
                for b in 0..2 {
                    worst_metric =
                        worst_metric.max((ff.first[a][b] - g_exact[a][b]).abs() / scale);
                }
            }

            // FD tangent plane sectional curvature vs the closed form
            let p = ff.point;
            let mut ds = [0.0; 3];
            let mut dt = [0.0; 3];
            for (k, w) in w1.iter().enumerate() {
                let off = (k as f64 - 2.0) * fd_h;
                let ps = imm(s + off, th).unwrap();
                let pt = imm(s, th + off).unwrap();
                for (c, v) in [ps.x, ps.y, ps.z].iter().enumerate() {
                    ds[c] += w * v / fd_h;
                }
                for (c, v) in [pt.x, pt.y, pt.z].iter().enumerate() {
                    dt[c] += w * v / fd_h;
                }
            }
            let ta = TangentVector::new(p, ds[0], ds[1], ds[2]);
            let tb = TangentVector::new(p, dt[0], dt[1], dt[2]);
            let det_g = metric_uhp(p, &ta, &ta) * metric_uhp(p, &tb, &tb)
                - metric_uhp(p, &ta, &tb).powi(2);
            let ka_fd = curvature_tensor(p, &ta, &tb, &tb, &ta) / det_g;
            let ka = catenoid::ambient_sectional(s, th);
            worst_ambient = worst_ambient.max((ka_fd - ka).abs() / ka.abs().max(1e-2));

            // FD Gauss curvature (ambient term + extrinsic determinant) vs
            // the closed form
            let det_h = ff.second[0][0] * ff.second[1][1] - ff.second[0][1] * ff.second[1][0];
            let det_gf = ff.first[0][0] * ff.first[1][1] - ff.first[0][1] * ff.first[1][0];
            let ks_fd = ka_fd + det_h / det_gf;
            let ks = catenoid::intrinsic_curvature(&params, s, th);
            worst_gauss = worst_gauss.max((ks_fd - ks).abs() / ks.abs().max(1e-2));

            // Gauss equation with FD principal curvatures against the closed
            // curvatures
            let (k1, k2) = ff.principal_curvatures();
            let res = ks - ka - k1 * k2;
            worst_residual = worst_residual.max(res.abs() / ks.abs().max(1e-2));
        }
    }
    let worst = worst_metric
        .max(worst_ambient)
        .max(worst_gauss)
        .max(worst_residual);
    gate.record(
        "c02",
        "closed-form-consistency",
        worst < 1e-5,
        format!(
            "rel errors: metric {worst_metric:.2e}, ambient {worst_ambient:.2e}, gauss {worst_gauss:.2e}, residual {worst_residual:.2e}, bound 1e-5"
        ),
    );
}

fn c03_spectrum(gate: &mut Gate) {
    let mut worst_l0: f64 = 0.0;
    let mut worst_l1: f64 = 0.0;
    let mut scaled = [[0.0f64; 3]; 3];
    for (ia, &alpha) in [4.0f64, 8.0, 16.0].iter().enumerate() {
        let params = CatenoidParams::from_alpha(alpha).unwrap();
        let basis = assemble_cross_section(&params, 16).unwrap();
        let eps = params.epsilon;
        worst_l0 = worst_l0.max(basis.lambdas[0].abs());
        worst_l1 = worst_l1.max((basis.lambdas[1] + (1.0 + eps) * (1.0 + eps)).abs());
        for n in 2..=4usize {
            let nf = n as f64;
            let res = basis.lambdas[n] + nf * nf + 0.5 * nf * nf / (alpha * alpha);
            scaled[ia][n - 2] = (res * alpha.powi(4)).abs();
        }
    }
    let mut stable = true;
    let mut all_bounded = true;
    for n in 0..3 {
        let col: Vec<f64> = (0..3).map(|ia| scaled[ia][n]).collect();
        let hi = col.iter().cloned().fold(0.0f64, f64::max);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        all_bounded &= hi < 10.0;
        stable &= hi / lo < 1.5;
    }
    let pass = worst_l0 < 1e-10 && worst_l1 < 1e-8 && all_bounded && stable;
    gate.record(
        "c03",
        "cross-section-spectrum",
        pass,
        format!(
            "|lambda_0| = {worst_l0:.1e}, |lambda_1 + (1+eps)^2| = {worst_l1:.1e}, alpha^4 residuals {:.2}..{:.2} stable across alpha in {{4,8,16}}",
            scaled.iter().flatten().cloned().fold(f64::INFINITY, f64::min),
            scaled.iter().flatten().cloned().fold(0.0f64, f64::max)
        ),
    );
}

fn c04_indicial_ordering(gate: &mut Gate) {
    let params = CatenoidParams::from_alpha(4.0).unwrap();
    let basis = assemble_cross_section(&params, 12).unwrap();
    let eps = params.epsilon;
    let ordered = indicial_roots(&basis).is_ok();
    let g = &basis.gammas;
    let mut pass = ordered
        && g[1] > 0.0
        && (g[1] - (1.0 + eps)).abs() < 1e-8
        && g[1] < 2.0
        && g[2] > 2.0
        && g[3] > g[2];
    for n in 2..=10usize {
        pass &= g[n] > n as f64;
    }
    gate.record(
        "c04",
        "indicial-root-ordering",
        pass,
        format!(
            "0 < 1+eps = {:.6} < 2 < gamma_2 = {:.6} < gamma_3 = {:.6}, gamma_n > n for n <= 10",
            g[1], g[2], g[3]
        ),
    );
}

fn c05_jacobi_fields(gate: &mut Gate) {
    let params = CatenoidParams::from_alpha(2.0).unwrap();
    let fields = JacobiFields::new(params);
    let n_s = 1201;
    let n_t = 32;
    let sv: Vec<f64> = (0..n_s).map(|i| -3.0 + 6.0 * i as f64 / (n_s - 1) as f64).collect();
    let tv = theta_grid(n_t);
    let mut worst: f64 = 0.0;
    for idx in 0..6 {
        let u: Vec<f64> = sv
            .iter()
            .flat_map(|&s| tv.iter().map(move |&t| fields.eval(idx, s, t)))
            .collect();
        let lu = apply_l(&params, &sv, &tv, &u, true, true);
        let scale = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let max = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(max / scale);
    }
    let gamma = 1.0 + params.epsilon;
    let slope_minus = (fields.v_minus(10.0).ln() - fields.v_minus(6.0).ln()) / 4.0;
    let slope_plus = (fields.v_plus(10.0).ln() - fields.v_plus(6.0).ln()) / 4.0;
    let rate_err = (slope_minus + gamma).abs().max((slope_plus - gamma).abs());
    let pass = worst < 1e-7 && rate_err < 1e-3;
    gate.record(
        "c05",
        "jacobi-fields",
        pass,
        format!(
            "max relative |L v| = {worst:.2e} (bound 1e-7), profile rate error {rate_err:.2e} vs +-(1+eps) (bound 1e-3)"
        ),
    );
}

fn c06_linear_solvers(gate: &mut Gate) {
    let params = CatenoidParams::from_epsilon(0.1).unwrap();
    let basis = assemble_cross_section(&params, 20).unwrap();
    let s_big = catenoid::truncation_s(params.epsilon).unwrap();
    let n_s = 1601;
    let n_t = 64;
    let sv = end_s_grid(s_big, 8.0, n_s);
    let tv = theta_grid(n_t);

    // closed-form solution for an exponential mode source
    let gamma = basis.gammas[3];
    let mut f = WeightedField::zeros(sv.clone(), tv.clone(), -2.0);
    for (i, &s) in sv.iter().enumerate() {
        for (j, &th) in tv.iter().enumerate() {
            f.values[i * n_t + j] = (-2.0 * s).exp() * basis.eval_eigenfunction(3, th);
        }
    }
    let u = green_op(&basis, &f).unwrap();
    let mut err_closed: f64 = 0.0;
    for (i, &s) in sv.iter().enumerate() {
        let exact = ((-2.0 * s_big).exp() * (-gamma * (s - s_big)).exp() - (-2.0 * s).exp())
            / (gamma * gamma - 4.0);
        for (j, &th) in tv.iter().enumerate() {
            let psi = basis.eval_eigenfunction(3, th);
            err_closed = err_closed.max((u.values[i * n_t + j] - exact * psi).abs());
        }
    }

    // forward identity, relative to the source scale, interior rows
    let res = linear_residual(&params, &u, &f);
    let f_scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut err_forward: f64 = 0.0;
    for i in 2..n_s - 2 {
        for j in 0..n_t {
            err_forward = err_forward.max(res[i * n_t + j].abs());
        }
    }
    err_forward /= f_scale;

    // boundary conditions: zero high-mode trace of the Green solution and
    // exact trace of the Poisson extension
    let trace_row: Vec<f64> = u.values[0..n_t].to_vec();
    let proj = project_high(&basis, &trace_row).unwrap();
    let err_green_bc = proj.high.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut coeffs = vec![0.0; basis.n_modes];
    coeffs[2] = 1.0;
    let p = poisson_op(&basis, &coeffs, &sv, &tv).unwrap();
    let want = synthesize(&basis, &coeffs, n_t);
    let err_trace = (0..n_t).fold(0.0f64, |m, j| m.max((p.values[j] - want[j]).abs()));

    // flat-model degeneration oracle vs closed form
    let s_flat: Vec<f64> = (0..1101).map(|i| 1.0 + 11.0 * i as f64 / 1100.0).collect();
    let f0: Vec<f64> = s_flat.iter().map(|&x| (-2.0 * x).exp()).collect();
    let sol = flat_green_oracle(&s_flat, &[f0], -2.5).unwrap();
    let err_flat = s_flat
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (i, &x)| m.max((sol[0][i] - (-2.0 * x).exp() / 4.0).abs()));

    let pass = err_closed < 1e-8
        && err_forward < 1e-7
        && err_green_bc < 1e-7
        && err_trace < 1e-7
        && err_flat < 1e-8;
    gate.record(
        "c06",
        "linear-end-solvers",
        pass,
        format!(
            "closed form {err_closed:.1e} (1e-8), forward {err_forward:.1e} (1e-7), boundary {:.1e}/{:.1e} (1e-7), flat oracle {err_flat:.1e} (1e-8)",
            err_green_bc, err_trace
        ),
    );
}

/// Gain of the mode-2 solve on a source at the resonant decay rate; the
/// gain develops over a length 1/(gamma_2 - 2) ~ 1/eps, hence the long grid.
fn mode2_gain(eps: f64) -> f64 {
    let params = CatenoidParams::from_epsilon(eps).unwrap();
    let basis = assemble_cross_section(&params, 12).unwrap();
    let s_big = catenoid::truncation_s(eps).unwrap();
    let span = 3.0 / eps;
    let n = (span / 0.01).round() as usize + 1;
    let sv = end_s_grid(s_big, span, n);
    let f: Vec<f64> = sv.iter().map(|&s| (-2.0 * (s - s_big)).exp()).collect();
    let u = solve_mode(&sv, &f, basis.gammas[2], -2.0, false).unwrap();
    let wnorm = |v: &[f64]| {
        v.iter()
            .zip(sv.iter())
            .fold(0.0f64, |m, (x, &s)| m.max(x.abs() * s.cosh().powi(2)))
    };
    wnorm(&u) / wnorm(&f)
}

fn c07_green_amplification(gate: &mut Gate) {
    let epsilons = [0.1, 0.05, 0.025];
    let gains: Vec<f64> = epsilons.iter().map(|&e| mode2_gain(e)).collect();
    let slope = log_slope(&epsilons, &gains);
    let pass = (-1.2..=-0.8).contains(&slope);
    gate.record(
        "c07",
        "green-operator-amplification",
        pass,
        format!(
            "gains {:.2}/{:.2}/{:.2} at eps 0.1/0.05/0.025, fitted exponent {slope:.3} in [-1.2, -0.8]",
            gains[0], gains[1], gains[2]
        ),
    );
}

/// Lipschitz constant of the conformally rescaled curvature remainder
/// between ball-scale fields on the end.
fn remainder_lipschitz(eps: f64) -> f64 {
    let params = CatenoidParams::from_epsilon(eps).unwrap();
    let basis = assemble_cross_section(&params, 12).unwrap();
    let s_big = catenoid::truncation_s(eps).unwrap();
    let n_s = 201;
    let n_t = 32;
    let sv = end_s_grid(s_big, 3.0, n_s);
    let tv = theta_grid(n_t);
    let mut coeffs = vec![0.0; 12];
    coeffs[2] = eps * eps;
    let w0 = poisson_op(&basis, &coeffs, &sv, &tv).unwrap();
    let mut d = WeightedField::zeros(sv.clone(), tv.clone(), -2.0);
    for (i, &s) in sv.iter().enumerate() {
        for (j, &th) in tv.iter().enumerate() {
            d.values[i * n_t + j] =
                eps * eps * (-2.0 * (s - s_big)).exp() * basis.eval_eigenfunction(2, th);
        }
    }
    let fa = NormalGraphField::new(
        sv.clone(),
        tv.clone(),
        w0.values.iter().zip(d.values.iter()).map(|(a, b)| a + b).collect(),
    )
    .unwrap();
    let fb = NormalGraphField::new(sv.clone(), tv.clone(), w0.values.clone()).unwrap();
    let qa = nonlinear_remainder_q(&params, &fa).unwrap();
    let qb = nonlinear_remainder_q(&params, &fb).unwrap();
    let mut rq = WeightedField::zeros(sv.clone(), tv, -2.0);
    for (i, &s) in sv.iter().enumerate() {
        for (j, &th) in rq.theta_values.clone().iter().enumerate() {
            let idx = i * n_t + j;
            let mut dq = qa[idx] - qb[idx];
            if dq.abs() < 1e-13 {
                dq = 0.0;
            }
            rq.values[idx] = dq / hcat_core::spectral::geometric_factor(&params, s, th);
        }
    }
    rq.norm(0) / d.norm(0)
}

fn c08_nonlinear_end_solve(gate: &mut Gate) {
    // canonical solve at eps = 0.05
    let params = CatenoidParams::from_epsilon(0.05).unwrap();
    let config = EndSolverConfig {
        s_span: 5.0,
        n_s: 201,
        ..EndSolverConfig::default()
    };
    let basis = assemble_cross_section(&params, config.n_modes).unwrap();
    let mut coeffs = vec![0.0; config.n_modes];
    coeffs[2] = params.epsilon * params.epsilon;
    let phi = synthesize(&basis, &coeffs, config.n_theta);
    let sup_phi = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sol = solve_cmc_end(&params, &phi, &config).unwrap();
    let factor = sol.contraction_factors.first().copied().unwrap_or(0.0);
    let solve_ok = sup_phi <= params.epsilon * params.epsilon * (1.0 + 1e-9)
        && factor <= 0.5
        && sol.iterations <= 20
        && sol.final_h_deviation < 1e-4;

    // linear scaling of the contraction factor: product of the mode-2 gain
    // and the remainder Lipschitz constant, the two factors the contraction
    // argument multiplies. Successive Picard updates are not usable here:
    // past the first step they sit at the curvature-stencil noise floor.
    let epsilons = [0.1, 0.05, 0.025];
    let factors: Vec<f64> = epsilons
        .iter()
        .map(|&e| mode2_gain(e) * remainder_lipschitz(e))
        .collect();
    let slope = log_slope(&epsilons, &factors);
    let scaling_ok = (0.8..=1.2).contains(&slope);

    gate.record(
        "c08",
        "nonlinear-end-solve",
        solve_ok && scaling_ok,
        format!(
            "eps 0.05: factor {factor:.3} <= 0.5, {} iterations <= 20, |H - 1/2| = {:.1e} < 1e-4; factor scaling exponent {slope:.3} in [0.8, 1.2]",
            sol.iterations, sol.final_h_deviation
        ),
    );
}

fn c09_horocylinder_limit(gate: &mut Gate) {
    let gammas: Vec<f64> = (0..8).map(|j| 0.3 + 2.4 * j as f64 / 7.0).collect();
    let rs = [0.5, 0.8, 1.0, 1.5, 2.0];
    let mut constants = Vec::new();
    for &eps in &[0.05f64, 0.025, 0.0125] {
        let params = CatenoidParams::from_epsilon(eps).unwrap();
        let scale = (eps * eps.ln()).powi(2);
        let mut c: f64 = 0.0;
        for &r in &rs {
            let g = horizontal_graph_extract(&params, &[r], &gammas).unwrap();
            let model = 1.0 - eps * eps.ln() + eps * (2.0 * r).ln();
            for &gv in &g[0] {
                c = c.max((gv - model).abs() / scale);
            }
        }
        constants.push(c);
    }
    let hi = constants.iter().cloned().fold(0.0f64, f64::max);
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = hi < 10.0 && hi / lo < 2.0;
    gate.record(
        "c09",
        "horocylinder-limit",
        pass,
        format!(
            "|g - model| / (eps log eps)^2 = {:.2}/{:.2}/{:.2} at eps 0.05/0.025/0.0125 on r in [1/2, 2]",
            constants[0], constants[1], constants[2]
        ),
    );
}

fn c10_graph_solver(gate: &mut Gate) {
    // constants have M = 1 exactly
    let mut exact = true;
    for &c in &[0.5f64, 1.0, 1.3, 2.0, PI] {
        let st = [[c; 3]; 3];
        let (m, _) = m_stencil(&st, 1.0 / 32.0);
        exact &= m == 1.0;
    }

    // the analytic Jacobian at g = 1 is the five-point Laplacian
    let h = 1.0 / 32.0;
    let ih2 = 1.0 / (h * h);
    let (_, jac) = m_stencil(&[[1.0; 3]; 3], h);
    let mut jac_dev: f64 = 0.0;
    for di in 0..3 {
        for dj in 0..3 {
            let expect = match (di, dj) {
                (1, 1) => -4.0 * ih2,
                (0, 1) | (2, 1) | (1, 0) | (1, 2) => ih2,
                _ => 0.0,
            };
            jac_dev = jac_dev.max((jac[di][dj] - expect).abs());
        }
    }

    // annulus Dirichlet problem at the end-matching data scale converges
    // quadratically
    let eps: f64 = 0.05;
    let domain = PlanarDomain::new(1.0, vec![Hole { x: 0.0, r: 0.3 }], 1.0 / 32.0).unwrap();
    let data = DirichletData {
        psi_out: eps * eps.ln().abs(),
        psi_in: vec![0.0],
    };
    let config = GraphSolverConfig {
        smallness: 0.2,
        tol: 1e-8,
        ..GraphSolverConfig::default()
    };
    let sol = solve_dirichlet(&domain, &data, &config).unwrap();
    let hist = &sol.residual_history;
    let final_res = *hist.last().unwrap();
    let mut quadratic = final_res < 1e-8 && sol.iterations <= 6;
    for k in 0..hist.len() - 1 {
        if hist[k + 1] > 1e-12 {
            quadratic &= hist[k + 1] <= 50.0 * hist[k] * hist[k];
        }
    }

    let pass = exact && jac_dev < 1e-12 && quadratic;
    gate.record(
        "c10",
        "horizontal-graph-solver",
        pass,
        format!(
            "M(const) = 1 exact: {exact}, Jacobian vs Laplacian {jac_dev:.1e} < 1e-12, Newton residuals {:?} quadratic to {final_res:.1e}",
            hist.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>()
        ),
    );
}

fn c11_riccati_fermi(gate: &mut Gate) {
    let params = CatenoidParams::from_alpha(4.0).unwrap();
    let s0 = catenoid::truncation_s(params.epsilon).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sandwich_violation: f64 = 0.0;
    for _ in 0..100 {
        let s = s0 + rng.gen_range(0.0..3.0);
        let th = rng.gen_range(0.0..2.0 * PI);
        let t = rng.gen_range(-TUBE_RADIUS..TUBE_RADIUS);
        let flow = tubular_flow(&params, s, th, t).unwrap();
        let first = &flow.samples[0];
        let last = flow.samples.last().unwrap();
        for (k0, kt) in [(first.kappa1, last.kappa1), (first.kappa2, last.kappa2)] {
            let (upper, lower) = riccati_comparison(k0, t).unwrap();
            let (lo, hi) = (lower.min(upper), lower.max(upper));
            sandwich_violation = sandwich_violation
                .max((lo - kt).max(0.0))
                .max((kt - hi).max(0.0));
        }
    }

    // curvature eigenvalues in the transported frame along normal
    // geodesics: one vanishes, the other is constant
    let mut sigma_dev: f64 = 0.0;
    for &(s, th, t) in &[(s0 + 0.5, 0.8, 0.25), (s0 + 1.5, 2.4, -0.25), (s0 + 2.5, 4.0, 0.2)] {
        let flow = tubular_flow(&params, s, th, t).unwrap();
        let vz0 = flow.samples[0].velocity[2];
        let sigma2 = vz0 * vz0 - 1.0;
        for sample in &flow.samples {
            let p = sample.point;
            let vec = |c: &[f64; 3]| TangentVector::new(p, c[0], c[1], c[2]);
            let v = vec(&sample.velocity);
            let es = [vec(&sample.e1), vec(&sample.e2)];
            let mut r = [[0.0f64; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = curvature_tensor(p, &es[i], &v, &v, &es[j]);
                }
            }
            let tr = r[0][0] + r[1][1];
            let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
            sigma_dev = sigma_dev.max(l1.abs()).max((l2 - sigma2).abs());
        }
    }

    let pass = sandwich_violation < 1e-6 && sigma_dev < 1e-8;
    gate.record(
        "c11",
        "riccati-comparison-and-frame-invariants",
        pass,
        format!(
            "sandwich violation {sandwich_violation:.1e} over 100 random end nodes (|t| <= 1/4), curvature eigenvalue drift {sigma_dev:.1e} < 1e-8"
        ),
    );
}

#[test]
fn acceptance_criteria() {
    println!();
    let mut gate = Gate::new();
    c01_mean_curvature(&mut gate);
    c02_closed_form_consistency(&mut gate);
    c03_spectrum(&mut gate);
    c04_indicial_ordering(&mut gate);
    c05_jacobi_fields(&mut gate);
    c06_linear_solvers(&mut gate);
    c07_green_amplification(&mut gate);
    c08_nonlinear_end_solve(&mut gate);
    c09_horocylinder_limit(&mut gate);
    c10_graph_solver(&mut gate);
    c11_riccati_fermi(&mut gate);
    assert!(
        gate.failures.is_empty(),
        "failed criteria:\n{}",
        gate.failures.join("\n")
    );
}

//! Fermi coordinates off the catenoid: shape-operator Riccati flow along
//! normal geodesics with comparison bounds, residual checks for the
//! `t`-expansion of the Fermi metric, normal-graph immersions, grid-based
//! mean curvature, and the nonlinear remainder of the mean curvature
//! expansion.
//!
//! The mean curvature expansion is taken in the trace normalization: with
//! `M(w) = tr(g_w^{-1} h_w)` the linearization at `w = 0` is the full
//! Jacobi operator `J = laplacian + |h|^2 + Ric(nu)`, which in `(s, theta)`
//! coordinates is the conformal multiple of the flat operator implemented
//! in the spectral module. The remainder is
//! `Q(w) = M(w) - 1 - J w`, quadratically small in `w`.

use std::io::Write as _;
use std::path::Path;

use crate::catenoid::{self, CatenoidParams};
use crate::error::{HcatError, Result};
use crate::forms::{fundamental_forms, unit_normal, FormsAtPoint};
use crate::geometry::{christoffel, exp_map, metric_uhp, TangentVector, UhpPoint};
use crate::spectral::{apply_l, geometric_factor};

/// Radius of the tubular neighbourhood on which all Fermi machinery is
/// trusted.
pub const TUBE_RADIUS: f64 = 0.25;

/// Fixed RK4 step for the Riccati and parallel-transport flows.
pub const RICCATI_STEP: f64 = 1e-3;

const FD_H: f64 = 1e-3;
const W1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// Principal curvatures of the tubular hypersurface at offset `t` over the
/// base node `(s, theta)`.
#[derive(Debug, Clone, Copy)]
pub struct TubularState {
    pub s: f64,
    pub theta: f64,
    pub t: f64,
    pub kappa1_t: f64,
    pub kappa2_t: f64,
}

/// One recorded point of the normal-geodesic flow.
#[derive(Debug, Clone, Copy)]
pub struct TubularSample {
    pub t: f64,
    pub point: UhpPoint,
    /// Geodesic velocity (the Fermi direction `d_3`), coordinate components.
    pub velocity: [f64; 3],
    /// Parallel-transported principal directions.
    pub e1: [f64; 3],
    pub e2: [f64; 3],
    pub kappa1: f64,
    pub kappa2: f64,
    /// Sectional curvatures of the planes spanned by the velocity and each
    /// transported direction.
    pub rho1: f64,
    pub rho2: f64,
}

/// Full record of the flow from `t = 0` out to the requested offset.
#[derive(Debug, Clone)]
pub struct TubularFlow {
    pub samples: Vec<TubularSample>,
}

/// Coordinate tangent vectors of the catenoid immersion by 5-point stencils.
fn catenoid_tangents(
    params: &CatenoidParams,
    s: f64,
    theta: f64,
) -> Result<(TangentVector, TangentVector)> {
    let p = catenoid::immerse_uhp(params, s, theta)?;
    let mut ds = [0.0; 3];
    let mut dt = [0.0; 3];
    for (k, w) in W1.iter().enumerate() {
        let off = (k as f64 - 2.0) * FD_H;
        let ps = catenoid::immerse_uhp(params, s + off, theta)?;
        let pt = catenoid::immerse_uhp(params, s, theta + off)?;
        ds[0] += w * ps.x;
        ds[1] += w * ps.y;
        ds[2] += w * ps.z;
        dt[0] += w * pt.x;
        dt[1] += w * pt.y;
        dt[2] += w * pt.z;
    }
    let scale = 1.0 / FD_H;
    Ok((
        TangentVector::new(p, ds[0] * scale, ds[1] * scale, ds[2] * scale),
        TangentVector::new(p, dt[0] * scale, dt[1] * scale, dt[2] * scale),
    ))
}

/// Unit principal directions paired with the descending-sorted curvatures.
fn principal_directions(
    params: &CatenoidParams,
    s: f64,
    theta: f64,
) -> Result<(FormsAtPoint, TangentVector, TangentVector)> {
    let imm = |a: f64, b: f64| catenoid::immerse_uhp(params, a, b);
    let forms = fundamental_forms(&imm, s, theta, FD_H)?;
    let (xs, xt) = catenoid_tangents(params, s, theta)?;
    let g = forms.first;
    let h = forms.second;
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    // Shape operator A = g^{-1} h in the coordinate basis.
    let a00 = (g[1][1] * h[0][0] - g[0][1] * h[1][0]) / det;
    let a01 = (g[1][1] * h[0][1] - g[0][1] * h[1][1]) / det;
    let a10 = (g[0][0] * h[1][0] - g[0][1] * h[0][0]) / det;
    let a11 = (g[0][0] * h[1][1] - g[0][1] * h[0][1]) / det;
    let (k1, k2) = forms.principal_curvatures();

    let eigvec = |k: f64| -> [f64; 2] {
        let r1 = [a01, k - a00];
        let r2 = [k - a11, a10];
        let n1 = r1[0].abs() + r1[1].abs();
        let n2 = r2[0].abs() + r2[1].abs();
        if n1 >= n2 && n1 > 1e-14 {
            r1
        } else if n2 > 1e-14 {
            r2
        } else {
            [1.0, 0.0]
        }
    };
    let to_ambient = |v: [f64; 2]| -> Result<TangentVector> {
        TangentVector::new(
            forms.point,
            v[0] * xs.vx + v[1] * xt.vx,
            v[0] * xs.vy + v[1] * xt.vy,
            v[0] * xs.vz + v[1] * xt.vz,
        )
        .normalized()
    };
    let e1 = to_ambient(eigvec(k1))?;
    let mut e2 = to_ambient(eigvec(k2))?;
    // Orthogonalize against e1; the eigenvectors are metric-orthogonal in
    // exact arithmetic whenever k1 != k2.
    let d = metric_uhp(forms.point, &e1, &e2);
    e2 = TangentVector::new(
        forms.point,
        e2.vx - d * e1.vx,
        e2.vy - d * e1.vy,
        e2.vz - d * e1.vz,
    )
    .normalized()?;
    Ok((forms, e1, e2))
}

fn cross_unit(p: UhpPoint, u: &[f64; 3], v: &[f64; 3]) -> Result<[f64; 3]> {
    // Components in the orthonormal frame (y dx, y dy, dz).
    let a = [u[0] / p.y, u[1] / p.y, u[2]];
    let b = [v[0] / p.y, v[1] / p.y, v[2]];
    let n = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len < 1e-12 {
        return Err(HcatError::Precondition("degenerate curvature plane".into()));
    }
    Ok([n[0] / len, n[1] / len, n[2] / len])
}

/// Sectional curvature of the plane spanned by `u` and `v` (coordinate
/// components at `p`): `-nz^2` for the unit frame normal `n`.
fn plane_sectional(p: UhpPoint, u: &[f64; 3], v: &[f64; 3]) -> Result<f64> {
    let n = cross_unit(p, u, v)?;
    Ok(-n[2] * n[2])
}

type FlowState = [f64; 14];

fn flow_deriv(y: &FlowState) -> Result<(FlowState, f64, f64)> {
    let p = UhpPoint::new(y[0], y[1], y[2])?;
    let gam = christoffel(p)?;
    let vel = [y[3], y[4], y[5]];
    let e1 = [y[6], y[7], y[8]];
    let e2 = [y[9], y[10], y[11]];
    let transport = |v: &[f64; 3]| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    *o -= gam[k][i][j] * vel[i] * v[j];
                }
            }
        }
        out
    };
    let acc = transport(&vel);
    let de1 = transport(&e1);
    let de2 = transport(&e2);
    let rho1 = plane_sectional(p, &vel, &e1)?;
    let rho2 = plane_sectional(p, &vel, &e2)?;
    let mut dy = [0.0; 14];
    dy[0] = vel[0];
    dy[1] = vel[1];
    dy[2] = vel[2];
    dy[3..6].copy_from_slice(&acc);
    dy[6..9].copy_from_slice(&de1);
    dy[9..12].copy_from_slice(&de2);
    dy[12] = y[12] * y[12] + rho1;
    dy[13] = y[13] * y[13] + rho2;
    Ok((dy, rho1, rho2))
}

fn sample_from_state(t: f64, y: &FlowState, rho1: f64, rho2: f64) -> Result<TubularSample> {
    Ok(TubularSample {
        t,
        point: UhpPoint::new(y[0], y[1], y[2])?,
        velocity: [y[3], y[4], y[5]],
        e1: [y[6], y[7], y[8]],
        e2: [y[9], y[10], y[11]],
        kappa1: y[12],
        kappa2: y[13],
        rho1,
        rho2,
    })
}

/// Integrates the normal-geodesic flow from the catenoid node out to the
/// signed offset `t`, carrying parallel-transported principal directions
/// and the scalar Riccati equations `dk_i/dt = k_i^2 + rho_i`.
pub fn tubular_flow(params: &CatenoidParams, s: f64, theta: f64, t: f64) -> Result<TubularFlow> {
    if t.abs() > TUBE_RADIUS {
        return Err(HcatError::Precondition(format!(
            "offset {t} outside the tube of radius {TUBE_RADIUS}"
        )));
    }
    let (forms, e1, e2) = principal_directions(params, s, theta)?;
    let (k1, k2) = forms.principal_curvatures();
    let nu = forms.normal;
    let mut y: FlowState = [
        forms.point.x,
        forms.point.y,
        forms.point.z,
        nu.vx,
        nu.vy,
        nu.vz,
        e1.vx,
        e1.vy,
        e1.vz,
        e2.vx,
        e2.vy,
        e2.vz,
        k1,
        k2,
    ];
    let (_, rho1, rho2) = flow_deriv(&y)?;
    let mut samples = vec![sample_from_state(0.0, &y, rho1, rho2)?];
    if t == 0.0 {
        return Ok(TubularFlow { samples });
    }
    let n_steps = (t.abs() / RICCATI_STEP).ceil().max(1.0) as usize;
    let h = t / n_steps as f64;
    let mut time = 0.0;
    for _ in 0..n_steps {
        let (k1_, k2_, _, _) = step_rk4(&mut y, h)?;
        time += h;
        if k1_.abs() > 1e3 || k2_.abs() > 1e3 {
            return Err(HcatError::FiniteTimeBlowup { t_critical: time });
        }
        let (_, r1, r2) = flow_deriv(&y)?;
        samples.push(sample_from_state(time, &y, r1, r2)?);
    }
    Ok(TubularFlow { samples })
}

fn step_rk4(y: &mut FlowState, h: f64) -> Result<(f64, f64, f64, f64)> {
    let add = |a: &FlowState, b: &FlowState, c: f64| -> FlowState {
        let mut out = *a;
        for (o, v) in out.iter_mut().zip(b.iter()) {
            *o += c * v;
        }
        out
    };
    let (k1, ..) = flow_deriv(y)?;
    let (k2, ..) = flow_deriv(&add(y, &k1, h / 2.0))?;
    let (k3, ..) = flow_deriv(&add(y, &k2, h / 2.0))?;
    let (k4, ..) = flow_deriv(&add(y, &k3, h))?;
    for i in 0..14 {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok((y[12], y[13], y[0], y[1]))
}

/// Principal curvatures of the tubular hypersurface at offset `t`.
pub fn tubular_curvatures(
    params: &CatenoidParams,
    s: f64,
    theta: f64,
    t: f64,
) -> Result<TubularState> {
    let flow = tubular_flow(params, s, theta, t)?;
    let last = flow.samples.last().unwrap();
    Ok(TubularState {
        s,
        theta,
        t,
        kappa1_t: last.kappa1,
        kappa2_t: last.kappa2,
    })
}

/// Integrates the scalar Riccati equation `k' = k^2 + rho` with frozen
/// `rho`, fixed-step RK4.
pub fn scalar_riccati(kappa0: f64, rho: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(kappa0);
    }
    let n_steps = (t.abs() / RICCATI_STEP).ceil().max(1.0) as usize;
    let h = t / n_steps as f64;
    let mut k = kappa0;
    let mut time = 0.0;
    let f = |k: f64| k * k + rho;
    for _ in 0..n_steps {
        let k1 = f(k);
        let k2 = f(k + h / 2.0 * k1);
        let k3 = f(k + h / 2.0 * k2);
        let k4 = f(k + h * k3);
        k += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        time += h;
        if k.abs() > 1e6 {
            return Err(HcatError::FiniteTimeBlowup { t_critical: time });
        }
    }
    Ok(k)
}

/// Closed-form comparison solutions `(upper, lower)` for the Riccati flow:
/// the solution of `k' = k^2` (ambient curvature frozen at 0) and of
/// `k' = k^2 - 1` (frozen at -1), both from `k(0) = kappa0`. For `t >= 0`
/// they bound any flow with sectional curvatures in `[-1, 0]` from above
/// and below; for `t <= 0` the bounds swap.
pub fn riccati_comparison(kappa0: f64, t: f64) -> Result<(f64, f64)> {
    if t.abs() > TUBE_RADIUS {
        return Err(HcatError::Precondition(format!(
            "offset {t} outside the tube of radius {TUBE_RADIUS}"
        )));
    }
    let den_u = 1.0 - kappa0 * t;
    if den_u.abs() < 1e-10 {
        return Err(HcatError::ComparisonBreakdown { t });
    }
    let upper = kappa0 / den_u;
    let e2t = (2.0 * t).exp();
    let den_l = kappa0 + 1.0 - (kappa0 - 1.0) * e2t;
    if den_l.abs() < 1e-10 {
        return Err(HcatError::ComparisonBreakdown { t });
    }
    let lower = (kappa0 + 1.0 + (kappa0 - 1.0) * e2t) / den_l;
    Ok((upper, lower))
}

/// Residual report for the `t`-expansion of the Fermi metric at one node.
#[derive(Debug, Clone)]
pub struct FermiReport {
    pub s: f64,
    pub theta: f64,
    pub t: f64,
    /// Surface data at `t = 0`.
    pub g_surface: [[f64; 2]; 2],
    pub h_surface: [[f64; 2]; 2],
    /// Pullback metric of the tubular hypersurface at offset `t`.
    pub g_tilde: [[f64; 2]; 2],
    /// Linear model `g - 2 h t`.
    pub g_model: [[f64; 2]; 2],
    pub residual: [[f64; 2]; 2],
    /// `max |residual| / t^2` (zero when `t = 0`).
    pub remainder_ratio: f64,
    /// Normal Christoffel symbols of the Fermi chart (second form of the
    /// tubular hypersurface with respect to the Fermi direction).
    pub gamma3: [[f64; 2]; 2],
    /// First three `t`-derivatives of the pullback metric at offset `t`.
    pub dg_dt: [[f64; 2]; 2],
    pub d2g_dt2: [[f64; 2]; 2],
    pub d3g_dt3: [[f64; 2]; 2],
    /// `max |gamma3 + dg_dt / 2|`.
    pub christoffel_residual: f64,
}

impl FermiReport {
    /// Rows in the residual-report CSV schema
    /// `s,theta,t,quantity,value,bound,ratio`.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        let mut push = |name: &str, value: f64, bound: f64, ratio: f64| {
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                self.s, self.theta, self.t, name, value, bound, ratio
            ));
        };
        let max_abs = |m: &[[f64; 2]; 2]| {
            m.iter()
                .flatten()
                .fold(0.0f64, |acc, v| acc.max(v.abs()))
        };
        push(
            "metric_linear_residual",
            max_abs(&self.residual),
            self.t * self.t,
            self.remainder_ratio,
        );
        push(
            "christoffel_residual",
            self.christoffel_residual,
            1e-6,
            self.christoffel_residual / 1e-6,
        );
        push("dg_dt_max", max_abs(&self.dg_dt), f64::INFINITY, 0.0);
        push("d2g_dt2_max", max_abs(&self.d2g_dt2), f64::INFINITY, 0.0);
        push("d3g_dt3_max", max_abs(&self.d3g_dt3), f64::INFINITY, 0.0);
        rows
    }
}

/// Writes residual reports in the CSV schema of [`FermiReport::csv_rows`].
pub fn write_residual_csv(reports: &[FermiReport], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "s,theta,t,quantity,value,bound,ratio")?;
    for r in reports {
        for row in r.csv_rows() {
            writeln!(w, "{row}")?;
        }
    }
    Ok(())
}

/// The Fermi chart point `exp(X(a, b), tau nu(a, b))`.
fn fermi_chart(params: &CatenoidParams, a: f64, b: f64, tau: f64) -> Result<UhpPoint> {
    let imm = |u: f64, v: f64| catenoid::immerse_uhp(params, u, v);
    let forms = fundamental_forms(&imm, a, b, FD_H)?;
    exp_map(forms.point, &forms.normal, tau)
}

/// Pullback metric of the `tau`-level hypersurface of the Fermi chart,
/// by 5-point stencils in the surface directions.
fn fermi_metric(params: &CatenoidParams, s: f64, theta: f64, tau: f64) -> Result<[[f64; 2]; 2]> {
    let p = fermi_chart(params, s, theta, tau)?;
    let mut da = [0.0; 3];
    let mut db = [0.0; 3];
    for (k, w) in W1.iter().enumerate() {
        let off = (k as f64 - 2.0) * FD_H;
        let pa = fermi_chart(params, s + off, theta, tau)?;
        let pb = fermi_chart(params, s, theta + off, tau)?;
        da[0] += w * pa.x;
        da[1] += w * pa.y;
        da[2] += w * pa.z;
        db[0] += w * pb.x;
        db[1] += w * pb.y;
        db[2] += w * pb.z;
    }
    let ta = TangentVector::new(p, da[0] / FD_H, da[1] / FD_H, da[2] / FD_H);
    let tb = TangentVector::new(p, db[0] / FD_H, db[1] / FD_H, db[2] / FD_H);
    let g = [
        [metric_uhp(p, &ta, &ta), metric_uhp(p, &ta, &tb)],
        [metric_uhp(p, &tb, &ta), metric_uhp(p, &tb, &tb)],
    ];
    if g[0][0] <= 0.0 || g[0][0] * g[1][1] - g[0][1] * g[1][0] <= 0.0 {
        return Err(HcatError::OutOfChart {
            context: format!("Fermi chart degenerate at ({s}, {theta}, {tau})"),
        });
    }
    Ok(g)
}

/// Compares the Fermi metric at `(s, theta, t)` with the linear model
/// `g - 2 h t` and checks the normal Christoffel identity
/// `Gamma^3_ij = -(1/2) dg~_ij/dt`.
pub fn fermi_metric_check(
    params: &CatenoidParams,
    s: f64,
    theta: f64,
    t: f64,
) -> Result<FermiReport> {
    if t.abs() > TUBE_RADIUS {
        return Err(HcatError::Precondition(format!(
            "offset {t} outside the tube of radius {TUBE_RADIUS}"
        )));
    }
    let imm0 = |a: f64, b: f64| catenoid::immerse_uhp(params, a, b);
    let forms0 = fundamental_forms(&imm0, s, theta, FD_H)?;
    let g_surface = forms0.first;
    let h_surface = forms0.second;

    let g_tilde = fermi_metric(params, s, theta, t)?;

    // Second form of the t-level hypersurface with respect to the Fermi
    // direction (the geodesic velocity), which equals Gamma^3_ij.
    let imm_t = |a: f64, b: f64| fermi_chart(params, a, b, t);
    let mut forms_t = fundamental_forms(&imm_t, s, theta, FD_H)?;
    let p_t = forms_t.point;
    let d3 = {
        let mut d = [0.0; 3];
        for (k, w) in W1.iter().enumerate() {
            let off = (k as f64 - 2.0) * FD_H;
            let q = fermi_chart(params, s, theta, t + off)?;
            d[0] += w * q.x;
            d[1] += w * q.y;
            d[2] += w * q.z;
        }
        TangentVector::new(p_t, d[0] / FD_H, d[1] / FD_H, d[2] / FD_H)
    };
    if metric_uhp(p_t, &d3, &forms_t.normal) < 0.0 {
        forms_t.flip_orientation();
    }
    let gamma3 = forms_t.second;

    // t-derivatives of the pullback metric. The first two use 5-point
    // 4th-order stencils, the third a 5-point 2nd-order one; a wider step
    // keeps the third difference above roundoff.
    let ht = 0.02;
    let mut levels = [[[0.0; 2]; 2]; 5];
    for (k, level) in levels.iter_mut().enumerate() {
        *level = fermi_metric(params, s, theta, t + (k as f64 - 2.0) * ht)?;
    }
    let mut dg_dt = [[0.0; 2]; 2];
    let mut d2g_dt2 = [[0.0; 2]; 2];
    let mut d3g_dt3 = [[0.0; 2]; 2];
    let w2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
    let w3 = [-0.5, 1.0, 0.0, -1.0, 0.5];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..5 {
                dg_dt[i][j] += W1[k] * levels[k][i][j] / ht;
                d2g_dt2[i][j] += w2[k] * levels[k][i][j] / (ht * ht);
                d3g_dt3[i][j] += w3[k] * levels[k][i][j] / (ht * ht * ht);
            }
        }
    }

    let mut residual = [[0.0; 2]; 2];
    let mut g_model = [[0.0; 2]; 2];
    let mut max_resid: f64 = 0.0;
    let mut christoffel_residual: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            g_model[i][j] = g_surface[i][j] - 2.0 * h_surface[i][j] * t;
            residual[i][j] = g_tilde[i][j] - g_model[i][j];
            max_resid = max_resid.max(residual[i][j].abs());
            christoffel_residual =
                christoffel_residual.max((gamma3[i][j] + 0.5 * dg_dt[i][j]).abs());
        }
    }
    let remainder_ratio = if t == 0.0 { 0.0 } else { max_resid / (t * t) };
    Ok(FermiReport {
        s,
        theta,
        t,
        g_surface,
        h_surface,
        g_tilde,
        g_model,
        residual,
        remainder_ratio,
        gamma3,
        dg_dt,
        d2g_dt2,
        d3g_dt3,
        christoffel_residual,
    })
}

/// Normal offset field over an `(s, theta)` grid (theta uniform on
/// `[0, 2 pi)`, row-major storage).
#[derive(Debug, Clone)]
pub struct NormalGraphField {
    pub s_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub w: Vec<f64>,
}

impl NormalGraphField {
    pub fn new(s_values: Vec<f64>, theta_values: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if w.len() != s_values.len() * theta_values.len() {
            return Err(HcatError::Precondition("offset field size mismatch".into()));
        }
        let field = Self {
            s_values,
            theta_values,
            w,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn validate(&self) -> Result<()> {
        for &w in &self.w {
            if !(w.abs() < TUBE_RADIUS) {
                return Err(HcatError::OutOfTube {
                    w,
                    radius: TUBE_RADIUS,
                });
            }
        }
        Ok(())
    }
}

/// Immerses the normal graph `exp(X, w nu)` node by node.
pub fn normal_graph_immerse(
    params: &CatenoidParams,
    field: &NormalGraphField,
) -> Result<Vec<UhpPoint>> {
    field.validate()?;
    let imm = |a: f64, b: f64| catenoid::immerse_uhp(params, a, b);
    let n_t = field.theta_values.len();
    let mut out = Vec::with_capacity(field.w.len());
    for (i, &s) in field.s_values.iter().enumerate() {
        for (j, &th) in field.theta_values.iter().enumerate() {
            let forms = fundamental_forms(&imm, s, th, FD_H)?;
            out.push(exp_map(forms.point, &forms.normal, field.w[i * n_t + j])?);
        }
    }
    Ok(out)
}

/// Derivative of one coordinate component along the first grid direction:
/// centered 4th-order inside, centered 2nd-order one row in, one-sided
/// 2nd-order at the boundary rows.
fn d_rows(f: &[f64], n_a: usize, n_b: usize, h: f64, order: usize) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for j in 0..n_b {
        let at = |i: usize| f[i * n_b + j];
        for i in 0..n_a {
            let v = match order {
                1 => {
                    if i >= 2 && i + 2 < n_a {
                        (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h)
                    } else if i == 0 {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    } else if i == n_a - 1 {
                        (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h)
                    } else {
                        (at(i + 1) - at(i - 1)) / (2.0 * h)
                    }
                }
                2 => {
                    if i >= 2 && i + 2 < n_a {
                        (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1)
                            - at(i - 2))
                            / (12.0 * h * h)
                    } else if i == 0 {
                        (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h)
                    } else if i == n_a - 1 {
                        (2.0 * at(i) - 5.0 * at(i - 1) + 4.0 * at(i - 2) - at(i - 3)) / (h * h)
                    } else {
                        (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h)
                    }
                }
                _ => unreachable!(),
            };
            out[i * n_b + j] = v;
        }
    }
    out
}

/// Same stencils along the second grid direction, optionally periodic.
fn d_cols(f: &[f64], n_a: usize, n_b: usize, h: f64, order: usize, periodic: bool) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for i in 0..n_a {
        let at = |j: isize| -> f64 {
            if periodic {
                f[i * n_b + j.rem_euclid(n_b as isize) as usize]
            } else {
                f[i * n_b + j as usize]
            }
        };
        for j in 0..n_b {
            let ji = j as isize;
            let interior = periodic || (j >= 2 && j + 2 < n_b);
            let v = match order {
                1 => {
                    if interior {
                        (-at(ji + 2) + 8.0 * at(ji + 1) - 8.0 * at(ji - 1) + at(ji - 2))
                            / (12.0 * h)
                    } else if j == 0 {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    } else if j == n_b - 1 {
                        (3.0 * at(ji) - 4.0 * at(ji - 1) + at(ji - 2)) / (2.0 * h)
                    } else {
                        (at(ji + 1) - at(ji - 1)) / (2.0 * h)
                    }
                }
                2 => {
                    if interior {
                        (-at(ji + 2) + 16.0 * at(ji + 1) - 30.0 * at(ji) + 16.0 * at(ji - 1)
                            - at(ji - 2))
                            / (12.0 * h * h)
                    } else if j == 0 {
                        (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h)
                    } else if j == n_b - 1 {
                        (2.0 * at(ji) - 5.0 * at(ji - 1) + 4.0 * at(ji - 2) - at(ji - 3)) / (h * h)
                    } else {
                        (at(ji + 1) - 2.0 * at(ji) + at(ji - 1)) / (h * h)
                    }
                }
                _ => unreachable!(),
            };
            out[i * n_b + j] = v;
        }
    }
    out
}

/// Mean curvature `tr(g^{-1} h) / 2` of a grid immersion, by finite
/// differences of the node positions. The grid is `n_a x n_b` row-major
/// with spacings `ha`, `hb`; the second direction may be periodic. The
/// orientation is chosen per node so that the mean curvature is
/// nonnegative, matching the catenoid convention `kappa_1 + kappa_2 = +1`.
pub fn numerical_mean_curvature(
    points: &[UhpPoint],
    n_a: usize,
    n_b: usize,
    ha: f64,
    hb: f64,
    periodic_b: bool,
) -> Result<Vec<f64>> {
    assert_eq!(points.len(), n_a * n_b);
    let comp = |sel: fn(&UhpPoint) -> f64| -> Vec<f64> { points.iter().map(sel).collect() };
    let xs = [comp(|p| p.x), comp(|p| p.y), comp(|p| p.z)];
    let mut da = Vec::new();
    let mut db = Vec::new();
    let mut daa = Vec::new();
    let mut dbb = Vec::new();
    let mut dab = Vec::new();
    for c in &xs {
        da.push(d_rows(c, n_a, n_b, ha, 1));
        db.push(d_cols(c, n_a, n_b, hb, 1, periodic_b));
        daa.push(d_rows(c, n_a, n_b, ha, 2));
        dbb.push(d_cols(c, n_a, n_b, hb, 2, periodic_b));
    }
    for c in &da {
        dab.push(d_cols(c, n_a, n_b, hb, 1, periodic_b));
    }
    let mut out = vec![0.0; points.len()];
    for (idx, p) in points.iter().enumerate() {
        let ta = TangentVector::new(*p, da[0][idx], da[1][idx], da[2][idx]);
        let tb = TangentVector::new(*p, db[0][idx], db[1][idx], db[2][idx]);
        let g = [
            [metric_uhp(*p, &ta, &ta), metric_uhp(*p, &ta, &tb)],
            [metric_uhp(*p, &tb, &ta), metric_uhp(*p, &tb, &tb)],
        ];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if det <= 0.0 || g[0][0] <= 0.0 {
            return Err(HcatError::DegenerateMetric {
                i: idx / n_b,
                j: idx % n_b,
            });
        }
        let nu = unit_normal(*p, &ta, &tb)?;
        let gam = christoffel(*p)?;
        let second = |dd: &[Vec<f64>], u: &TangentVector, v: &TangentVector| -> f64 {
            let mut corr = [dd[0][idx], dd[1][idx], dd[2][idx]];
            let uc = [u.vx, u.vy, u.vz];
            let vc = [v.vx, v.vy, v.vz];
            for (k, c) in corr.iter_mut().enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        *c += gam[k][i][j] * uc[i] * vc[j];
                    }
                }
            }
            let acc = TangentVector::new(*p, corr[0], corr[1], corr[2]);
            metric_uhp(*p, &acc, &nu)
        };
        let h00 = second(&daa, &ta, &ta);
        let h01 = second(&dab, &ta, &tb);
        let h11 = second(&dbb, &tb, &tb);
        let hmean = 0.5 * (g[1][1] * h00 - 2.0 * g[0][1] * h01 + g[0][0] * h11) / det;
        out[idx] = hmean.abs();
    }
    Ok(out)
}

/// Nonlinear remainder of the mean curvature expansion in the trace
/// normalization: `Q(w) = 2 H(w) - 1 - J w`, with `H` from
/// [`numerical_mean_curvature`] of the normal graph and `J` the geometric
/// Jacobi operator (conformal multiple of the flat stability operator).
pub fn nonlinear_remainder_q(
    params: &CatenoidParams,
    field: &NormalGraphField,
) -> Result<Vec<f64>> {
    field.validate()?;
    let n_s = field.s_values.len();
    let n_t = field.theta_values.len();
    let ds = field.s_values[1] - field.s_values[0];
    let dt = 2.0 * std::f64::consts::PI / n_t as f64;
    let points = normal_graph_immerse(params, field)?;
    let h_mean = numerical_mean_curvature(&points, n_s, n_t, ds, dt, true)?;
    let lw = apply_l(params, &field.s_values, &field.theta_values, &field.w, true, true);
    let mut out = vec![0.0; field.w.len()];
    for i in 0..n_s {
        for j in 0..n_t {
            let idx = i * n_t + j;
            let jac = geometric_factor(params, field.s_values[i], field.theta_values[j]) * lw[idx];
            out[idx] = 2.0 * h_mean[idx] - 1.0 - jac;
        }
    }
    Ok(out)
}

/// Verifies the decomposition of the graph metric through the Fermi chart:
/// `(g_w)_ij = g~_ij(x, w(x)) + w_i w_j`. Returns the maximum residual over
/// the component entries at `(s, theta)`.
pub fn graph_metric_decomposition_check(
    params: &CatenoidParams,
    s: f64,
    theta: f64,
    w: &dyn Fn(f64, f64) -> f64,
) -> Result<f64> {
    let graph = |a: f64, b: f64| -> Result<UhpPoint> {
        let imm = |u: f64, v: f64| catenoid::immerse_uhp(params, u, v);
        let forms = fundamental_forms(&imm, a, b, FD_H)?;
        exp_map(forms.point, &forms.normal, w(a, b))
    };
    let forms_w = fundamental_forms(&graph, s, theta, FD_H)?;
    let g_w = forms_w.first;
    let g_tilde = fermi_metric(params, s, theta, w(s, theta))?;
    // Gradient of w by the same stencil.
    let mut wa = 0.0;
    let mut wb = 0.0;
    for (k, c) in W1.iter().enumerate() {
        let off = (k as f64 - 2.0) * FD_H;
        wa += c * w(s + off, theta) / FD_H;
        wb += c * w(s, theta + off) / FD_H;
    }
    let grad = [wa, wb];
    let mut max_resid: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let model = g_tilde[i][j] + grad[i] * grad[j];
            max_resid = max_resid.max((g_w[i][j] - model).abs());
        }
    }
    Ok(max_resid)
}

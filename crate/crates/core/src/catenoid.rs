//! The one-parameter family of horizontal catenoids: cmc 1/2 annuli in
//! H^2 x R indexed by necksize.
//!
//! Two parametrizations are provided. The conformal `(u, v)` parametrization
//! in the disc model requires the profile ODEs; the `(s, theta)`
//! parametrization in the upper half-plane is fully closed-form and is the
//! one used by the solvers. They are related by `s = alpha v`,
//! `theta = -phi(u)`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{HcatError, Result};
use crate::forms::{fundamental_forms, FormsAtPoint};
use crate::geometry::{uhp_to_ball, BallPoint, TangentVector, UhpPoint};
use crate::numerics::{rkf45, OdeSolution};

/// Necksize family parameters: `alpha_star = sqrt(alpha^2 + 1)` and
/// `epsilon = alpha_star/alpha - 1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatenoidParams {
    pub alpha: f64,
    pub alpha_star: f64,
    pub epsilon: f64,
}

impl CatenoidParams {
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(HcatError::Precondition(format!("alpha = {alpha} must be positive")));
        }
        let alpha_star = alpha.hypot(1.0);
        Ok(Self {
            alpha,
            alpha_star,
            epsilon: alpha_star / alpha - 1.0,
        })
    }

    /// Inverts `(1 + epsilon)^2 = 1 + alpha^{-2}`.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(HcatError::Precondition(format!(
                "epsilon = {epsilon} must be positive"
            )));
        }
        Self::from_alpha(1.0 / (epsilon * (epsilon + 2.0)).sqrt())
    }

    /// Checks the defining relations to 1e-12.
    pub fn validate(&self) -> Result<()> {
        // r1 compares quantities of size alpha^2, so its roundoff budget
        // scales with them.
        let r1 = self.alpha_star * self.alpha_star - self.alpha * self.alpha - 1.0;
        let r2 = self.epsilon - (self.alpha_star / self.alpha - 1.0);
        if r1.abs() > 1e-12 * (1.0 + self.alpha * self.alpha) || r2.abs() > 1e-12
            || !(self.epsilon > 0.0)
        {
            return Err(HcatError::Precondition(format!(
                "inconsistent parameters: residuals {r1:.3e}, {r2:.3e}"
            )));
        }
        Ok(())
    }
}

/// The profile derivative `phi'` as a function of the angular coordinate:
/// `phi'(theta) = -sqrt(alpha^2 + cos^2 theta)` (negative branch).
pub fn phi_prime_of_theta(params: &CatenoidParams, theta: f64) -> f64 {
    let c = theta.cos();
    -(params.alpha * params.alpha + c * c).sqrt()
}

/// One node of an integrated profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSample {
    pub u: f64,
    pub phi: f64,
    pub phi_star: f64,
    pub f: f64,
}

/// Dense solution of the profile initial value problems
/// `(phi')^2 = alpha^2 + cos^2 phi`, `(phi_star')^2 = alpha_star^2 - cos^2 phi_star`,
/// both vanishing at `u = 0` with negative initial derivative.
#[derive(Debug, Clone)]
pub struct Profile {
    params: CatenoidParams,
    pos: OdeSolution<2>,
    neg: OdeSolution<2>,
    u_max: f64,
}

impl Profile {
    pub fn eval(&self, u: f64) -> (f64, f64) {
        assert!(u.abs() <= self.u_max + 1e-12, "u = {u} outside integrated window");
        let y = if u >= 0.0 { self.pos.eval(u) } else { self.neg.eval(u) };
        (y[0], y[1])
    }

    /// The auxiliary function `f(u)`; singular where `cos phi` vanishes.
    pub fn f(&self, u: f64) -> Result<f64> {
        let (phi, phi_star) = self.eval(u);
        profile_f(&self.params, phi, phi_star, u)
    }

    /// Samples at the accepted integration nodes, ordered by `u`.
    pub fn samples(&self) -> Result<Vec<ProfileSample>> {
        let mut out = Vec::new();
        for node in self.neg.nodes.iter().skip(1).rev() {
            out.push(self.sample_at(node.t, node.y)?);
        }
        for node in &self.pos.nodes {
            out.push(self.sample_at(node.t, node.y)?);
        }
        Ok(out)
    }

    fn sample_at(&self, u: f64, y: [f64; 2]) -> Result<ProfileSample> {
        Ok(ProfileSample {
            u,
            phi: y[0],
            phi_star: y[1],
            f: profile_f(&self.params, y[0], y[1], u)?,
        })
    }
}

fn profile_f(params: &CatenoidParams, phi: f64, phi_star: f64, u: f64) -> Result<f64> {
    let (cp, cps) = (phi.cos(), phi_star.cos());
    if cp.abs() < 1e-9 || cps.abs() < 1e-9 {
        return Err(HcatError::SingularProfile { u });
    }
    Ok((params.alpha * cps - params.alpha_star * cp) / (params.alpha * cp * cps * cps))
}

/// Integrates the profile ODEs on `[-u_max, u_max]`.
///
/// Fails with a singular-profile error if `cos phi` or `cos phi_star`
/// vanishes inside the window (the auxiliary function `f` blows up there).
pub fn integrate_profile(params: &CatenoidParams, u_max: f64, tol: f64) -> Result<Profile> {
    if !(u_max > 0.0) || !(tol > 0.0) {
        return Err(HcatError::Precondition("u_max and tol must be positive".into()));
    }
    let (a, a_star) = (params.alpha, params.alpha_star);
    let rhs = move |_: f64, y: &[f64; 2]| {
        let c = y[0].cos();
        let cs = y[1].cos();
        [
            -(a * a + c * c).sqrt(),
            -(a_star * a_star - cs * cs).sqrt(),
        ]
    };
    let pos = rkf45(rhs, 0.0, u_max, [0.0, 0.0], tol, 0.004);
    let neg = rkf45(rhs, 0.0, -u_max, [0.0, 0.0], tol, 0.004);
    for node in pos.nodes.iter().chain(neg.nodes.iter()) {
        if node.y[0].abs() >= PI / 2.0 || node.y[1].abs() >= PI / 2.0 {
            return Err(HcatError::SingularProfile { u: node.t });
        }
    }
    Ok(Profile {
        params: *params,
        pos,
        neg,
        u_max,
    })
}

/// The pre-chart components `(X1, X2, X3, z)` of the conformal
/// parametrization in the disc model.
pub fn ball_components(params: &CatenoidParams, profile: &Profile, u: f64, v: f64) -> Result<[f64; 4]> {
    let (a, a_star) = (params.alpha, params.alpha_star);
    let (phi, phi_star) = profile.eval(u);
    let f = profile.f(u)?;
    let (chav, shav) = (f64::cosh(a * v), f64::sinh(a * v));
    let (chasv, shasv) = (f64::cosh(a_star * v), f64::sinh(a_star * v));
    let x1 = chav * phi_star.sin() * f;
    let x2 = chav * shasv * (f + a_star / a) - chasv * shav;
    let x3 = chav * chasv * (f + a_star / a) - shasv * shav;
    let phi_prime = -(a * a + phi.cos().powi(2)).sqrt();
    let z = phi.cos() * chav / (a * (a - phi_prime));
    Ok([x1, x2, x3, z])
}

/// Conformal parametrization in the disc model.
pub fn immerse_ball(params: &CatenoidParams, profile: &Profile, u: f64, v: f64) -> Result<BallPoint> {
    let [x1, x2, x3, z] = ball_components(params, profile, u, v)?;
    if 1.0 + x3 <= 0.0 {
        return Err(HcatError::OutOfChart {
            context: format!("1 + X3 = {} not positive at (u, v) = ({u}, {v})", 1.0 + x3),
        });
    }
    BallPoint::new(x1 / (1.0 + x3), x2 / (1.0 + x3), z)
}

/// The conformal factor `omega(s, theta)`, valued in `(0, 1]`.
pub fn omega(params: &CatenoidParams, s: f64, theta: f64) -> f64 {
    let (a, a_star) = (params.alpha, params.alpha_star);
    let pp = phi_prime_of_theta(params, theta);
    let sin2 = theta.sin().powi(2);
    1.0 / (1.0
        + sin2 / (a_star * (a + a_star) * (a - pp) * (a_star - pp)) * (-s).exp() * s.cosh())
}

/// Closed-form parametrization in the upper half-plane model.
pub fn immerse_uhp(params: &CatenoidParams, s: f64, theta: f64) -> Result<UhpPoint> {
    let (a, a_star, eps) = (params.alpha, params.alpha_star, params.epsilon);
    let pp = phi_prime_of_theta(params, theta);
    let om = omega(params, s, theta);
    let y = (eps * s).exp() * om;
    let x = theta.sin() / (a_star * (a - pp)) * s.cosh() * y;
    let z = theta.cos() * s.cosh() / (a * (a - pp));
    UhpPoint::new(x, y, z)
}

/// Closed-form induced metric: `g_ss = cosh^2 s / (alpha^2 (alpha - phi')^2)`,
/// `g_tt = g_ss alpha^2 / phi'^2`, off-diagonal zero.
pub fn metric_closed_form(params: &CatenoidParams, s: f64, theta: f64) -> [[f64; 2]; 2] {
    let a = params.alpha;
    let pp = phi_prime_of_theta(params, theta);
    let g_ss = s.cosh().powi(2) / (a * a * (a - pp) * (a - pp));
    [[g_ss, 0.0], [0.0, g_ss * a * a / (pp * pp)]]
}

/// Ambient sectional curvature of the tangent plane: `-cos^2 theta / cosh^2 s`
/// (independent of the necksize).
pub fn ambient_sectional(s: f64, theta: f64) -> f64 {
    -(theta.cos() / s.cosh()).powi(2)
}

/// Closed-form intrinsic (Gauss) curvature of the catenoid.
pub fn intrinsic_curvature(params: &CatenoidParams, s: f64, theta: f64) -> f64 {
    let a = params.alpha;
    let pp = phi_prime_of_theta(params, theta);
    let amp = a * a * (a - pp) * (a - pp) / s.cosh().powi(2);
    let (st, ct) = theta.sin_cos();
    let inner = 1.0 / s.cosh().powi(2)
        + (st * st * ct * ct / ((a - pp) * (a - pp)) - pp / (a - pp) * (2.0 * ct * ct - 1.0))
            / (a * a);
    -amp * inner
}

/// Principal curvatures `(1 +- sqrt(1 - 4(K_sigma - K_amb)))/2`, larger first.
/// Their sum is exactly 1 (cmc 1/2 with the outward orientation).
pub fn principal_curvatures(params: &CatenoidParams, s: f64, theta: f64) -> Result<(f64, f64)> {
    let disc = 1.0 - 4.0 * (intrinsic_curvature(params, s, theta) - ambient_sectional(s, theta));
    if disc < 0.0 {
        return Err(HcatError::ComplexCurvature { discriminant: disc });
    }
    let root = disc.sqrt();
    Ok(((1.0 + root) / 2.0, (1.0 - root) / 2.0))
}

/// Truncation parameter: the positive solution of `epsilon cosh S = 1`.
pub fn truncation_s(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(HcatError::Precondition(format!(
            "epsilon = {epsilon} must lie in (0, 1)"
        )));
    }
    Ok((1.0 / epsilon).acosh())
}

/// Inverts the end parametrization to express the surface as a horizontal
/// graph `y = g(r, gamma)` over polar coordinates `x = r sin gamma`,
/// `z = r cos gamma`. Returns `g` at a single sample.
pub fn extract_graph_point(params: &CatenoidParams, r: f64, gamma: f64) -> Result<f64> {
    let seed_s = if r > params.epsilon {
        (r / params.epsilon).acosh().max(0.05)
    } else {
        0.05
    };
    let mut s = seed_s;
    let mut th = gamma;
    let target = [r * gamma.sin(), r * gamma.cos()];
    let res = |s: f64, th: f64| -> Result<[f64; 2]> {
        let p = immerse_uhp(params, s, th)?;
        Ok([p.x - target[0], p.z - target[1]])
    };
    let norm = |v: &[f64; 2]| v[0].hypot(v[1]);
    let mut fv = res(s, th)?;
    for _ in 0..60 {
        if norm(&fv) < 1e-12 * r.max(1.0) {
            return Ok(immerse_uhp(params, s, th)?.y);
        }
        // Jacobian by centered differences.
        let h = 1e-6;
        let fs_p = res(s + h, th)?;
        let fs_m = res(s - h, th)?;
        let ft_p = res(s, th + h)?;
        let ft_m = res(s, th - h)?;
        let j = [
            [(fs_p[0] - fs_m[0]) / (2.0 * h), (ft_p[0] - ft_m[0]) / (2.0 * h)],
            [(fs_p[1] - fs_m[1]) / (2.0 * h), (ft_p[1] - ft_m[1]) / (2.0 * h)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            return Err(HcatError::Extraction {
                r,
                gamma,
                reason: "degenerate Jacobian: patch is not a horizontal graph".into(),
            });
        }
        let ds = (j[1][1] * fv[0] - j[0][1] * fv[1]) / det;
        let dth = (-j[1][0] * fv[0] + j[0][0] * fv[1]) / det;
        // Backtracking line search.
        let mut t = 1.0;
        loop {
            let (sn, tn) = (s - t * ds, th - t * dth);
            if let Ok(fn_) = res(sn, tn) {
                if norm(&fn_) < (1.0 - 0.25 * t) * norm(&fv) {
                    s = sn;
                    th = tn;
                    fv = fn_;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-4 {
                return Err(HcatError::Extraction {
                    r,
                    gamma,
                    reason: "line search stalled".into(),
                });
            }
        }
    }
    Err(HcatError::Extraction {
        r,
        gamma,
        reason: "Newton iteration did not converge".into(),
    })
}

/// Samples the horizontal graph `g(r, gamma)` on the product grid.
pub fn horizontal_graph_extract(
    params: &CatenoidParams,
    r_values: &[f64],
    gamma_values: &[f64],
) -> Result<Vec<Vec<f64>>> {
    r_values
        .iter()
        .map(|&r| {
            gamma_values
                .iter()
                .map(|&g| extract_graph_point(params, r, g))
                .collect()
        })
        .collect()
}

/// Sampled catenoid patch with pointwise fundamental forms and curvatures.
#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    pub params: CatenoidParams,
    pub s_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub points: Vec<UhpPoint>,
    pub first_form: Vec<[[f64; 2]; 2]>,
    pub second_form: Vec<[[f64; 2]; 2]>,
    pub normal: Vec<TangentVector>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub k_sigma: Vec<f64>,
    pub k_ambient: Vec<f64>,
}

impl SurfaceGrid {
    /// Row-major node index, `i` over `s` and `j` over `theta`.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.theta_values.len() + j
    }

    /// Builds the grid on `[s_min, s_max] x [0, 2 pi)`. The first fundamental
    /// form is the closed-form metric; the second form and normal come from
    /// finite differences of the immersion, oriented so kappa1 + kappa2 = +1.
    pub fn build(
        params: &CatenoidParams,
        s_min: f64,
        s_max: f64,
        n_s: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if n_s < 2 || n_theta < 2 || !(s_max > s_min) {
            return Err(HcatError::Precondition("grid must have at least 2x2 nodes".into()));
        }
        params.validate()?;
        let s_values: Vec<f64> = (0..n_s)
            .map(|i| s_min + (s_max - s_min) * i as f64 / (n_s - 1) as f64)
            .collect();
        let theta_values: Vec<f64> = (0..n_theta)
            .map(|j| 2.0 * PI * j as f64 / n_theta as f64)
            .collect();

        let n = n_s * n_theta;
        let mut grid = SurfaceGrid {
            params: *params,
            s_values: s_values.clone(),
            theta_values: theta_values.clone(),
            points: Vec::with_capacity(n),
            first_form: Vec::with_capacity(n),
            second_form: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            kappa1: Vec::with_capacity(n),
            kappa2: Vec::with_capacity(n),
            k_sigma: Vec::with_capacity(n),
            k_ambient: Vec::with_capacity(n),
        };
        let imm = |s: f64, th: f64| immerse_uhp(params, s, th);
        for (i, &s) in s_values.iter().enumerate() {
            for (j, &th) in theta_values.iter().enumerate() {
                let g = metric_closed_form(params, s, th);
                if g[0][0] <= 0.0 || g[0][0] * g[1][1] - g[0][1] * g[1][0] <= 0.0 {
                    return Err(HcatError::DegenerateMetric { i, j });
                }
                let forms: FormsAtPoint = fundamental_forms(&imm, s, th, 1e-3)?;
                let (k1, k2) = principal_curvatures(params, s, th)?;
                grid.points.push(forms.point);
                grid.first_form.push(g);
                grid.second_form.push(forms.second);
                grid.normal.push(forms.normal);
                grid.kappa1.push(k1);
                grid.kappa2.push(k2);
                grid.k_sigma.push(intrinsic_curvature(params, s, th));
                grid.k_ambient.push(ambient_sectional(s, th));
            }
        }
        Ok(grid)
    }
}

/// Chart used when exporting mesh artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Uhp,
    Ball,
}

/// Mesh artifact format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Csv,
}

/// Writes the grid as a triangulated OBJ or a CSV table in the chosen model.
pub fn export_mesh(grid: &SurfaceGrid, format: MeshFormat, model: Model, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let coords = |p: UhpPoint| -> Result<[f64; 3]> {
        Ok(match model {
            Model::Uhp => [p.x, p.y, p.z],
            Model::Ball => {
                let b = uhp_to_ball(p)?;
                [b.xt, b.yt, b.z]
            }
        })
    };
    match format {
        MeshFormat::Obj => {
            let (n_s, n_t) = (grid.s_values.len(), grid.theta_values.len());
            for p in &grid.points {
                let [x, y, z] = coords(*p)?;
                writeln!(w, "v {x} {y} {z}")?;
            }
            for i in 0..n_s - 1 {
                for j in 0..n_t - 1 {
                    let a = i * n_t + j + 1;
                    let b = i * n_t + j + 2;
                    let c = (i + 1) * n_t + j + 1;
                    let d = (i + 1) * n_t + j + 2;
                    writeln!(w, "f {a} {b} {d}")?;
                    writeln!(w, "f {a} {d} {c}")?;
                }
            }
        }
        MeshFormat::Csv => {
            writeln!(w, "s,theta,x,y,z,kappa1,kappa2,K_sigma")?;
            for (i, &s) in grid.s_values.iter().enumerate() {
                for (j, &th) in grid.theta_values.iter().enumerate() {
                    let k = grid.idx(i, j);
                    let [x, y, z] = coords(grid.points[k])?;
                    writeln!(
                        w,
                        "{s},{th},{x},{y},{z},{},{},{}",
                        grid.kappa1[k], grid.kappa2[k], grid.k_sigma[k]
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

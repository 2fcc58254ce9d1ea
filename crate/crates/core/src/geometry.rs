//! Ambient geometry of H^2 x R in the upper-half-plane and disc models.
//!
//! The upper half-plane model is `{(x, y, z) : y > 0}` with metric
//! `(dx^2 + dy^2)/y^2 + dz^2`. The disc model is the unit disc crossed with
//! the vertical line. Both charts act trivially on the vertical factor.

use crate::error::{HcatError, Result};

/// Tolerance used for unit-vector preconditions.
pub const UNIT_TOL: f64 = 1e-10;

/// Point in the upper-half-plane model, `y > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UhpPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UhpPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if y <= 0.0 {
            return Err(HcatError::InvalidPoint { y });
        }
        Ok(Self { x, y, z })
    }
}

/// Point in the disc model, `xt^2 + yt^2 < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallPoint {
    pub xt: f64,
    pub yt: f64,
    pub z: f64,
}

impl BallPoint {
    pub fn new(xt: f64, yt: f64, z: f64) -> Result<Self> {
        if xt * xt + yt * yt >= 1.0 {
            return Err(HcatError::OutOfChart {
                context: format!("({xt}, {yt}) outside the unit disc"),
            });
        }
        Ok(Self { xt, yt, z })
    }
}

/// Tangent vector at a base point, components in the coordinate frame
/// `(d_x, d_y, d_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: UhpPoint,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl TangentVector {
    pub fn new(base: UhpPoint, vx: f64, vy: f64, vz: f64) -> Self {
        Self { base, vx, vy, vz }
    }

    /// Coordinate vector `d_x` at `p`.
    pub fn dx(p: UhpPoint) -> Self {
        Self::new(p, 1.0, 0.0, 0.0)
    }

    /// Coordinate vector `d_y` at `p`.
    pub fn dy(p: UhpPoint) -> Self {
        Self::new(p, 0.0, 1.0, 0.0)
    }

    /// Coordinate vector `d_z` at `p`.
    pub fn dz(p: UhpPoint) -> Self {
        Self::new(p, 0.0, 0.0, 1.0)
    }

    pub fn norm(&self) -> f64 {
        metric_uhp(self.base, self, self).sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(HcatError::Precondition("cannot normalize zero vector".into()));
        }
        Ok(Self::new(self.base, self.vx / n, self.vy / n, self.vz / n))
    }
}

/// Product metric `(v_x w_x + v_y w_y)/y^2 + v_z w_z` at `p`.
pub fn metric_uhp(p: UhpPoint, v: &TangentVector, w: &TangentVector) -> f64 {
    let y2 = p.y * p.y;
    (v.vx * w.vx + v.vy * w.vy) / y2 + v.vz * w.vz
}

/// Inner product of the horizontal parts only.
fn metric_horizontal(p: UhpPoint, v: &TangentVector, w: &TangentVector) -> f64 {
    (v.vx * w.vx + v.vy * w.vy) / (p.y * p.y)
}

/// Disc-to-half-plane chart exchange, acting trivially on `z`.
pub fn ball_to_uhp(p: BallPoint) -> Result<UhpPoint> {
    let denom = p.xt * p.xt + (p.yt - 1.0) * (p.yt - 1.0);
    if denom == 0.0 {
        return Err(HcatError::OutOfChart {
            context: "disc point (0, 1) maps to infinity".into(),
        });
    }
    let x = 2.0 * p.xt / denom;
    let y = (1.0 - p.xt * p.xt - p.yt * p.yt) / denom;
    UhpPoint::new(x, y, p.z)
}

/// Half-plane-to-disc chart exchange, inverse of [`ball_to_uhp`].
pub fn uhp_to_ball(p: UhpPoint) -> Result<BallPoint> {
    let denom = p.x * p.x + (p.y + 1.0) * (p.y + 1.0);
    let xt = 2.0 * p.x / denom;
    let yt = (p.x * p.x + p.y * p.y - 1.0) / denom;
    BallPoint::new(xt, yt, p.z)
}

/// Curvature tensor `Rm(X, Y, Z, W)`; only the horizontal components enter.
pub fn curvature_tensor(
    p: UhpPoint,
    x: &TangentVector,
    y: &TangentVector,
    z: &TangentVector,
    w: &TangentVector,
) -> f64 {
    -(metric_horizontal(p, x, w) * metric_horizontal(p, y, z)
        - metric_horizontal(p, x, z) * metric_horizontal(p, y, w))
}

/// Sectional curvature of the plane with unit normal `nu`: `-<nu, d_z>^2`.
pub fn sectional_curvature(nu: &TangentVector) -> Result<f64> {
    let n = nu.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(HcatError::Precondition(format!(
            "sectional_curvature requires a unit normal, |nu| = {n}"
        )));
    }
    Ok(-nu.vz * nu.vz)
}

/// Ricci curvature in the direction of the unit vector `nu`.
pub fn ricci(nu: &TangentVector) -> Result<f64> {
    Ok(-1.0 - sectional_curvature(nu)?)
}

/// Nonzero Christoffel symbols of the product metric at `p`.
///
/// Indices are ordered `(x, y, z)`; `table[k][i][j]` is `Gamma^k_{ij}`.
/// All symbols carrying a `z` index vanish.
pub fn christoffel(p: UhpPoint) -> Result<[[[f64; 3]; 3]; 3]> {
    if p.y <= 0.0 {
        return Err(HcatError::InvalidPoint { y: p.y });
    }
    let inv_y = 1.0 / p.y;
    let mut g = [[[0.0; 3]; 3]; 3];
    g[0][0][1] = -inv_y; // Gamma^x_{xy}
    g[0][1][0] = -inv_y; // Gamma^x_{yx}
    g[1][0][0] = inv_y; // Gamma^y_{xx}
    g[1][1][1] = -inv_y; // Gamma^y_{yy}
    Ok(g)
}

/// Geodesic `exp_p(t v)` via the closed form for product geodesics.
///
/// The vertical component moves linearly; the horizontal component is a
/// half-plane geodesic obtained by conjugating with the parabolic
/// translation and dilation that move the base point to `(0, 1)`.
pub fn exp_map(p: UhpPoint, v: &TangentVector, t: f64) -> Result<UhpPoint> {
    let z = p.z + t * v.vz;
    // Hyperbolic speed of the horizontal part.
    let q = (v.vx * v.vx + v.vy * v.vy).sqrt() / p.y;
    if q * t.abs() < 1e-300 || q == 0.0 {
        return UhpPoint::new(p.x, p.y, z);
    }
    // At (0, 1) the transported velocity is (vx, vy)/y, Euclidean angle beta.
    let beta = v.vy.atan2(v.vx);
    // Rotation about i by beta - pi/2 sends the vertical direction to beta.
    let c = 0.5 * (beta - std::f64::consts::FRAC_PI_2);
    let (sc, cc) = c.sin_cos();
    // Vertical geodesic w(t) = i e^{qt}, then Moebius [cc sc; -sc cc].
    let e = (q * t).exp();
    // w = i*e; M(w) = (cc*w + sc) / (-sc*w + cc), complex arithmetic by hand.
    let (nw_re, nw_im) = (sc, cc * e);
    let (dw_re, dw_im) = (cc, -sc * e);
    let den = dw_re * dw_re + dw_im * dw_im;
    let hx = (nw_re * dw_re + nw_im * dw_im) / den;
    let hy = (nw_im * dw_re - nw_re * dw_im) / den;
    // Undo the conjugation: dilate by y, translate by x.
    UhpPoint::new(p.x + p.y * hx, p.y * hy, z)
}

/// One-parameter isometries of the half-plane model (trivial on `z`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Isometry {
    /// Parabolic translation `(x, y) -> (x + a, y)`.
    Parabolic(f64),
    /// Hyperbolic dilation `(x, y) -> (a x, a y)`, `a > 0`.
    Dilation(f64),
    /// Elliptic rotation about `(0, 1)` by angle `a`.
    Rotation(f64),
    /// Inversion in the semicircle `x^2 + y^2 = 1`.
    Inversion,
}

/// Apply an isometry of H^2 x R in the half-plane model.
pub fn isometry(kind: Isometry, p: UhpPoint) -> Result<UhpPoint> {
    match kind {
        Isometry::Parabolic(a) => UhpPoint::new(p.x + a, p.y, p.z),
        Isometry::Dilation(a) => {
            if a <= 0.0 {
                return Err(HcatError::Precondition(format!(
                    "dilation parameter must be positive, got {a}"
                )));
            }
            UhpPoint::new(a * p.x, a * p.y, p.z)
        }
        Isometry::Rotation(a) => {
            let (sa, ca) = a.sin_cos();
            let (sh, ch) = (0.5 * a).sin_cos();
            let r2 = p.x * p.x + p.y * p.y;
            let denom = r2 * sh * sh + ch * ch - p.x * sa;
            if denom <= 0.0 {
                return Err(HcatError::OutOfChart {
                    context: "rotation image on the boundary".into(),
                });
            }
            let nx = 0.5 * (1.0 - r2) * sa + p.x * ca;
            UhpPoint::new(nx / denom, p.y / denom, p.z)
        }
        Isometry::Inversion => {
            let r2 = p.x * p.x + p.y * p.y;
            if r2 == 0.0 {
                return Err(HcatError::OutOfChart {
                    context: "inversion of the boundary point at the origin".into(),
                });
            }
            UhpPoint::new(p.x / r2, p.y / r2, p.z)
        }
    }
}

/// Pushforward of a tangent vector under an isometry.
///
/// All four families are Moebius maps of the horizontal factor (inversion
/// anti-holomorphic), so the differential is complex multiplication by the
/// exact derivative; the vertical component is untouched.
pub fn isometry_pushforward(kind: Isometry, v: &TangentVector) -> Result<TangentVector> {
    let p = v.base;
    let base = isometry(kind, p)?;
    let (hx, hy) = match kind {
        Isometry::Parabolic(_) => (v.vx, v.vy),
        Isometry::Dilation(a) => (a * v.vx, a * v.vy),
        Isometry::Rotation(a) => {
            // rho_a is the Moebius map with matrix [c s; -s c], c = cos(a/2),
            // s = sin(a/2); derivative 1/(-s z + c)^2.
            let (s, c) = (0.5 * a).sin_cos();
            let (dr, di) = (c - s * p.x, -s * p.y);
            let d2 = (dr * dr + di * di).powi(2);
            // 1/(dr + i di)^2 = conj((dr + i di)^2) / |d|^4
            let (n_re, n_im) = (dr * dr - di * di, -2.0 * dr * di);
            (
                (n_re * v.vx - n_im * v.vy) / d2,
                (n_re * v.vy + n_im * v.vx) / d2,
            )
        }
        Isometry::Inversion => {
            // z -> 1/conj(z); differential v -> -conj(v)/conj(z)^2.
            let r2 = p.x * p.x + p.y * p.y;
            let d4 = r2 * r2;
            let a = p.y * p.y - p.x * p.x;
            let b = 2.0 * p.x * p.y;
            (
                (v.vx * a - b * v.vy) / d4,
                (-b * v.vx - v.vy * a) / d4,
            )
        }
    };
    Ok(TangentVector::new(base, hx, hy, v.vz))
}

/// Pushforward of a tangent vector under the disc-to-half-plane chart,
/// returning disc-frame components `(d_xt, d_yt, d_z)` mapped to the
/// half-plane frame. Uses the exact complex derivative of the Moebius map.
pub fn ball_to_uhp_pushforward(b: BallPoint, v: [f64; 3]) -> Result<(UhpPoint, TangentVector)> {
    let base = ball_to_uhp(b)?;
    // xi = (i xi~ - 1)/(-xi~ + i), derivative -2/(-xi~ + i)^2.
    let (dr, di) = (-b.xt, 1.0 - b.yt);
    let d2 = (dr * dr + di * di).powi(2);
    let (n_re, n_im) = (
        -2.0 * (dr * dr - di * di) / d2,
        2.0 * 2.0 * dr * di / d2,
    );
    let hx = n_re * v[0] - n_im * v[1];
    let hy = n_re * v[1] + n_im * v[0];
    Ok((base, TangentVector::new(base, hx, hy, v[2])))
}

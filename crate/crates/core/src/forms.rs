//! Finite-difference fundamental forms of a parametrized surface in H^2 x R.
//!
//! Given an immersion `(a, b) -> UhpPoint`, the first and second fundamental
//! forms are computed from centered 4th-order stencils on a 5x5 sample patch,
//! with the ambient Christoffel correction applied to the second derivatives.

use crate::error::{HcatError, Result};
use crate::geometry::{christoffel, metric_uhp, TangentVector, UhpPoint};

/// First form, second form and unit normal of the immersion at `(a, b)`.
#[derive(Debug, Clone, Copy)]
pub struct FormsAtPoint {
    pub point: UhpPoint,
    pub first: [[f64; 2]; 2],
    pub second: [[f64; 2]; 2],
    pub normal: TangentVector,
}

impl FormsAtPoint {
    /// Mean curvature `tr(g^{-1} h) / 2` for the stored orientation.
    pub fn mean_curvature(&self) -> f64 {
        let g = &self.first;
        let h = &self.second;
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        0.5 * (g[1][1] * h[0][0] - 2.0 * g[0][1] * h[0][1] + g[0][0] * h[1][1]) / det
    }

    /// Principal curvatures (eigenvalues of the shape operator), larger first.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let g = &self.first;
        let h = &self.second;
        let det_g = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let det_h = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let tr = (g[1][1] * h[0][0] - 2.0 * g[0][1] * h[0][1] + g[0][0] * h[1][1]) / det_g;
        let det = det_h / det_g;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 + disc, tr / 2.0 - disc)
    }

    /// Flips the normal and second form in place.
    pub fn flip_orientation(&mut self) {
        self.normal.vx = -self.normal.vx;
        self.normal.vy = -self.normal.vy;
        self.normal.vz = -self.normal.vz;
        for row in self.second.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
}

const W1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const W2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// Computes the fundamental forms of `imm` at `(a, b)` with FD step `h`.
///
/// The immersion must be evaluable on the full 5x5 stencil
/// `{a - 2h, ..., a + 2h} x {b - 2h, ..., b + 2h}`. The normal orientation
/// is chosen so that the mean curvature is nonnegative; callers wanting a
/// fixed geometric orientation should check and flip.
pub fn fundamental_forms<F>(imm: &F, a: f64, b: f64, h: f64) -> Result<FormsAtPoint>
where
    F: Fn(f64, f64) -> Result<UhpPoint>,
{
    let mut patch = [[[0.0f64; 3]; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            let p = imm(a + (i as f64 - 2.0) * h, b + (j as f64 - 2.0) * h)?;
            patch[i][j] = [p.x, p.y, p.z];
        }
    }
    let p = imm(a, b)?;

    let mut xa = [0.0; 3];
    let mut xb = [0.0; 3];
    let mut xaa = [0.0; 3];
    let mut xbb = [0.0; 3];
    let mut xab = [0.0; 3];
    for c in 0..3 {
        for k in 0..5 {
            xa[c] += W1[k] * patch[k][2][c] / h;
            xb[c] += W1[k] * patch[2][k][c] / h;
            xaa[c] += W2[k] * patch[k][2][c] / (h * h);
            xbb[c] += W2[k] * patch[2][k][c] / (h * h);
        }
        for i in 0..5 {
            let mut row = 0.0;
            for j in 0..5 {
                row += W1[j] * patch[i][j][c] / h;
            }
            xab[c] += W1[i] * row / h;
        }
    }

    let ta = TangentVector::new(p, xa[0], xa[1], xa[2]);
    let tb = TangentVector::new(p, xb[0], xb[1], xb[2]);
    let g = [
        [metric_uhp(p, &ta, &ta), metric_uhp(p, &ta, &tb)],
        [metric_uhp(p, &tb, &ta), metric_uhp(p, &tb, &tb)],
    ];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det <= 0.0 || g[0][0] <= 0.0 {
        return Err(HcatError::DegenerateMetric { i: 0, j: 0 });
    }

    let normal = unit_normal(p, &ta, &tb)?;

    // Second fundamental form with the ambient connection:
    // h_ij = < d_i d_j X + Gamma(d_i X, d_j X), nu >.
    let gamma = christoffel(p)?;
    let correct = |dd: &[f64; 3], u: &TangentVector, v: &TangentVector| {
        let uc = [u.vx, u.vy, u.vz];
        let vc = [v.vx, v.vy, v.vz];
        let mut out = *dd;
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    out[k] += gamma[k][l][m] * uc[l] * vc[m];
                }
            }
        }
        TangentVector::new(p, out[0], out[1], out[2])
    };
    let caa = correct(&xaa, &ta, &ta);
    let cab = correct(&xab, &ta, &tb);
    let cbb = correct(&xbb, &tb, &tb);
    let second = [
        [metric_uhp(p, &caa, &normal), metric_uhp(p, &cab, &normal)],
        [metric_uhp(p, &cab, &normal), metric_uhp(p, &cbb, &normal)],
    ];

    let mut out = FormsAtPoint {
        point: p,
        first: g,
        second,
        normal,
    };
    if out.mean_curvature() < 0.0 {
        out.flip_orientation();
    }
    Ok(out)
}

/// Unit normal to the span of `ta`, `tb` at `p`, via the cross product in an
/// orthonormal frame `(y d_x, y d_y, d_z)`.
pub fn unit_normal(p: UhpPoint, ta: &TangentVector, tb: &TangentVector) -> Result<TangentVector> {
    let y = p.y;
    let a = [ta.vx / y, ta.vy / y, ta.vz];
    let b = [tb.vx / y, tb.vy / y, tb.vz];
    let n = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    TangentVector::new(p, n[0] * y, n[1] * y, n[2]).normalized()
}

//! Small numerical building blocks shared by the solvers: an adaptive
//! Runge-Kutta integrator with dense output, fixed-step RK4, cumulative
//! quadrature on uniform grids, and finite-difference stencils.

/// One accepted step of an ODE solve, with the derivative for Hermite
/// interpolation between nodes.
#[derive(Debug, Clone)]
pub struct OdeNode<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

/// Dense ODE solution on an interval.
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub nodes: Vec<OdeNode<N>>,
}

impl<const N: usize> OdeSolution<N> {
    /// Cubic Hermite evaluation at `t` (must lie within the solved span).
    /// Works for solutions integrated in either direction.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let nodes = &self.nodes;
        assert!(nodes.len() >= 2, "need at least two nodes");
        let ascending = nodes[0].t <= nodes[nodes.len() - 1].t;
        let idx = match nodes.binary_search_by(|n| {
            if ascending {
                n.t.partial_cmp(&t).unwrap()
            } else {
                t.partial_cmp(&n.t).unwrap()
            }
        }) {
            Ok(i) => return nodes[i].y,
            Err(i) => i.clamp(1, nodes.len() - 1),
        };
        let (a, b) = (&nodes[idx - 1], &nodes[idx]);
        let h = b.t - a.t;
        let x = (t - a.t) / h;
        let (x2, x3) = (x * x, x * x * x);
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = h00 * a.y[k] + h10 * h * a.dy[k] + h01 * b.y[k] + h11 * h * b.dy[k];
        }
        out
    }

    pub fn t_end(&self) -> f64 {
        self.nodes.last().unwrap().t
    }
}

/// Adaptive Runge-Kutta-Fehlberg 4(5) from `t0` to `t1` (either direction).
///
/// `h_max` caps the step size; the dense output between nodes is cubic
/// Hermite, so callers needing high pointwise accuracy should keep `h_max`
/// small enough that `h_max^4` is below their error budget.
pub fn rkf45<const N: usize, F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    tol: f64,
    h_max: f64,
) -> OdeSolution<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    // Fehlberg coefficients.
    const A: [f64; 6] = [0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5];
    const B: [[f64; 5]; 6] = [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.25, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
        [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
        [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
        [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
    ];
    const C4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];
    const C5: [f64; 6] = [
        16.0 / 135.0,
        0.0,
        6656.0 / 12825.0,
        28561.0 / 56430.0,
        -9.0 / 50.0,
        2.0 / 55.0,
    ];

    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut h = dir * (span / 100.0).min(h_max).max(1e-6);
    let mut t = t0;
    let mut y = y0;
    let mut nodes = vec![OdeNode { t, y, dy: f(t, &y) }];

    while (t - t1).abs() > 1e-14 && dir * (t1 - t) > 0.0 {
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        let mut k = [[0.0; N]; 6];
        for stage in 0..6 {
            let mut ys = y;
            for j in 0..stage {
                for c in 0..N {
                    ys[c] += h * B[stage][j] * k[j][c];
                }
            }
            k[stage] = f(t + A[stage] * h, &ys);
        }
        let mut y4 = y;
        let mut y5 = y;
        for stage in 0..6 {
            for c in 0..N {
                y4[c] += h * C4[stage] * k[stage][c];
                y5[c] += h * C5[stage] * k[stage][c];
            }
        }
        let mut err: f64 = 0.0;
        for c in 0..N {
            err = err.max((y5[c] - y4[c]).abs());
        }
        let scale = tol * h.abs();
        if err <= scale.max(1e-16) || h.abs() < 1e-12 {
            t += h;
            y = y5;
            nodes.push(OdeNode { t, y, dy: f(t, &y) });
        }
        let factor = if err > 0.0 {
            0.9 * (scale.max(1e-16) / err).powf(0.2)
        } else {
            2.0
        };
        h *= factor.clamp(0.2, 4.0);
        if h.abs() > h_max {
            h = dir * h_max;
        }
    }
    OdeSolution { nodes }
}

/// Fixed-step classical RK4.
pub fn rk4<const N: usize, F>(f: F, t0: f64, t1: f64, y0: [f64; N], step: f64) -> OdeSolution<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let n = (((t1 - t0).abs() / step).ceil() as usize).max(1);
    let h = dir * (t1 - t0).abs() / n as f64;
    let mut t = t0;
    let mut y = y0;
    let mut nodes = vec![OdeNode { t, y, dy: f(t, &y) }];
    for _ in 0..n {
        let k1 = f(t, &y);
        let mut y2 = y;
        for c in 0..N {
            y2[c] += 0.5 * h * k1[c];
        }
        let k2 = f(t + 0.5 * h, &y2);
        let mut y3 = y;
        for c in 0..N {
            y3[c] += 0.5 * h * k2[c];
        }
        let k3 = f(t + 0.5 * h, &y3);
        let mut y4 = y;
        for c in 0..N {
            y4[c] += h * k3[c];
        }
        let k4 = f(t + h, &y4);
        for c in 0..N {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        t += h;
        nodes.push(OdeNode { t, y, dy: f(t, &y) });
    }
    OdeSolution { nodes }
}

/// Cumulative integral from the right on a uniform grid:
/// `out[i] = integral from x[i] to x[n-1] of f`.
///
/// Each cell is integrated with the cubic through its four nearest nodes,
/// which keeps the cumulative error at O(h^5) per cell for smooth data.
pub fn cumulative_integral_right(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4, "need at least four nodes");
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        // Stencil of four nodes containing [i, i+1].
        let base = i.saturating_sub(1).min(n - 4);
        let o = (i - base) as f64; // offset of the cell start in stencil units
        let w = cubic_cell_weights(o);
        let mut cell = 0.0;
        for (j, wj) in w.iter().enumerate() {
            cell += wj * f[base + j];
        }
        out[i] = out[i + 1] + h * cell;
    }
    out
}

/// Left cumulative integral: `out[i] = int_{x_0}^{x_i} f`, same cubic cell
/// rule as the right cumulative above. Accumulating from the left keeps the
/// rounding error relative to the local partial sum, which matters when the
/// integrand grows exponentially.
pub fn cumulative_integral_left(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4, "need at least four nodes");
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let base = i.saturating_sub(1).min(n - 4);
        let o = (i - base) as f64;
        let w = cubic_cell_weights(o);
        let mut cell = 0.0;
        for (j, wj) in w.iter().enumerate() {
            cell += wj * f[base + j];
        }
        out[i + 1] = out[i] + h * cell;
    }
    out
}

/// Weights for integrating the cubic interpolant through nodes at
/// `{0, 1, 2, 3}` over the unit cell `[o, o + 1]`.
fn cubic_cell_weights(o: f64) -> [f64; 4] {
    // Integrate Lagrange basis polynomials exactly with 3-point Gauss.
    const GX: [f64; 3] = [-0.774596669241483, 0.0, 0.774596669241483];
    const GW: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let mut w = [0.0; 4];
    for (gx, gw) in GX.iter().zip(GW.iter()) {
        let x = o + 0.5 * (gx + 1.0);
        let l = [
            (x - 1.0) * (x - 2.0) * (x - 3.0) / -6.0,
            x * (x - 2.0) * (x - 3.0) / 2.0,
            x * (x - 1.0) * (x - 3.0) / -2.0,
            x * (x - 1.0) * (x - 2.0) / 6.0,
        ];
        for j in 0..4 {
            w[j] += 0.5 * gw * l[j];
        }
    }
    w
}

/// Periodic trapezoid quadrature of samples over one period of length `len`
/// (spectrally accurate for trigonometric polynomials).
pub fn trapezoid_periodic(f: &[f64], len: f64) -> f64 {
    let h = len / f.len() as f64;
    f.iter().sum::<f64>() * h
}

/// Centered 4th-order first derivative on a uniform grid, interior index.
pub fn d1_c4(f: &[f64], i: usize, h: f64) -> f64 {
    (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h)
}

/// Centered 4th-order second derivative on a uniform grid, interior index.
pub fn d2_c4(f: &[f64], i: usize, h: f64) -> f64 {
    (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) / (12.0 * h * h)
}

/// One-sided 2nd-order first derivative (forward).
pub fn d1_fwd2(f: &[f64], i: usize, h: f64) -> f64 {
    (-3.0 * f[i] + 4.0 * f[i + 1] - f[i + 2]) / (2.0 * h)
}

/// One-sided 2nd-order first derivative (backward).
pub fn d1_bwd2(f: &[f64], i: usize, h: f64) -> f64 {
    (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h)
}

/// Periodic centered 4th-order first derivative at index `i`.
pub fn d1_c4_periodic(f: &[f64], i: usize, h: f64) -> f64 {
    let n = f.len();
    let g = |k: isize| f[((i as isize + k).rem_euclid(n as isize)) as usize];
    (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * h)
}

/// Periodic centered 4th-order second derivative at index `i`.
pub fn d2_c4_periodic(f: &[f64], i: usize, h: f64) -> f64 {
    let n = f.len();
    let g = |k: isize| f[((i as isize + k).rem_euclid(n as isize)) as usize];
    (-g(2) + 16.0 * g(1) - 30.0 * g(0) + 16.0 * g(-1) - g(-2)) / (12.0 * h * h)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

//! Horizontal cmc 1/2 graphs: the quasilinear operator M(g) for surfaces
//! y = g(x, z) and the Newton solution of its Dirichlet problem on multiply
//! connected planar domains.
//!
//! A graph y = g(x, z) > 0 over the xz plane has twice its mean curvature
//! equal to M(g) = (g^2/W^3)[(g^2 + g_z^2) g_xx - 2 g_x g_z g_xz
//! + (1 + g_x^2) g_zz + g (1 + g_x^2)] with W^2 = g^2 (1 + g_x^2) + g_z^2,
//! so cmc 1/2 graphs solve M(g) = 1. Constants solve it exactly
//! (horocylinders), and the linearization at g = 1 is the flat Laplacian.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HcatError, Result};
use crate::linalg::Banded;

/// Circular hole centered at (x, 0) in the xz plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Hole {
    pub x: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Outside the domain (or inside a hole); carries no unknown.
    Exterior,
    /// Inside the domain but with an exterior node in its 3x3 neighbourhood;
    /// its value is pinned to the Dirichlet data by interpolation along the
    /// grid line that crosses the boundary.
    Boundary,
    /// Full interior stencil available; carries the PDE equation.
    Interior,
}

#[derive(Debug, Deserialize, Serialize)]
struct DomainSpec {
    r: f64,
    holes: Vec<Hole>,
    h: f64,
}

/// Disc of radius `outer_radius` minus disjoint circular holes centered on
/// the x axis, discretized on a uniform Cartesian grid over the bounding
/// square.
#[derive(Debug, Clone)]
pub struct PlanarDomain {
    pub outer_radius: f64,
    pub holes: Vec<Hole>,
    /// Actual grid spacing (the requested spacing rounded so the grid spans
    /// [-r, r] exactly).
    pub h: f64,
    /// Nodes per side.
    pub n: usize,
    pub mask: Vec<NodeKind>,
}

impl PlanarDomain {
    pub fn new(outer_radius: f64, holes: Vec<Hole>, h: f64) -> Result<Self> {
        if !(outer_radius > 0.0) || !(h > 0.0) || h > outer_radius / 4.0 {
            return Err(HcatError::Precondition(format!(
                "need 0 < h <= r/4, got r = {outer_radius}, h = {h}"
            )));
        }
        for (k, hole) in holes.iter().enumerate() {
            if !(hole.r > 0.0) || hole.x.abs() + hole.r >= outer_radius {
                return Err(HcatError::Precondition(format!(
                    "hole {k} is not strictly inside the outer disc"
                )));
            }
            for other in holes.iter().take(k) {
                if (hole.x - other.x).abs() <= hole.r + other.r {
                    return Err(HcatError::Precondition(format!(
                        "hole {k} overlaps an earlier hole"
                    )));
                }
            }
        }
        let n = (2.0 * outer_radius / h).round() as usize + 1;
        let h = 2.0 * outer_radius / (n - 1) as f64;
        let mut domain = PlanarDomain {
            outer_radius,
            holes,
            h,
            n,
            mask: vec![NodeKind::Exterior; n * n],
        };
        domain.classify();
        Ok(domain)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DomainSpec = serde_json::from_str(text)
            .map_err(|e| HcatError::Precondition(format!("domain spec: {e}")))?;
        PlanarDomain::new(spec.r, spec.holes, spec.h)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.outer_radius + i as f64 * self.h
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn inside(&self, x: f64, z: f64) -> bool {
        let r2 = x * x + z * z;
        if r2 >= self.outer_radius * self.outer_radius {
            return false;
        }
        for hole in &self.holes {
            let dx = x - hole.x;
            if dx * dx + z * z <= hole.r * hole.r {
                return false;
            }
        }
        true
    }

    fn classify(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if self.inside(self.coord(i), self.coord(j)) {
                    self.mask[i * n + j] = NodeKind::Interior;
                }
            }
        }
        // Demote interior nodes whose 3x3 neighbourhood leaves the domain.
        let mut boundary = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.mask[i * n + j] == NodeKind::Exterior {
                    continue;
                }
                let mut cut = false;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (ii, jj) = (i as i64 + di, j as i64 + dj);
                        if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                            cut = true;
                        } else if self.mask[ii as usize * n + jj as usize] == NodeKind::Exterior {
                            cut = true;
                        }
                    }
                }
                if cut {
                    boundary.push(i * n + j);
                }
            }
        }
        for k in boundary {
            self.mask[k] = NodeKind::Boundary;
        }
    }

    /// Distance along the ray `(x, z) + t (dx, dz)` to the first boundary
    /// crossing within `t <= max_len`, with the component hit (0 = outer
    /// circle, 1 + j = hole j).
    pub fn crossing(&self, x: f64, z: f64, dx: f64, dz: f64, max_len: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        let mut consider = |t: f64, comp: usize| {
            if t > 1e-12 && t <= max_len * (1.0 + 1e-9) {
                if best.is_none() || t < best.unwrap().0 {
                    best = Some((t, comp));
                }
            }
        };
        let a = dx * dx + dz * dz;
        // Outer circle.
        let b = 2.0 * (x * dx + z * dz);
        let c = x * x + z * z - self.outer_radius * self.outer_radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            consider((-b + sq) / (2.0 * a), 0);
            consider((-b - sq) / (2.0 * a), 0);
        }
        for (k, hole) in self.holes.iter().enumerate() {
            let xr = x - hole.x;
            let b = 2.0 * (xr * dx + z * dz);
            let c = xr * xr + z * z - hole.r * hole.r;
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                consider((-b + sq) / (2.0 * a), k + 1);
                consider((-b - sq) / (2.0 * a), k + 1);
            }
        }
        best
    }
}

/// Positive graph function over a masked planar domain.
#[derive(Debug, Clone)]
pub struct GraphFunction {
    pub domain: PlanarDomain,
    /// Per-node values (exterior nodes hold 1.0 and are never read).
    pub g: Vec<f64>,
}

impl GraphFunction {
    pub fn constant(domain: PlanarDomain, value: f64) -> Self {
        let n = domain.n;
        GraphFunction {
            domain,
            g: vec![value; n * n],
        }
    }

    /// Samples a closed-form function at every non-exterior node.
    pub fn from_fn(domain: PlanarDomain, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = domain.n;
        let mut g = vec![1.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if domain.mask[i * n + j] != NodeKind::Exterior {
                    g[i * n + j] = f(domain.coord(i), domain.coord(j));
                }
            }
        }
        GraphFunction { domain, g }
    }

    /// Bilinear sample at an arbitrary point of the bounding square.
    pub fn sample(&self, x: f64, z: f64) -> f64 {
        let d = &self.domain;
        let fx = ((x + d.outer_radius) / d.h).clamp(0.0, (d.n - 2) as f64);
        let fz = ((z + d.outer_radius) / d.h).clamp(0.0, (d.n - 2) as f64);
        let (i, j) = (fx.floor() as usize, fz.floor() as usize);
        let (tx, tz) = (fx - i as f64, fz - j as f64);
        let v = |a: usize, b: usize| self.g[d.idx(i + a, j + b)];
        (1.0 - tx) * (1.0 - tz) * v(0, 0)
            + tx * (1.0 - tz) * v(1, 0)
            + (1.0 - tx) * tz * v(0, 1)
            + tx * tz * v(1, 1)
    }

    /// CSV rows `x,z,g` over non-exterior nodes.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,z,g")?;
        let d = &self.domain;
        for i in 0..d.n {
            for j in 0..d.n {
                if d.mask[d.idx(i, j)] != NodeKind::Exterior {
                    writeln!(out, "{},{},{}", d.coord(i), d.coord(j), self.g[d.idx(i, j)])?;
                }
            }
        }
        Ok(())
    }
}

/// Dirichlet data g = 1 + psi, constant per boundary component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletData {
    pub psi_out: f64,
    pub psi_in: Vec<f64>,
}

impl DirichletData {
    pub fn sup_norm(&self) -> f64 {
        self.psi_in
            .iter()
            .fold(self.psi_out.abs(), |m, v| m.max(v.abs()))
    }

    fn value(&self, component: usize) -> f64 {
        if component == 0 {
            1.0 + self.psi_out
        } else {
            1.0 + self.psi_in[component - 1]
        }
    }
}

/// M(g) and its partial derivatives with respect to the nine stencil values
/// `st[di][dj] = g(x + (di-1) h, z + (dj-1) h)`.
pub fn m_stencil(st: &[[f64; 3]; 3], h: f64) -> (f64, [[f64; 3]; 3]) {
    let g = st[1][1];
    let p = (st[2][1] - st[0][1]) / (2.0 * h); // g_x
    let q = (st[1][2] - st[1][0]) / (2.0 * h); // g_z
    let a = (st[2][1] - 2.0 * g + st[0][1]) / (h * h); // g_xx
    let b = (st[1][2] - 2.0 * g + st[1][0]) / (h * h); // g_zz
    let c = (st[2][2] - st[2][0] - st[0][2] + st[0][0]) / (4.0 * h * h); // g_xz

    let w2 = g * g * (1.0 + p * p) + q * q;
    let w = w2.sqrt();
    let w3 = w2 * w;
    let t = (g * g + q * q) * a - 2.0 * p * q * c + (1.0 + p * p) * b + g * (1.0 + p * p);
    let m = g * g * t / w3;

    // Partials with respect to (g, p, q, a, b, c).
    let dw_dg = g * (1.0 + p * p) / w;
    let dw_dp = g * g * p / w;
    let dw_dq = q / w;
    let dt_dg = 2.0 * g * a + (1.0 + p * p);
    let dt_dp = -2.0 * q * c + 2.0 * p * b + 2.0 * g * p;
    let dt_dq = 2.0 * q * a - 2.0 * p * c;
    let pre = g * g / w3;
    let dpre = -3.0 * g * g * t / (w2 * w2);
    let dm_dg = 2.0 * g * t / w3 + dpre * dw_dg + pre * dt_dg;
    let dm_dp = dpre * dw_dp + pre * dt_dp;
    let dm_dq = dpre * dw_dq + pre * dt_dq;
    let dm_da = pre * (g * g + q * q);
    let dm_db = pre * (1.0 + p * p);
    let dm_dc = pre * (-2.0 * p * q);

    // Chain rule onto the stencil.
    let (ih, ih2) = (1.0 / (2.0 * h), 1.0 / (h * h));
    let mut jac = [[0.0; 3]; 3];
    jac[1][1] = dm_dg - 2.0 * ih2 * (dm_da + dm_db);
    jac[2][1] = dm_dp * ih + dm_da * ih2;
    jac[0][1] = -dm_dp * ih + dm_da * ih2;
    jac[1][2] = dm_dq * ih + dm_db * ih2;
    jac[1][0] = -dm_dq * ih + dm_db * ih2;
    let ch = dm_dc / (4.0 * h * h);
    jac[2][2] = ch;
    jac[0][0] = ch;
    jac[2][0] = -ch;
    jac[0][2] = -ch;
    (m, jac)
}

/// M(g) at every node with a full interior 3x3 stencil; other nodes hold NaN.
pub fn mean_curvature_graph(gf: &GraphFunction) -> Result<Vec<f64>> {
    let d = &gf.domain;
    let n = d.n;
    for i in 0..n {
        for j in 0..n {
            let k = d.idx(i, j);
            if d.mask[k] != NodeKind::Exterior && gf.g[k] <= 0.0 {
                return Err(HcatError::NonPositiveGraph {
                    g: gf.g[k],
                    x: d.coord(i),
                    z: d.coord(j),
                });
            }
        }
    }
    let mut out = vec![f64::NAN; n * n];
    for i in 0..n {
        for j in 0..n {
            if d.mask[d.idx(i, j)] != NodeKind::Interior {
                continue;
            }
            let mut st = [[0.0; 3]; 3];
            for di in 0..3 {
                for dj in 0..3 {
                    st[di][dj] = gf.g[d.idx(i + di - 1, j + dj - 1)];
                }
            }
            out[d.idx(i, j)] = m_stencil(&st, d.h).0;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct GraphSolverConfig {
    /// Precondition bound on the Dirichlet data sup norm.
    pub smallness: f64,
    /// Target for sup |M(g) - 1| over interior nodes.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed Newton with the harmonic extension of the boundary data; with
    /// `false` the seed is the constant 1.
    pub harmonic_seed: bool,
    /// Fall back to Picard with the frozen Laplacian instead of the full
    /// Newton Jacobian.
    pub picard: bool,
}

impl Default for GraphSolverConfig {
    fn default() -> Self {
        GraphSolverConfig {
            smallness: 0.1,
            tol: 1e-10,
            max_iter: 20,
            harmonic_seed: true,
            picard: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
}

#[derive(Debug)]
pub struct GraphSolution {
    pub graph: GraphFunction,
    pub iterations: usize,
    /// sup |M(g) - 1| over interior nodes before each Newton update and
    /// after the last.
    pub residual_history: Vec<f64>,
}

impl GraphSolution {
    pub fn report(&self) -> GraphReport {
        GraphReport {
            iterations: self.iterations,
            residual_history: self.residual_history.clone(),
            final_residual: *self.residual_history.last().unwrap(),
        }
    }
}

/// Interpolation row pinning a cut node to the Dirichlet data: the node sits
/// between its inward grid neighbour and the boundary crossing on the grid
/// line towards the nearest exterior neighbour (Shortley-Weller style).
struct CutRow {
    /// Inward neighbour node index, with its interpolation weight.
    inward: Option<(usize, f64)>,
    /// Contribution of the boundary value.
    data_term: f64,
}

struct System {
    /// Equation index per node (non-exterior nodes only).
    eq_of_node: Vec<Option<usize>>,
    /// Node per equation.
    node_of_eq: Vec<usize>,
    /// Cut rows per equation index (None for PDE rows).
    cut: Vec<Option<CutRow>>,
    bandwidth: usize,
}

fn build_system(domain: &PlanarDomain, data: &DirichletData) -> Result<System> {
    let n = domain.n;
    let mut eq_of_node = vec![None; n * n];
    let mut node_of_eq = Vec::new();
    for k in 0..n * n {
        if domain.mask[k] != NodeKind::Exterior {
            eq_of_node[k] = Some(node_of_eq.len());
            node_of_eq.push(k);
        }
    }
    let mut cut = Vec::with_capacity(node_of_eq.len());
    let dirs: [(i64, i64); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];
    for &k in &node_of_eq {
        let (i, j) = (k / n, k % n);
        if domain.mask[k] == NodeKind::Interior {
            cut.push(None);
            continue;
        }
        let (x, z) = (domain.coord(i), domain.coord(j));
        // Choose the exterior direction with the closest boundary crossing.
        let mut best: Option<(f64, usize, (i64, i64))> = None;
        for &(di, dj) in &dirs {
            let (ii, jj) = (i as i64 + di, j as i64 + dj);
            let exterior = ii < 0
                || jj < 0
                || ii >= n as i64
                || jj >= n as i64
                || domain.mask[ii as usize * n + jj as usize] == NodeKind::Exterior;
            if !exterior {
                continue;
            }
            // crossing() parametrizes by the unnormalized direction, so the
            // neighbour sits at parameter h.
            if let Some((d, comp)) = domain.crossing(x, z, di as f64, dj as f64, domain.h) {
                let d = d * ((di * di + dj * dj) as f64).sqrt();
                if best.is_none() || d < best.unwrap().0 {
                    best = Some((d, comp, (di, dj)));
                }
            }
        }
        let Some((d, comp, (di, dj))) = best else {
            return Err(HcatError::Numerical(format!(
                "no boundary crossing found at cut node ({x}, {z})"
            )));
        };
        let len = domain.h * ((di * di + dj * dj) as f64).sqrt();
        let psi = data.value(comp);
        // Inward neighbour on the opposite side, if usable.
        let (ai, aj) = (i as i64 - di, j as i64 - dj);
        let inward_ok = ai >= 0
            && aj >= 0
            && ai < n as i64
            && aj < n as i64
            && domain.mask[ai as usize * n + aj as usize] != NodeKind::Exterior;
        let row = if inward_ok && d > 1e-6 * len {
            let a_node = ai as usize * n + aj as usize;
            // Linear interpolation through (inward, -len) and (boundary, d):
            // g_P = (d g_A + len psi) / (d + len).
            CutRow {
                inward: Some((a_node, d / (d + len))),
                data_term: len * psi / (d + len),
            }
        } else {
            CutRow {
                inward: None,
                data_term: psi,
            }
        };
        cut.push(Some(row));
    }
    Ok(System {
        eq_of_node,
        node_of_eq,
        cut,
        bandwidth: n + 1,
    })
}

/// Residual and (optionally frozen) Jacobian of the discrete system.
fn assemble(
    domain: &PlanarDomain,
    sys: &System,
    g: &[f64],
    frozen_laplacian: bool,
) -> Result<(Vec<f64>, Banded, f64, f64)> {
    let n = domain.n;
    let m = sys.node_of_eq.len();
    let mut f = vec![0.0; m];
    let mut jac = Banded::new(m, sys.bandwidth, sys.bandwidth);
    let mut pde_sup: f64 = 0.0;
    let mut cut_sup: f64 = 0.0;
    for (row, &k) in sys.node_of_eq.iter().enumerate() {
        let (i, j) = (k / n, k % n);
        if g[k] <= 0.0 {
            return Err(HcatError::NonPositiveGraph {
                g: g[k],
                x: domain.coord(i),
                z: domain.coord(j),
            });
        }
        match &sys.cut[row] {
            Some(cutrow) => {
                let mut res = g[k] - cutrow.data_term;
                jac.set(row, row, 1.0);
                if let Some((a_node, wa)) = cutrow.inward {
                    res -= wa * g[a_node];
                    let col = sys.eq_of_node[a_node].unwrap();
                    jac.set(row, col, -wa);
                }
                f[row] = res;
                cut_sup = cut_sup.max(res.abs());
            }
            None => {
                let mut st = [[0.0; 3]; 3];
                for di in 0..3 {
                    for dj in 0..3 {
                        st[di][dj] = g[domain.idx(i + di - 1, j + dj - 1)];
                    }
                }
                let (m_val, dm) = m_stencil(&st, domain.h);
                f[row] = m_val - 1.0;
                pde_sup = pde_sup.max(f[row].abs());
                for di in 0..3usize {
                    for dj in 0..3usize {
                        let coeff = if frozen_laplacian {
                            // 5-point Laplacian (the linearization at g = 1).
                            match (di, dj) {
                                (1, 1) => -4.0 / (domain.h * domain.h),
                                (0, 1) | (2, 1) | (1, 0) | (1, 2) => 1.0 / (domain.h * domain.h),
                                _ => 0.0,
                            }
                        } else {
                            dm[di][dj]
                        };
                        if coeff != 0.0 {
                            let node = domain.idx(i + di - 1, j + dj - 1);
                            let col = sys.eq_of_node[node].unwrap();
                            jac.add(row, col, coeff);
                        }
                    }
                }
            }
        }
    }
    Ok((f, jac, pde_sup, cut_sup))
}

/// Harmonic extension of the boundary data: solves the 5-point Laplace
/// equation with the same cut-node interpolation rows.
fn harmonic_seed(domain: &PlanarDomain, sys: &System) -> Result<Vec<f64>> {
    let n = domain.n;
    let m = sys.node_of_eq.len();
    let mut a = Banded::new(m, sys.bandwidth, sys.bandwidth);
    let mut rhs = vec![0.0; m];
    let ih2 = 1.0 / (domain.h * domain.h);
    for (row, &k) in sys.node_of_eq.iter().enumerate() {
        let (i, j) = (k / n, k % n);
        match &sys.cut[row] {
            Some(cutrow) => {
                a.set(row, row, 1.0);
                if let Some((a_node, wa)) = cutrow.inward {
                    a.set(row, sys.eq_of_node[a_node].unwrap(), -wa);
                }
                rhs[row] = cutrow.data_term;
            }
            None => {
                a.set(row, row, -4.0 * ih2);
                for (ii, jj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    a.set(row, sys.eq_of_node[domain.idx(ii, jj)].unwrap(), ih2);
                }
            }
        }
    }
    let lu = a.lu()?;
    lu.solve(&mut rhs);
    let mut g = vec![1.0; n * n];
    for (row, &k) in sys.node_of_eq.iter().enumerate() {
        g[k] = rhs[row];
    }
    Ok(g)
}

/// Solves the Dirichlet problem M(g) = 1, g = 1 + psi on the boundary, by
/// Newton iteration seeded at the harmonic extension of the data.
pub fn solve_dirichlet(
    domain: &PlanarDomain,
    data: &DirichletData,
    config: &GraphSolverConfig,
) -> Result<GraphSolution> {
    if data.psi_in.len() != domain.holes.len() {
        return Err(HcatError::Precondition(format!(
            "{} inner data values for {} holes",
            data.psi_in.len(),
            domain.holes.len()
        )));
    }
    if data.sup_norm() > config.smallness {
        return Err(HcatError::Precondition(format!(
            "boundary data sup {} exceeds the smallness bound {}",
            data.sup_norm(),
            config.smallness
        )));
    }
    let sys = build_system(domain, data)?;
    let mut g = if config.harmonic_seed {
        harmonic_seed(domain, &sys)?
    } else {
        vec![1.0; domain.n * domain.n]
    };

    let mut history = Vec::new();
    for iter in 0..config.max_iter {
        let (mut f, jac, pde_sup, cut_sup) = assemble(domain, &sys, &g, config.picard)?;
        history.push(pde_sup);
        // the cut rows are linear, so they are exact after the first step;
        // gating on them too keeps a constant seed from stopping early
        if pde_sup < config.tol && cut_sup < config.tol.max(1e-12) {
            return Ok(GraphSolution {
                graph: GraphFunction {
                    domain: domain.clone(),
                    g,
                },
                iterations: iter,
                residual_history: history,
            });
        }
        let lu = jac.lu()?;
        lu.solve(&mut f);
        for (row, &k) in sys.node_of_eq.iter().enumerate() {
            g[k] -= f[row];
        }
    }
    Err(HcatError::NonConvergence(format!(
        "Newton stalled after {} steps, residuals {:?}",
        config.max_iter, history
    )))
}

/// One-sided 2nd-order derivative of g along the inward normal of a boundary
/// component (0 = outer circle, 1 + j = hole j), sampled at `n_samples`
/// equally spaced angles. Returns (angle, derivative) pairs.
pub fn boundary_derivative(
    gf: &GraphFunction,
    data: &DirichletData,
    component: usize,
    n_samples: usize,
) -> Result<Vec<(f64, f64)>> {
    let d = &gf.domain;
    if component > d.holes.len() {
        return Err(HcatError::Precondition(format!(
            "component {component} out of range"
        )));
    }
    let (cx, radius, sign) = if component == 0 {
        (0.0, d.outer_radius, -1.0) // inward points towards the origin
    } else {
        let hole = d.holes[component - 1];
        (hole.x, hole.r, 1.0) // inward points away from the hole
    };
    let g_b = data.value(component);
    let h = d.h;
    let mut out = Vec::with_capacity(n_samples);
    for kk in 0..n_samples {
        let ang = 2.0 * std::f64::consts::PI * kk as f64 / n_samples as f64;
        let (nx, nz) = (sign * ang.cos(), sign * ang.sin());
        let (bx, bz) = (cx + radius * ang.cos(), radius * ang.sin());
        // Step inward until both sample points sit in cells of non-exterior
        // nodes, then differentiate the quadratic through the boundary value
        // and the two interior samples.
        let clean = |t: f64| -> bool {
            let (x, z) = (bx + t * nx, bz + t * nz);
            let fx = ((x + d.outer_radius) / h).clamp(0.0, (d.n - 2) as f64);
            let fz = ((z + d.outer_radius) / h).clamp(0.0, (d.n - 2) as f64);
            let (i, j) = (fx.floor() as usize, fz.floor() as usize);
            [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .all(|&(a, b)| d.mask[d.idx(i + a, j + b)] != NodeKind::Exterior)
        };
        let mut t0 = 2.0 * h;
        while (!clean(t0) || !clean(t0 + 2.0 * h)) && t0 < radius {
            t0 += h;
        }
        let ts = [t0, t0 + h, t0 + 2.0 * h];
        let gs: Vec<f64> = ts
            .iter()
            .map(|&t| gf.sample(bx + t * nx, bz + t * nz))
            .collect();
        // derivative at 0 of the cubic through (0, g_b) and the three
        // interior samples
        let [a, b, c] = ts;
        let mut deriv = -g_b * (1.0 / a + 1.0 / b + 1.0 / c);
        deriv += gs[0] * b * c / (a * (a - b) * (a - c));
        deriv += gs[1] * a * c / (b * (b - a) * (b - c));
        deriv += gs[2] * a * b / (c * (c - a) * (c - b));
        out.push((ang, deriv));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catenoid::{extract_graph_point, CatenoidParams};

    fn annulus(h: f64) -> PlanarDomain {
        PlanarDomain::new(1.0, vec![Hole { x: 0.0, r: 0.3 }], h).unwrap()
    }

    #[test]
    fn domain_construction_and_mask() {
        let d = annulus(1.0 / 32.0);
        let interior = d.mask.iter().filter(|&&k| k == NodeKind::Interior).count();
        let non_ext = d.mask.iter().filter(|&&k| k != NodeKind::Exterior).count();
        // node count tracks the annulus area pi (1 - 0.09) / h^2
        let expect = std::f64::consts::PI * (1.0 - 0.09) / (d.h * d.h);
        assert!((non_ext as f64 - expect).abs() < 0.1 * expect);
        assert!(interior < non_ext);

        // rejections: hole leaving the disc, overlapping holes, bad h
        assert!(PlanarDomain::new(1.0, vec![Hole { x: 0.8, r: 0.3 }], 0.05).is_err());
        assert!(PlanarDomain::new(
            1.0,
            vec![Hole { x: -0.2, r: 0.25 }, Hole { x: 0.2, r: 0.25 }],
            0.05
        )
        .is_err());
        assert!(PlanarDomain::new(1.0, vec![], 0.5).is_err());
    }

    #[test]
    fn domain_json_roundtrip() {
        let text = r#"{"r": 1.5, "holes": [{"x": 0.4, "r": 0.2}], "h": 0.05}"#;
        let d = PlanarDomain::from_json(text).unwrap();
        assert_eq!(d.outer_radius, 1.5);
        assert_eq!(d.holes.len(), 1);
        assert!(PlanarDomain::from_json("{\"r\": 1.0}").is_err());
    }

    #[test]
    fn constants_have_unit_m_bitwise() {
        let d = annulus(1.0 / 24.0);
        for &c in &[0.5, 1.0, 1.05, 2.3, std::f64::consts::PI] {
            let gf = GraphFunction::constant(d.clone(), c);
            let m = mean_curvature_graph(&gf).unwrap();
            for (k, &v) in m.iter().enumerate() {
                if d.mask[k] == NodeKind::Interior {
                    assert_eq!(v, 1.0, "M({c}) at node {k} is {v}");
                }
            }
        }
    }

    #[test]
    fn nonpositive_graph_is_rejected() {
        let d = annulus(1.0 / 24.0);
        let mut gf = GraphFunction::constant(d, 1.0);
        let k = gf
            .domain
            .mask
            .iter()
            .position(|&m| m == NodeKind::Interior)
            .unwrap();
        gf.g[k] = -0.5;
        match mean_curvature_graph(&gf) {
            Err(HcatError::NonPositiveGraph { g, .. }) => assert_eq!(g, -0.5),
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn linearization_is_the_flat_laplacian() {
        // (M(1 + t u) - 1)/t -> Laplacian of u; for u = x^2 the quadratic
        // stencil is exact, so Richardson over t isolates the limit 2.
        let h = 0.02;
        let x0 = 0.3;
        let defect = |t: f64| -> f64 {
            let mut st = [[0.0; 3]; 3];
            for di in 0..3 {
                for dj in 0..3 {
                    let x = x0 + (di as f64 - 1.0) * h;
                    let _ = dj;
                    st[di][dj] = 1.0 + t * x * x;
                }
            }
            (m_stencil(&st, h).0 - 1.0) / t
        };
        let t = 1e-3;
        let richardson = 2.0 * defect(t / 2.0) - defect(t);
        assert!((richardson - 2.0).abs() < 1e-6, "limit {richardson}");
    }

    #[test]
    fn jacobian_at_one_is_the_five_point_laplacian() {
        let d = annulus(1.0 / 16.0);
        let data = DirichletData { psi_out: 0.0, psi_in: vec![0.0] };
        let sys = build_system(&d, &data).unwrap();
        let g = vec![1.0; d.n * d.n];
        let (_, jac, _, _) = assemble(&d, &sys, &g, false).unwrap();
        let ih2 = 1.0 / (d.h * d.h);
        let mut worst: f64 = 0.0;
        for (row, &k) in sys.node_of_eq.iter().enumerate() {
            if sys.cut[row].is_some() {
                continue;
            }
            let (i, j) = (k / d.n, k % d.n);
            for di in 0..3usize {
                for dj in 0..3usize {
                    let col = sys.eq_of_node[d.idx(i + di - 1, j + dj - 1)].unwrap();
                    let expect = match (di, dj) {
                        (1, 1) => -4.0 * ih2,
                        (0, 1) | (2, 1) | (1, 0) | (1, 2) => ih2,
                        _ => 0.0,
                    };
                    worst = worst.max((jac.get(row, col) - expect).abs());
                }
            }
        }
        assert!(worst < 1e-12, "Jacobian deviates from the Laplacian by {worst}");
    }

    #[test]
    fn constant_data_solves_in_zero_newton_steps() {
        let d = annulus(1.0 / 24.0);
        let data = DirichletData { psi_out: 0.05, psi_in: vec![0.05] };
        let sol = solve_dirichlet(&d, &data, &GraphSolverConfig::default()).unwrap();
        // the harmonic seed already solves the constant problem up to LU
        // roundoff amplified by 1/h^2; at most one polishing step remains
        assert!(sol.iterations <= 1, "residuals {:?}", sol.residual_history);
        assert!(sol.residual_history[0] < 1e-9);
        assert!(*sol.residual_history.last().unwrap() < 1e-10);
        for (k, &g) in sol.graph.g.iter().enumerate() {
            if d.mask[k] != NodeKind::Exterior {
                assert!((g - 1.05).abs() < 1e-9, "node {k}: {g}");
            }
        }
        // zero data reproduces the unit horocylinder
        let zero = DirichletData { psi_out: 0.0, psi_in: vec![0.0] };
        let sol = solve_dirichlet(&d, &zero, &GraphSolverConfig::default()).unwrap();
        for (k, &g) in sol.graph.g.iter().enumerate() {
            if d.mask[k] != NodeKind::Exterior {
                assert!((g - 1.0).abs() < 1e-9, "node {k}: {g}");
            }
        }
    }

    #[test]
    fn annulus_dirichlet_converges_quadratically() {
        // outer data at the eps |log eps| scale of the end-matching regime
        let eps: f64 = 0.05;
        let psi_out = eps * eps.ln().abs();
        let d = annulus(1.0 / 32.0);
        let data = DirichletData { psi_out, psi_in: vec![0.0] };
        let config = GraphSolverConfig {
            smallness: 0.2,
            tol: 1e-8,
            ..GraphSolverConfig::default()
        };
        let sol = solve_dirichlet(&d, &data, &config).unwrap();
        println!("residual history {:?}", sol.residual_history);
        assert!(sol.iterations <= 6, "took {} steps", sol.iterations);
        assert!(*sol.residual_history.last().unwrap() < 1e-8);
        // maximum principle: solution between the boundary values
        for (k, &g) in sol.graph.g.iter().enumerate() {
            if d.mask[k] != NodeKind::Exterior {
                assert!(g >= 1.0 - 1e-9 && g <= 1.0 + psi_out + 1e-9, "node {k}: {g}");
            }
        }
        // quadratic tail: r_{k+1} <= C r_k^2 over the recorded steps
        let h = &sol.residual_history;
        for w in h.windows(2) {
            if w[0] < 0.5 && w[1] > 1e-14 {
                let c = w[1] / (w[0] * w[0]);
                assert!(c < 50.0, "not quadratic: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn two_seeds_reach_the_same_solution() {
        let d = annulus(1.0 / 24.0);
        let data = DirichletData { psi_out: 0.08, psi_in: vec![-0.03] };
        let config = GraphSolverConfig::default();
        let a = solve_dirichlet(&d, &data, &config).unwrap();
        let b = solve_dirichlet(
            &d,
            &data,
            &GraphSolverConfig { harmonic_seed: false, ..config },
        )
        .unwrap();
        let mut dev: f64 = 0.0;
        for k in 0..d.n * d.n {
            if d.mask[k] != NodeKind::Exterior {
                dev = dev.max((a.graph.g[k] - b.graph.g[k]).abs());
            }
        }
        assert!(dev < 1e-9, "seeds disagree by {dev}");
    }

    #[test]
    fn picard_fallback_converges() {
        let d = annulus(1.0 / 24.0);
        let data = DirichletData { psi_out: 0.05, psi_in: vec![0.02] };
        let config = GraphSolverConfig {
            picard: true,
            tol: 1e-9,
            max_iter: 40,
            ..GraphSolverConfig::default()
        };
        let sol = solve_dirichlet(&d, &data, &config).unwrap();
        let newton = solve_dirichlet(&d, &data, &GraphSolverConfig::default()).unwrap();
        let mut dev: f64 = 0.0;
        for k in 0..d.n * d.n {
            if d.mask[k] != NodeKind::Exterior {
                dev = dev.max((sol.graph.g[k] - newton.graph.g[k]).abs());
            }
        }
        assert!(dev < 1e-7, "Picard and Newton disagree by {dev}");
    }

    #[test]
    fn oversized_data_is_rejected() {
        let d = annulus(1.0 / 16.0);
        let data = DirichletData { psi_out: 0.3, psi_in: vec![0.0] };
        match solve_dirichlet(&d, &data, &GraphSolverConfig::default()) {
            Err(HcatError::Precondition(_)) => {}
            other => panic!("expected precondition error, got {other:?}"),
        }
        let mismatched = DirichletData { psi_out: 0.01, psi_in: vec![] };
        assert!(solve_dirichlet(&d, &mismatched, &GraphSolverConfig::default()).is_err());
    }

    #[test]
    fn boundary_derivative_of_constants_vanishes() {
        let d = annulus(1.0 / 24.0);
        let gf = GraphFunction::constant(d, 1.05);
        let data = DirichletData { psi_out: 0.05, psi_in: vec![0.05] };
        for comp in 0..2 {
            for (_, dv) in boundary_derivative(&gf, &data, comp, 32).unwrap() {
                assert!(dv.abs() < 1e-12, "derivative {dv}");
            }
        }
        assert!(boundary_derivative(&gf, &data, 3, 8).is_err());
    }

    #[test]
    fn boundary_derivative_matches_log_radial_oracle() {
        // harmonic a + b log rho on the annulus 0.3 <= rho <= 1
        let d = annulus(1.0 / 192.0);
        let (r_in, r_out) = (0.3f64, 1.0f64);
        let (psi_in, psi_out) = (0.0f64, 0.08f64);
        let b = (psi_out - psi_in) / (r_out / r_in).ln();
        let a = 1.0 + psi_out - b * r_out.ln();
        let gf = GraphFunction::from_fn(d, |x, z| a + b * x.hypot(z).max(1e-12).ln());
        let data = DirichletData { psi_out, psi_in: vec![psi_in] };
        // inward derivative: -b/r at the outer circle, +b/r at the hole
        let mut worst_out: f64 = 0.0;
        let mut worst_in: f64 = 0.0;
        for (_, dv) in boundary_derivative(&gf, &data, 0, 48).unwrap() {
            worst_out = worst_out.max((dv + b / r_out).abs());
        }
        for (_, dv) in boundary_derivative(&gf, &data, 1, 48).unwrap() {
            worst_in = worst_in.max((dv - b / r_in).abs());
        }
        println!("normal derivative errors: outer {worst_out}, inner {worst_in}");
        assert!(worst_out < 1e-4, "outer error {worst_out}");
        assert!(worst_in < 1e-3, "inner error {worst_in}");
    }

    #[test]
    fn monotone_data_gives_signed_inner_derivative() {
        let d = annulus(1.0 / 32.0);
        let data = DirichletData { psi_out: 0.08, psi_in: vec![0.0] };
        let sol = solve_dirichlet(&d, &data, &GraphSolverConfig::default()).unwrap();
        for (_, dv) in boundary_derivative(&sol.graph, &data, 1, 32).unwrap() {
            assert!(dv >= -1e-6, "inner inward derivative {dv} negative");
        }
    }

    #[test]
    fn catenoid_end_patch_has_unit_m() {
        // sample the catenoid end as a horizontal graph on a small square
        // patch and push it through the graph stencils: 2H = 1 to FD error
        let params = CatenoidParams::from_epsilon(0.05).unwrap();
        let h = 0.0125;
        let (nx, nz) = (17usize, 17);
        let mut gvals = vec![vec![0.0; nz]; nx];
        for i in 0..nx {
            for j in 0..nz {
                let x = -0.1 + i as f64 * h;
                let z = 0.65 + j as f64 * h;
                let r = x.hypot(z);
                let gamma = x.atan2(z);
                gvals[i][j] = extract_graph_point(&params, r, gamma).unwrap();
            }
        }
        let mut worst: f64 = 0.0;
        for i in 1..nx - 1 {
            for j in 1..nz - 1 {
                let mut st = [[0.0; 3]; 3];
                for di in 0..3 {
                    for dj in 0..3 {
                        st[di][dj] = gvals[i + di - 1][j + dj - 1];
                    }
                }
                worst = worst.max((m_stencil(&st, h).0 - 1.0).abs());
            }
        }
        assert!(worst < 1e-3, "catenoid patch M deviates by {worst}");
    }

    #[test]
    fn solution_csv_and_report() {
        let d = annulus(1.0 / 16.0);
        let data = DirichletData { psi_out: 0.04, psi_in: vec![0.01] };
        let sol = solve_dirichlet(&d, &data, &GraphSolverConfig::default()).unwrap();
        let report = sol.report();
        let json = serde_json::to_string(&report).unwrap();
        let back: GraphReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.iterations, sol.iterations);
        assert_eq!(back.final_residual, *sol.residual_history.last().unwrap());

        let dir = std::env::temp_dir().join("hcat_graph_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.csv");
        sol.graph.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,z,g\n"));
        let non_ext = d.mask.iter().filter(|&&k| k != NodeKind::Exterior).count();
        assert_eq!(text.lines().count(), 1 + non_ext);
    }
}

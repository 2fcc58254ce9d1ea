//! Banded LU factorization with partial pivoting, LAPACK-style band storage.
//!
//! Used for the large sparse linear systems arising from finite-difference
//! discretizations (Dirichlet graph solver, 1D cross-section operators),
//! where dense factorizations would be wasteful.

use crate::error::{HcatError, Result};

/// Band matrix with `kl` subdiagonals and `ku` superdiagonals.
///
/// Storage keeps `kl` extra superdiagonal rows for pivoting fill, so entry
/// `(i, j)` lives at band row `ku + kl + i - j` of column `j`.
#[derive(Debug, Clone)]
pub struct Banded {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    rows: usize,
    ab: Vec<f64>,
}

impl Banded {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let rows = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            rows,
            ab: vec![0.0; rows * n],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        self.ku + self.kl + i - j + j * self.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i + self.ku + self.kl || i > j + self.kl {
            0.0
        } else {
            self.ab[self.slot(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j <= i + self.ku && i <= j + self.kl,
            "entry ({i}, {j}) outside band kl={}, ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.ab[s] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        assert!(j <= i + self.ku && i <= j + self.kl);
        self.ab[s] += v;
    }

    /// Factors in place with partial pivoting. Fails on exact singularity.
    pub fn lu(mut self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            // Pivot search in column j, rows j..=j+kl.
            let i_max = (j + kl).min(n - 1);
            let mut piv = j;
            let mut piv_val = self.ab[self.slot(j, j)].abs();
            for i in j + 1..=i_max {
                let v = self.ab[self.slot(i, j)].abs();
                if v > piv_val {
                    piv = i;
                    piv_val = v;
                }
            }
            if piv_val == 0.0 {
                return Err(HcatError::Numerical(format!(
                    "banded LU: zero pivot at column {j}"
                )));
            }
            ipiv[j] = piv;
            let j_max = (j + ku + kl).min(n - 1);
            if piv != j {
                for c in j..=j_max {
                    let (s1, s2) = (self.slot(j, c), self.slot(piv, c));
                    self.ab.swap(s1, s2);
                }
            }
            let d = self.ab[self.slot(j, j)];
            for i in j + 1..=i_max {
                let s = self.slot(i, j);
                let l = self.ab[s] / d;
                self.ab[s] = l;
                if l != 0.0 {
                    for c in j + 1..=j_max {
                        let u = self.ab[self.slot(j, c)];
                        if u != 0.0 {
                            let t = self.slot(i, c);
                            self.ab[t] -= l * u;
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            rows: self.rows,
            ab: self.ab,
            ipiv,
        })
    }
}

/// Factored form of a [`Banded`] matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    rows: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        self.ku + self.kl + i - j + j * self.rows
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        // Forward: apply permutation and L.
        for j in 0..n {
            b.swap(j, self.ipiv[j]);
            let i_max = (j + self.kl).min(n - 1);
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..=i_max {
                    b[i] -= self.ab[self.slot(i, j)] * bj;
                }
            }
        }
        // Backward: U.
        for j in (0..n).rev() {
            let x = b[j] / self.ab[self.slot(j, j)];
            b[j] = x;
            if x != 0.0 {
                let i_min = j.saturating_sub(self.ku + self.kl);
                for i in i_min..j {
                    b[i] -= self.ab[self.slot(i, j)] * x;
                }
            }
        }
    }
}

/// Smallest-magnitude eigenpair of a (near-)symmetric banded matrix by
/// inverse iteration. Returns `(|eigenvalue|, eigenvector)`.
pub fn min_singular_pair(a: &Banded, iters: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    use rand::Rng;
    use rand::SeedableRng;
    let n = a.n;
    let lu = a.clone().lu()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut x);
    for _ in 0..iters {
        lu.solve(&mut x);
        normalize(&mut x);
    }
    // Rayleigh quotient |x^T A x| for the converged unit vector.
    let mut ax = vec![0.0; n];
    for i in 0..n {
        let j_lo = i.saturating_sub(a.kl);
        let j_hi = (i + a.ku).min(n - 1);
        for j in j_lo..=j_hi {
            ax[i] += a.get(i, j) * x[j];
        }
    }
    let lam: f64 = x.iter().zip(ax.iter()).map(|(u, v)| u * v).sum();
    Ok((lam.abs(), x))
}

fn normalize(x: &mut [f64]) {
    let n: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn banded_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &(n, kl, ku) in &[(12usize, 2usize, 3usize), (40, 5, 1), (25, 0, 2), (30, 4, 0)] {
            let mut band = Banded::new(n, kl, ku);
            let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if j <= i + ku && i <= j + kl {
                        let v: f64 = rng.gen_range(-1.0..1.0)
                            + if i == j { 3.0 } else { 0.0 };
                        band.set(i, j, v);
                        dense[(i, j)] = v;
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut x = b.clone();
            band.lu().unwrap().solve(&mut x);
            let xd = dense
                .lu()
                .solve(&nalgebra::DVector::from_vec(b))
                .unwrap();
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() < 1e-10, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let mut band = Banded::new(3, 1, 1);
        band.set(0, 0, 0.0);
        band.set(0, 1, 1.0);
        band.set(1, 0, 2.0);
        band.set(1, 1, 1.0);
        band.set(1, 2, 1.0);
        band.set(2, 1, 1.0);
        band.set(2, 2, 3.0);
        let mut b = vec![1.0, 2.0, 3.0];
        band.lu().unwrap().solve(&mut b);
        // Check residual against the original matrix.
        let x = b;
        assert!((x[1] - 1.0).abs() < 1e-12);
        assert!((2.0 * x[0] + x[1] + x[2] - 2.0).abs() < 1e-12);
        assert!((x[1] + 3.0 * x[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_iteration_finds_smallest_eigenvalue() {
        // Discrete 1D Laplacian with Dirichlet ends: eigenvalues
        // 4 sin^2(k pi / (2(n+1))) / h^2 scaled; smallest is well separated.
        let n = 50;
        let h = 1.0 / (n as f64 + 1.0);
        let mut a = Banded::new(n, 1, 1);
        for i in 0..n {
            a.set(i, i, 2.0 / (h * h));
            if i > 0 {
                a.set(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                a.set(i, i + 1, -1.0 / (h * h));
            }
        }
        let (sigma, v) = min_singular_pair(&a, 30, 1).unwrap();
        let exact = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((sigma - exact).abs() / exact < 1e-10);
        // Eigenvector is sin(pi x), up to sign.
        let s: f64 = (0..n)
            .map(|i| v[i] * (std::f64::consts::PI * (i as f64 + 1.0) * h).sin())
            .sum();
        let norm2: f64 = (0..n)
            .map(|i| (std::f64::consts::PI * (i as f64 + 1.0) * h).sin().powi(2))
            .sum();
        assert!(s.abs() / norm2.sqrt() > 0.999);
    }
}

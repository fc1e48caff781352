//! Tridiagonal (optionally cyclic) linear algebra.
//!
//! All operators on a meridian grid are three-point stencils, so linear
//! solves are `O(n)` and the symmetric eigenproblems are solved by Sturm
//! bisection plus inverse iteration. Periodic grids add the two corner
//! entries of a cyclic tridiagonal matrix.

use crate::error::{Result, SmlError};

/// General tridiagonal matrix.
///
/// `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]` for `i < n-1`. When
/// `periodic`, `lower[n-1] = A[0][n-1]` and `upper[n-1] = A[n-1][0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: bool,
}

/// Symmetric tridiagonal matrix; `off[i] = A[i][i+1]` and, when periodic,
/// `off[n-1] = A[n-1][0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub periodic: bool,
}

impl SymTridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        if self.periodic {
            y[n - 1] += self.off[n - 1] * x[0];
            y[0] += self.off[n - 1] * x[n - 1];
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `self + diag(shift)`.
    pub fn add_diagonal(&self, shift: &[f64]) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(shift).map(|(a, b)| a + b).collect(),
            off: self.off.clone(),
            periodic: self.periodic,
        }
    }

    pub fn to_general(&self) -> Tridiag {
        Tridiag { lower: self.off.clone(), diag: self.diag.clone(), upper: self.off.clone(), periodic: self.periodic }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.to_general().solve(rhs)
    }

    /// `diag(1/√m) A diag(1/√m)`.
    pub fn congruence_scaled(&self, mass: &[f64]) -> SymTridiag {
        let n = self.n();
        let r: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let diag = (0..n).map(|i| self.diag[i] * r[i] * r[i]).collect();
        let mut off: Vec<f64> = (0..n - 1).map(|i| self.off[i] * r[i] * r[i + 1]).collect();
        if self.periodic {
            off.push(self.off[n - 1] * r[n - 1] * r[0]);
        }
        SymTridiag { diag, off, periodic: self.periodic }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i + 1 < n || self.periodic {
                r += self.off[i % self.off.len()].abs();
            }
            if i > 0 {
                r += self.off[i - 1].abs();
            } else if self.periodic {
                r += self.off[n - 1].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `sigma` (Sturm count; for cyclic
    /// matrices the last row is handled through its Schur complement).
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.n();
        let scale = self.diag.iter().map(|d| d.abs()).fold(0.0, f64::max).max(1e-300);
        let tiny = f64::EPSILON * scale;
        let open_len = if self.periodic { n - 1 } else { n };
        let mut count = 0;
        let mut pivot = self.diag[0] - sigma;
        if pivot == 0.0 {
            pivot = -tiny;
        }
        if pivot < 0.0 {
            count += 1;
        }
        // forward elimination of the cyclic column alongside the Sturm pivots
        let mut y = if self.periodic { self.off[n - 1] } else { 0.0 };
        let mut schur = if self.periodic { y * y / pivot } else { 0.0 };
        for i in 1..open_len {
            let b = self.off[i - 1];
            let next = (self.diag[i] - sigma) - b * b / pivot;
            if self.periodic {
                let ci = if i == n - 2 { self.off[n - 2] } else { 0.0 };
                y = ci - b / pivot * y;
            }
            pivot = if next == 0.0 { -tiny } else { next };
            if pivot < 0.0 {
                count += 1;
            }
            if self.periodic {
                schur += y * y / pivot;
            }
        }
        if self.periodic {
            let s = (self.diag[n - 1] - sigma) - schur;
            if s < 0.0 || (s == 0.0) {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn kth_eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let span = hi - lo;
        lo -= 1e-12 * span.max(1.0);
        hi += 1e-12 * span.max(1.0);
        for _ in 0..4000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit eigenvector for an (isolated) eigenvalue by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let (lo, hi) = self.gershgorin();
        let scale = (hi - lo).abs().max(lambda.abs()).max(1.0);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919 % 101) as f64 / 101.0)).collect();
        normalize(&mut x);
        let mut shift = lambda;
        for attempt in 0..5 {
            let shifted = SymTridiag {
                diag: self.diag.iter().map(|d| d - shift).collect(),
                off: self.off.clone(),
                periodic: self.periodic,
            };
            let mut ok = true;
            for _ in 0..4 {
                match shifted.solve(&x) {
                    Ok(mut y) if y.iter().all(|v| v.is_finite()) => {
                        normalize(&mut y);
                        x = y;
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(x);
            }
            shift = lambda + scale * f64::EPSILON * 16.0 * (attempt + 1) as f64;
        }
        Err(SmlError::NoConvergence { what: "inverse iteration", iterations: 20, residual: f64::NAN })
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n - 1 {
            y[i] += self.upper[i] * x[i + 1];
            y[i + 1] += self.lower[i] * x[i];
        }
        if self.periodic {
            y[0] += self.lower[n - 1] * x[n - 1];
            y[n - 1] += self.upper[n - 1] * x[0];
        }
        y
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if rhs.len() != n {
            return Err(SmlError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        if !self.periodic {
            return gtsv(&self.lower[..n - 1], &self.diag, &self.upper[..n - 1], rhs);
        }
        // Sherman–Morrison on top of the open tridiagonal part.
        let corner_top = self.lower[n - 1]; // A[0][n-1]
        let corner_bottom = self.upper[n - 1]; // A[n-1][0]
        let gamma = if self.diag[0] != 0.0 { -self.diag[0] } else { -1.0 };
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= corner_top * corner_bottom / gamma;
        let lower = &self.lower[..n - 1];
        let upper = &self.upper[..n - 1];
        let y = gtsv(lower, &diag, upper, rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = corner_bottom;
        let z = gtsv(lower, &diag, upper, &u)?;
        let v_last = corner_top / gamma;
        let vy = y[0] + v_last * y[n - 1];
        let vz = z[0] + v_last * z[n - 1];
        let denom = 1.0 + vz;
        if denom == 0.0 {
            return Err(SmlError::NoConvergence { what: "cyclic solve", iterations: 0, residual: f64::INFINITY });
        }
        let f = vy / denom;
        Ok(y.iter().zip(&z).map(|(a, b)| a - f * b).collect())
    }
}

/// Tridiagonal solve with partial pivoting (LAPACK `gtsv` elimination).
fn gtsv(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut dl = lower.to_vec();
    let mut du = upper.to_vec();
    let mut b = rhs.to_vec();
    let singular = |i: usize| SmlError::NoConvergence { what: "tridiagonal solve (singular pivot)", iterations: i, residual: f64::INFINITY };
    if n == 1 {
        if d[0] == 0.0 {
            return Err(singular(0));
        }
        return Ok(vec![b[0] / d[0]]);
    }
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(singular(i));
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i < n - 2 {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        return Err(singular(n - 1));
    }
    b[n - 1] /= d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    Ok(b)
}

/// Solve with the convention `sub[i] = A[i][i-1]`, `sup[i] = A[i][i+1]`.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let lower: Vec<f64> = (0..n - 1).map(|i| sub[i + 1]).collect();
    gtsv(&lower, diag, &sup[..n - 1], rhs)
}

/// Smallest generalized eigenpair of `(A, diag(mass))` for a symmetric
/// tridiagonal `A`: returns `(λ, x, residual)` with `xᵀ M x = 1`, the sign of
/// `x` fixed so that `Σ m x ≥ 0`, and residual `‖M^{-1/2}(Ax - λMx)‖₂`.
pub fn lowest_generalized(a: &SymTridiag, mass: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    generalized_pair(a, mass, 0)
}

/// `k`-th generalized eigenpair (0-based), same conventions as
/// [`lowest_generalized`].
pub fn generalized_pair(a: &SymTridiag, mass: &[f64], k: usize) -> Result<(f64, Vec<f64>, f64)> {
    let n = a.n();
    if mass.len() != n {
        return Err(SmlError::DimensionMismatch { expected: n, got: mass.len() });
    }
    if mass.iter().any(|m| !(*m > 0.0)) {
        return Err(SmlError::InvalidParameter("mass matrix must be positive definite".into()));
    }
    let b = a.congruence_scaled(mass);
    let bisected = b.kth_eigenvalue(k);
    let y = b.eigenvector(bisected)?;
    let by = b.matvec(&y);
    // the cyclic Sturm count loses digits to cancellation; the Rayleigh
    // quotient of the converged vector does not
    let lambda: f64 = by.iter().zip(&y).map(|(u, v)| u * v).sum();
    let residual = by.iter().zip(&y).map(|(u, v)| (u - lambda * v).powi(2)).sum::<f64>().sqrt();
    let mut x: Vec<f64> = y.iter().zip(mass).map(|(v, m)| v / m.sqrt()).collect();
    let integral: f64 = x.iter().zip(mass).map(|(v, m)| v * m).sum();
    if integral < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let (lo, hi) = b.gershgorin();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    if !(residual <= 1e-9 * lambda.abs().max(1.0) || residual <= 1e3 * f64::EPSILON * scale) {
        return Err(SmlError::NoConvergence { what: "generalized eigensolver", iterations: 20, residual });
    }
    Ok((lambda, x, residual))
}

//! Symmetric positive definite systems on the face graph of a grid.
//!
//! Every system assembled here has the form `diag(d) − Σ_faces c_f (e_i e_jᵀ +
//! e_j e_iᵀ)` with `c_f > 0` and `d_i ≥ Σ c_f`: a Stieltjes matrix. Both the
//! banded Cholesky factor and the triangular solves then only combine terms of
//! one sign, so a non-negative right-hand side yields a non-negative solution
//! in floating point as well.

use crate::{Error, Result};

/// Sparse symmetric matrix: diagonal plus one negative coupling per face.
#[derive(Debug, Clone)]
pub(crate) struct FaceSystem {
    pub diag: Vec<f64>,
    /// (lo, hi, c) meaning entries A[lo][hi] = A[hi][lo] = −c.
    pub couplings: Vec<(usize, usize, f64)>,
}

impl FaceSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, d), xi) in out.iter_mut().zip(&self.diag).zip(x) {
            *o = d * xi;
        }
        for &(i, j, c) in &self.couplings {
            out[i] -= c * x[j];
            out[j] -= c * x[i];
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.couplings.iter().map(|&(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }
}

/// Cholesky factor `A = L Lᵀ` stored by rows within the band.
#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    n: usize,
    bw: usize,
    /// Row i holds columns i−bw ..= i at offsets 0 ..= bw.
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(system: &FaceSystem) -> Result<Self> {
        let n = system.len();
        let bw = system.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for (i, &d) in system.diag.iter().enumerate() {
            l[i * w + bw] = d;
        }
        for &(a, b, c) in &system.couplings {
            let (i, j) = if a > b { (a, b) } else { (b, a) };
            l[i * w + bw - (i - j)] -= c;
        }
        for i in 0..n {
            let row0 = i.saturating_sub(bw);
            for j in row0..=i {
                let k0 = row0.max(j.saturating_sub(bw));
                let mut s = l[i * w + bw - (i - j)];
                for k in k0..j {
                    s -= l[i * w + bw - (i - k)] * l[j * w + bw - (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Solver { residual: f64::NAN, iterations: 0 });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + bw - (i - j)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + bw - (i - k)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + bw - (k - i)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}

/// Jacobi-preconditioned conjugate gradients on `system x = b`, stopping at
/// `‖r‖₂ ≤ rel_tol ‖b‖₂`. `x` holds the initial guess.
pub(crate) fn pcg(system: &FaceSystem, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<usize> {
    let n = system.len();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(p, q)| p * q).sum::<f64>();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    system.mul_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&system.diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        if norm(&r) <= rel_tol * b_norm {
            return Ok(it);
        }
        system.mul_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / system.diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = norm(&r) / b_norm;
    if residual <= rel_tol {
        Ok(max_iter)
    } else {
        Err(Error::Solver { residual, iterations: max_iter })
    }
}

/// Grids up to this many cells are factored directly; larger ones use PCG.
pub(crate) const DIRECT_CELL_LIMIT: usize = 100_000;

/// Direct or iterative solver for one [`FaceSystem`], chosen by size.
#[derive(Debug, Clone)]
pub(crate) enum SpdSolver {
    Direct(BandCholesky),
    Iterative { system: FaceSystem, rel_tol: f64 },
}

impl SpdSolver {
    pub fn new(system: FaceSystem, rel_tol: f64) -> Result<Self> {
        if system.len() <= DIRECT_CELL_LIMIT {
            Ok(SpdSolver::Direct(BandCholesky::factor(&system)?))
        } else {
            Ok(SpdSolver::Iterative { system, rel_tol })
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, SpdSolver::Direct(_))
    }

    /// Solves `A x = b`, starting the iterative path from `guess` if given.
    pub fn solve(&self, b: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Direct(chol) => {
                let mut x = b.to_vec();
                chol.solve_in_place(&mut x);
                Ok(x)
            }
            SpdSolver::Iterative { system, rel_tol } => {
                let mut x = guess.map_or_else(|| vec![0.0; b.len()], <[f64]>::to_vec);
                pcg(system, b, &mut x, *rel_tol, 20 * b.len().max(100))?;
                Ok(x)
            }
        }
    }
}

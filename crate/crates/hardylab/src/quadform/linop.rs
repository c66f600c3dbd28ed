//! Small symmetric linear-operator kit: tridiagonal LDL^T and dense
//! Cholesky, enough for the Gram matrices of the discrete norms.

use crate::error::{Error, Result};

/// Symmetric operator, either tridiagonal (local radial stiffness) or dense
/// (Gagliardo form).
#[derive(Debug, Clone)]
pub(crate) enum SymOp {
    Tridiag { diag: Vec<f64>, sub: Vec<f64> },
    Dense { n: usize, a: Vec<f64> },
}

impl SymOp {
    pub fn size(&self) -> usize {
        match self {
            SymOp::Tridiag { diag, .. } => diag.len(),
            SymOp::Dense { n, .. } => *n,
        }
    }

    pub fn add_diag(&mut self, d: &[f64], scale: f64) {
        match self {
            SymOp::Tridiag { diag, .. } => {
                for (x, &v) in diag.iter_mut().zip(d) {
                    *x += scale * v;
                }
            }
            SymOp::Dense { n, a } => {
                for i in 0..*n {
                    a[i * *n + i] += scale * d[i];
                }
            }
        }
    }

    /// `self += c * other`; `other` must be tridiagonal or match densely.
    pub fn add_scaled(&mut self, other: &SymOp, c: f64) {
        match (self, other) {
            (
                SymOp::Tridiag { diag, sub },
                SymOp::Tridiag {
                    diag: od,
                    sub: os,
                },
            ) => {
                for (x, &v) in diag.iter_mut().zip(od) {
                    *x += c * v;
                }
                for (x, &v) in sub.iter_mut().zip(os) {
                    *x += c * v;
                }
            }
            (SymOp::Dense { n, a }, SymOp::Tridiag { diag, sub }) => {
                for i in 0..*n {
                    a[i * *n + i] += c * diag[i];
                    if i + 1 < *n {
                        a[i * *n + i + 1] += c * sub[i];
                        a[(i + 1) * *n + i] += c * sub[i];
                    }
                }
            }
            (SymOp::Dense { n, a }, SymOp::Dense { a: oa, .. }) => {
                for (x, &v) in a.iter_mut().zip(oa) {
                    *x += c * v;
                }
                let _ = n;
            }
            (SymOp::Tridiag { .. }, SymOp::Dense { .. }) => {
                panic!("cannot add a dense operator into a tridiagonal one")
            }
        }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        match self {
            SymOp::Tridiag { diag, sub } => {
                let n = diag.len();
                for i in 0..n {
                    let mut v = diag[i] * x[i];
                    if i > 0 {
                        v += sub[i - 1] * x[i - 1];
                    }
                    if i + 1 < n {
                        v += sub[i] * x[i + 1];
                    }
                    out[i] = v;
                }
            }
            SymOp::Dense { n, a } => {
                for i in 0..*n {
                    out[i] = a[i * *n..(i + 1) * *n]
                        .iter()
                        .zip(x)
                        .map(|(aa, xx)| aa * xx)
                        .sum();
                }
            }
        }
    }

    /// Quadratic form x^T A x.
    pub fn quad(&self, x: &[f64]) -> f64 {
        match self {
            SymOp::Tridiag { diag, sub } => {
                let n = diag.len();
                let mut acc = 0.0;
                for i in 0..n {
                    acc += diag[i] * x[i] * x[i];
                    if i + 1 < n {
                        acc += 2.0 * sub[i] * x[i] * x[i + 1];
                    }
                }
                acc
            }
            SymOp::Dense { .. } => {
                let mut out = vec![0.0; self.size()];
                self.matvec(x, &mut out);
                out.iter().zip(x).map(|(o, xx)| o * xx).sum()
            }
        }
    }

    /// Factor the operator; fails if it is not positive definite.
    pub fn factor(&self) -> Result<Factor> {
        match self {
            SymOp::Tridiag { diag, sub } => {
                let n = diag.len();
                let mut d = vec![0.0; n];
                let mut l = vec![0.0; n.saturating_sub(1)];
                for i in 0..n {
                    let mut di = diag[i];
                    if i > 0 {
                        di -= l[i - 1] * l[i - 1] * d[i - 1];
                    }
                    if di <= 0.0 {
                        return Err(Error::validation(format!(
                            "discrete form not positive definite (pivot {di:.3e} at {i}); refine the grid or reduce gamma/lambda"
                        )));
                    }
                    d[i] = di;
                    if i + 1 < n {
                        l[i] = sub[i] / di;
                    }
                }
                Ok(Factor::Tridiag { d, l })
            }
            SymOp::Dense { n, a } => {
                let n = *n;
                let mut c = a.clone();
                for j in 0..n {
                    let mut s = c[j * n + j];
                    for k in 0..j {
                        s -= c[j * n + k] * c[j * n + k];
                    }
                    if s <= 0.0 {
                        return Err(Error::validation(format!(
                            "discrete form not positive definite (pivot {s:.3e} at {j}); refine the grid or reduce gamma/lambda"
                        )));
                    }
                    let piv = s.sqrt();
                    c[j * n + j] = piv;
                    for i in j + 1..n {
                        let mut s = c[i * n + j];
                        for k in 0..j {
                            s -= c[i * n + k] * c[j * n + k];
                        }
                        c[i * n + j] = s / piv;
                    }
                }
                Ok(Factor::Dense { n, l: c })
            }
        }
    }
}

/// General (possibly indefinite) symmetric tridiagonal solve by LU without
/// pivoting; returns `None` on a vanishing pivot.
pub(crate) fn solve_tridiag_symmetric(
    diag: &[f64],
    sub: &[f64],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n]; // modified diagonal
    let mut x = rhs.to_vec();
    c[0] = diag[0];
    if c[0] == 0.0 {
        return None;
    }
    for i in 1..n {
        let w = sub[i - 1] / c[i - 1];
        c[i] = diag[i] - w * sub[i - 1];
        if c[i] == 0.0 {
            return None;
        }
        x[i] -= w * x[i - 1];
    }
    x[n - 1] /= c[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (x[i] - sub[i] * x[i + 1]) / c[i];
    }
    Some(x)
}

/// Factored form enabling repeated solves.
#[derive(Debug, Clone)]
pub(crate) enum Factor {
    Tridiag { d: Vec<f64>, l: Vec<f64> },
    Dense { n: usize, l: Vec<f64> },
}

impl Factor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            Factor::Tridiag { d, l } => {
                let n = d.len();
                let mut x = rhs.to_vec();
                for i in 1..n {
                    let li = l[i - 1];
                    x[i] -= li * x[i - 1];
                }
                for i in 0..n {
                    x[i] /= d[i];
                }
                for i in (0..n - 1).rev() {
                    let li = l[i];
                    x[i] -= li * x[i + 1];
                }
                x
            }
            Factor::Dense { n, l } => {
                let n = *n;
                let mut x = rhs.to_vec();
                for i in 0..n {
                    let mut s = x[i];
                    for k in 0..i {
                        s -= l[i * n + k] * x[k];
                    }
                    x[i] = s / l[i * n + i];
                }
                for i in (0..n).rev() {
                    let mut s = x[i];
                    for k in i + 1..n {
                        s -= l[k * n + i] * x[k];
                    }
                    x[i] = s / l[i * n + i];
                }
                x
            }
        }
    }
}

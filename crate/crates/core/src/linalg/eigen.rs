use super::{Matrix, SymMatrix};
use crate::error::{Result, SameError};
use crate::tolerances;

/// Eigenvalues in non-increasing order with column-aligned orthonormal
/// eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    /// Column `m` is the eigenvector of `values[m]`.
    vectors: Matrix,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn eigenvector(&self, m: usize) -> Vec<f64> {
        self.vectors.column(m)
    }

    /// `Q diag(values) Q^T`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|m| self.vectors.get(i, m) * self.values[m] * self.vectors.get(j, m))
                .sum()
        })
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Dimensions up to [`tolerances::JACOBI_MAX_DIM`] use cyclic Jacobi sweeps
/// (row-major pivot order, threshold `tol` on the relative off-diagonal
/// mass, at most [`tolerances::JACOBI_MAX_SWEEPS`] sweeps). Larger matrices go
/// through nalgebra's Householder + implicit QR solver. Either way the
/// output is ordered by (eigenvalue desc, original column asc) and each
/// eigenvector's first entry above [`tolerances::SIGN_PIVOT`] in magnitude
/// is made non-negative.
pub fn sym_eigen(a: &SymMatrix, tol: f64) -> Result<EigenDecomposition> {
    if a.dim() == 0 {
        return Err(SameError::param("a", "matrix must be at least 1x1"));
    }
    if !(tol > 0.0) {
        return Err(SameError::param("tol", "must be positive"));
    }
    if !a.is_finite() {
        return Err(SameError::NonFinite("symmetric matrix".into()));
    }
    let (values, vectors) = if a.dim() <= tolerances::JACOBI_MAX_DIM {
        jacobi(a, tol)?
    } else {
        householder_qr(a, tol)?
    };
    Ok(normalise(values, vectors))
}

fn jacobi(a: &SymMatrix, tol: f64) -> Result<(Vec<f64>, Matrix)> {
    let n = a.dim();
    let mut m = a.to_matrix();
    let mut v = Matrix::identity(n);
    let frob = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += m.get(p, q) * m.get(p, q);
            }
        }
        (2.0 * s).sqrt()
    };

    let mut residual = off(&m);
    let mut sweeps = 0;
    while residual > tol * frob {
        if sweeps == tolerances::JACOBI_MAX_SWEEPS {
            return Err(SameError::NoConvergence { sweeps, residual });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for r in 0..n {
                    if r != p && r != q {
                        let arp = m.get(r, p);
                        let arq = m.get(r, q);
                        let np = c * arp - s * arq;
                        let nq = s * arp + c * arq;
                        m.set(r, p, np);
                        m.set(p, r, np);
                        m.set(r, q, nq);
                        m.set(q, r, nq);
                    }
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
        sweeps += 1;
        residual = off(&m);
    }
    let values = (0..n).map(|i| m.get(i, i)).collect();
    Ok((values, v))
}

fn householder_qr(a: &SymMatrix, tol: f64) -> Result<(Vec<f64>, Matrix)> {
    let n = a.dim();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let max_iter = 30 * n.max(10);
    let eig = nalgebra::SymmetricEigen::try_new(m, tol.min(f64::EPSILON), max_iter).ok_or(
        SameError::NoConvergence {
            sweeps: max_iter,
            residual: f64::NAN,
        },
    )?;
    let values = eig.eigenvalues.iter().copied().collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)]);
    Ok((values, vectors))
}

fn normalise(values: Vec<f64>, vectors: Matrix) -> EigenDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut sorted = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.column(src);
        let flip = col
            .iter()
            .find(|x| x.abs() > tolerances::SIGN_PIVOT)
            .is_some_and(|x| *x < 0.0);
        for (i, x) in col.iter().enumerate() {
            sorted.set(i, dst, if flip { -x } else { *x });
        }
    }
    EigenDecomposition {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: sorted,
    }
}

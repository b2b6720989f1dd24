use super::{dot, norm, spectral_norm, sym_eigen, Matrix, SymMatrix};
use crate::error::{Result, SameError};
use crate::tolerances;

/// Orthogonal projector of rank `rank` in `R^dim`.
///
/// Stored through an orthonormal basis of its range (`rank x dim`, row-major)
/// so that applying it costs `O(rank * dim)` and high-dimensional clouds do not
/// need `dim x dim` storage per point. A full-rank projector is the identity
/// and keeps no basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    dim: usize,
    rank: usize,
    basis: Vec<f64>,
}

/// Measured deviations from the projector invariants.
#[derive(Clone, Copy, Debug)]
pub struct ProjectorCheck {
    pub asymmetry: f64,
    pub idempotency: f64,
    pub trace_error: f64,
}

impl ProjectorCheck {
    pub fn passes(&self) -> bool {
        self.asymmetry <= tolerances::PROJECTOR_SYMMETRY
            && self.idempotency <= tolerances::PROJECTOR_IDEMPOTENCY
            && self.trace_error <= tolerances::PROJECTOR_TRACE
    }
}

impl Projector {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            rank: dim,
            basis: Vec::new(),
        }
    }

    /// Projector onto the span of `vectors`, which are orthonormalised with
    /// modified Gram-Schmidt in the given order.
    pub fn from_basis<R: AsRef<[f64]>>(vectors: &[R]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(|v| v.as_ref().len())
            .ok_or_else(|| SameError::InvalidProjector("empty basis".into()))?;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
        for v in vectors {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(SameError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            let mut w = v.to_vec();
            for r in &rows {
                let c = dot(r, &w);
                w.iter_mut().zip(r).for_each(|(x, y)| *x -= c * y);
            }
            let nw = norm(&w);
            if !(nw > 1e-12 * (1.0 + norm(v))) {
                return Err(SameError::InvalidProjector(
                    "basis vectors are linearly dependent".into(),
                ));
            }
            w.iter_mut().for_each(|x| *x /= nw);
            rows.push(w);
        }
        Ok(Self::from_orthonormal(dim, rows))
    }

    pub(crate) fn from_orthonormal(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        let rank = rows.len();
        if rank == dim {
            return Self::identity(dim);
        }
        Self {
            dim,
            rank,
            basis: rows.into_iter().flatten().collect(),
        }
    }

    /// Validates a dense matrix as a rank-`rank` projector and stores it.
    pub fn from_matrix(m: &Matrix, rank: usize) -> Result<Self> {
        let sym = SymMatrix::from_matrix(m)
            .map_err(|_| SameError::InvalidProjector("matrix is not symmetric".into()))?;
        if rank == 0 || rank > m.rows() {
            return Err(SameError::InvalidProjector(format!(
                "rank {rank} outside 1..={}",
                m.rows()
            )));
        }
        let p = top_d_projector(&sym, rank)?;
        let resid = p.matrix().sub(m)?.max_abs();
        if resid > tolerances::PROJECTOR_IDEMPOTENCY {
            return Err(SameError::InvalidProjector(format!(
                "matrix is not a rank-{rank} projector (deviation {resid:e})"
            )));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_identity(&self) -> bool {
        self.rank == self.dim
    }

    /// Orthonormal basis vector `r` of the range.
    pub fn basis_vector(&self, r: usize) -> Vec<f64> {
        if self.is_identity() {
            let mut e = vec![0.0; self.dim];
            e[r] = 1.0;
            e
        } else {
            self.basis[r * self.dim..(r + 1) * self.dim].to_vec()
        }
    }

    /// Coordinates of `v` in the range basis.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            v.to_vec()
        } else {
            self.basis.chunks_exact(self.dim).map(|u| dot(u, v)).collect()
        }
    }

    /// `|P v|^2`.
    pub fn norm_sq_of(&self, v: &[f64]) -> f64 {
        if self.is_identity() {
            dot(v, v)
        } else {
            self.basis
                .chunks_exact(self.dim)
                .map(|u| {
                    let c = dot(u, v);
                    c * c
                })
                .sum()
        }
    }

    /// `P v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            return v.to_vec();
        }
        let mut out = vec![0.0; self.dim];
        for u in self.basis.chunks_exact(self.dim) {
            let c = dot(u, v);
            out.iter_mut().zip(u).for_each(|(o, x)| *o += c * x);
        }
        out
    }

    /// `(I - P) v`.
    pub fn apply_complement(&self, v: &[f64]) -> Vec<f64> {
        let pv = self.apply(v);
        v.iter().zip(pv).map(|(a, b)| a - b).collect()
    }

    /// Dense `dim x dim` matrix.
    pub fn matrix(&self) -> Matrix {
        if self.is_identity() {
            return Matrix::identity(self.dim);
        }
        let d = self.dim;
        Matrix::from_fn(d, d, |i, j| {
            self.basis
                .chunks_exact(d)
                .map(|u| u[i] * u[j])
                .sum()
        })
    }

    pub fn check(&self) -> ProjectorCheck {
        let p = self.matrix();
        let pt = p.transpose();
        let asymmetry = p.sub(&pt).map(|m| m.max_abs()).unwrap_or(f64::INFINITY);
        let p2 = p.mul(&p).expect("square");
        let idempotency = spectral_norm(&p2.sub(&p).expect("same shape"));
        let trace_error = (p.trace() - self.rank as f64).abs();
        ProjectorCheck {
            asymmetry,
            idempotency,
            trace_error,
        }
    }
}

/// Projector onto the span of the `d` leading eigenvectors of `a`.
pub fn top_d_projector(a: &SymMatrix, d: usize) -> Result<Projector> {
    let dim = a.dim();
    if d == 0 || d > dim {
        return Err(SameError::param("d", format!("must lie in 1..={dim}")));
    }
    if d == dim {
        return Ok(Projector::identity(dim));
    }
    let eig = sym_eigen(a, tolerances::JACOBI_THRESHOLD)?;
    let rows = (0..d).map(|m| eig.eigenvector(m)).collect();
    Ok(Projector::from_orthonormal(dim, rows))
}

/// Spectral norm of `P - Q`; the sine of the largest principal angle when
/// the ranks agree.
pub fn projector_distance(p: &Projector, q: &Projector) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(SameError::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if p == q {
        return Ok(0.0);
    }
    Ok(spectral_norm(&p.matrix().sub(&q.matrix())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_projector(dim: usize, rank: usize, seed: u64) -> Projector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vs: Vec<Vec<f64>> = (0..rank)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Projector::from_basis(&vs).unwrap()
    }

    #[test]
    fn top_d_on_diagonals() {
        let a = SymMatrix::from_diag(&[3.0, 1.0, 0.0]);
        assert_eq!(top_d_projector(&a, 1).unwrap().matrix(), Matrix::from_diag(&[1.0, 0.0, 0.0]));
        assert_eq!(top_d_projector(&a, 2).unwrap().matrix(), Matrix::from_diag(&[1.0, 1.0, 0.0]));
    }

    #[test]
    fn top_d_tie_break_picks_first_column() {
        let a = SymMatrix::from_diag(&[2.0, 2.0, 1.0]);
        let p = top_d_projector(&a, 1).unwrap();
        assert!(p.check().passes());
        assert_eq!(p.rank(), 1);
        assert!(norm(&p.apply(&[0.0, 0.0, 1.0])) < 1e-15);
        assert_eq!(p.matrix(), Matrix::from_diag(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn full_rank_is_identity() {
        let a = SymMatrix::from_upper(4, |i, j| (i * 3 + j) as f64);
        assert_eq!(top_d_projector(&a, 4).unwrap().matrix(), Matrix::identity(4));
    }

    #[test]
    fn distance_examples() {
        let e1 = Projector::from_basis(&[[1.0, 0.0]]).unwrap();
        let e2 = Projector::from_basis(&[[0.0, 1.0]]).unwrap();
        assert_eq!(projector_distance(&e1, &e1).unwrap(), 0.0);
        assert!((projector_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-12);
        let theta = std::f64::consts::FRAC_PI_6;
        let pt = Projector::from_basis(&[[theta.cos(), theta.sin()]]).unwrap();
        assert!((projector_distance(&e1, &pt).unwrap() - 0.5).abs() < 1e-12);
        let e3 = Projector::from_basis(&[[0.0, 0.0, 1.0]]).unwrap();
        assert!(projector_distance(&e1, &e3).is_err());
    }

    #[test]
    fn from_matrix_rejects_non_projectors() {
        assert!(Projector::from_matrix(&Matrix::from_diag(&[1.0, 0.5]), 1).is_err());
        let p = Projector::from_matrix(&Matrix::from_diag(&[0.0, 1.0]), 1).unwrap();
        assert_eq!(p.basis_vector(0), vec![0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn random_projectors_meet_invariants(dim in 2usize..9, seed in any::<u64>()) {
            let rank = 1 + (seed as usize) % (dim - 1);
            let p = random_projector(dim, rank, seed);
            prop_assert!(p.check().passes());
        }

        #[test]
        fn distance_triangle_inequality(seed in any::<u64>()) {
            let (p, q, r) = (
                random_projector(5, 2, seed),
                random_projector(5, 2, seed ^ 1),
                random_projector(5, 2, seed ^ 2),
            );
            let pq = projector_distance(&p, &q).unwrap();
            let qr = projector_distance(&q, &r).unwrap();
            let pr = projector_distance(&p, &r).unwrap();
            prop_assert!(pr <= pq + qr + 1e-10);
            prop_assert!((pq - projector_distance(&q, &p).unwrap()).abs() < 1e-10);
        }
    }
}

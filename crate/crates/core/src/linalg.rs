//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on Hermitian matrices of modest size (N×N per AP,
//! L×L per UE), so plain O(n³) routines are fine.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative pivot floor for [`HermitianFactor`].
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Cholesky factor `A = L Lᴴ` of a Hermitian positive-definite matrix.
///
/// A pivot below `PIVOT_FLOOR` times the largest diagonal entry of `A` is
/// reported as [`Error::NotPositiveDefinite`].
#[derive(Debug, Clone)]
pub struct HermitianFactor {
    lower: CMatrix,
}

impl HermitianFactor {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky of a non-square matrix");
        let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0_f64, f64::max);
        let floor = PIVOT_FLOOR * max_diag;
        let mut lower = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for p in 0..j {
                d -= lower[(j, p)].norm_sqr();
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            lower[(j, j)] = C64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s -= lower[(i, p)] * lower[(j, p)].conj();
                }
                lower[(i, j)] = s / djj;
            }
        }
        Ok(Self { lower })
    }

    pub fn lower(&self) -> &CMatrix {
        &self.lower
    }

    /// Upper-triangular `U = Lᴴ`, so that `Uᴴ U = A`.
    pub fn upper(&self) -> CMatrix {
        self.lower.adjoint()
    }

    /// Solves `L x = b` (equivalently `Uᴴ x = b`).
    pub fn solve_lower(&self, b: &CVector) -> CVector {
        let n = self.lower.nrows();
        let mut x = b.clone();
        for i in 0..n {
            let mut s = x[i];
            for p in 0..i {
                s -= self.lower[(i, p)] * x[p];
            }
            x[i] = s / self.lower[(i, i)];
        }
        x
    }

    /// Solves `Lᴴ x = b`.
    pub fn solve_upper(&self, b: &CVector) -> CVector {
        let n = self.lower.nrows();
        let mut x = b.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in (i + 1)..n {
                s -= self.lower[(p, i)].conj() * x[p];
            }
            x[i] = s / self.lower[(i, i)];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let mut out = b.clone();
        for j in 0..b.ncols() {
            let col = self.solve(&b.column(j).into_owned());
            out.set_column(j, &col);
        }
        out
    }
}

/// `(M + Mᴴ) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `xᴴ y`.
pub fn inner(x: &CVector, y: &CVector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Real part of `xᴴ M x` (exact for Hermitian `M`).
pub fn quad_form(x: &CVector, m: &CMatrix) -> f64 {
    inner(x, &(m * x)).re
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Rebuilds `V diag(f(λ)) Vᴴ` from an eigendecomposition.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (j, &lam) in values.iter().enumerate() {
        let w = f(lam);
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(j);
        out += (&v * v.adjoint()) * C64::new(w, 0.0);
    }
    hermitian_part(&out)
}

/// Principal square root of a Hermitian PSD matrix; negative eigenvalues are
/// treated as zero.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    spectral_map(&values, &vectors, |x| x.max(0.0).sqrt())
}

/// Real 2n×2m embedding `[[Re M, −Im M], [Im M, Re M]]`.
pub fn realify_matrix(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// Real 2n stacking `(Re v; Im v)`.
pub fn realify_vector(v: &CVector) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`realify_vector`].
pub fn complexify_vector(x: &DVector<f64>) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(x[i], x[i + n]))
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn power_iteration(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = m * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = x.dot(&y) / x.dot(&x);
        x = y / norm;
    }
    lambda.max((m * &x).norm() / x.norm())
}

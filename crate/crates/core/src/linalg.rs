//! Small dense complex linear-algebra helpers shared by the model, the
//! lifted forms and the SDP layer.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `true` when `m` is square and Hermitian to within `tol`, relative to
/// its largest entry (absolute below unit scale).
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    hermitian_defect(m) <= tol * scale
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// ascending order; eigenvectors are the matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Ratio `λ₂/λ₁` of the two largest eigenvalues; zero for rank one (or
/// 1×1) input. Used as a rank indicator for relaxed solutions.
pub fn second_to_first_eigen_ratio(m: &CMatrix) -> f64 {
    if m.nrows() < 2 {
        return 0.0;
    }
    let (values, _) = hermitian_eigen(m);
    let l1 = values[values.len() - 1];
    let l2 = values[values.len() - 2].max(0.0);
    if l1 <= 0.0 {
        0.0
    } else {
        l2 / l1
    }
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Outer product `v v^H`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `D(v)`: square diagonal matrix with `v` on the diagonal.
pub fn diag(v: &CVector) -> CMatrix {
    CMatrix::from_diagonal(v)
}

/// Real symmetric `2n×2n` image `[[Re X, −Im X], [Im X, Re X]]` of a
/// Hermitian `X`. Its spectrum is the spectrum of `X` with every
/// eigenvalue doubled in multiplicity.
pub fn embed_real(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i + n, j)] = z.im;
            out[(i, j + n)] = -z.im;
        }
    }
    out
}

/// Inverse of [`embed_real`] that also accepts unstructured symmetric
/// input: averages the two copies, which maps PSD to PSD.
pub fn collapse_real(y: &DMatrix<f64>) -> CMatrix {
    let n = y.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
        let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
        Complex64::new(re, im)
    })
}

//! Small dense symmetric linear algebra: Jacobi eigendecomposition,
//! Cholesky factorization, and an eigenvalue-clamped inverse.
//!
//! The matrices in this project are tiny (dimension = endpoint count, two
//! or three in practice), so simplicity and numerical robustness beat raw
//! speed here. Everything is row-major `Vec<f64>` with explicit dimension.

/// Floor applied to eigenvalues before inversion.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(dim: usize, a: &[f64]) -> Vec<f64> {
    let (mut vals, _) = sym_eigen(dim, a);
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns `(values, vectors)` with `a = V diag(values) V^T`; column `k` of
/// the row-major `vectors` matrix is the eigenvector for `values[k]`.
pub fn sym_eigen(dim: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), dim * dim, "matrix buffer has wrong length");
    let mut m = a.to_vec();
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    if dim <= 1 {
        return (m, v);
    }

    let scale = a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);
    let tol = 1e-30 * scale * scale;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += m[p * dim + q] * m[p * dim + q];
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[p * dim + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q * dim + q] - m[p * dim + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // rows/columns p and q of m
                for k in 0..dim {
                    let mkp = m[k * dim + p];
                    let mkq = m[k * dim + q];
                    m[k * dim + p] = c * mkp - s * mkq;
                    m[k * dim + q] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let mpk = m[p * dim + k];
                    let mqk = m[q * dim + k];
                    m[p * dim + k] = c * mpk - s * mqk;
                    m[q * dim + k] = s * mpk + c * mqk;
                }
                // accumulate rotation into v
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let vals = (0..dim).map(|i| m[i * dim + i]).collect();
    (vals, v)
}

/// Lower-triangular Cholesky factor `L` with `a = L L^T`, or `None` when
/// the matrix is not positive definite.
pub fn cholesky(dim: usize, a: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), dim * dim, "matrix buffer has wrong length");
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric matrix with eigenvalues clamped from below at
/// [`EIGEN_CLAMP`], so near-singular inputs yield a finite, symmetric,
/// positive-definite result instead of an error.
pub fn clamped_inverse(dim: usize, a: &[f64]) -> Vec<f64> {
    let (vals, vecs) = sym_eigen(dim, a);
    let inv_vals: Vec<f64> = vals.iter().map(|&ev| 1.0 / ev.max(EIGEN_CLAMP)).collect();
    // V diag(1/λ) V^T
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in 0..dim {
                sum += vecs[i * dim + k] * inv_vals[k] * vecs[j * dim + k];
            }
            out[i * dim + j] = sum;
            out[j * dim + i] = sum;
        }
    }
    out
}

/// `y = A x` for a row-major square matrix.
pub fn mat_vec(dim: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..dim)
        .map(|i| (0..dim).map(|j| a[i * dim + j] * x[j]).sum())
        .collect()
}

/// `C = A B` for row-major square matrices.
pub fn mat_mul(dim: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..dim {
                c[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    c
}

/// `x^T A x` for a row-major square matrix.
pub fn quadratic_form(dim: usize, a: &[f64], x: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            sum += x[i] * a[i * dim + j] * x[j];
        }
    }
    sum
}

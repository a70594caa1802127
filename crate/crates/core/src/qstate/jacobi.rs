use num_complex::Complex64;

use super::QStateError;

/// Off-diagonal Frobenius norm below which a sweep is declared converged.
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
/// Hard sweep limit; well-conditioned inputs converge in under ten sweeps.
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix (row-major, `dim x dim`) by the
/// cyclic Jacobi method. The input buffer is consumed as scratch space.
///
/// Dependency-free on purpose: the crate's determinism guarantees extend to
/// the eigensolver, so results are bit-stable across platforms.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, dim: usize) -> Result<Vec<f64>, QStateError> {
    if a.len() != dim * dim {
        return Err(QStateError::BadDataLength { got: a.len(), want: dim * dim });
    }
    if dim <= 1 {
        return Ok(a);
    }
    for sweep in 0..=MAX_SWEEPS {
        let off: f64 = {
            let mut s = 0.0;
            for r in 0..dim {
                for c in (r + 1)..dim {
                    let v = a[r * dim + c];
                    s += 2.0 * v * v;
                }
            }
            s.sqrt()
        };
        if off < OFF_DIAGONAL_TOLERANCE {
            return Ok((0..dim).map(|i| a[i * dim + i]).collect());
        }
        if sweep == MAX_SWEEPS {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * dim + q] - a[p * dim + p]) / (2.0 * apq);
                // Smaller-magnitude root of t^2 + 2*theta*t - 1 = 0.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                a[p * dim + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q * dim + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p * dim + q] = 0.0;
                a[q * dim + p] = 0.0;
                for k in 0..dim {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * dim + p] = new_kp;
                    a[p * dim + k] = new_kp;
                    a[k * dim + q] = new_kq;
                    a[q * dim + k] = new_kq;
                }
            }
        }
    }
    Err(QStateError::NoConvergence(MAX_SWEEPS))
}

/// Eigenvalues of a Hermitian complex matrix (row-major, `dim x dim`),
/// each appearing twice, computed through the real-symmetric embedding
/// `[[Re, -Im], [Im, Re]]` of dimension `2*dim`.
///
/// Callers that need sums over the Hermitian spectrum halve the total;
/// callers that need extrema can read them off directly.
pub fn hermitian_eigenvalues_doubled(
    m: &[Complex64],
    dim: usize,
) -> Result<Vec<f64>, QStateError> {
    if m.len() != dim * dim {
        return Err(QStateError::BadDataLength { got: m.len(), want: dim * dim });
    }
    let d2 = 2 * dim;
    let mut embedded = vec![0.0; d2 * d2];
    for r in 0..dim {
        for c in 0..dim {
            let v = m[r * dim + c];
            embedded[r * d2 + c] = v.re;
            embedded[(r + dim) * d2 + (c + dim)] = v.re;
            embedded[r * d2 + (c + dim)] = -v.im;
            embedded[(r + dim) * d2 + c] = v.im;
        }
    }
    let mut eigs = symmetric_eigenvalues(embedded, d2)?;
    eigs.sort_by(|a, b| a.total_cmp(b));
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_is_fixed_point() {
        let a = vec![3.0, 0.0, 0.0, -1.5];
        let mut eigs = symmetric_eigenvalues(a, 2).unwrap();
        eigs.sort_by(|x, y| x.total_cmp(y));
        assert_eq!(eigs, vec![-1.5, 3.0]);
    }

    #[test]
    fn two_by_two_analytic() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let mut eigs = symmetric_eigenvalues(a, 2).unwrap();
        eigs.sort_by(|x, y| x.total_cmp(y));
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn trace_and_frobenius_norm_are_preserved() {
        // Deterministic pseudo-random symmetric matrix.
        let dim = 7;
        let mut a = vec![0.0; dim * dim];
        let mut x: u64 = 0x9e3779b97f4a7c15;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for r in 0..dim {
            for c in r..dim {
                let v = next();
                a[r * dim + c] = v;
                a[c * dim + r] = v;
            }
        }
        let trace: f64 = (0..dim).map(|i| a[i * dim + i]).sum();
        let frob2: f64 = a.iter().map(|v| v * v).sum();
        let eigs = symmetric_eigenvalues(a, dim).unwrap();
        let eig_sum: f64 = eigs.iter().sum();
        let eig_sq: f64 = eigs.iter().map(|v| v * v).sum();
        assert!((eig_sum - trace).abs() < 1e-10);
        assert!((eig_sq - frob2).abs() < 1e-10);
    }

    #[test]
    fn pauli_y_spectrum_through_embedding() {
        // [[0, -i], [i, 0]] has eigenvalues -1 and 1, doubled by embedding.
        let m = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ];
        let eigs = hermitian_eigenvalues_doubled(&m, 2).unwrap();
        assert_eq!(eigs.len(), 4);
        for (got, want) in eigs.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }
}

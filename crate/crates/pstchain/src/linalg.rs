//! Dense real-symmetric eigensolver (cyclic Jacobi) and the real embedding
//! used to diagonalize small complex Hermitian matrices with the same kernel.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFFDIAG_TOL: f64 = 1e-13;

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the orthogonal matrix whose
/// columns are the matching eigenvectors, so `a = v * diag(e) * v^T`.
/// The sweep loop stops once the off-diagonal Frobenius norm drops below
/// 1e-13 relative to the Frobenius norm of the input.
pub fn eigh(a_in: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a_in.nrows();
    if a_in.ncols() != n {
        return Err(Error::domain("eigh: matrix must be square"));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }

    let mut a: Vec<f64> = a_in.iter().cloned().collect();
    let mut v = vec![0.0f64; n * n];
    for p in 0..n {
        v[p * n + p] = 1.0;
    }

    let total_fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = OFFDIAG_TOL * total_fro.max(1.0);

    // Numerical Recipes bookkeeping: d holds current eigenvalue estimates,
    // b/z accumulate diagonal corrections once per sweep.
    let mut d: Vec<f64> = (0..n).map(|p| a[p * n + p]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0f64; n];

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            converged = true;
            break;
        }

        let sm: f64 = (0..n - 1)
            .map(|p| (p + 1..n).map(|q| a[p * n + q].abs()).sum::<f64>())
            .sum();
        let thresh = if sweep < 3 {
            0.2 * sm / ((n * n) as f64)
        } else {
            0.0
        };

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }

                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;

                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * n + q] = 0.0;

                let rotate = |a: &mut [f64], i: usize, j: usize| {
                    let g = a[i];
                    let h = a[j];
                    a[i] = g - s * (h + g * tau);
                    a[j] = h + s * (g - h * tau);
                };
                for j in 0..p {
                    rotate(&mut a, j * n + p, j * n + q);
                }
                for j in p + 1..q {
                    rotate(&mut a, p * n + j, j * n + q);
                }
                for j in q + 1..n {
                    rotate(&mut a, p * n + j, q * n + j);
                }
                for j in 0..n {
                    rotate(&mut v, j * n + p, j * n + q);
                }
            }
        }

        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }

    if !converged {
        // Final check: the loop may have hit MAX_SWEEPS right at convergence.
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if (2.0 * off).sqrt() > tol {
            return Err(Error::numeric(format!(
                "jacobi eigensolver did not converge after {MAX_SWEEPS} sweeps (dim {n})"
            )));
        }
    }

    // Sort ascending, permuting eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, col]] = v[row * n + src];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Embed an n x n complex Hermitian matrix H = A + iB into the 2n x 2n real
/// symmetric matrix [[A, -B], [B, A]]. Eigenvalues of H appear twice in the
/// embedding, and matrix products commute with the embedding, which lets the
/// real Jacobi kernel drive every Hermitian computation in this crate.
pub fn embed_hermitian(h: &Array2<Complex64>) -> Array2<f64> {
    let n = h.nrows();
    let mut e = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let re = h[[i, j]].re;
            let im = h[[i, j]].im;
            e[[i, j]] = re;
            e[[i + n, j + n]] = re;
            e[[i, j + n]] = -im;
            e[[i + n, j]] = im;
        }
    }
    e
}

/// Inverse of [`embed_hermitian`]: extract the complex n x n matrix from its
/// 2n x 2n real embedding.
pub fn extract_hermitian(e: &Array2<f64>) -> Array2<Complex64> {
    let n = e.nrows() / 2;
    let mut h = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            h[[i, j]] = Complex64::new(e[[i, j]], e[[i + n, j]]);
        }
    }
    h
}

/// Eigenvalues of a complex Hermitian matrix, ascending. Each eigenvalue of
/// the real embedding appears twice; one copy per pair is returned.
pub fn eigvals_hermitian(h: &Array2<Complex64>) -> Result<Vec<f64>> {
    let (vals, _) = eigh(&embed_hermitian(h))?;
    Ok(vals.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// Matrix square root of a complex Hermitian PSD matrix via its real
/// embedding. Eigenvalues below `-clip` are a numeric error; eigenvalues that
/// are zero up to a relative noise floor are flushed to exactly zero, since
/// the square root would otherwise amplify O(eps) rounding into O(sqrt(eps))
/// entries.
pub fn sqrt_hermitian_psd(h: &Array2<Complex64>, clip: f64) -> Result<Array2<Complex64>> {
    let e = embed_hermitian(h);
    let (vals, vecs) = eigh(&e)?;
    let floor = 1e-12 * vals.iter().cloned().fold(1.0f64, f64::max);
    let n2 = e.nrows();
    let mut root = Array2::zeros((n2, n2));
    for (k, &lam) in vals.iter().enumerate() {
        if lam < -clip {
            return Err(Error::numeric(format!(
                "sqrt of non-PSD matrix: eigenvalue {lam:.3e}"
            )));
        }
        if lam < floor {
            continue;
        }
        let s = lam.sqrt();
        for i in 0..n2 {
            if vecs[[i, k]] == 0.0 {
                continue;
            }
            let vi = s * vecs[[i, k]];
            for j in 0..n2 {
                root[[i, j]] += vi * vecs[[j, k]];
            }
        }
    }
    Ok(extract_hermitian(&root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        a
    }

    fn reconstruction_residual(a: &Array2<f64>, vals: &[f64], vecs: &Array2<f64>) -> f64 {
        let n = a.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += vecs[[i, k]] * vals[k] * vecs[[j, k]];
                }
                worst = worst.max((s - a[[i, j]]).abs());
            }
        }
        worst
    }

    #[test]
    fn two_by_two_exchange() {
        let mut a = Array2::zeros((2, 2));
        a[[0, 1]] = 1.0;
        a[[1, 0]] = 1.0;
        let (vals, _) = eigh(&a).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_matrices_meet_residual_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let n = 2 + trial % 12;
            let a = random_symmetric(n, &mut rng);
            let (vals, vecs) = eigh(&a).unwrap();
            assert!(reconstruction_residual(&a, &vals, &vecs) < 1e-10);
            // orthogonality
            for p in 0..n {
                for q in 0..n {
                    let dot: f64 = (0..n).map(|i| vecs[[i, p]] * vecs[[i, q]]).sum();
                    let want = if p == q { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10);
                }
            }
            // ascending order
            for k in 1..n {
                assert!(vals[k] >= vals[k - 1]);
            }
        }
    }

    #[test]
    fn hermitian_embedding_round_trip() {
        let mut h = Array2::zeros((3, 3));
        h[[0, 1]] = Complex64::new(0.3, -0.2);
        h[[1, 0]] = Complex64::new(0.3, 0.2);
        h[[2, 2]] = Complex64::new(1.5, 0.0);
        h[[0, 2]] = Complex64::new(-0.1, 0.7);
        h[[2, 0]] = Complex64::new(-0.1, -0.7);
        let back = extract_hermitian(&embed_hermitian(&h));
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[[i, j]] - h[[i, j]]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        // rho = diag(0.5, 0.3, 0.2) rotated by a complex unitary-ish similarity
        // built from an exponential; simpler: take M = G G^dagger for random G.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let mut g = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                g[[i, j]] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += g[[i, k]] * g[[j, k]].conj();
                }
                m[[i, j]] = s;
            }
        }
        let root = sqrt_hermitian_psd(&m, 1e-10).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += root[[i, k]] * root[[k, j]];
                }
                assert!((s - m[[i, j]]).norm() < 1e-9);
            }
        }
    }
}

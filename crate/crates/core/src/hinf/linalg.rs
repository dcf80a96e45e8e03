//! Dense helpers for small control problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn asymmetry(m: &Mat) -> f64 {
    (m - m.transpose()).amax()
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn max_sym_eig(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

pub fn min_sym_eig(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Largest real part among the eigenvalues.
pub fn spectral_abscissa(m: &Mat) -> f64 {
    if !is_finite(m) {
        return f64::NAN;
    }
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// 2-norm condition number.
pub fn condition_number(m: &Mat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(m: &Mat) -> Result<Mat> {
    m.clone()
        .try_inverse()
        .filter(is_finite)
        .ok_or_else(|| Error::InvalidArgument("matrix is singular".into()))
}

/// Solves `F^T X + X F + Q = 0` by Kronecker vectorization.
pub fn solve_lyapunov(f: &Mat, q: &Mat) -> Result<Mat> {
    let n = f.nrows();
    let eye = Mat::identity(n, n);
    // vec(F^T X) = (I ⊗ F^T) vec X ; vec(X F) = (F^T ⊗ I) vec X
    let ft = f.transpose();
    let k = eye.kronecker(&ft) + ft.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("Lyapunov operator is singular".into()))?;
    Ok(symmetrize(&Mat::from_column_slice(n, n, sol.as_slice())))
}

/// Residual `F^T X + X F + X G X + H`.
pub fn riccati_residual(f: &Mat, g: &Mat, h: &Mat, x: &Mat) -> Mat {
    f.transpose() * x + x * f + x * g * x + h
}

/// Matrix sign function by the scaled Newton iteration.
fn matrix_sign(m: &Mat) -> Option<Mat> {
    let n = m.nrows();
    let mut z = m.clone();
    for _ in 0..100 {
        let inv = z.clone().try_inverse()?;
        let det = z.determinant().abs();
        let scale = if det > 0.0 && det.is_finite() { det.powf(-1.0 / n as f64) } else { 1.0 };
        let next = (&z * scale + inv / scale) * 0.5;
        let delta = (&next - &z).norm();
        let size = next.norm();
        z = next;
        if !is_finite(&z) {
            return None;
        }
        if delta <= 1e-13 * size {
            // finish with unscaled steps for quadratic convergence
            for _ in 0..3 {
                let inv = z.clone().try_inverse()?;
                z = (&z + inv) * 0.5;
            }
            return Some(z);
        }
    }
    None
}

/// Stabilizing solution of `F^T X + X F + X G X + H = 0`, i.e. the
/// symmetric `X` with `F + G X` Hurwitz.
///
/// The stable invariant subspace of the Hamiltonian `[[F, G], [-H, -F^T]]`
/// is read off the matrix sign function, then polished by Newton steps on
/// the residual.
pub fn care_stabilizing(f: &Mat, g: &Mat, h: &Mat) -> Result<Mat> {
    let n = f.nrows();
    let fail = |why: &str| Error::NoStabilizingSolution(why.to_string());
    if !(is_finite(f) && is_finite(g) && is_finite(h)) {
        return Err(fail("non-finite data"));
    }
    let mut ham = Mat::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(f);
    ham.view_mut((0, n), (n, n)).copy_from(g);
    ham.view_mut((n, 0), (n, n)).copy_from(&(-h));
    ham.view_mut((n, n), (n, n)).copy_from(&(-f.transpose()));
    let w = matrix_sign(&ham).ok_or_else(|| fail("Hamiltonian has eigenvalues on the imaginary axis"))?;
    let eye = Mat::identity(n, n);
    let mut lhs = Mat::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w.view((n, n), (n, n)) + &eye));
    let mut rhs = Mat::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let x = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| fail("invariant subspace solve failed"))?;
    let mut x = symmetrize(&x);
    if !is_finite(&x) {
        return Err(fail("non-finite solution"));
    }
    for _ in 0..4 {
        let res = riccati_residual(f, g, h, &x);
        if res.amax() <= 1e-14 * (1.0 + x.amax()) {
            break;
        }
        let closed = f + g * &x;
        match solve_lyapunov(&closed, &res) {
            Ok(dx) => {
                let candidate = &x + dx;
                let better = riccati_residual(f, g, h, &candidate).amax() < res.amax();
                if better && is_finite(&candidate) {
                    x = candidate;
                } else {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    if !(spectral_abscissa(&(f + g * &x)) < 0.0) {
        return Err(fail("closed-loop matrix F + G X is not Hurwitz"));
    }
    Ok(x)
}

//! Small dense symmetric solves for the normal equations.

use ndarray::{Array1, Array2};

/// Cholesky factor of a symmetric positive definite matrix, or `None` when a
/// pivot falls below `1e-12` of the largest diagonal entry.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let scale = a.diag().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d.is_nan() || d <= tol {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Some(l)
}

fn solve_factored(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    let mut z = b.clone();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[[k, i]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

/// Solve `a x = b` for symmetric positive semidefinite `a`. A singular `a`
/// gets diagonal jitter, starting at `1e-10` and growing tenfold until the
/// factorization succeeds; the jitter used is returned alongside.
pub(crate) fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> (Array1<f64>, Option<f64>) {
    if a.nrows() == 0 {
        return (Array1::zeros(0), None);
    }
    if let Some(l) = cholesky(a) {
        return (solve_factored(&l, b), None);
    }
    let scale = a.diag().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut jitter = 1e-10;
    loop {
        let mut aj = a.clone();
        aj.diag_mut().mapv_inplace(|v| v + jitter);
        if let Some(l) = cholesky(&aj) {
            log::debug!("gram matrix singular; solved with diagonal jitter {jitter:e}");
            return (solve_factored(&l, b), Some(jitter));
        }
        if jitter > 1e6 * scale {
            // Unreachable for finite PSD input.
            return (Array1::zeros(b.len()), Some(jitter));
        }
        jitter *= 10.0;
    }
}

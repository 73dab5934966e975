//! Small dense least squares (Householder QR) and symmetric eigenvalues.
//!
//! Sized for the handful of unknowns in this crate: at most six columns.

/// Least-squares solution of `a x ~= b` for a tall `m x n` matrix given as rows.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: Vec<f64>,
    pub residual_rms: f64,
    /// Condition number of the normal matrix `A^T A`.
    pub condition_number: f64,
}

/// Solves `min |A x - b|` by Householder QR. Returns `None` when `m < n` or the
/// triangular factor has an exactly zero pivot.
pub fn lstsq(rows: &[Vec<f64>], rhs: &[f64]) -> Option<LstsqSolution> {
    let m = rows.len();
    let n = rows.first()?.len();
    if m < n || n == 0 || rhs.len() != m || rows.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = rhs.to_vec();

    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                a[i][j] -= s * v[i - k];
            }
        }
        let s: f64 = (k..m).map(|i| v[i - k] * b[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in k..m {
            b[i] -= s * v[i - k];
        }
    }

    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        if a[k][k] == 0.0 {
            return None;
        }
        let s: f64 = ((k + 1)..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }

    let residual_rms = (rows
        .iter()
        .zip(rhs)
        .map(|(r, bi)| {
            let e = r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - bi;
            e * e
        })
        .sum::<f64>()
        / m as f64)
        .sqrt();

    let condition_number = condition_number(&normal_matrix(rows));
    Some(LstsqSolution {
        x,
        residual_rms,
        condition_number,
    })
}

/// `A^T A` for `A` given as rows.
pub fn normal_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    let mut g = vec![vec![0.0; n]; n];
    for r in rows {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    g
}

/// Ratio of largest to smallest eigenvalue magnitude of a symmetric matrix;
/// infinite when the smallest is zero or the input is not finite.
pub fn condition_number(sym: &[Vec<f64>]) -> f64 {
    let eig = symmetric_eigenvalues(sym);
    let max = eig.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &e| a.min(e.abs()));
    if !max.is_finite() || !min.is_finite() || min == 0.0 {
        return f64::INFINITY;
    }
    max / min
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(sym: &[Vec<f64>]) -> Vec<f64> {
    let n = sym.len();
    let mut a: Vec<Vec<f64>> = sym.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

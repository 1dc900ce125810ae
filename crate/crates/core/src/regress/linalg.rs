//! Dense helpers for the small (p x p) systems behind the regression fits.

/// Symmetric eigenvalues by cyclic Jacobi rotations. Fine for p <= ~20.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() < 1e-14 * frobenius(&a).max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
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
    (0..n).map(|i| a[i][i]).collect()
}

fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|row| row.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Condition number estimate of a symmetric positive semi-definite matrix.
pub fn condition_estimate(a: &[Vec<f64>]) -> f64 {
    let eig = symmetric_eigenvalues(a.to_vec());
    let max = eig.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Dense LU solve with partial pivoting; `None` when a pivot underflows.
pub fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = frobenius(&a).max(1e-300);
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i][k].abs() > a[p][k].abs() {
                p = i;
            }
        }
        if a[p][k].abs() < 1e-14 * scale {
            return None;
        }
        if p != k {
            a.swap(p, k);
            b.swap(p, k);
        }
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            b[i] -= f * b[k];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let v = a[i][j] * b[j];
            b[i] -= v;
        }
        b[i] /= a[i][i];
    }
    Some(b)
}

/// Cholesky solve of `A x = b` for symmetric positive definite `A`.
/// Returns `Err(column)` at the first non-positive pivot.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, usize> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(i);
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let v = l[i][k] * x[k];
            x[i] -= v;
        }
        x[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let v = l[k][i] * x[k];
            x[i] -= v;
        }
        x[i] /= l[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_finds_known_spectrum() {
        // diag(1, 4, 9) rotated is still {1, 4, 9}
        let a = vec![
            vec![6.0, -2.0, 1.0],
            vec![-2.0, 5.0, 0.0],
            vec![1.0, 0.0, 3.0],
        ];
        let mut eig = symmetric_eigenvalues(a.clone());
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // trace and determinant checks
        let trace: f64 = eig.iter().sum();
        assert!((trace - 14.0).abs() < 1e-10);
        let det = eig.iter().product::<f64>();
        assert!((det - (6.0 * 15.0 - (-2.0) * (-2.0 * 3.0) + 1.0 * 5.0 * -1.0)).abs() < 1e-8);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = cholesky_solve(&a, &[8.0, 7.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 8.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky_solve(&a, &[1.0, 1.0]).is_err());
    }
}

//! Dense symmetric linear algebra by cyclic Jacobi rotations.

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            for k in 0..m {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Matrix) -> Matrix {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn trace(a: &Matrix) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Eigenvalues and eigenvectors (as columns of the second matrix) of a
/// symmetric matrix.
pub fn jacobi_eigen(sym: &Matrix) -> (Vec<f64>, Matrix) {
    let n = sym.len();
    let mut a = sym.clone();
    let mut v = identity(n);
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Principal square root of a PSD matrix, negative eigenvalues clamped to 0.
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    let (vals, vecs) = jacobi_eigen(m);
    let n = m.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            for (k, &l) in vals.iter().enumerate() {
                out[i][j] += vecs[i][k] * l.max(0.0).sqrt() * vecs[j][k];
            }
        }
    }
    out
}

/// Sample mean and `n - 1` covariance of `rows`.
pub fn mean_cov(rows: &[Vec<f64>]) -> (Vec<f64>, Matrix) {
    let (n, d) = (rows.len(), rows[0].len());
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    (mean, cov)
}

/// Fréchet distance using the sandwich `Σy^{1/2} Σx Σy^{1/2}`.
pub fn frechet(mu_x: &[f64], cov_x: &Matrix, mu_y: &[f64], cov_y: &Matrix) -> f64 {
    let mean_term: f64 = mu_x.iter().zip(mu_y).map(|(a, b)| (a - b) * (a - b)).sum();
    let root_y = psd_sqrt(cov_y);
    let inner = matmul(&matmul(&root_y, cov_x), &root_y);
    let n = inner.len();
    let sym: Matrix = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (inner[i][j] + inner[j][i])).collect())
        .collect();
    let (vals, _) = jacobi_eigen(&sym);
    let tr_root: f64 = vals.iter().map(|l| l.max(0.0).sqrt()).sum();
    mean_term + trace(cov_x) + trace(cov_y) - 2.0 * tr_root
}

pub fn frechet_from_rows(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let (mx, cx) = mean_cov(x);
    let (my, cy) = mean_cov(y);
    frechet(&mx, &cx, &my, &cy)
}

//! Small dense linear algebra: partial-pivot elimination, null spaces and the
//! symmetric Jacobi eigenvalue iteration. Matrices are row-major `Vec<Vec<f64>>`.

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` if a pivot falls below `1e-300` in magnitude.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for k in col..=n {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    Some(x)
}

/// Basis of `{x : a x = 0}` via reduced row echelon form; columns whose
/// pivot is below `pivot_tol` are treated as free.
pub fn null_space(a: &[Vec<f64>], ncols: usize, pivot_tol: f64) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == m.len() {
            break;
        }
        let Some(piv) = (row..m.len()).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())) else {
            break;
        };
        if m[piv][col].abs() <= pivot_tol {
            continue;
        }
        m.swap(row, piv);
        let p = m[row][col];
        for v in m[row].iter_mut() {
            *v /= p;
        }
        for r in 0..m.len() {
            if r != row && m[r][col] != 0.0 {
                let factor = m[r][col];
                for k in 0..ncols {
                    m[r][k] -= factor * m[row][k];
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (0..ncols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![0.0; ncols];
            v[free] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][free];
            }
            v
        })
        .collect()
}

/// Eigenvalues (ascending) and unit eigenvectors of a symmetric matrix by
/// cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off.sqrt() <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = vec![vec![0.0, 2.0], vec![1.0, 1.0]];
        let x = solve(&a, &[4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn null_space_of_rank_one() {
        let basis = null_space(&[vec![1.0, 1.0, 0.0]], 3, 1e-12);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!((v[0] + v[1]).abs() < 1e-15);
        }
        assert_eq!(null_space(&[], 2, 1e-12).len(), 2);
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(&a);
        let s = 2f64.sqrt();
        for (got, want) in vals.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-12);
        }
        for (lam, v) in vals.iter().zip(&vecs) {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i][j] * v[j]).sum();
                assert!((av - lam * v[i]).abs() < 1e-12);
            }
        }
        let (vals, _) = symmetric_eigen(&[vec![-3.0]]);
        assert_eq!(vals, vec![-3.0]);
    }
}

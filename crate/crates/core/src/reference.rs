//! Slow, direct reference implementations used by the test suites to
//! cross-check the main algorithms through independent routes. Prefer the
//! main module APIs for real work.

use nalgebra::DMatrix;

use crate::contingency::ContingencyTable;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    let mut a = matrix.clone();
    let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().max(1e-300);
    for _sweep in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= 1e-28 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigenvalues
}

/// Principal inertias of a table by the profile cross-product route: the
/// dense J×J matrix of weighted residual products is assembled straight from
/// the counts and eigen-solved with Jacobi rotations. Descending, all J
/// values (trailing ones near zero).
pub fn ca_eigenvalues_direct(table: &ContingencyTable) -> Vec<f64> {
    let (n_rows, n_cols) = (table.n_rows(), table.n_cols());
    let n = table.grand_total() as f64;
    let r = table.row_masses();
    let c = table.col_masses();
    let mut cross = DMatrix::zeros(n_cols, n_cols);
    for j in 0..n_cols {
        for l in j..n_cols {
            let mut acc = 0.0;
            for i in 0..n_rows {
                let res_j = table.count(i, j) as f64 / n - r[i] * c[j];
                let res_l = table.count(i, l) as f64 / n - r[i] * c[l];
                acc += res_j * res_l / (r[i] * (c[j] * c[l]).sqrt());
            }
            cross[(j, l)] = acc;
            cross[(l, j)] = acc;
        }
    }
    jacobi_eigenvalues(&cross)
}

/// Merge heights of the sequence-constrained complete-link hierarchy,
/// recomputing every candidate distance from the raw points at every step
/// (no incremental updates). Ties break toward the lowest left position.
pub fn chrono_complete_link_heights(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    while clusters.len() > 1 {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for b in 0..clusters.len() - 1 {
            let mut max_pair = 0.0f64;
            for &i in &clusters[b] {
                for &j in &clusters[b + 1] {
                    let d: f64 = points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                    max_pair = max_pair.max(d);
                }
            }
            if max_pair < best_dist {
                best_dist = max_pair;
                best = b;
            }
        }
        let right = clusters.remove(best + 1);
        clusters[best].extend(right);
        heights.push(best_dist);
    }
    heights
}

/// Mean pairwise Euclidean distance between members of two groups.
pub fn mean_cross_distance(group_a: &[Vec<f64>], group_b: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    for a in group_a {
        for b in group_b {
            sum += a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
        }
    }
    sum / (group_a.len() * group_b.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_solves_known_symmetric_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 3 and 1
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let eig = jacobi_eigenvalues(&m);
        assert_relative_eq!(eig[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_preserves_trace() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, 0.5, 0.0, 1.0, 3.0, 0.7, 0.2, 0.5, 0.7, 2.0, 0.1, 0.0, 0.2, 0.1, 1.0,
            ],
        );
        let eig = jacobi_eigenvalues(&m);
        assert_relative_eq!(eig.iter().sum::<f64>(), 10.0, epsilon = 1e-10);
    }
}

//! Correspondence Analysis: a Euclidean factor embedding of the dual
//! unit/word profile clouds.
//!
//! The fit factorizes the standardized residual matrix
//! `S_ij = (p_ij - r_i c_j) / sqrt(r_i c_j)`: the smaller of `S S^T` and
//! `S^T S` is eigendecomposed and the other side's singular vectors are
//! recovered through `S`, which keeps the trivial margin direction out of
//! the factor space by construction. Eigenvalues are the squared singular
//! values. Row and column points carry both principal coordinates
//! (`standard * sqrt(lambda)`) and standard coordinates, satisfy the
//! barycentric transition formulas, and reproduce chi-squared profile
//! distances in the full retained space.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contingency::ContingencyTable;
use crate::error::{Error, Result};

/// Relative tolerance under which trailing eigenvalues are treated as
/// numerical noise and dropped.
const RANK_TOL_REL: f64 = 1e-12;
/// Absolute floor for eigenvalues, so an independence table yields an empty
/// factor space instead of noise axes.
const RANK_TOL_ABS: f64 = 1e-13;

/// A fitted Correspondence Analysis model.
///
/// `K` axes are retained, in descending eigenvalue order; rows and columns
/// carry I×K and J×K coordinate matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CAModel {
    /// Eigenvalues (principal inertias) per axis, descending.
    pub eigenvalues: Vec<f64>,
    /// Singular values, `sqrt(eigenvalues)` of the residual matrix.
    pub singular_values: Vec<f64>,
    /// Row principal coordinates F (I×K).
    pub row_principal: DMatrix<f64>,
    /// Column principal coordinates G (J×K).
    pub col_principal: DMatrix<f64>,
    /// Row standard coordinates (I×K): principal / sqrt(lambda).
    pub row_standard: DMatrix<f64>,
    /// Column standard coordinates (J×K).
    pub col_standard: DMatrix<f64>,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    /// Squared Frobenius norm of the residual matrix; equals the table's
    /// chi-squared statistic over its grand total.
    pub total_inertia: f64,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
}

impl CAModel {
    /// Number of retained axes.
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Per-axis share of the retained inertia, `lambda_k / sum(lambda)`.
    pub fn inertia_shares(&self) -> Vec<f64> {
        let sum: f64 = self.eigenvalues.iter().sum();
        if sum == 0.0 {
            return vec![0.0; self.k()];
        }
        self.eigenvalues.iter().map(|l| l / sum).collect()
    }

    pub fn col_index(&self, word: &str) -> Option<usize> {
        self.col_ids.iter().position(|w| w == word)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.row_ids.iter().position(|r| r == id)
    }

    /// Euclidean distance between two row points over all retained axes.
    pub fn row_distance(&self, i: usize, i2: usize) -> f64 {
        (0..self.k())
            .map(|k| {
                let d = self.row_principal[(i, k)] - self.row_principal[(i2, k)];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance between a row point and a column point over all
    /// retained axes.
    pub fn row_col_distance(&self, i: usize, j: usize) -> f64 {
        (0..self.k())
            .map(|k| {
                let d = self.row_principal[(i, k)] - self.col_principal[(j, k)];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Reassembles a model from exported artifacts (eigen summary plus
    /// principal coordinate matrices); standard coordinates are recomputed.
    pub fn from_artifacts(
        summary: &ModelSummary,
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        row_principal: DMatrix<f64>,
        col_principal: DMatrix<f64>,
        row_masses: Vec<f64>,
        col_masses: Vec<f64>,
    ) -> Result<Self> {
        let k = summary.eigenvalues.len();
        if summary.singular_values.len() != k
            || row_principal.ncols() != k
            || col_principal.ncols() != k
            || row_principal.nrows() != row_ids.len()
            || col_principal.nrows() != col_ids.len()
            || row_masses.len() != row_ids.len()
            || col_masses.len() != col_ids.len()
        {
            return Err(Error::Model("artifact shapes are inconsistent".into()));
        }
        let mut row_standard = row_principal.clone();
        let mut col_standard = col_principal.clone();
        for (axis, &sigma) in summary.singular_values.iter().enumerate() {
            row_standard.column_mut(axis).apply(|v| *v /= sigma);
            col_standard.column_mut(axis).apply(|v| *v /= sigma);
        }
        Ok(CAModel {
            eigenvalues: summary.eigenvalues.clone(),
            singular_values: summary.singular_values.clone(),
            row_principal,
            col_principal,
            row_standard,
            col_standard,
            row_masses,
            col_masses,
            total_inertia: summary.total_inertia,
            row_ids,
            col_ids,
        })
    }

    /// Eigen summary for JSON export.
    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            rows: self.row_ids.len(),
            cols: self.col_ids.len(),
            k: self.k(),
            total_inertia: self.total_inertia,
            eigenvalues: self.eigenvalues.clone(),
            singular_values: self.singular_values.clone(),
            inertia_shares: self.inertia_shares(),
        }
    }
}

/// JSON-serializable eigen summary of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub total_inertia: f64,
    pub eigenvalues: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub inertia_shares: Vec<f64>,
}

/// Fits Correspondence Analysis on a filtered table.
///
/// Axes are ordered by descending eigenvalue; per axis, signs are flipped so
/// the column coordinate of largest magnitude is positive. Singular values
/// below the rank tolerance are dropped; an independence table therefore
/// yields a model with zero axes.
pub fn fit(table: &ContingencyTable) -> Result<CAModel> {
    let (n_rows, n_cols) = (table.n_rows(), table.n_cols());
    if n_rows < 2 || n_cols < 2 {
        return Err(Error::Model(format!(
            "table must be at least 2x2, got {n_rows}x{n_cols}"
        )));
    }
    if table.row_sums().iter().any(|&s| s == 0) {
        return Err(Error::Model(
            "table has empty rows; apply vocabulary filtering first".into(),
        ));
    }
    let row_masses = table.row_masses();
    let col_masses = table.col_masses();
    let n = table.grand_total() as f64;

    let mut residuals = DMatrix::zeros(n_rows, n_cols);
    for i in 0..n_rows {
        for j in 0..n_cols {
            let p = table.count(i, j) as f64 / n;
            let expected = row_masses[i] * col_masses[j];
            residuals[(i, j)] = (p - expected) / expected.sqrt();
        }
    }
    let total_inertia = residuals.iter().map(|v| v * v).sum();

    // Eigendecompose the smaller Gram side; recover the other side's
    // singular vectors through S. The margin direction is a zero eigenvector
    // and never survives the rank tolerance.
    let rows_side = n_rows <= n_cols;
    let gram = if rows_side {
        &residuals * residuals.transpose()
    } else {
        residuals.transpose() * &residuals
    };
    let eigen = gram.symmetric_eigen();

    let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let lambda_max = order
        .first()
        .map(|&k| eigen.eigenvalues[k])
        .unwrap_or(0.0)
        .max(0.0);
    let tol = (RANK_TOL_REL * lambda_max).max(RANK_TOL_ABS);
    let retained: Vec<usize> = order
        .into_iter()
        .filter(|&k| eigen.eigenvalues[k] >= tol)
        .collect();
    let k = retained.len();

    let eigenvalues: Vec<f64> = retained.iter().map(|&src| eigen.eigenvalues[src]).collect();
    let singular_values: Vec<f64> = eigenvalues.iter().map(|l| l.sqrt()).collect();

    let mut u = DMatrix::zeros(n_rows, k);
    let mut v = DMatrix::zeros(n_cols, k);
    for (axis, &src) in retained.iter().enumerate() {
        let eigvec = eigen.eigenvectors.column(src);
        if rows_side {
            u.column_mut(axis).copy_from(&eigvec);
            let image = residuals.transpose() * eigvec;
            v.column_mut(axis)
                .copy_from(&(image / singular_values[axis]));
        } else {
            v.column_mut(axis).copy_from(&eigvec);
            let image = &residuals * eigvec;
            u.column_mut(axis)
                .copy_from(&(image / singular_values[axis]));
        }
    }

    let mut row_standard = DMatrix::zeros(n_rows, k);
    let mut col_standard = DMatrix::zeros(n_cols, k);
    for axis in 0..k {
        for i in 0..n_rows {
            row_standard[(i, axis)] = u[(i, axis)] / row_masses[i].sqrt();
        }
        for j in 0..n_cols {
            col_standard[(j, axis)] = v[(j, axis)] / col_masses[j].sqrt();
        }
    }

    let mut row_principal = row_standard.clone();
    let mut col_principal = col_standard.clone();
    for (axis, &s) in singular_values.iter().enumerate() {
        row_principal.column_mut(axis).apply(|v| *v *= s);
        col_principal.column_mut(axis).apply(|v| *v *= s);
    }

    // Sign convention: per axis, the column coordinate of largest magnitude
    // is made positive (CA axes are otherwise sign-indeterminate).
    for axis in 0..k {
        let mut best = 0usize;
        for j in 1..n_cols {
            if col_principal[(j, axis)].abs() > col_principal[(best, axis)].abs() {
                best = j;
            }
        }
        if col_principal[(best, axis)] < 0.0 {
            row_principal.column_mut(axis).neg_mut();
            col_principal.column_mut(axis).neg_mut();
            row_standard.column_mut(axis).neg_mut();
            col_standard.column_mut(axis).neg_mut();
        }
    }

    Ok(CAModel {
        eigenvalues,
        singular_values,
        row_principal,
        col_principal,
        row_standard,
        col_standard,
        row_masses,
        col_masses,
        total_inertia,
        row_ids: table.row_ids().to_vec(),
        col_ids: table.col_ids().to_vec(),
    })
}

/// Which side of the table a supplementary profile extends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// A vector over the columns (an extra unit).
    Row,
    /// A vector over the rows (an extra attribute).
    Column,
}

/// Projects a supplementary frequency profile into the fitted space via the
/// barycentric transition formula, returning principal coordinates. The
/// model is unchanged; an active row's own profile reproduces its
/// coordinates.
pub fn project_supplementary(
    model: &CAModel,
    profile: &[f64],
    kind: ProfileKind,
) -> Result<Vec<f64>> {
    let (expected_len, coords) = match kind {
        ProfileKind::Row => (model.col_ids.len(), &model.col_principal),
        ProfileKind::Column => (model.row_ids.len(), &model.row_principal),
    };
    if profile.len() != expected_len {
        return Err(Error::Model(format!(
            "supplementary profile has length {}, expected {expected_len}",
            profile.len()
        )));
    }
    let total: f64 = profile.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Model(
            "supplementary profile has zero or negative sum".into(),
        ));
    }
    let mut out = Vec::with_capacity(model.k());
    for axis in 0..model.k() {
        let mut acc = 0.0;
        for (idx, &x) in profile.iter().enumerate() {
            if x != 0.0 {
                acc += x / total * coords[(idx, axis)];
            }
        }
        out.push(acc / model.singular_values[axis]);
    }
    Ok(out)
}

/// Contributions to axis inertia and squared cosines for all active points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDiagnostics {
    /// CTR for rows (I×K): `r_i F_ik^2 / lambda_k`; sums to 1 per axis.
    pub row_contributions: DMatrix<f64>,
    /// CTR for columns (J×K).
    pub col_contributions: DMatrix<f64>,
    /// COS² for rows (I×K): `F_ik^2 / sum_k F_ik^2`; sums to 1 per point.
    pub row_cos2: DMatrix<f64>,
    /// COS² for columns (J×K).
    pub col_cos2: DMatrix<f64>,
}

/// Computes CTR and COS² for every active row and column.
pub fn diagnostics(model: &CAModel) -> Result<PointDiagnostics> {
    if model.k() == 0 {
        return Err(Error::Model(
            "model has no retained axes; diagnostics are undefined".into(),
        ));
    }
    let ctr = |coords: &DMatrix<f64>, masses: &[f64]| {
        let mut out = coords.clone();
        for axis in 0..model.k() {
            let lambda = model.eigenvalues[axis];
            for (idx, &mass) in masses.iter().enumerate() {
                let f = coords[(idx, axis)];
                out[(idx, axis)] = mass * f * f / lambda;
            }
        }
        out
    };
    let cos2 = |coords: &DMatrix<f64>| {
        let mut out = coords.clone();
        for idx in 0..coords.nrows() {
            let norm2: f64 = (0..model.k()).map(|a| coords[(idx, a)].powi(2)).sum();
            for axis in 0..model.k() {
                let f = coords[(idx, axis)];
                out[(idx, axis)] = if norm2 > 0.0 { f * f / norm2 } else { 0.0 };
            }
        }
        out
    };
    Ok(PointDiagnostics {
        row_contributions: ctr(&model.row_principal, &model.row_masses),
        col_contributions: ctr(&model.col_principal, &model.col_masses),
        row_cos2: cos2(&model.row_principal),
        col_cos2: cos2(&model.col_principal),
    })
}

/// Which point cloud `top_contributors` inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Rows,
    Columns,
}

/// One salient point on a half-axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContributorPoint {
    pub id: String,
    pub contribution: f64,
    pub coordinate: f64,
}

/// Salient points on one signed half of an axis, contribution-descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfAxisContributors {
    /// 1-based axis number.
    pub axis: usize,
    pub positive_side: bool,
    pub points: Vec<ContributorPoint>,
}

/// Points whose contribution exceeds `multiplier` times the mean contribution
/// on each requested axis, split by coordinate sign. A multiplier of zero
/// disables the threshold and returns every point.
pub fn top_contributors(
    model: &CAModel,
    domain: Domain,
    axes: &[usize],
    multiplier: f64,
) -> Result<Vec<HalfAxisContributors>> {
    let diag = diagnostics(model)?;
    let (contributions, coords, ids) = match domain {
        Domain::Rows => (&diag.row_contributions, &model.row_principal, &model.row_ids),
        Domain::Columns => (&diag.col_contributions, &model.col_principal, &model.col_ids),
    };
    let mut out = Vec::new();
    for &axis in axes {
        if axis == 0 || axis > model.k() {
            return Err(Error::Model(format!(
                "axis {axis} out of range 1..={}",
                model.k()
            )));
        }
        let col = axis - 1;
        let mean: f64 =
            (0..ids.len()).map(|i| contributions[(i, col)]).sum::<f64>() / ids.len() as f64;
        let threshold = multiplier * mean;
        for positive_side in [false, true] {
            let mut points: Vec<ContributorPoint> = (0..ids.len())
                .filter(|&i| {
                    let qualifies =
                        multiplier == 0.0 || contributions[(i, col)] > threshold;
                    let on_side = if positive_side {
                        coords[(i, col)] >= 0.0
                    } else {
                        coords[(i, col)] < 0.0
                    };
                    qualifies && on_side
                })
                .map(|i| ContributorPoint {
                    id: ids[i].clone(),
                    contribution: contributions[(i, col)],
                    coordinate: coords[(i, col)],
                })
                .collect();
            points.sort_by(|a, b| b.contribution.partial_cmp(&a.contribution).unwrap());
            out.push(HalfAxisContributors {
                axis,
                positive_side,
                points,
            });
        }
    }
    Ok(out)
}

/// Writes a coordinate-style matrix as CSV with an `id` column and
/// `axis1..axisK` headers. Floats round-trip exactly through `{}`.
pub fn write_matrix_csv<W: Write>(ids: &[String], matrix: &DMatrix<f64>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map_err = |source: csv::Error| Error::Csv {
        path: "<writer>".into(),
        source,
    };
    let mut header = vec!["id".to_string()];
    header.extend((1..=matrix.ncols()).map(|k| format!("axis{k}")));
    w.write_record(&header).map_err(map_err)?;
    for (i, id) in ids.iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend((0..matrix.ncols()).map(|k| format!("{}", matrix[(i, k)])));
        w.write_record(&record).map_err(map_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let n_axes = reader.headers().map(|h| h.len().saturating_sub(1)).unwrap_or(0);
    let mut ids = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (lineno, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if record.len() != n_axes + 1 {
            return Err(Error::Model(format!(
                "{}: row {}: expected {} fields, got {}",
                path.display(),
                lineno + 2,
                n_axes + 1,
                record.len()
            )));
        }
        ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            values.push(field.parse().map_err(|_| {
                Error::Model(format!(
                    "{}: row {}: bad float {field:?}",
                    path.display(),
                    lineno + 2
                ))
            })?);
        }
    }
    let matrix = DMatrix::from_row_slice(ids.len(), n_axes, &values);
    Ok((ids, matrix))
}

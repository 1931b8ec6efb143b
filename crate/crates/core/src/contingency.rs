//! The units × words frequency table and its chi-squared geometry.
//!
//! Counts are stored sparsely (tweet tables sit well under 1% occupancy);
//! masses, profiles, chi-squared distances and total inertia are derived on
//! demand. Vocabulary filtering drops rare words first, then any rows left
//! empty, recording what was removed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TextUnit;

/// Vocabulary thresholds: a word must occur in at least `min_units_per_word`
/// distinct units and at least `min_total_per_word` times overall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub min_units_per_word: usize,
    pub min_total_per_word: u64,
}

impl FilterSpec {
    pub fn new(min_units_per_word: usize, min_total_per_word: u64) -> Self {
        FilterSpec {
            min_units_per_word,
            min_total_per_word,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.min_units_per_word < 1 || self.min_total_per_word < 1 {
            return Err(Error::Table(
                "filter thresholds must both be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Record of one vocabulary-filtering pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterStep {
    pub min_units_per_word: usize,
    pub min_total_per_word: u64,
    pub dropped_words: Vec<String>,
    pub dropped_units: Vec<String>,
}

/// Shape, occupancy and extreme-cell summary of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
    pub density: f64,
    pub max_count: u64,
    pub max_row_id: String,
    pub max_col_id: String,
}

/// A units × words frequency table with row/column ids, masses, and the
/// filtering steps that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    /// Per row: (column index, count), sorted by column index.
    rows: Vec<Vec<(usize, u64)>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    grand_total: u64,
    filter_steps: Vec<FilterStep>,
}

impl ContingencyTable {
    /// Tallies token occurrences: `counts[i][j]` = occurrences of word `j`
    /// in unit `i`. The vocabulary is the sorted set of distinct tokens.
    ///
    /// Units with no tokens are kept as zero rows until filtering.
    pub fn build(units: &[TextUnit]) -> Result<Self> {
        let nonempty = units.iter().filter(|u| !u.tokens.is_empty()).count();
        if nonempty < 2 {
            return Err(Error::Table(format!(
                "need at least 2 nonempty units, got {nonempty}"
            )));
        }
        let mut vocabulary: BTreeMap<&str, usize> = BTreeMap::new();
        for unit in units {
            for token in &unit.tokens {
                let next = vocabulary.len();
                vocabulary.entry(token.as_str()).or_insert(next);
            }
        }
        // BTreeMap iteration is sorted; re-index so column order is sorted too.
        let col_ids: Vec<String> = vocabulary.keys().map(|w| w.to_string()).collect();
        for (rank, (_, slot)) in vocabulary.iter_mut().enumerate() {
            *slot = rank;
        }
        if col_ids.len() < 2 {
            return Err(Error::Table(format!(
                "need at least 2 distinct words, got {}",
                col_ids.len()
            )));
        }

        let mut rows = Vec::with_capacity(units.len());
        for unit in units {
            let mut tally: BTreeMap<usize, u64> = BTreeMap::new();
            for token in &unit.tokens {
                *tally.entry(vocabulary[token.as_str()]).or_insert(0) += 1;
            }
            rows.push(tally.into_iter().collect::<Vec<_>>());
        }
        let row_ids = units.iter().map(|u| u.id.clone()).collect();
        Self::from_parts(row_ids, col_ids, rows, Vec::new())
    }

    /// Builds a table from dense counts; zero columns are rejected, zero rows
    /// kept (they are removed by filtering, as after `build`).
    pub fn from_dense(
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        counts: &[Vec<u64>],
    ) -> Result<Self> {
        if counts.len() != row_ids.len() || counts.iter().any(|r| r.len() != col_ids.len()) {
            return Err(Error::Table("counts shape does not match ids".into()));
        }
        let rows = counts
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(j, &c)| (j, c))
                    .collect()
            })
            .collect();
        Self::from_parts(row_ids, col_ids, rows, Vec::new())
    }

    fn from_parts(
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        rows: Vec<Vec<(usize, u64)>>,
        filter_steps: Vec<FilterStep>,
    ) -> Result<Self> {
        let mut col_sums = vec![0u64; col_ids.len()];
        let mut row_sums = vec![0u64; row_ids.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(j, count) in row {
                if j >= col_ids.len() {
                    return Err(Error::Table(format!(
                        "column index {j} out of range for {} columns",
                        col_ids.len()
                    )));
                }
                row_sums[i] += count;
                col_sums[j] += count;
            }
        }
        if let Some(j) = col_sums.iter().position(|&s| s == 0) {
            return Err(Error::Table(format!(
                "word {:?} has zero total count",
                col_ids[j]
            )));
        }
        let grand_total = row_sums.iter().sum();
        if grand_total == 0 {
            return Err(Error::Table("table has no counts".into()));
        }
        Ok(ContingencyTable {
            row_ids,
            col_ids,
            rows,
            row_sums,
            col_sums,
            grand_total,
            filter_steps,
        })
    }

    /// Removes words failing either threshold, then any rows left with zero
    /// sum, recording both in the table's provenance. Masses are recomputed.
    pub fn filter_vocabulary(&self, spec: FilterSpec) -> Result<Self> {
        spec.validate()?;
        let mut unit_presence = vec![0usize; self.n_cols()];
        for row in &self.rows {
            for &(j, _) in row {
                unit_presence[j] += 1;
            }
        }
        let keep_col: Vec<bool> = (0..self.n_cols())
            .map(|j| {
                unit_presence[j] >= spec.min_units_per_word
                    && self.col_sums[j] >= spec.min_total_per_word
            })
            .collect();
        let mut new_col_index = vec![usize::MAX; self.n_cols()];
        let mut col_ids = Vec::new();
        let mut dropped_words = Vec::new();
        for (j, keep) in keep_col.iter().enumerate() {
            if *keep {
                new_col_index[j] = col_ids.len();
                col_ids.push(self.col_ids[j].clone());
            } else {
                dropped_words.push(self.col_ids[j].clone());
            }
        }

        let mut row_ids = Vec::new();
        let mut rows = Vec::new();
        let mut dropped_units = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let filtered: Vec<(usize, u64)> = row
                .iter()
                .filter(|(j, _)| keep_col[*j])
                .map(|&(j, c)| (new_col_index[j], c))
                .collect();
            if filtered.is_empty() {
                dropped_units.push(self.row_ids[i].clone());
            } else {
                row_ids.push(self.row_ids[i].clone());
                rows.push(filtered);
            }
        }

        if rows.len() < 2 || col_ids.len() < 2 {
            return Err(Error::Table(format!(
                "filtering left a {}x{} table; need at least 2x2",
                rows.len(),
                col_ids.len()
            )));
        }
        let mut filter_steps = self.filter_steps.clone();
        filter_steps.push(FilterStep {
            min_units_per_word: spec.min_units_per_word,
            min_total_per_word: spec.min_total_per_word,
            dropped_words,
            dropped_units,
        });
        Self::from_parts(row_ids, col_ids, rows, filter_steps)
    }

    /// Aggregates consecutive rows into one row per group, keeping the
    /// vocabulary; used to turn unit rows into segment rows. Columns that
    /// lose all support are dropped.
    pub fn aggregate_rows(&self, groups: &[(String, usize, usize)]) -> Result<Self> {
        let mut rows = Vec::with_capacity(groups.len());
        let mut row_ids = Vec::with_capacity(groups.len());
        for (id, first, last) in groups {
            if *first > *last || *last >= self.n_rows() {
                return Err(Error::Table(format!(
                    "group {id:?} range {first}..={last} out of bounds for {} rows",
                    self.n_rows()
                )));
            }
            let mut tally: BTreeMap<usize, u64> = BTreeMap::new();
            for row in &self.rows[*first..=*last] {
                for &(j, c) in row {
                    *tally.entry(j).or_insert(0) += c;
                }
            }
            row_ids.push(id.clone());
            rows.push(tally.into_iter().collect::<Vec<_>>());
        }
        // Drop columns with no support in the aggregated rows.
        let mut support = vec![false; self.n_cols()];
        for row in &rows {
            for &(j, _) in row {
                support[j] = true;
            }
        }
        let mut new_index = vec![usize::MAX; self.n_cols()];
        let mut col_ids = Vec::new();
        for (j, &kept) in support.iter().enumerate() {
            if kept {
                new_index[j] = col_ids.len();
                col_ids.push(self.col_ids[j].clone());
            }
        }
        let rows = rows
            .into_iter()
            .map(|row| row.into_iter().map(|(j, c)| (new_index[j], c)).collect())
            .collect();
        Self::from_parts(row_ids, col_ids, rows, self.filter_steps.clone())
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    /// Sparse row entries `(column, count)`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, u64)] {
        &self.rows[i]
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(col, _)| col)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0)
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn grand_total(&self) -> u64 {
        self.grand_total
    }

    /// Row sums divided by the grand total; sums to 1.
    pub fn row_masses(&self) -> Vec<f64> {
        let n = self.grand_total as f64;
        self.row_sums.iter().map(|&s| s as f64 / n).collect()
    }

    /// Column sums divided by the grand total; sums to 1.
    pub fn col_masses(&self) -> Vec<f64> {
        let n = self.grand_total as f64;
        self.col_sums.iter().map(|&s| s as f64 / n).collect()
    }

    pub fn col_index(&self, word: &str) -> Option<usize> {
        // Columns are sorted for built tables but not necessarily for
        // imported ones, so scan.
        self.col_ids.iter().position(|w| w == word)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.row_ids.iter().position(|r| r == id)
    }

    pub fn filter_steps(&self) -> &[FilterStep] {
        &self.filter_steps
    }

    /// Chi-squared distance between the profiles of rows `i` and `i2`:
    /// sqrt( sum_j (1/c_j) (p_ij/r_i - p_i2j/r_i2)^2 ).
    pub fn chi2_distance(&self, i: usize, i2: usize) -> Result<f64> {
        if i >= self.n_rows() || i2 >= self.n_rows() {
            return Err(Error::Table(format!(
                "row index out of range: {i}, {i2} with {} rows",
                self.n_rows()
            )));
        }
        let n = self.grand_total as f64;
        let si = self.row_sums[i] as f64;
        let si2 = self.row_sums[i2] as f64;
        let a = &self.rows[i];
        let b = &self.rows[i2];
        let (mut ka, mut kb) = (0usize, 0usize);
        let mut sum = 0.0;
        while ka < a.len() || kb < b.len() {
            let ja = a.get(ka).map(|&(j, _)| j).unwrap_or(usize::MAX);
            let jb = b.get(kb).map(|&(j, _)| j).unwrap_or(usize::MAX);
            let (j, ca, cb) = match ja.cmp(&jb) {
                std::cmp::Ordering::Less => {
                    let v = (ja, a[ka].1, 0);
                    ka += 1;
                    v
                }
                std::cmp::Ordering::Greater => {
                    let v = (jb, 0, b[kb].1);
                    kb += 1;
                    v
                }
                std::cmp::Ordering::Equal => {
                    let v = (ja, a[ka].1, b[kb].1);
                    ka += 1;
                    kb += 1;
                    v
                }
            };
            let pa = if si > 0.0 { ca as f64 / si } else { 0.0 };
            let pb = if si2 > 0.0 { cb as f64 / si2 } else { 0.0 };
            let diff = pa - pb;
            sum += n / self.col_sums[j] as f64 * diff * diff;
        }
        Ok(sum.sqrt())
    }

    /// Total inertia sum_ij (p_ij - r_i c_j)^2 / (r_i c_j), which equals the
    /// chi-squared statistic of the table divided by the grand total.
    pub fn total_inertia(&self) -> f64 {
        // Expanding the square over all cells collapses to
        // sum over nonzero cells of n_ij^2 / (rowsum_i * colsum_j), minus 1.
        let mut sum = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let si = self.row_sums[i] as f64;
            for &(j, c) in row {
                sum += (c as f64) * (c as f64) / (si * self.col_sums[j] as f64);
            }
        }
        sum - 1.0
    }

    pub fn describe(&self) -> TableSummary {
        let mut nonzeros = 0;
        let mut max_count = 0u64;
        let mut max_cell = (0usize, 0usize);
        for (i, row) in self.rows.iter().enumerate() {
            nonzeros += row.len();
            for &(j, c) in row {
                if c > max_count {
                    max_count = c;
                    max_cell = (i, j);
                }
            }
        }
        TableSummary {
            rows: self.n_rows(),
            cols: self.n_cols(),
            nonzeros,
            density: nonzeros as f64 / (self.n_rows() * self.n_cols()) as f64,
            max_count,
            max_row_id: self.row_ids[max_cell.0].clone(),
            max_col_id: self.col_ids[max_cell.1].clone(),
        }
    }

    /// Dense counts as a float matrix (rows × cols).
    pub fn dense_counts(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows(), self.n_cols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                m[(i, j)] = c as f64;
            }
        }
        m
    }

    /// Dense CSV: a header of `id` plus the word columns, one row per unit.
    pub fn write_dense_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map_err = |source: csv::Error| Error::Csv {
            path: "<writer>".into(),
            source,
        };
        let mut header = vec!["id".to_string()];
        header.extend(self.col_ids.iter().cloned());
        w.write_record(&header).map_err(map_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut record = vec![self.row_ids[i].clone()];
            let mut dense = vec![0u64; self.n_cols()];
            for &(j, c) in row {
                dense[j] = c;
            }
            record.extend(dense.iter().map(|c| c.to_string()));
            w.write_record(&record).map_err(map_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn read_dense_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let mut records = reader.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Table(format!("{}: empty table file", path.display())))?
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let col_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut row_ids = Vec::new();
        let mut counts = Vec::new();
        for (lineno, record) in records.enumerate() {
            let record = record.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            if record.len() != col_ids.len() + 1 {
                return Err(Error::Table(format!(
                    "{}: row {} has {} fields, expected {}",
                    path.display(),
                    lineno + 2,
                    record.len(),
                    col_ids.len() + 1
                )));
            }
            row_ids.push(record[0].to_string());
            let row: Vec<u64> = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse().map_err(|_| {
                        Error::Table(format!(
                            "{}: row {}: bad count {f:?}",
                            path.display(),
                            lineno + 2
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            counts.push(row);
        }
        Self::from_dense(row_ids, col_ids, &counts)
    }

    /// Sparse triplet CSV `row,col,count` in row-major order. Tables with
    /// empty rows cannot round-trip through this format and are rejected.
    pub fn write_triplets_csv<W: Write>(&self, writer: W) -> Result<()> {
        if self.row_sums.iter().any(|&s| s == 0) {
            return Err(Error::Table(
                "table has empty rows; filter before exporting triplets".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(writer);
        let map_err = |source: csv::Error| Error::Csv {
            path: "<writer>".into(),
            source,
        };
        w.write_record(["row", "col", "count"]).map_err(map_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                w.write_record([
                    self.row_ids[i].as_str(),
                    self.col_ids[j].as_str(),
                    &c.to_string(),
                ])
                .map_err(map_err)?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }

    /// Reads a triplet CSV. Rows keep first-appearance order; columns are
    /// sorted, matching the order `build` produces.
    pub fn read_triplets_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let mut triplets: Vec<(String, String, u64)> = Vec::new();
        for (lineno, record) in reader.records().enumerate() {
            let record = record.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            if record.len() != 3 {
                return Err(Error::Table(format!(
                    "{}: row {} has {} fields, expected row,col,count",
                    path.display(),
                    lineno + 2,
                    record.len()
                )));
            }
            let count: u64 = record[2].parse().map_err(|_| {
                Error::Table(format!(
                    "{}: row {}: bad count {:?}",
                    path.display(),
                    lineno + 2,
                    &record[2]
                ))
            })?;
            triplets.push((record[0].to_string(), record[1].to_string(), count));
        }
        let mut row_index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut row_ids = Vec::new();
        for (r, _, _) in &triplets {
            if !row_index.contains_key(r.as_str()) {
                row_index.insert(r.as_str(), row_ids.len());
                row_ids.push(r.clone());
            }
        }
        let mut col_ids: Vec<String> = triplets.iter().map(|(_, c, _)| c.clone()).collect();
        col_ids.sort();
        col_ids.dedup();
        let col_index: BTreeMap<&str, usize> = col_ids
            .iter()
            .enumerate()
            .map(|(j, c)| (c.as_str(), j))
            .collect();
        let mut rows: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); row_ids.len()];
        for (r, c, count) in &triplets {
            let i = row_index[r.as_str()];
            let j = col_index[c.as_str()];
            *rows[i].entry(j).or_insert(0) += count;
        }
        let rows = rows
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();
        Self::from_parts(row_ids, col_ids, rows, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(id: &str, tokens: &[&str]) -> TextUnit {
        TextUnit {
            index: 0,
            id: id.to_string(),
            speaker: None,
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            raw: String::new(),
        }
    }

    fn table(counts: &[&[u64]]) -> ContingencyTable {
        let row_ids = (0..counts.len()).map(|i| format!("r{i}")).collect();
        let col_ids = (0..counts[0].len()).map(|j| format!("w{j}")).collect();
        let dense: Vec<Vec<u64>> = counts.iter().map(|r| r.to_vec()).collect();
        ContingencyTable::from_dense(row_ids, col_ids, &dense).unwrap()
    }

    #[test]
    fn build_tallies_tokens() {
        // units [[a,b],[b,b]] -> counts [[1,1],[0,2]]
        let units = vec![unit("u1", &["a", "b"]), unit("u2", &["b", "b"])];
        let t = ContingencyTable::build(&units).unwrap();
        assert_eq!(t.col_ids(), &["a", "b"]);
        assert_eq!(t.count(0, 0), 1);
        assert_eq!(t.count(0, 1), 1);
        assert_eq!(t.count(1, 0), 0);
        assert_eq!(t.count(1, 1), 2);
        assert_eq!(t.grand_total(), 4);
    }

    #[test]
    fn build_matches_brute_force_tally() {
        let units = vec![
            unit("u1", &["play", "it", "sam", "play"]),
            unit("u2", &["here", "s", "looking", "at", "you", "kid"]),
            unit("u3", &["play", "sam", "as", "time", "goes", "by"]),
        ];
        let t = ContingencyTable::build(&units).unwrap();
        // independent tally: for every (unit, word) pair count by scanning
        for (i, u) in units.iter().enumerate() {
            for (j, w) in t.col_ids().iter().enumerate() {
                let expected = u.tokens.iter().filter(|tok| *tok == w).count() as u64;
                assert_eq!(t.count(i, j), expected, "cell ({i},{j}) word {w}");
            }
        }
        let total: u64 = units.iter().map(|u| u.tokens.len() as u64).sum();
        assert_eq!(t.grand_total(), total);
    }

    #[test]
    fn build_rejects_degenerate_input() {
        assert!(ContingencyTable::build(&[unit("u1", &["a", "b"])]).is_err());
        assert!(ContingencyTable::build(&[unit("u1", &["a"]), unit("u2", &[])]).is_err());
        assert!(ContingencyTable::build(&[unit("u1", &["a"]), unit("u2", &["a"])]).is_err());
    }

    #[test]
    fn masses_sum_to_one() {
        let t = table(&[&[3, 0, 1], &[2, 5, 0]]);
        assert_relative_eq!(t.row_masses().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.col_masses().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn filter_noop_thresholds_keep_everything() {
        let t = table(&[&[3, 0, 1], &[2, 5, 0]]);
        let f = t.filter_vocabulary(FilterSpec::new(1, 1)).unwrap();
        assert_eq!(f.col_ids(), t.col_ids());
        assert_eq!(f.row_ids(), t.row_ids());
        assert_eq!(f.dense_counts(), t.dense_counts());
    }

    #[test]
    fn filter_drops_words_then_emptied_rows() {
        // w0 in 2 units total 3; w1 in 1 unit total 5; w2 in 1 unit total 1.
        // Spec (2,2): keep only w0; row r2 = [0,0,1] empties and is dropped.
        let t = table(&[&[1, 0, 0], &[2, 5, 0], &[0, 0, 1]]);
        let f = t.filter_vocabulary(FilterSpec::new(2, 2)).unwrap_err();
        // only one column would remain -> error
        assert!(f.to_string().contains("need at least 2x2"), "{f}");

        let t = table(&[&[1, 2, 0], &[2, 5, 0], &[0, 0, 1]]);
        let f = t.filter_vocabulary(FilterSpec::new(2, 2)).unwrap();
        assert_eq!(f.col_ids(), &["w0", "w1"]);
        assert_eq!(f.row_ids(), &["r0", "r1"]);
        let step = &f.filter_steps()[0];
        assert_eq!(step.dropped_words, vec!["w2"]);
        assert_eq!(step.dropped_units, vec!["r2"]);
    }

    #[test]
    fn filter_matches_brute_force_scan() {
        // pseudo-random fixture; thresholds (3, 5)
        let mut counts = vec![vec![0u64; 9]; 7];
        let mut state = 11u64;
        for row in counts.iter_mut() {
            for cell in row.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *cell = (state >> 60) & 3; // 0..=3
            }
        }
        let row_ids: Vec<String> = (0..7).map(|i| format!("r{i}")).collect();
        let col_ids: Vec<String> = (0..9).map(|j| format!("w{j}")).collect();
        let t = ContingencyTable::from_dense(row_ids, col_ids.clone(), &counts).unwrap();
        let spec = FilterSpec::new(3, 5);
        let f = t.filter_vocabulary(spec).unwrap();
        // brute scan over the raw counts
        let expected: Vec<&String> = col_ids
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let in_units = counts.iter().filter(|r| r[*j] > 0).count();
                let total: u64 = counts.iter().map(|r| r[*j]).sum();
                in_units >= 3 && total >= 5
            })
            .map(|(_, w)| w)
            .collect();
        assert_eq!(f.col_ids().iter().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn chi2_distance_identity_and_hand_value() {
        let t = table(&[&[1, 0], &[0, 1]]);
        // sqrt(1/0.5 + 1/0.5) = 2, evaluated by hand
        assert_relative_eq!(t.chi2_distance(0, 1).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(t.chi2_distance(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn chi2_distance_zero_for_duplicated_profile() {
        let dup = table(&[&[2, 1, 3], &[1, 4, 0], &[4, 2, 6]]); // row 2 = 2 * row 0
        assert_relative_eq!(dup.chi2_distance(0, 2).unwrap(), 0.0, epsilon = 1e-12);
        // the twin's distance to any other row equals the original's
        assert_relative_eq!(
            dup.chi2_distance(2, 1).unwrap(),
            dup.chi2_distance(0, 1).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn inertia_zero_under_independence() {
        // counts = outer product of margins (1,2) x (1,2)
        let t = table(&[&[1, 2], &[2, 4]]);
        assert_relative_eq!(t.total_inertia(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inertia_hand_value() {
        // [[1,0],[0,1]]: four cells each contribute 0.25
        let t = table(&[&[1, 0], &[0, 1]]);
        assert_relative_eq!(t.total_inertia(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inertia_matches_brute_chi2_oracle() {
        // direct chi-squared over all cells of a fixed 5x7 table
        let counts: Vec<Vec<u64>> = vec![
            vec![2, 0, 1, 4, 0, 3, 1],
            vec![0, 5, 2, 0, 1, 0, 2],
            vec![1, 1, 0, 2, 3, 1, 0],
            vec![4, 0, 0, 1, 2, 2, 5],
            vec![0, 2, 3, 0, 0, 4, 1],
        ];
        let row_ids = (0..5).map(|i| format!("r{i}")).collect();
        let col_ids = (0..7).map(|j| format!("w{j}")).collect();
        let t = ContingencyTable::from_dense(row_ids, col_ids, &counts).unwrap();
        let n: f64 = counts.iter().flatten().sum::<u64>() as f64;
        let row_sums: Vec<f64> = counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
        let col_sums: Vec<f64> = (0..7)
            .map(|j| counts.iter().map(|r| r[j]).sum::<u64>() as f64)
            .collect();
        let mut chi2 = 0.0;
        for (i, row) in counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let expected = row_sums[i] * col_sums[j] / n;
                let diff = c as f64 - expected;
                chi2 += diff * diff / expected;
            }
        }
        assert_relative_eq!(t.total_inertia(), chi2 / n, epsilon = 1e-10);
    }

    #[test]
    fn describe_full_table() {
        let t = table(&[&[1, 1], &[1, 1]]);
        let s = t.describe();
        assert_eq!(s.density, 1.0);
        assert_eq!(s.max_count, 1);
        assert_eq!(s.nonzeros, 4);
    }

    #[test]
    fn describe_reports_max_cell() {
        let t = table(&[&[1, 0, 2], &[0, 43, 1]]);
        let s = t.describe();
        assert_eq!(s.rows, 2);
        assert_eq!(s.cols, 3);
        assert_eq!(s.nonzeros, 4);
        assert_relative_eq!(s.density, 4.0 / 6.0, epsilon = 1e-12);
        assert_eq!(s.max_count, 43);
        assert_eq!(s.max_row_id, "r1");
        assert_eq!(s.max_col_id, "w1");
    }

    #[test]
    fn dense_csv_round_trip() {
        let t = table(&[&[3, 0, 1], &[2, 5, 0]]);
        let mut buffer = Vec::new();
        t.write_dense_csv(&mut buffer).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, &buffer).unwrap();
        let back = ContingencyTable::read_dense_csv(&path).unwrap();
        assert_eq!(back.row_ids(), t.row_ids());
        assert_eq!(back.col_ids(), t.col_ids());
        assert_eq!(back.dense_counts(), t.dense_counts());
    }

    #[test]
    fn triplet_csv_round_trip() {
        let units = vec![
            unit("u1", &["b", "a", "b"]),
            unit("u2", &["c", "a"]),
            unit("u3", &["c", "c", "b"]),
        ];
        let t = ContingencyTable::build(&units).unwrap();
        let mut buffer = Vec::new();
        t.write_triplets_csv(&mut buffer).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, &buffer).unwrap();
        let back = ContingencyTable::read_triplets_csv(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn aggregate_rows_sums_counts_and_drops_dead_columns() {
        let t = table(&[&[1, 0, 2], &[0, 3, 0], &[0, 0, 1], &[2, 0, 0]]);
        let groups = vec![("g1".to_string(), 0, 1), ("g2".to_string(), 3, 3)];
        let agg = t.aggregate_rows(&groups).unwrap();
        // row 2 excluded, so w2 keeps support via row 0 only
        assert_eq!(agg.row_ids(), &["g1", "g2"]);
        assert_eq!(agg.col_ids(), &["w0", "w1", "w2"]);
        assert_eq!(agg.count(0, 0), 1);
        assert_eq!(agg.count(0, 1), 3);
        assert_eq!(agg.count(0, 2), 2);
        assert_eq!(agg.count(1, 0), 2);

        // drop the only row supporting w2
        let groups = vec![("g1".to_string(), 1, 1), ("g2".to_string(), 3, 3)];
        let agg = t.aggregate_rows(&groups).unwrap();
        assert_eq!(agg.col_ids(), &["w0", "w1"]);
    }
}

//! Tracking of terms and character dyads through the full-dimensional factor
//! space: distance series from a word point to every unit or segment point.

use std::io::Write;

use serde::Serialize;

use crate::ca::{project_supplementary, CAModel, ProfileKind};
use crate::cluster::Segmentation;
use crate::contingency::ContingencyTable;
use crate::error::{Error, Result};

/// One tracked curve: a label and a distance per unit or segment, in
/// chronological order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackSeries {
    pub label: String,
    pub entries: Vec<TrackEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackEntry {
    pub id: String,
    pub distance: f64,
}

impl TrackSeries {
    pub fn distances(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.distance).collect()
    }

    /// Index of the smallest distance (first on ties).
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (idx, entry) in self.entries.iter().enumerate() {
            if best.is_none_or(|b| entry.distance < self.entries[b].distance) {
                best = Some(idx);
            }
        }
        best
    }
}

/// A character pair tracked jointly against each text unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadSpec {
    pub subject: String,
    pub partner: String,
}

fn resolve_term(model: &CAModel, term: &str) -> Result<usize> {
    model.col_index(term).ok_or_else(|| Error::UnknownTerm {
        term: term.to_string(),
        suggestions: nearest_terms(&model.col_ids, term, 5),
    })
}

/// Levenshtein distance, for near-miss suggestions in error messages.
fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut current = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            current.push(substitute.min(prev[j + 1] + 1).min(current[j] + 1));
        }
        prev = current;
    }
    prev[b.len()]
}

fn nearest_terms(vocabulary: &[String], term: &str, limit: usize) -> Vec<String> {
    let mut scored: Vec<(usize, &String)> = vocabulary
        .iter()
        .map(|w| (levenshtein(w, term), w))
        .collect();
    scored.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(limit).map(|(_, w)| w.clone()).collect()
}

/// Euclidean distance from the word's column point to every row point, over
/// all retained axes.
pub fn term_distances(model: &CAModel, term: &str) -> Result<TrackSeries> {
    let j = resolve_term(model, term)?;
    let entries = model
        .row_ids
        .iter()
        .enumerate()
        .map(|(i, id)| TrackEntry {
            id: id.clone(),
            distance: model.row_col_distance(i, j),
        })
        .collect();
    Ok(TrackSeries {
        label: term.to_string(),
        entries,
    })
}

/// Composite dyad distance `sqrt(d^2(s, f) + d^2(s, m))` of a word pair
/// referenced to the unit point `s`, in the full retained space.
pub fn dyad_distance(model: &CAModel, unit: usize, subject: &str, partner: &str) -> Result<f64> {
    if unit >= model.row_ids.len() {
        return Err(Error::Track(format!(
            "unit index {unit} out of range for {} rows",
            model.row_ids.len()
        )));
    }
    let f = resolve_term(model, subject)?;
    let m = resolve_term(model, partner)?;
    let df = model.row_col_distance(unit, f);
    let dm = model.row_col_distance(unit, m);
    Ok((df * df + dm * dm).sqrt())
}

/// The dyad distance evaluated at every unit, chronological order.
pub fn dyad_series(model: &CAModel, spec: &DyadSpec) -> Result<TrackSeries> {
    let f = resolve_term(model, &spec.subject)?;
    let m = resolve_term(model, &spec.partner)?;
    let entries = model
        .row_ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let df = model.row_col_distance(i, f);
            let dm = model.row_col_distance(i, m);
            TrackEntry {
                id: id.clone(),
                distance: (df * df + dm * dm).sqrt(),
            }
        })
        .collect();
    Ok(TrackSeries {
        label: format!("{}+{}", spec.subject, spec.partner),
        entries,
    })
}

/// The semantically closest segment to a tracked term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosestSegment {
    /// 1-based position in the segmentation.
    pub segment: usize,
    pub first_id: String,
    pub last_id: String,
    pub n_units: usize,
    pub distance: f64,
}

/// A per-segment distance series plus its argmin segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentTrack {
    pub series: TrackSeries,
    pub closest: ClosestSegment,
}

/// Distance from a term to each segment's point, where a segment's point is
/// the supplementary projection of the summed counts of its member units.
/// Also reports the closest segment with its first/last unit ids.
pub fn term_segment_distances(
    model: &CAModel,
    term: &str,
    segmentation: &Segmentation,
    table: &ContingencyTable,
) -> Result<SegmentTrack> {
    if table.n_rows() != model.row_ids.len() || table.n_cols() != model.col_ids.len() {
        return Err(Error::Track(format!(
            "table is {}x{} but the model was fitted on {}x{}",
            table.n_rows(),
            table.n_cols(),
            model.row_ids.len(),
            model.col_ids.len()
        )));
    }
    if segmentation.segments.is_empty() {
        return Err(Error::Track("segmentation has no segments".into()));
    }
    if segmentation
        .segments
        .iter()
        .any(|&(_, last)| last >= table.n_rows())
    {
        return Err(Error::Track(
            "segmentation ranges exceed the table's rows".into(),
        ));
    }
    let j = resolve_term(model, term)?;
    let mut entries = Vec::with_capacity(segmentation.segments.len());
    for (idx, &(first, last)) in segmentation.segments.iter().enumerate() {
        let mut profile = vec![0.0; table.n_cols()];
        for row in first..=last {
            for &(col, count) in table.row(row) {
                profile[col] += count as f64;
            }
        }
        let coords = project_supplementary(model, &profile, ProfileKind::Row)?;
        let distance = coords
            .iter()
            .enumerate()
            .map(|(axis, v)| {
                let d = v - model.col_principal[(j, axis)];
                d * d
            })
            .sum::<f64>()
            .sqrt();
        entries.push(TrackEntry {
            id: format!("s{}", idx + 1),
            distance,
        });
    }
    let series = TrackSeries {
        label: term.to_string(),
        entries,
    };
    let best = series.argmin().expect("nonempty series");
    let (first, last) = segmentation.segments[best];
    let closest = ClosestSegment {
        segment: best + 1,
        first_id: model.row_ids[first].clone(),
        last_id: model.row_ids[last].clone(),
        n_units: last - first + 1,
        distance: series.entries[best].distance,
    };
    Ok(SegmentTrack { series, closest })
}

/// Combined CSV export: `label,unit_id,distance`, series after series.
pub fn write_series_csv<W: Write>(series: &[TrackSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map_err = |source: csv::Error| Error::Csv {
        path: "<writer>".into(),
        source,
    };
    w.write_record(["label", "unit_id", "distance"])
        .map_err(map_err)?;
    for s in series {
        for entry in &s.entries {
            w.write_record([&s.label, &entry.id, &format!("{}", entry.distance)])
                .map_err(map_err)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::fit;
    use approx::assert_relative_eq;

    fn table(counts: &[&[u64]]) -> ContingencyTable {
        let row_ids = (0..counts.len()).map(|i| format!("u{i}")).collect();
        let col_ids: Vec<String> = ["alpha", "beta", "gamma", "delta"]
            .iter()
            .take(counts[0].len())
            .map(|s| s.to_string())
            .collect();
        let dense: Vec<Vec<u64>> = counts.iter().map(|r| r.to_vec()).collect();
        ContingencyTable::from_dense(row_ids, col_ids, &dense).unwrap()
    }

    fn fixture_model() -> (ContingencyTable, CAModel) {
        let t = table(&[&[4, 1, 0, 2], &[1, 3, 2, 0], &[0, 2, 5, 1], &[2, 0, 1, 4]]);
        let model = fit(&t).unwrap();
        (t, model)
    }

    #[test]
    fn unknown_term_lists_suggestions() {
        let (_, model) = fixture_model();
        let err = term_distances(&model, "alhpa").unwrap_err();
        match err {
            Error::UnknownTerm { term, suggestions } => {
                assert_eq!(term, "alhpa");
                assert_eq!(suggestions[0], "alpha");
            }
            other => panic!("expected UnknownTerm, got {other}"),
        }
    }

    #[test]
    fn term_distances_match_direct_coordinates() {
        let (_, model) = fixture_model();
        let series = term_distances(&model, "beta").unwrap();
        assert_eq!(series.entries.len(), model.row_ids.len());
        let j = model.col_index("beta").unwrap();
        for (i, entry) in series.entries.iter().enumerate() {
            // recompute from the public coordinate matrices
            let direct: f64 = (0..model.k())
                .map(|k| (model.row_principal[(i, k)] - model.col_principal[(j, k)]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert_relative_eq!(entry.distance, direct, epsilon = 1e-12);
            assert_eq!(entry.id, model.row_ids[i]);
        }
    }

    #[test]
    fn duplicate_profiles_get_equal_distances() {
        // rows 1 and 3 have proportional counts, hence equal profiles
        let t = table(&[&[4, 1, 0, 2], &[1, 3, 2, 0], &[0, 2, 5, 1], &[2, 6, 4, 0]]);
        let model = fit(&t).unwrap();
        let series = term_distances(&model, "gamma").unwrap();
        assert_relative_eq!(
            series.entries[1].distance,
            series.entries[3].distance,
            epsilon = 1e-9
        );
    }

    #[test]
    fn dyad_three_four_five() {
        let (_, model) = fixture_model();
        // pick any unit and two terms, then verify against the definition
        let d = dyad_distance(&model, 0, "alpha", "delta").unwrap();
        let f = model.col_index("alpha").unwrap();
        let m = model.col_index("delta").unwrap();
        let df = model.row_col_distance(0, f);
        let dm = model.row_col_distance(0, m);
        assert_relative_eq!(d, (df * df + dm * dm).sqrt(), epsilon = 1e-14);
        assert!(d >= df.max(dm));
    }

    #[test]
    fn dyad_is_symmetric_in_partners() {
        let (_, model) = fixture_model();
        for unit in 0..model.row_ids.len() {
            let ab = dyad_distance(&model, unit, "alpha", "beta").unwrap();
            let ba = dyad_distance(&model, unit, "beta", "alpha").unwrap();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn dyad_with_self_is_sqrt2_times_term_distance() {
        let (_, model) = fixture_model();
        let series = dyad_series(
            &model,
            &DyadSpec {
                subject: "beta".into(),
                partner: "beta".into(),
            },
        )
        .unwrap();
        let single = term_distances(&model, "beta").unwrap();
        for (d, s) in series.entries.iter().zip(&single.entries) {
            assert_relative_eq!(d.distance, 2f64.sqrt() * s.distance, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_segment_equals_whole_corpus_projection() {
        let (t, model) = fixture_model();
        let seg = Segmentation {
            segments: vec![(0, 3)],
            boundaries: vec![],
            boundary_p_values: vec![],
            alpha: 0.10,
            n_permutations: 999,
            seed: 1,
        };
        let track = term_segment_distances(&model, "alpha", &seg, &t).unwrap();
        assert_eq!(track.series.entries.len(), 1);
        // direct: project the summed counts and measure by hand
        let profile: Vec<f64> = (0..t.n_cols())
            .map(|j| (0..t.n_rows()).map(|i| t.count(i, j) as f64).sum())
            .collect();
        let coords = project_supplementary(&model, &profile, ProfileKind::Row).unwrap();
        let j = model.col_index("alpha").unwrap();
        let expected: f64 = coords
            .iter()
            .enumerate()
            .map(|(k, v)| (v - model.col_principal[(j, k)]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert_relative_eq!(track.series.entries[0].distance, expected, epsilon = 1e-12);
        assert_eq!(track.closest.segment, 1);
        assert_eq!(track.closest.n_units, 4);
    }

    #[test]
    fn closest_segment_matches_exhaustive_scan() {
        let (t, model) = fixture_model();
        let seg = Segmentation {
            segments: vec![(0, 1), (2, 3)],
            boundaries: vec![2],
            boundary_p_values: vec![0.01],
            alpha: 0.10,
            n_permutations: 999,
            seed: 1,
        };
        let track = term_segment_distances(&model, "gamma", &seg, &t).unwrap();
        let best_by_scan = track
            .series
            .entries
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance.partial_cmp(&b.1.distance).unwrap())
            .unwrap()
            .0;
        assert_eq!(track.closest.segment, best_by_scan + 1);
        assert_eq!(track.closest.first_id, model.row_ids[seg.segments[best_by_scan].0]);
    }

    #[test]
    fn series_csv_lists_label_id_distance() {
        let (_, model) = fixture_model();
        let series = vec![
            term_distances(&model, "alpha").unwrap(),
            term_distances(&model, "beta").unwrap(),
        ];
        let mut buffer = Vec::new();
        write_series_csv(&series, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "label,unit_id,distance");
        assert_eq!(lines.len(), 1 + 2 * model.row_ids.len());
        assert!(lines[1].starts_with("alpha,u0,"));
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("kiss", "kiss"), 0);
        assert_eq!(levenshtein("kiss", "miss"), 1);
        assert_eq!(levenshtein("", "abc"), 3);
    }
}

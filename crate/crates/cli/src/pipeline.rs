//! Stage-wise pipeline execution. Every stage computes its artifacts fully
//! before writing anything, consumes only files exported by earlier stages,
//! and `run` chains the stages through the filesystem, so stage-by-stage
//! invocation is byte-identical to an end-to-end run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use narmap_core::ca::{
    self, diagnostics, top_contributors, CAModel, Domain, HalfAxisContributors, ModelSummary,
};
use narmap_core::cluster::{constrained_cluster, drop_singleton_segments, segment, Segmentation};
use narmap_core::contingency::ContingencyTable;
use narmap_core::ingest::{
    aggregate, load_dialogue_csv_with, load_plain_text_blocks, load_tweets, read_units_jsonl,
    write_units_jsonl, DialogueOptions, TextUnit,
};
use narmap_core::svg;
use narmap_core::track::{
    dyad_series, term_distances, term_segment_distances, write_series_csv, ClosestSegment,
    DyadSpec, TrackSeries,
};

use crate::config::{Cut, Feature, Mode, PipelineConfig, SourceFormat};

pub const UNITS: &str = "units.jsonl";
pub const TABLE_DENSE: &str = "table.csv";
pub const TABLE_SPARSE: &str = "table_sparse.csv";
pub const TABLE_SUMMARY: &str = "table_summary.json";
pub const MODEL: &str = "model.json";
pub const ROW_PRINCIPAL: &str = "row_principal.csv";
pub const COL_PRINCIPAL: &str = "col_principal.csv";
pub const ROW_CONTRIBUTIONS: &str = "row_contributions.csv";
pub const COL_CONTRIBUTIONS: &str = "col_contributions.csv";
pub const ROW_COS2: &str = "row_cos2.csv";
pub const COL_COS2: &str = "col_cos2.csv";
pub const SCATTER_ROWS_CSV: &str = "scatter_rows.csv";
pub const SCATTER_COLS_CSV: &str = "scatter_cols.csv";
pub const SCATTER_ROWS_SVG: &str = "scatter_rows.svg";
pub const SCATTER_COLS_SVG: &str = "scatter_cols.svg";
pub const DENDROGRAM_JSON: &str = "dendrogram.json";
pub const DENDROGRAM_TXT: &str = "dendrogram.txt";
pub const PARTITION: &str = "partition.csv";
pub const SEGMENTS_JSON: &str = "segmentation.json";
pub const SEGMENTS_CSV: &str = "segmentation.csv";
pub const SEGMENTS_NS_JSON: &str = "segmentation_nonsingleton.json";
pub const SEGMENTS_NS_CSV: &str = "segmentation_nonsingleton.csv";
pub const SEGMENT_TABLE: &str = "table_segments_sparse.csv";
pub const SEGMENT_SUMMARY: &str = "segment_summary.json";
pub const TRACK_CSV: &str = "track_series.csv";
pub const TRACK_SVG: &str = "track_series.svg";
pub const TRACK_SEGMENTS_CSV: &str = "track_segments.csv";
pub const TRACK_SEGMENTS_SVG: &str = "track_segments.svg";
pub const CLOSEST_SEGMENTS: &str = "closest_segments.json";
pub const REPORT: &str = "report.txt";
pub const MANIFEST: &str = "manifest.json";

/// One artifact computed by a stage, written only after the whole stage
/// succeeded.
struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: &'static str, bytes: Vec<u8>) -> Self {
        Artifact { name, bytes }
    }

    fn text(name: &'static str, text: String) -> Self {
        Artifact {
            name,
            bytes: text.into_bytes(),
        }
    }

    fn json<T: Serialize>(name: &'static str, value: &T) -> Result<Self> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        Ok(Artifact::text(name, text))
    }
}

fn write_all(out_dir: &Path, artifacts: Vec<Artifact>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let path = out_dir.join(artifact.name);
        fs::write(&path, &artifact.bytes)
            .with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

fn require(out_dir: &Path, name: &str, produced_by: &str) -> Result<PathBuf> {
    let path = out_dir.join(name);
    if !path.exists() {
        bail!(
            "required file {} not found; run `narmap {produced_by}` first",
            path.display()
        );
    }
    Ok(path)
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

fn load_units(config: &PipelineConfig) -> Result<Vec<TextUnit>> {
    let units = match config.format {
        SourceFormat::DialogueCsv => load_dialogue_csv_with(
            &config.source_path,
            &config.rules,
            &DialogueOptions {
                include_speaker_token: config.include_speaker_tokens,
            },
        )?,
        SourceFormat::PlainText => {
            load_plain_text_blocks(&config.source_path, config.block_size, &config.rules)?
        }
        SourceFormat::TweetStream => load_tweets(&config.source_path, &config.rules)?,
    };
    match &config.aggregation_map {
        Some(map) if !config.aggregate_after_filter => Ok(aggregate(&units, map)?),
        _ => Ok(units),
    }
}

pub fn stage_ingest(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let units = load_units(config)?;
    let mut buffer = Vec::new();
    write_units_jsonl(&units, &mut buffer)?;
    write_all(out_dir, vec![Artifact::new(UNITS, buffer)])
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TableStageSummary {
    units_before: usize,
    unique_words_before: usize,
    total_word_uses: u64,
    rows: usize,
    cols: usize,
    nonzeros: usize,
    density: f64,
    max_count: u64,
    max_row_id: String,
    max_col_id: String,
    dropped_words: Vec<String>,
    dropped_units: Vec<String>,
}

pub fn stage_table(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let units = read_units_jsonl(&require(out_dir, UNITS, "ingest")?)?;
    let built = ContingencyTable::build(&units)?;
    let (units_before, unique_words_before, total_word_uses) =
        (built.n_rows(), built.n_cols(), built.grand_total());
    let mut table = built.filter_vocabulary(config.filter)?;
    let step = table.filter_steps().last().expect("one filter step").clone();
    if config.aggregate_after_filter {
        let map = config.aggregation_map.as_ref().expect("validated");
        if !step.dropped_units.is_empty() {
            bail!(
                "aggregate_after_filter needs every unit to survive filtering, \
                 but {} were dropped (first: {})",
                step.dropped_units.len(),
                step.dropped_units[0]
            );
        }
        let groups: Vec<(String, usize, usize)> = map
            .groups
            .iter()
            .map(|g| (g.id.clone(), g.first, g.last))
            .collect();
        table = table.aggregate_rows(&groups)?;
    }
    let describe = table.describe();
    let summary = TableStageSummary {
        units_before,
        unique_words_before,
        total_word_uses,
        rows: describe.rows,
        cols: describe.cols,
        nonzeros: describe.nonzeros,
        density: describe.density,
        max_count: describe.max_count,
        max_row_id: describe.max_row_id,
        max_col_id: describe.max_col_id,
        dropped_words: step.dropped_words.clone(),
        dropped_units: step.dropped_units.clone(),
    };

    let mut dense = Vec::new();
    table.write_dense_csv(&mut dense)?;
    let mut sparse = Vec::new();
    table.write_triplets_csv(&mut sparse)?;
    write_all(
        out_dir,
        vec![
            Artifact::new(TABLE_DENSE, dense),
            Artifact::new(TABLE_SPARSE, sparse),
            Artifact::json(TABLE_SUMMARY, &summary)?,
        ],
    )
}

// ---------------------------------------------------------------------------
// ca
// ---------------------------------------------------------------------------

fn matrix_csv(ids: &[String], matrix: &nalgebra::DMatrix<f64>) -> Result<Vec<u8>> {
    let mut buffer = Vec::new();
    ca::write_matrix_csv(ids, matrix, &mut buffer)?;
    Ok(buffer)
}

fn scatter_csv(
    ids: &[String],
    coords: &nalgebra::DMatrix<f64>,
    contributions: &nalgebra::DMatrix<f64>,
    axes: [usize; 2],
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "x", "y", "ctr"])?;
    let (a, b) = (axes[0] - 1, axes[1] - 1);
    for (i, id) in ids.iter().enumerate() {
        let ctr = contributions[(i, a)].max(contributions[(i, b)]);
        w.write_record([
            id.as_str(),
            &format!("{}", coords[(i, a)]),
            &format!("{}", coords[(i, b)]),
            &format!("{ctr}"),
        ])?;
    }
    Ok(w.into_inner()?)
}

fn scatter_svg(
    title: &str,
    halves: &[HalfAxisContributors],
    ids: &[String],
    coords: &nalgebra::DMatrix<f64>,
    axes: [usize; 2],
) -> String {
    // plot the points salient on either axis of the plane, labeled
    let mut salient: Vec<&str> = halves
        .iter()
        .flat_map(|h| h.points.iter().map(|p| p.id.as_str()))
        .collect();
    salient.sort_unstable();
    salient.dedup();
    let (a, b) = (axes[0] - 1, axes[1] - 1);
    let points: Vec<(String, f64, f64)> = ids
        .iter()
        .enumerate()
        .filter(|(_, id)| salient.binary_search(&id.as_str()).is_ok())
        .map(|(i, id)| (id.clone(), coords[(i, a)], coords[(i, b)]))
        .collect();
    svg::scatter_plot(
        title,
        &format!("axis {}", axes[0]),
        &format!("axis {}", axes[1]),
        &points,
    )
}

pub fn stage_ca(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let table = ContingencyTable::read_triplets_csv(&require(out_dir, TABLE_SPARSE, "table")?)?;
    let model = ca::fit(&table)?;
    if model.k() == 0 {
        bail!("the table has no factor structure (independence); nothing to analyze");
    }
    let diag = diagnostics(&model)?;

    let mut artifacts = vec![
        Artifact::json(MODEL, &model.summary())?,
        Artifact::new(ROW_PRINCIPAL, matrix_csv(&model.row_ids, &model.row_principal)?),
        Artifact::new(COL_PRINCIPAL, matrix_csv(&model.col_ids, &model.col_principal)?),
        Artifact::new(
            ROW_CONTRIBUTIONS,
            matrix_csv(&model.row_ids, &diag.row_contributions)?,
        ),
        Artifact::new(
            COL_CONTRIBUTIONS,
            matrix_csv(&model.col_ids, &diag.col_contributions)?,
        ),
        Artifact::new(ROW_COS2, matrix_csv(&model.row_ids, &diag.row_cos2)?),
        Artifact::new(COL_COS2, matrix_csv(&model.col_ids, &diag.col_cos2)?),
    ];

    let axes = config.report_axes;
    if model.k() >= axes[0].max(axes[1]) {
        artifacts.push(Artifact::new(
            SCATTER_ROWS_CSV,
            scatter_csv(&model.row_ids, &model.row_principal, &diag.row_contributions, axes)?,
        ));
        artifacts.push(Artifact::new(
            SCATTER_COLS_CSV,
            scatter_csv(&model.col_ids, &model.col_principal, &diag.col_contributions, axes)?,
        ));
        let row_halves =
            top_contributors(&model, Domain::Rows, &axes, config.row_multiplier)?;
        let col_halves =
            top_contributors(&model, Domain::Columns, &axes, config.col_multiplier)?;
        artifacts.push(Artifact::text(
            SCATTER_ROWS_SVG,
            scatter_svg(
                &format!("units, axes {}x{}", axes[0], axes[1]),
                &row_halves,
                &model.row_ids,
                &model.row_principal,
                axes,
            ),
        ));
        artifacts.push(Artifact::text(
            SCATTER_COLS_SVG,
            scatter_svg(
                &format!("words, axes {}x{}", axes[0], axes[1]),
                &col_halves,
                &model.col_ids,
                &model.col_principal,
                axes,
            ),
        ));
    }
    write_all(out_dir, artifacts)
}

// ---------------------------------------------------------------------------
// cluster / segment
// ---------------------------------------------------------------------------

fn feature_points(config: &PipelineConfig, out_dir: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let name = match config.clustering.feature {
        Feature::Coordinates => ROW_PRINCIPAL,
        Feature::Cos2 => ROW_COS2,
    };
    let (ids, matrix) = ca::read_matrix_csv(&require(out_dir, name, "ca")?)?;
    let points = (0..matrix.nrows())
        .map(|i| (0..matrix.ncols()).map(|k| matrix[(i, k)]).collect())
        .collect();
    Ok((ids, points))
}

pub fn stage_cluster(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let (ids, points) = feature_points(config, out_dir)?;
    let dendrogram = constrained_cluster(&points)?;
    let mut artifacts = vec![
        Artifact::json(DENDROGRAM_JSON, &dendrogram)?,
        Artifact::text(DENDROGRAM_TXT, dendrogram.outline(&ids)),
    ];
    if let Some(cut) = config.clustering.cut {
        let labels = match cut {
            Cut::Clusters(k) => dendrogram.cut_k(k)?,
            Cut::Height(h) => dendrogram.cut_height(h)?,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "cluster"])?;
        for (id, label) in ids.iter().zip(&labels) {
            w.write_record([id.as_str(), &label.to_string()])?;
        }
        artifacts.push(Artifact::new(PARTITION, w.into_inner()?));
    }
    write_all(out_dir, artifacts)
}

#[derive(Serialize)]
struct SegmentStageSummary {
    segments: usize,
    singleton_segments: usize,
    non_singleton_segments: usize,
    words_before: usize,
    words_after_drop: Option<usize>,
}

pub fn stage_segment(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let Some(seed) = config.clustering.seed else {
        bail!("clustering.seed is required to segment (set it in the config or pass --seed)");
    };
    let (ids, points) = feature_points(config, out_dir)?;
    let segmentation = segment(&points, config.clustering.alpha, config.clustering.n_perm, seed)?;

    let mut csv_bytes = Vec::new();
    segmentation.write_csv(&ids, &mut csv_bytes)?;
    let mut artifacts = vec![
        Artifact::json(SEGMENTS_JSON, &segmentation)?,
        Artifact::new(SEGMENTS_CSV, csv_bytes),
    ];

    let singletons = segmentation
        .segments
        .iter()
        .filter(|(first, last)| first == last)
        .count();
    let table = ContingencyTable::read_triplets_csv(&require(out_dir, TABLE_SPARSE, "table")?)?;
    let mut summary = SegmentStageSummary {
        segments: segmentation.segments.len(),
        singleton_segments: singletons,
        non_singleton_segments: segmentation.segments.len() - singletons,
        words_before: table.n_cols(),
        words_after_drop: None,
    };
    if config.clustering.drop_singletons {
        let (kept, segment_table) = drop_singleton_segments(&segmentation, &table)?;
        summary.words_after_drop = Some(segment_table.n_cols());
        let mut kept_csv = Vec::new();
        kept.write_csv(&ids, &mut kept_csv)?;
        let mut seg_table_csv = Vec::new();
        segment_table.write_triplets_csv(&mut seg_table_csv)?;
        artifacts.push(Artifact::json(SEGMENTS_NS_JSON, &kept)?);
        artifacts.push(Artifact::new(SEGMENTS_NS_CSV, kept_csv));
        artifacts.push(Artifact::new(SEGMENT_TABLE, seg_table_csv));
    }
    artifacts.push(Artifact::json(SEGMENT_SUMMARY, &summary)?);
    write_all(out_dir, artifacts)
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

fn reload_model(out_dir: &Path) -> Result<CAModel> {
    let table = ContingencyTable::read_triplets_csv(&require(out_dir, TABLE_SPARSE, "table")?)?;
    let summary_text = fs::read_to_string(require(out_dir, MODEL, "ca")?)?;
    let summary: ModelSummary = serde_json::from_str(&summary_text).context("parse model.json")?;
    let (row_ids, row_principal) = ca::read_matrix_csv(&require(out_dir, ROW_PRINCIPAL, "ca")?)?;
    let (col_ids, col_principal) = ca::read_matrix_csv(&require(out_dir, COL_PRINCIPAL, "ca")?)?;
    Ok(CAModel::from_artifacts(
        &summary,
        row_ids,
        col_ids,
        row_principal,
        col_principal,
        table.row_masses(),
        table.col_masses(),
    )?)
}

#[derive(Serialize)]
struct ClosestSegmentReport {
    term: String,
    #[serde(flatten)]
    closest: ClosestSegment,
}

pub fn stage_track(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if config.terms.is_empty() && config.dyads.is_empty() {
        return write_all(out_dir, Vec::new());
    }
    let model = reload_model(out_dir)?;

    let mut series: Vec<TrackSeries> = Vec::new();
    for term in &config.terms {
        series.push(term_distances(&model, term)?);
    }
    for (subject, partner) in &config.dyads {
        series.push(dyad_series(
            &model,
            &DyadSpec {
                subject: subject.clone(),
                partner: partner.clone(),
            },
        )?);
    }

    let mut artifacts = Vec::new();
    let mut csv_bytes = Vec::new();
    write_series_csv(&series, &mut csv_bytes)?;
    artifacts.push(Artifact::new(TRACK_CSV, csv_bytes));
    let chart_series: Vec<(String, Vec<f64>)> = series
        .iter()
        .map(|s| (s.label.clone(), s.distances()))
        .collect();
    artifacts.push(Artifact::text(
        TRACK_SVG,
        svg::line_chart("term and dyad distances by unit", &model.row_ids, &chart_series),
    ));

    if config.clustering.mode == Mode::Segment && !config.terms.is_empty() {
        let name = if config.clustering.drop_singletons {
            SEGMENTS_NS_JSON
        } else {
            SEGMENTS_JSON
        };
        let seg_text = fs::read_to_string(require(out_dir, name, "segment")?)?;
        let segmentation: Segmentation =
            serde_json::from_str(&seg_text).context("parse segmentation json")?;
        let table =
            ContingencyTable::read_triplets_csv(&require(out_dir, TABLE_SPARSE, "table")?)?;

        let mut seg_series = Vec::new();
        let mut closest = Vec::new();
        for term in &config.terms {
            let track = term_segment_distances(&model, term, &segmentation, &table)?;
            closest.push(ClosestSegmentReport {
                term: term.clone(),
                closest: track.closest,
            });
            seg_series.push(track.series);
        }
        let mut seg_csv = Vec::new();
        write_series_csv(&seg_series, &mut seg_csv)?;
        artifacts.push(Artifact::new(TRACK_SEGMENTS_CSV, seg_csv));
        let labels: Vec<String> = (1..=segmentation.segments.len())
            .map(|i| format!("s{i}"))
            .collect();
        let chart: Vec<(String, Vec<f64>)> = seg_series
            .iter()
            .map(|s| (s.label.clone(), s.distances()))
            .collect();
        artifacts.push(Artifact::text(
            TRACK_SEGMENTS_SVG,
            svg::line_chart("term distances by segment", &labels, &chart),
        ));
        artifacts.push(Artifact::json(CLOSEST_SEGMENTS, &closest)?);
    }
    write_all(out_dir, artifacts)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn format_halves(out: &mut String, caption: &str, halves: &[HalfAxisContributors]) {
    for half in halves {
        let side = if half.positive_side { "positive" } else { "negative" };
        out.push_str(&format!("  {caption}, axis {} {side}:\n", half.axis));
        if half.points.is_empty() {
            out.push_str("    (none)\n");
        }
        for p in &half.points {
            out.push_str(&format!(
                "    {:<24} ctr {:.4}  coord {:+.4}\n",
                p.id, p.contribution, p.coordinate
            ));
        }
    }
}

pub fn stage_report(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let table = ContingencyTable::read_triplets_csv(&require(out_dir, TABLE_SPARSE, "table")?)?;
    let model = reload_model(out_dir)?;
    let describe = table.describe();

    let mut text = String::new();
    text.push_str(&format!(
        "table: {} units x {} words, {} nonzeros ({:.2}% occupancy), max count {} ({} x {})\n",
        describe.rows,
        describe.cols,
        describe.nonzeros,
        100.0 * describe.density,
        describe.max_count,
        describe.max_row_id,
        describe.max_col_id
    ));
    text.push_str(&format!(
        "factor space: {} axes, total inertia {:.6}\n",
        model.k(),
        model.total_inertia
    ));
    let shares = model.inertia_shares();
    for (k, share) in shares.iter().enumerate().take(10) {
        text.push_str(&format!(
            "  axis {}: eigenvalue {:.6}, {:.2}% of inertia\n",
            k + 1,
            model.eigenvalues[k],
            100.0 * share
        ));
    }

    let axes = config.report_axes;
    if model.k() >= axes[0].max(axes[1]) {
        text.push_str(&format!(
            "\nsalient points (units > {:.1}x mean contribution, words > {:.1}x):\n",
            config.row_multiplier, config.col_multiplier
        ));
        let rows = top_contributors(&model, Domain::Rows, &axes, config.row_multiplier)?;
        let cols = top_contributors(&model, Domain::Columns, &axes, config.col_multiplier)?;
        format_halves(&mut text, "units", &rows);
        format_halves(&mut text, "words", &cols);
    }
    write_all(out_dir, vec![Artifact::text(REPORT, text)])
}

// ---------------------------------------------------------------------------
// run + manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Executes ingest → table → ca → (cluster|segment) → track → report, writes
/// the manifest, and returns it. On any stage error the files written by this
/// run are removed.
pub fn run(config: &PipelineConfig, out_dir: &Path) -> Result<Manifest> {
    let mut written: Vec<PathBuf> = Vec::new();
    let mut execute = || -> Result<()> {
        written.extend(stage_ingest(config, out_dir).context("stage ingest")?);
        written.extend(stage_table(config, out_dir).context("stage table")?);
        written.extend(stage_ca(config, out_dir).context("stage ca")?);
        match config.clustering.mode {
            Mode::Dendrogram => {
                written.extend(stage_cluster(config, out_dir).context("stage cluster")?)
            }
            Mode::Segment => {
                written.extend(stage_segment(config, out_dir).context("stage segment")?)
            }
        }
        written.extend(stage_track(config, out_dir).context("stage track")?);
        written.extend(stage_report(config, out_dir).context("stage report")?);
        Ok(())
    };
    if let Err(error) = execute() {
        for path in &written {
            let _ = fs::remove_file(path);
        }
        return Err(error);
    }

    let mut entries = Vec::with_capacity(written.len());
    for path in &written {
        let bytes = fs::read(path)?;
        let relative = path
            .strip_prefix(out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        entries.push(ManifestEntry {
            path: relative,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest { artifacts: entries };
    let mut manifest_text = serde_json::to_string_pretty(&manifest)?;
    manifest_text.push('\n');
    fs::write(out_dir.join(MANIFEST), manifest_text)
        .with_context(|| format!("cannot write {}", out_dir.join(MANIFEST).display()))?;
    Ok(manifest)
}

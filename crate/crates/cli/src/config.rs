//! Pipeline configuration: a TOML file mapping onto the library's rule and
//! spec types, validated up front (referenced paths must exist).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use narmap_core::contingency::FilterSpec;
use narmap_core::ingest::{load_stoplist, NormalizationRules, UnitAggregationMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceFormat {
    DialogueCsv,
    PlainText,
    TweetStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Coordinates,
    Cos2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dendrogram,
    Segment,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    path: PathBuf,
    format: SourceFormat,
    #[serde(default = "default_true")]
    include_speaker_tokens: bool,
}

fn default_true() -> bool {
    true
}

/// Overrides on top of the format's default normalization rules.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizationSection {
    lowercase: Option<bool>,
    punctuation_to_blank: Option<bool>,
    apostrophe_to_blank: Option<bool>,
    mention_prefix_replacement: Option<String>,
    hashtag_prefix_replacement: Option<String>,
    ampersand_word: Option<String>,
    strip_numerics: Option<bool>,
    stoplist: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsSection {
    block_size: Option<usize>,
    aggregation_map: Option<PathBuf>,
    /// Aggregate table rows after vocabulary filtering instead of merging
    /// units at ingest, so thresholds apply to the finer units.
    aggregate_after_filter: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSection {
    min_units_per_word: usize,
    min_total_per_word: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusteringSection {
    feature: Option<Feature>,
    mode: Option<Mode>,
    alpha: Option<f64>,
    n_perm: Option<usize>,
    seed: Option<u64>,
    cut_k: Option<usize>,
    cut_height: Option<f64>,
    drop_singletons: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackingSection {
    #[serde(default)]
    terms: Vec<String>,
    #[serde(default)]
    dyads: Vec<[String; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportSection {
    axes: Option<[usize; 2]>,
    row_multiplier: Option<f64>,
    col_multiplier: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    source: SourceSection,
    #[serde(default)]
    normalization: NormalizationSection,
    #[serde(default)]
    units: UnitsSection,
    filter: FilterSection,
    #[serde(default)]
    clustering: ClusteringSection,
    #[serde(default)]
    tracking: TrackingSection,
    #[serde(default)]
    report: ReportSection,
    output: OutputSection,
}

/// What a dendrogram gets cut at, when configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cut {
    Clusters(usize),
    Height(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    pub feature: Feature,
    pub mode: Mode,
    pub alpha: f64,
    pub n_perm: usize,
    pub seed: Option<u64>,
    pub cut: Option<Cut>,
    pub drop_singletons: bool,
}

/// Validated, path-resolved configuration ready for the pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub source_path: PathBuf,
    pub format: SourceFormat,
    pub include_speaker_tokens: bool,
    pub rules: NormalizationRules,
    pub block_size: usize,
    pub aggregation_map: Option<UnitAggregationMap>,
    pub aggregate_after_filter: bool,
    pub filter: FilterSpec,
    pub clustering: ClusteringConfig,
    pub terms: Vec<String>,
    pub dyads: Vec<(String, String)>,
    pub report_axes: [usize; 2],
    pub row_multiplier: f64,
    pub col_multiplier: f64,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    /// Loads and validates a TOML config. Input paths are resolved relative
    /// to the config file's directory; the output directory relative to the
    /// working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let raw: RawConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &Path| -> PathBuf {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let source_path = resolve(&raw.source.path);
        if !source_path.exists() {
            bail!("source path {} does not exist", source_path.display());
        }

        let mut rules = match raw.source.format {
            SourceFormat::TweetStream => NormalizationRules::tweet_defaults(),
            _ => NormalizationRules::default(),
        };
        let n = raw.normalization;
        if let Some(v) = n.lowercase {
            rules.lowercase = v;
        }
        if let Some(v) = n.punctuation_to_blank {
            rules.punctuation_to_blank = v;
        }
        if let Some(v) = n.apostrophe_to_blank {
            rules.apostrophe_to_blank = v;
        }
        if let Some(v) = n.mention_prefix_replacement {
            rules.mention_prefix_replacement = v;
        }
        if let Some(v) = n.hashtag_prefix_replacement {
            rules.hashtag_prefix_replacement = v;
        }
        if let Some(v) = n.ampersand_word {
            rules.ampersand_word = v;
        }
        if let Some(v) = n.strip_numerics {
            rules.strip_numerics = v;
        }
        if let Some(stoplist_path) = n.stoplist {
            let stoplist_path = resolve(&stoplist_path);
            if !stoplist_path.exists() {
                bail!("stoplist {} does not exist", stoplist_path.display());
            }
            let words: BTreeSet<String> = load_stoplist(&stoplist_path, &rules)
                .with_context(|| format!("cannot load stoplist {}", stoplist_path.display()))?;
            rules.stoplist = Some(words);
        }
        rules.validate().context("normalization rules invalid")?;

        let aggregation_map = match raw.units.aggregation_map {
            Some(map_path) => {
                let map_path = resolve(&map_path);
                if !map_path.exists() {
                    bail!("aggregation map {} does not exist", map_path.display());
                }
                Some(
                    UnitAggregationMap::from_csv_path(&map_path).with_context(|| {
                        format!("cannot load aggregation map {}", map_path.display())
                    })?,
                )
            }
            None => None,
        };
        let block_size = raw.units.block_size.unwrap_or(20);
        if block_size == 0 {
            bail!("units.block_size must be at least 1");
        }
        let aggregate_after_filter = raw.units.aggregate_after_filter.unwrap_or(false);
        if aggregate_after_filter && aggregation_map.is_none() {
            bail!("units.aggregate_after_filter requires units.aggregation_map");
        }

        if raw.filter.min_units_per_word < 1 || raw.filter.min_total_per_word < 1 {
            bail!("filter thresholds must both be at least 1");
        }
        let filter = FilterSpec::new(raw.filter.min_units_per_word, raw.filter.min_total_per_word);

        let c = raw.clustering;
        let mode = c.mode.unwrap_or(Mode::Dendrogram);
        let alpha = c.alpha.unwrap_or(0.10);
        if !(0.0..1.0).contains(&alpha) {
            bail!("clustering.alpha must be in [0, 1)");
        }
        let n_perm = c.n_perm.unwrap_or(999);
        if mode == Mode::Segment && c.seed.is_none() {
            bail!("clustering.seed is mandatory when mode = \"segment\"");
        }
        let cut = match (c.cut_k, c.cut_height) {
            (Some(_), Some(_)) => bail!("set at most one of clustering.cut_k and cut_height"),
            (Some(k), None) => Some(Cut::Clusters(k)),
            (None, Some(h)) => {
                if h < 0.0 {
                    bail!("clustering.cut_height must be >= 0");
                }
                Some(Cut::Height(h))
            }
            (None, None) => None,
        };
        let clustering = ClusteringConfig {
            feature: c.feature.unwrap_or(Feature::Coordinates),
            mode,
            alpha,
            n_perm,
            seed: c.seed,
            cut,
            drop_singletons: c.drop_singletons.unwrap_or(true),
        };

        let report_axes = raw.report.axes.unwrap_or([1, 2]);
        if report_axes[0] == 0 || report_axes[1] == 0 || report_axes[0] == report_axes[1] {
            bail!("report.axes must be two distinct 1-based axis numbers");
        }

        Ok(PipelineConfig {
            source_path,
            format: raw.source.format,
            include_speaker_tokens: raw.source.include_speaker_tokens,
            rules,
            block_size,
            aggregation_map,
            aggregate_after_filter,
            filter,
            clustering,
            terms: raw.tracking.terms,
            dyads: raw
                .tracking
                .dyads
                .into_iter()
                .map(|[f, m]| (f, m))
                .collect(),
            report_axes,
            row_multiplier: raw.report.row_multiplier.unwrap_or(3.0),
            col_multiplier: raw.report.col_multiplier.unwrap_or(3.0),
            out_dir: raw.output.dir,
        })
    }
}

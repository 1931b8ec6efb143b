//! Conversion of raw narrative sources into ordered sequences of tokenized
//! text units.
//!
//! A [`TextUnit`] is one element of the narrative in chronological order: a
//! dialogue utterance, a block of lines, a tweet, or an aggregate of several
//! of these (a scene). Tokenization is rule-driven ([`NormalizationRules`]):
//! tokens are maximal runs of Unicode-alphabetic characters after all
//! substitutions, so accented vocabularies survive unchanged.

mod load;

pub use load::{
    load_dialogue_csv, load_dialogue_csv_with, load_plain_text_blocks, load_tweets,
    read_units_jsonl, write_units_jsonl, DialogueOptions,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule set applied before tokenization.
///
/// Application order: lowercasing, HTML-ampersand substitution, mention and
/// hashtag prefix substitution, apostrophe blanking, then a single character
/// pass that keeps alphabetic runs. Non-alphabetic characters either separate
/// tokens (blanked) or vanish without separating (deleted), depending on the
/// flags. Applying the rules to already-normalized text is a no-op.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRules {
    /// Fold everything to lowercase before any other substitution.
    pub lowercase: bool,
    /// `true`: punctuation separates tokens; `false`: punctuation is deleted
    /// and adjacent letter runs join.
    pub punctuation_to_blank: bool,
    /// Replace `'` and `’` with a blank even when punctuation is deleted.
    pub apostrophe_to_blank: bool,
    /// Substituted for a leading `@`, fusing with the following word.
    pub mention_prefix_replacement: String,
    /// Substituted for a leading `#`, fusing with the following word.
    pub hashtag_prefix_replacement: String,
    /// Substituted for the HTML entity `&amp;` (language-dependent).
    pub ampersand_word: String,
    /// `true`: numeric characters are deleted; `false`: they separate tokens.
    pub strip_numerics: bool,
    /// Tokens removed after tokenization, when present.
    pub stoplist: Option<BTreeSet<String>>,
}

impl Default for NormalizationRules {
    fn default() -> Self {
        NormalizationRules {
            lowercase: true,
            punctuation_to_blank: true,
            apostrophe_to_blank: true,
            mention_prefix_replacement: "xyz".to_string(),
            hashtag_prefix_replacement: "zyx".to_string(),
            ampersand_word: "and".to_string(),
            strip_numerics: false,
            stoplist: None,
        }
    }
}

impl NormalizationRules {
    /// Defaults for tweet streams: punctuation and numerics deleted rather
    /// than blanked, apostrophes blanked.
    pub fn tweet_defaults() -> Self {
        NormalizationRules {
            punctuation_to_blank: false,
            strip_numerics: true,
            ..NormalizationRules::default()
        }
    }

    /// Checks the replacement-string invariant: alphabetic characters only.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("mention_prefix_replacement", &self.mention_prefix_replacement),
            ("hashtag_prefix_replacement", &self.hashtag_prefix_replacement),
            ("ampersand_word", &self.ampersand_word),
        ] {
            if !value.chars().all(char::is_alphabetic) {
                return Err(Error::Rules(format!(
                    "{name} {value:?} must contain only alphabetic characters"
                )));
            }
        }
        Ok(())
    }
}

/// One ordered narrative element: an utterance, a line block, a tweet, or an
/// aggregate of such.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextUnit {
    /// Ordinal position in the sequence, 0-based and consecutive.
    pub index: usize,
    /// Source identifier: utterance number, block number, tweet timestamp,
    /// or group id after aggregation.
    pub id: String,
    pub speaker: Option<String>,
    /// Nonempty alphabetic tokens, in text order.
    pub tokens: Vec<String>,
    /// The original text before normalization.
    pub raw: String,
}

/// Tokenizes `raw` under `rules`.
///
/// Tokens are maximal runs of alphabetic characters after all substitutions;
/// stoplist words are removed when a stoplist is configured. Empty input
/// yields an empty list.
pub fn normalize(raw: &str, rules: &NormalizationRules) -> Vec<String> {
    let mut text = if rules.lowercase {
        raw.to_lowercase()
    } else {
        raw.to_string()
    };

    let fold = |s: &str| {
        if rules.lowercase {
            s.to_lowercase()
        } else {
            s.to_string()
        }
    };
    // Entity first: "&" and ";" would otherwise be eaten as punctuation,
    // leaving a spurious "amp" token.
    if text.contains("&amp;") {
        text = text.replace("&amp;", &format!(" {} ", fold(&rules.ampersand_word)));
    }
    if text.contains('@') {
        text = text.replace('@', &fold(&rules.mention_prefix_replacement));
    }
    if text.contains('#') {
        text = text.replace('#', &fold(&rules.hashtag_prefix_replacement));
    }
    if rules.apostrophe_to_blank {
        text = text.replace(['\'', '\u{2019}'], " ");
    }

    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphabetic() {
            current.push(ch);
        } else if ch.is_numeric() {
            if !rules.strip_numerics && !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if rules.punctuation_to_blank && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }

    if let Some(stoplist) = &rules.stoplist {
        tokens.retain(|t| !stoplist.contains(t));
    }
    tokens
}

/// Reads a stoplist file (one entry per line) and normalizes each entry with
/// the same rules that will tokenize the corpus, so entries always match.
pub fn load_stoplist(
    path: &std::path::Path,
    rules: &NormalizationRules,
) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let plain = NormalizationRules {
        stoplist: None,
        ..rules.clone()
    };
    let mut set = BTreeSet::new();
    for line in text.lines() {
        for token in normalize(line, &plain) {
            set.insert(token);
        }
    }
    Ok(set)
}

/// One contiguous group of unit indices (inclusive) to be merged into a
/// single unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitGroup {
    pub id: String,
    pub first: usize,
    pub last: usize,
}

/// An ordered list of contiguous, non-overlapping groups tiling the unit
/// sequence from its first to its last index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitAggregationMap {
    pub groups: Vec<UnitGroup>,
}

impl UnitAggregationMap {
    pub fn new(groups: Vec<UnitGroup>) -> Self {
        UnitAggregationMap { groups }
    }

    /// Loads a CSV of `group_id,first,last` rows (0-based inclusive indices,
    /// optional header).
    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut groups = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Aggregation(format!(
                    "{}: line {} has {} fields, expected group_id,first,last",
                    path.display(),
                    lineno + 1,
                    fields.len()
                )));
            }
            let (first, last) = match (fields[1].parse(), fields[2].parse()) {
                (Ok(f), Ok(l)) => (f, l),
                _ if lineno == 0 => continue, // header
                _ => {
                    return Err(Error::Aggregation(format!(
                        "{}: line {}: cannot parse indices {:?},{:?}",
                        path.display(),
                        lineno + 1,
                        fields[1],
                        fields[2]
                    )))
                }
            };
            groups.push(UnitGroup {
                id: fields[0].to_string(),
                first,
                last,
            });
        }
        Ok(UnitAggregationMap { groups })
    }

    fn validate(&self, n_units: usize) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Aggregation("aggregation map has no groups".into()));
        }
        let mut expected = 0usize;
        for g in &self.groups {
            if g.first != expected {
                return Err(Error::Aggregation(format!(
                    "group {:?} starts at {} but the previous group ends at {}; \
                     groups must tile the sequence without gaps or overlaps",
                    g.id,
                    g.first,
                    expected as isize - 1
                )));
            }
            if g.last < g.first {
                return Err(Error::Aggregation(format!(
                    "group {:?} has last {} < first {}",
                    g.id, g.last, g.first
                )));
            }
            expected = g.last + 1;
        }
        if expected != n_units {
            return Err(Error::Aggregation(format!(
                "groups cover indices 0..={} but the sequence has {} units",
                expected as isize - 1,
                n_units
            )));
        }
        Ok(())
    }
}

/// Merges consecutive units per the map: one output unit per group, tokens
/// concatenated in order, id taken from the group. The speaker is kept only
/// when uniform across the group.
pub fn aggregate(units: &[TextUnit], map: &UnitAggregationMap) -> Result<Vec<TextUnit>> {
    map.validate(units.len())?;
    let mut out = Vec::with_capacity(map.groups.len());
    for (index, g) in map.groups.iter().enumerate() {
        let members = &units[g.first..=g.last];
        let tokens: Vec<String> = members.iter().flat_map(|u| u.tokens.clone()).collect();
        let raw = members
            .iter()
            .map(|u| u.raw.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let speaker = match members.first().map(|u| u.speaker.clone()) {
            Some(s) if members.iter().all(|u| u.speaker == s) => s,
            _ => None,
        };
        out.push(TextUnit {
            index,
            id: g.id.clone(),
            speaker,
            tokens,
            raw,
        });
    }
    Ok(out)
}

/// Per-speaker 0/1 indicator vectors over the unit sequence, one vector per
/// observed speaker name in sorted order. These are the supplementary column
/// attributes projected into an already-fitted factor space.
pub fn speaker_indicator_columns(units: &[TextUnit]) -> Vec<(String, Vec<f64>)> {
    let names: BTreeSet<&str> = units
        .iter()
        .filter_map(|u| u.speaker.as_deref())
        .collect();
    names
        .into_iter()
        .map(|name| {
            let column = units
                .iter()
                .map(|u| f64::from(u.speaker.as_deref() == Some(name)))
                .collect();
            (name.to_string(), column)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> NormalizationRules {
        NormalizationRules::default()
    }

    #[test]
    fn tokenizes_dialogue_line() {
        // the contraction splits: "here's" -> "here", "s"
        assert_eq!(
            normalize("Here's looking at you, kid.", &rules()),
            vec!["here", "s", "looking", "at", "you", "kid"]
        );
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert_eq!(normalize("", &rules()), Vec::<String>::new());
        assert_eq!(normalize("  \t\n", &rules()), Vec::<String>::new());
    }

    #[test]
    fn tweet_rules_substitutions() {
        let mut r = NormalizationRules::tweet_defaults();
        r.stoplist = Some(["more".to_string()].into());
        assert_eq!(
            normalize("@nytimes #news &amp; more", &r),
            vec!["xyznytimes", "zyxnews", "and"]
        );
    }

    #[test]
    fn punctuation_deleted_joins_runs_blanked_separates() {
        let blank = rules();
        assert_eq!(normalize("U.S. deal", &blank), vec!["u", "s", "deal"]);
        let deleted = NormalizationRules {
            apostrophe_to_blank: false,
            ..NormalizationRules::tweet_defaults()
        };
        assert_eq!(normalize("U.S. deal", &deleted), vec!["us", "deal"]);
        assert_eq!(normalize("don't", &deleted), vec!["dont"]);
    }

    #[test]
    fn numerics_stripped_or_separating() {
        let keep = rules();
        assert_eq!(normalize("ab12cd 9", &keep), vec!["ab", "cd"]);
        let strip = NormalizationRules {
            strip_numerics: true,
            ..rules()
        };
        assert_eq!(normalize("ab12cd 9", &strip), vec!["abcd"]);
    }

    #[test]
    fn unicode_words_survive() {
        assert_eq!(
            normalize("Colère, espoirs; Süddeutsche!", &rules()),
            vec!["colère", "espoirs", "süddeutsche"]
        );
    }

    #[test]
    fn dialogue_dashes_vanish() {
        assert_eq!(normalize("-- Hello, Ilsa.", &rules()), vec!["hello", "ilsa"]);
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut r = NormalizationRules::tweet_defaults();
        r.stoplist = Some(["the".to_string(), "and".to_string()].into());
        for raw in [
            "Here's looking at you, kid.",
            "@nytimes #news &amp; more 42 things!",
            "L'été à Paris -- c'était beau.",
            "",
            "ALL CAPS &AMP; MORE @X",
        ] {
            let once = normalize(raw, &r);
            let twice = normalize(&once.join(" "), &r);
            assert_eq!(once, twice, "not idempotent on {raw:?}");
        }
    }

    #[test]
    fn rejects_nonalphabetic_replacement() {
        let bad = NormalizationRules {
            mention_prefix_replacement: "x1".to_string(),
            ..rules()
        };
        assert!(bad.validate().is_err());
        assert!(rules().validate().is_ok());
    }

    fn unit(index: usize, tokens: &[&str]) -> TextUnit {
        TextUnit {
            index,
            id: (index + 1).to_string(),
            speaker: None,
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            raw: tokens.join(" "),
        }
    }

    #[test]
    fn aggregate_concatenates_member_tokens() {
        // 4-unit fixture grouped 2+2; unions verified by hand
        let units = vec![
            unit(0, &["a", "b"]),
            unit(1, &["b"]),
            unit(2, &["c"]),
            unit(3, &["a", "c", "c"]),
        ];
        let map = UnitAggregationMap::new(vec![
            UnitGroup {
                id: "g1".into(),
                first: 0,
                last: 1,
            },
            UnitGroup {
                id: "g2".into(),
                first: 2,
                last: 3,
            },
        ]);
        let agg = aggregate(&units, &map).unwrap();
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].tokens, vec!["a", "b", "b"]);
        assert_eq!(agg[1].tokens, vec!["c", "a", "c", "c"]);
        assert_eq!(agg[0].id, "g1");
        assert_eq!((agg[0].index, agg[1].index), (0, 1));
    }

    #[test]
    fn aggregate_identity_map_preserves_tokens() {
        let units = vec![unit(0, &["a"]), unit(1, &["b", "c"])];
        let map = UnitAggregationMap::new(
            (0..2)
                .map(|i| UnitGroup {
                    id: format!("u{i}"),
                    first: i,
                    last: i,
                })
                .collect(),
        );
        let agg = aggregate(&units, &map).unwrap();
        for (a, u) in agg.iter().zip(&units) {
            assert_eq!(a.tokens, u.tokens);
        }
    }

    #[test]
    fn aggregate_conserves_token_count() {
        let units = vec![unit(0, &["a", "b"]), unit(1, &["c"]), unit(2, &["d", "e"])];
        let map = UnitAggregationMap::new(vec![
            UnitGroup {
                id: "g".into(),
                first: 0,
                last: 1,
            },
            UnitGroup {
                id: "h".into(),
                first: 2,
                last: 2,
            },
        ]);
        let agg = aggregate(&units, &map).unwrap();
        let before: usize = units.iter().map(|u| u.tokens.len()).sum();
        let after: usize = agg.iter().map(|u| u.tokens.len()).sum();
        assert_eq!(before, after);
    }

    #[test]
    fn aggregate_rejects_gaps_overlaps_and_overruns() {
        let units = vec![unit(0, &["a"]), unit(1, &["b"]), unit(2, &["c"])];
        let gap = UnitAggregationMap::new(vec![
            UnitGroup {
                id: "g".into(),
                first: 0,
                last: 0,
            },
            UnitGroup {
                id: "h".into(),
                first: 2,
                last: 2,
            },
        ]);
        assert!(aggregate(&units, &gap).is_err());
        let overlap = UnitAggregationMap::new(vec![
            UnitGroup {
                id: "g".into(),
                first: 0,
                last: 1,
            },
            UnitGroup {
                id: "h".into(),
                first: 1,
                last: 2,
            },
        ]);
        assert!(aggregate(&units, &overlap).is_err());
        let overrun = UnitAggregationMap::new(vec![UnitGroup {
            id: "g".into(),
            first: 0,
            last: 5,
        }]);
        assert!(aggregate(&units, &overrun).is_err());
    }

    #[test]
    fn speaker_indicators_are_sorted_zero_one_columns() {
        let mut units = vec![unit(0, &["a"]), unit(1, &["b"]), unit(2, &["c"])];
        units[0].speaker = Some("rick".into());
        units[1].speaker = Some("ilsa".into());
        units[2].speaker = Some("rick".into());
        let cols = speaker_indicator_columns(&units);
        assert_eq!(cols.len(), 2);
        assert_eq!(cols[0].0, "ilsa");
        assert_eq!(cols[0].1, vec![0.0, 1.0, 0.0]);
        assert_eq!(cols[1].0, "rick");
        assert_eq!(cols[1].1, vec![1.0, 0.0, 1.0]);
    }
}

//! File loaders: dialogue CSV, plain text in line blocks, tweet exports, and
//! the JSON-lines unit format used for stage handoff.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::{normalize, NormalizationRules, TextUnit};

/// Options for [`load_dialogue_csv_with`].
#[derive(Debug, Clone)]
pub struct DialogueOptions {
    /// Prepend the normalized speaker name to each utterance's token list,
    /// so the names take part in the word space alongside their use inside
    /// the dialogue text.
    pub include_speaker_token: bool,
}

impl Default for DialogueOptions {
    fn default() -> Self {
        DialogueOptions {
            include_speaker_token: true,
        }
    }
}

/// Loads a dialogue CSV of `sequence,name,expression` rows (optional header,
/// quoted fields allowed) with default options.
pub fn load_dialogue_csv(path: &Path, rules: &NormalizationRules) -> Result<Vec<TextUnit>> {
    load_dialogue_csv_with(path, rules, &DialogueOptions::default())
}

/// Loads a dialogue CSV, one [`TextUnit`] per row in sequence order.
///
/// Sequence numbers must be strictly increasing; malformed rows are reported
/// by line number.
pub fn load_dialogue_csv_with(
    path: &Path,
    rules: &NormalizationRules,
    options: &DialogueOptions,
) -> Result<Vec<TextUnit>> {
    rules.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;

    let mut units = Vec::new();
    let mut previous_seq: Option<i64> = None;
    for (row_index, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = row_index + 1;
        if record.len() != 3 {
            return Err(Error::Ingest(format!(
                "{}: row {line} has {} fields, expected sequence,name,expression",
                path.display(),
                record.len()
            )));
        }
        let seq_field = record[0].trim();
        let seq: i64 = match seq_field.parse() {
            Ok(v) => v,
            Err(_) if row_index == 0 => continue, // header row
            Err(_) => {
                return Err(Error::Ingest(format!(
                    "{}: row {line}: sequence number {seq_field:?} is not an integer",
                    path.display()
                )))
            }
        };
        if let Some(prev) = previous_seq {
            if seq <= prev {
                return Err(Error::Ingest(format!(
                    "{}: row {line}: sequence number {seq} follows {prev}; \
                     sequence must be strictly increasing",
                    path.display()
                )));
            }
        }
        previous_seq = Some(seq);

        let speaker = record[1].trim().to_string();
        let expression = record[2].to_string();
        let mut tokens = Vec::new();
        if options.include_speaker_token {
            tokens.extend(normalize(&speaker, rules));
        }
        tokens.extend(normalize(&expression, rules));
        units.push(TextUnit {
            index: units.len(),
            id: seq.to_string(),
            speaker: Some(speaker),
            tokens,
            raw: expression,
        });
    }
    if units.is_empty() {
        return Err(Error::Ingest(format!("{}: no units", path.display())));
    }
    Ok(units)
}

/// Splits a UTF-8 text file into consecutive blocks of `block_size` lines,
/// one [`TextUnit`] per block (the last block may be short).
pub fn load_plain_text_blocks(
    path: &Path,
    block_size: usize,
    rules: &NormalizationRules,
) -> Result<Vec<TextUnit>> {
    rules.validate()?;
    if block_size == 0 {
        return Err(Error::Ingest("block_size must be at least 1".into()));
    }
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        return Err(Error::Ingest(format!("{}: no units", path.display())));
    }
    let units = lines
        .chunks(block_size)
        .enumerate()
        .map(|(index, chunk)| {
            let raw = chunk.join("\n");
            TextUnit {
                index,
                id: (index + 1).to_string(),
                speaker: None,
                tokens: normalize(&raw, rules),
                raw,
            }
        })
        .collect();
    Ok(units)
}

#[derive(Deserialize)]
struct TweetRecord {
    timestamp: String,
    text: String,
}

/// Loads a tweet export with `(timestamp, text)` fields, as CSV or as JSON
/// lines (`.jsonl`/`.ndjson`). Newest-first exports are reversed so units
/// run chronologically; the timestamp becomes the unit id.
pub fn load_tweets(path: &Path, rules: &NormalizationRules) -> Result<Vec<TextUnit>> {
    rules.validate()?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let mut rows: Vec<(String, String)> = if ext == "jsonl" || ext == "ndjson" || ext == "json" {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: TweetRecord = serde_json::from_str(line).map_err(|e| {
                Error::Ingest(format!(
                    "{}: line {}: expected {{\"timestamp\", \"text\"}}: {e}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            rows.push((record.timestamp, record.text));
        }
        rows
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let mut rows = Vec::new();
        for (row_index, record) in reader.records().enumerate() {
            let record = record.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            if record.len() != 2 {
                return Err(Error::Ingest(format!(
                    "{}: row {} has {} fields, expected timestamp,text",
                    path.display(),
                    row_index + 1,
                    record.len()
                )));
            }
            if row_index == 0 && record[0].trim().eq_ignore_ascii_case("timestamp") {
                continue;
            }
            rows.push((record[0].trim().to_string(), record[1].to_string()));
        }
        rows
    };

    if rows.is_empty() {
        return Err(Error::Ingest(format!("{}: no units", path.display())));
    }

    // ISO-style timestamps order lexicographically; a newest-first export is
    // non-increasing without being constant.
    let non_increasing = rows.windows(2).all(|w| w[0].0 >= w[1].0);
    let non_decreasing = rows.windows(2).all(|w| w[0].0 <= w[1].0);
    if non_increasing && !non_decreasing {
        rows.reverse();
    }

    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(index, (timestamp, text))| TextUnit {
            index,
            id: timestamp,
            speaker: None,
            tokens: normalize(&text, rules),
            raw: text,
        })
        .collect())
}

/// Writes units as JSON lines, one unit per line.
pub fn write_units_jsonl<W: Write>(units: &[TextUnit], mut writer: W) -> Result<()> {
    for unit in units {
        let line = serde_json::to_string(unit)
            .map_err(|e| Error::Ingest(format!("cannot serialize unit {}: {e}", unit.index)))?;
        writeln!(writer, "{line}").map_err(|source| Error::Io {
            path: "<writer>".into(),
            source,
        })?;
    }
    Ok(())
}

/// Reads units back from a JSON-lines file, checking index consecutiveness.
pub fn read_units_jsonl(path: &Path) -> Result<Vec<TextUnit>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut units = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let unit: TextUnit = serde_json::from_str(line).map_err(|e| {
            Error::Ingest(format!("{}: line {}: {e}", path.display(), lineno + 1))
        })?;
        if unit.index != units.len() {
            return Err(Error::Ingest(format!(
                "{}: line {}: unit index {} out of order, expected {}",
                path.display(),
                lineno + 1,
                unit.index,
                units.len()
            )));
        }
        units.push(unit);
    }
    if units.is_empty() {
        return Err(Error::Ingest(format!("{}: no units", path.display())));
    }
    Ok(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(name: &str, contents: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let mut f = fs::File::create(dir.path().join(name)).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        dir
    }

    #[test]
    fn dialogue_csv_three_row_fixture() {
        // hand tokenization, speaker token included:
        //   1,Rick,"-- Hello, Ilsa."      -> rick hello ilsa
        //   2,Ilsa,"Hello, Rick."         -> ilsa hello rick
        //   5,Ilsa,"I wasn't sure."       -> ilsa i wasn t sure
        let dir = write_temp(
            "d.csv",
            "sequence,name,expression\n\
             1,Rick,\"-- Hello, Ilsa.\"\n\
             2,Ilsa,\"Hello, Rick.\"\n\
             5,Ilsa,\"I wasn't sure.\"\n",
        );
        let units =
            load_dialogue_csv(&dir.path().join("d.csv"), &NormalizationRules::default()).unwrap();
        assert_eq!(units.len(), 3);
        assert_eq!(units[0].speaker.as_deref(), Some("Rick"));
        assert_eq!(units[0].id, "1");
        assert_eq!(units[0].tokens, vec!["rick", "hello", "ilsa"]);
        assert_eq!(units[1].tokens, vec!["ilsa", "hello", "rick"]);
        assert_eq!(units[2].tokens, vec!["ilsa", "i", "wasn", "t", "sure"]);
        assert_eq!(units[2].index, 2);
    }

    #[test]
    fn dialogue_csv_without_speaker_token() {
        let dir = write_temp("d.csv", "1,Rick,\"-- Hello, Ilsa.\"\n");
        let units = load_dialogue_csv_with(
            &dir.path().join("d.csv"),
            &NormalizationRules::default(),
            &DialogueOptions {
                include_speaker_token: false,
            },
        )
        .unwrap();
        assert_eq!(units[0].tokens, vec!["hello", "ilsa"]);
    }

    #[test]
    fn dialogue_csv_rejects_empty_and_malformed() {
        let dir = write_temp("e.csv", "");
        let err = load_dialogue_csv(&dir.path().join("e.csv"), &NormalizationRules::default())
            .unwrap_err();
        assert!(err.to_string().contains("no units"), "{err}");

        let dir = write_temp("m.csv", "1,Rick\n");
        let err = load_dialogue_csv(&dir.path().join("m.csv"), &NormalizationRules::default())
            .unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");

        let dir = write_temp("s.csv", "2,Rick,hi\n1,Ilsa,hello\n");
        let err = load_dialogue_csv(&dir.path().join("s.csv"), &NormalizationRules::default())
            .unwrap_err();
        assert!(err.to_string().contains("strictly increasing"), "{err}");
    }

    #[test]
    fn plain_text_blocks_of_twenty() {
        // 45 lines at block_size 20 -> 3 units of 20/20/5 lines
        let contents = (1..=45)
            .map(|i| format!("line {i} word{i}"))
            .collect::<Vec<_>>()
            .join("\n");
        let dir = write_temp("t.txt", &contents);
        let units = load_plain_text_blocks(
            &dir.path().join("t.txt"),
            20,
            &NormalizationRules::default(),
        )
        .unwrap();
        assert_eq!(units.len(), 3);
        assert_eq!(units[0].raw.lines().count(), 20);
        assert_eq!(units[1].raw.lines().count(), 20);
        assert_eq!(units[2].raw.lines().count(), 5);
        assert_eq!(units[2].id, "3");
        // "line 1 word1" -> [line, word]; digits separate, not stripped
        assert_eq!(units[0].tokens[0], "line");
        assert_eq!(units[0].tokens[1], "word");
    }

    #[test]
    fn single_line_is_one_block() {
        let dir = write_temp("one.txt", "just one line");
        let units = load_plain_text_blocks(
            &dir.path().join("one.txt"),
            20,
            &NormalizationRules::default(),
        )
        .unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].tokens, vec!["just", "one", "line"]);
    }

    #[test]
    fn empty_text_errors() {
        let dir = write_temp("z.txt", "");
        assert!(load_plain_text_blocks(
            &dir.path().join("z.txt"),
            20,
            &NormalizationRules::default()
        )
        .is_err());
    }

    #[test]
    fn tweets_csv_newest_first_reversed() {
        let dir = write_temp(
            "tw.csv",
            "timestamp,text\n\
             2014-10-17 19:02:00,\"latest news\"\n\
             2014-10-17 18:00:00,\"middle item\"\n\
             2014-10-16 09:00:00,\"oldest story\"\n",
        );
        let units =
            load_tweets(&dir.path().join("tw.csv"), &NormalizationRules::tweet_defaults()).unwrap();
        assert_eq!(units.len(), 3);
        assert_eq!(units[0].id, "2014-10-16 09:00:00");
        assert_eq!(units[0].tokens, vec!["oldest", "story"]);
        assert_eq!(units[2].id, "2014-10-17 19:02:00");
        assert!(units.windows(2).all(|w| w[0].index + 1 == w[1].index));
    }

    #[test]
    fn tweets_jsonl_chronological_kept() {
        let dir = write_temp(
            "tw.jsonl",
            "{\"timestamp\":\"2014-10-16 09:00:00\",\"text\":\"first\"}\n\
             {\"timestamp\":\"2014-10-17 10:00:00\",\"text\":\"second\"}\n",
        );
        let units = load_tweets(
            &dir.path().join("tw.jsonl"),
            &NormalizationRules::tweet_defaults(),
        )
        .unwrap();
        assert_eq!(units[0].tokens, vec!["first"]);
        assert_eq!(units[1].tokens, vec!["second"]);
    }

    #[test]
    fn units_jsonl_round_trip() {
        let dir = write_temp("d.csv", "1,Rick,hello there\n2,Ilsa,well hello\n");
        let units =
            load_dialogue_csv(&dir.path().join("d.csv"), &NormalizationRules::default()).unwrap();
        let mut buffer = Vec::new();
        write_units_jsonl(&units, &mut buffer).unwrap();
        let out = dir.path().join("units.jsonl");
        fs::write(&out, &buffer).unwrap();
        assert_eq!(read_units_jsonl(&out).unwrap(), units);
    }
}

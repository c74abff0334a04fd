//! Emotion lexicon parsing, the opposite-emotion model, and construction of
//! the positive (word, emotion) and negative (word, opposite emotion)
//! constraint sets over vocabulary rows.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Scalar, VectorSpace};

/// The eight basic emotions of the wheel model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Trust,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Anger,
        Emotion::Anticipation,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Trust,
    ];

    /// Lowercase name, which is also the token used as the emotion's anchor
    /// vector.
    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Anticipation => "anticipation",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Trust => "trust",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownEmotion(s.to_owned()))
    }
}

/// Total opposite map over the eight emotions. Always an involution without
/// fixed points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmotionModel {
    opposite: [Emotion; 8],
}

impl Default for EmotionModel {
    fn default() -> Self {
        Self::plutchik()
    }
}

impl EmotionModel {
    /// Opposite petals of the wheel: joy/sadness, anger/fear, trust/disgust,
    /// anticipation/surprise.
    pub fn plutchik() -> Self {
        Self::from_pairs(&[
            (Emotion::Joy, Emotion::Sadness),
            (Emotion::Anger, Emotion::Fear),
            (Emotion::Trust, Emotion::Disgust),
            (Emotion::Anticipation, Emotion::Surprise),
        ])
        .expect("built-in opposite pairs are valid")
    }

    /// Builds the model from four disjoint opposite pairs covering all eight
    /// emotions.
    pub fn from_pairs(pairs: &[(Emotion, Emotion)]) -> Result<Self> {
        let mut opposite: [Option<Emotion>; 8] = [None; 8];
        for &(a, b) in pairs {
            if a == b {
                return Err(Error::Validation(format!(
                    "{} cannot be its own opposite",
                    a
                )));
            }
            for (x, y) in [(a, b), (b, a)] {
                if let Some(prev) = opposite[x.index()] {
                    return Err(Error::Validation(format!(
                        "{} is paired with both {} and {}",
                        x, prev, y
                    )));
                }
                opposite[x.index()] = Some(y);
            }
        }
        let mut out = [Emotion::Anger; 8];
        for e in Emotion::ALL {
            out[e.index()] = opposite[e.index()]
                .ok_or_else(|| Error::Validation(format!("no opposite given for {}", e)))?;
        }
        Ok(EmotionModel { opposite: out })
    }

    /// Reads an override file: a JSON list of opposite pairs such as
    /// `[["joy", "sadness"], ["anger", "fear"], ...]`.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: Vec<(String, String)> = serde_json::from_str(text)?;
        let pairs = raw
            .iter()
            .map(|(a, b)| Ok((a.parse()?, b.parse()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(&pairs)
    }

    pub fn emotions(&self) -> &'static [Emotion; 8] {
        &Emotion::ALL
    }

    pub fn opposite(&self, e: Emotion) -> Emotion {
        self.opposite[e.index()]
    }

    pub fn opposite_of(&self, name: &str) -> Result<Emotion> {
        Ok(self.opposite(name.parse()?))
    }

    /// The four unordered opposite pairs, each listed once.
    pub fn pairs(&self) -> Vec<(Emotion, Emotion)> {
        Emotion::ALL
            .iter()
            .filter(|&&e| e < self.opposite(e))
            .map(|&e| (e, self.opposite(e)))
            .collect()
    }
}

/// One row of the word-level lexicon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconRecord {
    pub word: String,
    pub emotion: Emotion,
    pub flag: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LexiconEntries {
    pub records: Vec<LexiconRecord>,
    /// `positive`/`negative` rows that were filtered out.
    pub sentiment_rows: usize,
}

impl LexiconEntries {
    pub fn flagged(&self) -> impl Iterator<Item = &LexiconRecord> {
        self.records.iter().filter(|r| r.flag == 1)
    }
}

/// Parses a word-level lexicon file of `word<TAB>category<TAB>0|1` lines.
pub fn parse_nrc_lexicon(path: impl AsRef<Path>) -> Result<LexiconEntries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_nrc_lexicon(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_nrc_lexicon<R: BufRead>(reader: R) -> Result<LexiconEntries> {
    let mut entries = LexiconEntries::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [word, category, flag] = fields[..] else {
            return Err(Error::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        let word = word.trim();
        if word.is_empty() {
            return Err(Error::parse(line_no, "empty word"));
        }
        let flag = match flag.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("flag must be 0 or 1, found '{}'", other),
                ))
            }
        };
        match category.trim() {
            "positive" | "negative" => entries.sentiment_rows += 1,
            other => {
                let emotion = other
                    .parse::<Emotion>()
                    .map_err(|_| Error::parse(line_no, format!("unknown category '{}'", other)))?;
                entries.records.push(LexiconRecord {
                    word: word.to_owned(),
                    emotion,
                    flag,
                });
            }
        }
    }
    Ok(entries)
}

/// A `(word row, emotion anchor row)` constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub word: usize,
    pub emotion: usize,
}

impl Pair {
    pub fn new(word: usize, emotion: usize) -> Self {
        Pair { word, emotion }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintStats {
    pub records: usize,
    pub flagged_records: usize,
    pub zero_flag_records: usize,
    /// Flagged records whose word is not in the vocabulary.
    pub oov_records: usize,
    /// Distinct flagged words not in the vocabulary.
    pub oov_words: usize,
    /// Flagged records skipped because the emotion token itself is missing.
    pub missing_anchor_records: usize,
    /// Positive pairs with no negative counterpart because the opposite
    /// emotion token is missing.
    pub missing_opposite_pairs: usize,
    pub duplicate_records: usize,
    pub positive_pairs: usize,
    pub negative_pairs: usize,
    pub missing_anchors: Vec<Emotion>,
}

/// Positive set S and negative set O, both sorted by `(word, emotion)` and
/// free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub positive: Vec<Pair>,
    pub negative: Vec<Pair>,
    pub stats: ConstraintStats,
}

impl ConstraintSet {
    pub fn new(mut positive: Vec<Pair>, mut negative: Vec<Pair>) -> Self {
        positive.sort_unstable();
        positive.dedup();
        negative.sort_unstable();
        negative.dedup();
        let stats = ConstraintStats {
            positive_pairs: positive.len(),
            negative_pairs: negative.len(),
            ..Default::default()
        };
        ConstraintSet {
            positive,
            negative,
            stats,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    /// Distinct emotion-side rows.
    pub fn anchor_rows(&self) -> BTreeSet<usize> {
        self.positive
            .iter()
            .chain(&self.negative)
            .map(|p| p.emotion)
            .collect()
    }

    /// Every row referenced by any pair, ascending.
    pub fn rows(&self) -> Vec<usize> {
        let rows: BTreeSet<usize> = self
            .positive
            .iter()
            .chain(&self.negative)
            .flat_map(|p| [p.word, p.emotion])
            .collect();
        rows.into_iter().collect()
    }

    pub fn max_row(&self) -> Option<usize> {
        self.positive
            .iter()
            .chain(&self.negative)
            .map(|p| p.word.max(p.emotion))
            .max()
    }
}

/// Turns flagged lexicon records into row-index constraints against `space`.
///
/// A record `(w, e, 1)` yields `(w, e)` in the positive set when both tokens
/// are in the vocabulary, and `(w, opposite(e))` in the negative set when the
/// opposite token is present too. Zero-flag and out-of-vocabulary records
/// only feed the statistics.
pub fn build_constraints<T: Scalar>(
    lexicon: &LexiconEntries,
    model: &EmotionModel,
    space: &VectorSpace<T>,
) -> Result<ConstraintSet> {
    if space.is_empty() {
        return Err(Error::Validation(
            "cannot build constraints against an empty space".into(),
        ));
    }

    let anchor = |e: Emotion| space.row_of(e.name());
    let mut stats = ConstraintStats {
        records: lexicon.records.len(),
        missing_anchors: Emotion::ALL
            .into_iter()
            .filter(|&e| anchor(e).is_none())
            .collect(),
        ..Default::default()
    };

    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut seen = HashSet::new();
    let mut oov_words = HashSet::new();

    for record in &lexicon.records {
        if record.flag == 0 {
            stats.zero_flag_records += 1;
            continue;
        }
        stats.flagged_records += 1;
        let Some(word) = space.row_of(&record.word) else {
            stats.oov_records += 1;
            oov_words.insert(record.word.as_str());
            continue;
        };
        let Some(emotion) = anchor(record.emotion) else {
            stats.missing_anchor_records += 1;
            continue;
        };
        if !seen.insert((word, emotion)) {
            stats.duplicate_records += 1;
            continue;
        }
        positive.push(Pair::new(word, emotion));
        match anchor(model.opposite(record.emotion)) {
            Some(opposite) => negative.push(Pair::new(word, opposite)),
            None => stats.missing_opposite_pairs += 1,
        }
    }
    stats.oov_words = oov_words.len();

    if positive.is_empty() {
        return Err(Error::EmptyConstraintSet);
    }
    positive.sort_unstable();
    negative.sort_unstable();
    stats.positive_pairs = positive.len();
    stats.negative_pairs = negative.len();

    Ok(ConstraintSet {
        positive,
        negative,
        stats,
    })
}

//! Emotional similarity metrics over a six-category, three-level emotion
//! taxonomy: mean pairwise similarity inside each primary category, and mean
//! cross similarity between opposite categories.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cosine_similarity;
use crate::space::{Scalar, VectorSpace};

pub const PRIMARY_CATEGORIES: [&str; 6] = ["Liking", "Joy", "Surprise", "Anger", "Sadness", "Fear"];

/// Opposite category pairs scored by default.
pub const OPPOSITE_PAIRS: [(&str, &str); 2] = [("Joy", "Sadness"), ("Anger", "Fear")];

type Secondary = (&'static str, &'static [&'static str]);

/// Primary -> (secondary label, tertiary words), surface forms as published.
const SHAVER: [(&str, &[Secondary]); 6] = [
    (
        "Liking",
        &[
            (
                "Affection",
                &[
                    "Adoration",
                    "Fondness",
                    "Liking",
                    "Attractiveness",
                    "Caring",
                    "Tenderness",
                    "Compassion",
                    "Sentimentality",
                ],
            ),
            ("Lust/Sexual desire", &["Desire", "Passion", "Infatuation"]),
            ("Longing", &["Longing"]),
        ],
    ),
    (
        "Joy",
        &[
            (
                "Cheerfulness",
                &[
                    "Amusement",
                    "Bliss",
                    "Gaiety",
                    "Glee",
                    "Jolliness",
                    "Joviality",
                    "Joy",
                    "Delight",
                    "Enjoyment",
                    "Gladness",
                    "Happiness",
                    "Jubilation",
                    "Elation",
                    "Satisfaction",
                    "Ecstasy",
                    "Euphoria",
                ],
            ),
            (
                "Zest",
                &["Enthusiasm", "Zeal", "Excitement", "Thrill", "Exhilaration"],
            ),
            ("Contentment", &["Pleasure"]),
            ("Pride", &["Triumph"]),
            ("Optimism", &["Eagerness", "Hope"]),
            ("Enthrallment", &["Enthrallment", "Rapture"]),
            ("Relief", &["Relief"]),
        ],
    ),
    ("Surprise", &[("Surprise", &["Amazement", "Astonishment"])]),
    (
        "Anger",
        &[
            (
                "Irritability",
                &[
                    "Aggravation",
                    "Agitation",
                    "Annoyance",
                    "Grouchy",
                    "Grumpy",
                    "Crosspatch",
                ],
            ),
            ("Exasperation", &["Frustration"]),
            (
                "Rage",
                &[
                    "Anger",
                    "Outrage",
                    "Fury",
                    "Wrath",
                    "Hostility",
                    "Ferocity",
                    "Bitter",
                    "Hatred",
                    "Scorn",
                    "Spite",
                    "Vengefulness",
                    "Dislike",
                    "Resentment",
                ],
            ),
            ("Disgust", &["Revulsion", "Contempt", "Loathing"]),
            ("Envy", &["Jealousy"]),
            ("Torment", &["Torment"]),
        ],
    ),
    (
        "Sadness",
        &[
            ("Suffering", &["Agony", "Anguish", "Hurt"]),
            (
                "Sadness",
                &[
                    "Depression",
                    "Despair",
                    "Gloom",
                    "Glumness",
                    "Unhappy",
                    "Grief",
                    "Sorrow",
                    "Woe",
                    "Misery",
                    "Melancholy",
                ],
            ),
            ("Disappointment", &["Dismay", "Displeasure"]),
            ("Shame", &["Guilt", "Regret", "Remorse"]),
            (
                "Neglect",
                &[
                    "Alienation",
                    "Defeatism",
                    "Dejection",
                    "Embarrassment",
                    "Homesickness",
                    "Humiliation",
                    "Insecurity",
                    "Insult",
                    "Isolation",
                    "Loneliness",
                    "Rejection",
                ],
            ),
            ("Sympathy", &["Pity", "Mono no aware", "Sympathy"]),
        ],
    ),
    (
        "Fear",
        &[
            (
                "Horror",
                &[
                    "Alarm",
                    "Shock",
                    "Fear",
                    "Fright",
                    "Horror",
                    "Terror",
                    "Panic",
                    "Hysteria",
                    "Mortification",
                ],
            ),
            (
                "Nervousness",
                &[
                    "Anxiety",
                    "Suspense",
                    "Uneasiness",
                    "Apprehension (fear)",
                    "Worry",
                    "Distress",
                    "Dread",
                ],
            ),
        ],
    ),
];

#[derive(Clone, Copy, Debug)]
pub struct TaxonomyOptions {
    /// Lowercase member words so they match lowercased vocabularies.
    pub lowercase: bool,
}

impl Default for TaxonomyOptions {
    fn default() -> Self {
        TaxonomyOptions { lowercase: true }
    }
}

/// Primary category name -> member words (secondary and tertiary levels
/// merged), in a fixed order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionTaxonomy {
    pub categories: IndexMap<String, Vec<String>>,
    pub source: String,
    /// Raw entries that were not usable as single tokens.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
}

/// Splits a raw entry into usable single-token words. Parenthesized glosses
/// are stripped, `/` separates alternatives, and anything still containing
/// whitespace is multiword and rejected.
fn normalize_entry(raw: &str, options: &TaxonomyOptions) -> (Vec<String>, Vec<String>) {
    let without_gloss = match raw.find('(') {
        Some(open) => &raw[..open],
        None => raw,
    };
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for part in without_gloss.split('/') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if part.contains(char::is_whitespace) {
            dropped.push(part.to_owned());
        } else if options.lowercase {
            kept.push(part.to_lowercase());
        } else {
            kept.push(part.to_owned());
        }
    }
    (kept, dropped)
}

impl EmotionTaxonomy {
    /// The built-in six-category table.
    pub fn builtin(options: &TaxonomyOptions) -> Self {
        let raw = SHAVER.iter().map(|(primary, secondaries)| {
            let words = secondaries
                .iter()
                .flat_map(|(label, tertiary)| {
                    std::iter::once(*label).chain(tertiary.iter().copied())
                })
                .map(str::to_owned)
                .collect::<Vec<_>>();
            (primary.to_string(), words)
        });
        Self::from_raw(raw, "shaver-three-level (built-in)".into(), options)
            .expect("built-in taxonomy is valid")
    }

    /// Reads `{ "categories": { "<Primary>": ["word", ...] }, "source": "<label>" }`.
    pub fn from_json_file(path: impl AsRef<Path>, options: &TaxonomyOptions) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, options)
    }

    pub fn from_json_str(text: &str, options: &TaxonomyOptions) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Wrapped {
                categories: IndexMap<String, Vec<String>>,
                #[serde(default)]
                source: Option<String>,
            },
            Plain(IndexMap<String, Vec<String>>),
        }
        let raw: Raw = serde_json::from_str(text)
            .map_err(|_| Error::Validation("malformed taxonomy JSON: expected an object mapping each category to a list of words".into()))?;
        let (categories, source) = match raw {
            Raw::Wrapped { categories, source } => (categories, source),
            Raw::Plain(categories) => (categories, None),
        };
        Self::from_raw(
            categories,
            source.unwrap_or_else(|| "custom".into()),
            options,
        )
    }

    fn from_raw(
        raw: impl IntoIterator<Item = (String, Vec<String>)>,
        source: String,
        options: &TaxonomyOptions,
    ) -> Result<Self> {
        let mut categories = IndexMap::new();
        let mut dropped = Vec::new();
        for (name, entries) in raw {
            let mut words: Vec<String> = Vec::new();
            for entry in &entries {
                let (kept, rejected) = normalize_entry(entry, options);
                dropped.extend(rejected);
                for w in kept {
                    if !words.contains(&w) {
                        words.push(w);
                    }
                }
            }
            if categories.insert(name.clone(), words).is_some() {
                return Err(Error::Validation(format!(
                    "category '{}' listed twice",
                    name
                )));
            }
        }
        let taxonomy = EmotionTaxonomy {
            categories,
            source,
            dropped,
        };
        taxonomy.validate()?;
        Ok(taxonomy)
    }

    pub fn validate(&self) -> Result<()> {
        let names: Vec<&str> = self.categories.keys().map(String::as_str).collect();
        let mut expected = PRIMARY_CATEGORIES.to_vec();
        let mut got = names.clone();
        expected.sort_unstable();
        got.sort_unstable();
        if got != expected {
            return Err(Error::Validation(format!(
                "taxonomy must have exactly the categories {:?}, found {:?}",
                PRIMARY_CATEGORIES, names
            )));
        }
        let mut owner: IndexMap<&str, &str> = IndexMap::new();
        for (category, words) in &self.categories {
            for w in words {
                if let Some(other) = owner.insert(w, category) {
                    if other != category {
                        return Err(Error::Validation(format!(
                            "word '{}' belongs to both {} and {}",
                            w, other, category
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn words(&self, category: &str) -> Option<&[String]> {
        self.categories.get(category).map(Vec::as_slice)
    }

    pub fn member_count(&self) -> usize {
        self.categories.values().map(Vec::len).sum()
    }
}

/// Mean of a bag of values, independent of the order they were produced in.
fn order_free_mean(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len() as f64;
    Some(values.into_iter().sum::<f64>() / n)
}

fn split_coverage<'a, T: Scalar>(
    space: &'a VectorSpace<T>,
    words: &'a [String],
) -> (Vec<(&'a str, &'a [T])>, Vec<String>) {
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for w in words {
        match space.lookup(w) {
            Some(v) => found.push((w.as_str(), v)),
            None => missing.push(w.clone()),
        }
    }
    found.sort_unstable_by(|a, b| a.0.cmp(b.0));
    (found, missing)
}

fn within_pairs<T: Scalar>(found: &[(&str, &[T])]) -> Vec<f64> {
    let mut sims = Vec::with_capacity(found.len() * found.len().saturating_sub(1) / 2);
    for (i, (_, a)) in found.iter().enumerate() {
        for (_, b) in &found[i + 1..] {
            sims.push(cosine_similarity(a, b));
        }
    }
    sims
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub size: usize,
    pub found: usize,
    pub missing: Vec<String>,
    pub pairs: usize,
    /// `None` when fewer than two member words are in the vocabulary.
    pub mean_similarity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InCategorySimilarity {
    pub categories: IndexMap<String, CategoryScore>,
    /// Mean over all within-category pairs pooled across categories.
    pub pair_weighted: Option<f64>,
    /// Mean of the per-category means over scored categories.
    pub category_weighted: Option<f64>,
}

/// Mean pairwise cosine similarity of the in-vocabulary words of each
/// category, plus pooled and per-category grand averages.
pub fn in_category_similarity<T: Scalar>(
    space: &VectorSpace<T>,
    taxonomy: &EmotionTaxonomy,
) -> InCategorySimilarity {
    let mut categories = IndexMap::new();
    let mut pooled = Vec::new();
    let mut means = Vec::new();
    for (name, words) in &taxonomy.categories {
        let (found, missing) = split_coverage(space, words);
        let sims = within_pairs(&found);
        let mean = if found.len() >= 2 {
            order_free_mean(sims.clone())
        } else {
            None
        };
        if let Some(m) = mean {
            means.push(m);
        }
        categories.insert(
            name.clone(),
            CategoryScore {
                size: words.len(),
                found: found.len(),
                missing,
                pairs: sims.len(),
                mean_similarity: mean,
            },
        );
        pooled.extend(sims);
    }
    InCategorySimilarity {
        categories,
        pair_weighted: order_free_mean(pooled),
        category_weighted: order_free_mean(means),
    }
}

/// Mean cosine similarity over the cross product of the in-vocabulary words
/// of categories `a` and `b`.
pub fn opposite_similarity<T: Scalar>(
    space: &VectorSpace<T>,
    taxonomy: &EmotionTaxonomy,
    a: &str,
    b: &str,
) -> Result<f64> {
    let side = |name: &str| -> Result<Vec<(&str, &[T])>> {
        let words = taxonomy
            .words(name)
            .ok_or_else(|| Error::Validation(format!("unknown category '{}'", name)))?;
        let (found, _) = split_coverage(space, words);
        if found.is_empty() {
            return Err(Error::Validation(format!(
                "category '{}' has no words in the vocabulary",
                name
            )));
        }
        Ok(found)
    };
    let left = side(a)?;
    let right = side(b)?;
    let sims = left
        .iter()
        .flat_map(|(_, x)| right.iter().map(move |(_, y)| cosine_similarity(x, y)))
        .collect();
    Ok(order_free_mean(sims).expect("both sides are non-empty"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub found: usize,
    pub missing: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub taxonomy_source: String,
    /// Which taxonomy levels make up the category word sets.
    pub word_levels: String,
    pub in_category: InCategorySimilarity,
    /// Keyed `"<A> vs. <B>"`.
    pub opposite: IndexMap<String, f64>,
    pub coverage: IndexMap<String, Coverage>,
    pub dropped_entries: Vec<String>,
}

pub fn pair_label(a: &str, b: &str) -> String {
    format!("{} vs. {}", a, b)
}

pub fn evaluate_space<T: Scalar>(
    space: &VectorSpace<T>,
    taxonomy: &EmotionTaxonomy,
    model: &str,
) -> Result<EvaluationReport> {
    let in_category = in_category_similarity(space, taxonomy);
    let mut opposite = IndexMap::new();
    for (a, b) in OPPOSITE_PAIRS {
        opposite.insert(
            pair_label(a, b),
            opposite_similarity(space, taxonomy, a, b)?,
        );
    }
    let coverage = in_category
        .categories
        .iter()
        .map(|(name, score)| {
            (
                name.clone(),
                Coverage {
                    found: score.found,
                    missing: score.missing.len(),
                },
            )
        })
        .collect();
    Ok(EvaluationReport {
        model: model.to_owned(),
        taxonomy_source: taxonomy.source.clone(),
        word_levels: "secondary+tertiary union".into(),
        in_category,
        opposite,
        coverage,
        dropped_entries: taxonomy.dropped.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub before: f64,
    pub after: f64,
    pub delta: f64,
    /// `100 * (after - before) / |before|`; absent when `before` is 0.
    pub relative_change_pct: Option<f64>,
}

impl Delta {
    pub fn new(before: f64, after: f64) -> Self {
        Delta {
            before,
            after,
            delta: after - before,
            relative_change_pct: relative_change_pct(before, after),
        }
    }
}

pub fn relative_change_pct(before: f64, after: f64) -> Option<f64> {
    (before != 0.0).then(|| 100.0 * (after - before) / before.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub in_category_pair_weighted: Option<Delta>,
    pub in_category_category_weighted: Option<Delta>,
    pub per_category: IndexMap<String, Option<Delta>>,
    pub opposite: IndexMap<String, Delta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub before: EvaluationReport,
    pub after: EvaluationReport,
    pub deltas: DeltaSummary,
}

fn opt_delta(before: Option<f64>, after: Option<f64>) -> Option<Delta> {
    Some(Delta::new(before?, after?))
}

/// Scores both spaces and reports per-metric changes.
pub fn evaluate<T: Scalar, U: Scalar>(
    before: &VectorSpace<T>,
    after: &VectorSpace<U>,
    taxonomy: &EmotionTaxonomy,
    model: &str,
) -> Result<Evaluation> {
    let b = evaluate_space(before, taxonomy, model)?;
    let a = evaluate_space(after, taxonomy, model)?;
    let per_category = b
        .in_category
        .categories
        .iter()
        .map(|(name, score)| {
            let after = a.in_category.categories[name].mean_similarity;
            (name.clone(), opt_delta(score.mean_similarity, after))
        })
        .collect();
    let opposite = b
        .opposite
        .iter()
        .map(|(name, &v)| (name.clone(), Delta::new(v, a.opposite[name])))
        .collect();
    let deltas = DeltaSummary {
        in_category_pair_weighted: opt_delta(
            b.in_category.pair_weighted,
            a.in_category.pair_weighted,
        ),
        in_category_category_weighted: opt_delta(
            b.in_category.category_weighted,
            a.in_category.category_weighted,
        ),
        per_category,
        opposite,
    };
    Ok(Evaluation {
        before: b,
        after: a,
        deltas,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{:.4}", x))
        .unwrap_or_else(|| "n/a".into())
}

impl Evaluation {
    /// Rows of `(metric, before, after)` in table order.
    pub fn rows(&self) -> Vec<(String, Option<f64>, Option<f64>)> {
        let mut rows = Vec::new();
        for (name, d) in &self.deltas.opposite {
            rows.push((name.clone(), Some(d.before), Some(d.after)));
        }
        rows.push((
            "In-category (pair-weighted)".into(),
            self.before.in_category.pair_weighted,
            self.after.in_category.pair_weighted,
        ));
        rows.push((
            "In-category (category-weighted)".into(),
            self.before.in_category.category_weighted,
            self.after.in_category.category_weighted,
        ));
        for (name, score) in &self.before.in_category.categories {
            rows.push((
                format!("In-category {}", name),
                score.mean_similarity,
                self.after.in_category.categories[name].mean_similarity,
            ));
        }
        rows
    }

    /// Plain-text before/after table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model: {}", self.before.model);
        let _ = writeln!(
            out,
            "{:<34} {:>9} {:>9} {:>9} {:>9}",
            "metric", "before", "after", "delta", "change%"
        );
        for (name, before, after) in self.rows() {
            let delta = opt_delta(before, after);
            let _ = writeln!(
                out,
                "{:<34} {:>9} {:>9} {:>9} {:>9}",
                name,
                cell(before),
                cell(after),
                cell(delta.map(|d| d.delta)),
                delta
                    .and_then(|d| d.relative_change_pct)
                    .map(|p| format!("{:+.1}", p))
                    .unwrap_or_else(|| "n/a".into()),
            );
        }
        out
    }

    /// CSV with one `model,metric,before,after` line per metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,metric,before,after\n");
        for (name, before, after) in self.rows() {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.before.model,
                name,
                fmt(before),
                fmt(after)
            );
        }
        out
    }
}

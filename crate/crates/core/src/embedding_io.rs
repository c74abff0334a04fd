//! Reading and writing embeddings in the word2vec and GloVe text formats.
//!
//! Both formats store one record per line, `<token> <v1> ... <vd>`. The
//! word2vec variant prefixes the body with an `<n> <d>` header line. Values
//! are written with the shortest decimal representation that parses back to
//! the same floating point number, so a load/save cycle is bit-stable.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Scalar, VectorSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    /// Body preceded by an `n d` header line.
    Word2VecText,
    /// No header.
    GloveText,
}

impl fmt::Display for EmbeddingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingFormat::Word2VecText => f.write_str("word2vec-text"),
            EmbeddingFormat::GloveText => f.write_str("glove-text"),
        }
    }
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word2vec" | "word2vec-text" | "w2v" => Ok(EmbeddingFormat::Word2VecText),
            "glove" | "glove-text" => Ok(EmbeddingFormat::GloveText),
            other => Err(Error::Config(format!(
                "unknown embedding format '{}' (expected glove or word2vec)",
                other
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Lowercase tokens while reading. Rows whose lowercased token collides
    /// with an earlier row are treated as duplicates.
    pub lowercase: bool,
}

/// Bookkeeping produced while reading an embedding file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub records: usize,
    pub duplicates_skipped: usize,
    pub blank_lines_skipped: usize,
    /// First few skipped duplicates as `(line, token)`.
    pub duplicate_examples: Vec<(usize, String)>,
}

const DUPLICATE_EXAMPLES: usize = 10;

pub fn load_embeddings(
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
    options: &LoadOptions,
) -> Result<(VectorSpace, LoadStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), format, options).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_embeddings<R: BufRead>(
    reader: R,
    format: EmbeddingFormat,
    options: &LoadOptions,
) -> Result<(VectorSpace, LoadStats)> {
    let mut stats = LoadStats::default();
    let mut header: Option<(usize, usize)> = None;
    let mut dim: Option<usize> = None;
    let mut tokens: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut data: Vec<f32> = Vec::new();
    let mut expect_header = format == EmbeddingFormat::Word2VecText;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let mut fields = line.split_ascii_whitespace();
        let Some(first) = fields.next() else {
            stats.blank_lines_skipped += 1;
            continue;
        };

        if expect_header {
            expect_header = false;
            let n = first.parse::<usize>();
            let d = fields.next().map(str::parse::<usize>);
            match (n, d, fields.next()) {
                (Ok(n), Some(Ok(d)), None) if d > 0 => {
                    header = Some((n, d));
                    dim = Some(d);
                    continue;
                }
                _ => {
                    return Err(Error::parse(
                        line_no,
                        "expected word2vec header '<count> <dimension>'",
                    ))
                }
            }
        }

        let token = if options.lowercase {
            first.to_lowercase()
        } else {
            first.to_owned()
        };

        let start = data.len();
        for field in fields {
            let value: f32 = field.parse().map_err(|_| {
                Error::parse(
                    line_no,
                    format!("invalid number '{}' for token '{}'", field, first),
                )
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    line_no,
                    format!("non-finite value '{}' for token '{}'", field, first),
                ));
            }
            data.push(value);
        }
        let found = data.len() - start;
        match dim {
            None if found == 0 => {
                return Err(Error::parse(
                    line_no,
                    format!("token '{}' has no values", first),
                ))
            }
            None => dim = Some(found),
            Some(d) if d != found => {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "expected {} values for token '{}', found {}",
                        d, first, found
                    ),
                ))
            }
            Some(_) => {}
        }
        stats.records += 1;

        if seen.contains(&token) {
            data.truncate(start);
            stats.duplicates_skipped += 1;
            if stats.duplicate_examples.len() < DUPLICATE_EXAMPLES {
                stats.duplicate_examples.push((line_no, token));
            }
            continue;
        }
        seen.insert(token.clone());
        tokens.push(token);
    }

    if let Some((n, _)) = header {
        if n != stats.records {
            return Err(Error::Format(format!(
                "word2vec header announces {} vectors but the file holds {}",
                n, stats.records
            )));
        }
    }
    if tokens.is_empty() {
        return Err(Error::Format("embedding file contains no vectors".into()));
    }
    if stats.duplicates_skipped > 0 {
        log::warn!(
            "skipped {} duplicate token(s), keeping first occurrences",
            stats.duplicates_skipped
        );
    }

    let dim = dim.expect("at least one vector was read");
    let matrix = Array2::from_shape_vec((tokens.len(), dim), data)
        .expect("row lengths are checked while reading");
    Ok((VectorSpace::new(tokens, matrix)?, stats))
}

pub fn save_embeddings<T: Scalar>(
    space: &VectorSpace<T>,
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
) -> Result<()> {
    let path = path.as_ref();
    if space.is_empty() {
        return Err(Error::Validation(
            "refusing to write an empty vocabulary".into(),
        ));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_embeddings(space, &mut writer, format)
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(path, e))
}

/// Serializes rows in vocabulary order. `Display` for floats yields the
/// shortest representation that round-trips.
pub fn write_embeddings<T: Scalar, W: Write>(
    space: &VectorSpace<T>,
    writer: &mut W,
    format: EmbeddingFormat,
) -> std::io::Result<()> {
    if format == EmbeddingFormat::Word2VecText {
        writeln!(writer, "{} {}", space.len(), space.dim())?;
    }
    for (row, token) in space.tokens().iter().enumerate() {
        writer.write_all(token.as_bytes())?;
        for v in space.vector(row) {
            write!(writer, " {}", v)?;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, format: EmbeddingFormat) -> Result<(VectorSpace, LoadStats)> {
        read_embeddings(text.as_bytes(), format, &LoadOptions::default())
    }

    fn write(space: &VectorSpace, format: EmbeddingFormat) -> String {
        let mut out = Vec::new();
        write_embeddings(space, &mut out, format).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn reads_glove_text() {
        let (space, stats) = read("a 1 0\nb 0 1\nc 1 1", EmbeddingFormat::GloveText).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.dim(), 2);
        assert_eq!(space.row_of("b"), Some(1));
        assert_eq!(space.vector(2), &[1.0, 1.0]);
        assert_eq!(stats.records, 3);
    }

    #[test]
    fn reads_word2vec_text() {
        let (space, _) = read("2 3\nx 1 2 3\ny 4 5 6\n", EmbeddingFormat::Word2VecText).unwrap();
        assert_eq!(space.tokens(), &["x", "y"]);
        assert_eq!(space.vector(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn dimension_mismatch_names_line() {
        let err = read("a 1 0\nb 0 1 2\n", EmbeddingFormat::GloveText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        let err = read("2 2\na 1 0\nb 0 1 2\n", EmbeddingFormat::Word2VecText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_non_finite_and_garbage() {
        for bad in ["a 1 nan\n", "a inf 0\n", "a 1 -inf\n"] {
            let err = read(bad, EmbeddingFormat::GloveText).unwrap_err();
            assert!(matches!(err, Error::Parse { line: 1, .. }), "{bad}: {err}");
        }
        let err = read("a 1 x\n", EmbeddingFormat::GloveText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read("a\n", EmbeddingFormat::GloveText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(
            read("", EmbeddingFormat::GloveText),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read("\n\n", EmbeddingFormat::GloveText),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read("0 5\n", EmbeddingFormat::Word2VecText),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn header_must_match_body() {
        let err = read("3 2\na 1 0\nb 0 1\n", EmbeddingFormat::Word2VecText).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        let err = read("a 1 0\n", EmbeddingFormat::Word2VecText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read("1 3\na 1 0\n", EmbeddingFormat::Word2VecText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn duplicates_keep_first() {
        let (space, stats) = read("a 1 0\nb 0 1\na 5 5\n", EmbeddingFormat::GloveText).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.lookup("a"), Some(&[1.0f32, 0.0][..]));
        assert_eq!(stats.duplicates_skipped, 1);
        assert_eq!(stats.duplicate_examples, vec![(3, "a".to_string())]);
    }

    #[test]
    fn lowercasing_merges_case_variants() {
        let opts = LoadOptions { lowercase: true };
        let (space, stats) = read_embeddings(
            "Joy 1 0\njoy 0 1\nFEAR 2 2\n".as_bytes(),
            EmbeddingFormat::GloveText,
            &opts,
        )
        .unwrap();
        assert_eq!(space.tokens(), &["joy", "fear"]);
        assert_eq!(space.lookup("joy"), Some(&[1.0f32, 0.0][..]));
        assert_eq!(stats.duplicates_skipped, 1);

        let (space, _) = read("Joy 1 0\njoy 0 1\n", EmbeddingFormat::GloveText).unwrap();
        assert_eq!(space.len(), 2);
    }

    #[test]
    fn single_value_glove_output() {
        let space = VectorSpace::from_rows(vec![("x", vec![0.5f32])]).unwrap();
        assert_eq!(write(&space, EmbeddingFormat::GloveText), "x 0.5\n");
        assert_eq!(write(&space, EmbeddingFormat::Word2VecText), "1 1\nx 0.5\n");
    }

    #[test]
    fn refuses_to_save_empty_space() {
        let space: VectorSpace = VectorSpace::new(vec![], Array2::zeros((0, 3))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = save_embeddings(&space, dir.path().join("e.txt"), EmbeddingFormat::GloveText)
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let space = VectorSpace::from_rows(vec![("x", vec![0.5f32])]).unwrap();
        let err = save_embeddings(
            &space,
            "/nonexistent/dir/out.txt",
            EmbeddingFormat::GloveText,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "glove".parse::<EmbeddingFormat>().unwrap(),
            EmbeddingFormat::GloveText
        );
        assert_eq!(
            "word2vec".parse::<EmbeddingFormat>().unwrap(),
            EmbeddingFormat::Word2VecText
        );
        assert!("bin".parse::<EmbeddingFormat>().is_err());
    }
}

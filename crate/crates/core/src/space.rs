//! Vocabulary-indexed dense embedding matrix.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use num_traits::Float;

use crate::error::{Error, Result};

/// Element type of an embedding matrix.
///
/// Spaces are loaded as `f32`; objectives and metrics accumulate in `f64`
/// regardless of storage, and the trainer keeps its working copy in `f64`.
pub trait Scalar:
    Float + Into<f64> + FromStr + fmt::Display + fmt::Debug + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// A word-embedding space: unique tokens mapped onto the rows of an `n x d`
/// matrix.
///
/// Tokens are non-empty, whitespace-free and unique; every entry is finite.
/// The matrix is always kept in standard (row-major) layout so rows can be
/// borrowed as slices.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSpace<T = f32> {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Array2<T>,
}

impl<T: Scalar> VectorSpace<T> {
    pub fn new(tokens: Vec<String>, matrix: Array2<T>) -> Result<Self> {
        if matrix.ncols() == 0 {
            return Err(Error::Validation("embedding dimension must be >= 1".into()));
        }
        if tokens.len() != matrix.nrows() {
            return Err(Error::Validation(format!(
                "{} tokens but {} matrix rows",
                tokens.len(),
                matrix.nrows()
            )));
        }

        let mut index = HashMap::with_capacity(tokens.len());
        for (row, token) in tokens.iter().enumerate() {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(Error::Validation(format!(
                    "token {:?} at row {} is empty or contains whitespace",
                    token, row
                )));
            }
            if index.insert(token.clone(), row).is_some() {
                return Err(Error::Validation(format!("duplicate token {:?}", token)));
            }
        }

        if let Some(((row, col), v)) = matrix.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {} at row {} ({}), column {}",
                v, row, tokens[row], col
            )));
        }

        let matrix = if matrix.is_standard_layout() {
            matrix
        } else {
            matrix.as_standard_layout().into_owned()
        };

        Ok(VectorSpace {
            tokens,
            index,
            matrix,
        })
    }

    /// Builds a space from `(token, vector)` pairs.
    pub fn from_rows<S, I>(rows: I) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, Vec<T>)>,
    {
        let mut tokens = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (token, vector) in rows {
            let token = token.into();
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(Error::Validation(format!(
                        "row {:?} has {} values, expected {}",
                        token,
                        vector.len(),
                        d
                    )))
                }
                _ => {}
            }
            tokens.push(token);
            data.extend(vector);
        }
        let dim = dim.ok_or_else(|| Error::Validation("no rows given".into()))?;
        let matrix = Array2::from_shape_vec((tokens.len(), dim), data)
            .map_err(|e| Error::Validation(e.to_string()))?;
        Self::new(tokens, matrix)
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, row: usize) -> &str {
        &self.tokens[row]
    }

    pub fn row_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, row: usize) -> &[T] {
        self.matrix
            .row(row)
            .to_slice()
            .expect("matrix is kept in standard layout")
    }

    pub fn lookup(&self, token: &str) -> Option<&[T]> {
        self.row_of(token).map(|row| self.vector(row))
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.matrix.view()
    }

    /// Same vocabulary, different values.
    pub fn with_matrix<U: Scalar>(&self, matrix: Array2<U>) -> Result<VectorSpace<U>> {
        if matrix.nrows() != self.len() {
            return Err(Error::VocabularyMismatch(format!(
                "matrix has {} rows, vocabulary has {}",
                matrix.nrows(),
                self.len()
            )));
        }
        if matrix.ncols() == 0 {
            return Err(Error::Validation("embedding dimension must be >= 1".into()));
        }
        if let Some(((row, col), v)) = matrix.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value {} at row {} ({}), column {}",
                v, row, self.tokens[row], col
            )));
        }
        let matrix = if matrix.is_standard_layout() {
            matrix
        } else {
            matrix.as_standard_layout().into_owned()
        };
        Ok(VectorSpace {
            tokens: self.tokens.clone(),
            index: self.index.clone(),
            matrix,
        })
    }

    /// Element-wise conversion into another scalar type.
    pub fn cast<U: Scalar>(&self) -> VectorSpace<U> {
        VectorSpace {
            tokens: self.tokens.clone(),
            index: self.index.clone(),
            matrix: self.matrix.mapv(|v| U::from_f64(v.into())),
        }
    }

    /// True when both spaces have the same tokens in the same order and the
    /// same dimension.
    pub fn same_vocabulary<U: Scalar>(&self, other: &VectorSpace<U>) -> bool {
        self.dim() == other.dim() && self.tokens == other.tokens
    }

    pub(crate) fn check_same_vocabulary<U: Scalar>(&self, other: &VectorSpace<U>) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::VocabularyMismatch(format!(
                "dimensions differ ({} vs {})",
                self.dim(),
                other.dim()
            )));
        }
        if self.len() != other.len() {
            return Err(Error::VocabularyMismatch(format!(
                "vocabulary sizes differ ({} vs {})",
                self.len(),
                other.len()
            )));
        }
        if let Some(row) = (0..self.len()).find(|&i| self.tokens[i] != other.tokens[i]) {
            return Err(Error::VocabularyMismatch(format!(
                "row {} is {:?} in one space and {:?} in the other",
                row, self.tokens[row], other.tokens[row]
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_duplicates_and_non_finite() {
        let dup = VectorSpace::new(vec!["a".into(), "a".into()], array![[1.0f32], [2.0]]);
        assert!(matches!(dup, Err(Error::Validation(_))));

        let nan = VectorSpace::new(vec!["a".into()], array![[f32::NAN]]);
        assert!(matches!(nan, Err(Error::Validation(_))));

        let inf = VectorSpace::new(vec!["a".into()], array![[f32::INFINITY]]);
        assert!(matches!(inf, Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_zero_dim_and_bad_tokens() {
        let zero: Array2<f32> = Array2::zeros((1, 0));
        assert!(VectorSpace::new(vec!["a".into()], zero).is_err());
        assert!(VectorSpace::new(vec!["a b".into()], array![[1.0f32]]).is_err());
        assert!(VectorSpace::new(vec!["".into()], array![[1.0f32]]).is_err());
    }

    #[test]
    fn lookup_by_token() {
        let space =
            VectorSpace::from_rows(vec![("a", vec![1.0f32, 0.0]), ("b", vec![0.0, 1.0])]).unwrap();
        assert_eq!(space.row_of("b"), Some(1));
        assert_eq!(space.lookup("a"), Some(&[1.0f32, 0.0][..]));
        assert_eq!(space.lookup("c"), None);
        assert_eq!(space.dim(), 2);
    }

    #[test]
    fn cast_is_exact_for_f32_to_f64() {
        let space = VectorSpace::from_rows(vec![("a", vec![0.1f32, -3.7])]).unwrap();
        let wide: VectorSpace<f64> = space.cast();
        assert_eq!(wide.vector(0)[0], 0.1f32 as f64);
        let back: VectorSpace<f32> = wide.cast();
        assert_eq!(back, space);
    }
}

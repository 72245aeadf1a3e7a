use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Floor substituted for `-inf` log likelihood ratios so that every matrix
/// entry stays finite (e.g. mixture pairs with disjoint oracle priors).
pub const SCORE_FLOOR: f64 = -1e12;

/// Symmetric matrix of pairwise log likelihood ratios. The diagonal is
/// unused and stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T: Real> {
    n: usize,
    scores: Vec<T>,
}

impl<T: Real> ScoreMatrix<T> {
    /// Builds the matrix from the upper triangle of `score(i, j)`, `i < j`.
    pub fn from_fn(n: usize, score: impl Fn(usize, usize) -> Result<T> + Sync) -> Result<Self> {
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..n)
                    .map(|j| {
                        let s = score(i, j)?;
                        if s == T::neg_infinity() {
                            Ok(T::lit(SCORE_FLOOR))
                        } else if s.is_finite() {
                            Ok(s)
                        } else {
                            Err(Error::NonFiniteScore(i, j))
                        }
                    })
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<_>>()?;
        let mut scores = vec![T::zero(); n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (k, s) in row.into_iter().enumerate() {
                let j = i + 1 + k;
                scores[i * n + j] = s;
                scores[j * n + i] = s;
            }
        }
        Ok(Self { n, scores })
    }

    /// From a full row-major matrix; only the upper triangle is read.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("score matrix must be square".into()));
        }
        Self::from_fn(n, |i, j| Ok(rows[i][j]))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.scores[i * self.n + j]
    }
}

/// Scores every unordered pair of `n` items with `scorer`.
pub fn score_all_pairs<T: Real>(n: usize, scorer: impl Fn(usize, usize) -> Result<T> + Sync) -> Result<ScoreMatrix<T>> {
    ScoreMatrix::from_fn(n, scorer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_floored() {
        let m = ScoreMatrix::<f64>::from_fn(3, |i, j| {
            Ok(if (i, j) == (0, 2) {
                f64::NEG_INFINITY
            } else {
                (i * 10 + j) as f64
            })
        })
        .unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
        assert_eq!(m.get(2, 0), SCORE_FLOOR);
        assert_eq!(m.get(1, 2), 12.0);
    }

    #[test]
    fn nan_rejected() {
        let r = ScoreMatrix::<f64>::from_fn(2, |_, _| Ok(f64::NAN));
        assert!(matches!(r, Err(Error::NonFiniteScore(0, 1))));
    }

    #[test]
    fn single_item_has_no_pairs() {
        let m = ScoreMatrix::<f32>::from_fn(1, |_, _| unreachable!()).unwrap();
        assert_eq!(m.len(), 1);
    }
}

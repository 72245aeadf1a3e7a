use std::fmt;
use std::str::FromStr;

use super::ScoreMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Merge until exactly this many clusters remain.
    NumSpeakers(usize),
    /// Merge while the best average-linkage score is at least this value.
    Threshold(f64),
}

impl FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("stop rule '{s}' must be thresh:<t> or num:<k>"));
        let (kind, value) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "thresh" | "threshold" => Ok(StopRule::Threshold(value.parse().map_err(|_| bad())?)),
            "num" => Ok(StopRule::NumSpeakers(value.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopRule::NumSpeakers(k) => write!(f, "num:{k}"),
            StopRule::Threshold(t) => write!(f, "thresh:{t}"),
        }
    }
}

/// Average-linkage agglomerative clustering on similarity scores.
///
/// Each step merges the pair of clusters with the highest mean pairwise
/// score. A cluster is identified by its smallest member index; ties go to
/// the lexicographically smallest `(i, j)` pair. Returned labels are
/// numbered by first appearance.
pub fn cluster_ahc<T: Real>(m: &ScoreMatrix<T>, stop: StopRule) -> Result<Vec<usize>> {
    let n = m.len();
    if let StopRule::NumSpeakers(k) = stop {
        if k == 0 {
            return Err(Error::InvalidConfig("number of speakers must be at least 1".into()));
        }
        if k > n {
            return Err(Error::TooManyClusters { k, n });
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut sums: Vec<T> = (0..n * n).map(|x| m.get(x / n, x % n)).collect();
    let mut sizes = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    let threshold = match stop {
        StopRule::Threshold(t) => Some(T::lit(t)),
        StopRule::NumSpeakers(_) => None,
    };

    while active.len() > 1 {
        if let StopRule::NumSpeakers(k) = stop {
            if active.len() <= k {
                break;
            }
        }
        let mut best: Option<(usize, usize, T)> = None;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let size = T::from_usize(sizes[i] * sizes[j]).expect("size fits scalar");
                let avg = sums[i * n + j] / size;
                if best.is_none_or(|(_, _, b)| avg > b) {
                    best = Some((i, j, avg));
                }
            }
        }
        let (i, j, score) = best.expect("at least two active clusters");
        if let Some(t) = threshold {
            if score < t {
                break;
            }
        }
        for &k in &active {
            if k != i && k != j {
                let s = sums[i * n + k] + sums[j * n + k];
                sums[i * n + k] = s;
                sums[k * n + i] = s;
            }
        }
        sizes[i] += sizes[j];
        parent[j] = i;
        active.retain(|&c| c != j);
    }

    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let mut relabel = vec![usize::MAX; n];
    let mut next = 0;
    Ok((0..n)
        .map(|x| {
            let r = root(x);
            if relabel[r] == usize::MAX {
                relabel[r] = next;
                next += 1;
            }
            relabel[r]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(n: usize, split: usize) -> ScoreMatrix<f64> {
        ScoreMatrix::from_fn(n, |i, j| Ok(if (i < split) == (j < split) { 10.0 } else { -10.0 })).unwrap()
    }

    #[test]
    fn block_matrix_two_speakers() {
        let labels = cluster_ahc(&block(6, 3), StopRule::NumSpeakers(2)).unwrap();
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn block_matrix_threshold_zero() {
        let labels = cluster_ahc(&block(6, 2), StopRule::Threshold(0.0)).unwrap();
        assert_eq!(labels, vec![0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let labels = cluster_ahc(&block(4, 2), StopRule::NumSpeakers(4)).unwrap();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn too_many_clusters() {
        assert!(matches!(
            cluster_ahc(&block(3, 1), StopRule::NumSpeakers(4)),
            Err(Error::TooManyClusters { k: 4, n: 3 })
        ));
    }

    #[test]
    fn ties_merge_smallest_pair_first() {
        let m = ScoreMatrix::<f64>::from_fn(4, |_, _| Ok(1.0)).unwrap();
        // (0,1) merges first, then {0,1} with 2 ties with (2,3)? avg({0,1},2)=1 = (2,3); (0,2) is lexicographically first
        let labels = cluster_ahc(&m, StopRule::NumSpeakers(2)).unwrap();
        assert_eq!(labels, vec![0, 0, 0, 1]);
    }

    #[test]
    fn average_linkage_not_single() {
        // 0-1 strongly similar; 2 similar to 1 only
        let rows = vec![
            vec![0.0, 5.0, -4.0],
            vec![5.0, 0.0, 3.0],
            vec![-4.0, 3.0, 0.0],
        ];
        let m = ScoreMatrix::from_rows(&rows).unwrap();
        // average of (-4, 3) = -0.5 < 0
        assert_eq!(cluster_ahc(&m, StopRule::Threshold(0.0)).unwrap(), vec![0, 0, 1]);
        assert_eq!(cluster_ahc(&m, StopRule::Threshold(-1.0)).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn stop_rule_parse() {
        assert_eq!("num:3".parse::<StopRule>().unwrap(), StopRule::NumSpeakers(3));
        assert_eq!("thresh:-0.2".parse::<StopRule>().unwrap(), StopRule::Threshold(-0.2));
        assert!("foo:1".parse::<StopRule>().is_err());
        assert!("num:x".parse::<StopRule>().is_err());
    }
}

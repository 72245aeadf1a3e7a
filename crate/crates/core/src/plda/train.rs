use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{Embedding, PldaModel};
use crate::error::{Error, Result};
use crate::scalar::{ln_two_pi, Real};
use crate::types::SpeakerType;

/// Relative size of the ridge added to the within-class covariance before
/// it is inverted: `eps = WITHIN_FLOOR_FACTOR * trace(W) / d`.
pub const WITHIN_FLOOR_FACTOR: f64 = 1e-6;

/// Training container: embeddings with a parallel list of speaker ids and
/// an optional speaker type per speaker.
#[derive(Debug, Clone, Default)]
pub struct LabeledEmbeddingSet<T: Real> {
    embeddings: Vec<Embedding<T>>,
    speaker_ids: Vec<String>,
    speaker_types: HashMap<String, SpeakerType>,
}

impl<T: Real> LabeledEmbeddingSet<T> {
    pub fn new(embeddings: Vec<Embedding<T>>, speaker_ids: Vec<String>) -> Result<Self> {
        if embeddings.len() != speaker_ids.len() {
            return Err(Error::InvalidTrainingData(format!(
                "{} embeddings but {} speaker ids",
                embeddings.len(),
                speaker_ids.len()
            )));
        }
        if let Some(first) = embeddings.first() {
            let d = first.dim();
            if let Some(bad) = embeddings.iter().find(|e| e.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: bad.dim(),
                });
            }
        }
        Ok(Self {
            embeddings,
            speaker_ids,
            speaker_types: HashMap::new(),
        })
    }

    pub fn push(&mut self, embedding: Embedding<T>, speaker: impl Into<String>, ty: Option<SpeakerType>) -> Result<()> {
        if let Some(d) = self.dim() {
            if embedding.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: embedding.dim(),
                });
            }
        }
        let speaker = speaker.into();
        if let Some(ty) = ty {
            self.set_speaker_type(speaker.clone(), ty);
        }
        self.embeddings.push(embedding);
        self.speaker_ids.push(speaker);
        Ok(())
    }

    pub fn set_speaker_type(&mut self, speaker: impl Into<String>, ty: SpeakerType) {
        self.speaker_types.insert(speaker.into(), ty);
    }

    pub fn speaker_type(&self, speaker: &str) -> Option<SpeakerType> {
        self.speaker_types.get(speaker).copied()
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.embeddings.first().map(Embedding::dim)
    }

    pub fn embeddings(&self) -> &[Embedding<T>] {
        &self.embeddings
    }

    pub fn speaker_ids(&self) -> &[String] {
        &self.speaker_ids
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Embedding<T>, &str)> {
        self.embeddings.iter().zip(self.speaker_ids.iter().map(String::as_str))
    }

    /// Distinct speakers in order of first appearance.
    pub fn speakers(&self) -> Vec<&str> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for id in &self.speaker_ids {
            if seen.insert(id.as_str(), ()).is_none() {
                out.push(id.as_str());
            }
        }
        out
    }

    /// Keeps only the embeddings of speakers accepted by `keep`.
    pub fn filter_speakers(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        let mut out = Self::default();
        for (e, s) in self.iter() {
            if keep(s) {
                out.embeddings.push(e.clone());
                out.speaker_ids.push(s.to_string());
            }
        }
        out.speaker_types = self
            .speaker_types
            .iter()
            .filter(|(s, _)| out.speaker_ids.iter().any(|o| o == *s))
            .map(|(s, t)| (s.clone(), *t))
            .collect();
        out
    }

    /// Subset of speakers whose recorded type is `ty`.
    pub fn of_type(&self, ty: SpeakerType) -> Self {
        let types = self.speaker_types.clone();
        self.filter_speakers(|s| types.get(s) == Some(&ty))
    }

    /// Applies `f` to every embedding, keeping labels.
    pub fn map_embeddings(&self, mut f: impl FnMut(&Embedding<T>) -> Result<Embedding<T>>) -> Result<Self> {
        Ok(Self {
            embeddings: self.embeddings.iter().map(&mut f).collect::<Result<_>>()?,
            speaker_ids: self.speaker_ids.clone(),
            speaker_types: self.speaker_types.clone(),
        })
    }
}

/// A trained model together with the training-data log-likelihood before
/// the first iteration (index 0) and after every EM iteration.
#[derive(Debug, Clone)]
pub struct TrainedPlda<T: Real> {
    pub model: PldaModel<T>,
    pub log_likelihoods: Vec<T>,
}

impl<T: Real> TrainedPlda<T> {
    /// True when no iteration decreased the log-likelihood by more than
    /// `rel_tol` relative to its magnitude.
    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        self.log_likelihoods.windows(2).all(|w| {
            let (a, b) = (w[0].as_f64(), w[1].as_f64());
            b >= a - rel_tol * a.abs().max(1.0)
        })
    }
}

struct SpeakerStats<T: Real> {
    count: usize,
    // sum of centered embeddings
    sum: DVector<T>,
}

/// Sufficient statistics of the training set around its global mean.
struct Stats<T: Real> {
    dim: usize,
    total: usize,
    mean: DVector<T>,
    scatter: DMatrix<T>,
    speakers: Vec<SpeakerStats<T>>,
}

impl<T: Real> Stats<T> {
    fn collect(data: &LabeledEmbeddingSet<T>) -> Result<Self> {
        let dim = data
            .dim()
            .ok_or_else(|| Error::InvalidTrainingData("no embeddings".into()))?;
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (i, id) in data.speaker_ids.iter().enumerate() {
            let k = *index.entry(id.as_str()).or_insert_with(|| {
                members.push(Vec::new());
                members.len() - 1
            });
            members[k].push(i);
        }
        if members.len() < 2 {
            return Err(Error::InvalidTrainingData(format!(
                "need at least 2 speakers, got {}",
                members.len()
            )));
        }
        if members.iter().all(|m| m.len() < 2) {
            return Err(Error::InvalidTrainingData(
                "need at least one speaker with 2 or more embeddings".into(),
            ));
        }
        let total = data.len();
        let n = T::from_usize(total).expect("count fits scalar");
        let mut mean = DVector::zeros(dim);
        for e in &data.embeddings {
            mean += e.vector();
        }
        mean /= n;

        let mut scatter = DMatrix::zeros(dim, dim);
        let mut speakers = Vec::with_capacity(members.len());
        for idx in &members {
            let mut sum = DVector::zeros(dim);
            for &i in idx {
                let x = data.embeddings[i].vector() - &mean;
                scatter.ger(T::one(), &x, &x, T::one());
                sum += x;
            }
            speakers.push(SpeakerStats { count: idx.len(), sum });
        }
        Ok(Self {
            dim,
            total,
            mean,
            scatter,
            speakers,
        })
    }
}

/// Simultaneously diagonalized parameters: `transform * W * transform' = I`
/// and `transform * B * transform' = diag(psi)`.
struct Diagonalized<T: Real> {
    transform: DMatrix<T>,
    inverse: DMatrix<T>,
    psi: DVector<T>,
    log_abs_det: T,
}

/// Within-class floor: `factor * trace / d`, or `factor * total variance per
/// dimension` when the within-class scatter is negligible.
fn within_floor<T: Real>(w: &DMatrix<T>, total_var_per_dim: T) -> T {
    let d = T::from_usize(w.nrows()).expect("dimension fits scalar");
    let factor = T::lit(WITHIN_FLOOR_FACTOR);
    let eps = factor * w.trace() / d;
    if eps > factor * factor * total_var_per_dim {
        eps
    } else {
        factor * total_var_per_dim
    }
}

// Maximizes the within-class term of the EM objective subject to all
// eigenvalues being at least `floor`; keeps the iteration monotone.
fn clamp_eigenvalues<T: Real>(w: &DMatrix<T>, floor: T) -> DMatrix<T> {
    let eig = w.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&v| v >= floor) {
        return w.clone();
    }
    let clamped = eig.eigenvalues.map(|v| if v >= floor { v } else { floor });
    let mut out = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    symmetrize(&mut out);
    out
}

fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half = T::lit(0.5);
    let t = m.transpose();
    *m += t;
    *m *= half;
}

fn diagonalize<T: Real>(within: &DMatrix<T>, between: &DMatrix<T>) -> Result<Diagonalized<T>> {
    let chol = within.clone().cholesky().ok_or(Error::RankDeficient)?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(Error::RankDeficient)?;
    let mut c = &l_inv * between * l_inv.transpose();
    symmetrize(&mut c);
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let d = within.nrows();
    let q = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    let psi = DVector::from_fn(d, |i, _| {
        let v = eig.eigenvalues[order[i]];
        if v > T::zero() {
            v
        } else {
            T::zero()
        }
    });
    let transform = q.transpose() * &l_inv;
    let inverse = &l * &q;
    let log_abs_det = -l.diagonal().iter().fold(T::zero(), |acc, &x| acc + x.ln());
    if transform.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient);
    }
    Ok(Diagonalized {
        transform,
        inverse,
        psi,
        log_abs_det,
    })
}

/// Exact marginal log-likelihood of the training data under the model.
fn log_likelihood<T: Real>(stats: &Stats<T>, diag: &Diagonalized<T>) -> T {
    let half = T::lit(0.5);
    let projected_scatter = &diag.transform * &stats.scatter * diag.transform.transpose();
    let n_total = T::from_usize(stats.total).expect("count fits scalar");
    let d = T::from_usize(stats.dim).expect("dimension fits scalar");
    let mut ll = -half * n_total * d * ln_two_pi::<T>() + n_total * diag.log_abs_det - half * projected_scatter.trace();
    for spk in &stats.speakers {
        let n = T::from_usize(spk.count).expect("count fits scalar");
        let a = &diag.transform * &spk.sum;
        for (j, &psi) in diag.psi.iter().enumerate() {
            let denom = T::one() + n * psi;
            ll += -half * denom.ln() + half * psi * a[j] * a[j] / denom;
        }
    }
    ll
}

/// One EM update of (within, between) given the current diagonalization.
fn em_step<T: Real>(stats: &Stats<T>, diag: &Diagonalized<T>) -> (DMatrix<T>, DMatrix<T>) {
    let d = stats.dim;
    let mut between_u = DMatrix::zeros(d, d);
    let mut within_u = &diag.transform * &stats.scatter * diag.transform.transpose();
    for spk in &stats.speakers {
        let n = T::from_usize(spk.count).expect("count fits scalar");
        let a = &diag.transform * &spk.sum;
        let mut mu = DVector::zeros(d);
        let mut var = DVector::zeros(d);
        for j in 0..d {
            let psi = diag.psi[j];
            let denom = T::one() + n * psi;
            mu[j] = psi * a[j] / denom;
            var[j] = psi / denom;
        }
        between_u.ger(T::one(), &mu, &mu, T::one());
        within_u.ger(-T::one(), &mu, &a, T::one());
        within_u.ger(-T::one(), &a, &mu, T::one());
        within_u.ger(n, &mu, &mu, T::one());
        for j in 0..d {
            between_u[(j, j)] += var[j];
            within_u[(j, j)] += n * var[j];
        }
    }
    between_u /= T::from_usize(stats.speakers.len()).expect("count fits scalar");
    within_u /= T::from_usize(stats.total).expect("count fits scalar");
    let mut between = &diag.inverse * between_u * diag.inverse.transpose();
    let mut within = &diag.inverse * within_u * diag.inverse.transpose();
    symmetrize(&mut between);
    symmetrize(&mut within);
    (within, between)
}

/// Trains a two-covariance PLDA model by EM over per-speaker latent means.
///
/// Initialization uses the closed-form within/between scatter estimates,
/// with a small multiple of the identity added to the within-class part.
/// That amount is then kept as a lower bound on the within-class
/// eigenvalues for every later update. The global mean is held fixed. The returned log-likelihood trace has
/// `iterations + 1` entries.
pub fn train_plda<T: Real>(data: &LabeledEmbeddingSet<T>, iterations: usize) -> Result<TrainedPlda<T>> {
    if iterations == 0 {
        return Err(Error::InvalidTrainingData("iterations must be at least 1".into()));
    }
    let stats = Stats::collect(data)?;
    let d = stats.dim;
    let n_total = T::from_usize(stats.total).expect("count fits scalar");
    let total_var_per_dim = stats.scatter.trace() / n_total / T::from_usize(d).expect("dimension fits scalar");
    if !(total_var_per_dim > T::zero()) {
        return Err(Error::RankDeficient);
    }

    let mut between = DMatrix::zeros(d, d);
    let mut within = stats.scatter.clone();
    for spk in &stats.speakers {
        let n = T::from_usize(spk.count).expect("count fits scalar");
        let spk_mean = &spk.sum / n;
        between.ger(T::one(), &spk_mean, &spk_mean, T::one());
        within.ger(-n, &spk_mean, &spk_mean, T::one());
    }
    between /= T::from_usize(stats.speakers.len()).expect("count fits scalar");
    within /= n_total;
    symmetrize(&mut within);
    let floor = within_floor(&within, total_var_per_dim);
    for i in 0..d {
        within[(i, i)] += floor;
    }

    let mut diag = diagonalize(&within, &between)?;
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(log_likelihood(&stats, &diag));
    for _ in 0..iterations {
        let (w, b) = em_step(&stats, &diag);
        let w = clamp_eigenvalues(&w, floor);
        diag = diagonalize(&w, &b)?;
        trace.push(log_likelihood(&stats, &diag));
    }

    let model = PldaModel::new(stats.mean, diag.transform, diag.psi).map_err(|_| Error::RankDeficient)?;
    Ok(TrainedPlda {
        model,
        log_likelihoods: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_1d(groups: &[&[f64]]) -> LabeledEmbeddingSet<f64> {
        let mut s = LabeledEmbeddingSet::default();
        for (k, g) in groups.iter().enumerate() {
            for &x in g.iter() {
                s.push(Embedding::new(vec![x]).unwrap(), format!("s{k}"), None).unwrap();
            }
        }
        s
    }

    #[test]
    fn rejects_single_speaker() {
        let s = set_1d(&[&[0.0, 1.0, 2.0]]);
        assert!(matches!(train_plda(&s, 3), Err(Error::InvalidTrainingData(_))));
    }

    #[test]
    fn rejects_all_singletons() {
        let s = set_1d(&[&[0.0], &[1.0], &[2.0]]);
        assert!(matches!(train_plda(&s, 3), Err(Error::InvalidTrainingData(_))));
    }

    #[test]
    fn rejects_zero_iterations() {
        let s = set_1d(&[&[0.0, 0.1], &[1.0, 1.1]]);
        assert!(train_plda(&s, 0).is_err());
    }

    #[test]
    fn constant_data_is_rank_deficient() {
        let s = set_1d(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(train_plda(&s, 2), Err(Error::RankDeficient)));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let r = LabeledEmbeddingSet::new(vec![Embedding::new(vec![1.0]).unwrap()], vec![]);
        assert!(r.is_err());
    }

    // Two speakers {0,0} and {10,10}: closed-form estimates are within = 0
    // (floored) and between = 25, so the trained model must separate them.
    #[test]
    fn two_speaker_toy() {
        let s = set_1d(&[&[0.0, 0.0], &[10.0, 10.0]]);
        let t = train_plda(&s, 5).unwrap();
        let m = &t.model;
        let e = |x: f64| Embedding::new(vec![x]).unwrap();
        let u0 = m.project(&e(0.0)).unwrap().as_slice()[0];
        let u10 = m.project(&e(10.0)).unwrap().as_slice()[0];
        assert!((u0 - u10).abs() > 0.0);
        let same = m.log_lr(&e(0.0), &e(0.0)).unwrap();
        let cross = m.log_lr(&e(0.0), &e(10.0)).unwrap();
        assert!(same > cross, "same {same} cross {cross}");
        assert!(t.is_monotone(1e-8), "{:?}", t.log_likelihoods);
    }

    #[test]
    fn identical_embeddings_per_speaker_floor_within() {
        // speaker means at -1, 1, -1, 1 (variance 1), no within-speaker spread
        let s = set_1d(&[&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0], &[-1.0, -1.0], &[1.0, 1.0]]);
        let t = train_plda(&s, 1).unwrap();
        // transform^-2 is the within variance; it must equal the floor (1e-6 * total var)
        let w = 1.0 / (t.model.transform()[(0, 0)] * t.model.transform()[(0, 0)]);
        assert!(w > 0.0 && w < 1e-5, "within variance {w}");
        assert!(t.model.psi()[0] > 1e4);
    }
}

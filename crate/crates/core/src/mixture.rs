//! Mixture of speaker-type PLDA models.
//!
//! The same-speaker likelihood is a prior-weighted sum over one shared
//! speaker type; the different-speaker likelihood sums over all nine type
//! pairs, which factorizes into a product of two per-embedding sums. All
//! arithmetic is in the log domain.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::plda::{Embedding, PldaModel, Projected};
use crate::scalar::{log_sum_exp, Real};
use crate::types::SpeakerType;

/// Tolerance on the sum of a prior's entries.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-9;

/// Probability distribution over [`SpeakerType`], stored in `M F C` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeakerTypePrior([f64; 3]);

impl SpeakerTypePrior {
    pub fn new(p: [f64; 3]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidPrior(format!("entries must lie in [0, 1]: {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::InvalidPrior(format!("entries sum to {sum}, expected 1")));
        }
        Ok(Self(p))
    }

    pub fn uniform() -> Self {
        Self([1.0 / 3.0; 3])
    }

    /// Female 0.4, child 0.4, male 0.2.
    pub fn nonuniform_paper() -> Self {
        Self([0.2, 0.4, 0.4])
    }

    pub fn oracle(ty: SpeakerType) -> Self {
        let mut p = [0.0; 3];
        p[ty.index()] = 1.0;
        Self(p)
    }

    pub fn get(&self, ty: SpeakerType) -> f64 {
        self.0[ty.index()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn is_one_hot(&self) -> bool {
        self.0.iter().filter(|&&v| v == 1.0).count() == 1
    }
}

impl fmt::Display for SpeakerTypePrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M={},F={},C={}", self.0[0], self.0[1], self.0[2])
    }
}

/// How a prior is constructed; parses the `--prior` flag syntax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorKind {
    Uniform,
    NonuniformPaper,
    Oracle(SpeakerType),
    Explicit([f64; 3]),
}

pub fn make_prior(kind: PriorKind) -> Result<SpeakerTypePrior> {
    match kind {
        PriorKind::Uniform => Ok(SpeakerTypePrior::uniform()),
        PriorKind::NonuniformPaper => Ok(SpeakerTypePrior::nonuniform_paper()),
        PriorKind::Oracle(ty) => Ok(SpeakerTypePrior::oracle(ty)),
        PriorKind::Explicit(p) => SpeakerTypePrior::new(p),
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => return Ok(PriorKind::Uniform),
            "paper" | "nonuniform" => return Ok(PriorKind::NonuniformPaper),
            _ => {}
        }
        if let Some(code) = s.strip_prefix("oracle:") {
            return Ok(PriorKind::Oracle(code.parse()?));
        }
        let mut p = [f64::NAN; 3];
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidPrior(format!("cannot parse prior '{s}'")))?;
            let ty: SpeakerType = k.parse()?;
            p[ty.index()] = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidPrior(format!("bad probability '{v}'")))?;
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidPrior(format!("prior '{s}' must give M, F and C")));
        }
        SpeakerTypePrior::new(p)?;
        Ok(PriorKind::Explicit(p))
    }
}

/// Per-type weight of the same-speaker hypothesis. A shared prior is used
/// as is; two segment-specific priors are combined as the normalized
/// elementwise product. Disjoint priors give all-zero weights.
pub fn same_speaker_weights(p1: &SpeakerTypePrior, p2: &SpeakerTypePrior) -> [f64; 3] {
    if p1 == p2 {
        return p1.0;
    }
    let prod = [p1.0[0] * p2.0[0], p1.0[1] * p2.0[1], p1.0[2] * p2.0[2]];
    let sum: f64 = prod.iter().sum();
    if sum > 0.0 {
        prod.map(|v| v / sum)
    } else {
        [0.0; 3]
    }
}

/// An embedding projected into each component's space, with the
/// per-component marginal log-likelihoods.
#[derive(Debug, Clone)]
pub struct MixtureProjection<T: Real> {
    projected: [Projected<T>; 3],
    log_marginals: [T; 3],
}

impl<T: Real> MixtureProjection<T> {
    pub fn projected(&self, ty: SpeakerType) -> &Projected<T> {
        &self.projected[ty.index()]
    }

    pub fn log_marginal(&self, ty: SpeakerType) -> T {
        self.log_marginals[ty.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixturePlda<T: Real> {
    components: [PldaModel<T>; 3],
    default_prior: SpeakerTypePrior,
}

impl<T: Real> MixturePlda<T> {
    pub fn new(
        male: PldaModel<T>,
        female: PldaModel<T>,
        child: PldaModel<T>,
        default_prior: SpeakerTypePrior,
    ) -> Result<Self> {
        let d = male.dim();
        for m in [&female, &child] {
            if m.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: m.dim(),
                });
            }
        }
        Ok(Self {
            components: [male, female, child],
            default_prior,
        })
    }

    /// All three components set to the same model.
    pub fn replicated(model: PldaModel<T>, default_prior: SpeakerTypePrior) -> Self {
        Self {
            components: [model.clone(), model.clone(), model],
            default_prior,
        }
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn component(&self, ty: SpeakerType) -> &PldaModel<T> {
        &self.components[ty.index()]
    }

    pub fn default_prior(&self) -> &SpeakerTypePrior {
        &self.default_prior
    }

    pub fn with_default_prior(mut self, prior: SpeakerTypePrior) -> Self {
        self.default_prior = prior;
        self
    }

    pub fn cast<U: Real>(&self) -> MixturePlda<U> {
        MixturePlda {
            components: [
                self.components[0].cast(),
                self.components[1].cast(),
                self.components[2].cast(),
            ],
            default_prior: self.default_prior,
        }
    }

    pub fn project(&self, z: &Embedding<T>) -> Result<MixtureProjection<T>> {
        let p = |ty: SpeakerType| self.component(ty).project(z);
        let projected = [p(SpeakerType::Male)?, p(SpeakerType::Female)?, p(SpeakerType::Child)?];
        let mut log_marginals = [T::zero(); 3];
        for ty in SpeakerType::ALL {
            log_marginals[ty.index()] = self.component(ty).log_marginal(&projected[ty.index()])?;
        }
        Ok(MixtureProjection {
            projected,
            log_marginals,
        })
    }

    pub fn log_numerator_projected(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        a: &MixtureProjection<T>,
        b: &MixtureProjection<T>,
    ) -> Result<T> {
        let w = same_speaker_weights(prior1, prior2);
        let mut terms = Vec::with_capacity(3);
        for ty in SpeakerType::ALL {
            let wg = w[ty.index()];
            if wg > 0.0 {
                let joint = self.component(ty).log_joint_same(a.projected(ty), b.projected(ty))?;
                terms.push(T::lit(wg).ln() + joint);
            }
        }
        Ok(log_sum_exp(&terms))
    }

    /// Factored different-speaker term:
    /// `log sum_g P1(g) P(z1|g) + log sum_g P2(g) P(z2|g)`.
    pub fn log_denominator_projected(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        a: &MixtureProjection<T>,
        b: &MixtureProjection<T>,
    ) -> T {
        weighted_marginal(prior1, a) + weighted_marginal(prior2, b)
    }

    /// Different-speaker term as the explicit sum over all nine type pairs.
    pub fn log_denominator_expanded_projected(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        a: &MixtureProjection<T>,
        b: &MixtureProjection<T>,
    ) -> T {
        let mut terms = Vec::with_capacity(9);
        for g1 in SpeakerType::ALL {
            for g2 in SpeakerType::ALL {
                let w = prior1.get(g1) * prior2.get(g2);
                if w > 0.0 {
                    terms.push(T::lit(w).ln() + a.log_marginal(g1) + b.log_marginal(g2));
                }
            }
        }
        log_sum_exp(&terms)
    }

    pub fn log_lr_projected(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        a: &MixtureProjection<T>,
        b: &MixtureProjection<T>,
    ) -> Result<T> {
        let num = self.log_numerator_projected(prior1, prior2, a, b)?;
        Ok(num - self.log_denominator_projected(prior1, prior2, a, b))
    }

    pub fn log_numerator(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        z1: &Embedding<T>,
        z2: &Embedding<T>,
    ) -> Result<T> {
        self.log_numerator_projected(prior1, prior2, &self.project(z1)?, &self.project(z2)?)
    }

    pub fn log_denominator(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        z1: &Embedding<T>,
        z2: &Embedding<T>,
    ) -> Result<T> {
        Ok(self.log_denominator_projected(prior1, prior2, &self.project(z1)?, &self.project(z2)?))
    }

    pub fn log_denominator_expanded(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        z1: &Embedding<T>,
        z2: &Embedding<T>,
    ) -> Result<T> {
        Ok(self.log_denominator_expanded_projected(prior1, prior2, &self.project(z1)?, &self.project(z2)?))
    }

    /// Same-speaker vs different-speaker log likelihood ratio. May be
    /// `-inf` when the two priors share no speaker type.
    pub fn log_lr(
        &self,
        prior1: &SpeakerTypePrior,
        prior2: &SpeakerTypePrior,
        z1: &Embedding<T>,
        z2: &Embedding<T>,
    ) -> Result<T> {
        self.log_lr_projected(prior1, prior2, &self.project(z1)?, &self.project(z2)?)
    }
}

fn weighted_marginal<T: Real>(prior: &SpeakerTypePrior, a: &MixtureProjection<T>) -> T {
    let terms: Vec<T> = SpeakerType::ALL
        .iter()
        .filter(|ty| prior.get(**ty) > 0.0)
        .map(|&ty| T::lit(prior.get(ty)).ln() + a.log_marginal(ty))
        .collect();
    log_sum_exp(&terms)
}

pub fn log_numerator_mixture<T: Real>(
    mix: &MixturePlda<T>,
    prior1: &SpeakerTypePrior,
    prior2: &SpeakerTypePrior,
    z1: &Embedding<T>,
    z2: &Embedding<T>,
) -> Result<T> {
    mix.log_numerator(prior1, prior2, z1, z2)
}

pub fn log_denominator_mixture<T: Real>(
    mix: &MixturePlda<T>,
    prior1: &SpeakerTypePrior,
    prior2: &SpeakerTypePrior,
    z1: &Embedding<T>,
    z2: &Embedding<T>,
) -> Result<T> {
    mix.log_denominator(prior1, prior2, z1, z2)
}

pub fn log_lr_mixture<T: Real>(
    mix: &MixturePlda<T>,
    prior1: &SpeakerTypePrior,
    prior2: &SpeakerTypePrior,
    z1: &Embedding<T>,
    z2: &Embedding<T>,
) -> Result<T> {
    mix.log_lr(prior1, prior2, z1, z2)
}

//! Seeded data generation for single-phase and multiphase linear designs.
//!
//! Every replication draws from its own ChaCha8 stream: the generator is seeded
//! with the master seed and switched to stream number `replication`, so a
//! replication's data never depends on which worker produced it or in what order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{Dataset, QuantileLevel};

/// Distribution of the additive error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorLaw {
    Normal { mean: f64, sd: f64 },
    /// `shift + E` with `E` standard exponential: density `exp(-(x - shift))` on `x > shift`.
    ShiftedExponential { shift: f64 },
    Cauchy { location: f64, scale: f64 },
    /// Independent draws from both laws, added.
    SumOf { a: Box<ErrorLaw>, b: Box<ErrorLaw> },
    /// Point mass; only meant for exactness tests and kept out of [`catalog`].
    Constant { value: f64 },
}

impl ErrorLaw {
    pub fn standard_normal() -> Self {
        ErrorLaw::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn exp(shift: f64) -> Self {
        ErrorLaw::ShiftedExponential { shift }
    }

    pub fn standard_cauchy() -> Self {
        ErrorLaw::Cauchy { location: 0.0, scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ErrorLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && *sd > 0.0,
            ErrorLaw::ShiftedExponential { shift } => shift.is_finite(),
            ErrorLaw::Cauchy { location, scale } => location.is_finite() && scale.is_finite() && *scale > 0.0,
            ErrorLaw::SumOf { a, b } => return a.validate().and_then(|_| b.validate()),
            ErrorLaw::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid error law {self:?}")))
        }
    }

    /// Closed-form `tau`-quantile; `None` for sums.
    pub fn quantile(&self, tau: QuantileLevel) -> Option<f64> {
        let t = tau.value();
        match self {
            ErrorLaw::Normal { mean, sd } => Normal::new(*mean, *sd).ok().map(|d| d.inverse_cdf(t)),
            ErrorLaw::ShiftedExponential { shift } => Some(shift - (1.0 - t).ln()),
            ErrorLaw::Cauchy { location, scale } => Some(location + scale * (std::f64::consts::PI * (t - 0.5)).tan()),
            ErrorLaw::SumOf { .. } => None,
            ErrorLaw::Constant { value } => Some(*value),
        }
    }
}

/// One draw from `law`.
pub fn sample_error<R: Rng + ?Sized>(law: &ErrorLaw, rng: &mut R) -> f64 {
    match law {
        ErrorLaw::Normal { mean, sd } => {
            let z: f64 = StandardNormal.sample(rng);
            mean + sd * z
        }
        ErrorLaw::ShiftedExponential { shift } => {
            let e: f64 = Exp1.sample(rng);
            shift + e
        }
        ErrorLaw::Cauchy { location, scale } => {
            let u: f64 = rng.random();
            location + scale * (std::f64::consts::PI * (u - 0.5)).tan()
        }
        ErrorLaw::SumOf { a, b } => sample_error(a, rng) + sample_error(b, rng),
        ErrorLaw::Constant { value } => *value,
    }
}

/// Independent normal regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateLaw {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl CovariateLaw {
    /// Means `(0, 0, 2, -1, 1, 0, 0, 0, 0, 0)`, unit standard deviations.
    pub fn ten_regressors() -> Self {
        Self { means: vec![0.0, 0.0, 2.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], sds: vec![1.0; 10] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub phi: Vec<f64>,
    pub error: ErrorLaw,
    pub length: usize,
}

/// A data-generating design: `y_i = x_i' phi_r + e_i` within phase `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub name: String,
    pub covariates: CovariateLaw,
    pub phases: Vec<PhaseSpec>,
}

impl Design {
    pub fn p(&self) -> usize {
        self.covariates.means.len()
    }

    pub fn n(&self) -> usize {
        self.phases.iter().map(|ph| ph.length).sum()
    }

    /// Last row index of every phase but the final one.
    pub fn breaks(&self) -> Vec<usize> {
        let mut at = 0;
        let mut out = Vec::new();
        for ph in &self.phases[..self.phases.len().saturating_sub(1)] {
            at += ph.length;
            out.push(at);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 || self.covariates.sds.len() != p {
            return Err(Error::InvalidInput(format!("design {}: covariate means and sds must be non-empty and equal length", self.name)));
        }
        if let Some(sd) = self.covariates.sds.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidInput(format!("design {}: covariate sd {sd} must be >= 0", self.name)));
        }
        if self.phases.is_empty() {
            return Err(Error::InvalidInput(format!("design {} has no phases", self.name)));
        }
        for ph in &self.phases {
            if ph.phi.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: ph.phi.len() });
            }
            if ph.length == 0 {
                return Err(Error::InvalidInput(format!("design {}: empty phase", self.name)));
            }
            ph.error.validate()?;
        }
        Ok(())
    }
}

/// What generated a dataset, for scoring estimates against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub design: String,
    pub seed: u64,
    pub replication: u64,
    pub n: usize,
    pub breaks: Vec<usize>,
    pub phases: Vec<PhaseSpec>,
}

impl GroundTruth {
    /// The error `tau`-quantile of every phase, the target of the fitted intercepts.
    pub fn intercepts(&self, tau: QuantileLevel) -> Vec<Option<f64>> {
        self.phases.iter().map(|ph| ph.error.quantile(tau)).collect()
    }
}

/// Stream `replication` of the generator seeded by `master`.
pub fn replication_rng(master: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replication);
    rng
}

/// Dataset for replication 0 of `seed`.
pub fn generate(design: &Design, seed: u64) -> Result<(Dataset, GroundTruth)> {
    generate_replication(design, seed, 0)
}

/// Dataset for one replication; rows are drawn in order, regressors before the error.
pub fn generate_replication(design: &Design, master: u64, replication: u64) -> Result<(Dataset, GroundTruth)> {
    design.validate()?;
    let mut rng = replication_rng(master, replication);
    let p = design.p();
    let n = design.n();
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for ph in &design.phases {
        for _ in 0..ph.length {
            let start = x.len();
            for j in 0..p {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.push(design.covariates.means[j] + design.covariates.sds[j] * z);
            }
            let fit: f64 = x[start..].iter().zip(&ph.phi).map(|(a, b)| a * b).sum();
            y.push(fit + sample_error(&ph.error, &mut rng));
        }
    }
    let data = Dataset::from_row_major(y, x, p)?;
    let truth = GroundTruth {
        design: design.name.clone(),
        seed: master,
        replication,
        n,
        breaks: design.breaks(),
        phases: design.phases.clone(),
    };
    Ok((data, truth))
}

/// `(1, 0, 4, 0, -3, 5, 6, 0, -1, 0)`.
pub fn phi_single() -> Vec<f64> {
    vec![1.0, 0.0, 4.0, 0.0, -3.0, 5.0, 6.0, 0.0, -1.0, 0.0]
}

/// Second-phase coefficients of the multiphase designs.
pub fn phi_second() -> Vec<f64> {
    vec![0.0, 3.0, -4.0, -3.0, 0.0, 1.0, 2.0, -3.0, 0.0, 10.0]
}

/// Third-phase coefficients of the three-phase design.
pub fn phi_third() -> Vec<f64> {
    vec![1.0, 3.0, 4.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
}

/// Single phase, `n = 200`.
pub fn d1(error: ErrorLaw) -> Design {
    Design {
        name: "D1".into(),
        covariates: CovariateLaw::ten_regressors(),
        phases: vec![PhaseSpec { phi: phi_single(), error, length: 200 }],
    }
}

/// Three phases with breaks after rows 30 and 100 of 200. With `equal_first_two`
/// the first two phases share coefficients and differ only in their errors.
pub fn m3(errors: [ErrorLaw; 3], equal_first_two: bool) -> Design {
    let [e1, e2, e3] = errors;
    let second = if equal_first_two { phi_single() } else { phi_second() };
    Design {
        name: if equal_first_two { "M3-equal".into() } else { "M3".into() },
        covariates: CovariateLaw::ten_regressors(),
        phases: vec![
            PhaseSpec { phi: phi_single(), error: e1, length: 30 },
            PhaseSpec { phi: second, error: e2, length: 70 },
            PhaseSpec { phi: phi_third(), error: e3, length: 100 },
        ],
    }
}

/// Two phases with a break after row 30 of 100.
pub fn m2(errors: [ErrorLaw; 2], distinct: bool) -> Design {
    let [e1, e2] = errors;
    let second = if distinct { phi_second() } else { phi_single() };
    Design {
        name: if distinct { "M2".into() } else { "M2-equal".into() },
        covariates: CovariateLaw::ten_regressors(),
        phases: vec![
            PhaseSpec { phi: phi_single(), error: e1, length: 30 },
            PhaseSpec { phi: second, error: e2, length: 70 },
        ],
    }
}

/// Names accepted by [`catalog`].
pub const CATALOG: &[&str] = &["D1", "D1-exp", "D1-cauchy", "D1-exp-cauchy", "M3", "M3-equal", "M2", "M2-equal", "M2-quantile"];

/// Built-in designs by name.
///
/// `D1*` use normal, `Exp(-4.5, 1)`, Cauchy and `Exp(-4.5, 1) + C(0, 2)` errors; `M3` has `Exp(-4.5, 1)` in
/// every phase and `M3-equal` shares the first two coefficient vectors with normal
/// errors in the middle phase; `M2` and `M2-equal` pair `Exp(-4.5, 1)` with `N(0, 1)`;
/// `M2-quantile` keeps the coefficients and moves from `Exp(-4.5, 1)` to `Exp(-6.5, 1)`.
pub fn catalog(name: &str) -> Result<Design> {
    let e1 = || ErrorLaw::exp(-4.5);
    let mut d = match name {
        "D1" => d1(ErrorLaw::standard_normal()),
        "D1-exp" => d1(e1()),
        "D1-cauchy" => d1(ErrorLaw::standard_cauchy()),
        "D1-exp-cauchy" => d1(ErrorLaw::SumOf {
            a: Box::new(e1()),
            b: Box::new(ErrorLaw::Cauchy { location: 0.0, scale: 2.0 }),
        }),
        "M3" => m3([e1(), e1(), e1()], false),
        "M3-equal" => m3([e1(), ErrorLaw::standard_normal(), e1()], true),
        "M2" => m2([e1(), ErrorLaw::standard_normal()], true),
        "M2-equal" => m2([e1(), ErrorLaw::standard_normal()], false),
        "M2-quantile" => m2([e1(), ErrorLaw::exp(-6.5)], false),
        _ => return Err(Error::Unknown { kind: "design", name: name.into() }),
    };
    d.name = name.into();
    Ok(d)
}

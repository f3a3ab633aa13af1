//! Seeded random pure standard-form parameters and mixed three-mode
//! covariance matrices.
//!
//! Sample `i` is drawn from its own ChaCha8 stream (`seed`, stream `i`), so
//! any index can be generated independently and parallel generation gives the
//! same sequence as serial generation.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, PureStateParams};

/// Upper end of the local invariants under `low_range_bias`.
pub const LOW_RANGE_MAX: f64 = 1.5;

// Keeps pure and mixed streams apart for the same user seed.
const PURE_DOMAIN: u64 = 0x7075_7265;
const MIXED_DOMAIN: u64 = 0x6d69_7864;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub a_max: f64,
    pub nu_max: f64,
    pub r_max: f64,
    pub count: usize,
    pub low_range_bias: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            a_max: 4.0,
            nu_max: 2.0,
            r_max: 3f64.ln(),
            count: 1,
            low_range_bias: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_max > 1.0 && self.a_max.is_finite()) {
            return Err(Error::Domain(format!("a_max = {} must exceed 1", self.a_max)));
        }
        if !(self.nu_max >= 1.0 && self.nu_max.is_finite()) {
            return Err(Error::Domain(format!("nu_max = {} must be >= 1", self.nu_max)));
        }
        if !(self.r_max >= 0.0 && self.r_max.is_finite()) {
            return Err(Error::Domain(format!("r_max = {} must be >= 0", self.r_max)));
        }
        if self.count == 0 {
            return Err(Error::Domain("count must be >= 1".into()));
        }
        Ok(())
    }

    fn pure_range(&self) -> f64 {
        if self.low_range_bias {
            LOW_RANGE_MAX.min(self.a_max)
        } else {
            self.a_max
        }
    }
}

fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(index);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Pure parameters of sample `index` together with the number of draws the
/// rejection step needed.
pub fn pure_params_at(cfg: &SamplerConfig, index: u64) -> (PureStateParams, u64) {
    let mut rng = stream(cfg.seed, PURE_DOMAIN, index);
    let hi = cfg.pure_range();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let a = [uniform(&mut rng, 1.0, hi), uniform(&mut rng, 1.0, hi), uniform(&mut rng, 1.0, hi)];
        if let Ok(p) = PureStateParams::new(a[0], a[1], a[2]) {
            return (p, attempts);
        }
    }
}

/// `cfg.count` triples satisfying the triangle condition, uniform on the
/// feasible part of `[1, a_max]³`.
pub fn sample_pure_params(cfg: &SamplerConfig) -> Result<Vec<PureStateParams>> {
    cfg.validate()?;
    Ok((0..cfg.count as u64)
        .into_par_iter()
        .map(|i| pure_params_at(cfg, i).0)
        .collect())
}

/// Fraction of draws accepted by the triangle rejection step over the first
/// `cfg.count` samples.
pub fn pure_acceptance_rate(cfg: &SamplerConfig) -> Result<f64> {
    cfg.validate()?;
    let attempts: u64 = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| pure_params_at(cfg, i).1)
        .sum();
    Ok(cfg.count as f64 / attempts as f64)
}

/// Distribution of the mixed samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixedLaw {
    /// `S diag(ν) Sᵀ`, `S` = Haar passive × squeezers × Haar passive.
    Euler,
    /// Product of thermal states: the same `ν` draws, no symplectic.
    Product,
}

impl MixedLaw {
    pub fn name(&self) -> &'static str {
        match self {
            MixedLaw::Euler => "williamson-euler-haar",
            MixedLaw::Product => "thermal-product",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedSample {
    pub cm: CovarianceMatrix,
    pub nu: [f64; 3],
    pub squeezing: [f64; 3],
}

impl MixedSample {
    /// `(ν₁ν₂ν₃)⁻¹`.
    pub fn purity(&self) -> f64 {
        1.0 / (self.nu[0] * self.nu[1] * self.nu[2])
    }
}

/// Haar-random `n × n` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` absorbed into `Q`.
pub fn haar_unitary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<Complex<f64>> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Orthogonal symplectic matrix of the passive transformation `U = X + iY`
/// on `(q1, p1, ..., qn, pn)`.
pub fn passive_symplectic(u: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (x, y) = (u[(j, k)].re, u[(j, k)].im);
            o[(2 * j, 2 * k)] = x;
            o[(2 * j, 2 * k + 1)] = -y;
            o[(2 * j + 1, 2 * k)] = y;
            o[(2 * j + 1, 2 * k + 1)] = x;
        }
    }
    o
}

/// `O₁ Z(r) O₂ diag(ν) O₂ᵀ Z(r) O₁ᵀ` with `Z(r) = ⊕ diag(e^{-r_j}, e^{r_j})`.
pub fn euler_covariance(
    nu: [f64; 3],
    squeezing: [f64; 3],
    o1: &DMatrix<f64>,
    o2: &DMatrix<f64>,
) -> Result<CovarianceMatrix> {
    let z = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(6, |i, _| {
        let r = squeezing[i / 2];
        if i % 2 == 0 { (-r).exp() } else { r.exp() }
    }));
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(6, |i, _| nu[i / 2]));
    let s = o1 * z * o2;
    let sigma = &s * d * s.transpose();
    let sym = (&sigma + sigma.transpose()) * 0.5;
    CovarianceMatrix::new(sym)
}

/// Mixed sample `index` under `law`.
pub fn mixed_sample_at(cfg: &SamplerConfig, law: MixedLaw, index: u64) -> Result<MixedSample> {
    let mut rng = stream(cfg.seed, MIXED_DOMAIN, index);
    let nu = [
        uniform(&mut rng, 1.0, cfg.nu_max),
        uniform(&mut rng, 1.0, cfg.nu_max),
        uniform(&mut rng, 1.0, cfg.nu_max),
    ];
    match law {
        MixedLaw::Product => Ok(MixedSample {
            cm: CovarianceMatrix::thermal_product(&nu)?,
            nu,
            squeezing: [0.0; 3],
        }),
        MixedLaw::Euler => {
            let squeezing = [
                uniform(&mut rng, 0.0, cfg.r_max),
                uniform(&mut rng, 0.0, cfg.r_max),
                uniform(&mut rng, 0.0, cfg.r_max),
            ];
            let o1 = passive_symplectic(&haar_unitary(&mut rng, 3));
            let o2 = passive_symplectic(&haar_unitary(&mut rng, 3));
            Ok(MixedSample {
                cm: euler_covariance(nu, squeezing, &o1, &o2)?,
                nu,
                squeezing,
            })
        }
    }
}

pub fn sample_mixed(cfg: &SamplerConfig, law: MixedLaw) -> Result<Vec<MixedSample>> {
    cfg.validate()?;
    (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| mixed_sample_at(cfg, law, i))
        .collect()
}

/// Covariance matrices of [`sample_mixed`] under the default law.
pub fn sample_mixed_cm(cfg: &SamplerConfig) -> Result<Vec<CovarianceMatrix>> {
    Ok(sample_mixed(cfg, MixedLaw::Euler)?.into_iter().map(|s| s.cm).collect())
}

//! Phase-space Svetlichny functional under displaced-parity measurements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::optimizer::{self, OptimizerOptions};
use crate::wigner::GaussianKernel;

/// Local bound of the Svetlichny inequality.
pub const SVETLICHNY_BOUND: f64 = 4.0;

/// `sqrt(3/2)`: symmetric pure states violate the inequality only above it.
pub fn violation_threshold() -> f64 {
    1.5f64.sqrt()
}

/// `16 / 3^(9/8)`, the supremum reached by symmetric pure states as `a → ∞`.
pub fn asymptotic_max() -> f64 {
    16.0 / 3f64.powf(9.0 / 8.0)
}

/// `3^(9/8) / 4`: no state of lower purity can exceed the local bound.
pub fn purity_cutoff() -> f64 {
    3f64.powf(9.0 / 8.0) / 4.0
}

/// Two settings per mode, each a phase-space point `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pub xi: [[f64; 2]; 3],
    pub xi_prime: [[f64; 2]; 3],
}

impl MeasurementSettings {
    pub fn origin() -> Self {
        Self {
            xi: [[0.0; 2]; 3],
            xi_prime: [[0.0; 2]; 3],
        }
    }

    /// `ξ_j = (0, p_j)`, `ξ'_j = (0, -p_j)`.
    pub fn momentum_antisymmetric(p: [f64; 3]) -> Self {
        Self {
            xi: [[0.0, p[0]], [0.0, p[1]], [0.0, p[2]]],
            xi_prime: [[0.0, -p[0]], [0.0, -p[1]], [0.0, -p[2]]],
        }
    }

    /// Flattened as `(ξ1, ξ2, ξ3, ξ'1, ξ'2, ξ'3)`, each `(q, p)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.xi
            .iter()
            .chain(self.xi_prime.iter())
            .flat_map(|pt| pt.iter().copied())
            .collect()
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() != 12 {
            return Err(Error::DimensionMismatch {
                expected: 12,
                got: x.len(),
            });
        }
        let pt = |i: usize| [x[2 * i], x[2 * i + 1]];
        Ok(Self {
            xi: [pt(0), pt(1), pt(2)],
            xi_prime: [pt(3), pt(4), pt(5)],
        })
    }

    /// Setting of `mode` (0-based); `primed` selects `ξ'`.
    pub fn point(&self, mode: usize, primed: bool) -> [f64; 2] {
        if primed {
            self.xi_prime[mode]
        } else {
            self.xi[mode]
        }
    }

    /// Phase-space point of the three-mode correlator with the given
    /// primed/unprimed choice per mode.
    pub fn joint_point(&self, primed: [bool; 3]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for m in 0..3 {
            let pt = self.point(m, primed[m]);
            out[2 * m] = pt[0];
            out[2 * m + 1] = pt[1];
        }
        out
    }
}

/// The eight correlators of the functional: sign and primed flags per mode.
pub const SVETLICHNY_TERMS: [(f64, [bool; 3]); 8] = [
    (1.0, [true, false, false]),
    (1.0, [false, true, false]),
    (1.0, [false, false, true]),
    (-1.0, [true, true, true]),
    (1.0, [false, true, true]),
    (1.0, [true, false, true]),
    (1.0, [true, true, false]),
    (-1.0, [false, false, false]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizationResult {
    /// `|S|` at `settings`.
    pub value: f64,
    pub settings: MeasurementSettings,
    pub evaluations: usize,
    pub converged: bool,
}

fn three_mode_kernel(cm: &CovarianceMatrix) -> Result<GaussianKernel> {
    if cm.modes() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: cm.modes(),
        });
    }
    GaussianKernel::new(cm)
}

/// Signed Svetlichny functional from a prepared three-mode kernel.
pub fn svetlichny_with_kernel(kernel: &GaussianKernel, s: &MeasurementSettings) -> f64 {
    SVETLICHNY_TERMS
        .iter()
        .map(|(sign, primed)| sign * kernel.correlator_unchecked(&s.joint_point(*primed)))
        .sum()
}

/// Signed Svetlichny functional of `cm` at settings `s`.
pub fn svetlichny_value(cm: &CovarianceMatrix, s: &MeasurementSettings) -> Result<f64> {
    Ok(svetlichny_with_kernel(&three_mode_kernel(cm)?, s))
}

/// `f_a = a² - 1 + sqrt(9a⁴ - 10a² + 1)`.
pub fn f_of_a(a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::Domain(format!("a = {a} must be >= 1")));
    }
    let a2 = a * a;
    // 9a⁴ - 10a² + 1 = (9a² - 1)(a² - 1), nonnegative and cancellation-free
    Ok(a2 - 1.0 + ((9.0 * a2 - 1.0) * (a2 - 1.0)).sqrt())
}

/// Reference closed form `p* = sqrt((a / f_a) atanh(f_a / (4a²)))` for the
/// symmetric optimal momentum (0 for `a <= sqrt(3/2)`).
///
/// This closed form does not locate the maximum of the functional as
/// evaluated here; [`symmetric_optimal_momentum`] does. It is kept as the
/// published reference value.
pub fn symmetric_pstar(a: f64) -> Result<f64> {
    let f = f_of_a(a)?;
    if a <= violation_threshold() {
        return Ok(0.0);
    }
    let arg = f / (4.0 * a * a);
    if !(arg > 0.0 && arg < 1.0) {
        return Err(Error::Domain(format!("atanh argument {arg} outside (0, 1)")));
    }
    Ok(((a / f) * arg.atanh()).sqrt())
}

/// Momentum `p` of the maximizing settings `ξ_j = (0, p)`, `ξ'_j = (0, -p)`
/// for the pure symmetric state `σ^s(a)`:
/// `p² = (a / 2f_a) ln[(2a² + f_a) / (6a² - f_a)]`, zero for `a <= sqrt(3/2)`.
pub fn symmetric_optimal_momentum(a: f64) -> Result<f64> {
    let f = f_of_a(a)?;
    if a <= violation_threshold() {
        return Ok(0.0);
    }
    let a2 = a * a;
    let den = 6.0 * a2 - f;
    if !(den > 0.0) {
        return Err(Error::Domain(format!("6a² - f_a = {den} is not positive")));
    }
    let p2 = a / (2.0 * f) * ((2.0 * a2 + f) / den).ln();
    Ok(p2.max(0.0).sqrt())
}

/// Closed-form maximum of `|S|` over settings for `σ^s(a)`.
pub fn symmetric_max_analytic(a: f64) -> Result<f64> {
    f_of_a(a)?;
    if a <= violation_threshold() {
        return Ok(SVETLICHNY_BOUND);
    }
    symmetric_violating_branch(a)
}

/// `4(4a² + 3f_a - 4)(8a² - 2f_a - 5)^{3/(8 - 8a² + 2f_a)} / (4a² + 5)`, the
/// branch of [`symmetric_max_analytic`] above `a = sqrt(3/2)`, without the
/// cutoff. It equals 4 at the threshold.
pub fn symmetric_violating_branch(a: f64) -> Result<f64> {
    let f = f_of_a(a)?;
    let a2 = a * a;
    let base = 8.0 * a2 - 2.0 * f - 5.0;
    if !(base > 0.0) {
        return Err(Error::Domain(format!("base 8a² - 2f_a - 5 = {base} is not positive")));
    }
    let exponent = 3.0 / (-8.0 * a2 + 2.0 * f + 8.0);
    Ok(4.0 * (4.0 * a2 + 3.0 * f - 4.0) * base.powf(exponent) / (4.0 * a2 + 5.0))
}

/// Best symmetric momentum for a covariance matrix invariant under mode
/// permutations, from the momentum block of `σ⁻¹`; `None` if `cm` is not
/// symmetric.
///
/// Along `p_j = p` the functional is `6c e^{-A p²} - 2c e^{-B p²}` with
/// `A = 3u - 2w`, `B = 3u + 6w` (`u`, `w`: diagonal and off-diagonal entries of
/// that block), maximal at `p² = ln(B / 3A) / (B - A)` when `B > 3A`.
pub fn symmetric_seed_momentum(cm: &CovarianceMatrix) -> Option<f64> {
    if cm.modes() != 3 || !is_permutation_symmetric(cm) {
        return None;
    }
    let inv = cm.matrix().clone().try_inverse()?;
    let u = inv[(1, 1)];
    let w = inv[(1, 3)];
    let a = 3.0 * u - 2.0 * w;
    let b = 3.0 * u + 6.0 * w;
    if !(a > 0.0 && b > 3.0 * a) {
        return Some(0.0);
    }
    Some(((b / (3.0 * a)).ln() / (b - a)).sqrt())
}

fn is_permutation_symmetric(cm: &CovarianceMatrix) -> bool {
    let m = cm.matrix();
    let tol = 1e-10 * m.amax().max(1.0);
    let block = |r: usize, c: usize| [m[(2 * r, 2 * c)], m[(2 * r, 2 * c + 1)], m[(2 * r + 1, 2 * c)], m[(2 * r + 1, 2 * c + 1)]];
    let same = |x: [f64; 4], y: [f64; 4]| x.iter().zip(&y).all(|(a, b)| (a - b).abs() <= tol);
    same(block(0, 0), block(1, 1))
        && same(block(0, 0), block(2, 2))
        && same(block(0, 1), block(0, 2))
        && same(block(0, 1), block(1, 2))
        && same(block(0, 1), block(1, 0))
}

/// Maximizes `|S|` over the momentum-antisymmetric ansatz
/// `ξ_j = (0, p_j)`, `ξ'_j = (0, -p_j)`.
pub fn maximize_restricted(cm: &CovarianceMatrix, opts: &OptimizerOptions) -> Result<MaximizationResult> {
    opts.validate()?;
    let kernel = three_mode_kernel(cm)?;
    let objective = |p: &[f64]| {
        let s = MeasurementSettings::momentum_antisymmetric([p[0], p[1], p[2]]);
        svetlichny_with_kernel(&kernel, &s).abs()
    };
    let mut seeds = vec![vec![0.0; 3]];
    if let Some(p) = symmetric_seed_momentum(cm) {
        if p > 0.0 {
            seeds.push(vec![p; 3]);
        }
    }
    let best = optimizer::maximize(&objective, 3, opts, &seeds);
    let settings = MeasurementSettings::momentum_antisymmetric([best.point[0], best.point[1], best.point[2]]);
    Ok(MaximizationResult {
        value: svetlichny_with_kernel(&kernel, &settings).abs(),
        settings,
        evaluations: best.evaluations,
        converged: best.converged,
    })
}

/// Maximizes `|S|` over all twelve setting coordinates.
///
/// The restricted optimum and the origin are injected as the first starts, so
/// the result is never below [`maximize_restricted`].
pub fn maximize_full(cm: &CovarianceMatrix, opts: &OptimizerOptions) -> Result<MaximizationResult> {
    let restricted = maximize_restricted(cm, opts)?;
    let kernel = three_mode_kernel(cm)?;
    let objective = |x: &[f64]| {
        let s = MeasurementSettings::from_slice(x).expect("12 coordinates");
        svetlichny_with_kernel(&kernel, &s).abs()
    };
    let seeds = vec![restricted.settings.to_vec(), vec![0.0; 12]];
    let best = optimizer::maximize(&objective, 12, opts, &seeds);
    let settings = MeasurementSettings::from_slice(&best.point)?;
    let value = svetlichny_with_kernel(&kernel, &settings).abs();
    if value < restricted.value {
        return Ok(MaximizationResult {
            evaluations: restricted.evaluations + best.evaluations,
            ..restricted
        });
    }
    Ok(MaximizationResult {
        value,
        settings,
        evaluations: restricted.evaluations + best.evaluations,
        converged: best.converged,
    })
}

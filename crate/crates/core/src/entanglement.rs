//! Rényi-2 entropies, residual tripartite Rényi-2 entanglement of pure
//! three-mode states, and the inseparability/nonlocality classification of
//! symmetric mixed states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{is_ppt, scaled_symmetric_mixed, CovarianceMatrix, ModeSet, PureStateParams};
use crate::optimizer::OptimizerOptions;
use crate::svetlichny::{f_of_a, maximize_restricted, symmetric_max_analytic, SVETLICHNY_BOUND};

/// Margin above the local bound required to flag a violation.
pub const VIOLATION_MARGIN: f64 = 1e-9;

/// `½ ln(32/27)`: pure states above this entanglement violate the
/// Svetlichny inequality.
pub fn entanglement_threshold() -> f64 {
    0.5 * (32.0f64 / 27.0).ln()
}

/// `S₂ = ½ ln det σ`.
pub fn renyi2_entropy(cm: &CovarianceMatrix) -> f64 {
    0.5 * cm.determinant().ln()
}

/// Rényi-2 entanglement between modes `i` and `j` of a pure three-mode state
/// with local invariants `(ai, aj, ak)`, `k` being the traced mode.
///
/// The two-mode marginal has symplectic spectrum `{1, ak}`; its Gaussian
/// Rényi-2 entanglement is `½ ln g` with
///
/// * `g = 1` if `ak² >= ai² + aj² - 1` (PPT marginal),
/// * `g = ((ai² - aj²) / (ak² - 1))²` if `ak <= α`,
/// * `g = β / (8 ak²)` otherwise,
///
/// where `α² = [2s + d² + |d| sqrt(d² + 8s)] / (2s)` with `s = ai² + aj²`,
/// `d = ai² - aj²`, and
/// `β = 2(ai² + aj² + ak²) + 2(ai²aj² + ai²ak² + aj²ak²) - ai⁴ - aj⁴ - ak⁴ - sqrt(δ) - 1`,
/// `δ = Π_{±,±} ((ak ± ai ± aj)² - 1)`.
pub fn two_mode_renyi2(ai: f64, aj: f64, ak: f64) -> f64 {
    0.5 * two_mode_renyi2_argument(ai, aj, ak).ln()
}

fn two_mode_renyi2_argument(ai: f64, aj: f64, ak: f64) -> f64 {
    let (ai2, aj2, ak2) = (ai * ai, aj * aj, ak * ak);
    if ak2 >= ai2 + aj2 - 1.0 {
        return 1.0;
    }
    let s = ai2 + aj2;
    let d = ai2 - aj2;
    let alpha2 = (2.0 * s + d * d + d.abs() * (d * d + 8.0 * s).sqrt()) / (2.0 * s);
    let g = if ak2 <= alpha2 {
        (d / (ak2 - 1.0)).powi(2)
    } else {
        let mut delta = 1.0;
        for si in [1.0, -1.0] {
            for sj in [1.0, -1.0] {
                delta *= (ak + si * ai + sj * aj).powi(2) - 1.0;
            }
        }
        let beta = 2.0 * (ai2 + aj2 + ak2) + 2.0 * (ai2 * aj2 + ai2 * ak2 + aj2 * ak2)
            - ai2 * ai2
            - aj2 * aj2
            - ak2 * ak2
            - delta.max(0.0).sqrt()
            - 1.0;
        beta / (8.0 * ak2)
    };
    // rounding can push g marginally below 1 at the PPT boundary
    g.max(1.0)
}

/// Residual Rényi-2 tripartite entanglement of the pure state with local
/// invariants `params`: the minimum over focus modes `i` of
/// `E(i|jk) - E(i|j) - E(i|k)`, with `E(i|jk) = ln a_i`.
pub fn tripartite_renyi2_pure(params: &PureStateParams) -> f64 {
    let a = params.values();
    (0..3)
        .map(|i| {
            let (j, k) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            a[i].ln() - two_mode_renyi2(a[i], a[j], a[k]) - two_mode_renyi2(a[i], a[k], a[j])
        })
        .fold(f64::INFINITY, f64::min)
}

/// `E(σ^s(a)) = ln[8a³ / (4(a⁴ + a²) - f_a (a² - 1))]`.
pub fn tripartite_renyi2_symmetric(a: f64) -> Result<f64> {
    let f = f_of_a(a)?;
    let a2 = a * a;
    Ok((8.0 * a2 * a / (4.0 * (a2 * a2 + a2) - f * (a2 - 1.0))).ln())
}

/// Local invariant `a` of the symmetric pure state with tripartite
/// entanglement `e` (inverse of [`tripartite_renyi2_symmetric`]).
pub fn symmetric_a_for_entanglement(e: f64) -> Result<f64> {
    if !(e >= 0.0) || !e.is_finite() {
        return Err(Error::Domain(format!("entanglement {e} must be finite and >= 0")));
    }
    if e == 0.0 {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while tripartite_renyi2_symmetric(hi)? < e {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Domain(format!("entanglement {e} out of range")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tripartite_renyi2_symmetric(mid)? < e {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximal Svetlichny value of the symmetric pure state carrying tripartite
/// entanglement `e`; the lower envelope of `|S_max|` at fixed entanglement.
pub fn symmetric_lower_bound(e: f64) -> Result<f64> {
    symmetric_max_analytic(symmetric_a_for_entanglement(e.max(0.0))?)
}

/// Inseparability and nonlocality flags of a symmetric mixed state.
///
/// Flags are cumulative: `promiscuous` and `svetlichny_nonlocal` imply
/// `fully_inseparable`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionLabel {
    /// PPT across `1|23`: fully separable or bound entangled.
    pub separable_or_bound: bool,
    pub fully_inseparable: bool,
    pub promiscuous: bool,
    pub svetlichny_nonlocal: bool,
    /// Smallest symplectic eigenvalue of the partial transpose across `1|23`.
    pub min_nu_1_23: f64,
    /// Smallest symplectic eigenvalue of the partially transposed two-mode
    /// marginals, minimized over the three pairs.
    pub min_nu_two_mode: f64,
    pub s_max: f64,
}

impl RegionLabel {
    /// Compact flag string, e.g. `FI|PR|SN`; `SEP` for the PPT region.
    pub fn flags(&self) -> String {
        if self.separable_or_bound {
            return "SEP".into();
        }
        let mut parts = vec!["FI"];
        if self.promiscuous {
            parts.push("PR");
        }
        if self.svetlichny_nonlocal {
            parts.push("SN");
        }
        parts.join("|")
    }
}

pub fn classify_symmetric_mixed(a: f64, mu: f64) -> Result<RegionLabel> {
    classify_symmetric_mixed_with(a, mu, &OptimizerOptions::default())
}

pub fn classify_symmetric_mixed_with(a: f64, mu: f64, opts: &OptimizerOptions) -> Result<RegionLabel> {
    let cm = scaled_symmetric_mixed(a, mu)?;
    let (ppt, min_nu_1_23) = is_ppt(&cm, ModeSet::single(1)?)?;
    let mut min_nu_two_mode = f64::INFINITY;
    for (j, k) in [(1, 2), (1, 3), (2, 3)] {
        let pair = cm.reduce(ModeSet::new(&[j, k])?)?;
        let (_, nu) = is_ppt(&pair, ModeSet::single(1)?)?;
        min_nu_two_mode = min_nu_two_mode.min(nu);
    }
    let s_max = maximize_restricted(&cm, opts)?.value;
    let fully_inseparable = !ppt;
    let two_mode_npt = min_nu_two_mode < 1.0 - crate::gaussian::VALIDITY_TOL;
    Ok(RegionLabel {
        separable_or_bound: ppt,
        fully_inseparable,
        promiscuous: fully_inseparable && two_mode_npt,
        svetlichny_nonlocal: fully_inseparable && s_max > SVETLICHNY_BOUND + VIOLATION_MARGIN,
        min_nu_1_23,
        min_nu_two_mode,
        s_max,
    })
}

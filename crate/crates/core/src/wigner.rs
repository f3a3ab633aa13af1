//! Gaussian Wigner function and displaced-parity correlators.
//!
//! For an undisplaced Gaussian state the expectation of the product of
//! displaced parities on a set of `k` modes equals `π^k W(ξ)` of the marginal,
//! i.e. `exp(-ξᵀ σ⁻¹ ξ) / sqrt(det σ)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeSet};

/// Phase-space point `(q1, p1, ..., qk, pk)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint(pub Vec<f64>);

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn origin(modes: usize) -> Self {
        Self(vec![0.0; 2 * modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Factorized Gaussian `exp(-ξᵀ σ⁻¹ ξ) / sqrt(det σ)` for one covariance
/// matrix, reused across evaluation points.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    dim: usize,
    inv: [f64; 36],
    norm: f64,
}

impl GaussianKernel {
    pub fn new(cm: &CovarianceMatrix) -> Result<Self> {
        let m = cm.matrix();
        let dim = m.nrows();
        let chol = m.clone().cholesky().ok_or_else(|| {
            Error::InvalidCovariance("covariance matrix is not positive definite".into())
        })?;
        let det_sqrt: f64 = chol.l_dirty().diagonal().iter().product();
        let inverse = chol.inverse();
        let mut inv = [0.0; 36];
        for r in 0..dim {
            for c in 0..dim {
                inv[r * dim + c] = 0.5 * (inverse[(r, c)] + inverse[(c, r)]);
            }
        }
        Ok(Self {
            dim,
            inv,
            norm: det_sqrt.recip(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(det σ)^(-1/2)`, the value at the origin.
    pub fn peak(&self) -> f64 {
        self.norm
    }

    /// `ξᵀ σ⁻¹ ξ`.
    #[inline]
    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for r in 0..d {
            let row = &self.inv[r * d..(r + 1) * d];
            let mut s = 0.0;
            for c in 0..d {
                s += row[c] * xi[c];
            }
            acc += xi[r] * s;
        }
        acc
    }

    /// Displaced-parity correlator at `xi`; no dimension check.
    #[inline]
    pub fn correlator_unchecked(&self, xi: &[f64]) -> f64 {
        self.norm * (-self.quadratic_form(xi)).exp()
    }

    pub fn correlator(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        Ok(self.correlator_unchecked(xi))
    }
}

/// Kernels of all seven marginals of a three-mode state, indexed by mode
/// bitmask.
#[derive(Debug, Clone)]
pub struct MarginalKernels {
    kernels: Vec<GaussianKernel>,
}

impl MarginalKernels {
    pub fn new(cm: &CovarianceMatrix) -> Result<Self> {
        if cm.modes() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: cm.modes(),
            });
        }
        let kernels = (1..8u8)
            .map(|bits| GaussianKernel::new(&cm.reduce(ModeSet::from_bits(bits)?)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kernels })
    }

    pub fn get(&self, modes: ModeSet) -> &GaussianKernel {
        &self.kernels[modes.bits() as usize - 1]
    }
}

/// Wigner distribution `exp(-ξᵀ σ⁻¹ ξ) / (π^n sqrt(det σ))`.
pub fn wigner_value(cm: &CovarianceMatrix, xi: &PhasePoint) -> Result<f64> {
    let kernel = GaussianKernel::new(cm)?;
    let value = kernel.correlator(xi.as_slice())?;
    Ok(value / PI.powi(cm.modes() as i32))
}

/// Expectation of the product of displaced parities on `modes`, measured at
/// `point` (two coordinates per selected mode, in increasing mode order).
pub fn parity_correlator(cm: &CovarianceMatrix, modes: ModeSet, point: &PhasePoint) -> Result<f64> {
    let reduced = cm.reduce(modes)?;
    if point.as_slice().len() != 2 * modes.len() {
        return Err(Error::DimensionMismatch {
            expected: 2 * modes.len(),
            got: point.as_slice().len(),
        });
    }
    let w = wigner_value(&reduced, point)?;
    Ok(PI.powi(modes.len() as i32) * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{symmetric_pure, CovarianceMatrix};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::DVector;

    #[test]
    fn vacuum_origin() {
        let v = CovarianceMatrix::vacuum(3);
        let w = wigner_value(&v, &PhasePoint::origin(3)).unwrap();
        assert_relative_eq!(w, PI.powi(-3), max_relative = 1e-15);
    }

    #[test]
    fn origin_scales_with_determinant() {
        let s = CovarianceMatrix::vacuum(3).scaled(1.3).unwrap();
        let w = wigner_value(&s, &PhasePoint::origin(3)).unwrap();
        assert_relative_eq!(w, 1.0 / (PI.powi(3) * s.determinant().sqrt()), max_relative = 1e-13);
    }

    #[test]
    fn matches_explicit_inverse() {
        let s = symmetric_pure(2.0).unwrap();
        let xi = vec![0.0, 0.3, 0.0, 0.3, 0.0, 0.3];
        // explicit LU inverse as the oracle
        let inv = s.matrix().clone().try_inverse().unwrap();
        let x = DVector::from_vec(xi.clone());
        let q = (x.transpose() * inv * &x)[(0, 0)];
        let expected = (-q).exp() / (PI.powi(3) * s.matrix().determinant().sqrt());
        let got = wigner_value(&s, &PhasePoint::new(xi)).unwrap();
        assert!(got > 0.0);
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let s = symmetric_pure(2.0).unwrap();
        assert!(matches!(
            wigner_value(&s, &PhasePoint::origin(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(parity_correlator(&s, ModeSet::single(1).unwrap(), &PhasePoint::origin(2)).is_err());
    }

    #[test]
    fn correlator_examples() {
        let v = CovarianceMatrix::vacuum(3);
        assert_abs_diff_eq!(
            parity_correlator(&v, ModeSet::ALL, &PhasePoint::origin(3)).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let s = symmetric_pure(3.0).unwrap();
        assert_abs_diff_eq!(
            parity_correlator(&s, ModeSet::ALL, &PhasePoint::origin(3)).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        let s2 = symmetric_pure(2.0).unwrap();
        let c = parity_correlator(&s2, ModeSet::single(1).unwrap(), &PhasePoint::new(vec![0.0, 1.0]))
            .unwrap();
        assert_abs_diff_eq!(c, (-0.5f64).exp() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn single_mode_vacuum() {
        let v = CovarianceMatrix::vacuum(3);
        for (q, p) in [(0.3, -0.2), (1.0, 1.0), (-2.0, 0.5)] {
            let c = parity_correlator(&v, ModeSet::single(2).unwrap(), &PhasePoint::new(vec![q, p]))
                .unwrap();
            assert_abs_diff_eq!(c, (-(q * q + p * p)).exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn marginal_kernels_match_reduction() {
        let s = symmetric_pure(1.7).unwrap();
        let mk = MarginalKernels::new(&s).unwrap();
        let set = ModeSet::new(&[1, 3]).unwrap();
        let pt = [0.1, -0.4, 0.7, 0.2];
        let direct = parity_correlator(&s, set, &PhasePoint::new(pt.to_vec())).unwrap();
        assert_relative_eq!(mk.get(set).correlator(&pt).unwrap(), direct, max_relative = 1e-13);
    }
}

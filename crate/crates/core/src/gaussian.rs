//! Covariance matrices of undisplaced Gaussian states of up to three modes.
//!
//! Quadratures are ordered `(q1, p1, q2, p2, q3, p3)` and normalized so that
//! the vacuum has the identity as covariance matrix.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svetlichny::f_of_a;

/// Tolerance on the bona fide condition and on positive definiteness.
pub const VALIDITY_TOL: f64 = 1e-9;
/// Maximum tolerated asymmetry of a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack allowed on each triangle inequality of the pure standard form.
pub const TRIANGLE_TOL: f64 = 1e-12;
/// Radicands of the standard-form coefficients in `[-RADICAND_CLAMP, 0)` are
/// treated as zero.
pub const RADICAND_CLAMP: f64 = 1e-9;

/// The symplectic form `ω ⊕ ... ⊕ ω` with `ω = [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    modes: usize,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = 2 * self.modes;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..self.modes {
            m[(2 * j, 2 * j + 1)] = 1.0;
            m[(2 * j + 1, 2 * j)] = -1.0;
        }
        m
    }
}

/// A nonempty subset of the modes `{1, 2, 3}`, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const ALL: ModeSet = ModeSet(0b111);

    /// Builds a set from 1-based mode labels.
    pub fn new(modes: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &m in modes {
            if !(1..=3).contains(&m) {
                return Err(Error::Domain(format!("mode label {m} outside 1..=3")));
            }
            bits |= 1 << (m - 1);
        }
        if bits == 0 {
            return Err(Error::Domain("empty mode set".into()));
        }
        Ok(ModeSet(bits))
    }

    pub fn single(mode: usize) -> Result<Self> {
        Self::new(&[mode])
    }

    pub fn bits(&self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits == 0 || bits > 0b111 {
            return Err(Error::Domain(format!("invalid mode bitmask {bits:#b}")));
        }
        Ok(ModeSet(bits))
    }

    pub fn contains(&self, mode: usize) -> bool {
        (1..=3).contains(&mode) && self.0 & (1 << (mode - 1)) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// 1-based labels in increasing order.
    pub fn labels(&self) -> Vec<usize> {
        (1..=3).filter(|&m| self.contains(m)).collect()
    }

    pub fn intersection(&self, other: &ModeSet) -> Option<ModeSet> {
        let bits = self.0 & other.0;
        (bits != 0).then_some(ModeSet(bits))
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.labels().iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}

/// Covariance matrix of an undisplaced Gaussian state of 1 to 3 modes.
///
/// Every value of this type has passed [`CovarianceMatrix::new`] validation or
/// was derived from one that did by a physicality-preserving operation.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    sigma: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry, positive definiteness and the uncertainty relation.
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n || n == 0 || n % 2 != 0 || n > 6 {
            return Err(Error::InvalidCovariance(format!(
                "shape {}x{} is not 2k x 2k with k in 1..=3",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if sigma.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidCovariance(format!(
                        "asymmetric at ({i},{j}): {} vs {}",
                        sigma[(i, j)],
                        sigma[(j, i)]
                    )));
                }
            }
        }
        let nu = symplectic_spectrum(&sigma)?;
        let min_nu = nu.last().copied().unwrap_or(f64::NAN);
        if min_nu < 1.0 - VALIDITY_TOL {
            return Err(Error::InvalidCovariance(format!(
                "not bona fide: minimal symplectic eigenvalue {min_nu}"
            )));
        }
        Ok(Self { sigma })
    }

    /// Builds from a row-major slice of `(2k)^2` entries.
    pub fn from_row_slice(modes: usize, entries: &[f64]) -> Result<Self> {
        let n = 2 * modes;
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub(crate) fn from_trusted(sigma: DMatrix<f64>) -> Self {
        Self { sigma }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            sigma: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    /// Product of single-mode thermal states with the given symplectic
    /// eigenvalues.
    pub fn thermal_product(nus: &[f64]) -> Result<Self> {
        let mut diag = Vec::with_capacity(2 * nus.len());
        for &nu in nus {
            diag.push(nu);
            diag.push(nu);
        }
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    pub fn modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.sigma
    }

    /// Row-major entries.
    pub fn to_row_vec(&self) -> Vec<f64> {
        let n = self.sigma.nrows();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.sigma[(i, j)])
            .collect()
    }

    /// `c * sigma`; physical for `c >= 1` or when the result stays bona fide.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("scale factor {c} must be positive")));
        }
        Self::new(&self.sigma * c)
    }

    pub fn determinant(&self) -> f64 {
        self.sigma.determinant()
    }

    /// `(det sigma)^(-1/2)`.
    pub fn purity(&self) -> f64 {
        purity(self)
    }

    pub fn reduce(&self, modes: ModeSet) -> Result<CovarianceMatrix> {
        reduce(self, modes)
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        // validated on construction
        symplectic_spectrum(&self.sigma).expect("covariance matrix is positive definite")
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CmFile = serde_json::from_str(text)?;
        Self::from_row_slice(file.modes, &file.sigma)
    }

    pub fn to_json(&self) -> String {
        let file = CmFile {
            modes: self.modes(),
            sigma: self.to_row_vec(),
        };
        serde_json::to_string(&file).expect("plain numeric payload")
    }
}

/// On-disk form: `{"modes": 3, "sigma": [36 row-major reals]}`.
#[derive(Debug, Serialize, Deserialize)]
struct CmFile {
    modes: usize,
    sigma: Vec<f64>,
}

/// Local symplectic invariants `(a1, a2, a3)` of a pure three-mode state in
/// standard form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureStateParams {
    a: [f64; 3],
}

impl PureStateParams {
    pub fn new(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let a = [a1, a2, a3];
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite invariant in {a:?}")));
        }
        if let Some(v) = a.iter().find(|&&x| x < 1.0 - TRIANGLE_TOL) {
            return Err(Error::TriangleViolation(format!(
                "local invariant {v} is below 1"
            )));
        }
        for i in 0..3 {
            let (j, k) = others(i);
            let lower = (a[j] - a[k]).abs() + 1.0;
            let upper = a[j] + a[k] - 1.0;
            if a[i] < lower - TRIANGLE_TOL || a[i] > upper + TRIANGLE_TOL {
                return Err(Error::TriangleViolation(format!(
                    "a{} = {} outside [{}, {}]",
                    i + 1,
                    a[i],
                    lower,
                    upper
                )));
            }
        }
        Ok(Self { a })
    }

    pub fn symmetric(a: f64) -> Result<Self> {
        Self::new(a, a, a)
    }

    pub fn satisfies_triangle(a1: f64, a2: f64, a3: f64) -> bool {
        Self::new(a1, a2, a3).is_ok()
    }

    pub fn values(&self) -> [f64; 3] {
        self.a
    }

    pub fn get(&self, mode: usize) -> f64 {
        self.a[mode - 1]
    }

    /// The same state with modes relabeled: `perm[i]` is the old index of new
    /// mode `i` (0-based).
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        Self {
            a: [self.a[perm[0]], self.a[perm[1]], self.a[perm[2]]],
        }
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn clamped_sqrt(radicand: f64, what: &str) -> Result<f64> {
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -RADICAND_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NumericalDomain(format!(
            "{what} radicand {radicand} is negative"
        )))
    }
}

/// `((ai-1)² - x²)((ai+1)² - x²)` as a product of linear factors. A factor
/// within the triangle tolerance of zero is set to zero, so states accepted on
/// the triangle boundary are built exactly on it; otherwise the square root
/// turns rounding noise of order 1e-16 into 1e-8 errors in the coefficients.
fn factored_radicand(ai: f64, x: f64) -> f64 {
    let snap = |f: f64| if f.abs() <= TRIANGLE_TOL * (ai + x.abs()).max(1.0) { 0.0 } else { f };
    snap(ai - 1.0 - x) * snap(ai - 1.0 + x) * snap(ai + 1.0 - x) * snap(ai + 1.0 + x)
}

/// Off-diagonal standard-form coefficients `(g+, g-)` for the pair `(j, k)`,
/// `i` being the remaining mode.
pub fn standard_form_coefficients(ai: f64, aj: f64, ak: f64) -> Result<(f64, f64)> {
    let r1 = factored_radicand(ai, aj - ak);
    let r2 = factored_radicand(ai, aj + ak);
    let s1 = clamped_sqrt(r1, "g+-")?;
    let s2 = clamped_sqrt(r2, "g+-")?;
    let denom = 4.0 * (aj * ak).sqrt();
    Ok(((s1 + s2) / denom, (s1 - s2) / denom))
}

/// Standard-form covariance matrix of the pure state with local invariants
/// `params`: `sigma_j = diag(a_j, a_j)`, `gamma_jk = diag(g+_jk, g-_jk)`.
pub fn build_pure_standard_form(params: &PureStateParams) -> Result<CovarianceMatrix> {
    let a = params.values();
    let mut sigma = DMatrix::zeros(6, 6);
    for j in 0..3 {
        sigma[(2 * j, 2 * j)] = a[j];
        sigma[(2 * j + 1, 2 * j + 1)] = a[j];
    }
    for (j, k) in [(0, 1), (0, 2), (1, 2)] {
        let i = 3 - j - k;
        let (gp, gm) = standard_form_coefficients(a[i], a[j], a[k])?;
        sigma[(2 * j, 2 * k)] = gp;
        sigma[(2 * k, 2 * j)] = gp;
        sigma[(2 * j + 1, 2 * k + 1)] = gm;
        sigma[(2 * k + 1, 2 * j + 1)] = gm;
    }
    CovarianceMatrix::new(sigma)
}

/// Pure fully symmetric state `sigma^s(a)`.
pub fn symmetric_pure(a: f64) -> Result<CovarianceMatrix> {
    if !(a >= 1.0) {
        return Err(Error::Domain(format!("a = {a} must be >= 1")));
    }
    build_pure_standard_form(&PureStateParams::symmetric(a)?)
}

/// `mu^(-1/3) * sigma^s(a)`, a symmetric mixed state of purity `mu`.
pub fn scaled_symmetric_mixed(a: f64, mu: f64) -> Result<CovarianceMatrix> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::Domain(format!("purity {mu} outside (0, 1]")));
    }
    let pure = symmetric_pure(a)?;
    Ok(CovarianceMatrix::from_trusted(
        pure.into_matrix() * mu.powf(-1.0 / 3.0),
    ))
}

/// `tr rho^2 = (det sigma)^(-1/2)`.
pub fn purity(cm: &CovarianceMatrix) -> f64 {
    cm.determinant().sqrt().recip()
}

/// Marginal covariance matrix of the selected modes.
pub fn reduce(cm: &CovarianceMatrix, modes: ModeSet) -> Result<CovarianceMatrix> {
    let idx = quadrature_indices(cm.modes(), modes)?;
    let n = idx.len();
    let sub = DMatrix::from_fn(n, n, |r, c| cm.sigma[(idx[r], idx[c])]);
    Ok(CovarianceMatrix::from_trusted(sub))
}

/// Row indices of the quadratures of `modes` within a `total`-mode matrix.
pub(crate) fn quadrature_indices(total: usize, modes: ModeSet) -> Result<Vec<usize>> {
    let labels = modes.labels();
    if let Some(&m) = labels.iter().find(|&&m| m > total) {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: m,
        });
    }
    Ok(labels
        .iter()
        .flat_map(|&m| [2 * (m - 1), 2 * (m - 1) + 1])
        .collect())
}

/// Symplectic eigenvalues of a symmetric positive definite `2k x 2k` matrix,
/// in descending order.
///
/// With `sigma = L L^T`, the antisymmetric `L^T Ω L` is similar to `Ω sigma`,
/// so `-(L^T Ω L)^2` is symmetric positive semidefinite with eigenvalues
/// `nu_j^2`, each twice.
pub fn symplectic_spectrum(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = sigma.nrows();
    if n == 0 || n % 2 != 0 || sigma.ncols() != n {
        return Err(Error::InvalidCovariance(format!(
            "shape {}x{} is not even square",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    let chol = sym
        .cholesky()
        .ok_or_else(|| Error::InvalidCovariance("matrix is not positive definite".into()))?;
    let l = chol.l();
    let omega = SymplecticForm::new(n / 2).matrix();
    let a = l.transpose() * omega * &l;
    let mut m = a.transpose() * &a;
    m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// Convenience wrapper returning the symplectic eigenvalues of `cm`.
pub fn symplectic_eigenvalues(cm: &CovarianceMatrix) -> Vec<f64> {
    cm.symplectic_eigenvalues()
}

/// `Λ σ Λ`, where `Λ` flips the momentum of every mode in `modes`.
///
/// The result need not be a physical covariance matrix.
pub fn partial_transpose(cm: &CovarianceMatrix, modes: ModeSet) -> Result<DMatrix<f64>> {
    partial_transpose_matrix(cm.matrix(), modes)
}

pub fn partial_transpose_matrix(sigma: &DMatrix<f64>, modes: ModeSet) -> Result<DMatrix<f64>> {
    let total = sigma.nrows() / 2;
    quadrature_indices(total, modes)?;
    let sign = |r: usize| {
        let mode = r / 2 + 1;
        if r % 2 == 1 && modes.contains(mode) {
            -1.0
        } else {
            1.0
        }
    };
    Ok(DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |r, c| {
        sign(r) * sign(c) * sigma[(r, c)]
    }))
}

/// PPT test across the bipartition `modes | rest`.
///
/// Returns whether the partial transpose is bona fide, together with its
/// smallest symplectic eigenvalue.
pub fn is_ppt(cm: &CovarianceMatrix, modes: ModeSet) -> Result<(bool, f64)> {
    let pt = partial_transpose(cm, modes)?;
    let nu = symplectic_spectrum(&pt)?;
    let min_nu = *nu.last().expect("at least one mode");
    Ok((min_nu >= 1.0 - VALIDITY_TOL, min_nu))
}

/// Inverse squeezing parameter `z = sqrt(12 a^2 - 3 f_a - 8) / 2` of the
/// symmetric family.
pub fn z_parameter(a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::Domain(format!("a = {a} must be >= 1")));
    }
    let radicand = 12.0 * a * a - 3.0 * f_of_a(a)? - 8.0;
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "z radicand {radicand} is negative at a = {a}"
        )));
    }
    Ok(0.5 * radicand.sqrt())
}

/// Inverts [`z_parameter`] on `a in [1, a_max]` by bisection (`z` decreases
/// monotonically from 1 at `a = 1`).
pub fn a_from_z(z: f64) -> Result<f64> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(Error::Domain(format!("z = {z} outside (0, 1]")));
    }
    if z == 1.0 {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while z_parameter(hi)? > z {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Domain(format!("z = {z} too small to invert")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if z_parameter(mid)? > z {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

//! Three-party, two-setting, two-outcome Bell expressions evaluated with
//! displaced-parity measurements.
//!
//! Text format, one statement per line (or separated by `;`):
//!
//! ```text
//! # comment
//! name svetlichny
//! 1 A1 B0 C0
//! -0.5 A0 - C1
//! 2 p(+-+|010)
//! bound 4
//! ```
//!
//! Correlator terms use selectors `A0|A1|-`, `B0|B1|-`, `C0|C1|-`, `-` being an
//! absent party. Probability terms are expanded into correlators; their
//! constant part is folded into the bound. Setting 0 measures at `ξ_j`,
//! setting 1 at `ξ'_j`, and parity `±1` maps to outcome `±`.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeSet};
use crate::optimizer::{self, OptimizerOptions};
use crate::svetlichny::{MaximizationResult, MeasurementSettings};
use crate::wigner::MarginalKernels;

/// Tolerance below zero tolerated in reconstructed probabilities.
pub const PROBABILITY_TOL: f64 = 1e-12;

const SVETLICHNY_TEXT: &str = "\
name svetlichny
1 A1 B0 C0
1 A0 B1 C0
1 A0 B0 C1
-1 A1 B1 C1
1 A0 B1 C1
1 A1 B0 C1
1 A1 B1 C0
-1 A0 B0 C0
bound 4
";

/// Measurement choice of one party in a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Setting {
    Absent,
    S0,
    S1,
}

impl Setting {
    fn code(self) -> usize {
        match self {
            Setting::Absent => 0,
            Setting::S0 => 1,
            Setting::S1 => 2,
        }
    }

    fn from_code(c: usize) -> Self {
        match c {
            0 => Setting::Absent,
            1 => Setting::S0,
            _ => Setting::S1,
        }
    }

    fn from_bit(bit: usize) -> Self {
        if bit == 0 {
            Setting::S0
        } else {
            Setting::S1
        }
    }
}

pub type Selector = [Setting; 3];

const PARTIES: [char; 3] = ['A', 'B', 'C'];

fn selector_index(sel: &Selector) -> usize {
    sel[0].code() + 3 * sel[1].code() + 9 * sel[2].code()
}

fn selector_from_index(i: usize) -> Selector {
    [
        Setting::from_code(i % 3),
        Setting::from_code((i / 3) % 3),
        Setting::from_code(i / 9),
    ]
}

fn is_constant(sel: &Selector) -> bool {
    sel.iter().all(|s| *s == Setting::Absent)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub coefficient: f64,
    pub selector: Selector,
}

/// `Σ c_t ⟨Π_{j ∈ t} P_j(setting)⟩ ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellExpression {
    pub name: String,
    pub terms: Vec<Term>,
    pub bound: f64,
}

impl BellExpression {
    pub fn new(name: impl Into<String>, terms: Vec<Term>, bound: f64) -> Result<Self> {
        let name = name.into();
        let mut acc = TermAccumulator::default();
        let mut bound = bound;
        for t in terms {
            if is_constant(&t.selector) {
                bound -= t.coefficient;
            } else {
                acc.add(t.selector, t.coefficient);
            }
        }
        let terms = acc.finish();
        if terms.is_empty() {
            return Err(Error::Domain("expression has no non-constant terms".into()));
        }
        if !bound.is_finite() {
            return Err(Error::Domain(format!("bound {bound} is not finite")));
        }
        Ok(Self { name, terms, bound })
    }

    /// The Svetlichny expression, bound 4.
    pub fn svetlichny() -> Self {
        parse_expression(SVETLICHNY_TEXT).expect("built-in expression parses")
    }

    /// Built-in expression by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "svetlichny" => Some(Self::svetlichny()),
            _ => None,
        }
    }

    /// A built-in name or a path to an expression file.
    pub fn load(source: &str) -> Result<Self> {
        if let Some(e) = Self::builtin(source) {
            return Ok(e);
        }
        let text = std::fs::read_to_string(Path::new(source))?;
        let mut e = parse_expression(&text)?;
        if e.name.is_empty() {
            e.name = Path::new(source)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(e)
    }

    /// Same inequality with every coefficient and the bound negated.
    pub fn negated(&self) -> Self {
        Self {
            name: self.name.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coefficient: -t.coefficient,
                    selector: t.selector,
                })
                .collect(),
            bound: -self.bound,
        }
    }
}

impl fmt::Display for BellExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.name.is_empty() {
            writeln!(f, "name {}", self.name)?;
        }
        for t in &self.terms {
            write!(f, "{}", t.coefficient)?;
            for (party, s) in PARTIES.iter().zip(t.selector) {
                match s {
                    Setting::Absent => write!(f, " -")?,
                    Setting::S0 => write!(f, " {party}0")?,
                    Setting::S1 => write!(f, " {party}1")?,
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "bound {}", self.bound)
    }
}

/// Merges terms by selector, keeping first-appearance order.
#[derive(Default)]
struct TermAccumulator {
    order: Vec<usize>,
    coef: [f64; 27],
    seen: [bool; 27],
}

impl TermAccumulator {
    fn add(&mut self, sel: Selector, c: f64) {
        let i = selector_index(&sel);
        if !self.seen[i] {
            self.seen[i] = true;
            self.order.push(i);
        }
        self.coef[i] += c;
    }

    fn finish(self) -> Vec<Term> {
        self.order
            .into_iter()
            .filter(|&i| self.coef[i] != 0.0)
            .map(|i| Term {
                coefficient: self.coef[i],
                selector: selector_from_index(i),
            })
            .collect()
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("malformed coefficient `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

fn parse_selector(tok: &str, party: usize, line: usize) -> Result<Setting> {
    if tok == "-" {
        return Ok(Setting::Absent);
    }
    let mut chars = tok.chars();
    match (chars.next(), chars.next(), chars.next()) {
        (Some(p), Some('0'), None) if p == PARTIES[party] => Ok(Setting::S0),
        (Some(p), Some('1'), None) if p == PARTIES[party] => Ok(Setting::S1),
        _ => Err(parse_err(
            line,
            format!("malformed selector `{tok}` for party {}", PARTIES[party]),
        )),
    }
}

/// Parses `p(abc|xyz)` into outcome signs and settings.
fn parse_probability(tok: &str, line: usize) -> Result<([f64; 3], [usize; 3])> {
    let bad = || parse_err(line, format!("malformed probability term `{tok}`"));
    let inner = tok
        .strip_prefix("p(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(bad)?;
    let (outs, sets) = inner.split_once('|').ok_or_else(bad)?;
    let outs: Vec<char> = outs.chars().collect();
    let sets: Vec<char> = sets.chars().collect();
    if outs.len() != 3 || sets.len() != 3 {
        return Err(bad());
    }
    let mut signs = [0.0; 3];
    let mut settings = [0; 3];
    for j in 0..3 {
        signs[j] = match outs[j] {
            '+' => 1.0,
            '-' | '−' => -1.0,
            _ => return Err(bad()),
        };
        settings[j] = match sets[j] {
            '0' => 0,
            '1' => 1,
            _ => return Err(bad()),
        };
    }
    Ok((signs, settings))
}

/// Parses the text format described in the module documentation.
pub fn parse_expression(text: &str) -> Result<BellExpression> {
    let mut acc = TermAccumulator::default();
    let mut constant = 0.0;
    let mut bound = None;
    let mut name = String::new();
    let mut any_term = false;
    let mut last_line = 0;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        for stmt in content.split(';') {
            let toks: Vec<&str> = stmt.split_whitespace().collect();
            match toks.as_slice() {
                [] => {}
                ["bound", v] => {
                    if bound.is_some() {
                        return Err(parse_err(line, "duplicate bound"));
                    }
                    bound = Some(parse_real(v, line)?);
                }
                ["bound", ..] => return Err(parse_err(line, "expected `bound <real>`")),
                ["name", n] => name = (*n).to_string(),
                ["name", ..] => return Err(parse_err(line, "expected `name <identifier>`")),
                [c, p] if p.starts_with("p(") => {
                    let c = parse_real(c, line)?;
                    let (signs, settings) = parse_probability(p, line)?;
                    // p(abc|xyz) = (1/8) Σ_{S ⊆ {A,B,C}} (Π_{j∈S} sign_j) ⟨Π_{j∈S} P_j⟩
                    for mask in 0..8usize {
                        let mut sel = [Setting::Absent; 3];
                        let mut sign = 1.0;
                        for j in 0..3 {
                            if mask >> j & 1 == 1 {
                                sel[j] = Setting::from_bit(settings[j]);
                                sign *= signs[j];
                            }
                        }
                        if mask == 0 {
                            constant += c / 8.0;
                        } else {
                            acc.add(sel, sign * c / 8.0);
                        }
                    }
                    any_term = true;
                }
                [c, a, b, cc] => {
                    let c = parse_real(c, line)?;
                    let sel = [
                        parse_selector(a, 0, line)?,
                        parse_selector(b, 1, line)?,
                        parse_selector(cc, 2, line)?,
                    ];
                    if is_constant(&sel) {
                        constant += c;
                    } else {
                        acc.add(sel, c);
                    }
                    any_term = true;
                }
                _ => return Err(parse_err(line, format!("unrecognized statement `{}`", stmt.trim()))),
            }
        }
    }

    if !any_term {
        return Err(parse_err(last_line.max(1), "no terms"));
    }
    let bound = bound.ok_or_else(|| parse_err(last_line.max(1), "missing `bound` line"))?;
    let terms = acc.finish();
    if terms.is_empty() {
        return Err(parse_err(last_line.max(1), "all terms cancel"));
    }
    Ok(BellExpression {
        name,
        terms,
        bound: bound - constant,
    })
}

/// The 26 correlators `⟨Π P_j⟩` over nonempty party subsets and settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable {
    // indexed by selector, slot 0 (no party) holds 1
    values: [f64; 27],
}

impl CorrelatorTable {
    /// Table with every correlator equal to `v`.
    pub fn uniform(v: f64) -> Self {
        let mut values = [v; 27];
        values[0] = 1.0;
        Self { values }
    }

    pub fn get(&self, sel: &Selector) -> f64 {
        self.values[selector_index(sel)]
    }

    pub fn set(&mut self, sel: &Selector, v: f64) {
        let i = selector_index(sel);
        if i != 0 {
            self.values[i] = v;
        }
    }

    /// All 26 `(selector, value)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (Selector, f64)> + '_ {
        (1..27).map(|i| (selector_from_index(i), self.values[i]))
    }
}

fn term_point(sel: &Selector, s: &MeasurementSettings) -> (ModeSet, Vec<f64>) {
    let mut bits = 0u8;
    let mut point = Vec::with_capacity(6);
    for (j, setting) in sel.iter().enumerate() {
        if *setting != Setting::Absent {
            bits |= 1 << j;
            point.extend_from_slice(&s.point(j, *setting == Setting::S1));
        }
    }
    (ModeSet::from_bits(bits).expect("nonempty selector"), point)
}

fn correlator(kernels: &MarginalKernels, sel: &Selector, s: &MeasurementSettings) -> f64 {
    let (modes, point) = term_point(sel, s);
    kernels.get(modes).correlator_unchecked(&point)
}

pub fn correlator_table(cm: &CovarianceMatrix, s: &MeasurementSettings) -> Result<CorrelatorTable> {
    let kernels = MarginalKernels::new(cm)?;
    let mut t = CorrelatorTable::uniform(1.0);
    for i in 1..27 {
        let sel = selector_from_index(i);
        t.values[i] = correlator(&kernels, &sel, s);
    }
    Ok(t)
}

/// `p(abc|xyz)` for the eight outcomes, ordered `+++, ++-, +-+, +--, -++, ...`
/// (party A most significant, `+` before `-`).
pub fn correlators_to_probabilities(t: &CorrelatorTable, xyz: [usize; 3]) -> Result<[f64; 8]> {
    if xyz.iter().any(|&x| x > 1) {
        return Err(Error::Domain(format!("settings {xyz:?} must be 0 or 1")));
    }
    let mut probs = [0.0; 8];
    for (o, p) in probs.iter_mut().enumerate() {
        let signs = outcome_signs(o);
        let mut acc = 0.0;
        for mask in 0..8usize {
            let mut sel = [Setting::Absent; 3];
            let mut sign = 1.0;
            for j in 0..3 {
                if mask >> j & 1 == 1 {
                    sel[j] = Setting::from_bit(xyz[j]);
                    sign *= signs[j];
                }
            }
            acc += sign * t.get(&sel);
        }
        *p = acc / 8.0;
        if *p < -PROBABILITY_TOL {
            return Err(Error::Consistency(format!(
                "negative probability {p} for outcome {o} at settings {xyz:?}"
            )));
        }
    }
    Ok(probs)
}

fn outcome_signs(o: usize) -> [f64; 3] {
    let s = |bit: usize| if o >> bit & 1 == 0 { 1.0 } else { -1.0 };
    [s(2), s(1), s(0)]
}

/// Inverse of [`correlators_to_probabilities`] over all eight setting
/// choices, indexed `4x + 2y + z`. Marginal correlators are read off the
/// choices with absent parties at setting 0.
pub fn probabilities_to_correlators(p: &[[f64; 8]; 8]) -> CorrelatorTable {
    let mut t = CorrelatorTable::uniform(1.0);
    for i in 1..27 {
        let sel = selector_from_index(i);
        let bit = |s: Setting| usize::from(s == Setting::S1);
        let choice = 4 * bit(sel[0]) + 2 * bit(sel[1]) + bit(sel[2]);
        let mut acc = 0.0;
        for (o, prob) in p[choice].iter().enumerate() {
            let signs = outcome_signs(o);
            let sign: f64 = (0..3)
                .filter(|&j| sel[j] != Setting::Absent)
                .map(|j| signs[j])
                .product();
            acc += sign * prob;
        }
        t.values[i] = acc;
    }
    t
}

fn evaluate_with_kernels(e: &BellExpression, kernels: &MarginalKernels, s: &MeasurementSettings) -> f64 {
    e.terms
        .iter()
        .map(|t| t.coefficient * correlator(kernels, &t.selector, s))
        .sum()
}

/// `Σ c_t ⟨term⟩` at settings `s`.
pub fn evaluate(e: &BellExpression, cm: &CovarianceMatrix, s: &MeasurementSettings) -> Result<f64> {
    Ok(evaluate_with_kernels(e, &MarginalKernels::new(cm)?, s))
}

/// Contracts an already computed table with the expression.
pub fn evaluate_table(e: &BellExpression, t: &CorrelatorTable) -> f64 {
    e.terms.iter().map(|term| term.coefficient * t.get(&term.selector)).sum()
}

/// Maximizes `|evaluate|` over the twelve setting coordinates.
///
/// A three-dimensional search over momentum-antisymmetric settings runs first
/// and its optimum, with the origin, seeds the full search.
pub fn maximize_expression(
    e: &BellExpression,
    cm: &CovarianceMatrix,
    opts: &OptimizerOptions,
) -> Result<MaximizationResult> {
    opts.validate()?;
    let kernels = MarginalKernels::new(cm)?;
    let restricted = |p: &[f64]| {
        let s = MeasurementSettings::momentum_antisymmetric([p[0], p[1], p[2]]);
        evaluate_with_kernels(e, &kernels, &s).abs()
    };
    let pre = optimizer::maximize(&restricted, 3, opts, &[vec![0.0; 3]]);
    let pre_settings = MeasurementSettings::momentum_antisymmetric([pre.point[0], pre.point[1], pre.point[2]]);

    let full = |x: &[f64]| {
        let s = MeasurementSettings::from_slice(x).expect("12 coordinates");
        evaluate_with_kernels(e, &kernels, &s).abs()
    };
    let best = optimizer::maximize(&full, 12, opts, &[pre_settings.to_vec(), vec![0.0; 12]]);
    let settings = MeasurementSettings::from_slice(&best.point)?;
    let value = evaluate_with_kernels(e, &kernels, &settings).abs();
    let pre_value = evaluate_with_kernels(e, &kernels, &pre_settings).abs();
    let evaluations = pre.evaluations + best.evaluations;
    if value < pre_value {
        return Ok(MaximizationResult {
            value: pre_value,
            settings: pre_settings,
            evaluations,
            converged: pre.converged,
        });
    }
    Ok(MaximizationResult {
        value,
        settings,
        evaluations,
        converged: best.converged,
    })
}

//! Multistart Nelder–Mead maximizer shared by the Svetlichny and Bell modules.
//!
//! Each start is an independent, sequential simplex ascent; starts run in
//! parallel and are reduced by `(value, start index)`, so the outcome does not
//! depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
/// Simplex diameter below which the simplex counts as collapsed.
const COLLAPSE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Number of random starts (deterministic starts come on top).
    pub starts: usize,
    /// Random starts are drawn uniformly from `[box_lo, box_hi]` per coordinate.
    pub box_lo: f64,
    pub box_hi: f64,
    pub f_tol: f64,
    pub max_evals_per_start: usize,
    pub initial_edge: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            box_lo: -1.5,
            box_hi: 1.5,
            f_tol: 1e-12,
            max_evals_per_start: 2000,
            initial_edge: 0.25,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.starts >= 1
            && self.box_lo.is_finite()
            && self.box_hi.is_finite()
            && self.box_lo <= self.box_hi
            && self.f_tol > 0.0
            && self.initial_edge > 0.0
            && self.max_evals_per_start >= 1;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Domain(format!("invalid optimizer options {self:?}")))
        }
    }
}

/// Outcome of a multistart run.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub point: Vec<f64>,
    /// Objective evaluations summed over all starts.
    pub evaluations: usize,
    /// Whether the winning start met the tolerance within its budget.
    pub converged: bool,
    pub start_index: usize,
}

/// Result of one local ascent.
#[derive(Debug, Clone)]
pub struct LocalAscent {
    pub value: f64,
    pub point: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after every simplex iteration.
    pub history: Vec<f64>,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// One simplex run maximizing `f` from `x0`, restarting a collapsed simplex
/// once around the incumbent.
pub fn nelder_mead<F>(f: &F, x0: &[f64], opts: &OptimizerOptions, keep_history: bool) -> LocalAscent
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut evals = 0usize;
    let mut history = Vec::new();
    let first = simplex_ascent(f, x0, opts, opts.max_evals_per_start, &mut evals, keep_history.then_some(&mut history));
    let remaining = opts.max_evals_per_start.saturating_sub(evals);
    if remaining <= x0.len() + 1 {
        return LocalAscent {
            value: first.0,
            point: first.1,
            evaluations: evals,
            converged: first.2,
            history,
        };
    }
    let budget = evals + remaining;
    let second = simplex_ascent(f, &first.1, opts, budget, &mut evals, keep_history.then_some(&mut history));
    let (value, point) = if second.0 >= first.0 {
        (second.0, second.1)
    } else {
        (first.0, first.1)
    };
    LocalAscent {
        value,
        point,
        evaluations: evals,
        converged: second.2,
        history,
    }
}

/// Returns `(best value, best point, converged)`; `evals` is shared with the
/// caller so the budget spans restarts.
fn simplex_ascent<F>(
    f: &F,
    x0: &[f64],
    opts: &OptimizerOptions,
    budget: usize,
    evals: &mut usize,
    mut history: Option<&mut Vec<f64>>,
) -> (f64, Vec<f64>, bool)
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let n = x0.len();
    // Work with minimization of -f.
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        -sanitize(f(x))
    };
    if n == 0 {
        let v = eval(x0, evals);
        return (-v, Vec::new(), true);
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_edge;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, evals)).collect();
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if let Some(h) = history.as_deref_mut() {
            h.push(-values[best]);
        }
        if values[worst] - values[best] <= opts.f_tol || diameter(&simplex, best) <= COLLAPSE_TOL {
            converged = true;
            break;
        }
        if *evals >= budget {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        for k in 0..n {
            trial[k] = centroid[k] + REFLECT * (centroid[k] - simplex[worst][k]);
        }
        let fr = eval(&trial, evals);

        if fr < values[best] {
            for k in 0..n {
                trial2[k] = centroid[k] + EXPAND * (trial[k] - centroid[k]);
            }
            let fe = eval(&trial2, evals);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        let (accept, fc) = if fr < values[worst] {
            for k in 0..n {
                trial2[k] = centroid[k] + CONTRACT * (trial[k] - centroid[k]);
            }
            let fc = eval(&trial2, evals);
            (fc <= fr, fc)
        } else {
            for k in 0..n {
                trial2[k] = centroid[k] + CONTRACT * (simplex[worst][k] - centroid[k]);
            }
            let fc = eval(&trial2, evals);
            (fc < values[worst], fc)
        };
        if accept {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            for k in 0..n {
                simplex[i][k] = anchor[k] + SHRINK * (simplex[i][k] - anchor[k]);
            }
            values[i] = eval(&simplex[i], evals);
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .expect("nonempty simplex");
    (-values[best], simplex[best].clone(), converged)
}

fn diameter(simplex: &[Vec<f64>], anchor: usize) -> f64 {
    simplex
        .iter()
        .map(|v| {
            v.iter()
                .zip(&simplex[anchor])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Starting points: the caller's deterministic starts first, then
/// `opts.starts` uniform draws, each from its own counter-addressed stream.
pub fn start_points(n: usize, opts: &OptimizerOptions, deterministic: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut starts: Vec<Vec<f64>> = deterministic.to_vec();
    for i in 0..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(i as u64);
        starts.push(
            (0..n)
                .map(|_| {
                    if opts.box_hi > opts.box_lo {
                        rng.random_range(opts.box_lo..opts.box_hi)
                    } else {
                        opts.box_lo
                    }
                })
                .collect(),
        );
    }
    starts
}

/// Maximizes `f` over `R^n` from the deterministic starts plus `opts.starts`
/// random ones.
pub fn maximize<F>(f: &F, n: usize, opts: &OptimizerOptions, deterministic: &[Vec<f64>]) -> Optimum
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let starts = start_points(n, opts, deterministic);
    debug_assert!(starts.iter().all(|s| s.len() == n));
    let runs: Vec<LocalAscent> = starts
        .par_iter()
        .map(|x0| nelder_mead(f, x0, opts, false))
        .collect();
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let (start_index, best) = runs
        .into_iter()
        .enumerate()
        .fold(None::<(usize, LocalAscent)>, |acc, (i, r)| match acc {
            Some((j, b)) if b.value >= r.value || r.value.is_nan() => Some((j, b)),
            _ => Some((i, r)),
        })
        .expect("at least one start");
    Optimum {
        value: best.value,
        point: best.point,
        evaluations,
        converged: best.converged,
        start_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn concave_quadratic() {
        let f = |x: &[f64]| -x.iter().map(|v| v * v).sum::<f64>();
        let r = maximize(&f, 3, &OptimizerOptions::default(), &[]);
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-10);
        assert!(r.converged);
        assert_eq!(f(&r.point), r.value);
    }

    #[test]
    fn two_symmetric_peaks() {
        // unequal heights so there is a unique global maximum at x = -1
        let f = |x: &[f64]| (-(x[0] - 1.0).powi(2)).exp() + 1.01 * (-(x[0] + 1.0).powi(2)).exp();
        let opts = OptimizerOptions {
            starts: 2,
            ..OptimizerOptions::with_seed(3)
        };
        let r = maximize(&f, 1, &opts, &[vec![1.0], vec![-1.0]]);
        let oracle = (-1.5f64..-0.5)
            .step_by_f64(1e-6)
            .map(|x| f(&[x]))
            .fold(f64::MIN, f64::max);
        assert!(r.value >= oracle - 1e-8);
        assert!(r.point[0] < 0.0);
    }

    #[test]
    fn equal_peaks_found() {
        let f = |x: &[f64]| (-(x[0] - 1.0).powi(2)).exp() + (-(x[0] + 1.0).powi(2)).exp();
        let opts = OptimizerOptions {
            starts: 2,
            ..OptimizerOptions::with_seed(11)
        };
        let r = maximize(&f, 1, &opts, &[]);
        // global value attained at the two symmetric maxima
        let oracle = (0.0f64..2.0)
            .step_by_f64(1e-6)
            .map(|x| f(&[x]))
            .fold(f64::MIN, f64::max);
        assert!((r.value - oracle).abs() < 1e-8, "{} vs {}", r.value, oracle);
    }

    #[test]
    fn incumbent_is_monotone() {
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.1).powi(4) + 0.1 * (3.0 * x[0]).sin();
        let run = nelder_mead(&f, &[1.0, 1.0], &OptimizerOptions::default(), true);
        assert!(run.history.len() > 5);
        assert!(run.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn deterministic_for_seed() {
        let f = |x: &[f64]| (x[0] * 2.0).cos() * (x[1] * 3.0).sin() - 0.01 * x[2] * x[2];
        let opts = OptimizerOptions::with_seed(42);
        let a = maximize(&f, 3, &opts, &[]);
        let b = maximize(&f, 3, &opts, &[]);
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| maximize(&f, 3, &opts, &[]));
        assert_eq!(a, c);
    }

    #[test]
    fn budget_is_respected() {
        let f = |x: &[f64]| -x.iter().map(|v| (v - 10.0).powi(2)).sum::<f64>();
        let opts = OptimizerOptions {
            starts: 1,
            max_evals_per_start: 50,
            ..OptimizerOptions::default()
        };
        let r = maximize(&f, 4, &opts, &[]);
        assert!(!r.converged);
        // one simplex iteration can overshoot the budget by at most n + 2 evaluations
        assert!(r.evaluations <= 50 + 6);
    }

    trait StepBy {
        fn step_by_f64(self, h: f64) -> Box<dyn Iterator<Item = f64>>;
    }

    impl StepBy for std::ops::Range<f64> {
        fn step_by_f64(self, h: f64) -> Box<dyn Iterator<Item = f64>> {
            let n = ((self.end - self.start) / h).ceil() as usize;
            let start = self.start;
            Box::new((0..=n).map(move |i| start + i as f64 * h))
        }
    }
}

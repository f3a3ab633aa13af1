//! Command-line pipelines writing CSV tables with JSON manifest sidecars.
//!
//! Every CSV starts with one `# {json}` metadata line, then a header row.
//! Reals are written with 17 significant digits. The sidecar
//! `<csv>.manifest.json` holds the full configuration and the wall time, so
//! the CSV itself is byte-identical across reruns with the same flags.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bell::{self, BellExpression};
use crate::entanglement::{
    classify_symmetric_mixed_with, entanglement_threshold, symmetric_lower_bound, tripartite_renyi2_pure,
};
use crate::error::{Error, Result};
use crate::gaussian::{a_from_z, build_pure_standard_form, symmetric_pure, z_parameter, CovarianceMatrix, PureStateParams};
use crate::optimizer::OptimizerOptions;
use crate::sampler::{self, MixedLaw, SamplerConfig};
use crate::svetlichny::{
    asymptotic_max, maximize_full, maximize_restricted, purity_cutoff, symmetric_max_analytic,
    symmetric_optimal_momentum, symmetric_pstar, violation_threshold, MeasurementSettings, SVETLICHNY_BOUND,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Analytic-numeric mismatch tolerated by `svet-sym`.
pub const SVET_SYM_TOL: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "gaussnl", version, about = "Svetlichny nonlocality of three-mode Gaussian states")]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symmetric pure state: analytic vs numerical maximum.
    SvetSym(SvetSymArgs),
    /// S_max and entanglement on an (a2, a3) grid at fixed a1.
    Fig1ab(Fig1abArgs),
    /// Random pure states: entanglement vs S_max.
    ScatterPure(ScatterPureArgs),
    /// Random mixed states: purity vs S_max.
    ScatterMixed(ScatterMixedArgs),
    /// Region flags of symmetric mixed states.
    Classify(ClassifyArgs),
    /// Evaluate or maximize a Bell expression.
    Bell(BellArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SvetSymArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Fig1abArgs {
    #[arg(long, default_value_t = 2.0)]
    pub a1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "fig1ab.csv")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScatterPureArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4.0)]
    pub a_max: f64,
    #[arg(long)]
    pub low_range_bias: bool,
    #[arg(long, default_value = "scatter_pure.csv")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawArg {
    Euler,
    Product,
}

impl From<LawArg> for MixedLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Euler => MixedLaw::Euler,
            LawArg::Product => MixedLaw::Product,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScatterMixedArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2.0)]
    pub nu_max: f64,
    #[arg(long, default_value_t = 3f64.ln())]
    pub r_max: f64,
    #[arg(long, value_enum, default_value_t = LawArg::Euler)]
    pub law: LawArg,
    #[arg(long, default_value = "scatter_mixed.csv")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    /// `lo:hi:step` over a.
    #[arg(long, conflicts_with = "z_grid")]
    pub a_grid: Option<String>,
    /// `lo:hi:step` over z in (0, 1].
    #[arg(long)]
    pub z_grid: Option<String>,
    /// `lo:hi:step` over the purity.
    #[arg(long, default_value = "0.05:1:0.05")]
    pub mu_grid: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "classify.csv")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellAction {
    Eval,
    Maximize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BellArgs {
    #[arg(value_enum)]
    pub action: BellAction,
    /// Built-in name (`svetlichny`) or path to an expression file.
    #[arg(long)]
    pub ineq: String,
    /// JSON covariance matrix file.
    #[arg(long, conflicts_with = "sym_a")]
    pub state_file: Option<PathBuf>,
    /// Symmetric pure state with local invariant a.
    #[arg(long)]
    pub sym_a: Option<f64>,
    /// Twelve comma-separated coordinates `ξ1 ξ2 ξ3 ξ'1 ξ'2 ξ'3` for `eval`
    /// (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    pub settings: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Consistency(_) => 3,
        _ => 2,
    }
}

/// Parses arguments, runs the command, prints errors; returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(Error::Domain("--threads must be >= 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::SvetSym(a) => cmd_svet_sym(&a),
        Command::Fig1ab(a) => cmd_fig1ab(&a),
        Command::ScatterPure(a) => cmd_scatter_pure(&a),
        Command::ScatterMixed(a) => cmd_scatter_mixed(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Bell(a) => cmd_bell(&a),
    })
}

fn print_json(v: &Value) {
    // a closed pipe downstream is not an error worth a panic
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn cmd_svet_sym(args: &SvetSymArgs) -> Result<()> {
    let a = args.a;
    let cm = symmetric_pure(a)?;
    let analytic = symmetric_max_analytic(a)?;
    let numeric = maximize_restricted(&cm, &OptimizerOptions::with_seed(args.seed))?;
    let delta = (analytic - numeric.value).abs();
    print_json(&json!({
        "a": a,
        "p_star": symmetric_pstar(a)?,
        "p_opt": symmetric_optimal_momentum(a)?,
        "p_numeric": numeric.settings.xi.iter().map(|x| x[1]).collect::<Vec<_>>(),
        "s_max_analytic": analytic,
        "s_max_numeric": numeric.value,
        "delta": delta,
    }));
    if delta > SVET_SYM_TOL {
        return Err(Error::Consistency(format!(
            "analytic {analytic} and numeric {} differ by {delta}",
            numeric.value
        )));
    }
    Ok(())
}

/// Inclusive grid `lo, lo + step, ..., hi`.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("bad grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// Parses `lo:hi:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Parse {
        line: 1,
        msg: format!("grid `{spec}` is not lo:hi:step"),
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    grid(v[0], v[1], v[2])
}

/// Formats a real with 17 significant digits; empty for `None`.
pub fn fmt_real(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

fn constants() -> Value {
    json!({
        "local_bound": SVETLICHNY_BOUND,
        "asymptotic_max": asymptotic_max(),
        "purity_cutoff": purity_cutoff(),
        "entanglement_threshold": entanglement_threshold(),
        "violation_threshold_a": violation_threshold(),
    })
}

/// One CSV output and its manifest.
pub struct CsvArtifact<'a> {
    pub command: &'a str,
    pub path: &'a Path,
    pub config: Value,
    pub extra: Value,
    pub header: &'a [&'a str],
}

impl CsvArtifact<'_> {
    fn metadata(&self) -> Value {
        json!({
            "schema": format!("gaussnl/{}/{}", self.command, SCHEMA_VERSION),
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "meta": self.extra,
            "constants": constants(),
        })
    }

    /// Writes the rows and the sidecar manifest.
    pub fn write(&self, rows: &[Vec<String>], started: Instant) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "# {}", serde_json::to_string(&self.metadata())?)?;
        writeln!(buf, "{}", self.header.join(","))?;
        for r in rows {
            writeln!(buf, "{}", r.join(","))?;
        }
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(self.path, buf)?;

        let manifest = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "meta": self.extra,
            "constants": constants(),
            "rows": rows.len(),
            "wall_time_s": started.elapsed().as_secs_f64(),
            "outputs": [self.path.file_name().map(|s| s.to_string_lossy().into_owned())],
        });
        fs::write(manifest_path(self.path), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

/// `<csv>.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

fn optimizer_meta(opts: &OptimizerOptions) -> Value {
    serde_json::to_value(opts).expect("serializable")
}

fn cmd_fig1ab(args: &Fig1abArgs) -> Result<()> {
    let started = Instant::now();
    let axis = grid(args.grid_min, args.grid_max, args.step)?;
    let opts = OptimizerOptions::with_seed(args.seed);
    let cells: Vec<(f64, f64)> = axis.iter().flat_map(|&a2| axis.iter().map(move |&a3| (a2, a3))).collect();
    let rows = cells
        .par_iter()
        .map(|&(a2, a3)| -> Result<Vec<String>> {
            let (s, e) = match PureStateParams::new(args.a1, a2, a3) {
                Ok(p) => {
                    let cm = build_pure_standard_form(&p)?;
                    (Some(maximize_restricted(&cm, &opts)?.value), Some(tripartite_renyi2_pure(&p)))
                }
                Err(Error::TriangleViolation(_)) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(vec![fmt_real(Some(a2)), fmt_real(Some(a3)), fmt_real(s), fmt_real(e)])
        })
        .collect::<Result<Vec<_>>>()?;
    CsvArtifact {
        command: "fig1ab",
        path: &args.out,
        config: serde_json::to_value(args)?,
        extra: json!({ "optimizer": optimizer_meta(&opts), "maximizer": "restricted" }),
        header: &["a2", "a3", "s_max", "entanglement"],
    }
    .write(&rows, started)
}

fn cmd_scatter_pure(args: &ScatterPureArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = SamplerConfig {
        seed: args.seed,
        a_max: args.a_max,
        count: args.n,
        low_range_bias: args.low_range_bias,
        ..SamplerConfig::default()
    };
    let opts = OptimizerOptions::with_seed(args.seed);
    let params = sampler::sample_pure_params(&cfg)?;
    let rows = params
        .par_iter()
        .map(|p| -> Result<Vec<String>> {
            let cm = build_pure_standard_form(p)?;
            let s = maximize_restricted(&cm, &opts)?.value;
            let e = tripartite_renyi2_pure(p);
            let lower = symmetric_lower_bound(e)?;
            let [a1, a2, a3] = p.values();
            Ok([a1, a2, a3, e, s, lower].iter().map(|&v| fmt_real(Some(v))).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    CsvArtifact {
        command: "scatter-pure",
        path: &args.out,
        config: serde_json::to_value(args)?,
        extra: json!({
            "sampler": { "law": "uniform-triangle-rejection", "config": cfg },
            "optimizer": optimizer_meta(&opts),
            "maximizer": "restricted",
        }),
        header: &["a1", "a2", "a3", "entanglement", "s_max", "symmetric_lower_bound"],
    }
    .write(&rows, started)
}

fn cmd_scatter_mixed(args: &ScatterMixedArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = SamplerConfig {
        seed: args.seed,
        nu_max: args.nu_max,
        r_max: args.r_max,
        count: args.n,
        ..SamplerConfig::default()
    };
    let law = MixedLaw::from(args.law);
    let opts = OptimizerOptions::with_seed(args.seed);
    let samples = sampler::sample_mixed(&cfg, law)?;
    let rows = samples
        .par_iter()
        .map(|s| -> Result<Vec<String>> {
            let v = maximize_full(&s.cm, &opts)?.value;
            let mut row = vec![fmt_real(Some(s.purity())), fmt_real(Some(v))];
            row.extend(s.nu.iter().chain(&s.squeezing).map(|&x| fmt_real(Some(x))));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    CsvArtifact {
        command: "scatter-mixed",
        path: &args.out,
        config: serde_json::to_value(args)?,
        extra: json!({
            "sampler": { "law": law.name(), "config": cfg },
            "optimizer": optimizer_meta(&opts),
            "maximizer": "full",
        }),
        header: &["purity", "s_max", "nu1", "nu2", "nu3", "r1", "r2", "r3"],
    }
    .write(&rows, started)
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let started = Instant::now();
    let a_values: Vec<(f64, f64)> = match (&args.a_grid, &args.z_grid) {
        (Some(g), None) => parse_grid(g)?
            .into_iter()
            .map(|a| Ok((a, z_parameter(a)?)))
            .collect::<Result<_>>()?,
        (None, Some(g)) => parse_grid(g)?
            .into_iter()
            .filter(|&z| z > 0.0)
            .map(|z| Ok((a_from_z(z)?, z)))
            .collect::<Result<_>>()?,
        (None, None) => parse_grid("1:5:0.1")?
            .into_iter()
            .map(|a| Ok((a, z_parameter(a)?)))
            .collect::<Result<_>>()?,
        (Some(_), Some(_)) => return Err(Error::Domain("give either --a-grid or --z-grid".into())),
    };
    let mus: Vec<f64> = parse_grid(&args.mu_grid)?.into_iter().filter(|&m| m > 0.0).collect();
    if mus.iter().any(|&m| m > 1.0 + 1e-12) {
        return Err(Error::Domain("purity grid must lie in (0, 1]".into()));
    }
    let opts = OptimizerOptions::with_seed(args.seed);
    let cells: Vec<(f64, f64, f64)> = a_values
        .iter()
        .flat_map(|&(a, z)| mus.iter().map(move |&mu| (a, z, mu.min(1.0))))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(a, z, mu)| -> Result<Vec<String>> {
            let l = classify_symmetric_mixed_with(a, mu, &opts)?;
            Ok(vec![
                fmt_real(Some(a)),
                fmt_real(Some(z)),
                fmt_real(Some(mu)),
                l.flags(),
                u8::from(l.fully_inseparable).to_string(),
                u8::from(l.promiscuous).to_string(),
                u8::from(l.svetlichny_nonlocal).to_string(),
                fmt_real(Some(l.min_nu_1_23)),
                fmt_real(Some(l.min_nu_two_mode)),
                fmt_real(Some(l.s_max)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    CsvArtifact {
        command: "classify",
        path: &args.out,
        config: serde_json::to_value(args)?,
        extra: json!({ "optimizer": optimizer_meta(&opts), "maximizer": "restricted" }),
        header: &[
            "a",
            "z",
            "mu",
            "flags",
            "fully_inseparable",
            "promiscuous",
            "svetlichny_nonlocal",
            "min_nu_1_23",
            "min_nu_two_mode",
            "s_max",
        ],
    }
    .write(&rows, started)
}

fn parse_settings(text: &str) -> Result<MeasurementSettings> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad settings coordinate `{t}`"),
            })
        })
        .collect::<Result<_>>()?;
    MeasurementSettings::from_slice(&v)
}

fn cmd_bell(args: &BellArgs) -> Result<()> {
    let expr = BellExpression::load(&args.ineq)?;
    let cm = match (&args.state_file, args.sym_a) {
        (Some(p), None) => CovarianceMatrix::load_json(p)?,
        (None, Some(a)) => symmetric_pure(a)?,
        _ => return Err(Error::Domain("give exactly one of --state-file, --sym-a".into())),
    };
    let (value, settings, extra) = match args.action {
        BellAction::Eval => {
            let s = match &args.settings {
                Some(t) => parse_settings(t)?,
                None => MeasurementSettings::origin(),
            };
            (bell::evaluate(&expr, &cm, &s)?, s, Value::Null)
        }
        BellAction::Maximize => {
            let r = bell::maximize_expression(&expr, &cm, &OptimizerOptions::with_seed(args.seed))?;
            (
                r.value,
                r.settings,
                json!({ "evaluations": r.evaluations, "converged": r.converged }),
            )
        }
    };
    print_json(&json!({
        "expression": expr.name,
        "terms": expr.terms.len(),
        "value": value,
        "bound": expr.bound,
        "violated": value.abs() > expr.bound + 1e-9,
        "settings": settings,
        "optimizer": extra,
    }));
    Ok(())
}

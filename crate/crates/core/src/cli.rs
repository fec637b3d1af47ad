//! Command-line front end: `eval`, `path` and `experiment`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::export::{export_path, stream_standard_csv, ExportFormat};
use crate::klooster::{kloosterman_closed, kloosterman_naive, multiplicity_check, summand_census};
use crate::modring::{PrimePowerModulus, SqrtBranch};
use crate::moments::{
    decreasing_with_noise, empirical_moment, equidist_stat, fitted_decay, sop_decompose, sop_reconstruct,
    sum_of_products, MomentSpec, ShiftMultiset,
};
use crate::paths::{path_vertices, rearranged_vertices, renormalized_vertices, KloostermanPath, Variant};
use crate::randseries::{exact_series_moment, glued_moment_exact, glued_moment_mc, LawSpec, SeriesSpec, FrequencyFilter};

/// Largest modulus for brute-force evaluation and path output.
pub const NAIVE_LIMIT: u64 = 100_000_000;

/// Naive/closed discrepancy tolerated by `eval`.
pub const EVAL_TOLERANCE: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "kloostpath", version, about = "Kloosterman sums and paths modulo prime powers")]
pub struct Cli {
    /// TOML or JSON file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate Kl_{p^n}(a, b) naively and in closed form.
    Eval(Opts),
    /// Write a Kloosterman path as CSV, JSON or SVG.
    Path(Opts),
    /// Run an experiment and emit a JSON report.
    Experiment {
        kind: ExperimentKind,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Equidist,
    Moments,
    Sumprod,
    Census,
    SeriesCompare,
}

impl ExperimentKind {
    fn name(self) -> &'static str {
        match self {
            ExperimentKind::Equidist => "equidist",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Sumprod => "sumprod",
            ExperimentKind::Census => "census",
            ExperimentKind::SeriesCompare => "series-compare",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    #[arg(short = 'p')]
    pub p: Option<u64>,
    #[arg(short = 'n')]
    pub n: Option<u32>,
    #[arg(short = 'a')]
    pub a: Option<u64>,
    #[arg(short = 'b')]
    pub b: Option<u64>,
    #[arg(long)]
    pub a1: Option<u64>,
    #[arg(long)]
    pub b0: Option<u64>,
    /// Evaluation times, comma separated.
    #[arg(long = "t", value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Frequency truncation.
    #[arg(long = "H")]
    pub h: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv, json or svg.
    #[arg(long)]
    pub format: Option<String>,
    /// standard, renormalized or rearranged.
    #[arg(long)]
    pub variant: Option<String>,
    /// Shorthand for `--format svg`.
    #[arg(long)]
    pub svg: bool,
    #[arg(long = "n-grid", value_delimiter = ',')]
    pub n_grid: Vec<u32>,
    #[arg(long = "p-grid", value_delimiter = ',')]
    pub p_grid: Vec<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Shift multiset as `tau:mult,...`.
    #[arg(long)]
    pub mu: Option<String>,
    /// Conjugate exponents, comma separated.
    #[arg(long = "m", value_delimiter = ',')]
    pub m: Vec<u32>,
    /// Plain exponents, comma separated.
    #[arg(long = "n-exp", value_delimiter = ',')]
    pub n_exp: Vec<u32>,
}

/// Flag values after merging with the config file; every field optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub kind: Option<String>,
    pub p: Option<u64>,
    pub n: Option<u32>,
    pub a: Option<u64>,
    pub b: Option<u64>,
    pub a1: Option<u64>,
    pub b0: Option<u64>,
    pub t: Option<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub variant: Option<String>,
    pub svg: Option<bool>,
    pub n_grid: Option<Vec<u32>>,
    pub p_grid: Option<Vec<u64>>,
    pub samples: Option<u64>,
    pub mu: Option<String>,
    pub m: Option<Vec<u32>>,
    pub n_exp: Option<Vec<u32>>,
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl From<&Opts> for RunConfig {
    fn from(o: &Opts) -> Self {
        RunConfig {
            command: None,
            kind: None,
            p: o.p,
            n: o.n,
            a: o.a,
            b: o.b,
            a1: o.a1,
            b0: o.b0,
            t: nonempty(o.t.clone()),
            h: o.h,
            seed: o.seed,
            out: o.out.clone(),
            format: o.format.clone(),
            variant: o.variant.clone(),
            svg: o.svg.then_some(true),
            n_grid: nonempty(o.n_grid.clone()),
            p_grid: nonempty(o.p_grid.clone()),
            samples: o.samples,
            mu: o.mu.clone(),
            m: nonempty(o.m.clone()),
            n_exp: nonempty(o.n_exp.clone()),
        }
    }
}

impl RunConfig {
    /// Field-wise `self.or(fallback)`: flags win over the file.
    pub fn merged(self, fallback: RunConfig) -> RunConfig {
        RunConfig {
            command: self.command.or(fallback.command),
            kind: self.kind.or(fallback.kind),
            p: self.p.or(fallback.p),
            n: self.n.or(fallback.n),
            a: self.a.or(fallback.a),
            b: self.b.or(fallback.b),
            a1: self.a1.or(fallback.a1),
            b0: self.b0.or(fallback.b0),
            t: self.t.or(fallback.t),
            h: self.h.or(fallback.h),
            seed: self.seed.or(fallback.seed),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            variant: self.variant.or(fallback.variant),
            svg: self.svg.or(fallback.svg),
            n_grid: self.n_grid.or(fallback.n_grid),
            p_grid: self.p_grid.or(fallback.p_grid),
            samples: self.samples.or(fallback.samples),
            mu: self.mu.or(fallback.mu),
            m: self.m.or(fallback.m),
            n_exp: self.n_exp.or(fallback.n_exp),
        }
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text)
                .or_else(|e| serde_json::from_str(&text).map_err(|_| e))
                .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
        }
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn modulus(&self) -> Result<PrimePowerModulus> {
        let p = self.p.ok_or_else(|| Error::Usage("missing -p".into()))?;
        let n = self.n.ok_or_else(|| Error::Usage("missing -n".into()))?;
        PrimePowerModulus::new(p, n)
    }

    fn required(v: Option<u64>, flag: &str) -> Result<u64> {
        v.ok_or_else(|| Error::Usage(format!("missing {flag}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Shared report schema of all experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: RunConfig,
    pub value: Option<[f64; 2]>,
    pub n_grid: Vec<u32>,
    pub p_grid: Vec<u64>,
    pub series: Vec<Value>,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
    pub timestamp: String,
}

impl Report {
    fn new(spec: RunConfig) -> Self {
        Report {
            spec,
            value: None,
            n_grid: Vec::new(),
            p_grid: Vec::new(),
            series: Vec::new(),
            assertions: Vec::new(),
            pass: true,
            timestamp: timestamp(),
        }
    }

    fn assert(&mut self, name: &str, pass: bool, detail: String) {
        self.pass &= pass;
        self.assertions.push(Assertion { name: name.into(), pass, detail });
    }

    /// The report as JSON without the timestamp, for reproducibility checks.
    pub fn without_timestamp(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timestamp");
        v
    }
}

fn timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    secs.to_string()
}

fn c2(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub naive: Option<[f64; 2]>,
    pub closed: Option<f64>,
    pub difference: Option<f64>,
}

impl EvalOutcome {
    pub fn consistent(&self) -> bool {
        self.difference.is_none_or(|d| d <= EVAL_TOLERANCE)
    }
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalOutcome> {
    let m = cfg.modulus()?;
    let a = RunConfig::required(cfg.a, "-a")?;
    let b = RunConfig::required(cfg.b, "-b")?;
    let naive = if m.q() <= NAIVE_LIMIT { Some(kloosterman_naive(&m, a, b)?) } else { None };
    let closed = if m.n() >= 2 {
        let br = SqrtBranch::new(m.clone());
        Some(kloosterman_closed(a, b, &br)?)
    } else {
        None
    };
    let difference = match (naive, closed) {
        (Some(z), Some(c)) => Some((z - c).norm()),
        _ => None,
    };
    Ok(EvalOutcome { naive: naive.map(c2), closed, difference })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub file: Option<PathBuf>,
    pub format: ExportFormat,
    pub variant: Variant,
    pub vertices: u64,
    pub endpoint: [f64; 2],
}

fn build_path(m: &PrimePowerModulus, a: u64, b: u64, variant: Variant) -> Result<KloostermanPath> {
    match variant {
        Variant::Standard => path_vertices(m, a, b),
        Variant::Renormalized => renormalized_vertices(m, a, b),
        Variant::Rearranged => rearranged_vertices(m, a, b),
    }
}

pub fn cmd_path(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<PathOutcome> {
    let m = cfg.modulus()?;
    if m.q() > NAIVE_LIMIT {
        return Err(Error::Usage(format!("paths are limited to p^n <= {NAIVE_LIMIT}")));
    }
    let a = RunConfig::required(cfg.a, "-a")?;
    let b = RunConfig::required(cfg.b, "-b")?;
    let variant: Variant = cfg.variant.as_deref().unwrap_or("standard").parse()?;
    let format = if cfg.svg == Some(true) {
        ExportFormat::Svg
    } else {
        cfg.format.as_deref().unwrap_or("csv").parse()?
    };
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
        ExportFormat::Svg => "svg",
    };
    let target = match &cfg.out {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p.clone()),
        None => Some(PathBuf::from(format!("kloostpath_{}_{}_{}_{a}_{b}.{ext}", variant_name(variant), m.p(), m.n()))),
    };
    let mut sink: Box<dyn Write + '_> = match &target {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(&mut *stdout),
    };
    let (vertices, endpoint) = if variant == Variant::Standard && format == ExportFormat::Csv {
        let rows = stream_standard_csv(&m, a, b, &mut sink)?;
        (rows, kloosterman_naive(&m, a, b)?)
    } else {
        let path = build_path(&m, a, b, variant)?;
        export_path(&path, format, &mut sink)?;
        (path.len() as u64, path.endpoint())
    };
    sink.flush()?;
    Ok(PathOutcome { file: target, format, variant, vertices, endpoint: c2(endpoint) })
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Standard => "standard",
        Variant::Renormalized => "renormalized",
        Variant::Rearranged => "rearranged",
    }
}

/// Parse `tau:mult,tau:mult`.
pub fn parse_mu(text: &str) -> Result<ShiftMultiset> {
    let mut pairs = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (tau, k) = item
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("shift {item:?} is not of the form tau:mult")))?;
        let tau = tau.trim().parse().map_err(|_| Error::Usage(format!("bad shift {tau:?}")))?;
        let k = k.trim().parse().map_err(|_| Error::Usage(format!("bad multiplicity {k:?}")))?;
        pairs.push((tau, k));
    }
    Ok(ShiftMultiset::new(pairs))
}

fn decreasing_assertion(report: &mut Report, name: &str, values: &[f64], floor: f64) {
    let pass = decreasing_with_noise(values, 0.2, 1, floor);
    report.assert(name, pass, format!("values {values:?} (one inversion of at most 20% allowed)"));
}

pub fn experiment_equidist(mut cfg: RunConfig) -> Result<Report> {
    let p = *cfg.p.get_or_insert(3);
    let a1 = *cfg.a1.get_or_insert(1);
    let b0 = *cfg.b0.get_or_insert(1);
    let grid = cfg.n_grid.get_or_insert_with(|| vec![8, 10, 12]).clone();
    let mut report = Report::new(cfg);
    let mut ks = Vec::new();
    for &n in &grid {
        let br = SqrtBranch::new(PrimePowerModulus::new(p, n)?);
        let r = equidist_stat(&br, a1, b0)?;
        report.series.push(json!({"n": n, "ks": r.ks, "degenerate": r.degenerate, "samples": r.samples}));
        ks.push(r.ks);
    }
    decreasing_assertion(&mut report, "ks_decreasing", &ks, 0.0);
    report.value = ks.last().map(|&k| [k, 0.0]);
    report.n_grid = grid;
    Ok(report)
}

pub fn experiment_moments(mut cfg: RunConfig) -> Result<Report> {
    let p = *cfg.p.get_or_insert(3);
    let a1 = *cfg.a1.get_or_insert(1);
    let b0 = *cfg.b0.get_or_insert(1);
    let h = *cfg.h.get_or_insert(100_000);
    let ts = cfg.t.get_or_insert_with(|| vec![0.5]).clone();
    let ms = cfg.m.get_or_insert_with(|| vec![1; ts.len()]).clone();
    let ns = cfg.n_exp.get_or_insert_with(|| vec![1; ts.len()]).clone();
    let grid = cfg.n_grid.get_or_insert_with(|| vec![6, 8, 10, 12]).clone();
    let mut report = Report::new(cfg);
    let series = SeriesSpec::class(p, a1, b0, h, 0);
    let theory = exact_series_moment(&series, &ts, &ms, &ns)?;
    let mut gaps = Vec::new();
    let mut last = None;
    for &n in &grid {
        let m = PrimePowerModulus::new(p, n)?;
        let spec = MomentSpec { t: ts.clone(), m: ms.clone(), n_exp: ns.clone(), a1, b0, ensemble: crate::moments::Ensemble::ClassA1 };
        let emp = empirical_moment(&m, &spec)?;
        let gap = (emp - theory.value).norm();
        report.series.push(json!({"n": n, "empirical": c2(emp), "theory": c2(theory.value), "gap": gap}));
        gaps.push(gap);
        last = Some(emp);
    }
    decreasing_assertion(&mut report, "moment_gap_decreasing", &gaps, theory.tail_l2.powi(2));
    report.series.push(json!({"fitted_delta": fitted_decay(p, &grid, &gaps), "tail_l2": theory.tail_l2}));
    report.value = last.map(c2);
    report.n_grid = grid;
    Ok(report)
}

pub fn experiment_sumprod(mut cfg: RunConfig) -> Result<Report> {
    let p = *cfg.p.get_or_insert(3);
    let a1 = *cfg.a1.get_or_insert(1);
    let b0 = *cfg.b0.get_or_insert(1);
    let mu = parse_mu(cfg.mu.get_or_insert_with(|| "0:2".into()))?;
    let grid = cfg.n_grid.get_or_insert_with(|| vec![6, 8, 10, 12]).clone();
    let mut report = Report::new(cfg);
    let target = mu.main_term();
    let mut gaps = Vec::new();
    let mut last = None;
    for &n in &grid {
        let br = SqrtBranch::new(PrimePowerModulus::new(p, n)?);
        let s = sum_of_products(&br, &mu, a1, b0);
        let mut row = json!({
            "n": n,
            "value": c2(s),
            "main_term": target,
            "normalized_main_term": mu.normalized_main_term(),
            "degenerate": !mu.mu.keys().all(|&tau| {
                br.modulus().legendre(br.modulus().mul(br.modulus().sub(a1 % p, tau % p), b0 % p)) == 1
            }),
        });
        if br.modulus().q() <= 3u64.pow(8) && s.norm() > 0.0 {
            let terms = sop_decompose(&br, &mu, a1, b0)?;
            row["reconstruction_error"] = json!((sop_reconstruct(&terms, a1) - s).norm());
        }
        report.series.push(row);
        gaps.push((s - target).norm());
        last = Some(s);
    }
    decreasing_assertion(&mut report, "main_term_gap_decreasing", &gaps, 1e-9);
    report.value = last.map(c2);
    report.n_grid = grid;
    Ok(report)
}

pub fn experiment_census(mut cfg: RunConfig) -> Result<Report> {
    let p = *cfg.p.get_or_insert(3);
    let n = *cfg.n.get_or_insert(3);
    let a = *cfg.a.get_or_insert(1);
    let b = *cfg.b.get_or_insert(1);
    let m = PrimePowerModulus::new(p, n)?;
    let mut report = Report::new(cfg);
    let census = summand_census(&m, a, b)?;
    report.series.push(json!({"distinct": census.distinct, "counts": census.counts}));
    report.assert("census_total", census.total() == m.phi(), format!("total {} vs phi {}", census.total(), m.phi()));
    for kappa in (1..).take_while(|k| 2 * k < n) {
        let r = multiplicity_check(&m, kappa)?;
        report.series.push(json!({
            "kappa": kappa,
            "expected": r.expected,
            "checked": r.checked,
            "uniform_count_holds": r.passed,
            "refined_law_holds": r.refined_passed,
        }));
        report.assert(&format!("multiplicity_refined_kappa_{kappa}"), r.refined_passed, format!("{} classes", r.checked));
    }
    report.value = Some([census.distinct as f64, 0.0]);
    report.n_grid = vec![n];
    Ok(report)
}

pub fn experiment_series_compare(mut cfg: RunConfig) -> Result<Report> {
    let b0 = *cfg.b0.get_or_insert(1);
    let t = cfg.t.get_or_insert_with(|| vec![0.5])[0];
    let h = *cfg.h.get_or_insert(100);
    let samples = *cfg.samples.get_or_insert(200_000);
    let seed = *cfg.seed.get_or_insert(1);
    let grid = cfg.p_grid.get_or_insert_with(|| vec![11, 31, 101]).clone();
    let mut report = Report::new(cfg);
    let all = SeriesSpec { law: LawSpec::MU_U, h_max: h, filter: FrequencyFilter::All, seed };
    let target = exact_series_moment(&all, &[t], &[1], &[1])?.value;
    let mut gaps = Vec::new();
    let mut errs = Vec::new();
    let mut last = None;
    for &p in &grid {
        let mc = glued_moment_mc(p, b0, t, h, 1, 1, samples, seed)?;
        let exact = glued_moment_exact(p, b0, t, h, 1, 1)?;
        let gap = (mc.mean - target).norm();
        report.series.push(json!({
            "p": p,
            "mc": c2(mc.mean),
            "std_err": mc.std_err,
            "exact_glued": c2(exact),
            "target": c2(target),
            "gap": gap,
            "exact_gap": (exact - target).norm(),
        }));
        gaps.push(gap);
        errs.push(mc.std_err);
        last = Some(mc.mean);
    }
    let pass = gaps.windows(2).zip(errs.windows(2)).all(|(g, e)| g[1] <= g[0] + 3.0 * e[0].hypot(e[1]));
    report.assert("gap_decreasing_within_3_sigma", pass, format!("gaps {gaps:?}, std errors {errs:?}"));
    report.value = last.map(c2);
    report.p_grid = grid;
    Ok(report)
}

pub fn cmd_experiment(kind: ExperimentKind, cfg: RunConfig) -> Result<Report> {
    match kind {
        ExperimentKind::Equidist => experiment_equidist(cfg),
        ExperimentKind::Moments => experiment_moments(cfg),
        ExperimentKind::Sumprod => experiment_sumprod(cfg),
        ExperimentKind::Census => experiment_census(cfg),
        ExperimentKind::SeriesCompare => experiment_series_compare(cfg),
    }
}

fn write_report(report: &Report, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    match out {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, text + "\n")?,
        _ => writeln!(stdout, "{text}")?,
    }
    Ok(())
}

/// Run a parsed command; `Ok(false)` signals a failed self-check or assertion.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Eval(opts) => {
            let mut cfg = RunConfig::from(&opts).merged(file);
            cfg.command = Some("eval".into());
            let out = cmd_eval(&cfg)?;
            if cfg.format.as_deref() == Some("json") {
                writeln!(stdout, "{}", serde_json::to_string(&out).map_err(|e| Error::Io(e.to_string()))?)?;
            } else {
                if let Some([re, im]) = out.naive {
                    writeln!(stdout, "naive      {re:.12} {im:+.12}i")?;
                }
                if let Some(c) = out.closed {
                    writeln!(stdout, "closed     {c:.12}")?;
                }
                if let Some(d) = out.difference {
                    writeln!(stdout, "difference {d:.3e}")?;
                }
            }
            Ok(out.consistent())
        }
        Command::Path(opts) => {
            let mut cfg = RunConfig::from(&opts).merged(file);
            cfg.command = Some("path".into());
            let out = cmd_path(&cfg, stdout)?;
            if let Some(f) = &out.file {
                let [re, im] = out.endpoint;
                writeln!(stdout, "wrote {} ({} vertices, endpoint {re:.12} {im:+.12}i)", f.display(), out.vertices)?;
            }
            Ok(true)
        }
        Command::Experiment { kind, opts } => {
            let mut cfg = RunConfig::from(&opts).merged(file);
            cfg.command = Some("experiment".into());
            cfg.kind = Some(kind.name().into());
            let out = cfg.out.clone();
            let report = cmd_experiment(kind, cfg)?;
            write_report(&report, out.as_deref(), stdout)?;
            Ok(report.pass)
        }
    }
}

/// Apply `KLOOSTPATH_THREADS` to the global worker pool.
pub fn configure_threads() {
    if let Some(n) = std::env::var("KLOOSTPATH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Entry point of the binary: exit 0 on success, 1 on a failed check, 2 on error.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    configure_threads();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kloostpath: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("kloostpath").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn eval_examples() {
        let mut out = Vec::new();
        assert!(execute(parse(&["eval", "-p", "3", "-n", "2", "-a", "1", "-b", "1"]), &mut out).unwrap());
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("closed     0.347296"), "{text}");
        let cfg = RunConfig { p: Some(3), n: Some(2), a: Some(2), b: Some(1), ..Default::default() };
        assert_eq!(cmd_eval(&cfg).unwrap().closed, Some(0.0));
        let cfg = RunConfig { p: Some(3), n: Some(40), a: Some(1), b: Some(1), ..Default::default() };
        assert!(matches!(cmd_eval(&cfg), Err(Error::InvalidModulus(_))));
    }

    #[test]
    fn config_roundtrip_and_precedence() {
        let cfg = RunConfig {
            p: Some(5),
            t: Some(vec![0.25, 0.5]),
            h: Some(64),
            n_grid: Some(vec![4, 6]),
            ..Default::default()
        };
        let text = cfg.to_canonical_json();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_canonical_json(), text);
        let flags = RunConfig { p: Some(7), ..Default::default() };
        let merged = flags.merged(cfg);
        assert_eq!(merged.p, Some(7));
        assert_eq!(merged.h, Some(64));
    }

    #[test]
    fn parse_shift_multiset() {
        let mu = parse_mu("0:2, 9:1").unwrap();
        assert_eq!(mu.norm1(), 3);
        assert!(parse_mu("0-2").is_err());
    }

    #[test]
    fn census_report() {
        let mut out = Vec::new();
        assert!(execute(parse(&["experiment", "census", "-p", "3", "-n", "3"]), &mut out).unwrap());
        let report: Report = serde_json::from_slice(&out).unwrap();
        assert_eq!(report.value, Some([4.0, 0.0]));
        assert_eq!(report.spec.kind.as_deref(), Some("census"));
    }
}

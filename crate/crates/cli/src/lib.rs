//! `topocharge` command line: loads a catalog model or a model file, runs the
//! requested charge computations and writes a JSON or CSV report.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use topocharge::catalog::{build_model, list_models, Model, Params};
use topocharge::report::{self, ChargeReport, Method, MethodFailure, RunOptions, Verdict, SCHEMA};
use topocharge::symbolic::{parse_model_file, ModelFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DISAGREE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "topocharge", version, about = "Topological charges of domain-wall Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Charge from the degree of the base field
    Charge(Common),
    /// Index integral of the Fredholm symbol
    Fh(Common),
    /// Spectral flow over the last momentum
    Flow(Common),
    /// Line conductivity trace on a real-space grid (d = 1)
    Sigma(Common),
    /// Toeplitz form of the conductivity trace (d = 1)
    Toeplitz(Common),
    /// All applicable methods and a verdict
    Verify(Common),
    /// Registered models
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Print the registry with parameter ranges
    List {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify every registered model at its defaults, or one model with --model
    Run(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Catalog model id
    #[arg(long, conflicts_with = "file")]
    pub model: Option<String>,
    /// JSON model file
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Parameter override `name=value` (repeatable)
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
    /// Regularization scale (default 0.2 / parameter scale)
    #[arg(long)]
    pub eps: Option<f64>,
    /// Fixed radius for the degree ball and the index sphere
    #[arg(long)]
    pub radius: Option<f64>,
    /// Sphere quadrature level
    #[arg(long)]
    pub level: Option<usize>,
    /// Hermite modes per confined axis
    #[arg(long)]
    pub basis: Option<usize>,
    /// Real-space grid points for the traces
    #[arg(long)]
    pub grid: Option<usize>,
    /// Fiber momentum window half-width
    #[arg(long = "xi-range")]
    pub xi_range: Option<f64>,
    /// Seed for the randomized steps; also drops timings so reports are reproducible
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: TOPOCHARGE_THREADS, then all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Allow the d = 3 index integral
    #[arg(long)]
    pub slow: bool,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

impl Common {
    fn run_options(&self) -> RunOptions {
        let base = RunOptions::default();
        RunOptions {
            seed: self.seed.unwrap_or(base.seed),
            radius: self.radius,
            level: self.level,
            basis: self.basis,
            grid: self.grid,
            xi_max: self.xi_range,
            slow: self.slow,
            timing: self.seed.is_none(),
        }
    }

    fn parsed_params(&self) -> Result<Params, String> {
        let mut p = Params::new();
        for kv in &self.params {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("--param expects name=value, got `{kv}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("--param {k}: `{v}` is not a number"))?;
            p.insert(k.trim().to_string(), v);
        }
        Ok(p)
    }
}

enum Subject {
    Model(Box<Model>),
    Symbol { id: String, file: ModelFile, scale: f64 },
}

fn load(c: &Common) -> Result<Subject, String> {
    let params = c.parsed_params()?;
    match (&c.model, &c.file) {
        (Some(id), None) => Ok(Subject::Model(Box::new(build_model(id, &params, c.eps).map_err(|e| e.to_string())?))),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut over = params;
            if let Some(e) = c.eps {
                over.insert("eps".into(), e);
            }
            let id = format!("file:{}", path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default());
            match parse_model_file(&text, &over).map_err(|e| e.to_string())? {
                ModelFile::Vector { field, params } => {
                    let m = Model::from_field(&id, field, params, BTreeMap::new()).map_err(|e| e.to_string())?;
                    Ok(Subject::Model(Box::new(m)))
                }
                file @ ModelFile::Matrix { .. } => {
                    let ModelFile::Matrix { params, .. } = &file else { unreachable!() };
                    let scale = params.values().map(|v| v.abs()).fold(1.0, f64::max);
                    Ok(Subject::Symbol { id, file, scale })
                }
            }
        }
        _ => Err("give exactly one of --model and --file".into()),
    }
}

/// A matrix symbol file only supports the index integral.
fn symbol_report(id: &str, file: &ModelFile, scale: f64, methods: &[Method], opts: &RunOptions) -> ChargeReport {
    let ModelFile::Matrix { symbol, params } = file else { unreachable!() };
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for &m in methods {
        let r = if m == Method::Fh {
            report::fh_on_symbol(symbol, scale, opts).map_err(|e| e.to_string())
        } else {
            Err(format!("capability: `{}` needs a vector field; matrix symbol files support `fh` only", m.name()))
        };
        match r {
            Ok(r) => results.push(r),
            Err(error) => failures.push(MethodFailure { method: m, error }),
        }
    }
    ChargeReport {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        model: id.to_string(),
        params: params.clone(),
        eps: None,
        expected: None,
        verdict: report::verdict(&results, &failures),
        results,
        failures,
        seeds: vec![opts.seed],
    }
}

fn csv_rows(reports: &[ChargeReport]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| e.to_string();
    w.write_record(["model", "method", "value", "rounded", "residual", "wall_clock_s", "verdict", "expected", "error"])
        .map_err(err)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in reports {
        let verdict = serde_json::to_value(r.verdict).map_err(|e| e.to_string())?.as_str().unwrap_or("").to_string();
        let expected = opt(r.expected.map(|v| v.to_string()));
        for m in &r.results {
            w.write_record([
                r.model.clone(),
                m.method.name().into(),
                format!("{}", m.value),
                opt(m.rounded.map(|v| v.to_string())),
                format!("{}", m.residual),
                opt(m.wall_clock_s.map(|v| format!("{v:.3}"))),
                verdict.clone(),
                expected.clone(),
                String::new(),
            ])
            .map_err(err)?;
        }
        for f in &r.failures {
            let row = [&r.model, f.method.name(), "", "", "", "", &verdict, &expected, &f.error];
            w.write_record(row).map_err(err)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).and_then(|_| so.flush()).map_err(|e| e.to_string())
        }
    }
}

fn render(reports: &[ChargeReport], many: bool, format: Format) -> Result<String, String> {
    match format {
        Format::Json if many => serde_json::to_string_pretty(reports).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Json => serde_json::to_string_pretty(&reports[0]).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Csv => csv_rows(reports),
    }
}

/// Whether any rounded value contradicts the closed-form charge.
fn contradicts_expected(r: &ChargeReport) -> bool {
    r.expected.is_some_and(|e| r.results.iter().any(|m| m.rounded.is_some_and(|v| v != e)))
}

fn threads(c: &Common) -> Result<usize, String> {
    if let Some(t) = c.threads {
        return Ok(t);
    }
    match std::env::var("TOPOCHARGE_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| format!("TOPOCHARGE_THREADS: `{v}` is not a thread count")),
        Err(_) => Ok(0),
    }
}

fn single(c: &Common, method: Method) -> Result<i32, String> {
    let opts = c.run_options();
    let r = match load(c)? {
        Subject::Model(m) => report::report(&m, &[method], &opts),
        Subject::Symbol { id, file, scale } => symbol_report(&id, &file, scale, &[method], &opts),
    };
    emit(&render(std::slice::from_ref(&r), false, c.format)?, &c.out)?;
    if let Some(f) = r.failures.first() {
        eprintln!("error: {}", f.error);
        return Ok(EXIT_ERROR);
    }
    Ok(EXIT_OK)
}

fn verify(c: &Common) -> Result<i32, String> {
    let opts = c.run_options();
    let r = match load(c)? {
        Subject::Model(m) => report::verify(&m, &opts),
        Subject::Symbol { id, file, scale } => symbol_report(&id, &file, scale, &[Method::Fh], &opts),
    };
    emit(&render(std::slice::from_ref(&r), false, c.format)?, &c.out)?;
    Ok(exit_for(&[r]))
}

fn exit_for(reports: &[ChargeReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::Disagree || contradicts_expected(r)) {
        EXIT_DISAGREE
    } else if reports.iter().any(|r| r.results.is_empty()) {
        EXIT_ERROR
    } else {
        EXIT_OK
    }
}

fn catalog_run(c: &Common) -> Result<i32, String> {
    let opts = c.run_options();
    let ids: Vec<String> = match (&c.model, &c.file) {
        (_, Some(_)) => return Err("catalog run takes --model, not --file".into()),
        (Some(id), None) => vec![id.clone()],
        (None, None) => {
            if !c.params.is_empty() {
                return Err("--param needs --model in catalog run".into());
            }
            list_models().iter().map(|m| m.id.to_string()).collect()
        }
    };
    let params = c.parsed_params()?;
    let mut reports = Vec::new();
    for id in &ids {
        let m = build_model(id, &params, c.eps).map_err(|e| e.to_string())?;
        reports.push(report::verify(&m, &opts));
    }
    emit(&render(&reports, true, c.format)?, &c.out)?;
    Ok(exit_for(&reports))
}

fn dispatch(cli: &Cli) -> Result<i32, String> {
    match &cli.command {
        Command::Charge(c) => single(c, Method::Degree),
        Command::Fh(c) => single(c, Method::Fh),
        Command::Flow(c) => single(c, Method::Flow),
        Command::Sigma(c) => single(c, Method::Sigma),
        Command::Toeplitz(c) => single(c, Method::Toeplitz),
        Command::Verify(c) => verify(c),
        Command::Catalog(CatalogCommand::List { out }) => {
            let text = serde_json::to_string_pretty(&list_models()).map_err(|e| e.to_string())? + "\n";
            emit(&text, out).map(|_| EXIT_OK)
        }
        Command::Catalog(CatalogCommand::Run(c)) => catalog_run(c),
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let common = match &cli.command {
        Command::Charge(c)
        | Command::Fh(c)
        | Command::Flow(c)
        | Command::Sigma(c)
        | Command::Toeplitz(c)
        | Command::Verify(c)
        | Command::Catalog(CatalogCommand::Run(c)) => Some(c),
        Command::Catalog(CatalogCommand::List { .. }) => None,
    };
    let n = match common.map(threads).transpose() {
        Ok(n) => n.unwrap_or(0),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    pool.install(|| match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    })
}

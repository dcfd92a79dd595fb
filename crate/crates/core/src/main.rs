use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use branchlab::energy::{energy_of, grid_energy_ms, grid_energy_thm4, EnergyBreakdown};
use branchlab::harness::{self, Config, HarnessError, Optimizer, CSV_HEADER};
use branchlab::microstructure::json::write_json;
use branchlab::microstructure::validate::validate;
use branchlab::microstructure::{
    assemble_full, build_full_dirichlet, build_thm4, first_order_laminate, make_params, BranchParams, Kind,
    Microstructure,
};
use branchlab::spectral::fourier_report;
use branchlab::tensor_wells::SymTensor;

#[derive(Parser)]
#[command(name = "branchlab", version, about = "Branched laminate constructions, energies and Fourier diagnostics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build and validate a construction, write it as JSON
    Build {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long)]
        out: Option<String>,
    },
    /// Energy breakdown of one construction
    Energy {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// use midpoint quadrature on an N^2 (or N^3) grid instead of the exact evaluation
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        csv: bool,
    },
    /// Optimized energies over the configured eps list, as CSV
    Sweep {
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Fit total ~ eps^slope to a sweep CSV ("-" reads stdin)
    Fit { csv: String },
    /// Spectral report of one construction
    Fourier {
        #[command(flatten)]
        p: ParamArgs,
        /// grid size, overrides grid_N
        #[arg(long = "N")]
        n: Option<usize>,
        /// diagonal of the boundary datum F, comma separated
        #[arg(long, default_value = "0,0,0")]
        datum: String,
    },
    /// Sweep, fit, acceptance energy, validation and spectral report in one JSON plus a .dat file
    Report {
        #[arg(long)]
        config: Option<String>,
        #[arg(long, default_value = "report")]
        out: String,
        #[arg(long)]
        no_fourier: bool,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    config: Option<String>,
    /// FirstOrderAux, FullSecondOrder, Thm4Simple or FullDirichletCutoff; defaults to the config
    #[arg(long)]
    kind: Option<String>,
    /// defaults to the config value
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 0.125)]
    r: f64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    r2: f64,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure { code: e.exit_code() as u8, msg: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        // a closed pipe downstream (`| head`) is not an error
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure { code: 0, msg: String::new() };
        }
        Failure { code: 1, msg: e.to_string() }
    }
}

fn emit(text: &str) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    out.flush()
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure { code: 3, msg: msg.into() }
}

fn load_config(path: &Option<String>) -> Result<Config, Failure> {
    match path {
        Some(p) => Config::load(p).map_err(|e| HarnessError::from(e).into()),
        None => Ok(Config::default()),
    }
}

fn parse_kind(s: &str) -> Result<Kind, Failure> {
    Kind::parse(s).ok_or_else(|| config_error(format!("unknown kind `{s}`")))
}

impl ParamArgs {
    fn resolve(&self) -> Result<(Config, Kind, BranchParams), Failure> {
        let cfg = load_config(&self.config)?;
        let kind = match &self.kind {
            Some(k) => parse_kind(k)?,
            None => cfg.kind,
        };
        let theta = self.theta.unwrap_or(cfg.theta);
        let p = make_params(theta, self.r, self.r2, 0.0).map_err(HarnessError::from)?;
        Ok((cfg, kind, p))
    }
}

fn cell_tiling(kind: Kind, p: &BranchParams) -> Result<Microstructure, Failure> {
    match kind {
        Kind::FirstOrderAux => Ok(first_order_laminate(p)),
        Kind::FullSecondOrder => Ok(assemble_full(p)),
        Kind::FullDirichletCutoff => Ok(build_full_dirichlet(p)),
        Kind::Thm4Simple => Err(config_error("Thm4Simple is a pointwise evaluator without a cell list")),
    }
}

fn output(path: &Option<String>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Build { p, out } => {
            let (_, kind, params) = p.resolve()?;
            let ms = cell_tiling(kind, &params)?;
            let mut w = output(&out)?;
            write_json(&ms, &mut w)?;
            w.flush()?;
            let rep = validate(&ms);
            if !rep.passed() {
                let failed: Vec<String> =
                    rep.checks.iter().filter(|c| !c.pass).map(|c| format!("{} = {:e} > {:e}", c.name, c.value, c.limit)).collect();
                return Err(Failure { code: 2, msg: format!("validation failed: {}", failed.join("; ")) });
            }
            Ok(())
        }
        Cmd::Energy { p, eps, grid, csv } => {
            let (_, kind, params) = p.resolve()?;
            let b: EnergyBreakdown = match (grid, kind) {
                (None, k) => energy_of(k, &params, eps),
                (Some(n), Kind::Thm4Simple) => grid_energy_thm4(&build_thm4(&params), eps, n),
                (Some(n), k) => grid_energy_ms(&cell_tiling(k, &params)?, eps, n),
            };
            if csv {
                emit(&format!("{}\n{}", EnergyBreakdown::CSV_HEADER, b.csv_row()))?;
            } else {
                emit(&b.to_json())?;
            }
            Ok(())
        }
        Cmd::Sweep { config, kind, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(k) = kind {
                cfg.kind = parse_kind(&k)?;
            }
            let mut w = output(&out)?;
            writeln!(w, "{CSV_HEADER}")?;
            w.flush()?;
            let opt = Optimizer::new(cfg.theta);
            let mut io_err = None;
            let sw = harness::sweep(&opt, cfg.kind, &cfg.eps_list, |row| {
                if let Err(e) = writeln!(w, "{}", row.csv_row()).and_then(|_| w.flush()) {
                    io_err.get_or_insert(e);
                }
            });
            if let Some(e) = io_err {
                return Err(e.into());
            }
            for f in &sw.failures {
                eprintln!("eps = {}: {}", f.eps, f.error);
            }
            Ok(())
        }
        Cmd::Fit { csv } => {
            let mut text = String::new();
            if csv == "-" {
                io::stdin().read_to_string(&mut text)?;
            } else {
                text = std::fs::read_to_string(&csv)?;
            }
            let rows = harness::parse_csv(&text)?;
            let fit = harness::fit_rows(&rows)?;
            emit(&serde_json::to_string_pretty(&fit).expect("fit serializes"))?;
            Ok(())
        }
        Cmd::Fourier { p, n, datum } => {
            let (cfg, kind, params) = p.resolve()?;
            let d: Vec<f64> = datum
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| config_error(format!("bad datum `{datum}`")))?;
            if d.len() != 3 {
                return Err(config_error("datum needs three entries"));
            }
            let ms = cell_tiling(kind, &params)?;
            let e = energy_of(kind, &params, 0.0);
            let rep = fourier_report(&ms, &SymTensor::diag(d[0], d[1], d[2]), n.unwrap_or(cfg.grid_n), &cfg.spectral(), e.elastic, e.surface)
                .map_err(HarnessError::from)?;
            emit(&serde_json::to_string_pretty(&rep).expect("report serializes"))?;
            Ok(())
        }
        Cmd::Report { config, out, no_fourier } => {
            let cfg = load_config(&config)?;
            let rep = harness::build_report(&cfg, !no_fourier, |row| eprintln!("eps = {} done in {:.2} s", row.eps, row.seconds))?;
            std::fs::write(format!("{out}.json"), serde_json::to_string_pretty(&rep).expect("report serializes"))?;
            std::fs::write(format!("{out}.dat"), harness::dat_lines(&rep.sweep.rows))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.code == 0 => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

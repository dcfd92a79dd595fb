//! Parameter optimization, eps sweeps, fits and reports.

pub mod config;
pub mod fit;

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub use config::{Config, ConfigError};
pub use fit::{fit_power_law, FitResult};

use crate::energy::{energy_of, total, EnergyBreakdown};
use crate::microstructure::validate::{validate, ValidationReport};
use crate::microstructure::{assemble_full, make_params, BranchParams, Kind, ParamError};
use crate::spectral::{fourier_report, FourierReport, SpectralError};
use crate::tensor_wells::SymTensor;

/// Upper end of the admissible eps range.
pub const EPS0: f64 = 0.1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("eps = {eps} must lie in (0, {eps0})")]
    EpsRange { eps: f64, eps0: f64 },
    #[error("no admissible r among the candidates for eps = {0}")]
    NoAdmissible(f64),
    #[error("fit: {0}")]
    Fit(String),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl HarnessError {
    /// Process exit code: 3 for configuration and parameter problems, 2 for rejected data.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Params(_) | HarnessError::EpsRange { .. } | HarnessError::NoAdmissible(_) => 3,
            HarnessError::Fit(_) | HarnessError::Csv { .. } | HarnessError::Spectral(_) => 2,
        }
    }
}

/// Exponent of the analytic rate for r.
pub fn seed_exponent(kind: Kind) -> f64 {
    match kind {
        Kind::FullSecondOrder => 0.25,
        Kind::Thm4Simple | Kind::FirstOrderAux => 1.0 / 3.0,
        Kind::FullDirichletCutoff => 0.4,
    }
}

/// Exponent of eps in the proven upper bound.
pub fn expected_exponent(kind: Kind) -> f64 {
    match kind {
        Kind::FullSecondOrder => 0.5,
        Kind::Thm4Simple | Kind::FirstOrderAux => 2.0 / 3.0,
        Kind::FullDirichletCutoff => 0.4,
    }
}

/// Nearest power of 1/2 in log scale.
pub fn snap(r: f64) -> f64 {
    0.5f64.powi((-r.log2()).round() as i32)
}

pub fn r2_candidates(kind: Kind, r: f64) -> [f64; 3] {
    let base = if kind == Kind::FullDirichletCutoff { r.powf(1.5) } else { r * r };
    [base / 2.0, base, 2.0 * base]
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Eval {
    pub r: f64,
    pub r2: f64,
    pub elastic: f64,
    pub surface: f64,
    pub cells: u64,
}

impl Eval {
    pub fn total(&self, eps: f64) -> f64 {
        self.elastic + eps * self.surface
    }
}

#[derive(Clone, Debug)]
pub struct Choice {
    pub params: BranchParams,
    pub best: Eval,
    pub total: f64,
    /// every admissible candidate with its total
    pub candidates: Vec<(Eval, f64)>,
}

type Key = (Kind, u64, u64);

/// Memoizes energies per (kind, r, r2) so sweeps reuse evaluations across eps.
pub struct Optimizer {
    pub theta: f64,
    pub eps0: f64,
    cache: Mutex<BTreeMap<Key, Option<Eval>>>,
}

impl Optimizer {
    pub fn new(theta: f64) -> Optimizer {
        Optimizer { theta, eps0: EPS0, cache: Mutex::new(BTreeMap::new()) }
    }

    /// Energies at eps = 0 split into elastic and surface parts; None if inadmissible.
    pub fn evaluate(&self, kind: Kind, r: f64, r2: f64) -> Option<Eval> {
        let key = (kind, r.to_bits(), r2.to_bits());
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return *hit;
        }
        let out = make_params(self.theta, r, r2, 0.0).ok().map(|p| {
            let b = energy_of(kind, &p, 0.0);
            Eval { r, r2, elastic: b.elastic, surface: b.surface, cells: b.cells }
        });
        self.cache.lock().expect("cache lock").insert(key, out);
        out
    }

    pub fn optimize(&self, eps: f64, kind: Kind) -> Result<Choice, HarnessError> {
        if !(eps > 0.0 && eps < self.eps0) {
            return Err(HarnessError::EpsRange { eps, eps0: self.eps0 });
        }
        let seed = snap(eps.powf(seed_exponent(kind)));
        let mut candidates = Vec::new();
        for r in [seed / 2.0, seed, 2.0 * seed] {
            for r2 in r2_candidates(kind, r) {
                if let Some(e) = self.evaluate(kind, r, r2) {
                    candidates.push((e, e.total(eps)));
                }
            }
        }
        let mut best: Option<(Eval, f64)> = None;
        for &(e, t) in &candidates {
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((e, t));
            }
        }
        let (best, total) = best.ok_or(HarnessError::NoAdmissible(eps))?;
        let params = make_params(self.theta, best.r, best.r2, eps)?;
        Ok(Choice { params, best, total, candidates })
    }
}

/// Minimizer of the total energy over the candidate grid around the analytic rate.
pub fn optimize_params(eps: f64, kind: Kind, theta: f64) -> Result<BranchParams, HarnessError> {
    Optimizer::new(theta).optimize(eps, kind).map(|c| c.params)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub kind: Kind,
    pub theta: f64,
    pub r: f64,
    pub r2: f64,
    pub elastic: f64,
    pub surface: f64,
    pub total: f64,
    pub cells: u64,
    /// wall time of the row, memoized evaluations included at their lookup cost
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "eps,kind,theta,r,r2,elastic,surface,total,cells,seconds";

impl SweepRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.eps, self.kind, self.theta, self.r, self.r2, self.elastic, self.surface, self.total, self.cells, self.seconds
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub eps: f64,
    pub error: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

impl Sweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

/// One row per eps in list order. Rows run one after another, each parallel inside, and are
/// handed to `on_row` as soon as they finish.
pub fn sweep(opt: &Optimizer, kind: Kind, eps_list: &[f64], mut on_row: impl FnMut(&SweepRow)) -> Sweep {
    let mut out = Sweep::default();
    for &eps in eps_list {
        let t0 = Instant::now();
        match opt.optimize(eps, kind) {
            Ok(c) => {
                let row = SweepRow {
                    eps,
                    kind,
                    theta: opt.theta,
                    r: c.best.r,
                    r2: c.best.r2,
                    elastic: c.best.elastic,
                    surface: c.best.surface,
                    total: c.total,
                    cells: c.best.cells,
                    seconds: t0.elapsed().as_secs_f64(),
                };
                on_row(&row);
                out.rows.push(row);
            }
            Err(e) => out.failures.push(SweepFailure { eps, error: e.to_string() }),
        }
    }
    out
}

fn field<T: std::str::FromStr>(line: usize, name: &str, v: &str) -> Result<T, HarnessError> {
    v.trim().parse().map_err(|_| HarnessError::Csv { line, msg: format!("bad {name} `{v}`") })
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, HarnessError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(HarnessError::Csv { line: 1, msg: format!("header must be `{CSV_HEADER}`") }),
    }
    lines
        .map(|(i, l)| {
            let line = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 10 {
                return Err(HarnessError::Csv { line, msg: format!("expected 10 fields, got {}", f.len()) });
            }
            let kind = Kind::parse(f[1].trim()).ok_or(HarnessError::Csv { line, msg: format!("bad kind `{}`", f[1]) })?;
            Ok(SweepRow {
                eps: field(line, "eps", f[0])?,
                kind,
                theta: field(line, "theta", f[2])?,
                r: field(line, "r", f[3])?,
                r2: field(line, "r2", f[4])?,
                elastic: field(line, "elastic", f[5])?,
                surface: field(line, "surface", f[6])?,
                total: field(line, "total", f[7])?,
                cells: field(line, "cells", f[8])?,
                seconds: field(line, "seconds", f[9])?,
            })
        })
        .collect()
}

pub fn fit_rows(rows: &[SweepRow]) -> Result<FitResult, HarnessError> {
    let x: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.total).collect();
    fit_power_law(&x, &y)
}

/// max total / eps^a over the rows.
pub fn frozen_constant(rows: &[SweepRow], a: f64) -> f64 {
    rows.iter().map(|r| r.total / r.eps.powf(a)).fold(0.0, f64::max)
}

/// Gnuplot data: log10(eps) log10(total) per line.
pub fn dat_lines(rows: &[SweepRow]) -> String {
    rows.iter().map(|r| format!("{} {}\n", r.eps.log10(), r.total.log10())).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceBundle {
    pub energy: EnergyBreakdown,
    pub validation: ValidationReport,
    pub fourier: Option<FourierReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: Config,
    pub sweep: Sweep,
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
    pub expected_slope: f64,
    pub frozen_constant: f64,
    /// FullSecondOrder at r = 1/8, r2 = 1/64 with the configured theta
    pub acceptance: AcceptanceBundle,
}

pub fn acceptance_params(theta: f64) -> Result<BranchParams, HarnessError> {
    Ok(make_params(theta, 0.125, 1.0 / 64.0, 0.0)?)
}

pub fn build_report(cfg: &Config, with_fourier: bool, on_row: impl FnMut(&SweepRow)) -> Result<Report, HarnessError> {
    let opt = Optimizer::new(cfg.theta);
    let sw = sweep(&opt, cfg.kind, &cfg.eps_list, on_row);
    let (fit, fit_error) = match fit_rows(&sw.rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let a = expected_exponent(cfg.kind);
    let ms = assemble_full(&acceptance_params(cfg.theta)?);
    let energy = total(&ms, 0.0).expect("cell-tiling kind");
    let fourier = if with_fourier {
        Some(fourier_report(&ms, &SymTensor::ZERO, cfg.grid_n, &cfg.spectral(), energy.elastic, energy.surface)?)
    } else {
        None
    };
    Ok(Report {
        config: cfg.clone(),
        frozen_constant: frozen_constant(&sw.rows, a),
        sweep: sw,
        fit,
        fit_error,
        expected_slope: a,
        acceptance: AcceptanceBundle { energy, validation: validate(&ms), fourier },
    })
}

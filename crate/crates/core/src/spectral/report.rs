use serde::Serialize;

use super::ops::*;
use super::symbols::Partition;
use super::{sample_fields, SpectralError, SpectralFields};
use crate::microstructure::Microstructure;
use crate::tensor_wells::{normal, SymTensor};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralConfig {
    /// relative transition width of every smoothed indicator
    pub mollifier_width: f64,
    pub mu0: f64,
    /// inner radius factor for the vanishing check, mu3 = M mu mu2
    pub m_loc2: f64,
    pub pou_radius_deg: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { mollifier_width: 0.25, mu0: 0.15, m_loc2: 8.0, pou_radius_deg: 25.0 }
    }
}

impl SpectralConfig {
    pub fn partition(&self) -> Partition {
        Partition::new(self.pou_radius_deg, self.mollifier_width)
    }

    /// Aperture used for the localized and vanishing evaluations.
    pub fn default_mu(&self) -> f64 {
        self.mu0 * 2.0 / 3.0
    }

    /// Outer radius pi N / 4: three grown annuli then sum to less than the period pi N,
    /// so no wave-vector triple aliases.
    pub fn default_mu2(&self, n: usize) -> f64 {
        std::f64::consts::PI * n as f64 / 4.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Forms {
    #[serde(rename = "M")]
    pub m: f64,
    pub conical: f64,
    pub k0_weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowFreqPoint {
    pub b: &'static str,
    pub nu: f64,
    pub mass: f64,
    pub method: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrilinearReport {
    pub raw: f64,
    pub cell_exact: f64,
    pub localized: Localized,
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub config: SpectralConfig,
    pub forms: Forms,
    pub residuals: Vec<Residual>,
    pub low_freq: Vec<LowFreqPoint>,
    pub low_freq_slope: f64,
    pub trilinear: TrilinearReport,
    pub vanishing: Vec<TripleValue>,
    /// same triples at half the mollifier width
    pub vanishing_half_width: Vec<TripleValue>,
    pub l4_norms: [f64; 3],
    pub warnings: Vec<String>,
}

/// Log-spaced points on [a, b].
pub fn log_space(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| a * (b / a).powf(i as f64 / (count - 1) as f64)).collect()
}

/// Least-squares slope of log y against log x.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub const RESIDUAL_MUS: [f64; 2] = [0.1, 0.2];
pub const RESIDUAL_MU2S: [f64; 2] = [20.0 * std::f64::consts::PI, 40.0 * std::f64::consts::PI];

pub fn residual_grid(s: &SpectralFields, width: f64, elastic: f64, surface: f64) -> Vec<Residual> {
    let mut out = Vec::new();
    for mu in RESIDUAL_MUS {
        for mu2 in RESIDUAL_MU2S {
            out.push(localization_residual(s, mu, mu2, width, elastic, surface));
        }
    }
    out
}

/// Mass of chi11 near the b32 line for nu log-spaced in [0.5, 5].
pub fn low_freq_curve(s: &SpectralFields) -> (Vec<LowFreqPoint>, f64) {
    let b = normal(3, 2);
    let nus = log_space(0.5, 5.0, 8);
    let pts: Vec<LowFreqPoint> = nus
        .iter()
        .map(|&nu| {
            let lf = low_freq_mass(s, 0, &b, nu);
            LowFreqPoint { b: "b32", nu, mass: lf.mass, method: lf.method }
        })
        .collect();
    let slope = log_slope(&nus, &pts.iter().map(|p| p.mass).collect::<Vec<_>>());
    (pts, slope)
}

/// Everything the `fourier` command reports, given the exact energies of `ms`.
pub fn fourier_report(
    ms: &Microstructure,
    f: &SymTensor,
    n: usize,
    cfg: &SpectralConfig,
    elastic: f64,
    surface: f64,
) -> Result<FourierReport, SpectralError> {
    let s = sample_fields(ms, f, n)?;
    let part = cfg.partition();
    let w = cfg.mollifier_width;
    let (m, c) = (multiplier_form_m(&s), conical_form(&s));
    let residuals = residual_grid(&s, w, elastic, surface);
    let (low_freq, low_freq_slope) = low_freq_curve(&s);
    let (mu, mu2) = (cfg.default_mu(), cfg.default_mu2(n));
    let radii = ConeRadii { mu, mu2, mu3: 0.0, width: w };
    let localized = trilinear_localized(&s, &part, radii, cfg.mu0, elastic, surface)?;
    let trilinear = TrilinearReport { raw: trilinear(&s), cell_exact: trilinear_cells(ms, f), localized };
    let vanishing = vanishing_all(&s, &part, mu, mu2, cfg.m_loc2, w)?;
    let vanishing_half_width = vanishing_all(&s, &Partition::new(cfg.pou_radius_deg, w / 2.0), mu, mu2, cfg.m_loc2, w / 2.0)?;
    Ok(FourierReport {
        n,
        config: cfg.clone(),
        forms: Forms { m: m.value, conical: c.value, k0_weight: m.k0_weight },
        residuals,
        low_freq,
        low_freq_slope,
        trilinear,
        vanishing,
        vanishing_half_width,
        l4_norms: std::array::from_fn(|j| s.lp_norm(j, 4.0)),
        warnings: s.warnings.clone(),
    })
}

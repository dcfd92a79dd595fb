//! Power-law fits on log-log data.

use serde::Serialize;

use super::HarnessError;

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub slope: f64,
    /// natural-log intercept: log total = intercept + slope log eps
    pub intercept: f64,
    pub residual_rms: f64,
    pub leverage: Vec<f64>,
    pub points: usize,
    pub decades: f64,
}

impl FitResult {
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Ordinary least squares of log y on log x. Needs at least five points spanning two decades.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<FitResult, HarnessError> {
    assert_eq!(x.len(), y.len());
    if let Some(i) = (0..x.len()).find(|&i| !(x[i] > 0.0 && y[i] > 0.0)) {
        return Err(HarnessError::Fit(format!("point {i} ({}, {}) is not positive", x[i], y[i])));
    }
    let n = x.len();
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(0.0, f64::max);
    let decades = if n > 0 { (hi / lo).log10() } else { 0.0 };
    if n < 5 || decades < 2.0 - 1e-9 {
        return Err(HarnessError::Fit(format!("{n} points over {decades:.2} decades; need 5 over 2")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(FitResult {
        slope,
        intercept,
        residual_rms: (ss / n as f64).sqrt(),
        leverage: lx.iter().map(|a| 1.0 / n as f64 + (a - mx).powi(2) / sxx).collect(),
        points: n,
        decades,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_square_root_law() {
        let x: Vec<f64> = (0..8).map(|i| 10f64.powf(-5.0 + 3.0 * i as f64 / 7.0)).collect();
        let y: Vec<f64> = x.iter().map(|e| e.sqrt()).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!(f.residual_rms < 1e-12);
        assert!((f.leverage.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_spans() {
        let x = [1e-3, 2e-3, 4e-3, 8e-3, 1e-2];
        assert!(fit_power_law(&x, &x).is_err());
        assert!(fit_power_law(&x[..4], &x[..4]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_synthetic_power_laws(a in 0.1f64..2.0, c in 0.01f64..100.0) {
            let x: Vec<f64> = (0..6).map(|i| 10f64.powf(-6.0 + i as f64)).collect();
            let y: Vec<f64> = x.iter().map(|e| c * e.powf(a)).collect();
            let f = fit_power_law(&x, &y).unwrap();
            prop_assert!((f.slope - a).abs() < 1e-10);
            prop_assert!((f.prefactor() / c - 1.0).abs() < 1e-9);
        }
    }
}

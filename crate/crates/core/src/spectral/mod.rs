//! Fourier-side diagnostics on sampled, zero-extended phase indicators.
//!
//! Fields live on an N^3 periodic box of side 2 centred on the unit box, aligned with the
//! frame (n, b32, d). Grid index (i, k, l) maps to z1, z2, z3 and wave vector pi*(m1, m2, m3)
//! in frame coordinates; symbols are evaluated after rotating to standard coordinates.

pub mod fft;
mod ops;
mod report;
pub mod symbols;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::energy::grid::pairwise_sum;
use crate::microstructure::thm4::{Field, LocatedField};
use crate::microstructure::{frame, Kind, Microstructure};
use crate::tensor_wells::{SymTensor, Tensor, Vec3};

pub use ops::*;
pub use report::*;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("{0} is not built from planar cells")]
    NotCellTiling(Kind),
    #[error("grid size {0} must be a power of two, at least 64")]
    BadGrid(usize),
    #[error("boundary datum must be diagonal and trace-free")]
    BadDatum,
    #[error("triple {0} is neither a basis nor has exactly two equal entries")]
    RejectedTriple(String),
    #[error("invalid cone radii: {0}")]
    BadRadii(String),
    #[error("partition of unity off by {0:e}")]
    Partition(f64),
}

/// chi_jj - F_jj sampled on the box, with spectra (unnormalized forward DFT).
pub struct SpectralFields {
    pub n: usize,
    /// grid spacing 2/N
    pub h: f64,
    pub datum: [f64; 3],
    pub real: [Vec<f64>; 3],
    pub spectra: [Vec<Complex64>; 3],
    /// N^2 samples in (z1, z2) when the fields are z3-independent inside the unit box
    pub planar: Option<[Vec<f64>; 3]>,
    /// columns n, b32, d
    pub frame_to_standard: Tensor,
    pub warnings: Vec<String>,
}

fn coord(i: usize, n: usize) -> f64 {
    -1.0 + (i as f64 + 0.5) * 2.0 / n as f64
}

fn inside(z: f64) -> bool {
    z.abs() < 0.5
}

fn check_grid(n: usize) -> Result<(), SpectralError> {
    if n < 64 || !n.is_power_of_two() {
        return Err(SpectralError::BadGrid(n));
    }
    Ok(())
}

fn check_datum(f: &SymTensor) -> Result<[f64; 3], SpectralError> {
    if !f.is_diagonal(1e-14) || f.trace().abs() > 1e-12 {
        return Err(SpectralError::BadDatum);
    }
    Ok(f.diagonal())
}

impl SpectralFields {
    pub fn idx(&self, i: usize, k: usize, l: usize) -> usize {
        (i * self.n + k) * self.n + l
    }

    /// Wave vector of flat index `idx` in standard coordinates.
    pub fn wave(&self, idx: usize) -> Vec3 {
        let n = self.n;
        let m = [idx / (n * n), (idx / n) % n, idx % n];
        let kf = Vec3::from_fn(|a, _| std::f64::consts::PI * fft::signed(m[a], n) as f64);
        self.frame_to_standard * kf
    }

    /// Weight turning sum_k |X(k)|^2 into the continuous L2 norm.
    pub fn measure(&self) -> f64 {
        self.h.powi(3) / (self.n as f64).powi(3)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid_l2_sq(&self, j: usize) -> f64 {
        pairwise_sum(&self.real[j].iter().map(|v| v * v).collect::<Vec<_>>()) * self.h.powi(3)
    }

    pub fn spectral_l2_sq(&self, j: usize) -> f64 {
        pairwise_sum(&self.spectra[j].iter().map(|v| v.norm_sqr()).collect::<Vec<_>>()) * self.measure()
    }

    pub fn lp_norm(&self, j: usize, p: f64) -> f64 {
        let s = pairwise_sum(&self.real[j].iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
        (s * self.h.powi(3)).powf(1.0 / p)
    }

    /// Largest |chi11 + chi22 + chi33| over the grid.
    pub fn trace_residual(&self) -> f64 {
        (0..self.len())
            .map(|x| (self.real[0][x] + self.real[1][x] + self.real[2][x]).abs())
            .fold(0.0, f64::max)
    }

    /// Fields that do not depend on z3 inside the unit box: samples g(z1, z2) on N^2 points,
    /// extended by the indicator of |z3| < 1/2. Spectra factor as 2D DFT times a 1D DFT.
    pub fn from_planar(g: [Vec<f64>; 3], n: usize, datum: [f64; 3]) -> Result<SpectralFields, SpectralError> {
        check_grid(n)?;
        assert!(g.iter().all(|v| v.len() == n * n));
        let ind: Vec<f64> = (0..n).map(|l| if inside(coord(l, n)) { 1.0 } else { 0.0 }).collect();
        let mut zspec: Vec<Complex64> = ind.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::fft_nd(&mut zspec, n, 1, false);
        let expand_real = |g: &Vec<f64>| -> Vec<f64> {
            let mut out = vec![0.0; n * n * n];
            out.par_chunks_mut(n).enumerate().for_each(|(ik, line)| {
                for (l, v) in line.iter_mut().enumerate() {
                    *v = g[ik] * ind[l];
                }
            });
            out
        };
        let expand_spec = |g: &Vec<f64>| -> Vec<Complex64> {
            let mut s: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft::fft_nd(&mut s, n, 2, false);
            let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
            out.par_chunks_mut(n).enumerate().for_each(|(ik, line)| {
                for (l, v) in line.iter_mut().enumerate() {
                    *v = s[ik] * zspec[l];
                }
            });
            out
        };
        let real = [expand_real(&g[0]), expand_real(&g[1]), expand_real(&g[2])];
        let spectra = [expand_spec(&g[0]), expand_spec(&g[1]), expand_spec(&g[2])];
        Ok(SpectralFields {
            n,
            h: 2.0 / n as f64,
            datum,
            real,
            spectra,
            planar: Some(g),
            frame_to_standard: frame().rotation().transpose(),
            warnings: Vec::new(),
        })
    }

    /// General fields given by N^3 samples.
    pub fn from_volume(real: [Vec<f64>; 3], n: usize, datum: [f64; 3]) -> Result<SpectralFields, SpectralError> {
        check_grid(n)?;
        assert!(real.iter().all(|v| v.len() == n * n * n));
        let spec = |r: &Vec<f64>| {
            let mut s: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft::fft_nd(&mut s, n, 3, false);
            s
        };
        let spectra = [spec(&real[0]), spec(&real[1]), spec(&real[2])];
        Ok(SpectralFields {
            n,
            h: 2.0 / n as f64,
            datum,
            real,
            spectra,
            planar: None,
            frame_to_standard: frame().rotation().transpose(),
            warnings: Vec::new(),
        })
    }
}

fn diag_minus(field: &LocatedField, z: [f64; 3], f: [f64; 3], missed: &mut usize) -> [f64; 3] {
    let p = field.probe(z);
    match p.phase {
        Some(ph) => {
            let d = ph.strain().diagonal();
            [d[0] - f[0], d[1] - f[1], d[2] - f[2]]
        }
        None => {
            *missed += 1;
            [0.0; 3]
        }
    }
}

fn finish(mut s: SpectralFields, ms: &Microstructure, missed: usize) -> SpectralFields {
    let fw = ms.finest_width();
    if fw < 2.0 * s.h {
        s.warnings.push(format!("grid under-resolved: finest width {fw:.3e} < 2h = {:.3e}", 2.0 * s.h));
    }
    if missed > 0 {
        s.warnings.push(format!("{missed} sample points inside the unit box not covered"));
    }
    s
}

/// Midpoint samples of diag(chi) - F on the box, zero outside the unit box. Every cell-tiling
/// kind has z3-independent phases, so the separable path is used.
pub fn sample_fields(ms: &Microstructure, f: &SymTensor, n: usize) -> Result<SpectralFields, SpectralError> {
    if ms.kind == Kind::Thm4Simple {
        return Err(SpectralError::NotCellTiling(ms.kind));
    }
    check_grid(n)?;
    let fd = check_datum(f)?;
    let field = LocatedField::new(ms);
    let rows: Vec<(Vec<[f64; 3]>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut missed = 0;
            let z1 = coord(i, n);
            let row = (0..n)
                .map(|k| {
                    let z2 = coord(k, n);
                    if inside(z1) && inside(z2) {
                        diag_minus(&field, [z1, z2, 0.0], fd, &mut missed)
                    } else {
                        [0.0; 3]
                    }
                })
                .collect();
            (row, missed)
        })
        .collect();
    let missed = rows.iter().map(|r| r.1).sum();
    let g: [Vec<f64>; 3] = std::array::from_fn(|j| rows.iter().flat_map(|r| r.0.iter().map(move |v| v[j])).collect());
    Ok(finish(SpectralFields::from_planar(g, n, fd)?, ms, missed))
}

/// Same fields sampled point by point on the full N^3 grid and transformed in 3D.
pub fn sample_fields_full(ms: &Microstructure, f: &SymTensor, n: usize) -> Result<SpectralFields, SpectralError> {
    if ms.kind == Kind::Thm4Simple {
        return Err(SpectralError::NotCellTiling(ms.kind));
    }
    check_grid(n)?;
    let fd = check_datum(f)?;
    let field = LocatedField::new(ms);
    let slabs: Vec<([Vec<f64>; 3], usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut missed = 0;
            let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n * n));
            let z1 = coord(i, n);
            for k in 0..n {
                let z2 = coord(k, n);
                for l in 0..n {
                    let z3 = coord(l, n);
                    let v = if inside(z1) && inside(z2) && inside(z3) {
                        diag_minus(&field, [z1, z2, z3], fd, &mut missed)
                    } else {
                        [0.0; 3]
                    };
                    for j in 0..3 {
                        out[j].push(v[j]);
                    }
                }
            }
            (out, missed)
        })
        .collect();
    let missed = slabs.iter().map(|s| s.1).sum();
    let real: [Vec<f64>; 3] = std::array::from_fn(|j| slabs.iter().flat_map(|s| s.0[j].iter().copied()).collect());
    Ok(finish(SpectralFields::from_volume(real, n, fd)?, ms, missed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::{assemble_full, make_params};

    fn acceptance() -> Microstructure {
        assemble_full(&make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap())
    }

    #[test]
    fn rejects_bad_inputs() {
        let ms = acceptance();
        assert_eq!(sample_fields(&ms, &SymTensor::ZERO, 48).err(), Some(SpectralError::BadGrid(48)));
        assert_eq!(
            sample_fields(&ms, &SymTensor::diag(1.0, 0.0, 0.0), 64).err(),
            Some(SpectralError::BadDatum)
        );
    }

    #[test]
    fn samples_are_trace_free_with_parseval() {
        let s = sample_fields(&acceptance(), &SymTensor::ZERO, 64).unwrap();
        assert!(s.trace_residual() < 1e-12);
        for j in 0..3 {
            let (a, b) = (s.grid_l2_sq(j), s.spectral_l2_sq(j));
            assert!((a - b).abs() < 1e-9 * a, "{a} {b}");
        }
    }

    #[test]
    fn grid_mean_approaches_cell_tally() {
        let ms = acceptance();
        let mut frac = 0.0;
        for b in &ms.blocks {
            for c in b.leaf_cells() {
                if c.phase == crate::microstructure::Phase::Well(1) {
                    frac += c.poly.area() * b.copies as f64;
                }
            }
        }
        let tally = -2.0 * frac + (1.0 - frac);
        assert!(tally.abs() < 0.11, "{tally}");
        let s = sample_fields(&ms, &SymTensor::ZERO, 128).unwrap();
        let mean = s.real[0].iter().sum::<f64>() * s.h.powi(3);
        assert!((mean - tally).abs() < 0.06, "{mean} vs {tally}");
    }

    #[test]
    fn pure_well_region_samples_minus_two_one_one() {
        let s = sample_fields(&acceptance(), &SymTensor::ZERO, 64).unwrap();
        let g = s.planar.as_ref().unwrap();
        let hit = (0..64 * 64).any(|x| g[0][x] == -2.0 && g[1][x] == 1.0 && g[2][x] == 1.0);
        assert!(hit);
        for x in 0..64 * 64 {
            let v = [g[0][x], g[1][x], g[2][x]];
            assert!(v == [0.0; 3] || v.iter().filter(|&&t| t == -2.0).count() == 1);
        }
    }

    #[test]
    fn separable_path_matches_full_transform() {
        let ms = acceptance();
        let a = sample_fields(&ms, &SymTensor::ZERO, 64).unwrap();
        let b = sample_fields_full(&ms, &SymTensor::ZERO, 64).unwrap();
        for j in 0..3 {
            let scale = a.spectra[j].iter().map(|v| v.norm()).fold(0.0, f64::max);
            let err = a.spectra[j].iter().zip(&b.spectra[j]).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-6 * scale, "{err} vs {scale}");
        }
    }
}

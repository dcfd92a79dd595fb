//! Multidimensional FFTs on cubic grids stored row-major with the last axis contiguous.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalized transform of an n^dim grid along every axis.
pub fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    assert_eq!(data.len(), n.pow(dim as u32));
    let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
    let fft = FftPlanner::new().plan_fft(n, dir);
    // contiguous axis
    data.par_chunks_mut(n).for_each(|line| fft.process(line));
    // strided axes
    for axis in (0..dim - 1).rev() {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        data.par_chunks_mut(block).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for off in 0..stride {
                for (t, v) in line.iter_mut().enumerate() {
                    *v = chunk[off + t * stride];
                }
                fft.process(&mut line);
                for (t, v) in line.iter().enumerate() {
                    chunk[off + t * stride] = *v;
                }
            }
        });
    }
}

/// Signed frequency index of DFT bin m.
pub fn signed(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let n = 8;
        let mut a: Vec<Complex64> = (0..n * n * n).map(|i| Complex64::new((i as f64 * 0.37).sin(), 0.0)).collect();
        let orig = a.clone();
        fft_nd(&mut a, n, 3, false);
        fft_nd(&mut a, n, 3, true);
        for (x, y) in a.iter().zip(&orig) {
            assert!((x / (n * n * n) as f64 - y).norm() < 1e-13);
        }
        // e^{2 pi i (1, 2, 3).x / n} has all weight in bin (1, 2, 3)
        let mut b: Vec<Complex64> = (0..n * n * n)
            .map(|idx| {
                let (i, k, l) = (idx / (n * n), (idx / n) % n, idx % n);
                let ph = 2.0 * std::f64::consts::PI * (i + 2 * k + 3 * l) as f64 / n as f64;
                Complex64::new(ph.cos(), ph.sin())
            })
            .collect();
        fft_nd(&mut b, n, 3, false);
        let peak = (n + 2) * n + 3;
        assert!((b[peak].re - (n * n * n) as f64).abs() < 1e-9);
        let rest: f64 = b.iter().enumerate().filter(|(i, _)| *i != peak).map(|(_, v)| v.norm()).sum();
        assert!(rest < 1e-9);
        assert_eq!(signed(5, 8), -3);
    }
}

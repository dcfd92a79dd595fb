use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("theta = {0} must lie in (1/4, 1/2)")]
    Theta(f64),
    #[error("r = {r} must lie in (0, (1 - theta)/2) = (0, {bound})")]
    RRange { r: f64, bound: f64 },
    #[error("1/r = {0} must be a positive integer")]
    RInverse(f64),
    #[error("r2 = {r2} must lie in (0, r/2) = (0, {bound})")]
    R2Range { r2: f64, bound: f64 },
    #[error("j0 = {0}: need at least one branching generation (L_1 < H_1), decrease r")]
    NoBranching(i64),
    #[error("eps = {0} must be finite and nonnegative")]
    Eps(f64),
}

/// First-order ladder entry for generation j.
#[derive(Clone, Debug, Serialize)]
pub struct Generation {
    pub j: usize,
    /// period L_j
    pub l: f64,
    /// start Y_j
    pub y: f64,
    /// height H_j
    pub h: f64,
    /// number of translated copies 2^j / r
    pub copies: usize,
}

/// Corner ladder of the left corner triangle of the rectangle Omega_1.
#[derive(Clone, Debug, Serialize)]
pub struct CornerLadder {
    pub rho: Vec<f64>,
    pub w: Vec<f64>,
    pub m0: i64,
}

/// Second-order ladder inside generation j.
#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderLadder {
    pub j: usize,
    /// r2 after snapping so that an integer number of trees fills the band
    pub r2_j: f64,
    pub tree_width: f64,
    pub n_trees: usize,
    pub band_width: f64,
    pub i0: i64,
    pub ell: Vec<f64>,
    pub y: Vec<f64>,
    pub h: Vec<f64>,
    pub sigma: Vec<f64>,
    pub corner: CornerLadder,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchParams {
    pub theta: f64,
    pub r: f64,
    pub r2: f64,
    pub eps: f64,
    pub j0: usize,
    /// Generations 0..=j0 plus the cut-off layer j0 + 1.
    pub generations: Vec<Generation>,
    /// Second-order ladders for 0..=j0.
    pub second: Vec<SecondOrderLadder>,
}

/// Largest k with w/2^k below d(1 - theta) theta^k; -1 if there is none.
pub fn stop_index(w: f64, d: f64, theta: f64, strict: bool) -> i64 {
    let mut k = -1i64;
    loop {
        let n = k + 1;
        let wk = w / 2f64.powi(n as i32);
        let hk = d * (1.0 - theta) * theta.powi(n as i32);
        let ok = if strict { wk < hk } else { wk <= hk };
        if !ok || n > 200 {
            return k;
        }
        k = n;
    }
}

/// Geometric slice widths rho0 q^m filling a wedge of depth `depth`, stopping once the covered
/// depth would reach `depth - reserve`.
pub fn slice_ladder(rho0: f64, depth: f64, reserve: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rho0 <= 0.0 || rho0 >= depth {
        return out;
    }
    let q = 1.0 - rho0 / depth;
    let mut covered = 0.0;
    let mut rho = rho0;
    loop {
        if covered + rho >= depth - reserve || out.len() > 1_000_000 {
            return out;
        }
        out.push(rho);
        covered += rho;
        rho *= q;
    }
}

impl BranchParams {
    pub fn new(theta: f64, r: f64, r2: f64, eps: f64) -> Result<Self, ParamError> {
        if !(theta > 0.25 && theta < 0.5) {
            return Err(ParamError::Theta(theta));
        }
        let bound = (1.0 - theta) / 2.0;
        if !(r > 0.0 && r < bound) {
            return Err(ParamError::RRange { r, bound });
        }
        let inv = 1.0 / r;
        if (inv - inv.round()).abs() > 1e-9 * inv {
            return Err(ParamError::RInverse(inv));
        }
        if !(r2 > 0.0 && r2 < r / 2.0) {
            return Err(ParamError::R2Range { r2, bound: r / 2.0 });
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(ParamError::Eps(eps));
        }
        let j0 = stop_index(r, 0.5, theta, true);
        if j0 < 1 {
            return Err(ParamError::NoBranching(j0));
        }
        let j0 = j0 as usize;
        let per_unit = inv.round() as usize;
        let generations: Vec<Generation> = (0..=j0 + 1)
            .map(|j| Generation {
                j,
                l: r / 2f64.powi(j as i32),
                y: (1.0 - theta.powi(j as i32)) / 2.0,
                h: theta.powi(j as i32) * (1.0 - theta) / 2.0,
                copies: per_unit << j,
            })
            .collect();
        let s3 = 3f64.sqrt();
        let second = generations[..=j0]
            .iter()
            .map(|g| {
                let nominal = r2 / 2f64.powi(g.j as i32);
                let band = g.h - g.l / (4.0 * s3);
                let n_trees = ((band / nominal) - 1e-9).ceil().max(1.0) as usize;
                let tree_width = band / n_trees as f64;
                let d = g.l / 8.0;
                let i0 = stop_index(tree_width, d, theta, false);
                let range = 0..=(i0 + 1).max(0) as i32;
                let ell: Vec<f64> = range.clone().map(|i| tree_width / 2f64.powi(i)).collect();
                let h: Vec<f64> = range.clone().map(|i| d * (1.0 - theta) * theta.powi(i)).collect();
                let y: Vec<f64> = range.map(|i| d * (2.0 - theta.powi(i))).collect();
                let sigma = ell.iter().zip(&h).map(|(l, h)| l / (3.0 * h) + 1.0 / s3).collect();
                let depth = g.l / (4.0 * s3);
                let rho = slice_ladder(tree_width, depth, tree_width);
                let q = 1.0 - tree_width / depth;
                let w = (0..rho.len()).map(|m| g.l / 4.0 * q.powi(m as i32 + 1)).collect();
                let m0 = rho.len() as i64 - 1;
                SecondOrderLadder {
                    j: g.j,
                    r2_j: tree_width * 2f64.powi(g.j as i32),
                    tree_width,
                    n_trees,
                    band_width: band,
                    i0,
                    ell,
                    y,
                    h,
                    sigma,
                    corner: CornerLadder { rho, w, m0 },
                }
            })
            .collect();
        Ok(BranchParams { theta, r, r2, eps, j0, generations, second })
    }

    pub fn generation(&self, j: usize) -> &Generation {
        &self.generations[j]
    }

    /// Nominal second-order width r2 / 2^j before snapping.
    pub fn nominal_width(&self, j: usize) -> f64 {
        self.r2 / 2f64.powi(j as i32)
    }
}

/// Validated parameter construction.
pub fn make_params(theta: f64, r: f64, r2: f64, eps: f64) -> Result<BranchParams, ParamError> {
    BranchParams::new(theta, r, r2, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_values() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        assert_eq!(p.j0, 3);
        assert_eq!(p.generations[0].l, 0.125);
        assert!((p.generations[1].y - 0.3).abs() < 1e-15);
        assert!((p.generations[0].h - 0.3).abs() < 1e-15);
        assert!((p.generations[3].l - 0.015625).abs() < 1e-15);
        assert!((p.generations[3].h - 0.0192).abs() < 1e-12);
        assert!(p.generations[4].l > p.generations[4].h);
        for g in &p.generations {
            assert_eq!(g.copies, 8 << g.j);
        }
    }

    #[test]
    fn rejects_inadmissible() {
        assert!(matches!(make_params(0.4, 0.3, 0.01, 0.0), Err(ParamError::RRange { .. })));
        assert!(matches!(make_params(0.2, 0.125, 0.01, 0.0), Err(ParamError::Theta(_))));
        assert!(matches!(make_params(0.4, 0.12, 0.01, 0.0), Err(ParamError::RInverse(_))));
        assert!(matches!(make_params(0.4, 0.125, 0.07, 0.0), Err(ParamError::R2Range { .. })));
        assert!(matches!(make_params(0.4, 0.25, 0.01, 0.0), Err(ParamError::NoBranching(0))));
        assert!(matches!(make_params(0.4, 0.125, 0.01, -1.0), Err(ParamError::Eps(_))));
    }

    #[test]
    fn snapped_trees_fill_band() {
        let p = make_params(0.4, 1.0 / 16.0, 1.0 / 300.0, 0.0).unwrap();
        for s in &p.second {
            let filled = s.tree_width * s.n_trees as f64;
            assert!((filled - s.band_width).abs() < 1e-14);
            assert!(s.tree_width <= p.nominal_width(s.j) * (1.0 + 1e-9));
            for w in s.ell.windows(2) {
                assert!(w[1] < w[0]);
            }
            for w in s.h.windows(2) {
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn stop_index_initial_segment() {
        assert_eq!(stop_index(1.0, 0.1, 0.4, true), -1);
        let k = stop_index(0.01, 0.5, 0.4, true);
        let w = 0.01 / 2f64.powi(k as i32);
        assert!(w < 0.5 * 0.6 * 0.4f64.powi(k as i32));
        let w1 = 0.01 / 2f64.powi(k as i32 + 1);
        assert!(w1 >= 0.5 * 0.6 * 0.4f64.powi(k as i32 + 1));
    }

    #[test]
    fn slice_ladder_stops_before_reserve() {
        let rho = slice_ladder(0.1, 1.0, 0.1);
        let total: f64 = rho.iter().sum();
        assert!(total < 0.9);
        assert!(total + rho.last().unwrap() * 0.9 >= 0.9 - 0.1);
        assert!(slice_ladder(1.0, 0.5, 0.0).is_empty());
    }
}

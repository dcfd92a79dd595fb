//! Exact and sampled evaluation of the elastic and surface energies.

pub mod engine;
pub mod grid;
pub mod overlay;

use serde::Serialize;
use thiserror::Error;

use crate::microstructure::{
    assemble_full, build_full_dirichlet, build_thm4, first_order_laminate, frame, BranchParams, Cell, Kind,
    Microstructure, Phase, Region, Thm4Field,
};
use crate::tensor_wells::normal;
use engine::{evaluate, Measure, Plain, Tally, WithSlab};
pub use grid::{grid_energy, grid_energy_ms, grid_energy_thm4};

/// Perimeter of the unit box.
pub const PER_OMEGA: f64 = 6.0;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("{0} is not a cell tiling; use the grid or the weighted exact path")]
    NotCellTiling(Kind),
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationEnergy {
    pub j: usize,
    pub elastic: f64,
    pub surface: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionEnergy {
    pub region: &'static str,
    pub elastic: f64,
    pub surface: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyBreakdown {
    pub kind: Kind,
    pub theta: f64,
    pub r: f64,
    pub r2: f64,
    pub eps: f64,
    pub j0: usize,
    pub cells: u64,
    pub elastic: f64,
    pub surface: f64,
    pub total: f64,
    pub per_generation: Vec<GenerationEnergy>,
    pub per_region: Vec<RegionEnergy>,
    pub per_omega: f64,
    /// "exact" or "grid N=..."
    pub method: String,
    /// boundary length left without a partner by the exact evaluation (should be 0)
    pub unmatched_length: f64,
    pub warnings: Vec<String>,
}

impl EnergyBreakdown {
    pub const CSV_HEADER: &'static str = "kind,theta,r,r2,eps,elastic,surface,total,j0,cells";

    fn from_slots(kind: Kind, p: &BranchParams, eps: f64, cells: u64, el: &[f64], su: &[f64]) -> Self {
        let nr = Region::ALL.len();
        let ngen = el.len() / nr;
        let per_generation = (0..ngen)
            .map(|j| GenerationEnergy {
                j,
                elastic: el[j * nr..(j + 1) * nr].iter().sum(),
                surface: su[j * nr..(j + 1) * nr].iter().sum(),
            })
            .collect();
        let per_region = Region::ALL
            .iter()
            .map(|rg| RegionEnergy {
                region: rg.name(),
                elastic: (0..ngen).map(|j| el[j * nr + rg.index()]).sum(),
                surface: (0..ngen).map(|j| su[j * nr + rg.index()]).sum(),
            })
            .collect();
        let elastic: f64 = el.iter().sum();
        let surface: f64 = su.iter().sum();
        EnergyBreakdown {
            kind,
            theta: p.theta,
            r: p.r,
            r2: p.r2,
            eps,
            j0: p.j0,
            cells,
            elastic,
            surface,
            total: elastic + eps * surface,
            per_generation,
            per_region,
            per_omega: PER_OMEGA,
            method: "exact".into(),
            unmatched_length: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:.15e},{:.15e},{:.15e},{},{}",
            self.kind, self.theta, self.r, self.r2, self.eps, self.elastic, self.surface, self.total, self.j0, self.cells
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("breakdown serializes")
    }

    /// Same energies at another surface weight.
    pub fn with_eps(&self, eps: f64) -> EnergyBreakdown {
        EnergyBreakdown { eps, total: self.elastic + eps * self.surface, ..self.clone() }
    }
}

fn cell_tiling(ms: &Microstructure) -> Result<(), EnergyError> {
    if ms.kind == Kind::Thm4Simple {
        return Err(EnergyError::NotCellTiling(ms.kind));
    }
    Ok(())
}

/// Elastic energy and slab-corrected slots of a cell-tiling microstructure.
fn exact_slots(ms: &Microstructure) -> (Vec<f64>, Tally) {
    match ms.ramp {
        None => {
            let t = evaluate(ms, &Plain, false);
            (t.elastic.clone(), t)
        }
        Some(w) => {
            // u(z) rho(z3): (1 - 2w) E_2D + 2w sum area (|S|^2/3 - <S, chi> + |chi|^2) + (2/w) int |sym(u (x) d)|^2
            let t = evaluate(ms, &WithSlab, false);
            let el = (0..t.elastic.len())
                .map(|k| (1.0 - 2.0 * w) * t.elastic[k] + 2.0 * w * t.slab_local[k] + 2.0 / w * t.slab_u[k])
                .collect();
            (el, t)
        }
    }
}

pub fn elastic_exact(ms: &Microstructure) -> Result<f64, EnergyError> {
    cell_tiling(ms)?;
    Ok(exact_slots(ms).0.iter().sum())
}

pub fn surface_exact(ms: &Microstructure) -> Result<f64, EnergyError> {
    cell_tiling(ms)?;
    Ok(evaluate(ms, &Plain, false).surface.iter().sum())
}

pub fn total(ms: &Microstructure, eps: f64) -> Result<EnergyBreakdown, EnergyError> {
    cell_tiling(ms)?;
    let (el, t) = exact_slots(ms);
    let mut b = EnergyBreakdown::from_slots(ms.kind, &ms.params, eps, ms.cell_count() as u64, &el, &t.surface);
    b.unmatched_length = t.unmatched;
    Ok(b)
}

/// The three-dimensional first-order construction integrated exactly: its four sectors
/// |z1| > |z3| and |z3| > |z1| are copies of the positive half of the planar construction
/// with cross-section length 2t at distance t, and radial direction n or d.
struct Thm4Measure {
    b23: crate::tensor_wells::Vec3,
    fac: f64,
}

impl Thm4Measure {
    fn new() -> Thm4Measure {
        let f = frame();
        let b23 = normal(2, 3);
        let (cn, cd) = (b23.dot(&f.n).powi(2), b23.dot(&f.d).powi(2));
        Thm4Measure { b23, fac: 1.0 + 0.5 * (cn + cd) }
    }
}

fn thm4_well(p: Phase) -> Phase {
    match p {
        Phase::AuxA => Phase::Well(2),
        Phase::AuxB => Phase::Well(3),
        w => w,
    }
}

impl Measure for Thm4Measure {
    fn misfit(&self, c: &Cell) -> f64 {
        // 3/2 b23 (x) (psi_t nu + (psi_s - s0) b32) averaged over nu = n and nu = d
        let f = frame();
        let pt = self.b23.dot(&(c.grad * f.n));
        let ps = self.b23.dot(&(c.grad * f.b32));
        let s0 = match c.phase {
            Phase::AuxA => 2.0,
            Phase::AuxB => -2.0,
            _ => 0.0,
        };
        let delta = ps - s0;
        1.125 * (delta * delta + pt * pt * self.fac)
    }

    fn jump(&self, a: Phase, b: Phase) -> f64 {
        thm4_well(a).jump(&thm4_well(b))
    }

    fn weight(&self, z1: f64) -> f64 {
        8.0 * z1.abs()
    }

    fn include(&self, b: &crate::microstructure::Block) -> bool {
        b.half > 0
    }
}

/// Exact energies of the three-dimensional first-order construction.
pub fn thm4_exact(field: &Thm4Field, eps: f64) -> EnergyBreakdown {
    let t = evaluate(&field.base, &Thm4Measure::new(), false);
    let mut b = EnergyBreakdown::from_slots(
        Kind::Thm4Simple,
        field.params(),
        eps,
        field.base.cell_count() as u64,
        &t.elastic,
        &t.surface,
    );
    b.unmatched_length = t.unmatched;
    b
}

/// Builds the construction of the given kind and evaluates it exactly.
pub fn energy_of(kind: Kind, params: &BranchParams, eps: f64) -> EnergyBreakdown {
    let ok = |r: Result<EnergyBreakdown, EnergyError>| r.expect("cell-tiling kind");
    match kind {
        Kind::FirstOrderAux => ok(total(&first_order_laminate(params), eps)),
        Kind::FullSecondOrder => ok(total(&assemble_full(params), eps)),
        Kind::FullDirichletCutoff => ok(total(&build_full_dirichlet(params), eps)),
        Kind::Thm4Simple => thm4_exact(&build_thm4(params), eps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::make_params;

    #[test]
    fn first_order_omega3_cell_energy() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let b = total(&first_order_laminate(&p), 0.0).unwrap();
        let o3 = b.per_region.iter().find(|r| r.region == "omega3").unwrap().elastic;
        let mut expect = 0.0;
        for j in 0..=p.j0 {
            let g = p.generation(j);
            // two halves, 2^j / r copies each
            expect += 2.0 * g.copies as f64 * (2.0 / 3.0) * (g.l / g.h).powi(2) * (g.l / 4.0) * g.h;
        }
        assert!((o3 - expect).abs() < 1e-12 * expect, "{o3} vs {expect}");
    }

    #[test]
    fn breakdown_sums_and_eps_zero() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let ms = assemble_full(&p);
        let b = total(&ms, 0.0).unwrap();
        assert_eq!(b.total, b.elastic);
        let g: f64 = b.per_generation.iter().map(|g| g.elastic).sum();
        let s: f64 = b.per_generation.iter().map(|g| g.surface).sum();
        assert!((g - b.elastic).abs() <= 1e-9 * b.elastic);
        assert!((s - b.surface).abs() <= 1e-9 * b.surface);
        assert!(b.unmatched_length == 0.0);
    }

    #[test]
    fn thm4_rejected_by_cell_paths() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let ms = Microstructure { kind: Kind::Thm4Simple, ..first_order_laminate(&p) };
        assert!(elastic_exact(&ms).is_err());
    }
}

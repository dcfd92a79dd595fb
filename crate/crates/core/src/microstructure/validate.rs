//! Structural checks of a microstructure.

use serde::Serialize;

use crate::energy::overlay::{overlay, Cover, Seg};
use crate::microstructure::{frame, Cell, Kind, Microstructure, Phase, Region};
use crate::tensor_wells::Tensor;

/// Above this many cells, shared edges are only checked inside each block.
pub const GLOBAL_EDGE_LIMIT: usize = 4_000_000;

const GRAD_BOUND: f64 = 30.0;
const EDGE_SAMPLES: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub kind: Kind,
    pub cells: u64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, value, limit, pass: value <= limit }
}

fn phase_allowed(kind: Kind, p: Phase) -> bool {
    match kind {
        Kind::FirstOrderAux => matches!(p, Phase::AuxA | Phase::AuxB),
        _ => matches!(p, Phase::Well(1..=3)),
    }
}

/// Deterministic points on the lateral boundary z1 = +-1/2, z2 = +-1/2.
pub fn boundary_samples(count: usize) -> Vec<[f64; 2]> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|k| {
            let s = (0.5 + k as f64 * golden).fract() - 0.5;
            match k % 4 {
                0 => [0.5, s],
                1 => [-0.5, s],
                2 => [s, 0.5],
                _ => [s, -0.5],
            }
        })
        .collect()
}

struct EdgeStats {
    max_jump: f64,
    max_rank_defect: f64,
    conflict: f64,
    hole: f64,
}

/// Shared edges among `cells`: displacement jumps, rank-one connection of the gradients,
/// overlapping and uncovered boundary length strictly inside `inner`.
fn edge_stats(cells: &[Cell], inner: [f64; 4]) -> EdgeStats {
    let mut segs = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        for (a, b) in c.poly.edges() {
            segs.push(Seg { a, b, data: i });
        }
    }
    let d = frame().d;
    let mut st = EdgeStats { max_jump: 0.0, max_rank_defect: 0.0, conflict: 0.0, hole: 0.0 };
    let tol = 1e-9;
    overlay(&segs, 1.0, &mut |line, lo, hi, cover| match cover {
        Cover::Pair(s, t) => {
            let (a, b) = (&cells[segs[s].data], &cells[segs[t].data]);
            for k in 0..EDGE_SAMPLES {
                let x = lo + (hi - lo) * k as f64 / (EDGE_SAMPLES - 1) as f64;
                let z = line.point(x);
                st.max_jump = st.max_jump.max((a.displacement(z) - b.displacement(z)).norm());
            }
            let dg: Tensor = a.grad - b.grad;
            let scale = dg.norm();
            if scale > 1e-14 {
                let t = crate::microstructure::to_x(line.dir);
                let defect = (dg * t).norm().max((dg * d).norm()) / scale;
                st.max_rank_defect = st.max_rank_defect.max(defect);
            }
        }
        Cover::Conflict => st.conflict += hi - lo,
        Cover::Free(_) => {
            let (p, q) = (line.point(lo), line.point(hi));
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let on_edge = (mid[0] - inner[0]).abs() < tol
                || (mid[0] - inner[1]).abs() < tol
                || (mid[1] - inner[2]).abs() < tol
                || (mid[1] - inner[3]).abs() < tol;
            if !on_edge {
                st.hole += hi - lo;
            }
        }
    });
    st
}

pub fn validate(ms: &Microstructure) -> ValidationReport {
    let mut notes = Vec::new();
    let total = ms.cell_count();

    let mut area = 0.0;
    let mut max_grad: f64 = 0.0;
    let mut max_gd: f64 = 0.0;
    let mut bad_phase = 0usize;
    let mut cutoff = 0usize;
    let d = frame().d;
    for b in &ms.blocks {
        for c in b.leaf_cells() {
            area += c.poly.area() * b.copies as f64;
            max_grad = max_grad.max(c.grad.norm());
            if ms.ramp.is_none() {
                max_gd = max_gd.max((c.grad * d).norm());
            }
            if !phase_allowed(ms.kind, c.phase) {
                bad_phase += b.copies;
            }
            if c.tag.region == Region::Cutoff && c.tag.j as usize == ms.params.j0 + 1 {
                cutoff += b.copies;
            }
        }
    }
    if ms.kind != Kind::FirstOrderAux && cutoff > 0 {
        notes.push(format!("{cutoff} first-order cut-off cells carry the nearest well (e2 on A, e3 on B)"));
    }

    let edges = if total <= GLOBAL_EDGE_LIMIT {
        edge_stats(&ms.global_cells(), [-0.5, 0.5, -0.5, 0.5])
    } else {
        notes.push(format!("{total} cells: shared edges checked inside each block only"));
        let mut acc = EdgeStats { max_jump: 0.0, max_rank_defect: 0.0, conflict: 0.0, hole: 0.0 };
        for b in &ms.blocks {
            let z1 = b.z1_range();
            let e = edge_stats(&b.leaf_cells(), [z1[0], z1[1], 0.0, b.pitch]);
            acc.max_jump = acc.max_jump.max(e.max_jump);
            acc.max_rank_defect = acc.max_rank_defect.max(e.max_rank_defect);
            acc.conflict += e.conflict * b.copies as f64;
            acc.hole += e.hole * b.copies as f64;
        }
        acc
    };

    let loc = ms.locator();
    let mut max_u: f64 = 0.0;
    let mut missed = 0;
    for z in boundary_samples(200) {
        match loc.locate(ms, z) {
            Some(h) => max_u = max_u.max(h.cell.displacement(z).norm()),
            None => missed += 1,
        }
    }
    if missed > 0 {
        notes.push(format!("{missed} boundary samples not located"));
    }

    let mut checks = vec![
        check("tiling_residual", (area - 1.0).abs() + edges.conflict + edges.hole, 1e-10),
        check("max_edge_jump", edges.max_jump, 1e-8),
        check("rank_one_defect", edges.max_rank_defect, 1e-8),
        check("boundary_max_u", if missed > 0 { f64::INFINITY } else { max_u }, 1e-10),
        check("max_grad", max_grad, GRAD_BOUND),
        check("phases_outside_k", bad_phase as f64, 0.0),
    ];
    if ms.ramp.is_none() {
        checks.push(check("max_grad_d", max_gd, 1e-12));
    }
    ValidationReport { kind: ms.kind, cells: total as u64, checks, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::{first_order_laminate, make_params};

    #[test]
    fn boundary_samples_lie_on_lateral_faces() {
        for z in boundary_samples(200) {
            assert!(z[0].abs() == 0.5 || z[1].abs() == 0.5);
            assert!(z[0].abs() <= 0.5 && z[1].abs() <= 0.5);
        }
    }

    #[test]
    fn first_order_laminate_is_valid() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let rep = validate(&first_order_laminate(&p));
        for c in &rep.checks {
            assert!(c.pass, "{c:?}");
        }
    }
}

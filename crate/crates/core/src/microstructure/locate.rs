//! Point location: block by (half, generation, copy), then a bucket grid over the block's cells.

use crate::geometry::P2;
use crate::microstructure::{frame, Cell, Microstructure};
use crate::tensor_wells::{SymTensor, Vec3};

const EDGE_TOL: f64 = 1e-12;

struct Buckets {
    cells: Vec<Cell>,
    lo: P2,
    size: P2,
    dims: [usize; 2],
    slots: Vec<Vec<u32>>,
}

impl Buckets {
    fn new(cells: Vec<Cell>, lo: P2, hi: P2) -> Self {
        let n = (cells.len() as f64).sqrt().ceil().max(1.0) as usize;
        let span = [hi[0] - lo[0], hi[1] - lo[1]];
        // aspect-aware grid with roughly one cell per slot
        let ratio = (span[0] / span[1]).clamp(1e-3, 1e3);
        let d0 = ((n as f64) * ratio.sqrt()).ceil().clamp(1.0, 4096.0) as usize;
        let d1 = ((n as f64) / ratio.sqrt()).ceil().clamp(1.0, 4096.0) as usize;
        let size = [span[0] / d0 as f64, span[1] / d1 as f64];
        let mut slots = vec![Vec::new(); d0 * d1];
        for (idx, c) in cells.iter().enumerate() {
            let b = c.poly.bbox();
            let i0 = (((b[0] - lo[0]) / size[0]).floor().max(0.0) as usize).min(d0 - 1);
            let i1 = (((b[1] - lo[0]) / size[0]).floor().max(0.0) as usize).min(d0 - 1);
            let k0 = (((b[2] - lo[1]) / size[1]).floor().max(0.0) as usize).min(d1 - 1);
            let k1 = (((b[3] - lo[1]) / size[1]).floor().max(0.0) as usize).min(d1 - 1);
            for i in i0..=i1 {
                for k in k0..=k1 {
                    slots[i * d1 + k].push(idx as u32);
                }
            }
        }
        Buckets { cells, lo, size, dims: [d0, d1], slots }
    }

    fn find(&self, z: P2) -> Option<&Cell> {
        let i = ((z[0] - self.lo[0]) / self.size[0]).floor();
        let k = ((z[1] - self.lo[1]) / self.size[1]).floor();
        let i = (i.max(0.0) as usize).min(self.dims[0] - 1);
        let k = (k.max(0.0) as usize).min(self.dims[1] - 1);
        // slots hold indices in increasing order, so the first hit is the lowest index
        for &idx in &self.slots[i * self.dims[1] + k] {
            let c = &self.cells[idx as usize];
            if c.poly.contains(z, EDGE_TOL) {
                return Some(c);
            }
        }
        None
    }
}

/// Located cell, already translated to global frame coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub block: usize,
    pub copy: usize,
    pub cell: Cell,
}

pub struct Locator {
    buckets: Vec<Buckets>,
    // (half, j) -> block index
    index: Vec<(i8, usize, usize)>,
    bounds: Vec<f64>,
}

impl Locator {
    pub fn new(ms: &Microstructure) -> Self {
        let mut buckets = Vec::new();
        let mut index = Vec::new();
        for (bi, b) in ms.blocks.iter().enumerate() {
            let z1 = b.z1_range();
            buckets.push(Buckets::new(b.leaf_cells(), [z1[0], 0.0], [z1[1], b.pitch]));
            index.push((b.half, b.j, bi));
        }
        let mut bounds: Vec<f64> = ms.params.generations.iter().map(|g| g.y).collect();
        bounds.push(0.5);
        Locator { buckets, index, bounds }
    }

    fn block_of(&self, half: i8, j: usize) -> Option<usize> {
        self.index.iter().find(|e| e.0 == half && e.1 == j).map(|e| e.2)
    }

    /// Cell containing the frame point z (ties to the lower half, generation and cell index).
    pub fn locate(&self, ms: &Microstructure, z: P2) -> Option<Hit> {
        if z[0].abs() > 0.5 + EDGE_TOL || z[1].abs() > 0.5 + EDGE_TOL {
            return None;
        }
        let half: i8 = if z[0] >= 0.0 { 1 } else { -1 };
        let a = z[0].abs();
        let ngen = self.bounds.len() - 1;
        let mut j = ngen - 1;
        for k in 0..ngen {
            if a <= self.bounds[k + 1] {
                j = k;
                break;
            }
        }
        let bi = self.block_of(half, j)?;
        let b = &ms.blocks[bi];
        let rel = z[1] - b.origin[1];
        let copy = ((rel / b.pitch).floor().max(0.0) as usize).min(b.copies - 1);
        let o = b.copy_origin(copy);
        let local = [z[0] - o[0], z[1] - o[1]];
        let cell = self.buckets[bi].find(local)?;
        Some(Hit { block: bi, copy, cell: cell.translate(o) })
    }

    /// Displacement and phase at x; zero displacement and zero strain outside the support.
    pub fn evaluate(&self, ms: &Microstructure, x: &Vec3) -> (Vec3, SymTensor) {
        let f = frame();
        let z = f.to_frame(x);
        let (ramp, _) = ms.ramp_factor(z[2]);
        if ms.ramp.is_some() && z[2].abs() > 0.5 {
            return (Vec3::zeros(), SymTensor::ZERO);
        }
        match self.locate(ms, [z[0], z[1]]) {
            Some(h) => (h.cell.displacement([z[0], z[1]]) * ramp, h.cell.phase.strain()),
            None => (Vec3::zeros(), SymTensor::ZERO),
        }
    }
}

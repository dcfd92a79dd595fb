//! Block plans: how each reference cell is filled with tree rows and affine cells.

use crate::geometry::{Affine2, Poly, P2};
use crate::microstructure::params::{slice_ladder, BranchParams};
use crate::microstructure::tree::{branch_copy, cutoff_copy, Laminate, TreeSpec};
use crate::microstructure::{
    first_order_frame, second_order_frame, Block, Cell, CellTag, Item, LamFrame, LamKind, Phase,
    Region, ShearMap, TreeRow,
};
use crate::tensor_wells::{Tensor, Vec3};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A laminate chart in which the builders lay out their geometry, plus an optional map applied
/// afterwards (the shear for Omega_3).
#[derive(Clone, Copy, Debug)]
pub struct Chart {
    pub frame: LamFrame,
    pub post: Affine2,
    pub theta: f64,
}

impl Chart {
    fn slant(&self) -> f64 {
        self.frame.place.m[0][1] * SQRT3
    }

    fn at(&self, origin: P2) -> Chart {
        let mut c = *self;
        c.frame.place.o = origin;
        c
    }

    fn full(&self) -> LamFrame {
        self.frame.then(&self.post)
    }

    fn to_local(&self, z: P2) -> P2 {
        self.frame.place.inverse().apply(z)
    }

    fn row(&self, spec: TreeSpec, n: usize) -> Item {
        Item::Row(TreeRow { frame: self.full(), spec, n, theta: self.theta })
    }

    fn residual(&self, poly: Poly) -> Item {
        let f = self.full();
        Item::Cell(Cell {
            poly: poly.map(&f.place),
            grad: f.base_grad,
            offset: f.base_offset,
            phase: f.residual,
            tag: CellTag { j: f.j, sub: -1, region: Region::Corners, half: f.half },
        })
    }
}

/// Fills the triangle with vertical base s = base_s, t in [t0, t1], and the given apex with
/// slices of geometrically decreasing width, each carrying one tree.
pub fn fill_wedge(chart: &Chart, base_s: f64, t0: f64, t1: f64, apex: P2, rho0: f64, reserve: f64, out: &mut Vec<Item>) {
    let depth = (apex[0] - base_s).abs();
    if depth <= 0.0 {
        return;
    }
    let dir = (apex[0] - base_s).signum();
    let lo = |d: f64| t0 + (apex[1] - t0) * d / depth;
    let hi = |d: f64| t1 + (apex[1] - t1) * d / depth;
    let scale = (t1 - t0).abs().max(depth);
    let tiny = 1e-14 * scale;
    let mut d = 0.0;
    for rho in slice_ladder(rho0, depth, reserve) {
        let d1 = d + rho;
        let (lo0, lo1, hi0, hi1) = (lo(d), lo(d1), hi(d), hi(d1));
        let rect_lo = lo0.max(lo1);
        let rect_hi = hi0.min(hi1);
        if rect_hi - rect_lo <= tiny {
            break;
        }
        let sa = base_s + dir * d;
        let sb = base_s + dir * d1;
        let spec = TreeSpec { s0: sa.min(sb), t0: rect_lo, w: rho, h: rect_hi - rect_lo };
        out.push(chart.row(spec, 1));
        if (lo1 - lo0).abs() > tiny {
            let corner = if lo1 > lo0 { [sa, lo1] } else { [sb, lo0] };
            out.push(chart.residual(Poly::tri([sa, lo0], [sb, lo1], corner)));
        }
        if (hi1 - hi0).abs() > tiny {
            let corner = if hi1 < hi0 { [sa, hi1] } else { [sb, hi0] };
            out.push(chart.residual(Poly::tri([sa, hi0], [sb, hi1], corner)));
        }
        d = d1;
    }
    let s = base_s + dir * d;
    let tip = Poly::tri([s, lo(d)], [s, hi(d)], apex);
    if tip.area() > tiny * tiny {
        out.push(chart.residual(tip));
    }
}

/// Rectangle [z1a, z1b] x [z2a, z2b]: a band of `n` equal trees in the slanted chart and
/// two corner wedges.
pub fn fill_rectangle(chart: &Chart, z1: [f64; 2], z2: [f64; 2], n: usize, out: &mut Vec<Item>) {
    let ch = chart.at([z1[0], z2[0]]);
    let w = z1[1] - z1[0];
    let hr = z2[1] - z2[0];
    let sh = -ch.slant() * hr / SQRT3;
    let s2 = sh.max(0.0);
    let s3 = w.min(w + sh);
    let tw = (s3 - s2) / n as f64;
    out.push(ch.row(TreeSpec { s0: s2, t0: 0.0, w: tw, h: hr }, n));
    let (left_apex, right_apex) = if sh < 0.0 { ([sh, hr], [w, 0.0]) } else { ([0.0, 0.0], [w + sh, hr]) };
    fill_wedge(&ch, s2, 0.0, hr, left_apex, tw, tw, out);
    fill_wedge(&ch, s3, 0.0, hr, right_apex, tw, tw, out);
}

/// Triangle split by the vertical (in the chart) line through its middle vertex into two wedges.
pub fn fill_triangle(chart: &Chart, pts: [P2; 3], tw: f64, height: f64, out: &mut Vec<Item>) {
    let ch = chart.at(pts[0]);
    let mut v: Vec<P2> = pts.iter().map(|&p| ch.to_local(p)).collect();
    v[0] = [0.0, 0.0];
    v.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let (a, m, b) = (v[0], v[1], v[2]);
    let tx = a[1] + (b[1] - a[1]) * (m[0] - a[0]) / (b[0] - a[0]);
    let (t0, t1) = (m[1].min(tx), m[1].max(tx));
    for apex in [a, b] {
        let depth = (apex[0] - m[0]).abs();
        let reserve = if depth > height { height } else { tw };
        fill_wedge(&ch, m[0], t0, t1, apex, tw, reserve, out);
    }
}

fn first_order_bases(params: &BranchParams, j: usize, half: i8) -> [(Tensor, Vec3); 4] {
    let g = params.generation(j);
    let fr = first_order_frame(j, half, Phase::AuxA, Phase::AuxB);
    let pcs = branch_copy(Laminate::FIRST, 0.0, g.l, 0.0, g.h, 1.0, 0);
    [fr.affine(pcs[0].psi), fr.affine(pcs[1].psi), fr.affine(pcs[2].psi), fr.affine(pcs[3].psi)]
}

/// Items filling one first-order region of generation j <= j0 with the second-order laminate.
pub fn omega_items(params: &BranchParams, j: usize, half: i8, region: Region) -> Vec<Item> {
    let g = params.generation(j);
    let sec = &params.second[j];
    let (l, h) = (g.l, g.h);
    let sg = half as f64;
    let z1 = if half > 0 { [0.0, h] } else { [-h, 0.0] };
    let bases = first_order_bases(params, j, half);
    let chart = |kind, base, region, post| Chart {
        frame: second_order_frame(kind, [0.0, 0.0], base, j, half, region),
        post,
        theta: params.theta,
    };
    let id = Affine2::IDENTITY;
    let mut out = Vec::new();
    match region {
        Region::Omega1 => {
            let c = chart(LamKind::SecondA, bases[0], Region::Omega1, id);
            fill_rectangle(&c, z1, [0.0, l / 4.0], sec.n_trees, &mut out);
        }
        Region::Omega2 => {
            let c = chart(LamKind::SecondB, bases[1], Region::Omega2, id);
            let pts = [[0.0, l / 4.0], [sg * h, l / 4.0], [sg * h, l / 2.0]];
            fill_triangle(&c, pts, sec.tree_width, l / 4.0, &mut out);
        }
        Region::Omega3 => {
            let shear = ShearMap::new(params, j).local(half);
            let c = chart(LamKind::SecondA, bases[2], Region::Omega3, shear);
            fill_rectangle(&c, z1, [0.0, l / 4.0], sec.n_trees, &mut out);
        }
        Region::Omega4 => {
            let c = chart(LamKind::SecondB, bases[3], Region::Omega4, id);
            fill_rectangle(&c, z1, [0.75 * l, l], sec.n_trees, &mut out);
            let pts = [[0.0, l / 2.0], [0.0, 0.75 * l], [sg * h, 0.75 * l]];
            fill_triangle(&c, pts, sec.tree_width, l / 4.0, &mut out);
        }
        Region::Cutoff | Region::Corners => {}
    }
    out
}

fn block(params: &BranchParams, j: usize, half: i8, items: Vec<Item>) -> Block {
    let g = params.generation(j);
    let depth = if j > params.j0 { 0.5 - g.y } else { g.h };
    Block { j, half, origin: [half as f64 * g.y, -0.5], pitch: g.l, copies: g.copies, depth, items }
}

fn cutoff_block(params: &BranchParams, half: i8, alpha: Phase, beta: Phase) -> Block {
    let j = params.j0 + 1;
    let g = params.generation(j);
    let fr = first_order_frame(j, half, alpha, beta);
    let items = cutoff_copy(Laminate::FIRST, 0.0, g.l, 0.0, 0.5 - g.y, 1.0, 4)
        .iter()
        .map(|p| Item::Cell(fr.materialize(p)))
        .collect();
    block(params, j, half, items)
}

pub fn first_order_blocks(params: &BranchParams) -> Vec<Block> {
    let mut out = Vec::new();
    for half in [1i8, -1] {
        for j in 0..=params.j0 {
            let g = params.generation(j);
            let fr = first_order_frame(j, half, Phase::AuxA, Phase::AuxB);
            let items = branch_copy(Laminate::FIRST, 0.0, g.l, 0.0, g.h, 1.0, 0)
                .iter()
                .enumerate()
                .map(|(i, p)| Item::Cell(fr.materialize(&crate::microstructure::tree::Piece { sub: i as i32, ..*p })))
                .collect();
            out.push(block(params, j, half, items));
        }
        out.push(cutoff_block(params, half, Phase::AuxA, Phase::AuxB));
    }
    out
}

pub fn full_blocks(params: &BranchParams) -> Vec<Block> {
    let mut out = Vec::new();
    for half in [1i8, -1] {
        for j in 0..=params.j0 {
            let mut items = Vec::new();
            for region in [Region::Omega1, Region::Omega2, Region::Omega3, Region::Omega4] {
                items.extend(omega_items(params, j, half, region));
            }
            out.push(block(params, j, half, items));
        }
        out.push(cutoff_block(params, half, Phase::Well(2), Phase::Well(3)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::make_params;

    fn area(items: &[Item]) -> f64 {
        let mut a = 0.0;
        for it in items {
            match it {
                Item::Cell(c) => a += c.poly.area(),
                Item::Row(r) => a += r.n as f64 * r.spec.w * r.spec.h * r.frame.place.det().abs(),
            }
        }
        a
    }

    #[test]
    fn regions_are_filled() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        for half in [1i8, -1] {
            for j in 0..=p.j0 {
                let g = p.generation(j);
                let quarter = g.l * g.h / 4.0;
                for region in [Region::Omega1, Region::Omega2, Region::Omega3, Region::Omega4] {
                    let it = omega_items(&p, j, half, region);
                    let expect = if region == Region::Omega2 { quarter / 2.0 } else if region == Region::Omega4 { 1.5 * quarter } else { quarter };
                    assert!((area(&it) - expect).abs() < 1e-13, "j={j} half={half} {region:?}: {} vs {expect}", area(&it));
                }
            }
        }
    }

    #[test]
    fn wedge_slices_shrink_toward_apex() {
        let p = make_params(0.4, 0.125, 1.0 / 256.0, 0.0).unwrap();
        let it = omega_items(&p, 0, 1, Region::Omega2);
        let widths: Vec<f64> = it
            .iter()
            .filter_map(|i| if let Item::Row(r) = i { Some(r.spec.w) } else { None })
            .collect();
        assert!(widths.len() > 10);
        assert!(widths.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count() <= 1);
    }
}

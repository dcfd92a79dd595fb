//! Piecewise-affine branched laminates.
//!
//! The domain is split into blocks (one reference cell per generation and half, repeated by
//! translation along b32). Each block holds a plan of items in block-local frame coordinates:
//! single affine cells, and rows of identical branching trees that are only expanded on demand.

pub mod json;
pub mod locate;
pub mod params;
pub mod plan;
pub mod thm4;
pub mod tree;
pub mod validate;

use std::fmt;

use serde::Serialize;

use crate::geometry::{Affine2, Poly, P2};
use crate::tensor_wells::{
    construction_gradients, normal, outer, sym, well_a, well_b, wells, Frame, SymTensor, Tensor,
    Vec3,
};
pub use params::{make_params, BranchParams, ParamError};
use tree::{tree_layers, Label, Laminate, Layer, Piece, TreeSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Kind {
    FirstOrderAux,
    FullSecondOrder,
    Thm4Simple,
    FullDirichletCutoff,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::FirstOrderAux => "FirstOrderAux",
            Kind::FullSecondOrder => "FullSecondOrder",
            Kind::Thm4Simple => "Thm4Simple",
            Kind::FullDirichletCutoff => "FullDirichletCutoff",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        match s {
            "FirstOrderAux" | "FirstOrderAuxOnly" | "first" => Some(Kind::FirstOrderAux),
            "FullSecondOrder" | "full" => Some(Kind::FullSecondOrder),
            "Thm4Simple" | "thm4" => Some(Kind::Thm4Simple),
            "FullDirichletCutoff" | "dirichlet" => Some(Kind::FullDirichletCutoff),
            _ => None,
        }
    }

    /// Kinds whose displacement does not depend on z3.
    pub fn is_d_constant(&self) -> bool {
        matches!(self, Kind::FirstOrderAux | Kind::FullSecondOrder)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Phase label: a well e1..e3, or one of the averaged strains e^A, e^B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Well(u8),
    AuxA,
    AuxB,
}

impl Phase {
    pub fn strain(&self) -> SymTensor {
        match self {
            Phase::Well(i) => wells()[*i as usize - 1],
            Phase::AuxA => well_a(),
            Phase::AuxB => well_b(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Phase::Well(i) => format!("e{i}"),
            Phase::AuxA => "eA".into(),
            Phase::AuxB => "eB".into(),
        }
    }

    /// Frobenius norm of the jump between two phases.
    pub fn jump(&self, other: &Phase) -> f64 {
        if self == other {
            0.0
        } else {
            (self.strain() - other.strain()).norm()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Region {
    Omega1,
    Omega2,
    Omega3,
    Omega4,
    Cutoff,
    Corners,
}

impl Region {
    pub const ALL: [Region; 6] =
        [Region::Omega1, Region::Omega2, Region::Omega3, Region::Omega4, Region::Cutoff, Region::Corners];

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn name(&self) -> &'static str {
        match self {
            Region::Omega1 => "omega1",
            Region::Omega2 => "omega2",
            Region::Omega3 => "omega3",
            Region::Omega4 => "omega4",
            Region::Cutoff => "cutoff",
            Region::Corners => "corners",
        }
    }
}

/// Where a cell sits: first-order generation j, inner index (tree generation or slice), region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CellTag {
    pub j: u16,
    pub sub: i32,
    pub region: Region,
    pub half: i8,
}

/// Affine cell in block-local coordinates: u(x) = grad x + offset, x = z1 n + z2 b32 + z3 d.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub poly: Poly,
    pub grad: Tensor,
    pub offset: Vec3,
    pub phase: Phase,
    pub tag: CellTag,
}

impl Cell {
    pub fn misfit(&self) -> f64 {
        (sym(&self.grad) - self.phase.strain()).norm_sq()
    }

    pub fn displacement(&self, z: P2) -> Vec3 {
        self.grad * to_x(z) + self.offset
    }

    pub fn translate(&self, dz: P2) -> Cell {
        Cell { poly: self.poly.translate(dz), offset: self.offset - self.grad * to_x(dz), ..*self }
    }
}

/// Planar frame point as a 3D vector with z3 = 0.
pub fn to_x(z: P2) -> Vec3 {
    let f = frame();
    f.n * z[0] + f.b32 * z[1]
}

pub fn frame() -> &'static Frame {
    static FRAME: std::sync::OnceLock<Frame> = std::sync::OnceLock::new();
    FRAME.get_or_init(Frame::standard)
}

/// Which two-phase laminate a frame carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LamKind {
    /// A/B, oscillating along b32 (first order)
    First,
    /// e1/e2 across b21
    SecondA,
    /// e1/e3 across b13
    SecondB,
}

/// Chart of a laminate: local (s, t) mapped affinely to block coordinates, with the
/// displacement u = base + vec psi(s, t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LamFrame {
    pub kind: LamKind,
    pub lam: Laminate,
    pub place: Affine2,
    pub vec: Vec3,
    pub base_grad: Tensor,
    pub base_offset: Vec3,
    pub alpha: Phase,
    pub beta: Phase,
    pub residual: Phase,
    pub j: u16,
    pub half: i8,
    pub region: Region,
}

impl LamFrame {
    pub fn phase(&self, label: Label) -> Phase {
        match label {
            Label::Alpha => self.alpha,
            Label::Beta => self.beta,
            Label::Residual => self.residual,
        }
    }

    /// Gradient and offset of u = base + vec psi for psi = c0 s + c1 t + c2.
    pub fn affine(&self, psi: [f64; 3]) -> (Tensor, Vec3) {
        let g = self.place.pull_gradient([psi[0], psi[1]]);
        let f = frame();
        let grad_x = f.n * g[0] + f.b32 * g[1];
        let o = self.place.o;
        let value0 = psi[2] - (g[0] * o[0] + g[1] * o[1]);
        (self.base_grad + outer(&self.vec, &grad_x), self.base_offset + self.vec * value0)
    }

    /// Gradient of a piece with the given psi slopes only.
    pub fn grad(&self, slope: [f64; 2]) -> Tensor {
        self.affine([slope[0], slope[1], 0.0]).0
    }

    pub fn region_of(&self, piece: &Piece) -> Region {
        if piece.label == Label::Residual {
            return Region::Corners;
        }
        if self.kind == LamKind::First {
            // first-order reference cell: pieces in order R1..R4
            return match piece.sub {
                0 => Region::Omega1,
                1 => Region::Omega2,
                2 => Region::Omega3,
                3 => Region::Omega4,
                _ => Region::Cutoff,
            };
        }
        self.region
    }

    pub fn materialize(&self, piece: &Piece) -> Cell {
        let (grad, offset) = self.affine(piece.psi);
        Cell {
            poly: piece.poly.map(&self.place),
            grad,
            offset,
            phase: self.phase(piece.label),
            tag: CellTag { j: self.j, sub: piece.sub, region: self.region_of(piece), half: self.half },
        }
    }

    /// Same laminate seen through an extra map of block coordinates.
    pub fn then(&self, post: &Affine2) -> LamFrame {
        LamFrame { place: self.place.then(post), ..*self }
    }
}

/// `n` identical double-sided trees side by side along s, starting at `spec.s0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeRow {
    pub frame: LamFrame,
    pub spec: TreeSpec,
    pub n: usize,
    pub theta: f64,
}

impl TreeRow {
    pub fn layers(&self) -> Vec<Layer> {
        tree_layers(&self.spec, self.theta)
    }

    pub fn cell_count(&self) -> usize {
        self.n * self.layers().iter().map(|l| 4 * l.copies).sum::<usize>()
    }

    pub fn leaf_cells(&self) -> Vec<Cell> {
        let layers = self.layers();
        let mut out = Vec::new();
        for i in 0..self.n {
            let s0 = self.spec.s0 + i as f64 * self.spec.w;
            for layer in &layers {
                for m in 0..layer.copies {
                    for p in layer.copy(self.frame.lam, s0, m) {
                        out.push(self.frame.materialize(&p));
                    }
                }
            }
        }
        out
    }

    pub fn then(&self, post: &Affine2) -> TreeRow {
        TreeRow { frame: self.frame.then(post), ..*self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Cell(Cell),
    Row(TreeRow),
}

impl Item {
    pub fn cell_count(&self) -> usize {
        match self {
            Item::Cell(_) => 1,
            Item::Row(r) => r.cell_count(),
        }
    }

    pub fn then(&self, post: &Affine2) -> Item {
        match self {
            Item::Cell(c) => Item::Cell(Cell { poly: c.poly.map(post), ..*c }),
            Item::Row(r) => Item::Row(r.then(post)),
        }
    }
}

/// Reference cell of one generation and half, repeated `copies` times with spacing `pitch` in z2.
#[derive(Clone, Debug)]
pub struct Block {
    pub j: usize,
    pub half: i8,
    /// global frame coordinates of the block-local origin of copy 0
    pub origin: P2,
    pub pitch: f64,
    pub copies: usize,
    /// z1 extent (signed by half) and z2 extent in block coordinates
    pub depth: f64,
    pub items: Vec<Item>,
}

impl Block {
    pub fn cell_count(&self) -> usize {
        self.items.iter().map(Item::cell_count).sum()
    }

    pub fn leaf_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for it in &self.items {
            match it {
                Item::Cell(c) => out.push(*c),
                Item::Row(r) => out.extend(r.leaf_cells()),
            }
        }
        out
    }

    pub fn copy_origin(&self, k: usize) -> P2 {
        [self.origin[0], self.origin[1] + k as f64 * self.pitch]
    }

    /// Block-local z1 range [lo, hi].
    pub fn z1_range(&self) -> [f64; 2] {
        if self.half > 0 {
            [0.0, self.depth]
        } else {
            [-self.depth, 0.0]
        }
    }
}

/// An immutable branched microstructure.
#[derive(Clone, Debug)]
pub struct Microstructure {
    pub kind: Kind,
    pub params: BranchParams,
    pub blocks: Vec<Block>,
    /// width of the linear ramp to zero at z3 = +-1/2 (full Dirichlet variant)
    pub ramp: Option<f64>,
}

impl Microstructure {
    pub fn cell_count(&self) -> usize {
        self.blocks.iter().map(|b| b.cell_count() * b.copies).sum()
    }

    /// Box Omega in frame coordinates.
    pub fn domain(&self) -> [[f64; 2]; 3] {
        [[-0.5, 0.5]; 3]
    }

    /// All cells in global frame coordinates. Only sensible for moderate parameters.
    pub fn global_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for b in &self.blocks {
            let leaves = b.leaf_cells();
            for k in 0..b.copies {
                let o = b.copy_origin(k);
                out.extend(leaves.iter().map(|c| c.translate(o)));
            }
        }
        out
    }

    pub fn locator(&self) -> locate::Locator {
        locate::Locator::new(self)
    }

    /// Ramp factor in z3 for the full Dirichlet variant.
    pub fn ramp_factor(&self, z3: f64) -> (f64, f64) {
        match self.ramp {
            None => (1.0, 0.0),
            Some(w) => {
                let dist = 0.5 - z3.abs();
                if dist >= w {
                    (1.0, 0.0)
                } else if dist <= 0.0 {
                    (0.0, 0.0)
                } else {
                    (dist / w, -z3.signum() / w)
                }
            }
        }
    }
}

/// The unimodular shear carrying Omega_1 of generation j onto Omega_3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShearMap {
    pub j: usize,
    pub matrix: Tensor,
    pub shift: Vec3,
    pub kappa: f64,
    pub l: f64,
}

impl ShearMap {
    pub fn new(params: &BranchParams, j: usize) -> ShearMap {
        let g = params.generation(j);
        let f = frame();
        let kappa = g.l / (4.0 * g.h);
        ShearMap {
            j,
            matrix: Tensor::identity() + outer(&f.b32, &f.n) * kappa,
            shift: f.b32 * (g.l / 4.0 * (1.0 - g.y / g.h)),
            kappa,
            l: g.l,
        }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.matrix * x + self.shift
    }

    /// The same map in block-local frame coordinates of the given half.
    pub fn local(&self, half: i8) -> Affine2 {
        Affine2::new([[1.0, 0.0], [half as f64 * self.kappa, 1.0]], [0.0, self.l / 4.0])
    }
}

/// First-order frame of a block: s = z2, t = |z1|.
pub fn first_order_frame(j: usize, half: i8, alpha: Phase, beta: Phase) -> LamFrame {
    LamFrame {
        kind: LamKind::First,
        lam: Laminate::FIRST,
        place: Affine2::new([[0.0, half as f64], [1.0, 0.0]], [0.0, 0.0]),
        vec: normal(2, 3),
        base_grad: Tensor::zeros(),
        base_offset: Vec3::zeros(),
        alpha,
        beta,
        residual: beta,
        j: j as u16,
        half,
        region: Region::Omega1,
    }
}

/// Second-order laminate of the given kind sitting on a base affine map.
pub fn second_order_frame(
    kind: LamKind,
    origin: P2,
    base: (Tensor, Vec3),
    j: usize,
    half: i8,
    region: Region,
) -> LamFrame {
    let (slant, vec, beta) = match kind {
        LamKind::SecondA => (1.0, normal(1, 2), Phase::Well(2)),
        LamKind::SecondB => (-1.0, normal(3, 1), Phase::Well(3)),
        LamKind::First => panic!("not a second-order laminate"),
    };
    LamFrame {
        kind,
        lam: Laminate::second(),
        place: Affine2::new([[1.0, slant / 3f64.sqrt()], [0.0, 1.0]], origin),
        vec,
        base_grad: base.0,
        base_offset: base.1,
        alpha: Phase::Well(1),
        beta,
        residual: beta,
        j: j as u16,
        half,
        region,
    }
}

/// First-order branched laminate with phases e^A / e^B.
pub fn first_order_laminate(params: &BranchParams) -> Microstructure {
    Microstructure {
        kind: Kind::FirstOrderAux,
        params: params.clone(),
        blocks: plan::first_order_blocks(params),
        ramp: None,
    }
}

/// Two-level construction with phases in the wells.
pub fn assemble_full(params: &BranchParams) -> Microstructure {
    Microstructure {
        kind: Kind::FullSecondOrder,
        params: params.clone(),
        blocks: plan::full_blocks(params),
        ramp: None,
    }
}

/// Two-level construction multiplied by a linear ramp of width r at z3 = +-1/2.
pub fn build_full_dirichlet(params: &BranchParams) -> Microstructure {
    Microstructure { ramp: Some(params.r), kind: Kind::FullDirichletCutoff, ..assemble_full(params) }
}

pub use thm4::{build_thm4, Thm4Field};

/// Cells filling Omega_1 of generation j (positive half, block coordinates).
pub fn subdivide_second_order_a(j: usize, params: &BranchParams) -> Vec<Cell> {
    plan::omega_items(params, j, 1, Region::Omega1).iter().flat_map(expand).collect()
}

/// Cells filling Omega_2 of generation j (positive half, block coordinates).
pub fn subdivide_second_order_b(j: usize, params: &BranchParams) -> Vec<Cell> {
    plan::omega_items(params, j, 1, Region::Omega2).iter().flat_map(expand).collect()
}

/// Transports cells of Omega_1 to Omega_3 by the shear, u3 = u1(phi^-1 x) + B (x - phi^-1 x) + L b23.
pub fn shear_to_omega3(cells: &[Cell], j: usize, params: &BranchParams) -> Vec<Cell> {
    let sh = ShearMap::new(params, j);
    let local = sh.local(1);
    let f = frame();
    let p = Tensor::identity() - outer(&f.b32, &f.n) * sh.kappa;
    let q = -f.b32 * (sh.l / 4.0);
    let b = construction_gradients().b;
    let lift = normal(2, 3) * sh.l;
    cells
        .iter()
        .map(|c| {
            let d = c.grad - b;
            Cell {
                poly: c.poly.map(&local),
                grad: d * p + b,
                offset: d * q + c.offset + lift,
                phase: c.phase,
                tag: CellTag { region: if c.tag.region == Region::Omega1 { Region::Omega3 } else { c.tag.region }, ..c.tag },
            }
        })
        .collect()
}

fn expand(it: &Item) -> Vec<Cell> {
    match it {
        Item::Cell(c) => vec![*c],
        Item::Row(r) => r.leaf_cells(),
    }
}

/// Displacement and phase at a point x in standard coordinates.
pub fn evaluate(ms: &Microstructure, x: &Vec3) -> (Vec3, SymTensor) {
    ms.locator().evaluate(ms, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_frame_reproduces_gradients() {
        let g = construction_gradients();
        let fr = first_order_frame(0, 1, Phase::AuxA, Phase::AuxB);
        assert!((fr.grad([2.0, 0.0]) - g.a).abs().max() < 1e-14);
        assert!((fr.grad([-2.0, 0.0]) - g.b).abs().max() < 1e-14);
    }

    #[test]
    fn second_order_frames_reproduce_wells() {
        let g = construction_gradients();
        let lam = Laminate::second();
        let fa = second_order_frame(LamKind::SecondA, [0.3, 0.1], (g.a, Vec3::zeros()), 0, 1, Region::Omega1);
        assert!((fa.grad([lam.a, 0.0]) - g.a1).abs().max() < 1e-13);
        assert!((fa.grad([-lam.b, 0.0]) - g.a2).abs().max() < 1e-13);
        let fb = second_order_frame(LamKind::SecondB, [0.0, 0.0], (g.b, Vec3::zeros()), 0, -1, Region::Omega2);
        assert!((fb.grad([lam.a, 0.0]) - g.b1).abs().max() < 1e-13);
        assert!((fb.grad([-lam.b, 0.0]) - g.b3).abs().max() < 1e-13);
    }

    #[test]
    fn shear_map_is_unimodular() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        for j in 0..=p.j0 {
            let s = ShearMap::new(&p, j);
            assert!((s.matrix.determinant() - 1.0).abs() < 1e-14);
            let d = frame().d;
            assert!((s.matrix * d - d).norm() < 1e-15);
            // A^(j) = (A - B) M^-1 + B
            let g = construction_gradients();
            let aj = (g.a - g.b) * s.matrix.try_inverse().unwrap() + g.b;
            let gen = p.generation(j);
            let expect = g.a - outer(&normal(2, 3), &frame().n) * (gen.l / gen.h);
            assert!((aj - expect).abs().max() < 1e-13);
        }
    }

    #[test]
    fn ramp_factor_profile() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let ms = build_full_dirichlet(&p);
        assert_eq!(ms.ramp_factor(0.0), (1.0, 0.0));
        assert_eq!(ms.ramp_factor(0.5).0, 0.0);
        assert!((ms.ramp_factor(0.5 - 0.0625).0 - 0.5).abs() < 1e-12);
    }
}

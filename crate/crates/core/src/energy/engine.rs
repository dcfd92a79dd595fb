//! Hierarchical exact evaluation. Each block is processed once in block coordinates: elastic
//! energy of cells and tree rows, interfaces inside the block, and the leftover boundary
//! segments, which are then matched against neighbouring copies and generations.
//!
//! Tree rows are never expanded: their interior is summed layer by layer, and their boundary is
//! a periodic alpha/beta pattern.

use crate::energy::overlay::{overlay, Cover, Line, Seg};
use crate::geometry::{add, dot, scale, sub, P2};
use crate::microstructure::tree::Laminate;
use crate::microstructure::{to_x, Block, Cell, Item, Microstructure, Phase, Region, TreeRow};
use crate::tensor_wells::{sym, Tensor, Vec3};

// relative to the block size
const LINE_TOL: f64 = 1e-10;

pub fn slot(j: usize, region: Region) -> usize {
    j * Region::ALL.len() + region.index()
}

/// What is being integrated: pointwise misfit, interface weights and a weight along z1.
pub trait Measure: Sync {
    fn misfit(&self, c: &Cell) -> f64 {
        c.misfit()
    }
    fn jump(&self, a: Phase, b: Phase) -> f64 {
        a.jump(&b)
    }
    /// Weight as a function of global z1; must be affine on each half.
    fn weight(&self, _z1: f64) -> f64 {
        1.0
    }
    fn include(&self, _b: &Block) -> bool {
        true
    }
    /// Also accumulate the slab moments needed for the z3 ramp.
    fn slab(&self) -> bool {
        false
    }
}

pub struct Plain;
impl Measure for Plain {}

pub struct WithSlab;
impl Measure for WithSlab {
    fn slab(&self) -> bool {
        true
    }
}

/// Boundary content of a segment: one phase, or a periodic two-phase pattern along `e`.
#[derive(Clone, Copy, Debug)]
pub enum Content {
    Uniform { phase: Phase, slot: u32 },
    Pattern { start: P2, e: P2, period: f64, frac: f64, first: Phase, second: Phase, slot: u32 },
}

impl Content {
    fn slot(&self) -> usize {
        match self {
            Content::Uniform { slot, .. } | Content::Pattern { slot, .. } => *slot as usize,
        }
    }

    fn shifted(&self, d: P2) -> Content {
        match *self {
            Content::Pattern { start, e, period, frac, first, second, slot } => {
                Content::Pattern { start: add(start, d), e, period, frac, first, second, slot }
            }
            c => c,
        }
    }
}

fn shift_seg(s: &Seg<Content>, d: P2) -> Seg<Content> {
    Seg { a: add(s.a, d), b: add(s.b, d), data: s.data.shifted(d) }
}

/// Pattern coordinate xi(x) = xi0 + sigma x along the line.
fn pattern_coord(start: P2, e: P2, line: &Line) -> (f64, f64) {
    (dot(sub(line.origin, start), e), dot(line.dir, e))
}

/// Length of the first phase within [a, b] in pattern coordinates.
fn first_length(a: f64, b: f64, period: f64, frac: f64) -> f64 {
    let f = |xi: f64| {
        let m = (xi / period).floor();
        m * frac * period + (xi - m * period).clamp(0.0, frac * period)
    };
    f(b) - f(a)
}

#[derive(Clone, Copy)]
struct Wave {
    xi0: f64,
    sigma: f64,
    period: f64,
    frac: f64,
    first: Phase,
    second: Phase,
}

impl Wave {
    fn on(c: &Content, line: &Line) -> Option<Wave> {
        match *c {
            Content::Uniform { .. } => None,
            Content::Pattern { start, e, period, frac, first, second, .. } => {
                let (xi0, sigma) = pattern_coord(start, e, line);
                Some(Wave { xi0, sigma, period, frac, first, second })
            }
        }
    }

    /// Jump integral against a single phase over [x0, x1].
    fn against<M: Measure + ?Sized>(&self, m: &M, p: Phase, x0: f64, x1: f64) -> f64 {
        self.weighted(m.jump(self.first, p), m.jump(self.second, p), x0, x1)
    }

    /// Integral of jf on the first phase and js on the second over [x0, x1].
    fn weighted(&self, jf: f64, js: f64, x0: f64, x1: f64) -> f64 {
        let (xa, xb) = (self.xi0 + self.sigma * x0, self.xi0 + self.sigma * x1);
        let lf = first_length(xa.min(xb), xa.max(xb), self.period, self.frac);
        let ls = ((x1 - x0) - lf).max(0.0);
        jf * lf + js * ls
    }
}

/// Walks the phase boundaries of a wave in increasing x. Boundary positions are computed from
/// the period index, so no error accumulates along long lines.
struct Cursor {
    xi0: f64,
    s: f64,
    p: f64,
    fp: f64,
    m: f64,
    first: bool,
    next: f64,
}

impl Cursor {
    fn new(w: &Wave, x: f64) -> Cursor {
        let s = w.sigma.signum();
        let xi = w.xi0 + s * x;
        let m = (xi / w.period).floor();
        let first = xi - m * w.period < w.frac * w.period;
        let mut c = Cursor { xi0: w.xi0, s, p: w.period, fp: w.frac * w.period, m, first, next: 0.0 };
        c.next = c.boundary();
        c
    }

    fn boundary(&self) -> f64 {
        let base = self.m * self.p;
        let xi = match (self.s > 0.0, self.first) {
            (true, true) => base + self.fp,
            (true, false) => base + self.p,
            (false, true) => base,
            (false, false) => base + self.fp,
        };
        (xi - self.xi0) * self.s
    }

    fn advance(&mut self) {
        match (self.s > 0.0, self.first) {
            (true, true) => self.first = false,
            (true, false) => {
                self.first = true;
                self.m += 1.0;
            }
            (false, true) => {
                self.first = false;
                self.m -= 1.0;
            }
            (false, false) => self.first = true,
        }
        self.next = self.boundary();
    }
}

/// Jump integral between two square waves on [lo, hi].
fn wave_pair<M: Measure + ?Sized>(m: &M, a: &Wave, b: &Wave, lo: f64, hi: f64) -> f64 {
    let jump = [
        [m.jump(a.first, b.first), m.jump(a.first, b.second)],
        [m.jump(a.second, b.first), m.jump(a.second, b.second)],
    ];
    let merge = |lo: f64, hi: f64| {
        let (mut ca, mut cb) = (Cursor::new(a, lo), Cursor::new(b, lo));
        let (mut x, mut acc) = (lo, 0.0);
        while x < hi {
            let end = ca.next.min(cb.next).min(hi).max(x);
            acc += jump[!ca.first as usize][!cb.first as usize] * (end - x);
            x = end;
            if ca.next <= x {
                ca.advance();
            }
            if cb.next <= x {
                cb.advance();
            }
        }
        acc
    };
    // equal periods: one period times the number of whole periods, plus the two ends
    let p = a.period.max(b.period);
    if (a.period - b.period).abs() <= 1e-12 * p && hi - lo > 4.0 * p {
        let count = ((hi - lo) / p).floor() - 1.0;
        let x0 = lo + p;
        let x1 = x0 + count * p;
        return merge(lo, x0) + count * merge(x0, x0 + p) + merge(x1, hi);
    }
    merge(lo, hi)
}

/// Integral of the jump between two boundary contents over [lo, hi].
fn jump_measure<M: Measure + ?Sized>(m: &M, a: &Content, b: &Content, line: &Line, lo: f64, hi: f64) -> f64 {
    match (Wave::on(a, line), Wave::on(b, line), a, b) {
        (None, None, Content::Uniform { phase: p, .. }, Content::Uniform { phase: q, .. }) => m.jump(*p, *q) * (hi - lo),
        (Some(w), None, _, Content::Uniform { phase, .. }) | (None, Some(w), Content::Uniform { phase, .. }, _) => {
            w.against(m, *phase, lo, hi)
        }
        (Some(wa), Some(wb), _, _) => wave_pair(m, &wa, &wb, lo, hi),
        _ => unreachable!(),
    }
}

/// Energy contributions keyed by (generation, region) slot.
#[derive(Clone, Debug)]
pub struct Tally {
    pub elastic: Vec<f64>,
    pub surface: Vec<f64>,
    /// sum of area (|S|^2/3 - <S, chi> + |chi|^2)
    pub slab_local: Vec<f64>,
    /// integral of |sym(u (x) d)|^2 = (|u|^2 + (u.d)^2)/2
    pub slab_u: Vec<f64>,
    /// length of boundary pieces that found no partner where one was expected, or too many
    pub unmatched: f64,
}

impl Tally {
    pub fn new(slots: usize) -> Tally {
        Tally {
            elastic: vec![0.0; slots],
            surface: vec![0.0; slots],
            slab_local: vec![0.0; slots],
            slab_u: vec![0.0; slots],
            unmatched: 0.0,
        }
    }

    fn add_scaled(&mut self, o: &Tally, f: f64) {
        for (a, b) in self.elastic.iter_mut().zip(&o.elastic) {
            *a += f * b;
        }
        for (a, b) in self.surface.iter_mut().zip(&o.surface) {
            *a += f * b;
        }
        for (a, b) in self.slab_local.iter_mut().zip(&o.slab_local) {
            *a += f * b;
        }
        for (a, b) in self.slab_u.iter_mut().zip(&o.slab_u) {
            *a += f * b;
        }
        self.unmatched += f * o.unmatched;
    }

    fn interface(&mut self, a: usize, b: usize, value: f64) {
        self.surface[a] += 0.5 * value;
        self.surface[b] += 0.5 * value;
    }
}

/// Zeroth, first and second moments of u over a region.
#[derive(Clone, Copy, Debug)]
struct Moments {
    z0: f64,
    z1: Vec3,
    z2: Tensor,
}

impl Moments {
    const ZERO: Moments = Moments { z0: 0.0, z1: Vec3::new(0.0, 0.0, 0.0), z2: Tensor::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0) };

    fn of_cell(c: &Cell) -> Moments {
        let z1 = c.poly.integrate_quadratic(Vec3::zeros(), |z| c.displacement(z));
        let z2 = c.poly.integrate_quadratic(Tensor::zeros(), |z| {
            let u = c.displacement(z);
            u * u.transpose()
        });
        Moments { z0: c.poly.area(), z1, z2 }
    }

    fn add(&mut self, o: &Moments) {
        self.z0 += o.z0;
        self.z1 += o.z1;
        self.z2 += o.z2;
    }

    /// Sum over copies m = 0..n of the same region with u shifted by m delta.
    fn translates(&self, n: usize, delta: Vec3) -> Moments {
        let nf = n as f64;
        let s1 = nf * (nf - 1.0) / 2.0;
        let s2 = (nf - 1.0) * nf * (2.0 * nf - 1.0) / 6.0;
        let cross = self.z1 * delta.transpose();
        Moments {
            z0: nf * self.z0,
            z1: self.z1 * nf + delta * (s1 * self.z0),
            z2: self.z2 * nf + (cross + cross.transpose()) * s1 + delta * delta.transpose() * (s2 * self.z0),
        }
    }

    fn slab_u(&self) -> f64 {
        let d = crate::microstructure::frame().d;
        0.5 * (self.z2.trace() + (d.transpose() * self.z2 * d)[0])
    }
}

fn slab_local(c: &Cell) -> f64 {
    let s = sym(&c.grad);
    let chi = c.phase.strain();
    c.poly.area() * (s.norm_sq() / 3.0 - s.dot(&chi) + chi.norm_sq())
}

fn cell_slot(c: &Cell) -> usize {
    slot(c.tag.j as usize, c.tag.region)
}

fn push_cell_edges(c: &Cell, out: &mut Vec<Seg<Content>>) {
    let data = Content::Uniform { phase: c.phase, slot: cell_slot(c) as u32 };
    for (a, b) in c.poly.edges() {
        out.push(Seg { a, b, data });
    }
}

fn norm(v: P2) -> f64 {
    v[0].hypot(v[1])
}

/// Misfits of the stress-free alpha and beta gradients of a laminate frame, and the quadratic
/// form of an added t-slope.
struct Kernel {
    alpha: f64,
    beta: f64,
    cross: f64,
    shear: f64,
}

impl Kernel {
    fn new(f: &crate::microstructure::LamFrame) -> Kernel {
        let sa = sym(&f.grad([f.lam.a, 0.0])) - f.alpha.strain();
        let sb = sym(&f.grad([-f.lam.b, 0.0])) - f.beta.strain();
        let st = sym(&(f.grad([0.0, 1.0]) - f.base_grad));
        Kernel { alpha: sa.norm_sq(), beta: sb.norm_sq(), cross: sa.dot(&st), shear: st.norm_sq() }
    }
}

/// Elastic energy (standard misfit only), internal interfaces and exterior boundary of a row of trees.
fn tree_row<M: Measure + ?Sized>(row: &TreeRow, m: &M, z1_origin: f64, t: &mut Tally, out: &mut Vec<Seg<Content>>) {
    let f = &row.frame;
    let lin = |v: P2| f.place.apply_vec(v);
    let det = f.place.det().abs();
    let lam: Laminate = f.lam;
    let (alpha, beta) = (f.alpha, f.beta);
    let sl = slot(f.j as usize, f.region);
    let spec = row.spec;
    let n = row.n;
    let centre = f.place.apply([spec.s0 + 0.5 * n as f64 * spec.w, spec.mid()]);
    let w = m.weight(z1_origin + centre[0]);
    let jab = m.jump(alpha, beta);
    let tree_shift = to_x(lin([spec.w, 0.0]));
    let mut tree_mom = Moments::ZERO;
    let (mut el, mut surf, mut slab) = (0.0, 0.0, 0.0);
    let layers = row.layers();
    let k = Kernel::new(f);
    let mut kc = 0;
    for layer in &layers {
        kc = kc.max(layer.k);
        let copies = layer.copies as f64;
        if layer.cutoff || m.slab() {
            let mut copy_mom = Moments::ZERO;
            for p in layer.copy(lam, spec.s0, 0) {
                let c = f.materialize(&p);
                el += copies * c.misfit() * p.poly.area() * det;
                if m.slab() {
                    slab += copies * slab_local(&c);
                    copy_mom.add(&Moments::of_cell(&c));
                }
            }
            if m.slab() {
                tree_mom.add(&copy_mom.translates(layer.copies, f.base_grad * to_x(lin([layer.width, 0.0]))));
            }
        } else {
            // pieces R1, R3 are alpha with s-slope a, R2, R4 beta; R3 adds the t-slope c
            let (w, h) = (layer.width, layer.height);
            let a1 = 0.5 * lam.lambda * w * h;
            let a2 = 0.25 * (1.0 - lam.lambda) * w * h;
            let a4 = w * h - 2.0 * a1 - a2;
            let c = -(lam.a + lam.b) * (1.0 - lam.lambda) * w / (2.0 * h) * layer.dir;
            el += copies * det * (k.alpha * 2.0 * a1 + k.beta * (a2 + a4) + a1 * (2.0 * c * k.cross + c * c * k.shear));
        }
        let vert = norm(lin([0.0, layer.height]));
        let per_copy = if layer.cutoff {
            vert
        } else {
            let kh = (1.0 - lam.lambda) * layer.width / 2.0;
            vert + 2.0 * norm(lin([kh, layer.dir * layer.height]))
        };
        surf += jab * (copies * per_copy + (copies - 1.0) * vert);
    }
    let nf = n as f64;
    t.elastic[sl] += w * nf * el;
    t.surface[sl] += w * (nf * surf + (nf - 1.0) * jab * norm(lin([0.0, spec.h])));
    if m.slab() {
        t.slab_local[sl] += nf * slab;
        t.slab_u[sl] += tree_mom.translates(n, f.base_grad * tree_shift).slab_u();
    }
    // exterior
    let s1 = spec.s0 + nf * spec.w;
    let (tb, tt) = (spec.t0, spec.t0 + spec.h);
    let p = |s: f64, tt: f64| f.place.apply([s, tt]);
    out.push(Seg { a: p(spec.s0, tb), b: p(spec.s0, tt), data: Content::Uniform { phase: alpha, slot: sl as u32 } });
    out.push(Seg { a: p(s1, tb), b: p(s1, tt), data: Content::Uniform { phase: beta, slot: sl as u32 } });
    let es = lin([1.0, 0.0]);
    let unit = norm(es);
    let e = scale(es, 1.0 / unit);
    let period = unit * spec.w / 2f64.powi(kc as i32);
    for tl in [tb, tt] {
        let start = p(spec.s0, tl);
        let data = Content::Pattern { start, e, period, frac: lam.lambda, first: alpha, second: beta, slot: sl as u32 };
        out.push(Seg { a: start, b: p(s1, tl), data });
    }
}

/// Boundary of a block in block coordinates, sorted by side.
#[derive(Default, Clone, Debug)]
pub struct Sides {
    pub bottom: Vec<Seg<Content>>,
    pub top: Vec<Seg<Content>>,
    pub inner: Vec<Seg<Content>>,
    pub outer: Vec<Seg<Content>>,
}

pub struct BlockPass {
    pub tally: Tally,
    pub sides: Sides,
}

/// One copy of a block; `leaves` expands tree rows into cells first.
pub fn block_pass<M: Measure + ?Sized>(b: &Block, m: &M, slots: usize, leaves: bool) -> BlockPass {
    let mut t = Tally::new(slots);
    let mut segs = Vec::new();
    let z1o = b.origin[0];
    let do_cell = |c: &Cell, t: &mut Tally, segs: &mut Vec<Seg<Content>>| {
        let s = cell_slot(c);
        let w = m.weight(z1o + c.poly.centroid()[0]);
        t.elastic[s] += w * m.misfit(c) * c.poly.area();
        if m.slab() {
            t.slab_local[s] += slab_local(c);
            t.slab_u[s] += Moments::of_cell(c).slab_u();
        }
        push_cell_edges(c, segs);
    };
    for it in &b.items {
        match it {
            Item::Cell(c) => do_cell(c, &mut t, &mut segs),
            Item::Row(r) if leaves => {
                for c in r.leaf_cells() {
                    do_cell(&c, &mut t, &mut segs);
                }
            }
            Item::Row(r) => tree_row(r, m, z1o, &mut t, &mut segs),
        }
    }
    let mut free: Vec<Seg<Content>> = Vec::new();
    let scale = b.pitch.max(b.depth);
    overlay(&segs, scale, &mut |line, lo, hi, cover| match cover {
        Cover::Pair(i, k) => {
            let (a, c) = (&segs[i].data, &segs[k].data);
            let v = jump_measure(m, a, c, line, lo, hi);
            if v != 0.0 {
                let mid = line.point(0.5 * (lo + hi));
                t.interface(a.slot(), c.slot(), m.weight(z1o + mid[0]) * v);
            }
        }
        Cover::Free(i) => free.push(Seg { a: line.point(lo), b: line.point(hi), data: segs[i].data }),
        Cover::Conflict => t.unmatched += hi - lo,
    });
    let mut sides = Sides::default();
    let edge = if b.half > 0 { b.depth } else { -b.depth };
    for s in free {
        let on = |k: usize, v: f64| (s.a[k] - v).abs() < LINE_TOL * scale && (s.b[k] - v).abs() < LINE_TOL * scale;
        if on(1, 0.0) {
            sides.bottom.push(s);
        } else if on(1, b.pitch) {
            sides.top.push(s);
        } else if on(0, 0.0) {
            sides.inner.push(s);
        } else if on(0, edge) {
            sides.outer.push(s);
        } else {
            t.unmatched += norm(sub(s.b, s.a));
        }
    }
    BlockPass { tally: t, sides }
}

/// Matches two groups of boundary segments lying on a common interface.
fn match_groups<M: Measure + ?Sized>(m: &M, a: &[Seg<Content>], b: &[Seg<Content>], scale: f64, z1o: f64, factor: f64, t: &mut Tally) {
    let na = a.len();
    let segs: Vec<Seg<Content>> = a.iter().chain(b.iter()).copied().collect();
    let mut loose = 0.0;
    overlay(&segs, scale, &mut |line, lo, hi, cover| match cover {
        Cover::Pair(i, k) if (i < na) != (k < na) => {
            let (p, q) = (&segs[i].data, &segs[k].data);
            let v = jump_measure(m, p, q, line, lo, hi);
            if v != 0.0 {
                let mid = line.point(0.5 * (lo + hi));
                t.interface(p.slot(), q.slot(), factor * m.weight(z1o + mid[0]) * v);
            }
        }
        _ => loose += hi - lo,
    });
    t.unmatched += factor * loose;
}

/// Exact energies of a microstructure, summed over all blocks, copies and block interfaces.
pub fn evaluate<M: Measure + ?Sized>(ms: &Microstructure, m: &M, leaves: bool) -> Tally {
    let slots = (ms.params.j0 + 2) * Region::ALL.len();
    let blocks: Vec<&Block> = ms.blocks.iter().filter(|b| m.include(b)).collect();
    use rayon::prelude::*;
    let passes: Vec<BlockPass> = blocks.par_iter().map(|b| block_pass(*b, m, slots, leaves)).collect();
    let mut total = Tally::new(slots);
    for (b, p) in blocks.iter().zip(&passes) {
        total.add_scaled(&p.tally, b.copies as f64);
        if b.copies > 1 {
            let lifted: Vec<_> = p.sides.bottom.iter().map(|s| shift_seg(s, [0.0, b.pitch])).collect();
            match_groups(m, &p.sides.top, &lifted, b.pitch.max(b.depth), b.origin[0], (b.copies - 1) as f64, &mut total);
        }
    }
    let find = |half: i8, j: usize| blocks.iter().position(|b| b.half == half && b.j == j);
    for half in [1i8, -1] {
        for j in 0..=ms.params.j0 {
            let (Some(lo), Some(hi)) = (find(half, j), find(half, j + 1)) else { continue };
            let (bl, bh) = (blocks[lo], blocks[hi]);
            // the outer line of the lower block, in its own coordinates
            let dz1 = half as f64 * bl.depth;
            let mut upper = Vec::new();
            for k in 0..2 {
                let d = [dz1, k as f64 * bh.pitch];
                upper.extend(passes[hi].sides.inner.iter().map(|s| shift_seg(s, d)));
            }
            match_groups(m, &passes[lo].sides.outer, &upper, bl.pitch.max(bl.depth), bl.origin[0], bl.copies as f64, &mut total);
        }
    }
    if let (Some(p), Some(q)) = (find(1, 0), find(-1, 0)) {
        match_groups(m, &passes[p].sides.inner, &passes[q].sides.inner, blocks[p].pitch.max(blocks[p].depth), 0.0, blocks[p].copies as f64, &mut total);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::{assemble_full, build_full_dirichlet, first_order_laminate, make_params};

    fn sum(v: &[f64]) -> f64 {
        v.iter().sum()
    }

    #[test]
    fn first_length_counts_phase_runs() {
        assert!((first_length(0.0, 1.0, 1.0, 0.25) - 0.25).abs() < 1e-15);
        assert!((first_length(-0.5, 2.5, 1.0, 0.25) - 0.75).abs() < 1e-15);
        assert!((first_length(0.1, 0.2, 1.0, 0.25) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn hierarchical_matches_leaf_level() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        for ms in [first_order_laminate(&p), assemble_full(&p)] {
            let fast = evaluate(&ms, &Plain, false);
            let slow = evaluate(&ms, &Plain, true);
            let (ef, es) = (sum(&fast.elastic), sum(&slow.elastic));
            let (sf, ss) = (sum(&fast.surface), sum(&slow.surface));
            assert!((ef - es).abs() < 1e-10 * es.max(1e-3), "elastic {ef} vs {es}");
            assert!((sf - ss).abs() < 1e-9 * ss, "surface {sf} vs {ss}");
            assert!(fast.unmatched < 1e-9 && slow.unmatched < 1e-9, "{} {}", fast.unmatched, slow.unmatched);
            for k in 0..fast.surface.len() {
                assert!((fast.surface[k] - slow.surface[k]).abs() < 1e-9 * ss.max(1.0), "slot {k}");
            }
        }
    }

    #[test]
    fn slab_moments_match_leaf_level() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let ms = build_full_dirichlet(&p);
        let fast = evaluate(&ms, &WithSlab, false);
        let slow = evaluate(&ms, &WithSlab, true);
        let (a, b) = (sum(&fast.slab_u), sum(&slow.slab_u));
        assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
        let (a, b) = (sum(&fast.slab_local), sum(&slow.slab_local));
        assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
    }
}

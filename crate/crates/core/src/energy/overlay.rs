//! Matching of boundary segments that lie on common lines.
//!
//! Segments are grouped by direction and then by offset; along each line a sweep reports the
//! pieces covered once (free), twice (an interface) or more often (a tiling conflict).

use crate::geometry::{add, dot, scale, sub, P2};

const ANGLE_TOL: f64 = 1e-8;
// relative to the coordinate scale passed in
const OFFSET_TOL: f64 = 1e-10;
const LENGTH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct Seg<T> {
    pub a: P2,
    pub b: P2,
    pub data: T,
}

impl<T: Copy> Seg<T> {
    pub fn translate(&self, d: P2) -> (P2, P2) {
        (add(self.a, d), add(self.b, d))
    }
}

/// Line with unit direction; coordinates x measured from `origin`.
#[derive(Clone, Copy, Debug)]
pub struct Line {
    pub origin: P2,
    pub dir: P2,
}

impl Line {
    pub fn coord(&self, p: P2) -> f64 {
        dot(sub(p, self.origin), self.dir)
    }

    pub fn point(&self, x: f64) -> P2 {
        add(self.origin, scale(self.dir, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cover {
    Free(usize),
    Pair(usize, usize),
    Conflict,
}

fn angle(d: P2) -> f64 {
    let mut a = d[1].atan2(d[0]);
    if a < 0.0 {
        a += std::f64::consts::PI;
    }
    if a >= std::f64::consts::PI - ANGLE_TOL {
        a -= std::f64::consts::PI;
    }
    a
}

/// Calls `visit(line, lo, hi, cover)` for every maximal piece of constant coverage. `scale` is
/// the size of the coordinates involved; tolerances are relative to it.
pub fn overlay<T>(segs: &[Seg<T>], scale: f64, visit: &mut dyn FnMut(&Line, f64, f64, Cover)) {
    let tol = Tol { offset: OFFSET_TOL * scale, length: LENGTH_TOL * scale };
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(segs.len());
    for (i, s) in segs.iter().enumerate() {
        let d = sub(s.b, s.a);
        if d[0].hypot(d[1]) > tol.length {
            keyed.push((angle(d), i));
        }
    }
    keyed.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut start = 0;
    while start < keyed.len() {
        let mut end = start + 1;
        while end < keyed.len() && keyed[end].0 - keyed[end - 1].0 <= ANGLE_TOL {
            end += 1;
        }
        by_offset(segs, &keyed[start..end], tol, visit);
        start = end;
    }
}

#[derive(Clone, Copy)]
struct Tol {
    offset: f64,
    length: f64,
}

fn by_offset<T>(segs: &[Seg<T>], group: &[(f64, usize)], tol: Tol, visit: &mut dyn FnMut(&Line, f64, f64, Cover)) {
    let len = |i: usize| {
        let d = sub(segs[i].b, segs[i].a);
        d[0].hypot(d[1])
    };
    let longest = group.iter().map(|g| g.1).max_by(|&x, &y| len(x).total_cmp(&len(y))).unwrap();
    let d = sub(segs[longest].b, segs[longest].a);
    let l = len(longest);
    let u = [d[0] / l, d[1] / l];
    let nu = [-u[1], u[0]];
    let mut off: Vec<(f64, usize)> =
        group.iter().map(|&(_, i)| (0.5 * (dot(nu, segs[i].a) + dot(nu, segs[i].b)), i)).collect();
    off.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut start = 0;
    let mut events = Vec::new();
    let mut active = Vec::new();
    while start < off.len() {
        let mut end = start + 1;
        while end < off.len() && off[end].0 - off[end - 1].0 <= tol.offset {
            end += 1;
        }
        let line = Line { origin: scale(nu, off[start].0), dir: u };
        if end - start == 1 {
            let s = &segs[off[start].1];
            let (xa, xb) = (line.coord(s.a), line.coord(s.b));
            visit(&line, xa.min(xb), xa.max(xb), Cover::Free(off[start].1));
        } else {
            events.clear();
            for &(_, i) in &off[start..end] {
                let (xa, xb) = (line.coord(segs[i].a), line.coord(segs[i].b));
                events.push((xa.min(xb), 1i8, i));
                events.push((xa.max(xb), -1i8, i));
            }
            sweep(&line, &mut events, &mut active, tol.length, visit);
        }
        start = end;
    }
}

fn sweep(
    line: &Line,
    events: &mut [(f64, i8, usize)],
    active: &mut Vec<usize>,
    eps: f64,
    visit: &mut dyn FnMut(&Line, f64, f64, Cover),
) {
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    active.clear();
    let mut i = 0;
    let mut prev: Option<f64> = None;
    while i < events.len() {
        let x = events[i].0;
        if let Some(px) = prev {
            if !active.is_empty() && x - px > eps {
                let cover = match active.len() {
                    1 => Cover::Free(active[0]),
                    2 => Cover::Pair(active[0].min(active[1]), active[0].max(active[1])),
                    _ => Cover::Conflict,
                };
                visit(line, px, x, cover);
            }
        }
        while i < events.len() && events[i].0 - x <= eps {
            let (_, kind, idx) = events[i];
            if kind > 0 {
                active.push(idx);
            } else if let Some(p) = active.iter().position(|&a| a == idx) {
                active.swap_remove(p);
            }
            i += 1;
        }
        prev = Some(x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(segs: &[Seg<u8>]) -> (f64, f64, f64) {
        let (mut free, mut pair, mut bad) = (0.0, 0.0, 0.0);
        overlay(segs, 1.0, &mut |_, lo, hi, c| match c {
            Cover::Free(_) => free += hi - lo,
            Cover::Pair(_, _) => pair += hi - lo,
            Cover::Conflict => bad += hi - lo,
        });
        (free, pair, bad)
    }

    #[test]
    fn two_squares_share_an_edge() {
        let mut segs = Vec::new();
        for (x0, tag) in [(0.0, 0u8), (1.0, 1)] {
            let p = [[x0, 0.0], [x0 + 1.0, 0.0], [x0 + 1.0, 1.0], [x0, 1.0]];
            for k in 0..4 {
                segs.push(Seg { a: p[k], b: p[(k + 1) % 4], data: tag });
            }
        }
        let (free, pair, bad) = run(&segs);
        assert!((free - 6.0).abs() < 1e-12);
        assert!((pair - 1.0).abs() < 1e-12);
        assert_eq!(bad, 0.0);
    }

    #[test]
    fn partial_overlap_on_slanted_line() {
        let d = [0.6, 0.8];
        let p = |t: f64| [0.1 + d[0] * t, -0.2 + d[1] * t];
        let segs = vec![
            Seg { a: p(0.0), b: p(2.0), data: 0u8 },
            Seg { a: p(3.0), b: p(1.0), data: 1 },
            Seg { a: p(1.5), b: p(1.7), data: 2 },
        ];
        let (free, pair, bad) = run(&segs);
        assert!((free - 1.0 - 1.0).abs() < 1e-12);
        assert!((pair - 0.8).abs() < 1e-12);
        assert!((bad - 0.2).abs() < 1e-12);
    }

    #[test]
    fn vertical_lines_with_opposite_orientation_group_together() {
        let segs = vec![
            Seg { a: [0.5, 0.0], b: [0.5, 1.0], data: 0u8 },
            Seg { a: [0.5 + 1e-17, 1.0], b: [0.5, 0.0], data: 1 },
        ];
        let (free, pair, _) = run(&segs);
        assert!(free < 1e-12);
        assert!((pair - 1.0).abs() < 1e-12);
    }
}

//! Self-similar branching trees in local laminate coordinates (s, t).
//!
//! A tree lives on s in [s0, s0 + w]. Along s the scalar potential psi has slope `a` in the alpha
//! phase and `-b` in the beta phase, with volume fraction lambda of alpha and a lambda = b (1 - lambda),
//! so psi vanishes at both ends of every period. Each generation halves the period while the
//! potential stays continuous; a final cut-off layer interpolates psi to zero.

use crate::geometry::{affine_through, Poly, P2};
use crate::microstructure::params::stop_index;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Alpha,
    Beta,
    Residual,
}

/// Lamination data of a two-phase laminate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Laminate {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

impl Laminate {
    /// A/B laminate of the first-order construction, slopes +-2 in z2.
    pub const FIRST: Laminate = Laminate { lambda: 0.5, a: 2.0, b: 2.0 };

    /// e1 against e2 (or e3) in volume ratio 1:2.
    pub fn second() -> Laminate {
        let s3 = 3f64.sqrt();
        Laminate { lambda: 1.0 / 3.0, a: 2.0 * s3, b: s3 }
    }
}

/// Affine scalar psi(s, t) = c[0] s + c[1] t + c[2] on a polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub poly: Poly,
    pub psi: [f64; 3],
    pub label: Label,
    pub sub: i32,
}

impl Piece {
    pub fn value(&self, p: P2) -> f64 {
        self.psi[0] * p[0] + self.psi[1] * p[1] + self.psi[2]
    }
}

fn at(s0: f64, tb: f64, dir: f64, sigma: f64, tau: f64) -> P2 {
    [s0 + sigma, tb + dir * tau]
}

/// One period of a branching generation: s in [s0, s0 + w], growth from t = tb over height h in
/// direction `dir` (+1 or -1). Returns the pieces R1 (alpha), R2 (beta), R3 (alpha), R4 (beta).
pub fn branch_copy(lam: Laminate, s0: f64, w: f64, tb: f64, h: f64, dir: f64, sub: i32) -> [Piece; 4] {
    let Laminate { lambda, a, b } = lam;
    let kappa = (1.0 - lambda) * w / (2.0 * h);
    let p = |sg: f64, tau: f64| at(s0, tb, dir, sg, tau);
    let half = lambda * w / 2.0;
    let r1 = Piece {
        poly: Poly::rect(s0, s0 + half, tb.min(tb + dir * h), tb.max(tb + dir * h)),
        psi: [a, 0.0, -a * s0],
        label: Label::Alpha,
        sub,
    };
    let r2 = Piece {
        poly: Poly::tri(p(half, 0.0), p(half, h), p(half + kappa * h, h)),
        psi: [-b, 0.0, (a + b) * half + b * s0],
        label: Label::Beta,
        sub,
    };
    let r3 = Piece {
        poly: Poly::quad(p(half, 0.0), p(lambda * w, 0.0), p(lambda * w + kappa * h, h), p(half + kappa * h, h)),
        psi: [a, -(a + b) * kappa * dir, -a * s0 + (a + b) * kappa * dir * tb],
        label: Label::Alpha,
        sub,
    };
    let r4 = Piece {
        poly: Poly::quad(p(lambda * w, 0.0), p(w, 0.0), p(w, h), p(lambda * w + kappa * h, h)),
        psi: [-b, 0.0, b * (w + s0)],
        label: Label::Beta,
        sub,
    };
    [r1, r2, r3, r4]
}

/// Cut-off period: the tent a(s - s0) / b(s0 + w - s) at t = tb is interpolated to zero at
/// t = tb + dir h on four triangles (alpha, alpha, beta, beta).
pub fn cutoff_copy(lam: Laminate, s0: f64, w: f64, tb: f64, h: f64, dir: f64, sub: i32) -> [Piece; 4] {
    let Laminate { lambda, a, .. } = lam;
    let peak = a * lambda * w;
    let p = |sg: f64, tau: f64| at(s0, tb, dir, sg, tau);
    let lw = lambda * w;
    let make = |v: [P2; 3], val: [f64; 3], label| Piece {
        poly: Poly::tri(v[0], v[1], v[2]),
        psi: affine_through(v, val),
        label,
        sub,
    };
    [
        make([p(0.0, 0.0), p(lw, 0.0), p(lw, h)], [0.0, peak, 0.0], Label::Alpha),
        make([p(0.0, 0.0), p(lw, h), p(0.0, h)], [0.0, 0.0, 0.0], Label::Alpha),
        make([p(lw, 0.0), p(w, 0.0), p(lw, h)], [peak, 0.0, 0.0], Label::Beta),
        make([p(w, 0.0), p(w, h), p(lw, h)], [0.0, 0.0, 0.0], Label::Beta),
    ]
}

/// Geometry of a double-sided tree: width w, total height h, branching from the middle toward
/// t0 and t0 + h.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeSpec {
    pub s0: f64,
    pub t0: f64,
    pub w: f64,
    pub h: f64,
}

impl TreeSpec {
    pub fn depth(&self) -> f64 {
        self.h / 2.0
    }

    pub fn mid(&self) -> f64 {
        self.t0 + self.h / 2.0
    }

    /// Last branching generation (-1 when the tree is cut off immediately).
    pub fn k0(&self, theta: f64) -> i64 {
        stop_index(self.w, self.depth(), theta, false)
    }

    pub fn shifted(&self, ds: f64) -> TreeSpec {
        TreeSpec { s0: self.s0 + ds, ..*self }
    }
}

/// One generation layer of one half of a tree.
#[derive(Clone, Copy, Debug)]
pub struct Layer {
    pub dir: f64,
    /// generation index, k0 + 1 for the cut-off layer
    pub k: i64,
    pub cutoff: bool,
    pub base: f64,
    pub height: f64,
    pub width: f64,
    pub copies: usize,
}

/// All layers of a double-sided tree, upper half first.
pub fn tree_layers(spec: &TreeSpec, theta: f64) -> Vec<Layer> {
    let k0 = spec.k0(theta);
    let d = spec.depth();
    let mid = spec.mid();
    let mut out = Vec::new();
    for dir in [1.0, -1.0] {
        for k in 0..=k0 {
            out.push(Layer {
                dir,
                k,
                cutoff: false,
                base: mid + dir * d * (1.0 - theta.powi(k as i32)),
                height: d * (1.0 - theta) * theta.powi(k as i32),
                width: spec.w / 2f64.powi(k as i32),
                copies: 1 << k,
            });
        }
        let kc = k0 + 1;
        out.push(Layer {
            dir,
            k: kc,
            cutoff: true,
            base: mid + dir * d * (1.0 - theta.powi(kc as i32)),
            height: d * theta.powi(kc as i32),
            width: spec.w / 2f64.powi(kc as i32),
            copies: 1 << kc,
        });
    }
    out
}

impl Layer {
    /// Pieces of copy m of this layer.
    pub fn copy(&self, lam: Laminate, s0: f64, m: usize) -> [Piece; 4] {
        let s = s0 + m as f64 * self.width;
        if self.cutoff {
            cutoff_copy(lam, s, self.width, self.base, self.height, self.dir, self.k as i32)
        } else {
            branch_copy(lam, s, self.width, self.base, self.height, self.dir, self.k as i32)
        }
    }
}

/// Expands a double-sided tree into its pieces.
pub fn tree_pieces(spec: &TreeSpec, lam: Laminate, theta: f64) -> Vec<Piece> {
    let mut out = Vec::new();
    for layer in tree_layers(spec, theta) {
        for m in 0..layer.copies {
            out.extend(layer.copy(lam, spec.s0, m));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::lerp;

    fn shared_edge_values_agree(pieces: &[Piece]) -> f64 {
        // compare psi at points of every edge against every other piece containing that point
        let mut worst: f64 = 0.0;
        for (i, p) in pieces.iter().enumerate() {
            for (a, b) in p.poly.edges() {
                for t in [0.1, 0.5, 0.9] {
                    let x = lerp(a, b, t);
                    for (j, q) in pieces.iter().enumerate() {
                        if i != j && q.poly.contains(x, 1e-12) {
                            worst = worst.max((p.value(x) - q.value(x)).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn branch_copy_is_continuous_and_tiles() {
        let lam = Laminate::second();
        let pcs = branch_copy(lam, 0.3, 0.2, 1.0, 0.5, -1.0, 0);
        let area: f64 = pcs.iter().map(|p| p.poly.area()).sum();
        assert!((area - 0.1).abs() < 1e-15);
        assert!(shared_edge_values_agree(&pcs) < 1e-14);
        // potential vanishes on the period ends
        for p in &pcs {
            for v in p.poly.vertices() {
                if (v[0] - 0.3).abs() < 1e-15 || (v[0] - 0.5).abs() < 1e-15 {
                    assert!(p.value(*v).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn stress_free_slopes() {
        let lam = Laminate::FIRST;
        let pcs = branch_copy(lam, 0.0, 1.0, 0.0, 2.0, 1.0, 0);
        assert_eq!(pcs[0].psi[0], 2.0);
        assert_eq!(pcs[1].psi[0], -2.0);
        assert_eq!(pcs[3].psi[0], -2.0);
        // the sheared alpha piece carries the t-slope -(a+b) kappa
        assert!((pcs[2].psi[1] + 4.0 * 0.25 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn tree_tiles_and_is_continuous() {
        let lam = Laminate::second();
        for w in [0.2, 0.08, 0.03] {
            let spec = TreeSpec { s0: 0.1, t0: -0.2, w, h: 0.25 };
            let pcs = tree_pieces(&spec, lam, 0.4);
            let area: f64 = pcs.iter().map(|p| p.poly.area()).sum();
            assert!((area - w * 0.25).abs() < 1e-14 * (1.0 + pcs.len() as f64), "w = {w}");
            assert!(shared_edge_values_agree(&pcs) < 1e-13, "w = {w}");
            for p in &pcs {
                for v in p.poly.vertices() {
                    let on_boundary = (v[0] - 0.1).abs() < 1e-14
                        || (v[0] - 0.1 - w).abs() < 1e-14
                        || (v[1] + 0.2).abs() < 1e-14
                        || (v[1] - 0.05).abs() < 1e-14;
                    if on_boundary {
                        assert!(p.value(*v).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn deeper_trees_branch_more() {
        let a = TreeSpec { s0: 0.0, t0: 0.0, w: 0.1, h: 1.0 };
        let b = TreeSpec { w: 0.01, ..a };
        assert!(b.k0(0.4) > a.k0(0.4));
        assert_eq!(TreeSpec { w: 1.0, ..a }.k0(0.4), -1);
    }
}

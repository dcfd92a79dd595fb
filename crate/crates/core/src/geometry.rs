//! Planar primitives in frame coordinates (z1, z2).

pub type P2 = [f64; 2];

pub fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: P2, b: P2) -> P2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: P2, s: f64) -> P2 {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn dist(a: P2, b: P2) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

pub fn lerp(a: P2, b: P2, t: f64) -> P2 {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

/// z = m p + o
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine2 {
    pub m: [[f64; 2]; 2],
    pub o: P2,
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 { m: [[1.0, 0.0], [0.0, 1.0]], o: [0.0, 0.0] };

    pub fn new(m: [[f64; 2]; 2], o: P2) -> Self {
        Affine2 { m, o }
    }

    pub fn translation(o: P2) -> Self {
        Affine2 { m: Self::IDENTITY.m, o }
    }

    pub fn apply(&self, p: P2) -> P2 {
        add(self.apply_vec(p), self.o)
    }

    pub fn apply_vec(&self, v: P2) -> P2 {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Affine2 {
        let d = self.det();
        let m = [
            [self.m[1][1] / d, -self.m[0][1] / d],
            [-self.m[1][0] / d, self.m[0][0] / d],
        ];
        let inv = Affine2 { m, o: [0.0, 0.0] };
        let o = inv.apply_vec(self.o);
        Affine2 { m, o: [-o[0], -o[1]] }
    }

    /// `outer` after `self`.
    pub fn then(&self, outer: &Affine2) -> Affine2 {
        let a = &outer.m;
        let b = &self.m;
        let m = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        Affine2 { m, o: outer.apply(self.o) }
    }

    /// Gradient, with respect to the image coordinates, of the function p -> g.p + c.
    pub fn pull_gradient(&self, g: P2) -> P2 {
        let inv = self.inverse();
        [inv.m[0][0] * g[0] + inv.m[1][0] * g[1], inv.m[0][1] * g[0] + inv.m[1][1] * g[1]]
    }
}

/// Convex polygon with three or four vertices in counter-clockwise order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poly {
    n: u8,
    v: [P2; 4],
}

impl Poly {
    /// Builds a polygon, reversing the vertex order if it is clockwise.
    pub fn new(pts: &[P2]) -> Self {
        assert!(pts.len() == 3 || pts.len() == 4, "polygon needs 3 or 4 vertices");
        let mut v = [[0.0; 2]; 4];
        v[..pts.len()].copy_from_slice(pts);
        let mut p = Poly { n: pts.len() as u8, v };
        if p.signed_area() < 0.0 {
            p.v[..pts.len()].reverse();
        }
        p
    }

    pub fn tri(a: P2, b: P2, c: P2) -> Self {
        Self::new(&[a, b, c])
    }

    pub fn quad(a: P2, b: P2, c: P2, d: P2) -> Self {
        Self::new(&[a, b, c, d])
    }

    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self::new(&[[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn vertices(&self) -> &[P2] {
        &self.v[..self.n as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (P2, P2)> + '_ {
        let n = self.len();
        (0..n).map(move |i| (self.v[i], self.v[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        let mut s = 0.0;
        for i in 0..n {
            s += cross(self.v[i], self.v[(i + 1) % n]);
        }
        0.5 * s
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> P2 {
        let n = self.len();
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        let o = self.v[0];
        for i in 1..n - 1 {
            let p = sub(self.v[i], o);
            let q = sub(self.v[i + 1], o);
            let w = cross(p, q);
            cx += w * (p[0] + q[0]);
            cy += w * (p[1] + q[1]);
            a += w;
        }
        [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
    }

    pub fn map(&self, f: &Affine2) -> Poly {
        let pts: Vec<P2> = self.vertices().iter().map(|&p| f.apply(p)).collect();
        Poly::new(&pts)
    }

    pub fn translate(&self, d: P2) -> Poly {
        let mut p = *self;
        for v in p.v[..p.n as usize].iter_mut() {
            *v = add(*v, d);
        }
        p
    }

    pub fn bbox(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for v in self.vertices() {
            b[0] = b[0].min(v[0]);
            b[1] = b[1].max(v[0]);
            b[2] = b[2].min(v[1]);
            b[3] = b[3].max(v[1]);
        }
        b
    }

    /// Point-in-polygon with an absolute tolerance on the edge distance.
    pub fn contains(&self, p: P2, tol: f64) -> bool {
        for (a, b) in self.edges() {
            let e = sub(b, a);
            let len = e[0].hypot(e[1]);
            if cross(e, sub(p, a)) < -tol * len {
                return false;
            }
        }
        true
    }

    /// Shortest edge length divided by the diameter.
    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(dist(v[i], v[j]));
            }
        }
        d
    }

    /// Integrates a quadratic function exactly (edge midpoint rule on a fan).
    pub fn integrate_quadratic<T, F>(&self, zero: T, f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
        F: Fn(P2) -> T,
    {
        let v = self.vertices();
        let mut acc = zero;
        for i in 1..v.len() - 1 {
            let (a, b, c) = (v[0], v[i], v[i + 1]);
            let area = 0.5 * cross(sub(b, a), sub(c, a)).abs();
            let m = f(lerp(a, b, 0.5)) + f(lerp(b, c, 0.5)) + f(lerp(c, a, 0.5));
            acc = acc + m * (area / 3.0);
        }
        acc
    }
}

/// Affine function p -> g.p + c through three vertex values.
pub fn affine_through(p: [P2; 3], val: [f64; 3]) -> [f64; 3] {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let det = cross(e1, e2);
    let d1 = val[1] - val[0];
    let d2 = val[2] - val[0];
    let gx = (d1 * e2[1] - d2 * e1[1]) / det;
    let gy = (e1[0] * d2 - e2[0] * d1) / det;
    [gx, gy, val[0] - gx * p[0][0] - gy * p[0][1]]
}

//! Fourier symbols: the elastic multiplier M(k), conical multipliers, smoothed cone indicators
//! and the partition of unity on the sphere. All take wave vectors in standard coordinates.

use crate::tensor_wells::{NormalTable, Vec3};

/// Raised-cosine step: 1 below edge(1 - w), 0 above edge(1 + w).
pub fn smooth_below(x: f64, edge: f64, w: f64) -> f64 {
    let lo = edge * (1.0 - w);
    let hi = edge * (1.0 + w);
    if x <= lo {
        1.0
    } else if x >= hi {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (x - lo) / (hi - lo)).cos())
    }
}

pub fn m_matrix(k: &Vec3) -> [[f64; 3]; 3] {
    let (a, b, c) = (k[0] * k[0], k[1] * k[1], k[2] * k[2]);
    let s = (a + b + c).powi(2);
    [
        [(b + c).powi(2) / s, a * b / s, a * c / s],
        [a * b / s, (a + c).powi(2) / s, b * c / s],
        [a * c / s, b * c / s, (a + b).powi(2) / s],
    ]
}

/// Lamination normals of well j (1-based), each standing for the line through +-b.
pub fn normal_set(j: usize) -> [Vec3; 4] {
    NormalTable::new().normal_set(j).expect("j in 1..=3")
}

/// m_j(k) = squared distance of k/|k| to the set of normals of well j and their negatives.
pub fn conical(j: usize, k: &Vec3) -> f64 {
    let kh = k / k.norm();
    normal_set(j).iter().map(|b| 2.0 - 2.0 * kh.dot(b).abs()).fold(f64::INFINITY, f64::min).max(0.0)
}

fn radial(k: f64, mu2: f64, mu3: f64, w: f64) -> f64 {
    let outer = smooth_below(k, mu2, w);
    if mu3 > 0.0 {
        outer - smooth_below(k, mu3, w)
    } else {
        outer
    }
}

/// Truncated cone around the line through +-axis: aperture mu, radii [mu3, mu2].
#[derive(Clone, Copy, Debug)]
pub struct ConeSpec {
    pub axis: Vec3,
    pub mu: f64,
    pub mu2: f64,
    /// 0 for a full (non-annular) cone
    pub mu3: f64,
    pub width: f64,
}

impl ConeSpec {
    pub fn new(axis: Vec3, mu: f64, mu2: f64, width: f64) -> ConeSpec {
        ConeSpec { axis: axis.normalize(), mu, mu2, mu3: 0.0, width }
    }

    pub fn annular(mut self, mu3: f64) -> ConeSpec {
        assert!(mu3 < self.mu2, "inner radius must stay below the outer one");
        self.mu3 = mu3;
        self
    }

    pub fn symbol(&self, k: &Vec3) -> f64 {
        let r = k.norm();
        let rad = radial(r, self.mu2, self.mu3, self.width);
        if r == 0.0 || rad == 0.0 {
            return rad;
        }
        let c = k.dot(&self.axis) / r;
        let sin = (1.0 - c * c).max(0.0).sqrt();
        smooth_below(sin, self.mu, self.width) * rad
    }
}

/// Smoothed indicator of {m_j < mu^2, |k| < mu2}.
pub fn union_cone(j: usize, k: &Vec3, mu: f64, mu2: f64, w: f64) -> f64 {
    let r = k.norm();
    let rad = radial(r, mu2, 0.0, w);
    if r == 0.0 || rad == 0.0 {
        return rad;
    }
    smooth_below(conical(j, k).sqrt(), mu, w) * rad
}

/// Even partition of unity on the sphere indexed like `NormalTable::all`: a geodesic bump of
/// angular radius `radius` around +-b for each normal, the remainder shared equally.
#[derive(Clone, Debug)]
pub struct Partition {
    normals: [Vec3; 6],
    radius: f64,
    width: f64,
}

impl Partition {
    pub fn new(radius_deg: f64, width: f64) -> Partition {
        let normals = NormalTable::new().all().map(|(_, _, b)| b);
        Partition { normals, radius: radius_deg.to_radians() / (1.0 + width), width }
    }

    fn bumps(&self, kh: &Vec3) -> [f64; 6] {
        self.normals.map(|b| {
            let ang = kh.dot(&b).abs().min(1.0).acos();
            smooth_below(ang, self.radius, self.width)
        })
    }

    /// All six weights at direction k (any nonzero length); equal shares at k = 0.
    pub fn weights(&self, k: &Vec3) -> [f64; 6] {
        let r = k.norm();
        if r == 0.0 {
            return [1.0 / 6.0; 6];
        }
        let b = self.bumps(&(k / r));
        let rest = (1.0 - b.iter().sum::<f64>()) / 6.0;
        b.map(|x| x + rest)
    }
}

/// Deterministic near-uniform points on the unit sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - y * y).sqrt();
            let t = golden * i as f64;
            Vec3::new(r * t.cos(), y, r * t.sin())
        })
        .collect()
}

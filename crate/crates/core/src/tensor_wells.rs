//! Wells, twin normals, construction gradients and the working frame.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Tensor = Matrix3<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum WellError {
    #[error("well indices must be distinct and in 1..=3, got ({0}, {1})")]
    BadIndex(usize, usize),
}

/// Symmetric 3x3 matrix stored by its six independent entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub yz: f64,
    pub xz: f64,
    pub xy: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor { xx: 0.0, yy: 0.0, zz: 0.0, yz: 0.0, xz: 0.0, xy: 0.0 };

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor { xx: a, yy: b, zz: c, yz: 0.0, xz: 0.0, xy: 0.0 }
    }

    /// Symmetric part (G + G^T)/2.
    pub fn sym(g: &Tensor) -> Self {
        SymTensor {
            xx: g[(0, 0)],
            yy: g[(1, 1)],
            zz: g[(2, 2)],
            yz: 0.5 * (g[(1, 2)] + g[(2, 1)]),
            xz: 0.5 * (g[(0, 2)] + g[(2, 0)]),
            xy: 0.5 * (g[(0, 1)] + g[(1, 0)]),
        }
    }

    pub fn to_matrix(&self) -> Tensor {
        Matrix3::new(
            self.xx, self.xy, self.xz, //
            self.xy, self.yy, self.yz, //
            self.xz, self.yz, self.zz,
        )
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.xx, self.yy, self.zz]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Frobenius inner product.
    pub fn dot(&self, o: &SymTensor) -> f64 {
        self.xx * o.xx
            + self.yy * o.yy
            + self.zz * o.zz
            + 2.0 * (self.yz * o.yz + self.xz * o.xz + self.xy * o.xy)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs_diff(&self, o: &SymTensor) -> f64 {
        let d = *self - *o;
        [d.xx, d.yy, d.zz, d.yz, d.xz, d.xy].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.yz.abs() <= tol && self.xz.abs() <= tol && self.xy.abs() <= tol
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    fn add(self, o: SymTensor) -> SymTensor {
        SymTensor {
            xx: self.xx + o.xx,
            yy: self.yy + o.yy,
            zz: self.zz + o.zz,
            yz: self.yz + o.yz,
            xz: self.xz + o.xz,
            xy: self.xy + o.xy,
        }
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    fn sub(self, o: SymTensor) -> SymTensor {
        self + (-o)
    }
}

impl Neg for SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        self * -1.0
    }
}

impl Mul<f64> for SymTensor {
    type Output = SymTensor;
    fn mul(self, s: f64) -> SymTensor {
        SymTensor {
            xx: self.xx * s,
            yy: self.yy * s,
            zz: self.zz * s,
            yz: self.yz * s,
            xz: self.xz * s,
            xy: self.xy * s,
        }
    }
}

impl fmt::Display for SymTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}, {}], [{}, {}, {}], [{}, {}, {}]]",
            self.xx, self.xy, self.xz, self.xy, self.yy, self.yz, self.xz, self.yz, self.zz
        )
    }
}

/// e(G), the linearised strain.
pub fn sym(g: &Tensor) -> SymTensor {
    SymTensor::sym(g)
}

pub fn outer(a: &Vec3, b: &Vec3) -> Tensor {
    a * b.transpose()
}

/// Orthonormal frame n, b32, d and the coordinates z = (x.n, x.b32, x.d).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub n: Vec3,
    pub b32: Vec3,
    pub d: Vec3,
}

impl Frame {
    pub fn standard() -> Self {
        let s6 = 6f64.sqrt();
        let s2 = 2f64.sqrt();
        let s3 = 3f64.sqrt();
        Frame {
            n: Vec3::new(-2.0 / s6, 1.0 / s6, 1.0 / s6),
            b32: Vec3::new(0.0, -1.0 / s2, 1.0 / s2),
            d: Vec3::new(1.0 / s3, 1.0 / s3, 1.0 / s3),
        }
    }

    pub fn to_frame(&self, x: &Vec3) -> [f64; 3] {
        [x.dot(&self.n), x.dot(&self.b32), x.dot(&self.d)]
    }

    pub fn from_frame(&self, z: [f64; 3]) -> Vec3 {
        self.n * z[0] + self.b32 * z[1] + self.d * z[2]
    }

    /// Rows are n, b32, d: maps standard coordinates to frame coordinates.
    pub fn rotation(&self) -> Tensor {
        Matrix3::from_rows(&[self.n.transpose(), self.b32.transpose(), self.d.transpose()])
    }
}

/// The three martensite variants e1, e2, e3.
pub fn wells() -> [SymTensor; 3] {
    [
        SymTensor::diag(-2.0, 1.0, 1.0),
        SymTensor::diag(1.0, -2.0, 1.0),
        SymTensor::diag(1.0, 1.0, -2.0),
    ]
}

/// e^A = e1/3 + 2 e2/3.
pub fn well_a() -> SymTensor {
    SymTensor::diag(0.0, -1.0, 1.0)
}

/// e^B = e1/3 + 2 e3/3.
pub fn well_b() -> SymTensor {
    SymTensor::diag(0.0, 1.0, -1.0)
}

/// Sign of the permutation (i, j, k) of (1, 2, 3); zero on repeated indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1.0,
        (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1.0,
        _ => 0.0,
    }
}

/// Twin normals b_ij, indexed from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalTable {
    b: [[Vec3; 3]; 3],
}

impl NormalTable {
    pub fn new() -> Self {
        let s = 1.0 / 2f64.sqrt();
        let z = Vec3::zeros();
        let mut b = [[z; 3]; 3];
        b[0][1] = Vec3::new(s, s, 0.0);
        b[1][0] = Vec3::new(-s, s, 0.0);
        b[2][0] = Vec3::new(s, 0.0, s);
        b[0][2] = Vec3::new(s, 0.0, -s);
        b[1][2] = Vec3::new(0.0, s, s);
        b[2][1] = Vec3::new(0.0, -s, s);
        NormalTable { b }
    }

    pub fn get(&self, i: usize, j: usize) -> Result<Vec3, WellError> {
        if !(1..=3).contains(&i) || !(1..=3).contains(&j) || i == j {
            return Err(WellError::BadIndex(i, j));
        }
        Ok(self.b[i - 1][j - 1])
    }

    /// B_ij = {b_ij, b_ji}.
    pub fn pair_set(&self, i: usize, j: usize) -> Result<[Vec3; 2], WellError> {
        Ok([self.get(i, j)?, self.get(j, i)?])
    }

    /// B_i = B_ij together with B_ik.
    pub fn normal_set(&self, i: usize) -> Result<[Vec3; 4], WellError> {
        if !(1..=3).contains(&i) {
            return Err(WellError::BadIndex(i, i));
        }
        let (j, k) = match i {
            1 => (2, 3),
            2 => (1, 3),
            _ => (1, 2),
        };
        let [a, b] = self.pair_set(i, j)?;
        let [c, d] = self.pair_set(i, k)?;
        Ok([a, b, c, d])
    }

    /// The six normals b12, b21, b13, b31, b23, b32 in that order.
    pub fn all(&self) -> [(usize, usize, Vec3); 6] {
        let pairs = [(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)];
        pairs.map(|(i, j)| (i, j, self.b[i - 1][j - 1]))
    }
}

impl Default for NormalTable {
    fn default() -> Self {
        Self::new()
    }
}

pub fn normal(i: usize, j: usize) -> Vec3 {
    NormalTable::new().get(i, j).expect("static index")
}

/// Both sides of e_i - e_j = 3 eps_ijk (b_ij x b_ji + b_ji x b_ij).
pub fn twin_identity(i: usize, j: usize) -> Result<(SymTensor, SymTensor), WellError> {
    let table = NormalTable::new();
    let bij = table.get(i, j)?;
    let bji = table.get(j, i)?;
    let k = 6 - i - j;
    let w = wells();
    let lhs = w[i - 1] - w[j - 1];
    let t = outer(&bij, &bji) + outer(&bji, &bij);
    let rhs = SymTensor::sym(&t) * (3.0 * levi_civita(i, j, k));
    Ok((lhs, rhs))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientSet {
    pub a1: Tensor,
    pub a2: Tensor,
    pub a: Tensor,
    pub b1: Tensor,
    pub b3: Tensor,
    pub b: Tensor,
}

pub fn construction_gradients() -> GradientSet {
    let a1 = Matrix3::new(-2.0, 2.0, 0.0, -2.0, 1.0, 1.0, 0.0, -1.0, 1.0);
    let a2 = Matrix3::new(1.0, -1.0, 0.0, 1.0, -2.0, 1.0, 0.0, -1.0, 1.0);
    let a = Matrix3::new(0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, -1.0, 1.0);
    let b1 = Matrix3::new(-2.0, 0.0, 2.0, 0.0, 1.0, -1.0, -2.0, 1.0, 1.0);
    let b3 = Matrix3::new(1.0, 0.0, -1.0, 0.0, 1.0, -1.0, 1.0, 1.0, -2.0);
    let b = Matrix3::new(0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 1.0, -1.0);
    GradientSet { a1, a2, a, b1, b3, b }
}

/// C, C2 = 3A/2 + C and C3 = 3B/2 + C.
pub fn thm4_gradients() -> (Tensor, Tensor, Tensor) {
    let g = construction_gradients();
    let c = Matrix3::from_diagonal(&Vec3::new(1.0, -0.5, -0.5));
    (c, g.a * 1.5 + c, g.b * 1.5 + c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaminationTag {
    Well,
    FirstOrder,
    SecondOrder,
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaminationClass {
    pub tag: LaminationTag,
    /// Barycentric weights with respect to e1, e2, e3 for diagonal trace-free input.
    pub lambda: Option<[f64; 3]>,
}

const CLASSIFY_TOL: f64 = 1e-10;

/// Lamination order of F relative to the three wells.
pub fn classify(f: &SymTensor) -> LaminationClass {
    let outside = LaminationClass { tag: LaminationTag::Outside, lambda: None };
    if !f.is_diagonal(1e-12) || f.trace().abs() > 1e-12 {
        return outside;
    }
    let lambda = f.diagonal().map(|v| (1.0 - v) / 3.0);
    let with = |tag| LaminationClass { tag, lambda: Some(lambda) };
    if wells().iter().any(|w| w.max_abs_diff(f) <= 1e-12) {
        return with(LaminationTag::Well);
    }
    if lambda.iter().any(|&l| l < -CLASSIFY_TOL) {
        return LaminationClass { tag: LaminationTag::Outside, lambda: Some(lambda) };
    }
    let zeros = lambda.iter().filter(|l| l.abs() <= CLASSIFY_TOL).count();
    match zeros {
        0 => with(LaminationTag::SecondOrder),
        1 => with(LaminationTag::FirstOrder),
        _ => with(LaminationTag::Well),
    }
}

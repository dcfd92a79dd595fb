//! Three-dimensional first-order construction for boundary data F = (e2 + e3)/2:
//! u(x) = 3/2 u1(max(|z1|, |z3|), z2) + C x with u1 the first-order field.

use crate::microstructure::locate::Locator;
use crate::microstructure::{
    first_order_laminate, frame, BranchParams, Microstructure, Phase,
};
use crate::tensor_wells::{normal, outer, thm4_gradients, SymTensor, Tensor, Vec3};

/// Pointwise data of a field: displacement, gradient and phase strain.
#[derive(Clone, Copy, Debug)]
pub struct Probe {
    pub u: Vec3,
    pub grad: Tensor,
    pub chi: SymTensor,
    /// identifies the phase for jump detection
    pub phase: Option<Phase>,
}

/// Anything that can be sampled pointwise in frame coordinates.
pub trait Field: Sync {
    fn probe(&self, z: [f64; 3]) -> Probe;
    /// True if the field does not depend on z3.
    fn d_constant(&self) -> bool;
    /// Smallest cell width, for resolution warnings.
    fn finest_width(&self) -> f64;
}

pub struct Thm4Field {
    pub base: Microstructure,
    locator: Locator,
    c: Tensor,
}

/// Evaluator of the three-dimensional construction (r2 is not used).
pub fn build_thm4(params: &BranchParams) -> Thm4Field {
    let base = first_order_laminate(params);
    let locator = base.locator();
    Thm4Field { base, locator, c: thm4_gradients().0 }
}

impl Thm4Field {
    pub fn params(&self) -> &BranchParams {
        &self.base.params
    }

    /// Boundary datum F.
    pub fn datum(&self) -> SymTensor {
        SymTensor::sym(&self.c)
    }

    pub fn evaluate(&self, x: &Vec3) -> (Vec3, SymTensor) {
        let p = self.probe(frame().to_frame(x));
        (p.u, p.chi)
    }
}

fn well_of(p: Phase) -> Phase {
    match p {
        Phase::AuxA => Phase::Well(2),
        Phase::AuxB => Phase::Well(3),
        w => w,
    }
}

impl Field for Thm4Field {
    fn probe(&self, z: [f64; 3]) -> Probe {
        let f = frame();
        let x = f.from_frame(z);
        let outside = z.iter().any(|c| c.abs() > 0.5);
        let t = z[0].abs().max(z[2].abs());
        let hit = if outside { None } else { self.locator.locate(&self.base, [t, z[1]]) };
        match hit {
            None => Probe { u: self.c * x, grad: self.c, chi: self.datum(), phase: None },
            Some(h) => {
                let b23 = normal(2, 3);
                let g = &h.cell.grad;
                let dpsi_t = b23.dot(&(g * f.n));
                let dpsi_s = b23.dot(&(g * f.b32));
                let radial = if z[0].abs() >= z[2].abs() { f.n * z[0].signum() } else { f.d * z[2].signum() };
                let grad_psi = radial * dpsi_t + f.b32 * dpsi_s;
                let u1 = h.cell.displacement([t, z[1]]);
                let phase = well_of(h.cell.phase);
                Probe {
                    u: u1 * 1.5 + self.c * x,
                    grad: outer(&b23, &grad_psi) * 1.5 + self.c,
                    chi: phase.strain(),
                    phase: Some(phase),
                }
            }
        }
    }

    fn d_constant(&self) -> bool {
        false
    }

    fn finest_width(&self) -> f64 {
        self.base.finest_width()
    }
}

impl Microstructure {
    /// Period of the finest laminate present.
    pub fn finest_width(&self) -> f64 {
        let mut w = f64::INFINITY;
        for b in &self.blocks {
            w = w.min(b.pitch);
            for it in &b.items {
                if let crate::microstructure::Item::Row(r) = it {
                    let kc = r.spec.k0(r.theta) + 1;
                    w = w.min(r.spec.w / 2f64.powi(kc as i32));
                }
            }
        }
        w
    }
}

impl Field for Microstructure {
    fn probe(&self, z: [f64; 3]) -> Probe {
        // callers that probe many points should hold a LocatedField instead
        LocatedField::new(self).probe(z)
    }

    fn d_constant(&self) -> bool {
        self.ramp.is_none()
    }

    fn finest_width(&self) -> f64 {
        Microstructure::finest_width(self)
    }
}

/// A microstructure together with its point locator.
pub struct LocatedField<'a> {
    pub ms: &'a Microstructure,
    locator: Locator,
}

impl<'a> LocatedField<'a> {
    pub fn new(ms: &'a Microstructure) -> Self {
        LocatedField { ms, locator: ms.locator() }
    }
}

impl Field for LocatedField<'_> {
    fn probe(&self, z: [f64; 3]) -> Probe {
        let zero = Probe { u: Vec3::zeros(), grad: Tensor::zeros(), chi: SymTensor::ZERO, phase: None };
        if z[2].abs() > 0.5 && self.ms.ramp.is_some() {
            return zero;
        }
        match self.locator.locate(self.ms, [z[0], z[1]]) {
            None => zero,
            Some(h) => {
                let (rho, drho) = self.ms.ramp_factor(z[2]);
                let u = h.cell.displacement([z[0], z[1]]);
                let grad = h.cell.grad * rho + outer(&u, &frame().d) * drho;
                Probe { u: u * rho, grad, chi: h.cell.phase.strain(), phase: Some(h.cell.phase) }
            }
        }
    }

    fn d_constant(&self) -> bool {
        self.ms.ramp.is_none()
    }

    fn finest_width(&self) -> f64 {
        self.ms.finest_width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::make_params;
    use crate::tensor_wells::sym;

    #[test]
    fn boundary_datum_and_strain() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let f = build_thm4(&p);
        let fz = f.datum();
        assert!(fz.max_abs_diff(&SymTensor::diag(1.0, -0.5, -0.5)) < 1e-15);
        // a face point: u = F x
        let z = [0.5, 0.13, -0.2];
        let x = frame().from_frame(z);
        let pr = f.probe(z);
        assert!((pr.u - fz.to_matrix() * x).norm() < 1e-12);
        // stress-free in a generation-0 A cell of the n sector
        let pr = f.probe([0.05, -0.5 + 0.01, 0.0]);
        assert!((sym(&pr.grad) - pr.chi).norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let f = build_thm4(&p);
        let fr = frame();
        for z in [[0.2, 0.017, 0.05], [0.03, 0.3, -0.31], [-0.41, -0.2, 0.1]] {
            let pr = f.probe(z);
            let x = fr.from_frame(z);
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = 1e-7;
                let up = f.probe(fr.to_frame(&(x + e))).u;
                let um = f.probe(fr.to_frame(&(x - e))).u;
                let fd = (up - um) / 2e-7;
                assert!((fd - pr.grad.column(k)).norm() < 1e-5, "z = {z:?}");
            }
        }
    }
}

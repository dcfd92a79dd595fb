//! Midpoint quadrature on a uniform frame-aligned grid over the unit box.

use rayon::prelude::*;

use super::{EnergyBreakdown, PER_OMEGA};
use crate::microstructure::thm4::{Field, LocatedField};
use crate::microstructure::{Kind, Microstructure, Phase};
use crate::tensor_wells::sym;

/// Fixed-shape pairwise sum, so results do not depend on thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn coord(i: usize, n: usize) -> f64 {
    -0.5 + (i as f64 + 0.5) / n as f64
}

struct Slab {
    elastic: f64,
    phases: Vec<Option<Phase>>,
}

fn jump(a: Option<Phase>, b: Option<Phase>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) if a != b => a.jump(&b),
        _ => 0.0,
    }
}

/// Elastic energy and face-jump surface estimate of `field` on an N^2 (d-constant fields) or
/// N^3 grid. The returned breakdown carries kind and parameters only when the caller fills them.
pub fn grid_energy(field: &dyn Field, eps: f64, n: usize) -> EnergyBreakdown {
    assert!(n >= 2, "grid needs at least two points per axis");
    let planar = field.d_constant();
    let depth = if planar { 1 } else { n };
    let h = 1.0 / n as f64;
    let vol = h * h * if planar { 1.0 } else { h };
    let face = if planar { h } else { h * h };

    // slabs of constant z1
    let slabs: Vec<Slab> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut phases = Vec::with_capacity(n * depth);
            let mut el = Vec::with_capacity(n);
            for k in 0..n {
                let mut line = 0.0;
                for l in 0..depth {
                    let z3 = if planar { 0.0 } else { coord(l, n) };
                    let p = field.probe([coord(i, n), coord(k, n), z3]);
                    line += (sym(&p.grad) - p.chi).norm_sq();
                    phases.push(p.phase);
                }
                el.push(line * vol);
            }
            Slab { elastic: pairwise_sum(&el), phases }
        })
        .collect();

    let idx = |k: usize, l: usize| k * depth + l;
    let surf: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = &slabs[i].phases;
            let mut acc = Vec::with_capacity(n);
            for k in 0..n {
                let mut line = 0.0;
                for l in 0..depth {
                    let here = s[idx(k, l)];
                    if i + 1 < n {
                        line += jump(here, slabs[i + 1].phases[idx(k, l)]);
                    }
                    if k + 1 < n {
                        line += jump(here, s[idx(k + 1, l)]);
                    }
                    if !planar && l + 1 < depth {
                        line += jump(here, s[idx(k, l + 1)]);
                    }
                }
                acc.push(line * face);
            }
            pairwise_sum(&acc)
        })
        .collect();

    let elastic = pairwise_sum(&slabs.iter().map(|s| s.elastic).collect::<Vec<_>>());
    let surface = pairwise_sum(&surf);
    let uncovered = slabs.iter().flat_map(|s| s.phases.iter()).filter(|p| p.is_none()).count();

    let mut warnings = Vec::new();
    let fw = field.finest_width();
    if fw < 2.0 * h {
        warnings.push(format!("grid under-resolved: finest width {fw:.3e} < 2/N = {:.3e}", 2.0 * h));
    }
    if uncovered > 0 {
        warnings.push(format!("{uncovered} grid points outside the support"));
    }
    EnergyBreakdown {
        kind: Kind::FirstOrderAux,
        theta: f64::NAN,
        r: f64::NAN,
        r2: f64::NAN,
        eps,
        j0: 0,
        cells: 0,
        elastic,
        surface,
        total: elastic + eps * surface,
        per_generation: Vec::new(),
        per_region: Vec::new(),
        per_omega: PER_OMEGA,
        method: format!("grid N={n}"),
        unmatched_length: 0.0,
        warnings,
    }
}

/// Grid energy of a cell-tiling microstructure, with its metadata filled in.
pub fn grid_energy_ms(ms: &Microstructure, eps: f64, n: usize) -> EnergyBreakdown {
    let mut b = grid_energy(&LocatedField::new(ms), eps, n);
    b.kind = ms.kind;
    b.theta = ms.params.theta;
    b.r = ms.params.r;
    b.r2 = ms.params.r2;
    b.j0 = ms.params.j0;
    b.cells = ms.cell_count() as u64;
    b
}

/// Grid energy of the three-dimensional construction.
pub fn grid_energy_thm4(f: &crate::microstructure::Thm4Field, eps: f64, n: usize) -> EnergyBreakdown {
    let mut b = grid_energy(f, eps, n);
    let p = f.params();
    b.kind = Kind::Thm4Simple;
    b.theta = p.theta;
    b.r = p.r;
    b.r2 = p.r2;
    b.j0 = p.j0;
    b.cells = f.base.cell_count() as u64;
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::total;
    use crate::microstructure::{first_order_laminate, make_params};

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }

    #[test]
    fn grid_elastic_approaches_exact() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let ms = first_order_laminate(&p);
        let exact = total(&ms, 0.0).unwrap().elastic;
        let g = grid_energy_ms(&ms, 0.0, 512);
        assert!((g.elastic - exact).abs() < 0.05 * exact, "{} vs {exact}", g.elastic);
    }

    #[test]
    fn partition_independent() {
        let p = make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap();
        let ms = first_order_laminate(&p);
        let a = grid_energy_ms(&ms, 0.1, 64);
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| grid_energy_ms(&ms, 0.1, 64));
        assert_eq!(a.elastic.to_bits(), b.elastic.to_bits());
        assert_eq!(a.surface.to_bits(), b.surface.to_bits());
    }
}

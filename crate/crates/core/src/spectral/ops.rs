use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::fft::{fft_nd, signed};
use super::symbols::{conical, fibonacci_sphere, m_matrix, union_cone, ConeSpec, Partition};
use super::{SpectralError, SpectralFields};
use crate::energy::grid::pairwise_sum;
use crate::energy::PER_OMEGA;
use crate::microstructure::thm4::{Field, LocatedField};
use crate::microstructure::{frame, Kind, Microstructure};
use crate::tensor_wells::{NormalTable, SymTensor, Vec3};

/// Normal labels in `NormalTable::all` order.
pub const LABELS: [&str; 6] = ["b12", "b21", "b13", "b31", "b23", "b32"];

/// Coefficient of f_b in chi_jj, rows j = 1..3, columns in `LABELS` order.
pub const SIGNS: [[i8; 6]; 3] = [[1, 1, -1, -1, 0, 0], [-1, -1, 0, 0, 1, 1], [0, 0, 1, 1, -1, -1]];

/// f_b = eta_b(D) chi_jj - eta_c(D) chi_kk encoded as (j, b, k, c).
const DECOMP: [(usize, usize, usize, usize); 6] =
    [(0, 0, 1, 3), (0, 1, 1, 2), (2, 2, 0, 5), (2, 3, 0, 4), (1, 4, 2, 0), (1, 5, 2, 1)];

const B12: [usize; 2] = [0, 1];
const B13: [usize; 2] = [2, 3];
const B23: [usize; 2] = [4, 5];

fn normals() -> [Vec3; 6] {
    NormalTable::new().all().map(|(_, _, b)| b)
}

fn slab_sum<F: Fn(usize) -> f64 + Sync>(s: &SpectralFields, f: F) -> f64 {
    let slab = s.n * s.n;
    let parts: Vec<f64> = (0..s.n)
        .into_par_iter()
        .map(|i| pairwise_sum(&(i * slab..(i + 1) * slab).map(&f).collect::<Vec<_>>()))
        .collect();
    pairwise_sum(&parts)
}

fn has_nyquist(s: &SpectralFields, x: usize) -> bool {
    let n = s.n;
    x / (n * n) == n / 2 || (x / n) % n == n / 2 || x % n == n / 2
}

/// Evaluates an even symbol at mode x. On Nyquist planes the bin is shared by k and a
/// reflected copy, so the two values are averaged to keep the output real.
fn even_symbol<T, F>(s: &SpectralFields, x: usize, f: F) -> T
where
    F: Fn(&Vec3) -> T,
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let k = s.wave(x);
    if !has_nyquist(s, x) {
        return f(&k);
    }
    let n = s.n;
    let m = [x / (n * n), (x / n) % n, x % n];
    let mirror = Vec3::from_fn(|a, _| -std::f64::consts::PI * signed((n - m[a]) % n, n) as f64);
    (f(&k) + f(&(s.frame_to_standard * mirror))) * 0.5
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FormValue {
    pub value: f64,
    /// spectral weight of the k = 0 mode, left out of the sum
    pub k0_weight: f64,
}

fn k0_weight(s: &SpectralFields) -> f64 {
    (0..3).map(|j| s.spectra[j][0].norm_sqr()).sum::<f64>() * s.measure()
}

pub fn multiplier_form_m(s: &SpectralFields) -> FormValue {
    let value = slab_sum(s, |x| {
        if x == 0 {
            return 0.0;
        }
        let m = m_matrix(&s.wave(x));
        let v = [s.spectra[0][x], s.spectra[1][x], s.spectra[2][x]];
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                acc += m[a][b] * (v[a].conj() * v[b]).re;
            }
        }
        acc
    }) * s.measure();
    FormValue { value, k0_weight: k0_weight(s) }
}

pub fn conical_form(s: &SpectralFields) -> FormValue {
    let value = slab_sum(s, |x| {
        if x == 0 {
            return 0.0;
        }
        let k = s.wave(x);
        (0..3).map(|j| conical(j + 1, &k) * s.spectra[j][x].norm_sqr()).sum()
    }) * s.measure();
    FormValue { value, k0_weight: k0_weight(s) }
}

/// A real field obtained by inverse transform; `max_imag` measures the discarded part.
#[derive(Clone, Debug)]
pub struct Projection {
    pub values: Vec<f64>,
    pub max_imag: f64,
}

fn synthesize<F: Fn(usize) -> Complex64 + Sync + Send>(s: &SpectralFields, f: F) -> Projection {
    let mut buf: Vec<Complex64> = (0..s.len()).into_par_iter().map(f).collect();
    fft_nd(&mut buf, s.n, 3, true);
    let scale = 1.0 / s.len() as f64;
    let max_imag = buf.iter().map(|v| (v.im * scale).abs()).fold(0.0, f64::max);
    Projection { values: buf.iter().map(|v| v.re * scale).collect(), max_imag }
}

/// Applies the smoothed cone indicator of `spec` to field j.
pub fn cone_project(s: &SpectralFields, j: usize, spec: &ConeSpec) -> Projection {
    synthesize(s, |x| s.spectra[j][x] * even_symbol(s, x, |k| spec.symbol(k)))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residual {
    pub mu: f64,
    pub mu2: f64,
    pub residual: f64,
    pub budget: f64,
    pub ratio: f64,
}

/// sum_j ||(1 - chi_{j,mu,mu2}(D)) chi_jj||^2 against mu^-2 E_el + mu2^-1 (E_surf + Per).
pub fn localization_residual(s: &SpectralFields, mu: f64, mu2: f64, width: f64, elastic: f64, surface: f64) -> Residual {
    let residual = slab_sum(s, |x| {
        (0..3)
            .map(|j| {
                let keep = even_symbol(s, x, |k| union_cone(j + 1, k, mu, mu2, width));
                (1.0 - keep).powi(2) * s.spectra[j][x].norm_sqr()
            })
            .sum()
    }) * s.measure();
    let budget = elastic / (mu * mu) + (surface + PER_OMEGA) / mu2;
    Residual { mu, mu2, residual, budget, ratio: residual / budget }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LowFreq {
    pub mass: f64,
    /// "transverse" (continuous transform) or "lattice"
    pub method: &'static str,
}

fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, intervals: usize, f: F) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Fraction of the L2 mass of field j with |k|^2 - (k.b)^2 <= nu^2.
///
/// For b along a frame axis and z3-independent fields the transverse transform is evaluated
/// in closed form along z3 and by direct summation in-plane, treating samples as voxels. The
/// lattice alone cannot resolve nu below its spacing pi. Other directions use lattice sums.
pub fn low_freq_mass(s: &SpectralFields, j: usize, b: &Vec3, nu: f64) -> LowFreq {
    let bf = frame().to_frame(&b.normalize());
    let axis = (0..2).find(|&a| bf[a].abs() > 1.0 - 1e-12);
    match (&s.planar, axis) {
        (Some(g), Some(a)) => LowFreq { mass: transverse_mass(s.n, &g[j], a, nu), method: "transverse" },
        _ => {
            let bh = b.normalize();
            let inside = slab_sum(s, |x| {
                let k = s.wave(x);
                if k.norm_squared() - k.dot(&bh).powi(2) <= nu * nu {
                    s.spectra[j][x].norm_sqr()
                } else {
                    0.0
                }
            });
            let all = slab_sum(s, |x| s.spectra[j][x].norm_sqr());
            LowFreq { mass: if all > 0.0 { inside / all } else { 0.0 }, method: "lattice" }
        }
    }
}

fn transverse_mass(n: usize, g: &[f64], axis: usize, nu: f64) -> f64 {
    let h = 2.0 / n as f64;
    let coords: Vec<f64> = (0..n).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
    let total = g.iter().map(|v| v * v).sum::<f64>() * h * h;
    if total == 0.0 {
        return 0.0;
    }
    // rows indexed by the coordinate along b, summed over the other in-plane coordinate
    let at = |a_idx: usize, p_idx: usize| if axis == 1 { g[p_idx * n + a_idx] } else { g[a_idx * n + p_idx] };
    let q = |kappa: f64| -> f64 {
        let ph: Vec<Complex64> = coords.iter().map(|&z| Complex64::from_polar(h * sinc(kappa * h / 2.0), -kappa * z)).collect();
        (0..n)
            .map(|a| {
                let amp: Complex64 = (0..n).map(|p| ph[p] * at(a, p)).sum();
                amp.norm_sqr() * h
            })
            .sum()
    };
    // integral of |FT of the z3 indicator|^2 over [-t, t]
    let w = |t: f64| 2.0 * simpson(0.0, t, 200, |x| sinc(x / 2.0).powi(2));
    let intervals = 256.max((8.0 * nu).ceil() as usize);
    let half = std::f64::consts::FRAC_PI_2;
    let integral = simpson(-half, half, intervals, |phi| q(nu * phi.sin()) * w(nu * phi.cos()) * nu * phi.cos());
    integral / (4.0 * std::f64::consts::PI.powi(2)) / total
}

/// Direction-resolved fields, optionally localized to truncated cones around each normal.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConeRadii {
    pub mu: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub width: f64,
}

fn direction_fields(s: &SpectralFields, part: &Partition, which: &[usize], cone: Option<ConeRadii>) -> Vec<(usize, Projection)> {
    let bs = normals();
    which
        .iter()
        .map(|&b| {
            let (j, eb, kk, ec) = DECOMP[b];
            let spec = cone.map(|c| {
                let base = ConeSpec::new(bs[b], c.mu, c.mu2, c.width);
                if c.mu3 > 0.0 {
                    base.annular(c.mu3)
                } else {
                    base
                }
            });
            let p = synthesize(s, |x| {
                let (we, wc) = even_symbol(s, x, |k| {
                    let w = part.weights(k);
                    let c = spec.map_or(1.0, |sp| sp.symbol(k));
                    Pair(w[eb] * c, w[ec] * c)
                })
                .into();
                s.spectra[j][x] * we - s.spectra[kk][x] * wc
            });
            (b, p)
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Pair(f64, f64);

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, t: f64) -> Pair {
        Pair(self.0 * t, self.1 * t)
    }
}

impl From<Pair> for (f64, f64) {
    fn from(p: Pair) -> (f64, f64) {
        (p.0, p.1)
    }
}

pub fn check_partition(part: &Partition) -> Result<f64, SpectralError> {
    let err = fibonacci_sphere(10_000)
        .iter()
        .map(|k| (part.weights(k).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    if err > 1e-10 {
        return Err(SpectralError::Partition(err));
    }
    Ok(err)
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// f_b in `LABELS` order
    pub fields: Vec<Vec<f64>>,
    /// max |chi_jj - sum_b sign f_b| per j
    pub reconstruction: [f64; 3],
    pub max_imag: f64,
    pub partition_error: f64,
}

pub fn decompose_directions(s: &SpectralFields, part: &Partition) -> Result<Decomposition, SpectralError> {
    let partition_error = check_partition(part)?;
    let proj = direction_fields(s, part, &[0, 1, 2, 3, 4, 5], None);
    let max_imag = proj.iter().map(|p| p.1.max_imag).fold(0.0, f64::max);
    let fields: Vec<Vec<f64>> = proj.into_iter().map(|p| p.1.values).collect();
    let reconstruction = std::array::from_fn(|j| {
        (0..s.len())
            .map(|x| {
                let rec: f64 = (0..6).map(|b| SIGNS[j][b] as f64 * fields[b][x]).sum();
                (s.real[j][x] - rec).abs()
            })
            .fold(0.0, f64::max)
    });
    Ok(Decomposition { fields, reconstruction, max_imag, partition_error })
}

/// Grid integral of chi11 chi22 chi33.
pub fn trilinear(s: &SpectralFields) -> f64 {
    slab_sum(s, |x| s.real[0][x] * s.real[1][x] * s.real[2][x]) * s.h.powi(3)
}

/// Exact cell sum of area * prod_j (chi_jj - F_jj).
pub fn trilinear_cells(ms: &Microstructure, f: &SymTensor) -> f64 {
    let fd = f.diagonal();
    let mut terms = Vec::new();
    for b in &ms.blocks {
        for c in b.leaf_cells() {
            let d = c.phase.strain().diagonal();
            terms.push(c.poly.area() * b.copies as f64 * (d[0] - fd[0]) * (d[1] - fd[1]) * (d[2] - fd[2]));
        }
    }
    pairwise_sum(&terms)
}

/// Midpoint rule for the trilinear integral on an N^2 grid over the unit box, without spectra.
pub fn trilinear_grid(ms: &Microstructure, f: &SymTensor, n: usize) -> Result<f64, SpectralError> {
    if ms.kind == Kind::Thm4Simple {
        return Err(SpectralError::NotCellTiling(ms.kind));
    }
    let fd = f.diagonal();
    let field = LocatedField::new(ms);
    let h = 1.0 / n as f64;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let z1 = -0.5 + (i as f64 + 0.5) * h;
            let v: Vec<f64> = (0..n)
                .map(|k| {
                    let z2 = -0.5 + (k as f64 + 0.5) * h;
                    let d = field.probe([z1, z2, 0.0]).phase.map_or(fd, |p| p.strain().diagonal());
                    (d[0] - fd[0]) * (d[1] - fd[1]) * (d[2] - fd[2])
                })
                .collect();
            pairwise_sum(&v)
        })
        .collect();
    Ok(pairwise_sum(&rows) * h * h)
}

pub fn triple_name(t: &[usize; 3]) -> String {
    format!("({}, {}, {})", LABELS[t[0]], LABELS[t[1]], LABELS[t[2]])
}

fn in_normal_set(j: usize, b: usize) -> bool {
    SIGNS[j][b] != 0
}

/// Triples b1 in B1, b2 in B2, b3 in B3 except those patterned B12 x B23 x B13 and
/// B13 x B12 x B23, whose contributions cancel in pairs.
pub fn tilde_b() -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..6 {
        for b in 0..6 {
            for c in 0..6 {
                if !(in_normal_set(0, a) && in_normal_set(1, b) && in_normal_set(2, c)) {
                    continue;
                }
                let first = B12.contains(&a) && B23.contains(&b) && B13.contains(&c);
                let second = B13.contains(&a) && B12.contains(&b) && B23.contains(&c);
                if !first && !second {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// The discarded triples paired as (b1, b2, b3) with (b3, b1, b2).
pub fn discarded_pairs() -> Vec<([usize; 3], [usize; 3])> {
    let mut out = Vec::new();
    for &a in &B12 {
        for &b in &B23 {
            for &c in &B13 {
                out.push(([a, b, c], [c, a, b]));
            }
        }
    }
    out
}

/// A basis, or exactly two equal entries.
pub fn triple_admissible(t: &[usize; 3]) -> bool {
    let equal = (t[0] == t[1]) as u8 + (t[1] == t[2]) as u8 + (t[0] == t[2]) as u8;
    match equal {
        0 => {
            let b = normals();
            b[t[0]].dot(&b[t[1]].cross(&b[t[2]])).abs() > 1e-9
        }
        1 => true,
        _ => false,
    }
}

fn sign(t: &[usize; 3]) -> f64 {
    (SIGNS[0][t[0]] * SIGNS[1][t[1]] * SIGNS[2][t[2]]) as f64
}

fn triple_integral(s: &SpectralFields, proj: &[Option<Vec<f64>>], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (
        proj[t[0]].as_ref().expect("projected"),
        proj[t[1]].as_ref().expect("projected"),
        proj[t[2]].as_ref().expect("projected"),
    );
    sign(t) * slab_sum(s, |x| a[x] * b[x] * c[x]) * s.h.powi(3)
}

fn project_all(s: &SpectralFields, part: &Partition, which: &[usize], cone: ConeRadii) -> Vec<Option<Vec<f64>>> {
    let mut out = vec![None; 6];
    for (b, p) in direction_fields(s, part, which, Some(cone)) {
        out[b] = Some(p.values);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleValue {
    pub triple: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cancellation {
    pub first: String,
    pub second: String,
    pub values: [f64; 2],
    /// |v1 + v2| / (|v1| + |v2|), zero when both vanish
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Localized {
    pub radii: ConeRadii,
    pub triples: Vec<TripleValue>,
    pub tilde_sum: f64,
    /// sum over all of B1 x B2 x B3
    pub full_sum: f64,
    pub raw: f64,
    /// |raw - tilde_sum|
    pub residual: f64,
    pub budget: f64,
    pub cancellation: Vec<Cancellation>,
}

fn check_radii(r: &ConeRadii) -> Result<(), SpectralError> {
    if !(r.mu > 0.0 && r.mu < 1.0 && r.mu2 > 0.0 && r.mu3 >= 0.0 && r.mu3 < r.mu2 && r.width > 0.0 && r.width < 1.0) {
        return Err(SpectralError::BadRadii(format!("{r:?}")));
    }
    Ok(())
}

/// Per-triple integrals of the cone-localized direction fields. The budget adds mu3^2 for the
/// discarded low frequencies to the localization budget.
pub fn trilinear_localized(
    s: &SpectralFields,
    part: &Partition,
    radii: ConeRadii,
    mu0: f64,
    elastic: f64,
    surface: f64,
) -> Result<Localized, SpectralError> {
    check_radii(&radii)?;
    if radii.mu >= mu0 {
        return Err(SpectralError::BadRadii(format!("mu = {} must stay below mu0 = {mu0}", radii.mu)));
    }
    check_partition(part)?;
    let proj = project_all(s, part, &[0, 1, 2, 3, 4, 5], radii);
    let tb = tilde_b();
    let triples: Vec<TripleValue> =
        tb.iter().map(|t| TripleValue { triple: triple_name(t), value: triple_integral(s, &proj, t) }).collect();
    let tilde_sum = pairwise_sum(&triples.iter().map(|t| t.value).collect::<Vec<_>>());
    let mut cancellation = Vec::new();
    let mut discarded = Vec::new();
    for (a, b) in discarded_pairs() {
        let values = [triple_integral(s, &proj, &a), triple_integral(s, &proj, &b)];
        discarded.extend(values);
        let scale = values[0].abs() + values[1].abs();
        let relative = if scale > 0.0 { (values[0] + values[1]).abs() / scale } else { 0.0 };
        cancellation.push(Cancellation { first: triple_name(&a), second: triple_name(&b), values, relative });
    }
    let full_sum = tilde_sum + pairwise_sum(&discarded);
    let raw = trilinear(s);
    let budget = elastic / radii.mu.powi(2) + (surface + PER_OMEGA) / radii.mu2 + radii.mu3.powi(2);
    Ok(Localized { radii, triples, tilde_sum, full_sum, raw, residual: (raw - tilde_sum).abs(), budget, cancellation })
}

fn l3_product(s: &SpectralFields) -> f64 {
    (0..3).map(|j| s.lp_norm(j, 3.0)).product()
}

fn vanishing_radii(mu: f64, mu2: f64, m: f64, width: f64) -> Result<ConeRadii, SpectralError> {
    let r = ConeRadii { mu, mu2, mu3: m * mu * mu2, width };
    check_radii(&r)?;
    Ok(r)
}

/// Normalized |integral| of the annular-cone-localized triple with inner radius M mu mu2.
pub fn vanishing_check(
    s: &SpectralFields,
    part: &Partition,
    t: [usize; 3],
    mu: f64,
    mu2: f64,
    m: f64,
    width: f64,
) -> Result<f64, SpectralError> {
    if !triple_admissible(&t) {
        return Err(SpectralError::RejectedTriple(triple_name(&t)));
    }
    let radii = vanishing_radii(mu, mu2, m, width)?;
    let mut which = t.to_vec();
    which.sort_unstable();
    which.dedup();
    let proj = project_all(s, part, &which, radii);
    let norm = l3_product(s);
    Ok(if norm > 0.0 { triple_integral(s, &proj, &t).abs() / norm } else { 0.0 })
}

/// `vanishing_check` for every triple of tilde-B, sharing the projections.
pub fn vanishing_all(s: &SpectralFields, part: &Partition, mu: f64, mu2: f64, m: f64, width: f64) -> Result<Vec<TripleValue>, SpectralError> {
    let radii = vanishing_radii(mu, mu2, m, width)?;
    let tb = tilde_b();
    if let Some(bad) = tb.iter().find(|t| !triple_admissible(t)) {
        return Err(SpectralError::RejectedTriple(triple_name(bad)));
    }
    let proj = project_all(s, part, &[0, 1, 2, 3, 4, 5], radii);
    let norm = l3_product(s);
    Ok(tb
        .iter()
        .map(|t| TripleValue {
            triple: triple_name(t),
            value: if norm > 0.0 { triple_integral(s, &proj, t).abs() / norm } else { 0.0 },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::{assemble_full, make_params};
    use crate::spectral::sample_fields;
    use crate::tensor_wells::normal;

    fn acceptance() -> Microstructure {
        assemble_full(&make_params(0.4, 0.125, 1.0 / 64.0, 0.0).unwrap())
    }

    fn box_fields(n: usize) -> SpectralFields {
        let h = 2.0 / n as f64;
        let g: Vec<f64> = (0..n * n)
            .map(|x| {
                let (a, b) = (-1.0 + (x / n) as f64 * h + h / 2.0, -1.0 + (x % n) as f64 * h + h / 2.0);
                if a.abs() < 0.5 && b.abs() < 0.5 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        SpectralFields::from_planar([g.clone(), g.iter().map(|v| -v).collect(), vec![0.0; n * n]], n, [0.0; 3]).unwrap()
    }

    #[test]
    fn tilde_b_has_48_admissible_triples() {
        let tb = tilde_b();
        assert_eq!(tb.len(), 48);
        assert!(tb.iter().all(triple_admissible));
        // every linearly dependent distinct triple is among the discarded ones
        let dependent = discarded_pairs().iter().flat_map(|(a, b)| [*a, *b]).filter(|t| !triple_admissible(t)).count();
        assert!(dependent > 0);
        assert!(!triple_admissible(&[0, 4, 2]));
        assert!(!triple_admissible(&[1, 1, 1]));
    }

    #[test]
    fn discarded_pairs_have_opposite_signs() {
        for (a, b) in discarded_pairs() {
            assert_eq!(sign(&a), -sign(&b));
        }
    }

    #[test]
    fn forms_nonnegative_and_zero_on_zero_fields() {
        let s = sample_fields(&acceptance(), &SymTensor::ZERO, 64).unwrap();
        assert!(multiplier_form_m(&s).value > 0.0);
        assert!(conical_form(&s).value > 0.0);
        let z = SpectralFields::from_planar([vec![0.0; 4096], vec![0.0; 4096], vec![0.0; 4096]], 64, [0.0; 3]).unwrap();
        assert_eq!(conical_form(&z).value, 0.0);
        assert_eq!(multiplier_form_m(&z).value, 0.0);
        let r = localization_residual(&z, 0.2, 40.0, 0.25, 0.0, 0.0);
        assert_eq!(r.residual, 0.0);
        assert!((r.budget - PER_OMEGA / 40.0).abs() < 1e-15);
    }

    #[test]
    fn projection_is_real_and_contracts() {
        let s = box_fields(64);
        let spec = ConeSpec::new(normal(3, 2), 0.3, 30.0, 0.25).annular(3.0);
        let p = cone_project(&s, 0, &spec);
        assert!(p.max_imag < 1e-10, "{}", p.max_imag);
        let e_in: f64 = s.real[0].iter().map(|v| v * v).sum();
        let e_out: f64 = p.values.iter().map(|v| v * v).sum();
        assert!(e_out <= e_in);
        // axis off the lattice, so few modes sit in the transition band near sin = 1
        let id = ConeSpec::new(normal(1, 2), 0.9999, 1e6, 1e-4);
        let q = cone_project(&s, 0, &id);
        let err: f64 = q.values.iter().zip(&s.real[0]).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(err < 5e-3 * e_in, "{err} vs {e_in}");
    }

    #[test]
    fn residual_monotone() {
        let s = box_fields(64);
        let a = localization_residual(&s, 0.1, 20.0, 0.25, 1.0, 1.0).residual;
        let b = localization_residual(&s, 0.2, 20.0, 0.25, 1.0, 1.0).residual;
        let c = localization_residual(&s, 0.2, 40.0, 0.25, 1.0, 1.0).residual;
        assert!(a >= b && b >= c, "{a} {b} {c}");
    }

    #[test]
    fn low_freq_of_box_grows_quadratically() {
        let s = box_fields(64);
        let b = normal(3, 2);
        let nus = [0.5, 1.0, 2.0];
        let m: Vec<f64> = nus.iter().map(|&nu| low_freq_mass(&s, 0, &b, nu).mass).collect();
        assert!(m.windows(2).all(|w| w[0] < w[1]));
        // for small nu the mass is nu^2 |Omega| / (4 pi) up to O(nu^4)
        let lead = 0.25 / (4.0 * std::f64::consts::PI);
        assert!((m[0] / lead - 1.0).abs() < 0.05, "{} vs {lead}", m[0]);
        let big = low_freq_mass(&s, 0, &b, 400.0).mass;
        assert!((big - 1.0).abs() < 0.01, "{big}");
        assert_eq!(low_freq_mass(&s, 0, &normal(1, 2), 1e3).method, "lattice");
    }

    #[test]
    fn decomposition_reconstructs() {
        let s = sample_fields(&acceptance(), &SymTensor::ZERO, 64).unwrap();
        let d = decompose_directions(&s, &Partition::new(25.0, 0.25)).unwrap();
        assert!(d.max_imag < 1e-10, "{}", d.max_imag);
        for r in d.reconstruction {
            assert!(r < 1e-8, "{r}");
        }
    }

    #[test]
    fn trilinear_cells_is_minus_two() {
        let ms = acceptance();
        assert!((trilinear_cells(&ms, &SymTensor::ZERO) + 2.0).abs() < 1e-10);
        assert!((trilinear_grid(&ms, &SymTensor::ZERO, 256).unwrap() + 2.0).abs() < 1e-10);
    }

    #[test]
    fn vanishing_rejects_dependent_triples() {
        let s = box_fields(64);
        let p = Partition::new(25.0, 0.25);
        let e = vanishing_check(&s, &p, [0, 4, 2], 0.1, 16.0 * std::f64::consts::PI, 8.0, 0.25);
        assert!(matches!(e, Err(SpectralError::RejectedTriple(_))));
    }
}

//! [001] superlattices built plane by plane from the bulk two-centre
//! blocks.
//!
//! Monolayer `n` holds anion `n` and, a quarter cell above it, cation `n`.
//! Anion `n` bonds upward (τ₁, τ₂) to cation `n` and downward (τ₃, τ₄) to
//! cation `n−1`, cyclically. Every bond uses the parameters of the compound
//! its cation belongs to; an anion between two different compounds gets the
//! mean of their anion on-site blocks. Phases are taken at the true atomic
//! positions, so the period-closing coupling needs no separate Bloch factor.
//!
//! Wave vectors for superlattices use in-plane components in units of
//! 2π/a_∥ and the axial component in units of π/L, with L the period length.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bulk::{onsite_block, two_center_block, ZB_BOND_SIGNS};
use crate::eigen::{eigh, eigvalsh};
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::model::{Material, MaterialDb, OipSet, WaveVector};
use crate::properties::{gap_report, GapReport, KSample, GAMMA_LABEL};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Periods up to this many monolayers are diagonalized densely; longer ones
/// go through the block inertia count.
pub const DENSE_MAX_MONOLAYERS: usize = 40;

/// Bisection stops once the bracket is this narrow (eV).
pub const BISECTION_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub material: String,
    pub monolayers: usize,
}

/// One period, bottom to top.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let s = LayerStack { layers };
        s.validate()?;
        Ok(s)
    }

    /// `(A)m/(B)n`.
    pub fn binary(a: &str, m: usize, b: &str, n: usize) -> Result<Self> {
        Self::new(vec![
            Layer { material: a.to_owned(), monolayers: m },
            Layer { material: b.to_owned(), monolayers: n },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.layers.iter().find(|l| l.monolayers == 0) {
            return Err(Error::Argument(format!("layer `{}` has zero monolayers", l.material)));
        }
        if self.total_monolayers() < 2 {
            return Err(Error::Argument("a period needs at least two monolayers".into()));
        }
        Ok(())
    }

    pub fn total_monolayers(&self) -> usize {
        self.layers.iter().map(|l| l.monolayers).sum()
    }

    /// The period repeated `times` times.
    pub fn repeated(&self, times: usize) -> LayerStack {
        LayerStack { layers: self.layers.iter().cloned().cycle().take(self.layers.len() * times).collect() }
    }

    /// Material name of each monolayer.
    pub fn monolayer_materials(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().flat_map(|l| std::iter::repeat_n(l.material.as_str(), l.monolayers))
    }
}

impl fmt::Display for LayerStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.layers.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "({}){}", l.material, l.monolayers)?;
        }
        Ok(())
    }
}

/// Parses `GaAs:9,AlAs:4` (`/` also separates layers).
impl FromStr for LayerStack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let layers = s
            .split([',', '/'])
            .map(|part| {
                let (name, count) = part
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Argument(format!("layer `{part}` is not of the form MATERIAL:MONOLAYERS")))?;
                let monolayers = count
                    .trim()
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad monolayer count `{count}`")))?;
                let material = name.trim();
                if material.is_empty() {
                    return Err(Error::Argument(format!("layer `{part}` has no material")));
                }
                Ok(Layer { material: material.to_owned(), monolayers })
            })
            .collect::<Result<Vec<_>>>()?;
        LayerStack::new(layers)
    }
}

/// Geometry and interface conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlOptions {
    /// In-plane lattice constant; the first layer's material when unset.
    pub substrate_lattice_constant: Option<f64>,
    /// Pseudomorphic tetragonal distortion of the layers.
    pub strain: bool,
    /// `a_⊥ = a₀[1 − D(a_∥/a₀ − 1)]`, `D = 2C₁₂/C₁₁`.
    pub distortion_coefficient: f64,
    /// Two-centre terms scale as `(d₀/d)^η`; 0 disables the scaling.
    pub beta_exponent: f64,
    /// Rigid on-site shift per material (eV).
    pub energy_shifts: BTreeMap<String, f64>,
}

impl Default for SlOptions {
    fn default() -> Self {
        SlOptions {
            substrate_lattice_constant: None,
            strain: true,
            distortion_coefficient: 0.9,
            beta_exponent: 2.0,
            energy_shifts: BTreeMap::new(),
        }
    }
}

/// One anion→cation bond of the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub anion_plane: usize,
    pub cation_plane: usize,
    /// Index into [`SlGeometry::materials`].
    pub material: usize,
    /// Å.
    pub vector: [f64; 3],
    pub length: f64,
    pub ideal_length: f64,
    pub beta: f64,
    pub cosines: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlGeometry {
    pub a_par: f64,
    /// Period length along [001] (Å).
    pub period_length: f64,
    pub materials: Vec<Material>,
    /// Material index of each monolayer.
    pub plane_material: Vec<usize>,
    /// Four per anion, anion-major.
    pub bonds: Vec<Bond>,
    pub energy_shifts: Vec<f64>,
}

impl SlGeometry {
    pub fn monolayers(&self) -> usize {
        self.plane_material.len()
    }

    pub fn dim(&self) -> usize {
        10 * self.monolayers()
    }

    /// Cartesian wave vector (Å⁻¹) of a superlattice-unit `k`.
    pub fn cartesian(&self, k: &WaveVector) -> [f64; 3] {
        let g = 2.0 * PI / self.a_par;
        [k.kx * g, k.ky * g, k.kz * PI / self.period_length]
    }

    /// `exp(i k·d)` for every bond.
    pub fn bond_phases(&self, k: &WaveVector) -> Vec<C> {
        let kc = self.cartesian(k);
        self.bonds
            .iter()
            .map(|b| C::from_polar(1.0, kc[0] * b.vector[0] + kc[1] * b.vector[1] + kc[2] * b.vector[2]))
            .collect()
    }
}

pub fn build_sl_geometry(stack: &LayerStack, db: &MaterialDb, options: &SlOptions) -> Result<SlGeometry> {
    stack.validate()?;
    let mut materials: Vec<Material> = Vec::new();
    let mut plane_material = Vec::with_capacity(stack.total_monolayers());
    for name in stack.monolayer_materials() {
        let idx = match materials.iter().position(|m| m.name == name) {
            Some(i) => i,
            None => {
                let m = db.get(name)?;
                m.validate().into_result()?;
                materials.push(m.clone());
                materials.len() - 1
            }
        };
        plane_material.push(idx);
    }
    geometry_from_planes(materials, plane_material, options)
}

/// Geometry for explicit per-monolayer materials (used for alloys, which
/// are not in any database).
pub fn geometry_from_planes(materials: Vec<Material>, plane_material: Vec<usize>, options: &SlOptions) -> Result<SlGeometry> {
    let n = plane_material.len();
    if n < 2 {
        return Err(Error::Argument("a period needs at least two monolayers".into()));
    }
    let a_par = options.substrate_lattice_constant.unwrap_or(materials[plane_material[0]].lattice_constant);
    if !(a_par > 0.0 && a_par.is_finite()) {
        return Err(Error::Argument(format!("substrate lattice constant {a_par} must be positive")));
    }
    if !options.distortion_coefficient.is_finite() || !options.beta_exponent.is_finite() {
        return Err(Error::Argument("strain options must be finite".into()));
    }
    let a_perp: Vec<f64> = materials
        .iter()
        .map(|m| {
            let a0 = m.lattice_constant;
            if options.strain {
                a0 * (1.0 - options.distortion_coefficient * (a_par / a0 - 1.0))
            } else {
                a_par
            }
        })
        .collect();

    let mut bonds = Vec::with_capacity(4 * n);
    for plane in 0..n {
        for signs in ZB_BOND_SIGNS {
            let up = signs[2] > 0.0;
            let cation_plane = if up { plane } else { (plane + n - 1) % n };
            let mi = plane_material[cation_plane];
            let vector = [signs[0] * a_par / 4.0, signs[1] * a_par / 4.0, signs[2] * a_perp[mi] / 4.0];
            let length2: f64 = vector.iter().map(|x| x * x).sum();
            let a0 = materials[mi].lattice_constant;
            let ideal2 = (a0 / 4.0) * (a0 / 4.0) * 3.0;
            let length = length2.sqrt();
            bonds.push(Bond {
                anion_plane: plane,
                cation_plane,
                material: mi,
                vector,
                length,
                ideal_length: ideal2.sqrt(),
                beta: (ideal2 / length2).powf(0.5 * options.beta_exponent),
                cosines: vector.map(|x| x / length),
            });
        }
    }
    let period_length = plane_material.iter().map(|&m| a_perp[m] / 2.0).sum();
    let energy_shifts = materials.iter().map(|m| options.energy_shifts.get(&m.name).copied().unwrap_or(0.0)).collect();
    Ok(SlGeometry { a_par, period_length, materials, plane_material, bonds, energy_shifts })
}

type Block5 = [[C; 5]; 5];

/// Parameter-dependent pieces: on-site blocks per plane (spin-orbit
/// included) and the β-scaled two-centre block of every bond.
#[derive(Debug, Clone, PartialEq)]
pub struct SlBlocks {
    pub h_aa: Vec<Block5>,
    pub h_cc: Vec<Block5>,
    pub h_ac: Vec<[[f64; 5]; 5]>,
}

impl SlBlocks {
    /// `oips[i]` parameterizes `geometry.materials[i]`.
    pub fn build(geometry: &SlGeometry, oips: &[OipSet]) -> Result<Self> {
        if oips.len() != geometry.materials.len() {
            return Err(Error::Argument(format!(
                "expected {} parameter sets, got {}",
                geometry.materials.len(),
                oips.len()
            )));
        }
        for o in oips {
            o.validate().into_result()?;
        }
        let n = geometry.monolayers();
        let anion = |i: usize| {
            let o = &oips[i];
            shifted(onsite_block(o.e_sa, o.e_pa, o.e_ssa, o.delta_a), geometry.energy_shifts[i])
        };
        let h_aa = (0..n)
            .map(|p| {
                let (above, below) = (geometry.plane_material[p], geometry.plane_material[(p + n - 1) % n]);
                if above == below {
                    anion(above)
                } else {
                    let (x, y) = (anion(above), anion(below));
                    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (x[i][j] + y[i][j])))
                }
            })
            .collect();
        let h_cc = (0..n)
            .map(|p| {
                let i = geometry.plane_material[p];
                let o = &oips[i];
                shifted(onsite_block(o.e_sc, o.e_pc, o.e_ssc, o.delta_c), geometry.energy_shifts[i])
            })
            .collect();
        let h_ac = geometry
            .bonds
            .iter()
            .map(|b| two_center_block(&oips[b.material], b.vector).map(|row| row.map(|x| x * b.beta)))
            .collect();
        Ok(SlBlocks { h_aa, h_cc, h_ac })
    }
}

fn shifted(mut b: Block5, shift: f64) -> Block5 {
    for (i, row) in b.iter_mut().enumerate() {
        row[i].re += shift;
    }
    b
}

/// A 10×10 monolayer block, row-major.
type Block = [C; 100];

/// Block-tridiagonal Hamiltonian with a corner block closing the period.
#[derive(Debug, Clone, PartialEq)]
pub struct SlHamiltonian {
    /// Monolayer on-site blocks (anion, cation and their bonds).
    pub diag: Vec<Block>,
    /// `upper[n]` couples monolayer `n` (rows) to `n + 1` (columns).
    pub upper: Vec<Block>,
    /// Couples monolayer `N−1` (rows) to monolayer 0 (columns).
    pub corner: Block,
}

pub fn build_sl_hamiltonian(geometry: &SlGeometry, blocks: &SlBlocks, k: &WaveVector) -> Result<SlHamiltonian> {
    if !k.is_finite() {
        return Err(Error::Domain("superlattice wave vector must be finite".into()));
    }
    let n = geometry.monolayers();
    let mut diag = vec![[ZERO; 100]; n];
    let mut upper = vec![[ZERO; 100]; n - 1];
    let mut corner = [ZERO; 100];
    for p in 0..n {
        for i in 0..5 {
            for j in 0..5 {
                diag[p][i * 10 + j] = blocks.h_aa[p][i][j];
                diag[p][(i + 5) * 10 + j + 5] = blocks.h_cc[p][i][j];
            }
        }
    }
    for ((b, t), phase) in geometry.bonds.iter().zip(&blocks.h_ac).zip(geometry.bond_phases(k)) {
        let x = |i: usize, j: usize| phase * t[i][j];
        if b.cation_plane == b.anion_plane {
            let d = &mut diag[b.anion_plane];
            for i in 0..5 {
                for j in 0..5 {
                    d[i * 10 + j + 5] += x(i, j);
                    d[(j + 5) * 10 + i] += x(i, j).conj();
                }
            }
        } else {
            // Cation plane sits just below: store (cation rows, anion columns).
            let target = if b.anion_plane == 0 { &mut corner } else { &mut upper[b.anion_plane - 1] };
            for i in 0..5 {
                for j in 0..5 {
                    target[(j + 5) * 10 + i] += x(i, j).conj();
                }
            }
        }
    }
    Ok(SlHamiltonian { diag, upper, corner })
}

impl SlHamiltonian {
    pub fn monolayers(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        10 * self.monolayers()
    }

    pub fn to_dense(&self) -> Result<HermitianMatrix> {
        let n = self.monolayers();
        let dim = 10 * n;
        let mut m = vec![ZERO; dim * dim];
        let mut add = |r: usize, c: usize, b: &Block, adjoint: bool| {
            for i in 0..10 {
                for j in 0..10 {
                    m[(r * 10 + i) * dim + c * 10 + j] += b[i * 10 + j];
                    if adjoint {
                        m[(c * 10 + j) * dim + r * 10 + i] += b[i * 10 + j].conj();
                    }
                }
            }
        };
        for (p, d) in self.diag.iter().enumerate() {
            add(p, p, d, false);
        }
        for (p, u) in self.upper.iter().enumerate() {
            add(p, p + 1, u, true);
        }
        add(n - 1, 0, &self.corner, true);
        HermitianMatrix::from_entries(dim, m)
    }

    /// Gershgorin bracket of the whole spectrum.
    fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.monolayers();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let row_abs = |b: &Block, i: usize| (0..10).map(|j| b[i * 10 + j].norm()).sum::<f64>();
        let col_abs = |b: &Block, j: usize| (0..10).map(|i| b[i * 10 + j].norm()).sum::<f64>();
        for p in 0..n {
            for i in 0..10 {
                let centre = self.diag[p][i * 10 + i].re;
                let mut r = row_abs(&self.diag[p], i) - self.diag[p][i * 10 + i].norm();
                if p + 1 < n {
                    r += row_abs(&self.upper[p], i);
                }
                if p > 0 {
                    r += col_abs(&self.upper[p - 1], i);
                }
                if p == n - 1 {
                    r += row_abs(&self.corner, i);
                }
                if p == 0 {
                    r += col_abs(&self.corner, i);
                }
                lo = lo.min(centre - r);
                hi = hi.max(centre + r);
            }
        }
        (lo - 1e-6, hi + 1e-6)
    }

    /// Number of eigenvalues below `sigma`, by Sylvester's law of inertia on
    /// a block LDLᴴ factorization of `H − σ` over the atomic planes.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        AtomChain::new(self).count_below(sigma)
    }

    /// Eigenvalue `index` (ascending, 0-based) by bisection on
    /// [`Self::count_below`].
    pub fn eigenvalue_by_bisection(&self, index: usize) -> Result<f64> {
        Ok(self.eigenvalues_by_bisection(index, index)?[0])
    }

    /// Eigenvalues `first..=last` by bisection; every count narrows the
    /// brackets of all requested indices at once.
    pub fn eigenvalues_by_bisection(&self, first: usize, last: usize) -> Result<Vec<f64>> {
        if first > last || last >= self.dim() {
            return Err(Error::Argument(format!("bad eigenvalue range {first}..={last}")));
        }
        let chain = AtomChain::new(self);
        let bounds = self.spectral_bounds();
        let mut brackets = vec![bounds; last - first + 1];
        let narrow = |(lo, hi): (f64, f64)| hi - lo <= BISECTION_TOL * hi.abs().max(lo.abs()).max(1.0);
        while let Some(j) = brackets.iter().position(|&b| !narrow(b)) {
            let (lo, hi) = brackets[j];
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                brackets[j] = (mid, mid);
                continue;
            }
            let count = chain.count_below_robust(mid)?;
            for (i, b) in brackets.iter_mut().enumerate() {
                if b.0 < mid && mid < b.1 {
                    if count > first + i {
                        b.1 = mid;
                    } else {
                        b.0 = mid;
                    }
                }
            }
        }
        Ok(brackets.into_iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect())
    }

    /// Eigenvalues `lo..=hi` (ascending, 0-based).
    pub fn eigenvalues_range(&self, lo: usize, hi: usize) -> Result<Vec<f64>> {
        if lo > hi || hi >= self.dim() {
            return Err(Error::Argument(format!("bad eigenvalue range {lo}..={hi}")));
        }
        if self.monolayers() <= DENSE_MAX_MONOLAYERS {
            let all = eigvalsh(&self.to_dense()?)?;
            Ok(all[lo..=hi].to_vec())
        } else {
            self.eigenvalues_by_bisection(lo, hi)
        }
    }
}

/// A 5×5 atomic block, row-major.
type Atom = [C; 25];

/// The Hamiltonian as a cyclic chain of atomic planes: anion 0, cation 0,
/// anion 1, … with nearest-plane couplings only.
struct AtomChain {
    diag: Vec<Atom>,
    /// `next[i]` couples plane `i` (rows) to plane `i + 1` (columns).
    next: Vec<Atom>,
    /// Couples the last plane (rows) to plane 0 (columns).
    corner: Atom,
}

fn quadrant(b: &Block, r0: usize, c0: usize) -> Atom {
    std::array::from_fn(|idx| b[(r0 + idx / 5) * 10 + c0 + idx % 5])
}

impl AtomChain {
    fn new(h: &SlHamiltonian) -> Self {
        let n = h.monolayers();
        let mut diag = Vec::with_capacity(2 * n);
        let mut next = Vec::with_capacity(2 * n - 1);
        for p in 0..n {
            diag.push(quadrant(&h.diag[p], 0, 0));
            diag.push(quadrant(&h.diag[p], 5, 5));
            next.push(quadrant(&h.diag[p], 0, 5));
            if p + 1 < n {
                next.push(quadrant(&h.upper[p], 5, 0));
            }
        }
        AtomChain { diag, next, corner: quadrant(&h.corner, 5, 0) }
    }

    fn count_below(&self, sigma: f64) -> Result<usize> {
        let m = self.diag.len();
        let shifted = |p: usize| {
            let mut b = self.diag[p];
            for i in 0..5 {
                b[i * 6].re -= sigma;
            }
            b
        };
        let mut count = 0;
        let mut s = shifted(0);
        // Fill in the last block column; it decays away from plane 0 inside
        // a gap and is dropped once it underflows.
        let mut f = Some(adjoint(&self.corner));
        let mut g = shifted(m - 1);
        for p in 0..m - 2 {
            let (neg, s_inv) = inertia_and_inverse(&s)?;
            count += neg;
            let b = &self.next[p];
            let bt_sinv = mul(&adjoint(b), &s_inv);
            let s_next = sub(&shifted(p + 1), &mul(&bt_sinv, b));
            let mut f_next = (p + 1 == m - 2).then(|| self.next[m - 2]);
            if let Some(f) = &f {
                g = sub(&g, &mul(&adjoint(f), &mul(&s_inv, f)));
                let carried = mul(&bt_sinv, f);
                f_next = Some(match f_next {
                    Some(orig) => sub(&orig, &carried),
                    None => carried.map(|z| -z),
                });
            }
            f = f_next.filter(|f| f.iter().any(|z| z.norm() > 1e-250));
            s = s_next;
        }
        let (neg, s_inv) = inertia_and_inverse(&s)?;
        count += neg;
        if let Some(f) = &f {
            g = sub(&g, &mul(&adjoint(f), &mul(&s_inv, f)));
        }
        let (neg, _) = inertia_and_inverse(&g)?;
        Ok(count + neg)
    }

    fn count_below_robust(&self, sigma: f64) -> Result<usize> {
        // An exactly singular pivot means σ hit an eigenvalue of a leading
        // block; a relative nudge moves off it without affecting the count
        // at bisection resolution.
        let mut s = sigma;
        for _ in 0..8 {
            match self.count_below(s) {
                Err(Error::NoConvergence { residual, .. }) if residual.is_nan() => {
                    s += 1e-13 * s.abs().max(1.0);
                }
                r => return r,
            }
        }
        self.count_below(s)
    }

}

fn mul(a: &Atom, b: &Atom) -> Atom {
    let mut c = [ZERO; 25];
    for i in 0..5 {
        for k in 0..5 {
            let aik = a[i * 5 + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..5 {
                c[i * 5 + j] += aik * b[k * 5 + j];
            }
        }
    }
    c
}

fn sub(a: &Atom, b: &Atom) -> Atom {
    std::array::from_fn(|i| a[i] - b[i])
}

fn adjoint(a: &Atom) -> Atom {
    std::array::from_fn(|idx| a[(idx % 5) * 5 + idx / 5].conj())
}

/// Negative-eigenvalue count and inverse of a (numerically) Hermitian block.
/// A singular block is reported as `NoConvergence` with a NaN residual.
fn inertia_and_inverse(b: &Atom) -> Result<(usize, Atom)> {
    let h = HermitianMatrix::from_upper(5, b.to_vec());
    let r = eigh(&h, true)?;
    // Tiny pivots are legitimate here (as in a Sturm count); only an exact
    // zero leaves the factorization undefined.
    if r.values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::NoConvergence { dim: 5, residual: f64::NAN });
    }
    let vecs = r.vectors.expect("vectors requested");
    let neg = r.values.iter().filter(|v| **v < 0.0).count();
    let mut inv = [ZERO; 25];
    for (lambda, v) in r.values.iter().zip(&vecs) {
        let w = 1.0 / lambda;
        for i in 0..5 {
            let vi = v[i] * w;
            for j in 0..5 {
                inv[i * 5 + j] += vi * v[j].conj();
            }
        }
    }
    Ok((neg, inv))
}

/// Which superlattice k points the gap search visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KSampling {
    /// Uniform axial points after Γ̄, the last one at the zone edge Z̄.
    pub axial_points: usize,
    /// Adds the in-plane zone-edge points X̄ (½,½,0) and M̄ (1,0,0).
    pub in_plane_edges: bool,
}

impl Default for KSampling {
    fn default() -> Self {
        KSampling { axial_points: 32, in_plane_edges: false }
    }
}

impl KSampling {
    pub const GAMMA_ONLY: KSampling = KSampling { axial_points: 0, in_plane_edges: false };
    pub const GAMMA_AND_EDGE: KSampling = KSampling { axial_points: 1, in_plane_edges: false };

    pub fn points(&self) -> Vec<(String, WaveVector)> {
        let mut pts = vec![(GAMMA_LABEL.to_owned(), WaveVector::GAMMA)];
        for j in 1..=self.axial_points {
            let kz = j as f64 / self.axial_points as f64;
            let label = if j == self.axial_points { "Z".to_owned() } else { format!("kz={kz:.4}") };
            pts.push((label, WaveVector::new(0.0, 0.0, kz)));
        }
        if self.in_plane_edges {
            pts.push(("X̄".to_owned(), WaveVector::new(0.5, 0.5, 0.0)));
            pts.push(("M̄".to_owned(), WaveVector::new(1.0, 0.0, 0.0)));
        }
        pts
    }
}

/// A superlattice ready for band-edge queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Superlattice {
    pub geometry: SlGeometry,
    pub blocks: SlBlocks,
}

impl Superlattice {
    pub fn new(stack: &LayerStack, db: &MaterialDb, options: &SlOptions) -> Result<Self> {
        let geometry = build_sl_geometry(stack, db, options)?;
        Self::from_geometry(geometry)
    }

    /// Blocks from the geometry's own materials.
    pub fn from_geometry(geometry: SlGeometry) -> Result<Self> {
        let oips: Vec<OipSet> = geometry.materials.iter().map(|m| m.oips).collect();
        let blocks = SlBlocks::build(&geometry, &oips)?;
        Ok(Superlattice { geometry, blocks })
    }

    /// Same geometry, new parameters (one set per geometry material).
    pub fn with_oips(&self, oips: &[OipSet]) -> Result<Self> {
        Ok(Superlattice { geometry: self.geometry.clone(), blocks: SlBlocks::build(&self.geometry, oips)? })
    }

    pub fn hamiltonian(&self, k: &WaveVector) -> Result<SlHamiltonian> {
        build_sl_hamiltonian(&self.geometry, &self.blocks, k)
    }

    pub fn valence_bands(&self) -> usize {
        4 * self.geometry.monolayers()
    }

    /// Highest valence and lowest conduction level at `k`.
    pub fn band_edges(&self, k: &WaveVector) -> Result<(f64, f64)> {
        let nv = self.valence_bands();
        let e = self
            .hamiltonian(k)?
            .eigenvalues_range(nv - 1, nv)
            .map_err(|e| Error::AtKPoint { k: k.as_array(), source: Box::new(e) })?;
        Ok((e[0], e[1]))
    }

    pub fn gap(&self, sampling: &KSampling) -> Result<GapReport> {
        let samples = sampling
            .points()
            .into_par_iter()
            .map(|(label, k)| {
                let (v, c) = self.band_edges(&k)?;
                Ok(KSample::new(label, vec![v, c]))
            })
            .collect::<Result<Vec<_>>>()?;
        gap_report(&samples, 1)
    }
}

pub fn sl_gap(stack: &LayerStack, db: &MaterialDb, options: &SlOptions, sampling: &KSampling) -> Result<GapReport> {
    Superlattice::new(stack, db, options)?.gap(sampling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GAAS_LATTICE_CONSTANT, GAAS_OIPS};

    fn db() -> MaterialDb {
        MaterialDb::defaults()
    }

    #[test]
    fn stack_parsing_and_display() {
        let s: LayerStack = "GaAs:9, AlAs:4".parse().unwrap();
        assert_eq!(s, LayerStack::binary("GaAs", 9, "AlAs", 4).unwrap());
        assert_eq!(s.to_string(), "(GaAs)9/(AlAs)4");
        assert_eq!(s.total_monolayers(), 13);
        assert!("GaAs:0,AlAs:3".parse::<LayerStack>().is_err());
        assert!("GaAs:1".parse::<LayerStack>().is_err());
        assert!("GaAs9".parse::<LayerStack>().is_err());
        assert!(":3,GaAs:1".parse::<LayerStack>().is_err());
        assert_eq!(s.repeated(2).total_monolayers(), 26);
    }

    #[test]
    fn unmatched_pseudo_stack_is_ideal() {
        let g = build_sl_geometry(&LayerStack::binary("GaAs", 1, "GaAs", 1).unwrap(), &db(), &SlOptions::default()).unwrap();
        let c = 1.0 / 3f64.sqrt();
        for b in &g.bonds {
            assert_eq!(b.beta, 1.0);
            for x in b.cosines {
                assert!((x.abs() - c).abs() < 1e-15);
            }
        }
        assert!((g.period_length - GAAS_LATTICE_CONSTANT).abs() < 1e-12);
    }

    #[test]
    fn mismatch_is_small_for_gaas_alas() {
        let g = build_sl_geometry(&LayerStack::binary("GaAs", 9, "AlAs", 4).unwrap(), &db(), &SlOptions::default()).unwrap();
        for b in &g.bonds {
            assert!((b.beta - 1.0).abs() < 0.01);
            assert!((b.cosines.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert_eq!(g.dim(), 130);
    }

    #[test]
    fn unknown_material() {
        let s = LayerStack::binary("GaAs", 2, "InAs", 2).unwrap();
        assert!(matches!(build_sl_geometry(&s, &db(), &SlOptions::default()), Err(Error::UnknownMaterial(m)) if m == "InAs"));
    }

    #[test]
    fn dense_is_hermitian() {
        let sl = Superlattice::new(&LayerStack::binary("GaAs", 3, "AlAs", 2).unwrap(), &db(), &SlOptions::default()).unwrap();
        let h = sl.hamiltonian(&WaveVector::new(0.1, 0.23, 0.4)).unwrap().to_dense().unwrap();
        assert_eq!(h.hermitian_deviation(), 0.0);
        assert_eq!(h.dim(), 50);
    }

    #[test]
    fn block_count_matches_dense() {
        let sl = Superlattice::new(&"GaAs:4,AlAs:3".parse().unwrap(), &db(), &SlOptions::default()).unwrap();
        let h = sl.hamiltonian(&WaveVector::new(0.05, 0.0, 0.3)).unwrap();
        let e = eigvalsh(&h.to_dense().unwrap()).unwrap();
        for sigma in [-13.0, -5.0, -0.01, 0.5, 1.7, 2.0, 4.9] {
            let dense = e.iter().filter(|&&x| x < sigma).count();
            assert_eq!(h.count_below(sigma).unwrap(), dense, "σ = {sigma}");
        }
        for idx in [0, 27, 28, 69] {
            assert!((h.eigenvalue_by_bisection(idx).unwrap() - e[idx]).abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_parameter_count() {
        let g = build_sl_geometry(&"GaAs:2,AlAs:2".parse().unwrap(), &db(), &SlOptions::default()).unwrap();
        assert!(SlBlocks::build(&g, &[GAAS_OIPS]).is_err());
    }

    #[test]
    fn sampling_points() {
        let p = KSampling::default().points();
        assert_eq!(p.len(), 33);
        assert_eq!(p[0].0, GAMMA_LABEL);
        assert_eq!(p[32].1.kz, 1.0);
        assert_eq!(KSampling::GAMMA_ONLY.points().len(), 1);
        assert_eq!(KSampling { axial_points: 4, in_plane_edges: true }.points().len(), 7);
    }
}

//! Virtual-crystal ternary alloys and quantum wells built from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Material, OipSet};
use crate::properties::{cutoff_wavelength, GapReport};
use crate::superlattice::{geometry_from_planes, KSampling, SlOptions, Superlattice};

/// `(1−x)·A + x·B`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlloySpec {
    pub x: f64,
    pub endpoints: (Material, Material),
}

impl AlloySpec {
    pub fn new(x: f64, a: Material, b: Material) -> Result<Self> {
        let s = AlloySpec { x, endpoints: (a, b) };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.x) {
            return Err(Error::Domain(format!("alloy composition x = {} outside [0, 1]", self.x)));
        }
        Ok(())
    }

    /// The alloy as a material, lattice constant interpolated too.
    pub fn material(&self) -> Result<Material> {
        let oips = vegard_oips(self)?;
        let (a, b) = &self.endpoints;
        let lattice_constant = (1.0 - self.x) * a.lattice_constant + self.x * b.lattice_constant;
        let mut m = Material::new(format!("{}-{} x={}", a.name, b.name, self.x), oips, lattice_constant);
        m.anion = if a.anion == b.anion { a.anion.clone() } else { String::new() };
        Ok(m)
    }
}

/// Component-wise linear interpolation of all fifteen parameters.
pub fn vegard_oips(spec: &AlloySpec) -> Result<OipSet> {
    spec.check()?;
    Ok(spec.endpoints.0.oips.lerp(&spec.endpoints.1.oips, spec.x))
}

/// Barrier | well, repeated periodically.
#[derive(Debug, Clone, PartialEq)]
pub struct QwSpec {
    pub well: Material,
    pub barrier: AlloySpec,
    pub well_thickness: usize,
    pub barrier_thickness: usize,
}

/// Gap of a quantum well plus the barrier-thickness check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QwGap {
    pub report: GapReport,
    /// Gap change when the barrier is doubled (eV).
    pub doubling_change: f64,
    pub barrier_converged: bool,
}

/// Doubling the barrier may move the gap by at most this much (eV).
pub const BARRIER_TOL: f64 = 1e-3;

fn well_superlattice(well: &Material, barrier: &Material, well_ml: usize, barrier_ml: usize, options: &SlOptions) -> Result<Superlattice> {
    if well_ml == 0 || barrier_ml == 0 {
        return Err(Error::Argument("well and barrier need at least one monolayer each".into()));
    }
    let planes = std::iter::repeat_n(1, barrier_ml).chain(std::iter::repeat_n(0, well_ml)).collect();
    // The well material is the substrate.
    let options = SlOptions { substrate_lattice_constant: Some(options.substrate_lattice_constant.unwrap_or(well.lattice_constant)), ..options.clone() };
    Superlattice::from_geometry(geometry_from_planes(vec![well.clone(), barrier.clone()], planes, &options)?)
}

fn gap_at_gamma(well: &Material, barrier: &Material, well_ml: usize, barrier_ml: usize, options: &SlOptions) -> Result<GapReport> {
    well_superlattice(well, barrier, well_ml, barrier_ml, options)?.gap(&KSampling::GAMMA_ONLY)
}

/// Γ̄ gap of the well, with the barrier-doubling check.
pub fn qw_gap(spec: &QwSpec, options: &SlOptions) -> Result<QwGap> {
    if spec.well_thickness == 0 || spec.barrier_thickness == 0 {
        return Err(Error::Argument("quantum-well thicknesses must be at least one monolayer".into()));
    }
    let barrier = spec.barrier.material()?;
    let report = gap_at_gamma(&spec.well, &barrier, spec.well_thickness, spec.barrier_thickness, options)?;
    let doubled = gap_at_gamma(&spec.well, &barrier, spec.well_thickness, 2 * spec.barrier_thickness, options)?;
    let doubling_change = (doubled.gap - report.gap).abs();
    let barrier_converged = doubling_change < BARRIER_TOL;
    if !barrier_converged {
        log::warn!(
            "barrier of {} ML not converged for a {} ML well: doubling moves the gap by {:.2} meV",
            spec.barrier_thickness,
            spec.well_thickness,
            doubling_change * 1e3
        );
    }
    Ok(QwGap { report, doubling_change, barrier_converged })
}

/// How the sweep picks its barrier thickness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierPolicy {
    pub initial_ml: usize,
    pub max_ml: usize,
}

impl Default for BarrierPolicy {
    fn default() -> Self {
        BarrierPolicy { initial_ml: 16, max_ml: 512 }
    }
}

/// Smallest barrier (doubling from `policy.initial_ml`) whose doubling moves
/// the gap of a `well_ml` well by less than [`BARRIER_TOL`].
pub fn converged_barrier(well: &Material, barrier: &Material, well_ml: usize, policy: &BarrierPolicy, options: &SlOptions) -> Result<(usize, bool)> {
    let mut b = policy.initial_ml.max(1);
    let mut gap = gap_at_gamma(well, barrier, well_ml, b, options)?.gap;
    while 2 * b <= policy.max_ml {
        let next = gap_at_gamma(well, barrier, well_ml, 2 * b, options)?.gap;
        if (next - gap).abs() < BARRIER_TOL {
            return Ok((b, true));
        }
        b *= 2;
        gap = next;
    }
    log::warn!("barrier for a {well_ml} ML well still moving at {b} ML");
    Ok((b, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub thickness_ml: usize,
    pub x: f64,
    pub gap_ev: f64,
    pub cutoff_um: f64,
}

/// Gap and cutoff wavelength of GaAs-like wells between Vegard barriers.
///
/// Per composition one barrier thickness is chosen, converged at the
/// thinnest well (which is the most sensitive), and used for every
/// thickness so that rows of one composition differ only in the well.
pub fn cutoff_sweep(
    well: &Material,
    barrier_endpoint: &Material,
    thicknesses: &[usize],
    xs: &[f64],
    policy: &BarrierPolicy,
    options: &SlOptions,
) -> Result<Vec<SweepRow>> {
    let Some(&t_min) = thicknesses.iter().min() else {
        return Ok(Vec::new());
    };
    if t_min == 0 {
        return Err(Error::Argument("well thickness must be at least one monolayer".into()));
    }
    let mut rows = Vec::with_capacity(thicknesses.len() * xs.len());
    for &x in xs {
        let barrier = AlloySpec::new(x, well.clone(), barrier_endpoint.clone())?.material()?;
        let (b, _) = converged_barrier(well, &barrier, t_min, policy, options)?;
        let cells = thicknesses
            .par_iter()
            .map(|&t| {
                let gap = gap_at_gamma(well, &barrier, t, b, options)?.gap;
                Ok(SweepRow { thickness_ml: t, x, gap_ev: gap, cutoff_um: cutoff_wavelength(gap)? })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(cells);
    }
    Ok(rows)
}

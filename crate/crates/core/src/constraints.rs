//! Analytic valence-band conditions at Γ that fix four of the fifteen
//! parameters in terms of the free ones and a handful of anchor observables.
//!
//! At Γ the bulk matrix splits into 2×2 blocks:
//!
//! * s block `[[E_sa, E_sasc], [E_sasc, E_sc]]`, upper level pinned to `E_g`;
//! * Γ8-like p block `[[E_pa + Δ_a/3, E_xaxc], [E_xaxc, E_pc + Δ_c/3]]`,
//!   lower level pinned to 0 (hh/lh);
//! * Γ7-like p block `[[E_pa − 2Δ_a/3, E_xaxc], [E_xaxc, E_pc − 2Δ_c/3]]`,
//!   lower level pinned to −Δ (split-off), upper level `E_so1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::OipSet;

/// Which analytic condition a derivation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `E_xaxc` from the hh/lh level sitting at zero.
    HeavyLightHole,
    /// `E_pc` from the split-off level sitting at −Δ.
    SplitOff,
    /// `E_pa` from the spin-orbit antibonding level `E_so1`.
    SplitOffAntibonding,
    /// `E_sasc` from the s-antibonding level sitting at `E_g`.
    Bandgap,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::HeavyLightHole => "hh/lh level at zero (E_xaxc)",
            Condition::SplitOff => "split-off level at -delta (E_pc)",
            Condition::SplitOffAntibonding => "spin-orbit antibonding level (E_pa)",
            Condition::Bandgap => "s-antibonding level at E_g (E_sasc)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("{condition}: degenerate, {detail}")]
    Degenerate { condition: Condition, detail: &'static str },

    /// `shortfall` is how far the inputs are from the feasible boundary, in eV
    /// (or eV² for radicands); always positive.
    #[error("{condition}: infeasible, {detail} (short by {shortfall:.6e})")]
    Infeasible { condition: Condition, detail: &'static str, shortfall: f64 },

    #[error("E_pa is neither a free parameter nor derivable (no E_so1 anchor)")]
    MissingEpa,

    #[error("non-finite input to the constraint expansion: {0}")]
    NonFinite(&'static str),
}

impl ConstraintError {
    /// Distance to feasibility used by the fitting penalty.
    pub fn shortfall(&self) -> f64 {
        match self {
            ConstraintError::Infeasible { shortfall, .. } => *shortfall,
            _ => 1.0,
        }
    }
}

type CResult<T> = std::result::Result<T, ConstraintError>;

/// The nine optimized parameters, plus `E_pa` when it is a gene rather than
/// derived from an `E_so1` anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParams {
    pub e_sa: f64,
    pub e_sc: f64,
    pub e_ssa: f64,
    pub e_ssc: f64,
    pub e_xayc: f64,
    pub e_saxc: f64,
    pub e_xasc: f64,
    pub e_ssaxc: f64,
    pub e_xassc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_pa: Option<f64>,
}

impl FreeParams {
    pub const GENE_NAMES: [&'static str; 10] = [
        "e_sa", "e_sc", "e_ssa", "e_ssc", "e_xayc", "e_saxc", "e_xasc", "e_ssaxc", "e_xassc", "e_pa",
    ];

    /// Free parameters of an existing set, `E_pa` included as a gene.
    pub fn from_oips(o: &OipSet) -> Self {
        FreeParams {
            e_sa: o.e_sa,
            e_sc: o.e_sc,
            e_ssa: o.e_ssa,
            e_ssc: o.e_ssc,
            e_xayc: o.e_xayc,
            e_saxc: o.e_saxc,
            e_xasc: o.e_xasc,
            e_ssaxc: o.e_ssaxc,
            e_xassc: o.e_xassc,
            e_pa: Some(o.e_pa),
        }
    }

    /// Genes in [`Self::GENE_NAMES`] order; the last slot is absent when
    /// `E_pa` is derived.
    pub fn to_genes(&self) -> Vec<f64> {
        let mut g = vec![
            self.e_sa, self.e_sc, self.e_ssa, self.e_ssc, self.e_xayc, self.e_saxc, self.e_xasc, self.e_ssaxc,
            self.e_xassc,
        ];
        g.extend(self.e_pa);
        g
    }

    /// Inverse of [`Self::to_genes`]; accepts 9 or 10 values.
    pub fn from_genes(g: &[f64]) -> Option<Self> {
        if !(g.len() == 9 || g.len() == 10) {
            return None;
        }
        Some(FreeParams {
            e_sa: g[0],
            e_sc: g[1],
            e_ssa: g[2],
            e_ssc: g[3],
            e_xayc: g[4],
            e_saxc: g[5],
            e_xasc: g[6],
            e_ssaxc: g[7],
            e_xassc: g[8],
            e_pa: g.get(9).copied(),
        })
    }
}

/// Observables the expansion is pinned to, plus the fixed spin-orbit energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintAnchors {
    pub e_g: f64,
    pub delta: f64,
    /// When set (and enabled), `E_pa` is derived from it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_so1: Option<f64>,
    pub delta_a: f64,
    pub delta_c: f64,
}

impl ConstraintAnchors {
    pub const GAAS: ConstraintAnchors =
        ConstraintAnchors { e_g: 1.424, delta: 0.340, e_so1: None, delta_a: 0.421, delta_c: 0.174 };
    pub const ALAS: ConstraintAnchors =
        ConstraintAnchors { e_g: 3.020, delta: 0.300, e_so1: None, delta_a: 0.421, delta_c: 0.024 };

    fn check(&self) -> CResult<()> {
        let finite = [self.e_g, self.delta, self.delta_a, self.delta_c].iter().all(|x| x.is_finite())
            && self.e_so1.is_none_or(f64::is_finite);
        if !finite {
            return Err(ConstraintError::NonFinite("anchors"));
        }
        Ok(())
    }
}

/// `E_pa` from the spin-orbit antibonding anchor, in closed form
/// `[E_so1(Δ_a−Δ) − Δ_aΔ + ⅔Δ_a² + ⅓Δ_aΔ] / (Δ_a − Δ_c)`.
///
/// This form does not round-trip: the Γ7 upper level of the expanded set
/// differs from `E_so1` whenever Δ ≠ Δ_c. [`derive_e_pa_consistent`] is the
/// variant that does.
pub fn derive_e_pa(anchors: &ConstraintAnchors) -> CResult<f64> {
    let ConstraintAnchors { delta: d, delta_a: da, delta_c: dc, .. } = *anchors;
    let e_so1 = anchors.e_so1.ok_or(ConstraintError::MissingEpa)?;
    if da == dc {
        return Err(ConstraintError::Degenerate { condition: Condition::SplitOffAntibonding, detail: "delta_a = delta_c" });
    }
    Ok((e_so1 * (da - d) - da * d + 2.0 / 3.0 * da * da + da * d / 3.0) / (da - dc))
}

/// `E_pa` such that the Γ7 block, completed by [`derive_e_pc`] and
/// [`derive_e_xaxc`], has levels exactly `{−Δ, E_so1}`.
///
/// Same as [`derive_e_pa`] except that the last numerator term is `⅓Δ_aΔ_c`.
pub fn derive_e_pa_consistent(anchors: &ConstraintAnchors) -> CResult<f64> {
    let ConstraintAnchors { delta: d, delta_a: da, delta_c: dc, .. } = *anchors;
    let e_so1 = anchors.e_so1.ok_or(ConstraintError::MissingEpa)?;
    if da == dc {
        return Err(ConstraintError::Degenerate { condition: Condition::SplitOffAntibonding, detail: "delta_a = delta_c" });
    }
    Ok((e_so1 * (da - d) - da * d + 2.0 / 3.0 * da * da + da * dc / 3.0) / (da - dc))
}

/// `E_pc = [Δ² + Δ(E_pa − ⅔Δ_a − ⅔Δ_c) + ⅓Δ_aΔ_c − E_paΔ_c] / (Δ_a − Δ)`.
pub fn derive_e_pc(e_pa: f64, anchors: &ConstraintAnchors) -> CResult<f64> {
    let ConstraintAnchors { delta: d, delta_a: da, delta_c: dc, .. } = *anchors;
    let denom = da - d;
    if denom == 0.0 {
        return Err(ConstraintError::Degenerate { condition: Condition::SplitOff, detail: "delta_a = delta" });
    }
    let v = (d * d + d * (e_pa - 2.0 / 3.0 * da - 2.0 / 3.0 * dc) + da * dc / 3.0 - e_pa * dc) / denom;
    if !v.is_finite() {
        return Err(ConstraintError::Degenerate { condition: Condition::SplitOff, detail: "delta_a too close to delta" });
    }
    Ok(v)
}

/// `E_xaxc = +√((E_pa + Δ_a/3)(E_pc + Δ_c/3))`.
pub fn derive_e_xaxc(e_pa: f64, e_pc: f64, delta_a: f64, delta_c: f64) -> CResult<f64> {
    let fa = e_pa + delta_a / 3.0;
    let fc = e_pc + delta_c / 3.0;
    if fa < 0.0 || fc < 0.0 {
        return Err(ConstraintError::Infeasible {
            condition: Condition::HeavyLightHole,
            detail: "E_p + delta/3 must be non-negative on both sites",
            shortfall: (-fa).max(0.0) + (-fc).max(0.0),
        });
    }
    Ok((fa * fc).sqrt())
}

/// `E_sasc = −√((E_g − E_sa)(E_g − E_sc))`.
pub fn derive_e_sasc(e_sa: f64, e_sc: f64, e_g: f64) -> CResult<f64> {
    let radicand = e_g * e_g - e_g * (e_sa + e_sc) + e_sa * e_sc;
    if radicand < 0.0 {
        return Err(ConstraintError::Infeasible {
            condition: Condition::Bandgap,
            detail: "E_g lies between E_sa and E_sc",
            shortfall: -radicand,
        });
    }
    Ok(-radicand.sqrt())
}

/// Builds the full parameter set. `E_pa` is derived from `anchors.e_so1`
/// when `use_eq5` is set, and otherwise taken from `free.e_pa`.
///
/// Beyond the individual derivations this rejects inputs for which the pinned
/// level is not the one the condition intends: `E_g` must be the upper s
/// level, and −Δ the lower Γ7 level.
pub fn expand(free: &FreeParams, anchors: &ConstraintAnchors, use_eq5: bool) -> CResult<OipSet> {
    anchors.check()?;
    if !free.to_genes().iter().all(|x| x.is_finite()) {
        return Err(ConstraintError::NonFinite("free parameters"));
    }
    let e_pa = match (use_eq5, free.e_pa) {
        (true, _) => derive_e_pa(anchors)?,
        (false, Some(p)) => p,
        (false, None) => return Err(ConstraintError::MissingEpa),
    };
    let ConstraintAnchors { e_g, delta, delta_a, delta_c, .. } = *anchors;

    let s_floor = free.e_sa.max(free.e_sc);
    if e_g <= s_floor {
        return Err(ConstraintError::Infeasible {
            condition: Condition::Bandgap,
            detail: "E_g must exceed both s on-site energies",
            shortfall: s_floor - e_g,
        });
    }
    let e_sasc = derive_e_sasc(free.e_sa, free.e_sc, e_g)?;

    let e_pc = derive_e_pc(e_pa, anchors)?;
    let e_xaxc = derive_e_xaxc(e_pa, e_pc, delta_a, delta_c)?;

    // Γ7 trace = −Δ + E_so1; the pinned −Δ must be the lower level.
    let upper = e_pa + e_pc - 2.0 / 3.0 * (delta_a + delta_c) + delta;
    if upper < -delta {
        return Err(ConstraintError::Infeasible {
            condition: Condition::SplitOff,
            detail: "-delta would be the upper spin-orbit level",
            shortfall: -delta - upper,
        });
    }

    Ok(OipSet {
        e_sa: free.e_sa,
        e_sc: free.e_sc,
        e_ssa: free.e_ssa,
        e_ssc: free.e_ssc,
        e_xayc: free.e_xayc,
        e_saxc: free.e_saxc,
        e_xasc: free.e_xasc,
        e_ssaxc: free.e_ssaxc,
        e_xassc: free.e_xassc,
        e_pa,
        e_pc,
        e_sasc,
        e_xaxc,
        delta_a,
        delta_c,
    })
}

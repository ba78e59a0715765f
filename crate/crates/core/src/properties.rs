//! Band observables at the critical points: level energies, effective
//! masses, gaps, cutoff wavelengths and the MAPE comparison metric.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::bulk::band_energies;
use crate::error::{Error, Result};
use crate::model::{OipSet, WaveVector};
use crate::units::{reduced_to_inverse_angstrom, HBAR2_OVER_M0, HC_EV_UM};

/// Default finite-difference step in units of 2π/a.
pub const MASS_STEP: f64 = 1e-3;

/// Two sorted levels closer than this at a stencil point are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Occupied bands of the 10-band bulk model.
pub const BULK_VALENCE_BANDS: usize = 4;

pub const GAMMA_LABEL: &str = "Γ";

macro_rules! features {
    ($($variant:ident => $label:literal, $ascii:literal, $mass:literal;)*) => {
        /// The 23 bulk observables.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum BandFeature { $($variant),* }

        impl BandFeature {
            pub const ALL: [BandFeature; 23] = [$(BandFeature::$variant),*];

            pub fn label(self) -> &'static str {
                match self { $(BandFeature::$variant => $label),* }
            }

            /// ASCII spelling accepted wherever a label is parsed.
            pub fn ascii(self) -> &'static str {
                match self { $(BandFeature::$variant => $ascii),* }
            }

            pub fn is_mass(self) -> bool {
                match self { $(BandFeature::$variant => $mass),* }
            }
        }
    };
}

features! {
    Gamma6c => "Γ6c", "G6c", false;
    DeltaSo => "Δso", "dso", false;
    MassGamma => "mΓ", "mG", true;
    MassLh001 => "mlh_001", "mlh_001", true;
    MassLh011 => "mlh_011", "mlh_011", true;
    MassLh111 => "mlh_111", "mlh_111", true;
    MassHh001 => "mhh_001", "mhh_001", true;
    MassHh011 => "mhh_011", "mhh_011", true;
    MassHh111 => "mhh_111", "mhh_111", true;
    MassSo => "mso", "mso", true;
    L6c => "L6c", "L6c", false;
    Gamma6v => "Γ6v", "G6v", false;
    Gamma7c => "Γ7c", "G7c", false;
    Gamma8c => "Γ8c", "G8c", false;
    X5v => "X5v", "X5v", false;
    X6v => "X6v", "X6v", false;
    X7v => "X7v", "X7v", false;
    X6c => "X6c", "X6c", false;
    X7c => "X7c", "X7c", false;
    L5v => "L5v", "L5v", false;
    L6v => "L6v", "L6v", false;
    L7v => "L7v", "L7v", false;
    L7c => "L7c", "L7c", false;
}

impl BandFeature {
    pub const COUNT: usize = 23;

    /// Features with measured bulk GaAs values in the usual tight-binding
    /// fitting literature: Γ6c, X6c, X7v, L6c, L5v and the [001]/split-off
    /// masses.
    pub const EXPERIMENTAL_SUBSET: [BandFeature; 9] = [
        BandFeature::Gamma6c,
        BandFeature::X6c,
        BandFeature::X7v,
        BandFeature::L6c,
        BandFeature::L5v,
        BandFeature::MassSo,
        BandFeature::MassLh001,
        BandFeature::MassHh001,
        BandFeature::MassGamma,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for BandFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BandFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BandFeature::ALL
            .into_iter()
            .find(|f| f.label() == s || f.ascii().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFeature(s.to_owned()))
    }
}

impl Serialize for BandFeature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for BandFeature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One value per [`BandFeature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features([f64; BandFeature::COUNT]);

impl Features {
    /// Values in [`BandFeature::ALL`] order.
    pub fn new(values: [f64; BandFeature::COUNT]) -> Self {
        Features(values)
    }

    pub fn get(&self, f: BandFeature) -> f64 {
        self.0[f.index()]
    }

    pub fn set(&mut self, f: BandFeature, v: f64) {
        self.0[f.index()] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (BandFeature, f64)> + '_ {
        BandFeature::ALL.into_iter().map(|f| (f, self.get(f)))
    }
}

impl std::ops::Index<BandFeature> for Features {
    type Output = f64;
    fn index(&self, f: BandFeature) -> &f64 {
        &self.0[f.index()]
    }
}

/// Γ levels from the analytic 2×2 blocks of the bulk matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLevels {
    pub s_bonding: f64,
    pub s_antibonding: f64,
    /// hh/lh level (doubly degenerate).
    pub p8_bonding: f64,
    pub p8_antibonding: f64,
    /// Split-off level.
    pub p7_bonding: f64,
    pub p7_antibonding: f64,
}

fn sym2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let m = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (m - r, m + r)
}

pub fn gamma_levels(o: &OipSet) -> GammaLevels {
    let (s_bonding, s_antibonding) = sym2(o.e_sa, o.e_sasc, o.e_sc);
    let (p8_bonding, p8_antibonding) = sym2(o.e_pa + o.delta_a / 3.0, o.e_xaxc, o.e_pc + o.delta_c / 3.0);
    let (p7_bonding, p7_antibonding) =
        sym2(o.e_pa - 2.0 * o.delta_a / 3.0, o.e_xaxc, o.e_pc - 2.0 * o.delta_c / 3.0);
    GammaLevels { s_bonding, s_antibonding, p8_bonding, p8_antibonding, p7_bonding, p7_antibonding }
}

pub const DIR_001: [f64; 3] = [0.0, 0.0, 1.0];
pub const DIR_011: [f64; 3] = [0.0, std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
pub const DIR_111: [f64; 3] = [0.577_350_269_189_625_8; 3];

/// All 23 observables. Energies are relative to the Γ hh/lh level.
///
/// At Γ the levels are assigned by orbital character (the matrix is block
/// diagonal there): Γ6v/Γ6c are the s levels, the split-off level is the
/// bonding Γ7 level, and Γ7c/Γ8c are the two p-antibonding levels taken in
/// ascending order. At X and L the sorted indices 1..=3 are the valence
/// labels 5v, 6v, 7v and 4..=5 the conduction labels 6c, 7c.
pub fn extract_features(o: &OipSet, a: f64) -> Result<Features> {
    o.validate().into_result()?;
    let g = gamma_levels(o);
    let e0 = g.p8_bonding;
    let mut f = Features([0.0; BandFeature::COUNT]);
    use BandFeature::*;

    f.set(Gamma6c, g.s_antibonding - e0);
    f.set(Gamma6v, g.s_bonding - e0);
    f.set(DeltaSo, e0 - g.p7_bonding);
    let (lo, hi) = if g.p7_antibonding <= g.p8_antibonding {
        (g.p7_antibonding, g.p8_antibonding)
    } else {
        (g.p8_antibonding, g.p7_antibonding)
    };
    f.set(Gamma7c, lo - e0);
    f.set(Gamma8c, hi - e0);

    let x = band_energies(o, &WaveVector::X, a)?;
    for (feat, i) in [(X5v, 1), (X6v, 2), (X7v, 3), (X6c, 4), (X7c, 5)] {
        f.set(feat, x[i] - e0);
    }
    let l = band_energies(o, &WaveVector::L, a)?;
    for (feat, i) in [(L5v, 1), (L6v, 2), (L7v, 3), (L6c, 4), (L7c, 5)] {
        f.set(feat, l[i] - e0);
    }

    let gamma = WaveVector::GAMMA;
    for (dir, lh, hh) in [(DIR_001, MassLh001, MassHh001), (DIR_011, MassLh011, MassHh011), (DIR_111, MassLh111, MassHh111)] {
        let bands: &[usize] = if dir == DIR_001 { &[2, 3, 4, 1] } else { &[2, 3] };
        let m = masses_along(o, a, bands, dir, &gamma, MASS_STEP)?;
        let (light, heavy) = if m[0].abs() <= m[1].abs() { (m[0], m[1]) } else { (m[1], m[0]) };
        f.set(lh, light);
        f.set(hh, heavy);
        if dir == DIR_001 {
            f.set(MassGamma, m[2]);
            f.set(MassSo, m[3]);
        }
    }
    Ok(f)
}

/// Second derivative of `f` at 0 by the central five-point stencil.
pub fn curvature<F>(mut f: F, step: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_step(step)?;
    let mut v = [0.0; 5];
    for (slot, s) in v.iter_mut().zip(STENCIL) {
        *slot = f(s * step)?;
    }
    Ok(stencil_curvature(&v, step))
}

const STENCIL: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Argument(format!("finite-difference step {step} must be positive")));
    }
    Ok(())
}

/// `v` sampled at offsets −2h, −h, 0, h, 2h.
fn stencil_curvature(v: &[f64; 5], h: f64) -> f64 {
    (-v[4] + 16.0 * v[3] - 30.0 * v[2] + 16.0 * v[1] - v[0]) / (12.0 * h * h)
}

/// m*/m₀ from a curvature in eV·Å².
pub fn mass_from_curvature(d2e_dk2: f64) -> f64 {
    HBAR2_OVER_M0 / d2e_dk2
}

/// Effective mass of sorted band `band` at `at` along `direction`, with the
/// default step.
pub fn effective_mass(o: &OipSet, a: f64, band: usize, direction: [f64; 3], at: &WaveVector) -> Result<f64> {
    effective_mass_with_step(o, a, band, direction, at, MASS_STEP)
}

pub fn effective_mass_with_step(
    o: &OipSet,
    a: f64,
    band: usize,
    direction: [f64; 3],
    at: &WaveVector,
    step: f64,
) -> Result<f64> {
    Ok(masses_along(o, a, &[band], direction, at, step)?[0])
}

/// Masses of several sorted bands from one set of stencil diagonalizations.
///
/// A band that touches a neighbour at any off-centre stencil point cannot be
/// followed by its sorted index and is reported as degenerate.
pub fn masses_along(
    o: &OipSet,
    a: f64,
    bands: &[usize],
    direction: [f64; 3],
    at: &WaveVector,
    step: f64,
) -> Result<Vec<f64>> {
    check_step(step)?;
    if let Some(&b) = bands.iter().find(|&&b| b >= crate::bulk::BULK_DIM) {
        return Err(Error::Argument(format!("band index {b} out of range 0..10")));
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Argument("mass direction must be a non-zero finite vector".into()));
    }
    let d = direction.map(|x| x / norm);
    let spectra = STENCIL
        .iter()
        .map(|&s| {
            let s = s * step;
            band_energies(o, &at.add(&WaveVector::new(d[0] * s, d[1] * s, d[2] * s)), a)
        })
        .collect::<Result<Vec<_>>>()?;
    let to_inv_angstrom = reduced_to_inverse_angstrom(1.0, a);
    bands
        .iter()
        .map(|&band| {
            for (e, s) in spectra.iter().zip(STENCIL) {
                if s == 0.0 {
                    continue;
                }
                let competing: Vec<usize> = [band.wrapping_sub(1), band + 1]
                    .into_iter()
                    .filter(|&j| j < e.len() && (e[j] - e[band]).abs() < DEGENERACY_TOL)
                    .collect();
                if !competing.is_empty() {
                    return Err(Error::DegenerateBand { band, competing });
                }
            }
            let v = std::array::from_fn(|i| spectra[i][band]);
            let c = stencil_curvature(&v, step) / (to_inv_angstrom * to_inv_angstrom);
            Ok(mass_from_curvature(c))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapCharacter {
    Direct,
    Indirect,
}

impl GapCharacter {
    /// Single-letter flag, `D` or `I`.
    pub fn flag(self) -> char {
        match self {
            GapCharacter::Direct => 'D',
            GapCharacter::Indirect => 'I',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gap: f64,
    pub character: GapCharacter,
    pub cbm_location: String,
    pub vbm_energy: f64,
}

/// Sorted energies at one labelled k point.
#[derive(Debug, Clone, PartialEq)]
pub struct KSample {
    pub label: String,
    pub energies: Vec<f64>,
}

impl KSample {
    pub fn new(label: impl Into<String>, energies: Vec<f64>) -> Self {
        KSample { label: label.into(), energies }
    }
}

/// Gap between the lowest conduction level over all samples and the
/// highest valence level at the sample labelled [`GAMMA_LABEL`]. Ties in the
/// conduction minimum go to the earlier sample.
pub fn gap_report(samples: &[KSample], n_valence: usize) -> Result<GapReport> {
    if samples.is_empty() {
        return Err(Error::Argument("gap search needs at least one k sample".into()));
    }
    let gamma = samples
        .iter()
        .find(|s| s.label == GAMMA_LABEL)
        .ok_or_else(|| Error::Argument("gap search needs a Γ sample".into()))?;
    if n_valence == 0 || samples.iter().any(|s| s.energies.len() <= n_valence) {
        return Err(Error::Argument(format!("every sample needs more than {n_valence} levels")));
    }
    let vbm = gamma.energies[n_valence - 1];
    let mut best: Option<(&KSample, f64)> = None;
    for s in samples {
        let e = s.energies[n_valence];
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((s, e));
        }
    }
    let (at, cbm) = best.expect("samples is non-empty");
    let gap = cbm - vbm;
    if !(gap >= 0.0) {
        return Err(Error::Domain(format!(
            "conduction minimum at {} lies {:.4} eV below the valence maximum",
            at.label, -gap
        )));
    }
    let character = if at.label == GAMMA_LABEL { GapCharacter::Direct } else { GapCharacter::Indirect };
    Ok(GapReport { gap, character, cbm_location: at.label.clone(), vbm_energy: vbm })
}

/// Bulk gap sampled at Γ, X and L.
pub fn bulk_gap(o: &OipSet, a: f64) -> Result<GapReport> {
    let samples = [(GAMMA_LABEL, WaveVector::GAMMA), ("X", WaveVector::X), ("L", WaveVector::L)]
        .into_iter()
        .map(|(label, k)| Ok(KSample::new(label, band_energies(o, &k, a)?)))
        .collect::<Result<Vec<_>>>()?;
    gap_report(&samples, BULK_VALENCE_BANDS)
}

/// λ = hc / E_g in μm.
pub fn cutoff_wavelength(gap: f64) -> Result<f64> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::Domain(format!("cutoff wavelength needs a positive gap, got {gap}")));
    }
    Ok(HC_EV_UM / gap)
}

/// Mean absolute percentage error over the pairs whose target is present
/// and nonzero; `None` if no pair qualifies.
pub fn mape(predicted: &[f64], target: &[Option<f64>]) -> Result<Option<f64>> {
    if predicted.len() != target.len() {
        return Err(Error::Argument(format!(
            "mape needs equal lengths, got {} predictions and {} targets",
            predicted.len(),
            target.len()
        )));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, t) in predicted.iter().zip(target) {
        match t {
            Some(t) if *t != 0.0 => {
                sum += ((p - t) / t).abs();
                n += 1;
            }
            Some(_) => log::warn!("skipping zero target in MAPE"),
            None => {}
        }
    }
    Ok((n > 0).then(|| 100.0 * sum / n as f64))
}

/// A target value (possibly unknown) and its cost weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyTarget {
    pub feature: BandFeature,
    pub target: Option<f64>,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// Default cost weight for a feature: the gap dominates, masses outrank
/// the remaining energies.
pub fn default_feature_weight(f: BandFeature) -> f64 {
    match f {
        BandFeature::Gamma6c => 1e5,
        f if f.is_mass() => 1e4,
        _ => 1e3,
    }
}

/// Parses a targets file: a JSON object mapping feature labels to a number,
/// `null`, or `{"target": number|null, "weight": number}`.
pub fn parse_targets(text: &str) -> Result<Vec<PropertyTarget>> {
    let value: Value = serde_json::from_str(text).map_err(|source| Error::Json { context: "targets".into(), source })?;
    targets_from_value(value)
}

/// Same as [`parse_targets`] for an already parsed value.
pub fn targets_from_value(value: Value) -> Result<Vec<PropertyTarget>> {
    let Value::Object(map) = value else {
        return Err(Error::Argument("targets must be a JSON object keyed by feature label".into()));
    };
    map.into_iter()
        .map(|(key, v)| {
            let feature: BandFeature = key.parse()?;
            let bad = || Error::Argument(format!("target for {key} must be a number, null or an object"));
            let (target, weight) = match v {
                Value::Null => (None, default_feature_weight(feature)),
                Value::Number(n) => (n.as_f64(), default_feature_weight(feature)),
                Value::Object(mut o) => {
                    let target = match o.remove("target") {
                        None | Some(Value::Null) => None,
                        Some(Value::Number(n)) => n.as_f64(),
                        Some(_) => return Err(bad()),
                    };
                    let weight = match o.remove("weight") {
                        None => default_feature_weight(feature),
                        Some(Value::Number(n)) => n.as_f64().ok_or_else(bad)?,
                        Some(_) => return Err(bad()),
                    };
                    if let Some(k) = o.keys().next() {
                        return Err(Error::Argument(format!("unknown key `{k}` in target for {key}")));
                    }
                    (target, weight)
                }
                _ => return Err(bad()),
            };
            if target.is_some_and(|t| !t.is_finite()) || !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::Argument(format!("target for {key} needs a finite value and positive weight")));
            }
            Ok(PropertyTarget { feature, target, weight })
        })
        .collect()
}

/// Inverse of [`targets_from_value`]; always writes the object form.
pub fn targets_to_value(targets: &[PropertyTarget]) -> Value {
    Value::Object(
        targets
            .iter()
            .map(|t| (t.feature.label().to_owned(), json!({ "target": t.target, "weight": t.weight })))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub computed: f64,
    pub target: Option<f64>,
    pub weight: Option<f64>,
    pub abs_error: Option<f64>,
}

/// MAPE over the subsets of features that have targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapeSummary {
    pub all: Option<f64>,
    pub energies: Option<f64>,
    pub masses: Option<f64>,
    pub experimental_subset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub entries: Vec<(BandFeature, ReportEntry)>,
    pub mape: MapeSummary,
}

pub fn property_report(features: &Features, targets: &[PropertyTarget]) -> Result<PropertyReport> {
    let lookup = |f: BandFeature| targets.iter().find(|t| t.feature == f);
    let entries: Vec<(BandFeature, ReportEntry)> = features
        .iter()
        .map(|(f, computed)| {
            let t = lookup(f);
            let target = t.and_then(|t| t.target);
            (f, ReportEntry { computed, target, weight: t.map(|t| t.weight), abs_error: target.map(|t| (computed - t).abs()) })
        })
        .collect();
    let subset_mape = |keep: &dyn Fn(BandFeature) -> bool| -> Result<Option<f64>> {
        let (p, t): (Vec<f64>, Vec<Option<f64>>) =
            entries.iter().filter(|(f, _)| keep(*f)).map(|(_, e)| (e.computed, e.target)).unzip();
        mape(&p, &t)
    };
    let mape = MapeSummary {
        all: subset_mape(&|_| true)?,
        energies: subset_mape(&|f| !f.is_mass())?,
        masses: subset_mape(&|f| f.is_mass())?,
        experimental_subset: subset_mape(&|f| BandFeature::EXPERIMENTAL_SUBSET.contains(&f))?,
    };
    Ok(PropertyReport { entries, mape })
}

impl PropertyReport {
    pub fn to_json(&self) -> Value {
        let features: Map<String, Value> = self
            .entries
            .iter()
            .map(|(f, e)| (f.label().to_owned(), serde_json::to_value(e).expect("plain data serializes")))
            .collect();
        json!({ "features": features, "mape_percent": self.mape })
    }
}

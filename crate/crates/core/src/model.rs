//! Material parameters: the fifteen orbital interaction parameters (OIPs) of
//! the sp³s* nearest-neighbour model, lattice constants and the built-in
//! GaAs/AlAs database.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The fifteen orbital interaction parameters of one binary compound, in eV.
///
/// Naming: `a` = anion, `c` = cation, `s`/`ss` = s and s* orbitals, `x`/`y`
/// = p orbitals, `p` = p on-site. `e_xayc` is the p_x(anion)–p_y(cation)
/// two-centre term, `delta_a`/`delta_c` the atomic spin-orbit energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OipSet {
    pub e_sa: f64,
    pub e_sc: f64,
    pub e_ssa: f64,
    pub e_ssc: f64,
    pub e_xayc: f64,
    pub e_saxc: f64,
    pub e_xasc: f64,
    pub e_ssaxc: f64,
    pub e_xassc: f64,
    pub e_pa: f64,
    pub e_pc: f64,
    pub e_sasc: f64,
    pub e_xaxc: f64,
    pub delta_a: f64,
    pub delta_c: f64,
}

impl OipSet {
    pub const FIELD_NAMES: [&'static str; 15] = [
        "e_sa", "e_sc", "e_ssa", "e_ssc", "e_xayc", "e_saxc", "e_xasc", "e_ssaxc", "e_xassc",
        "e_pa", "e_pc", "e_sasc", "e_xaxc", "delta_a", "delta_c",
    ];

    pub fn to_array(&self) -> [f64; 15] {
        [
            self.e_sa, self.e_sc, self.e_ssa, self.e_ssc, self.e_xayc, self.e_saxc, self.e_xasc,
            self.e_ssaxc, self.e_xassc, self.e_pa, self.e_pc, self.e_sasc, self.e_xaxc,
            self.delta_a, self.delta_c,
        ]
    }

    pub fn from_array(v: [f64; 15]) -> Self {
        OipSet {
            e_sa: v[0],
            e_sc: v[1],
            e_ssa: v[2],
            e_ssc: v[3],
            e_xayc: v[4],
            e_saxc: v[5],
            e_xasc: v[6],
            e_ssaxc: v[7],
            e_xassc: v[8],
            e_pa: v[9],
            e_pc: v[10],
            e_sasc: v[11],
            e_xaxc: v[12],
            delta_a: v[13],
            delta_c: v[14],
        }
    }

    /// Component-wise `(1 - t)·self + t·other`.
    pub fn lerp(&self, other: &OipSet, t: f64) -> OipSet {
        let a = self.to_array();
        let b = other.to_array();
        let mut out = [0.0; 15];
        for i in 0..15 {
            out[i] = (1.0 - t) * a[i] + t * b[i];
        }
        OipSet::from_array(out)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_oips(self)
    }
}

/// One violated invariant of an [`OipSet`] or [`Material`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub rule: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Every violated invariant; empty iff the input is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Parameter(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

pub const RULE_FINITE: &str = "must be finite";
pub const RULE_DELTA_A: &str = "delta_a ≥ 0";
pub const RULE_DELTA_C: &str = "delta_c ≥ 0";
pub const RULE_LATTICE: &str = "lattice_constant > 0";

pub fn validate_oips(o: &OipSet) -> ValidationReport {
    let mut violations = Vec::new();
    for (name, value) in OipSet::FIELD_NAMES.iter().zip(o.to_array()) {
        if !value.is_finite() {
            violations.push(Violation { field: name, rule: RULE_FINITE });
        }
    }
    // NaN fails the finiteness rule above, not the sign rules.
    if o.delta_a < 0.0 {
        violations.push(Violation { field: "delta_a", rule: RULE_DELTA_A });
    }
    if o.delta_c < 0.0 {
        violations.push(Violation { field: "delta_c", rule: RULE_DELTA_C });
    }
    ValidationReport { violations }
}

/// A binary zinc-blende compound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Material {
    pub name: String,
    pub oips: OipSet,
    /// Cubic lattice constant in Å.
    pub lattice_constant: f64,
    pub anion: String,
    pub cation: String,
}

impl Material {
    pub fn new(name: impl Into<String>, oips: OipSet, lattice_constant: f64) -> Self {
        Material {
            name: name.into(),
            oips,
            lattice_constant,
            anion: String::new(),
            cation: String::new(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_oips(&self.oips);
        if !(self.lattice_constant > 0.0 && self.lattice_constant.is_finite()) {
            report.violations.push(Violation { field: "lattice_constant", rule: RULE_LATTICE });
        }
        report
    }
}

/// Reduced wave vector, in units of 2π/a.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WaveVector {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

impl WaveVector {
    pub const GAMMA: WaveVector = WaveVector { kx: 0.0, ky: 0.0, kz: 0.0 };
    pub const X: WaveVector = WaveVector { kx: 1.0, ky: 0.0, kz: 0.0 };
    pub const L: WaveVector = WaveVector { kx: 0.5, ky: 0.5, kz: 0.5 };

    pub const fn new(kx: f64, ky: f64, kz: f64) -> Self {
        WaveVector { kx, ky, kz }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.kx, self.ky, self.kz]
    }

    pub fn is_finite(&self) -> bool {
        self.kx.is_finite() && self.ky.is_finite() && self.kz.is_finite()
    }

    pub fn scaled(&self, s: f64) -> Self {
        WaveVector::new(self.kx * s, self.ky * s, self.kz * s)
    }

    pub fn add(&self, other: &WaveVector) -> Self {
        WaveVector::new(self.kx + other.kx, self.ky + other.ky, self.kz + other.kz)
    }
}

pub const GAAS_LATTICE_CONSTANT: f64 = 5.6533;
pub const ALAS_LATTICE_CONSTANT: f64 = 5.6611;

/// Fitted 300 K parameters for GaAs.
pub const GAAS_OIPS: OipSet = OipSet {
    e_sa: -4.7642,
    e_sc: -6.0354,
    e_ssa: 9.0528,
    e_ssc: 5.3134,
    e_xayc: 5.2952,
    e_saxc: 1.9014,
    e_xasc: 11.6705,
    e_ssaxc: 3.8331,
    e_xassc: 4.7758,
    e_pa: 1.5776,
    e_pc: 3.2967,
    e_sasc: -6.7941,
    e_xaxc: 2.4006,
    delta_a: 0.421,
    delta_c: 0.174,
};

/// Fitted 300 K parameters for AlAs.
pub const ALAS_OIPS: OipSet = OipSet {
    e_sa: -8.1639,
    e_sc: -0.6369,
    e_ssa: 14.9740,
    e_ssc: 7.1118,
    e_xayc: 4.6210,
    e_saxc: 7.4231,
    e_xasc: 6.7832,
    e_ssaxc: 7.3042,
    e_xassc: 3.1458,
    e_pa: 1.4693,
    e_pc: 3.3875,
    e_sasc: -6.3951,
    e_xaxc: 2.3378,
    delta_a: 0.421,
    delta_c: 0.024,
};

pub fn gaas() -> Material {
    Material {
        anion: "As".into(),
        cation: "Ga".into(),
        ..Material::new("GaAs", GAAS_OIPS, GAAS_LATTICE_CONSTANT)
    }
}

pub fn alas() -> Material {
    Material {
        anion: "As".into(),
        cation: "Al".into(),
        ..Material::new("AlAs", ALAS_OIPS, ALAS_LATTICE_CONSTANT)
    }
}

/// The built-in materials, GaAs first.
pub fn material_database_defaults() -> Vec<Material> {
    vec![gaas(), alas()]
}

/// Materials keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialDb {
    materials: BTreeMap<String, Material>,
}

impl MaterialDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn defaults() -> Self {
        material_database_defaults().into_iter().collect()
    }

    pub fn insert(&mut self, m: Material) {
        self.materials.insert(m.name.clone(), m);
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials.get(name).ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    /// Loads every `*.json` material file in `dir` (sorted by file name).
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let io_err = |source| Error::Io { path: dir.display().to_string(), source };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        let mut db = MaterialDb::new();
        for p in paths {
            for m in read_material_file(&p)? {
                db.insert(m);
            }
        }
        Ok(db)
    }
}

impl FromIterator<Material> for MaterialDb {
    fn from_iter<I: IntoIterator<Item = Material>>(iter: I) -> Self {
        let mut db = MaterialDb::new();
        for m in iter {
            db.insert(m);
        }
        db
    }
}

/// On-disk form of a material.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRecord {
    pub name: String,
    pub lattice_constant_angstrom: f64,
    pub oips: OipSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cation: Option<String>,
}

impl From<&Material> for MaterialRecord {
    fn from(m: &Material) -> Self {
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        MaterialRecord {
            name: m.name.clone(),
            lattice_constant_angstrom: m.lattice_constant,
            oips: m.oips,
            anion: opt(&m.anion),
            cation: opt(&m.cation),
        }
    }
}

impl MaterialRecord {
    pub fn into_material(self) -> Result<Material> {
        let m = Material {
            name: self.name,
            oips: self.oips,
            lattice_constant: self.lattice_constant_angstrom,
            anion: self.anion.unwrap_or_default(),
            cation: self.cation.unwrap_or_default(),
        };
        m.validate().into_result()?;
        Ok(m)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(MaterialRecord),
    Many(Vec<MaterialRecord>),
}

/// Parses a material file: one material object or an array of them.
pub fn parse_materials(text: &str) -> Result<Vec<Material>> {
    // Untagged enums swallow the field-level error, so try the single-object
    // form first and report its error when the array form fails as well.
    let records = match serde_json::from_str::<MaterialRecord>(text) {
        Ok(r) => vec![r],
        Err(single_err) => match serde_json::from_str::<OneOrMany>(text) {
            Ok(OneOrMany::Many(v)) => v,
            Ok(OneOrMany::One(r)) => vec![r],
            Err(_) => {
                let err = if text.trim_start().starts_with('[') {
                    serde_json::from_str::<Vec<MaterialRecord>>(text).err().unwrap_or(single_err)
                } else {
                    single_err
                };
                return Err(Error::Json { context: "material file".into(), source: err });
            }
        },
    };
    records.into_iter().map(MaterialRecord::into_material).collect()
}

pub fn read_material_file(path: &Path) -> Result<Vec<Material>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_materials(&text).map_err(|e| match e {
        Error::Json { source, .. } => Error::Json { context: path.display().to_string(), source },
        other => other,
    })
}

pub fn material_to_json(m: &Material) -> String {
    serde_json::to_string_pretty(&MaterialRecord::from(m)).expect("material serializes")
}

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constraints::{expand, ConstraintAnchors, FreeParams};
use crate::error::{Error, Result};
use crate::model::{Material, MaterialDb, OipSet};
use crate::properties::{extract_features, targets_from_value, targets_to_value, Features, PropertyTarget};
use crate::superlattice::{build_sl_geometry, KSampling, LayerStack, SlOptions, Superlattice};

/// Cost of a genome that cannot be expanded or evaluated, before the
/// distance-to-feasibility is added.
pub const PENALTY: f64 = 1e9;

/// Default weight of a superlattice gap term.
pub const SL_WEIGHT: f64 = 1e6;

const DEFAULT_SPEC: &str = include_str!("../../data/cost_default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialTargets {
    pub material: String,
    pub anchors: ConstraintAnchors,
    #[serde(serialize_with = "ser_targets", deserialize_with = "de_targets", default)]
    pub targets: Vec<PropertyTarget>,
}

fn ser_targets<S: Serializer>(t: &[PropertyTarget], s: S) -> std::result::Result<S::Ok, S::Error> {
    targets_to_value(t).serialize(s)
}

fn de_targets<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<PropertyTarget>, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    targets_from_value(v).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlTarget {
    pub stack: LayerStack,
    pub gap: f64,
    #[serde(default = "sl_weight")]
    pub weight: f64,
}

fn sl_weight() -> f64 {
    SL_WEIGHT
}

/// Everything the weighted cost compares against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    /// Fitted materials, in genome order.
    pub materials: Vec<MaterialTargets>,
    #[serde(default)]
    pub superlattices: Vec<SlTarget>,
    #[serde(default)]
    pub sl_options: SlOptions,
    #[serde(default)]
    pub sl_sampling: KSampling,
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec::from_json(DEFAULT_SPEC).expect("embedded cost spec is valid")
    }
}

impl CostSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CostSpec =
            serde_json::from_str(text).map_err(|source| Error::Json { context: "cost spec".into(), source })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.materials.is_empty() {
            return Err(Error::Argument("cost spec lists no materials".into()));
        }
        for (i, m) in self.materials.iter().enumerate() {
            if self.materials[..i].iter().any(|o| o.material == m.material) {
                return Err(Error::Argument(format!("material {} listed twice in the cost spec", m.material)));
            }
            for (j, t) in m.targets.iter().enumerate() {
                if m.targets[..j].iter().any(|o| o.feature == t.feature) {
                    return Err(Error::Argument(format!("{}: duplicate target for {}", m.material, t.feature)));
                }
                if !(t.weight > 0.0 && t.weight.is_finite()) || t.target.is_some_and(|v| !v.is_finite()) {
                    return Err(Error::Argument(format!("{}: bad target or weight for {}", m.material, t.feature)));
                }
            }
        }
        for s in &self.superlattices {
            s.stack.validate()?;
            if !(s.weight > 0.0 && s.weight.is_finite()) || !s.gap.is_finite() {
                return Err(Error::Argument(format!("superlattice {}: bad gap or weight", s.stack)));
            }
        }
        Ok(())
    }

    /// Number of genes for each material.
    pub fn genes_per_material(use_eq5: bool) -> usize {
        if use_eq5 { 9 } else { 10 }
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> CostSpec {
        let mut s = self.clone();
        for m in &mut s.materials {
            for t in &mut m.targets {
                t.weight *= factor;
            }
        }
        for t in &mut s.superlattices {
            t.weight *= factor;
        }
        s
    }
}

/// One weighted residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostTerm {
    pub label: String,
    pub predicted: f64,
    pub target: f64,
    pub weight: f64,
    pub contribution: f64,
}

/// Weighted absolute residuals for given predictions: one [`Features`] per
/// spec material and one gap per spec superlattice. Targets without a value
/// are skipped.
pub fn cost_terms(spec: &CostSpec, bulk: &[Features], sl_gaps: &[f64]) -> Result<Vec<CostTerm>> {
    if bulk.len() != spec.materials.len() || sl_gaps.len() != spec.superlattices.len() {
        return Err(Error::Argument(format!(
            "expected {} feature sets and {} gaps, got {} and {}",
            spec.materials.len(),
            spec.superlattices.len(),
            bulk.len(),
            sl_gaps.len()
        )));
    }
    let bulk_terms = spec.materials.iter().zip(bulk).flat_map(|(m, f)| {
        m.targets.iter().filter_map(move |t| {
            let target = t.target?;
            let predicted = f.get(t.feature);
            Some(CostTerm {
                label: format!("{} {}", m.material, t.feature),
                predicted,
                target,
                weight: t.weight,
                contribution: t.weight * (predicted - target).abs(),
            })
        })
    });
    let sl_terms = spec.superlattices.iter().zip(sl_gaps).map(|(s, &g)| CostTerm {
        label: s.stack.to_string(),
        predicted: g,
        target: s.gap,
        weight: s.weight,
        contribution: s.weight * (g - s.gap).abs(),
    });
    Ok(bulk_terms.chain(sl_terms).collect())
}

pub fn weighted_cost(spec: &CostSpec, bulk: &[Features], sl_gaps: &[f64]) -> Result<f64> {
    Ok(cost_terms(spec, bulk, sl_gaps)?.iter().map(|t| t.contribution).sum())
}

/// Where a superlattice material's parameters come from.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Source {
    Fitted(usize),
    Fixed,
}

#[derive(Debug, Clone)]
struct CachedSl {
    lattice: Superlattice,
    sources: Vec<Source>,
}

/// A [`CostSpec`] bound to reference materials, with superlattice geometry
/// prepared once.
#[derive(Debug, Clone)]
pub struct CostModel {
    spec: CostSpec,
    materials: Vec<Material>,
    sls: Vec<CachedSl>,
    use_eq5: bool,
}

/// Predictions and cost of one genome.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    pub oips: Vec<OipSet>,
    pub features: Vec<Features>,
    pub sl_gaps: Vec<f64>,
}

impl CostModel {
    /// `db` supplies lattice constants and the parameters of superlattice
    /// materials that are not fitted.
    pub fn new(spec: CostSpec, db: &MaterialDb, use_eq5: bool) -> Result<Self> {
        spec.validate()?;
        let materials = spec.materials.iter().map(|m| db.get(&m.material).cloned()).collect::<Result<Vec<_>>>()?;
        if use_eq5 {
            if let Some(m) = spec.materials.iter().find(|m| m.anchors.e_so1.is_none()) {
                return Err(Error::Argument(format!("{}: deriving E_pa needs an e_so1 anchor", m.material)));
            }
        }
        let sls = spec
            .superlattices
            .iter()
            .map(|t| {
                let geometry = build_sl_geometry(&t.stack, db, &spec.sl_options)?;
                let sources = geometry
                    .materials
                    .iter()
                    .map(|gm| match spec.materials.iter().position(|m| m.material == gm.name) {
                        Some(i) => Source::Fitted(i),
                        None => Source::Fixed,
                    })
                    .collect();
                Ok(CachedSl { lattice: Superlattice::from_geometry(geometry)?, sources })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CostModel { spec, materials, sls, use_eq5 })
    }

    pub fn spec(&self) -> &CostSpec {
        &self.spec
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn use_eq5(&self) -> bool {
        self.use_eq5
    }

    pub fn genes_per_material(&self) -> usize {
        CostSpec::genes_per_material(self.use_eq5)
    }

    pub fn genome_len(&self) -> usize {
        self.materials.len() * self.genes_per_material()
    }

    /// Genome of the reference materials' own parameters.
    pub fn reference_genome(&self) -> Vec<f64> {
        let n = self.genes_per_material();
        self.materials.iter().flat_map(|m| FreeParams::from_oips(&m.oips).to_genes().into_iter().take(n)).collect()
    }

    /// Splits a genome into per-material free parameters.
    pub fn free_params(&self, genome: &[f64]) -> Result<Vec<FreeParams>> {
        if genome.len() != self.genome_len() {
            return Err(Error::Argument(format!("genome has {} genes, expected {}", genome.len(), self.genome_len())));
        }
        Ok(genome
            .chunks(self.genes_per_material())
            .map(|g| FreeParams::from_genes(g).expect("chunk length is 9 or 10"))
            .collect())
    }

    /// Constraint expansion of every material. The error carries the summed
    /// shortfall of all infeasible materials.
    pub fn expand(&self, genome: &[f64]) -> Result<std::result::Result<Vec<OipSet>, f64>> {
        let free = self.free_params(genome)?;
        let mut shortfall = None;
        let mut out = Vec::with_capacity(free.len());
        for (f, m) in free.iter().zip(&self.spec.materials) {
            match expand(f, &m.anchors, self.use_eq5) {
                Ok(o) => out.push(o),
                Err(e) => *shortfall.get_or_insert(0.0) += e.shortfall(),
            }
        }
        Ok(shortfall.map_or(Ok(out), Err))
    }

    /// Full evaluation for a feasible parameter set, one per spec material.
    pub fn evaluate_oips(&self, oips: &[OipSet]) -> Result<Evaluation> {
        let features = oips
            .iter()
            .zip(&self.materials)
            .map(|(o, m)| extract_features(o, m.lattice_constant))
            .collect::<Result<Vec<_>>>()?;
        let sl_gaps = self.sls.iter().map(|s| self.raw_sl_gap(s, oips)).collect::<Result<Vec<_>>>()?;
        let cost = weighted_cost(&self.spec, &features, &sl_gaps)?;
        Ok(Evaluation { cost, oips: oips.to_vec(), features, sl_gaps })
    }

    /// Lowest conduction minus highest valence level over the sampling,
    /// negative when the bands overlap.
    fn raw_sl_gap(&self, sl: &CachedSl, oips: &[OipSet]) -> Result<f64> {
        let set: Vec<OipSet> = sl
            .sources
            .iter()
            .zip(&sl.lattice.geometry.materials)
            .map(|(s, m)| match s {
                Source::Fitted(i) => oips[*i],
                Source::Fixed => m.oips,
            })
            .collect();
        let lattice = sl.lattice.with_oips(&set)?;
        let (mut vbm, mut cbm) = (f64::NEG_INFINITY, f64::INFINITY);
        for (_, k) in self.spec.sl_sampling.points() {
            let (v, c) = lattice.band_edges(&k)?;
            vbm = vbm.max(v);
            cbm = cbm.min(c);
        }
        Ok(cbm - vbm)
    }

    /// Cost of a genome. Never fails: infeasible genomes cost
    /// `PENALTY + shortfall`, and any other failure or non-finite result
    /// costs `2·PENALTY`.
    pub fn cost(&self, genome: &[f64]) -> f64 {
        let fallback = 2.0 * PENALTY;
        match self.expand(genome) {
            Ok(Ok(oips)) => match self.evaluate_oips(&oips) {
                Ok(e) if e.cost.is_finite() => e.cost,
                Ok(_) => fallback,
                Err(e) => {
                    log::debug!("genome evaluation failed: {e}");
                    fallback
                }
            },
            Ok(Err(shortfall)) => PENALTY + shortfall.min(PENALTY * 0.5),
            Err(_) => fallback,
        }
    }
}

/// Names of the genes of a genome laid out by `model`.
pub fn gene_labels(model: &CostModel) -> Vec<String> {
    let n = model.genes_per_material();
    model
        .materials()
        .iter()
        .flat_map(|m| FreeParams::GENE_NAMES[..n].iter().map(move |g| format!("{}.{g}", m.name)))
        .collect()
}

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{CostModel, CostSpec};
use crate::constraints::FreeParams;
use crate::error::{Error, Result};
use crate::model::{Material, MaterialDb, OipSet};
use crate::superlattice::KSampling;

/// Closed interval for one gene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneBound {
    pub low: f64,
    pub high: f64,
}

impl GeneBound {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.low, self.high)
    }

    /// `[v(1−f), v(1+f)]` ordered, so the sign of `v` is kept when `f < 1`.
    pub fn around(v: f64, fraction: f64) -> GeneBound {
        let (a, b) = (v * (1.0 - fraction), v * (1.0 + fraction));
        GeneBound { low: a.min(b), high: a.max(b) }
    }
}

/// Genetic-algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub population_size: usize,
    pub generations: usize,
    pub seed: u64,
    /// Half-width of the default gene box relative to the reference value.
    pub bound_fraction: f64,
    /// Explicit bounds per material, keyed by gene name; anything missing
    /// falls back to `bound_fraction`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub bounds: BTreeMap<String, BTreeMap<String, GeneBound>>,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of the gene range.
    pub mutation_sigma: f64,
    pub elite_fraction: f64,
    /// Derive `E_pa` from the `e_so1` anchor instead of fitting it.
    pub use_eq5: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            population_size: 10_000,
            generations: 453,
            seed: 0,
            bound_fraction: 0.6,
            bounds: BTreeMap::new(),
            tournament_size: 4,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            elite_fraction: 0.02,
            use_eq5: false,
        }
    }
}

impl FitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: FitConfig =
            serde_json::from_str(text).map_err(|source| Error::Json { context: "fit config".into(), source })?;
        c.validate()?;
        Ok(c)
    }

    /// Reduced scale for quick checks.
    pub fn smoke() -> Self {
        FitConfig { population_size: 200, generations: 50, seed: 42, ..FitConfig::default() }
    }

    /// Superlattice sampling used with [`FitConfig::smoke`].
    pub const SMOKE_SAMPLING: KSampling = KSampling::GAMMA_AND_EDGE;

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.population_size < 2 {
            return bad(format!("population_size must be at least 2, got {}", self.population_size));
        }
        if self.generations < 1 {
            return bad("generations must be at least 1".into());
        }
        if !(self.bound_fraction > 0.0 && self.bound_fraction.is_finite()) {
            return bad(format!("bound_fraction must be positive, got {}", self.bound_fraction));
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be at least 1".into());
        }
        if !unit(self.crossover_rate) || !unit(self.mutation_rate) || !unit(self.elite_fraction) {
            return bad("crossover_rate, mutation_rate and elite_fraction must lie in [0, 1]".into());
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad(format!("mutation_sigma must be non-negative, got {}", self.mutation_sigma));
        }
        for (mat, genes) in &self.bounds {
            for (gene, b) in genes {
                if !FreeParams::GENE_NAMES.contains(&gene.as_str()) {
                    return bad(format!("{mat}: unknown gene `{gene}` in bounds"));
                }
                if !(b.low.is_finite() && b.high.is_finite() && b.low < b.high) {
                    return bad(format!("{mat}.{gene}: bounds must be finite with low < high"));
                }
            }
        }
        Ok(())
    }

    /// Individuals carried over unchanged each generation.
    pub fn elite_count(&self) -> usize {
        if self.elite_fraction <= 0.0 {
            return 0;
        }
        ((self.elite_fraction * self.population_size as f64).ceil() as usize).clamp(1, self.population_size - 1)
    }

    /// Cost evaluations of a full run.
    pub fn evaluations(&self) -> u64 {
        let per_gen = (self.population_size - self.elite_count()) as u64;
        self.population_size as u64 + self.generations as u64 * per_gen
    }

    /// Wall time of a run given the measured cost of one evaluation and the
    /// number of worker threads.
    pub fn estimate_runtime(&self, per_evaluation: Duration, threads: usize) -> Duration {
        per_evaluation.mul_f64(self.evaluations() as f64 / threads.max(1) as f64)
    }

    /// Gene box for every gene of `model`'s genome.
    pub fn gene_bounds(&self, model: &CostModel) -> Result<Vec<GeneBound>> {
        for name in self.bounds.keys() {
            if !model.materials().iter().any(|m| &m.name == name) {
                return Err(Error::Argument(format!("bounds given for `{name}`, which is not fitted")));
            }
        }
        let n = model.genes_per_material();
        let mut out = Vec::with_capacity(model.genome_len());
        for m in model.materials() {
            let reference = FreeParams::from_oips(&m.oips).to_genes();
            let explicit = self.bounds.get(&m.name);
            for (gene, &v) in FreeParams::GENE_NAMES[..n].iter().zip(&reference) {
                let b = match explicit.and_then(|e| e.get(*gene)) {
                    Some(b) => *b,
                    None => GeneBound::around(v, self.bound_fraction),
                };
                if !(b.width() > 0.0) {
                    return Err(Error::Argument(format!(
                        "{}.{gene}: reference value {v} gives an empty box; set explicit bounds",
                        m.name
                    )));
                }
                out.push(b);
            }
        }
        Ok(out)
    }
}

/// Measures the mean cost of a few evaluations of random genomes.
pub fn time_evaluation(model: &CostModel, config: &FitConfig, samples: usize) -> Result<Duration> {
    let bounds = config.gene_bounds(model)?;
    let start = Instant::now();
    for i in 0..samples.max(1) {
        let g = random_genome(&bounds, &mut stream_rng(config.seed, 0, i));
        std::hint::black_box(model.cost(&g));
    }
    Ok(start.elapsed() / samples.max(1) as u32)
}

/// Deterministic generator for individual `index` of generation `generation`.
fn stream_rng(seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | index as u64);
    rng
}

fn random_genome(bounds: &[GeneBound], rng: &mut ChaCha8Rng) -> Vec<f64> {
    bounds.iter().map(|b| b.low + rng.random::<f64>() * b.width()).collect()
}

fn cost_or_penalty(model: &CostModel, genome: &[f64]) -> f64 {
    let c = model.cost(genome);
    if c.is_finite() { c } else { 2.0 * super::cost::PENALTY }
}

/// A running optimization; [`GeneticAlgorithm::run`] drives it to the end.
pub struct GeneticAlgorithm<'a> {
    model: &'a CostModel,
    config: FitConfig,
    bounds: Vec<GeneBound>,
    generation: usize,
    population: Vec<Vec<f64>>,
    costs: Vec<f64>,
    history: Vec<f64>,
}

impl<'a> GeneticAlgorithm<'a> {
    /// Draws and evaluates the initial population.
    pub fn new(model: &'a CostModel, config: FitConfig) -> Result<Self> {
        config.validate()?;
        if config.use_eq5 != model.use_eq5() {
            return Err(Error::Argument("fit config and cost model disagree on use_eq5".into()));
        }
        let bounds = config.gene_bounds(model)?;
        let population: Vec<Vec<f64>> = (0..config.population_size)
            .into_par_iter()
            .map(|i| random_genome(&bounds, &mut stream_rng(config.seed, 0, i)))
            .collect();
        let costs: Vec<f64> = population.par_iter().map(|g| cost_or_penalty(model, g)).collect();
        let mut ga = GeneticAlgorithm { model, config, bounds, generation: 0, population, costs, history: Vec::new() };
        ga.history.push(ga.best().1);
        Ok(ga)
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Vec<f64>] {
        &self.population
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn bounds(&self) -> &[GeneBound] {
        &self.bounds
    }

    /// Best cost after each generation, the initial population first.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Index and cost of the best individual; ties go to the lower index.
    pub fn best(&self) -> (usize, f64) {
        self.costs
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("population is never empty")
    }

    fn tournament(&self, rng: &mut ChaCha8Rng) -> usize {
        let n = self.population.len();
        (0..self.config.tournament_size)
            .map(|_| rng.random_range(0..n))
            .min_by(|&a, &b| self.costs[a].total_cmp(&self.costs[b]).then(a.cmp(&b)))
            .expect("tournament size is at least 1")
    }

    fn offspring(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let a = &self.population[self.tournament(rng)];
        let b = &self.population[self.tournament(rng)];
        let cross = rng.random::<f64>() < self.config.crossover_rate;
        a.iter()
            .zip(b)
            .zip(&self.bounds)
            .map(|((&x, &y), bound)| {
                let mut g = if cross && rng.random::<bool>() { y } else { x };
                if rng.random::<f64>() < self.config.mutation_rate {
                    let sigma = self.config.mutation_sigma * bound.width();
                    if sigma > 0.0 {
                        g += Normal::new(0.0, sigma).expect("sigma is positive and finite").sample(rng);
                    }
                }
                bound.clamp(g)
            })
            .collect()
    }

    /// Breeds and evaluates one generation.
    pub fn step(&mut self) {
        let next = self.generation + 1;
        let mut order: Vec<usize> = (0..self.population.len()).collect();
        order.sort_by(|&a, &b| self.costs[a].total_cmp(&self.costs[b]).then(a.cmp(&b)));
        let elites = self.config.elite_count();

        let children: Vec<(Vec<f64>, f64)> = (elites..self.population.len())
            .into_par_iter()
            .map(|i| {
                let child = self.offspring(&mut stream_rng(self.config.seed, next, i));
                let cost = cost_or_penalty(self.model, &child);
                (child, cost)
            })
            .collect();

        let (mut population, mut costs): (Vec<_>, Vec<_>) =
            order[..elites].iter().map(|&i| (self.population[i].clone(), self.costs[i])).unzip();
        for (g, c) in children {
            population.push(g);
            costs.push(c);
        }
        self.population = population;
        self.costs = costs;
        self.generation = next;
        let best = self.best().1;
        self.history.push(best);
        log::info!("generation {next}: best cost {best:.6e}");
    }

    pub fn run(mut self) -> Result<FitResult> {
        while self.generation < self.config.generations {
            self.step();
        }
        self.into_result()
    }

    pub fn into_result(self) -> Result<FitResult> {
        let (i, best_cost) = self.best();
        let genome = self.population[i].clone();
        let free = self.model.free_params(&genome)?;
        let oips: Vec<OipSet> = match self.model.expand(&genome)? {
            Ok(o) => o,
            Err(shortfall) => {
                return Err(Error::Domain(format!(
                    "no feasible genome found (best shortfall {shortfall:.3e}); widen the bounds or grow the population"
                )))
            }
        };
        let materials = self
            .model
            .materials()
            .iter()
            .zip(free)
            .zip(oips)
            .map(|((m, free), oips)| FittedMaterial {
                name: m.name.clone(),
                lattice_constant: m.lattice_constant,
                free,
                oips,
            })
            .collect();
        Ok(FitResult {
            seed: self.config.seed,
            config: self.config,
            cost_spec: self.model.spec().clone(),
            best_cost,
            genome,
            materials,
            history: self.history,
        })
    }
}

/// Runs the genetic algorithm to completion.
pub fn ga_fit(spec: &CostSpec, config: &FitConfig, db: &MaterialDb) -> Result<FitResult> {
    config.validate()?;
    let model = CostModel::new(spec.clone(), db, config.use_eq5)?;
    GeneticAlgorithm::new(&model, config.clone())?.run()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittedMaterial {
    pub name: String,
    pub lattice_constant: f64,
    pub free: FreeParams,
    pub oips: OipSet,
}

impl FittedMaterial {
    pub fn material(&self, template: Option<&Material>) -> Material {
        let mut m = Material::new(self.name.clone(), self.oips, self.lattice_constant);
        if let Some(t) = template {
            m.anion = t.anion.clone();
            m.cation = t.cation.clone();
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitResult {
    pub seed: u64,
    pub config: FitConfig,
    pub cost_spec: CostSpec,
    pub best_cost: f64,
    pub genome: Vec<f64>,
    pub materials: Vec<FittedMaterial>,
    /// Best cost of the initial population, then after every generation.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json { context: "fit result".into(), source })
    }

    /// `base` with the fitted materials replacing their namesakes.
    pub fn material_db(&self, base: &MaterialDb) -> MaterialDb {
        let mut db = base.clone();
        for f in &self.materials {
            let template = base.get(&f.name).ok();
            db.insert(f.material(template));
        }
        db
    }
}

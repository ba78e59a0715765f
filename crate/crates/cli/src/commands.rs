use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use serde_json::json;

use oiptb::alloy::{cutoff_sweep, BarrierPolicy};
use oiptb::bulk::band_energies;
use oiptb::fitting::{ga_fit, time_evaluation, CostModel, CostSpec, FitConfig};
use oiptb::io::{bands_csv, parse_numeric_csv, sweep_csv, KPath};
use oiptb::model::{material_to_json, read_material_file, Material, MaterialDb};
use oiptb::properties::{cutoff_wavelength, extract_features, parse_targets, property_report};
use oiptb::superlattice::{sl_gap, KSampling, LayerStack, SlOptions};

use crate::manifest::{OutputDir, RunManifest};
use crate::{Cli, Command, Failure, MATERIALS_DIR_ENV};

type CmdResult<T = ()> = Result<T, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

fn read_text(path: &Path) -> CmdResult<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

/// Built-in materials, or the directory named by the environment, plus any
/// `--material-file`s.
fn material_db(cli: &Cli) -> CmdResult<MaterialDb> {
    let mut db = match std::env::var_os(MATERIALS_DIR_ENV) {
        Some(dir) => MaterialDb::load_dir(Path::new(&dir))
            .with_context(|| format!("loading materials from ${MATERIALS_DIR_ENV}"))
            .map_err(usage)?,
        None => MaterialDb::defaults(),
    };
    for f in &cli.global.material_files {
        for m in read_material_file(f).map_err(usage)? {
            db.insert(m);
        }
    }
    Ok(db)
}

/// A database name, or a file holding exactly one material.
fn resolve_material(db: &MaterialDb, spec: &str) -> CmdResult<Material> {
    let path = Path::new(spec);
    if path.is_file() {
        let mut ms = read_material_file(path).map_err(usage)?;
        if ms.len() != 1 {
            return Err(usage(anyhow!("{spec} holds {} materials; expected exactly one", ms.len())));
        }
        return Ok(ms.remove(0));
    }
    db.get(spec).cloned().map_err(usage)
}

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Bands(a) => bands(cli, a),
        Command::Props(a) => props(cli, a),
        Command::SlGap(a) => sl_gap_cmd(cli, a),
        Command::Fit(a) => fit(cli, a),
        Command::QwSweep(a) => qw_sweep(cli, a),
    }
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    /// Material name or material JSON file.
    #[arg(long, default_value = "GaAs")]
    pub material: String,
    /// Symmetry points joined by '-', e.g. L-Γ-X (G is accepted for Γ).
    #[arg(long, default_value = "L-Γ-X")]
    pub path: String,
    /// Points per segment, both ends included.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
}

fn bands(cli: &Cli, a: &BandsArgs) -> CmdResult {
    let db = material_db(cli)?;
    let m = resolve_material(&db, &a.material)?;
    let path = KPath::parse(&a.path, a.samples).map_err(usage)?;
    let samples = path.samples();
    let energies = samples
        .iter()
        .map(|s| band_energies(&m.oips, &s.k, m.lattice_constant))
        .collect::<Result<Vec<_>, _>>()?;
    let csv = bands_csv(&samples, &energies).map_err(numerical)?;

    let mut manifest = RunManifest::new(cli.global.seed);
    manifest.digest("material", material_to_json(&m).as_bytes());
    manifest.digest("path", format!("{}:{}", path.label(), a.samples).as_bytes());
    let mut out = OutputDir::create(&cli.global.out, manifest).map_err(usage)?;
    let file = out.write("bands.csv", &csv).map_err(usage)?;
    out.finish("bands").map_err(usage)?;
    println!("{} k points of {} written to {}", samples.len(), m.name, file.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct PropsArgs {
    #[arg(long, default_value = "GaAs")]
    pub material: String,
    /// JSON object of feature label to target; omitted or empty gives a
    /// computed-only report.
    #[arg(long)]
    pub targets: Option<PathBuf>,
}

fn props(cli: &Cli, a: &PropsArgs) -> CmdResult {
    let db = material_db(cli)?;
    let m = resolve_material(&db, &a.material)?;
    let targets_text = match &a.targets {
        Some(p) => read_text(p)?,
        None => String::new(),
    };
    let targets = if targets_text.trim().is_empty() {
        Vec::new()
    } else {
        parse_targets(&targets_text).with_context(|| "targets file").map_err(usage)?
    };
    let features = extract_features(&m.oips, m.lattice_constant)?;
    let report = property_report(&features, &targets)?;
    let mut body = report.to_json();
    body.as_object_mut().expect("report is an object").insert("material".into(), json!(m.name));

    let mut manifest = RunManifest::new(cli.global.seed);
    manifest.digest("material", material_to_json(&m).as_bytes());
    manifest.digest("targets", targets_text.as_bytes());
    let mut out = OutputDir::create(&cli.global.out, manifest).map_err(usage)?;
    let file = out.write("props.json", &pretty(&body)).map_err(usage)?;
    out.finish("props").map_err(usage)?;
    match report.mape.all {
        Some(p) => println!("{}: MAPE {p:.2}% over targeted features; report in {}", m.name, file.display()),
        None => println!("{}: report in {}", m.name, file.display()),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SlGapArgs {
    /// Well monolayers.
    #[arg(short, long)]
    pub m: Option<usize>,
    /// Barrier monolayers.
    #[arg(short, long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "GaAs")]
    pub well: String,
    #[arg(long, default_value = "AlAs")]
    pub barrier: String,
    /// Full stack instead of m/n, e.g. "GaAs:9,AlAs:4".
    #[arg(long, conflicts_with_all = ["m", "n"])]
    pub stack: Option<String>,
    /// Axial k points after Γ̄.
    #[arg(long, default_value_t = 32)]
    pub axial_points: usize,
    /// Also sample the in-plane zone-edge points.
    #[arg(long)]
    pub in_plane_edges: bool,
    /// Ideal (unstrained) geometry.
    #[arg(long)]
    pub no_strain: bool,
}

fn sl_gap_cmd(cli: &Cli, a: &SlGapArgs) -> CmdResult {
    let stack = match (&a.stack, a.m, a.n) {
        (Some(s), _, _) => s.parse::<LayerStack>().map_err(usage)?,
        (None, Some(m), Some(n)) => LayerStack::binary(&a.well, m, &a.barrier, n).map_err(usage)?,
        _ => return Err(usage(anyhow!("give either --stack or both -m and -n"))),
    };
    let db = material_db(cli)?;
    for name in stack.layers.iter().map(|l| &l.material) {
        db.get(name).map_err(usage)?;
    }
    let options = SlOptions { strain: !a.no_strain, ..SlOptions::default() };
    let sampling = KSampling { axial_points: a.axial_points, in_plane_edges: a.in_plane_edges };
    let report = sl_gap(&stack, &db, &options, &sampling).map_err(numerical)?;
    let cutoff = cutoff_wavelength(report.gap).map_err(numerical)?;
    let body = json!({
        "stack": stack.to_string(),
        "gap_ev": report.gap,
        "character": report.character,
        "flag": report.character.flag().to_string(),
        "cbm_location": report.cbm_location,
        "vbm_energy_ev": report.vbm_energy,
        "cutoff_um": cutoff,
    });

    let mut manifest = RunManifest::new(cli.global.seed);
    for l in &stack.layers {
        manifest.digest(&format!("material:{}", l.material), material_to_json(db.get(&l.material)?).as_bytes());
    }
    manifest.digest("stack", stack.to_string().as_bytes());
    manifest.digest("sampling", serde_json::to_string(&sampling).expect("serializes").as_bytes());
    let mut out = OutputDir::create(&cli.global.out, manifest).map_err(usage)?;
    out.write("sl_gap.json", &pretty(&body)).map_err(usage)?;
    out.finish("sl_gap").map_err(usage)?;
    println!("{stack}: {:.4} eV ({}), cutoff {cutoff:.4} um", report.gap, report.character.flag());
    Ok(())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Fit configuration JSON (defaults: population 10000, 453 generations).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cost specification JSON (default: built-in bulk and superlattice targets).
    #[arg(long)]
    pub cost: Option<PathBuf>,
    /// Reduced scale: population 200, 50 generations, Γ̄ and Z̄ sampling.
    #[arg(long, conflicts_with = "config")]
    pub smoke: bool,
    /// Only report the estimated runtime.
    #[arg(long)]
    pub estimate: bool,
}

fn fit(cli: &Cli, a: &FitArgs) -> CmdResult {
    let mut config = match (&a.config, a.smoke) {
        (Some(p), _) => FitConfig::from_json(&read_text(p)?).map_err(usage)?,
        (None, true) => FitConfig::smoke(),
        (None, false) => FitConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    let mut spec = match &a.cost {
        Some(p) => CostSpec::from_json(&read_text(p)?).map_err(usage)?,
        None => CostSpec::default(),
    };
    if a.smoke {
        spec.sl_sampling = FitConfig::SMOKE_SAMPLING;
    }
    let db = material_db(cli)?;
    let model = CostModel::new(spec.clone(), &db, config.use_eq5).map_err(usage)?;
    config.gene_bounds(&model).map_err(usage)?;

    let per_eval = time_evaluation(&model, &config, 3).map_err(usage)?;
    let threads = rayon::current_num_threads();
    let estimate = config.estimate_runtime(per_eval, threads);
    let summary = format!(
        "population {} x {} generations = {} evaluations at {:.1} ms on {threads} thread(s): about {:.0} s",
        config.population_size,
        config.generations,
        config.evaluations(),
        per_eval.as_secs_f64() * 1e3,
        estimate.as_secs_f64()
    );
    if a.estimate {
        println!("{summary}");
        return Ok(());
    }
    log::info!("{summary}");

    let result = ga_fit(&spec, &config, &db).map_err(numerical)?;

    let config_json = serde_json::to_string_pretty(&config).expect("config serializes");
    let mut manifest = RunManifest::new(Some(config.seed));
    manifest.digest("fit_config", config_json.as_bytes());
    manifest.digest("cost_spec", spec.to_json().as_bytes());
    let mut out = OutputDir::create(&cli.global.out, manifest).map_err(usage)?;
    out.write("fit_result.json", &(result.to_json() + "\n")).map_err(usage)?;
    for f in &result.materials {
        let m = f.material(db.get(&f.name).ok());
        out.write(&format!("{}.fitted.json", f.name), &(material_to_json(&m) + "\n")).map_err(usage)?;
    }
    out.finish("fit").map_err(usage)?;
    let first = result.history[0];
    println!(
        "best cost {:.6e} after {} generations ({:.2}% of the initial best {:.6e})",
        result.best_cost,
        config.generations,
        100.0 * result.best_cost / first,
        first
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct QwSweepArgs {
    /// Barrier compositions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4])]
    pub x: Vec<f64>,
    /// Well thicknesses in monolayers: "3..40" (inclusive) or a comma list.
    #[arg(long, default_value = "3..40")]
    pub thickness: String,
    #[arg(long, default_value = "GaAs")]
    pub well: String,
    /// Alloy end point mixed into the well material.
    #[arg(long, default_value = "AlAs")]
    pub barrier: String,
    /// First barrier thickness tried in the convergence check.
    #[arg(long, default_value_t = 16)]
    pub initial_barrier: usize,
    #[arg(long, default_value_t = 512)]
    pub max_barrier: usize,
}

fn parse_thicknesses(s: &str) -> anyhow::Result<Vec<usize>> {
    let v: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
        if a > b {
            return Err(anyhow!("empty thickness range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err(anyhow!("thicknesses must be at least one monolayer"));
    }
    Ok(v)
}

fn qw_sweep(cli: &Cli, a: &QwSweepArgs) -> CmdResult {
    let thicknesses = parse_thicknesses(&a.thickness).with_context(|| format!("--thickness {}", a.thickness)).map_err(usage)?;
    if a.x.is_empty() || a.x.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(usage(anyhow!("every composition must lie in [0, 1]")));
    }
    if a.initial_barrier == 0 || a.max_barrier < a.initial_barrier {
        return Err(usage(anyhow!("need 1 <= --initial-barrier <= --max-barrier")));
    }
    let db = material_db(cli)?;
    let well = resolve_material(&db, &a.well)?;
    let end = resolve_material(&db, &a.barrier)?;
    let policy = BarrierPolicy { initial_ml: a.initial_barrier, max_ml: a.max_barrier };
    let rows = cutoff_sweep(&well, &end, &thicknesses, &a.x, &policy, &SlOptions::default())?;
    let csv = sweep_csv(&rows);
    check_sweep_trends(&csv);

    let mut manifest = RunManifest::new(cli.global.seed);
    manifest.digest("well", material_to_json(&well).as_bytes());
    manifest.digest("barrier_endpoint", material_to_json(&end).as_bytes());
    manifest.digest("grid", format!("x={:?};t={:?};{:?}", a.x, thicknesses, policy).as_bytes());
    let mut out = OutputDir::create(&cli.global.out, manifest).map_err(usage)?;
    let file = out.write("qw_sweep.csv", &csv).map_err(usage)?;
    out.finish("qw_sweep").map_err(usage)?;
    println!("{} rows written to {}", rows.len(), file.display());
    Ok(())
}

/// Warns when the emitted cutoff wavelengths are not increasing in thickness
/// for every composition.
fn check_sweep_trends(csv: &str) {
    let Ok((_, rows)) = parse_numeric_csv(csv) else {
        log::warn!("sweep CSV does not parse back");
        return;
    };
    let mut series: std::collections::BTreeMap<u64, Vec<(f64, f64)>> = Default::default();
    for r in &rows {
        series.entry(r[1].to_bits()).or_default().push((r[0], r[3]));
    }
    for (x, mut s) in series {
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        if s.windows(2).any(|w| w[1].1 <= w[0].1) {
            log::warn!("cutoff wavelength is not increasing with thickness at x = {}", f64::from_bits(x));
        }
    }
}

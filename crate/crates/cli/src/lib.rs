//! Everything the `fixflex` binary does, exposed as functions so the
//! integration suite can drive runs in-process: input discovery, single
//! scenario execution, the batch runner, and input validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;

use fixflex_core::{
    apply_zonal_partition, build_supernetwork, compute_metrics, load_demand, load_matrix,
    load_networks, load_zone_map, run_equilibrium, write_outputs, EquilibriumInputs, FrtLine,
    MetricsReport, MicroState, Network, Params, ScenarioConfig, TravelerProfile,
};

/// Input files resolved against one directory: `street.csv` and
/// `frt_lines.csv` are required (the line file may contain zero lines),
/// `demand.csv` is required, `zones.csv` is picked up when present.
#[derive(Debug, Clone)]
pub struct InputSet {
    pub dir: PathBuf,
    pub street: PathBuf,
    pub frt_lines: PathBuf,
    pub demand: PathBuf,
    pub zones: Option<PathBuf>,
}

impl InputSet {
    pub fn discover(dir: &Path) -> Result<InputSet> {
        if !dir.is_dir() {
            bail!("input directory {} does not exist", dir.display());
        }
        let require = |name: &str| -> Result<PathBuf> {
            let p = dir.join(name);
            if !p.is_file() {
                bail!("missing input file {}", p.display());
            }
            Ok(p)
        };
        let zones = dir.join("zones.csv");
        Ok(InputSet {
            dir: dir.to_path_buf(),
            street: require("street.csv")?,
            frt_lines: require("frt_lines.csv")?,
            demand: require("demand.csv")?,
            zones: zones.is_file().then_some(zones),
        })
    }
}

/// Parsed inputs, shared by every scenario in a batch. The walk network is
/// derived at the batch's walk speed, so batches assume one speed across
/// rows (single runs re-load with their own).
pub struct LoadedInputs {
    pub auto: Network,
    pub walk: Network,
    pub lines: Vec<FrtLine>,
    pub travelers: Vec<TravelerProfile>,
    pub zone_map: Option<BTreeMap<u32, u32>>,
}

pub fn load_inputs(inputs: &InputSet, params: &Params) -> Result<LoadedInputs> {
    let (mut auto, mut walk, lines) =
        load_networks(&inputs.street, &inputs.frt_lines, None, params.walk_speed_mph)
            .context("loading networks")?;
    let travelers = load_demand(&inputs.demand).context("loading demand")?;
    if travelers.is_empty() {
        bail!("{} contains no travelers", inputs.demand.display());
    }
    let zone_map = match &inputs.zones {
        Some(p) => Some(load_zone_map(p).context("loading zone map")?),
        None => None,
    };
    // zone labels drive per-zone reporting whether or not service is
    // partitioned, so apply them at load
    if let Some(map) = &zone_map {
        walk.set_zones(map).context("applying zones.csv")?;
        auto.set_zones(map).context("applying zones.csv")?;
    }
    Ok(LoadedInputs {
        auto,
        walk,
        lines,
        travelers,
        zone_map,
    })
}

/// A finished run: where it wrote and what it concluded.
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: MetricsReport,
}

/// Execute one scenario end to end — build the supernetwork, iterate demand
/// against fleet performance, compute metrics — and write the output bundle
/// under `out_root/<scenario_id>/`.
pub fn run_scenario(cfg: &ScenarioConfig, inputs: &InputSet, out_root: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let loaded = load_inputs(inputs, &cfg.params)?;
    run_loaded(cfg, inputs, &loaded, out_root)
}

/// Same as [`run_scenario`] but over inputs already in memory.
pub fn run_loaded(
    cfg: &ScenarioConfig,
    inputs: &InputSet,
    loaded: &LoadedInputs,
    out_root: &Path,
) -> Result<RunOutcome> {
    let mut cfg = cfg.clone();
    // partition without an explicit map falls back to the input set's
    if cfg.partition && cfg.zone_file.is_none() {
        cfg.zone_file = inputs.zones.clone();
    }
    cfg.validate()?;
    let cfg = &cfg;

    let cold = MicroState {
        detour_ratio: cfg.params.cold_start_detour,
        mean_wait_s: cfg.params.cold_start_wait_s,
    };
    let mut supernet = build_supernetwork(&loaded.walk, &loaded.auto, &loaded.lines, cfg, cold)
        .context("building supernetwork")?;

    if cfg.partition {
        let path = resolve_input_path(
            cfg.zone_file.as_ref().expect("validate requires a zone file"),
            &inputs.dir,
        );
        let map = match (&loaded.zone_map, &inputs.zones) {
            (Some(m), Some(z)) if *z == path => m.clone(),
            _ => load_zone_map(&path).context("loading partition zone map")?,
        };
        supernet = apply_zonal_partition(&supernet, &map).context("applying zonal partition")?;
    }

    let result = run_equilibrium(EquilibriumInputs {
        supernet,
        auto_net: &loaded.auto,
        travelers: &loaded.travelers,
        cfg,
    })?;
    let report = compute_metrics(cfg, &result)?;
    let out_dir = out_root.join(&cfg.scenario_id);
    write_outputs(&out_dir, cfg, &report, &result)?;
    info!(
        "scenario {}: converged={} iterations={} gap={:?}",
        cfg.scenario_id, report.converged, report.iterations, report.final_gap
    );
    Ok(RunOutcome { out_dir, report })
}

/// A relative path from a config or matrix cell resolves against the input
/// directory unless it already points at something.
fn resolve_input_path(p: &Path, input_dir: &Path) -> PathBuf {
    if p.is_absolute() || p.exists() {
        p.to_path_buf()
    } else {
        input_dir.join(p)
    }
}

/// One `summary.csv` row. A scenario that failed outright carries the error
/// text and empty numbers.
pub struct BatchRow {
    pub scenario_id: String,
    pub outcome: std::result::Result<MetricsReport, String>,
}

/// Run every scenario in the matrix over one shared input set, in matrix
/// order, parallel across scenarios. Failures are recorded and the batch
/// keeps going. Returns the rows; use [`write_summary`] for the CSV.
pub fn run_batch(
    matrix: &Path,
    inputs: &InputSet,
    out_root: &Path,
    master_seed: u64,
    params: &Params,
) -> Result<Vec<BatchRow>> {
    let configs = load_matrix(matrix, master_seed, params)?;
    if configs.is_empty() {
        bail!("{} lists no scenarios", matrix.display());
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in &configs {
        if !seen.insert(c.scenario_id.clone()) {
            bail!("matrix repeats scenario_id {:?}", c.scenario_id);
        }
    }
    let loaded = load_inputs(inputs, params)?;
    std::fs::create_dir_all(out_root)
        .with_context(|| format!("creating {}", out_root.display()))?;

    let rows: Vec<BatchRow> = configs
        .par_iter()
        .map(|cfg| BatchRow {
            scenario_id: cfg.scenario_id.clone(),
            outcome: run_loaded(cfg, inputs, &loaded, out_root)
                .map(|r| r.report)
                .map_err(|e| format!("{e:#}")),
        })
        .collect();
    Ok(rows)
}

/// Write the batch summary: one row per scenario with convergence, shares,
/// subsidy, accessibility, and VMT. Row order follows the matrix, so the
/// file is byte-stable regardless of scheduling.
pub fn write_summary(path: &Path, rows: &[BatchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "scenario_id",
        "converged",
        "iterations",
        "final_gap",
        "share_auto",
        "share_micro",
        "share_frt",
        "share_walk",
        "subsidy_total_usd",
        "subsidy_per_user_usd",
        "transit_users",
        "jobs_15min",
        "vmt_auto_mi",
        "vmt_micro_mi",
        "vmt_frt_mi",
        "vmt_total_mi",
        "error",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        match &row.outcome {
            Ok(m) => w.write_record([
                row.scenario_id.clone(),
                m.converged.to_string(),
                m.iterations.to_string(),
                opt(m.final_gap),
                m.mode_share.auto.to_string(),
                m.mode_share.micro.to_string(),
                m.mode_share.frt.to_string(),
                m.mode_share.walk.to_string(),
                m.costs.subsidy_total_usd.to_string(),
                opt(m.costs.subsidy_per_user_usd),
                m.costs.transit_users.to_string(),
                m.accessibility.overall.to_string(),
                m.vmt.auto_mi.to_string(),
                m.vmt.micro_mi.to_string(),
                m.vmt.frt_mi.to_string(),
                m.vmt.total_mi.to_string(),
                String::new(),
            ])?,
            Err(e) => {
                let mut rec = vec![row.scenario_id.clone(), "false".into()];
                rec.extend(std::iter::repeat(String::new()).take(14));
                rec.push(e.replace('\n', " "));
                w.write_record(&rec)?
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// What `fixflex validate` reports per input file.
pub struct ValidationReport {
    pub nodes: usize,
    pub street_links: usize,
    pub lines: usize,
    pub travelers: usize,
    pub zones: Option<usize>,
}

/// Parse every input in the directory without running anything, so malformed
/// files fail here and not twenty minutes into a batch.
pub fn validate_inputs(dir: &Path) -> Result<ValidationReport> {
    let inputs = InputSet::discover(dir)?;
    let params = Params::default();
    let loaded = load_inputs(&inputs, &params)?;
    for line in &loaded.lines {
        line.validate()?;
    }
    let zones = loaded.zone_map.as_ref().map(|m| {
        m.values().copied().collect::<std::collections::BTreeSet<_>>().len()
    });
    if let Some(map) = &loaded.zone_map {
        for id in map.keys() {
            if loaded.walk.index_of(*id).is_none() {
                bail!("zones.csv references unknown node {id}");
            }
        }
    }
    Ok(ValidationReport {
        nodes: loaded.walk.n() as usize,
        street_links: loaded.walk.links().len(),
        lines: loaded.lines.len(),
        travelers: loaded.travelers.len(),
        zones,
    })
}

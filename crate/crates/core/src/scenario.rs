//! Scenario configuration: one service design to evaluate, plus every
//! numerical knob the evaluation depends on. Each knob's default is the value
//! the rest of the system treats as standard; all are overridable per scenario.
//!
//! A scenario is one TOML file; a batch is a CSV matrix whose rows mirror the
//! scenario table columns (id, mode, headway, stop coverage, fleet size,
//! operating periods).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which service components the scenario fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitMode {
    MicroOnly,
    FixedOnly,
    MicroPlusFixed,
}

impl TransitMode {
    pub fn has_micro(self) -> bool {
        matches!(self, TransitMode::MicroOnly | TransitMode::MicroPlusFixed)
    }

    pub fn has_frt(self) -> bool {
        matches!(self, TransitMode::FixedOnly | TransitMode::MicroPlusFixed)
    }
}

/// Microtransit operating periods, in clock hours: AM 5-10, MD 10-15, PM 15-20.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PeriodId {
    AM,
    MD,
    PM,
}

impl PeriodId {
    /// Period bounds in seconds after midnight, half-open `[start, end)`.
    pub fn bounds_s(self) -> (f64, f64) {
        match self {
            PeriodId::AM => (5.0 * 3600.0, 10.0 * 3600.0),
            PeriodId::MD => (10.0 * 3600.0, 15.0 * 3600.0),
            PeriodId::PM => (15.0 * 3600.0, 20.0 * 3600.0),
        }
    }

    pub fn hours(self) -> f64 {
        let (s, e) = self.bounds_s();
        (e - s) / 3600.0
    }
}

/// How broadcast microtransit waits are resolved when updating the supernetwork.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitGranularity {
    Global,
    #[default]
    PerPeriod,
    PerZone,
}

/// Numerical knobs with their standard values. Times in the units their names
/// state; money in dollars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Convergence tolerance on the mode-choice gap.
    pub epsilon: f64,
    /// Perception threshold: probability shift required before a traveler
    /// reconsiders their mode.
    pub eta: f64,
    pub max_iterations: u32,
    /// Base hold-back on supernetwork updates (0 = direct replacement).
    /// The equilibrium loop raises it on its own whenever successive fleet
    /// measurements reverse direction, so this only sets the starting point.
    pub damping: f64,
    /// Floor applied to probabilities before the relative gap (guards the
    /// division when a sentinel utility forces 0 or 1).
    pub prob_floor: f64,

    pub walk_speed_mph: f64,
    /// Flat FRT fare, charged once per path.
    pub frt_fare_usd: f64,
    /// Microtransit fare per ride mile.
    pub micro_fare_per_mi: f64,
    /// Auto operating cost per mile (gas), fed to the auto utility.
    pub auto_fuel_per_mi: f64,
    /// Penalty time carried by FRT transfer links.
    pub transfer_penalty_s: f64,
    /// Co-location radius for generating transfer links between routes, in
    /// coordinate units (0 = same street node only).
    pub transfer_radius: f64,

    /// Microtransit attributes assumed before the first fleet run.
    pub cold_start_detour: f64,
    pub cold_start_wait_s: f64,
    /// Broadcast waits are inflated by 1/(1-r) for rejection rate r, capped here.
    pub rejection_inflation_cap: f64,
    pub wait_granularity: WaitGranularity,

    pub vehicle_capacity: u32,
    /// Longest a rider will wait for pickup before the request is infeasible.
    pub max_wait_min: f64,
    /// Largest acceptable ratio of realized to direct in-vehicle time.
    pub max_detour_ratio: f64,
    pub reposition: bool,

    /// FRT hourly labor cost per vehicle ($/hr).
    pub frt_hourly_cost: f64,
    /// FRT per-mile gasoline cost ($/mi).
    pub frt_gas_per_mi: f64,
    /// Microtransit hourly labor cost per vehicle ($/hr).
    pub micro_hourly_cost: f64,
    /// Microtransit per-mile gasoline cost ($/mi).
    pub micro_gas_per_mi: f64,
    /// Default FRT daily operating hours (line files override per line).
    pub frt_operating_hr: f64,

    pub accessibility_cutoff_min: f64,
    /// Bin width for trip-length histograms (miles).
    pub tld_bin_mi: f64,
    pub write_event_log: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            epsilon: 0.01,
            eta: 0.05,
            max_iterations: 25,
            damping: 0.0,
            prob_floor: 1e-9,

            walk_speed_mph: 2.8,
            frt_fare_usd: 2.50,
            micro_fare_per_mi: 1.97,
            auto_fuel_per_mi: 0.35,
            transfer_penalty_s: 60.0,
            transfer_radius: 0.0,

            cold_start_detour: 1.2,
            cold_start_wait_s: 300.0,
            rejection_inflation_cap: 3.0,
            wait_granularity: WaitGranularity::default(),

            vehicle_capacity: 8,
            max_wait_min: 20.0,
            max_detour_ratio: 2.0,
            reposition: true,

            frt_hourly_cost: 170.0,
            frt_gas_per_mi: 0.350,
            micro_hourly_cost: 130.0,
            micro_gas_per_mi: 0.305,
            frt_operating_hr: 19.0,

            accessibility_cutoff_min: 15.0,
            tld_bin_mi: 0.5,
            write_event_log: true,
        }
    }
}

fn default_seed() -> u64 {
    42
}

/// One service design: which modes run, at what headway/coverage/fleet size,
/// and when microtransit operates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub transit_mode: TransitMode,
    /// Uniform headway applied to every FRT line; `None` means no override
    /// (per-line file values), and is required for micro-only scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headway_min: Option<f64>,
    /// Fraction of walk nodes eligible as microtransit virtual stops.
    #[serde(default)]
    pub virtual_stop_coverage: f64,
    #[serde(default)]
    pub fleet_size: u32,
    #[serde(default)]
    pub operating_periods: Vec<PeriodId>,
    /// Zone map path (relative to the inputs dir unless absolute). Used for
    /// per-zone reporting; with `partition = true` it also restricts
    /// microtransit to intra-zone trips.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_file: Option<PathBuf>,
    #[serde(default)]
    pub partition: bool,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub params: Params,
}

impl ScenarioConfig {
    pub fn new(id: impl Into<String>, mode: TransitMode) -> Self {
        ScenarioConfig {
            scenario_id: id.into(),
            transit_mode: mode,
            headway_min: None,
            virtual_stop_coverage: 0.0,
            fleet_size: 0,
            operating_periods: Vec::new(),
            zone_file: None,
            partition: false,
            master_seed: default_seed(),
            params: Params::default(),
        }
    }

    /// Microtransit operating periods as `(start_s, end_s)` intervals, sorted.
    pub fn period_bounds(&self) -> Vec<(f64, f64)> {
        let mut ps: Vec<PeriodId> = self.operating_periods.clone();
        ps.sort();
        ps.dedup();
        ps.into_iter().map(PeriodId::bounds_s).collect()
    }

    /// Total microtransit operating hours (the labor-cost time base).
    /// Folds from +0.0 so a no-micro scenario reports a plain zero.
    pub fn micro_operating_hours(&self) -> f64 {
        self.period_bounds()
            .iter()
            .fold(0.0, |acc, (s, e)| acc + (e - s) / 3600.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario_id.is_empty() {
            return Err(Error::config("scenario_id must be non-empty"));
        }
        if self.scenario_id.contains(['/', '\\']) {
            return Err(Error::config(format!(
                "scenario_id {:?} may not contain path separators",
                self.scenario_id
            )));
        }
        if !(0.0..=1.0).contains(&self.virtual_stop_coverage) {
            return Err(Error::config(format!(
                "virtual_stop_coverage {} outside [0, 1]",
                self.virtual_stop_coverage
            )));
        }
        if let Some(h) = self.headway_min {
            if !(h > 0.0) {
                return Err(Error::config(format!("headway_min {h} must be > 0")));
            }
        }
        match self.transit_mode {
            TransitMode::FixedOnly => {
                if self.fleet_size != 0 {
                    return Err(Error::config(format!(
                        "fixed_only scenario cannot field {} microtransit vehicles",
                        self.fleet_size
                    )));
                }
            }
            TransitMode::MicroOnly => {
                if self.headway_min.is_some() {
                    return Err(Error::config(
                        "micro_only scenario cannot set an FRT headway",
                    ));
                }
            }
            TransitMode::MicroPlusFixed => {}
        }
        if self.transit_mode.has_micro() {
            if self.virtual_stop_coverage <= 0.0 {
                return Err(Error::config(
                    "microtransit scenario needs virtual_stop_coverage > 0",
                ));
            }
            if self.operating_periods.is_empty() {
                return Err(Error::config(
                    "microtransit scenario needs at least one operating period",
                ));
            }
        }
        if self.partition && self.zone_file.is_none() {
            return Err(Error::config("partition = true requires zone_file"));
        }
        let p = &self.params;
        if !(p.epsilon > 0.0) || !(p.eta >= 0.0) {
            return Err(Error::config("epsilon must be > 0 and eta >= 0"));
        }
        if p.max_iterations == 0 {
            return Err(Error::config("max_iterations must be >= 1"));
        }
        if !(0.0..1.0).contains(&p.damping) {
            return Err(Error::config("damping must be in [0, 1)"));
        }
        if !(p.cold_start_detour >= 1.0) || !(p.cold_start_wait_s >= 0.0) {
            return Err(Error::config(
                "cold_start_detour must be >= 1 and cold_start_wait_s >= 0",
            ));
        }
        if !(p.walk_speed_mph > 0.0) {
            return Err(Error::config("walk_speed_mph must be > 0"));
        }
        if !(p.max_detour_ratio >= 1.0) {
            return Err(Error::config("max_detour_ratio must be >= 1"));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(s).map_err(|e| Error::config(format!("scenario TOML: {e}")))?;
        Ok(cfg)
    }

    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(format!("scenario TOML: {e}")))
    }
}

/// Parse a scenario-matrix CSV. Expected header:
/// `scenario_id,transit_mode,headway_min,virtual_stop_pct,fleet_size,operating_periods[,partition]`
/// with values as the scenario table prints them ("Micro+Fixed", coverage in
/// percent, periods like `AM+PM` or `['AM', 'PM']`, `0`/`none` for absent).
/// Every row inherits `master_seed` and `params` so paired scenarios share
/// random streams.
pub fn load_matrix(path: &Path, master_seed: u64, params: &Params) -> Result<Vec<ScenarioConfig>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;

    let headers = rdr
        .headers()
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = [
        "scenario_id",
        "transit_mode",
        "headway_min",
        "virtual_stop_pct",
        "fleet_size",
        "operating_periods",
    ];
    let mut idx = [0usize; 6];
    for (i, name) in required.iter().enumerate() {
        idx[i] = col(name).ok_or_else(|| {
            Error::parse(path, 1, format!("matrix is missing column `{name}`"))
        })?;
    }
    let partition_col = col("partition");

    let mut out = Vec::new();
    for (rec_i, rec) in rdr.records().enumerate() {
        let line = rec_i + 2; // header is line 1
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("").trim();

        let mode = parse_transit_mode(field(1))
            .ok_or_else(|| Error::parse(path, line, format!("unknown transit_mode {:?}", field(1))))?;
        let headway = parse_optional_f64(field(2))
            .map_err(|m| Error::parse(path, line, format!("headway_min: {m}")))?;
        let pct: f64 = parse_optional_f64(field(3))
            .map_err(|m| Error::parse(path, line, format!("virtual_stop_pct: {m}")))?
            .unwrap_or(0.0);
        let fleet: u32 = if field(4).is_empty() {
            0
        } else {
            field(4)
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad fleet_size {:?}", field(4))))?
        };
        let periods = parse_periods(field(5))
            .ok_or_else(|| Error::parse(path, line, format!("bad operating_periods {:?}", field(5))))?;

        let mut cfg = ScenarioConfig::new(field(0), mode);
        // Micro-only rows print headway 0; treat any non-positive value as none.
        cfg.headway_min = headway.filter(|h| *h > 0.0 && mode.has_frt());
        cfg.virtual_stop_coverage = pct / 100.0;
        cfg.fleet_size = fleet;
        cfg.operating_periods = periods;
        cfg.master_seed = master_seed;
        cfg.params = params.clone();
        if let Some(pc) = partition_col {
            let v = rec.get(pc).unwrap_or("").trim();
            if !v.is_empty() && v != "0" && !v.eq_ignore_ascii_case("none") {
                cfg.zone_file = Some(PathBuf::from(v));
                cfg.partition = true;
            }
        }
        cfg.validate()
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        out.push(cfg);
    }
    Ok(out)
}

fn parse_transit_mode(s: &str) -> Option<TransitMode> {
    let norm: String = s
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    match norm.as_str() {
        "microonly" | "micro" => Some(TransitMode::MicroOnly),
        "fixedonly" | "fixed" => Some(TransitMode::FixedOnly),
        "microfixed" | "microplusfixed" | "microandfixed" => Some(TransitMode::MicroPlusFixed),
        _ => None,
    }
}

fn parse_optional_f64(s: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() || s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("bad number {s:?}"))
}

fn parse_periods(s: &str) -> Option<Vec<PeriodId>> {
    let trimmed = s.trim();
    if trimmed.is_empty() || trimmed == "0" || trimmed.eq_ignore_ascii_case("none") {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    for tok in trimmed.split(|c: char| !c.is_ascii_alphanumeric()) {
        if tok.is_empty() {
            continue;
        }
        match tok.to_ascii_uppercase().as_str() {
            "AM" => out.push(PeriodId::AM),
            "MD" => out.push(PeriodId::MD),
            "PM" => out.push(PeriodId::PM),
            _ => return None,
        }
    }
    if out.is_empty() {
        return None;
    }
    out.sort();
    out.dedup();
    Some(out)
}

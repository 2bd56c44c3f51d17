//! Scenario evaluation: operator costs, fare revenue, subsidy, mode shares,
//! vehicle-miles, job accessibility, line usage, and the on-disk outputs.
//!
//! Cost conventions (all USD): a fixed route needs `2·(duration/headway)`
//! vehicles in service for `operating_hr` hours at an hourly rate, and runs
//! `2·(operating_hr·60/headway)` one-way trips of `length_mi` at a per-mile
//! rate. The microtransit side pays its fleet by the hour over the operating
//! window plus a per-mile rate on realized (pooling, deadheading, and
//! repositioning included) vehicle-miles. Fares: a flat boarding fare
//! collected once per FRT-using trip, and a distance rate on each served
//! microtransit ride priced at its direct (unpooled) miles.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::choice::Mode;
use crate::equilibrium::{EquilibriumResult, TravelerOutcome};
use crate::error::{Error, Result};
use crate::fleet::{EventKind, FleetOutcome, FleetStats, ServiceStatus};
use crate::net::{FrtLine, LinkType, Supernetwork};
use crate::scenario::{Params, PeriodId, ScenarioConfig};

/// Daily cost of operating one fixed route, at the default cost rates.
pub fn frt_line_cost(
    duration_min: f64,
    headway_min: f64,
    operating_hr: f64,
    length_mi: f64,
) -> Result<f64> {
    let p = Params::default();
    frt_line_cost_with(
        duration_min,
        headway_min,
        operating_hr,
        length_mi,
        p.frt_hourly_cost,
        p.frt_gas_per_mi,
    )
}

fn frt_line_cost_with(
    duration_min: f64,
    headway_min: f64,
    operating_hr: f64,
    length_mi: f64,
    hourly_usd: f64,
    gas_per_mi_usd: f64,
) -> Result<f64> {
    if !(headway_min > 0.0) {
        return Err(Error::invalid(format!(
            "headway must be positive, got {headway_min}"
        )));
    }
    if duration_min < 0.0 || operating_hr < 0.0 || length_mi < 0.0 {
        return Err(Error::invalid("negative fixed-route attribute"));
    }
    let vehicles = 2.0 * duration_min / headway_min;
    let one_way_trips = 2.0 * operating_hr * 60.0 / headway_min;
    Ok(vehicles * operating_hr * hourly_usd + one_way_trips * length_mi * gas_per_mi_usd)
}

/// Daily cost of the whole fixed-route side at the scenario's cost rates.
pub fn frt_system_cost(lines: &[FrtLine], params: &Params) -> Result<f64> {
    let mut total = 0.0;
    for l in lines {
        total += frt_line_cost_with(
            l.duration_min,
            l.headway_min,
            l.operating_hr,
            l.length_mi,
            params.frt_hourly_cost,
            params.frt_gas_per_mi,
        )?;
    }
    Ok(total)
}

/// Daily cost of the microtransit side, at the default cost rates.
pub fn micro_system_cost(fleet_size: u32, operating_hr: f64, vmt_mi: f64) -> f64 {
    let p = Params::default();
    micro_system_cost_with(
        fleet_size,
        operating_hr,
        vmt_mi,
        p.micro_hourly_cost,
        p.micro_gas_per_mi,
    )
}

fn micro_system_cost_with(
    fleet_size: u32,
    operating_hr: f64,
    vmt_mi: f64,
    hourly_usd: f64,
    gas_per_mi_usd: f64,
) -> f64 {
    operating_hr * fleet_size as f64 * hourly_usd + vmt_mi * gas_per_mi_usd
}

/// Mutually exclusive trip classification. A trip touching microtransit
/// anywhere counts as micro, even when it also rides a fixed route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TripClass {
    Auto,
    Micro,
    Frt,
    Walk,
}

impl TripClass {
    pub fn of(outcome: &TravelerOutcome) -> TripClass {
        if outcome.chosen == Mode::Auto {
            return TripClass::Auto;
        }
        match &outcome.transit {
            Some(p) if p.uses_micro() => TripClass::Micro,
            Some(p) if p.uses_frt() => TripClass::Frt,
            _ => TripClass::Walk,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TripClass::Auto => "auto",
            TripClass::Micro => "micro",
            TripClass::Frt => "frt",
            TripClass::Walk => "walk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeShare {
    pub travelers: u32,
    pub auto_n: u32,
    pub micro_n: u32,
    pub frt_n: u32,
    pub walk_n: u32,
    pub auto: f64,
    pub micro: f64,
    pub frt: f64,
    pub walk: f64,
}

pub fn mode_share(outcomes: &[TravelerOutcome]) -> ModeShare {
    let mut counts = [0u32; 4];
    for o in outcomes {
        counts[match TripClass::of(o) {
            TripClass::Auto => 0,
            TripClass::Micro => 1,
            TripClass::Frt => 2,
            TripClass::Walk => 3,
        }] += 1;
    }
    let n = outcomes.len() as u32;
    let frac = |c: u32| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    ModeShare {
        travelers: n,
        auto_n: counts[0],
        micro_n: counts[1],
        frt_n: counts[2],
        walk_n: counts[3],
        auto: frac(counts[0]),
        micro: frac(counts[1]),
        frt: frac(counts[2]),
        walk: frac(counts[3]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub frt_cost_usd: f64,
    pub micro_cost_usd: f64,
    pub frt_revenue_usd: f64,
    pub micro_revenue_usd: f64,
    /// Operator cost minus fare revenue; negative means farebox profit.
    pub subsidy_total_usd: f64,
    /// Travelers whose chosen trip boards FRT or microtransit — walk-only
    /// transit trips don't count as users.
    pub transit_users: u32,
    /// None when nobody used transit.
    pub subsidy_per_user_usd: Option<f64>,
}

/// Money flows of a finished run.
pub fn revenues_and_subsidy(
    outcomes: &[TravelerOutcome],
    fleet: &FleetOutcome,
    lines: &[FrtLine],
    cfg: &ScenarioConfig,
) -> Result<CostBreakdown> {
    let params = &cfg.params;
    let frt_cost_usd = frt_system_cost(lines, params)?;
    let micro_cost_usd = micro_system_cost_with(
        cfg.fleet_size,
        cfg.micro_operating_hours(),
        fleet.stats.vmt_mi,
        params.micro_hourly_cost,
        params.micro_gas_per_mi,
    );

    let mut frt_trips = 0u32;
    let mut transit_users = 0u32;
    for o in outcomes {
        if o.chosen != Mode::Transit {
            continue;
        }
        let Some(p) = &o.transit else { continue };
        if p.uses_frt() {
            frt_trips += 1;
        }
        if p.uses_frt() || p.uses_micro() {
            transit_users += 1;
        }
    }
    let frt_revenue_usd = params.frt_fare_usd * frt_trips as f64;
    // folds start at +0.0 (not `Sum`'s -0.0) so modes with no riders report
    // plain zeros
    let served_direct_mi: f64 = fleet
        .records
        .iter()
        .filter(|r| r.status == ServiceStatus::Served)
        .fold(0.0, |acc, r| acc + r.direct_mi);
    let micro_revenue_usd = params.micro_fare_per_mi * served_direct_mi;

    let subsidy_total_usd = frt_cost_usd + micro_cost_usd - frt_revenue_usd - micro_revenue_usd;
    Ok(CostBreakdown {
        frt_cost_usd,
        micro_cost_usd,
        frt_revenue_usd,
        micro_revenue_usd,
        subsidy_total_usd,
        transit_users,
        subsidy_per_user_usd: (transit_users > 0)
            .then(|| subsidy_total_usd / transit_users as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VmtSummary {
    /// Miles driven by auto choosers on their shortest auto paths.
    pub auto_mi: f64,
    /// Fleet odometer total: pooled rides, deadheading, repositioning.
    pub micro_mi: f64,
    /// Scheduled fixed-route miles: `2·(operating_hr·60/headway)·length`
    /// per line, independent of ridership.
    pub frt_mi: f64,
    pub total_mi: f64,
}

pub fn vmt_summary(
    outcomes: &[TravelerOutcome],
    fleet_vmt_mi: f64,
    lines: &[FrtLine],
) -> VmtSummary {
    // folds start at +0.0 (not `Sum`'s -0.0) so absent modes report plain zeros
    let auto_mi: f64 = outcomes
        .iter()
        .filter(|o| o.chosen == Mode::Auto)
        .filter_map(|o| o.auto.as_ref())
        .fold(0.0, |acc, a| acc + a.dist_mi);
    let frt_mi: f64 = lines
        .iter()
        .fold(0.0, |acc, l| acc + 2.0 * l.operating_hr * 60.0 / l.headway_min * l.length_mi);
    VmtSummary {
        auto_mi,
        micro_mi: fleet_vmt_mi,
        frt_mi,
        total_mi: auto_mi + fleet_vmt_mi + frt_mi,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessibilitySummary {
    pub cutoff_min: f64,
    /// (zone, mean jobs reachable from the zone's street nodes).
    pub by_zone: Vec<(u32, f64)>,
    /// Mean over every street node.
    pub overall: f64,
}

/// Jobs reachable within the cutoff by pure travel time over the current
/// supernetwork state — waits count, coefficients and fares do not. Jobs
/// are counted at walk-layer nodes only, so each street location counts
/// once no matter how many layers shadow it.
pub fn accessibility_15min(net: &Supernetwork, cutoff_min: f64) -> Result<AccessibilitySummary> {
    if net.n_walk == 0 {
        return Err(Error::invalid("supernetwork has no street nodes"));
    }
    let cutoff_s = cutoff_min * 60.0;
    let reach: Vec<f64> = (0..net.n_walk)
        .into_par_iter()
        .map(|w| {
            let times = net.travel_times_from(w);
            let mut jobs = 0u64;
            for v in 0..net.n_walk {
                if times[v as usize] <= cutoff_s {
                    jobs += net.node(v).jobs as u64;
                }
            }
            jobs as f64
        })
        .collect();
    let mut zone_acc: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
    let mut total = 0.0;
    for w in 0..net.n_walk {
        let e = zone_acc.entry(net.node(w).zone).or_insert((0.0, 0));
        e.0 += reach[w as usize];
        e.1 += 1;
        total += reach[w as usize];
    }
    let by_zone = zone_acc
        .into_iter()
        .map(|(z, (sum, n))| (z, sum / n as f64))
        .collect();
    Ok(AccessibilitySummary {
        cutoff_min,
        by_zone,
        overall: total / net.n_walk as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineUsage {
    pub route_id: String,
    /// Distinct travelers riding the line.
    pub riders: u32,
    /// Ride-link traversals summed over riders (a stop-to-stop load proxy).
    pub link_traversals: u64,
    pub riders_am: u32,
    pub riders_md: u32,
    pub riders_pm: u32,
    pub riders_ev: u32,
}

/// AM / MD / PM index by departure time; 3 = evening or outside the windows.
fn departure_bucket(dp_time_s: f64) -> usize {
    for (ix, p) in [PeriodId::AM, PeriodId::MD, PeriodId::PM].iter().enumerate() {
        let (s, e) = p.bounds_s();
        if dp_time_s >= s && dp_time_s < e {
            return ix;
        }
    }
    3
}

pub fn line_usage(outcomes: &[TravelerOutcome], net: &Supernetwork) -> Vec<LineUsage> {
    // keyed by line index so the output ordering follows the line table
    let mut per_line: BTreeMap<u32, (u32, u64, [u32; 4])> = BTreeMap::new();
    for o in outcomes {
        if o.chosen != Mode::Transit {
            continue;
        }
        let Some(p) = &o.transit else { continue };
        let mut lines_here: BTreeMap<u32, u64> = BTreeMap::new();
        for leg in &p.legs {
            if leg.kind == LinkType::FrtRide {
                if let Some(route) = leg.route {
                    *lines_here.entry(route).or_insert(0) += leg.link_ids.len() as u64;
                }
            }
        }
        let bucket = departure_bucket(o.dp_time_s);
        for (route, traversals) in lines_here {
            let e = per_line.entry(route).or_insert((0, 0, [0; 4]));
            e.0 += 1;
            e.1 += traversals;
            e.2[bucket] += 1;
        }
    }
    per_line
        .into_iter()
        .map(|(ix, (riders, link_traversals, b))| LineUsage {
            route_id: net.lines[ix as usize].route_id.clone(),
            riders,
            link_traversals,
            riders_am: b[0],
            riders_md: b[1],
            riders_pm: b[2],
            riders_ev: b[3],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeHistogram {
    pub mode: &'static str,
    pub trips: u32,
    pub mean_mi: f64,
    /// counts[k] covers [k·bin_mi, (k+1)·bin_mi).
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripLengthDistribution {
    pub bin_mi: f64,
    pub modes: Vec<ModeHistogram>,
}

/// Door-to-door trip length histograms by trip class. Transit trips sum
/// their leg lengths (access walking included); auto trips use the driven
/// distance.
pub fn trip_length_distribution(
    outcomes: &[TravelerOutcome],
    bin_mi: f64,
) -> TripLengthDistribution {
    let mut by_class: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    for label in ["auto", "frt", "micro", "walk"] {
        by_class.insert(label, Vec::new());
    }
    for o in outcomes {
        let class = TripClass::of(o);
        let mi = match class {
            TripClass::Auto => o.auto.as_ref().map_or(0.0, |a| a.dist_mi),
            _ => o
                .transit
                .as_ref()
                .map_or(0.0, |p| p.legs.iter().map(|l| l.length_mi).sum()),
        };
        by_class.get_mut(class.label()).expect("seeded above").push(mi);
    }
    let modes = ["auto", "frt", "micro", "walk"]
        .into_iter()
        .map(|label| {
            let lengths = &by_class[label];
            let mut counts: Vec<u32> = Vec::new();
            for &mi in lengths {
                let k = (mi / bin_mi).floor() as usize;
                if counts.len() <= k {
                    counts.resize(k + 1, 0);
                }
                counts[k] += 1;
            }
            ModeHistogram {
                mode: label,
                trips: lengths.len() as u32,
                mean_mi: if lengths.is_empty() {
                    0.0
                } else {
                    lengths.iter().sum::<f64>() / lengths.len() as f64
                },
                counts,
            }
        })
        .collect();
    TripLengthDistribution { bin_mi, modes }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scenario_id: String,
    pub converged: bool,
    pub iterations: u32,
    pub final_gap: Option<f64>,
    pub costs: CostBreakdown,
    pub mode_share: ModeShare,
    pub vmt: VmtSummary,
    pub accessibility: AccessibilitySummary,
    pub fleet: FleetStats,
    pub line_usage: Vec<LineUsage>,
    pub trip_lengths: TripLengthDistribution,
    /// Data-quality notes: non-convergence, cold starts, empty user groups.
    pub flags: Vec<String>,
}

pub fn compute_metrics(cfg: &ScenarioConfig, result: &EquilibriumResult) -> Result<MetricsReport> {
    let costs = revenues_and_subsidy(&result.outcomes, &result.fleet, &result.supernet.lines, cfg)?;
    let share = mode_share(&result.outcomes);
    let vmt = vmt_summary(
        &result.outcomes,
        result.fleet.stats.vmt_mi,
        &result.supernet.lines,
    );
    let accessibility = accessibility_15min(&result.supernet, cfg.params.accessibility_cutoff_min)?;
    let usage = line_usage(&result.outcomes, &result.supernet);
    let tld = trip_length_distribution(&result.outcomes, cfg.params.tld_bin_mi);

    let mut flags = Vec::new();
    if !result.converged {
        flags.push("not_converged".to_string());
    }
    if result.fleet.stats.cold_start && cfg.transit_mode.has_micro() {
        flags.push("fleet_cold_start".to_string());
    }
    if costs.transit_users == 0 {
        flags.push("no_transit_users".to_string());
    }

    Ok(MetricsReport {
        scenario_id: cfg.scenario_id.clone(),
        converged: result.converged,
        iterations: result.iterations.len() as u32,
        final_gap: result.final_gap,
        costs,
        mode_share: share,
        vmt,
        accessibility,
        fleet: result.fleet.stats.clone(),
        line_usage: usage,
        trip_lengths: tld,
        flags,
    })
}

// ---------------------------------------------------------------------------
// file outputs

/// Write the full output set for one scenario into `dir` (created if
/// missing): `metrics.json`, `iterations.csv`/`.json`, `line_usage.csv`,
/// `legs.csv`, `events.csv` (when enabled), `accessibility.geojson`, and a
/// `config.toml` echo. Bytes are a pure function of the inputs, so reruns
/// and different thread counts produce identical files.
pub fn write_outputs(
    dir: &Path,
    cfg: &ScenarioConfig,
    report: &MetricsReport,
    result: &EquilibriumResult,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    write_text(&dir.join("metrics.json"), &to_json_pretty(report)?)?;
    write_text(
        &dir.join("iterations.json"),
        &to_json_pretty(&result.iterations)?,
    )?;
    write_text(&dir.join("config.toml"), &cfg.to_toml_string()?)?;

    {
        let mut w = csv::Writer::from_path(dir.join("iterations.csv"))?;
        w.write_record([
            "iteration",
            "gap",
            "mean_prob_transit",
            "transit_choosers",
            "auto_choosers",
            "draws",
            "requests",
            "served",
            "rejected",
            "applied_wait_s",
            "applied_detour_ratio",
            "fleet_vmt_mi",
        ])?;
        for it in &result.iterations {
            w.write_record([
                it.iteration.to_string(),
                it.gap.map_or(String::new(), |g| g.to_string()),
                it.mean_prob_transit.to_string(),
                it.transit_choosers.to_string(),
                it.auto_choosers.to_string(),
                it.draws.to_string(),
                it.requests.to_string(),
                it.served.to_string(),
                it.rejected.to_string(),
                it.applied_wait_s.to_string(),
                it.applied_detour_ratio.to_string(),
                it.fleet_vmt_mi.to_string(),
            ])?;
        }
        w.flush()?;
    }

    {
        let mut w = csv::Writer::from_path(dir.join("line_usage.csv"))?;
        w.write_record([
            "route_id",
            "riders",
            "link_traversals",
            "riders_am",
            "riders_md",
            "riders_pm",
            "riders_ev",
        ])?;
        for u in &report.line_usage {
            w.write_record([
                u.route_id.clone(),
                u.riders.to_string(),
                u.link_traversals.to_string(),
                u.riders_am.to_string(),
                u.riders_md.to_string(),
                u.riders_pm.to_string(),
                u.riders_ev.to_string(),
            ])?;
        }
        w.flush()?;
    }

    write_legs_csv(&dir.join("legs.csv"), &result.outcomes, &result.supernet)?;

    if cfg.params.write_event_log {
        write_event_log(&dir.join("events.csv"), &result.fleet)?;
    }

    write_text(
        &dir.join("accessibility.geojson"),
        &accessibility_geojson(&result.supernet, &report.accessibility)?,
    )?;

    Ok(())
}

/// One row per leg of every chosen trip; auto trips collapse to one row.
fn write_legs_csv(path: &Path, outcomes: &[TravelerOutcome], net: &Supernetwork) -> Result<()> {
    let route_name =
        |r: Option<u32>| r.map_or(String::new(), |ix| net.lines[ix as usize].route_id.clone());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "rq_id", "mode", "leg", "kind", "from", "to", "start_s", "time_s", "length_mi", "route",
    ])?;
    for o in outcomes {
        match TripClass::of(o) {
            TripClass::Auto => {
                let Some(a) = &o.auto else { continue };
                w.write_record([
                    o.rq_id.to_string(),
                    "auto".into(),
                    "0".into(),
                    "drive".into(),
                    String::new(),
                    String::new(),
                    o.dp_time_s.to_string(),
                    a.time_s.to_string(),
                    a.dist_mi.to_string(),
                    String::new(),
                ])?;
            }
            class => {
                let Some(p) = &o.transit else { continue };
                for (ix, leg) in p.legs.iter().enumerate() {
                    w.write_record([
                        o.rq_id.to_string(),
                        class.label().into(),
                        ix.to_string(),
                        leg.kind.label().into(),
                        leg.from_base.to_string(),
                        leg.to_base.to_string(),
                        (o.dp_time_s + leg.start_s).to_string(),
                        leg.time_s.to_string(),
                        leg.length_mi.to_string(),
                        route_name(leg.route),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// The fleet audit log: `time_s,vehicle_id,event,node_id,rq_id`.
pub fn write_event_log(path: &Path, fleet: &FleetOutcome) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_s", "vehicle_id", "event", "node_id", "rq_id"])?;
    for e in &fleet.events {
        let kind = match e.kind {
            EventKind::Start => "start",
            EventKind::Arrive => "arrive",
            EventKind::Pickup => "pickup",
            EventKind::Dropoff => "dropoff",
        };
        w.write_record([
            e.time_s.to_string(),
            e.vehicle_id.to_string(),
            kind.to_string(),
            e.node.to_string(),
            e.rq_id.map_or(String::new(), |r| r.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::invalid(format!("json encode: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Zone footprints with their accessibility scores, drawn as convex hulls
/// of each zone's street nodes in the network's native coordinates.
fn accessibility_geojson(net: &Supernetwork, acc: &AccessibilitySummary) -> Result<String> {
    let mut zone_pts: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for w in 0..net.n_walk {
        let n = net.node(w);
        zone_pts.entry(n.zone).or_default().push((n.x, n.y));
    }
    let score: BTreeMap<u32, f64> = acc.by_zone.iter().copied().collect();
    let mut features = Vec::new();
    for (zone, pts) in zone_pts {
        let hull = convex_hull(&pts);
        let geometry = match hull.len() {
            0 => continue,
            1 => serde_json::json!({"type": "Point", "coordinates": [hull[0].0, hull[0].1]}),
            2 => serde_json::json!({
                "type": "LineString",
                "coordinates": [[hull[0].0, hull[0].1], [hull[1].0, hull[1].1]],
            }),
            _ => {
                let mut ring: Vec<[f64; 2]> = hull.iter().map(|&(x, y)| [x, y]).collect();
                ring.push(ring[0]);
                serde_json::json!({"type": "Polygon", "coordinates": [ring]})
            }
        };
        features.push(serde_json::json!({
            "type": "Feature",
            "properties": {
                "zone": zone,
                "jobs_within_cutoff": score.get(&zone).copied(),
                "nodes": pts.len(),
            },
            "geometry": geometry,
        }));
    }
    let doc = serde_json::json!({
        "type": "FeatureCollection",
        "properties": {"cutoff_min": acc.cutoff_min, "overall": acc.overall},
        "features": features,
    });
    serde_json::to_string_pretty(&doc)
        .map(|s| s + "\n")
        .map_err(|e| Error::invalid(format!("geojson encode: {e}")))
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without the
/// closing point; duplicate inputs collapse, collinear inputs reduce to
/// their extremes.
fn convex_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = pts.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &pt in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], pt) <= 0.0 {
            lower.pop();
        }
        lower.push(pt);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &pt in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], pt) <= 0.0 {
            upper.pop();
        }
        upper.push(pt);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

//! Deliberately slow, deliberately simple reference implementations for the
//! validation suite: exhaustive path enumeration checks the router,
//! Bellman–Ford checks the isochrone search, a log auditor replays fleet
//! runs against the physics they must respect, and a seeded generator
//! produces the small random scenarios those comparisons run on.
//!
//! Nothing here shares search code with the fast paths — that's the point.
//! Keep these implementations naive; their only virtue is being obviously
//! correct.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::Rng;

use crate::demand::{Betas, TravelerProfile};
use crate::fleet::{
    EventKind, FleetOutcome, FleetParams, RideRequest, ServiceRecord, ServiceStatus,
};
use crate::net::{
    build_supernetwork, CoordUnits, FrtLine, LinkType, MicroState, Network, Node, StreetLink,
    SuperLink, Supernetwork, TimeBasis,
};
use crate::rng::stream;
use crate::scenario::{Params, PeriodId, ScenarioConfig, TransitMode};

// ---------------------------------------------------------------------------
// exhaustive transit search

/// Generalized cost of one link step, restated from the pricing rules: walking
/// and riding price their minutes, a boarding wait prices its minutes plus the
/// flat fare (first board) or the transfer weight (re-board), transfer links
/// price the transfer weight, micro rides price minutes plus the distance
/// fare, and alighting is free.
fn step_cost(
    net: &Supernetwork,
    link: &SuperLink,
    boarded: bool,
    profile: &TravelerProfile,
    params: &Params,
) -> (f64, bool) {
    let b = &profile.betas;
    let m = link.time_s / 60.0;
    match link.kind {
        LinkType::Walk => (b.t_wk * m, boarded),
        LinkType::FrtRide => (b.f_ivt * m, boarded),
        LinkType::FrtTransfer => (b.f_trfr, boarded),
        LinkType::MicroRide => (
            b.m_ivt * m + b.t_fr * params.micro_fare_per_mi * link.length_mi,
            boarded,
        ),
        LinkType::FrtWait => {
            if !net.is_boarding(link) {
                return (0.0, boarded);
            }
            let entry = if boarded {
                b.f_trfr
            } else {
                b.t_fr * params.frt_fare_usd
            };
            (b.f_wt * m + entry, true)
        }
        LinkType::MicroWait => {
            if !net.is_boarding(link) {
                return (0.0, boarded);
            }
            let wait_min = net.effective_time_s(link, profile.dp_time_s) / 60.0;
            (b.m_wt * wait_min, boarded)
        }
    }
}

/// Minimal generalized cost from origin to destination by enumerating every
/// simple path through the (node, boarded-yet) state space. Exponential; only
/// for small networks. Requires non-negative coefficients — the enumeration
/// prunes on accumulated cost.
pub fn exhaustive_transit_cost(
    net: &Supernetwork,
    profile: &TravelerProfile,
    params: &Params,
) -> Option<f64> {
    let origin = net.walk_ix(profile.origin)?;
    let dest = net.walk_ix(profile.dest)?;
    if origin == dest {
        return Some(0.0);
    }
    let micro_open = net.has_micro && net.in_operating_period(profile.dp_time_s);
    let mut visited = vec![false; net.n() * 2];
    let mut best = f64::INFINITY;
    let start = origin * 2;
    visited[start as usize] = true;
    explore(
        net, profile, params, micro_open, dest, start, 0.0, &mut visited, &mut best,
    );
    best.is_finite().then_some(best)
}

#[allow(clippy::too_many_arguments)]
fn explore(
    net: &Supernetwork,
    profile: &TravelerProfile,
    params: &Params,
    micro_open: bool,
    dest: u32,
    state: u32,
    acc: f64,
    visited: &mut [bool],
    best: &mut f64,
) {
    let node = state / 2;
    if node == dest {
        if acc < *best {
            *best = acc;
        }
        return;
    }
    if acc >= *best {
        return; // every remaining step is >= 0
    }
    let boarded = state % 2 == 1;
    for &lx in net.out_links(node) {
        let link = net.link(lx);
        if !micro_open && matches!(link.kind, LinkType::MicroRide | LinkType::MicroWait) {
            continue;
        }
        let (c, next_boarded) = step_cost(net, link, boarded, profile, params);
        let next = link.to * 2 + next_boarded as u32;
        if visited[next as usize] {
            continue;
        }
        visited[next as usize] = true;
        explore(
            net,
            profile,
            params,
            micro_open,
            dest,
            next,
            acc + c,
            visited,
            best,
        );
        visited[next as usize] = false;
    }
}

// ---------------------------------------------------------------------------
// brute-force reachability

/// Shortest travel times (seconds) from a walk node over stored link times,
/// by iterated relaxation over the full link list until a fixed point.
pub fn brute_travel_times(net: &Supernetwork, origin_walk_ix: u32) -> Vec<f64> {
    let n = net.n();
    let mut dist = vec![f64::INFINITY; n];
    dist[origin_walk_ix as usize] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for l in &net.links {
            let from = dist[l.from as usize];
            if !from.is_finite() {
                continue;
            }
            let d = from + l.time_s;
            if d < dist[l.to as usize] {
                dist[l.to as usize] = d;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Jobs on walk-layer nodes within `cutoff_s` of the origin, per the
/// brute-force times.
pub fn brute_reachable_jobs(net: &Supernetwork, origin_walk_ix: u32, cutoff_s: f64) -> u64 {
    let times = brute_travel_times(net, origin_walk_ix);
    let mut jobs = 0u64;
    for v in 0..net.n_walk {
        if times[v as usize] <= cutoff_s {
            jobs += net.node(v).jobs as u64;
        }
    }
    jobs
}

// ---------------------------------------------------------------------------
// fleet log auditor

/// Replay a fleet run's event log and service records against the physics the
/// simulation must respect, returning one message per violation (empty =
/// clean). With `street` supplied, vehicle movement is also checked hop by
/// hop against the drive graph and the odometer total is recomputed; this
/// assumes the graph has no parallel links between a node pair.
pub fn fleet_violations(
    params: &FleetParams,
    requests: &[RideRequest],
    outcome: &FleetOutcome,
    street: Option<&Network>,
) -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    let eps = 1e-6;

    // --- records: exactly one verdict per request, bounds respected
    let mut by_rq: BTreeMap<u64, &ServiceRecord> = BTreeMap::new();
    for r in &outcome.records {
        if by_rq.insert(r.rq_id, r).is_some() {
            v.push(format!("request {}: multiple service records", r.rq_id));
        }
    }
    let request_ids: BTreeSet<u64> = requests.iter().map(|r| r.rq_id).collect();
    for id in &request_ids {
        if !by_rq.contains_key(id) {
            v.push(format!("request {id}: no service record"));
        }
    }
    for id in by_rq.keys() {
        if !request_ids.contains(id) {
            v.push(format!("record {id}: no matching request"));
        }
    }
    let served_ids: BTreeSet<u64> = outcome
        .records
        .iter()
        .filter(|r| r.status == ServiceStatus::Served)
        .map(|r| r.rq_id)
        .collect();
    for r in &outcome.records {
        if r.status != ServiceStatus::Served {
            continue;
        }
        if r.wait_min < -eps {
            v.push(format!("request {}: negative wait {}", r.rq_id, r.wait_min));
        }
        if r.wait_min * 60.0 > params.max_wait_s + eps {
            v.push(format!(
                "request {}: wait {} min exceeds cap {} s",
                r.rq_id,
                r.wait_min,
                params.max_wait_s
            ));
        }
        if r.detour_ratio < 1.0 - eps {
            v.push(format!(
                "request {}: detour {} below 1",
                r.rq_id, r.detour_ratio
            ));
        }
        if r.detour_ratio > params.max_detour_ratio + eps {
            v.push(format!(
                "request {}: detour {} exceeds cap {}",
                r.rq_id, r.detour_ratio, params.max_detour_ratio
            ));
        }
        if r.direct_min <= 0.0 {
            v.push(format!(
                "request {}: served with nonpositive direct time {}",
                r.rq_id, r.direct_min
            ));
        } else if (r.detour_ratio - r.ivt_min / r.direct_min).abs() > 1e-4 {
            v.push(format!(
                "request {}: detour {} inconsistent with ivt/direct {}",
                r.rq_id,
                r.detour_ratio,
                r.ivt_min / r.direct_min
            ));
        }
    }

    // --- stats tallies
    let stats = &outcome.stats;
    if stats.served as usize != served_ids.len() {
        v.push(format!(
            "stats.served {} != {} served records",
            stats.served,
            served_ids.len()
        ));
    }
    let rejected = outcome.records.len() - served_ids.len();
    if stats.rejected as usize != rejected {
        v.push(format!(
            "stats.rejected {} != {rejected} rejected records",
            stats.rejected
        ));
    }
    if stats.cold_start != (stats.served == 0) {
        v.push("cold_start flag disagrees with served count".to_string());
    }
    if stats.vmt_mi < -eps {
        v.push(format!("negative fleet VMT {}", stats.vmt_mi));
    }

    // --- event log, replayed per vehicle
    let mut prev_time = f64::NEG_INFINITY;
    for e in &outcome.events {
        if e.time_s < prev_time {
            v.push(format!(
                "event log not time-ordered at t={} (vehicle {})",
                e.time_s, e.vehicle_id
            ));
        }
        prev_time = e.time_s;
    }
    let mut per_veh: BTreeMap<u32, Vec<&crate::fleet::EventRow>> = BTreeMap::new();
    for e in &outcome.events {
        per_veh.entry(e.vehicle_id).or_default().push(e);
    }
    let mut pickups: BTreeMap<u64, f64> = BTreeMap::new();
    let mut dropoffs: BTreeMap<u64, f64> = BTreeMap::new();
    let mut vmt = 0.0;
    for (veh, evs) in &per_veh {
        let mut pos: Option<u32> = None;
        let mut onboard: i64 = 0;
        for e in evs {
            match e.kind {
                EventKind::Start => {
                    if pos.is_some() {
                        v.push(format!("vehicle {veh}: second start event"));
                    }
                    pos = Some(e.node);
                }
                EventKind::Arrive => {
                    let Some(here) = pos else {
                        v.push(format!("vehicle {veh}: moved before starting"));
                        break;
                    };
                    if let Some(net) = street {
                        match hop_length(net, here, e.node) {
                            Some(mi) => vmt += mi,
                            None => v.push(format!(
                                "vehicle {veh}: teleported {} -> {} at t={}",
                                here, e.node, e.time_s
                            )),
                        }
                    }
                    pos = Some(e.node);
                }
                EventKind::Pickup | EventKind::Dropoff => {
                    if pos != Some(e.node) {
                        v.push(format!(
                            "vehicle {veh}: {:?} at {} while positioned at {:?}",
                            e.kind, e.node, pos
                        ));
                    }
                    let Some(rq) = e.rq_id else {
                        v.push(format!("vehicle {veh}: {:?} without a request id", e.kind));
                        continue;
                    };
                    let book = if e.kind == EventKind::Pickup {
                        onboard += 1;
                        &mut pickups
                    } else {
                        onboard -= 1;
                        &mut dropoffs
                    };
                    if book.insert(rq, e.time_s).is_some() {
                        v.push(format!("request {rq}: duplicate {:?}", e.kind));
                    }
                    if onboard < 0 {
                        v.push(format!("vehicle {veh}: dropoff before pickup at t={}", e.time_s));
                    }
                    if onboard > params.capacity as i64 {
                        v.push(format!(
                            "vehicle {veh}: onboard {onboard} exceeds capacity {} at t={}",
                            params.capacity, e.time_s
                        ));
                    }
                }
            }
        }
        if onboard != 0 {
            v.push(format!("vehicle {veh}: {onboard} riders never dropped off"));
        }
    }
    if street.is_some() && (vmt - stats.vmt_mi).abs() > 1e-6 {
        v.push(format!(
            "odometer {} disagrees with replayed movement {vmt}",
            stats.vmt_mi
        ));
    }

    // --- events vs records
    let by_request: BTreeMap<u64, &RideRequest> = requests.iter().map(|r| (r.rq_id, r)).collect();
    for r in &outcome.records {
        let (p, d) = (pickups.get(&r.rq_id), dropoffs.get(&r.rq_id));
        match r.status {
            ServiceStatus::Served => {
                let (Some(&pt), Some(&dt)) = (p, d) else {
                    v.push(format!("request {}: served without both ride events", r.rq_id));
                    continue;
                };
                if pt > dt {
                    v.push(format!("request {}: dropoff precedes pickup", r.rq_id));
                }
                if let Some(rq) = by_request.get(&r.rq_id) {
                    let wait_min = (pt - rq.request_time_s) / 60.0;
                    if (wait_min - r.wait_min).abs() > 1e-4 {
                        v.push(format!(
                            "request {}: recorded wait {} vs event wait {wait_min}",
                            r.rq_id, r.wait_min
                        ));
                    }
                }
                let ivt_min = (dt - pt) / 60.0;
                if (ivt_min - r.ivt_min).abs() > 1e-4 {
                    v.push(format!(
                        "request {}: recorded ivt {} vs event ivt {ivt_min}",
                        r.rq_id, r.ivt_min
                    ));
                }
            }
            ServiceStatus::Rejected(_) => {
                if p.is_some() || d.is_some() {
                    v.push(format!("request {}: rejected but has ride events", r.rq_id));
                }
            }
        }
    }

    v
}

/// Length of the unique street link from -> to, by external node ids.
fn hop_length(net: &Network, from: u32, to: u32) -> Option<f64> {
    let fx = net.index_of(from)?;
    let tx = net.index_of(to)?;
    net.out_links(fx)
        .iter()
        .map(|&lx| net.link(lx))
        .find(|l| l.to == tx)
        .map(|l| l.length_mi)
}

// ---------------------------------------------------------------------------
// random scenario generator

/// A small random scenario for comparing the router against enumeration:
/// a connected street graph of at most 12 nodes, up to two fixed routes,
/// a random service mode, and one traveler with random tastes.
pub struct RandomNetCase {
    pub supernet: Supernetwork,
    pub profile: TravelerProfile,
    pub params: Params,
}

pub fn random_net_case(seed: u64) -> RandomNetCase {
    let mut rng = stream(seed, "oracle-case", 0);
    let n: u32 = rng.random_range(4..=12);

    let nodes: Vec<Node> = (0..n)
        .map(|id| Node {
            id,
            x: rng.random_range(0.0..5000.0),
            y: rng.random_range(0.0..5000.0),
            jobs: rng.random_range(0..=40),
            zone: rng.random_range(0..2),
        })
        .collect();

    // spanning tree keeps the walk layer connected; extra edges add loops
    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    for i in 1..n {
        edges.insert((rng.random_range(0..i), i));
    }
    for _ in 0..rng.random_range(0..=n) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let mut links = Vec::new();
    for &(a, b) in &edges {
        let length_mi = rng.random_range(0.15..1.2);
        let mph = rng.random_range(12.0..35.0);
        let auto_time_s = length_mi / mph * 3600.0;
        links.push(StreetLink { from: a, to: b, length_mi, auto_time_s });
        links.push(StreetLink { from: b, to: a, length_mi, auto_time_s });
    }
    let auto = Network::from_street(nodes.clone(), &links, TimeBasis::Auto, CoordUnits::Meters)
        .expect("generated street net is valid");
    let walk = Network::from_street(
        nodes,
        &links,
        TimeBasis::Walk { speed_mph: 2.8 },
        CoordUnits::Meters,
    )
    .expect("generated street net is valid");

    let mode = match rng.random_range(0..3) {
        0 => TransitMode::FixedOnly,
        1 => TransitMode::MicroOnly,
        _ => TransitMode::MicroPlusFixed,
    };

    let mut lines = Vec::new();
    if mode != TransitMode::MicroOnly {
        for j in 0..rng.random_range(0..=2u32) {
            let k = rng.random_range(2..=4.min(n)) as usize;
            let mut ids: Vec<u32> = (0..n).collect();
            for i in 0..k {
                let pick = rng.random_range(i..ids.len());
                ids.swap(i, pick);
            }
            let stops: Vec<u32> = ids[..k].to_vec();
            let headways = [10.0, 15.0, 20.0];
            lines.push(FrtLine {
                route_id: format!("R{j}"),
                headway_min: headways[rng.random_range(0..headways.len())],
                duration_min: rng.random_range(8.0..30.0),
                length_mi: rng.random_range(1.0..4.0),
                operating_hr: 19.0,
                stops_back: stops.iter().rev().copied().collect(),
                stops_out: stops,
            });
        }
    }

    let mut cfg = ScenarioConfig::new(format!("case-{seed}"), mode);
    cfg.master_seed = seed;
    if mode.has_micro() {
        cfg.virtual_stop_coverage = rng.random_range(0.3..=1.0);
        cfg.fleet_size = rng.random_range(1..=4);
        cfg.operating_periods = vec![PeriodId::AM, PeriodId::MD, PeriodId::PM];
    }
    let state = MicroState {
        detour_ratio: rng.random_range(1.0..=1.8),
        mean_wait_s: rng.random_range(60.0..=600.0),
    };
    let supernet =
        build_supernetwork(&walk, &auto, &lines, &cfg, state).expect("generated scenario builds");

    let origin = rng.random_range(0..n);
    let dest = rng.random_range(0..n);
    // mostly inside the service day so micro links see real use
    let dp_time_s = if rng.random_bool(0.85) {
        rng.random_range(18_000.0..72_000.0)
    } else {
        rng.random_range(72_000.0..86_000.0)
    };
    let betas = Betas {
        c0: 0.0,
        c_ivt: rng.random_range(0.0..0.6),
        c_gas: rng.random_range(0.0..2.0),
        t0: 0.0,
        t_wk: rng.random_range(0.0..0.6),
        m_wt: rng.random_range(0.0..0.4),
        f_wt: rng.random_range(0.0..0.4),
        m_ivt: rng.random_range(0.0..0.4),
        f_ivt: rng.random_range(0.0..0.4),
        f_trfr: rng.random_range(0.0..1.0),
        t_fr: rng.random_range(0.0..1.0),
    };
    RandomNetCase {
        supernet,
        profile: TravelerProfile {
            rq_id: seed,
            origin,
            dest,
            dp_time_s,
            betas,
        },
        params: Params::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::simulate_fleet;
    use crate::router::least_cost_transit_path;

    #[test]
    fn enumeration_agrees_with_router_on_random_cases() {
        for seed in 0..25u64 {
            let case = random_net_case(seed);
            let fast = least_cost_transit_path(&case.supernet, &case.profile, &case.params);
            let slow = exhaustive_transit_cost(&case.supernet, &case.profile, &case.params);
            match (&fast, slow) {
                (Some(p), Some(c)) => assert!(
                    (p.gen_cost - c).abs() <= 1e-9,
                    "seed {seed}: router {} vs enumeration {c}",
                    p.gen_cost
                ),
                (None, None) => {}
                _ => panic!("seed {seed}: reachability disagrees: {fast:?} vs {slow:?}"),
            }
        }
    }

    #[test]
    fn relaxation_matches_isochrone_search_bitwise() {
        for seed in [3u64, 11, 19] {
            let case = random_net_case(seed);
            for w in 0..case.supernet.n_walk {
                let a = case.supernet.travel_times_from(w);
                let b = brute_travel_times(&case.supernet, w);
                assert_eq!(a, b, "seed {seed} origin {w}");
            }
        }
    }

    fn audit_city() -> Network {
        let nodes: Vec<Node> = (0..4u32)
            .map(|id| Node {
                id,
                x: id as f64 * 1609.34,
                y: 0.0,
                jobs: 0,
                zone: 0,
            })
            .collect();
        let mut links = Vec::new();
        for i in 0..3u32 {
            for (a, b) in [(i, i + 1), (i + 1, i)] {
                links.push(StreetLink {
                    from: a,
                    to: b,
                    length_mi: 1.0,
                    auto_time_s: 60.0,
                });
            }
        }
        Network::from_street(nodes, &links, TimeBasis::Auto, CoordUnits::Meters).unwrap()
    }

    #[test]
    fn auditor_passes_real_runs_and_catches_tampering() {
        let net = audit_city();
        let params = FleetParams {
            fleet_size: 2,
            capacity: 4,
            max_wait_s: 900.0,
            max_detour_ratio: 2.0,
            reposition: true,
            cold_start_detour: 1.2,
            cold_start_wait_s: 300.0,
            seed: 7,
        };
        let stops: Vec<u32> = (0..4).collect();
        let periods = [(18_000.0, 36_000.0)];
        let requests: Vec<RideRequest> = (0..6u64)
            .map(|i| RideRequest {
                rq_id: i * 16,
                request_time_s: 19_000.0 + i as f64 * 300.0,
                pickup: (i % 4) as u32,
                dropoff: ((i + 2) % 4) as u32,
                walk_access_min: 0.0,
                walk_egress_min: 0.0,
            })
            .collect();
        let out = simulate_fleet(&net, &stops, &requests, &periods, &params).unwrap();
        assert!(out.stats.served > 0, "setup should serve something");
        let clean = fleet_violations(&params, &requests, &out, Some(&net));
        assert!(clean.is_empty(), "clean run flagged: {clean:?}");

        // tamper with the odometer
        let mut cooked = out.clone();
        cooked.stats.vmt_mi += 1.0;
        assert!(fleet_violations(&params, &requests, &cooked, Some(&net))
            .iter()
            .any(|m| m.contains("odometer")));

        // tamper with a wait
        let mut cooked = out.clone();
        let served_ix = cooked
            .records
            .iter()
            .position(|r| r.status == ServiceStatus::Served)
            .unwrap();
        cooked.records[served_ix].wait_min += 5.0;
        assert!(!fleet_violations(&params, &requests, &cooked, Some(&net)).is_empty());

        // drop a record entirely
        let mut cooked = out.clone();
        cooked.records.remove(served_ix);
        assert!(fleet_violations(&params, &requests, &cooked, Some(&net))
            .iter()
            .any(|m| m.contains("no service record")));
    }

    #[test]
    fn generator_is_deterministic_per_seed() {
        let a = random_net_case(7);
        let b = random_net_case(7);
        assert_eq!(a.supernet.fingerprint(), b.supernet.fingerprint());
        assert_eq!(a.profile.origin, b.profile.origin);
        assert_eq!(a.profile.betas.t_wk, b.profile.betas.t_wk);
        let c = random_net_case(8);
        assert_ne!(a.supernet.fingerprint(), c.supernet.fingerprint());
    }
}

//! Event-driven microtransit fleet simulation: dynamic, many-to-many,
//! stop-based ride pooling with immediate-response matching.
//!
//! Each request is matched the instant it arrives: every vehicle's schedule
//! is probed with all order-preserving (pickup, dropoff) insertions, and the
//! feasible insertion with the smallest added drive time wins (ties go to the
//! lowest vehicle id, then the earliest insertion position). Vehicles drive
//! time-shortest street routes between scheduled stops and commit only to
//! their next street node, so an assignment landing mid-link diverts the
//! vehicle at the upcoming node rather than at its old destination.
//!
//! The simulation is exactly deterministic: the only randomness is the seeded
//! initial vehicle placement, events are totally ordered by (time, kind, id),
//! and no hash-map iteration order ever reaches an output.

use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Network, NodeId};
use crate::rng;
use crate::scenario::ScenarioConfig;

/// One microtransit trip request, already snapped to virtual stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RideRequest {
    pub rq_id: u64,
    pub request_time_s: f64,
    /// Street node id of the pickup virtual stop.
    pub pickup: NodeId,
    pub dropoff: NodeId,
    /// Walk minutes to reach the pickup stop (informational; set by routing).
    pub walk_access_min: f64,
    /// Walk minutes from the dropoff stop (informational).
    pub walk_egress_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Request time falls outside every operating period.
    OutsidePeriod,
    /// No drivable route between the stops.
    Unreachable,
    /// No vehicle had a feasible insertion.
    NoVehicle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceStatus {
    Served,
    Rejected(RejectReason),
}

/// Outcome of one request: realized wait, ride time, and the direct-route
/// baseline used for the detour ratio and fare accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceRecord {
    pub rq_id: u64,
    pub status: ServiceStatus,
    pub request_time_s: f64,
    pub pickup: NodeId,
    pub dropoff: NodeId,
    /// Request to pickup, minutes (Served only; 0 otherwise).
    pub wait_min: f64,
    /// Pickup to dropoff, minutes.
    pub ivt_min: f64,
    /// Unpooled shortest drive time, minutes.
    pub direct_min: f64,
    /// Unpooled shortest drive distance, miles — the fare basis.
    pub direct_mi: f64,
    /// ivt / direct (1.0 for an unpooled ride).
    pub detour_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    Arrive,
    Pickup,
    Dropoff,
}

/// One audit-log row; chronological, and per vehicle time moves forward on
/// every node change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub time_s: f64,
    pub vehicle_id: u32,
    pub kind: EventKind,
    pub node: NodeId,
    pub rq_id: Option<u64>,
}

/// Per-operating-period service quality (period = request's arrival period).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    pub start_s: f64,
    pub end_s: f64,
    pub served: u32,
    pub rejected: u32,
    /// Mean over served requests; 0 when none were served this period.
    pub mean_wait_s: f64,
    pub mean_detour_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetStats {
    pub served: u32,
    pub rejected: u32,
    pub mean_wait_s: f64,
    pub mean_detour_ratio: f64,
    /// All vehicle movement, deadheading and repositioning included.
    pub vmt_mi: f64,
    pub by_period: Vec<PeriodStats>,
    /// True when nothing was served and the means above are the configured
    /// cold-start defaults rather than measurements.
    pub cold_start: bool,
}

/// Fleet knobs, pulled out of a scenario or set directly in tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetParams {
    pub fleet_size: u32,
    pub capacity: u32,
    pub max_wait_s: f64,
    pub max_detour_ratio: f64,
    pub reposition: bool,
    pub cold_start_detour: f64,
    pub cold_start_wait_s: f64,
    /// Seeds the initial vehicle placement (the sim's only randomness).
    pub seed: u64,
}

impl FleetParams {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        FleetParams {
            fleet_size: cfg.fleet_size,
            capacity: cfg.params.vehicle_capacity,
            max_wait_s: cfg.params.max_wait_min * 60.0,
            max_detour_ratio: cfg.params.max_detour_ratio,
            reposition: cfg.params.reposition,
            cold_start_detour: cfg.params.cold_start_detour,
            cold_start_wait_s: cfg.params.cold_start_wait_s,
            seed: cfg.master_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::config("vehicle capacity must be at least 1"));
        }
        if !(self.max_wait_s >= 0.0) || !(self.max_detour_ratio >= 1.0) {
            return Err(Error::config(
                "max_wait must be >= 0 and max_detour_ratio >= 1",
            ));
        }
        if !(self.cold_start_detour >= 1.0) || !(self.cold_start_wait_s >= 0.0) {
            return Err(Error::config("cold-start defaults out of range"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetOutcome {
    pub records: Vec<ServiceRecord>,
    pub stats: FleetStats,
    pub events: Vec<EventRow>,
}

// ---------------------------------------------------------------------------
// shortest-path cache over the drive network

struct SpTree {
    time_s: Vec<f64>,
    dist_mi: Vec<f64>,
    parent_link: Vec<Option<u32>>,
}

impl SpTree {
    fn build(net: &Network, src: u32) -> SpTree {
        use std::cmp::Reverse;

        #[derive(PartialEq)]
        struct Item(f64, u32);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
            }
        }

        let n = net.n();
        let mut time_s = vec![f64::INFINITY; n];
        let mut dist_mi = vec![f64::INFINITY; n];
        let mut parent_link = vec![None; n];
        let mut heap = BinaryHeap::new();
        time_s[src as usize] = 0.0;
        dist_mi[src as usize] = 0.0;
        heap.push(Reverse(Item(0.0, src)));
        while let Some(Reverse(Item(d, u))) = heap.pop() {
            if d > time_s[u as usize] {
                continue;
            }
            for &lx in net.out_links(u) {
                let l = net.link(lx);
                let nd = d + l.time_s;
                if nd < time_s[l.to as usize] {
                    time_s[l.to as usize] = nd;
                    dist_mi[l.to as usize] = dist_mi[u as usize] + l.length_mi;
                    parent_link[l.to as usize] = Some(lx);
                    heap.push(Reverse(Item(nd, l.to)));
                }
            }
        }
        SpTree {
            time_s,
            dist_mi,
            parent_link,
        }
    }
}

/// Lazily computed per-source shortest-path trees (time-optimal; distances
/// follow the chosen tree). The cache is keyed lookups only — its internal
/// order never influences results.
struct SpCache<'a> {
    net: &'a Network,
    trees: HashMap<u32, SpTree>,
}

impl<'a> SpCache<'a> {
    fn new(net: &'a Network) -> Self {
        SpCache {
            net,
            trees: HashMap::new(),
        }
    }

    fn tree(&mut self, src: u32) -> &SpTree {
        let net = self.net;
        self.trees
            .entry(src)
            .or_insert_with(|| SpTree::build(net, src))
    }

    fn time(&mut self, src: u32, dst: u32) -> f64 {
        self.tree(src).time_s[dst as usize]
    }

    /// First link on the time-shortest path src -> dst.
    fn next_hop(&mut self, src: u32, dst: u32) -> Option<(u32, f64, f64)> {
        if src == dst {
            return None;
        }
        let net = self.net;
        let tree = self.tree(src);
        if tree.time_s[dst as usize].is_infinite() {
            return None;
        }
        let mut v = dst;
        let mut first = None;
        while v != src {
            let lx = tree.parent_link[v as usize].expect("finite label has a parent");
            first = Some(lx);
            v = net.link(lx).from;
        }
        let l = net.link(first.expect("dst != src"));
        Some((l.to, l.time_s, l.length_mi))
    }
}

// ---------------------------------------------------------------------------
// simulation state

#[derive(Debug, Clone, Copy, PartialEq)]
struct Task {
    pickup: bool,
    rq: u32,
    node: u32,
}

struct Veh {
    id: u32,
    node: u32,
    /// Committed next hop: (to-node, arrival time, link miles). The vehicle
    /// cannot be diverted before reaching it.
    driving: Option<(u32, f64, f64)>,
    tasks: VecDeque<Task>,
    onboard: u32,
    odometer_mi: f64,
}

/// Tracks a request from assignment through dropoff.
struct Pend {
    request_time_s: f64,
    direct_s: f64,
    direct_mi: f64,
    pickup_node: u32,
    dropoff_node: u32,
    pickup_t: Option<f64>,
}

#[derive(PartialEq)]
struct SimEv {
    t: f64,
    /// 0 = vehicle arrival, 1 = request arrival; arrivals settle first.
    rank: u8,
    key: u64,
}
impl Eq for SimEv {}
impl PartialOrd for SimEv {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for SimEv {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.rank.cmp(&other.rank))
            .then(self.key.cmp(&other.key))
    }
}

struct Sim<'a> {
    sp: SpCache<'a>,
    vehs: Vec<Veh>,
    pend: Vec<Option<Pend>>,
    records: Vec<Option<ServiceRecord>>,
    events: Vec<EventRow>,
    heap: BinaryHeap<std::cmp::Reverse<SimEv>>,
    /// Cumulative pickup-request counts per street node, for repositioning.
    demand_count: Vec<f64>,
    stops: Vec<u32>,
    periods: &'a [(f64, f64)],
    params: &'a FleetParams,
    requests: &'a [RideRequest],
    node_ids: Vec<NodeId>,
}

impl Sim<'_> {
    fn in_period(&self, t: f64) -> bool {
        self.periods.iter().any(|&(s, e)| t >= s && t < e)
    }

    fn push_arrival(&mut self, v: u32, t: f64) {
        self.heap.push(std::cmp::Reverse(SimEv {
            t,
            rank: 0,
            key: v as u64,
        }));
    }

    fn log(&mut self, t: f64, v: u32, kind: EventKind, node: u32, rq: Option<u64>) {
        self.events.push(EventRow {
            time_s: t,
            vehicle_id: v,
            kind,
            node: self.node_ids[node as usize],
            rq_id: rq,
        });
    }

    /// Execute any tasks at the vehicle's current node, then commit the next
    /// hop (toward the first remaining task, or a repositioning target).
    fn settle(&mut self, vx: usize, t: f64) {
        debug_assert!(self.vehs[vx].driving.is_none());
        while let Some(&task) = self.vehs[vx].tasks.front() {
            if task.node != self.vehs[vx].node {
                break;
            }
            self.vehs[vx].tasks.pop_front();
            let rq = task.rq as usize;
            let rq_id = self.requests[rq].rq_id;
            if task.pickup {
                self.vehs[vx].onboard += 1;
                self.pend[rq].as_mut().expect("assigned").pickup_t = Some(t);
                self.log(t, self.vehs[vx].id, EventKind::Pickup, task.node, Some(rq_id));
            } else {
                self.vehs[vx].onboard -= 1;
                let p = self.pend[rq].take().expect("assigned");
                let pickup_t = p.pickup_t.expect("dropoff after pickup");
                let ivt_s = t - pickup_t;
                let detour = if p.direct_s > 0.0 {
                    ivt_s / p.direct_s
                } else {
                    1.0
                };
                self.records[rq] = Some(ServiceRecord {
                    rq_id,
                    status: ServiceStatus::Served,
                    request_time_s: p.request_time_s,
                    pickup: self.node_ids[p.pickup_node as usize],
                    dropoff: self.node_ids[p.dropoff_node as usize],
                    wait_min: (pickup_t - p.request_time_s) / 60.0,
                    ivt_min: ivt_s / 60.0,
                    direct_min: p.direct_s / 60.0,
                    direct_mi: p.direct_mi,
                    detour_ratio: detour,
                });
                self.log(t, self.vehs[vx].id, EventKind::Dropoff, task.node, Some(rq_id));
            }
        }

        let next_task_node = self.vehs[vx].tasks.front().map(|task| task.node);
        let dest = match next_task_node {
            Some(node) => Some(node),
            None if self.params.reposition && self.in_period(t) => {
                let here = self.vehs[vx].node;
                let target = self.reposition_target(here);
                (target != here).then_some(target)
            }
            None => None,
        };
        if let Some(dest) = dest {
            let here = self.vehs[vx].node;
            if let Some((to, dt, len)) = self.sp.next_hop(here, dest) {
                self.vehs[vx].driving = Some((to, t + dt, len));
                let id = self.vehs[vx].id;
                self.push_arrival(id, t + dt);
            }
        }
    }

    /// Best stop to wait at: cumulative pickup demand discounted by drive
    /// time. Ties prefer the closer stop, then the lower node id.
    fn reposition_target(&mut self, from: u32) -> u32 {
        let stops = self.stops.clone();
        let mut best = from;
        let mut best_score = f64::NEG_INFINITY;
        let mut best_time = f64::INFINITY;
        for &s in &stops {
            let t = self.sp.time(from, s);
            if t.is_infinite() {
                continue;
            }
            let score = self.demand_count[s as usize] / (1.0 + t / 60.0);
            if score > best_score || (score == best_score && t < best_time) {
                best = s;
                best_score = score;
                best_time = t;
            }
        }
        best
    }

    /// Probe one vehicle for the cheapest feasible insertion of `rq`.
    /// Returns (added drive seconds, new task list).
    fn evaluate_insertion(
        &mut self,
        vx: usize,
        rq: u32,
        now: f64,
    ) -> Option<(f64, VecDeque<Task>)> {
        let (p0, t0) = match self.vehs[vx].driving {
            Some((to, arr, _)) => (to, arr),
            None => (self.vehs[vx].node, now),
        };
        let old_tasks: Vec<Task> = self.vehs[vx].tasks.iter().copied().collect();
        let old_drive = self.drive_time(p0, &old_tasks)?;
        let req = &self.pend[rq as usize].as_ref().expect("probing pending request");
        let (pu, doff) = (req.pickup_node, req.dropoff_node);
        let onboard0 = self.vehs[vx].onboard;

        let k = old_tasks.len();
        let mut best: Option<(f64, Vec<Task>)> = None;
        for i in 0..=k {
            for j in i..=k {
                let mut cand = old_tasks.clone();
                cand.insert(
                    i,
                    Task {
                        pickup: true,
                        rq,
                        node: pu,
                    },
                );
                cand.insert(
                    j + 1,
                    Task {
                        pickup: false,
                        rq,
                        node: doff,
                    },
                );
                if let Some(drive) = self.check_schedule(p0, t0, onboard0, &cand) {
                    let cost = drive - old_drive;
                    if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                        best = Some((cost, cand));
                    }
                }
            }
        }
        best.map(|(c, tasks)| (c, tasks.into()))
    }

    /// Walk a candidate schedule, enforcing capacity, the wait cap for every
    /// not-yet-picked-up rider, and the detour cap for every rider it still
    /// carries or will carry. Returns total drive seconds when feasible.
    fn check_schedule(&mut self, p0: u32, t0: f64, onboard0: u32, cand: &[Task]) -> Option<f64> {
        let mut t = t0;
        let mut pos = p0;
        let mut onboard = onboard0;
        let mut drive = 0.0;
        let mut planned_pickup: Vec<(u32, f64)> = Vec::new();
        for task in cand {
            let leg = self.sp.time(pos, task.node);
            if leg.is_infinite() {
                return None;
            }
            t += leg;
            drive += leg;
            pos = task.node;
            let p = self.pend[task.rq as usize].as_ref().expect("pending");
            if task.pickup {
                onboard += 1;
                if onboard > self.params.capacity {
                    return None;
                }
                if t - p.request_time_s > self.params.max_wait_s {
                    return None;
                }
                planned_pickup.push((task.rq, t));
            } else {
                onboard -= 1;
                let picked = planned_pickup
                    .iter()
                    .find(|(r, _)| *r == task.rq)
                    .map(|(_, pt)| *pt)
                    .or(p.pickup_t)
                    .expect("dropoff follows its pickup");
                let ratio = if p.direct_s > 0.0 {
                    (t - picked) / p.direct_s
                } else {
                    1.0
                };
                if ratio > self.params.max_detour_ratio {
                    return None;
                }
            }
        }
        Some(drive)
    }

    fn drive_time(&mut self, p0: u32, tasks: &[Task]) -> Option<f64> {
        let mut pos = p0;
        let mut total = 0.0;
        for task in tasks {
            let leg = self.sp.time(pos, task.node);
            if leg.is_infinite() {
                return None;
            }
            total += leg;
            pos = task.node;
        }
        Some(total)
    }
}

/// Run the day. `drive` is the street network at auto travel times (every
/// link must take positive time); `stops` are the street node ids eligible
/// for pickup/dropoff; `requests` may arrive in any order and are processed
/// by (request_time, rq_id); `periods` bounds request acceptance — onboard
/// riders are always carried to completion, but nothing new is accepted
/// outside a period and idle repositioning pauses.
pub fn simulate_fleet(
    drive: &Network,
    stops: &[NodeId],
    requests: &[RideRequest],
    periods: &[(f64, f64)],
    params: &FleetParams,
) -> Result<FleetOutcome> {
    params.validate()?;
    if drive.links().iter().any(|l| !(l.time_s > 0.0)) {
        return Err(Error::invalid(
            "fleet simulation requires strictly positive drive times",
        ));
    }
    let mut stop_ix = Vec::with_capacity(stops.len());
    for &s in stops {
        stop_ix.push(
            drive
                .index_of(s)
                .ok_or_else(|| Error::invalid(format!("virtual stop {s} is not a street node")))?,
        );
    }
    stop_ix.sort_unstable();
    stop_ix.dedup();
    let stop_set: std::collections::HashSet<u32> = stop_ix.iter().copied().collect();

    let mut order: Vec<u32> = (0..requests.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&requests[a as usize], &requests[b as usize]);
        ra.request_time_s
            .total_cmp(&rb.request_time_s)
            .then(ra.rq_id.cmp(&rb.rq_id))
    });

    for r in requests {
        if r.pickup == r.dropoff {
            return Err(Error::invalid(format!(
                "request {}: pickup equals dropoff",
                r.rq_id
            )));
        }
        for (end, what) in [(r.pickup, "pickup"), (r.dropoff, "dropoff")] {
            let ix = drive
                .index_of(end)
                .ok_or_else(|| Error::invalid(format!("request {}: unknown node {end}", r.rq_id)))?;
            if !stop_set.contains(&ix) {
                return Err(Error::invalid(format!(
                    "request {}: {what} {end} is not a virtual stop",
                    r.rq_id
                )));
            }
        }
    }

    let node_ids: Vec<NodeId> = drive.nodes().iter().map(|n| n.id).collect();
    let mut sim = Sim {
        sp: SpCache::new(drive),
        vehs: Vec::new(),
        pend: (0..requests.len()).map(|_| None).collect(),
        records: vec![None; requests.len()],
        events: Vec::new(),
        heap: BinaryHeap::new(),
        demand_count: vec![0.0; drive.n()],
        stops: stop_ix.clone(),
        periods,
        params,
        requests,
        node_ids,
    };

    // seeded initial placement across virtual stops
    let mut place_rng = rng::stream(params.seed, "fleet-init", 0);
    for id in 0..params.fleet_size {
        let node = if stop_ix.is_empty() {
            0
        } else {
            stop_ix[rand::Rng::random_range(&mut place_rng, 0..stop_ix.len())]
        };
        sim.vehs.push(Veh {
            id,
            node,
            driving: None,
            tasks: VecDeque::new(),
            onboard: 0,
            odometer_mi: 0.0,
        });
        sim.log(0.0, id, EventKind::Start, node, None);
    }

    // key = rank within the (time, rq_id)-sorted order, so equal-time
    // requests resolve by rq_id no matter how the input slice was arranged
    for (pos, &ix) in order.iter().enumerate() {
        sim.heap.push(std::cmp::Reverse(SimEv {
            t: requests[ix as usize].request_time_s,
            rank: 1,
            key: pos as u64,
        }));
    }

    while let Some(std::cmp::Reverse(ev)) = sim.heap.pop() {
        if ev.rank == 0 {
            // vehicle arrival at its committed node
            let vx = ev.key as usize;
            let (to, _, len) = sim.vehs[vx].driving.take().expect("arrival implies commit");
            sim.vehs[vx].node = to;
            sim.vehs[vx].odometer_mi += len;
            let id = sim.vehs[vx].id;
            sim.log(ev.t, id, EventKind::Arrive, to, None);
            sim.settle(vx, ev.t);
            continue;
        }

        // request arrival: immediate response
        let rx = order[ev.key as usize] as usize;
        let r = &requests[rx];
        let t = ev.t;
        let pu = drive.index_of(r.pickup).expect("validated");
        let doff = drive.index_of(r.dropoff).expect("validated");
        sim.demand_count[pu as usize] += 1.0;

        let reject = |reason| ServiceRecord {
            rq_id: r.rq_id,
            status: ServiceStatus::Rejected(reason),
            request_time_s: r.request_time_s,
            pickup: r.pickup,
            dropoff: r.dropoff,
            wait_min: 0.0,
            ivt_min: 0.0,
            direct_min: 0.0,
            direct_mi: 0.0,
            detour_ratio: 0.0,
        };
        if !sim.in_period(t) {
            sim.records[rx] = Some(reject(RejectReason::OutsidePeriod));
            continue;
        }
        let direct_s = sim.sp.time(pu, doff);
        if direct_s.is_infinite() {
            sim.records[rx] = Some(reject(RejectReason::Unreachable));
            continue;
        }
        let direct_mi = sim.sp.tree(pu).dist_mi[doff as usize];
        sim.pend[rx] = Some(Pend {
            request_time_s: r.request_time_s,
            direct_s,
            direct_mi,
            pickup_node: pu,
            dropoff_node: doff,
            pickup_t: None,
        });

        let mut best: Option<(f64, usize, VecDeque<Task>)> = None;
        for vx in 0..sim.vehs.len() {
            if let Some((cost, tasks)) = sim.evaluate_insertion(vx, rx as u32, t) {
                if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
                    best = Some((cost, vx, tasks));
                }
            }
        }
        match best {
            Some((_, vx, tasks)) => {
                sim.vehs[vx].tasks = tasks;
                if sim.vehs[vx].driving.is_none() {
                    sim.settle(vx, t);
                }
            }
            None => {
                sim.pend[rx] = None;
                sim.records[rx] = Some(reject(RejectReason::NoVehicle));
            }
        }
    }

    let records: Vec<ServiceRecord> = {
        let mut out = Vec::with_capacity(requests.len());
        for (ix, rec) in sim.records.iter().enumerate() {
            out.push(*rec.as_ref().unwrap_or_else(|| {
                panic!("request {} never resolved", requests[ix].rq_id)
            }));
        }
        out
    };
    // fold from +0.0: `Sum` starts f64 folds at -0.0, which a zero-vehicle
    // fleet would otherwise leak into reports
    let vmt_mi = sim.vehs.iter().fold(0.0, |acc, v| acc + v.odometer_mi);
    let stats = summarize(&records, vmt_mi, periods, params);
    Ok(FleetOutcome {
        records,
        stats,
        events: sim.events,
    })
}

fn summarize(
    records: &[ServiceRecord],
    vmt_mi: f64,
    periods: &[(f64, f64)],
    params: &FleetParams,
) -> FleetStats {
    let served_recs: Vec<&ServiceRecord> = records
        .iter()
        .filter(|r| r.status == ServiceStatus::Served)
        .collect();
    let served = served_recs.len() as u32;
    let rejected = records.len() as u32 - served;
    let cold_start = served == 0;
    let (mean_wait_s, mean_detour_ratio) = if cold_start {
        (params.cold_start_wait_s, params.cold_start_detour)
    } else {
        let w: f64 = served_recs.iter().map(|r| r.wait_min * 60.0).sum();
        let d: f64 = served_recs.iter().map(|r| r.detour_ratio).sum();
        (w / served as f64, d / served as f64)
    };
    let by_period = periods
        .iter()
        .map(|&(s, e)| {
            let in_p: Vec<&&ServiceRecord> = served_recs
                .iter()
                .filter(|r| r.request_time_s >= s && r.request_time_s < e)
                .collect();
            let rej = records
                .iter()
                .filter(|r| {
                    r.status != ServiceStatus::Served
                        && r.request_time_s >= s
                        && r.request_time_s < e
                })
                .count() as u32;
            let n = in_p.len() as u32;
            let (w, d) = if n == 0 {
                (0.0, 0.0)
            } else {
                (
                    in_p.iter().map(|r| r.wait_min * 60.0).sum::<f64>() / n as f64,
                    in_p.iter().map(|r| r.detour_ratio).sum::<f64>() / n as f64,
                )
            };
            PeriodStats {
                start_s: s,
                end_s: e,
                served: n,
                rejected: rej,
                mean_wait_s: w,
                mean_detour_ratio: d,
            }
        })
        .collect();
    FleetStats {
        served,
        rejected,
        mean_wait_s,
        mean_detour_ratio,
        vmt_mi,
        by_period,
        cold_start,
    }
}

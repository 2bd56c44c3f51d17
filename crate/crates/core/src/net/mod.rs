//! Street networks and the three-layer transit supernetwork.
//!
//! The supernetwork joins a walk layer, an FRT layer, and a microtransit layer
//! into one directed graph so a single least-cost query yields a multimodal
//! path. Walk and micro layers copy the street topology at different speeds;
//! FRT stop nodes hang off the walk layer through waiting links; all
//! inter-layer movement passes through the walk layer.
//!
//! Node indexing is dense and layout-stable: walk nodes occupy `[0, n)`,
//! micro nodes `[n, 2n)` (when the scenario fields microtransit), and FRT stop
//! nodes follow. Building twice from identical inputs and seed produces an
//! identical structure, byte for byte.

mod load;

pub use load::{load_networks, load_zone_map};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scenario::{ScenarioConfig, WaitGranularity};

pub type NodeId = u32;

/// A street-network node with its land-use attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub jobs: u32,
    /// 0 when unpartitioned.
    pub zone: u32,
}

/// A directed street link as ingested (auto travel time; walk time is derived).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreetLink {
    pub from: NodeId,
    pub to: NodeId,
    pub length_mi: f64,
    pub auto_time_s: f64,
}

/// Coordinate units declared in the street file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordUnits {
    #[default]
    Meters,
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetLink {
    pub from: u32,
    pub to: u32,
    pub length_mi: f64,
    pub time_s: f64,
}

/// Which travel time a single-layer network carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeBasis {
    Auto,
    Walk { speed_mph: f64 },
}

/// A single-layer directed graph over the street topology (auto or walk times).
/// Nodes are stored sorted by external id; indices are dense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<NetLink>,
    #[serde(skip)]
    out: Vec<Vec<u32>>,
    #[serde(skip)]
    index: HashMap<NodeId, u32>,
    pub coords: CoordUnits,
}

impl Network {
    pub fn from_street(
        mut nodes: Vec<Node>,
        street_links: &[StreetLink],
        basis: TimeBasis,
        coords: CoordUnits,
    ) -> Result<Network> {
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (ix, n) in nodes.iter().enumerate() {
            if index.insert(n.id, ix as u32).is_some() {
                return Err(Error::invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let mut links = Vec::with_capacity(street_links.len());
        for l in street_links {
            let from = *index
                .get(&l.from)
                .ok_or_else(|| Error::invalid(format!("link references unknown node {}", l.from)))?;
            let to = *index
                .get(&l.to)
                .ok_or_else(|| Error::invalid(format!("link references unknown node {}", l.to)))?;
            if !(l.length_mi >= 0.0) || !(l.auto_time_s >= 0.0) {
                return Err(Error::invalid(format!(
                    "link {}->{} has negative length or time",
                    l.from, l.to
                )));
            }
            let time_s = match basis {
                TimeBasis::Auto => l.auto_time_s,
                TimeBasis::Walk { speed_mph } => l.length_mi / speed_mph * 3600.0,
            };
            links.push(NetLink {
                from,
                to,
                length_mi: l.length_mi,
                time_s,
            });
        }
        let out = adjacency(nodes.len(), &links, |l| l.from);
        Ok(Network {
            nodes,
            links,
            out,
            index,
            coords,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[NetLink] {
        &self.links
    }

    pub fn node(&self, ix: u32) -> &Node {
        &self.nodes[ix as usize]
    }

    pub fn index_of(&self, id: NodeId) -> Option<u32> {
        self.index.get(&id).copied()
    }

    pub fn out_links(&self, ix: u32) -> &[u32] {
        &self.out[ix as usize]
    }

    pub fn link(&self, lx: u32) -> &NetLink {
        &self.links[lx as usize]
    }

    /// Overwrite zone labels from a node->zone map. Every node must be covered.
    pub fn set_zones(&mut self, zone_map: &BTreeMap<NodeId, u32>) -> Result<()> {
        for n in &mut self.nodes {
            n.zone = *zone_map
                .get(&n.id)
                .ok_or_else(|| Error::invalid(format!("node {} missing from zone map", n.id)))?;
        }
        Ok(())
    }

    /// Restore the skipped adjacency/index after deserialization.
    pub fn rebuild_indices(&mut self) {
        self.index = self
            .nodes
            .iter()
            .enumerate()
            .map(|(ix, n)| (n.id, ix as u32))
            .collect();
        self.out = adjacency(self.nodes.len(), &self.links, |l| l.from);
    }
}

fn adjacency<L>(n: usize, links: &[L], from: impl Fn(&L) -> u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); n];
    for (lx, l) in links.iter().enumerate() {
        out[from(l) as usize].push(lx as u32);
    }
    out
}

/// One fixed route: headway, end-to-end run time, and ordered stops per
/// direction. `stops_back` defaults to the reversed outbound pattern when the
/// line file lists only direction 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrtLine {
    pub route_id: String,
    pub headway_min: f64,
    /// One-direction end-to-end run time.
    pub duration_min: f64,
    /// One-direction route length.
    pub length_mi: f64,
    /// Daily operating hours.
    pub operating_hr: f64,
    pub stops_out: Vec<NodeId>,
    pub stops_back: Vec<NodeId>,
}

impl FrtLine {
    pub fn validate(&self) -> Result<()> {
        if !(self.headway_min > 0.0)
            || !(self.duration_min > 0.0)
            || !(self.length_mi > 0.0)
            || !(self.operating_hr > 0.0)
        {
            return Err(Error::invalid(format!(
                "line {}: headway, duration, length, and operating hours must all be > 0",
                self.route_id
            )));
        }
        if self.stops_out.len() < 2 {
            return Err(Error::invalid(format!(
                "line {}: needs at least 2 outbound stops",
                self.route_id
            )));
        }
        Ok(())
    }
}

/// Link roles in the supernetwork. The numeric codes appear in file outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkType {
    Walk = 0,
    FrtRide = 1,
    FrtWait = 2,
    FrtTransfer = 3,
    MicroRide = 4,
    MicroWait = 5,
}

impl LinkType {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            LinkType::Walk => "walk",
            LinkType::FrtRide => "frt_ride",
            LinkType::FrtWait => "frt_wait",
            LinkType::FrtTransfer => "frt_transfer",
            LinkType::MicroRide => "micro_ride",
            LinkType::MicroWait => "micro_wait",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Walk,
    Micro,
    Frt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperNode {
    /// The street node this node shadows (FRT stop nodes shadow their stop).
    pub base: NodeId,
    pub layer: Layer,
    /// Line index for FRT stop nodes.
    pub route: Option<u32>,
    pub zone: u32,
    pub jobs: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperLink {
    pub from: u32,
    pub to: u32,
    pub kind: LinkType,
    pub time_s: f64,
    pub length_mi: f64,
    /// Line index for FRT ride/wait links.
    pub route: Option<u32>,
    /// The attribute the current time was scaled from: auto time for micro
    /// ride links, the unscaled wait for waiting links. Updates always
    /// rescale from here, never compound.
    pub base_time_s: f64,
}

/// Microtransit performance attributes broadcast into the micro layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroState {
    pub detour_ratio: f64,
    pub mean_wait_s: f64,
}

/// The layered multimodal graph plus everything needed to interpret it:
/// lines, operating periods, virtual stops, and the current microtransit
/// performance attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supernetwork {
    pub nodes: Vec<SuperNode>,
    pub links: Vec<SuperLink>,
    #[serde(skip)]
    out: Vec<Vec<u32>>,
    pub lines: Vec<FrtLine>,
    /// Microtransit operating periods, seconds after midnight, sorted.
    pub periods: Vec<(f64, f64)>,
    /// Micro-layer node indices eligible for pickup/drop-off, sorted.
    pub virtual_stops: Vec<u32>,
    pub detour_ratio: f64,
    /// Global broadcast wait (what MicroWait boarding links carry).
    pub mean_wait_s: f64,
    /// Per-period broadcast waits, aligned with `periods`.
    pub wait_by_period: Vec<f64>,
    /// Per-zone broadcast waits (zone, wait_s), sorted by zone.
    pub wait_by_zone: Vec<(u32, f64)>,
    pub wait_granularity: WaitGranularity,
    pub n_walk: u32,
    pub has_micro: bool,
    #[serde(skip)]
    walk_index: HashMap<NodeId, u32>,
}

impl Supernetwork {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, ix: u32) -> &SuperNode {
        &self.nodes[ix as usize]
    }

    pub fn link(&self, lx: u32) -> &SuperLink {
        &self.links[lx as usize]
    }

    pub fn out_links(&self, ix: u32) -> &[u32] {
        &self.out[ix as usize]
    }

    pub fn walk_ix(&self, id: NodeId) -> Option<u32> {
        self.walk_index.get(&id).copied()
    }

    /// The micro-layer shadow of a walk-layer node.
    pub fn micro_ix(&self, walk_ix: u32) -> u32 {
        debug_assert!(self.has_micro && walk_ix < self.n_walk);
        walk_ix + self.n_walk
    }

    pub fn period_of(&self, t_s: f64) -> Option<usize> {
        self.periods.iter().position(|&(s, e)| t_s >= s && t_s < e)
    }

    pub fn in_operating_period(&self, t_s: f64) -> bool {
        self.period_of(t_s).is_some()
    }

    /// Is this link the boarding direction of a waiting pair (walk -> stop)?
    pub fn is_boarding(&self, link: &SuperLink) -> bool {
        matches!(link.kind, LinkType::FrtWait | LinkType::MicroWait)
            && self.nodes[link.from as usize].layer == Layer::Walk
    }

    /// Travel time a traveler departing at `dp_time_s` experiences on a link.
    /// Only MicroWait boarding links are time-dependent: their wait resolves
    /// through the configured granularity (period of departure, or zone of the
    /// stop). Everything else reads the stored time.
    pub fn effective_time_s(&self, link: &SuperLink, dp_time_s: f64) -> f64 {
        if link.kind == LinkType::MicroWait && self.is_boarding(link) {
            match self.wait_granularity {
                WaitGranularity::Global => self.mean_wait_s,
                WaitGranularity::PerPeriod => match self.period_of(dp_time_s) {
                    Some(p) => self.wait_by_period[p],
                    None => self.mean_wait_s,
                },
                WaitGranularity::PerZone => {
                    let zone = self.nodes[link.to as usize].zone;
                    self.wait_by_zone
                        .binary_search_by_key(&zone, |&(z, _)| z)
                        .map(|i| self.wait_by_zone[i].1)
                        .unwrap_or(self.mean_wait_s)
                }
            }
        } else {
            link.time_s
        }
    }

    /// Rewrite the micro layer's times from fleet performance: ride links get
    /// `auto time × detour_ratio`, waiting links the broadcast waits. The
    /// graph structure is untouched, so link indices remain stable and the
    /// operation is idempotent for identical stats.
    pub fn set_micro_times(
        &mut self,
        detour_ratio: f64,
        mean_wait_s: f64,
        wait_by_period: Vec<f64>,
        wait_by_zone: Vec<(u32, f64)>,
    ) {
        debug_assert!(detour_ratio >= 1.0 && mean_wait_s >= 0.0);
        debug_assert_eq!(wait_by_period.len(), self.periods.len());
        self.detour_ratio = detour_ratio;
        self.mean_wait_s = mean_wait_s;
        self.wait_by_period = wait_by_period;
        self.wait_by_zone = wait_by_zone;
        let n_walk = self.n_walk;
        for l in &mut self.links {
            match l.kind {
                LinkType::MicroRide => l.time_s = l.base_time_s * detour_ratio,
                // boarding direction leaves the walk layer; alighting stays 0
                LinkType::MicroWait if l.from < n_walk => {
                    l.time_s = mean_wait_s;
                    l.base_time_s = mean_wait_s;
                }
                _ => {}
            }
        }
    }

    /// Pure-time shortest path times (seconds) from a walk-layer node over
    /// every link's stored time — no coefficients, no fares. The isochrone
    /// basis for accessibility.
    pub fn travel_times_from(&self, origin_walk_ix: u32) -> Vec<f64> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;

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

        let mut dist = vec![f64::INFINITY; self.n()];
        let mut heap = BinaryHeap::new();
        dist[origin_walk_ix as usize] = 0.0;
        heap.push(Reverse(Item(0.0, origin_walk_ix)));
        while let Some(Reverse(Item(d, u))) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            for &lx in self.out_links(u) {
                let l = &self.links[lx as usize];
                let nd = d + l.time_s;
                if nd < dist[l.to as usize] {
                    dist[l.to as usize] = nd;
                    heap.push(Reverse(Item(nd, l.to)));
                }
            }
        }
        dist
    }

    pub fn rebuild_indices(&mut self) {
        self.out = adjacency(self.nodes.len(), &self.links, |l| l.from);
        self.walk_index = self
            .nodes
            .iter()
            .take(self.n_walk as usize)
            .enumerate()
            .map(|(ix, n)| (n.base, ix as u32))
            .collect();
    }

    /// Stable serialized form for byte-level determinism checks.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("supernetwork serializes")
    }
}

/// Assemble the supernetwork for one scenario. `walk` and `auto` must share
/// topology (the micro layer copies the street graph at auto times scaled by
/// the detour ratio). Headway overrides, virtual-stop sampling (seeded by the
/// scenario master seed), waiting links, and transfer links all happen here.
pub fn build_supernetwork(
    walk: &Network,
    auto: &Network,
    lines: &[FrtLine],
    cfg: &ScenarioConfig,
    micro: MicroState,
) -> Result<Supernetwork> {
    if !(0.0..=1.0).contains(&cfg.virtual_stop_coverage) {
        return Err(Error::config(format!(
            "virtual_stop_coverage {} outside [0, 1]",
            cfg.virtual_stop_coverage
        )));
    }
    if !(micro.detour_ratio >= 1.0) || !(micro.mean_wait_s >= 0.0) {
        return Err(Error::invalid(format!(
            "micro state out of range: detour {}, wait {}",
            micro.detour_ratio, micro.mean_wait_s
        )));
    }
    if walk.n() == 0 {
        return Err(Error::invalid("street network has no nodes"));
    }
    if walk.n() != auto.n() || walk.links().len() != auto.links().len() {
        return Err(Error::invalid(
            "walk and auto networks must share the street topology",
        ));
    }

    let n = walk.n() as u32;
    let has_micro = cfg.transit_mode.has_micro();
    let has_frt = cfg.transit_mode.has_frt();

    let mut nodes: Vec<SuperNode> = Vec::new();
    let mut links: Vec<SuperLink> = Vec::new();

    for nd in walk.nodes() {
        nodes.push(SuperNode {
            base: nd.id,
            layer: Layer::Walk,
            route: None,
            zone: nd.zone,
            jobs: nd.jobs,
            x: nd.x,
            y: nd.y,
        });
    }
    for l in walk.links() {
        links.push(SuperLink {
            from: l.from,
            to: l.to,
            kind: LinkType::Walk,
            time_s: l.time_s,
            length_mi: l.length_mi,
            route: None,
            base_time_s: l.time_s,
        });
    }

    let mut virtual_stops = Vec::new();
    if has_micro {
        for nd in walk.nodes() {
            nodes.push(SuperNode {
                base: nd.id,
                layer: Layer::Micro,
                route: None,
                zone: nd.zone,
                jobs: nd.jobs,
                x: nd.x,
                y: nd.y,
            });
        }
        for l in auto.links() {
            links.push(SuperLink {
                from: n + l.from,
                to: n + l.to,
                kind: LinkType::MicroRide,
                time_s: l.time_s * micro.detour_ratio,
                length_mi: l.length_mi,
                route: None,
                base_time_s: l.time_s,
            });
        }

        // Deterministic pseudo-random sample of ceil(coverage * n) walk nodes,
        // partial Fisher-Yates under the scenario stream.
        let k = (cfg.virtual_stop_coverage * n as f64).ceil() as usize;
        let k = k.min(n as usize);
        let mut ixs: Vec<u32> = (0..n).collect();
        let mut rng = rng::stream(cfg.master_seed, "virtual-stops", 0);
        for i in 0..k {
            let j = i + rand::Rng::random_range(&mut rng, 0..(ixs.len() - i));
            ixs.swap(i, j);
        }
        let mut picked: Vec<u32> = ixs[..k].to_vec();
        picked.sort_unstable();
        for &w in &picked {
            let m = n + w;
            links.push(SuperLink {
                from: w,
                to: m,
                kind: LinkType::MicroWait,
                time_s: micro.mean_wait_s,
                length_mi: 0.0,
                route: None,
                base_time_s: micro.mean_wait_s,
            });
            links.push(SuperLink {
                from: m,
                to: w,
                kind: LinkType::MicroWait,
                time_s: 0.0,
                length_mi: 0.0,
                route: None,
                base_time_s: 0.0,
            });
            virtual_stops.push(m);
        }
    }

    let mut built_lines: Vec<FrtLine> = Vec::new();
    if has_frt {
        for line in lines {
            let mut line = line.clone();
            if let Some(h) = cfg.headway_min {
                line.headway_min = h;
            }
            if line.stops_back.is_empty() {
                line.stops_back = line.stops_out.iter().rev().copied().collect();
            }
            line.validate()?;
            built_lines.push(line);
        }

        for (line_ix, line) in built_lines.iter().enumerate() {
            // One stop node per (line, street node), shared across directions.
            let mut stop_node: BTreeMap<NodeId, u32> = BTreeMap::new();
            for &stop in line.stops_out.iter().chain(line.stops_back.iter()) {
                if stop_node.contains_key(&stop) {
                    continue;
                }
                let w = walk.index_of(stop).ok_or_else(|| {
                    Error::invalid(format!(
                        "line {}: stop {} is not a street node",
                        line.route_id, stop
                    ))
                })?;
                let base = walk.node(w);
                let ix = nodes.len() as u32;
                nodes.push(SuperNode {
                    base: base.id,
                    layer: Layer::Frt,
                    route: Some(line_ix as u32),
                    zone: base.zone,
                    jobs: base.jobs,
                    x: base.x,
                    y: base.y,
                });
                stop_node.insert(stop, ix);
                let wait_s = line.headway_min * 60.0 / 2.0;
                links.push(SuperLink {
                    from: w,
                    to: ix,
                    kind: LinkType::FrtWait,
                    time_s: wait_s,
                    length_mi: 0.0,
                    route: Some(line_ix as u32),
                    base_time_s: wait_s,
                });
                links.push(SuperLink {
                    from: ix,
                    to: w,
                    kind: LinkType::FrtWait,
                    time_s: 0.0,
                    length_mi: 0.0,
                    route: Some(line_ix as u32),
                    base_time_s: 0.0,
                });
            }

            for stops in [&line.stops_out, &line.stops_back] {
                if stops.len() < 2 {
                    continue;
                }
                // Segment shares proportional to straight-line stop spacing;
                // even split when coordinates coincide (or total length 0).
                let coords: Vec<(f64, f64)> = stops
                    .iter()
                    .map(|s| {
                        let nd = walk.node(walk.index_of(*s).unwrap());
                        (nd.x, nd.y)
                    })
                    .collect();
                let seg_d: Vec<f64> = coords
                    .windows(2)
                    .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
                    .collect();
                let total: f64 = seg_d.iter().sum();
                let nseg = seg_d.len() as f64;
                for (si, pair) in stops.windows(2).enumerate() {
                    let share = if total > 0.0 {
                        seg_d[si] / total
                    } else {
                        1.0 / nseg
                    };
                    let a = stop_node[&pair[0]];
                    let b = stop_node[&pair[1]];
                    links.push(SuperLink {
                        from: a,
                        to: b,
                        kind: LinkType::FrtRide,
                        time_s: line.duration_min * 60.0 * share,
                        length_mi: line.length_mi * share,
                        route: Some(line_ix as u32),
                        base_time_s: line.duration_min * 60.0 * share,
                    });
                }
            }
        }

        // Transfer links between co-located stops of distinct lines.
        let frt_start = if has_micro { 2 * n } else { n };
        let frt_ixs: Vec<u32> = (frt_start..nodes.len() as u32).collect();
        for (a_pos, &a) in frt_ixs.iter().enumerate() {
            for &b in &frt_ixs[a_pos + 1..] {
                let (na, nb) = (&nodes[a as usize], &nodes[b as usize]);
                if na.route == nb.route {
                    continue;
                }
                let d = ((na.x - nb.x).powi(2) + (na.y - nb.y).powi(2)).sqrt();
                if d <= cfg.params.transfer_radius {
                    for (f, t) in [(a, b), (b, a)] {
                        links.push(SuperLink {
                            from: f,
                            to: t,
                            kind: LinkType::FrtTransfer,
                            time_s: cfg.params.transfer_penalty_s,
                            length_mi: 0.0,
                            route: None,
                            base_time_s: cfg.params.transfer_penalty_s,
                        });
                    }
                }
            }
        }
    }

    let periods = cfg.period_bounds();
    let wait_by_period = vec![micro.mean_wait_s; periods.len()];
    let mut net = Supernetwork {
        nodes,
        links,
        out: Vec::new(),
        lines: built_lines,
        periods,
        virtual_stops,
        detour_ratio: micro.detour_ratio,
        mean_wait_s: micro.mean_wait_s,
        wait_by_period,
        wait_by_zone: Vec::new(),
        wait_granularity: cfg.params.wait_granularity,
        n_walk: n,
        has_micro,
        walk_index: HashMap::new(),
    };
    net.rebuild_indices();
    Ok(net)
}

/// Restrict microtransit to intra-zone trips: relabel every node's zone from
/// the map and drop MicroRide links whose endpoints lie in different zones.
/// Waiting links and the other layers are untouched.
pub fn apply_zonal_partition(
    net: &Supernetwork,
    zone_map: &BTreeMap<NodeId, u32>,
) -> Result<Supernetwork> {
    let mut out = net.clone();
    for nd in &mut out.nodes {
        nd.zone = *zone_map.get(&nd.base).ok_or_else(|| {
            Error::invalid(format!("node {} missing from zone map", nd.base))
        })?;
    }
    if out.has_micro {
        let nodes = &out.nodes;
        out.links.retain(|l| {
            l.kind != LinkType::MicroRide
                || nodes[l.from as usize].zone == nodes[l.to as usize].zone
        });
    }
    out.rebuild_indices();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{PeriodId, TransitMode};

    /// 3x3 grid street network, ids 0..9 row-major, 0.25-mi spacing, both
    /// directions listed, 72 s auto per segment.
    fn grid3() -> (Vec<Node>, Vec<StreetLink>) {
        let mut nodes = Vec::new();
        let mut links = Vec::new();
        for r in 0..3u32 {
            for c in 0..3u32 {
                nodes.push(Node {
                    id: r * 3 + c,
                    x: c as f64 * 400.0,
                    y: r as f64 * 400.0,
                    jobs: 10,
                    zone: 0,
                });
            }
        }
        let mut push = |a: u32, b: u32| {
            links.push(StreetLink {
                from: a,
                to: b,
                length_mi: 0.25,
                auto_time_s: 72.0,
            });
            links.push(StreetLink {
                from: b,
                to: a,
                length_mi: 0.25,
                auto_time_s: 72.0,
            });
        };
        for r in 0..3u32 {
            for c in 0..3u32 {
                let id = r * 3 + c;
                if c < 2 {
                    push(id, id + 1);
                }
                if r < 2 {
                    push(id, id + 3);
                }
            }
        }
        (nodes, links)
    }

    fn nets() -> (Network, Network) {
        let (nodes, links) = grid3();
        let auto =
            Network::from_street(nodes.clone(), &links, TimeBasis::Auto, CoordUnits::Meters)
                .unwrap();
        let walk = Network::from_street(
            nodes,
            &links,
            TimeBasis::Walk { speed_mph: 2.8 },
            CoordUnits::Meters,
        )
        .unwrap();
        (auto, walk)
    }

    fn two_lines() -> Vec<FrtLine> {
        vec![
            FrtLine {
                route_id: "A".into(),
                headway_min: 15.0,
                duration_min: 6.0,
                length_mi: 0.5,
                operating_hr: 19.0,
                stops_out: vec![3, 4, 5], // middle row
                stops_back: vec![],
            },
            FrtLine {
                route_id: "B".into(),
                headway_min: 15.0,
                duration_min: 6.0,
                length_mi: 0.5,
                operating_hr: 19.0,
                stops_out: vec![1, 4, 7], // middle column
                stops_back: vec![],
            },
        ]
    }

    fn cfg_both() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new("t", TransitMode::MicroPlusFixed);
        cfg.headway_min = Some(15.0);
        cfg.virtual_stop_coverage = 1.0;
        cfg.fleet_size = 2;
        cfg.operating_periods = vec![PeriodId::AM, PeriodId::PM];
        cfg
    }

    fn cold() -> MicroState {
        MicroState {
            detour_ratio: 1.2,
            mean_wait_s: 300.0,
        }
    }

    #[test]
    fn frt_wait_boarding_is_half_headway() {
        let (auto, walk) = nets();
        let net = build_supernetwork(&walk, &auto, &two_lines(), &cfg_both(), cold()).unwrap();
        let waits: Vec<&SuperLink> = net
            .links
            .iter()
            .filter(|l| l.kind == LinkType::FrtWait && net.is_boarding(l))
            .collect();
        assert!(!waits.is_empty());
        // 15-min headway -> 450 s boarding wait
        assert!(waits.iter().all(|l| l.time_s == 450.0 && l.length_mi == 0.0));
    }

    #[test]
    fn full_coverage_pairs_every_walk_node() {
        let (auto, walk) = nets();
        let net = build_supernetwork(&walk, &auto, &[], &cfg_full_micro(), cold()).unwrap();
        assert_eq!(net.virtual_stops.len(), walk.n());
        // every boarding link has a zero-time alighting partner
        for &m in &net.virtual_stops {
            let w = m - net.n_walk;
            let board = net
                .links
                .iter()
                .find(|l| l.kind == LinkType::MicroWait && l.from == w && l.to == m)
                .unwrap();
            let alight = net
                .links
                .iter()
                .find(|l| l.kind == LinkType::MicroWait && l.from == m && l.to == w)
                .unwrap();
            assert_eq!(board.time_s, 300.0);
            assert_eq!(alight.time_s, 0.0);
        }
    }

    fn cfg_full_micro() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new("m", TransitMode::MicroOnly);
        cfg.virtual_stop_coverage = 1.0;
        cfg.fleet_size = 2;
        cfg.operating_periods = vec![PeriodId::AM];
        cfg
    }

    #[test]
    fn identity_micro_state_copies_auto_times() {
        let (auto, walk) = nets();
        let net = build_supernetwork(
            &walk,
            &auto,
            &[],
            &cfg_full_micro(),
            MicroState {
                detour_ratio: 1.0,
                mean_wait_s: 0.0,
            },
        )
        .unwrap();
        for l in net.links.iter().filter(|l| l.kind == LinkType::MicroRide) {
            assert_eq!(l.time_s, 72.0);
            assert_eq!(l.time_s, l.base_time_s);
        }
        for l in net.links.iter().filter(|l| l.kind == LinkType::MicroWait) {
            assert_eq!(l.time_s, 0.0);
        }
    }

    #[test]
    fn layers_never_connect_frt_to_micro_directly() {
        let (auto, walk) = nets();
        let net = build_supernetwork(&walk, &auto, &two_lines(), &cfg_both(), cold()).unwrap();
        for l in &net.links {
            let (a, b) = (net.node(l.from).layer, net.node(l.to).layer);
            assert!(
                !(a == Layer::Frt && b == Layer::Micro) && !(a == Layer::Micro && b == Layer::Frt),
                "{a:?}->{b:?} via {:?}",
                l.kind
            );
        }
    }

    #[test]
    fn colocated_stops_of_distinct_lines_get_transfers() {
        let (auto, walk) = nets();
        let net = build_supernetwork(&walk, &auto, &two_lines(), &cfg_both(), cold()).unwrap();
        let transfers: Vec<&SuperLink> = net
            .links
            .iter()
            .filter(|l| l.kind == LinkType::FrtTransfer)
            .collect();
        // lines A and B share street node 4 only -> one pair of links
        assert_eq!(transfers.len(), 2);
        for t in transfers {
            assert_eq!(t.time_s, 60.0);
            assert_eq!(net.node(t.from).base, 4);
            assert_eq!(net.node(t.to).base, 4);
            assert_ne!(net.node(t.from).route, net.node(t.to).route);
        }
    }

    #[test]
    fn quadrant_partition_removes_exactly_boundary_micro_links() {
        let (auto, walk) = nets();
        let net = build_supernetwork(&walk, &auto, &[], &cfg_full_micro(), cold()).unwrap();
        // quadrants by node position: zone = (r>=2)*2 + (c>=2)
        let zone_of = |id: NodeId| ((id / 3 >= 2) as u32) * 2 + (id % 3 >= 2) as u32;
        let zone_map: BTreeMap<NodeId, u32> = (0..9).map(|id| (id, zone_of(id))).collect();

        // independent enumeration of boundary-crossing street edges (directed)
        let expected_removed = auto
            .links()
            .iter()
            .filter(|l| zone_of(auto.node(l.from).id) != zone_of(auto.node(l.to).id))
            .count();
        assert!(expected_removed > 0);

        let cut = apply_zonal_partition(&net, &zone_map).unwrap();
        let before = net
            .links
            .iter()
            .filter(|l| l.kind == LinkType::MicroRide)
            .count();
        let after = cut
            .links
            .iter()
            .filter(|l| l.kind == LinkType::MicroRide)
            .count();
        assert_eq!(before - after, expected_removed);
        for l in cut.links.iter().filter(|l| l.kind == LinkType::MicroRide) {
            assert_eq!(cut.node(l.from).zone, cut.node(l.to).zone);
        }
        // micro-layer reachability stays within zones
        for &m in &cut.virtual_stops {
            let mut seen = vec![false; cut.n()];
            let mut stack = vec![m];
            seen[m as usize] = true;
            while let Some(u) = stack.pop() {
                for &lx in cut.out_links(u) {
                    let l = cut.link(lx);
                    if l.kind == LinkType::MicroRide && !seen[l.to as usize] {
                        seen[l.to as usize] = true;
                        stack.push(l.to);
                    }
                }
            }
            for (ix, s) in seen.iter().enumerate() {
                if *s {
                    assert_eq!(cut.node(ix as u32).zone, cut.node(m).zone);
                }
            }
        }
    }

    #[test]
    fn partition_without_micro_layer_changes_no_links() {
        let (auto, walk) = nets();
        let mut cfg = ScenarioConfig::new("f", TransitMode::FixedOnly);
        cfg.headway_min = Some(15.0);
        let net = build_supernetwork(&walk, &auto, &two_lines(), &cfg, cold()).unwrap();
        let zone_map: BTreeMap<NodeId, u32> = (0..9).map(|id| (id, id % 2)).collect();
        let cut = apply_zonal_partition(&net, &zone_map).unwrap();
        assert_eq!(net.links, cut.links);
    }

    #[test]
    fn missing_zone_entry_is_rejected() {
        let (auto, walk) = nets();
        let net = build_supernetwork(&walk, &auto, &[], &cfg_full_micro(), cold()).unwrap();
        let zone_map: BTreeMap<NodeId, u32> = (0..8).map(|id| (id, 0)).collect(); // node 8 missing
        assert!(apply_zonal_partition(&net, &zone_map).is_err());
    }

    #[test]
    fn rebuild_with_same_seed_is_byte_identical() {
        let (auto, walk) = nets();
        let a = build_supernetwork(&walk, &auto, &two_lines(), &cfg_both(), cold()).unwrap();
        let b = build_supernetwork(&walk, &auto, &two_lines(), &cfg_both(), cold()).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        // different seed moves the virtual-stop sample at partial coverage
        let mut cfg = cfg_both();
        cfg.virtual_stop_coverage = 0.5;
        let c = build_supernetwork(&walk, &auto, &two_lines(), &cfg, cold()).unwrap();
        cfg.master_seed = 43;
        let d = build_supernetwork(&walk, &auto, &two_lines(), &cfg, cold()).unwrap();
        assert_eq!(c.virtual_stops.len(), d.virtual_stops.len());
        assert_ne!(c.virtual_stops, d.virtual_stops);
    }

    #[test]
    fn update_rescales_from_base_times_idempotently() {
        let (auto, walk) = nets();
        let mut net = build_supernetwork(&walk, &auto, &[], &cfg_full_micro(), cold()).unwrap();
        net.set_micro_times(1.3, 480.0, vec![480.0], vec![]);
        for l in net.links.iter().filter(|l| l.kind == LinkType::MicroRide) {
            assert!((l.time_s - 72.0 * 1.3).abs() < 1e-12);
        }
        let once = net.fingerprint();
        net.set_micro_times(1.3, 480.0, vec![480.0], vec![]);
        assert_eq!(once, net.fingerprint());
        // boarding waits read 480, alighting stay 0
        for l in net.links.iter().filter(|l| l.kind == LinkType::MicroWait) {
            if net.is_boarding(l) {
                assert_eq!(l.time_s, 480.0);
            } else {
                assert_eq!(l.time_s, 0.0);
            }
        }
    }
}

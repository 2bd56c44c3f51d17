//! Least-generalized-cost pathfinding over the supernetwork, one traveler at
//! a time, plus decomposition of the winning path into the attribute vector
//! the mode-choice model consumes.
//!
//! The transit search runs a label-setting shortest path over an expanded
//! state `(node, boarded)`: the flag records whether the path has already
//! paid the flat fixed-route fare, so a first boarding prices differently
//! from a re-boarding (which counts as a transfer instead). All link weights
//! are non-negative — time weights are `beta × minutes`, money weights
//! `beta × dollars` — so settled labels are final. Ties break toward the
//! lowest state index, making results reproducible.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::demand::TravelerProfile;
use crate::net::{LinkType, Network, NodeId, SuperLink, Supernetwork};
use crate::scenario::Params;

/// One merged stretch of a path: consecutive links of the same kind on the
/// same route. Zero-time alighting links are folded away; every surviving
/// `MicroWait`/`FrtWait` leg is a boarding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leg {
    pub kind: LinkType,
    /// Street node where the leg starts / ends.
    pub from_base: NodeId,
    pub to_base: NodeId,
    pub time_s: f64,
    pub length_mi: f64,
    /// Line index for fixed-route legs.
    pub route: Option<u32>,
    /// Seconds into the trip when this leg begins.
    pub start_s: f64,
    /// Supernetwork link ids merged into this leg, in traversal order.
    pub link_ids: Vec<u32>,
}

/// A transit path decomposed into the fields of the transit utility: times in
/// minutes, fare in dollars, plus the leg list and the minimized objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathAttrs {
    pub walk_min: f64,
    pub micro_wait_min: f64,
    pub frt_wait_min: f64,
    pub micro_ivt_min: f64,
    pub frt_ivt_min: f64,
    pub fare_usd: f64,
    pub transfers: u32,
    pub micro_mi: f64,
    /// Total elapsed time including waits, seconds.
    pub total_time_s: f64,
    /// The generalized cost the search minimized.
    pub gen_cost: f64,
    pub legs: Vec<Leg>,
}

impl PathAttrs {
    fn zero() -> Self {
        PathAttrs {
            walk_min: 0.0,
            micro_wait_min: 0.0,
            frt_wait_min: 0.0,
            micro_ivt_min: 0.0,
            frt_ivt_min: 0.0,
            fare_usd: 0.0,
            transfers: 0,
            micro_mi: 0.0,
            total_time_s: 0.0,
            gen_cost: 0.0,
            legs: Vec::new(),
        }
    }

    /// Does the path ride a fixed route at all?
    pub fn uses_frt(&self) -> bool {
        self.legs.iter().any(|l| l.kind == LinkType::FrtRide)
    }

    /// Does the path ride microtransit at all?
    pub fn uses_micro(&self) -> bool {
        self.legs.iter().any(|l| l.kind == LinkType::MicroRide)
    }
}

/// The auto alternative, priced over the street network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutoAttrs {
    pub ivt_min: f64,
    pub gas_usd: f64,
    pub dist_mi: f64,
    pub time_s: f64,
    pub gen_cost: f64,
}

#[derive(PartialEq)]
struct HeapItem(f64, u32);
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Generalized cost of traversing `link` in state `boarded`, plus the updated
/// flag. The first fixed-route boarding charges the flat fare; later
/// boardings and transfer links charge the transfer weight instead.
fn link_cost(
    net: &Supernetwork,
    link: &SuperLink,
    boarded: bool,
    profile: &TravelerProfile,
    params: &Params,
) -> (f64, bool) {
    let b = &profile.betas;
    let minutes = |t_s: f64| t_s / 60.0;
    match link.kind {
        LinkType::Walk => (b.t_wk * minutes(link.time_s), boarded),
        LinkType::FrtRide => (b.f_ivt * minutes(link.time_s), boarded),
        LinkType::FrtWait => {
            if net.is_boarding(link) {
                let wait = b.f_wt * minutes(link.time_s);
                if boarded {
                    (wait + b.f_trfr, true)
                } else {
                    (wait + b.t_fr * params.frt_fare_usd, true)
                }
            } else {
                (0.0, boarded)
            }
        }
        LinkType::FrtTransfer => (b.f_trfr, boarded),
        LinkType::MicroRide => (
            b.m_ivt * minutes(link.time_s) + b.t_fr * params.micro_fare_per_mi * link.length_mi,
            boarded,
        ),
        LinkType::MicroWait => {
            if net.is_boarding(link) {
                let wait_s = net.effective_time_s(link, profile.dp_time_s);
                (b.m_wt * minutes(wait_s), boarded)
            } else {
                (0.0, boarded)
            }
        }
    }
}

/// Least-generalized-cost path from the traveler's origin to destination
/// through the layered network. Microtransit links are open only when the
/// scenario fields microtransit and the departure falls inside an operating
/// period. Returns `None` when no path exists.
pub fn least_cost_transit_path(
    net: &Supernetwork,
    profile: &TravelerProfile,
    params: &Params,
) -> Option<PathAttrs> {
    let origin = net.walk_ix(profile.origin)?;
    let dest = net.walk_ix(profile.dest)?;
    if origin == dest {
        return Some(PathAttrs::zero());
    }
    let micro_open = net.has_micro && net.in_operating_period(profile.dp_time_s);

    // state = node * 2 + boarded; ties settle the lowest state first
    let n_states = net.n() * 2;
    let mut dist = vec![f64::INFINITY; n_states];
    let mut parent: Vec<Option<(u32, u32)>> = vec![None; n_states];
    let mut heap = BinaryHeap::new();
    let start = origin * 2;
    dist[start as usize] = 0.0;
    heap.push(Reverse(HeapItem(0.0, start)));

    let mut goal: Option<u32> = None;
    while let Some(Reverse(HeapItem(d, state))) = heap.pop() {
        if d > dist[state as usize] {
            continue;
        }
        let node = state / 2;
        if node == dest {
            goal = Some(state);
            break;
        }
        let boarded = state % 2 == 1;
        for &lx in net.out_links(node) {
            let link = net.link(lx);
            if !micro_open
                && matches!(link.kind, LinkType::MicroRide | LinkType::MicroWait)
            {
                continue;
            }
            let (cost, next_boarded) = link_cost(net, link, boarded, profile, params);
            let next = link.to * 2 + next_boarded as u32;
            let nd = d + cost;
            if nd < dist[next as usize] {
                dist[next as usize] = nd;
                parent[next as usize] = Some((state, lx));
                heap.push(Reverse(HeapItem(nd, next)));
            }
        }
    }

    let goal = goal?;
    let mut link_ids = Vec::new();
    let mut cur = goal;
    while let Some((prev, lx)) = parent[cur as usize] {
        link_ids.push(lx);
        cur = prev;
    }
    link_ids.reverse();
    Some(decompose(net, &link_ids, dist[goal as usize], profile, params))
}

/// Sum a link sequence into utility attributes and merged legs.
fn decompose(
    net: &Supernetwork,
    link_ids: &[u32],
    gen_cost: f64,
    profile: &TravelerProfile,
    params: &Params,
) -> PathAttrs {
    let mut attrs = PathAttrs::zero();
    attrs.gen_cost = gen_cost;
    let mut boarded = false;
    let mut clock_s = 0.0;

    for &lx in link_ids {
        let link = net.link(lx);
        let dt = if link.kind == LinkType::MicroWait && net.is_boarding(link) {
            net.effective_time_s(link, profile.dp_time_s)
        } else {
            link.time_s
        };
        let minutes = dt / 60.0;
        match link.kind {
            LinkType::Walk => attrs.walk_min += minutes,
            LinkType::FrtRide => attrs.frt_ivt_min += minutes,
            LinkType::FrtWait if net.is_boarding(link) => {
                attrs.frt_wait_min += minutes;
                if boarded {
                    attrs.transfers += 1;
                } else {
                    attrs.fare_usd += params.frt_fare_usd;
                    boarded = true;
                }
            }
            LinkType::FrtWait => {}
            LinkType::FrtTransfer => attrs.transfers += 1,
            LinkType::MicroRide => {
                attrs.micro_ivt_min += minutes;
                attrs.micro_mi += link.length_mi;
                attrs.fare_usd += params.micro_fare_per_mi * link.length_mi;
            }
            LinkType::MicroWait if net.is_boarding(link) => attrs.micro_wait_min += minutes,
            LinkType::MicroWait => {}
        }

        // fold zero-time alighting links away; merge same-kind, same-route runs
        let is_alight = matches!(link.kind, LinkType::FrtWait | LinkType::MicroWait)
            && !net.is_boarding(link);
        if !is_alight {
            let from_base = net.node(link.from).base;
            let to_base = net.node(link.to).base;
            match attrs.legs.last_mut() {
                Some(leg) if leg.kind == link.kind && leg.route == link.route => {
                    leg.to_base = to_base;
                    leg.time_s += dt;
                    leg.length_mi += link.length_mi;
                    leg.link_ids.push(lx);
                }
                _ => attrs.legs.push(Leg {
                    kind: link.kind,
                    from_base,
                    to_base,
                    time_s: dt,
                    length_mi: link.length_mi,
                    route: link.route,
                    start_s: clock_s,
                    link_ids: vec![lx],
                }),
            }
        }
        clock_s += dt;
    }
    attrs.total_time_s = clock_s;
    attrs
}

/// Cheapest auto trip: minimizes `c_ivt × minutes + c_gas × fuel cost` over
/// street links, fuel priced per mile. `None` when the street graph
/// disconnects the pair.
pub fn least_cost_auto_path(
    auto: &Network,
    profile: &TravelerProfile,
    params: &Params,
) -> Option<AutoAttrs> {
    let origin = auto.index_of(profile.origin)?;
    let dest = auto.index_of(profile.dest)?;
    let b = &profile.betas;
    if origin == dest {
        return Some(AutoAttrs {
            ivt_min: 0.0,
            gas_usd: 0.0,
            dist_mi: 0.0,
            time_s: 0.0,
            gen_cost: 0.0,
        });
    }

    let mut dist = vec![f64::INFINITY; auto.n()];
    let mut parent: Vec<Option<u32>> = vec![None; auto.n()];
    let mut heap = BinaryHeap::new();
    dist[origin as usize] = 0.0;
    heap.push(Reverse(HeapItem(0.0, origin)));
    while let Some(Reverse(HeapItem(d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        if u == dest {
            break;
        }
        for &lx in auto.out_links(u) {
            let l = auto.link(lx);
            let cost = b.c_ivt * l.time_s / 60.0 + b.c_gas * params.auto_fuel_per_mi * l.length_mi;
            let nd = d + cost;
            if nd < dist[l.to as usize] {
                dist[l.to as usize] = nd;
                parent[l.to as usize] = Some(lx);
                heap.push(Reverse(HeapItem(nd, l.to)));
            }
        }
    }
    if dist[dest as usize].is_infinite() {
        return None;
    }

    let mut time_s = 0.0;
    let mut dist_mi = 0.0;
    let mut cur = dest;
    while cur != origin {
        let lx = parent[cur as usize].expect("finite label has a parent");
        let l = auto.link(lx);
        time_s += l.time_s;
        dist_mi += l.length_mi;
        cur = l.from;
    }
    Some(AutoAttrs {
        ivt_min: time_s / 60.0,
        gas_usd: params.auto_fuel_per_mi * dist_mi,
        dist_mi,
        time_s,
        gen_cost: dist[dest as usize],
    })
}

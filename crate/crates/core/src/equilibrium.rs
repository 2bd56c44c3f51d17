//! The demand/performance fixed-point loop.
//!
//! Each iteration routes every traveler over the current supernetwork,
//! converts generalized costs into transit probabilities, lets travelers
//! re-draw modes only when their probability moved past the perception
//! threshold, simulates the microtransit fleet against the resulting
//! requests, and writes the measured waits and detours back into the
//! supernetwork. The loop stops when the probability vector is stationary:
//!
//! ```text
//! gap(n) = Σ_i [ (pT_i(n) − pT_i(n−1))² / pT_i(n−1)
//!              + (pA_i(n) − pA_i(n−1))² / pA_i(n−1) ]   ≤ epsilon
//! ```
//!
//! Auto times never depend on the loop, so auto paths are computed once up
//! front. Transit routing runs in parallel but collects in traveler order,
//! and every traveler draws from their own seeded stream, so results are
//! identical at any thread count.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::choice::{
    assign_mode, auto_utility, choice_probability, transit_utility, Mode, ModeChoiceState,
};
use crate::demand::TravelerProfile;
use crate::error::{Error, Result};
use crate::fleet::{simulate_fleet, FleetOutcome, FleetParams, RideRequest};
use crate::net::{LinkType, MicroState, Network, NodeId, Supernetwork};
use crate::router::{least_cost_auto_path, least_cost_transit_path, AutoAttrs, PathAttrs};
use crate::rng;
use crate::scenario::{Params, ScenarioConfig};

/// Everything one equilibrium run needs. The supernetwork is owned because
/// the loop rewrites its micro layer; it comes back in the result.
pub struct EquilibriumInputs<'a> {
    pub supernet: Supernetwork,
    /// Street network at auto travel times (auto routing and fleet driving).
    pub auto_net: &'a Network,
    pub travelers: &'a [TravelerProfile],
    pub cfg: &'a ScenarioConfig,
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// None on the first iteration (no previous probabilities to compare).
    pub gap: Option<f64>,
    pub mean_prob_transit: f64,
    pub transit_choosers: u32,
    pub auto_choosers: u32,
    /// Mode draws actually taken this iteration (threshold crossings).
    pub draws: u64,
    pub requests: u32,
    pub served: u32,
    pub rejected: u32,
    /// Broadcast micro state applied to the network after this iteration.
    pub applied_wait_s: f64,
    pub applied_detour_ratio: f64,
    pub fleet_vmt_mi: f64,
}

/// A traveler's state at the end of the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TravelerOutcome {
    pub rq_id: u64,
    pub dp_time_s: f64,
    pub prob_transit: f64,
    pub chosen: Mode,
    pub transit: Option<PathAttrs>,
    pub auto: Option<AutoAttrs>,
}

pub struct EquilibriumResult {
    pub converged: bool,
    pub final_gap: Option<f64>,
    pub iterations: Vec<IterationRecord>,
    pub outcomes: Vec<TravelerOutcome>,
    /// Fleet simulation of the last iteration (its event log is the run's).
    pub fleet: FleetOutcome,
    /// Supernetwork after the final performance update.
    pub supernet: Supernetwork,
}

/// Probability-vector stationarity measure; both mode terms contribute.
/// Previous probabilities must lie strictly inside (0, 1) — callers floor
/// them before storing, so a violation here is a logic error upstream.
pub fn convergence_gap(prev: &[f64], curr: &[f64]) -> Result<f64> {
    if prev.len() != curr.len() {
        return Err(Error::invalid(format!(
            "probability vectors differ in length: {} vs {}",
            prev.len(),
            curr.len()
        )));
    }
    let mut gap = 0.0;
    for (i, (&p0, &p1)) in prev.iter().zip(curr).enumerate() {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::invalid(format!(
                "traveler #{i}: previous transit probability {p0} outside (0, 1)"
            )));
        }
        let dt = p1 - p0;
        let da = (1.0 - p1) - (1.0 - p0);
        gap += dt * dt / p0 + da * da / (1.0 - p0);
    }
    Ok(gap)
}

/// Hold-back controller for the performance update. While the measured wait
/// keeps moving one way the configured base damping applies unchanged, so a
/// cold start walks straight to the measured state. Every direction reversal
/// shrinks the remaining step instead: a reversal means demand and supply are
/// flip-flopping — a handful of travelers toggling their least-cost path
/// moves the pooled mean wait enough to toggle them back — and cutting the
/// applied step squeezes that cycle out geometrically where a fixed step
/// would ring forever.
#[derive(Debug, Clone)]
pub struct UpdateDamping {
    lambda: f64,
    prev_target: Option<f64>,
    prev_dir: i8,
}

/// Fraction of the step kept after a reversal. Softer cuts leave the largest
/// tested scenarios ringing past the iteration budget; harder ones slow the
/// scenarios that merely overshoot once on the way in.
const REVERSAL_SHRINK: f64 = 0.4;

impl UpdateDamping {
    pub fn new(base: f64) -> Self {
        UpdateDamping {
            lambda: base,
            prev_target: None,
            prev_dir: 0,
        }
    }

    /// Hold-back to use for an update whose broadcast wait target is `target`.
    fn observe(&mut self, target: f64) -> f64 {
        if let Some(prev) = self.prev_target {
            let dir: i8 = if target > prev {
                1
            } else if target < prev {
                -1
            } else {
                0
            };
            if dir != 0 {
                if self.prev_dir != 0 && dir != self.prev_dir {
                    self.lambda = 1.0 - REVERSAL_SHRINK * (1.0 - self.lambda);
                }
                self.prev_dir = dir;
            }
        }
        self.prev_target = Some(target);
        self.lambda
    }
}

/// Write measured fleet performance into the micro layer: ride times scale
/// by the mean detour ratio, waiting times become the (rejection-inflated)
/// mean waits at the configured granularity, both blended against the current
/// values at the hold-back `damping` dictates. Returns the broadcast state
/// actually applied.
pub fn update_supernetwork_from_fleet(
    net: &mut Supernetwork,
    outcome: &FleetOutcome,
    params: &Params,
    damping: &mut UpdateDamping,
) -> Result<MicroState> {
    if !net.has_micro {
        return Ok(MicroState {
            detour_ratio: net.detour_ratio,
            mean_wait_s: net.mean_wait_s,
        });
    }
    let st = &outcome.stats;
    let total = st.served + st.rejected;
    // unserved demand re-enters as longer perceived waits, capped so one bad
    // iteration cannot blow the loop apart
    let r = if total > 0 {
        st.rejected as f64 / total as f64
    } else {
        0.0
    };
    let inflation = if r < 1.0 {
        (1.0 / (1.0 - r)).min(params.rejection_inflation_cap)
    } else {
        params.rejection_inflation_cap
    };

    let wait_target = st.mean_wait_s * inflation;
    let lambda = damping.observe(wait_target);
    let blend = |old: f64, target: f64| lambda * old + (1.0 - lambda) * target;

    let detour = blend(net.detour_ratio, st.mean_detour_ratio);
    let wait = blend(net.mean_wait_s, wait_target);

    let by_period: Vec<f64> = st
        .by_period
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let target = if p.served > 0 {
                p.mean_wait_s * inflation
            } else {
                wait_target
            };
            let old = net
                .wait_by_period
                .get(k)
                .copied()
                .unwrap_or(net.mean_wait_s);
            blend(old, target)
        })
        .collect();

    // zone means from served pickups; zones with no service fall back to the
    // broadcast mean at lookup time by simply not appearing here
    let mut zone_acc: std::collections::BTreeMap<u32, (f64, u32)> = Default::default();
    for rec in &outcome.records {
        if rec.status != crate::fleet::ServiceStatus::Served {
            continue;
        }
        if let Some(wx) = net.walk_ix(rec.pickup) {
            let zone = net.node(wx).zone;
            let e = zone_acc.entry(zone).or_insert((0.0, 0));
            e.0 += rec.wait_min * 60.0;
            e.1 += 1;
        }
    }
    let old_by_zone = net.wait_by_zone.clone();
    let by_zone: Vec<(u32, f64)> = zone_acc
        .into_iter()
        .map(|(zone, (sum, n))| {
            let target = sum / n as f64 * inflation;
            let old = old_by_zone
                .binary_search_by_key(&zone, |&(z, _)| z)
                .map(|ix| old_by_zone[ix].1)
                .unwrap_or(net.mean_wait_s);
            (zone, blend(old, target))
        })
        .collect();

    net.set_micro_times(detour, wait, by_period, by_zone);
    Ok(MicroState {
        detour_ratio: detour,
        mean_wait_s: wait,
    })
}

/// Pull fleet requests out of the paths of transit choosers: one request per
/// contiguous micro ride, timed at the moment the traveler starts waiting.
/// Request ids pack the traveler id with the ride's ordinal so multi-leg
/// trips stay distinguishable in fleet logs.
fn extract_requests(
    travelers: &[TravelerProfile],
    paths: &[Option<PathAttrs>],
    states: &[ModeChoiceState],
) -> Vec<RideRequest> {
    let mut out = Vec::new();
    for (i, t) in travelers.iter().enumerate() {
        if states[i].chosen != Some(Mode::Transit) {
            continue;
        }
        let Some(path) = &paths[i] else { continue };
        let mut ordinal = 0u64;
        for (k, leg) in path.legs.iter().enumerate() {
            if leg.kind != LinkType::MicroRide {
                continue;
            }
            // the boarding wait directly precedes the ride; walk legs beyond
            // it are access time
            let wait_leg = k
                .checked_sub(1)
                .map(|prev| &path.legs[prev])
                .filter(|l| l.kind == LinkType::MicroWait);
            let request_time_s = t.dp_time_s + wait_leg.map_or(leg.start_s, |w| w.start_s);
            let walk_access_min = k
                .checked_sub(2)
                .map(|wx| &path.legs[wx])
                .filter(|l| l.kind == LinkType::Walk)
                .map_or(0.0, |l| l.time_s / 60.0);
            let walk_egress_min = path
                .legs
                .get(k + 1)
                .filter(|l| l.kind == LinkType::Walk)
                .map_or(0.0, |l| l.time_s / 60.0);
            out.push(RideRequest {
                rq_id: t.rq_id * 16 + ordinal,
                request_time_s,
                pickup: leg.from_base,
                dropoff: leg.to_base,
                walk_access_min,
                walk_egress_min,
            });
            ordinal += 1;
        }
    }
    out
}

/// Transit probabilities for all travelers on the given network state.
/// Probabilities are floored into [floor, 1 − floor] so later gap divisions
/// are well defined even for sentinel-forced 0/1 choices.
fn transit_probabilities(
    net: &Supernetwork,
    travelers: &[TravelerProfile],
    autos: &[Option<AutoAttrs>],
    params: &Params,
) -> Result<(Vec<Option<PathAttrs>>, Vec<f64>)> {
    let paths: Vec<Option<PathAttrs>> = travelers
        .par_iter()
        .map(|t| least_cost_transit_path(net, t, params))
        .collect();
    let mut probs = Vec::with_capacity(travelers.len());
    for (i, t) in travelers.iter().enumerate() {
        let vt = transit_utility(paths[i].as_ref(), &t.betas);
        let va = auto_utility(autos[i].as_ref(), &t.betas);
        let p = choice_probability(vt, va)
            .map_err(|_| Error::NoViableMode { rq_id: t.rq_id })?
            .clamp(params.prob_floor, 1.0 - params.prob_floor);
        probs.push(p);
    }
    Ok((paths, probs))
}

/// Re-route and re-evaluate every traveler on a frozen network and measure
/// how far the probabilities drift from `final_probs`. At a genuine fixed
/// point the drift stays within the convergence tolerance.
pub fn verify_fixed_point(
    net: &Supernetwork,
    auto_net: &Network,
    travelers: &[TravelerProfile],
    final_probs: &[f64],
    params: &Params,
) -> Result<f64> {
    let autos: Vec<Option<AutoAttrs>> = travelers
        .par_iter()
        .map(|t| least_cost_auto_path(auto_net, t, params))
        .collect();
    let (_, probs) = transit_probabilities(net, travelers, &autos, params)?;
    convergence_gap(final_probs, &probs)
}

pub fn run_equilibrium(inputs: EquilibriumInputs) -> Result<EquilibriumResult> {
    let EquilibriumInputs {
        mut supernet,
        auto_net,
        travelers,
        cfg,
    } = inputs;
    let params = &cfg.params;

    // static pieces: auto paths, per-traveler draw streams, fleet inputs
    let autos: Vec<Option<AutoAttrs>> = travelers
        .par_iter()
        .map(|t| least_cost_auto_path(auto_net, t, params))
        .collect();
    let mut states: Vec<ModeChoiceState> =
        travelers.iter().map(|t| ModeChoiceState::new(t.rq_id)).collect();
    let mut rngs: Vec<ChaCha8Rng> = travelers
        .iter()
        .map(|t| rng::traveler_stream(cfg.master_seed, t.rq_id))
        .collect();
    let fleet_params = FleetParams::from_scenario(cfg);
    let stops: Vec<NodeId> = supernet
        .virtual_stops
        .iter()
        .map(|&m| supernet.node(m).base)
        .collect();
    let periods = supernet.periods.clone();

    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut converged = false;
    let mut final_gap = None;
    let mut last: Option<(Vec<Option<PathAttrs>>, FleetOutcome)> = None;
    let mut draws_before = 0u64;
    let mut damping = UpdateDamping::new(params.damping);

    for n in 1..=params.max_iterations {
        let (paths, probs) = transit_probabilities(&supernet, travelers, &autos, params)?;

        let gap = if n >= 2 {
            let prev: Vec<f64> = states.iter().map(|s| s.prob_transit).collect();
            Some(convergence_gap(&prev, &probs)?)
        } else {
            None
        };

        states
            .par_iter_mut()
            .zip(rngs.par_iter_mut())
            .zip(probs.par_iter())
            .for_each(|((state, stream), &p)| {
                assign_mode(state, p, params.eta, stream);
            });

        let requests = extract_requests(travelers, &paths, &states);
        let fleet = simulate_fleet(auto_net, &stops, &requests, &periods, &fleet_params)?;
        let applied = update_supernetwork_from_fleet(&mut supernet, &fleet, params, &mut damping)?;

        let draws_now: u64 = states.iter().map(|s| s.draw_count).sum();
        let transit_choosers =
            states.iter().filter(|s| s.chosen == Some(Mode::Transit)).count() as u32;
        iterations.push(IterationRecord {
            iteration: n,
            gap,
            mean_prob_transit: if probs.is_empty() {
                0.0
            } else {
                probs.iter().sum::<f64>() / probs.len() as f64
            },
            transit_choosers,
            auto_choosers: travelers.len() as u32 - transit_choosers,
            draws: draws_now - draws_before,
            requests: requests.len() as u32,
            served: fleet.stats.served,
            rejected: fleet.stats.rejected,
            applied_wait_s: applied.mean_wait_s,
            applied_detour_ratio: applied.detour_ratio,
            fleet_vmt_mi: fleet.stats.vmt_mi,
        });
        draws_before = draws_now;
        last = Some((paths, fleet));

        if let Some(g) = gap {
            final_gap = Some(g);
            if g <= params.epsilon {
                converged = true;
                break;
            }
        }
    }

    let (paths, fleet) = last.ok_or_else(|| Error::config("max_iterations must be at least 1"))?;
    let outcomes: Vec<TravelerOutcome> = travelers
        .iter()
        .enumerate()
        .map(|(i, t)| TravelerOutcome {
            rq_id: t.rq_id,
            dp_time_s: t.dp_time_s,
            prob_transit: states[i].prob_transit,
            chosen: states[i].chosen.expect("assigned every iteration"),
            transit: paths[i].clone(),
            auto: autos[i],
        })
        .collect();

    Ok(EquilibriumResult {
        converged,
        final_gap,
        iterations,
        outcomes,
        fleet,
        supernet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::Betas;
    use crate::fleet::{FleetStats, PeriodStats, ServiceRecord, ServiceStatus};
    use crate::net::{build_supernetwork, CoordUnits, FrtLine, Node, StreetLink, TimeBasis};
    use crate::scenario::{PeriodId, TransitMode};

    fn line_city(n: u32, spacing_mi: f64, auto_s: f64) -> (Network, Network) {
        let meters_per_mi = 1609.34;
        let nodes: Vec<Node> = (0..n)
            .map(|id| Node {
                id,
                x: id as f64 * spacing_mi * meters_per_mi,
                y: 0.0,
                jobs: 1,
                zone: 0,
            })
            .collect();
        let mut links = Vec::new();
        for i in 0..n - 1 {
            for (a, b) in [(i, i + 1), (i + 1, i)] {
                links.push(StreetLink {
                    from: a,
                    to: b,
                    length_mi: spacing_mi,
                    auto_time_s: auto_s,
                });
            }
        }
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

    fn mean_betas() -> Betas {
        Betas {
            c0: 0.0,
            c_ivt: 0.184,
            c_gas: 0.994,
            t0: 0.022,
            t_wk: 0.213,
            m_wt: 0.104,
            f_wt: 0.069,
            m_ivt: 0.104,
            f_ivt: 0.102,
            f_trfr: 0.504,
            t_fr: 0.554,
        }
    }

    fn traveler(rq_id: u64, o: NodeId, d: NodeId, dp: f64, betas: Betas) -> TravelerProfile {
        TravelerProfile {
            rq_id,
            origin: o,
            dest: d,
            dp_time_s: dp,
            betas,
        }
    }

    #[test]
    fn gap_matches_hand_computation_and_rejects_degenerate_priors() {
        let g = convergence_gap(&[0.5, 0.8], &[0.6, 0.8]).unwrap();
        let expect = (0.1f64.powi(2) / 0.5) * 2.0; // transit and auto terms mirror
        assert!((g - expect).abs() < 1e-12, "{g} vs {expect}");
        assert_eq!(convergence_gap(&[0.5], &[0.5]).unwrap(), 0.0);
        assert!(convergence_gap(&[0.0], &[0.5]).is_err());
        assert!(convergence_gap(&[1.0], &[0.5]).is_err());
        assert!(convergence_gap(&[0.5, 0.5], &[0.5]).is_err());
    }

    #[test]
    fn frt_only_scenario_settles_in_exactly_two_iterations() {
        let (auto, walk) = line_city(4, 1.0, 120.0);
        let lines = vec![FrtLine {
            route_id: "L".into(),
            headway_min: 15.0,
            duration_min: 9.0,
            length_mi: 3.0,
            operating_hr: 19.0,
            stops_out: vec![0, 1, 2, 3],
            stops_back: vec![],
        }];
        let mut cfg = ScenarioConfig::new("frt-only", TransitMode::FixedOnly);
        cfg.headway_min = Some(15.0);
        let net = build_supernetwork(
            &walk,
            &auto,
            &lines,
            &cfg,
            MicroState {
                detour_ratio: 1.0,
                mean_wait_s: 0.0,
            },
        )
        .unwrap();
        let travelers: Vec<TravelerProfile> = (0..20)
            .map(|i| traveler(i, (i % 3) as u32, 3 - (i % 2) as u32, 20000.0, mean_betas()))
            .collect();
        let res = run_equilibrium(EquilibriumInputs {
            supernet: net,
            auto_net: &auto,
            travelers: &travelers,
            cfg: &cfg,
        })
        .unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations.len(), 2);
        assert_eq!(res.iterations[0].gap, None);
        assert_eq!(res.iterations[1].gap, Some(0.0));
        assert_eq!(res.iterations[1].draws, 0); // nothing moved, nobody re-drew
        assert_eq!(res.fleet.stats.served, 0);
    }

    fn micro_cfg(fleet: u32, seed: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new("micro", TransitMode::MicroOnly);
        cfg.virtual_stop_coverage = 1.0;
        cfg.fleet_size = fleet;
        cfg.operating_periods = vec![PeriodId::AM];
        cfg.master_seed = seed;
        cfg
    }

    /// Ten transit-captive travelers (astronomical auto cost) plus twenty
    /// marginal ones: the loop must serve the captives and settle.
    fn mixed_travelers() -> Vec<TravelerProfile> {
        let mut out = Vec::new();
        for i in 0..10u64 {
            let mut b = mean_betas();
            b.c_ivt = 5.0;
            let o = (i % 3) as u32;
            out.push(traveler(i, o, o + 3, 20000.0 + i as f64 * 120.0, b));
        }
        for i in 10..30u64 {
            let o = (i % 4) as u32;
            out.push(traveler(i, o, o + 2, 21000.0 + i as f64 * 90.0, mean_betas()));
        }
        out
    }

    #[test]
    fn micro_scenario_converges_serves_captives_and_verifies() {
        let (auto, walk) = line_city(6, 0.5, 72.0);
        let cfg = micro_cfg(3, 7);
        let net = build_supernetwork(
            &walk,
            &auto,
            &[],
            &cfg,
            MicroState {
                detour_ratio: cfg.params.cold_start_detour,
                mean_wait_s: cfg.params.cold_start_wait_s,
            },
        )
        .unwrap();
        let travelers = mixed_travelers();
        let res = run_equilibrium(EquilibriumInputs {
            supernet: net,
            auto_net: &auto,
            travelers: &travelers,
            cfg: &cfg,
        })
        .unwrap();
        assert!(res.converged, "gap trace: {:?}", res.iterations);
        assert!(res.iterations.len() <= 10);
        let last = res.iterations.last().unwrap();
        assert!(last.served >= 10, "captives must ride: {last:?}");
        // captives chose transit with probability pinned at the ceiling
        for o in &res.outcomes[..10] {
            assert_eq!(o.chosen, Mode::Transit);
            assert!(o.prob_transit > 0.99);
        }

        let final_probs: Vec<f64> = res.outcomes.iter().map(|o| o.prob_transit).collect();
        let drift = verify_fixed_point(
            &res.supernet,
            &auto,
            &travelers,
            &final_probs,
            &cfg.params,
        )
        .unwrap();
        assert!(
            drift <= cfg.params.epsilon,
            "frozen re-pass drifted: {drift}"
        );
    }

    #[test]
    fn reruns_are_identical_and_seeds_matter() {
        let (auto, walk) = line_city(6, 0.5, 72.0);
        let travelers = mixed_travelers();
        let run = |seed: u64| {
            let cfg = micro_cfg(2, seed);
            let net = build_supernetwork(
                &walk,
                &auto,
                &[],
                &cfg,
                MicroState {
                    detour_ratio: cfg.params.cold_start_detour,
                    mean_wait_s: cfg.params.cold_start_wait_s,
                },
            )
            .unwrap();
            run_equilibrium(EquilibriumInputs {
                supernet: net,
                auto_net: &auto,
                travelers: &travelers,
                cfg: &cfg,
            })
            .unwrap()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.fleet.events, b.fleet.events);
        assert_eq!(
            a.outcomes.iter().map(|o| o.prob_transit).collect::<Vec<_>>(),
            b.outcomes.iter().map(|o| o.prob_transit).collect::<Vec<_>>()
        );
        let c = run(1234);
        assert_ne!(
            a.fleet.events, c.fleet.events,
            "different master seed should move the fleet trace"
        );
    }

    #[test]
    fn zero_fleet_inflates_waits_to_the_cap_and_still_settles() {
        let (auto, walk) = line_city(6, 0.5, 72.0);
        let cfg = micro_cfg(0, 3);
        let net = build_supernetwork(
            &walk,
            &auto,
            &[],
            &cfg,
            MicroState {
                detour_ratio: cfg.params.cold_start_detour,
                mean_wait_s: cfg.params.cold_start_wait_s,
            },
        )
        .unwrap();
        let travelers = mixed_travelers();
        let res = run_equilibrium(EquilibriumInputs {
            supernet: net,
            auto_net: &auto,
            travelers: &travelers,
            cfg: &cfg,
        })
        .unwrap();
        assert!(res.converged);
        for it in &res.iterations {
            assert_eq!(it.served, 0);
            if it.requests > 0 {
                // all rejected -> inflation capped at 3x the cold-start wait
                assert_eq!(
                    it.applied_wait_s,
                    cfg.params.cold_start_wait_s * cfg.params.rejection_inflation_cap
                );
            }
        }
    }

    #[test]
    fn requests_follow_micro_legs_with_composite_ids() {
        let (auto, walk) = line_city(6, 0.5, 72.0);
        let cfg = micro_cfg(2, 5);
        let net = build_supernetwork(
            &walk,
            &auto,
            &[],
            &cfg,
            MicroState {
                detour_ratio: 1.0,
                mean_wait_s: 120.0,
            },
        )
        .unwrap();
        let mut b = mean_betas();
        b.c_ivt = 5.0; // transit-captive
        let travelers = vec![traveler(9, 0, 4, 20000.0, b)];
        let params = &cfg.params;
        let autos = vec![least_cost_auto_path(&auto, &travelers[0], params)];
        let (paths, probs) =
            transit_probabilities(&net, &travelers, &autos, params).unwrap();
        let mut states = vec![ModeChoiceState::new(9)];
        let mut stream = rng::traveler_stream(cfg.master_seed, 9);
        assign_mode(&mut states[0], probs[0], params.eta, &mut stream);
        assert_eq!(states[0].chosen, Some(Mode::Transit));

        let reqs = extract_requests(&travelers, &paths, &states);
        assert_eq!(reqs.len(), 1);
        let rq = &reqs[0];
        assert_eq!(rq.rq_id, 9 * 16);
        assert_eq!(rq.pickup, 0);
        assert_eq!(rq.dropoff, 4);
        // summoned at departure: origin sits on a virtual stop, no access walk
        assert_eq!(rq.request_time_s, 20000.0);
        assert_eq!(rq.walk_access_min, 0.0);
    }

    #[test]
    fn damping_rises_only_on_direction_reversals() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        let mut d = UpdateDamping::new(0.0);
        // cold start walking steadily down: every update applies in full
        for w in [400.0, 320.0, 260.0, 220.0] {
            assert_eq!(d.observe(w), 0.0);
        }
        // repeated measurement is not a reversal
        assert_eq!(d.observe(220.0), 0.0);
        // a flip-flop cuts the step at each turn, starting with the update
        // that first reverses: remaining step 0.4^k after k reversals...
        assert!(close(d.observe(300.0), 0.6));
        assert!(close(d.observe(220.0), 0.84));
        assert!(close(d.observe(300.0), 0.936));
        let settled = d.observe(220.0);
        assert!(close(settled, 0.9744));
        // ...and the hold-back never relaxes afterwards
        assert_eq!(d.observe(100.0), settled);
        assert_eq!(d.observe(50.0), settled);

        // a nonzero base shrinks its remaining step the same way
        let mut d = UpdateDamping::new(0.5);
        assert_eq!(d.observe(100.0), 0.5);
        assert_eq!(d.observe(200.0), 0.5);
        assert!(close(d.observe(100.0), 0.8));
    }

    #[test]
    fn performance_update_is_idempotent_and_inflation_is_capped() {
        let (auto, walk) = line_city(4, 0.5, 72.0);
        let cfg = micro_cfg(2, 11);
        let mut net = build_supernetwork(
            &walk,
            &auto,
            &[],
            &cfg,
            MicroState {
                detour_ratio: 1.0,
                mean_wait_s: 0.0,
            },
        )
        .unwrap();
        let rec = |rq_id, status, wait_min, detour| ServiceRecord {
            rq_id,
            status,
            request_time_s: 20000.0,
            pickup: 0,
            dropoff: 2,
            wait_min,
            ivt_min: 3.0,
            direct_min: 2.0,
            direct_mi: 1.0,
            detour_ratio: detour,
        };
        let records = vec![
            rec(0, ServiceStatus::Served, 2.0, 1.5),
            rec(16, ServiceStatus::Served, 4.0, 1.1),
            rec(32, ServiceStatus::Rejected(crate::fleet::RejectReason::NoVehicle), 0.0, 0.0),
        ];
        let stats = FleetStats {
            served: 2,
            rejected: 1,
            mean_wait_s: 180.0,
            mean_detour_ratio: 1.3,
            vmt_mi: 9.0,
            by_period: vec![PeriodStats {
                start_s: 18000.0,
                end_s: 36000.0,
                served: 2,
                rejected: 1,
                mean_wait_s: 180.0,
                mean_detour_ratio: 1.3,
            }],
            cold_start: false,
        };
        let outcome = FleetOutcome {
            records,
            stats,
            events: vec![],
        };
        // r = 1/3 -> inflation 1.5; capped well below 3.0
        let mut damping = UpdateDamping::new(cfg.params.damping);
        let applied =
            update_supernetwork_from_fleet(&mut net, &outcome, &cfg.params, &mut damping).unwrap();
        assert!((applied.mean_wait_s - 270.0).abs() < 1e-12);
        assert!((applied.detour_ratio - 1.3).abs() < 1e-12);
        let fp1 = net.fingerprint();
        let applied2 =
            update_supernetwork_from_fleet(&mut net, &outcome, &cfg.params, &mut damping).unwrap();
        assert_eq!(applied.mean_wait_s, applied2.mean_wait_s);
        assert_eq!(fp1, net.fingerprint());

        // total rejection pins the factor at the configured cap
        let mut all_rejected = outcome;
        all_rejected.stats.served = 0;
        all_rejected.stats.rejected = 3;
        all_rejected.stats.cold_start = true;
        all_rejected.stats.mean_wait_s = cfg.params.cold_start_wait_s;
        all_rejected.records.clear();
        let capped =
            update_supernetwork_from_fleet(&mut net, &all_rejected, &cfg.params, &mut damping)
                .unwrap();
        assert!(
            (capped.mean_wait_s
                - cfg.params.cold_start_wait_s * cfg.params.rejection_inflation_cap)
                .abs()
                < 1e-12
        );
    }
}

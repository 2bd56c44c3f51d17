//! Canned scenario pieces shared by the integration suite and the benches:
//! a 5x5 grid city with a jobs-dense core, the two trunk routes crossing at
//! its center, a quadrant zone map, and demand drawn from the estimated
//! taste distributions.

use std::collections::BTreeMap;

use crate::demand::{generate_synthetic_demand, CoefficientSpec, TemporalProfile, TravelerProfile};
use crate::error::Result;
use crate::net::{CoordUnits, FrtLine, Network, Node, NodeId, StreetLink, TimeBasis};

/// Grid spacing, meters (half a mile).
const SPACING_M: f64 = 804.672;
const SPACING_MI: f64 = 0.5;
/// 25 mph over half a mile.
const AUTO_LINK_S: f64 = 72.0;

/// Jobs at a grid node, peaked at the center and falling off by ring:
/// 240 downtown, 80 on the inner ring, 30 on the edge (1,360 total).
fn jobs_at(col: u32, row: u32) -> u32 {
    let d = col.abs_diff(2).max(row.abs_diff(2));
    match d {
        0 => 240,
        1 => 80,
        _ => 30,
    }
}

/// Quadrant of a grid node, split along the central row and column:
/// 0 = southwest (includes the center lines), 1 = southeast, 2 = northwest,
/// 3 = northeast.
fn quadrant(col: u32, row: u32) -> u32 {
    (col > 2) as u32 + 2 * (row > 2) as u32
}

/// Street fabric of the benchmark city: 25 intersections on a half-mile
/// grid, four-way connected, auto at 25 mph. Returns the drive-time and
/// walk-time views of the same streets. Node ids are row-major
/// (`row * 5 + col`), jobs peak downtown, and zones are the four quadrants.
pub fn grid_city() -> (Network, Network) {
    let mut nodes = Vec::with_capacity(25);
    let mut links = Vec::new();
    for row in 0..5u32 {
        for col in 0..5u32 {
            nodes.push(Node {
                id: row * 5 + col,
                x: col as f64 * SPACING_M,
                y: row as f64 * SPACING_M,
                jobs: jobs_at(col, row),
                zone: quadrant(col, row),
            });
        }
    }
    let mut street = |a: u32, b: u32| {
        for (from, to) in [(a, b), (b, a)] {
            links.push(StreetLink {
                from,
                to,
                length_mi: SPACING_MI,
                auto_time_s: AUTO_LINK_S,
            });
        }
    };
    for row in 0..5u32 {
        for col in 0..5u32 {
            let id = row * 5 + col;
            if col < 4 {
                street(id, id + 1);
            }
            if row < 4 {
                street(id, id + 5);
            }
        }
    }
    let auto = Network::from_street(nodes.clone(), &links, TimeBasis::Auto, CoordUnits::Meters)
        .expect("grid city is a valid street network");
    let walk = Network::from_street(
        nodes,
        &links,
        TimeBasis::Walk { speed_mph: 2.8 },
        CoordUnits::Meters,
    )
    .expect("grid city is a valid street network");
    (auto, walk)
}

/// The two trunk routes through the grid's center: an east-west line along
/// the middle row and a north-south line along the middle column, meeting at
/// the downtown node. Both run the given headway over a 19-hour service day.
pub fn two_crossing_lines(headway_min: f64) -> Vec<FrtLine> {
    let east_west: Vec<u32> = (10..=14).collect();
    let north_south: Vec<u32> = (0..5).map(|r| r * 5 + 2).collect();
    [("EW", east_west), ("NS", north_south)]
        .into_iter()
        .map(|(name, stops)| FrtLine {
            route_id: name.to_string(),
            headway_min,
            duration_min: 10.0,
            length_mi: 2.0,
            operating_hr: 19.0,
            stops_back: stops.iter().rev().copied().collect(),
            stops_out: stops,
        })
        .collect()
}

/// Quadrant assignment keyed by street node id, in the form
/// [`crate::net::apply_zonal_partition`] takes.
pub fn grid_zone_map() -> BTreeMap<NodeId, u32> {
    (0..5u32)
        .flat_map(|row| (0..5u32).map(move |col| (row * 5 + col, quadrant(col, row))))
        .collect()
}

/// Benchmark demand: commute-peaked departures and the estimated taste
/// distributions, destinations weighted by jobs.
pub fn benchmark_demand(
    n_trips: u64,
    walk: &Network,
    seed: u64,
) -> Result<Vec<TravelerProfile>> {
    generate_synthetic_demand(
        n_trips,
        walk,
        &TemporalProfile::commute_peaks(),
        &CoefficientSpec::san_diego(),
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_expected_shape() {
        let (auto, walk) = grid_city();
        assert_eq!(auto.n(), 25);
        assert_eq!(walk.n(), 25);
        // 4-neighbor grid: 2 * (4*5 + 5*4) directed street links
        assert_eq!(auto.links().len(), 80);
        let total_jobs: u32 = walk.nodes().iter().map(|n| n.jobs).sum();
        assert_eq!(total_jobs, 1360);
        // same streets, different clocks
        let a = auto.link(0);
        let w = walk.link(0);
        assert_eq!(a.length_mi, w.length_mi);
        assert!((a.time_s - 72.0).abs() < 1e-9);
        assert!((w.time_s - 0.5 / 2.8 * 3600.0).abs() < 1e-9);
    }

    #[test]
    fn trunk_lines_cross_downtown() {
        let lines = two_crossing_lines(15.0);
        assert_eq!(lines.len(), 2);
        for l in &lines {
            assert!(l.validate().is_ok());
            assert!(l.stops_out.contains(&12), "{} misses the center", l.route_id);
            assert_eq!(
                l.stops_back,
                l.stops_out.iter().rev().copied().collect::<Vec<_>>()
            );
        }
        assert_eq!(lines[0].stops_out, vec![10, 11, 12, 13, 14]);
        assert_eq!(lines[1].stops_out, vec![2, 7, 12, 17, 22]);
    }

    #[test]
    fn zone_map_partitions_all_nodes_into_four() {
        let map = grid_zone_map();
        assert_eq!(map.len(), 25);
        let mut counts = [0u32; 4];
        for (&id, &z) in &map {
            assert!(id < 25);
            counts[z as usize] += 1;
        }
        assert_eq!(counts, [9, 6, 6, 4]);
        let (_, walk) = grid_city();
        for n in walk.nodes() {
            assert_eq!(n.zone, map[&n.id], "node {} zone label drifted", n.id);
        }
    }

    #[test]
    fn demand_is_reproducible_and_well_formed() {
        let (_, walk) = grid_city();
        let a = benchmark_demand(200, &walk, 42).unwrap();
        let b = benchmark_demand(200, &walk, 42).unwrap();
        assert_eq!(a.len(), 200);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.rq_id, y.rq_id);
            assert_eq!(x.origin, y.origin);
            assert_eq!(x.dest, y.dest);
            assert_eq!(x.dp_time_s, y.dp_time_s);
        }
        for t in &a {
            assert!(t.origin < 25 && t.dest < 25);
            assert!(t.dp_time_s >= 5.0 * 3600.0 && t.dp_time_s < 24.0 * 3600.0);
        }
        let c = benchmark_demand(200, &walk, 43).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.origin != y.origin));
    }
}

//! Shared fixtures for the criterion benches: the bundled 5×5 benchmark city
//! at its default service design, plus a deterministic request batch sized
//! like one equilibrium iteration's worth of demand.

use fixflex_core::synthetic::{benchmark_demand, grid_city, two_crossing_lines};
use fixflex_core::{
    build_supernetwork, FleetParams, FrtLine, MicroState, Network, PeriodId, RideRequest,
    ScenarioConfig, Supernetwork, TransitMode, TravelerProfile,
};
use rand::Rng;

pub fn bench_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new("bench", TransitMode::MicroPlusFixed);
    cfg.headway_min = Some(15.0);
    cfg.virtual_stop_coverage = 0.75;
    cfg.fleet_size = 10;
    cfg.operating_periods = vec![PeriodId::AM, PeriodId::MD, PeriodId::PM];
    cfg
}

pub struct BenchCity {
    pub auto: Network,
    pub walk: Network,
    pub lines: Vec<FrtLine>,
    pub cfg: ScenarioConfig,
    pub supernet: Supernetwork,
    pub travelers: Vec<TravelerProfile>,
}

pub fn bench_city(n_travelers: u64) -> BenchCity {
    let (auto, walk) = grid_city();
    let lines = two_crossing_lines(15.0);
    let cfg = bench_config();
    let cold = MicroState {
        detour_ratio: cfg.params.cold_start_detour,
        mean_wait_s: cfg.params.cold_start_wait_s,
    };
    let supernet = build_supernetwork(&walk, &auto, &lines, &cfg, cold).unwrap();
    let travelers = benchmark_demand(n_travelers, &walk, 42).unwrap();
    BenchCity {
        auto,
        walk,
        lines,
        cfg,
        supernet,
        travelers,
    }
}

/// A morning-peak request batch over the whole grid, deterministic per count.
pub fn request_batch(n: u64) -> (Vec<RideRequest>, Vec<u32>, Vec<(f64, f64)>, FleetParams) {
    let mut rng = fixflex_core::rng::stream(7, "bench-requests", 0);
    let stops: Vec<u32> = (0..25).collect();
    let periods = vec![(18_000.0, 36_000.0), (54_000.0, 72_000.0)];
    let requests = (0..n)
        .map(|i| {
            let pickup = rng.random_range(0..25u32);
            let mut dropoff = rng.random_range(0..25u32);
            while dropoff == pickup {
                dropoff = rng.random_range(0..25u32);
            }
            RideRequest {
                rq_id: i,
                request_time_s: rng.random_range(18_000.0..36_000.0),
                pickup,
                dropoff,
                walk_access_min: 0.0,
                walk_egress_min: 0.0,
            }
        })
        .collect();
    let params = FleetParams {
        fleet_size: 10,
        capacity: 4,
        max_wait_s: 900.0,
        max_detour_ratio: 2.0,
        reposition: true,
        cold_start_detour: 1.2,
        cold_start_wait_s: 300.0,
        seed: 7,
    };
    (requests, stops, periods, params)
}

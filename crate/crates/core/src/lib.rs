//! Core library for evaluating integrated fixed-route transit (FRT) +
//! microtransit service designs.
//!
//! The pipeline: load street/FRT/demand inputs ([`net`], [`demand`]), build a
//! three-layer walk/FRT/microtransit supernetwork ([`net::build_supernetwork`]),
//! route every traveler at their personal generalized cost ([`router`]), feed a
//! binary logit with a perception threshold ([`choice`]), simulate the
//! microtransit fleet against the resulting requests ([`fleet`]), and iterate
//! the demand/performance loop to a fixed point ([`equilibrium`]). [`metrics`]
//! turns a finished run into subsidy, accessibility, mode-share, and VMT
//! figures plus file outputs.
//!
//! Everything is deterministic under a master seed: per-traveler, fleet, and
//! sampling streams are derived with [`rng::derive_seed`] and never shared.

mod error;
pub mod rng;
pub mod scenario;

pub mod net;

pub mod demand;

pub mod router;

pub mod choice;

pub mod fleet;

pub mod equilibrium;

pub mod metrics;
pub mod oracle;
pub mod synthetic;

pub use error::{Error, Result};
pub use scenario::{load_matrix, Params, PeriodId, ScenarioConfig, TransitMode, WaitGranularity};

pub use net::{
    apply_zonal_partition, build_supernetwork, load_networks, load_zone_map, FrtLine, Layer,
    LinkType, MicroState, Network, Node, NodeId, SuperLink, SuperNode, Supernetwork,
};

pub use demand::{
    generate_synthetic_demand, load_demand, sample_coefficients, write_demand, Betas, CoeffDist,
    CoefficientSpec, TemporalProfile, TravelerProfile,
};

pub use router::{least_cost_auto_path, least_cost_transit_path, AutoAttrs, Leg, PathAttrs};

pub use choice::{
    assign_mode, auto_utility, choice_probability, transit_utility, Mode, ModeChoiceState,
};

pub use fleet::{
    simulate_fleet, EventKind, EventRow, FleetOutcome, FleetParams, FleetStats, PeriodStats,
    RejectReason, RideRequest, ServiceRecord, ServiceStatus,
};

pub use equilibrium::{
    convergence_gap, run_equilibrium, update_supernetwork_from_fleet, verify_fixed_point,
    EquilibriumInputs, EquilibriumResult, IterationRecord, TravelerOutcome, UpdateDamping,
};

pub use metrics::{
    accessibility_15min, compute_metrics, frt_line_cost, frt_system_cost, line_usage,
    micro_system_cost, mode_share, revenues_and_subsidy, trip_length_distribution, vmt_summary,
    write_outputs, AccessibilitySummary, CostBreakdown, LineUsage, MetricsReport, ModeShare,
    TripClass, TripLengthDistribution, VmtSummary,
};


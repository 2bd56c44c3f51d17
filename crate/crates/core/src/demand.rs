//! Traveler demand: per-traveler taste coefficients, demand-file ingestion,
//! and synthetic demand generation.
//!
//! Each traveler carries their own coefficient vector, drawn from regional
//! normal distributions and clamped below at a per-coefficient floor. All
//! coefficients are stored as non-negative disutility magnitudes; the choice
//! module applies the signs.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Network, NodeId};
use crate::rng;

/// Departure-time domain: first trip at 05:00, last at 23:59.
pub const DAY_START_S: f64 = 5.0 * 3600.0;
pub const DAY_END_S: f64 = 23.0 * 3600.0 + 59.0 * 60.0;

/// One traveler's taste weights. Time weights are per minute, money weights
/// per dollar, the transfer weight per transfer. Field names follow the
/// demand-file columns: `c_*` auto (car), `t_*` transit-wide, `m_*`
/// microtransit, `f_*` fixed-route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Betas {
    /// Auto alternative-specific constant.
    pub c0: f64,
    /// Auto in-vehicle time.
    pub c_ivt: f64,
    /// Auto operating (gas) cost.
    pub c_gas: f64,
    /// Transit alternative-specific constant.
    pub t0: f64,
    /// Walking time.
    pub t_wk: f64,
    /// Microtransit waiting time.
    pub m_wt: f64,
    /// Fixed-route waiting time.
    pub f_wt: f64,
    /// Microtransit in-vehicle time.
    pub m_ivt: f64,
    /// Fixed-route in-vehicle time.
    pub f_ivt: f64,
    /// Fixed-route transfer count.
    pub f_trfr: f64,
    /// Transit fare.
    pub t_fr: f64,
}

impl Betas {
    pub fn as_array(&self) -> [f64; 11] {
        [
            self.c0, self.c_ivt, self.c_gas, self.t0, self.t_wk, self.m_wt, self.f_wt,
            self.m_ivt, self.f_ivt, self.f_trfr, self.t_fr,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in self.as_array().iter().zip(FIELD_NAMES) {
            if !(*v >= 0.0) {
                return Err(Error::invalid(format!(
                    "coefficient {name} = {v} (must be >= 0)"
                )));
            }
        }
        Ok(())
    }
}

const FIELD_NAMES: [&str; 11] = [
    "c0", "c_ivt", "c_gas", "t0", "t_wk", "m_wt", "f_wt", "m_ivt", "f_ivt", "f_trfr", "t_fr",
];

/// One trip request: who, where, when, and with what tastes. RNG streams are
/// derived from `(master seed, rq_id)` on demand rather than stored, so the
/// same demand file works under any master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelerProfile {
    pub rq_id: u64,
    pub origin: NodeId,
    pub dest: NodeId,
    /// Departure, seconds after midnight.
    pub dp_time_s: f64,
    pub betas: Betas,
}

impl TravelerProfile {
    pub fn validate(&self) -> Result<()> {
        if self.origin == self.dest {
            return Err(Error::invalid(format!(
                "traveler {}: origin equals destination ({})",
                self.rq_id, self.origin
            )));
        }
        if !(self.dp_time_s >= 0.0 && self.dp_time_s < 86400.0) {
            return Err(Error::invalid(format!(
                "traveler {}: dp_time {} outside the day",
                self.rq_id, self.dp_time_s
            )));
        }
        self.betas
            .validate()
            .map_err(|e| Error::invalid(format!("traveler {}: {e}", self.rq_id)))
    }
}

/// Normal distribution with a lower clamp: draws below `threshold` are raised
/// to it, never resampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffDist {
    pub mean: f64,
    pub sd: f64,
    pub threshold: f64,
}

impl CoeffDist {
    pub const fn new(mean: f64, sd: f64, threshold: f64) -> Self {
        CoeffDist {
            mean,
            sd,
            threshold,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !self.mean.is_finite() || !(self.sd >= 0.0) || !(self.threshold >= 0.0) {
            return Err(Error::config(format!(
                "coefficient {name}: mean must be finite, sd and threshold >= 0"
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        let normal = Normal::new(self.mean, self.sd).expect("validated sd");
        normal.sample(rng).max(self.threshold)
    }
}

/// Regional generation recipe: one clamped normal per coefficient. Loadable
/// from TOML; two regional presets ship as constructors and as bundled files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub c0: CoeffDist,
    pub c_ivt: CoeffDist,
    pub c_gas: CoeffDist,
    pub t0: CoeffDist,
    pub t_wk: CoeffDist,
    pub m_wt: CoeffDist,
    pub f_wt: CoeffDist,
    pub m_ivt: CoeffDist,
    pub f_ivt: CoeffDist,
    pub f_trfr: CoeffDist,
    pub t_fr: CoeffDist,
}

impl CoefficientSpec {
    /// San Diego regional estimates.
    pub fn san_diego() -> Self {
        CoefficientSpec {
            c0: CoeffDist::new(0.0, 0.0, 0.0),
            c_ivt: CoeffDist::new(0.184, 0.047, 0.01),
            c_gas: CoeffDist::new(0.994, 0.377, 0.05),
            t0: CoeffDist::new(0.022, 0.04, 0.0),
            t_wk: CoeffDist::new(0.213, 0.140, 0.01),
            m_wt: CoeffDist::new(0.104, 0.022, 0.01),
            f_wt: CoeffDist::new(0.069, 0.022, 0.01),
            m_ivt: CoeffDist::new(0.104, 0.022, 0.01),
            f_ivt: CoeffDist::new(0.102, 0.029, 0.01),
            f_trfr: CoeffDist::new(0.504, 0.022, 0.01),
            t_fr: CoeffDist::new(0.554, 0.377, 0.05),
        }
    }

    /// Lemon Grove (suburban) estimates: same spreads, shifted means.
    pub fn lemon_grove() -> Self {
        CoefficientSpec {
            c0: CoeffDist::new(0.0, 0.0, 0.0),
            c_ivt: CoeffDist::new(0.198, 0.047, 0.01),
            c_gas: CoeffDist::new(0.579, 0.377, 0.05),
            t0: CoeffDist::new(0.292, 0.04, 0.0),
            t_wk: CoeffDist::new(0.329, 0.140, 0.01),
            m_wt: CoeffDist::new(0.094, 0.022, 0.01),
            f_wt: CoeffDist::new(0.082, 0.022, 0.01),
            m_ivt: CoeffDist::new(0.104, 0.022, 0.01),
            f_ivt: CoeffDist::new(0.106, 0.029, 0.01),
            f_trfr: CoeffDist::new(0.504, 0.022, 0.01),
            t_fr: CoeffDist::new(0.554, 0.377, 0.05),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dists = [
            (self.c0, "c0"),
            (self.c_ivt, "c_ivt"),
            (self.c_gas, "c_gas"),
            (self.t0, "t0"),
            (self.t_wk, "t_wk"),
            (self.m_wt, "m_wt"),
            (self.f_wt, "f_wt"),
            (self.m_ivt, "m_ivt"),
            (self.f_ivt, "f_ivt"),
            (self.f_trfr, "f_trfr"),
            (self.t_fr, "t_fr"),
        ];
        for (d, name) in dists {
            d.validate(name)?;
        }
        Ok(())
    }

    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: CoefficientSpec = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("spec serializes")
    }
}

/// Draw one coefficient vector. Draw order is fixed (c0 through t_fr) and is
/// part of the determinism contract: a given RNG stream always yields the
/// same vector.
pub fn sample_coefficients(spec: &CoefficientSpec, rng: &mut impl Rng) -> Betas {
    Betas {
        c0: spec.c0.draw(rng),
        c_ivt: spec.c_ivt.draw(rng),
        c_gas: spec.c_gas.draw(rng),
        t0: spec.t0.draw(rng),
        t_wk: spec.t_wk.draw(rng),
        m_wt: spec.m_wt.draw(rng),
        f_wt: spec.f_wt.draw(rng),
        m_ivt: spec.m_ivt.draw(rng),
        f_ivt: spec.f_ivt.draw(rng),
        f_trfr: spec.f_trfr.draw(rng),
        t_fr: spec.t_fr.draw(rng),
    }
}

const COMPACT_HEADER: [&str; 14] = [
    "dp_time", "O", "D", "rq_id", "b_c0", "b_c_ivt", "b_c_gas", "b_T0", "b_T_wk", "b_T_wt",
    "b_m_ivt", "b_f_ivt", "b_f_trfr", "b_T_fr",
];
const EXTENDED_HEADER: [&str; 15] = [
    "dp_time", "O", "D", "rq_id", "b_c0", "b_c_ivt", "b_c_gas", "b_T0", "b_T_wk", "b_m_wt",
    "b_f_wt", "b_m_ivt", "b_f_ivt", "b_f_trfr", "b_T_fr",
];

/// Load a demand CSV. The compact 10-beta header carries one waiting-time
/// column (`b_T_wt`) that fills both the micro and fixed-route wait weights;
/// the extended 11-beta header (`b_m_wt,b_f_wt`) keeps them distinct. The
/// header row picks the schema. `#` comments are allowed.
pub fn load_demand(path: &Path) -> Result<Vec<TravelerProfile>> {
    let text = std::fs::read_to_string(path)?;
    let mut profiles = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    let mut extended: Option<bool> = None;

    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(is_ext) = extended else {
            extended = if fields == COMPACT_HEADER {
                Some(false)
            } else if fields == EXTENDED_HEADER {
                Some(true)
            } else {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected a demand header (compact `b_T_wt` or extended `b_m_wt,b_f_wt` form)",
                ));
            };
            continue;
        };

        let want = if is_ext { 15 } else { 14 };
        if fields.len() != want {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {want} fields, got {}", fields.len()),
            ));
        }
        let f = |i: usize, what: &str| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad {what} value {:?}", fields[i])))
        };
        let dp_time_s = f(0, "dp_time")?;
        let origin: NodeId = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad O value {:?}", fields[1])))?;
        let dest: NodeId = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad D value {:?}", fields[2])))?;
        let rq_id: u64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad rq_id value {:?}", fields[3])))?;

        let betas = if is_ext {
            Betas {
                c0: f(4, "b_c0")?,
                c_ivt: f(5, "b_c_ivt")?,
                c_gas: f(6, "b_c_gas")?,
                t0: f(7, "b_T0")?,
                t_wk: f(8, "b_T_wk")?,
                m_wt: f(9, "b_m_wt")?,
                f_wt: f(10, "b_f_wt")?,
                m_ivt: f(11, "b_m_ivt")?,
                f_ivt: f(12, "b_f_ivt")?,
                f_trfr: f(13, "b_f_trfr")?,
                t_fr: f(14, "b_T_fr")?,
            }
        } else {
            let wt = f(9, "b_T_wt")?;
            Betas {
                c0: f(4, "b_c0")?,
                c_ivt: f(5, "b_c_ivt")?,
                c_gas: f(6, "b_c_gas")?,
                t0: f(7, "b_T0")?,
                t_wk: f(8, "b_T_wk")?,
                m_wt: wt,
                f_wt: wt,
                m_ivt: f(10, "b_m_ivt")?,
                f_ivt: f(11, "b_f_ivt")?,
                f_trfr: f(12, "b_f_trfr")?,
                t_fr: f(13, "b_T_fr")?,
            }
        };

        if !seen.insert(rq_id) {
            return Err(Error::parse(path, lineno, format!("duplicate rq_id {rq_id}")));
        }
        let profile = TravelerProfile {
            rq_id,
            origin,
            dest,
            dp_time_s,
            betas,
        };
        profile
            .validate()
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        profiles.push(profile);
    }
    Ok(profiles)
}

/// Write demand back out. Uses the compact schema when every traveler's two
/// wait weights coincide, the extended schema otherwise. Floats use Rust's
/// shortest round-trip formatting, so load(write(x)) == x.
pub fn write_demand(path: &Path, profiles: &[TravelerProfile]) -> Result<()> {
    use std::fmt::Write as _;
    let extended = profiles.iter().any(|p| p.betas.m_wt != p.betas.f_wt);
    let mut out = String::new();
    let header: &[&str] = if extended {
        &EXTENDED_HEADER
    } else {
        &COMPACT_HEADER
    };
    out.push_str(&header.join(","));
    out.push('\n');
    for p in profiles {
        let b = &p.betas;
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.dp_time_s, p.origin, p.dest, p.rq_id, b.c0, b.c_ivt, b.c_gas, b.t0, b.t_wk
        )
        .unwrap();
        if extended {
            write!(out, ",{},{}", b.m_wt, b.f_wt).unwrap();
        } else {
            write!(out, ",{}", b.m_wt).unwrap();
        }
        writeln!(out, ",{},{},{},{}", b.m_ivt, b.f_ivt, b.f_trfr, b.t_fr).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Hourly departure-time histogram over the 19-hour service day (05:00 to
/// 23:59). Weights are normalized at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalProfile {
    /// One weight per hour, hours 5 through 23.
    weights: Vec<f64>,
}

pub const PROFILE_HOURS: usize = 19;

impl TemporalProfile {
    pub fn uniform() -> Self {
        TemporalProfile {
            weights: vec![1.0 / PROFILE_HOURS as f64; PROFILE_HOURS],
        }
    }

    /// Commute shape: morning peak 07:00-09:00, evening peak 18:00-19:00,
    /// a modest midday shoulder, quiet edges.
    pub fn commute_peaks() -> Self {
        let mut w = vec![0.5f64; PROFILE_HOURS];
        for h in [7usize, 8] {
            w[h - 5] = 3.0;
        }
        w[18 - 5] = 2.5;
        for h in 10..16 {
            w[h - 5] = 1.0;
        }
        TemporalProfile::from_hourly(w).expect("positive weights")
    }

    /// Arbitrary non-negative hourly weights (hour 5 first), normalized here.
    pub fn from_hourly(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != PROFILE_HOURS {
            return Err(Error::invalid(format!(
                "temporal profile needs {PROFILE_HOURS} hourly weights, got {}",
                weights.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid(
                "temporal profile weights must be non-negative with a positive sum",
            ));
        }
        Ok(TemporalProfile {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Draw a departure second. The final hour is truncated at 23:59.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut hour = PROFILE_HOURS - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                hour = i;
                break;
            }
        }
        let start = (hour as f64 + 5.0) * 3600.0;
        let end = if hour == PROFILE_HOURS - 1 {
            DAY_END_S
        } else {
            start + 3600.0
        };
        start + rng.random::<f64>() * (end - start)
    }
}

/// Generate `n_trips` synthetic travelers over a street network. Origins are
/// uniform over walk nodes; destinations are drawn proportional to `jobs + 1`
/// (so employment clusters attract trips but no node is unreachable as a
/// destination); departure times follow the profile; coefficients come from
/// `spec`. Each traveler consumes an independent seed-derived stream, so the
/// list is reproducible and order-independent.
pub fn generate_synthetic_demand(
    n_trips: u64,
    network: &Network,
    profile: &TemporalProfile,
    spec: &CoefficientSpec,
    seed: u64,
) -> Result<Vec<TravelerProfile>> {
    if n_trips == 0 {
        return Ok(Vec::new());
    }
    if network.n() < 2 {
        return Err(Error::invalid(
            "synthetic demand needs at least two street nodes",
        ));
    }
    spec.validate()?;

    let nodes = network.nodes();
    let cum_jobs: Vec<f64> = {
        let mut acc = 0.0;
        nodes
            .iter()
            .map(|n| {
                acc += n.jobs as f64 + 1.0;
                acc
            })
            .collect()
    };
    let total_weight = *cum_jobs.last().unwrap();

    let mut out = Vec::with_capacity(n_trips as usize);
    for rq_id in 0..n_trips {
        let mut rng = rng::stream(seed, "demand", rq_id);
        let origin = nodes[rng.random_range(0..nodes.len())].id;
        let dest = loop {
            let u: f64 = rng.random::<f64>() * total_weight;
            let ix = cum_jobs.partition_point(|&c| c <= u);
            let d = nodes[ix.min(nodes.len() - 1)].id;
            if d != origin {
                break d;
            }
        };
        let dp_time_s = profile.sample(&mut rng);
        let betas = sample_coefficients(spec, &mut rng);
        out.push(TravelerProfile {
            rq_id,
            origin,
            dest,
            dp_time_s,
            betas,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{CoordUnits, StreetLink, TimeBasis};

    #[test]
    fn clamp_raises_low_draws_to_threshold() {
        let d = CoeffDist::new(0.0, 1.0, 0.01);
        let mut rng = rng::stream(1, "test", 0);
        let draws: Vec<f64> = (0..1000).map(|_| d.draw(&mut rng)).collect();
        assert!(draws.iter().all(|v| *v >= 0.01));
        // roughly half the mass sits exactly at the floor
        let at_floor = draws.iter().filter(|v| **v == 0.01).count();
        assert!((300..700).contains(&at_floor), "{at_floor}");
    }

    #[test]
    fn degenerate_normal_returns_mean() {
        let d = CoeffDist::new(0.104, 0.0, 0.01);
        let mut rng = rng::stream(1, "test", 0);
        for _ in 0..10 {
            assert_eq!(d.draw(&mut rng), 0.104);
        }
    }

    #[test]
    fn sample_mean_matches_spec_mean_when_clamp_mass_negligible() {
        // m_wt: mean 0.104, sd 0.022, floor 0.01 sits >4 sigma below the mean
        let spec = CoefficientSpec::san_diego();
        let mut rng = rng::stream(7, "mc", 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_coefficients(&spec, &mut rng).m_wt;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.104).abs() < 0.002, "empirical mean {mean}");
    }

    #[test]
    fn every_sampled_vector_respects_floors() {
        let spec = CoefficientSpec::lemon_grove();
        let mut rng = rng::stream(3, "floors", 0);
        for _ in 0..2000 {
            let b = sample_coefficients(&spec, &mut rng);
            assert!(b.c0 >= 0.0 && b.t0 >= 0.0);
            assert!(b.c_ivt >= 0.01 && b.t_wk >= 0.01);
            assert!(b.m_wt >= 0.01 && b.f_wt >= 0.01);
            assert!(b.m_ivt >= 0.01 && b.f_ivt >= 0.01 && b.f_trfr >= 0.01);
            assert!(b.c_gas >= 0.05 && b.t_fr >= 0.05);
        }
    }

    const SAMPLE: &str = "\
dp_time,O,D,rq_id,b_c0,b_c_ivt,b_c_gas,b_T0,b_T_wk,b_T_wt,b_m_ivt,b_f_ivt,b_f_trfr,b_T_fr
18006,384,498,0,0,0.129,0.631,0.456,0.018,0.089,0.161,0.115,0.469,0.778
18011,101,22,1,0,0.2,0.5,0.1,0.02,0.09,0.1,0.1,0.5,0.6
";

    #[test]
    fn compact_row_fills_both_wait_weights() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demand.csv");
        std::fs::write(&path, SAMPLE).unwrap();
        let profiles = load_demand(&path).unwrap();
        assert_eq!(profiles.len(), 2);
        let p = &profiles[0];
        assert_eq!(p.dp_time_s, 18006.0);
        assert_eq!((p.origin, p.dest, p.rq_id), (384, 498, 0));
        assert_eq!(p.betas.c_ivt, 0.129);
        assert_eq!(p.betas.m_wt, 0.089);
        assert_eq!(p.betas.f_wt, 0.089);
        assert_eq!(p.betas.t_fr, 0.778);
    }

    #[test]
    fn empty_file_is_empty_demand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demand.csv");
        std::fs::write(&path, "").unwrap();
        assert!(load_demand(&path).unwrap().is_empty());
    }

    #[test]
    fn degenerate_and_duplicate_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demand.csv");
        let header = SAMPLE.lines().next().unwrap();

        std::fs::write(&path, format!("{header}\n18006,5,5,0,0,0.1,0.5,0.1,0.02,0.09,0.1,0.1,0.5,0.6\n")).unwrap();
        let err = load_demand(&path).unwrap_err();
        assert!(err.to_string().contains("origin equals destination"), "{err}");

        std::fs::write(
            &path,
            format!(
                "{header}\n18006,1,2,0,0,0.1,0.5,0.1,0.02,0.09,0.1,0.1,0.5,0.6\n18007,3,4,0,0,0.1,0.5,0.1,0.02,0.09,0.1,0.1,0.5,0.6\n"
            ),
        )
        .unwrap();
        let err = load_demand(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate rq_id 0"), "{err}");

        std::fs::write(&path, format!("{header}\n18006,1,2,0,0,-0.1,0.5,0.1,0.02,0.09,0.1,0.1,0.5,0.6\n")).unwrap();
        let err = load_demand(&path).unwrap_err();
        assert!(err.to_string().contains("c_ivt"), "{err}");
    }

    #[test]
    fn write_then_load_round_trips_both_schemas() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demand.csv");
        std::fs::write(&path, SAMPLE).unwrap();
        let original = load_demand(&path).unwrap();

        let compact = dir.path().join("compact.csv");
        write_demand(&compact, &original).unwrap();
        let text = std::fs::read_to_string(&compact).unwrap();
        assert!(text.starts_with("dp_time,O,D,rq_id,b_c0"));
        assert!(text.contains("b_T_wt"), "shared waits stay compact");
        assert_eq!(load_demand(&compact).unwrap(), original);

        let mut split = original.clone();
        split[1].betas.f_wt = 0.07; // now m_wt != f_wt
        let extended = dir.path().join("extended.csv");
        write_demand(&extended, &split).unwrap();
        let text = std::fs::read_to_string(&extended).unwrap();
        assert!(text.contains("b_m_wt,b_f_wt"), "split waits need the extended header");
        assert_eq!(load_demand(&extended).unwrap(), split);
    }

    #[test]
    fn spec_toml_round_trip() {
        let spec = CoefficientSpec::san_diego();
        let text = spec.to_toml_string();
        let back: CoefficientSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }

    fn tiny_net() -> Network {
        let nodes: Vec<crate::net::Node> = (0..4)
            .map(|id| crate::net::Node {
                id,
                x: id as f64,
                y: 0.0,
                jobs: if id == 3 { 50 } else { 0 },
                zone: 0,
            })
            .collect();
        let links = [StreetLink {
            from: 0,
            to: 1,
            length_mi: 0.1,
            auto_time_s: 10.0,
        }];
        Network::from_street(nodes, &links, TimeBasis::Auto, CoordUnits::Meters).unwrap()
    }

    #[test]
    fn synthetic_demand_is_reproducible_and_valid() {
        let net = tiny_net();
        let spec = CoefficientSpec::san_diego();
        let profile = TemporalProfile::uniform();
        let a = generate_synthetic_demand(500, &net, &profile, &spec, 11).unwrap();
        let b = generate_synthetic_demand(500, &net, &profile, &spec, 11).unwrap();
        assert_eq!(a, b);
        for p in &a {
            p.validate().unwrap();
            assert!(p.dp_time_s >= DAY_START_S && p.dp_time_s <= DAY_END_S);
        }
        // jobs-weighted destinations favor the employment node
        let to_3 = a.iter().filter(|p| p.dest == 3).count();
        assert!(to_3 > 300, "{to_3} of 500");
        assert!(generate_synthetic_demand(0, &net, &profile, &spec, 11).unwrap().is_empty());
    }

    #[test]
    fn uniform_profile_spreads_departures_across_hours() {
        let net = tiny_net();
        let spec = CoefficientSpec::san_diego();
        let profile = TemporalProfile::uniform();
        let n = 10_000u64;
        let demand = generate_synthetic_demand(n, &net, &profile, &spec, 5).unwrap();
        let mut counts = [0u32; PROFILE_HOURS];
        for p in &demand {
            counts[(p.dp_time_s / 3600.0) as usize - 5] += 1;
        }
        // binomial 3-sigma band around n/19
        let p = 1.0 / PROFILE_HOURS as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (h, c) in counts.iter().enumerate() {
            let dev = (*c as f64 - n as f64 * p).abs();
            assert!(dev <= 3.0 * sigma, "hour {}: count {c}", h + 5);
        }
    }

    #[test]
    fn per_traveler_streams_are_independent() {
        let net = tiny_net();
        let spec = CoefficientSpec::san_diego();
        let profile = TemporalProfile::commute_peaks();
        let full = generate_synthetic_demand(100, &net, &profile, &spec, 9).unwrap();
        let half = generate_synthetic_demand(50, &net, &profile, &spec, 9).unwrap();
        assert_eq!(&full[..50], &half[..]);
    }
}

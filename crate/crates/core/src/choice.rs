//! Binary mode choice: transit vs auto utilities, the logit probability, and
//! the threshold-gated Monte Carlo assignment.
//!
//! Utilities treat every attribute term as a disutility — coefficients are
//! stored as magnitudes and subtracted here — with the alternative-specific
//! constants entering additively. An unreachable alternative carries a
//! negative-infinity utility, which forces the probability to the other mode.
//!
//! Assignment re-draws a traveler's mode only when their choice probability
//! has moved by more than the perception threshold since the last iteration;
//! otherwise the previous mode sticks and the traveler's RNG stream does not
//! advance. That stream discipline is what keeps runs reproducible when the
//! set of re-drawing travelers differs between runs of the loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demand::Betas;
use crate::error::{Error, Result};
use crate::router::{AutoAttrs, PathAttrs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Transit,
    Auto,
}

/// Per-traveler choice state carried across equilibrium iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeChoiceState {
    pub rq_id: u64,
    /// Probability of choosing transit after the latest update (NaN before
    /// the first).
    pub prob_transit: f64,
    /// The probability one update earlier.
    pub prob_transit_prev: f64,
    pub chosen: Option<Mode>,
    /// How many uniform draws this traveler has consumed.
    pub draw_count: u64,
}

impl ModeChoiceState {
    pub fn new(rq_id: u64) -> Self {
        ModeChoiceState {
            rq_id,
            prob_transit: f64::NAN,
            prob_transit_prev: f64::NAN,
            chosen: None,
            draw_count: 0,
        }
    }
}

/// Transit utility: ASC minus the weighted path attributes (times in minutes,
/// fare in dollars, transfer count). `None` means transit cannot serve the
/// trip at all.
pub fn transit_utility(attrs: Option<&PathAttrs>, betas: &Betas) -> f64 {
    let Some(a) = attrs else {
        return f64::NEG_INFINITY;
    };
    betas.t0
        - (betas.t_wk * a.walk_min
            + betas.m_wt * a.micro_wait_min
            + betas.f_wt * a.frt_wait_min
            + betas.m_ivt * a.micro_ivt_min
            + betas.f_ivt * a.frt_ivt_min
            + betas.t_fr * a.fare_usd
            + betas.f_trfr * a.transfers as f64)
}

/// Auto utility: ASC minus weighted in-vehicle time and fuel cost.
pub fn auto_utility(attrs: Option<&AutoAttrs>, betas: &Betas) -> f64 {
    let Some(a) = attrs else {
        return f64::NEG_INFINITY;
    };
    betas.c0 - (betas.c_ivt * a.ivt_min + betas.c_gas * a.gas_usd)
}

/// Binary logit share of transit, computed with the max subtracted before
/// exponentiation so large-magnitude utilities cannot overflow. Exactly one
/// infinite utility forces 0 or 1; both infinite is an error (no viable mode).
pub fn choice_probability(v_transit: f64, v_auto: f64) -> Result<f64> {
    if v_transit == f64::NEG_INFINITY && v_auto == f64::NEG_INFINITY {
        return Err(Error::invalid("no viable mode: both utilities are -inf"));
    }
    let m = v_transit.max(v_auto);
    let et = (v_transit - m).exp();
    let ea = (v_auto - m).exp();
    Ok(et / (et + ea))
}

/// One threshold-gated assignment step. The traveler re-draws when they have
/// no mode yet or when `new_prob` moved more than `eta` from the last update;
/// otherwise the previous mode is kept and no randomness is consumed. Either
/// way the stored probabilities shift: prev <- current <- new.
pub fn assign_mode(
    state: &mut ModeChoiceState,
    new_prob: f64,
    eta: f64,
    rng: &mut impl Rng,
) -> Mode {
    debug_assert!((0.0..=1.0).contains(&new_prob) && eta >= 0.0);
    let must_draw = match state.chosen {
        None => true,
        Some(_) => (new_prob - state.prob_transit).abs() > eta,
    };
    state.prob_transit_prev = state.prob_transit;
    state.prob_transit = new_prob;
    if must_draw {
        let u: f64 = rng.random();
        state.chosen = Some(if u < new_prob { Mode::Transit } else { Mode::Auto });
        state.draw_count += 1;
    }
    state.chosen.expect("assigned above or retained")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::RngCore;

    /// Emits one fixed u64 forever; `random::<f64>()` maps it to
    /// `(v >> 11) / 2^53`.
    struct FixedRng(u64);
    impl RngCore for FixedRng {
        fn next_u32(&mut self) -> u32 {
            self.0 as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0);
        }
    }

    fn fixed_uniform(u: f64) -> FixedRng {
        FixedRng(((u * (1u64 << 53) as f64) as u64) << 11)
    }

    fn means() -> Betas {
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

    fn attrs(frt_wait: f64, frt_ivt: f64, fare: f64) -> PathAttrs {
        let mut a = PathAttrs {
            walk_min: 0.0,
            micro_wait_min: 0.0,
            frt_wait_min: frt_wait,
            micro_ivt_min: 0.0,
            frt_ivt_min: frt_ivt,
            fare_usd: fare,
            transfers: 0,
            micro_mi: 0.0,
            total_time_s: 0.0,
            gen_cost: 0.0,
            legs: Vec::new(),
        };
        a.total_time_s = (frt_wait + frt_ivt) * 60.0;
        a
    }

    #[test]
    fn zero_attributes_leave_the_asc() {
        let v = transit_utility(Some(&attrs(0.0, 0.0, 0.0)), &means());
        assert_eq!(v, 0.022);
        let a = AutoAttrs {
            ivt_min: 0.0,
            gas_usd: 0.0,
            dist_mi: 0.0,
            time_s: 0.0,
            gen_cost: 0.0,
        };
        assert_eq!(auto_utility(Some(&a), &means()), 0.0);
    }

    #[test]
    fn hand_evaluated_utilities_and_probability() {
        // 7.5 min wait, 10 min ride, $2.50 fare at the San Diego means
        let v_t = transit_utility(Some(&attrs(7.5, 10.0, 2.5)), &means());
        let expect_t = 0.022 - (0.069 * 7.5 + 0.102 * 10.0 + 0.554 * 2.5);
        assert!((v_t - expect_t).abs() < 1e-12);
        assert!((v_t - -2.9005).abs() < 1e-12);

        let auto = AutoAttrs {
            ivt_min: 10.0,
            gas_usd: 1.0,
            dist_mi: 0.0,
            time_s: 600.0,
            gen_cost: 0.0,
        };
        let v_d = auto_utility(Some(&auto), &means());
        assert!((v_d - -2.834).abs() < 1e-12);

        let p = choice_probability(v_t, v_d).unwrap();
        let closed_form = 1.0 / (1.0 + (v_d - v_t).exp());
        assert!((p - closed_form).abs() < 1e-15);
        assert!((p - 0.4834).abs() < 5e-5, "{p}");
    }

    #[test]
    fn analytically_forced_probabilities() {
        assert_eq!(choice_probability(1.7, 1.7).unwrap(), 0.5);
        let p = choice_probability(0.0, 3f64.ln()).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sentinels_force_the_viable_mode() {
        assert_eq!(transit_utility(None, &means()), f64::NEG_INFINITY);
        assert_eq!(auto_utility(None, &means()), f64::NEG_INFINITY);
        assert_eq!(choice_probability(f64::NEG_INFINITY, -1.0).unwrap(), 0.0);
        assert_eq!(choice_probability(-1.0, f64::NEG_INFINITY).unwrap(), 1.0);
        assert!(choice_probability(f64::NEG_INFINITY, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn translation_and_monotonicity_hold() {
        let mut r = rng::stream(99, "logit", 0);
        for _ in 0..500 {
            // keep |vt - vd| well under logistic saturation so strict
            // monotonicity is visible in f64
            let vt: f64 = r.random_range(-15.0..15.0);
            let vd: f64 = r.random_range(-15.0..15.0);
            let c: f64 = r.random_range(-100.0..100.0);
            let p = choice_probability(vt, vd).unwrap();
            let q = choice_probability(vt + c, vd + c).unwrap();
            assert!((p - q).abs() < 1e-12);
            let up = choice_probability(vt + 0.1, vd).unwrap();
            let down = choice_probability(vt, vd + 0.1).unwrap();
            assert!(up > p && down < p);
            let comp = choice_probability(vd, vt).unwrap();
            assert!((p + comp - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_utilities_stay_finite() {
        let p = choice_probability(-800.0, -801.0).unwrap();
        assert!(p.is_finite() && p > 0.5);
        let q = choice_probability(700.0, 698.0).unwrap();
        assert!(q.is_finite() && q > 0.5);
    }

    #[test]
    fn small_probability_shift_keeps_prior_mode_without_a_draw() {
        let mut s = ModeChoiceState::new(0);
        let mut first = fixed_uniform(0.9); // 0.9 >= 0.5 -> Auto on iteration 1
        assign_mode(&mut s, 0.50, 0.05, &mut first);
        assert_eq!(s.chosen, Some(Mode::Auto));
        assert_eq!(s.draw_count, 1);

        // 0.50 -> 0.52 is inside the threshold: mode sticks, stream untouched
        let mut tempting = fixed_uniform(0.01); // would flip to Transit if drawn
        assign_mode(&mut s, 0.52, 0.05, &mut tempting);
        assert_eq!(s.chosen, Some(Mode::Auto));
        assert_eq!(s.draw_count, 1);
        assert_eq!(s.prob_transit_prev, 0.50);
        assert_eq!(s.prob_transit, 0.52);
    }

    #[test]
    fn threshold_crossing_draws_and_can_flip() {
        let mut s = ModeChoiceState::new(0);
        assign_mode(&mut s, 0.50, 0.05, &mut fixed_uniform(0.9));
        assert_eq!(s.chosen, Some(Mode::Auto));
        // 0.50 -> 0.60 exceeds eta; u = 0.55 < 0.60 -> Transit
        let m = assign_mode(&mut s, 0.60, 0.05, &mut fixed_uniform(0.55));
        assert_eq!(m, Mode::Transit);
        assert_eq!(s.draw_count, 2);
    }

    #[test]
    fn boundary_shift_equal_to_eta_does_not_draw() {
        // dyadic values so the boundary comparison is exact in f64
        let mut s = ModeChoiceState::new(0);
        assign_mode(&mut s, 0.5, 0.0625, &mut fixed_uniform(0.9));
        // |0.5625 - 0.5| == eta exactly -> retain
        assign_mode(&mut s, 0.5625, 0.0625, &mut fixed_uniform(0.0));
        assert_eq!(s.draw_count, 1);
        assert_eq!(s.chosen, Some(Mode::Auto));
    }

    #[test]
    fn unit_threshold_freezes_modes_after_the_first_draw() {
        let mut s = ModeChoiceState::new(0);
        let mut r = rng::stream(4, "freeze", 0);
        let first = assign_mode(&mut s, 0.5, 1.0, &mut r);
        for p in [0.0, 1.0, 0.3, 0.99] {
            assert_eq!(assign_mode(&mut s, p, 1.0, &mut r), first);
        }
        assert_eq!(s.draw_count, 1);
    }
}

//! Per-act and per-year transmission probability composition.
//!
//! The per-act probability is the tabulated base for the source's pricing
//! window and the act type, multiplied by the source's treatment-induced
//! infectivity reduction, the scenario risk-behavior factor, and the safety
//! agreement factor, clamped to [0, 1]. A year's acts compose as
//! independent Bernoulli trials.

use serde::{Deserialize, Serialize};

use crate::netgen::EdgeTag;

/// Which row of the per-act table prices an act: the three-month primary
/// infection window, or AP-level infectiousness (which also covers the
/// remainder of the first infection year).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageWindow {
    PiWindow,
    ApLevel,
}

/// Act type from the susceptible partner's side: receptive (URAI) or
/// insertive (UIAI).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActType {
    Receptive,
    Insertive,
}

/// Per-act transmission probability table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerActBase {
    pub pi_urai: f64,
    pub pi_uiai: f64,
    pub ap_urai: f64,
    pub ap_uiai: f64,
}

impl Default for PerActBase {
    fn default() -> Self {
        PerActBase {
            pi_urai: 0.22,
            pi_uiai: 0.044,
            ap_urai: 0.011,
            ap_uiai: 0.0022,
        }
    }
}

impl PerActBase {
    pub fn probability(&self, window: StageWindow, act: ActType) -> f64 {
        match (window, act) {
            (StageWindow::PiWindow, ActType::Receptive) => self.pi_urai,
            (StageWindow::PiWindow, ActType::Insertive) => self.pi_uiai,
            (StageWindow::ApLevel, ActType::Receptive) => self.ap_urai,
            (StageWindow::ApLevel, ActType::Insertive) => self.ap_uiai,
        }
    }
}

/// Compose one act's transmission probability from its base and the
/// multiplicative coefficients. Clamped to [0, 1], so coefficient products
/// above unity cannot produce an invalid probability.
pub fn per_act_probability(
    base: f64,
    infectivity_reduction: f64,
    risk: f64,
    agreement: f64,
) -> f64 {
    debug_assert!((0.0..=1.0).contains(&base));
    debug_assert!(infectivity_reduction > 0.0 && infectivity_reduction <= 1.0);
    debug_assert!(risk > 0.0);
    debug_assert!(agreement > 0.0 && agreement <= 1.0);
    (base * infectivity_reduction * risk * agreement).clamp(0.0, 1.0)
}

/// Probability that at least one of a year's independent acts transmits:
/// `1 - prod(1 - p_i)`.
pub fn per_year_probability(acts: &[f64]) -> f64 {
    let survive: f64 = acts.iter().map(|&p| 1.0 - p).product();
    1.0 - survive
}

/// Safety-agreement reduction: applies only to casual acts when at least
/// one member of the pair currently has a steady partner.
pub fn agreement_factor(
    tag: EdgeTag,
    source_partnered: bool,
    susceptible_partnered: bool,
    factor: f64,
) -> f64 {
    if tag == EdgeTag::Casual && (source_partnered || susceptible_partnered) {
        factor
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastics::RngStream;
    use proptest::prelude::*;

    #[test]
    fn reference_scenario_ap_urai_act() {
        let p = per_act_probability(0.011, 1.0, 1.30, 1.0);
        assert!((p - 0.0143).abs() < 1e-12, "p {p}");
    }

    #[test]
    fn zero_base_stays_zero() {
        assert_eq!(per_act_probability(0.0, 0.5, 1.69, 0.84), 0.0);
    }

    #[test]
    fn prediction_scenario_pi_act_composes_all_coefficients() {
        // 0.22 * 0.05 * 1.69 * 0.84 computed by hand.
        let p = per_act_probability(0.22, 0.05, 1.69, 0.84);
        assert!((p - 0.0156156).abs() < 1e-10, "p {p}");
    }

    #[test]
    fn coefficients_cannot_push_probability_past_one() {
        let p = per_act_probability(0.9, 1.0, 5.0, 1.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn empty_act_list_cannot_transmit() {
        assert_eq!(per_year_probability(&[]), 0.0);
    }

    #[test]
    fn single_act_is_identity() {
        assert_eq!(per_year_probability(&[0.37]), 0.37);
    }

    #[test]
    fn thirty_reference_acts_match_the_closed_form() {
        let acts = vec![0.0143; 30];
        let p = per_year_probability(&acts);
        assert!((p - 0.3509).abs() < 2e-4, "p {p}");
    }

    #[test]
    fn per_year_matches_bernoulli_monte_carlo() {
        // Independent-acts oracle: simulate each act as a coin flip.
        let acts = [0.0143, 0.22, 0.0022, 0.05, 0.011];
        let closed = per_year_probability(&acts);
        let mut rng = RngStream::new(0xac7, 0);
        let trials = 1_000_000u32;
        let mut hits = 0u32;
        for _ in 0..trials {
            let infected = acts.iter().any(|&p| rand::Rng::random::<f64>(&mut rng) < p);
            if infected {
                hits += 1;
            }
        }
        let empirical = hits as f64 / trials as f64;
        let se = (closed * (1.0 - closed) / trials as f64).sqrt();
        assert!(
            (empirical - closed).abs() < 3.0 * se,
            "closed {closed} empirical {empirical}"
        );
    }

    #[test]
    fn agreement_applies_only_to_casual_edges_of_partnered_men() {
        assert_eq!(agreement_factor(EdgeTag::Steady, true, true, 0.84), 1.0);
        assert_eq!(agreement_factor(EdgeTag::Casual, false, false, 0.84), 1.0);
        assert_eq!(agreement_factor(EdgeTag::Casual, true, false, 0.84), 0.84);
        assert_eq!(agreement_factor(EdgeTag::Casual, false, true, 0.84), 0.84);
    }

    #[test]
    fn pi_window_acts_dominate_ap_acts() {
        let base = PerActBase::default();
        for act in [ActType::Receptive, ActType::Insertive] {
            let pi = base.probability(StageWindow::PiWindow, act);
            let ap = base.probability(StageWindow::ApLevel, act);
            assert!(pi > ap);
        }
    }

    proptest! {
        #[test]
        fn per_act_is_monotone_and_in_unit_interval(
            base in 0.0..=1.0f64,
            red in 0.001..=1.0f64,
            risk in 0.001..=3.0f64,
            agr in 0.001..=1.0f64,
            bump in 1.0..=2.0f64,
        ) {
            let p = per_act_probability(base, red, risk, agr);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(per_act_probability(base, red, risk * bump, agr) >= p);
            prop_assert!(per_act_probability(base, (red * bump).min(1.0), risk, agr) >= p);
        }

        #[test]
        fn per_year_bounds_and_permutation_invariance(
            mut acts in proptest::collection::vec(0.0..=1.0f64, 0..40)
        ) {
            let p = per_year_probability(&acts);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
            let max = acts.iter().cloned().fold(0.0f64, f64::max);
            prop_assert!(p >= max - 1e-12);
            acts.reverse();
            let q = per_year_probability(&acts);
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}

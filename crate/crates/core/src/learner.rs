//! Online learners over a fixed ensemble of candidate systems.
//!
//! Two algorithms share one contract: from the current weights they expose a
//! selection distribution, and they fold observed losses back into the
//! weights.
//!
//! - [`Ewaf`] (exponentially weighted average forecaster) sees the loss of
//!   every system each round and multiplies every weight by `exp(-eta * loss)`.
//! - [`Exp3`] sees only the loss of the system it selected and applies the
//!   importance-weighted estimate `loss / prob` to that single weight.
//!
//! Weights are stored in the log domain so that arbitrarily long replays and
//! large `eta * loss` magnitudes cannot overflow; the probability view is
//! computed with a max-shifted normalization.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};

/// Which online learning algorithm drives an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Full information: every system's loss is observed each round.
    Ewaf,
    /// Bandit feedback: only the selected system's loss is observed.
    Exp3,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Ewaf => "ewaf",
            Algorithm::Exp3 => "exp3",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ewaf" => Ok(Algorithm::Ewaf),
            "exp3" => Ok(Algorithm::Exp3),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected `ewaf` or `exp3`)"
            ))),
        }
    }
}

/// Learning rate: an explicit value or the horizon-based formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaChoice {
    /// `sqrt(8 ln J / T)` for EWAF, `sqrt(2 ln J / (T |A|))` for EXP3.
    Auto,
    Explicit(f64),
}

/// Parameters shared by both learners.
#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Ensemble size J.
    pub num_systems: usize,
    /// Horizon T used by the auto learning rate.
    pub horizon: usize,
    pub eta: EtaChoice,
    /// Action-set size |A| for EXP3's auto rate; defaults to J when absent.
    pub action_set_size: Option<usize>,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_systems == 0 {
            return Err(Error::Contract("num_systems must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Contract("horizon must be >= 1".into()));
        }
        if let EtaChoice::Explicit(eta) = self.eta {
            if !eta.is_finite() || eta <= 0.0 {
                return Err(Error::Contract(format!(
                    "explicit eta must be a positive finite number, got {eta}"
                )));
            }
        }
        if self.action_set_size == Some(0) {
            return Err(Error::Contract("action_set_size must be >= 1".into()));
        }
        Ok(())
    }

    /// |A| with the default of one action per system.
    pub fn action_set_size(&self) -> usize {
        self.action_set_size.unwrap_or(self.num_systems)
    }

    /// The learning rate this configuration resolves to.
    pub fn resolved_eta(&self) -> Result<f64> {
        self.validate()?;
        match self.eta {
            EtaChoice::Explicit(eta) => Ok(eta),
            EtaChoice::Auto => auto_eta(
                self.algorithm,
                self.num_systems,
                self.horizon,
                self.action_set_size(),
            ),
        }
    }
}

/// Horizon-based learning rate.
///
/// EWAF uses `sqrt(8 ln J / T)`; EXP3 uses `sqrt(2 ln J / (T |A|))`.
/// Requires `J >= 2` since `ln J` degenerates otherwise.
pub fn auto_eta(
    algorithm: Algorithm,
    num_systems: usize,
    horizon: usize,
    action_set_size: usize,
) -> Result<f64> {
    if num_systems < 2 {
        return Err(Error::Contract(format!(
            "auto eta needs at least 2 systems (ln J degenerates), got {num_systems}"
        )));
    }
    if horizon == 0 {
        return Err(Error::Contract("auto eta needs horizon >= 1".into()));
    }
    let ln_j = (num_systems as f64).ln();
    match algorithm {
        Algorithm::Ewaf => Ok((8.0 * ln_j / horizon as f64).sqrt()),
        Algorithm::Exp3 => {
            if action_set_size == 0 {
                return Err(Error::Contract(
                    "auto eta needs action_set_size >= 1".into(),
                ));
            }
            Ok((2.0 * ln_j / (horizon as f64 * action_set_size as f64)).sqrt())
        }
    }
}

/// `log(sum(exp(xs)))` with max shifting.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Per-system weights in the log domain plus the round counter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    log_weights: Vec<f64>,
    iteration: u64,
}

impl WeightState {
    /// All systems start with the same weight (log weight 0, i.e. weight 1).
    pub fn uniform(num_systems: usize) -> Result<Self> {
        if num_systems == 0 {
            return Err(Error::Contract(
                "a weight state needs at least 1 system".into(),
            ));
        }
        Ok(WeightState {
            log_weights: vec![0.0; num_systems],
            iteration: 0,
        })
    }

    pub fn num_systems(&self) -> usize {
        self.log_weights.len()
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Normalized probability view: `p_j = exp(lw_j - logsumexp(lw))`.
    pub fn probabilities(&self) -> Vec<f64> {
        let lse = logsumexp(&self.log_weights);
        self.log_weights.iter().map(|lw| (lw - lse).exp()).collect()
    }

    fn check_finite(&self) -> Result<()> {
        if self.log_weights.iter().any(|lw| !lw.is_finite()) {
            return Err(Error::Contract(
                "log weights left the finite range; eta * loss is too large".into(),
            ));
        }
        Ok(())
    }
}

/// One round of losses, one entry per system.
///
/// `observed` marks which entries carry a real observation rather than a
/// fallback value; it does not affect the update itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    values: Vec<f64>,
    observed: Vec<bool>,
}

impl LossVector {
    pub fn new(values: Vec<f64>, observed: Vec<bool>) -> Result<Self> {
        if values.len() != observed.len() {
            return Err(Error::Contract(format!(
                "loss values ({}) and observed mask ({}) lengths differ",
                values.len(),
                observed.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("loss values must be finite".into()));
        }
        Ok(LossVector { values, observed })
    }

    /// A vector where every entry counts as observed.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let observed = vec![true; values.len()];
        Self::new(values, observed)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sample an index from a probability vector with one uniform draw.
///
/// Falls back to the last positive-mass index if rounding keeps the
/// cumulative sum below the draw.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    debug_assert!(!probs.is_empty());
    let draw: f64 = rng.random();
    let mut cumulative = 0.0;
    for (index, p) in probs.iter().enumerate() {
        cumulative += p;
        if draw < cumulative {
            return index;
        }
    }
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Exponentially weighted average forecaster (full information).
#[derive(Debug, Clone)]
pub struct Ewaf {
    state: WeightState,
    eta: f64,
}

impl Ewaf {
    pub fn new(num_systems: usize, eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::Contract(format!(
                "eta must be a positive finite number, got {eta}"
            )));
        }
        Ok(Ewaf {
            state: WeightState::uniform(num_systems)?,
            eta,
        })
    }

    pub fn from_config(config: &LearnerConfig) -> Result<Self> {
        Self::new(config.num_systems, config.resolved_eta()?)
    }

    /// The selection distribution implied by the current weights.
    pub fn distribution(&self) -> Vec<f64> {
        self.state.probabilities()
    }

    /// Sample a system from the current distribution.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.distribution(), rng)
    }

    /// Fold one round of full-information losses into every weight:
    /// `lw_j -= eta * loss_j`.
    pub fn update(&mut self, losses: &LossVector) -> Result<()> {
        if losses.len() != self.state.num_systems() {
            return Err(Error::Contract(format!(
                "loss vector has {} entries but the learner tracks {} systems",
                losses.len(),
                self.state.num_systems()
            )));
        }
        for (lw, loss) in self.state.log_weights.iter_mut().zip(losses.values()) {
            *lw -= self.eta * loss;
        }
        self.state.check_finite()?;
        self.state.iteration += 1;
        Ok(())
    }

    pub fn state(&self) -> &WeightState {
        &self.state
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Exponential weighting for exploration and exploitation (bandit feedback).
#[derive(Debug, Clone)]
pub struct Exp3 {
    state: WeightState,
    eta: f64,
}

impl Exp3 {
    pub fn new(num_systems: usize, eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::Contract(format!(
                "eta must be a positive finite number, got {eta}"
            )));
        }
        Ok(Exp3 {
            state: WeightState::uniform(num_systems)?,
            eta,
        })
    }

    pub fn from_config(config: &LearnerConfig) -> Result<Self> {
        Self::new(config.num_systems, config.resolved_eta()?)
    }

    pub fn distribution(&self) -> Vec<f64> {
        self.state.probabilities()
    }

    /// Sample an arm and return it together with the probability it was
    /// drawn with, which the importance-weighted update needs back.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let probs = self.distribution();
        let arm = sample_index(&probs, rng);
        (arm, probs[arm])
    }

    /// Apply the importance-weighted loss `loss / prob` to the selected arm
    /// only: `lw_arm -= eta * loss / prob`. All other weights are untouched.
    pub fn update(&mut self, arm: usize, loss: f64, prob: f64) -> Result<()> {
        if arm >= self.state.num_systems() {
            return Err(Error::Contract(format!(
                "arm {arm} out of range for {} systems",
                self.state.num_systems()
            )));
        }
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(Error::Contract(format!(
                "selection probability must lie in (0, 1], got {prob}"
            )));
        }
        if !loss.is_finite() {
            return Err(Error::Contract(format!("loss must be finite, got {loss}")));
        }
        self.state.log_weights[arm] -= self.eta * (loss / prob);
        self.state.check_finite()?;
        self.state.iteration += 1;
        Ok(())
    }

    pub fn state(&self) -> &WeightState {
        &self.state
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
            assert!((a - e).abs() <= tol, "entry {i}: {a} vs {e} (tol {tol})");
        }
    }

    #[test]
    fn uniform_weights_give_uniform_distribution() {
        let state = WeightState::uniform(3).unwrap();
        assert_close(&state.probabilities(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn weights_one_one_two_normalize_to_quarter_quarter_half() {
        let mut state = WeightState::uniform(3).unwrap();
        state.log_weights[2] = 2.0f64.ln();
        assert_close(&state.probabilities(), &[0.25, 0.25, 0.5], 1e-12);
    }

    #[test]
    fn log_weights_zero_and_minus_half_normalize() {
        let mut state = WeightState::uniform(2).unwrap();
        state.log_weights[1] = -0.5;
        // e^0 / (e^0 + e^-0.5) = 0.6224593312018546
        assert_close(
            &state.probabilities(),
            &[0.6224593312018546, 0.3775406687981454],
            1e-4,
        );
    }

    #[test]
    fn ewaf_update_applies_exponential_decay() {
        let mut learner = Ewaf::new(2, 0.5).unwrap();
        learner
            .update(&LossVector::from_values(vec![0.0, 1.0]).unwrap())
            .unwrap();
        // Weights proportional to (1, e^-0.5) = (1, 0.6065306597126334).
        let expected_p0 = 1.0 / (1.0 + 0.6065306597126334);
        assert_close(
            &learner.distribution(),
            &[expected_p0, 1.0 - expected_p0],
            1e-12,
        );
        assert_eq!(learner.state().iteration(), 1);
    }

    #[test]
    fn ewaf_equal_losses_leave_distribution_unchanged() {
        let mut learner = Ewaf::new(4, 0.3).unwrap();
        learner
            .update(&LossVector::from_values(vec![0.1, 0.9, 0.4, 0.7]).unwrap())
            .unwrap();
        let before = learner.distribution();
        learner
            .update(&LossVector::from_values(vec![0.6; 4]).unwrap())
            .unwrap();
        assert_close(&learner.distribution(), &before, 1e-12);
    }

    #[test]
    fn ewaf_accumulates_losses_in_closed_form() {
        let mut learner = Ewaf::new(3, 0.1).unwrap();
        learner
            .update(&LossVector::from_values(vec![0.2, 0.5, 0.9]).unwrap())
            .unwrap();
        learner
            .update(&LossVector::from_values(vec![0.4, 0.1, 0.0]).unwrap())
            .unwrap();
        // softmax(-0.1 * (0.6, 0.6, 0.9))
        assert_close(
            &learner.distribution(),
            &[
                0.33664983542229615,
                0.33664983542229615,
                0.32670032915540764,
            ],
            1e-9,
        );
    }

    #[test]
    fn ewaf_rejects_dimension_mismatch() {
        let mut learner = Ewaf::new(3, 0.5).unwrap();
        let err = learner
            .update(&LossVector::from_values(vec![0.0, 1.0]).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn exp3_select_reports_probability_of_chosen_arm() {
        let mut learner = Exp3::new(3, 0.5).unwrap();
        learner.state.log_weights[2] = 2.0f64.ln();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (arm, prob) = learner.select(&mut rng);
            let expected = [0.25, 0.25, 0.5][arm];
            assert!((prob - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn exp3_selection_is_deterministic_per_seed() {
        let learner = Exp3::new(5, 0.2).unwrap();
        let draws = |seed: u64| -> Vec<usize> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| learner.select(&mut rng).0).collect()
        };
        assert_eq!(draws(42), draws(42));
    }

    #[test]
    fn exp3_update_touches_only_the_selected_arm() {
        let mut learner = Exp3::new(4, 0.7).unwrap();
        learner.update(2, 0.5, 0.25).unwrap();
        let before: Vec<u64> = learner
            .state()
            .log_weights()
            .iter()
            .map(|lw| lw.to_bits())
            .collect();
        learner.update(1, 0.9, 0.3).unwrap();
        let after: Vec<u64> = learner
            .state()
            .log_weights()
            .iter()
            .map(|lw| lw.to_bits())
            .collect();
        for j in [0, 2, 3] {
            assert_eq!(before[j], after[j], "arm {j} must be bit-identical");
        }
        assert_ne!(before[1], after[1]);
    }

    #[test]
    fn exp3_zero_loss_leaves_weights_bit_identical() {
        let mut learner = Exp3::new(3, 1.5).unwrap();
        let before: Vec<u64> = learner
            .state()
            .log_weights()
            .iter()
            .map(|lw| lw.to_bits())
            .collect();
        learner.update(1, 0.0, 0.5).unwrap();
        let after: Vec<u64> = learner
            .state()
            .log_weights()
            .iter()
            .map(|lw| lw.to_bits())
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn exp3_negative_loss_boosts_the_selected_arm() {
        // Importance-weighted loss -0.5 / 0.5 = -1; with eta = 1 the log
        // weight rises by exactly 1, so weights become (e, 1).
        let mut learner = Exp3::new(2, 1.0).unwrap();
        learner.update(0, -0.5, 0.5).unwrap();
        assert_close(
            &learner.distribution(),
            &[0.7310585786300049, 0.2689414213699951],
            1e-12,
        );
    }

    #[test]
    fn exp3_rejects_nonpositive_probability() {
        let mut learner = Exp3::new(2, 1.0).unwrap();
        assert!(matches!(
            learner.update(0, 0.5, 0.0),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            learner.update(0, 0.5, -0.2),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn auto_eta_matches_formulas() {
        let ewaf = auto_eta(Algorithm::Ewaf, 10, 1000, 10).unwrap();
        assert!((ewaf - 0.13572280848830223).abs() < 1e-12);
        let exp3 = auto_eta(Algorithm::Exp3, 10, 1000, 10).unwrap();
        assert!((exp3 - 0.021459660262893473).abs() < 1e-12);
    }

    #[test]
    fn auto_eta_rejects_single_system() {
        assert!(matches!(
            auto_eta(Algorithm::Ewaf, 1, 100, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn config_defaults_action_set_size_to_num_systems() {
        let config = LearnerConfig {
            algorithm: Algorithm::Exp3,
            num_systems: 7,
            horizon: 500,
            eta: EtaChoice::Auto,
            action_set_size: None,
        };
        assert_eq!(config.action_set_size(), 7);
        let expected = auto_eta(Algorithm::Exp3, 7, 500, 7).unwrap();
        assert_eq!(config.resolved_eta().unwrap(), expected);
    }

    #[test]
    fn normalization_survives_large_log_weight_spreads() {
        let mut state = WeightState::uniform(3).unwrap();
        state.log_weights = vec![0.0, -1.0e4, 1.0e4];
        let probs = state.probabilities();
        assert!(probs.iter().all(|p| p.is_finite()));
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(probs[2] > 0.99);
    }

    proptest! {
        /// Replaying any loss sequence from uniform weights must land on
        /// softmax(-eta * total_loss), the closed form of the update rule.
        #[test]
        fn ewaf_matches_closed_form_oracle(
            num_systems in 2usize..=5,
            rounds in 1usize..=50,
            eta in 0.01f64..1.0,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut learner = Ewaf::new(num_systems, eta).unwrap();
            let mut totals = vec![0.0f64; num_systems];
            for _ in 0..rounds {
                let losses: Vec<f64> =
                    (0..num_systems).map(|_| rng.random_range(-1.0..1.0)).collect();
                for (t, l) in totals.iter_mut().zip(&losses) {
                    *t += l;
                }
                learner.update(&LossVector::from_values(losses).unwrap()).unwrap();
            }
            // Independent route: plain exp / sum, no log-domain tricks.
            let raw: Vec<f64> = totals.iter().map(|t| (-eta * t).exp()).collect();
            let sum: f64 = raw.iter().sum();
            let dist = learner.distribution();
            for (p, r) in dist.iter().zip(&raw) {
                prop_assert!((p - r / sum).abs() < 1e-9);
            }
        }

        /// Adding a per-round constant to every system's loss must not move
        /// the normalized distribution.
        #[test]
        fn ewaf_is_shift_invariant(
            num_systems in 2usize..=5,
            rounds in 1usize..=50,
            eta in 0.01f64..1.0,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut plain = Ewaf::new(num_systems, eta).unwrap();
            let mut shifted = Ewaf::new(num_systems, eta).unwrap();
            for _ in 0..rounds {
                let losses: Vec<f64> =
                    (0..num_systems).map(|_| rng.random_range(0.0..1.0)).collect();
                let shift: f64 = rng.random_range(-1.0..1.0);
                let moved: Vec<f64> = losses.iter().map(|l| l + shift).collect();
                plain.update(&LossVector::from_values(losses).unwrap()).unwrap();
                shifted.update(&LossVector::from_values(moved).unwrap()).unwrap();
                for (a, b) in plain.distribution().iter().zip(shifted.distribution()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        /// The probability view is a valid distribution after any updates.
        #[test]
        fn probabilities_sum_to_one_and_stay_positive(
            num_systems in 2usize..=6,
            rounds in 0usize..=100,
            eta in 0.01f64..2.0,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut learner = Ewaf::new(num_systems, eta).unwrap();
            for _ in 0..rounds {
                let losses: Vec<f64> =
                    (0..num_systems).map(|_| rng.random_range(-1.0..1.0)).collect();
                learner.update(&LossVector::from_values(losses).unwrap()).unwrap();
            }
            let probs = learner.distribution();
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for p in &probs {
                prop_assert!(*p > 0.0 && p.is_finite());
            }
        }
    }
}

//! Turns raw dataset cells into per-iteration scores and losses.
//!
//! Scores travel through one pipeline regardless of origin: normalize the
//! raw [0, 100] value to [0, 1], round to exactly two decimal places (halves
//! up), then flip into a loss. Rounding runs on integer hundredths so the
//! half-up rule is exact rather than subject to binary float drift.

use crate::dataset::ScoreRecord;
use crate::error::{Error, Result};

/// Where a resolved score came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSource {
    Human,
    FallbackZero,
    FallbackRunningAvg,
    FallbackPrecomputed,
}

/// A per-cell score after normalization, rounding, and fallback handling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreResolution {
    /// Score in [0, 1], an exact multiple of 0.01.
    pub score: f64,
    pub source: ScoreSource,
}

/// What to do when a cell carries no assessment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackStrategy {
    /// Score zero; under the negated-score loss the weight stays put.
    HumanZero,
    /// Running average of the system's previous human scores; zero before
    /// the first one.
    HumanAvg,
    /// The precomputed surrogate score stored in the dataset.
    HumanComet,
}

impl FallbackStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            FallbackStrategy::HumanZero => "human-zero",
            FallbackStrategy::HumanAvg => "human-avg",
            FallbackStrategy::HumanComet => "human-comet",
        }
    }
}

impl std::str::FromStr for FallbackStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "human-zero" => Ok(FallbackStrategy::HumanZero),
            "human-avg" => Ok(FallbackStrategy::HumanAvg),
            "human-comet" => Ok(FallbackStrategy::HumanComet),
            other => Err(Error::Config(format!(
                "unknown loss strategy `{other}` (expected `human-zero`, `human-avg`, or `human-comet`)"
            ))),
        }
    }
}

/// How a score in [0, 1] becomes a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossConvention {
    /// `loss = -score`, losses in [-1, 0].
    NegScore,
    /// `loss = 1 - score`, losses in [0, 1].
    OneMinusScore,
}

impl LossConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossConvention::NegScore => "neg-score",
            LossConvention::OneMinusScore => "one-minus-score",
        }
    }
}

impl std::str::FromStr for LossConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "neg-score" => Ok(LossConvention::NegScore),
            "one-minus-score" => Ok(LossConvention::OneMinusScore),
            other => Err(Error::Config(format!(
                "unknown loss convention `{other}` (expected `neg-score` or `one-minus-score`)"
            ))),
        }
    }
}

/// Round a raw [0, 100] value to integer hundredths of the unit scale,
/// halves up. `93.0 -> 93`, `77.415 -> 77`, `77.5 -> 78`.
fn centi_from_raw(raw: f64) -> Result<u32> {
    if !raw.is_finite() || !(0.0..=100.0).contains(&raw) {
        return Err(Error::Data(format!(
            "raw score {raw} out of range [0, 100]"
        )));
    }
    Ok((raw + 0.5).floor() as u32)
}

fn centi_to_unit(centi: u32) -> f64 {
    centi as f64 / 100.0
}

/// Normalize a raw [0, 100] score to [0, 1] rounded to two decimals, halves up.
pub fn normalize_score(raw: f64) -> Result<f64> {
    Ok(centi_to_unit(centi_from_raw(raw)?))
}

/// Mean of one or more raw assessments, then normalized like a single score.
pub fn average_assessments(raw_scores: &[f64]) -> Result<f64> {
    if raw_scores.is_empty() {
        return Err(Error::Contract(
            "average_assessments needs at least one score; absence is the fallback path".into(),
        ));
    }
    for raw in raw_scores {
        if !raw.is_finite() || !(0.0..=100.0).contains(raw) {
            return Err(Error::Data(format!(
                "raw score {raw} out of range [0, 100]"
            )));
        }
    }
    let mean = raw_scores.iter().sum::<f64>() / raw_scores.len() as f64;
    normalize_score(mean)
}

/// Per-system memory of human-sourced scores, kept in integer hundredths so
/// the running average rounds exactly like every other score.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverageState {
    sum_centi: Vec<u64>,
    counts: Vec<u64>,
}

impl RunningAverageState {
    pub fn new(num_systems: usize) -> Self {
        RunningAverageState {
            sum_centi: vec![0; num_systems],
            counts: vec![0; num_systems],
        }
    }

    pub fn num_systems(&self) -> usize {
        self.counts.len()
    }

    /// Record a resolved human score (a multiple of 0.01) for a system.
    pub fn record(&mut self, system: usize, score: f64) {
        let centi = (score * 100.0).round() as u64;
        self.sum_centi[system] += centi;
        self.counts[system] += 1;
    }

    /// Half-up rounded average of recorded scores, if any were recorded.
    pub fn average(&self, system: usize) -> Option<f64> {
        let count = self.counts[system];
        if count == 0 {
            return None;
        }
        let centi = (2 * self.sum_centi[system] + count) / (2 * count);
        Some(centi as f64 / 100.0)
    }

    pub fn count(&self, system: usize) -> u64 {
        self.counts[system]
    }

    /// Human-score counts per system, in system order.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Resolve one cell into a score, applying the fallback strategy when no
/// assessment is present. Human scores are folded into `avg_state`.
pub fn resolve_score(
    record: &ScoreRecord,
    system: usize,
    strategy: FallbackStrategy,
    avg_state: &mut RunningAverageState,
) -> Result<ScoreResolution> {
    let context = |err: Error| match err {
        Error::Data(msg) => Error::Data(format!(
            "{msg} (segment `{}`, system `{}`)",
            record.segment_id, record.system_id
        )),
        other => other,
    };
    if record.has_human() {
        let score = average_assessments(&record.raw_scores).map_err(context)?;
        avg_state.record(system, score);
        return Ok(ScoreResolution {
            score,
            source: ScoreSource::Human,
        });
    }
    match strategy {
        FallbackStrategy::HumanZero => Ok(ScoreResolution {
            score: 0.0,
            source: ScoreSource::FallbackZero,
        }),
        FallbackStrategy::HumanAvg => match avg_state.average(system) {
            Some(score) => Ok(ScoreResolution {
                score,
                source: ScoreSource::FallbackRunningAvg,
            }),
            // Cold start: no human score seen yet, so this degenerates to
            // the zero fallback and is flagged as such in the provenance.
            None => Ok(ScoreResolution {
                score: 0.0,
                source: ScoreSource::FallbackZero,
            }),
        },
        FallbackStrategy::HumanComet => {
            let raw = record.fallback_score.ok_or_else(|| {
                Error::Data(format!(
                    "no fallback score for segment `{}` system `{}` under the human-comet strategy",
                    record.segment_id, record.system_id
                ))
            })?;
            let score = normalize_score(raw).map_err(context)?;
            Ok(ScoreResolution {
                score,
                source: ScoreSource::FallbackPrecomputed,
            })
        }
    }
}

/// Flip a resolved score into the loss fed to the learners.
pub fn score_to_loss(resolution: &ScoreResolution, convention: LossConvention) -> f64 {
    match convention {
        LossConvention::NegScore => -resolution.score,
        LossConvention::OneMinusScore => 1.0 - resolution.score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(raws: &[f64], fallback: Option<f64>) -> ScoreRecord {
        ScoreRecord {
            segment_id: "seg".into(),
            system_id: "sys".into(),
            raw_scores: raws.to_vec(),
            fallback_score: fallback,
        }
    }

    #[test]
    fn normalize_divides_by_hundred_and_rounds() {
        assert_eq!(normalize_score(93.0).unwrap(), 0.93);
        assert_eq!(normalize_score(0.0).unwrap(), 0.0);
        assert_eq!(normalize_score(100.0).unwrap(), 1.0);
        assert_eq!(normalize_score(77.415).unwrap(), 0.77);
        // Halves round up.
        assert_eq!(normalize_score(77.5).unwrap(), 0.78);
    }

    #[test]
    fn normalize_rejects_out_of_range() {
        assert!(matches!(normalize_score(120.0), Err(Error::Data(_))));
        assert!(matches!(normalize_score(-1.0), Err(Error::Data(_))));
    }

    #[test]
    fn averaging_runs_on_raw_scores_before_normalizing() {
        assert_eq!(average_assessments(&[80.0, 90.0]).unwrap(), 0.85);
        assert_eq!(average_assessments(&[93.0]).unwrap(), 0.93);
        // 71.666... rounds to 72 hundredths.
        assert_eq!(average_assessments(&[70.0, 71.0, 74.0]).unwrap(), 0.72);
    }

    #[test]
    fn averaging_rejects_empty_input() {
        assert!(matches!(average_assessments(&[]), Err(Error::Contract(_))));
    }

    #[test]
    fn human_score_wins_under_any_strategy() {
        for strategy in [
            FallbackStrategy::HumanZero,
            FallbackStrategy::HumanAvg,
            FallbackStrategy::HumanComet,
        ] {
            let mut avg = RunningAverageState::new(1);
            let res = resolve_score(&record(&[90.3], Some(10.0)), 0, strategy, &mut avg).unwrap();
            assert_eq!(res.score, 0.9);
            assert_eq!(res.source, ScoreSource::Human);
            assert_eq!(avg.count(0), 1);
        }
    }

    #[test]
    fn missing_cell_under_zero_strategy_scores_zero() {
        let mut avg = RunningAverageState::new(1);
        let res =
            resolve_score(&record(&[], None), 0, FallbackStrategy::HumanZero, &mut avg).unwrap();
        assert_eq!(res.score, 0.0);
        assert_eq!(res.source, ScoreSource::FallbackZero);
        assert_eq!(avg.count(0), 0);
    }

    #[test]
    fn running_average_covers_missing_cells() {
        let mut avg = RunningAverageState::new(1);
        resolve_score(
            &record(&[80.0], None),
            0,
            FallbackStrategy::HumanAvg,
            &mut avg,
        )
        .unwrap();
        resolve_score(
            &record(&[60.0], None),
            0,
            FallbackStrategy::HumanAvg,
            &mut avg,
        )
        .unwrap();
        let res =
            resolve_score(&record(&[], None), 0, FallbackStrategy::HumanAvg, &mut avg).unwrap();
        assert_eq!(res.score, 0.7);
        assert_eq!(res.source, ScoreSource::FallbackRunningAvg);
        // Fallback values never feed back into the average.
        assert_eq!(avg.count(0), 2);
    }

    #[test]
    fn running_average_rounds_halves_up_exactly() {
        let mut avg = RunningAverageState::new(1);
        avg.record(0, 0.70);
        avg.record(0, 0.71);
        // 0.705 must round to 0.71 despite binary float representation.
        assert_eq!(avg.average(0).unwrap(), 0.71);
    }

    #[test]
    fn running_average_cold_start_degenerates_to_zero() {
        let mut avg = RunningAverageState::new(1);
        let res =
            resolve_score(&record(&[], None), 0, FallbackStrategy::HumanAvg, &mut avg).unwrap();
        assert_eq!(res.score, 0.0);
        assert_eq!(res.source, ScoreSource::FallbackZero);
    }

    #[test]
    fn precomputed_strategy_reads_the_fallback_column() {
        let mut avg = RunningAverageState::new(1);
        let res = resolve_score(
            &record(&[], Some(64.0)),
            0,
            FallbackStrategy::HumanComet,
            &mut avg,
        )
        .unwrap();
        assert_eq!(res.score, 0.64);
        assert_eq!(res.source, ScoreSource::FallbackPrecomputed);
    }

    #[test]
    fn precomputed_strategy_without_fallback_is_a_data_error() {
        let mut avg = RunningAverageState::new(1);
        let err = resolve_score(
            &record(&[], None),
            0,
            FallbackStrategy::HumanComet,
            &mut avg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(err.to_string().contains("seg"));
        assert!(err.to_string().contains("sys"));
    }

    #[test]
    fn losses_follow_the_convention() {
        let res = ScoreResolution {
            score: 0.93,
            source: ScoreSource::Human,
        };
        assert_eq!(score_to_loss(&res, LossConvention::NegScore), -0.93);
        assert!((score_to_loss(&res, LossConvention::OneMinusScore) - 0.07).abs() < 1e-15);
        let zero = ScoreResolution {
            score: 0.0,
            source: ScoreSource::FallbackZero,
        };
        // Zero score means zero loss, so the weight stays put that round.
        assert_eq!(score_to_loss(&zero, LossConvention::NegScore), 0.0);
    }

    proptest! {
        /// Same cell, strategy, and average state always resolve identically.
        #[test]
        fn resolution_is_a_pure_function_of_its_inputs(
            raw in proptest::option::of(0.0f64..=100.0),
            fallback in proptest::option::of(0.0f64..=100.0),
            prior in proptest::collection::vec(0.0f64..=100.0, 0..5),
            strategy_pick in 0u8..3,
        ) {
            let strategy = match strategy_pick {
                0 => FallbackStrategy::HumanZero,
                1 => FallbackStrategy::HumanAvg,
                _ => FallbackStrategy::HumanComet,
            };
            let raws: Vec<f64> = raw.into_iter().collect();
            let cell = record(&raws, fallback);
            let mut avg_a = RunningAverageState::new(1);
            let mut avg_b = RunningAverageState::new(1);
            for p in &prior {
                avg_a.record(0, normalize_score(*p).unwrap());
                avg_b.record(0, normalize_score(*p).unwrap());
            }
            let a = resolve_score(&cell, 0, strategy, &mut avg_a);
            let b = resolve_score(&cell, 0, strategy, &mut avg_b);
            match (a, b) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x, y);
                    prop_assert!((0.0..=1.0).contains(&x.score));
                    // Scores are exact multiples of 0.01.
                    let centi = x.score * 100.0;
                    prop_assert!((centi - centi.round()).abs() < 1e-9);
                }
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "diverging results: {other:?}"),
            }
            prop_assert_eq!(avg_a, avg_b);
        }

        /// With full human coverage, every strategy resolves identically.
        #[test]
        fn strategies_agree_on_fully_covered_cells(
            raws in proptest::collection::vec(0.0f64..=100.0, 1..4),
            fallback in proptest::option::of(0.0f64..=100.0),
        ) {
            let cell = record(&raws, fallback);
            let mut resolutions = Vec::new();
            for strategy in [
                FallbackStrategy::HumanZero,
                FallbackStrategy::HumanAvg,
                FallbackStrategy::HumanComet,
            ] {
                let mut avg = RunningAverageState::new(1);
                resolutions.push(resolve_score(&cell, 0, strategy, &mut avg).unwrap());
            }
            prop_assert_eq!(resolutions[0], resolutions[1]);
            prop_assert_eq!(resolutions[1], resolutions[2]);
        }
    }
}

//! Convergence metrics over recorded weight trajectories: top-n overlap with
//! a reference ranking, empirical regret, and cross-run aggregation.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::feedback::ScoreSource;
use crate::learner::LossVector;

/// Per-iteration tallies of where resolved scores came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProvenanceCounts {
    pub human: u64,
    pub fallback_zero: u64,
    pub fallback_running_avg: u64,
    pub fallback_precomputed: u64,
}

impl ProvenanceCounts {
    pub fn add(&mut self, source: ScoreSource) {
        match source {
            ScoreSource::Human => self.human += 1,
            ScoreSource::FallbackZero => self.fallback_zero += 1,
            ScoreSource::FallbackRunningAvg => self.fallback_running_avg += 1,
            ScoreSource::FallbackPrecomputed => self.fallback_precomputed += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.human + self.fallback_zero + self.fallback_running_avg + self.fallback_precomputed
    }

    pub fn merge(&mut self, other: &ProvenanceCounts) {
        self.human += other.human;
        self.fallback_zero += other.fallback_zero;
        self.fallback_running_avg += other.fallback_running_avg;
        self.fallback_precomputed += other.fallback_precomputed;
    }
}

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// One run's record: the normalized weight distribution after every
/// iteration's update, the system chosen each iteration, score provenance,
/// and cumulative human-score counts (used for deterministic tie-breaking).
#[derive(Debug, Clone)]
pub struct Trajectory {
    system_ids: Vec<String>,
    initial: Vec<f64>,
    weights: Vec<Vec<f64>>,
    chosen: Vec<usize>,
    provenance: Vec<ProvenanceCounts>,
    human_counts: Vec<Vec<u64>>,
}

impl Trajectory {
    pub fn new(system_ids: Vec<String>, initial: Vec<f64>) -> Result<Self> {
        if system_ids.is_empty() {
            return Err(Error::Contract(
                "a trajectory needs at least one system".into(),
            ));
        }
        if initial.len() != system_ids.len() {
            return Err(Error::Contract(format!(
                "initial distribution has {} entries for {} systems",
                initial.len(),
                system_ids.len()
            )));
        }
        check_distribution(&initial)?;
        Ok(Trajectory {
            system_ids,
            initial,
            weights: Vec::new(),
            chosen: Vec::new(),
            provenance: Vec::new(),
            human_counts: Vec::new(),
        })
    }

    pub fn record_iteration(
        &mut self,
        weights: Vec<f64>,
        chosen: usize,
        provenance: ProvenanceCounts,
        human_counts: Vec<u64>,
    ) -> Result<()> {
        let num_systems = self.system_ids.len();
        if weights.len() != num_systems || human_counts.len() != num_systems {
            return Err(Error::Contract(format!(
                "iteration row has wrong width for {num_systems} systems"
            )));
        }
        if chosen >= num_systems {
            return Err(Error::Contract(format!(
                "chosen index {chosen} out of range for {num_systems} systems"
            )));
        }
        check_distribution(&weights)?;
        self.weights.push(weights);
        self.chosen.push(chosen);
        self.provenance.push(provenance);
        self.human_counts.push(human_counts);
        Ok(())
    }

    pub fn num_iterations(&self) -> usize {
        self.weights.len()
    }

    pub fn num_systems(&self) -> usize {
        self.system_ids.len()
    }

    pub fn system_ids(&self) -> &[String] {
        &self.system_ids
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Weights after iteration `t`'s update, 1-based.
    pub fn weights_at(&self, iteration: usize) -> Result<&[f64]> {
        self.check_iteration(iteration)?;
        Ok(&self.weights[iteration - 1])
    }

    /// The distribution the forecaster played at iteration `t` (1-based),
    /// i.e. the weights before that iteration's update.
    pub fn distribution_before(&self, iteration: usize) -> Result<&[f64]> {
        self.check_iteration(iteration)?;
        if iteration == 1 {
            Ok(&self.initial)
        } else {
            Ok(&self.weights[iteration - 2])
        }
    }

    /// Cumulative human-score counts as of iteration `t`, 1-based.
    pub fn human_counts_at(&self, iteration: usize) -> Result<&[u64]> {
        self.check_iteration(iteration)?;
        Ok(&self.human_counts[iteration - 1])
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn provenance(&self) -> &[ProvenanceCounts] {
        &self.provenance
    }

    pub fn total_provenance(&self) -> ProvenanceCounts {
        let mut total = ProvenanceCounts::default();
        for row in &self.provenance {
            total.merge(row);
        }
        total
    }

    pub fn final_weights(&self) -> Result<&[f64]> {
        self.weights
            .last()
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Contract("trajectory has no iterations".into()))
    }

    fn check_iteration(&self, iteration: usize) -> Result<()> {
        if iteration == 0 || iteration > self.weights.len() {
            return Err(Error::Contract(format!(
                "iteration {iteration} outside the recorded range 1..={}",
                self.weights.len()
            )));
        }
        Ok(())
    }
}

fn check_distribution(row: &[f64]) -> Result<()> {
    if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Contract(
            "weights must be finite and non-negative".into(),
        ));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::Contract(format!(
            "weight row sums to {sum}, expected 1 within {ROW_SUM_TOLERANCE}"
        )));
    }
    Ok(())
}

/// Mean and population variance of weights per iteration across runs.
#[derive(Debug, Clone)]
pub struct AggregateTrajectory {
    system_ids: Vec<String>,
    mean: Vec<Vec<f64>>,
    variance: Vec<Vec<f64>>,
    runs: usize,
}

impl AggregateTrajectory {
    pub fn system_ids(&self) -> &[String] {
        &self.system_ids
    }

    pub fn num_iterations(&self) -> usize {
        self.mean.len()
    }

    pub fn num_systems(&self) -> usize {
        self.system_ids.len()
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn mean_rows(&self) -> &[Vec<f64>] {
        &self.mean
    }

    pub fn variance_rows(&self) -> &[Vec<f64>] {
        &self.variance
    }

    /// Mean weights after iteration `t`, 1-based.
    pub fn mean_at(&self, iteration: usize) -> Result<&[f64]> {
        self.mean
            .get(iteration.wrapping_sub(1))
            .map(Vec::as_slice)
            .ok_or_else(|| {
                Error::Contract(format!(
                    "iteration {iteration} outside the recorded range 1..={}",
                    self.mean.len()
                ))
            })
    }

    pub fn final_mean(&self) -> Result<&[f64]> {
        self.mean
            .last()
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Contract("aggregate has no iterations".into()))
    }
}

/// Per-cell mean and population variance across runs of equal shape.
pub fn aggregate_runs(trajectories: &[Trajectory]) -> Result<AggregateTrajectory> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Contract("aggregate_runs needs at least one trajectory".into()))?;
    let iterations = first.num_iterations();
    let num_systems = first.num_systems();
    for t in trajectories {
        if t.num_iterations() != iterations
            || t.num_systems() != num_systems
            || t.system_ids() != first.system_ids()
        {
            return Err(Error::Contract(
                "trajectories must share iteration count and system set".into(),
            ));
        }
    }
    let runs = trajectories.len() as f64;
    let mut mean = vec![vec![0.0; num_systems]; iterations];
    let mut variance = vec![vec![0.0; num_systems]; iterations];
    for t in trajectories {
        for (row, acc) in t.rows().iter().zip(mean.iter_mut()) {
            for (w, m) in row.iter().zip(acc.iter_mut()) {
                *m += w / runs;
            }
        }
    }
    for t in trajectories {
        for (row, (acc, means)) in t.rows().iter().zip(variance.iter_mut().zip(&mean)) {
            for ((w, v), m) in row.iter().zip(acc.iter_mut()).zip(means) {
                let d = w - m;
                *v += d * d / runs;
            }
        }
    }
    Ok(AggregateTrajectory {
        system_ids: first.system_ids().to_vec(),
        mean,
        variance,
        runs: trajectories.len(),
    })
}

/// Tie-breaking context for ranking systems by weight: higher human-score
/// count wins, then the lexicographically smaller system id.
///
/// Exact weight ties are vanishingly rare with real scores; the context only
/// pins down a total order so reports are deterministic.
#[derive(Debug, Clone, Copy, Default)]
pub struct TieBreak<'a> {
    human_counts: Option<&'a [u64]>,
    system_ids: Option<&'a [String]>,
}

impl<'a> TieBreak<'a> {
    pub fn new(human_counts: &'a [u64], system_ids: &'a [String]) -> Self {
        TieBreak {
            human_counts: Some(human_counts),
            system_ids: Some(system_ids),
        }
    }

    /// Fall back to index order only.
    pub fn by_index() -> TieBreak<'static> {
        TieBreak::default()
    }

    fn key(&self, index: usize) -> (u64, Option<&'a str>) {
        let count = self.human_counts.map_or(0, |c| c[index]);
        let id = self.system_ids.map(|ids| ids[index].as_str());
        (count, id)
    }
}

/// Indices of the `n` heaviest systems, best first.
pub fn top_systems(weights: &[f64], n: usize, tie: TieBreak<'_>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b].total_cmp(&weights[a]).then_with(|| {
            let (count_a, id_a) = tie.key(a);
            let (count_b, id_b) = tie.key(b);
            count_b.cmp(&count_a).then(id_a.cmp(&id_b)).then(a.cmp(&b))
        })
    });
    order.truncate(n);
    order
}

/// Share of the reference top-n recovered by the weight top-n:
/// `|top_n(weights) ∩ top_n(reference)| / n`.
///
/// `reference_order` lists system indices best first and must have at least
/// `n` entries.
pub fn top_n_overlap(
    weights: &[f64],
    reference_order: &[usize],
    n: usize,
    tie: TieBreak<'_>,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Contract("overlap needs n >= 1".into()));
    }
    if n > weights.len() {
        return Err(Error::Contract(format!(
            "overlap at n = {n} undefined for {} systems",
            weights.len()
        )));
    }
    if n > reference_order.len() {
        return Err(Error::Contract(format!(
            "overlap at n = {n} undefined for a reference ranking of {} systems",
            reference_order.len()
        )));
    }
    let ours: HashSet<usize> = top_systems(weights, n, tie).into_iter().collect();
    let shared = reference_order[..n]
        .iter()
        .filter(|idx| ours.contains(idx))
        .count();
    Ok(shared as f64 / n as f64)
}

/// One cell of an overlap table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRow {
    /// 1-based iteration the snapshot was taken at (after that iteration's
    /// update).
    pub iteration: usize,
    pub n: usize,
    pub overlap: f64,
}

/// The values of n reported in overlap tables, subject to the ensemble and
/// ranking being large enough.
pub const OVERLAP_NS: [usize; 2] = [1, 3];

/// Overlap against the reference ranking at each checkpoint, for n = 1 and
/// n = 3 (where the ensemble and ranking have at least n systems).
pub fn overlap_report(
    trajectory: &Trajectory,
    reference_order: &[usize],
    checkpoints: &[usize],
) -> Result<Vec<OverlapRow>> {
    let horizon = trajectory.num_iterations();
    for &checkpoint in checkpoints {
        if checkpoint == 0 || checkpoint > horizon {
            return Err(Error::Contract(format!(
                "checkpoint {checkpoint} outside the valid range 1..={horizon}"
            )));
        }
    }
    let mut rows = Vec::new();
    for &checkpoint in checkpoints {
        let weights = trajectory.weights_at(checkpoint)?;
        let counts = trajectory.human_counts_at(checkpoint)?;
        let tie = TieBreak::new(counts, trajectory.system_ids());
        for n in OVERLAP_NS {
            if n > trajectory.num_systems() || n > reference_order.len() {
                continue;
            }
            rows.push(OverlapRow {
                iteration: checkpoint,
                n,
                overlap: top_n_overlap(weights, reference_order, n, tie)?,
            });
        }
    }
    Ok(rows)
}

/// Expected cumulative loss of the forecaster minus the best single system
/// in hindsight: `sum_t <p_t, l_t> - min_j sum_t l_{j,t}`.
///
/// `p_t` is the distribution the forecaster played at iteration t, i.e. the
/// weights before that iteration's update.
pub fn empirical_regret(trajectory: &Trajectory, losses: &[LossVector]) -> Result<f64> {
    if losses.len() != trajectory.num_iterations() {
        return Err(Error::Contract(format!(
            "loss matrix has {} rows for {} iterations",
            losses.len(),
            trajectory.num_iterations()
        )));
    }
    let num_systems = trajectory.num_systems();
    let mut forecaster = 0.0;
    let mut totals = vec![0.0f64; num_systems];
    for (t, row) in losses.iter().enumerate() {
        if row.len() != num_systems {
            return Err(Error::Contract(format!(
                "loss row {t} has {} entries for {num_systems} systems",
                row.len()
            )));
        }
        let played = trajectory.distribution_before(t + 1)?;
        forecaster += played
            .iter()
            .zip(row.values())
            .map(|(p, l)| p * l)
            .sum::<f64>();
        for (total, loss) in totals.iter_mut().zip(row.values()) {
            *total += loss;
        }
    }
    let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(forecaster - best)
}

/// Write an overlap table as CSV. Values are rounded to two decimals for
/// display; callers keep the exact rows.
pub fn write_overlap_csv(rows: &[OverlapRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["iteration", "top_n", "overlap"])?;
    for row in rows {
        writer.write_record([
            row.iteration.to_string(),
            row.n.to_string(),
            format!("{:.2}", row.overlap),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write per-run regret values as CSV.
pub fn write_regret_csv(regrets: &[(usize, f64)], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["run", "empirical_regret"])?;
    for (run, regret) in regrets {
        writer.write_record([run.to_string(), format!("{regret}")])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("sys{i:02}")).collect()
    }

    fn trajectory_from_rows(rows: Vec<Vec<f64>>) -> Trajectory {
        let num_systems = rows[0].len();
        let uniform = vec![1.0 / num_systems as f64; num_systems];
        let mut t = Trajectory::new(ids(num_systems), uniform).unwrap();
        for row in rows {
            t.record_iteration(row, 0, ProvenanceCounts::default(), vec![0; num_systems])
                .unwrap();
        }
        t
    }

    #[test]
    fn identical_top_one_scores_full_overlap() {
        let overlap = top_n_overlap(&[0.7, 0.2, 0.1], &[0, 1, 2], 1, TieBreak::by_index()).unwrap();
        assert_eq!(overlap, 1.0);
    }

    #[test]
    fn two_of_three_shared_gives_two_thirds() {
        // Weight top-3 of 4 systems: {0, 1, 2}; reference top-3: {0, 1, 3}.
        let overlap = top_n_overlap(
            &[0.4, 0.3, 0.2, 0.1],
            &[0, 1, 3, 2],
            3,
            TieBreak::by_index(),
        )
        .unwrap();
        assert!((overlap - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(format!("{overlap:.2}"), "0.67");
    }

    #[test]
    fn disjoint_sets_give_zero() {
        let overlap = top_n_overlap(
            &[0.1, 0.1, 0.1, 0.3, 0.2, 0.2],
            &[0, 1, 2, 3, 4, 5],
            3,
            TieBreak::by_index(),
        )
        .unwrap();
        assert_eq!(overlap, 0.0);
    }

    #[test]
    fn overlap_rejects_n_beyond_systems() {
        assert!(matches!(
            top_n_overlap(&[0.5, 0.5], &[0, 1], 3, TieBreak::by_index()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn ties_break_by_human_count_then_id() {
        let weights = [0.25, 0.25, 0.25, 0.25];
        let counts = [1u64, 5, 5, 2];
        let names = ids(4);
        let top = top_systems(&weights, 2, TieBreak::new(&counts, &names));
        // Counts put 1 and 2 first; equal counts fall back to the smaller id.
        assert_eq!(top, vec![1, 2]);
    }

    #[test]
    fn report_covers_each_checkpoint_with_two_cells() {
        let rows = vec![
            vec![0.5, 0.3, 0.1, 0.1],
            vec![0.4, 0.4, 0.1, 0.1],
            vec![0.2, 0.6, 0.1, 0.1],
        ];
        let trajectory = trajectory_from_rows(rows);
        let report = overlap_report(&trajectory, &[1, 0, 2, 3], &[1, 3]).unwrap();
        assert_eq!(report.len(), 4);
        assert_eq!(report[0].iteration, 1);
        assert_eq!(report[0].n, 1);
        assert_eq!(report[1].n, 3);
    }

    #[test]
    fn report_rejects_checkpoints_beyond_horizon() {
        let trajectory = trajectory_from_rows(vec![vec![0.5, 0.5]]);
        let err = overlap_report(&trajectory, &[0, 1], &[5]).unwrap_err();
        assert!(err.to_string().contains("1..=1"));
    }

    #[test]
    fn report_on_two_systems_emits_top_one_only() {
        let trajectory = trajectory_from_rows(vec![vec![0.6, 0.4]]);
        let report = overlap_report(&trajectory, &[0, 1], &[1]).unwrap();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].n, 1);
    }

    #[test]
    fn regret_is_zero_for_identical_losses() {
        let trajectory = trajectory_from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let losses = vec![
            LossVector::from_values(vec![0.3, 0.3]).unwrap(),
            LossVector::from_values(vec![0.7, 0.7]).unwrap(),
        ];
        let regret = empirical_regret(&trajectory, &losses).unwrap();
        assert!(regret.abs() < 1e-12);
    }

    #[test]
    fn regret_of_uniform_play_on_one_round() {
        let trajectory = trajectory_from_rows(vec![vec![0.5, 0.5]]);
        let losses = vec![LossVector::from_values(vec![0.0, 1.0]).unwrap()];
        // Forecaster pays 0.5 with the pre-update uniform distribution; the
        // best system pays 0.
        let regret = empirical_regret(&trajectory, &losses).unwrap();
        assert!((regret - 0.5).abs() < 1e-12);
    }

    #[test]
    fn regret_uses_the_pre_update_distribution() {
        let mut t = Trajectory::new(ids(2), vec![0.5, 0.5]).unwrap();
        t.record_iteration(vec![0.9, 0.1], 0, ProvenanceCounts::default(), vec![0, 0])
            .unwrap();
        t.record_iteration(vec![0.99, 0.01], 0, ProvenanceCounts::default(), vec![0, 0])
            .unwrap();
        let losses = vec![
            LossVector::from_values(vec![0.0, 1.0]).unwrap(),
            LossVector::from_values(vec![0.0, 1.0]).unwrap(),
        ];
        // Round 1 plays (0.5, 0.5); round 2 plays (0.9, 0.1).
        let regret = empirical_regret(&t, &losses).unwrap();
        assert!((regret - 0.6).abs() < 1e-12);
    }

    #[test]
    fn single_run_aggregate_has_zero_variance() {
        let trajectory = trajectory_from_rows(vec![vec![0.6, 0.4], vec![0.7, 0.3]]);
        let aggregate = aggregate_runs(std::slice::from_ref(&trajectory)).unwrap();
        assert_eq!(aggregate.runs(), 1);
        assert!(aggregate
            .variance_rows()
            .iter()
            .flatten()
            .all(|v| *v == 0.0));
        assert_eq!(aggregate.mean_rows(), trajectory.rows());
    }

    #[test]
    fn two_runs_average_with_population_variance() {
        let a = trajectory_from_rows(vec![vec![0.4, 0.6]]);
        let b = trajectory_from_rows(vec![vec![0.6, 0.4]]);
        let aggregate = aggregate_runs(&[a, b]).unwrap();
        assert!((aggregate.mean_rows()[0][0] - 0.5).abs() < 1e-12);
        assert!((aggregate.variance_rows()[0][0] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn identical_runs_have_zero_variance_everywhere() {
        let rows = vec![vec![0.3, 0.7], vec![0.2, 0.8]];
        let runs: Vec<Trajectory> = (0..10)
            .map(|_| trajectory_from_rows(rows.clone()))
            .collect();
        let aggregate = aggregate_runs(&runs).unwrap();
        assert!(aggregate
            .variance_rows()
            .iter()
            .flatten()
            .all(|v| v.abs() < 1e-18));
    }

    #[test]
    fn ewaf_regret_grows_sublinearly_where_uniform_play_grows_linearly() {
        use crate::learner::{auto_eta, Algorithm, Ewaf};
        use rand::{RngExt, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        // I.i.d. losses with distinct per-system means: a forecaster stuck
        // on the uniform distribution pays the mean gap forever, while the
        // learner locks onto the best system.
        let means = [0.2f64, 0.5, 0.8];
        let regrets_at = |horizon: usize| -> (f64, f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(4242);
            let eta = auto_eta(Algorithm::Ewaf, 3, horizon, 3).unwrap();
            let mut learner = Ewaf::new(3, eta).unwrap();
            let mut learned = Trajectory::new(ids(3), vec![1.0 / 3.0; 3]).unwrap();
            let mut uniform = Trajectory::new(ids(3), vec![1.0 / 3.0; 3]).unwrap();
            let mut losses = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let row: Vec<f64> = means
                    .iter()
                    .map(|m| (m + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0))
                    .collect();
                let vector = LossVector::from_values(row).unwrap();
                learner.update(&vector).unwrap();
                learned
                    .record_iteration(
                        learner.distribution(),
                        0,
                        ProvenanceCounts::default(),
                        vec![0; 3],
                    )
                    .unwrap();
                uniform
                    .record_iteration(
                        vec![1.0 / 3.0; 3],
                        0,
                        ProvenanceCounts::default(),
                        vec![0; 3],
                    )
                    .unwrap();
                losses.push(vector);
            }
            (
                empirical_regret(&learned, &losses).unwrap(),
                empirical_regret(&uniform, &losses).unwrap(),
            )
        };
        let (learned_small, uniform_small) = regrets_at(1_000);
        let (learned_large, uniform_large) = regrets_at(10_000);
        // Tenfold horizon: near-tenfold uniform regret, much flatter growth
        // for the learner.
        assert!(uniform_large / uniform_small > 8.0);
        assert!(learned_large / learned_small < 5.0);
        assert!(learned_large < uniform_large / 10.0);
    }

    #[test]
    fn aggregate_rejects_mismatched_shapes() {
        let a = trajectory_from_rows(vec![vec![0.5, 0.5]]);
        let b = trajectory_from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(matches!(aggregate_runs(&[a, b]), Err(Error::Contract(_))));
    }

    proptest! {
        /// Overlap remains in {0, 1/n, ..., 1} exactly and is invariant
        /// under strictly monotone transforms of the weights.
        #[test]
        fn overlap_values_are_exact_fractions_and_rank_invariant(
            weights in proptest::collection::vec(0.01f64..1.0, 3..7),
            n_pick in 0usize..2,
        ) {
            let num = weights.len();
            let total: f64 = weights.iter().sum();
            let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let n = [1usize, 3][n_pick];
            let reference: Vec<usize> = (0..num).collect();
            let overlap =
                top_n_overlap(&weights, &reference, n, TieBreak::by_index()).unwrap();
            let k = (overlap * n as f64).round() as usize;
            prop_assert_eq!(overlap, k as f64 / n as f64);
            // exp is strictly monotone, so the ranking cannot move.
            let transformed: Vec<f64> = weights.iter().map(|w| w.exp()).collect();
            let same =
                top_n_overlap(&transformed, &reference, n, TieBreak::by_index()).unwrap();
            prop_assert_eq!(overlap, same);
        }
    }
}

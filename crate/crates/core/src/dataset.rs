//! Canonical on-disk format for segment-by-system score matrices, plus a
//! seeded synthetic generator for desk-scale experiments.
//!
//! A corpus is a complete grid: every (segment, system) pair has exactly one
//! record, and a record with no raw scores encodes a missing assessment.
//! The file format is UTF-8 TSV, one record per row:
//!
//! ```text
//! segment_id <TAB> system_id <TAB> raw_scores (comma-joined, may be empty) <TAB> fallback_score (may be empty)
//! ```
//!
//! Lines starting with `#` and blank lines are skipped on load. The assessor
//! count is the number of raw scores; it is never stored. A missing
//! assessment is an empty raw-score field, never a sentinel value, because 0
//! is a legal score.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// One (segment, system) cell of the score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub segment_id: String,
    pub system_id: String,
    /// Raw assessment scores in [0, 100]; empty means no assessment.
    pub raw_scores: Vec<f64>,
    /// Precomputed surrogate score in [0, 100], if the dataset carries one.
    pub fallback_score: Option<f64>,
}

impl ScoreRecord {
    /// Number of assessors, derived from the stored scores.
    pub fn num_assessors(&self) -> usize {
        self.raw_scores.len()
    }

    pub fn has_human(&self) -> bool {
        !self.raw_scores.is_empty()
    }

    fn validate(&self) -> Result<()> {
        for raw in &self.raw_scores {
            if !raw.is_finite() || !(0.0..=100.0).contains(raw) {
                return Err(Error::Data(format!(
                    "raw score {raw} out of range [0, 100] for segment `{}` system `{}`",
                    self.segment_id, self.system_id
                )));
            }
        }
        if let Some(fb) = self.fallback_score {
            if !fb.is_finite() || !(0.0..=100.0).contains(&fb) {
                return Err(Error::Data(format!(
                    "fallback score {fb} out of range [0, 100] for segment `{}` system `{}`",
                    self.segment_id, self.system_id
                )));
            }
        }
        Ok(())
    }
}

/// A complete segment-by-system score matrix.
///
/// Immutable after construction; shuffling produces a new corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    label: String,
    segments: Vec<String>,
    systems: Vec<String>,
    /// Dense, segment-major: `records[segment * num_systems + system]`.
    records: Vec<ScoreRecord>,
}

impl Corpus {
    /// Assemble and validate a corpus from loose records.
    ///
    /// Segment and system order follow first appearance. Every pair must
    /// occur exactly once and at least two systems are required.
    pub fn from_records(label: impl Into<String>, records: Vec<ScoreRecord>) -> Result<Self> {
        let mut segments: Vec<String> = Vec::new();
        let mut systems: Vec<String> = Vec::new();
        let mut segment_index: HashMap<String, usize> = HashMap::new();
        let mut system_index: HashMap<String, usize> = HashMap::new();
        for record in &records {
            record.validate()?;
            if !segment_index.contains_key(&record.segment_id) {
                segment_index.insert(record.segment_id.clone(), segments.len());
                segments.push(record.segment_id.clone());
            }
            if !system_index.contains_key(&record.system_id) {
                system_index.insert(record.system_id.clone(), systems.len());
                systems.push(record.system_id.clone());
            }
        }
        if systems.len() < 2 {
            return Err(Error::Data(format!(
                "a corpus needs at least 2 systems, found {}",
                systems.len()
            )));
        }
        let num_systems = systems.len();
        let mut grid: Vec<Option<ScoreRecord>> = vec![None; segments.len() * num_systems];
        for record in records {
            let seg = segment_index[&record.segment_id];
            let sys = system_index[&record.system_id];
            let slot = &mut grid[seg * num_systems + sys];
            if slot.is_some() {
                return Err(Error::Data(format!(
                    "duplicate record for segment `{}` system `{}`",
                    record.segment_id, record.system_id
                )));
            }
            *slot = Some(record);
        }
        let mut records = Vec::with_capacity(grid.len());
        for (i, slot) in grid.into_iter().enumerate() {
            match slot {
                Some(r) => records.push(r),
                None => {
                    return Err(Error::Data(format!(
                        "missing record for segment `{}` system `{}`",
                        segments[i / num_systems],
                        systems[i % num_systems]
                    )))
                }
            }
        }
        Ok(Corpus {
            label: label.into(),
            segments,
            systems,
            records,
        })
    }

    /// Load and validate a corpus from a TSV file.
    pub fn load(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let load_err = |line: usize, message: String| Error::Load {
            path: display.clone(),
            line,
            message,
        };
        let file = fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut records = Vec::new();
        let mut seen: HashSet<(String, String)> = HashSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(load_err(
                    lineno,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let segment_id = fields[0].to_string();
            let system_id = fields[1].to_string();
            if segment_id.is_empty() || system_id.is_empty() {
                return Err(load_err(lineno, "empty segment or system id".into()));
            }
            let mut raw_scores = Vec::new();
            if !fields[2].is_empty() {
                for part in fields[2].split(',') {
                    let raw: f64 = part
                        .trim()
                        .parse()
                        .map_err(|_| load_err(lineno, format!("unparseable raw score `{part}`")))?;
                    if !raw.is_finite() || !(0.0..=100.0).contains(&raw) {
                        return Err(load_err(
                            lineno,
                            format!("raw score {raw} out of range [0, 100]"),
                        ));
                    }
                    raw_scores.push(raw);
                }
            }
            let fallback_score = if fields[3].is_empty() {
                None
            } else {
                let fb: f64 = fields[3].trim().parse().map_err(|_| {
                    load_err(
                        lineno,
                        format!("unparseable fallback score `{}`", fields[3]),
                    )
                })?;
                if !fb.is_finite() || !(0.0..=100.0).contains(&fb) {
                    return Err(load_err(
                        lineno,
                        format!("fallback score {fb} out of range [0, 100]"),
                    ));
                }
                Some(fb)
            };
            if !seen.insert((segment_id.clone(), system_id.clone())) {
                return Err(load_err(
                    lineno,
                    format!("duplicate record for segment `{segment_id}` system `{system_id}`"),
                ));
            }
            records.push(ScoreRecord {
                segment_id,
                system_id,
                raw_scores,
                fallback_score,
            });
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string());
        Self::from_records(label, records)
    }

    /// Canonical TSV form: segment-major, floats in shortest round-trip
    /// notation, one trailing newline per row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&record.segment_id);
            out.push('\t');
            out.push_str(&record.system_id);
            out.push('\t');
            let joined: Vec<String> = record.raw_scores.iter().map(|r| format!("{r}")).collect();
            out.push_str(&joined.join(","));
            out.push('\t');
            if let Some(fb) = record.fallback_score {
                out.push_str(&format!("{fb}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn num_systems(&self) -> usize {
        self.systems.len()
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn system_index(&self, system_id: &str) -> Option<usize> {
        self.systems.iter().position(|s| s == system_id)
    }

    pub fn record(&self, segment: usize, system: usize) -> &ScoreRecord {
        &self.records[segment * self.systems.len() + system]
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    /// Fraction of cells carrying at least one assessment.
    pub fn coverage(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let assessed = self.records.iter().filter(|r| r.has_human()).count();
        assessed as f64 / self.records.len() as f64
    }

    /// True when every record carries a fallback score.
    pub fn has_complete_fallbacks(&self) -> bool {
        self.records.iter().all(|r| r.fallback_score.is_some())
    }

    /// A new corpus with segments in a seeded random order. The same seed
    /// always yields the same permutation; records are untouched.
    pub fn shuffled(&self, seed: u64) -> Corpus {
        let mut order: Vec<usize> = (0..self.segments.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let num_systems = self.systems.len();
        let mut segments = Vec::with_capacity(self.segments.len());
        let mut records = Vec::with_capacity(self.records.len());
        for &seg in &order {
            segments.push(self.segments[seg].clone());
            for sys in 0..num_systems {
                records.push(self.records[seg * num_systems + sys].clone());
            }
        }
        Corpus {
            label: self.label.clone(),
            segments,
            systems: self.systems.clone(),
            records,
        }
    }
}

/// One row of the reference ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingEntry {
    pub system_id: String,
    pub z_score: f64,
    pub raw_score: f64,
}

/// Reference ranking sorted by z-score, with deterministic tie-breaking by
/// raw score and then system id.
#[derive(Debug, Clone)]
pub struct OfficialRanking {
    entries: Vec<RankingEntry>,
}

impl OfficialRanking {
    pub fn new(mut entries: Vec<RankingEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Data("a ranking needs at least one entry".into()));
        }
        let mut ids = HashSet::new();
        for entry in &entries {
            if !entry.z_score.is_finite() || !entry.raw_score.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite score in ranking entry for `{}`",
                    entry.system_id
                )));
            }
            if !ids.insert(entry.system_id.clone()) {
                return Err(Error::Data(format!(
                    "duplicate ranking entry for `{}`",
                    entry.system_id
                )));
            }
        }
        entries.sort_by(|a, b| {
            b.z_score
                .total_cmp(&a.z_score)
                .then(b.raw_score.total_cmp(&a.raw_score))
                .then(a.system_id.cmp(&b.system_id))
        });
        Ok(OfficialRanking { entries })
    }

    /// Load from TSV rows `system_id <TAB> z_score <TAB> raw_score`.
    pub fn load(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let load_err = |line: usize, message: String| Error::Load {
            path: display.clone(),
            line,
            message,
        };
        let file = fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(load_err(
                    lineno,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let z_score: f64 = fields[1]
                .trim()
                .parse()
                .map_err(|_| load_err(lineno, format!("unparseable z-score `{}`", fields[1])))?;
            let raw_score: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| load_err(lineno, format!("unparseable raw score `{}`", fields[2])))?;
            entries.push(RankingEntry {
                system_id: fields[0].to_string(),
                z_score,
                raw_score,
            });
        }
        Self::new(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                entry.system_id, entry.z_score, entry.raw_score
            ));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn entries(&self) -> &[RankingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ranked system ids, best first.
    pub fn system_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.system_id.as_str()).collect()
    }
}

/// Blueprint for a synthetic corpus with a known best ordering.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    /// Latent mean score per system, in [0, 1]; length fixes J.
    pub system_means: Vec<f64>,
    /// Standard deviation of per-cell latent quality around the mean.
    pub score_noise: f64,
    /// Standard deviation of the surrogate's error around the latent quality.
    pub fallback_noise: f64,
    /// Number of segments T.
    pub num_segments: usize,
    /// Probability that a cell receives an assessment.
    pub coverage: f64,
    pub seed: u64,
}

/// A generated corpus plus its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Ranking derived from the latent means (z-score = mean).
    pub ranking: OfficialRanking,
    /// System indices ordered by latent mean, best first.
    pub best_order: Vec<usize>,
    /// True when two systems share a latent mean, making the ordering
    /// ambiguous beyond the deterministic tie-break.
    pub tied: bool,
}

/// Generate a corpus whose expected score ordering is known up front.
///
/// Missing assessments are placed independently per cell with probability
/// `1 - coverage`; the fallback column is always populated with a noisy copy
/// of the latent quality.
pub fn synthesize_corpus(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    let num_systems = spec.system_means.len();
    if num_systems < 2 {
        return Err(Error::Contract(format!(
            "synthetic corpus needs at least 2 systems, got {num_systems}"
        )));
    }
    if spec.num_segments == 0 {
        return Err(Error::Contract(
            "synthetic corpus needs at least 1 segment".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.coverage) {
        return Err(Error::Contract(format!(
            "coverage must lie in [0, 1], got {}",
            spec.coverage
        )));
    }
    for mean in &spec.system_means {
        if !mean.is_finite() || !(0.0..=1.0).contains(mean) {
            return Err(Error::Contract(format!(
                "system means must lie in [0, 1], got {mean}"
            )));
        }
    }
    if spec.score_noise < 0.0 || spec.fallback_noise < 0.0 {
        return Err(Error::Contract("noise levels must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let score_noise = (spec.score_noise > 0.0)
        .then(|| Normal::new(0.0, spec.score_noise).expect("validated stddev"));
    let fallback_noise = (spec.fallback_noise > 0.0)
        .then(|| Normal::new(0.0, spec.fallback_noise).expect("validated stddev"));

    let mut records = Vec::with_capacity(spec.num_segments * num_systems);
    for segment in 0..spec.num_segments {
        for (system, mean) in spec.system_means.iter().enumerate() {
            let quality_noise = score_noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
            let covered = rng.random::<f64>() < spec.coverage;
            let surrogate_noise = fallback_noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
            let latent = (mean + quality_noise).clamp(0.0, 1.0);
            let raw_scores = if covered {
                vec![latent * 100.0]
            } else {
                Vec::new()
            };
            let fallback = ((latent + surrogate_noise).clamp(0.0, 1.0)) * 100.0;
            records.push(ScoreRecord {
                segment_id: format!("seg{segment:05}"),
                system_id: format!("sys{system:02}"),
                raw_scores,
                fallback_score: Some(fallback),
            });
        }
    }
    let corpus = Corpus::from_records("synthetic", records)?;

    let mut best_order: Vec<usize> = (0..num_systems).collect();
    best_order.sort_by(|&a, &b| spec.system_means[b].total_cmp(&spec.system_means[a]));
    let tied = best_order
        .windows(2)
        .any(|w| spec.system_means[w[0]] == spec.system_means[w[1]]);
    let ranking = OfficialRanking::new(
        spec.system_means
            .iter()
            .enumerate()
            .map(|(system, mean)| RankingEntry {
                system_id: format!("sys{system:02}"),
                z_score: *mean,
                raw_score: mean * 100.0,
            })
            .collect(),
    )?;

    Ok(SyntheticCorpus {
        corpus,
        ranking,
        best_order,
        tied,
    })
}

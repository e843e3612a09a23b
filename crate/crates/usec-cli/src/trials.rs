//! Monte-Carlo placement comparison: draw random machine speeds, solve each
//! placement to optimality, and report per-placement statistics and pairwise
//! win counts.
//!
//! Placements split the same physical matrix into different block counts, so
//! reported times are normalized to one full pass over the matrix (the solved
//! per-block makespan divided by G). Comparisons use the exact rational
//! optima; CSVs carry their nearest doubles.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use usec::error::{Error, Result};
use usec::model::{rational_to_f64, AvailableSet, ProblemDims, SpeedVector};
use usec::optimizer::{solve_default, AssignmentProblem};
use usec::placement::StoragePlacement;

/// Smallest allowed speed draw; keeps the makespan finite.
pub const SPEED_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementKind {
    Cyclic,
    Repetition,
    /// One block per J-subset of machines.
    Subset,
}

impl PlacementKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "cyclic" => Ok(PlacementKind::Cyclic),
            "repetition" => Ok(PlacementKind::Repetition),
            "man" | "subset" => Ok(PlacementKind::Subset),
            other => Err(Error::InvalidDims(format!("unknown placement `{other}`"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PlacementKind::Cyclic => "cyclic",
            PlacementKind::Repetition => "repetition",
            PlacementKind::Subset => "man",
        }
    }

    pub fn build(&self, machines: usize, replication: usize) -> Result<StoragePlacement> {
        match self {
            PlacementKind::Cyclic => StoragePlacement::cyclic(machines, replication),
            PlacementKind::Repetition => {
                StoragePlacement::repetition(machines, machines, replication)
            }
            PlacementKind::Subset => StoragePlacement::subset(machines, replication),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SpeedDistribution {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl SpeedDistribution {
    fn sample(&self, rng: &mut ChaCha8Rng, machines: usize) -> Vec<f64> {
        match self {
            SpeedDistribution::Exponential { rate } => {
                let exp = Exp::new(*rate).expect("positive rate");
                (0..machines)
                    .map(|_| exp.sample(rng).max(SPEED_FLOOR))
                    .collect()
            }
            SpeedDistribution::Uniform { lo, hi } => (0..machines)
                .map(|_| {
                    if hi > lo {
                        rng.gen_range(*lo..*hi).max(SPEED_FLOOR)
                    } else {
                        lo.max(SPEED_FLOOR)
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialsConfig {
    pub trials: usize,
    pub machines: usize,
    pub replication: usize,
    pub straggler_tolerance: usize,
    pub distribution: SpeedDistribution,
    pub seed: u64,
    pub placements: Vec<PlacementKind>,
    pub bins: usize,
}

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    /// Normalized optimal time per placement, exact.
    pub optima: Vec<BigRational>,
}

#[derive(Debug, Clone)]
pub struct PlacementSummary {
    pub placement: &'static str,
    pub mean: f64,
    /// Population variance of the per-trial values.
    pub variance: f64,
}

#[derive(Debug)]
pub struct TrialReport {
    pub placements: Vec<PlacementKind>,
    pub rows: Vec<TrialRow>,
    pub summaries: Vec<PlacementSummary>,
    /// `wins[a][b]`: trials where placement a is strictly faster than b.
    pub wins: Vec<Vec<usize>>,
    /// `ties[a][b]`: trials where a and b achieve the same optimum exactly.
    pub ties: Vec<Vec<usize>>,
    pub bins: usize,
}

pub fn run_trials(config: &TrialsConfig) -> Result<TrialReport> {
    if config.trials == 0 {
        return Err(Error::InvalidDims("trial count must be positive".into()));
    }
    if config.placements.is_empty() {
        return Err(Error::InvalidDims("no placements selected".into()));
    }
    let prepared: Vec<(PlacementKind, StoragePlacement, ProblemDims)> = config
        .placements
        .iter()
        .map(|kind| {
            let placement = kind.build(config.machines, config.replication)?;
            let blocks = placement.submatrices();
            let dims = ProblemDims::new(
                config.machines,
                blocks,
                config.replication,
                blocks,
                1,
                config.straggler_tolerance,
            )?;
            Ok((*kind, placement, dims))
        })
        .collect::<Result<_>>()?;
    let available = AvailableSet::all(config.machines)?;

    let rows: Vec<TrialRow> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRow> {
            let seed = config.seed.wrapping_add(trial as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let speeds = config.distribution.sample(&mut rng, config.machines);
            let speed_vector = SpeedVector::from_f64s(&speeds)?;
            let optima = prepared
                .iter()
                .map(|(_, placement, dims)| {
                    let problem = AssignmentProblem::new(
                        dims.clone(),
                        placement.clone(),
                        speed_vector.clone(),
                        available.clone(),
                    )?;
                    let optimum = solve_default(&problem)?;
                    // One full pass over the matrix: per-block time over G.
                    Ok(optimum.time
                        / BigRational::from_integer(BigInt::from(dims.submatrices as u64)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialRow {
                trial,
                seed,
                optima,
            })
        })
        .collect::<Result<_>>()?;

    let count = config.placements.len();
    let mut wins = vec![vec![0usize; count]; count];
    let mut ties = vec![vec![0usize; count]; count];
    for row in &rows {
        for a in 0..count {
            for b in 0..count {
                if a == b {
                    continue;
                }
                match row.optima[a].cmp(&row.optima[b]) {
                    std::cmp::Ordering::Less => wins[a][b] += 1,
                    std::cmp::Ordering::Equal => ties[a][b] += 1,
                    std::cmp::Ordering::Greater => {}
                }
            }
        }
    }

    let summaries = config
        .placements
        .iter()
        .enumerate()
        .map(|(i, kind)| {
            let values: Vec<f64> = rows.iter().map(|r| rational_to_f64(&r.optima[i])).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let variance =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
            PlacementSummary {
                placement: kind.label(),
                mean,
                variance,
            }
        })
        .collect();

    Ok(TrialReport {
        placements: config.placements.clone(),
        rows,
        summaries,
        wins,
        ties,
        bins: config.bins,
    })
}

impl TrialReport {
    /// Long-format per-trial CSV: `trial_id,seed,placement,c_star`.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("trial_id,seed,placement,c_star\n");
        for row in &self.rows {
            for (i, kind) in self.placements.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.trial,
                    row.seed,
                    kind.label(),
                    rational_to_f64(&row.optima[i])
                ));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("placement,trials,mean,variance\n");
        for summary in &self.summaries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                summary.placement,
                self.rows.len(),
                summary.mean,
                summary.variance
            ));
        }
        out
    }

    /// Uniform bins over [0, 99th percentile] per placement; values above
    /// the top edge land in the last bin.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("placement,bin,bin_lo,bin_hi,count\n");
        for (i, kind) in self.placements.iter().enumerate() {
            let mut values: Vec<f64> = self
                .rows
                .iter()
                .map(|r| rational_to_f64(&r.optima[i]))
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
            let p99_index = ((values.len() as f64 * 0.99).ceil() as usize).max(1) - 1;
            let top = values[p99_index.min(values.len() - 1)];
            let width = if top > 0.0 {
                top / self.bins as f64
            } else {
                1.0
            };
            let mut counts = vec![0usize; self.bins];
            for value in &values {
                let bin = ((value / width) as usize).min(self.bins - 1);
                counts[bin] += 1;
            }
            for (bin, count) in counts.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    kind.label(),
                    bin,
                    bin as f64 * width,
                    (bin + 1) as f64 * width,
                    count
                ));
            }
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("trials: {}\n", self.rows.len()));
        for summary in &self.summaries {
            out.push_str(&format!(
                "{:<12} mean {:.6}  variance {:.6}\n",
                summary.placement, summary.mean, summary.variance
            ));
        }
        for a in 0..self.placements.len() {
            for b in 0..self.placements.len() {
                if a >= b {
                    continue;
                }
                out.push_str(&format!(
                    "{} vs {}: {} / {} / {} (wins/ties/losses)\n",
                    self.placements[a].label(),
                    self.placements[b].label(),
                    self.wins[a][b],
                    self.ties[a][b],
                    self.wins[b][a],
                ));
            }
        }
        out
    }

    pub fn summary(&self, kind: PlacementKind) -> Option<&PlacementSummary> {
        self.placements
            .iter()
            .position(|k| *k == kind)
            .map(|i| &self.summaries[i])
    }

    pub fn wins_of_over(&self, a: PlacementKind, b: PlacementKind) -> Option<usize> {
        let ia = self.placements.iter().position(|k| *k == a)?;
        let ib = self.placements.iter().position(|k| *k == b)?;
        Some(self.wins[ia][ib])
    }
}

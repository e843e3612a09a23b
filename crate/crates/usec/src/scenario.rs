//! Simulation scenario description and its JSON file format.
//!
//! A scenario fixes everything a simulation run needs: dimensions, storage
//! placement, true machine speeds, per-step availability, straggler policy,
//! timing-noise model, workload, and the speed-estimate smoothing weight.
//! Machine indices in scenario files are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AvailableSet, ProblemDims, SpeedVector};
use crate::placement::StoragePlacement;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub dims: DimsSpec,
    pub placement: PlacementSpec,
    pub true_speeds: Vec<f64>,
    /// Straggler tolerance S: redundancy 1 + S per row.
    #[serde(default)]
    pub straggler_tolerance: usize,
    /// Number of elastic time steps T.
    pub steps: usize,
    /// Speed-estimate smoothing weight in (0, 1].
    pub gamma: f64,
    #[serde(default)]
    pub timeline: TimelineSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub straggler_policy: StragglerPolicySpec,
    pub workload: WorkloadSpec,
    /// Initial speed estimates; all ones when omitted.
    #[serde(default)]
    pub initial_speed_estimate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimsSpec {
    pub machines: usize,
    pub submatrices: usize,
    pub replication: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlacementSpec {
    Repetition,
    Cyclic,
    /// One block per J-subset of machines; forces G = C(N, J).
    Subset,
    /// Explicit per-machine block lists, 1-based.
    Explicit {
        store: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimelineSpec {
    /// Every machine available at every step.
    #[default]
    All,
    /// Explicit available sets per step, 1-based machine ids. Must list
    /// exactly `steps` entries.
    Steps { available: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    #[default]
    None,
    /// Multiplicative duration noise 1 + e, e uniform in [-amplitude, amplitude].
    Uniform { amplitude: f64, seed: u64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StragglerPolicySpec {
    #[default]
    None,
    /// A seeded random subset of `count` available machines straggles each
    /// step; `count` must stay at or below the tolerance S.
    Random { count: usize, seed: u64 },
    /// The `count` fastest available machines straggle each step.
    Adversarial { count: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadSpec {
    /// Seeded dense symmetric matrix with entries uniform in [0, 1); the
    /// dominant eigenvector is well separated, so power iteration converges
    /// fast.
    PowerIteration { seed: u64 },
    /// Identity matrix; the iterate is a fixed point.
    Identity,
    /// Whitespace-separated text matrix, `rows` lines of `rows` numbers.
    MatrixFile { path: String },
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Validates and resolves the scenario into runtime-ready values.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let d = &self.dims;
        let dims = ProblemDims::new(
            d.machines,
            d.submatrices,
            d.replication,
            d.rows,
            d.rows,
            self.straggler_tolerance,
        )?;
        let placement = match &self.placement {
            PlacementSpec::Repetition => {
                StoragePlacement::repetition(d.machines, d.submatrices, d.replication)?
            }
            PlacementSpec::Cyclic => {
                if d.submatrices != d.machines {
                    return Err(Error::InvalidScenario(format!(
                        "cyclic placement needs G = N, got G = {}, N = {}",
                        d.submatrices, d.machines
                    )));
                }
                StoragePlacement::cyclic(d.machines, d.replication)?
            }
            PlacementSpec::Subset => {
                let placement = StoragePlacement::subset(d.machines, d.replication)?;
                if placement.submatrices() != d.submatrices {
                    return Err(Error::InvalidScenario(format!(
                        "subset placement makes G = {}, scenario declares {}",
                        placement.submatrices(),
                        d.submatrices
                    )));
                }
                placement
            }
            PlacementSpec::Explicit { store } => {
                let zero_based = store
                    .iter()
                    .enumerate()
                    .map(|(machine, blocks)| {
                        blocks
                            .iter()
                            .map(|&g| {
                                if g == 0 || g > d.submatrices {
                                    Err(Error::InvalidScenario(format!(
                                        "machine {}: sub-matrix id {} outside 1..={}",
                                        machine + 1,
                                        g,
                                        d.submatrices
                                    )))
                                } else {
                                    Ok(g - 1)
                                }
                            })
                            .collect::<Result<Vec<usize>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                StoragePlacement::from_sets(zero_based, d.submatrices)?
            }
        };
        placement.check_replication(d.replication)?;

        if self.true_speeds.len() != d.machines {
            return Err(Error::InvalidScenario(format!(
                "{} true speeds for {} machines",
                self.true_speeds.len(),
                d.machines
            )));
        }
        let true_speeds = SpeedVector::from_f64s(&self.true_speeds)?;

        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidScenario(format!(
                "gamma {} outside (0, 1]",
                self.gamma
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidScenario("step count must be positive".into()));
        }

        let timeline: Vec<AvailableSet> = match &self.timeline {
            TimelineSpec::All => vec![AvailableSet::all(d.machines)?; self.steps],
            TimelineSpec::Steps { available } => {
                if available.len() != self.steps {
                    return Err(Error::InvalidScenario(format!(
                        "timeline lists {} step(s), scenario declares {}",
                        available.len(),
                        self.steps
                    )));
                }
                available
                    .iter()
                    .map(|machines| {
                        let zero_based = machines
                            .iter()
                            .map(|&n| {
                                if n == 0 || n > d.machines {
                                    Err(Error::InvalidScenario(format!(
                                        "machine id {} outside 1..={}",
                                        n, d.machines
                                    )))
                                } else {
                                    Ok(n - 1)
                                }
                            })
                            .collect::<Result<Vec<usize>>>()?;
                        let set = AvailableSet::new(zero_based)?;
                        set.check_within(d.machines)?;
                        Ok(set)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };

        // Every step must keep at least 1 + S storing machines per block.
        let needed = dims.redundancy();
        for (step, available) in timeline.iter().enumerate() {
            for g in 0..d.submatrices {
                let storing = placement
                    .machines_storing(g)
                    .into_iter()
                    .filter(|&n| available.contains(n))
                    .count();
                if storing < needed {
                    return Err(Error::StepInfeasible {
                        step: step + 1,
                        submatrix: g + 1,
                        available: storing,
                        needed,
                    });
                }
            }
        }

        match &self.noise {
            NoiseSpec::Uniform { amplitude, .. } if !(*amplitude >= 0.0 && *amplitude < 1.0) => {
                return Err(Error::InvalidScenario(format!(
                    "noise amplitude {amplitude} outside [0, 1)"
                )));
            }
            _ => {}
        }
        match &self.straggler_policy {
            StragglerPolicySpec::Random { count, .. }
            | StragglerPolicySpec::Adversarial { count }
                if *count > self.straggler_tolerance =>
            {
                return Err(Error::InvalidScenario(format!(
                    "straggler count {} exceeds tolerance {}",
                    count, self.straggler_tolerance
                )));
            }
            _ => {}
        }

        let initial_speed_estimate = match &self.initial_speed_estimate {
            None => vec![1.0; d.machines],
            Some(estimates) => {
                let positive = |s: f64| s.is_finite() && s > 0.0;
                if estimates.len() != d.machines || !estimates.iter().all(|&s| positive(s)) {
                    return Err(Error::InvalidScenario(
                        "initial speed estimates must be positive, one per machine".into(),
                    ));
                }
                estimates.clone()
            }
        };

        Ok(ResolvedScenario {
            dims,
            placement,
            true_speeds,
            timeline,
            gamma: self.gamma,
            noise: self.noise.clone(),
            straggler_policy: self.straggler_policy.clone(),
            workload: self.workload.clone(),
            initial_speed_estimate,
        })
    }
}

/// A validated scenario with constructed placement and per-step availability.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub dims: ProblemDims,
    pub placement: StoragePlacement,
    pub true_speeds: SpeedVector,
    pub timeline: Vec<AvailableSet>,
    pub gamma: f64,
    pub noise: NoiseSpec,
    pub straggler_policy: StragglerPolicySpec,
    pub workload: WorkloadSpec,
    pub initial_speed_estimate: Vec<f64>,
}

impl ResolvedScenario {
    pub fn steps(&self) -> usize {
        self.timeline.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_scenario() -> Scenario {
        Scenario {
            dims: DimsSpec {
                machines: 6,
                submatrices: 6,
                replication: 3,
                rows: 60,
            },
            placement: PlacementSpec::Cyclic,
            true_speeds: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            straggler_tolerance: 0,
            steps: 3,
            gamma: 0.5,
            timeline: TimelineSpec::All,
            noise: NoiseSpec::None,
            straggler_policy: StragglerPolicySpec::None,
            workload: WorkloadSpec::Identity,
            initial_speed_estimate: None,
        }
    }

    #[test]
    fn json_round_trip() {
        let scenario = base_scenario();
        let parsed = Scenario::from_json(&scenario.to_json()).unwrap();
        assert_eq!(parsed.dims.machines, 6);
        parsed.resolve().unwrap();
    }

    #[test]
    fn rejects_straggler_count_above_tolerance() {
        let mut scenario = base_scenario();
        scenario.straggler_policy = StragglerPolicySpec::Random { count: 1, seed: 9 };
        assert!(scenario.resolve().is_err());
        scenario.straggler_tolerance = 1;
        scenario.resolve().unwrap();
    }

    #[test]
    fn rejects_infeasible_step() {
        let mut scenario = base_scenario();
        scenario.straggler_tolerance = 2;
        // Dropping machine 1 leaves block 3 with storing machines {2, 3};
        // S = 2 needs three.
        scenario.timeline = TimelineSpec::Steps {
            available: vec![
                vec![1, 2, 3, 4, 5, 6],
                vec![2, 3, 4, 5, 6],
                vec![1, 2, 3, 4, 5, 6],
            ],
        };
        let err = scenario.resolve().unwrap_err();
        assert!(err.to_string().contains("step 2"), "{err}");
    }

    #[test]
    fn rejects_wrong_speed_count() {
        let mut scenario = base_scenario();
        scenario.true_speeds.pop();
        assert!(scenario.resolve().is_err());
    }

    #[test]
    fn timeline_length_must_match_steps() {
        let mut scenario = base_scenario();
        scenario.timeline = TimelineSpec::Steps {
            available: vec![vec![1, 2, 3, 4, 5, 6]],
        };
        assert!(scenario.resolve().is_err());
    }
}

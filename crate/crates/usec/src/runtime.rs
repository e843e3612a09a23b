//! Deterministic simulation of adaptive elastic time steps.
//!
//! Each step the master smooths its speed estimates from the previous step's
//! measurements, computes an assignment for the currently available machines,
//! and dispatches row tasks. Simulated workers finish after
//! `load / true_speed * (1 + noise)`; stragglers never report. The master
//! combines the first `N_t - S` completions row by row, first arrival wins.
//! Because every copy of a row is the same dot product in the same order, the
//! combined product equals the direct matrix-vector product bitwise, no
//! matter which machines respond.
//!
//! Simulated time is just arithmetic on durations, so identical scenarios and
//! seeds give identical traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{fill_all, homogeneous_cyclic, ComputationAssignment};
use crate::error::{Error, Result};
use crate::model::{computation_time, rational_to_f64, LoadMatrix, SpeedVector};
use crate::optimizer::{solve_default, AssignmentProblem};
use crate::scenario::{NoiseSpec, ResolvedScenario, StragglerPolicySpec, WorkloadSpec};

/// Dense row-major matrix. The numeric workload side of the simulation; the
/// assignment side never touches it.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(size: usize) -> Self {
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
        }
        Self {
            rows: size,
            cols: size,
            data,
        }
    }

    /// Seeded symmetric matrix with entries uniform in [0, 1). The common
    /// positive mean separates the dominant eigenvalue from the bulk.
    pub fn symmetric_uniform(size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            for j in i..size {
                let value: f64 = rng.gen();
                data[i * size + j] = value;
                data[j * size + i] = value;
            }
        }
        Self {
            rows: size,
            cols: size,
            data,
        }
    }

    /// Parses whitespace-separated rows of numbers.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::InvalidScenario(format!(
                            "matrix line {}: `{tok}` is not a number",
                            line_no + 1
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            match cols {
                None => cols = Some(values.len()),
                Some(c) if c != values.len() => {
                    return Err(Error::InvalidScenario(format!(
                        "matrix line {}: {} value(s), expected {c}",
                        line_no + 1,
                        values.len()
                    )));
                }
                _ => {}
            }
            rows += 1;
            data.extend(values);
        }
        let cols = cols.ok_or_else(|| Error::InvalidScenario("empty matrix".into()))?;
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (i..self.cols).all(|j| self.data[i * self.cols + j] == self.data[j * self.cols + i])
            })
    }

    /// Dot products for rows in `start..end`, accumulating in column order so
    /// every copy of a row computes bitwise the same value.
    pub fn product_rows(&self, start: usize, end: usize, vector: &[f64]) -> Vec<f64> {
        debug_assert_eq!(vector.len(), self.cols);
        (start..end)
            .map(|row| {
                let offset = row * self.cols;
                let mut sum = 0.0;
                for (j, &w) in vector.iter().enumerate() {
                    sum += self.data[offset + j] * w;
                }
                sum
            })
            .collect()
    }

    pub fn multiply(&self, vector: &[f64]) -> Vec<f64> {
        self.product_rows(0, self.rows, vector)
    }
}

/// Assignment policy for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignMode {
    /// Solve the min-max program on the estimated speeds, then fill.
    Heterogeneous,
    /// Equal cyclic split over storing machines, ignoring speeds.
    Homogeneous,
}

impl AssignMode {
    pub fn label(&self) -> &'static str {
        match self {
            AssignMode::Heterogeneous => "het",
            AssignMode::Homogeneous => "hom",
        }
    }
}

/// Master-side adaptive state.
#[derive(Debug, Clone)]
pub struct MasterState {
    /// Current speed estimates, strictly positive.
    pub speed_estimate: Vec<f64>,
    /// Measurements reported in the previous step, by machine.
    fresh: Vec<Option<f64>>,
}

impl MasterState {
    pub fn new(initial_estimate: Vec<f64>) -> Self {
        let machines = initial_estimate.len();
        Self {
            speed_estimate: initial_estimate,
            fresh: vec![None; machines],
        }
    }
}

/// Convex smoothing of speed estimates: machines with a fresh measurement
/// move to `gamma * measured + (1 - gamma) * old`; the rest keep their
/// estimate.
pub fn ewma_update(estimate: &[f64], fresh: &[Option<f64>], gamma: f64) -> Vec<f64> {
    estimate
        .iter()
        .zip(fresh)
        .map(|(&old, measured)| match measured {
            Some(nu) => gamma * nu + (1.0 - gamma) * old,
            None => old,
        })
        .collect()
}

/// One worker's simulated step result.
#[derive(Debug, Clone)]
pub struct WorkerReport {
    pub machine: usize,
    /// Fraction-of-block units of work assigned.
    pub load: f64,
    /// Simulated wall time, `load / true_speed * (1 + noise)`.
    pub duration: f64,
    /// Measured speed `load / duration`; `None` for idle machines.
    pub measured_speed: Option<f64>,
    /// Computed rows as (global start row, values).
    pub partials: Vec<(usize, Vec<f64>)>,
}

/// Per-step reporting record.
#[derive(Debug, Clone)]
pub struct StepMetrics {
    pub step: usize,
    pub mode: AssignMode,
    pub available: Vec<usize>,
    pub stragglers: Vec<usize>,
    /// Machines whose results the master consumed, in arrival order.
    pub responders: Vec<usize>,
    /// Planned makespan under the estimated speeds (exact loads).
    pub estimated_time: f64,
    /// Max load / true speed over consumed responders.
    pub realized_time: f64,
    /// Simulated completion time of the last consumed responder.
    pub finalize_time: f64,
    /// Planned makespan of the equal-split baseline under the same estimates.
    pub baseline_estimated_time: f64,
    /// Per-machine assigned load (fraction-of-block units).
    pub loads: Vec<f64>,
}

/// A combined step: the assembled product and its metrics.
#[derive(Debug)]
pub struct StepOutcome {
    pub product: Vec<f64>,
    pub metrics: StepMetrics,
}

/// Simulation driver holding the workload matrix and master state.
pub struct Simulation<'a> {
    scenario: &'a ResolvedScenario,
    mode: AssignMode,
    matrix: Matrix,
    master: MasterState,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a ResolvedScenario, mode: AssignMode) -> Result<Self> {
        let matrix = build_workload(scenario)?;
        Ok(Self {
            scenario,
            mode,
            matrix,
            master: MasterState::new(scenario.initial_speed_estimate.clone()),
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn master(&self) -> &MasterState {
        &self.master
    }

    /// Runs step `step_index` (0-based) computing `matrix * work`.
    pub fn step(&mut self, step_index: usize, work: &[f64]) -> Result<StepOutcome> {
        let scenario = self.scenario;
        let dims = &scenario.dims;
        let available = scenario
            .timeline
            .get(step_index)
            .ok_or_else(|| Error::StepFailed {
                step: step_index + 1,
                message: "step beyond the scenario timeline".into(),
            })?;
        if work.len() != self.matrix.cols() {
            return Err(Error::StepFailed {
                step: step_index + 1,
                message: format!(
                    "work vector length {} does not match {} columns",
                    work.len(),
                    self.matrix.cols()
                ),
            });
        }

        self.master.speed_estimate = ewma_update(
            &self.master.speed_estimate,
            &self.master.fresh,
            scenario.gamma,
        );
        self.master.fresh = vec![None; dims.machines];
        let estimates = SpeedVector::from_f64s(&self.master.speed_estimate)?;

        // Equal-split baseline makespan under the same estimates; the solved
        // program can never plan worse than this feasible point.
        let baseline_loads = equal_split_loads(scenario, available)?;
        let baseline_estimated = computation_time(&baseline_loads, &estimates, available)?;

        let (assignment, estimated_time) = match self.mode {
            AssignMode::Heterogeneous => {
                let problem = AssignmentProblem::new(
                    dims.clone(),
                    scenario.placement.clone(),
                    estimates.clone(),
                    available.clone(),
                )?;
                let optimum = solve_default(&problem)?;
                if optimum.time > baseline_estimated {
                    return Err(Error::StepFailed {
                        step: step_index + 1,
                        message: "solved makespan exceeds the equal-split baseline".into(),
                    });
                }
                let assignment = fill_all(&optimum.loads, dims, available)?;
                (assignment, rational_to_f64(&optimum.time))
            }
            AssignMode::Homogeneous => {
                let rows = dims.rows_per_submatrix();
                let subs = (0..dims.submatrices)
                    .map(|g| {
                        let storing: Vec<usize> = scenario
                            .placement
                            .machines_storing(g)
                            .into_iter()
                            .filter(|&n| available.contains(n))
                            .collect();
                        homogeneous_cyclic(g, &storing, dims.straggler_tolerance, rows)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let assignment = ComputationAssignment { subs };
                (assignment, rational_to_f64(&baseline_estimated))
            }
        };

        // Workers compute on discretized integer rows; loads for timing are
        // recomputed from those rows.
        let int_loads = assignment.load_matrix(dims);
        let noise = noise_factors(&scenario.noise, step_index, dims.machines);
        let true_speeds = scenario.true_speeds.to_f64s();
        let rows_per_block = dims.rows_per_submatrix();

        let mut reports: Vec<WorkerReport> = available
            .iter()
            .map(|machine| {
                let load = rational_to_f64(&int_loads.column_sum(machine));
                let duration = if load > 0.0 {
                    load / true_speeds[machine] * noise[machine]
                } else {
                    0.0
                };
                let mut partials = Vec::new();
                for sub in &assignment.subs {
                    for (_, range, machines) in sub.tasks() {
                        if machines.contains(&machine) {
                            let start = sub.submatrix * rows_per_block + range.start;
                            let end = sub.submatrix * rows_per_block + range.end;
                            partials.push((start, self.matrix.product_rows(start, end, work)));
                        }
                    }
                }
                WorkerReport {
                    machine,
                    load,
                    duration,
                    measured_speed: (load > 0.0).then(|| load / duration),
                    partials,
                }
            })
            .collect();

        let stragglers = pick_stragglers(scenario, step_index, available.as_slice(), &true_speeds);
        if stragglers.len() > dims.straggler_tolerance {
            return Err(Error::StepFailed {
                step: step_index + 1,
                message: format!(
                    "{} straggler(s) exceed tolerance {}",
                    stragglers.len(),
                    dims.straggler_tolerance
                ),
            });
        }

        // The master consumes the first N_t - S completions among machines
        // that respond at all; ties break by machine index.
        reports.sort_by(|a, b| {
            a.duration
                .partial_cmp(&b.duration)
                .expect("durations are finite")
                .then(a.machine.cmp(&b.machine))
        });
        let quota = available.len() - dims.straggler_tolerance;
        let consumed: Vec<&WorkerReport> = reports
            .iter()
            .filter(|r| !stragglers.contains(&r.machine))
            .take(quota)
            .collect();

        let mut product: Vec<Option<f64>> = vec![None; self.matrix.rows()];
        let mut finalize_time = 0.0f64;
        let mut realized_time = 0.0f64;
        let mut responders = Vec::with_capacity(consumed.len());
        for report in &consumed {
            finalize_time = finalize_time.max(report.duration);
            realized_time = realized_time.max(report.load / true_speeds[report.machine]);
            responders.push(report.machine);
            for (start, values) in &report.partials {
                for (offset, &value) in values.iter().enumerate() {
                    let row = start + offset;
                    match product[row] {
                        None => product[row] = Some(value),
                        // Redundant copies come from identical arithmetic.
                        Some(existing) if existing.to_bits() == value.to_bits() => {}
                        Some(existing) => {
                            return Err(Error::StepFailed {
                                step: step_index + 1,
                                message: format!(
                                    "row {} received diverging copies {existing} and {value}",
                                    row + 1
                                ),
                            });
                        }
                    }
                }
            }
            if report.load > 0.0 {
                self.master.fresh[report.machine] = report.measured_speed;
            }
        }
        let product: Vec<f64> = product
            .into_iter()
            .enumerate()
            .map(|(row, value)| {
                value.ok_or_else(|| Error::StepFailed {
                    step: step_index + 1,
                    message: format!("row {} was never computed", row + 1),
                })
            })
            .collect::<Result<_>>()?;

        let loads = (0..dims.machines)
            .map(|n| rational_to_f64(&int_loads.column_sum(n)))
            .collect();
        Ok(StepOutcome {
            product,
            metrics: StepMetrics {
                step: step_index,
                mode: self.mode,
                available: available.iter().collect(),
                stragglers,
                responders,
                estimated_time,
                realized_time,
                finalize_time,
                baseline_estimated_time: rational_to_f64(&baseline_estimated),
                loads,
            },
        })
    }
}

/// Equal-split loads over storing available machines: the speed-agnostic
/// plan, (1 + S) / |storing| per entry. Exact rationals.
fn equal_split_loads(
    scenario: &ResolvedScenario,
    available: &crate::model::AvailableSet,
) -> Result<LoadMatrix> {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    let dims = &scenario.dims;
    let mut loads = LoadMatrix::zero(dims.submatrices, dims.machines);
    let redundancy = BigInt::from(dims.redundancy() as u64);
    for g in 0..dims.submatrices {
        let storing: Vec<usize> = scenario
            .placement
            .machines_storing(g)
            .into_iter()
            .filter(|&n| available.contains(n))
            .collect();
        if storing.len() < dims.redundancy() {
            return Err(Error::Infeasible {
                submatrix: g + 1,
                available: storing.len(),
                needed: dims.redundancy(),
            });
        }
        let share = BigRational::new(redundancy.clone(), BigInt::from(storing.len() as u64));
        for n in storing {
            loads.set(g, n, share.clone());
        }
    }
    Ok(loads)
}

/// Per-machine multiplicative duration factors for a step; an independent
/// seeded stream per step, drawn in machine order.
fn noise_factors(noise: &NoiseSpec, step_index: usize, machines: usize) -> Vec<f64> {
    match noise {
        NoiseSpec::None => vec![1.0; machines],
        NoiseSpec::Uniform { amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            rng.set_stream(step_index as u64);
            (0..machines)
                .map(|_| 1.0 + rng.gen_range(-amplitude..=*amplitude))
                .collect()
        }
    }
}

/// Straggler set for a step per the scenario policy; subset of `available`.
fn pick_stragglers(
    scenario: &ResolvedScenario,
    step_index: usize,
    available: &[usize],
    true_speeds: &[f64],
) -> Vec<usize> {
    match &scenario.straggler_policy {
        StragglerPolicySpec::None => Vec::new(),
        StragglerPolicySpec::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            rng.set_stream(step_index as u64);
            let mut pool = available.to_vec();
            let count = (*count).min(pool.len());
            let mut chosen = Vec::with_capacity(count);
            for _ in 0..count {
                let i = rng.gen_range(0..pool.len());
                chosen.push(pool.swap_remove(i));
            }
            chosen.sort_unstable();
            chosen
        }
        StragglerPolicySpec::Adversarial { count } => {
            let mut by_speed = available.to_vec();
            by_speed.sort_by(|&a, &b| {
                true_speeds[b]
                    .partial_cmp(&true_speeds[a])
                    .expect("speeds are finite")
                    .then(a.cmp(&b))
            });
            let mut chosen: Vec<usize> = by_speed.into_iter().take(*count).collect();
            chosen.sort_unstable();
            chosen
        }
    }
}

fn build_workload(scenario: &ResolvedScenario) -> Result<Matrix> {
    let size = scenario.dims.rows;
    let matrix = match &scenario.workload {
        WorkloadSpec::Identity => Matrix::identity(size),
        WorkloadSpec::PowerIteration { seed } => Matrix::symmetric_uniform(size, *seed),
        WorkloadSpec::MatrixFile { path } => Matrix::from_text(&std::fs::read_to_string(path)?)?,
    };
    if matrix.rows() != size || matrix.cols() != size {
        return Err(Error::InvalidScenario(format!(
            "workload matrix is {}x{}, scenario declares {size} rows",
            matrix.rows(),
            matrix.cols()
        )));
    }
    Ok(matrix)
}

/// Power-iteration outcome over a full scenario run.
#[derive(Debug)]
pub struct PowerIterationOutcome {
    /// Final normalized iterate.
    pub vector: Vec<f64>,
    /// Rayleigh-quotient estimate of the dominant eigenvalue.
    pub eigenvalue: f64,
    /// Squared error against the reference eigenvector, per step.
    pub nmse: Vec<f64>,
    pub steps: Vec<StepMetrics>,
}

/// Runs `steps` rounds of `b <- X b / ||X b||` through the simulator,
/// starting from the normalized all-ones vector, tracking the error against
/// a directly computed reference eigenvector.
pub fn power_iteration(
    scenario: &ResolvedScenario,
    mode: AssignMode,
) -> Result<PowerIterationOutcome> {
    let size = scenario.dims.rows;
    power_iteration_from(scenario, mode, vec![1.0; size])
}

/// [`power_iteration`] from a caller-chosen non-zero start vector.
pub fn power_iteration_from(
    scenario: &ResolvedScenario,
    mode: AssignMode,
    start: Vec<f64>,
) -> Result<PowerIterationOutcome> {
    let simulation = Simulation::new(scenario, mode)?;
    let matrix = simulation.matrix.clone();
    power_iteration_with(simulation, &matrix, start)
}

fn power_iteration_with(
    mut simulation: Simulation<'_>,
    matrix: &Matrix,
    start: Vec<f64>,
) -> Result<PowerIterationOutcome> {
    if !matrix.is_symmetric() {
        return Err(Error::InvalidScenario(
            "power iteration needs a symmetric matrix".into(),
        ));
    }
    let norm = l2_norm(&start);
    if start.len() != matrix.rows() || norm == 0.0 {
        return Err(Error::InvalidScenario(
            "start vector must be non-zero with one entry per row".into(),
        ));
    }
    let start: Vec<f64> = start.iter().map(|v| v / norm).collect();
    let (reference, _) = reference_eigenvector(matrix, &start);

    let mut iterate = start;
    let mut eigenvalue = 0.0;
    let mut nmse_trace = Vec::new();
    let mut steps = Vec::new();
    for step_index in 0..simulation.scenario.steps() {
        let outcome = simulation.step(step_index, &iterate)?;
        let product = outcome.product;
        let norm = l2_norm(&product);
        if norm == 0.0 {
            return Err(Error::StepFailed {
                step: step_index + 1,
                message: "matrix-vector product vanished".into(),
            });
        }
        eigenvalue = dot(&iterate, &product);
        iterate = product.iter().map(|v| v / norm).collect();
        nmse_trace.push(nmse(&iterate, &reference));
        steps.push(outcome.metrics);
    }
    Ok(PowerIterationOutcome {
        vector: iterate,
        eigenvalue,
        nmse: nmse_trace,
        steps,
    })
}

/// Direct in-process power iteration to convergence; the reference the
/// simulated runs are scored against.
pub fn reference_eigenvector(matrix: &Matrix, start: &[f64]) -> (Vec<f64>, f64) {
    let mut iterate: Vec<f64> = {
        let norm = l2_norm(start);
        start.iter().map(|v| v / norm).collect()
    };
    let mut eigenvalue = 0.0;
    for _ in 0..100_000 {
        let product = matrix.multiply(&iterate);
        let norm = l2_norm(&product);
        if norm == 0.0 {
            break;
        }
        eigenvalue = dot(&iterate, &product);
        let next: Vec<f64> = product.iter().map(|v| v / norm).collect();
        let delta = iterate
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let flipped = iterate
            .iter()
            .zip(&next)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max);
        iterate = next;
        if delta.min(flipped) < 1e-15 {
            break;
        }
    }
    (iterate, eigenvalue)
}

/// Squared distance between unit vectors up to sign: `min_s ||a - s b||^2`.
pub fn nmse(estimate: &[f64], reference: &[f64]) -> f64 {
    let sign = if dot(estimate, reference) < 0.0 {
        -1.0
    } else {
        1.0
    };
    estimate
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - sign * b).powi(2))
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

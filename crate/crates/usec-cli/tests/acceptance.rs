//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! Every tolerance and threshold is pinned here, not configured elsewhere.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use usec::assignment::{fill_all, TOLERANCE_CHECK_CAP};
use usec::model::{ratio, rational_to_f64, AvailableSet, ProblemDims, SpeedVector};
use usec::optimizer::{brute_force_oracle, solve_default, AssignmentProblem};
use usec::placement::StoragePlacement;
use usec::runtime::{power_iteration, AssignMode};
use usec::scenario::{
    DimsSpec, NoiseSpec, PlacementSpec, Scenario, StragglerPolicySpec, TimelineSpec, WorkloadSpec,
};
use usec_cli::commands::trace_csv;
use usec_cli::trials::{run_trials, PlacementKind, SpeedDistribution, TrialsConfig};

fn pass(criterion: usize, name: &str, detail: String) {
    println!("acceptance {criterion} ({name}): PASS - {detail}");
}

fn doubling_speed_problem(placement: StoragePlacement, tolerance: usize) -> AssignmentProblem {
    let machines = placement.machines();
    let blocks = placement.submatrices();
    let dims = ProblemDims::new(machines, blocks, 3, blocks, 1, tolerance).unwrap();
    AssignmentProblem::new(
        dims,
        placement,
        SpeedVector::from_integers(&[1, 2, 4, 8, 16, 32]).unwrap(),
        AvailableSet::all(machines).unwrap(),
    )
    .unwrap()
}

/// Criterion 1: the six-machine worked examples solve to 3/7 (repetition)
/// and 1/7 (cyclic) within 1e-6, in under a second.
#[test]
fn criterion_1_worked_example_exactness() {
    let start = Instant::now();
    let repetition = solve_default(&doubling_speed_problem(
        StoragePlacement::repetition(6, 6, 3).unwrap(),
        0,
    ))
    .unwrap();
    let cyclic = solve_default(&doubling_speed_problem(
        StoragePlacement::cyclic(6, 3).unwrap(),
        0,
    ))
    .unwrap();
    let elapsed = start.elapsed();

    let repetition_value = rational_to_f64(&repetition.time);
    let cyclic_value = rational_to_f64(&cyclic.time);
    assert!(
        (repetition_value - 3.0 / 7.0).abs() <= 1e-6,
        "repetition c* = {repetition_value}"
    );
    assert!(
        (cyclic_value - 1.0 / 7.0).abs() <= 1e-6,
        "cyclic c* = {cyclic_value}"
    );
    assert_eq!(repetition.time, ratio(3, 7));
    assert_eq!(cyclic.time, ratio(1, 7));
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "took {:.3}s, budget 1s",
        elapsed.as_secs_f64()
    );
    pass(
        1,
        "worked-example exactness",
        format!(
            "repetition 3/7, cyclic 1/7 exact in {:.0}ms",
            elapsed.as_secs_f64() * 1e3
        ),
    );
}

struct RandomInstance {
    problem: AssignmentProblem,
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    max_machines: usize,
    max_blocks: usize,
    max_tolerance: usize,
    integer_speeds: bool,
    random_availability: bool,
) -> RandomInstance {
    loop {
        let machines = rng.gen_range(2..=max_machines);
        let blocks = rng.gen_range(1..=max_blocks);
        let tolerance = rng.gen_range(0..=max_tolerance.min(machines - 1));
        let replication = rng.gen_range((tolerance + 1).max(1)..=machines);
        let mut stored = vec![Vec::new(); machines];
        for g in 0..blocks {
            let mut pool: Vec<usize> = (0..machines).collect();
            for _ in 0..replication {
                let i = rng.gen_range(0..pool.len());
                stored[pool.swap_remove(i)].push(g);
            }
        }
        let placement = StoragePlacement::from_sets(stored, blocks).unwrap();
        let speeds = if integer_speeds {
            let values: Vec<u64> = (0..machines).map(|_| rng.gen_range(1..=20)).collect();
            SpeedVector::from_integers(&values).unwrap()
        } else {
            let values: Vec<f64> = (0..machines).map(|_| rng.gen_range(0.5..3.0)).collect();
            SpeedVector::from_f64s(&values).unwrap()
        };
        let available = if random_availability && machines > tolerance + 1 && rng.gen_bool(0.4) {
            let drop = rng.gen_range(0..machines);
            AvailableSet::new((0..machines).filter(|&n| n != drop)).unwrap()
        } else {
            AvailableSet::all(machines).unwrap()
        };
        let dims = ProblemDims::new(machines, blocks, replication, blocks, 1, tolerance).unwrap();
        let problem = AssignmentProblem::new(dims, placement, speeds, available).unwrap();
        if problem.check_feasible().is_ok() {
            return RandomInstance { problem };
        }
    }
}

/// Exact optimum for S = 0 by enumerating machine subsets: the blocks whose
/// storing machines all lie inside a subset must be served by that subset.
fn subset_bound_optimum(problem: &AssignmentProblem) -> BigRational {
    let machines: Vec<usize> = problem.available.iter().collect();
    let storing: Vec<Vec<usize>> = (0..problem.dims.submatrices)
        .map(|g| problem.storing_available(g))
        .collect();
    let mut best = BigRational::zero();
    for mask in 1u64..(1 << machines.len()) {
        let subset: Vec<usize> = machines
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &n)| n)
            .collect();
        let captured = storing
            .iter()
            .filter(|list| list.iter().all(|n| subset.contains(n)))
            .count();
        if captured == 0 {
            continue;
        }
        let bound = BigRational::from_integer(BigInt::from(captured as u64))
            / problem.speeds.sum_over(subset.iter());
        if bound > best {
            best = bound;
        }
    }
    best
}

/// Criterion 2: on 200 seeded random instances (N <= 5, G <= 4, S in {0,1}),
/// the solver agrees with the grid oracle (grid 100) within 1e-2 and matches
/// the tight-cut closed form exactly; under a minute.
#[test]
fn criterion_2_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2001);
    let mut certified = 0usize;
    let mut worst_gap = 0.0f64;
    for trial in 0..200 {
        let instance = random_instance(&mut rng, 5, 4, 1, false, false);
        let problem = &instance.problem;
        let optimum = solve_default(problem).unwrap();
        let exact = rational_to_f64(&optimum.time);
        let grid = brute_force_oracle(problem, 100).unwrap();
        assert!(
            grid + 1e-9 >= exact,
            "trial {trial}: grid {grid} below exact {exact}"
        );
        let gap = grid - exact;
        assert!(gap <= 1e-2, "trial {trial}: gap {gap} exceeds 1e-2");
        worst_gap = worst_gap.max(gap);

        if let Some(cert) = &optimum.certificate {
            let bound = cert
                .bound(problem.dims.redundancy(), &problem.speeds)
                .expect("feasible instance has a rated cut");
            assert_eq!(bound, optimum.time, "trial {trial}: certificate not tight");
            certified += 1;
        }
        if problem.dims.straggler_tolerance == 0 {
            assert_eq!(
                subset_bound_optimum(problem),
                optimum.time,
                "trial {trial}: subset closed form disagrees"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "took {:.1}s, budget 60s",
        elapsed.as_secs_f64()
    );
    pass(
        2,
        "oracle equivalence",
        format!(
            "200 instances, worst grid gap {worst_gap:.2e}, {certified} exact certificates, {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 3: 500 seeded optimizer outputs materialize: the filling pass
/// succeeds, round-trips the loads exactly, needs at most one set per loaded
/// machine, and survives exhaustive straggler checks (S <= 2, N_t <= 8).
#[test]
fn criterion_3_filling_realizability() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    for trial in 0..500 {
        let instance = random_instance(&mut rng, 8, 6, 2, true, true);
        let problem = &instance.problem;
        let optimum = solve_default(problem).unwrap();

        // Smallest row count that realizes the loads as whole rows.
        let mut lcm = BigInt::one();
        for g in 0..optimum.loads.submatrices() {
            for n in 0..optimum.loads.machines() {
                lcm = lcm.lcm(optimum.loads.get(g, n).denom());
            }
        }
        let rows_per_block = lcm.to_usize().expect("small denominators");
        let dims = ProblemDims::new(
            problem.dims.machines,
            problem.dims.submatrices,
            problem.dims.replication,
            rows_per_block * problem.dims.submatrices,
            1,
            problem.dims.straggler_tolerance,
        )
        .unwrap();

        let assignment = fill_all(&optimum.loads, &dims, &problem.available)
            .unwrap_or_else(|e| panic!("trial {trial}: filling failed: {e}"));
        assert_eq!(
            assignment.fractional_load_matrix(&dims),
            optimum.loads,
            "trial {trial}: fractional round trip"
        );
        assert_eq!(
            assignment.load_matrix(&dims),
            optimum.loads,
            "trial {trial}: integer round trip"
        );
        for sub in &assignment.subs {
            let loaded = problem.storing_available(sub.submatrix).len();
            assert!(
                sub.set_count() <= loaded,
                "trial {trial}: block {} used {} sets for {} machines",
                sub.submatrix + 1,
                sub.set_count(),
                loaded
            );
            assert!(sub.check_partition(), "trial {trial}: bad row partition");
        }
        let counterexample = assignment
            .verify_straggler_tolerance(
                problem.dims.straggler_tolerance,
                &problem.available,
                TOLERANCE_CHECK_CAP,
            )
            .unwrap();
        assert_eq!(counterexample, None, "trial {trial}: tolerance violated");
    }
    pass(
        3,
        "filling realizability",
        "500 optimizer outputs filled, exact round trips, exhaustive straggler checks".into(),
    );
}

fn table_ordering_config() -> TrialsConfig {
    TrialsConfig {
        trials: 5000,
        machines: 6,
        replication: 3,
        straggler_tolerance: 0,
        distribution: SpeedDistribution::Exponential { rate: 1.0 },
        seed: 42,
        placements: vec![
            PlacementKind::Cyclic,
            PlacementKind::Repetition,
            PlacementKind::Subset,
        ],
        bins: 50,
    }
}

/// Criterion 4: 5000 unit-rate-exponential trials reproduce the qualitative
/// placement ordering, with cyclic beating repetition in at least 90% of
/// draws; under five minutes.
#[test]
fn criterion_4_placement_ordering() {
    let start = Instant::now();
    let report = run_trials(&table_ordering_config()).unwrap();
    let elapsed = start.elapsed();

    let cyclic = report.summary(PlacementKind::Cyclic).unwrap().clone();
    let repetition = report.summary(PlacementKind::Repetition).unwrap().clone();
    let subset = report.summary(PlacementKind::Subset).unwrap().clone();
    assert!(
        subset.mean <= cyclic.mean,
        "mean(man) {} > mean(cyclic) {}",
        subset.mean,
        cyclic.mean
    );
    assert!(
        cyclic.mean < repetition.mean,
        "mean(cyclic) {} >= mean(repetition) {}",
        cyclic.mean,
        repetition.mean
    );
    assert!(
        repetition.variance > cyclic.variance,
        "variance(repetition) {} <= variance(cyclic) {}",
        repetition.variance,
        cyclic.variance
    );
    let cyclic_wins = report
        .wins_of_over(PlacementKind::Cyclic, PlacementKind::Repetition)
        .unwrap();
    assert!(
        cyclic_wins as f64 >= 0.9 * 5000.0,
        "cyclic won only {cyclic_wins}/5000"
    );
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "took {:.1}s, budget 300s",
        elapsed.as_secs_f64()
    );
    pass(
        4,
        "placement-comparison ordering",
        format!(
            "means man {:.4} <= cyclic {:.4} < repetition {:.4}; cyclic wins {}/5000; {:.1}s",
            subset.mean,
            cyclic.mean,
            repetition.mean,
            cyclic_wins,
            elapsed.as_secs_f64()
        ),
    );
}

fn straggler_scenario(policy: StragglerPolicySpec) -> Scenario {
    Scenario {
        dims: DimsSpec {
            machines: 6,
            submatrices: 6,
            replication: 3,
            rows: 600,
        },
        placement: PlacementSpec::Cyclic,
        true_speeds: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        straggler_tolerance: 2,
        steps: 100,
        gamma: 0.5,
        timeline: TimelineSpec::All,
        noise: NoiseSpec::Uniform {
            amplitude: 0.05,
            seed: 11,
        },
        straggler_policy: policy,
        workload: WorkloadSpec::PowerIteration { seed: 2024 },
        initial_speed_estimate: None,
    }
}

/// Criterion 5: with two random stragglers per step, a 600x600 power
/// iteration over 100 steps ends at the same eigenvector as the
/// straggler-free run (1e-12 componentwise) with reference error below 1e-6.
#[test]
fn criterion_5_straggler_correctness() {
    let with_stragglers = straggler_scenario(StragglerPolicySpec::Random { count: 2, seed: 7 })
        .resolve()
        .unwrap();
    let without = straggler_scenario(StragglerPolicySpec::None)
        .resolve()
        .unwrap();
    let disturbed = power_iteration(&with_stragglers, AssignMode::Heterogeneous).unwrap();
    let clean = power_iteration(&without, AssignMode::Heterogeneous).unwrap();

    let worst = disturbed
        .vector
        .iter()
        .zip(&clean.vector)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-12, "eigenvectors differ by {worst}");
    let final_nmse = *disturbed.nmse.last().unwrap();
    assert!(final_nmse < 1e-6, "final nmse {final_nmse}");
    assert!(disturbed
        .steps
        .iter()
        .all(|metrics| metrics.stragglers.len() == 2));
    pass(
        5,
        "straggler correctness",
        format!("max eigenvector delta {worst:.1e}, final nmse {final_nmse:.1e}"),
    );
}

fn gain_scenario() -> Scenario {
    Scenario {
        dims: DimsSpec {
            machines: 6,
            submatrices: 6,
            replication: 3,
            rows: 600,
        },
        placement: PlacementSpec::Repetition,
        true_speeds: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        straggler_tolerance: 0,
        steps: 20,
        gamma: 0.5,
        timeline: TimelineSpec::All,
        noise: NoiseSpec::None,
        straggler_policy: StragglerPolicySpec::None,
        workload: WorkloadSpec::PowerIteration { seed: 2024 },
        // Steady state from the first step: estimates start at the truth.
        initial_speed_estimate: Some(vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]),
    }
}

/// Criterion 6: on the six-machine repetition instance, the speed-aware
/// assignment runs every step in at most 0.8x the speed-agnostic time, never
/// plans worse than the equal split, and gains at least 20%.
#[test]
fn criterion_6_heterogeneous_gain() {
    let scenario = gain_scenario().resolve().unwrap();
    let het = power_iteration(&scenario, AssignMode::Heterogeneous).unwrap();
    let hom = power_iteration(&scenario, AssignMode::Homogeneous).unwrap();

    let mut worst_ratio = 0.0f64;
    for (a, b) in het.steps.iter().zip(&hom.steps) {
        assert!(
            a.estimated_time <= a.baseline_estimated_time * (1.0 + 1e-12),
            "step {}: planned {} above baseline {}",
            a.step + 1,
            a.estimated_time,
            a.baseline_estimated_time
        );
        let ratio = a.finalize_time / b.finalize_time;
        assert!(
            ratio <= 0.8,
            "step {}: het {} vs hom {} (ratio {ratio})",
            a.step + 1,
            a.finalize_time,
            b.finalize_time
        );
        worst_ratio = worst_ratio.max(ratio);
        let gain = 1.0 - a.estimated_time / b.estimated_time;
        assert!(gain >= 0.2, "step {}: gain {gain}", a.step + 1);
    }
    pass(
        6,
        "heterogeneous gain",
        format!("worst per-step time ratio {worst_ratio:.4} (budget 0.8)"),
    );
}

/// Criterion 7: with gamma 0.5, zero noise, and static speeds, the speed
/// estimates halve their sup-norm error every step down to the numeric floor.
#[test]
fn criterion_7_adaptive_estimation() {
    let truth = vec![1.0, 2.0, 3.0, 5.0];
    let scenario = Scenario {
        dims: DimsSpec {
            machines: 4,
            submatrices: 4,
            replication: 4,
            rows: 40,
        },
        // Full replication keeps every machine loaded, so all report.
        placement: PlacementSpec::Explicit {
            store: vec![vec![1, 2, 3, 4]; 4],
        },
        true_speeds: truth.clone(),
        straggler_tolerance: 0,
        steps: 45,
        gamma: 0.5,
        timeline: TimelineSpec::All,
        noise: NoiseSpec::None,
        straggler_policy: StragglerPolicySpec::None,
        workload: WorkloadSpec::PowerIteration { seed: 5 },
        initial_speed_estimate: None,
    }
    .resolve()
    .unwrap();

    let mut simulation =
        usec::runtime::Simulation::new(&scenario, AssignMode::Heterogeneous).unwrap();
    let work = vec![1.0; 40];
    let error = |estimate: &[f64]| -> f64 {
        estimate
            .iter()
            .zip(&truth)
            .map(|(e, t)| (e - t).abs())
            .fold(0.0, f64::max)
    };
    let floor = 1e-12;
    let mut previous = error(&simulation.master().speed_estimate);
    let mut halvings = 0usize;
    for step in 0..45 {
        simulation.step(step, &work).unwrap();
        let current = error(&simulation.master().speed_estimate);
        // The first step only seeds measurements (the estimate update uses
        // the previous step's reports).
        if step >= 1 && previous > floor {
            assert!(
                current <= previous / 2.0 + floor,
                "step {step}: error {previous} -> {current}"
            );
            halvings += 1;
        }
        previous = current;
    }
    assert!(halvings >= 30, "only {halvings} halving steps observed");
    pass(
        7,
        "adaptive estimation",
        format!("sup-norm error halved for {halvings} consecutive steps to the 1e-12 floor"),
    );
}

/// Criterion 8: repeated runs of the trials study and both simulation
/// scenarios produce byte-identical CSV artifacts.
#[test]
fn criterion_8_determinism() {
    let config = table_ordering_config();
    let first = run_trials(&config).unwrap();
    let second = run_trials(&config).unwrap();
    assert_eq!(first.trials_csv(), second.trials_csv());
    assert_eq!(first.summary_csv(), second.summary_csv());
    assert_eq!(first.histogram_csv(), second.histogram_csv());

    let straggler = straggler_scenario(StragglerPolicySpec::Random { count: 2, seed: 7 })
        .resolve()
        .unwrap();
    let gain = gain_scenario().resolve().unwrap();
    let mut traces = Vec::new();
    for _ in 0..2 {
        let outcomes = vec![
            (
                AssignMode::Heterogeneous,
                power_iteration(&straggler, AssignMode::Heterogeneous).unwrap(),
            ),
            (
                AssignMode::Homogeneous,
                power_iteration(&straggler, AssignMode::Homogeneous).unwrap(),
            ),
        ];
        let gain_outcomes = vec![
            (
                AssignMode::Heterogeneous,
                power_iteration(&gain, AssignMode::Heterogeneous).unwrap(),
            ),
            (
                AssignMode::Homogeneous,
                power_iteration(&gain, AssignMode::Homogeneous).unwrap(),
            ),
        ];
        traces.push((trace_csv(&outcomes), trace_csv(&gain_outcomes)));
    }
    assert_eq!(traces[0].0, traces[1].0, "straggler trace differs");
    assert_eq!(traces[0].1, traces[1].1, "gain trace differs");
    pass(
        8,
        "determinism",
        "trials CSVs and both simulation traces byte-identical across reruns".into(),
    );
}

//! Min-max computation-time solver.
//!
//! Finds the load matrix minimizing the step makespan subject to: every block
//! receives total load exactly 1 + S from its storing available machines, and
//! every entry lies in [0, 1]. Feasibility of a candidate time `c` is decided
//! exactly by a transportation max-flow (source -> block at capacity 1 + S,
//! block -> storing available machine at capacity 1, machine -> sink at
//! capacity c * speed). A violated minimum cut yields a rational lower bound
//! on the optimum; probing that bound directly usually terminates the binary
//! search with the exact optimal value and a tight cut certificate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::model::{computation_time, AvailableSet, LoadMatrix, ProblemDims, SpeedVector};
use crate::placement::StoragePlacement;

/// Additive tolerance used by [`solve_default`].
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Cap on feasibility probes per solve; hitting it means the search fell back
/// to plain interval halving for the whole run.
pub const MAX_PROBES: usize = 200;
/// Desk-scale caps for the exhaustive grid oracle.
pub const ORACLE_MACHINE_CAP: usize = 6;
pub const ORACLE_SUBMATRIX_CAP: usize = 6;

/// One step's assignment problem: dimensions, storage, speeds, availability.
#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    pub dims: ProblemDims,
    pub placement: StoragePlacement,
    pub speeds: SpeedVector,
    pub available: AvailableSet,
}

impl AssignmentProblem {
    pub fn new(
        dims: ProblemDims,
        placement: StoragePlacement,
        speeds: SpeedVector,
        available: AvailableSet,
    ) -> Result<Self> {
        if placement.machines() != dims.machines || speeds.len() != dims.machines {
            return Err(Error::InvalidDims(format!(
                "machine counts disagree: dims {}, placement {}, speeds {}",
                dims.machines,
                placement.machines(),
                speeds.len()
            )));
        }
        if placement.submatrices() != dims.submatrices {
            return Err(Error::InvalidDims(format!(
                "sub-matrix counts disagree: dims {}, placement {}",
                dims.submatrices,
                placement.submatrices()
            )));
        }
        available.check_within(dims.machines)?;
        Ok(Self {
            dims,
            placement,
            speeds,
            available,
        })
    }

    /// Available machines storing the block, ascending.
    pub fn storing_available(&self, submatrix: usize) -> Vec<usize> {
        self.placement
            .machines_storing(submatrix)
            .into_iter()
            .filter(|&n| self.available.contains(n))
            .collect()
    }

    /// Every block needs at least 1 + S storing available machines; otherwise
    /// the per-entry cap of 1 makes the load constraint unsatisfiable.
    pub fn check_feasible(&self) -> Result<()> {
        let needed = self.dims.redundancy();
        for g in 0..self.dims.submatrices {
            let available = self.storing_available(g).len();
            if available < needed {
                return Err(Error::Infeasible {
                    submatrix: g + 1,
                    available,
                    needed,
                });
            }
        }
        Ok(())
    }
}

/// A (violated or tight) cut in the feasibility network: blocks `submatrices`
/// must route their load through `machines` at speed rate, except for
/// `capped_edges` which are saturated at the per-entry cap of 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutCertificate {
    pub submatrices: Vec<usize>,
    pub machines: Vec<usize>,
    pub capped_edges: Vec<(usize, usize)>,
}

impl CutCertificate {
    /// The smallest step time at which this cut is satisfied:
    /// ((1 + S) * |A| - |capped|) / speed(B). `None` when no machine carries
    /// speed-rate load, i.e. the cut is violated at every time (structural
    /// infeasibility).
    pub fn bound(&self, redundancy: usize, speeds: &SpeedVector) -> Option<BigRational> {
        if self.machines.is_empty() {
            return None;
        }
        let numer = BigInt::from(redundancy as u64) * BigInt::from(self.submatrices.len() as u64)
            - BigInt::from(self.capped_edges.len() as u64);
        let speed_sum = speeds.sum_over(self.machines.iter());
        Some(BigRational::from_integer(numer) / speed_sum)
    }
}

/// Solver output: optimal time, a load matrix attaining it, and (when the
/// search snapped onto a cut) the certificate proving optimality exactly.
#[derive(Debug, Clone)]
pub struct Optimum {
    pub time: BigRational,
    pub loads: LoadMatrix,
    pub certificate: Option<CutCertificate>,
}

impl Optimum {
    /// True when `time` is the exact rational optimum (certified by a tight
    /// cut) rather than a tolerance-terminated upper end.
    pub fn is_exact(&self) -> bool {
        self.certificate.is_some()
    }
}

struct Probe {
    feasible: bool,
    loads: Option<LoadMatrix>,
    cut: Option<CutCertificate>,
}

struct Solver<'a> {
    problem: &'a AssignmentProblem,
    avail: Vec<usize>,
    // Per block: storing available machines as positions into `avail`.
    storing: Vec<Vec<usize>>,
    // Speeds of available machines scaled to integers by `speed_denom`.
    int_speeds: Vec<BigInt>,
    speed_denom: BigInt,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a AssignmentProblem) -> Self {
        let avail: Vec<usize> = problem.available.iter().collect();
        let position: std::collections::HashMap<usize, usize> =
            avail.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let storing = (0..problem.dims.submatrices)
            .map(|g| {
                problem
                    .storing_available(g)
                    .into_iter()
                    .map(|n| position[&n])
                    .collect()
            })
            .collect();
        let speed_denom = avail.iter().fold(BigInt::one(), |acc, &n| {
            acc.lcm(problem.speeds.get(n).denom())
        });
        let int_speeds = avail
            .iter()
            .map(|&n| {
                let s = problem.speeds.get(n);
                s.numer() * (&speed_denom / s.denom())
            })
            .collect();
        Self {
            problem,
            avail,
            storing,
            int_speeds,
            speed_denom,
        }
    }

    /// Exact feasibility of candidate time `c`, plus either the extracted
    /// loads (feasible) or a violated cut (infeasible).
    fn probe(&self, c: &BigRational) -> Probe {
        let dims = &self.problem.dims;
        let blocks = dims.submatrices;
        let redundancy = BigInt::from(dims.redundancy() as u64);
        if !c.is_positive() {
            return Probe {
                feasible: false,
                loads: None,
                cut: Some(CutCertificate {
                    submatrices: (0..blocks).collect(),
                    machines: Vec::new(),
                    capped_edges: Vec::new(),
                }),
            };
        }

        // All capacities scaled by denom(c) * speed_denom so they are integers.
        let scale = c.denom() * &self.speed_denom;
        let source = 0;
        let block_node = |g: usize| 1 + g;
        let machine_node = |pos: usize| 1 + blocks + pos;
        let sink = 1 + blocks + self.avail.len();
        let mut net = FlowNetwork::new(sink + 1);

        for g in 0..blocks {
            net.add_edge(source, block_node(g), &redundancy * &scale);
        }
        let mut block_edges: Vec<Vec<usize>> = Vec::with_capacity(blocks);
        for g in 0..blocks {
            block_edges.push(
                self.storing[g]
                    .iter()
                    .map(|&pos| net.add_edge(block_node(g), machine_node(pos), scale.clone()))
                    .collect(),
            );
        }
        for (pos, speed) in self.int_speeds.iter().enumerate() {
            net.add_edge(machine_node(pos), sink, c.numer() * speed);
        }

        let target = BigInt::from(blocks as u64) * &redundancy * &scale;
        let flow = net.max_flow(source, sink);
        if flow == target {
            let mut loads = LoadMatrix::zero(blocks, dims.machines);
            for (g, edges) in block_edges.iter().enumerate() {
                for (&pos, &edge) in self.storing[g].iter().zip(edges) {
                    let pushed = net.flow_on(edge);
                    if !pushed.is_zero() {
                        loads.set(
                            g,
                            self.avail[pos],
                            BigRational::new(pushed.clone(), scale.clone()),
                        );
                    }
                }
            }
            return Probe {
                feasible: true,
                loads: Some(loads),
                cut: None,
            };
        }

        let reach = net.residual_reachable(source);
        let submatrices: Vec<usize> = (0..blocks).filter(|&g| reach[block_node(g)]).collect();
        let machines: Vec<usize> = (0..self.avail.len())
            .filter(|&pos| reach[machine_node(pos)])
            .map(|pos| self.avail[pos])
            .collect();
        let mut capped_edges = Vec::new();
        for &g in &submatrices {
            for &pos in &self.storing[g] {
                if !reach[machine_node(pos)] {
                    capped_edges.push((g, self.avail[pos]));
                }
            }
        }
        Probe {
            feasible: false,
            loads: None,
            cut: Some(CutCertificate {
                submatrices,
                machines,
                capped_edges,
            }),
        }
    }
}

/// Whether a load matrix meeting every constraint exists with step time at
/// most `time`. Monotone non-decreasing in `time`.
pub fn is_feasible(problem: &AssignmentProblem, time: &BigRational) -> Result<bool> {
    problem.check_feasible()?;
    Ok(Solver::new(problem).probe(time).feasible)
}

/// Solves for the optimal step time within additive `tolerance`.
///
/// Probes `max(cut bound, midpoint)` each round: every probe either halves
/// the bracket or lands exactly on the optimum (a cut bound that turns out
/// feasible is the optimum by weak duality). The returned loads are exactly
/// feasible rationals; when a certificate is present the time is exact.
pub fn solve(problem: &AssignmentProblem, tolerance: &BigRational) -> Result<Optimum> {
    problem.check_feasible()?;
    let solver = Solver::new(problem);
    let dims = &problem.dims;
    let total_load =
        BigRational::from_integer(BigInt::from((dims.submatrices * dims.redundancy()) as u64));

    // Lower end: total load over total available speed.
    let available_speed = problem.speeds.sum_over(problem.available.as_slice());
    let mut lo = &total_load / &available_speed;
    let first = solver.probe(&lo);
    if first.feasible {
        // The averaging bound is attained, so it is the exact optimum; the
        // tight cut takes every block through every storing machine.
        let submatrices: Vec<usize> = (0..dims.submatrices).collect();
        let mut machines: Vec<usize> = problem
            .available
            .iter()
            .filter(|&n| !problem.placement.stored_by(n).is_empty())
            .collect();
        machines.sort_unstable();
        let certificate = CutCertificate {
            submatrices,
            machines,
            capped_edges: Vec::new(),
        };
        debug_assert_eq!(
            certificate.bound(dims.redundancy(), &problem.speeds),
            Some(lo.clone())
        );
        return Ok(Optimum {
            time: lo,
            loads: first.loads.expect("feasible probe carries loads"),
            certificate: Some(certificate),
        });
    }
    let mut last_cut = first.cut.expect("infeasible probe carries a cut");

    // Upper end: every block served at unit load by the slowest machine.
    let min_speed = problem
        .available
        .iter()
        .map(|n| problem.speeds.get(n))
        .min()
        .expect("available set is non-empty")
        .clone();
    let mut hi = &total_load / min_speed;
    let mut best: Option<(BigRational, LoadMatrix)> = None;

    let two = BigRational::from_integer(BigInt::from(2));
    for _ in 0..MAX_PROBES {
        if &hi - &lo <= *tolerance {
            break;
        }
        let midpoint = (&lo + &hi) / &two;
        let candidate = last_cut.bound(dims.redundancy(), &problem.speeds);
        let (point, snapped) = match candidate {
            Some(v) if v >= midpoint => (v, true),
            _ => (midpoint, false),
        };
        let probe = solver.probe(&point);
        if probe.feasible {
            let loads = probe.loads.expect("feasible probe carries loads");
            if snapped {
                // A feasible cut bound is the exact optimum.
                return Ok(Optimum {
                    time: point,
                    loads,
                    certificate: Some(last_cut),
                });
            }
            best = Some((point.clone(), loads));
            hi = point;
        } else {
            lo = point;
            last_cut = probe.cut.expect("infeasible probe carries a cut");
        }
    }

    // Tolerance-terminated: report the feasible upper end.
    let (time, loads) = match best {
        Some((time, loads)) if time == hi => (time, loads),
        _ => {
            let probe = solver.probe(&hi);
            debug_assert!(probe.feasible, "structural upper bound must be feasible");
            (hi, probe.loads.expect("feasible probe carries loads"))
        }
    };
    Ok(Optimum {
        time,
        loads,
        certificate: None,
    })
}

/// [`solve`] at the default tolerance.
pub fn solve_default(problem: &AssignmentProblem) -> Result<Optimum> {
    let tolerance = BigRational::from_f64(DEFAULT_TOLERANCE).expect("finite tolerance");
    solve(problem, &tolerance)
}

/// Violated cut at an infeasible `time`, or the tight cut when `time` equals
/// the optimum exactly. Errors when `time` is feasible with slack.
pub fn min_cut_certificate(
    problem: &AssignmentProblem,
    time: &BigRational,
) -> Result<CutCertificate> {
    let probe = Solver::new(problem).probe(time);
    if !probe.feasible {
        return Ok(probe.cut.expect("infeasible probe carries a cut"));
    }
    let optimum = solve_default(problem)?;
    if optimum.time == *time {
        optimum.certificate.ok_or(Error::NoCertificate)
    } else {
        Err(Error::StrictlyFeasible {
            candidate: time.to_string(),
            optimum: optimum.time.to_string(),
        })
    }
}

/// Grid-search oracle: the exact minimum step time over all load matrices
/// whose entries are multiples of 1/`grid_steps` (row sums exactly 1 + S,
/// entries capped at 1). An upper bound on the true optimum, converging as
/// the grid refines.
///
/// Naive enumeration of the discretized set is astronomically large even at
/// desk scale, so the minimum is located by sweeping its possible values:
/// the optimum equals `u / (grid * speed[n])` for some machine `n` and
/// integer unit count `u`, and a candidate value is achievable exactly when
/// integer per-machine capacities admit a transportation witness. That
/// feasibility is decided by checking every subset of blocks (Hall-style
/// counting over at most 2^6 subsets); transportation polytopes with integer
/// bounds have integer witnesses, so the check is exact and the result equals
/// full enumeration.
pub fn brute_force_oracle(problem: &AssignmentProblem, grid_steps: u32) -> Result<f64> {
    let dims = &problem.dims;
    if dims.machines > ORACLE_MACHINE_CAP || dims.submatrices > ORACLE_SUBMATRIX_CAP {
        return Err(Error::SizeCap(format!(
            "oracle is desk-scale only (N <= {ORACLE_MACHINE_CAP}, G <= {ORACLE_SUBMATRIX_CAP})"
        )));
    }
    if grid_steps == 0 {
        return Err(Error::InvalidDims("grid_steps must be positive".into()));
    }
    problem.check_feasible()?;

    let avail: Vec<usize> = problem.available.iter().collect();
    let machine_count = avail.len();
    let blocks = dims.submatrices;
    let grid = grid_steps as u64;
    let units_per_block = dims.redundancy() as u64 * grid;
    let total_units = units_per_block * blocks as u64;

    // Which blocks each available machine stores, as a bitmask over blocks.
    let stored_mask: Vec<u64> = avail
        .iter()
        .map(|&n| {
            (0..blocks)
                .filter(|&g| problem.placement.stores(n, g))
                .fold(0u64, |mask, g| mask | (1 << g))
        })
        .collect();

    // Candidate optima: every achievable per-machine ratio u / (grid * s[n]).
    let mut candidates: Vec<BigRational> = Vec::new();
    for (pos, &n) in avail.iter().enumerate() {
        let max_units = total_units.min(grid * stored_mask[pos].count_ones() as u64);
        let speed = problem.speeds.get(n);
        for u in 1..=max_units {
            candidates.push(BigRational::new(BigInt::from(u), BigInt::from(grid)) / speed);
        }
    }
    candidates.sort();
    candidates.dedup();

    // Integer transportation feasibility at threshold `t`: per-machine
    // capacity floor(t * grid * s[n]), per-edge capacity `grid`, block demand
    // `units_per_block`. Feasible iff every block subset's demand fits.
    let grid_rational = BigRational::from_integer(BigInt::from(grid));
    let feasible = |threshold: &BigRational| -> bool {
        let caps: Vec<u64> = avail
            .iter()
            .map(|&n| {
                let cap = (threshold * &grid_rational * problem.speeds.get(n)).floor();
                cap.to_integer()
                    .to_u64()
                    .map_or(total_units, |c| c.min(total_units))
            })
            .collect();
        for subset in 1u64..(1 << blocks) {
            let demand = units_per_block * subset.count_ones() as u64;
            let mut capacity = 0u64;
            for pos in 0..machine_count {
                let edges = (stored_mask[pos] & subset).count_ones() as u64;
                capacity += caps[pos].min(grid * edges);
            }
            if demand > capacity {
                return false;
            }
        }
        true
    };

    // The predicate is monotone in the threshold; find the first achievable.
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1;
    debug_assert!(feasible(&candidates[hi]), "structural feasibility holds");
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if feasible(&candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(crate::model::rational_to_f64(&candidates[lo]))
}

/// Verifies a solved optimum against the model: constraint satisfaction and
/// makespan equality.
pub fn check_optimum(problem: &AssignmentProblem, optimum: &Optimum) -> Result<()> {
    let violations = crate::model::validate_load_matrix(
        &optimum.loads,
        &problem.placement,
        &problem.available,
        problem.dims.straggler_tolerance,
    );
    if let Some(v) = violations.first() {
        return Err(Error::InvalidDims(format!(
            "optimum violates constraints: {v}"
        )));
    }
    let makespan = computation_time(&optimum.loads, &problem.speeds, &problem.available)?;
    if optimum.is_exact() && makespan != optimum.time {
        return Err(Error::InvalidDims(format!(
            "makespan {makespan} differs from certified optimum {}",
            optimum.time
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(
        placement: StoragePlacement,
        speeds: &[u64],
        straggler_tolerance: usize,
    ) -> AssignmentProblem {
        let machines = placement.machines();
        let submatrices = placement.submatrices();
        let dims = ProblemDims::new(
            machines,
            submatrices,
            1,
            submatrices,
            1,
            straggler_tolerance,
        )
        .unwrap();
        AssignmentProblem::new(
            dims,
            placement,
            SpeedVector::from_integers(speeds).unwrap(),
            AvailableSet::all(machines).unwrap(),
        )
        .unwrap()
    }

    fn doubling_speeds() -> [u64; 6] {
        [1, 2, 4, 8, 16, 32]
    }

    #[test]
    fn single_block_splits_proportionally() {
        let placement = StoragePlacement::from_sets(vec![vec![0], vec![0]], 1).unwrap();
        let p = problem(placement, &[1, 3], 0);
        let opt = solve_default(&p).unwrap();
        assert_eq!(opt.time, ratio(1, 4));
        assert_eq!(opt.loads.get(0, 0), &ratio(1, 4));
        assert_eq!(opt.loads.get(0, 1), &ratio(3, 4));
        assert!(opt.is_exact());
        check_optimum(&p, &opt).unwrap();
    }

    #[test]
    fn cyclic_six_machine_example() {
        let p = problem(
            StoragePlacement::cyclic(6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        let opt = solve_default(&p).unwrap();
        assert_eq!(opt.time, ratio(1, 7));
        check_optimum(&p, &opt).unwrap();
        // The bottleneck: block 3 (0-based 2) can only use machines 1..3 with
        // speed sum 7.
        let cert = opt.certificate.as_ref().unwrap();
        assert!(cert.submatrices.contains(&2));
        assert_eq!(cert.machines, [0, 1, 2]);
        // Machines inside the tight cut run at exactly c* * speed.
        let totals = crate::model::load_vector(&opt.loads);
        for n in 0..3 {
            assert_eq!(totals.get(n), &(ratio(1, 7) * p.speeds.get(n)));
        }
    }

    #[test]
    fn repetition_six_machine_example() {
        let p = problem(
            StoragePlacement::repetition(6, 6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        let opt = solve_default(&p).unwrap();
        assert_eq!(opt.time, ratio(3, 7));
        check_optimum(&p, &opt).unwrap();
        let cert = opt.certificate.as_ref().unwrap();
        assert_eq!(cert.submatrices, [0, 1, 2]);
        assert_eq!(cert.machines, [0, 1, 2]);
    }

    #[test]
    fn infeasible_names_the_block() {
        // Block 1 (0-based 0) stored once but S = 1 needs two copies.
        let placement = StoragePlacement::from_sets(vec![vec![0], vec![]], 1).unwrap();
        let p = problem(placement, &[1, 1], 1);
        match solve_default(&p) {
            Err(Error::Infeasible {
                submatrix: 1,
                available: 1,
                needed: 2,
            }) => {}
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn full_replication_attains_average_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let machines = rng.gen_range(2..=5);
            let blocks = rng.gen_range(1..=4);
            let speeds: Vec<u64> = (0..machines).map(|_| rng.gen_range(1..=9)).collect();
            let stored = vec![(0..blocks).collect::<Vec<_>>(); machines];
            let placement = StoragePlacement::from_sets(stored, blocks).unwrap();
            let p = problem(placement, &speeds, 0);
            let opt = solve_default(&p).unwrap();
            let total_speed = p.speeds.sum_over(p.available.as_slice());
            assert_eq!(
                opt.time,
                BigRational::from_integer(BigInt::from(blocks as u64)) / total_speed
            );
        }
    }

    #[test]
    fn feasibility_is_monotone_in_time() {
        let p = problem(
            StoragePlacement::cyclic(6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        let opt = solve_default(&p).unwrap();
        let below = &opt.time - ratio(1, 1000);
        let above = &opt.time + ratio(1, 1000);
        assert!(!is_feasible(&p, &below).unwrap());
        assert!(is_feasible(&p, &opt.time).unwrap());
        assert!(is_feasible(&p, &above).unwrap());
    }

    #[test]
    fn redundancy_never_speeds_things_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let machines = rng.gen_range(3..=6);
            let replication = rng.gen_range(2..=machines);
            let placement = StoragePlacement::cyclic(machines, replication).unwrap();
            let speeds: Vec<u64> = (0..machines).map(|_| rng.gen_range(1..=9)).collect();
            let c0 = solve_default(&problem(placement.clone(), &speeds, 0))
                .unwrap()
                .time;
            let c1 = solve_default(&problem(placement, &speeds, 1)).unwrap().time;
            assert!(c1 >= c0, "S = 1 gave {c1} < {c0}");
        }
    }

    #[test]
    fn extra_machines_never_hurt() {
        let placement = StoragePlacement::cyclic(6, 3).unwrap();
        let dims = ProblemDims::new(6, 6, 3, 6, 1, 0).unwrap();
        let speeds = SpeedVector::from_integers(&doubling_speeds()).unwrap();
        let narrow = AssignmentProblem::new(
            dims.clone(),
            placement.clone(),
            speeds.clone(),
            AvailableSet::new(0..5).unwrap(),
        )
        .unwrap();
        let wide =
            AssignmentProblem::new(dims, placement, speeds, AvailableSet::all(6).unwrap()).unwrap();
        let c_narrow = solve_default(&narrow).unwrap().time;
        let c_wide = solve_default(&wide).unwrap().time;
        assert!(c_wide <= c_narrow);
    }

    #[test]
    fn oracle_single_block_cases() {
        let even = StoragePlacement::from_sets(vec![vec![0], vec![0]], 1).unwrap();
        let c = brute_force_oracle(&problem(even, &[1, 1], 0), 100).unwrap();
        assert!((c - 0.5).abs() <= 0.01, "got {c}");

        let skewed = StoragePlacement::from_sets(vec![vec![0], vec![0]], 1).unwrap();
        let c = brute_force_oracle(&problem(skewed, &[1, 3], 0), 100).unwrap();
        assert!((c - 0.25).abs() <= 0.01, "got {c}");
    }

    #[test]
    fn oracle_matches_repetition_example() {
        let p = problem(
            StoragePlacement::repetition(6, 6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        let c = brute_force_oracle(&p, 100).unwrap();
        assert!((c - 3.0 / 7.0).abs() <= 0.01, "got {c}");
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let p = problem(StoragePlacement::cyclic(7, 3).unwrap(), &[1; 7], 0);
        assert!(matches!(brute_force_oracle(&p, 10), Err(Error::SizeCap(_))));
    }

    #[test]
    fn oracle_agrees_with_solver_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..30 {
            let machines = rng.gen_range(2..=5);
            let blocks = rng.gen_range(1..=4);
            let tolerance = rng.gen_range(0..=1usize);
            let replication = rng.gen_range(1 + tolerance..=machines.min(3).max(1 + tolerance));
            let stored = random_placement(&mut rng, machines, blocks, replication);
            let placement = StoragePlacement::from_sets(stored, blocks).unwrap();
            let speeds: Vec<u64> = (0..machines).map(|_| rng.gen_range(1..=6)).collect();
            let p = problem(placement, &speeds, tolerance);
            let exact = crate::model::rational_to_f64(&solve_default(&p).unwrap().time);
            let grid = brute_force_oracle(&p, 100).unwrap();
            assert!(
                grid + 1e-9 >= exact && grid - exact <= 1e-2,
                "trial {trial}: exact {exact}, grid {grid}"
            );
        }
    }

    use crate::test_support::random_placement;

    #[test]
    fn certificate_below_cyclic_optimum() {
        let p = problem(
            StoragePlacement::cyclic(6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        let c = ratio(1, 7) - ratio(1, 1000);
        let cert = min_cut_certificate(&p, &c).unwrap();
        assert_eq!(cert.submatrices, [2]);
        assert_eq!(cert.machines, [0, 1, 2]);
        assert_eq!(cert.bound(1, &p.speeds), Some(ratio(1, 7)));
    }

    #[test]
    fn certificate_below_repetition_optimum() {
        let p = problem(
            StoragePlacement::repetition(6, 6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        let c = ratio(3, 7) - ratio(1, 1000);
        let cert = min_cut_certificate(&p, &c).unwrap();
        assert_eq!(cert.submatrices, [0, 1, 2]);
        assert_eq!(cert.machines, [0, 1, 2]);
        assert_eq!(cert.bound(1, &p.speeds), Some(ratio(3, 7)));
    }

    #[test]
    fn certificate_at_tight_optimum() {
        let p = problem(
            StoragePlacement::cyclic(6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        let cert = min_cut_certificate(&p, &ratio(1, 7)).unwrap();
        assert_eq!(cert.bound(1, &p.speeds), Some(ratio(1, 7)));
    }

    #[test]
    fn certificate_rejects_slack() {
        let p = problem(
            StoragePlacement::cyclic(6, 3).unwrap(),
            &doubling_speeds(),
            0,
        );
        match min_cut_certificate(&p, &ratio(1, 2)) {
            Err(Error::StrictlyFeasible { .. }) => {}
            other => panic!("expected slack error, got {other:?}"),
        }
    }

    #[test]
    fn certificate_flags_structural_infeasibility() {
        let placement = StoragePlacement::from_sets(vec![vec![0], vec![]], 1).unwrap();
        let p = problem(placement, &[1, 1], 1);
        let cert = min_cut_certificate(&p, &ratio(10, 1)).unwrap();
        assert_eq!(cert.submatrices, [0]);
        assert!(cert.machines.is_empty());
        assert_eq!(cert.bound(2, &p.speeds), None);
    }

    #[test]
    fn homogeneous_repetition_with_redundancy_balances_at_two() {
        // Six equal machines, grouped repetition, one straggler tolerated:
        // each group of three carries 3 blocks twice over, 6 load units on
        // speed 3, so the balanced optimum is 2 per machine.
        let p = problem(
            StoragePlacement::repetition(6, 6, 3).unwrap(),
            &[1, 1, 1, 1, 1, 1],
            1,
        );
        let opt = solve_default(&p).unwrap();
        assert_eq!(opt.time, ratio(2, 1));
        check_optimum(&p, &opt).unwrap();
        let totals = crate::model::load_vector(&opt.loads);
        for n in 0..6 {
            assert_eq!(totals.get(n), &ratio(2, 1));
        }
    }

    #[test]
    fn zero_storage_machine_gets_zero_load() {
        let placement = StoragePlacement::from_sets(vec![vec![0], vec![0], vec![]], 1).unwrap();
        let p = problem(placement, &[1, 1, 100], 0);
        let opt = solve_default(&p).unwrap();
        assert_eq!(opt.time, ratio(1, 2));
        assert!(opt.loads.get(0, 2).is_zero());
    }
}

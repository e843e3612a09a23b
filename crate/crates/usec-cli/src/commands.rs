//! Subcommand implementations and exit-code mapping.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 infeasible instance.
//! Machine-readable CSV goes to the `--out` directory when given, otherwise
//! to stdout with human summaries on stderr.

use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use usec::assignment::{fill_all, ComputationAssignment, TOLERANCE_CHECK_CAP};
use usec::error::Error;
use usec::model::{rational_to_f64, AvailableSet, LoadMatrix, ProblemDims, SpeedVector};
use usec::optimizer::{solve_default, AssignmentProblem, Optimum};
use usec::placement::StoragePlacement;
use usec::runtime::{power_iteration, AssignMode, PowerIterationOutcome};
use usec::scenario::Scenario;

use crate::cli::{AssignArgs, Cli, Command, SimulateArgs, SolveArgs, TrialsArgs, VerifyArgs};
use crate::trials::{run_trials, PlacementKind, SpeedDistribution, TrialsConfig};

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match &error {
            Error::Infeasible { .. } | Error::StepInfeasible { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: error.to_string(),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Assign(args) => cmd_assign(&args),
        Command::Trials(args) => cmd_trials(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Verify(args) => cmd_verify(&args),
    }
}

/// Fallback block row count when the exact denominators are impractical.
const FALLBACK_ROWS_PER_BLOCK: usize = 840;
/// Largest exact block row count the auto-sizing will pick.
const AUTO_ROWS_CAP: usize = 1_000_000;

struct SolvedInstance {
    dims: ProblemDims,
    problem: AssignmentProblem,
    optimum: Optimum,
    assignment: ComputationAssignment,
    rows_exact: bool,
}

fn parse_speeds(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| Failure::usage(format!("speed `{tok}` is not a number")))
        })
        .collect()
}

fn parse_available(text: Option<&str>, machines: usize) -> Result<AvailableSet, Failure> {
    match text {
        None => Ok(AvailableSet::all(machines)?),
        Some(list) => {
            let ids = list
                .split(',')
                .map(|tok| {
                    let tok = tok.trim();
                    let id: usize = tok.parse().map_err(|_| {
                        Failure::usage(format!("machine id `{tok}` is not a number"))
                    })?;
                    if id == 0 || id > machines {
                        return Err(Failure::usage(format!(
                            "machine id {id} outside 1..={machines}"
                        )));
                    }
                    Ok(id - 1)
                })
                .collect::<Result<Vec<usize>, Failure>>()?;
            Ok(AvailableSet::new(ids)?)
        }
    }
}

fn build_placement(args: &SolveArgs) -> Result<(StoragePlacement, usize), Failure> {
    let need = |value: Option<usize>, flag: &str| {
        value.ok_or_else(|| Failure::usage(format!("{flag} is required for builtin placements")))
    };
    match args.placement.as_str() {
        "repetition" => {
            let machines = need(args.n, "--n")?;
            let replication = need(args.j, "--j")?;
            let blocks = args.g.unwrap_or(machines);
            Ok((
                StoragePlacement::repetition(machines, blocks, replication)?,
                replication,
            ))
        }
        "cyclic" => {
            let machines = need(args.n, "--n")?;
            let replication = need(args.j, "--j")?;
            if let Some(blocks) = args.g {
                if blocks != machines {
                    return Err(Failure::usage(format!(
                        "cyclic placement fixes G = N = {machines}, got --g {blocks}"
                    )));
                }
            }
            Ok((
                StoragePlacement::cyclic(machines, replication)?,
                replication,
            ))
        }
        "man" | "subset" => {
            let machines = need(args.n, "--n")?;
            let replication = need(args.j, "--j")?;
            let placement = StoragePlacement::subset(machines, replication)?;
            if let Some(blocks) = args.g {
                if blocks != placement.submatrices() {
                    return Err(Failure::usage(format!(
                        "subset placement fixes G = C(N, J) = {}, got --g {blocks}",
                        placement.submatrices()
                    )));
                }
            }
            Ok((placement, replication))
        }
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read placement `{path}`: {e}")))?;
            let parsed = StoragePlacement::parse(&text)?;
            Ok((parsed.placement, parsed.replication))
        }
    }
}

/// Smallest block row count realizing the loads exactly, within a cap.
fn exact_rows_per_block(loads: &LoadMatrix) -> Option<usize> {
    let mut lcm = BigInt::from(1u32);
    for g in 0..loads.submatrices() {
        for n in 0..loads.machines() {
            lcm = lcm.lcm(loads.get(g, n).denom());
        }
    }
    lcm.to_usize().filter(|&v| v <= AUTO_ROWS_CAP)
}

fn solve_instance(args: &SolveArgs) -> Result<SolvedInstance, Failure> {
    let (placement, replication) = build_placement(args)?;
    let machines = placement.machines();
    let blocks = placement.submatrices();
    let speeds = parse_speeds(&args.speeds)?;
    if speeds.len() != machines {
        return Err(Failure::usage(format!(
            "{} speed(s) for {machines} machines",
            speeds.len()
        )));
    }
    let available = parse_available(args.avail.as_deref(), machines)?;

    // Solve first; the optimal denominators pick the default row count.
    let probe_dims = ProblemDims::new(machines, blocks, replication, blocks, 1, args.s)?;
    let problem = AssignmentProblem::new(
        probe_dims,
        placement.clone(),
        SpeedVector::from_f64s(&speeds)?,
        available.clone(),
    )?;
    let optimum = solve_default(&problem)?;

    let (rows_per_block, rows_exact) = match args.q {
        Some(total) => {
            if total == 0 || total % blocks != 0 {
                return Err(Failure::usage(format!(
                    "--q {total} is not a positive multiple of G = {blocks}"
                )));
            }
            let per_block = total / blocks;
            let exact =
                exact_rows_per_block(&optimum.loads).is_some_and(|lcm| per_block % lcm == 0);
            (per_block, exact)
        }
        None => match exact_rows_per_block(&optimum.loads) {
            Some(lcm) => (lcm, true),
            None => (FALLBACK_ROWS_PER_BLOCK, false),
        },
    };
    let dims = ProblemDims::new(
        machines,
        blocks,
        replication,
        rows_per_block * blocks,
        1,
        args.s,
    )?;
    let assignment = fill_all(&optimum.loads, &dims, &available)?;
    Ok(SolvedInstance {
        dims,
        problem,
        optimum,
        assignment,
        rows_exact,
    })
}

fn print_solution(args: &SolveArgs, solved: &SolvedInstance) {
    let dims = &solved.dims;
    let optimum = &solved.optimum;
    println!(
        "placement: {} (N={}, G={}, J={}), S={}",
        args.placement, dims.machines, dims.submatrices, dims.replication, dims.straggler_tolerance
    );
    let available: Vec<String> = solved
        .problem
        .available
        .iter()
        .map(|n| (n + 1).to_string())
        .collect();
    println!("available: {}", available.join(","));
    let value = rational_to_f64(&optimum.time);
    if optimum.is_exact() {
        println!("c* = {} = {} (exact)", optimum.time, value);
    } else {
        println!("c* = {value} (within tolerance)");
    }
    println!(
        "normalized (one full matrix pass): {}",
        value / dims.submatrices as f64
    );
    if let Some(cert) = &optimum.certificate {
        let blocks: Vec<String> = cert
            .submatrices
            .iter()
            .map(|g| (g + 1).to_string())
            .collect();
        let machines: Vec<String> = cert.machines.iter().map(|n| (n + 1).to_string()).collect();
        println!(
            "tight cut: sub-matrices {{{}}} served by machines {{{}}}",
            blocks.join(","),
            machines.join(",")
        );
    }
    println!("load matrix mu[g,n] (rows g, cols n):");
    let mut header = String::from("  g\\n");
    for n in 0..dims.machines {
        header.push_str(&format!("{:>9}", n + 1));
    }
    println!("{header}");
    for g in 0..dims.submatrices {
        let mut line = format!("{:>5}", g + 1);
        for n in 0..dims.machines {
            line.push_str(&format!(
                "{:>9.4}",
                rational_to_f64(optimum.loads.get(g, n))
            ));
        }
        println!("{line}");
    }
    println!(
        "rows: q = {} (q/G = {}), materialization {}",
        dims.rows,
        dims.rows_per_submatrix(),
        if solved.rows_exact {
            "exact"
        } else {
            "rounded"
        }
    );
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let solved = solve_instance(args)?;
    print_solution(args, &solved);
    if args.assign {
        let mut buffer = Vec::new();
        solved
            .assignment
            .write_dump(&mut buffer)
            .map_err(|e| Failure::usage(e.to_string()))?;
        print!("{}", String::from_utf8_lossy(&buffer));
    }
    Ok(())
}

fn cmd_assign(args: &AssignArgs) -> Result<(), Failure> {
    let solved = solve_instance(&args.solve)?;
    let mut buffer = Vec::new();
    solved
        .assignment
        .write_dump(&mut buffer)
        .map_err(|e| Failure::usage(e.to_string()))?;
    match &args.out {
        Some(path) => {
            fs::write(path, &buffer).map_err(|e| Failure::usage(e.to_string()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", String::from_utf8_lossy(&buffer)),
    }
    Ok(())
}

fn cmd_trials(args: &TrialsArgs) -> Result<(), Failure> {
    let distribution = match args.dist.as_str() {
        "exp" | "exponential" => {
            if args.rate.is_nan() || args.rate <= 0.0 {
                return Err(Failure::usage(format!(
                    "--rate {} must be positive",
                    args.rate
                )));
            }
            SpeedDistribution::Exponential { rate: args.rate }
        }
        "uniform" => {
            if !(args.hi >= args.lo && args.lo > 0.0) {
                return Err(Failure::usage(format!(
                    "uniform bounds {}..{} invalid",
                    args.lo, args.hi
                )));
            }
            SpeedDistribution::Uniform {
                lo: args.lo,
                hi: args.hi,
            }
        }
        other => return Err(Failure::usage(format!("unknown distribution `{other}`"))),
    };
    let placements = args
        .placements
        .split(',')
        .map(PlacementKind::parse)
        .collect::<usec::Result<Vec<_>>>()?;
    if args.bins == 0 {
        return Err(Failure::usage("--bins must be positive"));
    }
    let config = TrialsConfig {
        trials: args.trials,
        machines: args.n,
        replication: args.j,
        straggler_tolerance: args.s,
        distribution,
        seed: args.seed,
        placements,
        bins: args.bins,
    };
    let report = run_trials(&config)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::usage(e.to_string()))?;
            write_file(dir, "trials.csv", &report.trials_csv())?;
            write_file(dir, "summary.csv", &report.summary_csv())?;
            write_file(dir, "histogram.csv", &report.histogram_csv())?;
            print!("{}", report.summary_text());
        }
        None => {
            print!("{}", report.trials_csv());
            eprint!("{}", report.summary_text());
        }
    }
    Ok(())
}

/// Simulation trace in the documented schema, one row per step per mode.
pub fn trace_csv(outcomes: &[(AssignMode, PowerIterationOutcome)]) -> String {
    let mut out = String::from("step,mode,c_est,c_real,nmse\n");
    for (mode, outcome) in outcomes {
        for (metrics, nmse) in outcome.steps.iter().zip(&outcome.nmse) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                metrics.step + 1,
                mode.label(),
                metrics.estimated_time,
                metrics.realized_time,
                nmse
            ));
        }
    }
    out
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| Failure::usage(format!("cannot read scenario: {e}")))?;
    let scenario = Scenario::from_json(&text)?;
    let resolved = scenario.resolve()?;
    let modes: Vec<AssignMode> = match args.mode.as_str() {
        "both" => vec![AssignMode::Heterogeneous, AssignMode::Homogeneous],
        "het" => vec![AssignMode::Heterogeneous],
        "hom" => vec![AssignMode::Homogeneous],
        other => return Err(Failure::usage(format!("unknown mode `{other}`"))),
    };
    let outcomes = modes
        .iter()
        .map(|&mode| Ok((mode, power_iteration(&resolved, mode)?)))
        .collect::<Result<Vec<_>, Error>>()?;

    let mut summary = String::new();
    for (mode, outcome) in &outcomes {
        let total: f64 = outcome.steps.iter().map(|m| m.finalize_time).sum();
        summary.push_str(&format!(
            "{}: total simulated time {:.6}, eigenvalue {:.6}, final nmse {:.3e}\n",
            mode.label(),
            total,
            outcome.eigenvalue,
            outcome.nmse.last().copied().unwrap_or(f64::NAN)
        ));
    }
    if outcomes.len() == 2 {
        let het: f64 = outcomes[0].1.steps.iter().map(|m| m.finalize_time).sum();
        let hom: f64 = outcomes[1].1.steps.iter().map(|m| m.finalize_time).sum();
        if het > 0.0 {
            summary.push_str(&format!("speedup (hom/het): {:.4}\n", hom / het));
        }
    }

    let csv = trace_csv(&outcomes);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::usage(e.to_string()))?;
            write_file(dir, "trace.csv", &csv)?;
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.placement)
        .map_err(|e| Failure::usage(format!("cannot read placement: {e}")))?;
    let parsed = StoragePlacement::parse(&text)?;
    let placement = parsed.placement;
    println!(
        "placement OK: N={}, G={}, J={}",
        placement.machines(),
        placement.submatrices(),
        parsed.replication
    );
    let Some(speeds_text) = &args.speeds else {
        return Ok(());
    };
    let solve_args = SolveArgs {
        placement: args.placement.to_string_lossy().into_owned(),
        n: None,
        g: None,
        j: None,
        speeds: speeds_text.clone(),
        s: args.s,
        avail: args.avail.clone(),
        assign: false,
        q: args.q,
    };
    let solved = solve_instance(&solve_args)?;
    let violations = usec::model::validate_load_matrix(
        &solved.optimum.loads,
        &solved.problem.placement,
        &solved.problem.available,
        args.s,
    );
    if let Some(first) = violations.first() {
        return Err(Failure {
            code: 2,
            message: format!("optimal loads violate constraints: {first}"),
        });
    }
    println!(
        "solved: c* = {} ({})",
        rational_to_f64(&solved.optimum.time),
        if solved.optimum.is_exact() {
            "exact"
        } else {
            "within tolerance"
        }
    );
    match solved.assignment.verify_straggler_tolerance(
        args.s,
        &solved.problem.available,
        TOLERANCE_CHECK_CAP,
    )? {
        None => {
            println!(
                "straggler tolerance S={} verified over all subsets of {} machine(s)",
                args.s,
                solved.problem.available.len()
            );
            Ok(())
        }
        Some(counterexample) => {
            let stragglers: Vec<String> = counterexample
                .stragglers
                .iter()
                .map(|n| (n + 1).to_string())
                .collect();
            Err(Failure {
                code: 2,
                message: format!(
                    "straggler set {{{}}} leaves sub-matrix {} row set {} uncovered",
                    stragglers.join(","),
                    counterexample.submatrix + 1,
                    counterexample.set_index + 1
                ),
            })
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

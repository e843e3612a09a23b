//! Task materialization: turning fractional loads into disjoint row sets,
//! each computed by a set of 1 + S machines.
//!
//! The heterogeneous path is an iterative filling pass per block: each round
//! groups the machine with the smallest positive remaining load with the
//! largest remaining loads, peels a fraction off the group, and repeats until
//! everything is placed. Fraction arithmetic is exact and the pass finishes
//! within as many rounds as there are loaded machines. The homogeneous path
//! assigns equal consecutive row sets cyclically, ignoring speeds.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{AvailableSet, LoadMatrix, ProblemDims};

/// Default cap on straggler subsets enumerated by the exhaustive tolerance
/// check.
pub const TOLERANCE_CHECK_CAP: usize = 200_000;

/// Half-open range of row indices local to one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowRange {
    pub start: usize,
    pub end: usize,
}

impl RowRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Computation assignment for one block: row sets, their machine sets, and
/// the exact fractional sizes the rows were discretized from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubAssignment {
    /// Block index g.
    pub submatrix: usize,
    /// Exact fractional set sizes; they sum to exactly 1.
    pub alphas: Vec<BigRational>,
    /// Machine set per row set, global machine ids ascending; every set has
    /// exactly 1 + S members.
    pub machine_sets: Vec<Vec<usize>>,
    /// Consecutive row ranges partitioning the block, aligned with `alphas`.
    /// Ranges may be empty when a tiny fraction rounds to zero rows.
    pub row_sets: Vec<RowRange>,
    /// Rows in the block (q/G).
    pub rows: usize,
}

impl SubAssignment {
    /// Number of row sets before dropping empty ranges.
    pub fn set_count(&self) -> usize {
        self.alphas.len()
    }

    /// Row sets with at least one row, paired with their machine sets.
    /// Set ids keep their original position so dumps stay auditable.
    pub fn tasks(&self) -> impl Iterator<Item = (usize, RowRange, &[usize])> {
        self.row_sets
            .iter()
            .enumerate()
            .filter(|(_, range)| !range.is_empty())
            .map(|(f, range)| (f, *range, self.machine_sets[f].as_slice()))
    }

    /// Exact per-machine load fractions implied by the alphas.
    pub fn fractional_loads(&self) -> BTreeMap<usize, BigRational> {
        let mut loads = BTreeMap::new();
        for (f, alpha) in self.alphas.iter().enumerate() {
            for &machine in &self.machine_sets[f] {
                *loads.entry(machine).or_insert_with(BigRational::zero) += alpha;
            }
        }
        loads
    }

    /// Per-machine row counts implied by the discretized ranges.
    pub fn row_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for (_, range, machines) in self.tasks() {
            for &machine in machines {
                *counts.entry(machine).or_insert(0) += range.len();
            }
        }
        counts
    }

    /// True when the row ranges tile `0..rows` consecutively without gaps.
    pub fn check_partition(&self) -> bool {
        let mut cursor = 0;
        for range in &self.row_sets {
            if range.start != cursor || range.end < range.start {
                return false;
            }
            cursor = range.end;
        }
        cursor == self.rows
    }
}

/// Assignments for every block of the matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputationAssignment {
    pub subs: Vec<SubAssignment>,
}

impl ComputationAssignment {
    /// Load matrix recomputed from the discretized integer row sets:
    /// entry (g, n) is rows assigned / rows per block.
    pub fn load_matrix(&self, dims: &ProblemDims) -> LoadMatrix {
        let mut loads = LoadMatrix::zero(self.subs.len(), dims.machines);
        for sub in &self.subs {
            let rows = BigInt::from(sub.rows as u64);
            for (machine, count) in sub.row_counts() {
                loads.set(
                    sub.submatrix,
                    machine,
                    BigRational::new(BigInt::from(count as u64), rows.clone()),
                );
            }
        }
        loads
    }

    /// Load matrix from the exact fractional sizes (pre-discretization).
    pub fn fractional_load_matrix(&self, dims: &ProblemDims) -> LoadMatrix {
        let mut loads = LoadMatrix::zero(self.subs.len(), dims.machines);
        for sub in &self.subs {
            for (machine, load) in sub.fractional_loads() {
                loads.set(sub.submatrix, machine, load);
            }
        }
        loads
    }

    /// Exhaustively checks that for every straggler subset of the given size,
    /// every non-empty row set keeps at least one non-straggling machine.
    /// Returns the first counterexample, or `None` when tolerant.
    pub fn verify_straggler_tolerance(
        &self,
        straggler_tolerance: usize,
        available: &AvailableSet,
        subset_cap: usize,
    ) -> Result<Option<ToleranceCounterexample>> {
        let machines: Vec<usize> = available.iter().collect();
        let subset_count = crate::placement::binomial(machines.len(), straggler_tolerance)
            .ok_or_else(|| {
                Error::SizeCap(format!(
                    "C({}, {straggler_tolerance}) straggler subsets overflow",
                    machines.len()
                ))
            })?;
        if subset_count > subset_cap as u128 {
            return Err(Error::SizeCap(format!(
                "{subset_count} straggler subsets exceed the cap {subset_cap}"
            )));
        }
        if straggler_tolerance == 0 {
            return Ok(self.first_uncovered(&[]));
        }
        let mut counterexample = None;
        for_each_subset(machines.len(), straggler_tolerance, &mut |choice| {
            if counterexample.is_some() {
                return;
            }
            let stragglers: Vec<usize> = choice.iter().map(|&i| machines[i]).collect();
            counterexample = self.first_uncovered(&stragglers);
        });
        Ok(counterexample)
    }

    fn first_uncovered(&self, stragglers: &[usize]) -> Option<ToleranceCounterexample> {
        for sub in &self.subs {
            for (f, _, machines) in sub.tasks() {
                if machines.iter().all(|m| stragglers.contains(m)) {
                    return Some(ToleranceCounterexample {
                        stragglers: stragglers.to_vec(),
                        submatrix: sub.submatrix,
                        set_index: f,
                    });
                }
            }
        }
        None
    }

    /// Writes the audit dump: `g,f,row_start,row_end,machines` per task,
    /// 1-based indices, inclusive row bounds, machines space-separated.
    pub fn write_dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "g,f,row_start,row_end,machines")?;
        for sub in &self.subs {
            for (f, range, machines) in sub.tasks() {
                let ids: Vec<String> = machines.iter().map(|m| (m + 1).to_string()).collect();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    sub.submatrix + 1,
                    f + 1,
                    range.start + 1,
                    range.end,
                    ids.join(" ")
                )?;
            }
        }
        Ok(())
    }
}

/// A straggler subset leaving some row set with no surviving machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToleranceCounterexample {
    pub stragglers: Vec<usize>,
    pub submatrix: usize,
    pub set_index: usize,
}

/// Filling pass for one block. `loads` pairs global machine ids with exact
/// fractions; entries may be zero. Requires: every load in [0, 1], loads
/// summing to exactly `redundancy`, and at least `redundancy` positive
/// entries.
pub fn fill_submatrix(
    submatrix: usize,
    loads: &[(usize, BigRational)],
    redundancy: usize,
    rows: usize,
) -> Result<SubAssignment> {
    let precondition = |message: String| Error::FillPrecondition {
        submatrix: submatrix + 1,
        message,
    };
    if redundancy == 0 {
        return Err(precondition("redundancy must be at least 1".into()));
    }
    let mut remaining: Vec<(usize, BigRational)> = Vec::new();
    let mut total = BigRational::zero();
    for (machine, load) in loads {
        if load.is_negative() || load > &BigRational::one() {
            return Err(precondition(format!(
                "load {} of machine {} outside [0, 1]",
                load,
                machine + 1
            )));
        }
        total += load;
        if load.is_positive() {
            remaining.push((*machine, load.clone()));
        }
    }
    let expected = BigRational::from_integer(BigInt::from(redundancy as u64));
    if total != expected {
        return Err(precondition(format!(
            "loads sum to {total}, expected exactly {redundancy}"
        )));
    }
    if remaining.len() < redundancy {
        return Err(precondition(format!(
            "{} positive load(s) cannot cover {redundancy} copies",
            remaining.len()
        )));
    }

    let iteration_cap = remaining.len();
    // The shrinking fill level: total remaining load over the copy count.
    // Every remaining load stays at or below it.
    let mut level = BigRational::one();
    let mut alphas: Vec<BigRational> = Vec::new();
    let mut machine_sets = Vec::new();

    while !remaining.is_empty() {
        if alphas.len() == iteration_cap {
            return Err(Error::FillIterationCap {
                submatrix: submatrix + 1,
                cap: iteration_cap,
            });
        }
        // Stable ascending by load, then by machine id.
        remaining.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        let count = remaining.len();
        if count < redundancy {
            // Unreachable on inputs meeting the preconditions; the level
            // invariant keeps at least `redundancy` loads positive.
            return Err(Error::FillIterationCap {
                submatrix: submatrix + 1,
                cap: iteration_cap,
            });
        }
        debug_assert!(remaining.iter().all(|(_, load)| *load <= level));

        // The smallest positive load plus the redundancy - 1 largest.
        let mut chosen: Vec<usize> = vec![0];
        chosen.extend(count + 1 - redundancy..count);
        let alpha = if count > redundancy {
            // Keep every excluded load at or below the shrinking level.
            let excluded_max = &remaining[count - redundancy].1;
            (&level - excluded_max).min(remaining[0].1.clone())
        } else {
            remaining[0].1.clone()
        };
        debug_assert!(alpha.is_positive());
        level -= &alpha;

        let mut machines: Vec<usize> = chosen.iter().map(|&i| remaining[i].0).collect();
        machines.sort_unstable();
        machine_sets.push(machines);
        alphas.push(alpha.clone());
        for &i in chosen.iter().rev() {
            remaining[i].1 -= &alpha;
            if remaining[i].1.is_zero() {
                remaining.remove(i);
            }
        }
    }
    debug_assert!(alphas.iter().sum::<BigRational>().is_one());

    let row_sets = discretize_rows(&alphas, rows);
    Ok(SubAssignment {
        submatrix,
        alphas,
        machine_sets,
        row_sets,
        rows,
    })
}

/// Equal consecutive row sets assigned cyclically to the storing machines:
/// set f goes to machines {f, f+1, ..., f+S} modulo the machine count. Used
/// by the speed-agnostic baseline. When the machine count does not divide the
/// row count, set sizes differ by at most one row.
pub fn homogeneous_cyclic(
    submatrix: usize,
    machines: &[usize],
    straggler_tolerance: usize,
    rows: usize,
) -> Result<SubAssignment> {
    let count = machines.len();
    if count < straggler_tolerance + 1 {
        return Err(Error::Infeasible {
            submatrix: submatrix + 1,
            available: count,
            needed: straggler_tolerance + 1,
        });
    }
    let mut sorted = machines.to_vec();
    sorted.sort_unstable();
    let alphas = vec![BigRational::new(BigInt::one(), BigInt::from(count as u64)); count];
    let machine_sets = (0..count)
        .map(|f| {
            let mut set: Vec<usize> = (0..=straggler_tolerance)
                .map(|k| sorted[(f + k) % count])
                .collect();
            set.sort_unstable();
            set
        })
        .collect();
    let row_sets = discretize_rows(&alphas, rows);
    Ok(SubAssignment {
        submatrix,
        alphas,
        machine_sets,
        row_sets,
        rows,
    })
}

/// Runs the filling pass for every block of a feasible load matrix.
pub fn fill_all(
    loads: &LoadMatrix,
    dims: &ProblemDims,
    available: &AvailableSet,
) -> Result<ComputationAssignment> {
    let rows = dims.rows_per_submatrix();
    let redundancy = dims.redundancy();
    let subs = (0..loads.submatrices())
        .map(|g| {
            let machine_loads: Vec<(usize, BigRational)> = available
                .iter()
                .map(|n| (n, loads.get(g, n).clone()))
                .collect();
            fill_submatrix(g, &machine_loads, redundancy, rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComputationAssignment { subs })
}

/// Splits `rows` into consecutive ranges with sizes proportional to the
/// alphas, by largest-remainder rounding (ties to the earlier set), so the
/// sizes total exactly `rows`.
fn discretize_rows(alphas: &[BigRational], rows: usize) -> Vec<RowRange> {
    let rows_big = BigRational::from_integer(BigInt::from(rows as u64));
    let mut sizes: Vec<usize> = Vec::with_capacity(alphas.len());
    let mut remainders: Vec<(BigRational, usize)> = Vec::with_capacity(alphas.len());
    let mut assigned = 0usize;
    for (f, alpha) in alphas.iter().enumerate() {
        let quota = alpha * &rows_big;
        let floor = quota.floor();
        let size = floor.to_integer().to_usize().unwrap_or(0);
        remainders.push((quota - floor, f));
        sizes.push(size);
        assigned += size;
    }
    let mut leftover = rows - assigned;
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, f) in remainders {
        if leftover == 0 {
            break;
        }
        sizes[f] += 1;
        leftover -= 1;
    }
    let mut ranges = Vec::with_capacity(sizes.len());
    let mut cursor = 0;
    for size in sizes {
        ranges.push(RowRange {
            start: cursor,
            end: cursor + size,
        });
        cursor += size;
    }
    ranges
}

fn for_each_subset(items: usize, size: usize, visit: &mut impl FnMut(&[usize])) {
    fn recurse(
        items: usize,
        size: usize,
        start: usize,
        choice: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if choice.len() == size {
            visit(choice);
            return;
        }
        let needed = size - choice.len();
        for i in start..=items.saturating_sub(needed) {
            choice.push(i);
            recurse(items, size, i + 1, choice, visit);
            choice.pop();
        }
    }
    if size <= items && size > 0 {
        recurse(items, size, 0, &mut Vec::new(), visit);
    }
}

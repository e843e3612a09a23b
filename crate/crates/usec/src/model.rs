//! System model: dimensions, speeds, availability, and computation loads.
//!
//! A `q x r` data matrix is split row-wise into `G` equal blocks
//! ("sub-matrices"), each replicated on `J` machines. In a time step a subset
//! of machines is available and each available machine computes a fraction of
//! the rows of every block it stores. Loads are exact rationals throughout;
//! floating-point views exist only at reporting boundaries.
//!
//! Machine and sub-matrix indices are 0-based in code; display/report
//! boundaries (CLI tables, dump files, error messages) add 1.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::placement::StoragePlacement;

/// Problem dimensions shared by every module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDims {
    /// Total machine count (N).
    pub machines: usize,
    /// Number of row blocks the matrix is split into (G).
    pub submatrices: usize,
    /// Copies stored of each block (J).
    pub replication: usize,
    /// Total row count of the data matrix (q); divisible by `submatrices`.
    pub rows: usize,
    /// Column count of the data matrix (r).
    pub cols: usize,
    /// Straggler tolerance (S): each row is computed by 1 + S machines.
    pub straggler_tolerance: usize,
}

impl ProblemDims {
    pub fn new(
        machines: usize,
        submatrices: usize,
        replication: usize,
        rows: usize,
        cols: usize,
        straggler_tolerance: usize,
    ) -> Result<Self> {
        if machines == 0 {
            return Err(Error::InvalidDims("machine count must be positive".into()));
        }
        if submatrices == 0 {
            return Err(Error::InvalidDims(
                "sub-matrix count must be positive".into(),
            ));
        }
        if replication == 0 || replication > machines {
            return Err(Error::InvalidDims(format!(
                "replication J = {replication} must satisfy 1 <= J <= N = {machines}"
            )));
        }
        if !rows.is_multiple_of(submatrices) {
            return Err(Error::InvalidDims(format!(
                "row count {rows} is not divisible by sub-matrix count {submatrices}"
            )));
        }
        Ok(Self {
            machines,
            submatrices,
            replication,
            rows,
            cols,
            straggler_tolerance,
        })
    }

    /// Rows per block, q/G.
    pub fn rows_per_submatrix(&self) -> usize {
        self.rows / self.submatrices
    }

    /// Copies required of every row, 1 + S.
    pub fn redundancy(&self) -> usize {
        1 + self.straggler_tolerance
    }
}

/// Strictly positive per-machine speeds. `speed[n]` is the inverse of the
/// time machine `n` takes to compute all rows of one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeedVector {
    speeds: Vec<BigRational>,
}

impl SpeedVector {
    pub fn new(speeds: Vec<BigRational>) -> Result<Self> {
        for (machine, s) in speeds.iter().enumerate() {
            if !s.is_positive() {
                return Err(Error::NonPositiveSpeed {
                    machine: machine + 1,
                });
            }
        }
        Ok(Self { speeds })
    }

    /// Exact conversion from floats (every finite f64 is a dyadic rational).
    pub fn from_f64s(speeds: &[f64]) -> Result<Self> {
        let mut out = Vec::with_capacity(speeds.len());
        for (machine, &s) in speeds.iter().enumerate() {
            let r = BigRational::from_f64(s).filter(|r| r.is_positive()).ok_or(
                Error::NonPositiveSpeed {
                    machine: machine + 1,
                },
            )?;
            out.push(r);
        }
        Ok(Self { speeds: out })
    }

    pub fn from_integers(speeds: &[u64]) -> Result<Self> {
        Self::new(
            speeds
                .iter()
                .map(|&s| BigRational::from_integer(BigInt::from(s)))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn get(&self, machine: usize) -> &BigRational {
        &self.speeds[machine]
    }

    pub fn iter(&self) -> impl Iterator<Item = &BigRational> {
        self.speeds.iter()
    }

    pub fn sum_over<'a>(&self, machines: impl IntoIterator<Item = &'a usize>) -> BigRational {
        machines
            .into_iter()
            .fold(BigRational::zero(), |acc, &n| acc + &self.speeds[n])
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.speeds.iter().map(rational_to_f64).collect()
    }
}

/// Set of machine indices available in a time step. Non-empty, sorted,
/// deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailableSet {
    machines: Vec<usize>,
}

impl AvailableSet {
    pub fn new(machines: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut machines: Vec<usize> = machines.into_iter().collect();
        machines.sort_unstable();
        machines.dedup();
        if machines.is_empty() {
            return Err(Error::EmptyAvailableSet);
        }
        Ok(Self { machines })
    }

    /// All of `0..machines`.
    pub fn all(machines: usize) -> Result<Self> {
        Self::new(0..machines)
    }

    pub fn contains(&self, machine: usize) -> bool {
        self.machines.binary_search(&machine).is_ok()
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.machines.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.machines
    }

    pub fn check_within(&self, machines: usize) -> Result<()> {
        match self.machines.last() {
            Some(&m) if m >= machines => Err(Error::MachineOutOfRange {
                machine: m + 1,
                machines,
            }),
            _ => Ok(()),
        }
    }
}

/// G x N matrix of fractional computation loads; entry (g, n) is the fraction
/// of block g's rows computed by machine n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadMatrix {
    submatrices: usize,
    machines: usize,
    entries: Vec<BigRational>,
}

impl LoadMatrix {
    pub fn zero(submatrices: usize, machines: usize) -> Self {
        Self {
            submatrices,
            machines,
            entries: vec![BigRational::zero(); submatrices * machines],
        }
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let submatrices = rows.len();
        let machines = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != machines) {
            return Err(Error::InvalidDims("ragged load matrix".into()));
        }
        Ok(Self {
            submatrices,
            machines,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn submatrices(&self) -> usize {
        self.submatrices
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn get(&self, submatrix: usize, machine: usize) -> &BigRational {
        &self.entries[submatrix * self.machines + machine]
    }

    pub fn set(&mut self, submatrix: usize, machine: usize, value: BigRational) {
        self.entries[submatrix * self.machines + machine] = value;
    }

    pub fn row(&self, submatrix: usize) -> &[BigRational] {
        &self.entries[submatrix * self.machines..(submatrix + 1) * self.machines]
    }

    pub fn row_sum(&self, submatrix: usize) -> BigRational {
        self.row(submatrix).iter().sum()
    }

    pub fn column_sum(&self, machine: usize) -> BigRational {
        (0..self.submatrices).map(|g| self.get(g, machine)).sum()
    }
}

/// Per-machine total loads (column sums of a [`LoadMatrix`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadVector {
    totals: Vec<BigRational>,
}

impl LoadVector {
    pub fn get(&self, machine: usize) -> &BigRational {
        &self.totals[machine]
    }

    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BigRational> {
        self.totals.iter()
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.totals.iter().map(rational_to_f64).collect()
    }
}

/// Column sums of the load matrix: total fraction of block-rows each machine
/// computes.
pub fn load_vector(loads: &LoadMatrix) -> LoadVector {
    LoadVector {
        totals: (0..loads.machines()).map(|n| loads.column_sum(n)).collect(),
    }
}

/// Makespan of a step: the maximum over available machines of total load
/// divided by speed.
pub fn computation_time(
    loads: &LoadMatrix,
    speeds: &SpeedVector,
    available: &AvailableSet,
) -> Result<BigRational> {
    if available.is_empty() {
        return Err(Error::EmptyAvailableSet);
    }
    available.check_within(speeds.len())?;
    let mut worst = BigRational::zero();
    for n in available.iter() {
        let t = loads.column_sum(n) / speeds.get(n);
        if t > worst {
            worst = t;
        }
    }
    Ok(worst)
}

/// One violated load-matrix constraint. Indices are 0-based; `Display` adds 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadViolation {
    /// Row sum over storing available machines differs from 1 + S.
    RowSum {
        submatrix: usize,
        expected: BigRational,
        actual: BigRational,
    },
    /// Entry outside [0, 1].
    OutOfRange {
        submatrix: usize,
        machine: usize,
        value: BigRational,
    },
    /// Positive load on a machine that does not store the block.
    NonStoring { submatrix: usize, machine: usize },
    /// Positive load on a machine outside the available set.
    Unavailable { submatrix: usize, machine: usize },
}

impl std::fmt::Display for LoadViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadViolation::RowSum {
                submatrix,
                expected,
                actual,
            } => write!(
                f,
                "sub-matrix {}: load sum {} != {}",
                submatrix + 1,
                actual,
                expected
            ),
            LoadViolation::OutOfRange {
                submatrix,
                machine,
                value,
            } => write!(
                f,
                "entry ({}, {}): load {} outside [0, 1]",
                submatrix + 1,
                machine + 1,
                value
            ),
            LoadViolation::NonStoring { submatrix, machine } => write!(
                f,
                "entry ({}, {}): machine does not store this sub-matrix",
                submatrix + 1,
                machine + 1
            ),
            LoadViolation::Unavailable { submatrix, machine } => write!(
                f,
                "entry ({}, {}): machine is not available",
                submatrix + 1,
                machine + 1
            ),
        }
    }
}

/// Checks a load matrix against the constraint system: every block's load sums
/// to exactly 1 + S over its storing available machines, entries lie in
/// [0, 1], and loads vanish outside storage and availability. Violations are
/// returned as data, not errors.
pub fn validate_load_matrix(
    loads: &LoadMatrix,
    placement: &StoragePlacement,
    available: &AvailableSet,
    straggler_tolerance: usize,
) -> Vec<LoadViolation> {
    let expected = BigRational::from_integer(BigInt::from(straggler_tolerance as u64 + 1));
    let mut violations = Vec::new();
    for g in 0..loads.submatrices() {
        let mut sum = BigRational::zero();
        for n in 0..loads.machines() {
            let value = loads.get(g, n);
            if value.is_negative() || value > &BigRational::one() {
                violations.push(LoadViolation::OutOfRange {
                    submatrix: g,
                    machine: n,
                    value: value.clone(),
                });
            }
            if value.is_zero() {
                continue;
            }
            if !placement.stores(n, g) {
                violations.push(LoadViolation::NonStoring {
                    submatrix: g,
                    machine: n,
                });
            } else if !available.contains(n) {
                violations.push(LoadViolation::Unavailable {
                    submatrix: g,
                    machine: n,
                });
            } else {
                sum += value;
            }
        }
        if sum != expected {
            violations.push(LoadViolation::RowSum {
                submatrix: g,
                expected: expected.clone(),
                actual: sum,
            });
        }
    }
    violations
}

/// Nearest-double view of an exact rational.
pub fn rational_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Convenience constructor for small exact fractions.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

//! Uncoded storage placements: which row blocks each machine keeps.
//!
//! Three generators cover the standard layouts (grouped repetition, cyclic,
//! and one block per J-subset of machines), and a line-oriented text format
//! supports user-supplied placements.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Largest block count a subset placement may generate.
pub const SUBSET_PLACEMENT_CAP: usize = 100_000;

/// Per-machine sets of stored block indices, with the reverse view derived on
/// demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoragePlacement {
    stored: Vec<BTreeSet<usize>>,
    submatrices: usize,
}

impl StoragePlacement {
    /// Builds a placement from per-machine block lists, validating ranges.
    /// A machine may store nothing.
    pub fn from_sets(stored: Vec<Vec<usize>>, submatrices: usize) -> Result<Self> {
        let mut sets = Vec::with_capacity(stored.len());
        for (machine, blocks) in stored.into_iter().enumerate() {
            let mut set = BTreeSet::new();
            for g in blocks {
                if g >= submatrices {
                    return Err(Error::SubmatrixOutOfRange {
                        submatrix: g + 1,
                        submatrices,
                    });
                }
                if !set.insert(g) {
                    return Err(Error::InvalidPlacement(format!(
                        "machine {} lists sub-matrix {} twice",
                        machine + 1,
                        g + 1
                    )));
                }
            }
            sets.push(set);
        }
        Ok(Self {
            stored: sets,
            submatrices,
        })
    }

    pub fn machines(&self) -> usize {
        self.stored.len()
    }

    pub fn submatrices(&self) -> usize {
        self.submatrices
    }

    pub fn stores(&self, machine: usize, submatrix: usize) -> bool {
        self.stored
            .get(machine)
            .is_some_and(|set| set.contains(&submatrix))
    }

    pub fn stored_by(&self, machine: usize) -> &BTreeSet<usize> {
        &self.stored[machine]
    }

    /// Machines storing the block, ascending.
    pub fn machines_storing(&self, submatrix: usize) -> Vec<usize> {
        (0..self.machines())
            .filter(|&n| self.stores(n, submatrix))
            .collect()
    }

    /// Checks that every block is stored by exactly `replication` machines.
    pub fn check_replication(&self, replication: usize) -> Result<()> {
        for g in 0..self.submatrices {
            let count = self.machines_storing(g).len();
            if count != replication {
                return Err(Error::InvalidPlacement(format!(
                    "sub-matrix {} is stored by {} machine(s), expected {}",
                    g + 1,
                    count,
                    replication
                )));
            }
        }
        Ok(())
    }

    /// Grouped repetition: machines are split into N/J groups of J consecutive
    /// machines, blocks into N/J consecutive runs, and group i stores run i.
    pub fn repetition(machines: usize, submatrices: usize, replication: usize) -> Result<Self> {
        if replication == 0 || machines == 0 || !machines.is_multiple_of(replication) {
            return Err(Error::InvalidPlacement(format!(
                "repetition needs J | N, got N = {machines}, J = {replication}"
            )));
        }
        let groups = machines / replication;
        if !submatrices.is_multiple_of(groups) {
            return Err(Error::InvalidPlacement(format!(
                "repetition needs (N/J) | G, got G = {submatrices}, N/J = {groups}"
            )));
        }
        let run = submatrices / groups;
        let stored = (0..machines)
            .map(|n| {
                let group = n / replication;
                (group * run..(group + 1) * run).collect()
            })
            .collect();
        Ok(Self {
            stored,
            submatrices,
        })
    }

    /// Cyclic: with G = N, machine n stores blocks {n, n+1, ..., n+J-1}
    /// modulo N.
    pub fn cyclic(machines: usize, replication: usize) -> Result<Self> {
        if replication == 0 || replication > machines {
            return Err(Error::InvalidPlacement(format!(
                "cyclic needs 1 <= J <= N, got N = {machines}, J = {replication}"
            )));
        }
        let stored = (0..machines)
            .map(|n| (0..replication).map(|k| (n + k) % machines).collect())
            .collect();
        Ok(Self {
            stored,
            submatrices: machines,
        })
    }

    /// Subset placement: one block per J-subset of machines, subsets in
    /// lexicographic order, so G = C(N, J) and each machine stores
    /// C(N-1, J-1) blocks.
    pub fn subset(machines: usize, replication: usize) -> Result<Self> {
        Self::subset_capped(machines, replication, SUBSET_PLACEMENT_CAP)
    }

    pub fn subset_capped(machines: usize, replication: usize, cap: usize) -> Result<Self> {
        if replication == 0 || replication > machines {
            return Err(Error::InvalidPlacement(format!(
                "subset placement needs 1 <= J <= N, got N = {machines}, J = {replication}"
            )));
        }
        let submatrices = binomial(machines, replication)
            .filter(|&g| g <= cap as u128)
            .ok_or_else(|| {
                Error::SizeCap(format!(
                    "C({machines}, {replication}) exceeds the block cap {cap}"
                ))
            })? as usize;
        let mut stored = vec![BTreeSet::new(); machines];
        for (g, subset) in subsets_lexicographic(machines, replication).enumerate() {
            for n in subset {
                stored[n].insert(g);
            }
        }
        Ok(Self {
            stored,
            submatrices,
        })
    }

    /// Parses the placement file format: a header `N G J`, then one line per
    /// machine `n: g1 g2 ...` (1-based, whitespace-separated, `#` comments).
    /// Machines without a line store nothing. Validates |N_g| = J.
    pub fn parse(text: &str) -> Result<ParsedPlacement> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, line)| (i + 1, line.split('#').next().unwrap_or("").trim()))
            .filter(|(_, line)| !line.is_empty());

        let (header_line, header) = lines.next().ok_or_else(|| Error::PlacementParse {
            line: 1,
            message: "missing header line `N G J`".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::PlacementParse {
                line: header_line,
                message: format!("header must be `N G J`, got {} field(s)", fields.len()),
            });
        }
        let parse_field = |line: usize, s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::PlacementParse {
                line,
                message: format!("{what}: `{s}` is not a non-negative integer"),
            })
        };
        let machines = parse_field(header_line, fields[0], "machine count")?;
        let submatrices = parse_field(header_line, fields[1], "sub-matrix count")?;
        let replication = parse_field(header_line, fields[2], "replication")?;

        let mut stored: Vec<Option<Vec<usize>>> = vec![None; machines];
        for (line_no, line) in lines {
            let (machine_part, blocks_part) =
                line.split_once(':').ok_or_else(|| Error::PlacementParse {
                    line: line_no,
                    message: "expected `n: g1 g2 ...`".into(),
                })?;
            let machine = parse_field(line_no, machine_part.trim(), "machine index")?;
            if machine == 0 || machine > machines {
                return Err(Error::PlacementParse {
                    line: line_no,
                    message: format!("machine index {machine} outside 1..={machines}"),
                });
            }
            if stored[machine - 1].is_some() {
                return Err(Error::PlacementParse {
                    line: line_no,
                    message: format!("machine {machine} listed twice"),
                });
            }
            let mut blocks = Vec::new();
            for token in blocks_part.split_whitespace() {
                let g = parse_field(line_no, token, "sub-matrix index")?;
                if g == 0 || g > submatrices {
                    return Err(Error::PlacementParse {
                        line: line_no,
                        message: format!("sub-matrix index {g} outside 1..={submatrices}"),
                    });
                }
                blocks.push(g - 1);
            }
            stored[machine - 1] = Some(blocks);
        }

        let placement = StoragePlacement::from_sets(
            stored.into_iter().map(Option::unwrap_or_default).collect(),
            submatrices,
        )?;
        placement.check_replication(replication)?;
        Ok(ParsedPlacement {
            placement,
            replication,
        })
    }

    /// Serializes to the placement file format (inverse of [`parse`]).
    ///
    /// [`parse`]: StoragePlacement::parse
    pub fn to_file_string(&self, replication: usize) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.machines(),
            self.submatrices(),
            replication
        );
        for (n, set) in self.stored.iter().enumerate() {
            let blocks: Vec<String> = set.iter().map(|g| (g + 1).to_string()).collect();
            out.push_str(&format!("{}: {}\n", n + 1, blocks.join(" ")));
        }
        out
    }
}

/// A placement plus the replication level its file declared.
#[derive(Debug, Clone)]
pub struct ParsedPlacement {
    pub placement: StoragePlacement,
    pub replication: usize,
}

/// C(n, k) without overflow, or `None` past u128 range.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.checked_mul((n - i) as u128)?;
        result /= (i + 1) as u128;
    }
    Some(result)
}

fn subsets_lexicographic(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        // Advance to the next k-subset of 0..n in lexicographic order.
        let next = {
            let mut c = out.clone();
            let mut i = k;
            loop {
                if i == 0 {
                    break None;
                }
                i -= 1;
                if c[i] < n - (k - i) {
                    c[i] += 1;
                    for j in i + 1..k {
                        c[j] = c[j - 1] + 1;
                    }
                    break Some(c);
                }
            }
        };
        current = next;
        Some(out)
    })
}

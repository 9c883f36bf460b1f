//! Canonical set partitions: representation, enumeration, reduction,
//! compatibility, and the ARI / VI agreement metrics.
//!
//! Partitions are stored as restricted-growth label vectors: the first unit
//! carries label 1 and each later unit carries a label at most one larger
//! than the maximum seen so far.  Two partitions are equal iff their label
//! vectors are equal, so equality, hashing, and enumeration are all O(m).

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Hard ceiling for exact enumeration; Bell(13) is about 27.6 million.
pub const ENUMERATION_CAP: usize = 13;

/// A partition of `[m]` in canonical restricted-growth form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<u32>,
}

impl Partition {
    /// Canonicalizes arbitrary integer labels: units are grouped by equal
    /// labels and clusters are renumbered 1.. in order of first appearance.
    pub fn from_labels<T: PartialEq + Copy>(raw: &[T]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput("partition labels"));
        }
        let mut seen: Vec<T> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let pos = match seen.iter().position(|&s| s == r) {
                Some(p) => p,
                None => {
                    seen.push(r);
                    seen.len() - 1
                }
            };
            labels.push(pos as u32 + 1);
        }
        Ok(Partition { labels })
    }

    /// Wraps labels already known to be canonical (sampler hot path).
    pub(crate) fn from_canonical_labels(labels: Vec<u32>) -> Self {
        debug_assert!(!labels.is_empty());
        debug_assert_eq!(canonicalize_u32(&labels), labels);
        Partition { labels }
    }

    /// All units in a single cluster.
    pub fn one_cluster(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyInput("partition labels"));
        }
        Ok(Partition { labels: vec![1; m] })
    }

    /// Every unit in its own cluster.
    pub fn singletons(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyInput("partition labels"));
        }
        Ok(Partition {
            labels: (1..=m as u32).collect(),
        })
    }

    pub fn num_units(&self) -> usize {
        self.labels.len()
    }

    pub fn num_clusters(&self) -> usize {
        *self.labels.iter().max().expect("nonempty") as usize
    }

    /// Canonical 1-based cluster labels.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// 0-based cluster index of unit `i`.
    pub fn cluster_of(&self, i: usize) -> usize {
        self.labels[i] as usize - 1
    }

    /// Cluster sizes indexed by 0-based cluster.
    pub fn cluster_sizes(&self) -> Vec<u32> {
        let mut sizes = vec![0u32; self.num_clusters()];
        for &l in &self.labels {
            sizes[l as usize - 1] += 1;
        }
        sizes
    }

    /// Removes the `removed` units and canonicalizes the grouping of the rest.
    pub fn reduce(&self, removed: &BTreeSet<usize>) -> ReducedPartition {
        let retained: Vec<usize> = (0..self.num_units())
            .filter(|i| !removed.contains(i))
            .collect();
        let sub: Vec<u32> = retained.iter().map(|&i| self.labels[i]).collect();
        ReducedPartition {
            labels: canonicalize_u32(&sub),
            retained,
        }
    }

    /// Grouping restricted to the units selected by `keep`, as canonical
    /// labels.  Restriction of the partition to a subset of `[m]`.
    pub fn restrict<F: Fn(usize) -> bool>(&self, keep: F) -> Vec<u32> {
        let sub: Vec<u32> = (0..self.num_units())
            .filter(|&i| keep(i))
            .map(|i| self.labels[i])
            .collect();
        canonicalize_u32(&sub)
    }

    /// Serialized form used in CSV output, e.g. "1,1,2,2,2".
    pub fn to_label_string(&self) -> String {
        let strs: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        strs.join(",")
    }

    /// Parses the "1,1,2" serialized form, canonicalizing if needed.
    pub fn parse_label_string(s: &str) -> Result<Self> {
        let raw: Vec<i64> = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad partition label {tok:?}")))
            })
            .collect::<Result<_>>()?;
        Partition::from_labels(&raw)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_label_string())
    }
}

fn canonicalize_u32(sub: &[u32]) -> Vec<u32> {
    let mut map: Vec<u32> = Vec::new();
    let mut out = Vec::with_capacity(sub.len());
    for &c in sub {
        let pos = match map.iter().position(|&s| s == c) {
            Some(p) => p,
            None => {
                map.push(c);
                map.len() - 1
            }
        };
        out.push(pos as u32 + 1);
    }
    out
}

/// A partition restricted to a retained subset of the original units.
/// `retained` holds the original (0-based) indices in increasing order;
/// `labels` is the canonical grouping over exactly those units.  An empty
/// retained set yields the unique empty partition, and two empty reductions
/// compare equal regardless of where they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedPartition {
    labels: Vec<u32>,
    retained: Vec<usize>,
}

impl ReducedPartition {
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    /// Removes further units, identified by their ORIGINAL indices.
    pub fn remove_more(&self, removed: &BTreeSet<usize>) -> ReducedPartition {
        let mut labels = Vec::new();
        let mut retained = Vec::new();
        for (pos, &orig) in self.retained.iter().enumerate() {
            if !removed.contains(&orig) {
                labels.push(self.labels[pos]);
                retained.push(orig);
            }
        }
        ReducedPartition {
            labels: canonicalize_u32(&labels),
            retained,
        }
    }
}

/// Per-unit binary reallocation indicators for one time slice: `true` means
/// the unit is held to its allocation in the center partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaVector {
    bits: Vec<bool>,
}

impl GammaVector {
    pub fn new(bits: Vec<bool>) -> Self {
        GammaVector { bits }
    }

    pub fn all_fixed(m: usize) -> Self {
        GammaVector {
            bits: vec![true; m],
        }
    }

    pub fn all_free(m: usize) -> Self {
        GammaVector {
            bits: vec![false; m],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, fixed: bool) {
        self.bits[i] = fixed;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_fixed(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Compatibility of `rho` with the center `rho0` under `gamma`: the two
/// partitions must induce the same grouping on the set of fixed units
/// (`gamma` true); free units are unconstrained.  With no fixed units every
/// partition is compatible; with all units fixed only `rho0` itself is.
pub fn is_compatible(rho: &Partition, rho0: &Partition, gamma: &GammaVector) -> Result<bool> {
    let m = rho.num_units();
    if rho0.num_units() != m {
        return Err(Error::DimensionMismatch {
            what: "center partition",
            expected: m,
            got: rho0.num_units(),
        });
    }
    if gamma.len() != m {
        return Err(Error::DimensionMismatch {
            what: "gamma vector",
            expected: m,
            got: gamma.len(),
        });
    }
    Ok(restrictions_match(
        rho.labels(),
        rho0.labels(),
        |i| gamma.is_fixed(i),
    ))
}

/// Equality of the groupings induced by `p` and `q` on the units selected by
/// `keep`, checked through a bidirectional label mapping without allocating
/// reduced partitions.
pub(crate) fn restrictions_match<F: Fn(usize) -> bool>(p: &[u32], q: &[u32], keep: F) -> bool {
    debug_assert_eq!(p.len(), q.len());
    let k = p.len() + 1;
    // map[p-label] = q-label and vice versa; 0 = unassigned.
    let mut fwd = vec![0u32; k];
    let mut bwd = vec![0u32; k];
    for i in 0..p.len() {
        if !keep(i) {
            continue;
        }
        let (a, b) = (p[i] as usize, q[i] as usize);
        if fwd[a] == 0 && bwd[b] == 0 {
            fwd[a] = b as u32;
            bwd[b] = a as u32;
        } else if fwd[a] != b as u32 || bwd[b] != a as u32 {
            return false;
        }
    }
    true
}

/// All partitions compatible with `rho0` under `gamma`.
pub fn compatible_set(rho0: &Partition, gamma: &GammaVector) -> Result<Vec<Partition>> {
    let m = rho0.num_units();
    if gamma.len() != m {
        return Err(Error::DimensionMismatch {
            what: "gamma vector",
            expected: m,
            got: gamma.len(),
        });
    }
    let set = enumerate_partitions(m)?
        .filter(|p| restrictions_match(p.labels(), rho0.labels(), |i| gamma.is_fixed(i)))
        .collect();
    Ok(set)
}

/// Iterator over every partition of `[m]`, in restricted-growth
/// lexicographic order.
pub fn enumerate_partitions(m: usize) -> Result<PartitionIter> {
    enumerate_partitions_capped(m, ENUMERATION_CAP)
}

/// Enumeration with a caller-chosen cap.
pub fn enumerate_partitions_capped(m: usize, cap: usize) -> Result<PartitionIter> {
    if m == 0 {
        return Err(Error::EmptyInput("partition size"));
    }
    if m > cap {
        return Err(Error::CapExceeded { m, cap });
    }
    Ok(PartitionIter {
        labels: vec![1; m],
        maxes: vec![1; m],
        done: false,
    })
}

pub struct PartitionIter {
    labels: Vec<u32>,
    maxes: Vec<u32>,
    done: bool,
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let item = Partition {
            labels: self.labels.clone(),
        };
        // Advance the restricted-growth string.
        let m = self.labels.len();
        let mut i = m;
        loop {
            if i == 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.labels[i] <= self.maxes[i - 1] {
                self.labels[i] += 1;
                let mx = self.maxes[i - 1].max(self.labels[i]);
                self.maxes[i] = mx;
                for j in i + 1..m {
                    self.labels[j] = 1;
                    self.maxes[j] = mx;
                }
                break;
            }
        }
        Some(item)
    }
}

/// Bell numbers by the Bell-triangle recurrence; panics beyond u64 range
/// (m = 25 is already past the enumeration cap).
pub fn bell(m: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 1..m {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let s = next.last().unwrap().checked_add(v).expect("Bell overflow");
            next.push(s);
        }
        row = next;
    }
    *row.last().unwrap()
}

/// Co-membership counts between two partitions of the same units.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    counts: Vec<u32>,
    k1: usize,
    k2: usize,
    row_sums: Vec<u32>,
    col_sums: Vec<u32>,
    total: u32,
}

impl ContingencyTable {
    pub fn new(p: &Partition, q: &Partition) -> Result<Self> {
        let m = p.num_units();
        if q.num_units() != m {
            return Err(Error::DimensionMismatch {
                what: "partition pair",
                expected: m,
                got: q.num_units(),
            });
        }
        let (k1, k2) = (p.num_clusters(), q.num_clusters());
        let mut counts = vec![0u32; k1 * k2];
        for i in 0..m {
            counts[p.cluster_of(i) * k2 + q.cluster_of(i)] += 1;
        }
        let mut row_sums = vec![0u32; k1];
        let mut col_sums = vec![0u32; k2];
        for r in 0..k1 {
            for c in 0..k2 {
                row_sums[r] += counts[r * k2 + c];
                col_sums[c] += counts[r * k2 + c];
            }
        }
        Ok(ContingencyTable {
            counts,
            k1,
            k2,
            row_sums,
            col_sums,
            total: m as u32,
        })
    }

    pub fn count(&self, r: usize, c: usize) -> u32 {
        self.counts[r * self.k2 + c]
    }

    pub fn num_rows(&self) -> usize {
        self.k1
    }

    pub fn num_cols(&self) -> usize {
        self.k2
    }

    pub fn row_sums(&self) -> &[u32] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u32] {
        &self.col_sums
    }

    pub fn total(&self) -> u32 {
        self.total
    }
}

fn choose2(n: u32) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index; 1 iff the partitions are equal, 0 in
/// expectation under independent random labellings.
pub fn adjusted_rand_index(p: &Partition, q: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(p, q)?;
    let sum_cells: f64 = table.counts.iter().map(|&n| choose2(n)).sum();
    let sum_rows: f64 = table.row_sums.iter().map(|&n| choose2(n)).sum();
    let sum_cols: f64 = table.col_sums.iter().map(|&n| choose2(n)).sum();
    let pairs = choose2(table.total);
    let expected = sum_rows * sum_cols / pairs;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() == 0.0 {
        // Both partitions trivial in the same way; perfect agreement.
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}

pub(crate) fn xlog2x(n: u32) -> f64 {
    if n == 0 {
        0.0
    } else {
        let x = n as f64;
        x * x.log2()
    }
}

/// Variation of information between two partitions, in bits (base-2 logs).
/// Multiply by ln(2) to convert to nats.  Zero iff the partitions are equal;
/// symmetric; satisfies the triangle inequality; bounded by log2(m).
pub fn variation_of_information(p: &Partition, q: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(p, q)?;
    variation_of_information_from_table(&table)
}

pub fn variation_of_information_from_table(table: &ContingencyTable) -> Result<f64> {
    let m = table.total as f64;
    let rows: f64 = table.row_sums.iter().map(|&n| xlog2x(n)).sum();
    let cols: f64 = table.col_sums.iter().map(|&n| xlog2x(n)).sum();
    let cells: f64 = table.counts.iter().map(|&n| xlog2x(n)).sum();
    Ok(((rows + cols - 2.0 * cells) / m).max(0.0))
}

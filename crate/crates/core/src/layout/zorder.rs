use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::{Dataset, Query};

pub const DEFAULT_BITS_PER_COLUMN: u32 = 10;
pub const MAX_SORT_COLUMNS: usize = 3;

/// Sort key: the bit-interleaved rank code, then the raw sort-column values
/// so rows with equal codes still order deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZKey {
    pub z: u64,
    pub values: Vec<f64>,
}

impl ZKey {
    fn cmp(&self, other: &ZKey) -> Ordering {
        self.z.cmp(&other.z).then_with(|| {
            for (a, b) in self.values.iter().zip(&other.values) {
                match a.total_cmp(b) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

/// Range partitioning over a Z-order curve of up to three columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZOrder {
    sort_columns: Vec<usize>,
    bits_per_column: u32,
    /// Sorted sample values per sort column; a value's rank among them is
    /// its normalized coordinate.
    quantiles: Vec<Vec<f64>>,
    /// `k - 1` ascending cut keys; partition `i` holds keys in
    /// `[boundaries[i-1], boundaries[i])`.
    boundaries: Vec<ZKey>,
}

/// Up to three columns by descending predicate frequency (ties to the lower
/// index); the first three columns when the workload is empty.
pub fn zorder_columns(workload: &[Query], num_columns: usize) -> Vec<usize> {
    let mut freq = vec![0usize; num_columns];
    for q in workload {
        for c in q.columns() {
            if c < num_columns {
                freq[c] += 1;
            }
        }
    }
    if freq.iter().all(|&f| f == 0) {
        return (0..num_columns.min(MAX_SORT_COLUMNS)).collect();
    }
    let mut cols: Vec<usize> = (0..num_columns).filter(|&c| freq[c] > 0).collect();
    cols.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    cols.truncate(MAX_SORT_COLUMNS);
    cols
}

impl ZOrder {
    pub fn build(sample: &Dataset, sort_columns: Vec<usize>, bits_per_column: u32, partitions: usize) -> ZOrder {
        assert!(bits_per_column as usize * sort_columns.len().max(1) <= 64, "interleaved key exceeds 64 bits");
        let quantiles = sort_columns
            .iter()
            .map(|&c| {
                let mut v: Vec<f64> = (0..sample.num_rows()).map(|r| sample.value(r, c)).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        let mut z = ZOrder { sort_columns, bits_per_column, quantiles, boundaries: Vec::new() };
        let mut keys: Vec<ZKey> = (0..sample.num_rows()).map(|r| z.key(|c| sample.value(r, c))).collect();
        keys.sort_by(ZKey::cmp);
        let n = keys.len();
        let k = partitions.max(1);
        z.boundaries = if n == 0 { Vec::new() } else { (1..k).map(|j| keys[(j * n / k).min(n - 1)].clone()).collect() };
        z
    }

    pub fn sort_columns(&self) -> &[usize] {
        &self.sort_columns
    }

    pub fn bits_per_column(&self) -> u32 {
        self.bits_per_column
    }

    pub fn partition_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    fn coordinate(&self, i: usize, v: f64) -> u64 {
        let q = &self.quantiles[i];
        if q.is_empty() {
            return 0;
        }
        let rank = q.partition_point(|x| *x < v) as u64;
        let cells = 1u64 << self.bits_per_column;
        (rank * cells / q.len() as u64).min(cells - 1)
    }

    pub fn key<F: Fn(usize) -> f64>(&self, value: F) -> ZKey {
        let values: Vec<f64> = self.sort_columns.iter().map(|&c| value(c)).collect();
        let coords: Vec<u64> = values.iter().enumerate().map(|(i, &v)| self.coordinate(i, v)).collect();
        let mut z = 0u64;
        for bit in (0..self.bits_per_column).rev() {
            for c in &coords {
                z = (z << 1) | ((c >> bit) & 1);
            }
        }
        ZKey { z, values }
    }

    pub fn route<F: Fn(usize) -> f64>(&self, value: F) -> usize {
        let key = self.key(value);
        self.boundaries.partition_point(|b| b.cmp(&key) != Ordering::Greater)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Predicate};

    #[test]
    fn column_selection_rules() {
        let q = |cols: &[usize]| Query::new(0, cols.iter().map(|&c| Predicate::eq(c, 0.0)).collect());
        assert_eq!(zorder_columns(&[q(&[2]), q(&[2])], 5), vec![2]);
        assert_eq!(zorder_columns(&[], 5), vec![0, 1, 2]);
        assert_eq!(zorder_columns(&[], 2), vec![0, 1]);
        assert_eq!(zorder_columns(&[q(&[3]), q(&[1])], 5), vec![1, 3]);
        assert_eq!(zorder_columns(&[q(&[4, 0]), q(&[4, 1]), q(&[2, 3]), q(&[3])], 5), vec![3, 4, 0]);
    }

    #[test]
    fn equal_count_partitions() {
        let n = 1003;
        let ds = Dataset::new(vec![
            Column::numeric("a", (0..n).map(|i| ((i * 7919) % n) as f64).collect()),
            Column::numeric("b", (0..n).map(|i| ((i * 104729) % 997) as f64 / 997.0).collect()),
        ])
        .unwrap();
        let z = ZOrder::build(&ds, vec![0, 1], DEFAULT_BITS_PER_COLUMN, 8);
        let mut counts = vec![0usize; z.partition_count()];
        for r in 0..n {
            counts[z.route(|c| ds.value(r, c))] += 1;
        }
        let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
        assert!(hi - lo <= 1, "{counts:?}");
    }

    #[test]
    fn interleaving_order() {
        let ds = Dataset::new(vec![
            Column::numeric("a", vec![0.0, 1.0]),
            Column::numeric("b", vec![0.0, 1.0]),
        ])
        .unwrap();
        let z = ZOrder::build(&ds, vec![0, 1], 1, 1);
        // a has rank 1 of 2 -> coordinate 1; b rank 0 -> 0; a's bit comes first.
        assert_eq!(z.key(|c| if c == 0 { 1.0 } else { 0.0 }).z, 0b10);
        assert_eq!(z.key(|c| if c == 0 { 0.0 } else { 1.0 }).z, 0b01);
    }
}

//! Structure-of-arrays arc storage.
//!
//! Each 16-byte record is cut into `16 / E` slices of `E` bytes, where `E` is
//! the cache line size divided by the lane width. Slice `k` of every record
//! lives in lane array `k`, so `w` lanes reading consecutive records from one
//! lane array touch exactly one cache line. An exclusive prefix sum over the
//! per-strut arc counts says where each strut's records start.

use std::ops::Range;
use std::sync::atomic::{AtomicU8, Ordering};

use crate::codec::CompressedArc;
use crate::{Error, Result};

pub const RECORD_BYTES: usize = 16;

/// Bytes per lane-array element for a cache line shared by `warp_width` lanes.
pub fn element_width(cacheline: usize, warp_width: usize) -> Result<usize> {
    if warp_width == 0 || cacheline == 0 || !cacheline.is_multiple_of(warp_width) {
        return Err(Error::Config(format!("warp width {warp_width} does not divide cache line {cacheline}")));
    }
    Ok(cacheline / warp_width)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexRegion {
    prefix: Vec<u32>,
}

impl IndexRegion {
    pub fn from_prefix(prefix: Vec<u32>) -> Result<Self> {
        if prefix.first() != Some(&0) || prefix.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("index prefix must start at 0 and be non-decreasing".into()));
        }
        Ok(Self { prefix })
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn num_struts(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.prefix.last().unwrap() as usize
    }

    pub fn range(&self, strut: u32) -> Range<usize> {
        self.prefix[strut as usize] as usize..self.prefix[strut as usize + 1] as usize
    }

    pub fn count(&self, strut: u32) -> usize {
        self.range(strut).len()
    }

    pub fn size_bytes(&self) -> usize {
        self.prefix.len() * 4
    }
}

/// Exclusive prefix sum by a two-phase (upsweep/downsweep) tree scan.
pub fn blelloch_scan(values: &[u64]) -> Vec<u64> {
    let n = values.len().next_power_of_two().max(1);
    let mut tree = vec![0u64; n];
    tree[..values.len()].copy_from_slice(values);
    let mut stride = 1;
    while stride < n {
        for i in (2 * stride - 1..n).step_by(2 * stride) {
            tree[i] += tree[i - stride];
        }
        stride *= 2;
    }
    tree[n - 1] = 0;
    while stride > 1 {
        stride /= 2;
        for i in (2 * stride - 1..n).step_by(2 * stride) {
            let left = tree[i - stride];
            tree[i - stride] = tree[i];
            tree[i] += left;
        }
    }
    tree.truncate(values.len());
    tree
}

/// Group width used for the two-level scan in [`build_index`].
const SCAN_GROUP: usize = 32;

/// Builds the index: each lane group of 32 counts is scanned locally, the
/// group totals are scanned, and the group offsets are added back.
pub fn build_index(counts: &[u32], capacity: u64) -> Result<IndexRegion> {
    let mut prefix: Vec<u64> = Vec::with_capacity(counts.len() + 1);
    let mut totals = Vec::with_capacity(counts.len().div_ceil(SCAN_GROUP));
    for group in counts.chunks(SCAN_GROUP) {
        let vals: Vec<u64> = group.iter().map(|&c| c as u64).collect();
        let local = blelloch_scan(&vals);
        totals.push(local.last().unwrap() + vals.last().unwrap());
        prefix.extend(local);
    }
    let offsets = blelloch_scan(&totals);
    for (g, off) in offsets.iter().enumerate() {
        for p in &mut prefix[g * SCAN_GROUP..((g + 1) * SCAN_GROUP).min(counts.len())] {
            *p += off;
        }
    }
    let total = offsets.last().map_or(0, |o| o + totals.last().unwrap());
    prefix.push(total);
    if total > capacity || total > u32::MAX as u64 {
        return Err(Error::Capacity { needed: total, capacity: capacity.min(u32::MAX as u64) });
    }
    Ok(IndexRegion { prefix: prefix.into_iter().map(|v| v as u32).collect() })
}

/// Lane arrays holding a fixed number of 16-byte records. Writers on
/// disjoint index ranges may run concurrently.
#[derive(Debug)]
pub struct SoABuffer {
    element: usize,
    capacity: usize,
    lanes: Vec<Box<[AtomicU8]>>,
}

impl SoABuffer {
    pub fn new(element: usize, capacity: usize) -> Result<Self> {
        if element == 0 || !RECORD_BYTES.is_multiple_of(element) {
            return Err(Error::Config(format!("element width {element} must divide the {RECORD_BYTES}-byte record")));
        }
        let lanes = (0..RECORD_BYTES / element)
            .map(|_| (0..capacity * element).map(|_| AtomicU8::new(0)).collect())
            .collect();
        Ok(Self { element, capacity, lanes })
    }

    /// Rebuilds a buffer from serialized lane arrays.
    pub fn from_lane_bytes(element: usize, capacity: usize, bytes: &[u8]) -> Result<Self> {
        let buf = Self::new(element, capacity)?;
        if bytes.len() != capacity * RECORD_BYTES {
            return Err(Error::Config("lane data size does not match capacity".into()));
        }
        for (k, lane) in buf.lanes.iter().enumerate() {
            let src = &bytes[k * capacity * element..(k + 1) * capacity * element];
            for (cell, &b) in lane.iter().zip(src) {
                cell.store(b, Ordering::Relaxed);
            }
        }
        Ok(buf)
    }

    pub fn element_width(&self) -> usize {
        self.element
    }

    pub fn num_lane_arrays(&self) -> usize {
        self.lanes.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Byte offset of `slot`'s element in lane array `array`, with the arrays
    /// laid out back to back.
    pub fn element_address(&self, array: usize, slot: usize) -> usize {
        (array * self.capacity + slot) * self.element
    }

    pub fn store(&self, slot: usize, rec: CompressedArc) {
        let bytes = rec.0.to_le_bytes();
        for (k, lane) in self.lanes.iter().enumerate() {
            for j in 0..self.element {
                lane[slot * self.element + j].store(bytes[k * self.element + j], Ordering::Relaxed);
            }
        }
    }

    pub fn load(&self, slot: usize) -> CompressedArc {
        let mut bytes = [0u8; RECORD_BYTES];
        for (k, lane) in self.lanes.iter().enumerate() {
            for j in 0..self.element {
                bytes[k * self.element + j] = lane[slot * self.element + j].load(Ordering::Relaxed);
            }
        }
        CompressedArc(u128::from_le_bytes(bytes))
    }

    pub fn write_arcs(&self, idx: &IndexRegion, strut: u32, records: &[CompressedArc]) -> Result<()> {
        let range = idx.range(strut);
        if records.len() != range.len() {
            return Err(Error::Capacity { needed: records.len() as u64, capacity: range.len() as u64 });
        }
        if range.end > self.capacity {
            return Err(Error::Capacity { needed: range.end as u64, capacity: self.capacity as u64 });
        }
        for (slot, rec) in range.zip(records) {
            self.store(slot, *rec);
        }
        Ok(())
    }

    pub fn read_arcs(&self, idx: &IndexRegion, strut: u32) -> Vec<CompressedArc> {
        idx.range(strut).map(|s| self.load(s)).collect()
    }

    /// Lane arrays concatenated, as stored on disk.
    pub fn lane_bytes(&self) -> Vec<u8> {
        self.lanes.iter().flat_map(|l| l.iter().map(|b| b.load(Ordering::Relaxed))).collect()
    }
}

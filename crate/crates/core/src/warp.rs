//! Warp-centric scheduling and a lock-step execution simulator.
//!
//! Each strut contributes one lane task per neighbor (over both ends).
//! Struts are sorted by task count with a radix sort and packed first-fit
//! into groups of `width` lanes; a strut wider than a group spans
//! consecutive groups joined by a barrier. The executor runs the metamesh
//! phases lane by lane and records the memory transactions and branch
//! divergence each mode would incur.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codec::QuantConfig;
use crate::conic::counters::{self, KernelCounts};
use crate::conic::interval::Span;
use crate::conic::Ellipse;
use crate::lattice::{Lattice, StrutEnd};
use crate::metamesh::{
    assemble_loop, cap_plane, candidate_planes, candidate_section, metamesh_strut, neighbor_candidate,
    tie_tolerance, trim_candidate, ArcLoop, Candidate,
};
use crate::soa::{element_width, RECORD_BYTES};
use crate::store::{encode_strut, EncodedStrut, MetaMeshStore};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Workload {
    pub strut: u32,
    /// Neighbor count at each end.
    pub tasks: [u32; 2],
}

impl Workload {
    pub fn total(&self) -> u32 {
        self.tasks[0] + self.tasks[1]
    }

    /// Lanes occupied: one per task, and one for a strut with none.
    pub fn lanes(&self) -> u32 {
        self.total().max(1)
    }
}

pub fn workloads(lattice: &Lattice, struts: Range<u32>) -> Vec<Workload> {
    struts
        .map(|s| Workload {
            strut: s,
            tasks: [lattice.neighbor_count(s, 0) as u32, lattice.neighbor_count(s, 1) as u32],
        })
        .collect()
}

/// Number of struts per task count (0 = both ends free).
pub fn workload_histogram(lattice: &Lattice) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for w in workloads(lattice, 0..lattice.num_struts() as u32) {
        *h.entry(w.total()).or_insert(0) += 1;
    }
    h
}

/// Synthetic workloads shaped like real lattices: 75% of struts with 2–15
/// tasks, 20% with 16–31 and 5% with 32–48.
pub fn synthetic_workloads(seed: u64, count: usize) -> Vec<Workload> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count as u32)
        .map(|strut| {
            let u: f64 = rng.gen();
            let total = if u < 0.75 {
                rng.gen_range(2..=15)
            } else if u < 0.95 {
                rng.gen_range(16..=31)
            } else {
                rng.gen_range(32..=48)
            };
            let first = rng.gen_range(0..=total);
            Workload { strut, tasks: [first, total - first] }
        })
        .collect()
}

/// Stable LSD radix sort by descending lane count; equal counts keep
/// ascending strut id.
pub fn radix_sort_desc(items: &[Workload]) -> Vec<Workload> {
    let mut cur = items.to_vec();
    cur.sort_by_key(|w| w.strut);
    let max = cur.iter().map(Workload::lanes).max().unwrap_or(0);
    let key = |w: &Workload| max - w.lanes();
    let mut tmp = cur.clone();
    let mut shift = 0;
    while shift < 32 && (max >> shift) > 0 {
        let mut count = [0usize; 257];
        for w in &cur {
            count[((key(w) >> shift) & 0xff) as usize + 1] += 1;
        }
        for i in 1..257 {
            count[i] += count[i - 1];
        }
        for w in &cur {
            let b = ((key(w) >> shift) & 0xff) as usize;
            tmp[count[b]] = *w;
            count[b] += 1;
        }
        std::mem::swap(&mut cur, &mut tmp);
        shift += 8;
    }
    cur
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub strut: u32,
    pub lane_offset: u32,
    pub lane_span: u32,
    /// First task of the strut handled here; nonzero only for continuation groups.
    pub task_offset: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LaneGroup {
    pub slots: Vec<Slot>,
    /// Set on every group of a strut that spans several groups.
    pub barrier: Option<u32>,
}

impl LaneGroup {
    pub fn used(&self) -> u32 {
        self.slots.iter().map(|s| s.lane_span).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WarpPlan {
    pub width: u32,
    pub groups: Vec<LaneGroup>,
}

impl WarpPlan {
    pub fn utilization(&self) -> f64 {
        if self.groups.is_empty() {
            return 1.0;
        }
        let used: u64 = self.groups.iter().map(|g| g.used() as u64).sum();
        used as f64 / (self.groups.len() as u64 * self.width as u64) as f64
    }

    /// Checks coverage, lane disjointness and the no-split rule.
    pub fn validate(&self, workloads: &[Workload]) -> std::result::Result<(), String> {
        let w = self.width;
        let mut seen: HashMap<u32, Vec<(usize, Slot)>> = HashMap::new();
        for (gi, g) in self.groups.iter().enumerate() {
            let mut lanes = vec![false; w as usize];
            for s in &g.slots {
                if s.lane_span == 0 || s.lane_offset + s.lane_span > w {
                    return Err(format!("group {gi}: slot out of bounds"));
                }
                for l in s.lane_offset..s.lane_offset + s.lane_span {
                    if std::mem::replace(&mut lanes[l as usize], true) {
                        return Err(format!("group {gi}: lane {l} used twice"));
                    }
                }
                seen.entry(s.strut).or_default().push((gi, *s));
            }
        }
        if seen.len() != workloads.len() {
            return Err(format!("{} struts planned, {} given", seen.len(), workloads.len()));
        }
        for wl in workloads {
            let parts = seen.get(&wl.strut).ok_or_else(|| format!("strut {} missing", wl.strut))?;
            let lanes = wl.lanes();
            if lanes <= w {
                if parts.len() != 1 || parts[0].1.lane_span != lanes {
                    return Err(format!("strut {} split or mis-sized", wl.strut));
                }
            } else {
                let k = lanes.div_ceil(w) as usize;
                if parts.len() != k {
                    return Err(format!("strut {} uses {} groups, expected {k}", wl.strut, parts.len()));
                }
                for (j, (gi, s)) in parts.iter().enumerate() {
                    if *gi != parts[0].0 + j || s.task_offset != j as u32 * w {
                        return Err(format!("strut {} groups not consecutive", wl.strut));
                    }
                    if self.groups[*gi].barrier != Some(wl.strut) {
                        return Err(format!("strut {} missing barrier", wl.strut));
                    }
                }
                let total: u32 = parts.iter().map(|p| p.1.lane_span).sum();
                if total != lanes {
                    return Err(format!("strut {} lanes {total} != {lanes}", wl.strut));
                }
            }
        }
        Ok(())
    }
}

fn push_wide(groups: &mut Vec<LaneGroup>, wl: &Workload, w: u32) -> u32 {
    let lanes = wl.lanes();
    let k = lanes.div_ceil(w);
    let mut last = 0;
    for j in 0..k {
        last = (lanes - j * w).min(w);
        groups.push(LaneGroup {
            slots: vec![Slot { strut: wl.strut, lane_offset: 0, lane_span: last, task_offset: j * w }],
            barrier: (k > 1).then_some(wl.strut),
        });
    }
    w - last
}

/// Sort-and-scan packing: descending radix sort, then first fit.
pub fn schedule(workloads: &[Workload], w: u32) -> WarpPlan {
    let w = w.max(1);
    let mut groups: Vec<LaneGroup> = Vec::new();
    // open[c]: groups with exactly c free lanes, by index.
    let mut open: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); w as usize];
    for wl in radix_sort_desc(workloads) {
        let lanes = wl.lanes();
        if lanes > w {
            let free = push_wide(&mut groups, &wl, w);
            if free > 0 {
                open[free as usize].insert(groups.len() - 1);
            }
            continue;
        }
        let fit = (lanes as usize..w as usize)
            .filter_map(|c| open[c].first().map(|&g| (g, c)))
            .min();
        match fit {
            Some((g, c)) => {
                open[c].remove(&g);
                let offset = w - c as u32;
                groups[g].slots.push(Slot { strut: wl.strut, lane_offset: offset, lane_span: lanes, task_offset: 0 });
                let left = c as u32 - lanes;
                if left > 0 {
                    open[left as usize].insert(g);
                }
            }
            None => {
                let free = push_wide(&mut groups, &wl, w);
                if free > 0 {
                    open[free as usize].insert(groups.len() - 1);
                }
            }
        }
    }
    WarpPlan { width: w, groups }
}

/// Baseline: each strut alone in its own group(s), in id order.
pub fn schedule_one_per_group(workloads: &[Workload], w: u32) -> WarpPlan {
    let w = w.max(1);
    let mut groups = Vec::new();
    let mut sorted = workloads.to_vec();
    sorted.sort_by_key(|x| x.strut);
    for wl in &sorted {
        push_wide(&mut groups, wl, w);
    }
    WarpPlan { width: w, groups }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Warp,
    Thread,
    Serial,
}

impl FromStr for ExecMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "warp" => Ok(Self::Warp),
            "thread" => Ok(Self::Thread),
            "serial" => Ok(Self::Serial),
            _ => Err(Error::Config(format!("unknown exec mode {s:?}; expected warp, thread or serial"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    pub mode: ExecMode,
    pub width: u32,
    pub cacheline: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { mode: ExecMode::Warp, width: 32, cacheline: 128 }
    }
}

impl EngineConfig {
    pub fn element_width(&self) -> Result<usize> {
        let e = element_width(self.cacheline, self.width as usize)?;
        if !RECORD_BYTES.is_multiple_of(e) {
            return Err(Error::Config(format!("element width {e} does not divide a {RECORD_BYTES}-byte record")));
        }
        Ok(e)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExecStats {
    pub mode: Option<ExecMode>,
    pub width: u32,
    pub struts: u64,
    pub arcs: u64,
    pub groups: u64,
    pub used_lanes: u64,
    pub lane_utilization: f64,
    pub baseline_utilization: f64,
    pub baseline_groups: u64,
    pub load_transactions: u64,
    pub store_transactions: u64,
    pub transactions: u64,
    pub divergence_events: u64,
    pub barrier_groups: u64,
    pub quarantined: u64,
    pub kernels: KernelCounts,
    pub schedule_secs: f64,
    pub compute_secs: f64,
    pub encode_secs: f64,
}

impl ExecStats {
    /// Accumulates a chunk's stats; utilizations are recomputed from lane counts.
    pub fn merge(&mut self, o: &ExecStats) {
        self.mode = self.mode.or(o.mode);
        self.width = self.width.max(o.width);
        self.struts += o.struts;
        self.arcs += o.arcs;
        self.groups += o.groups;
        self.used_lanes += o.used_lanes;
        self.baseline_groups += o.baseline_groups;
        let cap = |g: u64| (g * self.width.max(1) as u64).max(1) as f64;
        self.lane_utilization = if self.groups == 0 { 1.0 } else { self.used_lanes as f64 / cap(self.groups) };
        self.baseline_utilization =
            if self.baseline_groups == 0 { 1.0 } else { self.used_lanes as f64 / cap(self.baseline_groups) };
        self.load_transactions += o.load_transactions;
        self.store_transactions += o.store_transactions;
        self.transactions += o.transactions;
        self.divergence_events += o.divergence_events;
        self.barrier_groups += o.barrier_groups;
        self.quarantined += o.quarantined;
        self.kernels.auxiliary_plane += o.kernels.auxiliary_plane;
        self.kernels.intersect_strut_plane += o.kernels.intersect_strut_plane;
        self.kernels.arc_range += o.kernels.arc_range;
        self.schedule_secs += o.schedule_secs;
        self.compute_secs += o.compute_secs;
        self.encode_secs += o.encode_secs;
    }
}

type LaneResult = (Result<[ArcLoop; 2]>, Trace);

/// Per-strut record of what each lane task did, used by the cost model.
#[derive(Clone, Debug, Default)]
struct Trace {
    /// `(end, neighbor)` per task; a strut without neighbors has none.
    tasks: Vec<(u8, u32)>,
    /// Trim outcome per task: 0 empty, 1 full, 2 one span, 3 several.
    paths: Vec<u8>,
    /// Record indices (within the strut) written by each lane.
    records: Vec<Vec<u32>>,
}

fn path_of(spans: &[Span]) -> u8 {
    match spans {
        [] => 0,
        [s] if s.is_full() => 1,
        [_] => 2,
        _ => 3,
    }
}

fn tasks_of(lattice: &Lattice, strut: u32) -> Vec<(u8, u32)> {
    let mut t: Vec<(u8, u32)> = lattice.neighbors_at(strut, 0).into_iter().map(|n| (0, n)).collect();
    t.extend(lattice.neighbors_at(strut, 1).into_iter().map(|n| (1, n)));
    t
}

/// Per-end working set shared by the lanes of one strut.
struct EndState {
    end: StrutEnd,
    cands: Vec<Option<Candidate>>,
    ellipses: Vec<Option<Ellipse>>,
    spans: Vec<Vec<Span>>,
}

struct StrutState {
    strut: u32,
    ends: [EndState; 2],
    tasks: Vec<(u8, u32)>,
    failed: bool,
}

impl StrutState {
    fn new(lattice: &Lattice, strut: u32) -> Self {
        let tasks = tasks_of(lattice, strut);
        let ends = [0u8, 1].map(|e| {
            let end = lattice.strut_end(strut, e);
            let k = lattice.neighbor_count(strut, e) + 1;
            let mut cands = vec![None; k];
            cands[k - 1] = Some(Candidate { neighbor: None, plane: cap_plane(&end) });
            EndState { end, cands, ellipses: vec![None; k], spans: vec![Vec::new(); k] }
        });
        Self { strut, ends, tasks, failed: false }
    }

    /// Index of task `i` within its end's candidate list.
    fn locate(&self, i: usize) -> (usize, usize) {
        let (e, _) = self.tasks[i];
        let first = if e == 0 { 0 } else { self.ends[0].cands.len() - 1 };
        (e as usize, i - first)
    }

    fn plane_lane(&mut self, lattice: &Lattice, i: usize) {
        let (e, k) = self.locate(i);
        let nb = self.tasks[i].1;
        match neighbor_candidate(lattice, &self.ends[e].end, nb) {
            Ok(c) => self.ends[e].cands[k] = Some(c),
            Err(_) => self.failed = true,
        }
    }

    fn section(&mut self, e: usize, k: usize) {
        let Some(c) = self.ends[e].cands[k] else {
            self.failed = true;
            return;
        };
        match candidate_section(&self.ends[e].end, &c) {
            Ok(el) => self.ends[e].ellipses[k] = Some(el),
            Err(_) => self.failed = true,
        }
    }

    fn trim(&mut self, e: usize, k: usize, tie: f64) {
        if self.failed {
            return;
        }
        let st = &self.ends[e];
        let cands: Vec<Candidate> = st.cands.iter().map(|c| c.unwrap()).collect();
        let spans = trim_candidate(k, st.ellipses[k].as_ref().unwrap(), &cands, tie);
        self.ends[e].spans[k] = spans;
    }

    fn finish(self, lattice: &Lattice) -> (Result<[ArcLoop; 2]>, Trace) {
        let mut trace = Trace { tasks: self.tasks.clone(), ..Default::default() };
        if self.failed {
            // Replay serially for the canonical error.
            let r = metamesh_strut(lattice, self.strut);
            trace.paths = vec![0; self.tasks.len()];
            return (r, trace);
        }
        let r_max = lattice.r_max();
        let mut loops = Vec::with_capacity(2);
        for st in &self.ends {
            let cands: Vec<Candidate> = st.cands.iter().map(|c| c.unwrap()).collect();
            let ellipses: Vec<Ellipse> = st.ellipses.iter().map(|e| e.unwrap()).collect();
            match assemble_loop(&st.end, &cands, &ellipses, &st.spans, r_max) {
                Ok(l) => loops.push(l),
                Err(e) => {
                    trace.paths = vec![0; self.tasks.len()];
                    return (Err(e), trace);
                }
            }
        }
        for i in 0..self.tasks.len() {
            let (e, k) = self.locate(i);
            trace.paths.push(path_of(&self.ends[e].spans[k]));
        }
        let l1 = loops.pop().unwrap();
        let l0 = loops.pop().unwrap();
        trace.records = attribute_records(&trace.tasks, &[&l0, &l1]);
        (Ok([l0, l1]), trace)
    }
}

/// Assigns each output arc to the lane that computed it; cap arcs go to the
/// first lane of their end (lane 0 when that end has no neighbors).
fn attribute_records(tasks: &[(u8, u32)], loops: &[&ArcLoop; 2]) -> Vec<Vec<u32>> {
    let lanes = tasks.len().max(1);
    let mut out = vec![Vec::new(); lanes];
    let mut rec = 0u32;
    for (e, lp) in loops.iter().enumerate() {
        let first = tasks.iter().position(|t| t.0 as usize == e).unwrap_or(0);
        for arc in &lp.arcs {
            let lane = match arc.neighbor {
                Some(nb) => tasks.iter().position(|t| t.0 as usize == e && t.1 == nb).unwrap_or(first),
                None => first,
            };
            out[lane].push(rec);
            rec += 1;
        }
    }
    out
}

fn run_serial(lattice: &Lattice, strut: u32) -> (Result<[ArcLoop; 2]>, Trace) {
    let r = metamesh_strut(lattice, strut);
    let tasks = tasks_of(lattice, strut);
    let mut trace = Trace { paths: vec![2; tasks.len()], ..Default::default() };
    if let Ok(l) = &r {
        trace.records = attribute_records(&tasks, &[&l[0], &l[1]]);
    }
    trace.tasks = tasks;
    (r, trace)
}

/// Thread-centric: every task is an independent worker that recomputes all
/// planes at its end itself, then sections and trims its own candidate.
fn run_thread(lattice: &Lattice, strut: u32) -> (Result<[ArcLoop; 2]>, Trace) {
    let mut st = StrutState::new(lattice, strut);
    let tie = tie_tolerance(lattice.r_max());
    for i in 0..st.tasks.len() {
        let (e, k) = st.locate(i);
        match candidate_planes(lattice, &st.ends[e].end) {
            Ok(all) => {
                for (slot, c) in st.ends[e].cands.iter_mut().zip(all) {
                    *slot = Some(c);
                }
            }
            Err(_) => st.failed = true,
        }
        if st.failed {
            break;
        }
        st.section(e, k);
    }
    for e in 0..2 {
        let cap = st.ends[e].cands.len() - 1;
        st.section(e, cap);
    }
    if !st.failed {
        for e in 0..2 {
            for k in 0..st.ends[e].cands.len() {
                st.trim(e, k, tie);
            }
        }
    }
    st.finish(lattice)
}

/// Output of one executed range of struts.
pub struct ChunkRun {
    pub struts: Range<u32>,
    pub loops: Vec<Result<[ArcLoop; 2]>>,
    pub stats: ExecStats,
}

impl ChunkRun {
    pub fn encode(&self, lattice: &Lattice, cfg: &QuantConfig) -> Vec<Option<EncodedStrut>> {
        self.loops.iter().map(|r| r.as_ref().ok().map(|l| encode_strut(lattice, cfg, l))).collect()
    }
}

/// Strut descriptor: two endpoints and two radii as f32.
const DESC_BYTES: u64 = 32;
const DESC_FIELDS: u64 = DESC_BYTES / 4;
const OUT_BASE: u64 = 1 << 40;

fn distinct_lines(addrs: &mut Vec<u64>, cacheline: u64) -> u64 {
    for a in addrs.iter_mut() {
        *a /= cacheline;
    }
    addrs.sort_unstable();
    addrs.dedup();
    let n = addrs.len() as u64;
    addrs.clear();
    n
}

/// One lane of a simulated group: which strut/task it serves.
#[derive(Clone, Copy)]
struct Lane {
    strut_ix: usize,
    task: Option<usize>,
}

struct CostModel<'a> {
    lattice: &'a Lattice,
    traces: &'a [Trace],
    /// First output record of each strut within the chunk.
    record_base: &'a [u64],
    cacheline: u64,
    element: u64,
    arrays: u64,
    total_records: u64,
    first_strut: u32,
}

impl CostModel<'_> {
    fn store_addrs(&self, lanes: &[Lane], soa: bool) -> u64 {
        let mut tx = 0;
        let mut addrs = Vec::with_capacity(lanes.len());
        let recs: Vec<&[u32]> = lanes
            .iter()
            .map(|l| {
                let tr = &self.traces[l.strut_ix];
                tr.records.get(l.task.unwrap_or(0)).map_or(&[][..], |v| &v[..])
            })
            .collect();
        let rounds = recs.iter().map(|r| r.len()).max().unwrap_or(0);
        for j in 0..rounds {
            if soa {
                for a in 0..self.arrays {
                    for (l, r) in lanes.iter().zip(&recs) {
                        if let Some(&k) = r.get(j) {
                            let slot = self.record_base[l.strut_ix] + k as u64;
                            addrs.push(OUT_BASE + (a * self.total_records + slot) * self.element);
                        }
                    }
                    tx += distinct_lines(&mut addrs, self.cacheline);
                }
            } else {
                for (l, r) in lanes.iter().zip(&recs) {
                    if let Some(&k) = r.get(j) {
                        addrs.push(OUT_BASE + (self.record_base[l.strut_ix] + k as u64) * RECORD_BYTES as u64);
                    }
                }
                tx += distinct_lines(&mut addrs, self.cacheline);
            }
        }
        tx
    }

    fn divergent(&self, lanes: &[Lane]) -> bool {
        let mut paths = lanes
            .iter()
            .filter_map(|l| l.task.and_then(|t| self.traces[l.strut_ix].paths.get(t)))
            .copied();
        let Some(first) = paths.next() else { return false };
        paths.any(|p| p != first)
    }

    /// Warp-centric group: the descriptors of the group's struts and of
    /// every lane's neighbor are staged cooperatively, one 4-byte field per
    /// lane, so one instruction covers `width / DESC_FIELDS` descriptors.
    /// Planes are then shared by broadcast and stores go to the SoA arrays.
    fn warp_group(&self, lanes: &[Lane], struts: &[u32]) -> (u64, u64, bool) {
        let mut needed: Vec<u32> = struts.to_vec();
        needed.extend(lanes.iter().filter_map(|l| l.task.map(|t| self.traces[l.strut_ix].tasks[t].1)));
        needed.sort_unstable();
        needed.dedup();
        let per_instr = (lanes.len() as u64 / DESC_FIELDS).max(1) as usize;
        let mut addrs = Vec::with_capacity(per_instr);
        let mut loads = 0;
        for batch in needed.chunks(per_instr) {
            addrs.extend(batch.iter().map(|&s| s as u64 * DESC_BYTES));
            loads += distinct_lines(&mut addrs, self.cacheline);
        }
        (loads, self.store_addrs(lanes, true), self.divergent(lanes))
    }

    /// Thread-centric warp: every lane reads, field by field, its own strut,
    /// its neighbor and each sibling neighbor it trims against, with no
    /// coordination between lanes. Stores are 16-byte records (AoS).
    fn thread_warp(&self, lanes: &[Lane]) -> (u64, u64, bool) {
        let ids: Vec<(u32, Option<(u8, u32)>)> = lanes
            .iter()
            .map(|l| {
                let tr = &self.traces[l.strut_ix];
                let sid = self.strut_id(l.strut_ix);
                (sid, l.task.map(|t| tr.tasks[t]))
            })
            .collect();
        // Descriptor read by each lane in each round: own, neighbor, siblings.
        let reads: Vec<Vec<u32>> = ids
            .iter()
            .map(|(s, t)| {
                let mut v = vec![*s];
                if let Some((e, nb)) = t {
                    v.push(*nb);
                    v.extend(self.lattice.neighbors_at(*s, *e).into_iter().filter(|x| x != nb));
                }
                v
            })
            .collect();
        let rounds = reads.iter().map(Vec::len).max().unwrap_or(0);
        let mut addrs = Vec::with_capacity(lanes.len());
        let mut loads = 0;
        for j in 0..rounds {
            for f in 0..DESC_FIELDS {
                addrs.extend(reads.iter().filter_map(|v| v.get(j)).map(|&x| x as u64 * DESC_BYTES + 4 * f));
                loads += distinct_lines(&mut addrs, self.cacheline);
            }
        }
        (loads, self.store_addrs(lanes, false), self.divergent(lanes))
    }

    fn strut_id(&self, ix: usize) -> u32 {
        self.first_strut + ix as u32
    }
}

/// Runs the metamesh phases for `struts` under `engine`'s execution mode.
pub fn execute_range(lattice: &Lattice, struts: Range<u32>, engine: &EngineConfig) -> Result<ChunkRun> {
    let element = engine.element_width()?;
    let width = if engine.mode == ExecMode::Serial { 1 } else { engine.width.max(1) };
    let kernels_before = counters::snapshot();
    let t0 = Instant::now();
    let wls = workloads(lattice, struts.clone());
    let plan = (engine.mode == ExecMode::Warp).then(|| schedule(&wls, width));
    let schedule_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let n = struts.len();
    let first = struts.start;
    let mut results: Vec<Option<LaneResult>> = (0..n).map(|_| None).collect();
    match (&plan, engine.mode) {
        (Some(plan), _) => run_plan(lattice, plan, first, &mut results),
        (None, ExecMode::Thread) => {
            for (i, s) in struts.clone().enumerate() {
                results[i] = Some(run_thread(lattice, s));
            }
        }
        _ => {
            for (i, s) in struts.clone().enumerate() {
                results[i] = Some(run_serial(lattice, s));
            }
        }
    }
    let compute_secs = t1.elapsed().as_secs_f64();

    let (loops, traces): (Vec<_>, Vec<_>) = results.into_iter().map(|r| r.expect("every strut is planned")).unzip();
    let mut record_base = Vec::with_capacity(n + 1);
    let mut acc = 0u64;
    for r in &loops {
        record_base.push(acc);
        if let Ok(l) = r {
            acc += (l[0].arcs.len() + l[1].arcs.len()) as u64;
        }
    }
    record_base.push(acc);

    let model = CostModel {
        lattice,
        traces: &traces,
        record_base: &record_base,
        cacheline: engine.cacheline as u64,
        element: element as u64,
        arrays: (RECORD_BYTES / element) as u64,
        total_records: acc,
        first_strut: first,
    };
    let mut stats = ExecStats { mode: Some(engine.mode), width, struts: n as u64, arcs: acc, ..Default::default() };
    let baseline = schedule_one_per_group(&wls, width);
    stats.baseline_groups = baseline.groups.len() as u64;
    stats.used_lanes = wls.iter().map(|w| w.lanes() as u64).sum();
    match &plan {
        Some(plan) => {
            for g in &plan.groups {
                let mut lanes = Vec::with_capacity(width as usize);
                let mut ids = Vec::with_capacity(g.slots.len());
                for s in &g.slots {
                    let ix = (s.strut - first) as usize;
                    ids.push(s.strut);
                    let has_tasks = !traces[ix].tasks.is_empty();
                    for l in 0..s.lane_span {
                        let task = has_tasks.then_some((s.task_offset + l) as usize);
                        lanes.push(Lane { strut_ix: ix, task });
                    }
                }
                let (ld, st, div) = model.warp_group(&lanes, &ids);
                stats.load_transactions += ld;
                stats.store_transactions += st;
                stats.divergence_events += div as u64;
                stats.barrier_groups += g.barrier.is_some() as u64;
            }
            stats.groups = plan.groups.len() as u64;
        }
        None => {
            let lanes: Vec<Lane> = traces
                .iter()
                .enumerate()
                .flat_map(|(ix, tr)| {
                    let k = tr.tasks.len();
                    (0..k.max(1)).map(move |t| Lane { strut_ix: ix, task: (k > 0).then_some(t) })
                })
                .collect();
            for warp in lanes.chunks(width as usize) {
                let (ld, st, div) = model.thread_warp(warp);
                stats.load_transactions += ld;
                stats.store_transactions += st;
                stats.divergence_events += div as u64;
            }
            stats.groups = lanes.len().div_ceil(width as usize) as u64;
        }
    }
    stats.transactions = stats.load_transactions + stats.store_transactions;
    let cap = (stats.groups * width as u64).max(1) as f64;
    stats.lane_utilization = if stats.groups == 0 { 1.0 } else { stats.used_lanes as f64 / cap };
    stats.baseline_utilization =
        if stats.baseline_groups == 0 { 1.0 } else { stats.used_lanes as f64 / (stats.baseline_groups * width as u64) as f64 };
    stats.quarantined = loops.iter().filter(|r| r.is_err()).count() as u64;
    let after = counters::snapshot();
    stats.kernels = KernelCounts {
        auxiliary_plane: after.auxiliary_plane - kernels_before.auxiliary_plane,
        intersect_strut_plane: after.intersect_strut_plane - kernels_before.intersect_strut_plane,
        arc_range: after.arc_range - kernels_before.arc_range,
    };
    stats.schedule_secs = schedule_secs;
    stats.compute_secs = compute_secs;
    Ok(ChunkRun { struts, loops, stats })
}

/// Lock-step execution of a plan: within a group every phase completes on
/// all lanes before the next begins; a strut spread over several groups
/// trims and assembles only once its last group has passed the barrier.
fn run_plan(
    lattice: &Lattice,
    plan: &WarpPlan,
    first: u32,
    results: &mut [Option<LaneResult>],
) {
    let tie = tie_tolerance(lattice.r_max());
    let mut pending: HashMap<u32, StrutState> = HashMap::new();
    for g in &plan.groups {
        let mut states: Vec<(Slot, StrutState)> = g
            .slots
            .iter()
            .map(|s| {
                let st = pending.remove(&s.strut).unwrap_or_else(|| StrutState::new(lattice, s.strut));
                (*s, st)
            })
            .collect();
        let lane_tasks = |slot: &Slot, st: &StrutState| {
            let lo = slot.task_offset as usize;
            lo..(lo + slot.lane_span as usize).min(st.tasks.len())
        };
        // Phase 1: auxiliary planes, one per lane.
        for (slot, st) in states.iter_mut() {
            for i in lane_tasks(slot, st) {
                st.plane_lane(lattice, i);
            }
        }
        // Phase 2: sections; the first group of a strut also cuts both caps.
        for (slot, st) in states.iter_mut() {
            for i in lane_tasks(slot, st) {
                if st.failed {
                    break;
                }
                let (e, k) = st.locate(i);
                st.section(e, k);
            }
            if slot.task_offset == 0 {
                for e in 0..2 {
                    let cap = st.ends[e].cands.len() - 1;
                    st.section(e, cap);
                }
            }
        }
        // Barrier: struts with remaining groups wait for them.
        let mut ready = Vec::new();
        for (slot, st) in states {
            if (slot.task_offset + slot.lane_span) as usize >= st.tasks.len() {
                ready.push(st);
            } else {
                pending.insert(slot.strut, st);
            }
        }
        // Phase 3: each lane trims its candidate against the broadcast planes.
        for st in ready.iter_mut() {
            for e in 0..2 {
                for k in 0..st.ends[e].cands.len() {
                    st.trim(e, k, tie);
                }
            }
        }
        // Phase 4: loop assembly.
        for st in ready {
            let ix = (st.strut - first) as usize;
            results[ix] = Some(st.finish(lattice));
        }
    }
    debug_assert!(pending.is_empty());
}

/// Default number of struts executed and encoded at a time by [`execute`].
pub const EXEC_CHUNK: u32 = 1 << 16;

/// Builds the encoded metamesh of a whole lattice.
pub fn execute(lattice: &Lattice, cfg: &QuantConfig, engine: &EngineConfig) -> Result<(MetaMeshStore, ExecStats)> {
    let element = engine.element_width()?;
    let mut encoded = Vec::with_capacity(lattice.num_struts());
    let mut stats = ExecStats::default();
    let total = lattice.num_struts() as u32;
    let mut start = 0;
    while start < total {
        let end = (start + EXEC_CHUNK).min(total);
        let run = execute_range(lattice, start..end, engine)?;
        let t = Instant::now();
        encoded.extend(run.encode(lattice, cfg));
        let mut s = run.stats;
        s.encode_secs = t.elapsed().as_secs_f64();
        stats.merge(&s);
        start = end;
    }
    if stats.mode.is_none() {
        stats.mode = Some(engine.mode);
        stats.width = engine.width;
        stats.lane_utilization = 1.0;
        stats.baseline_utilization = 1.0;
    }
    let t = Instant::now();
    let store = MetaMeshStore::assemble(lattice.clone(), *cfg, element, &encoded)?;
    stats.encode_secs += t.elapsed().as_secs_f64();
    Ok((store, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::choose_bits;
    use crate::lattice::{synth_lattice, RandomParams, SynthKind};

    fn wl(strut: u32, total: u32) -> Workload {
        Workload { strut, tasks: [total / 2, total - total / 2] }
    }

    #[test]
    fn combines_two_halves() {
        let plan = schedule(&[wl(0, 16), wl(1, 16)], 32);
        assert_eq!(plan.groups.len(), 1);
        assert_eq!(plan.utilization(), 1.0);
    }

    #[test]
    fn wide_strut_spans_groups() {
        let plan = schedule(&[wl(0, 40)], 32);
        assert_eq!(plan.groups.len(), 2);
        assert!(plan.groups.iter().all(|g| g.barrier == Some(0)));
        plan.validate(&[wl(0, 40)]).unwrap();
        assert!(schedule(&[], 32).groups.is_empty());
    }

    #[test]
    fn radix_sort_is_stable_descending() {
        let items = vec![wl(3, 5), wl(1, 9), wl(2, 5), wl(0, 300), wl(4, 0)];
        let ids: Vec<u32> = radix_sort_desc(&items).iter().map(|w| w.strut).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn synthetic_mix_packs_well() {
        let w = synthetic_workloads(9, 20_000);
        let small = w.iter().filter(|x| x.total() < 16).count() as f64 / w.len() as f64;
        assert!(small > 0.7);
        let plan = schedule(&w, 32);
        plan.validate(&w).unwrap();
        assert!(plan.utilization() >= 0.9, "{}", plan.utilization());
        assert!(schedule_one_per_group(&w, 32).utilization() <= 0.55);
    }

    #[test]
    fn modes_agree() {
        let l = synth_lattice(&SynthKind::Random(RandomParams { seed: 21, nodes: 60, ..Default::default() })).unwrap();
        let cfg = choose_bits(0.001, l.r_min(), l.r_max()).unwrap();
        let mut bytes = Vec::new();
        for mode in [ExecMode::Serial, ExecMode::Warp, ExecMode::Thread] {
            let (store, stats) = execute(&l, &cfg, &EngineConfig { mode, width: 8, cacheline: 128 }).unwrap();
            assert!(stats.lane_utilization > 0.0 && stats.lane_utilization <= 1.0);
            bytes.push(store.to_bytes());
        }
        assert_eq!(bytes[0], bytes[1]);
        assert_eq!(bytes[0], bytes[2]);
    }

    #[test]
    fn histogram_of_grid() {
        let l = synth_lattice(&SynthKind::Grid { dims: [3, 3, 3], pitch: 1.0, radius: 0.1 }).unwrap();
        let h = workload_histogram(&l);
        assert_eq!(h.values().sum::<usize>(), 54);
        let iso = synth_lattice(&SynthKind::Star { arms: 1, length: 1.0, radius: 0.1, tip_radius: 0.1 }).unwrap();
        assert_eq!(workload_histogram(&iso).get(&0), Some(&1));
    }
}

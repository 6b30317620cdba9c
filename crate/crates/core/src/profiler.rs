//! Operation accounting: synaptic operations (SOPs) in spiking layers,
//! multiply-accumulates (MACs) in the dense stem and header, threshold
//! comparisons, firing rates, theoretical SOP upper bounds and the energy
//! model (0.9 pJ per SOP, 4.6 pJ per MAC).
//!
//! Counting convention: one SOP per nonzero presynaptic spike per
//! postsynaptic connection; a multi-amplitude spike still counts as one SOP
//! per connection since the shift is free.

use core::sync::atomic::{AtomicU64, Ordering};

use alloc::string::String;
use alloc::vec::Vec;

/// Energy per accumulate, picojoules.
pub const ENERGY_PER_SOP_PJ: f64 = 0.9;
/// Energy per multiply-accumulate, picojoules.
pub const ENERGY_PER_MAC_PJ: f64 = 4.6;

/// Energy in millijoules for the given operation counts.
pub fn energy_mj(sops: u64, macs: u64) -> f64 {
    (ENERGY_PER_SOP_PJ * sops as f64 + ENERGY_PER_MAC_PJ * macs as f64) * 1e-9
}

/// SOPs of one spiking layer: every nonzero spike triggers one accumulate
/// per postsynaptic connection.
pub fn count_layer_sops(spike_count: u64, fan_out: u64) -> u64 {
    spike_count * fan_out
}

/// Atomic operation counters for one profiled module. Additions are
/// order-independent, so concurrent forward passes produce identical sums.
#[derive(Debug, Default)]
pub struct OpCounters {
    sops: AtomicU64,
    macs: AtomicU64,
    comparisons: AtomicU64,
    /// General multiplies in spiking arithmetic paths; stays zero on the
    /// shift-add path.
    general_muls: AtomicU64,
    /// Subset of `sops` spent on attention-score products.
    score_sops: AtomicU64,
    spike_slots: AtomicU64,
    spike_nonzero: AtomicU64,
}

impl OpCounters {
    pub fn add_sops(&self, n: u64) {
        self.sops.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_macs(&self, n: u64) {
        self.macs.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_comparisons(&self, n: u64) {
        self.comparisons.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_general_muls(&self, n: u64) {
        self.general_muls.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_score_sops(&self, n: u64) {
        self.score_sops.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_spike_slots(&self, slots: u64, nonzero: u64) {
        self.spike_slots.fetch_add(slots, Ordering::Relaxed);
        self.spike_nonzero.fetch_add(nonzero, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            sops: self.sops.load(Ordering::Relaxed),
            macs: self.macs.load(Ordering::Relaxed),
            comparisons: self.comparisons.load(Ordering::Relaxed),
            general_muls: self.general_muls.load(Ordering::Relaxed),
            score_sops: self.score_sops.load(Ordering::Relaxed),
            spike_slots: self.spike_slots.load(Ordering::Relaxed),
            spike_nonzero: self.spike_nonzero.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.sops.store(0, Ordering::Relaxed);
        self.macs.store(0, Ordering::Relaxed);
        self.comparisons.store(0, Ordering::Relaxed);
        self.general_muls.store(0, Ordering::Relaxed);
        self.score_sops.store(0, Ordering::Relaxed);
        self.spike_slots.store(0, Ordering::Relaxed);
        self.spike_nonzero.store(0, Ordering::Relaxed);
    }
}

/// Plain-value copy of [`OpCounters`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CounterSnapshot {
    pub sops: u64,
    pub macs: u64,
    pub comparisons: u64,
    pub general_muls: u64,
    pub score_sops: u64,
    pub spike_slots: u64,
    pub spike_nonzero: u64,
}

impl CounterSnapshot {
    pub fn merge(&self, other: &CounterSnapshot) -> CounterSnapshot {
        CounterSnapshot {
            sops: self.sops + other.sops,
            macs: self.macs + other.macs,
            comparisons: self.comparisons + other.comparisons,
            general_muls: self.general_muls + other.general_muls,
            score_sops: self.score_sops + other.score_sops,
            spike_slots: self.spike_slots + other.spike_slots,
            spike_nonzero: self.spike_nonzero + other.spike_nonzero,
        }
    }

    pub fn firing_rate(&self) -> f64 {
        if self.spike_slots == 0 {
            0.0
        } else {
            self.spike_nonzero as f64 / self.spike_slots as f64
        }
    }
}

/// What kind of computation a profiled module performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleKind {
    Stem,
    Sconv,
    Ssa,
    ConvSffn,
    Sffn,
    Downsample,
    Header,
}

impl ModuleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModuleKind::Stem => "stem",
            ModuleKind::Sconv => "sconv",
            ModuleKind::Ssa => "ssa",
            ModuleKind::ConvSffn => "conv_sffn",
            ModuleKind::Sffn => "sffn",
            ModuleKind::Downsample => "downsample",
            ModuleKind::Header => "header",
        }
    }
}

/// Identity and static per-sample SOP bound of one profiled module.
#[derive(Clone, Debug)]
pub struct ModuleMeta {
    pub stage: String,
    pub block_index: usize,
    pub kind: ModuleKind,
    /// Dense-spike worst case SOPs per input sample; 0 for MAC-only modules.
    pub sop_upper_bound: u64,
}

/// Index of a module's counter slot inside a [`Profiler`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModuleId(pub usize);

/// Counter registry matching a model's module list.
#[derive(Debug)]
pub struct Profiler {
    metas: Vec<ModuleMeta>,
    counters: Vec<OpCounters>,
    samples: AtomicU64,
}

impl Profiler {
    pub fn new(metas: Vec<ModuleMeta>) -> Self {
        let counters = metas.iter().map(|_| OpCounters::default()).collect();
        Profiler {
            metas,
            counters,
            samples: AtomicU64::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.metas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metas.is_empty()
    }

    pub fn metas(&self) -> &[ModuleMeta] {
        &self.metas
    }

    pub fn module(&self, id: ModuleId) -> &OpCounters {
        &self.counters[id.0]
    }

    pub fn add_samples(&self, n: u64) {
        self.samples.fetch_add(n, Ordering::Relaxed);
    }

    pub fn samples(&self) -> u64 {
        self.samples.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        for c in &self.counters {
            c.reset();
        }
        self.samples.store(0, Ordering::Relaxed);
    }

    pub fn totals(&self) -> CounterSnapshot {
        let mut acc = CounterSnapshot::default();
        for c in &self.counters {
            acc = acc.merge(&c.snapshot());
        }
        acc
    }

    pub fn report(&self) -> ProfileReport {
        let samples = self.samples().max(1);
        let rows = self
            .metas
            .iter()
            .zip(&self.counters)
            .map(|(meta, counters)| {
                let snap = counters.snapshot();
                ReportRow {
                    stage: meta.stage.clone(),
                    block_index: meta.block_index,
                    kind: meta.kind,
                    sops: snap.sops as f64 / samples as f64,
                    sop_upper_bound: meta.sop_upper_bound,
                    macs: snap.macs as f64 / samples as f64,
                    firing_rate: snap.firing_rate(),
                    raw: snap,
                }
            })
            .collect();
        ProfileReport {
            rows,
            totals: self.totals(),
            samples: self.samples(),
        }
    }
}

/// One per-module row of the profile report. `sops` and `macs` are averages
/// per input sample.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub stage: String,
    pub block_index: usize,
    pub kind: ModuleKind,
    pub sops: f64,
    pub sop_upper_bound: u64,
    pub macs: f64,
    pub firing_rate: f64,
    pub raw: CounterSnapshot,
}

impl ReportRow {
    pub fn energy_mj(&self) -> f64 {
        (ENERGY_PER_SOP_PJ * self.sops + ENERGY_PER_MAC_PJ * self.macs) * 1e-9
    }
}

/// Per-module SOP/MAC/firing-rate report for one profiled run.
#[derive(Clone, Debug)]
pub struct ProfileReport {
    pub rows: Vec<ReportRow>,
    pub totals: CounterSnapshot,
    pub samples: u64,
}

impl ProfileReport {
    /// Total energy per sample in millijoules, including stem and header
    /// MACs.
    pub fn energy_mj(&self) -> f64 {
        self.rows.iter().map(|r| r.energy_mj()).sum()
    }

    /// Energy per sample excluding the dense stem convolution.
    pub fn energy_mj_without_stem(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.kind != ModuleKind::Stem)
            .map(|r| r.energy_mj())
            .sum()
    }

    /// CSV rendering, one row per module in deterministic model order.
    pub fn to_csv(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        out.push_str("stage,block_index,module_kind,sops,sop_upper_bound,macs,firing_rate,energy_mJ\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.stage,
                r.block_index,
                r.kind.as_str(),
                r.sops,
                r.sop_upper_bound,
                r.macs,
                r.firing_rate,
                r.energy_mj()
            );
        }
        out
    }
}

/// Maximum spike firing steps per period: `T / |G_T|` where `gt_size` is the
/// per-group base count.
pub fn max_firing_steps(t: usize, gt_size: usize) -> u64 {
    debug_assert!(gt_size >= 1 && t % gt_size == 0);
    (t / gt_size) as u64
}

/// Worst-case attention-score SOPs per sample:
/// `(T / |G_T|) * N^2 * C / |G_S|`. The same bound applies to the
/// score-times-V product at saturated spike density.
pub fn attention_score_bound(t: usize, gt_size: usize, n_tokens: usize, c: usize, gs: usize) -> u64 {
    let per_step = (n_tokens as u128 * n_tokens as u128 * c as u128) / gs as u128;
    (max_firing_steps(t, gt_size) as u128 * per_step) as u64
}

/// Worst-case SOPs of a full convolution consuming spikes: every input slot
/// fires on every allowed step and reaches `k^2 * c_out` connections.
pub fn conv_bound(
    t: usize,
    gt_size: usize,
    h_out: usize,
    w_out: usize,
    kernel: usize,
    c_in: usize,
    c_out: usize,
) -> u64 {
    let per_step = h_out as u128 * w_out as u128 * (kernel * kernel) as u128 * c_in as u128 * c_out as u128;
    (max_firing_steps(t, gt_size) as u128 * per_step) as u64
}

/// Worst-case SOPs of a depthwise convolution consuming spikes.
pub fn depthwise_bound(t: usize, gt_size: usize, h_out: usize, w_out: usize, kernel: usize, c: usize) -> u64 {
    let per_step = h_out as u128 * w_out as u128 * (kernel * kernel) as u128 * c as u128;
    (max_firing_steps(t, gt_size) as u128 * per_step) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_matches_published_arithmetic() {
        assert!((energy_mj(1_290_000_000, 0) - 1.161).abs() < 1e-9);
        assert!((energy_mj(3_150_000_000, 0) - 2.835).abs() < 1e-9);
        assert_eq!(energy_mj(0, 0), 0.0);
    }

    #[test]
    fn layer_sops_definition() {
        assert_eq!(count_layer_sops(0, 5), 0);
        assert_eq!(count_layer_sops(10, 5), 50);
    }

    #[test]
    fn score_bound_degenerates_to_stbp_row() {
        // |G_T| = 1, |G_S| = 1 -> T * N^2 * C
        assert_eq!(attention_score_bound(4, 1, 16, 8, 1), 4 * 16 * 16 * 8);
        // single token -> T * C / |G_T|
        assert_eq!(attention_score_bound(4, 2, 1, 8, 1), 2 * 8);
    }

    #[test]
    fn score_bound_stage2_reduction() {
        let ungrouped = attention_score_bound(4, 1, 28 * 28, 96, 1);
        let grouped = attention_score_bound(4, 2, 28 * 28, 96, 16);
        assert_eq!(ungrouped / grouped, 32);
        assert_eq!(ungrouped % grouped, 0);
    }

    #[test]
    fn counters_accumulate_and_reset() {
        let c = OpCounters::default();
        c.add_sops(3);
        c.add_sops(4);
        c.add_macs(2);
        c.add_spike_slots(10, 4);
        let s = c.snapshot();
        assert_eq!(s.sops, 7);
        assert_eq!(s.macs, 2);
        assert!((s.firing_rate() - 0.4).abs() < 1e-15);
        c.reset();
        assert_eq!(c.snapshot(), CounterSnapshot::default());
    }

    #[test]
    fn empty_report_is_header_only() {
        let p = Profiler::new(alloc::vec::Vec::new());
        let csv = p.report().to_csv();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("stage,block_index,module_kind"));
    }

    #[test]
    fn energy_is_linear_in_counters() {
        let a = energy_mj(123, 45);
        let b = energy_mj(678, 9);
        assert!((energy_mj(123 + 678, 45 + 9) - (a + b)).abs() < 1e-18);
    }
}

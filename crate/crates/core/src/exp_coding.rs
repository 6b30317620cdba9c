//! Grouped exponential spike coding: temporal grouping of exponential bases,
//! level-set construction, non-uniform quantization by binary search, spike
//! encode/decode, the uniform-quantization baseline and the progressive blend
//! schedule.
//!
//! A neuron coded this way emits at time-step `t` (1-based) either nothing or
//! a spike of amplitude `alpha^(t-1)`, choosing at most one base per temporal
//! group. The reachable coded values (one pick per group, possibly none) form
//! the level set; averaged input current is quantized to the nearest level and
//! the precomputed spike train for that level is emitted, so the spike count
//! per period never exceeds the group count.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::profiler::OpCounters;
use crate::tensor::{DenseTensor, SpikeTensor};

/// Partition of the exponential bases `{alpha^0, ..., alpha^(T-1)}` into
/// disjoint temporal groups. Each group implicitly also contains 0 (no spike).
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalGrouping {
    t: usize,
    alpha: f64,
    /// Base exponents per group; disjoint, covering `0..t`.
    groups: Vec<Vec<usize>>,
}

impl TemporalGrouping {
    pub fn new(t: usize, alpha: f64, groups: Vec<Vec<usize>>) -> Result<Self> {
        if t == 0 {
            return Err(CoreError::InvalidGrouping("T must be >= 1".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(CoreError::InvalidGrouping(format!("base alpha {alpha} must be positive")));
        }
        if groups.is_empty() {
            return Err(CoreError::InvalidGrouping("need at least one group".into()));
        }
        let mut seen = vec![false; t];
        for g in &groups {
            if g.is_empty() {
                return Err(CoreError::InvalidGrouping("empty group".into()));
            }
            for &e in g {
                if e >= t {
                    return Err(CoreError::InvalidGrouping(format!(
                        "base exponent {e} outside [0, {t})"
                    )));
                }
                if seen[e] {
                    return Err(CoreError::InvalidGrouping(format!(
                        "base exponent {e} appears in more than one group"
                    )));
                }
                seen[e] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(CoreError::InvalidGrouping(
                "groups do not cover all base exponents".into(),
            ));
        }
        Ok(TemporalGrouping { t, alpha, groups })
    }

    /// Default partition: contiguous runs of `group_size` consecutive bases,
    /// giving `t / group_size` groups. `group_size` must divide `t`.
    pub fn contiguous(t: usize, alpha: f64, group_size: usize) -> Result<Self> {
        if group_size == 0 || t % group_size != 0 {
            return Err(CoreError::InvalidGrouping(format!(
                "group size {group_size} does not divide T = {t}"
            )));
        }
        let groups = (0..t / group_size)
            .map(|g| (g * group_size..(g + 1) * group_size).collect())
            .collect();
        Self::new(t, alpha, groups)
    }

    /// The single-group preset (pure exponential coding, at most one spike).
    pub fn single(t: usize, alpha: f64) -> Result<Self> {
        Self::contiguous(t, alpha, t)
    }

    /// One group per base: every step may fire, uniform-style coding.
    pub fn per_base(t: usize, alpha: f64) -> Result<Self> {
        Self::contiguous(t, alpha, 1)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// `alpha^e` for base exponent `e`.
    pub fn base_value(&self, e: usize) -> f64 {
        let mut v = 1.0;
        for _ in 0..e {
            v *= self.alpha;
        }
        v
    }
}

/// The quantization level set: sorted reachable coded values, the decision
/// boundaries between adjacent levels, and the precomputed spike train for
/// every level.
#[derive(Clone, Debug)]
pub struct ExpLevelSet {
    grouping: TemporalGrouping,
    lambda: f64,
    symmetric: bool,
    /// Strictly increasing; contains 0. Mirrored about 0 when symmetric.
    levels: Vec<f64>,
    /// Unscaled midpoints between adjacent levels.
    midpoints: Vec<f64>,
    /// Pre-firing thresholds: `lambda * (levels[i] + levels[i+1]) / 2`.
    boundaries: Vec<f64>,
    s_max: f64,
    /// Per level: signed occupancy per time-step (-1, 0, +1).
    trains: Vec<Vec<i8>>,
}

impl ExpLevelSet {
    /// Build the level set for a grouping: all sums choosing at most one base
    /// per group, deduplicated and sorted, with one spike train per level.
    pub fn build(grouping: TemporalGrouping, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CoreError::InvalidConfig(format!("lambda {lambda} must be positive")));
        }
        // Incremental merge: extend partial sums one group at a time, keeping
        // for each distinct value the decomposition with the fewest spikes.
        let t = grouping.t;
        let mut states: Vec<(f64, Vec<i8>)> = vec![(0.0, vec![0i8; t])];
        for group in &grouping.groups {
            let mut next: Vec<(f64, Vec<i8>)> = Vec::with_capacity(states.len() * (group.len() + 1));
            for (value, train) in &states {
                next.push((*value, train.clone()));
                for &e in group {
                    let mut tr = train.clone();
                    tr[e] = 1;
                    next.push((value + grouping.base_value(e), tr));
                }
            }
            next.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then_with(|| spike_count(&a.1).cmp(&spike_count(&b.1)))
                    .then_with(|| a.1.cmp(&b.1))
            });
            next.dedup_by(|a, b| a.0 == b.0);
            states = next;
        }
        let levels: Vec<f64> = states.iter().map(|(v, _)| *v).collect();
        let trains: Vec<Vec<i8>> = states.into_iter().map(|(_, tr)| tr).collect();
        Self::assemble(grouping, lambda, false, levels, trains)
    }

    fn assemble(
        grouping: TemporalGrouping,
        lambda: f64,
        symmetric: bool,
        levels: Vec<f64>,
        trains: Vec<Vec<i8>>,
    ) -> Result<Self> {
        debug_assert!(levels.windows(2).all(|p| p[0] < p[1]));
        let midpoints: Vec<f64> = levels.windows(2).map(|p| (p[0] + p[1]) / 2.0).collect();
        let boundaries = midpoints.iter().map(|m| lambda * m).collect();
        let s_max = *levels.last().expect("level set never empty");
        Ok(ExpLevelSet {
            grouping,
            lambda,
            symmetric,
            levels,
            midpoints,
            boundaries,
            s_max,
            trains,
        })
    }

    /// Mirror the level set about zero; spike trains of negative levels carry
    /// sign -1 entries.
    pub fn symmetric_level_set(&self) -> ExpLevelSet {
        if self.symmetric {
            return self.clone();
        }
        let mut levels = Vec::with_capacity(self.levels.len() * 2 - 1);
        let mut trains = Vec::with_capacity(levels.capacity());
        for (v, tr) in self.levels.iter().zip(&self.trains).skip(1).rev() {
            levels.push(-v);
            trains.push(tr.iter().map(|s| -s).collect());
        }
        for (v, tr) in self.levels.iter().zip(&self.trains) {
            levels.push(*v);
            trains.push(tr.clone());
        }
        Self::assemble(self.grouping.clone(), self.lambda, true, levels, trains)
            .expect("mirroring preserves validity")
    }

    pub fn grouping(&self) -> &TemporalGrouping {
        &self.grouping
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Pre-firing thresholds, scaled by lambda.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn t(&self) -> usize {
        self.grouping.t
    }

    pub fn alpha(&self) -> f64 {
        self.grouping.alpha
    }

    /// Rate emitted per unit of summed spike amplitude: `lambda / s_max`.
    pub fn rate_scale(&self) -> f64 {
        self.lambda / self.s_max
    }

    pub fn level_value(&self, index: usize) -> f64 {
        self.levels[index]
    }

    /// Signed occupancy train of a level, one entry per time-step.
    pub fn train(&self, index: usize) -> &[i8] {
        &self.trains[index]
    }

    /// Nearest-level index for a normalized input (already divided by
    /// lambda). Ties at a midpoint round to the upper level. Binary search
    /// over the decision boundaries, at most `ceil(log2 |levels|)`
    /// comparisons.
    pub fn quantize(&self, x: f64) -> usize {
        self.quantize_counted(x).0
    }

    /// As [`quantize`], also returning the number of comparisons performed.
    pub fn quantize_counted(&self, x: f64) -> (usize, u32) {
        let mut lo = 0usize;
        let mut hi = self.midpoints.len();
        let mut comparisons = 0;
        while lo < hi {
            let mid = (lo + hi) / 2;
            comparisons += 1;
            if x >= self.midpoints[mid] {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo, comparisons)
    }

    /// Amplitude spike train for a level value: entry `t` is
    /// `0` or `±alpha^(t-1)`, summing exactly to the level value.
    pub fn encode_spikes(&self, level_value: f64) -> Result<Vec<f64>> {
        let index = self
            .levels
            .binary_search_by(|v| v.partial_cmp(&level_value).unwrap())
            .map_err(|_| {
                CoreError::Contract(format!("{level_value} is not a member of the level set"))
            })?;
        Ok(self.amplitude_train(index))
    }

    /// Amplitude spike train by level index.
    pub fn amplitude_train(&self, index: usize) -> Vec<f64> {
        self.trains[index]
            .iter()
            .enumerate()
            .map(|(e, s)| *s as f64 * self.grouping.base_value(e))
            .collect()
    }

    /// Decode an amplitude train back to a rate:
    /// `lambda * (sum_t amp_t) / s_max`. Amplitudes must be 0 or
    /// `±alpha^(t-1)` (negative only for symmetric level sets).
    pub fn decode_spikes(&self, train: &[f64]) -> Result<f64> {
        if train.len() != self.grouping.t {
            return Err(CoreError::MalformedTrain(format!(
                "train length {} does not match T = {}",
                train.len(),
                self.grouping.t
            )));
        }
        let mut sum = 0.0;
        for (e, &amp) in train.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            let base = self.grouping.base_value(e);
            if amp != base && !(self.symmetric && amp == -base) {
                return Err(CoreError::MalformedTrain(format!(
                    "amplitude {amp} at step {} outside the base set",
                    e + 1
                )));
            }
            sum += amp;
        }
        Ok(self.lambda * sum / self.s_max)
    }
}

fn spike_count(train: &[i8]) -> usize {
    train.iter().filter(|s| **s != 0).count()
}

/// Exponential-coding rate predictor:
/// quantize `(i_avg * T + v0) / lambda` to the nearest level `q`, return
/// `lambda * q / s_max`. Clipping to `[0, s_max]` (or `[-s_max, s_max]` for
/// symmetric sets) is implicit in the level lookup.
pub fn expg_forward(i_avg: f64, t: usize, v0: f64, ls: &ExpLevelSet) -> f64 {
    let u = (i_avg * t as f64 + v0) / ls.lambda;
    let idx = ls.quantize(u);
    ls.lambda * ls.levels[idx] / ls.s_max
}

/// Uniform quantization-clip-floor rate predictor:
/// `(theta / T) * clip(floor((i_avg * T + v0) / theta), 0, T)`.
pub fn qcfs_forward(i_avg: f64, t: usize, v0: f64, theta: f64) -> f64 {
    let q = libm::floor((i_avg * t as f64 + v0) / theta);
    let q = q.max(0.0).min(t as f64);
    theta / t as f64 * q
}

/// Progressive training schedule position: current and total epochs.
#[derive(Clone, Copy, Debug)]
pub struct BlendSchedule {
    pub e_t: usize,
    pub e_total: usize,
}

impl BlendSchedule {
    pub fn new(e_t: usize, e_total: usize) -> Result<Self> {
        if e_total == 0 {
            return Err(CoreError::InvalidConfig("total epochs must be >= 1".into()));
        }
        if e_t > e_total {
            return Err(CoreError::InvalidConfig(format!(
                "current epoch {e_t} exceeds total {e_total}"
            )));
        }
        Ok(BlendSchedule { e_t, e_total })
    }
}

/// Cosine blend weights `(w_relu, w_quant)`; they always sum to 1.
pub fn blend_weight(sched: &BlendSchedule) -> (f64, f64) {
    let c = libm::cos(core::f64::consts::PI * sched.e_t as f64 / sched.e_total as f64);
    ((1.0 + c) / 2.0, (1.0 - c) / 2.0)
}

/// Mixed activation of the progressive schedule: a ClipReLU branch blended
/// with the quantized rate. `rounded_relu` enables the variant that rounds
/// inside the clip before weighting.
pub fn mixed_activation(
    i_avg: f64,
    t: usize,
    v0: f64,
    ls: &ExpLevelSet,
    sched: &BlendSchedule,
    rounded_relu: bool,
) -> f64 {
    let (w_relu, w_quant) = blend_weight(sched);
    let mut u = (i_avg * t as f64 + v0) / ls.lambda;
    if rounded_relu {
        u = libm::round(u);
    }
    let clipped = u.max(0.0).min(1.0);
    w_relu * ls.lambda * clipped + w_quant * expg_forward(i_avg, t, v0, ls)
}

/// A spiking activation site: a level set plus the initial-potential shift.
/// Applies exponential coding to a whole tensor, emitting per-step amplitude
/// spikes whose temporal sum encodes the quantized level.
#[derive(Clone, Debug)]
pub struct SpikeActivation {
    ls: ExpLevelSet,
    v0: f64,
}

impl SpikeActivation {
    /// Default initial potential is 0: the round-to-nearest quantizer already
    /// centers the decision intervals, so the half-threshold shift used with
    /// floor quantizers would double-count (zero input would fire).
    pub fn new(ls: ExpLevelSet) -> Self {
        SpikeActivation { ls, v0: 0.0 }
    }

    pub fn with_v0(ls: ExpLevelSet, v0: f64) -> Self {
        SpikeActivation { ls, v0 }
    }

    pub fn level_set(&self) -> &ExpLevelSet {
        &self.ls
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// Scale a consumer must apply to summed spike amplitudes to recover the
    /// coded rate.
    pub fn rate_scale(&self) -> f64 {
        self.ls.rate_scale()
    }

    /// Scale folded into a consumer's dense operand so that the temporal sum
    /// of its per-step outputs equals `T` times the rate-domain value:
    /// `T * lambda / s_max`. Keeping sums at `T x` the rate makes spiking
    /// layers interchangeable with the direct-coded stem, whose constant
    /// current also sums to `T` times its value.
    pub fn emission_scale(&self) -> f64 {
        self.ls.t() as f64 * self.ls.rate_scale()
    }

    /// Quantized level index for an averaged input current, plus comparison
    /// count.
    pub fn encode_avg(&self, i_avg: f64) -> (usize, u32) {
        let u = (i_avg * self.ls.t() as f64 + self.v0) / self.ls.lambda();
        self.ls.quantize_counted(u)
    }

    /// Rate this site would emit for an averaged input current.
    pub fn rate_of(&self, i_avg: f64) -> f64 {
        expg_forward(i_avg, self.ls.t(), self.v0, &self.ls)
    }

    /// Apply the activation to per-step input currents: each site's inputs
    /// are averaged over time, quantized, and replaced by the level's
    /// amplitude spike train.
    pub fn apply(&self, x: &DenseTensor, counters: &OpCounters) -> Result<SpikeTensor> {
        let s = x.shape;
        if s.t != self.ls.t() {
            return Err(CoreError::ShapeMismatch(format!(
                "input has {} time-steps, level set expects {}",
                s.t,
                self.ls.t()
            )));
        }
        let slab = s.b * s.h * s.w * s.c;
        let mut out = DenseTensor::zeros(s);
        let inv_t = 1.0 / s.t as f64;
        let mut comparisons: u64 = 0;
        let mut nonzero: u64 = 0;
        // Per-step amplitudes: alpha^(t-1).
        let amps: Vec<f64> = (0..s.t).map(|e| self.ls.grouping().base_value(e)).collect();
        for site in 0..slab {
            let mut sum = 0.0;
            for ti in 0..s.t {
                sum += x.data[ti * slab + site];
            }
            let (idx, cmp) = self.encode_avg(sum * inv_t);
            comparisons += cmp as u64;
            let train = self.ls.train(idx);
            for (ti, &sgn) in train.iter().enumerate() {
                if sgn != 0 {
                    out.data[ti * slab + site] = sgn as f64 * amps[ti];
                    nonzero += 1;
                }
            }
        }
        counters.add_comparisons(comparisons);
        counters.add_spike_slots(s.len() as u64, nonzero);
        Ok(SpikeTensor {
            tensor: out,
            alpha: self.ls.alpha(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiler::OpCounters;
    use crate::tensor::TensorShape;

    fn ls(t: usize, group_size: usize) -> ExpLevelSet {
        ExpLevelSet::build(TemporalGrouping::contiguous(t, 2.0, group_size).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn single_group_levels_are_bases_plus_zero() {
        let set = ls(4, 4);
        assert_eq!(set.levels(), &[0.0, 1.0, 2.0, 4.0, 8.0]);
        assert_eq!(set.s_max(), 8.0);
    }

    #[test]
    fn two_group_levels_enumerate_pair_sums() {
        let set = ls(4, 2);
        assert_eq!(set.levels(), &[0.0, 1.0, 2.0, 4.0, 5.0, 6.0, 8.0, 9.0, 10.0]);
        assert_eq!(set.s_max(), 10.0);
    }

    #[test]
    fn t1_levels() {
        let set = ls(1, 1);
        assert_eq!(set.levels(), &[0.0, 1.0]);
    }

    #[test]
    fn overlapping_groups_rejected() {
        assert!(matches!(
            TemporalGrouping::new(2, 2.0, alloc::vec![alloc::vec![0, 1], alloc::vec![1]]),
            Err(CoreError::InvalidGrouping(_))
        ));
    }

    #[test]
    fn quantize_matches_hand_boundaries() {
        let set = ls(4, 4);
        // boundaries 0.5, 1.5, 3, 6
        assert_eq!(set.boundaries(), &[0.5, 1.5, 3.0, 6.0]);
        assert_eq!(set.quantize(2.4), 2);
        assert_eq!(set.quantize(-5.0), 0);
        assert_eq!(set.quantize(100.0), set.levels().len() - 1);
        // ties round to the upper level
        assert_eq!(set.quantize(1.5), 2);
    }

    #[test]
    fn quantize_comparison_budget() {
        for gs in [1, 2, 4] {
            let set = ls(4, gs);
            let budget = (set.levels().len() as f64).log2().ceil() as u32;
            for x in [-3.0, 0.0, 0.7, 2.5, 5.5, 11.0] {
                let (_, cmp) = set.quantize_counted(x);
                assert!(cmp <= budget, "{cmp} comparisons > budget {budget}");
            }
        }
    }

    #[test]
    fn encode_level_six_uses_bases_two_and_four() {
        let set = ls(4, 2);
        let train = set.encode_spikes(6.0).unwrap();
        assert_eq!(train, alloc::vec![0.0, 2.0, 4.0, 0.0]);
    }

    #[test]
    fn encode_zero_and_max() {
        let set = ls(4, 2);
        assert_eq!(set.encode_spikes(0.0).unwrap(), alloc::vec![0.0; 4]);
        // one spike per group at the group's max base
        assert_eq!(set.encode_spikes(10.0).unwrap(), alloc::vec![0.0, 2.0, 0.0, 8.0]);
    }

    #[test]
    fn encode_rejects_non_members() {
        let set = ls(4, 2);
        assert!(matches!(set.encode_spikes(6.5), Err(CoreError::Contract(_))));
    }

    #[test]
    fn decode_examples() {
        let set = ls(4, 2);
        assert_eq!(set.decode_spikes(&[0.0; 4]).unwrap(), 0.0);
        let v = set.decode_spikes(&[0.0, 2.0, 4.0, 0.0]).unwrap();
        assert!((v - 0.6).abs() < 1e-15);
        assert!(set.decode_spikes(&[3.0, 0.0, 0.0, 0.0]).is_err());
        assert!(set.decode_spikes(&[-1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn spike_count_bounded_by_group_count() {
        let set = ls(4, 2);
        for i in 0..set.levels().len() {
            let spikes = set.train(i).iter().filter(|s| **s != 0).count();
            assert!(spikes <= set.grouping().group_count());
        }
    }

    #[test]
    fn expg_forward_examples() {
        let set = ls(4, 4);
        // (i_avg * T + v0) / lambda = 2.4 -> level 2 -> 2/8
        let i_avg = (2.4 - 0.0) / 4.0;
        assert!((expg_forward(i_avg, 4, 0.0, &set) - 0.25).abs() < 1e-15);
        assert_eq!(expg_forward(-1e9, 4, 0.0, &set), 0.0);
        assert_eq!(expg_forward(1e9, 4, 0.0, &set), set.lambda());
    }

    #[test]
    fn qcfs_forward_examples() {
        let v = qcfs_forward(0.4, 4, 0.5, 1.0);
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(qcfs_forward(-0.2, 4, 0.5, 1.0), 0.0);
        assert_eq!(qcfs_forward(2.0, 4, 0.5, 1.0), 1.0);
    }

    #[test]
    fn blend_weights_at_schedule_ends() {
        let w = blend_weight(&BlendSchedule::new(0, 10).unwrap());
        assert_eq!(w, (1.0, 0.0));
        let w = blend_weight(&BlendSchedule::new(10, 10).unwrap());
        assert!((w.0).abs() < 1e-15 && (w.1 - 1.0).abs() < 1e-15);
        let w = blend_weight(&BlendSchedule::new(5, 10).unwrap());
        assert!((w.0 - 0.5).abs() < 1e-15 && (w.1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn blend_rejects_zero_total() {
        assert!(BlendSchedule::new(0, 0).is_err());
    }

    #[test]
    fn mixed_activation_endpoints() {
        let set = ls(4, 2);
        let final_sched = BlendSchedule::new(8, 8).unwrap();
        let start_sched = BlendSchedule::new(0, 8).unwrap();
        for i in 0..40 {
            let i_avg = -0.5 + i as f64 * 0.05;
            let mixed = mixed_activation(i_avg, 4, 0.0, &set, &final_sched, false);
            assert!((mixed - expg_forward(i_avg, 4, 0.0, &set)).abs() < 1e-15);
        }
        // linear region at e_t = 0
        let i_avg = 0.1;
        let v = mixed_activation(i_avg, 4, 0.0, &set, &start_sched, false);
        assert!((v - 0.4).abs() < 1e-15);
        // finite-difference slope of the linear region is T
        let h = 1e-6;
        let slope = (mixed_activation(i_avg + h, 4, 0.0, &set, &start_sched, false)
            - mixed_activation(i_avg - h, 4, 0.0, &set, &start_sched, false))
            / (2.0 * h);
        assert!((slope - 4.0).abs() < 1e-4, "slope {slope}");
    }

    #[test]
    fn symmetric_mirror_and_oddness() {
        let set = ls(4, 4);
        let sym = set.symmetric_level_set();
        assert_eq!(
            sym.levels(),
            &[-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0]
        );
        let idx = sym.quantize(-2.4);
        assert_eq!(sym.level_value(idx), -2.0);
        let train = sym.encode_spikes(-6.0).err();
        assert!(train.is_some(), "-6 is not a level of the single-group set");
        let sym2 = ls(4, 2).symmetric_level_set();
        let pos = sym2.encode_spikes(6.0).unwrap();
        let neg = sym2.encode_spikes(-6.0).unwrap();
        let d_pos = sym2.decode_spikes(&pos).unwrap();
        let d_neg = sym2.decode_spikes(&neg).unwrap();
        assert!((d_pos + d_neg).abs() < 1e-15);
    }

    #[test]
    fn activation_apply_encodes_sites() {
        let act = SpikeActivation::with_v0(ls(4, 2), 0.0);
        let shape = TensorShape::new(4, 1, 1, 1, 2).unwrap();
        // site 0: constant current 1.5 -> u = 6 -> level 6 -> spikes at bases 2, 4
        // site 1: zero current -> no spikes
        let mut x = DenseTensor::zeros(shape);
        for ti in 0..4 {
            x.set(ti, 0, 0, 0, 0, 1.5);
        }
        let counters = OpCounters::default();
        let spikes = act.apply(&x, &counters).unwrap();
        spikes.validate().unwrap();
        let got: Vec<f64> = (0..4).map(|ti| spikes.tensor.get(ti, 0, 0, 0, 0)).collect();
        assert_eq!(got, alloc::vec![0.0, 2.0, 4.0, 0.0]);
        assert!((0..4).all(|ti| spikes.tensor.get(ti, 0, 0, 0, 1) == 0.0));
        let snap = counters.snapshot();
        assert_eq!(snap.spike_slots, 8);
        assert_eq!(snap.spike_nonzero, 2);
        assert!(snap.comparisons > 0);
    }
}

//! Spike-domain matrix products and the attention mechanisms: the averaged
//! conversion form, the per-step form, and the group-wise variant that splits
//! channels into a strided global half and a windowed local half.
//!
//! The spike operand always sits on the left of a product, so attention
//! arithmetic reduces to gather, binary shift and add; general multiplies in
//! this path are tracked by a counter and stay at zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::blocks::Conv2d;
use crate::error::{CoreError, Result};
use crate::exp_coding::SpikeActivation;
use crate::profiler::{ModuleId, OpCounters, Profiler};
use crate::tensor::{regroup, DenseTensor, GroupMode, GroupingPlan, SpikeTensor, TensorShape};

/// Head layout and score scaling of one attention site.
#[derive(Clone, Copy, Debug)]
pub struct AttentionConfig {
    pub heads: usize,
    pub head_dim: usize,
    /// Applied to scores before the spiking activation; folded into the
    /// dense operand so the spike path stays shift-add only.
    pub scale: f64,
}

impl AttentionConfig {
    /// Heads split the channel dimension evenly; scale is `1 / sqrt(head_dim)`.
    pub fn new(heads: usize, channels: usize) -> Result<Self> {
        if heads == 0 || channels % heads != 0 {
            return Err(CoreError::InvalidConfig(format!(
                "{heads} heads do not divide {channels} channels"
            )));
        }
        let head_dim = channels / heads;
        Ok(AttentionConfig {
            heads,
            head_dim,
            scale: 1.0 / libm::sqrt(head_dim as f64),
        })
    }
}

/// Sign and binary exponent of a spike amplitude, if it is a signed power of
/// two (including 1).
#[inline]
pub fn pow2_exponent(amp: f64) -> Option<(bool, i32)> {
    if amp == 0.0 || !amp.is_finite() {
        return None;
    }
    let bits = amp.to_bits();
    let mantissa = bits & ((1u64 << 52) - 1);
    let exp = ((bits >> 52) & 0x7ff) as i64;
    if mantissa != 0 || exp == 0 {
        return None;
    }
    Some(((bits >> 63) != 0, (exp - 1023) as i32))
}

/// Scale by a power of two via exponent adjustment (no multiply on the
/// normal-range path).
#[inline]
pub fn scale_pow2(x: f64, e: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let ne = exp + e as i64;
    if exp == 0 || exp == 0x7ff || ne <= 0 || ne >= 0x7ff {
        return libm::scalbn(x, e);
    }
    f64::from_bits((bits & !(0x7ffu64 << 52)) | ((ne as u64) << 52))
}

/// Multiplication-free product of a spike-valued matrix `s` (`m x k`, entries
/// in `{0} ∪ {±2^j}`) with a dense matrix `d` (`k x n`): rows of `d` are
/// gathered where `s` is nonzero, binary-shifted by the amplitude exponent
/// and accumulated.
pub fn spike_matmul(s: &[f64], d: &[f64], m: usize, k: usize, n: usize) -> Result<Vec<f64>> {
    let counters = OpCounters::default();
    spike_matmul_counted(s, d, m, k, n, &counters, false)
}

/// As [`spike_matmul`], recording SOPs (and optionally score SOPs) into the
/// given counters.
pub fn spike_matmul_counted(
    s: &[f64],
    d: &[f64],
    m: usize,
    k: usize,
    n: usize,
    counters: &OpCounters,
    score: bool,
) -> Result<Vec<f64>> {
    if s.len() != m * k || d.len() != k * n {
        return Err(CoreError::ShapeMismatch(format!(
            "spike_matmul: s is {} (need {m}x{k}), d is {} (need {k}x{n})",
            s.len(),
            d.len()
        )));
    }
    let mut out = vec![0.0; m * n];
    let mut sops: u64 = 0;
    for i in 0..m {
        let acc = &mut out[i * n..(i + 1) * n];
        for l in 0..k {
            let amp = s[i * k + l];
            if amp == 0.0 {
                continue;
            }
            let (neg, e) =
                pow2_exponent(amp).ok_or(CoreError::UnsupportedAmplitude(amp))?;
            let row = &d[l * n..(l + 1) * n];
            if neg {
                for (a, w) in acc.iter_mut().zip(row) {
                    *a -= scale_pow2(*w, e);
                }
            } else {
                for (a, w) in acc.iter_mut().zip(row) {
                    *a += scale_pow2(*w, e);
                }
            }
            sops += n as u64;
        }
    }
    counters.add_sops(sops);
    if score {
        counters.add_score_sops(sops);
    }
    Ok(out)
}

fn check_qkv_shapes(q: &DenseTensor, k: &DenseTensor, v: &DenseTensor, cfg: &AttentionConfig) -> Result<()> {
    if q.shape != k.shape || q.shape != v.shape {
        return Err(CoreError::ShapeMismatch(format!(
            "attention inputs disagree: {:?} / {:?} / {:?}",
            q.shape, k.shape, v.shape
        )));
    }
    if cfg.heads * cfg.head_dim != q.shape.c {
        return Err(CoreError::InvalidConfig(format!(
            "{} heads x {} dims != {} channels",
            cfg.heads, cfg.head_dim, q.shape.c
        )));
    }
    Ok(())
}

/// Dense per-head attention over token-major matrices; reference arithmetic
/// shared by the averaged and per-step forms.
fn dense_attention_step(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    n_tokens: usize,
    cfg: &AttentionConfig,
    f: &dyn Fn(f64) -> f64,
    out: &mut [f64],
) {
    let c = cfg.heads * cfg.head_dim;
    for head in 0..cfg.heads {
        let off = head * cfg.head_dim;
        for i in 0..n_tokens {
            for j in 0..n_tokens {
                let mut score = 0.0;
                for d in 0..cfg.head_dim {
                    score += q[i * c + off + d] * k[j * c + off + d];
                }
                let a = f(score * cfg.scale);
                for d in 0..cfg.head_dim {
                    out[i * c + off + d] += a * v[j * c + off + d];
                }
            }
        }
    }
}

/// Conversion-form attention on temporally averaged rates (`t = 1`):
/// `f(Q_avg K_avg^T * scale) V_avg` per head.
pub fn ssa_conversion(
    q_avg: &DenseTensor,
    k_avg: &DenseTensor,
    v_avg: &DenseTensor,
    cfg: &AttentionConfig,
    f: &dyn Fn(f64) -> f64,
) -> Result<DenseTensor> {
    check_qkv_shapes(q_avg, k_avg, v_avg, cfg)?;
    if q_avg.shape.t != 1 {
        return Err(CoreError::Contract(
            "ssa_conversion expects temporally averaged inputs (t = 1)".into(),
        ));
    }
    let s = q_avg.shape;
    let n_tokens = s.tokens();
    let mut out = DenseTensor::zeros(s);
    let stride = n_tokens * s.c;
    for bi in 0..s.b {
        dense_attention_step(
            &q_avg.data[bi * stride..(bi + 1) * stride],
            &k_avg.data[bi * stride..(bi + 1) * stride],
            &v_avg.data[bi * stride..(bi + 1) * stride],
            n_tokens,
            cfg,
            f,
            &mut out.data[bi * stride..(bi + 1) * stride],
        );
    }
    Ok(out)
}

/// Expanded per-step realization of the conversion form:
/// `(1/T^2) f(Q_t (sum_i K_i)^T * scale) sum_j V_j` for each step. For a
/// linear `f`, averaging the steps reproduces [`ssa_conversion`] on the
/// averaged inputs.
pub fn ssa_conversion_expanded(
    q: &DenseTensor,
    k: &DenseTensor,
    v: &DenseTensor,
    cfg: &AttentionConfig,
    f: &dyn Fn(f64) -> f64,
) -> Result<DenseTensor> {
    check_qkv_shapes(q, k, v, cfg)?;
    let s = q.shape;
    let t = s.t as f64;
    let k_sum = scale_tensor(&k.temporal_average(), t);
    let v_sum = scale_tensor(&v.temporal_average(), t);
    let n_tokens = s.tokens();
    let stride = n_tokens * s.c;
    let mut out = DenseTensor::zeros(s);
    let inv_t2 = 1.0 / (t * t);
    for ti in 0..s.t {
        for bi in 0..s.b {
            let src = (ti * s.b + bi) * stride;
            let mut step = vec![0.0; stride];
            dense_attention_step(
                &q.data[src..src + stride],
                &k_sum.data[bi * stride..(bi + 1) * stride],
                &v_sum.data[bi * stride..(bi + 1) * stride],
                n_tokens,
                cfg,
                f,
                &mut step,
            );
            for (dst, val) in out.data[src..src + stride].iter_mut().zip(&step) {
                *dst = val * inv_t2;
            }
        }
    }
    Ok(out)
}

/// Per-step attention: `f(Q_t K_t^T * scale) V_t` independently for every
/// time-step.
pub fn ssa_stbp(
    q: &DenseTensor,
    k: &DenseTensor,
    v: &DenseTensor,
    cfg: &AttentionConfig,
    f: &dyn Fn(f64) -> f64,
) -> Result<DenseTensor> {
    check_qkv_shapes(q, k, v, cfg)?;
    let s = q.shape;
    let n_tokens = s.tokens();
    let stride = n_tokens * s.c;
    let mut out = DenseTensor::zeros(s);
    for ti in 0..s.t {
        for bi in 0..s.b {
            let src = (ti * s.b + bi) * stride;
            dense_attention_step(
                &q.data[src..src + stride],
                &k.data[src..src + stride],
                &v.data[src..src + stride],
                n_tokens,
                cfg,
                f,
                &mut out.data[src..src + stride],
            );
        }
    }
    Ok(out)
}

fn scale_tensor(x: &DenseTensor, factor: f64) -> DenseTensor {
    DenseTensor {
        shape: x.shape,
        data: x.data.iter().map(|v| v * factor).collect(),
    }
}

/// Group-wise attention core: split channels per the plan, form strided
/// groups on the global half and windows on the local half, run spiking
/// attention within each group against temporally averaged K/V, and restore
/// the original shape.
///
/// `q_scale` is the emission scale of the coder that produced `q`; it is
/// folded into the dense K operand together with the score scale.
pub fn attend_groups(
    q: &SpikeTensor,
    k_avg: &DenseTensor,
    v_avg: &DenseTensor,
    plan: &GroupingPlan,
    cfg: &AttentionConfig,
    sn_score: &SpikeActivation,
    q_scale: f64,
    counters: &OpCounters,
) -> Result<DenseTensor> {
    let s = q.shape();
    plan.validate_for(s)?;
    if cfg.heads * cfg.head_dim != s.c {
        return Err(CoreError::InvalidConfig(format!(
            "{} heads x {} dims != {} channels",
            cfg.heads, cfg.head_dim, s.c
        )));
    }
    for (name, half) in [("strided", plan.split_channel), ("window", s.c - plan.split_channel)] {
        if half % cfg.head_dim != 0 {
            return Err(CoreError::InvalidConfig(format!(
                "{name} half of {half} channels is not a multiple of head_dim {}",
                cfg.head_dim
            )));
        }
    }
    if (k_avg.shape.t, v_avg.shape.t) != (1, 1) {
        return Err(CoreError::Contract("K/V must be temporally averaged (t = 1)".into()));
    }

    let (q_lo, q_hi) = q.tensor.channel_split(plan.split_channel)?;
    let (k_lo, k_hi) = k_avg.channel_split(plan.split_channel)?;
    let (v_lo, v_hi) = v_avg.channel_split(plan.split_channel)?;

    let mut halves: Vec<DenseTensor> = Vec::with_capacity(2);
    for (mode, qh, kh, vh) in [
        (GroupMode::Strided, &q_lo, &k_lo, &v_lo),
        (GroupMode::Window, &q_hi, &k_hi, &v_hi),
    ] {
        if qh.shape.c == 0 {
            halves.push(qh.clone());
            continue;
        }
        let q_groups = match mode {
            GroupMode::Strided => qh.strided_groups(plan.n)?,
            GroupMode::Window => qh.window_groups(plan.n)?,
        };
        let k_groups = match mode {
            GroupMode::Strided => kh.strided_groups(plan.n)?,
            GroupMode::Window => kh.window_groups(plan.n)?,
        };
        let v_groups = match mode {
            GroupMode::Strided => vh.strided_groups(plan.n)?,
            GroupMode::Window => vh.window_groups(plan.n)?,
        };
        let mut out_groups = Vec::with_capacity(q_groups.len());
        for ((qg, kg), vg) in q_groups.iter().zip(&k_groups).zip(&v_groups) {
            out_groups.push(attend_single_group(qg, kg, vg, cfg, sn_score, q_scale, counters)?);
        }
        halves.push(regroup(&out_groups, mode, plan.n, qh.shape)?);
    }
    halves[0].channel_concat(&halves[1])
}

/// Spiking attention within one token group, all heads of one channel half.
fn attend_single_group(
    q: &DenseTensor,
    k: &DenseTensor,
    v: &DenseTensor,
    cfg: &AttentionConfig,
    sn_score: &SpikeActivation,
    q_scale: f64,
    counters: &OpCounters,
) -> Result<DenseTensor> {
    let s = q.shape;
    let n_tokens = s.tokens();
    let c = s.c;
    let heads = c / cfg.head_dim;
    let hd = cfg.head_dim;
    let mut out = DenseTensor::zeros(s);
    let score_shape = TensorShape::new(s.t, 1, n_tokens, n_tokens, 1)?;
    let kd_scale = q_scale * cfg.scale;
    let v_scale = sn_score.emission_scale();
    let mut q_step = vec![0.0; n_tokens * hd];
    let mut kd = vec![0.0; hd * n_tokens];
    let mut vd = vec![0.0; n_tokens * hd];
    for bi in 0..s.b {
        for head in 0..heads {
            let off = head * hd;
            // Dense-side preparation: transpose and pre-scale K, scale V.
            for j in 0..n_tokens {
                for d in 0..hd {
                    kd[d * n_tokens + j] = k.data[(bi * n_tokens + j) * c + off + d] * kd_scale;
                    vd[j * hd + d] = v.data[(bi * n_tokens + j) * c + off + d] * v_scale;
                }
            }
            // Per-step score products, spike operand on the left.
            let mut scores = DenseTensor::zeros(score_shape);
            for ti in 0..s.t {
                let base = (ti * s.b + bi) * n_tokens * c;
                for i in 0..n_tokens {
                    q_step[i * hd..(i + 1) * hd]
                        .copy_from_slice(&q.data[base + i * c + off..base + i * c + off + hd]);
                }
                let step =
                    spike_matmul_counted(&q_step, &kd, n_tokens, hd, n_tokens, counters, true)?;
                scores.data[ti * n_tokens * n_tokens..(ti + 1) * n_tokens * n_tokens]
                    .copy_from_slice(&step);
            }
            // Spiking activation over the scores, then the value product.
            let attn = sn_score.apply(&scores, counters)?;
            for ti in 0..s.t {
                let a_step =
                    &attn.tensor.data[ti * n_tokens * n_tokens..(ti + 1) * n_tokens * n_tokens];
                let step = spike_matmul_counted(a_step, &vd, n_tokens, n_tokens, hd, counters, false)?;
                let base = (ti * s.b + bi) * n_tokens * c;
                for i in 0..n_tokens {
                    for d in 0..hd {
                        out.data[base + i * c + off + d] = step[i * hd + d];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One group-wise (or plain) spiking self-attention site: projections,
/// grouped attention, optional depthwise convolution pathway, output
/// projection and residual.
#[derive(Clone, Debug)]
pub struct AttentionLayer {
    pub cfg: AttentionConfig,
    pub plan: GroupingPlan,
    pub sn_in: SpikeActivation,
    pub sn_q: SpikeActivation,
    pub sn_score: SpikeActivation,
    /// Symmetric coder feeding the convolution pathway; present together
    /// with `conv_dw`.
    pub sn_v: Option<SpikeActivation>,
    pub sn_out: SpikeActivation,
    pub proj_q: Conv2d,
    pub proj_kv: Conv2d,
    pub conv_dw: Option<Conv2d>,
    pub proj_out: Conv2d,
    pub module: ModuleId,
}

impl AttentionLayer {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        let m = prof.module(self.module);
        let c = x.shape.c;
        let s_in = self.sn_in.apply(x, m)?;
        if assert_spikes {
            s_in.validate()?;
        }
        let in_scale = self.sn_in.emission_scale();
        let q_pre = self.proj_q.forward_spikes(&s_in, in_scale, m)?;
        let kv = self.proj_kv.forward_spikes(&s_in, in_scale, m)?;
        let (k, v) = kv.channel_split(c)?;
        let q = self.sn_q.apply(&q_pre, m)?;
        if assert_spikes {
            q.validate()?;
        }
        let k_avg = k.temporal_average();
        let v_avg = v.temporal_average();
        let attn = attend_groups(
            &q,
            &k_avg,
            &v_avg,
            &self.plan,
            &self.cfg,
            &self.sn_score,
            self.sn_q.emission_scale(),
            m,
        )?;
        let pre_out = match (&self.sn_v, &self.conv_dw) {
            (Some(sn_v), Some(dw)) => {
                let v_spikes = sn_v.apply(&v, m)?;
                if assert_spikes {
                    v_spikes.validate()?;
                }
                let conv_path = dw.forward_spikes(&v_spikes, sn_v.emission_scale(), m)?;
                attn.add(&conv_path)?
            }
            _ => attn,
        };
        let s_out = self.sn_out.apply(&pre_out, m)?;
        if assert_spikes {
            s_out.validate()?;
        }
        let o = self.proj_out.forward_spikes(&s_out, self.sn_out.emission_scale(), m)?;
        o.add(x)
    }

    pub fn param_count(&self) -> usize {
        self.proj_q.param_count()
            + self.proj_kv.param_count()
            + self.conv_dw.as_ref().map_or(0, |c| c.param_count())
            + self.proj_out.param_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_exponent_recognizes_signed_powers() {
        assert_eq!(pow2_exponent(1.0), Some((false, 0)));
        assert_eq!(pow2_exponent(8.0), Some((false, 3)));
        assert_eq!(pow2_exponent(-0.5), Some((true, -1)));
        assert_eq!(pow2_exponent(3.0), None);
        assert_eq!(pow2_exponent(0.0), None);
    }

    #[test]
    fn scale_pow2_matches_multiplication() {
        for x in [0.0, 1.5, -2.25, 1e-200, 1e200, 0.37] {
            for e in [-4i32, -1, 0, 1, 7] {
                let want = x * libm::pow(2.0, e as f64);
                assert_eq!(scale_pow2(x, e), want, "x={x} e={e}");
            }
        }
    }

    #[test]
    fn spike_identity_pattern_passes_through() {
        // s = I (binary), d arbitrary
        let s = [1.0, 0.0, 0.0, 1.0];
        let d = [3.0, -1.0, 0.5, 2.0];
        let out = spike_matmul(&s, &d, 2, 2, 2).unwrap();
        assert_eq!(out, d.to_vec());
    }

    #[test]
    fn all_zero_spikes_give_zero() {
        let s = [0.0; 6];
        let d = [1.0; 6];
        let out = spike_matmul(&s, &d, 2, 3, 2).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_power_of_two_amplitude_rejected() {
        let s = [3.0];
        let d = [1.0];
        assert!(matches!(
            spike_matmul(&s, &d, 1, 1, 1),
            Err(CoreError::UnsupportedAmplitude(_))
        ));
    }

    #[test]
    fn spike_matmul_counts_sops_per_nonzero_row() {
        let counters = OpCounters::default();
        let s = [2.0, 0.0, -1.0, 0.0, 0.0, 0.0];
        let d = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = spike_matmul_counted(&s, &d, 2, 3, 2, &counters, true).unwrap();
        assert_eq!(out, alloc::vec![2.0 - 5.0, 4.0 - 6.0, 0.0, 0.0]);
        let snap = counters.snapshot();
        assert_eq!(snap.sops, 4);
        assert_eq!(snap.score_sops, 4);
        assert_eq!(snap.general_muls, 0);
    }

    #[test]
    fn single_token_conversion_is_scalar_product() {
        let shape = TensorShape::new(1, 1, 1, 1, 1).unwrap();
        let q = DenseTensor::from_vec(shape, alloc::vec![2.0]).unwrap();
        let k = DenseTensor::from_vec(shape, alloc::vec![3.0]).unwrap();
        let v = DenseTensor::from_vec(shape, alloc::vec![5.0]).unwrap();
        let cfg = AttentionConfig { heads: 1, head_dim: 1, scale: 1.0 };
        let out = ssa_conversion(&q, &k, &v, &cfg, &|x| x).unwrap();
        assert_eq!(out.data, alloc::vec![30.0]);
    }

    #[test]
    fn stbp_t1_equals_conversion() {
        let shape = TensorShape::new(1, 1, 2, 1, 2).unwrap();
        let q = DenseTensor::from_vec(shape, alloc::vec![0.3, -0.4, 1.0, 0.2]).unwrap();
        let k = DenseTensor::from_vec(shape, alloc::vec![0.5, 0.1, -0.2, 0.6]).unwrap();
        let v = DenseTensor::from_vec(shape, alloc::vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let cfg = AttentionConfig::new(1, 2).unwrap();
        let a = ssa_conversion(&q, &k, &v, &cfg, &|x| x).unwrap();
        let b = ssa_stbp(&q, &k, &v, &cfg, &|x| x).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn stbp_is_time_permutation_equivariant() {
        let shape = TensorShape::new(2, 1, 2, 1, 2).unwrap();
        let mk = |seed: f64| {
            let data = (0..shape.len()).map(|i| libm::sin(seed + i as f64)).collect();
            DenseTensor::from_vec(shape, data).unwrap()
        };
        let (q, k, v) = (mk(0.1), mk(1.7), mk(3.9));
        let cfg = AttentionConfig::new(1, 2).unwrap();
        let out = ssa_stbp(&q, &k, &v, &cfg, &|x| x.max(0.0)).unwrap();
        let swap = |x: &DenseTensor| {
            let slab = x.data.len() / 2;
            let mut d = x.data[slab..].to_vec();
            d.extend_from_slice(&x.data[..slab]);
            DenseTensor::from_vec(shape, d).unwrap()
        };
        let out_swapped = ssa_stbp(&swap(&q), &swap(&k), &swap(&v), &cfg, &|x| x.max(0.0)).unwrap();
        assert_eq!(swap(&out).data, out_swapped.data);
    }

    #[test]
    fn expanded_form_averages_to_conversion_form_for_linear_f() {
        let shape = TensorShape::new(4, 2, 2, 2, 4).unwrap();
        let mk = |seed: f64| {
            let data = (0..shape.len()).map(|i| libm::sin(seed * 13.7 + i as f64 * 0.73)).collect();
            DenseTensor::from_vec(shape, data).unwrap()
        };
        let (q, k, v) = (mk(1.0), mk(2.0), mk(3.0));
        let cfg = AttentionConfig::new(2, 4).unwrap();
        let avg = ssa_conversion(&q.temporal_average(), &k.temporal_average(), &v.temporal_average(), &cfg, &|x| x).unwrap();
        let expanded = ssa_conversion_expanded(&q, &k, &v, &cfg, &|x| x).unwrap().temporal_average();
        for (a, b) in avg.data.iter().zip(&expanded.data) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

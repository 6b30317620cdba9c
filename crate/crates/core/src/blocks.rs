//! Network building blocks: convolutions with a dense multiply path (stem
//! only) and a spike-consuming shift-add path, the two-conv residual block,
//! the convolutional and plain feed-forward blocks, stage downsampling and
//! the classifier affine map.
//!
//! Per-step bias convention: the bias is added at every time-step, so the
//! temporal sum of a layer's outputs is `T` times its rate-domain value,
//! matching the direct-coded stem (see `SpikeActivation::emission_scale`).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::attention::{pow2_exponent, scale_pow2, AttentionLayer};
use crate::error::{CoreError, Result};
use crate::exp_coding::SpikeActivation;
use crate::profiler::{ModuleId, OpCounters, Profiler};
use crate::tensor::{DenseTensor, SpikeTensor, TensorShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvKind {
    /// 1x1 cross-channel mix.
    Pointwise,
    /// Per-channel spatial filter; in and out channels equal.
    Depthwise,
    /// General cross-correlation.
    Full,
}

/// 2-D convolution applied independently per time-step.
///
/// Weight layout: full and pointwise `[ky][kx][c_in][c_out]`, depthwise
/// `[ky][kx][c]`. Cross-correlation, zero padding.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub kind: ConvKind,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_c: usize,
    pub out_c: usize,
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl Conv2d {
    /// Zero-weight convolution of the given geometry.
    pub fn new(
        kind: ConvKind,
        kernel: usize,
        stride: usize,
        padding: usize,
        in_c: usize,
        out_c: usize,
        with_bias: bool,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 || in_c == 0 || out_c == 0 {
            return Err(CoreError::InvalidConfig(format!(
                "conv geometry k={kernel} s={stride} {in_c}->{out_c} has a zero extent"
            )));
        }
        match kind {
            ConvKind::Pointwise if kernel != 1 => {
                return Err(CoreError::InvalidConfig(format!(
                    "pointwise conv with kernel {kernel}"
                )));
            }
            ConvKind::Depthwise if in_c != out_c => {
                return Err(CoreError::InvalidConfig(format!(
                    "depthwise conv with {in_c} != {out_c} channels"
                )));
            }
            _ => {}
        }
        let wlen = match kind {
            ConvKind::Depthwise => kernel * kernel * in_c,
            _ => kernel * kernel * in_c * out_c,
        };
        Ok(Conv2d {
            kind,
            kernel,
            stride,
            padding,
            in_c,
            out_c,
            weight: vec![0.0; wlen],
            bias: with_bias.then(|| vec![0.0; out_c]),
        })
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.as_ref().map_or(0, Vec::len)
    }

    pub fn out_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let span = |x: usize| -> Result<usize> {
            let padded = x + 2 * self.padding;
            if padded < self.kernel {
                return Err(CoreError::ShapeMismatch(format!(
                    "spatial extent {x} too small for kernel {} with padding {}",
                    self.kernel, self.padding
                )));
            }
            Ok((padded - self.kernel) / self.stride + 1)
        };
        Ok((span(h)?, span(w)?))
    }

    fn check_in(&self, c: usize) -> Result<()> {
        if c != self.in_c {
            return Err(CoreError::ShapeMismatch(format!(
                "conv expects {} input channels, got {c}",
                self.in_c
            )));
        }
        Ok(())
    }

    /// Dense multiply-accumulate path (the stem); every tap is tallied as a
    /// MAC.
    pub fn forward_dense(&self, x: &DenseTensor, counters: &OpCounters) -> Result<DenseTensor> {
        self.check_in(x.shape.c)?;
        let s = x.shape;
        let (oh, ow) = self.out_hw(s.h, s.w)?;
        let oshape = TensorShape::new(s.t, s.b, oh, ow, self.out_c)?;
        let mut out = DenseTensor::zeros(oshape);
        let mut macs: u64 = 0;
        let k = self.kernel;
        for ti in 0..s.t {
            for bi in 0..s.b {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let dst = oshape.index(ti, bi, oy, ox, 0);
                        let acc = &mut out.data[dst..dst + self.out_c];
                        if let Some(bias) = &self.bias {
                            acc.copy_from_slice(bias);
                        }
                        for ky in 0..k {
                            let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                            if iy < 0 || iy as usize >= s.h {
                                continue;
                            }
                            for kx in 0..k {
                                let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                                if ix < 0 || ix as usize >= s.w {
                                    continue;
                                }
                                let src = s.index(ti, bi, iy as usize, ix as usize, 0);
                                let xs = &x.data[src..src + self.in_c];
                                match self.kind {
                                    ConvKind::Depthwise => {
                                        let wrow = &self.weight
                                            [(ky * k + kx) * self.in_c..(ky * k + kx + 1) * self.in_c];
                                        for ((a, xv), wv) in acc.iter_mut().zip(xs).zip(wrow) {
                                            *a += xv * wv;
                                        }
                                        macs += self.in_c as u64;
                                    }
                                    _ => {
                                        for (ci, xv) in xs.iter().enumerate() {
                                            let woff = ((ky * k + kx) * self.in_c + ci) * self.out_c;
                                            let wrow = &self.weight[woff..woff + self.out_c];
                                            for (a, wv) in acc.iter_mut().zip(wrow) {
                                                *a += xv * wv;
                                            }
                                        }
                                        macs += (self.in_c * self.out_c) as u64;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        counters.add_macs(macs);
        Ok(out)
    }

    /// Shift-add path consuming spike amplitudes. `in_scale` is the emission
    /// scale of the producing coder; it is folded into the weights once so
    /// the per-spike work is gather, shift and add. One SOP per nonzero
    /// spike per reached output connection.
    pub fn forward_spikes(
        &self,
        x: &SpikeTensor,
        in_scale: f64,
        counters: &OpCounters,
    ) -> Result<DenseTensor> {
        self.check_in(x.shape().c)?;
        let s = x.shape();
        let (oh, ow) = self.out_hw(s.h, s.w)?;
        let oshape = TensorShape::new(s.t, s.b, oh, ow, self.out_c)?;
        let mut out = DenseTensor::zeros(oshape);
        let w_eff: Vec<f64> = self.weight.iter().map(|w| w * in_scale).collect();
        let mut sops: u64 = 0;
        let k = self.kernel;
        for ti in 0..s.t {
            for bi in 0..s.b {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let dst = oshape.index(ti, bi, oy, ox, 0);
                        let acc = &mut out.data[dst..dst + self.out_c];
                        if let Some(bias) = &self.bias {
                            acc.copy_from_slice(bias);
                        }
                        for ky in 0..k {
                            let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                            if iy < 0 || iy as usize >= s.h {
                                continue;
                            }
                            for kx in 0..k {
                                let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                                if ix < 0 || ix as usize >= s.w {
                                    continue;
                                }
                                let src = s.index(ti, bi, iy as usize, ix as usize, 0);
                                let xs = &x.tensor.data[src..src + self.in_c];
                                match self.kind {
                                    ConvKind::Depthwise => {
                                        let woff = (ky * k + kx) * self.in_c;
                                        for (ci, &amp) in xs.iter().enumerate() {
                                            if amp == 0.0 {
                                                continue;
                                            }
                                            let (neg, e) = pow2_exponent(amp)
                                                .ok_or(CoreError::UnsupportedAmplitude(amp))?;
                                            let v = scale_pow2(w_eff[woff + ci], e);
                                            acc[ci] += if neg { -v } else { v };
                                            sops += 1;
                                        }
                                    }
                                    _ => {
                                        for (ci, &amp) in xs.iter().enumerate() {
                                            if amp == 0.0 {
                                                continue;
                                            }
                                            let (neg, e) = pow2_exponent(amp)
                                                .ok_or(CoreError::UnsupportedAmplitude(amp))?;
                                            let woff = ((ky * k + kx) * self.in_c + ci) * self.out_c;
                                            let wrow = &w_eff[woff..woff + self.out_c];
                                            if neg {
                                                for (a, wv) in acc.iter_mut().zip(wrow) {
                                                    *a -= scale_pow2(*wv, e);
                                                }
                                            } else {
                                                for (a, wv) in acc.iter_mut().zip(wrow) {
                                                    *a += scale_pow2(*wv, e);
                                                }
                                            }
                                            sops += self.out_c as u64;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        counters.add_sops(sops);
        Ok(out)
    }
}

/// Classifier affine map over pooled features. Weight layout `[in][out]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub in_c: usize,
    pub out_c: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn new(in_c: usize, out_c: usize) -> Result<Self> {
        if in_c == 0 || out_c == 0 {
            return Err(CoreError::InvalidConfig(format!(
                "linear {in_c}->{out_c} has a zero extent"
            )));
        }
        Ok(Linear {
            in_c,
            out_c,
            weight: vec![0.0; in_c * out_c],
            bias: vec![0.0; out_c],
        })
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Apply to `rows` feature vectors laid out contiguously; MACs tallied.
    pub fn forward(&self, x: &[f64], rows: usize, counters: &OpCounters) -> Result<Vec<f64>> {
        if x.len() != rows * self.in_c {
            return Err(CoreError::ShapeMismatch(format!(
                "linear input length {} != {rows} x {}",
                x.len(),
                self.in_c
            )));
        }
        let mut out = vec![0.0; rows * self.out_c];
        for r in 0..rows {
            let acc = &mut out[r * self.out_c..(r + 1) * self.out_c];
            acc.copy_from_slice(&self.bias);
            for (ci, xv) in x[r * self.in_c..(r + 1) * self.in_c].iter().enumerate() {
                let wrow = &self.weight[ci * self.out_c..(ci + 1) * self.out_c];
                for (a, wv) in acc.iter_mut().zip(wrow) {
                    *a += xv * wv;
                }
            }
        }
        counters.add_macs((rows * self.in_c * self.out_c) as u64);
        Ok(out)
    }
}

/// Convolutional feed-forward: pointwise expand, symmetric activation,
/// depthwise 3x3, activation, pointwise project, residual.
#[derive(Clone, Debug)]
pub struct ConvSffn {
    pub sn1: SpikeActivation,
    pub pw1: Conv2d,
    pub sn_sym: SpikeActivation,
    pub dw: Conv2d,
    pub sn2: SpikeActivation,
    pub pw2: Conv2d,
    pub module: ModuleId,
}

impl ConvSffn {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        let m = prof.module(self.module);
        let s1 = self.sn1.apply(x, m)?;
        if assert_spikes {
            s1.validate()?;
        }
        let expanded = self.pw1.forward_spikes(&s1, self.sn1.emission_scale(), m)?;
        let sym = self.sn_sym.apply(&expanded, m)?;
        if assert_spikes {
            sym.validate()?;
        }
        let local = self.dw.forward_spikes(&sym, self.sn_sym.emission_scale(), m)?;
        let s2 = self.sn2.apply(&local, m)?;
        if assert_spikes {
            s2.validate()?;
        }
        let projected = self.pw2.forward_spikes(&s2, self.sn2.emission_scale(), m)?;
        projected.add(x)
    }

    pub fn param_count(&self) -> usize {
        self.pw1.param_count() + self.dw.param_count() + self.pw2.param_count()
    }
}

/// Plain feed-forward: two pointwise layers with activations, residual.
#[derive(Clone, Debug)]
pub struct Sffn {
    pub sn1: SpikeActivation,
    pub pw1: Conv2d,
    pub sn2: SpikeActivation,
    pub pw2: Conv2d,
    pub module: ModuleId,
}

impl Sffn {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        let m = prof.module(self.module);
        let s1 = self.sn1.apply(x, m)?;
        if assert_spikes {
            s1.validate()?;
        }
        let hidden = self.pw1.forward_spikes(&s1, self.sn1.emission_scale(), m)?;
        let s2 = self.sn2.apply(&hidden, m)?;
        if assert_spikes {
            s2.validate()?;
        }
        let projected = self.pw2.forward_spikes(&s2, self.sn2.emission_scale(), m)?;
        projected.add(x)
    }

    pub fn param_count(&self) -> usize {
        self.pw1.param_count() + self.pw2.param_count()
    }
}

/// Either feed-forward flavor behind one interface.
#[derive(Clone, Debug)]
pub enum Ffn {
    Conv(ConvSffn),
    Plain(Sffn),
}

impl Ffn {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        match self {
            Ffn::Conv(f) => f.forward(x, prof, assert_spikes),
            Ffn::Plain(f) => f.forward(x, prof, assert_spikes),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Ffn::Conv(f) => f.param_count(),
            Ffn::Plain(f) => f.param_count(),
        }
    }
}

/// Residual two-conv block with channel expansion, followed by its
/// feed-forward: `ffn(conv2(SN(conv1(SN(x)))) + x)`.
#[derive(Clone, Debug)]
pub struct ConvBlock {
    pub sn1: SpikeActivation,
    pub conv1: Conv2d,
    pub sn2: SpikeActivation,
    pub conv2: Conv2d,
    pub module: ModuleId,
    pub ffn: Ffn,
}

impl ConvBlock {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        let m = prof.module(self.module);
        let s1 = self.sn1.apply(x, m)?;
        if assert_spikes {
            s1.validate()?;
        }
        let expanded = self.conv1.forward_spikes(&s1, self.sn1.emission_scale(), m)?;
        let s2 = self.sn2.apply(&expanded, m)?;
        if assert_spikes {
            s2.validate()?;
        }
        let projected = self.conv2.forward_spikes(&s2, self.sn2.emission_scale(), m)?;
        let residual = projected.add(x)?;
        self.ffn.forward(&residual, prof, assert_spikes)
    }

    pub fn param_count(&self) -> usize {
        self.conv1.param_count() + self.conv2.param_count() + self.ffn.param_count()
    }
}

/// Attention block: grouped (or plain) spiking attention followed by its
/// feed-forward.
#[derive(Clone, Debug)]
pub struct SsaBlock {
    pub attn: AttentionLayer,
    pub ffn: Ffn,
}

impl SsaBlock {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        let attended = self.attn.forward(x, prof, assert_spikes)?;
        self.ffn.forward(&attended, prof, assert_spikes)
    }

    pub fn param_count(&self) -> usize {
        self.attn.param_count() + self.ffn.param_count()
    }
}

#[derive(Clone, Debug)]
pub enum Block {
    Conv(ConvBlock),
    Ssa(SsaBlock),
}

impl Block {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        match self {
            Block::Conv(b) => b.forward(x, prof, assert_spikes),
            Block::Ssa(b) => b.forward(x, prof, assert_spikes),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Block::Conv(b) => b.param_count(),
            Block::Ssa(b) => b.param_count(),
        }
    }
}

/// Stage-boundary downsampler: activation then 2x2 stride-2 convolution with
/// a channel change.
#[derive(Clone, Debug)]
pub struct Downsample {
    pub sn: SpikeActivation,
    pub conv: Conv2d,
    pub module: ModuleId,
}

impl Downsample {
    pub fn forward(&self, x: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<DenseTensor> {
        let m = prof.module(self.module);
        let s = self.sn.apply(x, m)?;
        if assert_spikes {
            s.validate()?;
        }
        self.conv.forward_spikes(&s, self.sn.emission_scale(), m)
    }

    pub fn param_count(&self) -> usize {
        self.conv.param_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_coding::{ExpLevelSet, TemporalGrouping};

    fn counters() -> OpCounters {
        OpCounters::default()
    }

    fn act(t: usize, gs: usize) -> SpikeActivation {
        SpikeActivation::new(
            ExpLevelSet::build(TemporalGrouping::contiguous(t, 2.0, gs).unwrap(), 1.0).unwrap(),
        )
    }

    #[test]
    fn identity_pointwise_passes_through() {
        let mut conv = Conv2d::new(ConvKind::Pointwise, 1, 1, 0, 3, 3, false).unwrap();
        for i in 0..3 {
            conv.weight[i * 3 + i] = 1.0;
        }
        let shape = TensorShape::new(1, 1, 2, 2, 3).unwrap();
        let x = DenseTensor::from_vec(shape, (0..12).map(|i| i as f64).collect()).unwrap();
        let c = counters();
        let y = conv.forward_dense(&x, &c).unwrap();
        assert_eq!(y.data, x.data);
        assert_eq!(c.snapshot().macs, 4 * 9);
    }

    #[test]
    fn stem_geometry_7x7_stride2() {
        let conv = Conv2d::new(ConvKind::Full, 7, 2, 3, 3, 24, true).unwrap();
        assert_eq!(conv.out_hw(224, 224).unwrap(), (112, 112));
        let down = Conv2d::new(ConvKind::Full, 2, 2, 0, 24, 48, true).unwrap();
        assert_eq!(down.out_hw(112, 112).unwrap(), (56, 56));
    }

    #[test]
    fn depthwise_matches_naive_loop() {
        let mut conv = Conv2d::new(ConvKind::Depthwise, 3, 1, 1, 2, 2, false).unwrap();
        for (i, w) in conv.weight.iter_mut().enumerate() {
            *w = libm::sin(i as f64 * 0.7);
        }
        let shape = TensorShape::new(1, 1, 4, 5, 2).unwrap();
        let x = DenseTensor::from_vec(
            shape,
            (0..shape.len()).map(|i| libm::cos(i as f64 * 0.3)).collect(),
        )
        .unwrap();
        let y = conv.forward_dense(&x, &counters()).unwrap();
        // independent naive evaluation
        for oy in 0..4usize {
            for ox in 0..5usize {
                for ci in 0..2usize {
                    let mut want = 0.0;
                    for ky in 0..3usize {
                        for kx in 0..3usize {
                            let iy = oy as isize + ky as isize - 1;
                            let ix = ox as isize + kx as isize - 1;
                            if iy < 0 || iy >= 4 || ix < 0 || ix >= 5 {
                                continue;
                            }
                            want += x.get(0, 0, iy as usize, ix as usize, ci)
                                * conv.weight[(ky * 3 + kx) * 2 + ci];
                        }
                    }
                    assert!((y.get(0, 0, oy, ox, ci) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spike_path_agrees_with_dense_path() {
        // Spike-valued input consumed by both kernels must give equal output.
        let mut conv = Conv2d::new(ConvKind::Full, 3, 1, 1, 2, 3, true).unwrap();
        for (i, w) in conv.weight.iter_mut().enumerate() {
            *w = libm::sin(i as f64);
        }
        for (i, b) in conv.bias.as_mut().unwrap().iter_mut().enumerate() {
            *b = 0.1 * i as f64;
        }
        let shape = TensorShape::new(2, 1, 3, 3, 2).unwrap();
        let mut x = DenseTensor::zeros(shape);
        // step 1 amplitudes in {0, +-1}, step 2 in {0, +-2}
        for (i, v) in x.data.iter_mut().enumerate() {
            let amp = if i < 18 { 1.0 } else { 2.0 };
            *v = match i % 3 {
                0 => amp,
                1 => -amp,
                _ => 0.0,
            };
        }
        let spikes = SpikeTensor { tensor: x.clone(), alpha: 2.0 };
        spikes.validate().unwrap();
        let dense = conv.forward_dense(&x, &counters()).unwrap();
        let c = counters();
        let spiking = conv.forward_spikes(&spikes, 1.0, &c).unwrap();
        for (a, b) in dense.data.iter().zip(&spiking.data) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(c.snapshot().macs, 0);
        assert!(c.snapshot().sops > 0);
    }

    #[test]
    fn spike_path_sop_count_is_nonzero_taps_times_fanout() {
        let conv = Conv2d::new(ConvKind::Pointwise, 1, 1, 0, 2, 5, false).unwrap();
        let shape = TensorShape::new(1, 1, 1, 2, 2).unwrap();
        let x = DenseTensor::from_vec(shape, alloc::vec![1.0, 0.0, -1.0, 1.0]).unwrap();
        let spikes = SpikeTensor { tensor: x, alpha: 2.0 };
        let c = counters();
        conv.forward_spikes(&spikes, 1.0, &c).unwrap();
        // 3 nonzero spikes, fan-out 5
        assert_eq!(c.snapshot().sops, 15);
    }

    #[test]
    fn conv_block_zero_weights_zero_input_gives_zero() {
        let prof = Profiler::new(alloc::vec![
            crate::profiler::ModuleMeta {
                stage: alloc::string::String::from("s1"),
                block_index: 0,
                kind: crate::profiler::ModuleKind::Sconv,
                sop_upper_bound: 0,
            },
            crate::profiler::ModuleMeta {
                stage: alloc::string::String::from("s1"),
                block_index: 0,
                kind: crate::profiler::ModuleKind::ConvSffn,
                sop_upper_bound: 0,
            },
        ]);
        let t = 4;
        let block = ConvBlock {
            sn1: act(t, 2),
            conv1: Conv2d::new(ConvKind::Full, 3, 1, 1, 4, 8, false).unwrap(),
            sn2: act(t, 2),
            conv2: Conv2d::new(ConvKind::Full, 3, 1, 1, 8, 4, false).unwrap(),
            module: ModuleId(0),
            ffn: Ffn::Conv(ConvSffn {
                sn1: act(t, 2),
                pw1: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, 4, 16, true).unwrap(),
                sn_sym: SpikeActivation::new(
                    ExpLevelSet::build(TemporalGrouping::contiguous(t, 2.0, 2).unwrap(), 1.0)
                        .unwrap()
                        .symmetric_level_set(),
                ),
                dw: Conv2d::new(ConvKind::Depthwise, 3, 1, 1, 16, 16, false).unwrap(),
                sn2: act(t, 2),
                pw2: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, 16, 4, true).unwrap(),
                module: ModuleId(1),
            }),
        };
        let x = DenseTensor::zeros(TensorShape::new(t, 1, 4, 4, 4).unwrap());
        let y = block.forward(&x, &prof, true).unwrap();
        assert!(y.data.iter().all(|v| *v == 0.0));
        assert_eq!(block.param_count(), 9 * 4 * 8 + 9 * 8 * 4 + (64 + 16) + 9 * 16 + (64 + 4));
    }

    #[test]
    fn linear_matches_hand_product() {
        let mut lin = Linear::new(2, 3).unwrap();
        lin.weight = alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        lin.bias = alloc::vec![0.5, 0.0, -0.5];
        let c = counters();
        let y = lin.forward(&[1.0, -1.0], 1, &c).unwrap();
        assert_eq!(y, alloc::vec![1.0 - 4.0 + 0.5, 2.0 - 5.0, 3.0 - 6.0 - 0.5]);
        assert_eq!(c.snapshot().macs, 6);
    }
}

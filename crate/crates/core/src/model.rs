//! Whole-network assembly: stage configuration, the three named presets,
//! end-to-end forward passes, parameter counting and the named-tensor weight
//! container.
//!
//! Layout: dense stem convolution, two convolutional stages, two grouped
//! attention stages, one plain attention stage, global pooling and an affine
//! classifier. A 2x2 stride-2 spiking convolution halves the feature map at
//! every stage boundary.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::attention::{AttentionConfig, AttentionLayer};
use crate::blocks::{Block, Conv2d, ConvBlock, ConvKind, ConvSffn, Downsample, Ffn, Linear, Sffn, SsaBlock};
use crate::error::{CoreError, Result};
use crate::exp_coding::{ExpLevelSet, SpikeActivation, TemporalGrouping};
use crate::profiler::{
    attention_score_bound, conv_bound, depthwise_bound, ModuleId, ModuleKind, ModuleMeta, Profiler,
};
use crate::tensor::{DenseTensor, GroupingPlan, TensorShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageKind {
    /// Two-conv residual blocks with a convolutional feed-forward.
    Conv,
    /// Grouped attention blocks with a convolutional feed-forward.
    SsaGw,
    /// Ungrouped attention blocks with a plain feed-forward.
    SsaPlain,
}

/// One stage of same-resolution blocks.
#[derive(Clone, Debug)]
pub struct StageConfig {
    pub name: String,
    pub kind: StageKind,
    pub depth: usize,
    pub channels: usize,
    /// Square feature-map side at stage entry.
    pub feature: usize,
    /// Channel expansion of the two-conv residual (conv stages).
    pub r1: usize,
    /// Channel expansion of the feed-forward.
    pub r2: usize,
    /// Spatial groups per dimension; 1 means ungrouped.
    pub gs_n: usize,
    /// Temporal group size (bases per group).
    pub gt_size: usize,
    /// Attention heads (attention stages).
    pub heads: usize,
    /// Global/window channel split ratio (grouped attention stages).
    pub split_ratio: f64,
}

/// Full architecture description.
#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub name: String,
    pub input_size: usize,
    pub in_channels: usize,
    pub classes: usize,
    pub t: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub stem_kernel: usize,
    pub stem_stride: usize,
    pub stem_channels: usize,
    pub stages: Vec<StageConfig>,
}

fn imagenet_preset(name: &str, widths: [usize; 5]) -> ModelConfig {
    let [c1a, c1b, c2, c3, c4] = widths;
    let conv_stage = |name: &str, c: usize, feature: usize| StageConfig {
        name: String::from(name),
        kind: StageKind::Conv,
        depth: 1,
        channels: c,
        feature,
        r1: 2,
        r2: 4,
        gs_n: 1,
        gt_size: 2,
        heads: 1,
        split_ratio: 0.0,
    };
    let ssa_stage = |name: &str, kind: StageKind, depth: usize, c: usize, feature: usize,
                     gs_n: usize, heads: usize, split: f64| StageConfig {
        name: String::from(name),
        kind,
        depth,
        channels: c,
        feature,
        r1: 1,
        r2: 4,
        gs_n,
        gt_size: 2,
        heads,
        split_ratio: split,
    };
    ModelConfig {
        name: String::from(name),
        input_size: 224,
        in_channels: 3,
        classes: 1000,
        t: 4,
        alpha: 2.0,
        lambda: 1.0,
        stem_kernel: 7,
        stem_stride: 2,
        stem_channels: c1a,
        stages: vec![
            conv_stage("stage1a", c1a, 112),
            conv_stage("stage1b", c1b, 56),
            ssa_stage("stage2", StageKind::SsaGw, 2, c2, 28, 4, 4, 0.5),
            ssa_stage("stage3", StageKind::SsaGw, 6, c3, 14, 2, 8, 0.5),
            ssa_stage("stage4", StageKind::SsaPlain, 2, c4, 7, 1, 8, 1.0),
        ],
    }
}

impl ModelConfig {
    pub fn small() -> Self {
        imagenet_preset("small", [24, 48, 96, 192, 240])
    }

    pub fn base() -> Self {
        imagenet_preset("base", [32, 64, 128, 256, 320])
    }

    pub fn large() -> Self {
        imagenet_preset("large", [40, 80, 160, 320, 400])
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "small" => Some(Self::small()),
            "base" => Some(Self::base()),
            "large" => Some(Self::large()),
            _ => None,
        }
    }

    /// Feature-map side after the stem convolution.
    pub fn stem_out(&self) -> usize {
        let pad = self.stem_kernel / 2;
        (self.input_size + 2 * pad - self.stem_kernel) / self.stem_stride + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(CoreError::InvalidConfig("model needs at least one stage".into()));
        }
        if self.t == 0 || self.classes == 0 || self.in_channels == 0 {
            return Err(CoreError::InvalidConfig("t, classes and input channels must be >= 1".into()));
        }
        let mut feature = self.stem_out();
        for (i, st) in self.stages.iter().enumerate() {
            if st.depth == 0 || st.channels == 0 {
                return Err(CoreError::InvalidConfig(format!(
                    "{}: depth and channels must be >= 1",
                    st.name
                )));
            }
            if i > 0 {
                if feature % 2 != 0 {
                    return Err(CoreError::InvalidConfig(format!(
                        "{}: feature size {feature} cannot be halved",
                        st.name
                    )));
                }
                feature /= 2;
            }
            if st.feature != feature {
                return Err(CoreError::InvalidConfig(format!(
                    "{}: feature size {} breaks the chain, expected {feature}",
                    st.name, st.feature
                )));
            }
            if st.gt_size == 0 || self.t % st.gt_size != 0 {
                return Err(CoreError::InvalidConfig(format!(
                    "{}: temporal group size {} does not divide T = {}",
                    st.name, st.gt_size, self.t
                )));
            }
            match st.kind {
                StageKind::Conv => {
                    if st.r1 == 0 || st.r2 == 0 {
                        return Err(CoreError::InvalidConfig(format!(
                            "{}: expansion ratios must be >= 1",
                            st.name
                        )));
                    }
                }
                StageKind::SsaGw | StageKind::SsaPlain => {
                    if st.heads == 0 || st.channels % st.heads != 0 {
                        return Err(CoreError::InvalidConfig(format!(
                            "{}: {} heads do not divide {} channels",
                            st.name, st.heads, st.channels
                        )));
                    }
                    if st.gs_n == 0 || st.feature % st.gs_n != 0 {
                        return Err(CoreError::InvalidConfig(format!(
                            "{}: {} groups do not divide feature size {}",
                            st.name, st.gs_n, st.feature
                        )));
                    }
                    let head_dim = st.channels / st.heads;
                    let split = libm::round(st.split_ratio * st.channels as f64) as usize;
                    if split % head_dim != 0 || (st.channels - split) % head_dim != 0 {
                        return Err(CoreError::InvalidConfig(format!(
                            "{}: split ratio {} does not align with head width {head_dim}",
                            st.name, st.split_ratio
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One stage after building: optional boundary downsampler plus its blocks.
#[derive(Clone, Debug)]
pub struct StageBlocks {
    pub downsample: Option<Downsample>,
    pub blocks: Vec<Block>,
}

/// A built network plus its module registry.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub stem: Conv2d,
    pub stem_module: ModuleId,
    pub stages: Vec<StageBlocks>,
    pub header: Linear,
    pub header_module: ModuleId,
    pub metas: Vec<ModuleMeta>,
}

/// Builder-local registry of module metadata.
struct Registry {
    metas: Vec<ModuleMeta>,
}

impl Registry {
    fn add(&mut self, stage: &str, block_index: usize, kind: ModuleKind, bound: u64) -> ModuleId {
        self.metas.push(ModuleMeta {
            stage: String::from(stage),
            block_index,
            kind,
            sop_upper_bound: bound,
        });
        ModuleId(self.metas.len() - 1)
    }
}

impl Model {
    pub fn build(config: ModelConfig) -> Result<Model> {
        config.validate()?;
        let mut reg = Registry { metas: Vec::new() };
        let stem = Conv2d::new(
            ConvKind::Full,
            config.stem_kernel,
            config.stem_stride,
            config.stem_kernel / 2,
            config.in_channels,
            config.stem_channels,
            true,
        )?;
        let stem_module = reg.add("stem", 0, ModuleKind::Stem, 0);

        let t = config.t;
        let mut stages = Vec::with_capacity(config.stages.len());
        let mut in_c = config.stem_channels;
        for (si, st) in config.stages.iter().enumerate() {
            let ls = ExpLevelSet::build(
                TemporalGrouping::contiguous(t, config.alpha, st.gt_size)?,
                config.lambda,
            )?;
            let sym = ls.symmetric_level_set();
            let sn = || SpikeActivation::new(ls.clone());
            let sn_sym = || SpikeActivation::new(sym.clone());
            let c = st.channels;
            let f = st.feature;
            let n_tokens = f * f;

            let downsample = if si == 0 {
                if in_c != c {
                    return Err(CoreError::InvalidConfig(format!(
                        "stem emits {in_c} channels but {} expects {c}",
                        st.name
                    )));
                }
                None
            } else {
                let conv = Conv2d::new(ConvKind::Full, 2, 2, 0, in_c, c, true)?;
                let bound = conv_bound(t, st.gt_size, f, f, 2, in_c, c);
                let module = reg.add(&st.name, 0, ModuleKind::Downsample, bound);
                Some(Downsample { sn: sn(), conv, module })
            };

            let mut blocks = Vec::with_capacity(st.depth);
            for bi in 0..st.depth {
                let ffn_bound = |hidden: usize, conv_ffn: bool| -> u64 {
                    let mut b = conv_bound(t, st.gt_size, f, f, 1, c, hidden)
                        + conv_bound(t, st.gt_size, f, f, 1, hidden, c);
                    if conv_ffn {
                        b += depthwise_bound(t, st.gt_size, f, f, 3, hidden);
                    }
                    b
                };
                let hidden = c * st.r2;
                let conv_ffn = |module: ModuleId| -> Result<ConvSffn> {
                    Ok(ConvSffn {
                        sn1: sn(),
                        pw1: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, c, hidden, true)?,
                        sn_sym: sn_sym(),
                        dw: Conv2d::new(ConvKind::Depthwise, 3, 1, 1, hidden, hidden, false)?,
                        sn2: sn(),
                        pw2: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, hidden, c, true)?,
                        module,
                    })
                };
                let block = match st.kind {
                    StageKind::Conv => {
                        let wide = c * st.r1;
                        let bound = conv_bound(t, st.gt_size, f, f, 3, c, wide)
                            + conv_bound(t, st.gt_size, f, f, 3, wide, c);
                        let sconv_id = reg.add(&st.name, bi, ModuleKind::Sconv, bound);
                        let ffn_id = reg.add(&st.name, bi, ModuleKind::ConvSffn, ffn_bound(hidden, true));
                        Block::Conv(ConvBlock {
                            sn1: sn(),
                            conv1: Conv2d::new(ConvKind::Full, 3, 1, 1, c, wide, false)?,
                            sn2: sn(),
                            conv2: Conv2d::new(ConvKind::Full, 3, 1, 1, wide, c, false)?,
                            module: sconv_id,
                            ffn: Ffn::Conv(conv_ffn(ffn_id)?),
                        })
                    }
                    StageKind::SsaGw | StageKind::SsaPlain => {
                        let grouped = st.kind == StageKind::SsaGw;
                        let gs = st.gs_n * st.gs_n;
                        let mut bound = conv_bound(t, st.gt_size, f, f, 1, c, c)
                            + conv_bound(t, st.gt_size, f, f, 1, c, 2 * c)
                            + 2 * attention_score_bound(t, st.gt_size, n_tokens, c, gs)
                            + conv_bound(t, st.gt_size, f, f, 1, c, c);
                        if grouped {
                            bound += depthwise_bound(t, st.gt_size, f, f, 3, c);
                        }
                        let ssa_id = reg.add(&st.name, bi, ModuleKind::Ssa, bound);
                        let plan = if grouped {
                            GroupingPlan::from_ratio(st.split_ratio, c, st.gs_n)?
                        } else {
                            GroupingPlan::new(c, 1)?
                        };
                        let attn = AttentionLayer {
                            cfg: AttentionConfig::new(st.heads, c)?,
                            plan,
                            sn_in: sn(),
                            sn_q: sn(),
                            sn_score: sn(),
                            sn_v: grouped.then(sn_sym),
                            sn_out: sn(),
                            proj_q: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, c, c, true)?,
                            proj_kv: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, c, 2 * c, true)?,
                            conv_dw: if grouped {
                                Some(Conv2d::new(ConvKind::Depthwise, 3, 1, 1, c, c, false)?)
                            } else {
                                None
                            },
                            proj_out: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, c, c, true)?,
                            module: ssa_id,
                        };
                        let ffn = if grouped {
                            let ffn_id = reg.add(&st.name, bi, ModuleKind::ConvSffn, ffn_bound(hidden, true));
                            Ffn::Conv(conv_ffn(ffn_id)?)
                        } else {
                            let ffn_id = reg.add(&st.name, bi, ModuleKind::Sffn, ffn_bound(hidden, false));
                            Ffn::Plain(Sffn {
                                sn1: sn(),
                                pw1: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, c, hidden, true)?,
                                sn2: sn(),
                                pw2: Conv2d::new(ConvKind::Pointwise, 1, 1, 0, hidden, c, true)?,
                                module: ffn_id,
                            })
                        };
                        Block::Ssa(SsaBlock { attn, ffn })
                    }
                };
                blocks.push(block);
            }
            stages.push(StageBlocks { downsample, blocks });
            in_c = c;
        }

        let header = Linear::new(in_c, config.classes)?;
        let header_module = reg.add("header", 0, ModuleKind::Header, 0);
        Ok(Model {
            config,
            stem,
            stem_module,
            stages,
            header,
            header_module,
            metas: reg.metas,
        })
    }

    /// Fresh profiler matching this model's module registry.
    pub fn profiler(&self) -> Profiler {
        Profiler::new(self.metas.clone())
    }

    /// Run one batch. Input is a single-step image tensor `(1, B, H, W, C)`;
    /// the stem output is replicated as constant current over the coding
    /// period. Returns row-major logits, one row per batch item.
    pub fn forward(&self, image: &DenseTensor, prof: &Profiler, assert_spikes: bool) -> Result<Vec<f64>> {
        let s = image.shape;
        if s.t != 1 || s.h != self.config.input_size || s.w != self.config.input_size
            || s.c != self.config.in_channels
        {
            return Err(CoreError::ShapeMismatch(format!(
                "input shape {s:?} does not match a (1, B, {0}, {0}, {1}) image",
                self.config.input_size, self.config.in_channels
            )));
        }
        if prof.len() != self.metas.len() {
            return Err(CoreError::Contract("profiler does not match this model".into()));
        }
        let stem_out = self.stem.forward_dense(image, prof.module(self.stem_module))?;
        // Direct coding: constant current at every step.
        let t = self.config.t;
        let mut x = DenseTensor::zeros(TensorShape { t, ..stem_out.shape });
        for ti in 0..t {
            let slab = stem_out.data.len();
            x.data[ti * slab..(ti + 1) * slab].copy_from_slice(&stem_out.data);
        }
        for stage in &self.stages {
            if let Some(down) = &stage.downsample {
                x = down.forward(&x, prof, assert_spikes)?;
            }
            for block in &stage.blocks {
                x = block.forward(&x, prof, assert_spikes)?;
            }
        }
        // Global average over time and space, then the classifier.
        let s = x.shape;
        let sites = (s.t * s.h * s.w) as f64;
        let mut pooled = vec![0.0; s.b * s.c];
        for ti in 0..s.t {
            for bi in 0..s.b {
                for yi in 0..s.h {
                    for xi in 0..s.w {
                        let src = s.index(ti, bi, yi, xi, 0);
                        let dst = &mut pooled[bi * s.c..(bi + 1) * s.c];
                        for (p, v) in dst.iter_mut().zip(&x.data[src..src + s.c]) {
                            *p += v;
                        }
                    }
                }
            }
        }
        for p in &mut pooled {
            *p /= sites;
        }
        let logits = self.header.forward(&pooled, s.b, prof.module(self.header_module))?;
        prof.add_samples(s.b as u64);
        Ok(logits)
    }

    /// Walk every parameter tensor in deterministic order.
    pub fn for_each_param(
        &mut self,
        f: &mut dyn FnMut(&str, &mut Vec<f64>, &[usize]) -> Result<()>,
    ) -> Result<()> {
        fn conv(name: &str, c: &mut Conv2d, f: &mut dyn FnMut(&str, &mut Vec<f64>, &[usize]) -> Result<()>) -> Result<()> {
            let dims: Vec<usize> = match c.kind {
                ConvKind::Depthwise => vec![c.kernel, c.kernel, c.in_c],
                _ => vec![c.kernel, c.kernel, c.in_c, c.out_c],
            };
            f(&format!("{name}.weight"), &mut c.weight, &dims)?;
            let out_c = c.out_c;
            if let Some(bias) = &mut c.bias {
                f(&format!("{name}.bias"), bias, &[out_c])?;
            }
            Ok(())
        }
        conv("stem", &mut self.stem, f)?;
        let stage_names: Vec<String> = self.config.stages.iter().map(|s| s.name.clone()).collect();
        for (si, stage) in self.stages.iter_mut().enumerate() {
            let sname = &stage_names[si];
            if let Some(down) = &mut stage.downsample {
                conv(&format!("{sname}.down"), &mut down.conv, f)?;
            }
            for (bi, block) in stage.blocks.iter_mut().enumerate() {
                let p = format!("{sname}.b{bi}");
                match block {
                    Block::Conv(b) => {
                        conv(&format!("{p}.conv1"), &mut b.conv1, f)?;
                        conv(&format!("{p}.conv2"), &mut b.conv2, f)?;
                        ffn_params(&p, &mut b.ffn, f)?;
                    }
                    Block::Ssa(b) => {
                        conv(&format!("{p}.attn.q"), &mut b.attn.proj_q, f)?;
                        conv(&format!("{p}.attn.kv"), &mut b.attn.proj_kv, f)?;
                        if let Some(dw) = &mut b.attn.conv_dw {
                            conv(&format!("{p}.attn.dw"), dw, f)?;
                        }
                        conv(&format!("{p}.attn.out"), &mut b.attn.proj_out, f)?;
                        ffn_params(&p, &mut b.ffn, f)?;
                    }
                }
            }
        }
        fn ffn_params(p: &str, ffn: &mut Ffn, f: &mut dyn FnMut(&str, &mut Vec<f64>, &[usize]) -> Result<()>) -> Result<()> {
            match ffn {
                Ffn::Conv(x) => {
                    conv(&format!("{p}.ffn.pw1"), &mut x.pw1, f)?;
                    conv(&format!("{p}.ffn.dw"), &mut x.dw, f)?;
                    conv(&format!("{p}.ffn.pw2"), &mut x.pw2, f)
                }
                Ffn::Plain(x) => {
                    conv(&format!("{p}.ffn.pw1"), &mut x.pw1, f)?;
                    conv(&format!("{p}.ffn.pw2"), &mut x.pw2, f)
                }
            }
        }
        let (in_c, out_c) = (self.header.in_c, self.header.out_c);
        f("header.weight", &mut self.header.weight, &[in_c, out_c])?;
        f("header.bias", &mut self.header.bias, &[out_c])?;
        Ok(())
    }

    /// Parameter-slot names and shapes in traversal order.
    pub fn weight_slots(&self) -> Vec<(String, Vec<usize>)> {
        let mut clone = self.clone();
        let mut out = Vec::new();
        clone
            .for_each_param(&mut |name, _, dims| {
                out.push((String::from(name), dims.to_vec()));
                Ok(())
            })
            .expect("traversal is infallible");
        out
    }

    /// Per-module and total parameter counts.
    pub fn count_params(&self) -> (Vec<ParamRow>, usize) {
        let mut rows = Vec::new();
        let mut push = |module: String, count: usize| {
            if count > 0 {
                rows.push(ParamRow { module, count });
            }
        };
        push(String::from("stem"), self.stem.param_count());
        for (si, stage) in self.stages.iter().enumerate() {
            let sname = &self.config.stages[si].name;
            if let Some(down) = &stage.downsample {
                push(format!("{sname}.down"), down.param_count());
            }
            for (bi, block) in stage.blocks.iter().enumerate() {
                push(format!("{sname}.b{bi}"), block.param_count());
            }
        }
        push(String::from("header"), self.header.param_count());
        let total = rows.iter().map(|r| r.count).sum();
        (rows, total)
    }

    /// Install weights from a container; every slot must resolve to exactly
    /// one entry of matching shape, and no entry may be left over.
    pub fn load_weights(&mut self, container: &WeightContainer) -> Result<()> {
        let mut used = 0usize;
        self.for_each_param(&mut |name, data, dims| {
            let (edims, values) = container
                .entries
                .get(name)
                .ok_or_else(|| CoreError::WeightMismatch(format!("missing weight entry '{name}'")))?;
            if edims != dims {
                return Err(CoreError::WeightMismatch(format!(
                    "entry '{name}' has shape {edims:?}, model expects {dims:?}"
                )));
            }
            if values.len() != data.len() {
                return Err(CoreError::WeightMismatch(format!(
                    "entry '{name}' holds {} values, model expects {}",
                    values.len(),
                    data.len()
                )));
            }
            for (d, v) in data.iter_mut().zip(values) {
                *d = *v as f64;
            }
            used += 1;
            Ok(())
        })?;
        if used != container.entries.len() {
            let known: Vec<String> = self.weight_slots().into_iter().map(|(n, _)| n).collect();
            let extra: Vec<&str> = container
                .entries
                .keys()
                .filter(|k| !known.contains(k))
                .map(String::as_str)
                .collect();
            return Err(CoreError::WeightMismatch(format!(
                "container holds {} unknown entries: {extra:?}",
                extra.len()
            )));
        }
        Ok(())
    }

    /// Snapshot current weights into a container (f32 storage).
    pub fn export_weights(&self) -> WeightContainer {
        let mut entries = BTreeMap::new();
        let mut clone = self.clone();
        clone
            .for_each_param(&mut |name, data, dims| {
                entries.insert(
                    String::from(name),
                    (dims.to_vec(), data.iter().map(|v| *v as f32).collect()),
                );
                Ok(())
            })
            .expect("traversal is infallible");
        WeightContainer { entries }
    }
}

/// One row of the parameter-count table.
#[derive(Clone, Debug)]
pub struct ParamRow {
    pub module: String,
    pub count: usize,
}

/// Named weight tensors; f32 values with explicit dims. Serialization lives
/// in the companion IO crate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightContainer {
    pub entries: BTreeMap<String, (Vec<usize>, Vec<f32>)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tiny single-attention-stage config used across tests.
    pub fn toy_config(kind: StageKind) -> ModelConfig {
        ModelConfig {
            name: String::from("toy"),
            input_size: 16,
            in_channels: 3,
            classes: 10,
            t: 4,
            alpha: 2.0,
            lambda: 1.0,
            stem_kernel: 3,
            stem_stride: 2,
            stem_channels: 8,
            stages: vec![StageConfig {
                name: String::from("stage1"),
                kind,
                depth: 1,
                channels: 8,
                feature: 8,
                r1: 2,
                r2: 2,
                gs_n: if kind == StageKind::SsaGw { 2 } else { 1 },
                gt_size: 2,
                heads: 2,
                split_ratio: if kind == StageKind::SsaGw { 0.5 } else { 1.0 },
            }],
        }
    }

    #[test]
    fn presets_match_published_structure() {
        let small = ModelConfig::small();
        assert_eq!(small.stages[2].depth, 2);
        assert_eq!(small.stages[2].channels, 96);
        assert_eq!(small.stages[3].depth, 6);
        assert_eq!(small.stages[3].channels, 192);
        assert_eq!(small.stages[4].depth, 2);
        assert_eq!(small.stages[4].channels, 240);
        let base = ModelConfig::base();
        assert_eq!(base.stages[3].channels, 256);
        assert_eq!(base.stages[3].heads, 8);
        assert_eq!(base.stages[3].depth, 6);
        for cfg in [ModelConfig::small(), ModelConfig::base(), ModelConfig::large()] {
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn preset_param_counts_within_tolerance() {
        for (name, published) in [("small", 5.35e6), ("base", 9.36e6), ("large", 14.48e6)] {
            let model = Model::build(ModelConfig::preset(name).unwrap()).unwrap();
            let (_, total) = model.count_params();
            let rel = (total as f64 - published).abs() / published;
            assert!(rel < 0.10, "{name}: {total} vs {published} ({:.1}%)", rel * 100.0);
        }
    }

    #[test]
    fn toy_param_count_is_hand_countable() {
        let mut cfg = toy_config(StageKind::SsaPlain);
        cfg.stages[0].r2 = 1;
        let model = Model::build(cfg).unwrap();
        let (_, total) = model.count_params();
        // stem 3x3x3x8 + 8; attn: q 64+8, kv 128+16, out 64+8;
        // ffn pw1 64+8, pw2 64+8; header 80+10
        assert_eq!(total, 224 + 72 + 144 + 72 + 72 + 72 + 90);
    }

    #[test]
    fn zero_image_zero_weights_yields_header_bias() {
        let mut model = Model::build(toy_config(StageKind::SsaGw)).unwrap();
        for (i, b) in model.header.bias.iter_mut().enumerate() {
            *b = i as f64 * 0.5;
        }
        let prof = model.profiler();
        let image = DenseTensor::zeros(TensorShape::new(1, 2, 16, 16, 3).unwrap());
        let logits = model.forward(&image, &prof, true).unwrap();
        for bi in 0..2 {
            for (i, v) in logits[bi * 10..(bi + 1) * 10].iter().enumerate() {
                assert_eq!(*v, i as f64 * 0.5);
            }
        }
        // MACs only in stem and header
        for (meta, snap) in model.metas.iter().zip(prof.report().rows.iter().map(|r| r.raw)) {
            match meta.kind {
                ModuleKind::Stem | ModuleKind::Header => {}
                _ => assert_eq!(snap.macs, 0, "{:?} has MACs", meta.kind),
            }
        }
    }

    #[test]
    fn weight_round_trip_and_mismatch_errors() {
        let mut model = Model::build(toy_config(StageKind::Conv)).unwrap();
        let mut i = 0u32;
        model
            .for_each_param(&mut |_, data, _| {
                for v in data.iter_mut() {
                    i += 1;
                    *v = (i % 17) as f64 * 0.25 - 2.0;
                }
                Ok(())
            })
            .unwrap();
        let container = model.export_weights();
        let mut fresh = Model::build(toy_config(StageKind::Conv)).unwrap();
        fresh.load_weights(&container).unwrap();
        assert_eq!(fresh.export_weights(), container);

        let mut missing = container.clone();
        let key = missing.entries.keys().next().unwrap().clone();
        missing.entries.remove(&key);
        let err = fresh.load_weights(&missing).unwrap_err();
        assert!(format!("{err}").contains(&key));

        let mut wrong = container.clone();
        wrong.entries.get_mut("header.bias").unwrap().0 = vec![3];
        assert!(matches!(
            fresh.load_weights(&wrong),
            Err(CoreError::WeightMismatch(_))
        ));

        let mut extra = container;
        extra.entries.insert(String::from("bogus"), (vec![1], vec![0.0]));
        assert!(matches!(
            fresh.load_weights(&extra),
            Err(CoreError::WeightMismatch(_))
        ));
    }

    #[test]
    fn forward_is_deterministic() {
        let mut model = Model::build(toy_config(StageKind::SsaGw)).unwrap();
        let mut i = 0u32;
        model
            .for_each_param(&mut |_, data, _| {
                for v in data.iter_mut() {
                    i = i.wrapping_mul(1664525).wrapping_add(1013904223);
                    *v = (i >> 16) as f64 / 65536.0 * 0.2 - 0.1;
                }
                Ok(())
            })
            .unwrap();
        let shape = TensorShape::new(1, 1, 16, 16, 3).unwrap();
        let image = DenseTensor::from_vec(
            shape,
            (0..shape.len()).map(|i| libm::sin(i as f64 * 0.01)).collect(),
        )
        .unwrap();
        let prof = model.profiler();
        let a = model.forward(&image, &prof, true).unwrap();
        let b = model.forward(&image, &prof, true).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.is_finite()));
        assert_eq!(prof.samples(), 2);
    }

    #[test]
    fn invalid_chains_are_rejected() {
        let mut cfg = toy_config(StageKind::Conv);
        cfg.stages[0].feature = 9;
        assert!(matches!(Model::build(cfg), Err(CoreError::InvalidConfig(_))));
        let mut cfg = toy_config(StageKind::SsaGw);
        cfg.stages[0].heads = 3;
        assert!(Model::build(cfg).is_err());
        let mut cfg = toy_config(StageKind::Conv);
        cfg.t = 3;
        assert!(Model::build(cfg).is_err());
    }
}

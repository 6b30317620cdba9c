//! Model configuration files: a line-oriented `key = value` format with
//! `[stage.N]` section headers.
//!
//! Grammar (one directive per line):
//!
//! ```text
//! file        := line*
//! line        := blank | comment | section | assignment
//! comment     := '#' .*
//! section     := '[' 'stage' '.' INT ']'         # 1-based stage index
//! assignment  := key '=' value                    # applies to the current
//!                                                 # section, or the model
//!                                                 # header before any section
//! ```
//!
//! Header keys: `preset`, `name`, `input_size`, `in_channels`, `classes`,
//! `t`, `alpha`, `lambda`, `stem_kernel`, `stem_stride`, `stem_channels`.
//! Stage keys: `kind` (`conv` | `ssa_gw` | `ssa_plain`), `name`, `depth`,
//! `channels`, `feature`, `r1`, `r2`, `gs_n`, `gt_size`, `heads`,
//! `split_ratio`.
//!
//! `preset = small|base|large` injects the published architecture table;
//! explicit assignments always win over preset values, including inside
//! stage sections. Without a preset, every stage section must state at
//! least `kind`, `depth`, `channels` and `feature`.

use std::fs;
use std::path::Path;

use gemst_core::model::{ModelConfig, StageConfig, StageKind};

use crate::error::{Error, Result};

fn cfg_err(line_no: usize, what: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line_no}: {what}"))
}

fn parse_num<T: std::str::FromStr>(line_no: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| cfg_err(line_no, format!("cannot parse {key} = '{value}'")))
}

/// A stage that is being assembled; fields stay optional until the whole
/// file is read so preset values and overrides can merge in any order.
#[derive(Default)]
struct StageDraft {
    base: Option<StageConfig>,
    kind: Option<StageKind>,
    name: Option<String>,
    depth: Option<usize>,
    channels: Option<usize>,
    feature: Option<usize>,
    r1: Option<usize>,
    r2: Option<usize>,
    gs_n: Option<usize>,
    gt_size: Option<usize>,
    heads: Option<usize>,
    split_ratio: Option<f64>,
}

impl StageDraft {
    fn resolve(self, index: usize) -> Result<StageConfig> {
        let kind = self
            .kind
            .or(self.base.as_ref().map(|b| b.kind))
            .ok_or_else(|| Error::Config(format!("stage {index}: missing kind")))?;
        let need = |field: Option<usize>, base: Option<usize>, name: &str| {
            field
                .or(base)
                .ok_or_else(|| Error::Config(format!("stage {index}: missing {name}")))
        };
        let b = self.base.as_ref();
        let default_split = match kind {
            StageKind::Conv => 0.0,
            StageKind::SsaGw => 0.5,
            StageKind::SsaPlain => 1.0,
        };
        Ok(StageConfig {
            name: self
                .name
                .or(b.map(|b| b.name.clone()))
                .unwrap_or_else(|| format!("stage{index}")),
            kind,
            depth: need(self.depth, b.map(|b| b.depth), "depth")?,
            channels: need(self.channels, b.map(|b| b.channels), "channels")?,
            feature: need(self.feature, b.map(|b| b.feature), "feature")?,
            r1: self.r1.or(b.map(|b| b.r1)).unwrap_or(1),
            r2: self.r2.or(b.map(|b| b.r2)).unwrap_or(4),
            gs_n: self.gs_n.or(b.map(|b| b.gs_n)).unwrap_or(1),
            gt_size: self.gt_size.or(b.map(|b| b.gt_size)).unwrap_or(2),
            heads: self.heads.or(b.map(|b| b.heads)).unwrap_or(1),
            split_ratio: self.split_ratio.or(b.map(|b| b.split_ratio)).unwrap_or(default_split),
        })
    }
}

pub fn parse_config(text: &str) -> Result<ModelConfig> {
    let mut preset: Option<ModelConfig> = None;
    // Header overrides, applied after the preset (if any) is known.
    let mut name = None;
    let mut input_size = None;
    let mut in_channels = None;
    let mut classes = None;
    let mut t = None;
    let mut alpha = None;
    let mut lambda = None;
    let mut stem_kernel = None;
    let mut stem_stride = None;
    let mut stem_channels = None;
    let mut stages: Vec<StageDraft> = Vec::new();
    let mut current: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(section) = line.strip_prefix('[') {
            let section = section
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line_no, "unterminated section header"))?;
            let index: usize = section
                .strip_prefix("stage.")
                .and_then(|n| n.parse().ok())
                .filter(|n| *n >= 1)
                .ok_or_else(|| cfg_err(line_no, format!("unknown section [{section}], expected [stage.N]")))?;
            while stages.len() < index {
                stages.push(StageDraft::default());
            }
            current = Some(index - 1);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| cfg_err(line_no, format!("expected 'key = value', got '{line}'")))?;
        match current {
            None => match key {
                "preset" => {
                    preset = Some(ModelConfig::preset(value).ok_or_else(|| {
                        cfg_err(line_no, format!("unknown preset '{value}'"))
                    })?);
                }
                "name" => name = Some(value.to_owned()),
                "input_size" => input_size = Some(parse_num(line_no, key, value)?),
                "in_channels" => in_channels = Some(parse_num(line_no, key, value)?),
                "classes" => classes = Some(parse_num(line_no, key, value)?),
                "t" => t = Some(parse_num(line_no, key, value)?),
                "alpha" => alpha = Some(parse_num(line_no, key, value)?),
                "lambda" => lambda = Some(parse_num(line_no, key, value)?),
                "stem_kernel" => stem_kernel = Some(parse_num(line_no, key, value)?),
                "stem_stride" => stem_stride = Some(parse_num(line_no, key, value)?),
                "stem_channels" => stem_channels = Some(parse_num(line_no, key, value)?),
                _ => return Err(cfg_err(line_no, format!("unknown key '{key}'"))),
            },
            Some(si) => {
                let stage = &mut stages[si];
                match key {
                    "kind" => {
                        stage.kind = Some(match value {
                            "conv" => StageKind::Conv,
                            "ssa_gw" => StageKind::SsaGw,
                            "ssa_plain" => StageKind::SsaPlain,
                            _ => {
                                return Err(cfg_err(
                                    line_no,
                                    format!("unknown kind '{value}' (conv | ssa_gw | ssa_plain)"),
                                ))
                            }
                        });
                    }
                    "name" => stage.name = Some(value.to_owned()),
                    "depth" => stage.depth = Some(parse_num(line_no, key, value)?),
                    "channels" => stage.channels = Some(parse_num(line_no, key, value)?),
                    "feature" => stage.feature = Some(parse_num(line_no, key, value)?),
                    "r1" => stage.r1 = Some(parse_num(line_no, key, value)?),
                    "r2" => stage.r2 = Some(parse_num(line_no, key, value)?),
                    "gs_n" => stage.gs_n = Some(parse_num(line_no, key, value)?),
                    "gt_size" => stage.gt_size = Some(parse_num(line_no, key, value)?),
                    "heads" => stage.heads = Some(parse_num(line_no, key, value)?),
                    "split_ratio" => stage.split_ratio = Some(parse_num(line_no, key, value)?),
                    _ => return Err(cfg_err(line_no, format!("unknown stage key '{key}'"))),
                }
            }
        }
    }

    // Merge: preset supplies every unstated value; explicit sections win.
    let base = preset;
    if let Some(base) = &base {
        while stages.len() < base.stages.len() {
            stages.push(StageDraft::default());
        }
        for (i, draft) in stages.iter_mut().enumerate() {
            draft.base = base.stages.get(i).cloned();
        }
    }
    if stages.is_empty() {
        return Err(Error::Config("no stages defined and no preset given".into()));
    }
    let resolved: Vec<StageConfig> = stages
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.resolve(i + 1))
        .collect::<Result<_>>()?;
    let b = base.as_ref();
    let config = ModelConfig {
        name: name.or(b.map(|b| b.name.clone())).unwrap_or_else(|| "custom".into()),
        input_size: input_size
            .or(b.map(|b| b.input_size))
            .ok_or_else(|| Error::Config("missing input_size".into()))?,
        in_channels: in_channels.or(b.map(|b| b.in_channels)).unwrap_or(3),
        classes: classes.or(b.map(|b| b.classes)).unwrap_or(1000),
        t: t.or(b.map(|b| b.t)).unwrap_or(4),
        alpha: alpha.or(b.map(|b| b.alpha)).unwrap_or(2.0),
        lambda: lambda.or(b.map(|b| b.lambda)).unwrap_or(1.0),
        stem_kernel: stem_kernel
            .or(b.map(|b| b.stem_kernel))
            .ok_or_else(|| Error::Config("missing stem_kernel".into()))?,
        stem_stride: stem_stride
            .or(b.map(|b| b.stem_stride))
            .ok_or_else(|| Error::Config("missing stem_stride".into()))?,
        stem_channels: stem_channels
            .or(b.map(|b| b.stem_channels))
            .ok_or_else(|| Error::Config("missing stem_channels".into()))?,
        stages: resolved,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ModelConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

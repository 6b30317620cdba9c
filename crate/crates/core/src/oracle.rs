//! Brute-force reference implementations, deliberately independent of the
//! engine kernels: linear-scan quantization, cartesian level enumeration,
//! naive multiply attention and convolution, and instrumented operation
//! counting. These back the randomized equivalence suites and stay at desk
//! scale.

use alloc::vec;
use alloc::vec::Vec;

use crate::blocks::{Conv2d, ConvKind};
use crate::error::{CoreError, Result};
use crate::exp_coding::{ExpLevelSet, TemporalGrouping};
use crate::tensor::{DenseTensor, TensorShape};

/// Fixed seeds for every randomized equivalence suite.
pub const SEEDS: [u64; 4] = [1, 7, 42, 1337];

/// Nearest-level index by exhaustive distance scan; ties go to the upper
/// level. Reference semantics for the engine's binary search.
pub fn oracle_quantize_linear(x: f64, ls: &ExpLevelSet) -> usize {
    let levels = ls.levels();
    let mut best = 0;
    for (i, level) in levels.iter().enumerate() {
        let d = (x - level).abs();
        let bd = (x - levels[best]).abs();
        if d < bd || (d == bd && *level > levels[best]) {
            best = i;
        }
    }
    best
}

/// All reachable coded values of a temporal grouping by full cartesian
/// recursion over one-pick-per-group choices (0 allowed), sorted and
/// deduplicated.
pub fn oracle_level_enum(grouping: &TemporalGrouping) -> Vec<f64> {
    fn recurse(grouping: &TemporalGrouping, gi: usize, sum: f64, out: &mut Vec<f64>) {
        if gi == grouping.group_count() {
            out.push(sum);
            return;
        }
        recurse(grouping, gi + 1, sum, out);
        for &e in &grouping.groups()[gi] {
            recurse(grouping, gi + 1, sum + grouping.base_value(e), out);
        }
    }
    let mut out = Vec::new();
    recurse(grouping, 0, 0.0, &mut out);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// Naive per-head attention on temporally averaged tensors (`t = 1`):
/// explicit multiply loops for scores, activation `f`, and the value
/// product.
pub fn oracle_attention_naive(
    q: &DenseTensor,
    k: &DenseTensor,
    v: &DenseTensor,
    heads: usize,
    head_dim: usize,
    scale: f64,
    f: &dyn Fn(f64) -> f64,
) -> Result<DenseTensor> {
    let s = q.shape;
    if k.shape != s || v.shape != s {
        return Err(CoreError::ShapeMismatch("oracle attention inputs disagree".into()));
    }
    if s.t != 1 || heads * head_dim != s.c {
        return Err(CoreError::InvalidConfig("oracle attention head layout".into()));
    }
    let n = s.tokens();
    let c = s.c;
    let mut out = DenseTensor::zeros(s);
    for bi in 0..s.b {
        let base = bi * n * c;
        for head in 0..heads {
            let off = head * head_dim;
            for i in 0..n {
                for j in 0..n {
                    let mut score = 0.0;
                    for d in 0..head_dim {
                        score += q.data[base + i * c + off + d] * k.data[base + j * c + off + d];
                    }
                    let a = f(score * scale);
                    for d in 0..head_dim {
                        out.data[base + i * c + off + d] += a * v.data[base + j * c + off + d];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Direct seven-loop convolution with explicit multiplication, mirroring the
/// engine's geometry conventions (cross-correlation, zero padding).
pub fn oracle_conv_naive(x: &DenseTensor, conv: &Conv2d) -> Result<DenseTensor> {
    let s = x.shape;
    if s.c != conv.in_c {
        return Err(CoreError::ShapeMismatch("oracle conv channel mismatch".into()));
    }
    let (oh, ow) = conv.out_hw(s.h, s.w)?;
    let oshape = TensorShape::new(s.t, s.b, oh, ow, conv.out_c)?;
    let mut out = DenseTensor::zeros(oshape);
    let k = conv.kernel;
    for ti in 0..s.t {
        for bi in 0..s.b {
            for oy in 0..oh {
                for ox in 0..ow {
                    for co in 0..conv.out_c {
                        let mut acc = conv.bias.as_ref().map_or(0.0, |b| b[co]);
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * conv.stride + ky) as isize - conv.padding as isize;
                                let ix = (ox * conv.stride + kx) as isize - conv.padding as isize;
                                if iy < 0 || iy as usize >= s.h || ix < 0 || ix as usize >= s.w {
                                    continue;
                                }
                                match conv.kind {
                                    ConvKind::Depthwise => {
                                        acc += x.get(ti, bi, iy as usize, ix as usize, co)
                                            * conv.weight[(ky * k + kx) * conv.in_c + co];
                                    }
                                    _ => {
                                        for ci in 0..conv.in_c {
                                            acc += x.get(ti, bi, iy as usize, ix as usize, ci)
                                                * conv.weight
                                                    [((ky * k + kx) * conv.in_c + ci) * conv.out_c + co];
                                        }
                                    }
                                }
                            }
                        }
                        out.set(ti, bi, oy, ox, co, acc);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Accumulations a spike-consuming convolution performs, counted by direct
/// execution of the naive kernel: one per nonzero input element per reached
/// output connection.
pub fn oracle_conv_spike_sops(x: &DenseTensor, conv: &Conv2d) -> Result<u64> {
    let s = x.shape;
    if s.c != conv.in_c {
        return Err(CoreError::ShapeMismatch("oracle conv channel mismatch".into()));
    }
    let (oh, ow) = conv.out_hw(s.h, s.w)?;
    let k = conv.kernel;
    let mut count: u64 = 0;
    for ti in 0..s.t {
        for bi in 0..s.b {
            for oy in 0..oh {
                for ox in 0..ow {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * conv.stride + ky) as isize - conv.padding as isize;
                            let ix = (ox * conv.stride + kx) as isize - conv.padding as isize;
                            if iy < 0 || iy as usize >= s.h || ix < 0 || ix as usize >= s.w {
                                continue;
                            }
                            for ci in 0..conv.in_c {
                                if x.get(ti, bi, iy as usize, ix as usize, ci) != 0.0 {
                                    count += match conv.kind {
                                        ConvKind::Depthwise => 1,
                                        _ => conv.out_c as u64,
                                    };
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Accumulations of a spike-times-dense matrix product, counted by direct
/// execution: nonzero left entries times the right matrix row width.
pub fn oracle_matmul_sops(s: &[f64], m: usize, k: usize, n: usize) -> u64 {
    let mut count = 0u64;
    for i in 0..m {
        for l in 0..k {
            if s[i * k + l] != 0.0 {
                count += n as u64;
            }
        }
    }
    count
}

/// Plain float matrix product, reference for the shift-add kernel.
pub fn oracle_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for l in 0..k {
            let av = a[i * k + l];
            for j in 0..n {
                out[i * n + j] += av * b[l * n + j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_coding::ExpLevelSet;

    #[test]
    fn linear_scan_tie_goes_up() {
        let ls = ExpLevelSet::build(TemporalGrouping::contiguous(4, 2.0, 4).unwrap(), 1.0).unwrap();
        // boundary between 1 and 2 is 1.5
        assert_eq!(oracle_quantize_linear(1.5, &ls), 2);
        assert_eq!(oracle_quantize_linear(-3.0, &ls), 0);
        assert_eq!(oracle_quantize_linear(50.0, &ls), 4);
    }

    #[test]
    fn enum_reproduces_known_level_sets() {
        let g = TemporalGrouping::contiguous(4, 2.0, 4).unwrap();
        assert_eq!(oracle_level_enum(&g), alloc::vec![0.0, 1.0, 2.0, 4.0, 8.0]);
        let g = TemporalGrouping::contiguous(4, 2.0, 2).unwrap();
        assert_eq!(
            oracle_level_enum(&g),
            alloc::vec![0.0, 1.0, 2.0, 4.0, 5.0, 6.0, 8.0, 9.0, 10.0]
        );
        let g = TemporalGrouping::contiguous(1, 2.0, 1).unwrap();
        assert_eq!(oracle_level_enum(&g), alloc::vec![0.0, 1.0]);
    }

    #[test]
    fn naive_attention_scalar_case() {
        let shape = TensorShape::new(1, 1, 1, 1, 1).unwrap();
        let q = DenseTensor::from_vec(shape, alloc::vec![2.0]).unwrap();
        let k = DenseTensor::from_vec(shape, alloc::vec![3.0]).unwrap();
        let v = DenseTensor::from_vec(shape, alloc::vec![5.0]).unwrap();
        let out = oracle_attention_naive(&q, &k, &v, 1, 1, 1.0, &|x| x).unwrap();
        assert_eq!(out.data, alloc::vec![30.0]);
    }

    #[test]
    fn naive_conv_identity_and_zero_kernels() {
        let mut conv = Conv2d::new(ConvKind::Pointwise, 1, 1, 0, 2, 2, false).unwrap();
        conv.weight[0] = 1.0;
        conv.weight[3] = 1.0;
        let shape = TensorShape::new(1, 1, 2, 2, 2).unwrap();
        let x = DenseTensor::from_vec(shape, (0..8).map(|i| i as f64).collect()).unwrap();
        assert_eq!(oracle_conv_naive(&x, &conv).unwrap().data, x.data);
        let zero = Conv2d::new(ConvKind::Full, 3, 1, 1, 2, 4, false).unwrap();
        assert!(oracle_conv_naive(&x, &zero).unwrap().data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sop_counts_zero_spikes_give_zero() {
        let conv = Conv2d::new(ConvKind::Full, 3, 1, 1, 2, 4, false).unwrap();
        let x = DenseTensor::zeros(TensorShape::new(2, 1, 4, 4, 2).unwrap());
        assert_eq!(oracle_conv_spike_sops(&x, &conv).unwrap(), 0);
        assert_eq!(oracle_matmul_sops(&[0.0; 6], 2, 3, 4), 0);
    }
}

//! Dense 5-D tensors indexed `(T, B, H, W, C)` plus the strided / windowed
//! spatial grouping transforms used by group-wise attention.
//!
//! Values are immutable after construction; every operation here is a pure
//! function returning a fresh tensor. Time is the outermost axis so each
//! time-step is a contiguous slab.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// Extents of a 5-D activation tensor.
///
/// `c = 0` is legal and denotes an empty channel half produced by a
/// degenerate channel split; all other extents must be at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorShape {
    pub t: usize,
    pub b: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl TensorShape {
    pub fn new(t: usize, b: usize, h: usize, w: usize, c: usize) -> Result<Self> {
        if t == 0 || b == 0 || h == 0 || w == 0 {
            return Err(CoreError::ShapeMismatch(format!(
                "t, b, h, w must be >= 1, got ({t}, {b}, {h}, {w}, {c})"
            )));
        }
        Ok(TensorShape { t, b, h, w, c })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.t * self.b * self.h * self.w * self.c
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of spiking tokens `N = H * W`.
    #[inline]
    pub fn tokens(&self) -> usize {
        self.h * self.w
    }

    /// Row-major flat offset of element `(ti, bi, yi, xi, ci)`.
    #[inline]
    pub fn index(&self, ti: usize, bi: usize, yi: usize, xi: usize, ci: usize) -> usize {
        ((((ti * self.b + bi) * self.h + yi) * self.w + xi) * self.c) + ci
    }
}

/// Dense row-major tensor of real activations.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    pub shape: TensorShape,
    pub data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: TensorShape) -> Self {
        DenseTensor {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn from_vec(shape: TensorShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "data length {} does not match shape volume {}",
                data.len(),
                shape.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    #[inline]
    pub fn get(&self, ti: usize, bi: usize, yi: usize, xi: usize, ci: usize) -> f64 {
        self.data[self.shape.index(ti, bi, yi, xi, ci)]
    }

    #[inline]
    pub fn set(&mut self, ti: usize, bi: usize, yi: usize, xi: usize, ci: usize, v: f64) {
        let i = self.shape.index(ti, bi, yi, xi, ci);
        self.data[i] = v;
    }

    /// Split along the channel axis: `[0, split)` and `[split, c)`.
    pub fn channel_split(&self, split: usize) -> Result<(DenseTensor, DenseTensor)> {
        let s = self.shape;
        if split > s.c {
            return Err(CoreError::OutOfBounds(format!(
                "split channel {split} exceeds channel count {}",
                s.c
            )));
        }
        let lo_shape = TensorShape { c: split, ..s };
        let hi_shape = TensorShape { c: s.c - split, ..s };
        let mut lo = Vec::with_capacity(lo_shape.len());
        let mut hi = Vec::with_capacity(hi_shape.len());
        for site in self.data.chunks_exact(s.c.max(1)) {
            if s.c == 0 {
                break;
            }
            lo.extend_from_slice(&site[..split]);
            hi.extend_from_slice(&site[split..]);
        }
        Ok((
            DenseTensor {
                shape: lo_shape,
                data: lo,
            },
            DenseTensor {
                shape: hi_shape,
                data: hi,
            },
        ))
    }

    /// Inverse of [`channel_split`]: concatenate along the channel axis.
    pub fn channel_concat(&self, other: &DenseTensor) -> Result<DenseTensor> {
        let (a, b) = (self.shape, other.shape);
        if (a.t, a.b, a.h, a.w) != (b.t, b.b, b.h, b.w) {
            return Err(CoreError::ShapeMismatch(format!(
                "channel_concat: leading extents differ ({a:?} vs {b:?})"
            )));
        }
        let shape = TensorShape { c: a.c + b.c, ..a };
        let sites = a.t * a.b * a.h * a.w;
        let mut data = Vec::with_capacity(shape.len());
        for i in 0..sites {
            data.extend_from_slice(&self.data[i * a.c..(i + 1) * a.c]);
            data.extend_from_slice(&other.data[i * b.c..(i + 1) * b.c]);
        }
        Ok(DenseTensor { shape, data })
    }

    /// Strided spatial grouping: group `(i, j)` collects tokens at rows
    /// `i, i+n, ...` and columns `j, j+n, ...`. Emission order is
    /// lexicographic in `(i, j)`.
    pub fn strided_groups(&self, n: usize) -> Result<Vec<DenseTensor>> {
        self.spatial_groups(n, GroupMode::Strided)
    }

    /// Window grouping: window `(i, j)` is the contiguous block of rows
    /// `[i*h/n, (i+1)*h/n)` and columns `[j*w/n, (j+1)*w/n)`.
    pub fn window_groups(&self, n: usize) -> Result<Vec<DenseTensor>> {
        self.spatial_groups(n, GroupMode::Window)
    }

    fn spatial_groups(&self, n: usize, mode: GroupMode) -> Result<Vec<DenseTensor>> {
        let s = self.shape;
        check_divisible(s, n)?;
        let (gh, gw) = (s.h / n, s.w / n);
        let gshape = TensorShape {
            h: gh,
            w: gw,
            ..s
        };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut g = DenseTensor::zeros(gshape);
                for ti in 0..s.t {
                    for bi in 0..s.b {
                        for gy in 0..gh {
                            for gx in 0..gw {
                                let (sy, sx) = mode.source(i, j, gy, gx, gh, gw, n);
                                let src = s.index(ti, bi, sy, sx, 0);
                                let dst = gshape.index(ti, bi, gy, gx, 0);
                                g.data[dst..dst + s.c]
                                    .copy_from_slice(&self.data[src..src + s.c]);
                            }
                        }
                    }
                }
                out.push(g);
            }
        }
        Ok(out)
    }

    /// Arithmetic mean over the time axis; result has `t = 1`.
    pub fn temporal_average(&self) -> DenseTensor {
        let s = self.shape;
        let slab = s.b * s.h * s.w * s.c;
        let mut data = vec![0.0; slab];
        for ti in 0..s.t {
            let src = &self.data[ti * slab..(ti + 1) * slab];
            for (acc, v) in data.iter_mut().zip(src) {
                *acc += v;
            }
        }
        let inv = 1.0 / s.t as f64;
        for v in &mut data {
            *v *= inv;
        }
        DenseTensor {
            shape: TensorShape { t: 1, ..s },
            data,
        }
    }

    /// Element-wise sum; shapes must match.
    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(CoreError::ShapeMismatch(format!(
                "add: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DenseTensor {
            shape: self.shape,
            data,
        })
    }
}

/// Which spatial grouping transform produced a group list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupMode {
    Strided,
    Window,
}

impl GroupMode {
    #[inline]
    fn source(
        &self,
        i: usize,
        j: usize,
        gy: usize,
        gx: usize,
        gh: usize,
        gw: usize,
        n: usize,
    ) -> (usize, usize) {
        match self {
            GroupMode::Strided => (i + gy * n, j + gx * n),
            GroupMode::Window => (i * gh + gy, j * gw + gx),
        }
    }
}

/// Spatial grouping descriptor for group-wise attention: channels below
/// `split_channel` take the strided (approximate-global) route, the rest the
/// window route; both use `n` groups per spatial dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupingPlan {
    pub split_channel: usize,
    pub n: usize,
}

impl GroupingPlan {
    pub fn new(split_channel: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidConfig("grouping stride n must be >= 1".into()));
        }
        Ok(GroupingPlan { split_channel, n })
    }

    /// Split channel from a global/window split ratio, `round(r * c)`.
    pub fn from_ratio(ratio: f64, c: usize, n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(CoreError::InvalidConfig(format!(
                "split ratio {ratio} outside [0, 1]"
            )));
        }
        Self::new(libm::round(ratio * c as f64) as usize, n)
    }

    pub fn validate_for(&self, shape: TensorShape) -> Result<()> {
        if self.split_channel > shape.c {
            return Err(CoreError::OutOfBounds(format!(
                "split channel {} exceeds channel count {}",
                self.split_channel, shape.c
            )));
        }
        check_divisible(shape, self.n)
    }
}

fn check_divisible(shape: TensorShape, n: usize) -> Result<()> {
    if n == 0 || shape.h % n != 0 || shape.w % n != 0 {
        return Err(CoreError::ShapeMismatch(format!(
            "group count {n} does not divide spatial extents {}x{}",
            shape.h, shape.w
        )));
    }
    Ok(())
}

/// Exact inverse of [`DenseTensor::strided_groups`] / `window_groups`:
/// scatter the `n * n` groups (lexicographic `(i, j)` order) back into the
/// original shape.
pub fn regroup(
    groups: &[DenseTensor],
    mode: GroupMode,
    n: usize,
    original: TensorShape,
) -> Result<DenseTensor> {
    check_divisible(original, n)?;
    if groups.len() != n * n {
        return Err(CoreError::ShapeMismatch(format!(
            "expected {} groups, got {}",
            n * n,
            groups.len()
        )));
    }
    let (gh, gw) = (original.h / n, original.w / n);
    let expect = TensorShape {
        h: gh,
        w: gw,
        ..original
    };
    let mut out = DenseTensor::zeros(original);
    for i in 0..n {
        for j in 0..n {
            let g = &groups[i * n + j];
            if g.shape != expect {
                return Err(CoreError::ShapeMismatch(format!(
                    "group ({i}, {j}) has shape {:?}, expected {:?}",
                    g.shape, expect
                )));
            }
            for ti in 0..original.t {
                for bi in 0..original.b {
                    for gy in 0..gh {
                        for gx in 0..gw {
                            let (sy, sx) = mode.source(i, j, gy, gx, gh, gw, n);
                            let dst = original.index(ti, bi, sy, sx, 0);
                            let src = expect.index(ti, bi, gy, gx, 0);
                            out.data[dst..dst + original.c]
                                .copy_from_slice(&g.data[src..src + original.c]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Tensor whose nonzero elements are spike amplitudes `±alpha^(t-1)` at time
/// index `t` (1-based), as emitted by the exponential-coding activation.
#[derive(Clone, Debug)]
pub struct SpikeTensor {
    pub tensor: DenseTensor,
    pub alpha: f64,
}

impl SpikeTensor {
    #[inline]
    pub fn shape(&self) -> TensorShape {
        self.tensor.shape
    }

    /// Check the amplitude invariant on every element.
    pub fn validate(&self) -> Result<()> {
        let s = self.tensor.shape;
        let slab = s.b * s.h * s.w * s.c;
        let mut amp = 1.0;
        for ti in 0..s.t {
            for v in &self.tensor.data[ti * slab..(ti + 1) * slab] {
                if *v != 0.0 && *v != amp && *v != -amp {
                    return Err(CoreError::MalformedTrain(format!(
                        "element {v} at time index {} is not in {{0, +-{amp}}}",
                        ti + 1
                    )));
                }
            }
            amp *= self.alpha;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_tensor(shape: TensorShape) -> DenseTensor {
        let data = (0..shape.len()).map(|i| i as f64).collect();
        DenseTensor::from_vec(shape, data).unwrap()
    }

    #[test]
    fn channel_split_partitions_and_concat_restores() {
        let x = seq_tensor(TensorShape::new(1, 1, 2, 2, 4).unwrap());
        let (lo, hi) = x.channel_split(2).unwrap();
        assert_eq!(lo.shape.c, 2);
        assert_eq!(hi.shape.c, 2);
        assert_eq!(lo.get(0, 0, 0, 0, 1), 1.0);
        assert_eq!(hi.get(0, 0, 0, 0, 0), 2.0);
        assert_eq!(lo.channel_concat(&hi).unwrap(), x);
    }

    #[test]
    fn channel_split_zero_is_degenerate() {
        let x = seq_tensor(TensorShape::new(1, 1, 2, 2, 3).unwrap());
        let (lo, hi) = x.channel_split(0).unwrap();
        assert_eq!(lo.shape.c, 0);
        assert!(lo.data.is_empty());
        assert_eq!(hi, x);
    }

    #[test]
    fn channel_split_out_of_range() {
        let x = seq_tensor(TensorShape::new(1, 1, 1, 1, 2).unwrap());
        assert!(matches!(x.channel_split(3), Err(CoreError::OutOfBounds(_))));
    }

    #[test]
    fn strided_group_00_takes_every_nth_token() {
        let x = seq_tensor(TensorShape::new(1, 1, 4, 4, 1).unwrap());
        let groups = x.strided_groups(2).unwrap();
        assert_eq!(groups.len(), 4);
        let g00 = &groups[0];
        // tokens (0,0), (0,2), (2,0), (2,2)
        assert_eq!(g00.data, vec![0.0, 2.0, 8.0, 10.0]);
    }

    #[test]
    fn window_group_00_is_contiguous_block() {
        let x = seq_tensor(TensorShape::new(1, 1, 4, 4, 1).unwrap());
        let groups = x.window_groups(2).unwrap();
        let g00 = &groups[0];
        // rows {0,1} x cols {0,1}
        assert_eq!(g00.data, vec![0.0, 1.0, 4.0, 5.0]);
    }

    #[test]
    fn n_equals_one_is_identity_group() {
        let x = seq_tensor(TensorShape::new(2, 1, 2, 2, 3).unwrap());
        assert_eq!(x.strided_groups(1).unwrap()[0], x);
        assert_eq!(x.window_groups(1).unwrap()[0], x);
    }

    #[test]
    fn stage2_shape_grouping() {
        let x = DenseTensor::zeros(TensorShape::new(1, 1, 28, 28, 2).unwrap());
        let groups = x.strided_groups(4).unwrap();
        assert_eq!(groups.len(), 16);
        assert_eq!(groups[0].shape.h, 7);
        assert_eq!(groups[0].shape.w, 7);
        let x = DenseTensor::zeros(TensorShape::new(1, 1, 14, 14, 2).unwrap());
        let windows = x.window_groups(2).unwrap();
        assert_eq!(windows.len(), 4);
        assert_eq!(windows[0].shape.h, 7);
    }

    #[test]
    fn non_divisible_grouping_rejected() {
        let x = seq_tensor(TensorShape::new(1, 1, 3, 4, 1).unwrap());
        assert!(x.strided_groups(2).is_err());
        assert!(x.window_groups(2).is_err());
    }

    #[test]
    fn regroup_inverts_both_modes() {
        let x = seq_tensor(TensorShape::new(2, 2, 4, 4, 3).unwrap());
        for (mode, groups) in [
            (GroupMode::Strided, x.strided_groups(2).unwrap()),
            (GroupMode::Window, x.window_groups(2).unwrap()),
        ] {
            let back = regroup(&groups, mode, 2, x.shape).unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn regroup_rejects_mismatched_groups() {
        let x = seq_tensor(TensorShape::new(1, 1, 4, 4, 1).unwrap());
        let mut groups = x.strided_groups(2).unwrap();
        groups[1] = DenseTensor::zeros(TensorShape::new(1, 1, 4, 4, 1).unwrap());
        assert!(regroup(&groups, GroupMode::Strided, 2, x.shape).is_err());
    }

    #[test]
    fn temporal_average_means_time_axis() {
        let shape = TensorShape::new(2, 1, 1, 1, 1).unwrap();
        let x = DenseTensor::from_vec(shape, vec![1.0, 3.0]).unwrap();
        let avg = x.temporal_average();
        assert_eq!(avg.shape.t, 1);
        assert_eq!(avg.data, vec![2.0]);

        let y = seq_tensor(TensorShape::new(1, 2, 2, 2, 1).unwrap());
        assert_eq!(y.temporal_average(), y);
    }

    #[test]
    fn spike_tensor_validation() {
        let shape = TensorShape::new(2, 1, 1, 1, 2).unwrap();
        let ok = SpikeTensor {
            tensor: DenseTensor::from_vec(shape, vec![1.0, 0.0, -2.0, 2.0]).unwrap(),
            alpha: 2.0,
        };
        ok.validate().unwrap();
        let bad = SpikeTensor {
            tensor: DenseTensor::from_vec(shape, vec![1.0, 0.0, 3.0, 0.0]).unwrap(),
            alpha: 2.0,
        };
        assert!(bad.validate().is_err());
    }
}

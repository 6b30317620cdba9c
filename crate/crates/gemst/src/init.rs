//! Seeded random weight initialization. No trained checkpoints exist for
//! this architecture, so generated weights only support smoke, profiling
//! and determinism runs.

use gemst_core::model::Model;
use gemst_core::tensor::{DenseTensor, TensorShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Kaiming-uniform fill: weights in `±sqrt(6 / fan_in)`, biases zero.
/// Values are rounded through f32 so an initialized model is bit-identical
/// to one that round-trips through a weight file. Parameter traversal order
/// is fixed, so one seed always yields the same weights.
pub fn kaiming_init(model: &mut Model, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.for_each_param(&mut |name, data, dims| {
        if name.ends_with(".bias") || name == "header.bias" {
            data.fill(0.0);
            return Ok(());
        }
        // Row-major kernels put the output channel last; everything before
        // it feeds one output.
        let fan_in: usize = match dims.len() {
            0 | 1 => 1,
            2 => dims[0],
            _ => dims[..dims.len() - 1].iter().product(),
        };
        let bound = (6.0 / fan_in as f64).sqrt();
        for v in data.iter_mut() {
            *v = rng.gen_range(-bound..bound) as f32 as f64;
        }
        Ok(())
    })?;
    Ok(())
}

/// Deterministic synthetic input batch in `[0, 1)`, shaped like an image
/// batch `(1, B, side, side, channels)`.
pub fn synthetic_batch(seed: u64, batch: usize, side: usize, channels: usize) -> Result<DenseTensor> {
    let shape = TensorShape::new(1, batch, side, side, channels)
        .map_err(crate::error::Error::from)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..shape.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    DenseTensor::from_vec(shape, data).map_err(Into::into)
}

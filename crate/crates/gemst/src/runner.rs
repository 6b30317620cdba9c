//! Thread-parallel batch execution. Batch items are independent forward
//! passes; profiler counters are integer atomics with order-independent
//! sums, so output bytes do not depend on the thread count.

use gemst_core::model::Model;
use gemst_core::profiler::Profiler;
use gemst_core::tensor::{DenseTensor, TensorShape};

use crate::error::{Error, Result};

/// Environment variable supplying the default thread count.
pub const THREADS_ENV: &str = "GEMST_THREADS";

/// Thread count: explicit flag, else the environment variable, else 1.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|n| *n >= 1)
        .unwrap_or(1)
}

/// Run one image batch `(1, B, H, W, C)` across `threads` workers and
/// return row-major logits, one row of `classes` per batch item in input
/// order.
pub fn run_batch(
    model: &Model,
    prof: &Profiler,
    images: &DenseTensor,
    threads: usize,
    assert_spikes: bool,
) -> Result<Vec<f64>> {
    let s = images.shape;
    if s.t != 1 {
        return Err(Error::Input("image batch must be single-step (t = 1)".into()));
    }
    let b = s.b;
    let classes = model.config.classes;
    let item_shape = TensorShape { b: 1, ..s };
    let slab = item_shape.len();
    let mut logits = vec![0.0f64; b * classes];
    let threads = threads.clamp(1, b.max(1));

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (chunk_index, out_chunk) in logits.chunks_mut(classes * b.div_ceil(threads)).enumerate()
        {
            let start = chunk_index * b.div_ceil(threads);
            handles.push(scope.spawn(move || -> Result<()> {
                for (offset, row) in out_chunk.chunks_mut(classes).enumerate() {
                    let bi = start + offset;
                    let item = DenseTensor::from_vec(
                        item_shape,
                        images.data[bi * slab..(bi + 1) * slab].to_vec(),
                    )?;
                    let out = model.forward(&item, prof, assert_spikes)?;
                    row.copy_from_slice(&out);
                }
                Ok(())
            }));
        }
        for h in handles {
            h.join().expect("worker thread panicked")?;
        }
        Ok(())
    })?;
    Ok(logits)
}

/// Logits as CSV: one row per batch item.
pub fn logits_csv(logits: &[f64], classes: usize) -> String {
    let mut out = String::new();
    for row in logits.chunks(classes) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Indices of the `k` largest logits of one row, descending; ties keep the
/// lower index first.
pub fn top_k(row: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut indexed: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    indexed.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    indexed.truncate(k);
    indexed
}

//! Cosine distance, normalization and frame averaging.

use crate::error::{Error, Result};
use crate::types::LinearMap;

/// Vectors shorter than this are rejected instead of normalized.
pub const MIN_NORM: f64 = 1e-30;

pub const DEFAULT_MAX_FRAMES: usize = 100;

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("cannot normalize a non-finite vector"));
    }
    let n = norm(v);
    if n < MIN_NORM {
        return Err(Error::degenerate(format!(
            "vector norm {n:e} is below {MIN_NORM:e}"
        )));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// `1 − cos(u, v)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::protocol(format!(
            "cannot compare vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu < MIN_NORM || nv < MIN_NORM {
        return Err(Error::degenerate(format!(
            "cosine distance with a zero-norm vector (norms {nu:e}, {nv:e})"
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// Cosine distance between `Mᵀx` and `y`.
pub fn mapped_distance(x: &[f64], y: &[f64], map: &LinearMap) -> Result<f64> {
    if y.len() != map.target_dim() {
        return Err(Error::protocol(format!(
            "target vector has length {}, map produces {}",
            y.len(),
            map.target_dim()
        )));
    }
    let mapped = map.apply(x)?;
    if norm(&mapped) < MIN_NORM {
        return Err(Error::degenerate(
            "mapped vector lies in the null space of the map",
        ));
    }
    cosine_distance(&mapped, y)
}

/// Mean of the first `max_frames` frames, each normalized first; the mean is renormalized.
pub fn average_embeddings<V: AsRef<[f64]>>(frames: &[V], max_frames: usize) -> Result<Vec<f64>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::protocol("cannot average an empty frame list"))?;
    if max_frames == 0 {
        return Err(Error::protocol("max_frames must be positive"));
    }
    let dim = first.as_ref().len();
    let mut sum = vec![0.0; dim];
    for (i, frame) in frames.iter().take(max_frames).enumerate() {
        let frame = frame.as_ref();
        if frame.len() != dim {
            return Err(Error::protocol(format!(
                "frame {i} has length {}, expected {dim}",
                frame.len()
            )));
        }
        let unit = l2_normalize(frame).map_err(|e| Error::degenerate(format!("frame {i}: {e}")))?;
        for (s, x) in sum.iter_mut().zip(unit) {
            *s += x;
        }
    }
    l2_normalize(&sum)
}

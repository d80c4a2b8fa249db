//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use embedmap::synthetic::{self, ProtocolSpec, WorldSpec};
use embedmap::{EmbeddingSet, PairProtocol};
use nalgebra::DMatrix;

/// Ridge solution by Gaussian elimination with partial pivoting on
/// `(SᵀS + λI) M = SᵀT`, written without any library solver.
pub fn ridge_oracle(s: &DMatrix<f64>, t: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let (m, d_s, d_t) = (s.nrows(), s.ncols(), t.ncols());
    let mut a = vec![vec![0.0; d_s + d_t]; d_s];
    for i in 0..d_s {
        for j in 0..d_s {
            a[i][j] = (0..m).map(|r| s[(r, i)] * s[(r, j)]).sum::<f64>();
        }
        a[i][i] += lambda;
        for j in 0..d_t {
            a[i][d_s + j] = (0..m).map(|r| s[(r, i)] * t[(r, j)]).sum::<f64>();
        }
    }
    for col in 0..d_s {
        let pivot = (col..d_s)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (row, r) in a.iter_mut().enumerate() {
            if row != col {
                let f = r[col] / pivot_row[col];
                for (x, p) in r.iter_mut().zip(&pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    DMatrix::from_fn(d_s, d_t, |i, j| a[i][d_s + j] / a[i][i])
}

pub struct World {
    pub systems: Vec<EmbeddingSet>,
    pub proto: PairProtocol,
}

pub fn world(spec: &WorldSpec, proto: &ProtocolSpec) -> World {
    let w = synthetic::generate_world(spec).unwrap();
    let systems = (0..spec.systems.len())
        .map(|s| synthetic::emit_embeddings(&w, s).unwrap())
        .collect();
    World {
        systems,
        proto: synthetic::generate_protocol(&w, proto).unwrap(),
    }
}

/// 3000 identities x 4 images, latent 32, `n` systems of dim 64, jitter 0.05, seed 42.
pub fn default_world(n: usize) -> World {
    world(
        &WorldSpec::default().with_systems(n, 64),
        &ProtocolSpec::default(),
    )
}

/// A quicker world for property checks: 400 identities, 10 folds of 40 + 40 pairs.
pub fn small_world(n: usize, latent_sigma: f64, seed: u64) -> World {
    let spec = WorldSpec {
        n_identities: 400,
        latent_dim: 8,
        images_per_identity: 3,
        latent_sigma,
        systems: vec![embedmap::synthetic::SystemSpec::new(16); n],
        seed,
    };
    let proto = ProtocolSpec {
        n_folds: 10,
        matched_per_fold: 40,
        mismatched_per_fold: 40,
        seed,
    };
    world(&spec, &proto)
}

pub fn scaled(set: &EmbeddingSet, c: f64) -> EmbeddingSet {
    let mut out = EmbeddingSet::new(set.dim(), set.system_tag()).unwrap();
    for (id, v) in set.iter() {
        let v: Vec<f64> = v.iter().map(|x| x * c).collect();
        out.insert(id, &v).unwrap();
    }
    out
}

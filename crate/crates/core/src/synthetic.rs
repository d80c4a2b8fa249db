//! Synthetic ground truth: several embedding systems that are exact linear
//! images of one shared latent identity space, plus noise.
//!
//! For identity `z` and image `j` a system with transform `A` emits
//! `normalize(Aᵀ normalize(z + η_j))`, where the latent jitter `η_j` is shared
//! by every system (the same "photo" perturbs all systems coherently).
//! Optional output-space noise adds system-specific error on top.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::l2_normalize;
use crate::seed::rng_for;
use crate::types::{
    EmbeddingSet, Fold, Label, Pair, PairProtocol, SyntheticSystem, SyntheticWorld,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub out_dim: usize,
    pub output_sigma: f64,
}

impl SystemSpec {
    pub fn new(out_dim: usize) -> Self {
        Self {
            out_dim,
            output_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub n_identities: usize,
    pub latent_dim: usize,
    pub images_per_identity: usize,
    pub latent_sigma: f64,
    pub systems: Vec<SystemSpec>,
    pub seed: u64,
}

impl Default for WorldSpec {
    /// 3000 identities x 4 images, latent 32, two 64-dim systems, jitter 0.05, seed 42.
    fn default() -> Self {
        Self {
            n_identities: 3000,
            latent_dim: 32,
            images_per_identity: 4,
            latent_sigma: 0.05,
            systems: vec![SystemSpec::new(64); 2],
            seed: 42,
        }
    }
}

impl WorldSpec {
    pub fn with_systems(mut self, n: usize, out_dim: usize) -> Self {
        self.systems = vec![SystemSpec::new(out_dim); n];
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolSpec {
    pub n_folds: usize,
    pub matched_per_fold: usize,
    pub mismatched_per_fold: usize,
    pub seed: u64,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        Self {
            n_folds: 10,
            matched_per_fold: 300,
            mismatched_per_fold: 300,
            seed: 42,
        }
    }
}

/// `id00042/0003`: identity 42, image 3 (images are 1-based, LFW style).
pub fn entity_id(identity: usize, image: usize) -> String {
    format!("id{identity:05}/{:04}", image + 1)
}

fn gaussian_vector(rng: &mut impl Rng, len: usize, sigma: f64) -> Vec<f64> {
    (0..len)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn generate_world(spec: &WorldSpec) -> Result<SyntheticWorld> {
    if spec.n_identities == 0 || spec.latent_dim == 0 || spec.images_per_identity == 0 {
        return Err(Error::protocol(
            "identity count, latent dimension and images per identity must be positive",
        ));
    }
    if spec.systems.is_empty() {
        return Err(Error::protocol("a world needs at least one system"));
    }
    if !(spec.latent_sigma >= 0.0 && spec.latent_sigma.is_finite()) {
        return Err(Error::protocol(
            "latent sigma must be finite and nonnegative",
        ));
    }
    for (s, sys) in spec.systems.iter().enumerate() {
        if sys.out_dim < spec.latent_dim {
            return Err(Error::protocol(format!(
                "system {s}: output dimension {} is below latent dimension {}",
                sys.out_dim, spec.latent_dim
            )));
        }
        if !(sys.output_sigma >= 0.0 && sys.output_sigma.is_finite()) {
            return Err(Error::protocol(format!(
                "system {s}: output sigma must be finite and nonnegative"
            )));
        }
    }

    let identities = (0..spec.n_identities)
        .map(|i| {
            let mut rng = rng_for(spec.seed, "identity", &[i as u64]);
            l2_normalize(&gaussian_vector(&mut rng, spec.latent_dim, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = 1.0 / (spec.latent_dim as f64).sqrt();
    let systems = spec
        .systems
        .iter()
        .enumerate()
        .map(|(s, sys)| {
            let mut rng = rng_for(spec.seed, "transform", &[s as u64]);
            let values = gaussian_vector(&mut rng, spec.latent_dim * sys.out_dim, scale);
            SyntheticSystem {
                transform: DMatrix::from_row_slice(spec.latent_dim, sys.out_dim, &values),
                output_sigma: sys.output_sigma,
                out_dim: sys.out_dim,
            }
        })
        .collect();

    Ok(SyntheticWorld {
        n_identities: spec.n_identities,
        latent_dim: spec.latent_dim,
        images_per_identity: spec.images_per_identity,
        latent_sigma: spec.latent_sigma,
        identities,
        systems,
        seed: spec.seed,
    })
}

/// Jittered, renormalized latent for one image; identical for every system.
fn image_latent(world: &SyntheticWorld, identity: usize, image: usize) -> Result<Vec<f64>> {
    let z = &world.identities[identity];
    if world.latent_sigma == 0.0 {
        return Ok(z.clone());
    }
    let mut rng = rng_for(world.seed, "jitter", &[identity as u64, image as u64]);
    let eta = gaussian_vector(&mut rng, world.latent_dim, world.latent_sigma);
    let jittered: Vec<f64> = z.iter().zip(eta).map(|(a, b)| a + b).collect();
    l2_normalize(&jittered)
}

pub fn emit_embeddings(world: &SyntheticWorld, system_index: usize) -> Result<EmbeddingSet> {
    let system = world.systems.get(system_index).ok_or_else(|| {
        Error::protocol(format!(
            "system index {system_index} out of range ({} systems)",
            world.systems.len()
        ))
    })?;
    let mut set = EmbeddingSet::new(system.out_dim, format!("system-{system_index}"))?;
    let a = &system.transform;
    for identity in 0..world.n_identities {
        for image in 0..world.images_per_identity {
            let latent = image_latent(world, identity, image)?;
            let projected: Vec<f64> = (0..system.out_dim)
                .map(|c| a.column(c).iter().zip(&latent).map(|(w, l)| w * l).sum())
                .collect();
            let mut v = l2_normalize(&projected)?;
            if system.output_sigma > 0.0 {
                let mut rng = rng_for(
                    world.seed,
                    "output-noise",
                    &[system_index as u64, identity as u64, image as u64],
                );
                let noise = gaussian_vector(&mut rng, system.out_dim, system.output_sigma);
                let noisy: Vec<f64> = v.iter().zip(noise).map(|(a, b)| a + b).collect();
                v = l2_normalize(&noisy)?;
            }
            set.insert(entity_id(identity, image), &v)?;
        }
    }
    Ok(set)
}

/// Subject-disjoint folds: each identity contributes pairs to exactly one fold.
/// Within a fold the matched pairs come first, then the mismatched ones.
pub fn generate_protocol(world: &SyntheticWorld, spec: &ProtocolSpec) -> Result<PairProtocol> {
    let folds = spec.n_folds;
    if folds < 2 {
        return Err(Error::protocol(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let per_fold = world.n_identities / folds;
    let k = world.images_per_identity;
    if per_fold < 2 {
        return Err(Error::protocol(format!(
            "{folds} folds need at least {} identities, world has {}",
            2 * folds,
            world.n_identities
        )));
    }
    let matched_capacity = per_fold * k * (k - 1) / 2;
    if spec.matched_per_fold > matched_capacity {
        return Err(Error::protocol(format!(
            "{} matched pairs per fold need more than the {matched_capacity} available from \
             {per_fold} identities x {k} images; need at least {} identities",
            spec.matched_per_fold,
            required_identities(spec.matched_per_fold, k * (k.max(1) - 1) / 2, folds)
        )));
    }
    let mismatched_capacity = per_fold * (per_fold - 1) / 2 * k * k;
    if spec.mismatched_per_fold > mismatched_capacity {
        return Err(Error::protocol(format!(
            "{} mismatched pairs per fold exceed the {mismatched_capacity} available from \
             {per_fold} identities x {k} images",
            spec.mismatched_per_fold
        )));
    }

    let mut order: Vec<usize> = (0..world.n_identities).collect();
    order.shuffle(&mut rng_for(spec.seed, "fold-identities", &[]));

    let folds = order
        .chunks_exact(per_fold)
        .take(folds)
        .enumerate()
        .map(|(f, members)| {
            let mut pairs = matched_pairs(members, k, spec.matched_per_fold, spec.seed, f);
            pairs.extend(mismatched_pairs(
                members,
                k,
                spec.mismatched_per_fold,
                spec.seed,
                f,
            ));
            Fold::new(pairs)
        })
        .collect();
    PairProtocol::new(folds)
}

fn required_identities(matched: usize, per_identity: usize, folds: usize) -> usize {
    if per_identity == 0 {
        return usize::MAX;
    }
    matched.div_ceil(per_identity).max(2) * folds
}

/// Round-robin over the fold's identities, one unused image pair per visit.
fn matched_pairs(members: &[usize], k: usize, count: usize, seed: u64, fold: usize) -> Vec<Pair> {
    let mut rng = rng_for(seed, "matched", &[fold as u64]);
    let mut people = members.to_vec();
    people.shuffle(&mut rng);
    let mut options: Vec<Vec<(usize, usize)>> = people
        .iter()
        .map(|_| {
            let mut all: Vec<(usize, usize)> = (0..k)
                .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
                .collect();
            all.shuffle(&mut rng);
            all
        })
        .collect();
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        for (person, opts) in people.iter().zip(options.iter_mut()) {
            if pairs.len() == count {
                break;
            }
            if let Some((a, b)) = opts.pop() {
                pairs.push(Pair::new(
                    entity_id(*person, a),
                    entity_id(*person, b),
                    Label::Same,
                ));
            }
        }
    }
    pairs
}

fn mismatched_pairs(
    members: &[usize],
    k: usize,
    count: usize,
    seed: u64,
    fold: usize,
) -> Vec<Pair> {
    let mut rng = rng_for(seed, "mismatched", &[fold as u64]);
    let n = members.len();
    let capacity = n * (n - 1) / 2 * k * k;
    let make = |p: usize, a: usize, q: usize, b: usize| {
        Pair::new(
            entity_id(members[p], a),
            entity_id(members[q], b),
            Label::Different,
        )
    };

    if capacity <= 4 * count {
        // dense request: enumerate every cross-identity image pair and sample
        let mut all = Vec::with_capacity(capacity);
        for p in 0..n {
            for q in p + 1..n {
                for a in 0..k {
                    for b in 0..k {
                        all.push((p, a, q, b));
                    }
                }
            }
        }
        return index::sample(&mut rng, all.len(), count)
            .into_iter()
            .map(|i| {
                let (p, a, q, b) = all[i];
                make(p, a, q, b)
            })
            .collect();
    }

    let mut seen = HashSet::with_capacity(count);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let p = rng.random_range(0..n);
        let q = rng.random_range(0..n);
        if p == q {
            continue;
        }
        let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
        let key = if p < q { (p, a, q, b) } else { (q, b, p, a) };
        if seen.insert(key) {
            pairs.push(make(p, a, q, b));
        }
    }
    pairs
}

//! Candidate pools for the four search methods, mini-batch drawing and
//! epsilon-greedy surrogate-guided pool re-initialisation.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ParameterRanges, ParameterVector};
use crate::rng::derive_seed;
use crate::sobol::{scale_point, SobolGenerator};
use crate::surrogate::{Classifier, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Random,
    Sobol,
    SurrogateRandom,
    SurrogateSobol,
}

impl SamplerKind {
    pub fn is_surrogate_assisted(self) -> bool {
        matches!(self, SamplerKind::SurrogateRandom | SamplerKind::SurrogateSobol)
    }

    pub fn uses_sobol(self) -> bool {
        matches!(self, SamplerKind::Sobol | SamplerKind::SurrogateSobol)
    }

    pub fn label(self) -> &'static str {
        match self {
            SamplerKind::Random | SamplerKind::SurrogateRandom => "Random",
            SamplerKind::Sobol | SamplerKind::SurrogateSobol => "Sobol",
        }
    }
}

/// The searched sub-space: free coordinates vary within their ranges, the
/// rest stay at the base vector's values.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    ranges: ParameterRanges,
    free: Vec<usize>,
    base: Vec<f64>,
}

impl SearchSpace {
    /// `free` holds 0-based indices.
    pub fn new(ranges: ParameterRanges, free: Vec<usize>, base: Vec<f64>) -> Result<Self> {
        if base.len() != ranges.len() {
            return Err(Error::WrongArity {
                expected: ranges.len(),
                got: base.len(),
            });
        }
        if free.is_empty() || free.windows(2).any(|w| w[0] >= w[1]) || free.iter().any(|&i| i >= ranges.len()) {
            return Err(Error::ConfigInvalid(format!(
                "free indices must be strictly increasing and below {}: {free:?}",
                ranges.len()
            )));
        }
        for (i, &v) in base.iter().enumerate() {
            let (lo, hi) = ranges.get(i);
            if !free.contains(&i) && !(v > lo && v < hi) {
                return Err(Error::OutOfRange(i + 1));
            }
        }
        Ok(Self { ranges, free, base })
    }

    /// Every coordinate free.
    pub fn full(ranges: ParameterRanges) -> Self {
        let base = ranges.as_slice().iter().map(|(l, h)| 0.5 * (l + h)).collect();
        Self {
            free: (0..ranges.len()).collect(),
            ranges,
            base,
        }
    }

    pub fn ranges(&self) -> &ParameterRanges {
        &self.ranges
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn dimension(&self) -> usize {
        self.free.len()
    }

    pub fn free_ranges(&self) -> Vec<(f64, f64)> {
        self.free.iter().map(|&i| self.ranges.get(i)).collect()
    }

    /// Map a point of the unit cube over the free coordinates to a full vector.
    pub fn embed_unit(&self, unit: &[f64]) -> Result<ParameterVector> {
        let scaled = scale_point(unit, &self.free_ranges())?;
        let mut v = self.base.clone();
        for (&i, x) in self.free.iter().zip(scaled) {
            v[i] = x;
        }
        Ok(ParameterVector(v))
    }
}

/// Unevaluated candidate vectors, duplicate-free at full precision.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePool {
    vectors: Vec<ParameterVector>,
    origin: SamplerKind,
}

impl CandidatePool {
    pub fn new(origin: SamplerKind) -> Self {
        Self {
            vectors: Vec::new(),
            origin,
        }
    }

    /// Build a pool from vectors, dropping duplicates after their first occurrence.
    pub fn from_vectors(vectors: Vec<ParameterVector>, origin: SamplerKind) -> Self {
        let mut seen = HashSet::with_capacity(vectors.len());
        let vectors = vectors.into_iter().filter(|v| seen.insert(v.bit_key())).collect();
        Self { vectors, origin }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[ParameterVector] {
        &self.vectors
    }

    pub fn origin(&self) -> SamplerKind {
        self.origin
    }

    /// Place `v` first, removing any existing copy.
    pub fn plant(&mut self, v: ParameterVector) {
        let key = v.bit_key();
        self.vectors.retain(|x| x.bit_key() != key);
        self.vectors.insert(0, v);
    }

    /// Drop every vector whose bit key is in `seen`.
    pub fn exclude(&mut self, seen: &HashSet<Vec<u64>>) {
        self.vectors.retain(|v| !seen.contains(&v.bit_key()));
    }
}

/// Where fresh raw candidates come from.
#[derive(Clone, Debug)]
pub enum PoolSource {
    Random,
    Sobol(SobolGenerator),
}

impl PoolSource {
    pub fn for_kind(kind: SamplerKind, dimension: usize) -> Result<Self> {
        Ok(if kind.uses_sobol() {
            PoolSource::Sobol(SobolGenerator::new(dimension)?)
        } else {
            PoolSource::Random
        })
    }

    fn generate(&mut self, n: usize, space: &SearchSpace, seed: u64, origin: SamplerKind) -> Result<CandidatePool> {
        match self {
            PoolSource::Random => generate_pool_random(n, space, seed, origin),
            PoolSource::Sobol(gen) => generate_pool_sobol(n, space, gen, origin),
        }
    }
}

/// `n` vectors with each free coordinate uniform on its open interval.
pub fn generate_pool_random(n: usize, space: &SearchSpace, seed: u64, origin: SamplerKind) -> Result<CandidatePool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut unit = vec![0.0; space.dimension()];
    while vectors.len() < n {
        for u in unit.iter_mut() {
            *u = loop {
                let x: f64 = rng.gen();
                if x > 0.0 {
                    break x;
                }
            };
        }
        let v = space.embed_unit(&unit)?;
        if seen.insert(v.bit_key()) {
            vectors.push(v);
        }
    }
    Ok(CandidatePool { vectors, origin })
}

/// The generator's next `n` points, scaled into the free ranges.
pub fn generate_pool_sobol(
    n: usize,
    space: &SearchSpace,
    gen: &mut SobolGenerator,
    origin: SamplerKind,
) -> Result<CandidatePool> {
    if gen.dimension() != space.dimension() {
        return Err(Error::UnsupportedDimension(gen.dimension()));
    }
    let mut vectors = Vec::with_capacity(n);
    for _ in 0..n {
        vectors.push(space.embed_unit(&gen.next_point()?)?);
    }
    Ok(CandidatePool::from_vectors(vectors, origin))
}

/// Uniform sample without replacement; drawn vectors leave the pool.
pub fn draw_minibatch(pool: &mut CandidatePool, batch_size: usize, seed: u64) -> Result<Vec<ParameterVector>> {
    if batch_size > pool.len() {
        return Err(Error::PoolExhausted {
            available: pool.len(),
            requested: batch_size,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..batch_size)
        .map(|_| {
            let j = rng.gen_range(0..pool.vectors.len());
            pool.vectors.swap_remove(j)
        })
        .collect())
}

/// Build a pool of `n` vectors from `oversample * n` raw candidates. Each
/// slot takes a predicted positive with probability `epsilon_positive`, a
/// predicted negative otherwise; when one side runs dry the other is used.
#[allow(clippy::too_many_arguments)]
pub fn reinitialize_pool_epsilon_greedy<C: Classifier + Sync + ?Sized>(
    model: &C,
    source: &mut PoolSource,
    n: usize,
    epsilon_positive: f64,
    oversample: usize,
    space: &SearchSpace,
    seed: u64,
) -> Result<CandidatePool> {
    if !(0.0..=1.0).contains(&epsilon_positive) {
        return Err(Error::ConfigInvalid(format!(
            "epsilon_positive must lie in [0,1], got {epsilon_positive}"
        )));
    }
    let origin = match source {
        PoolSource::Random => SamplerKind::SurrogateRandom,
        PoolSource::Sobol(_) => SamplerKind::SurrogateSobol,
    };
    let raw = source.generate(oversample.max(1) * n, space, derive_seed(&[seed, 0]), origin)?;
    let labels = raw
        .vectors
        .par_iter()
        .map(|v| model.predict(v))
        .collect::<Result<Vec<_>>>()?;
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = raw
        .vectors
        .into_iter()
        .zip(labels)
        .partition(|(_, l)| *l == Label::Positive);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 1]));
    let mut vectors = Vec::with_capacity(n);
    while vectors.len() < n && !(pos.is_empty() && neg.is_empty()) {
        let want_pos = rng.gen::<f64>() < epsilon_positive;
        let side = match (want_pos, pos.is_empty(), neg.is_empty()) {
            (true, false, _) | (false, false, true) => &mut pos,
            _ => &mut neg,
        };
        let j = rng.gen_range(0..side.len());
        vectors.push(side.swap_remove(j).0);
    }
    Ok(CandidatePool { vectors, origin })
}

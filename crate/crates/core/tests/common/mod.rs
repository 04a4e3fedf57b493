#![allow(dead_code)]

use abmcal::ks::Label;
use abmcal::surrogate::TrainingSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Primitive polynomials (degree, interior coefficient bits) and initial
/// odd integers m_1..m_s for dimensions 2..=8.
const POLYS: [(usize, u32, &[u32]); 7] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

/// Integers m_k of the Bratley-Fox recurrence,
/// m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}.
fn m_sequence(dim: usize, len: usize) -> Vec<u64> {
    if dim == 0 {
        return vec![1; len];
    }
    let (s, a, init) = POLYS[dim - 1];
    let mut m: Vec<u64> = init.iter().map(|&x| x as u64).collect();
    while m.len() < len {
        let k = m.len();
        let mut x = (m[k - s] << s) ^ m[k - s];
        for j in 1..s {
            let a_j = (a >> (s - 1 - j)) & 1;
            if a_j == 1 {
                x ^= m[k - j] << j;
            }
        }
        m.push(x);
    }
    m.truncate(len);
    m
}

/// Gray-code-ordered Sobol points 1..=count computed from the recurrence,
/// as exact binary fractions.
pub fn sobol_oracle(dimension: usize, count: usize) -> Vec<Vec<f64>> {
    let bits = 32;
    let v: Vec<Vec<f64>> = (0..dimension)
        .map(|d| {
            m_sequence(d, bits)
                .iter()
                .enumerate()
                .map(|(k, &m)| m as f64 / 2f64.powi(k as i32 + 1))
                .collect()
        })
        .collect();
    (1..=count as u64)
        .map(|n| {
            let g = n ^ (n >> 1);
            (0..dimension)
                .map(|d| {
                    let mut acc = 0u64;
                    for (k, vk) in v[d].iter().enumerate() {
                        if (g >> k) & 1 == 1 {
                            acc ^= (vk * 2f64.powi(32)) as u64;
                        }
                    }
                    acc as f64 / 2f64.powi(32)
                })
                .collect()
        })
        .collect()
}

/// Leaf weight of a single-leaf boosting round fitted at the prior, summed
/// in a plain loop: -sum(g) / (sum(h) + lambda).
pub fn single_leaf_weight(labels: &[Label], lambda: f64) -> f64 {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|l| l.is_positive()).count() as f64;
    let p = pos / n;
    let (mut g, mut h) = (0.0, 0.0);
    for l in labels {
        let y = if l.is_positive() { 1.0 } else { 0.0 };
        g += p - y;
        h += p * (1.0 - p);
    }
    -g / (h + lambda)
}

/// Three fixed datasets: a linear boundary, a disc, and a noisy XOR.
pub fn gbt_datasets() -> Vec<TrainingSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut out = Vec::new();
    for kind in 0..3 {
        let rows = (0..200)
            .map(|_| {
                let x: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
                let pos = match kind {
                    0 => x[0] + 0.5 * x[1] > 0.7,
                    1 => (x[0] - 0.5).powi(2) + (x[2] - 0.5).powi(2) < 0.1,
                    _ => ((x[0] > 0.5) ^ (x[1] > 0.5)) ^ (rng.gen::<f64>() < 0.1),
                };
                (x, if pos { Label::Positive } else { Label::Negative })
            })
            .collect();
        out.push(TrainingSet::new(rows).unwrap());
    }
    out
}

/// Points in the unit square with no two rows sharing a feature vector.
pub fn conflict_free(seed: u64, n: usize) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TrainingSet::new(
        (0..n)
            .map(|_| {
                let x = vec![rng.gen::<f64>(), rng.gen::<f64>()];
                let l = if rng.gen::<bool>() { Label::Positive } else { Label::Negative };
                (x, l)
            })
            .collect(),
    )
    .unwrap()
}

/// Linearly separable with margin: label by the sign of x0 + x1 - 1, rows
/// within 0.1 of the boundary dropped.
pub fn separable(seed: u64, n: usize) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    while rows.len() < n {
        let x = vec![rng.gen::<f64>(), rng.gen::<f64>()];
        let s = x[0] + x[1] - 1.0;
        if s.abs() > 0.1 {
            rows.push((x, if s > 0.0 { Label::Positive } else { Label::Negative }));
        }
    }
    TrainingSet::new(rows).unwrap()
}

/// True when the points (origin included by the caller) hit every
/// elementary box of area 2^-k in the (2^a x 2^b) grids with a + b = k.
pub fn is_zero_net_2d(points: &[[f64; 2]], k: u32) -> bool {
    (0..=k).all(|a| {
        let b = k - a;
        let mut seen = vec![0u32; 1 << k];
        for p in points {
            let i = (p[0] * (1u64 << a) as f64) as usize;
            let j = (p[1] * (1u64 << b) as f64) as usize;
            seen[(i << b) | j] += 1;
        }
        seen.iter().all(|&c| c == 1)
    })
}

/// One point per interval [j/2^k, (j+1)/2^k).
pub fn is_stratified_1d(xs: &[f64], k: u32) -> bool {
    let mut seen = vec![0u32; 1 << k];
    for &x in xs {
        seen[(x * (1u64 << k) as f64) as usize] += 1;
    }
    seen.iter().all(|&c| c == 1)
}

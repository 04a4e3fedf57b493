//! Sobol low-discrepancy sequence, Gray-code construction, 32-bit
//! resolution.
//!
//! Dimension 1 is the van der Corput sequence; dimensions 2..=8 use the
//! primitive polynomials and initial direction numbers of the Joe–Kuo
//! `new-joe-kuo-6.21201` table.

use crate::error::{Error, Result};
use crate::scalar::{clamp_open, Scalar};

pub const MAX_DIMENSION: usize = 8;

const BITS: usize = 32;

/// `(degree, polynomial coefficients, initial m values)` for dimensions 2..=8.
const JOE_KUO: [(u32, u32, &[u32]); MAX_DIMENSION - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for l in 0..s - 1 {
            if (a >> l) & 1 == 1 {
                x ^= v[k - s + 1 + l];
            }
        }
        v[k] = x;
    }
    v
}

#[derive(Clone, Debug)]
pub struct SobolGenerator {
    dimension: usize,
    /// Points emitted so far; the zero point at index 0 is never emitted.
    index: u32,
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
}

impl SobolGenerator {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(Error::UnsupportedDimension(dimension));
        }
        Ok(Self {
            dimension,
            index: 0,
            directions: (0..dimension).map(direction_numbers).collect(),
            state: vec![0; dimension],
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn direction_table(&self, dim: usize) -> &[u32; BITS] {
        &self.directions[dim]
    }

    /// Position the generator so the next emitted point has sequence index
    /// `index + 1`.
    pub fn seek(&mut self, index: u32) {
        let gray = index ^ (index >> 1);
        for (s, v) in self.state.iter_mut().zip(&self.directions) {
            *s = (0..BITS)
                .filter(|&k| (gray >> k) & 1 == 1)
                .fold(0, |acc, k| acc ^ v[k]);
        }
        self.index = index;
    }

    /// Next point as raw 32-bit integers.
    pub fn next_raw(&mut self) -> Result<&[u32]> {
        let next = self.index.checked_add(1).ok_or(Error::IndexOverflow)?;
        let bit = next.trailing_zeros() as usize;
        for (s, v) in self.state.iter_mut().zip(&self.directions) {
            *s ^= v[bit];
        }
        self.index = next;
        Ok(&self.state)
    }

    pub fn next_point(&mut self) -> Result<Vec<f64>> {
        self.next_point_as::<f64>()
    }

    pub fn next_point_as<F: Scalar>(&mut self) -> Result<Vec<F>> {
        let scale = F::from_f64_lossy(1.0 / 4_294_967_296.0);
        Ok(self
            .next_raw()?
            .iter()
            .map(|&x| F::from_u32(x).expect("u32 fits any float") * scale)
            .collect())
    }
}

/// Map a unit-cube point into the product of open intervals `ranges`.
/// Results that land on an endpoint are moved one ulp inside.
pub fn scale_point<F: Scalar>(unit: &[F], ranges: &[(F, F)]) -> Result<Vec<F>> {
    if unit.len() != ranges.len() {
        return Err(Error::BadRange(format!(
            "{} ranges for a {}-dimensional point",
            ranges.len(),
            unit.len()
        )));
    }
    unit.iter()
        .zip(ranges)
        .map(|(&u, &(lo, hi))| {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::BadRange(format!("({lo}, {hi})")));
            }
            Ok(clamp_open(lo + u * (hi - lo), lo, hi))
        })
        .collect()
}

/// Exact star discrepancy of a 2-D point set, evaluated over every anchored
/// box whose corner lies on the grid of point coordinates.
pub fn star_discrepancy_2d(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    if n == 0 {
        return 0.0;
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p[0]).chain([1.0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut ys: Vec<f64> = points.iter().map(|p| p[1]).chain([1.0]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();

    let nf = n as f64;
    let mut worst = 0.0f64;
    let mut closed_y = Vec::with_capacity(n);
    let mut open_y = Vec::with_capacity(n);
    for &a in &xs {
        closed_y.clear();
        open_y.clear();
        for p in points {
            if p[0] <= a {
                closed_y.push(p[1]);
            }
            if p[0] < a {
                open_y.push(p[1]);
            }
        }
        closed_y.sort_by(f64::total_cmp);
        open_y.sort_by(f64::total_cmp);
        for &b in &ys {
            let closed = closed_y.partition_point(|&y| y <= b) as f64;
            let open = open_y.partition_point(|&y| y < b) as f64;
            let vol = a * b;
            worst = worst.max(closed / nf - vol).max(vol - open / nf);
        }
    }
    worst
}

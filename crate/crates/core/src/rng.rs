//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, step, entity, purpose)`, so a
//! simulation of horizon `k` consumes exactly the same randomness as the
//! first `k` steps of a longer run, and evaluation order never matters.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const UNIT_53: f64 = 1.0 / (1u64 << 53) as f64;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash an arbitrary sequence of words into a seed.
pub fn derive_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(GOLDEN, |h, &w| mix64(h ^ mix64(w.wrapping_add(GOLDEN))))
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * UNIT_53
}

/// Draw purposes; keep distinct so streams never alias.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub(crate) enum Purpose {
    PositionX = 1,
    PositionY = 2,
    Heading = 3,
    Transmission = 4,
    Death = 5,
}

/// Randomness for one simulation step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StepStream {
    key: u64,
}

impl StepStream {
    pub(crate) fn new(seed: u64, step: u64) -> Self {
        Self {
            key: derive_seed(&[seed, step]),
        }
    }

    /// 64 random bits for one agent and purpose.
    #[inline]
    pub(crate) fn bits(&self, agent: u32, purpose: Purpose) -> u64 {
        let word = ((agent as u64) << 8) | purpose as u64;
        mix64(self.key.wrapping_add(word.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0,1) for one agent and purpose.
    #[inline]
    pub(crate) fn uniform(&self, agent: u32, purpose: Purpose) -> f64 {
        to_unit(self.bits(agent, purpose))
    }

    /// Uniform in [0,1) for an (infector, target) contact; independent of
    /// which side of the pair drives the neighbour search.
    #[inline]
    pub(crate) fn pair_uniform(&self, infector: u32, target: u32) -> f64 {
        let word = ((infector as u64) << 32) | target as u64;
        let salted = mix64(word ^ (Purpose::Transmission as u64).wrapping_mul(GOLDEN));
        to_unit(mix64(self.key.wrapping_add(salted)))
    }
}

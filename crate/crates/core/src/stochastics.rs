//! Seeded random streams and the distribution families the model draws from.
//!
//! Every realization owns one [`RngStream`] derived from `(master seed,
//! stream id)`. Streams are splittable: [`RngStream::fork`] derives a child
//! stream from the parent's identity and a caller-chosen path, so logically
//! distinct events (a given pair in a given year, say) consume randomness
//! that does not shift when unrelated draws are added or removed. This is
//! what makes common-random-number comparisons between scenarios stable.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recorded in output metadata so a run can be reproduced exactly.
pub const RNG_ALGORITHM: &str = "chacha12+splitmix64-fork";

/// Finalizer from SplitMix64; full-avalanche 64-bit mixer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// A deterministic, splittable random stream.
///
/// The stream is a ChaCha12 generator keyed by a 256-bit identity. The
/// identity is a pure function of `(seed, stream_id)` and the fork path, so
/// the same coordinates yield bit-identical draw sequences on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: [u64; 4],
    rng: ChaCha12Rng,
}

impl RngStream {
    /// Root stream for one realization. Distinct `stream_id`s give
    /// statistically independent sequences.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::from_key(absorb([0; 4], &[GOLDEN, seed, stream_id]))
    }

    /// Derive a child stream. The child depends only on this stream's
    /// identity and `path`, never on how many draws the parent has made.
    /// Forks compose: `s.fork(&[a]).fork(&[b])` equals `s.fork(&[a, b])`.
    pub fn fork(&self, path: &[u64]) -> Self {
        Self::from_key(absorb(self.key, path))
    }

    fn from_key(key: [u64; 4]) -> Self {
        let mut seed = [0u8; 32];
        for (i, w) in key.iter().enumerate() {
            seed[i * 8..(i + 1) * 8].copy_from_slice(&w.to_le_bytes());
        }
        RngStream {
            key,
            rng: ChaCha12Rng::from_seed(seed),
        }
    }
}

fn absorb(mut key: [u64; 4], words: &[u64]) -> [u64; 4] {
    for &w in words {
        key[0] = mix64(key[0] ^ w);
        key[1] = mix64(key[1] ^ key[0] ^ GOLDEN);
        key[2] = mix64(key[2] ^ key[1]);
        key[3] = mix64(key[3] ^ key[2]);
    }
    key
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// A validated distribution, as parameters are stated in the model tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    DiscreteUniform { lo: i64, hi: i64 },
    Binomial { n: u32, p: f64 },
    Poisson { lambda: f64 },
    ContinuousUniform { a: f64, b: f64 },
    PowerLawDegree { gamma: f64, k_max: u32, p_zero: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::DiscreteUniform { lo, hi } if lo > hi => Err(Error::Parameter(
                format!("discrete uniform requires lo <= hi, got [{lo}, {hi}]"),
            )),
            DistributionSpec::Binomial { p, .. } if !(0.0..=1.0).contains(&p) => Err(
                Error::Parameter(format!("binomial requires p in [0, 1], got {p}")),
            ),
            DistributionSpec::Poisson { lambda } if lambda.is_nan() || lambda < 0.0 => Err(
                Error::Parameter(format!("poisson requires lambda >= 0, got {lambda}")),
            ),
            DistributionSpec::ContinuousUniform { a, b } if a.is_nan() || b.is_nan() || a > b => {
                Err(Error::Parameter(format!(
                    "continuous uniform requires a <= b, got [{a}, {b}]"
                )))
            }
            DistributionSpec::PowerLawDegree {
                gamma,
                k_max,
                p_zero,
            } => {
                if gamma.is_nan() || gamma <= 0.0 {
                    Err(Error::Parameter(format!(
                        "power law requires gamma > 0, got {gamma}"
                    )))
                } else if k_max < 1 {
                    Err(Error::Parameter("power law requires k_max >= 1".into()))
                } else if !(0.0..=1.0).contains(&p_zero) {
                    Err(Error::Parameter(format!(
                        "power law requires p_zero in [0, 1], got {p_zero}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Sample an integer-valued draw. Errors on continuous families.
    pub fn sample_count(&self, rng: &mut RngStream) -> Result<i64> {
        match *self {
            DistributionSpec::DiscreteUniform { lo, hi } => sample_discrete_uniform(lo, hi, rng),
            DistributionSpec::Binomial { n, p } => sample_binomial(n, p, rng).map(i64::from),
            DistributionSpec::Poisson { lambda } => sample_poisson(lambda, rng).map(|k| k as i64),
            _ => Err(Error::Parameter(
                "integer draw requested from a continuous distribution".into(),
            )),
        }
    }
}

/// Uniform integer on the inclusive range `[lo, hi]`.
pub fn sample_discrete_uniform(lo: i64, hi: i64, rng: &mut RngStream) -> Result<i64> {
    if lo > hi {
        return Err(Error::Parameter(format!(
            "discrete uniform requires lo <= hi, got [{lo}, {hi}]"
        )));
    }
    Ok(rand::Rng::random_range(rng, lo..=hi))
}

/// Number of successes in `n` Bernoulli(`p`) trials, drawn exactly.
pub fn sample_binomial(n: u32, p: f64, rng: &mut RngStream) -> Result<u32> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!(
            "binomial requires p in [0, 1], got {p}"
        )));
    }
    let mut successes = 0;
    for _ in 0..n {
        if rand::Rng::random::<f64>(rng) < p {
            successes += 1;
        }
    }
    Ok(successes)
}

/// Poisson draw via Knuth's product-of-uniforms method, exact for any
/// `lambda >= 0`. Large rates are split into chunks so `exp(-lambda)` never
/// underflows; the sum of independent Poisson draws is Poisson.
pub fn sample_poisson(lambda: f64, rng: &mut RngStream) -> Result<u32> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Parameter(format!(
            "poisson requires lambda >= 0, got {lambda}"
        )));
    }
    const CHUNK: f64 = 500.0;
    let mut remaining = lambda;
    let mut total: u32 = 0;
    while remaining > 0.0 {
        let step = remaining.min(CHUNK);
        remaining -= step;
        let limit = (-step).exp();
        let mut product = 1.0;
        loop {
            product *= rand::Rng::random::<f64>(rng);
            if product <= limit {
                break;
            }
            total += 1;
        }
    }
    Ok(total)
}

/// Uniform real on the half-open interval `[a, b)`; the degenerate interval
/// `a == b` always returns `a`.
pub fn sample_continuous_uniform(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::Parameter(format!(
            "continuous uniform requires a <= b, got [{a}, {b}]"
        )));
    }
    Ok(a + (b - a) * rand::Rng::random::<f64>(rng))
}

/// Truncated power-law degree sampler with an explicit zero-degree atom.
///
/// With probability `p_zero` a draw is 0; otherwise it is `k` in
/// `[1, k_max]` with probability `A * k^-gamma`, `A = 1 / sum k^-gamma`.
/// The discrete CDF is precomputed once and inverted by binary search.
#[derive(Debug, Clone)]
pub struct PowerLawDegree {
    gamma: f64,
    k_max: u32,
    p_zero: f64,
    /// `masses[k - 1]` is the normalized conditional mass of degree `k`.
    masses: Vec<f64>,
    /// `cdf[k - 1]` is the conditional probability of a degree `<= k`.
    cdf: Vec<f64>,
}

impl PowerLawDegree {
    pub fn new(gamma: f64, k_max: u32, p_zero: f64) -> Result<Self> {
        DistributionSpec::PowerLawDegree {
            gamma,
            k_max,
            p_zero,
        }
        .validate()?;
        let raw: Vec<f64> = (1..=k_max).map(|k| (k as f64).powf(-gamma)).collect();
        // Kahan summation keeps the normalization exact to ~1e-15.
        let mut sum = 0.0;
        let mut carry = 0.0;
        for &m in &raw {
            let y = m - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
        let masses: Vec<f64> = raw.iter().map(|m| m / sum).collect();
        let mut cdf = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(PowerLawDegree {
            gamma,
            k_max,
            p_zero,
            masses,
            cdf,
        })
    }

    pub fn sample(&self, rng: &mut RngStream) -> u32 {
        let u = rand::Rng::random::<f64>(rng);
        if u < self.p_zero {
            return 0;
        }
        let t = (u - self.p_zero) / (1.0 - self.p_zero);
        let idx = self.cdf.partition_point(|&c| c < t);
        (idx as u32 + 1).min(self.k_max)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn p_zero(&self) -> f64 {
        self.p_zero
    }

    /// Unconditional probability of drawing degree `k`.
    pub fn mass(&self, k: u32) -> f64 {
        if k == 0 {
            self.p_zero
        } else if k <= self.k_max {
            (1.0 - self.p_zero) * self.masses[(k - 1) as usize]
        } else {
            0.0
        }
    }

    /// Total probability mass over `{0} U [1, k_max]`; equals 1 up to
    /// rounding in the precomputed table.
    pub fn total_mass(&self) -> f64 {
        let mut sum = 0.0;
        let mut carry = 0.0;
        for k in 0..=self.k_max {
            let y = self.mass(k) - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
        sum
    }
}

/// One power-law degree draw; builds the CDF table on every call, so prefer
/// holding a [`PowerLawDegree`] when sampling repeatedly.
pub fn sample_power_law_degree(
    gamma: f64,
    k_max: u32,
    p_zero: f64,
    rng: &mut RngStream,
) -> Result<u32> {
    Ok(PowerLawDegree::new(gamma, k_max, p_zero)?.sample(rng))
}

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use super::count::{ProfileCounter, Text};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::scalar::rational_to_f64;
use crate::words::ModelParams;

/// Replicates per work unit. Blocks are fixed by the replicate index, so
/// the merged sums do not depend on how blocks are scheduled.
pub const BLOCK_REPLICATES: u64 = 256;

/// Longest text a replicate may allocate.
const MAX_TEXT_LETTERS: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub params: ModelParams,
    pub replicates: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::domain("at least two replicates are required"));
        }
        let letters = self.params.n + self.params.k as u64 - 1;
        if letters > MAX_TEXT_LETTERS {
            return Err(Error::resource(format!("text of {letters} letters per replicate")));
        }
        Ok(())
    }
}

/// Summary of simulated `X_{n,k}` values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileSample {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of `variance`:
    /// `sqrt((m4 - s^4 (R - 3) / (R - 1)) / R)` with `m4` the fourth
    /// central sample moment.
    pub stderr_variance: f64,
    pub replicates: u64,
    /// Fraction of replicates with `X_{n,k} = 2^k`.
    pub full_level_fraction: f64,
}

/// Binary digits of `p` after the point; finite because `p` is a double.
fn binary_digits(p: f64) -> Vec<bool> {
    let mut digits = Vec::new();
    let mut x = p;
    while x > 0.0 && digits.len() < 1100 {
        x *= 2.0;
        let d = x >= 1.0;
        if d {
            x -= 1.0;
        }
        digits.push(d);
    }
    digits
}

/// Sixty-four independent letters, bit set for `b`. Lane `i` compares the
/// uniform binary fraction formed by bit `i` of successive random words
/// with the digits of `p`, so `P(a) = p` exactly.
pub fn bernoulli_block(rng: &mut impl RngCore, digits: &[bool]) -> u64 {
    let mut undecided = u64::MAX;
    let mut is_b = 0u64;
    for &d in digits {
        let r = rng.next_u64();
        if d {
            undecided &= r;
        } else {
            is_b |= undecided & r;
            undecided &= !r;
        }
        if undecided == 0 {
            break;
        }
    }
    // a lane equal to every digit of p is not below p
    is_b | undecided
}

#[derive(Default)]
struct PowerSums {
    s: [u128; 5],
    full: u64,
}

impl PowerSums {
    fn push(&mut self, x: u64) -> Result<()> {
        let x = x as u128;
        let mut term = 1u128;
        for j in 0..5 {
            self.s[j] = self.s[j]
                .checked_add(term)
                .ok_or_else(|| Error::resource("profile power sums overflow 128 bits"))?;
            if j < 4 {
                term = term
                    .checked_mul(x)
                    .ok_or_else(|| Error::resource("profile power sums overflow 128 bits"))?;
            }
        }
        Ok(())
    }

    fn merge(&mut self, other: &PowerSums) -> Result<()> {
        for j in 0..5 {
            self.s[j] = self.s[j]
                .checked_add(other.s[j])
                .ok_or_else(|| Error::resource("profile power sums overflow 128 bits"))?;
        }
        self.full += other.full;
        Ok(())
    }
}

fn sample_from(sums: &PowerSums) -> ProfileSample {
    let big = |v: u128| BigRational::from_integer(BigInt::from(v));
    let r = big(sums.s[0]);
    let (s1, s2, s3, s4) = (big(sums.s[1]), big(sums.s[2]), big(sums.s[3]), big(sums.s[4]));
    let one = BigRational::from_integer(1.into());
    let mean = &s1 / &r;
    let variance = (&s2 - &s1 * &s1 / &r) / (&r - &one);
    let m2 = &mean * &mean;
    let m4 = (&s4 - BigRational::from_integer(4.into()) * &mean * &s3
        + BigRational::from_integer(6.into()) * &m2 * &s2
        - BigRational::from_integer(3.into()) * &r * &m2 * &m2)
        / &r;
    let three = BigRational::from_integer(3.into());
    let mut var_of_var = (m4 - &variance * &variance * (&r - &three) / (&r - &one)) / &r;
    if var_of_var.is_negative() || var_of_var.is_zero() {
        var_of_var = BigRational::zero();
    }
    ProfileSample {
        mean: rational_to_f64(&mean),
        variance: rational_to_f64(&variance),
        stderr_variance: rational_to_f64(&var_of_var).sqrt(),
        replicates: sums.s[0] as u64,
        full_level_fraction: sums.full as f64 / sums.s[0] as f64,
    }
}

/// Monte Carlo estimate of the law of `X_{n,k}`. Replicate `r` draws its
/// letters from ChaCha8 stream `r` under key `seed`, so results are
/// bit-identical for every thread count.
pub fn simulate_profile(cfg: &SimulationConfig, exec: Exec) -> Result<ProfileSample> {
    cfg.validate()?;
    let (n, k) = (cfg.params.n as usize, cfg.params.k);
    let letters = n + k - 1;
    let digits = binary_digits(cfg.params.p());
    let full_level = (k < 64).then(|| 1u64 << k);
    let blocks = cfg.replicates.div_ceil(BLOCK_REPLICATES) as usize;
    let parts = par::map_range_with(
        exec,
        0..blocks,
        || (ProfileCounter::new(k, n), Text::default()),
        |scratch, b| -> Result<PowerSums> {
            let (counter, text) = scratch;
            let counter = counter.as_mut().map_err(|e| e.clone())?;
            let mut sums = PowerSums::default();
            let start = b as u64 * BLOCK_REPLICATES;
            let end = (start + BLOCK_REPLICATES).min(cfg.replicates);
            for r in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(r);
                text.refill(letters, |words| {
                    for w in words.iter_mut() {
                        *w = bernoulli_block(&mut rng, &digits);
                    }
                });
                let x = counter.count(text, n)?;
                sums.push(x)?;
                sums.full += u64::from(Some(x) == full_level);
            }
            Ok(sums)
        },
    );
    let mut total = PowerSums::default();
    for part in parts {
        total.merge(&part?)?;
    }
    Ok(sample_from(&total))
}

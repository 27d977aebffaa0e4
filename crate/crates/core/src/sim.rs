//! The permuted parallel channel and the Monte Carlo block error harness.
//!
//! Every random draw is keyed by `(seed, trial, stream)`: stream 0 draws the
//! message, stream `1 + t` the noise of channel `t`. Results therefore do not
//! depend on the number of workers or on the order trials run in.

use std::fmt::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::DiscreteChannel;
use crate::error::{usage, Error, Result};
use crate::parallel::{Permutation, Scheme};

/// Largest `S` for which every permutation is simulated by default.
pub const MAX_ALL_PERMUTATIONS: usize = 6;

/// Two-sided 95% normal quantile used by [`wilson_interval`].
pub const WILSON_Z: f64 = 1.959964;

/// Generator for one `(seed, trial, stream)` triple.
pub fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[0, 1)` with 53 random bits.
fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Samples an output letter of `ch` for input `x`.
pub fn sample_output(ch: &DiscreteChannel, x: usize, rng: &mut impl RngCore) -> usize {
    let u = uniform(rng);
    let row = ch.row(x);
    let mut acc = 0.0;
    for (y, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return y;
        }
    }
    // rounding left a sliver past the last cumulative sum
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// `S` channels where channel `t` carries codeword `π(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutedParallelChannel {
    channels: Vec<DiscreteChannel>,
    pi: Permutation,
}

impl PermutedParallelChannel {
    pub fn new(channels: Vec<DiscreteChannel>, pi: Permutation) -> Result<Self> {
        if channels.len() != pi.len() {
            return usage(format!("{} channels but a permutation of {}", channels.len(), pi.len()));
        }
        Ok(Self { channels, pi })
    }

    pub fn channels(&self) -> &[DiscreteChannel] {
        &self.channels
    }

    pub fn permutation(&self) -> &Permutation {
        &self.pi
    }

    /// Sends the codewords; `rngs[t]` drives the noise of channel `t`.
    pub fn transmit<R: RngCore>(&self, codewords: &[Vec<u8>], rngs: &mut [R]) -> Result<Vec<Vec<usize>>> {
        let s = self.channels.len();
        if codewords.len() != s || rngs.len() != s {
            return usage(format!("expected {s} codewords and noise streams"));
        }
        let len = codewords[0].len();
        if codewords.iter().any(|c| c.len() != len) {
            return usage("codewords differ in length");
        }
        (0..s)
            .map(|t| {
                let ch = &self.channels[t];
                codewords[self.pi.codeword_on(t)]
                    .iter()
                    .map(|&x| {
                        if x as usize >= ch.input_size() {
                            return usage(format!("input {x} outside the alphabet of channel {t}"));
                        }
                        Ok(sample_output(ch, x as usize, &mut rngs[t]))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Which permutations to simulate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PermutationSet {
    All,
    List(Vec<Permutation>),
}

impl PermutationSet {
    pub fn resolve(&self, s: usize) -> Result<Vec<Permutation>> {
        match self {
            PermutationSet::All if s > MAX_ALL_PERMUTATIONS => usage(format!(
                "{s}! permutations is too many; list the permutations to simulate"
            )),
            PermutationSet::All => Ok(Permutation::all(s)),
            PermutationSet::List(list) => {
                if list.is_empty() {
                    return usage("empty permutation list");
                }
                if let Some(p) = list.iter().find(|p| p.len() != s) {
                    return usage(format!("permutation {} does not act on {s} channels", p.label()));
                }
                Ok(list.clone())
            }
        }
    }

    /// `all`, or permutations like `1-2-0` separated by `;` or `,`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "all" {
            return Ok(PermutationSet::All);
        }
        let list = text
            .split([';', ','])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Permutation::parse)
            .collect::<Result<Vec<_>>>()?;
        if list.is_empty() {
            return Err(Error::Parse("empty permutation list".into()));
        }
        Ok(PermutationSet::List(list))
    }

    pub fn label(&self) -> String {
        match self {
            PermutationSet::All => "all".into(),
            PermutationSet::List(l) => l.iter().map(Permutation::label).collect::<Vec<_>>().join(";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub permutation: Permutation,
    pub n: usize,
    pub rate: f64,
    pub trials: u64,
    pub errors: u64,
    pub bit_errors: u64,
    pub bler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "permutation,n,rate,trials,errors,bler,ci_low,ci_high,seed";

impl TrialReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{},{},{:.6e},{:.6e},{:.6e},{}",
            self.permutation.label(),
            self.n,
            self.rate,
            self.trials,
            self.errors,
            self.bler,
            self.ci_low,
            self.ci_high,
            self.seed
        )
    }
}

pub fn reports_to_csv(reports: &[TrialReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sum of the uniform-input capacities.
pub fn capacity_sum(channels: &[DiscreteChannel]) -> f64 {
    channels.iter().map(DiscreteChannel::capacity_uniform).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub permutations: PermutationSet,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `0` uses the global pool.
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { permutations: PermutationSet::All, trials: 1000, seed: 1, workers: 0 }
    }
}

/// Message bits of one trial.
pub fn trial_message(bits: usize, seed: u64, trial: u64) -> Vec<u8> {
    let mut rng = trial_rng(seed, trial, 0);
    let mut out = Vec::with_capacity(bits);
    while out.len() < bits {
        let w = rng.next_u64();
        out.extend((0..64.min(bits - out.len())).map(|i| ((w >> i) & 1) as u8));
    }
    out
}

/// Runs one trial and returns the number of wrong message bits.
pub fn run_trial(scheme: &Scheme, link: &PermutedParallelChannel, seed: u64, trial: u64) -> Result<u64> {
    let bits = trial_message(scheme.message_bits(), seed, trial);
    let cws = scheme.encode(&bits)?;
    let mut rngs: Vec<ChaCha8Rng> = (0..link.channels().len()).map(|t| trial_rng(seed, trial, 1 + t as u64)).collect();
    let received = link.transmit(&cws, &mut rngs)?;
    let decoded = scheme.decode(&received, link.permutation())?;
    Ok(bits.iter().zip(&decoded).filter(|(a, b)| a != b).count() as u64)
}

/// Block error rates of `scheme` over `channels` (channel `t` carrying
/// codeword `π(t)`) for each requested permutation.
pub fn evaluate(scheme: &Scheme, channels: &[DiscreteChannel], opts: &EvalOptions) -> Result<Vec<TrialReport>> {
    if opts.trials == 0 {
        return usage("at least one trial is required");
    }
    let s = scheme.num_channels();
    if channels.len() != s {
        return usage(format!("scheme has {s} channels, {} given", channels.len()));
    }
    let perms = opts.permutations.resolve(s)?;
    let run = || -> Result<Vec<TrialReport>> {
        perms
            .iter()
            .map(|pi| {
                let link = PermutedParallelChannel::new(channels.to_vec(), pi.clone())?;
                let (errors, bit_errors) = (0..opts.trials)
                    .into_par_iter()
                    .map(|trial| run_trial(scheme, &link, opts.seed, trial).map(|b| (u64::from(b > 0), b)))
                    .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
                let (ci_low, ci_high) = wilson_interval(errors, opts.trials, WILSON_Z);
                Ok(TrialReport {
                    permutation: pi.clone(),
                    n: scheme.block_len(),
                    rate: scheme.rate(),
                    trials: opts.trials,
                    errors,
                    bit_errors,
                    bler: errors as f64 / opts.trials as f64,
                    ci_low,
                    ci_high,
                    seed: opts.seed,
                })
            })
            .collect()
    };
    if opts.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Resource(format!("thread pool: {e}")))?
            .install(run)
    }
}

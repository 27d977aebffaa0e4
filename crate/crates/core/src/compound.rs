//! Tree channels and rate bounds for channel sets that are not degraded.
//!
//! The tree channel for a branch word `σ` is the split channel whose index has
//! binary expansion `σ`, first branch most significant. It is synthesized on
//! the [`BinaryClasses`] form with optional class merging; merging only ever
//! degrades, so Bhattacharyya-based lower bounds stay valid and
//! capacity-based upper bounds carry an explicit slack.

use rayon::prelude::*;

use crate::channel::{check_symmetry, BinaryClasses, DiscreteChannel};
use crate::error::{usage, Error, Result};
use crate::polar::{bec_split_bhattacharyya, monotone_from_estimates, InformationSet, Target};

/// Synthesis controls for tree channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    pub merge_tol: f64,
    pub max_classes: usize,
    pub depth_cap: usize,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self { merge_tol: 1e-6, max_classes: 1024, depth_cap: 6 }
    }
}

impl TreeOptions {
    /// No merging beyond exact duplicates and no class cap.
    pub fn exact(depth_cap: usize) -> Self {
        Self { merge_tol: 0.0, max_classes: usize::MAX, depth_cap }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeChannel {
    sigma: Vec<u8>,
    classes: BinaryClasses,
    slack: f64,
}

impl TreeChannel {
    pub fn sigma(&self) -> &[u8] {
        &self.sigma
    }

    /// Index of the matching split channel in a block of `2^|σ|`.
    pub fn index(&self) -> usize {
        self.sigma.iter().fold(0, |acc, &b| 2 * acc + b as usize)
    }

    pub fn classes(&self) -> &BinaryClasses {
        &self.classes
    }

    pub fn channel(&self) -> DiscreteChannel {
        self.classes.to_channel()
    }

    pub fn bhattacharyya(&self) -> f64 {
        self.classes.bhattacharyya()
    }

    pub fn capacity(&self) -> f64 {
        self.classes.capacity()
    }

    /// Upper bound on how much capacity merging removed along the path.
    pub fn capacity_slack(&self) -> f64 {
        self.slack
    }

    fn child(&self, branch: u8, opts: &TreeOptions) -> Self {
        let next = match branch {
            0 => self.classes.minus(&self.classes),
            _ => self.classes.plus(&self.classes),
        };
        let (classes, loss) = next.merge_capped(opts.merge_tol, opts.max_classes);
        let mut sigma = self.sigma.clone();
        sigma.push(branch);
        Self { sigma, classes, slack: 2.0 * self.slack + loss }
    }
}

fn root(ch: &DiscreteChannel) -> Result<TreeChannel> {
    if !ch.is_binary() {
        return usage("tree channels need a binary-input channel");
    }
    if check_symmetry(ch).is_none() {
        return usage("tree channels need a symmetric channel");
    }
    Ok(TreeChannel { sigma: Vec::new(), classes: BinaryClasses::from_channel(ch)?, slack: 0.0 })
}

fn check_depth(k: usize, opts: &TreeOptions) -> Result<()> {
    if k > opts.depth_cap {
        return Err(Error::Resource(format!("tree depth {k} exceeds the cap of {}", opts.depth_cap)));
    }
    Ok(())
}

pub fn tree_channel(ch: &DiscreteChannel, sigma: &[u8], opts: &TreeOptions) -> Result<TreeChannel> {
    check_depth(sigma.len(), opts)?;
    if sigma.iter().any(|&b| b > 1) {
        return usage("branch words are binary");
    }
    let mut node = root(ch)?;
    for &b in sigma {
        node = node.child(b, opts);
    }
    Ok(node)
}

/// Every tree channel of depth `k`, in index order.
pub fn tree_layer(ch: &DiscreteChannel, k: usize, opts: &TreeOptions) -> Result<Vec<TreeChannel>> {
    check_depth(k, opts)?;
    let mut layer = vec![root(ch)?];
    for _ in 0..k {
        layer = layer
            .par_iter()
            .flat_map_iter(|node| [node.child(0, opts), node.child(1, opts)])
            .collect();
    }
    Ok(layer)
}

/// A bound value with the merge-induced uncertainty. For upper bounds the
/// slack must be added to obtain a guaranteed bound; lower bounds built from
/// Bhattacharyya parameters are valid as they stand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub slack: f64,
}

fn layers(channels: &[DiscreteChannel], k: usize, opts: &TreeOptions) -> Result<Vec<Vec<TreeChannel>>> {
    if channels.is_empty() {
        return usage("at least one channel is required");
    }
    channels.iter().map(|ch| tree_layer(ch, k, opts)).collect()
}

/// `1 - 2^-k Σ_σ max_s B(P_s^σ)`.
pub fn compound_lower_bound(channels: &[DiscreteChannel], k: usize, opts: &TreeOptions) -> Result<f64> {
    let trees = layers(channels, k, opts)?;
    let m = 1usize << k;
    let total: f64 = (0..m)
        .map(|j| trees.iter().map(|t| t[j].bhattacharyya()).fold(0.0, f64::max))
        .sum();
    Ok(1.0 - total / m as f64)
}

/// Channel order by ascending capacity, ties by input position.
pub fn ascending_capacity_order(channels: &[DiscreteChannel]) -> Vec<usize> {
    let cap: Vec<f64> = channels.iter().map(DiscreteChannel::capacity_uniform).collect();
    let mut order: Vec<usize> = (0..channels.len()).collect();
    order.sort_by(|&a, &b| cap[a].total_cmp(&cap[b]).then(a.cmp(&b)));
    order
}

/// Rate of the channel-after-channel scheme with the compound construction,
/// for channels in the given order `s_1, …, s_S`:
/// `C(s_S) + S - 1 - 2^-k Σ_{s<S} Σ_σ max_{i>=s} B(s_i^σ)`.
pub fn parallel_rate_lower(channels: &[DiscreteChannel], k: usize, opts: &TreeOptions) -> Result<f64> {
    let trees = layers(channels, k, opts)?;
    let s = channels.len();
    let m = 1usize << k;
    let mut total = 0.0;
    for first in 0..s - 1 {
        for j in 0..m {
            total += trees[first..].iter().map(|t| t[j].bhattacharyya()).fold(0.0, f64::max);
        }
    }
    Ok(channels[s - 1].capacity_uniform() + (s - 1) as f64 - total / m as f64)
}

/// `C(s_S) + 2^-k Σ_{s<S} Σ_σ min_{i>=s} I(s_i^σ)` for channels in the given
/// order, with the capacity slack of the minimizing tree channels.
pub fn parallel_rate_upper(channels: &[DiscreteChannel], k: usize, opts: &TreeOptions) -> Result<Bound> {
    let trees = layers(channels, k, opts)?;
    let s = channels.len();
    let m = 1usize << k;
    let (mut total, mut slack) = (0.0, 0.0);
    for first in 0..s - 1 {
        for j in 0..m {
            let (v, e) = trees[first..].iter().fold((f64::INFINITY, 0.0f64), |(v, e), t| {
                (v.min(t[j].capacity()), e.max(t[j].capacity_slack()))
            });
            total += v;
            slack += e;
        }
    }
    Ok(Bound {
        value: channels[s - 1].capacity_uniform() + total / m as f64,
        slack: slack / m as f64,
    })
}

/// Nested sets designed on erasure surrogates `BEC(B(P_s))`. The channels
/// must be listed by nondecreasing Bhattacharyya parameter; `sets[s]` is
/// for `channels[s]`.
pub fn erasure_surrogate_sets(
    channels: &[DiscreteChannel],
    n: usize,
    targets: &[Target],
    granularity: usize,
) -> Result<Vec<InformationSet>> {
    if channels.iter().any(|c| !c.is_binary()) {
        return usage("erasure surrogates need binary channels");
    }
    let b: Vec<f64> = channels.iter().map(DiscreteChannel::bhattacharyya).collect();
    if let Some(s) = (1..b.len()).find(|&s| b[s] < b[s - 1]) {
        return usage(format!(
            "channels must be ordered by Bhattacharyya parameter: channel {s} ({}) precedes channel {} ({})",
            b[s],
            s - 1,
            b[s - 1]
        ));
    }
    let z = b.iter().map(|&e| bec_split_bhattacharyya(e, n)).collect::<Result<Vec<_>>>()?;
    monotone_from_estimates(&z, targets, granularity)
}

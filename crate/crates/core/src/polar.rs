//! Polar codes over GF(2^m) with the kernel `[[1, 0], [1, 1]]`.
//!
//! Indices are 0-based and in natural order: reading the `log2 n` bits of an
//! index from the most significant end gives the sequence of polarization
//! branches, `0` for the worse branch and `1` for the better one.
//!
//! The successive-cancellation decoder works on normalized probability
//! vectors. [`ScState`] exposes it one index at a time so that frozen symbols
//! can be supplied while decoding is in progress; [`sc_decode`] drives it to
//! the end through a [`FrozenResolver`].

use std::fmt::Write as _;

use crate::channel::{checked_pow, is_degraded, DiscreteChannel, DEFAULT_OUTPUT_CAP};
use crate::error::{usage, Error, Result};
use crate::gf::{FieldSpec, Symbol};

/// Likelihoods within this relative distance of the maximum count as tied.
pub const TIE_REL_TOL: f64 = 1e-12;

/// Largest number of `(input word, output word)` pairs an exact enumeration
/// will visit.
pub const ENUMERATION_CAP: usize = 1 << 28;

/// `x = u · F^{⊗ log2 n}` over GF(2^m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PolarTransform {
    n: usize,
    spec: FieldSpec,
}

impl PolarTransform {
    pub fn new(n: usize, spec: FieldSpec) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return usage(format!("block length {n} is not a power of two"));
        }
        Ok(Self { n, spec })
    }

    pub fn binary(n: usize) -> Result<Self> {
        Self::new(n, FieldSpec::new(1)?)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn log_len(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    /// In-place butterflies. The transform is its own inverse.
    pub fn apply_in_place(&self, v: &mut [Symbol]) {
        debug_assert_eq!(v.len(), self.n);
        let mut half = 1;
        while half < self.n {
            for block in v.chunks_mut(2 * half) {
                let (a, b) = block.split_at_mut(half);
                a.iter_mut().zip(b.iter()).for_each(|(x, y)| *x ^= *y);
            }
            half *= 2;
        }
    }

    pub fn apply(&self, u: &[Symbol]) -> Result<Vec<Symbol>> {
        if u.len() != self.n {
            return usage(format!("input length {} != block length {}", u.len(), self.n));
        }
        if u.iter().any(|&s| !self.spec.contains(s)) {
            return usage("input symbol outside the field");
        }
        let mut x = u.to_vec();
        self.apply_in_place(&mut x);
        Ok(x)
    }

    /// Row `i` of the generator matrix.
    pub fn row(&self, i: usize) -> Vec<Symbol> {
        let mut e = vec![0; self.n];
        e[i] = 1;
        self.apply_in_place(&mut e);
        e
    }
}

/// A subset of `[n]`, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InformationSet {
    n: usize,
    indices: Vec<usize>,
}

impl InformationSet {
    pub fn new(n: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return usage(format!("index {i} outside [0, {n})"));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return usage("information set has a repeated index");
        }
        Ok(Self { n, indices })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, indices: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        Self { n, indices: (0..n).collect() }
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        self.indices.iter().for_each(|&i| m[i] = true);
        m
    }

    pub fn complement(&self) -> Vec<usize> {
        let mask = self.mask();
        (0..self.n).filter(|&i| !mask[i]).collect()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.n == other.n && self.indices.iter().all(|&i| other.contains(i))
    }

    /// `self \ other`, sorted.
    pub fn difference(&self, other: &Self) -> Vec<usize> {
        self.indices.iter().copied().filter(|&i| !other.contains(i)).collect()
    }

    /// `n: i1 i2 …`
    pub fn to_text(&self) -> String {
        let mut s = format!("{}:", self.n);
        for i in &self.indices {
            let _ = write!(s, " {i}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (head, rest) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("information set '{text}' lacks 'n:'")))?;
        let n = head.trim().parse().map_err(|_| Error::Parse(format!("bad block length '{head}'")))?;
        let indices = rest
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad index '{t}'"))))
            .collect::<Result<Vec<usize>>>()?;
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("indices must be strictly increasing".into()));
        }
        Self::new(n, indices).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `{ u·G_n : u agrees with the frozen symbols off the information set }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetCode {
    transform: PolarTransform,
    info: InformationSet,
    frozen: Vec<Symbol>,
}

impl CosetCode {
    /// `frozen` lists the symbols of the complement in increasing index order.
    pub fn new(transform: PolarTransform, info: InformationSet, frozen: Vec<Symbol>) -> Result<Self> {
        if info.block_len() != transform.len() {
            return usage("information set and transform lengths differ");
        }
        if frozen.len() != transform.len() - info.len() {
            return usage(format!(
                "{} frozen symbols given, {} needed",
                frozen.len(),
                transform.len() - info.len()
            ));
        }
        if frozen.iter().any(|&s| !transform.spec().contains(s)) {
            return usage("frozen symbol outside the field");
        }
        Ok(Self { transform, info, frozen })
    }

    pub fn with_zero_frozen(transform: PolarTransform, info: InformationSet) -> Result<Self> {
        let k = transform.len() - info.len();
        Self::new(transform, info, vec![0; k])
    }

    pub fn transform(&self) -> &PolarTransform {
        &self.transform
    }

    pub fn info_set(&self) -> &InformationSet {
        &self.info
    }

    pub fn frozen(&self) -> &[Symbol] {
        &self.frozen
    }

    /// The full `u` vector for the given information symbols.
    pub fn assemble(&self, info_symbols: &[Symbol]) -> Result<Vec<Symbol>> {
        if info_symbols.len() != self.info.len() {
            return usage(format!(
                "{} information symbols given, code carries {}",
                info_symbols.len(),
                self.info.len()
            ));
        }
        let mut u = vec![0; self.transform.len()];
        for (&i, &s) in self.info.indices().iter().zip(info_symbols) {
            u[i] = s;
        }
        for (i, &s) in self.info.complement().into_iter().zip(&self.frozen) {
            u[i] = s;
        }
        Ok(u)
    }

    pub fn encode(&self, info_symbols: &[Symbol]) -> Result<Vec<Symbol>> {
        let u = self.assemble(info_symbols)?;
        self.transform.apply(&u)
    }
}

fn check_alphabet(ch: &DiscreteChannel) -> Result<()> {
    if !ch.input_size().is_power_of_two() {
        return usage(format!("input alphabet {} is not a power of two", ch.input_size()));
    }
    Ok(())
}

/// Every output word with its probability under input word `x`, in
/// mixed-radix order (first use most significant).
fn output_word_probs(ch: &DiscreteChannel, x: &[Symbol], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    for &xi in x {
        let row = ch.row(xi as usize);
        let prev = std::mem::take(out);
        out.reserve(prev.len() * row.len());
        for p in prev {
            out.extend(row.iter().map(|&r| p * r));
        }
    }
}

fn digits(mut v: usize, radix: usize, len: usize) -> Vec<Symbol> {
    let mut d = vec![0; len];
    for slot in d.iter_mut().rev() {
        *slot = (v % radix) as Symbol;
        v /= radix;
    }
    d
}

/// The synthesized channel of index `l` (0-based): input `u_l`, output the
/// pair `(y, u_0 … u_{l-1})`. Output index is `y · q^l + prefix`, both in
/// mixed radix with the first component most significant. Computed by
/// summing over every later input symbol.
pub fn split_channel_exact(ch: &DiscreteChannel, n: usize, l: usize) -> Result<DiscreteChannel> {
    check_alphabet(ch)?;
    if n == 0 || !n.is_power_of_two() {
        return usage(format!("block length {n} is not a power of two"));
    }
    if l >= n {
        return usage(format!("index {l} outside [0, {n})"));
    }
    let q = ch.input_size();
    let too_big = || Error::Resource(format!("split channel of length {n} is too large to enumerate"));
    let y_words = checked_pow(ch.output_size(), n).ok_or_else(too_big)?;
    let prefixes = checked_pow(q, l).ok_or_else(too_big)?;
    let outs = y_words.checked_mul(prefixes).filter(|&o| o <= DEFAULT_OUTPUT_CAP).ok_or_else(too_big)?;
    let u_words = checked_pow(q, n).ok_or_else(too_big)?;
    if u_words.checked_mul(y_words).map_or(true, |v| v > ENUMERATION_CAP) {
        return Err(too_big());
    }
    let norm = (q as f64).powi(n as i32 - 1);
    let mut p = vec![0.0; q * outs];
    let mut probs = Vec::new();
    for u_idx in 0..u_words {
        let mut x = digits(u_idx, q, n);
        let ul = x[l] as usize;
        let prefix = x[..l].iter().fold(0usize, |acc, &s| acc * q + s as usize);
        for_each_butterfly(&mut x);
        output_word_probs(ch, &x, &mut probs);
        let row = &mut p[ul * outs..(ul + 1) * outs];
        for (y, &v) in probs.iter().enumerate() {
            row[y * prefixes + prefix] += v / norm;
        }
    }
    Ok(DiscreteChannel::normalized(q, outs, p))
}

fn for_each_butterfly(v: &mut [Symbol]) {
    let mut half = 1;
    while half < v.len() {
        for block in v.chunks_mut(2 * half) {
            let (a, b) = block.split_at_mut(half);
            a.iter_mut().zip(b.iter()).for_each(|(x, y)| *x ^= *y);
        }
        half *= 2;
    }
}

/// One column of [`split_channel_exact`]: `p(y, prefix | u_l)` for every
/// `u_l`, where `y` lists output letters.
pub fn split_likelihoods(
    ch: &DiscreteChannel,
    y: &[usize],
    prefix: &[Symbol],
) -> Result<Vec<f64>> {
    check_alphabet(ch)?;
    let n = y.len();
    if n == 0 || !n.is_power_of_two() {
        return usage(format!("block length {n} is not a power of two"));
    }
    let l = prefix.len();
    if l >= n {
        return usage(format!("prefix of {l} symbols leaves no index in a block of {n}"));
    }
    let q = ch.input_size();
    let tails = checked_pow(q, n - l - 1)
        .filter(|&t| t.saturating_mul(q) <= ENUMERATION_CAP)
        .ok_or_else(|| Error::Resource(format!("{} tail words exceed the cap", q)))?;
    let norm = (q as f64).powi(n as i32 - 1);
    let mut out = vec![0.0; q];
    let mut x = vec![0; n];
    for (ul, slot) in out.iter_mut().enumerate() {
        for t in 0..tails {
            x[..l].copy_from_slice(prefix);
            x[l] = ul as Symbol;
            x[l + 1..].copy_from_slice(&digits(t, q, n - l - 1));
            for_each_butterfly(&mut x);
            *slot += x.iter().zip(y).map(|(&xi, &yi)| ch.prob(xi as usize, yi)).product::<f64>() / norm;
        }
    }
    Ok(out)
}

/// Erasure probability of a binary erasure channel, if `ch` is one.
pub fn bec_erasure(ch: &DiscreteChannel) -> Option<f64> {
    if !ch.is_binary() {
        return None;
    }
    let mut erased = 0.0;
    let (mut known0, mut known1) = (0.0, 0.0);
    for y in 0..ch.output_size() {
        let (a, b) = (ch.prob(0, y), ch.prob(1, y));
        if a > 0.0 && b > 0.0 {
            if (a - b).abs() > 1e-12 {
                return None;
            }
            erased += a;
        } else {
            known0 += a;
            known1 += b;
        }
    }
    ((known0 - known1).abs() <= 1e-12).then_some(erased.clamp(0.0, 1.0))
}

/// Bhattacharyya parameters of the split channels of a BEC by the recursion
/// `z -> (2z - z², z²)`.
pub fn bec_split_bhattacharyya(epsilon: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return usage(format!("block length {n} is not a power of two"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return usage(format!("erasure probability {epsilon} outside [0, 1]"));
    }
    let mut z = vec![epsilon];
    while z.len() < n {
        z = z.iter().flat_map(|&v| [2.0 * v - v * v, v * v]).collect();
    }
    Ok(z)
}

/// Exact erasure probabilities of the split channels of a BEC, found by
/// enumerating every erasure pattern of the block. Index `l` is erased
/// exactly when row `l` of the generator, restricted to the unerased
/// positions, lies in the span of the later rows. Feasible for `n <= 16`.
pub fn bec_split_exact(epsilon: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return usage(format!("block length {n} is not a power of two"));
    }
    if n > 16 {
        return Err(Error::Resource(format!("2^{n} erasure patterns exceed the cap")));
    }
    let t = PolarTransform::binary(n)?;
    let rows: Vec<u32> = (0..n)
        .map(|i| t.row(i).iter().enumerate().fold(0u32, |acc, (j, &b)| acc | (b << j)))
        .collect();
    // counts[l][w]: erasure patterns of weight w that erase index l
    let mut counts = vec![vec![0u64; n + 1]; n];
    for pattern in 0u32..(1u32 << n) {
        let erased = pattern.count_ones() as usize;
        let keep = !pattern & ((1u64 << n) - 1) as u32;
        // GF(2) basis indexed by leading bit
        let mut basis = [0u32; 32];
        for l in (0..n).rev() {
            let mut v = rows[l] & keep;
            while v != 0 {
                let lead = 31 - v.leading_zeros() as usize;
                if basis[lead] == 0 {
                    basis[lead] = v;
                    break;
                }
                v ^= basis[lead];
            }
            if v == 0 {
                counts[l][erased] += 1;
            }
        }
    }
    Ok(counts
        .iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(w, &k)| k as f64 * epsilon.powi(w as i32) * (1.0 - epsilon).powi((n - w) as i32))
                .sum()
        })
        .collect())
}

/// How split-channel reliabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Construction {
    /// Exact recursion for erasure channels, erasure surrogate otherwise.
    Auto,
    /// Always use the BEC with erasure probability equal to the channel's
    /// Bhattacharyya parameter. Its split values upper-bound the real ones.
    Surrogate,
    /// Exact split channels (small block lengths only).
    Exact,
}

impl Construction {
    pub fn name(&self) -> &'static str {
        match self {
            Construction::Auto => "auto",
            Construction::Surrogate => "surrogate",
            Construction::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Construction::Auto),
            "surrogate" => Some(Construction::Surrogate),
            "exact" => Some(Construction::Exact),
            _ => None,
        }
    }
}

/// Per-index Bhattacharyya estimates for a binary channel.
pub fn split_bhattacharyya(ch: &DiscreteChannel, n: usize, how: Construction) -> Result<Vec<f64>> {
    if !ch.is_binary() {
        return usage("split Bhattacharyya estimates need a binary channel");
    }
    match (how, bec_erasure(ch)) {
        (Construction::Auto, Some(eps)) => bec_split_bhattacharyya(eps, n),
        (Construction::Auto | Construction::Surrogate, _) => {
            bec_split_bhattacharyya(ch.bhattacharyya(), n)
        }
        (Construction::Exact, _) => (0..n)
            .map(|l| Ok(split_channel_exact(ch, n, l)?.bhattacharyya()))
            .collect(),
    }
}

/// Size or reliability requirement for an information set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// `floor(n·R)` most reliable indices.
    Rate(f64),
    /// Every index whose estimate is strictly below the threshold.
    Threshold(f64),
}

impl Target {
    fn check(&self) -> Result<()> {
        match *self {
            Target::Rate(r) if !(0.0..=1.0).contains(&r) => usage(format!("rate {r} outside [0, 1]")),
            Target::Threshold(t) if !(t >= 0.0) => usage(format!("threshold {t} is negative")),
            _ => Ok(()),
        }
    }
}

/// Index order from most to least reliable, ties by index.
fn reliability_order(z: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    order
}

/// Picks indices from estimates `z`. The set size is rounded down to a
/// multiple of `granularity` by dropping the least reliable picks.
pub fn select_indices(z: &[f64], target: Target, granularity: usize) -> Result<InformationSet> {
    select_extending(z, target, granularity, &InformationSet::empty(z.len()))
}

/// Like [`select_indices`], but always keeps `base`; the extra indices are
/// chosen by reliability and trimmed to the granularity.
fn select_extending(
    z: &[f64],
    target: Target,
    granularity: usize,
    base: &InformationSet,
) -> Result<InformationSet> {
    target.check()?;
    let n = z.len();
    let g = granularity.max(1);
    let order = reliability_order(z);
    let mut picked: Vec<usize> = match target {
        Target::Rate(r) => {
            let want = ((n as f64 * r + 1e-9).floor() as usize).min(n) / g * g;
            if want < base.len() {
                return usage(format!(
                    "rate target gives {want} indices, below the {} already required",
                    base.len()
                ));
            }
            order.into_iter().filter(|&i| !base.contains(i)).take(want - base.len()).collect()
        }
        Target::Threshold(t) => {
            let mut extra: Vec<usize> =
                order.into_iter().filter(|&i| z[i] < t && !base.contains(i)).collect();
            extra.truncate(extra.len() / g * g);
            extra
        }
    };
    picked.extend_from_slice(base.indices());
    InformationSet::new(n, picked)
}

pub fn build_info_set(
    ch: &DiscreteChannel,
    n: usize,
    target: Target,
    how: Construction,
) -> Result<InformationSet> {
    select_indices(&split_bhattacharyya(ch, n, how)?, target, 1)
}

/// How [`monotone_info_sets`] learns that the channel list is degraded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradationCheck {
    /// Solve for a degradation witness between every adjacent pair.
    Verify,
    /// Trust the caller.
    Declared,
}

/// Nested information sets for a degraded list given best first, so that
/// `sets[s + 1] ⊆ sets[s]`. The worst channel is designed first; each
/// better channel keeps the set below it and adds its own most reliable
/// indices.
pub fn monotone_info_sets(
    channels: &[DiscreteChannel],
    n: usize,
    targets: &[Target],
    how: Construction,
    granularity: usize,
    check: DegradationCheck,
) -> Result<Vec<InformationSet>> {
    if channels.len() != targets.len() {
        return usage("one target per channel is required");
    }
    if check == DegradationCheck::Verify {
        for s in 1..channels.len() {
            if is_degraded(&channels[s - 1], &channels[s])?.is_none() {
                return Err(Error::Infeasible(format!(
                    "channel {s} is not a degraded version of channel {}",
                    s - 1
                )));
            }
        }
    }
    let z = channels
        .iter()
        .map(|ch| split_bhattacharyya(ch, n, how))
        .collect::<Result<Vec<_>>>()?;
    monotone_from_estimates(&z, targets, granularity)
}

/// Nested sets from per-channel estimates listed best first.
pub fn monotone_from_estimates(
    z: &[Vec<f64>],
    targets: &[Target],
    granularity: usize,
) -> Result<Vec<InformationSet>> {
    if z.len() != targets.len() {
        return usage("one target per channel is required");
    }
    let Some(n) = z.first().map(Vec::len) else {
        return Ok(Vec::new());
    };
    let mut sets = vec![InformationSet::empty(n); z.len()];
    let mut base = InformationSet::empty(n);
    for s in (0..z.len()).rev() {
        if z[s].len() != n {
            return usage("estimates have differing block lengths");
        }
        base = select_extending(&z[s], targets[s], granularity, &base)?;
        sets[s] = base.clone();
    }
    Ok(sets)
}

/// Index decision with ties going to the smallest symbol.
pub fn decide(p: &[f64]) -> Symbol {
    let max = p.iter().copied().fold(0.0, f64::max);
    let floor = max * (1.0 - TIE_REL_TOL);
    p.iter().position(|&v| v >= floor).unwrap_or(0) as Symbol
}

/// Supplies frozen symbols while decoding.
pub trait FrozenResolver {
    /// The frozen symbol at `index`, given the symbols decided before it.
    fn frozen(&mut self, index: usize, decided: &[Symbol]) -> Result<Symbol>;
}

/// Frozen symbols fixed in advance, listed for the complement of the
/// information set in increasing index order.
#[derive(Debug, Clone)]
pub struct StaticFrozen {
    values: Vec<(usize, Symbol)>,
}

impl StaticFrozen {
    pub fn new(info: &InformationSet, values: &[Symbol]) -> Result<Self> {
        let comp = info.complement();
        if comp.len() != values.len() {
            return usage("frozen vector length does not match the complement");
        }
        Ok(Self { values: comp.into_iter().zip(values.iter().copied()).collect() })
    }

    pub fn zeros(info: &InformationSet) -> Self {
        Self { values: info.complement().into_iter().map(|i| (i, 0)).collect() }
    }
}

impl FrozenResolver for StaticFrozen {
    fn frozen(&mut self, index: usize, _decided: &[Symbol]) -> Result<Symbol> {
        match self.values.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(k) => Ok(self.values[k].1),
            Err(_) => Err(Error::Contract(format!("index {index} is not frozen"))),
        }
    }
}

impl<F: FnMut(usize, &[Symbol]) -> Result<Symbol>> FrozenResolver for F {
    fn frozen(&mut self, index: usize, decided: &[Symbol]) -> Result<Symbol> {
        self(index, decided)
    }
}

/// Per-position input likelihoods `p(y_i | x)` for a received word.
pub fn channel_likelihoods(ch: &DiscreteChannel, received: &[usize]) -> Result<Vec<f64>> {
    let q = ch.input_size();
    let mut out = Vec::with_capacity(received.len() * q);
    for &y in received {
        if y >= ch.output_size() {
            return usage(format!("output letter {y} outside the channel alphabet"));
        }
        out.extend((0..q).map(|x| ch.prob(x, y)));
    }
    Ok(out)
}

/// Successive-cancellation decoder stepped one index at a time.
#[derive(Debug, Clone)]
pub struct ScState<'a> {
    q: usize,
    n: usize,
    log_n: usize,
    info: &'a InformationSet,
    /// `probs[d]` holds `(n >> d)` distributions of `q` entries each.
    probs: Vec<Vec<f64>>,
    /// Re-encoded left sibling at each depth.
    left: Vec<Vec<Symbol>>,
    decided: Vec<Symbol>,
    injected: Vec<Option<Symbol>>,
    leaf: Vec<f64>,
}

impl<'a> ScState<'a> {
    /// `likelihoods` holds `n` blocks of `q` values `p(y_i | x)`.
    pub fn new(transform: &PolarTransform, info: &'a InformationSet, likelihoods: Vec<f64>) -> Result<Self> {
        let n = transform.len();
        let q = transform.spec().size();
        if info.block_len() != n {
            return usage("information set and transform lengths differ");
        }
        if likelihoods.len() != n * q {
            return usage(format!("expected {} likelihoods, got {}", n * q, likelihoods.len()));
        }
        let log_n = transform.log_len();
        let mut probs: Vec<Vec<f64>> = (0..=log_n).map(|d| vec![0.0; (n >> d) * q]).collect();
        probs[0] = likelihoods;
        probs[0].chunks_mut(q).for_each(normalize);
        Ok(Self {
            q,
            n,
            log_n,
            info,
            probs,
            left: (0..=log_n).map(|d| vec![0; n >> d]).collect(),
            decided: Vec::with_capacity(n),
            injected: vec![None; n],
            leaf: vec![0.0; q],
        })
    }

    pub fn from_outputs(
        transform: &PolarTransform,
        info: &'a InformationSet,
        ch: &DiscreteChannel,
        received: &[usize],
    ) -> Result<Self> {
        if ch.input_size() != transform.spec().size() {
            return usage("channel input alphabet does not match the field");
        }
        if received.len() != transform.len() {
            return usage(format!("received {} letters for block length {}", received.len(), transform.len()));
        }
        Self::new(transform, info, channel_likelihoods(ch, received)?)
    }

    /// Index the next call to [`ScState::step`] decides, if any remain.
    pub fn next_index(&self) -> Option<usize> {
        (self.decided.len() < self.n).then_some(self.decided.len())
    }

    pub fn decided(&self) -> &[Symbol] {
        &self.decided
    }

    /// Normalized distribution of the most recently decided index.
    pub fn last_distribution(&self) -> &[f64] {
        &self.leaf
    }

    pub fn is_frozen(&self, index: usize) -> bool {
        !self.info.contains(index)
    }

    /// Supplies the frozen symbol for a not yet decided frozen index.
    pub fn inject(&mut self, index: usize, symbol: Symbol) -> Result<()> {
        if index >= self.n || index < self.decided.len() {
            return Err(Error::Contract(format!("index {index} is not pending")));
        }
        if !self.is_frozen(index) {
            return Err(Error::Contract(format!("index {index} carries information")));
        }
        if symbol as usize >= self.q {
            return Err(Error::Contract(format!("frozen symbol {symbol} outside the field")));
        }
        match self.injected[index] {
            Some(s) if s != symbol => Err(Error::Contract(format!(
                "frozen symbol at {index} changed from {s} to {symbol}"
            ))),
            _ => {
                self.injected[index] = Some(symbol);
                Ok(())
            }
        }
    }

    /// Decides the next index. Frozen indices must have been injected.
    pub fn step(&mut self) -> Result<(usize, Symbol)> {
        let i = self
            .next_index()
            .ok_or_else(|| Error::Contract("decoder already finished".into()))?;
        let frozen = if self.is_frozen(i) {
            Some(self.injected[i].ok_or_else(|| {
                Error::Contract(format!("frozen index {i} stepped without its symbol"))
            })?)
        } else {
            None
        };
        self.descend(i);
        let leaf = &self.probs[self.log_n];
        self.leaf.copy_from_slice(leaf);
        let sym = frozen.unwrap_or_else(|| decide(&self.leaf));
        self.decided.push(sym);
        self.ascend(i, sym);
        Ok((i, sym))
    }

    /// Steps with an explicit index, failing if it is out of order.
    pub fn step_at(&mut self, index: usize, frozen: Option<Symbol>) -> Result<Symbol> {
        if self.next_index() != Some(index) {
            return Err(Error::Contract(format!(
                "index {index} stepped out of order (next is {:?})",
                self.next_index()
            )));
        }
        if let Some(s) = frozen {
            self.inject(index, s)?;
        }
        self.step().map(|(_, s)| s)
    }

    fn descend(&mut self, i: usize) {
        let q = self.q;
        let start = if i == 0 {
            1
        } else {
            let d = self.log_n - i.trailing_zeros() as usize;
            let (upper, lower) = self.probs.split_at_mut(d);
            let parent = &upper[d - 1];
            let half = parent.len() / 2;
            let (a, b) = parent.split_at(half);
            let v1 = &self.left[d];
            let out = &mut lower[0];
            for j in 0..half / q {
                let s = v1[j] as usize;
                let pa = &a[j * q..(j + 1) * q];
                let pb = &b[j * q..(j + 1) * q];
                let o = &mut out[j * q..(j + 1) * q];
                for z in 0..q {
                    o[z] = pa[s ^ z] * pb[z];
                }
                normalize(o);
            }
            d + 1
        };
        for d in start..=self.log_n {
            let (upper, lower) = self.probs.split_at_mut(d);
            let parent = &upper[d - 1];
            let half = parent.len() / 2;
            let (a, b) = parent.split_at(half);
            let out = &mut lower[0];
            for j in 0..half / q {
                let pa = &a[j * q..(j + 1) * q];
                let pb = &b[j * q..(j + 1) * q];
                let o = &mut out[j * q..(j + 1) * q];
                if q == 2 {
                    o[0] = pa[0] * pb[0] + pa[1] * pb[1];
                    o[1] = pa[1] * pb[0] + pa[0] * pb[1];
                } else {
                    for z in 0..q {
                        o[z] = (0..q).map(|t| pa[z ^ t] * pb[t]).sum();
                    }
                }
                normalize(o);
            }
        }
    }

    fn ascend(&mut self, i: usize, sym: Symbol) {
        let mut cw = vec![sym];
        let mut d = self.log_n;
        let mut node = i;
        while d > 0 && node & 1 == 1 {
            let v1 = &self.left[d];
            let mut parent = Vec::with_capacity(2 * cw.len());
            parent.extend(v1.iter().zip(&cw).map(|(a, b)| a ^ b));
            parent.extend_from_slice(&cw);
            cw = parent;
            d -= 1;
            node >>= 1;
        }
        if d > 0 {
            self.left[d].copy_from_slice(&cw);
        }
    }

    /// Runs to the end, asking `resolver` for each frozen symbol.
    pub fn finish(&mut self, resolver: &mut dyn FrozenResolver) -> Result<Vec<Symbol>> {
        while let Some(i) = self.next_index() {
            if self.is_frozen(i) && self.injected[i].is_none() {
                let s = resolver.frozen(i, &self.decided)?;
                self.inject(i, s)?;
            }
            self.step()?;
        }
        Ok(self.decided.clone())
    }
}

fn normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    if s > 0.0 && s.is_finite() {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = u);
    }
}

/// Decodes a whole block: information indices by likelihood, frozen ones
/// from `resolver`. Returns the decided `u` vector.
pub fn sc_decode(
    transform: &PolarTransform,
    info: &InformationSet,
    ch: &DiscreteChannel,
    received: &[usize],
    resolver: &mut dyn FrozenResolver,
) -> Result<Vec<Symbol>> {
    ScState::from_outputs(transform, info, ch, received)?.finish(resolver)
}

/// Probability, given the input `u`, that the exact split likelihood of the
/// true `u_l` does not exceed that of `u_l + d` (ties count). Sums over
/// every output word.
pub fn error_event_probability(ch: &DiscreteChannel, l: usize, d: Symbol, u: &[Symbol]) -> Result<f64> {
    let n = u.len();
    let q = ch.input_size();
    if d == 0 || d as usize >= q {
        return usage(format!("difference {d} must be a nonzero input symbol"));
    }
    if l >= n {
        return usage(format!("index {l} outside [0, {n})"));
    }
    if u.iter().any(|&s| s as usize >= q) {
        return usage("input symbol outside the channel alphabet");
    }
    let work = checked_pow(ch.output_size(), n).and_then(|w| w.checked_mul(checked_pow(q, n)?));
    if work.map_or(true, |w| w > ENUMERATION_CAP) {
        return Err(Error::Resource("output words exceed the enumeration cap".into()));
    }
    let mut x = u.to_vec();
    for_each_butterfly(&mut x);
    let mut probs = Vec::new();
    output_word_probs(ch, &x, &mut probs);
    let truth = u[l] as usize;
    let other = truth ^ d as usize;
    let mut total = 0.0;
    for (yi, &py) in probs.iter().enumerate() {
        if py == 0.0 {
            continue;
        }
        let y: Vec<usize> = digits(yi, ch.output_size(), n).into_iter().map(|v| v as usize).collect();
        let lik = split_likelihoods(ch, &y, &u[..l])?;
        if lik[truth] <= lik[other] * (1.0 + TIE_REL_TOL) {
            total += py;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(n: usize) -> PolarTransform {
        PolarTransform::binary(n).unwrap()
    }

    /// Dense Kronecker-power generator built from the 2x2 kernel.
    fn kron_matrix(n: usize) -> Vec<Vec<u32>> {
        let mut g = vec![vec![1u32]];
        while g.len() < n {
            let k = g.len();
            let mut next = vec![vec![0u32; 2 * k]; 2 * k];
            for i in 0..k {
                for j in 0..k {
                    next[i][j] = g[i][j];
                    next[k + i][j] = g[i][j];
                    next[k + i][k + j] = g[i][j];
                }
            }
            g = next;
        }
        g
    }

    #[test]
    fn transform_examples() {
        let t = bin(2);
        assert_eq!(t.apply(&[1, 0]).unwrap(), vec![1, 0]);
        assert_eq!(t.apply(&[1, 1]).unwrap(), vec![0, 1]);
        assert_eq!(bin(1).apply(&[1]).unwrap(), vec![1]);
        assert!(PolarTransform::binary(6).is_err());
        assert!(PolarTransform::binary(0).is_err());
    }

    #[test]
    fn transform_matches_matrix_over_gf4() {
        let f = FieldSpec::new(2).unwrap();
        let t = PolarTransform::new(4, f).unwrap();
        let g = kron_matrix(4);
        for idx in 0..256usize {
            let u: Vec<u32> = (0..4).map(|i| ((idx >> (2 * i)) & 3) as u32).collect();
            let x: Vec<u32> = (0..4)
                .map(|j| (0..4).fold(0, |acc, i| acc ^ if g[i][j] == 1 { u[i] } else { 0 }))
                .collect();
            assert_eq!(t.apply(&u).unwrap(), x);
            assert_eq!(t.apply(&x).unwrap(), u);
        }
    }

    #[test]
    fn coset_examples() {
        let t = bin(2);
        let code = CosetCode::new(t, InformationSet::new(2, vec![1]).unwrap(), vec![0]).unwrap();
        assert_eq!(code.encode(&[1]).unwrap(), vec![1, 1]);
        assert!(code.encode(&[1, 0]).is_err());
        let t8 = bin(8);
        let info = InformationSet::new(8, vec![3, 5, 6, 7]).unwrap();
        let zero = CosetCode::with_zero_frozen(t8, info.clone()).unwrap();
        assert_eq!(zero.encode(&[0; 4]).unwrap(), vec![0; 8]);
        let b = vec![1, 0, 1, 1];
        let shifted = CosetCode::new(t8, info.clone(), b.clone()).unwrap();
        let msg = [1, 0, 1, 1];
        let mut offset = vec![0; 8];
        for (i, &s) in info.complement().iter().zip(&b) {
            offset[*i] = s;
        }
        let offset = t8.apply(&offset).unwrap();
        let plain = zero.encode(&msg).unwrap();
        let expect: Vec<u32> = plain.iter().zip(&offset).map(|(a, c)| a ^ c).collect();
        assert_eq!(shifted.encode(&msg).unwrap(), expect);
    }

    #[test]
    fn information_set_text() {
        let s = InformationSet::new(8, vec![5, 1, 7]).unwrap();
        assert_eq!(s.to_text(), "8: 1 5 7");
        assert_eq!(InformationSet::from_text("8: 1 5 7").unwrap(), s);
        assert_eq!(InformationSet::from_text("4:").unwrap(), InformationSet::empty(4));
        assert!(InformationSet::from_text("8: 5 1").is_err());
        assert!(InformationSet::from_text("8: 9").is_err());
        assert!(InformationSet::new(4, vec![1, 1]).is_err());
    }

    #[test]
    fn split_examples() {
        let bec = DiscreteChannel::bec(0.5).unwrap();
        let z: Vec<f64> = (0..2).map(|l| split_channel_exact(&bec, 2, l).unwrap().bhattacharyya()).collect();
        assert!((z[0] - 0.75).abs() < 1e-12 && (z[1] - 0.25).abs() < 1e-12);
        let mut z4: Vec<f64> =
            (0..4).map(|l| split_channel_exact(&bec, 4, l).unwrap().bhattacharyya()).collect();
        z4.sort_by(f64::total_cmp);
        for (a, b) in z4.iter().zip([0.0625, 0.4375, 0.5625, 0.9375]) {
            assert!((a - b).abs() < 1e-12);
        }
        let clean = DiscreteChannel::noiseless(2).unwrap();
        for l in 0..4 {
            let s = split_channel_exact(&clean, 4, l).unwrap();
            assert!(s.bhattacharyya() < 1e-15);
            assert!((s.capacity_uniform() - 1.0).abs() < 1e-12);
        }
        let bsc = DiscreteChannel::bsc(0.1).unwrap();
        assert!(matches!(split_channel_exact(&bsc, 64, 3), Err(Error::Resource(_))));
    }

    #[test]
    fn split_likelihoods_match_matrix() {
        let ch = DiscreteChannel::bsc(0.2).unwrap();
        let s = split_channel_exact(&ch, 4, 2).unwrap();
        for y in 0..16usize {
            for pre in 0..4usize {
                let yv: Vec<usize> = (0..4).map(|i| (y >> (3 - i)) & 1).collect();
                let pv = [(pre >> 1) as u32, (pre & 1) as u32];
                let lik = split_likelihoods(&ch, &yv, &pv).unwrap();
                for x in 0..2 {
                    assert!((lik[x] - s.prob(x, y * 4 + pre)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn bec_recursion_examples() {
        assert_eq!(bec_split_bhattacharyya(0.5, 2).unwrap(), vec![0.75, 0.25]);
        assert!(bec_split_bhattacharyya(0.0, 16).unwrap().iter().all(|&z| z == 0.0));
        let mut z = bec_split_bhattacharyya(0.1, 4).unwrap();
        z.sort_by(f64::total_cmp);
        for (a, b) in z.iter().zip([0.0001, 0.0199, 0.0361, 0.3439]) {
            assert!((a - b).abs() < 1e-12);
        }
        let exact = bec_split_exact(0.3, 8).unwrap();
        let rec = bec_split_bhattacharyya(0.3, 8).unwrap();
        for (a, b) in exact.iter().zip(&rec) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn info_set_examples() {
        let bec5 = DiscreteChannel::bec(0.5).unwrap();
        let a = build_info_set(&bec5, 4, Target::Threshold(0.1), Construction::Auto).unwrap();
        assert_eq!(a.indices(), &[3]);
        let bec1 = DiscreteChannel::bec(0.1).unwrap();
        let b = build_info_set(&bec1, 4, Target::Threshold(0.1), Construction::Auto).unwrap();
        assert_eq!(b.indices(), &[1, 2, 3]);
        let bsc = DiscreteChannel::bsc(0.1).unwrap();
        assert!(build_info_set(&bsc, 8, Target::Threshold(0.0), Construction::Auto).unwrap().is_empty());
        assert!(build_info_set(&bsc, 8, Target::Rate(1.5), Construction::Auto).is_err());
        assert_eq!(build_info_set(&bsc, 8, Target::Rate(0.5), Construction::Auto).unwrap().len(), 4);

        let sets = monotone_info_sets(
            &[bec1.clone(), bec5.clone()],
            4,
            &[Target::Threshold(0.1); 2],
            Construction::Auto,
            1,
            DegradationCheck::Verify,
        )
        .unwrap();
        assert_eq!(sets[0], b);
        assert_eq!(sets[1], a);
        let swapped = monotone_info_sets(
            &[bec5, bec1.clone()],
            4,
            &[Target::Threshold(0.1); 2],
            Construction::Auto,
            1,
            DegradationCheck::Verify,
        );
        assert!(matches!(swapped, Err(Error::Infeasible(m)) if m.contains("channel 1")));
        let same = monotone_info_sets(
            &[bec1.clone(), bec1],
            16,
            &[Target::Rate(0.5); 2],
            Construction::Auto,
            2,
            DegradationCheck::Verify,
        )
        .unwrap();
        assert_eq!(same[0], same[1]);
    }

    #[test]
    fn sc_recovers_noiseless_and_erasure_free() {
        let t = bin(8);
        let info = InformationSet::new(8, vec![3, 5, 6, 7]).unwrap();
        let code = CosetCode::with_zero_frozen(t, info.clone()).unwrap();
        let clean = DiscreteChannel::noiseless(2).unwrap();
        let bec = DiscreteChannel::bec(0.4).unwrap();
        for m in 0..16u32 {
            let msg: Vec<u32> = (0..4).map(|i| (m >> i) & 1).collect();
            let x = code.encode(&msg).unwrap();
            let y: Vec<usize> = x.iter().map(|&v| v as usize).collect();
            let u = code.assemble(&msg).unwrap();
            for ch in [&clean, &bec] {
                let dec = sc_decode(&t, &info, ch, &y, &mut StaticFrozen::zeros(&info)).unwrap();
                assert_eq!(dec, u);
            }
        }
    }

    #[test]
    fn stepping_contracts() {
        let t = bin(4);
        let info = InformationSet::new(4, vec![3]).unwrap();
        let ch = DiscreteChannel::bsc(0.1).unwrap();
        let mut st = ScState::from_outputs(&t, &info, &ch, &[0, 0, 0, 0]).unwrap();
        assert!(matches!(st.step(), Err(Error::Contract(_))));
        assert!(matches!(st.step_at(1, Some(0)), Err(Error::Contract(_))));
        st.inject(2, 1).unwrap();
        assert!(matches!(st.inject(2, 0), Err(Error::Contract(_))));
        assert!(matches!(st.inject(3, 0), Err(Error::Contract(_))));
        st.step_at(0, Some(0)).unwrap();
        st.step_at(1, Some(0)).unwrap();
        assert_eq!(st.step().unwrap(), (2, 1));
        st.step().unwrap();
        assert!(st.step().is_err());

        // a resolver returning a symbol outside the field breaks the contract
        let mut bad = |_: usize, _: &[Symbol]| -> Result<Symbol> { Ok(5) };
        let err = sc_decode(&t, &info, &ch, &[0, 0, 0, 0], &mut bad);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn interleaved_stepping_equals_sequential() {
        let t = bin(4);
        let a = InformationSet::new(4, vec![1, 3]).unwrap();
        let b = InformationSet::new(4, vec![2, 3]).unwrap();
        let ch = DiscreteChannel::bsc(0.2).unwrap();
        for y in 0..16usize {
            let ya: Vec<usize> = (0..4).map(|i| (y >> i) & 1).collect();
            let yb: Vec<usize> = (0..4).map(|i| (y >> (3 - i)) & 1).collect();
            let seq_a = sc_decode(&t, &a, &ch, &ya, &mut StaticFrozen::zeros(&a)).unwrap();
            let seq_b = sc_decode(&t, &b, &ch, &yb, &mut StaticFrozen::zeros(&b)).unwrap();
            let mut sa = ScState::from_outputs(&t, &a, &ch, &ya).unwrap();
            let mut sb = ScState::from_outputs(&t, &b, &ch, &yb).unwrap();
            for i in 0..4 {
                sb.step_at(i, (!b.contains(i)).then_some(0)).unwrap();
                sa.step_at(i, (!a.contains(i)).then_some(0)).unwrap();
            }
            assert_eq!(sa.decided(), seq_a.as_slice());
            assert_eq!(sb.decided(), seq_b.as_slice());
        }
    }

    #[test]
    fn sc_matches_exact_split_argmax_over_gf4() {
        let f = FieldSpec::new(2).unwrap();
        let t = PolarTransform::new(2, f).unwrap();
        let ch = DiscreteChannel::qsc(4, 0.3).unwrap();
        let info = InformationSet::full(2);
        let splits: Vec<_> = (0..2).map(|l| split_channel_exact(&ch, 2, l).unwrap()).collect();
        for y in 0..16usize {
            let yv = [y / 4, y % 4];
            let dec = sc_decode(&t, &info, &ch, &yv, &mut StaticFrozen::zeros(&info)).unwrap();
            let col0: Vec<f64> = (0..4).map(|x| splits[0].prob(x, y)).collect();
            assert_eq!(dec[0], decide(&col0));
            let col1: Vec<f64> = (0..4).map(|x| splits[1].prob(x, y * 4 + dec[0] as usize)).collect();
            assert_eq!(dec[1], decide(&col1));
        }
    }

    #[test]
    fn error_events_are_message_independent() {
        let bsc = DiscreteChannel::bsc(0.1).unwrap();
        for l in 0..2 {
            let base = error_event_probability(&bsc, l, 1, &[0, 0]).unwrap();
            for u in [[0, 1], [1, 0], [1, 1]] {
                assert!((error_event_probability(&bsc, l, 1, &u).unwrap() - base).abs() < 1e-12);
            }
        }
        let clean = DiscreteChannel::noiseless(2).unwrap();
        assert_eq!(error_event_probability(&clean, 1, 1, &[1, 0]).unwrap(), 0.0);
        assert!(error_event_probability(&bsc, 0, 0, &[0, 0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn transform_is_an_involution(bits in proptest::collection::vec(0u32..16, 32)) {
            let t = PolarTransform::new(32, FieldSpec::new(4).unwrap()).unwrap();
            let x = t.apply(&bits).unwrap();
            proptest::prop_assert_eq!(t.apply(&x).unwrap(), bits);
        }

        #[test]
        fn monotone_sets_nest(e1 in 0.0f64..1.0, e2 in 0.0f64..1.0, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let (good, bad) = (e1.min(e2), e1.max(e2));
            let chans = [DiscreteChannel::bec(good).unwrap(), DiscreteChannel::bec(bad).unwrap()];
            for targets in [[Target::Threshold(r1), Target::Threshold(r2)], [Target::Rate(r1.max(r2)), Target::Rate(r1.min(r2))]] {
                let sets = monotone_info_sets(&chans, 64, &targets, Construction::Auto, 2, DegradationCheck::Declared).unwrap();
                proptest::prop_assert!(sets[1].is_subset_of(&sets[0]));
                proptest::prop_assert!(sets.iter().all(|s| s.len() % 2 == 0));
            }
        }
    }
}

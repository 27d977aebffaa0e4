//! Coding schemes for `S` parallel channels whose assignment to codewords is
//! known only to the receiver.
//!
//! Channel `t` carries codeword `π(t)`; see [`Permutation`]. Every scheme
//! keeps its channels in design order, and MDS position `s` always belongs to
//! codeword `s`.
//!
//! * [`DegradedScheme`]: nested information sets and channel-after-channel
//!   decoding, best channel first.
//! * [`InterleavedScheme`]: `m` binary polar codes per channel, decoded
//!   index by index across all channels.
//! * [`NonBinaryScheme`]: one GF(2^m) polar code per channel over `m` uses of
//!   the binary channel, decoded the same way.

use crate::channel::DiscreteChannel;
use crate::error::{usage, Error, Result};
use crate::gf::{bits_to_symbols, symbols_to_bits, FieldSpec, Symbol};
use crate::mds::{FamilyKind, MdsFamily};
use crate::polar::{
    build_info_set, monotone_info_sets, sc_decode, Construction, DegradationCheck, InformationSet,
    PolarTransform, ScState, StaticFrozen, Target,
};

/// `perm[t]` is the codeword sent over channel `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return usage(format!("{perm:?} is not a permutation"));
            }
            seen[p] = true;
        }
        Ok(Self(perm))
    }

    pub fn identity(s: usize) -> Self {
        Self((0..s).collect())
    }

    /// All `s!` permutations in lexicographic order.
    pub fn all(s: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..s).collect();
        loop {
            out.push(Self(cur.clone()));
            // next lexicographic permutation
            let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Codeword carried by channel `t`.
    pub fn codeword_on(&self, t: usize) -> usize {
        self.0[t]
    }

    /// Channel carrying codeword `c`.
    pub fn channel_of(&self, c: usize) -> usize {
        self.0.iter().position(|&p| p == c).expect("bijection")
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// `2-0-1` style label.
    pub fn label(&self) -> String {
        self.0.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let v = s
            .split('-')
            .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad permutation '{s}'"))))
            .collect::<Result<Vec<usize>>>()?;
        Self::new(v).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Degraded,
    Interleaved,
    NonBinary,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Degraded => "degraded",
            SchemeKind::Interleaved => "interleaved",
            SchemeKind::NonBinary => "nonbinary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "degraded" => Some(SchemeKind::Degraded),
            "interleaved" => Some(SchemeKind::Interleaved),
            "nonbinary" => Some(SchemeKind::NonBinary),
            _ => None,
        }
    }
}

/// Capacity descending, then Bhattacharyya ascending, then input order.
pub fn design_order(channels: &[DiscreteChannel]) -> Vec<usize> {
    let key: Vec<(f64, f64)> = channels.iter().map(|c| (c.capacity_uniform(), c.bhattacharyya())).collect();
    let mut order: Vec<usize> = (0..channels.len()).collect();
    order.sort_by(|&a, &b| {
        key[b].0.total_cmp(&key[a].0).then(key[a].1.total_cmp(&key[b].1)).then(a.cmp(&b))
    });
    order
}

/// Smallest `m` with `2^m - 1 >= s`.
pub fn default_degree(s: usize) -> u32 {
    (1..=16).find(|&m| (1usize << m) > s).unwrap_or(16)
}

fn family_for(s: usize, m: u32, kind: FamilyKind) -> Result<MdsFamily> {
    let spec = FieldSpec::new(m)?;
    if (1usize << m) <= s {
        return usage(format!("GF(2^{m}) is too small for {s} channels; need 2^m - 1 >= {s}"));
    }
    MdsFamily::new(spec, s, kind)
}

fn check_family(family: &MdsFamily, s: usize, spec: FieldSpec) -> Result<()> {
    if family.len() != s || family.spec().degree() != spec.degree() {
        return usage(format!("MDS family of length {} over GF(2^{}) does not fit {s} channels over GF(2^{})", family.len(), family.spec().degree(), spec.degree()));
    }
    Ok(())
}

fn check_received(channels: &[DiscreteChannel], received: &[Vec<usize>], pi: &Permutation, s: usize, len: usize) -> Result<()> {
    if channels.len() != s || received.len() != s || pi.len() != s {
        return usage(format!("expected {s} channels, outputs and permutation entries"));
    }
    if let Some(r) = received.iter().find(|r| r.len() != len) {
        return usage(format!("received block of {} letters, expected {len}", r.len()));
    }
    Ok(())
}

/// The symbols decoded by one stage of [`DegradedScheme`] decoding: for each
/// layer dimension `j` (largest first), the row of codeword `codeword`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTrace {
    pub channel: usize,
    pub codeword: usize,
    pub layers: Vec<(usize, Vec<u8>)>,
}

/// Channel-after-channel scheme for degraded channels.
///
/// Layer `j` (`1 <= j <= S`) is `A^(j) \ A^(j+1)`. On layer `j` the rows of
/// codewords `0..j` carry information and the remaining rows complete each
/// column of `m`-bit symbols to a codeword of `C_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradedScheme {
    transform: PolarTransform,
    spec: FieldSpec,
    sets: Vec<InformationSet>,
    layers: Vec<Vec<usize>>,
    family: MdsFamily,
    frozen: Vec<u8>,
    channels: Vec<DiscreteChannel>,
}

impl DegradedScheme {
    /// `sets[s]` is `A^(s+1)`, best channel first, nested downward. `frozen`
    /// lists the bits off `A^(1)` in index order.
    pub fn new(
        channels: Vec<DiscreteChannel>,
        sets: Vec<InformationSet>,
        m: u32,
        kind: FamilyKind,
        frozen: Vec<u8>,
    ) -> Result<Self> {
        let s = sets.len();
        if s == 0 || channels.len() != s {
            return usage("one information set per channel is required");
        }
        if channels.iter().any(|c| !c.is_binary()) {
            return usage("the degraded scheme runs over binary channels");
        }
        let n = sets[0].block_len();
        let transform = PolarTransform::binary(n)?;
        for i in 1..s {
            if !sets[i].is_subset_of(&sets[i - 1]) {
                return usage(format!("information set {i} is not nested in set {}", i - 1));
            }
        }
        let m_usize = m as usize;
        if let Some(i) = sets.iter().position(|a| a.len() % m_usize != 0) {
            return usage(format!("|A^({})| = {} is not a multiple of m = {m}", i + 1, sets[i].len()));
        }
        if frozen.len() != n - sets[0].len() || frozen.iter().any(|&b| b > 1) {
            return usage(format!("{} frozen bits needed", n - sets[0].len()));
        }
        let family = family_for(s, m, kind)?;
        let empty = InformationSet::empty(n);
        let layers = (0..s)
            .map(|j| sets[j].difference(sets.get(j + 1).unwrap_or(&empty)))
            .collect();
        Ok(Self { transform, spec: family.spec(), sets, layers, family, frozen, channels })
    }

    /// Sorts the channels (capacity descending, then Bhattacharyya
    /// ascending, then input order), designs nested sets for them and
    /// uses zero frozen bits. Returns the scheme and the sort order.
    pub fn build(
        channels: &[DiscreteChannel],
        n: usize,
        targets: &[Target],
        how: Construction,
        m: Option<u32>,
        check: DegradationCheck,
    ) -> Result<(Self, Vec<usize>)> {
        if targets.len() != channels.len() {
            return usage("one target per channel is required");
        }
        let order = design_order(channels);
        let sorted: Vec<DiscreteChannel> = order.iter().map(|&i| channels[i].clone()).collect();
        let sorted_targets: Vec<Target> = order.iter().map(|&i| targets[i]).collect();
        let m = m.unwrap_or_else(|| default_degree(channels.len()));
        let sets = monotone_info_sets(&sorted, n, &sorted_targets, how, m as usize, check)?;
        let frozen = vec![0; n - sets[0].len()];
        Ok((Self::new(sorted, sets, m, FamilyKind::Grs, frozen)?, order))
    }

    /// Replaces the default MDS family, e.g. with other evaluation points.
    pub fn with_family(mut self, family: MdsFamily) -> Result<Self> {
        check_family(&family, self.sets.len(), self.spec)?;
        self.spec = family.spec();
        self.family = family;
        Ok(self)
    }

    pub fn num_channels(&self) -> usize {
        self.sets.len()
    }

    pub fn block_len(&self) -> usize {
        self.transform.len()
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn sets(&self) -> &[InformationSet] {
        &self.sets
    }

    /// Indices of layer `j`, `1 <= j <= S`.
    pub fn layer(&self, j: usize) -> &[usize] {
        &self.layers[j - 1]
    }

    pub fn family(&self) -> &MdsFamily {
        &self.family
    }

    pub fn frozen(&self) -> &[u8] {
        &self.frozen
    }

    pub fn channels(&self) -> &[DiscreteChannel] {
        &self.channels
    }

    pub fn message_bits(&self) -> usize {
        self.sets.iter().map(InformationSet::len).sum()
    }

    pub fn rate(&self) -> f64 {
        self.message_bits() as f64 / self.block_len() as f64
    }

    /// Information rows `u[j][s]` for `s < j`, filled in order of codeword,
    /// then layer (largest dimension first), then bit.
    fn split_message(&self, bits: &[u8]) -> Result<Vec<Vec<Vec<u8>>>> {
        if bits.len() != self.message_bits() {
            return usage(format!("{} message bits given, scheme carries {}", bits.len(), self.message_bits()));
        }
        if bits.iter().any(|&b| b > 1) {
            return usage("message bits must be 0 or 1");
        }
        let s = self.num_channels();
        let mut rows: Vec<Vec<Vec<u8>>> =
            (1..=s).map(|j| vec![vec![0; self.layer(j).len()]; s]).collect();
        let mut cursor = 0;
        for c in 0..s {
            for j in (c + 1..=s).rev() {
                let len = self.layer(j).len();
                rows[j - 1][c].copy_from_slice(&bits[cursor..cursor + len]);
                cursor += len;
            }
        }
        Ok(rows)
    }

    /// Completes every column of layer `j` from the rows at `known`.
    fn complete_layer(&self, j: usize, rows: &mut [Vec<u8>], known: &[usize]) -> Result<()> {
        let m = self.spec.degree() as usize;
        let code = self.family.code(j)?;
        let cols = self.layer(j).len() / m;
        for col in 0..cols {
            let pairs = known
                .iter()
                .map(|&c| Ok((c, bits_to_symbols(&rows[c][col * m..(col + 1) * m], &self.spec)?[0])))
                .collect::<Result<Vec<_>>>()?;
            let word = code.complete(&pairs)?;
            for (c, row) in rows.iter_mut().enumerate() {
                if !known.contains(&c) {
                    row[col * m..(col + 1) * m].copy_from_slice(&symbols_to_bits(&[word[c]], &self.spec));
                }
            }
        }
        Ok(())
    }

    fn u_vector(&self, rows: &[Vec<Vec<u8>>], c: usize) -> Vec<Symbol> {
        let mut u = vec![0; self.block_len()];
        for (j, layer) in self.layers.iter().enumerate() {
            for (pos, &i) in layer.iter().enumerate() {
                u[i] = rows[j][c][pos] as Symbol;
            }
        }
        for (i, &b) in self.sets[0].complement().iter().zip(&self.frozen) {
            u[*i] = b as Symbol;
        }
        u
    }

    /// The `u` vectors of all codewords, before the transform.
    pub fn u_vectors(&self, bits: &[u8]) -> Result<Vec<Vec<Symbol>>> {
        let mut rows = self.split_message(bits)?;
        let s = self.num_channels();
        for j in 1..s {
            let known: Vec<usize> = (0..j).collect();
            self.complete_layer(j, &mut rows[j - 1], &known)?;
        }
        Ok((0..s).map(|c| self.u_vector(&rows, c)).collect())
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<Vec<u8>>> {
        self.u_vectors(bits)?
            .into_iter()
            .map(|u| Ok(self.transform.apply(&u)?.into_iter().map(|v| v as u8).collect()))
            .collect()
    }

    pub fn decode(&self, received: &[Vec<usize>], pi: &Permutation) -> Result<Vec<u8>> {
        self.decode_traced(received, pi).map(|(bits, _)| bits)
    }

    pub fn decode_traced(&self, received: &[Vec<usize>], pi: &Permutation) -> Result<(Vec<u8>, Vec<StageTrace>)> {
        let s = self.num_channels();
        let n = self.block_len();
        check_received(&self.channels, received, pi, s, n)?;
        let mut rows: Vec<Vec<Vec<u8>>> =
            (1..=s).map(|j| vec![vec![0; self.layer(j).len()]; s]).collect();
        let mut known: Vec<Vec<usize>> = vec![Vec::new(); s];
        let mut trace = Vec::with_capacity(s);
        for t in 0..s {
            let c = pi.codeword_on(t);
            let info = &self.sets[t];
            let mut template = vec![0 as Symbol; n];
            for (i, &b) in self.sets[0].complement().iter().zip(&self.frozen) {
                template[*i] = b as Symbol;
            }
            for j in 1..=t {
                for (pos, &i) in self.layer(j).iter().enumerate() {
                    template[i] = rows[j - 1][c][pos] as Symbol;
                }
            }
            let frozen: Vec<Symbol> = info.complement().iter().map(|&i| template[i]).collect();
            let mut resolver = StaticFrozen::new(info, &frozen)?;
            let u = sc_decode(&self.transform, info, &self.channels[t], &received[t], &mut resolver)?;
            let mut stage = StageTrace { channel: t, codeword: c, layers: Vec::new() };
            for j in (t + 1..=s).rev() {
                let row: Vec<u8> = self.layer(j).iter().map(|&i| u[i] as u8).collect();
                rows[j - 1][c] = row.clone();
                known[j - 1].push(c);
                stage.layers.push((j, row));
            }
            trace.push(stage);
            self.complete_layer(t + 1, &mut rows[t], &known[t])?;
        }
        let mut bits = Vec::with_capacity(self.message_bits());
        for c in 0..s {
            for j in (c + 1..=s).rev() {
                bits.extend_from_slice(&rows[j - 1][c]);
            }
        }
        Ok((bits, trace))
    }
}

/// Shared core of the two index-synchronous schemes: per-channel sets, the
/// MDS family, and per-index completion.
#[derive(Debug, Clone, PartialEq)]
struct SymbolCore {
    n: usize,
    spec: FieldSpec,
    sets: Vec<InformationSet>,
    family: MdsFamily,
    channels: Vec<DiscreteChannel>,
}

impl SymbolCore {
    fn new(channels: Vec<DiscreteChannel>, sets: Vec<InformationSet>, m: u32, kind: FamilyKind) -> Result<Self> {
        let s = sets.len();
        if s == 0 || channels.len() != s {
            return usage("one information set per channel is required");
        }
        if channels.iter().any(|c| !c.is_binary()) {
            return usage("the parallel schemes run over binary channels");
        }
        let n = sets[0].block_len();
        PolarTransform::binary(n)?;
        if sets.iter().any(|a| a.block_len() != n) {
            return usage("information sets have differing block lengths");
        }
        let family = family_for(s, m, kind)?;
        Ok(Self { n, spec: family.spec(), sets, family, channels })
    }

    fn m(&self) -> usize {
        self.spec.degree() as usize
    }

    fn message_bits(&self) -> usize {
        self.m() * self.sets.iter().map(InformationSet::len).sum::<usize>()
    }

    fn rate(&self) -> f64 {
        self.sets.iter().map(InformationSet::len).sum::<usize>() as f64 / self.n as f64
    }

    /// Codeword symbols `c_s^(k)` for a message, laid out `[s][k]`.
    fn symbols(&self, bits: &[u8]) -> Result<Vec<Vec<Symbol>>> {
        if bits.len() != self.message_bits() {
            return usage(format!("{} message bits given, scheme carries {}", bits.len(), self.message_bits()));
        }
        let s = self.sets.len();
        let m = self.m();
        let mut cursor = 0;
        let mut info: Vec<Vec<Symbol>> = vec![vec![0; self.n]; s];
        for (c, set) in self.sets.iter().enumerate() {
            for &k in set.indices() {
                info[c][k] = bits_to_symbols(&bits[cursor..cursor + m], &self.spec)?[0];
                cursor += m;
            }
        }
        let mut out = vec![vec![0; self.n]; s];
        for k in 0..self.n {
            let known: Vec<(usize, Symbol)> =
                (0..s).filter(|&c| self.sets[c].contains(k)).map(|c| (c, info[c][k])).collect();
            let word = self.family.complete(&known)?;
            for c in 0..s {
                out[c][k] = word[c];
            }
        }
        Ok(out)
    }

    fn message(&self, symbols: &[Vec<Symbol>]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(self.message_bits());
        for (c, set) in self.sets.iter().enumerate() {
            for &k in set.indices() {
                bits.extend(symbols_to_bits(&[symbols[c][k]], &self.spec));
            }
        }
        bits
    }

    /// Index-synchronous decoding. `step` decides index `k` on channel `t`
    /// (returning its symbol), or injects a known symbol when given one.
    fn decode_with<D>(&self, pi: &Permutation, decoders: &mut [D], step: impl Fn(&mut D, usize, Option<Symbol>) -> Result<Symbol>) -> Result<Vec<u8>> {
        let s = self.sets.len();
        let mut symbols = vec![vec![0; self.n]; s];
        for k in 0..self.n {
            let mut known = Vec::with_capacity(s);
            for t in 0..s {
                if self.sets[t].contains(k) {
                    let sym = step(&mut decoders[t], k, None)?;
                    known.push((pi.codeword_on(t), sym));
                }
            }
            let word = self.family.complete(&known)?;
            for t in 0..s {
                if !self.sets[t].contains(k) {
                    step(&mut decoders[t], k, Some(word[pi.codeword_on(t)]))?;
                }
            }
            for c in 0..s {
                symbols[c][k] = word[c];
            }
        }
        Ok(self.message(&symbols))
    }
}

fn build_sets(channels: &[DiscreteChannel], n: usize, targets: &[Target], how: Construction) -> Result<Vec<InformationSet>> {
    if targets.len() != channels.len() {
        return usage("one target per channel is required");
    }
    channels.iter().zip(targets).map(|(ch, &t)| build_info_set(ch, n, t, how)).collect()
}

/// `m` binary polar codes per channel sharing one information set; bit `l`
/// (most significant first) of every index symbol belongs to code `l`, sent
/// as uses `l·n .. (l+1)·n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedScheme {
    core: SymbolCore,
    transform: PolarTransform,
}

impl InterleavedScheme {
    pub fn new(channels: Vec<DiscreteChannel>, sets: Vec<InformationSet>, m: u32, kind: FamilyKind) -> Result<Self> {
        let core = SymbolCore::new(channels, sets, m, kind)?;
        let transform = PolarTransform::binary(core.n)?;
        Ok(Self { core, transform })
    }

    pub fn with_family(mut self, family: MdsFamily) -> Result<Self> {
        check_family(&family, self.core.sets.len(), self.core.spec)?;
        self.core.spec = family.spec();
        self.core.family = family;
        Ok(self)
    }

    pub fn build(channels: &[DiscreteChannel], n: usize, targets: &[Target], how: Construction, m: Option<u32>) -> Result<Self> {
        let sets = build_sets(channels, n, targets, how)?;
        let m = m.unwrap_or_else(|| default_degree(channels.len()));
        Self::new(channels.to_vec(), sets, m, FamilyKind::Grs)
    }

    pub fn num_channels(&self) -> usize {
        self.core.sets.len()
    }

    pub fn block_len(&self) -> usize {
        self.core.n
    }

    pub fn spec(&self) -> FieldSpec {
        self.core.spec
    }

    pub fn sets(&self) -> &[InformationSet] {
        &self.core.sets
    }

    pub fn family(&self) -> &MdsFamily {
        &self.core.family
    }

    pub fn channels(&self) -> &[DiscreteChannel] {
        &self.core.channels
    }

    pub fn message_bits(&self) -> usize {
        self.core.message_bits()
    }

    pub fn rate(&self) -> f64 {
        self.core.rate()
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<Vec<u8>>> {
        let symbols = self.core.symbols(bits)?;
        let m = self.core.m();
        let n = self.core.n;
        Ok(symbols
            .iter()
            .map(|row| {
                let mut out = Vec::with_capacity(m * n);
                for l in 0..m {
                    let mut plane: Vec<Symbol> = row.iter().map(|&v| (v >> (m - 1 - l)) & 1).collect();
                    self.transform.apply_in_place(&mut plane);
                    out.extend(plane.into_iter().map(|b| b as u8));
                }
                out
            })
            .collect())
    }

    pub fn decode(&self, received: &[Vec<usize>], pi: &Permutation) -> Result<Vec<u8>> {
        let core = &self.core;
        let (m, n) = (core.m(), core.n);
        check_received(&core.channels, received, pi, core.sets.len(), m * n)?;
        let mut decoders = (0..core.sets.len())
            .map(|t| {
                (0..m)
                    .map(|l| {
                        ScState::from_outputs(&self.transform, &core.sets[t], &core.channels[t], &received[t][l * n..(l + 1) * n])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        core.decode_with(pi, &mut decoders, |planes, k, frozen| {
            let mut sym = 0;
            for (l, st) in planes.iter_mut().enumerate() {
                let bit = frozen.map(|f| (f >> (m - 1 - l)) & 1);
                sym = (sym << 1) | st.step_at(k, bit)?;
            }
            Ok(sym)
        })
    }
}

/// One GF(2^m) polar code per channel. Each code symbol goes through `m`
/// consecutive uses of the binary channel, most significant bit first.
#[derive(Debug, Clone, PartialEq)]
pub struct NonBinaryScheme {
    core: SymbolCore,
    transform: PolarTransform,
}

impl NonBinaryScheme {
    pub fn new(channels: Vec<DiscreteChannel>, sets: Vec<InformationSet>, m: u32, kind: FamilyKind) -> Result<Self> {
        if m > 4 {
            return usage(format!("the non-binary scheme supports m <= 4, got {m}"));
        }
        let core = SymbolCore::new(channels, sets, m, kind)?;
        let transform = PolarTransform::new(core.n, core.spec)?;
        Ok(Self { core, transform })
    }

    pub fn with_family(mut self, family: MdsFamily) -> Result<Self> {
        check_family(&family, self.core.sets.len(), self.core.spec)?;
        self.transform = PolarTransform::new(self.core.n, family.spec())?;
        self.core.spec = family.spec();
        self.core.family = family;
        Ok(self)
    }

    /// With the kernel `[[1, 0], [1, 1]]` the bit planes of a GF(2^m) code
    /// polarize independently, so each super-channel index is ranked by the
    /// binary split estimate of its channel.
    pub fn build(channels: &[DiscreteChannel], n: usize, targets: &[Target], how: Construction, m: Option<u32>) -> Result<Self> {
        let sets = build_sets(channels, n, targets, how)?;
        let m = m.unwrap_or_else(|| default_degree(channels.len()));
        Self::new(channels.to_vec(), sets, m, FamilyKind::Grs)
    }

    pub fn num_channels(&self) -> usize {
        self.core.sets.len()
    }

    pub fn block_len(&self) -> usize {
        self.core.n
    }

    pub fn spec(&self) -> FieldSpec {
        self.core.spec
    }

    pub fn sets(&self) -> &[InformationSet] {
        &self.core.sets
    }

    pub fn family(&self) -> &MdsFamily {
        &self.core.family
    }

    pub fn channels(&self) -> &[DiscreteChannel] {
        &self.core.channels
    }

    pub fn message_bits(&self) -> usize {
        self.core.message_bits()
    }

    pub fn rate(&self) -> f64 {
        self.core.rate()
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<Vec<u8>>> {
        let symbols = self.core.symbols(bits)?;
        symbols
            .into_iter()
            .map(|mut row| {
                self.transform.apply_in_place(&mut row);
                Ok(symbols_to_bits(&row, &self.core.spec))
            })
            .collect()
    }

    pub fn decode(&self, received: &[Vec<usize>], pi: &Permutation) -> Result<Vec<u8>> {
        let core = &self.core;
        let (m, n) = (core.m(), core.n);
        check_received(&core.channels, received, pi, core.sets.len(), m * n)?;
        let q = 1usize << m;
        let mut decoders = (0..core.sets.len())
            .map(|t| {
                let ch = &core.channels[t];
                let mut lik = Vec::with_capacity(n * q);
                for k in 0..n {
                    let ys = &received[t][k * m..(k + 1) * m];
                    if ys.iter().any(|&y| y >= ch.output_size()) {
                        return usage("output letter outside the channel alphabet");
                    }
                    lik.extend((0..q).map(|x| {
                        (0..m).map(|i| ch.prob((x >> (m - 1 - i)) & 1, ys[i])).product::<f64>()
                    }));
                }
                ScState::new(&self.transform, &core.sets[t], lik)
            })
            .collect::<Result<Vec<_>>>()?;
        core.decode_with(pi, &mut decoders, |st, k, frozen| st.step_at(k, frozen))
    }
}

/// Any of the three schemes.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Degraded(DegradedScheme),
    Interleaved(InterleavedScheme),
    NonBinary(NonBinaryScheme),
}

impl Scheme {
    pub fn kind(&self) -> SchemeKind {
        match self {
            Scheme::Degraded(_) => SchemeKind::Degraded,
            Scheme::Interleaved(_) => SchemeKind::Interleaved,
            Scheme::NonBinary(_) => SchemeKind::NonBinary,
        }
    }

    pub fn num_channels(&self) -> usize {
        match self {
            Scheme::Degraded(s) => s.num_channels(),
            Scheme::Interleaved(s) => s.num_channels(),
            Scheme::NonBinary(s) => s.num_channels(),
        }
    }

    pub fn block_len(&self) -> usize {
        match self {
            Scheme::Degraded(s) => s.block_len(),
            Scheme::Interleaved(s) => s.block_len(),
            Scheme::NonBinary(s) => s.block_len(),
        }
    }

    pub fn spec(&self) -> FieldSpec {
        match self {
            Scheme::Degraded(s) => s.spec(),
            Scheme::Interleaved(s) => s.spec(),
            Scheme::NonBinary(s) => s.spec(),
        }
    }

    /// Binary channel uses per codeword.
    pub fn codeword_len(&self) -> usize {
        match self {
            Scheme::Degraded(s) => s.block_len(),
            Scheme::Interleaved(s) => s.block_len() * s.spec().degree() as usize,
            Scheme::NonBinary(s) => s.block_len() * s.spec().degree() as usize,
        }
    }

    pub fn sets(&self) -> &[InformationSet] {
        match self {
            Scheme::Degraded(s) => s.sets(),
            Scheme::Interleaved(s) => s.sets(),
            Scheme::NonBinary(s) => s.sets(),
        }
    }

    pub fn family(&self) -> &MdsFamily {
        match self {
            Scheme::Degraded(s) => s.family(),
            Scheme::Interleaved(s) => s.family(),
            Scheme::NonBinary(s) => s.family(),
        }
    }

    pub fn channels(&self) -> &[DiscreteChannel] {
        match self {
            Scheme::Degraded(s) => s.channels(),
            Scheme::Interleaved(s) => s.channels(),
            Scheme::NonBinary(s) => s.channels(),
        }
    }

    pub fn message_bits(&self) -> usize {
        match self {
            Scheme::Degraded(s) => s.message_bits(),
            Scheme::Interleaved(s) => s.message_bits(),
            Scheme::NonBinary(s) => s.message_bits(),
        }
    }

    /// Bits per channel use summed over the channels, `Σ_s |A^(s)| / n`.
    pub fn rate(&self) -> f64 {
        match self {
            Scheme::Degraded(s) => s.rate(),
            Scheme::Interleaved(s) => s.rate(),
            Scheme::NonBinary(s) => s.rate(),
        }
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<Vec<u8>>> {
        match self {
            Scheme::Degraded(s) => s.encode(bits),
            Scheme::Interleaved(s) => s.encode(bits),
            Scheme::NonBinary(s) => s.encode(bits),
        }
    }

    /// `received[t]` is the output of channel `t`, which carried codeword `pi(t)`.
    pub fn decode(&self, received: &[Vec<usize>], pi: &Permutation) -> Result<Vec<u8>> {
        match self {
            Scheme::Degraded(s) => s.decode(received, pi),
            Scheme::Interleaved(s) => s.decode(received, pi),
            Scheme::NonBinary(s) => s.decode(received, pi),
        }
    }
}

/// Rate of a scheme, `(1/n) Σ_s |A^(s)|`.
pub fn scheme_rate(scheme: &Scheme) -> f64 {
    scheme.rate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::monotone_from_estimates;

    fn noiseless(s: usize) -> Vec<DiscreteChannel> {
        vec![DiscreteChannel::noiseless(2).unwrap(); s]
    }

    fn pattern(len: usize, seed: u64) -> Vec<u8> {
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        (0..len)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                (x & 1) as u8
            })
            .collect()
    }

    fn transmit_clean(cws: &[Vec<u8>], pi: &Permutation) -> Vec<Vec<usize>> {
        (0..cws.len()).map(|t| cws[pi.codeword_on(t)].iter().map(|&b| b as usize).collect()).collect()
    }

    fn nested(n: usize, sizes: &[usize]) -> Vec<InformationSet> {
        let z: Vec<f64> = crate::polar::bec_split_bhattacharyya(0.5, n).unwrap();
        let targets: Vec<Target> = sizes.iter().map(|&k| Target::Rate(k as f64 / n as f64)).collect();
        monotone_from_estimates(&vec![z; sizes.len()], &targets, 1).unwrap()
    }

    #[test]
    fn permutations() {
        assert_eq!(Permutation::all(3).len(), 6);
        assert_eq!(Permutation::all(4).len(), 24);
        assert_eq!(Permutation::all(1), vec![Permutation::identity(1)]);
        let p = Permutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(p.codeword_on(0), 1);
        assert_eq!(p.channel_of(0), 2);
        assert_eq!(Permutation::parse(&p.label()).unwrap(), p);
        assert!(Permutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn degraded_zero_and_layer_structure() {
        let sets = nested(16, &[12, 8, 4]);
        let scheme = DegradedScheme::new(noiseless(3), sets, 2, FamilyKind::ParityCheck, vec![0; 4])
            .unwrap();
        assert_eq!(scheme.encode(&vec![0; 24]).unwrap(), vec![vec![0; 16]; 3]);
        let bits = pattern(24, 3);
        let u = scheme.u_vectors(&bits).unwrap();
        // the outermost layer repeats, the middle layer is a parity check
        for &i in scheme.layer(1) {
            assert!(u[0][i] == u[1][i] && u[1][i] == u[2][i]);
        }
        for &i in scheme.layer(2) {
            assert_eq!(u[2][i], u[0][i] ^ u[1][i]);
        }
        assert!(matches!(scheme.encode(&bits[..23]), Err(Error::Usage(_))));
    }

    #[test]
    fn degraded_two_channels_matches_hand_encoder() {
        let sets = nested(8, &[6, 2]);
        let scheme = DegradedScheme::new(noiseless(2), sets.clone(), 2, FamilyKind::Grs, vec![0; 2]).unwrap();
        let t = PolarTransform::binary(8).unwrap();
        let bits = pattern(8, 9);
        // codeword 0: its two inner bits then the shared outer bits; codeword 1: its inner two
        let inner = sets[1].indices();
        let outer = sets[0].difference(&sets[1]);
        let mut u0 = vec![0u32; 8];
        let mut u1 = vec![0u32; 8];
        for (p, &i) in inner.iter().enumerate() {
            u0[i] = bits[p] as u32;
            u1[i] = bits[6 + p] as u32;
        }
        for (p, &i) in outer.iter().enumerate() {
            u0[i] = bits[2 + p] as u32;
            u1[i] = bits[2 + p] as u32;
        }
        let expect: Vec<Vec<u8>> =
            [u0, u1].iter().map(|u| t.apply(u).unwrap().iter().map(|&v| v as u8).collect()).collect();
        assert_eq!(scheme.encode(&bits).unwrap(), expect);
    }

    #[test]
    fn degraded_round_trips_all_permutations() {
        for (sizes, m) in [(vec![8usize], 1u32), (vec![8, 4], 2), (vec![12, 6, 2], 2), (vec![12, 9, 6, 3], 3), (vec![8, 4, 4], 2)] {
            let s = sizes.len();
            let sets = nested(16, &sizes);
            let frozen = pattern(16 - sizes[0], 5);
            for kind in [FamilyKind::Grs, FamilyKind::ParityCheck] {
                let scheme = DegradedScheme::new(noiseless(s), sets.clone(), m, kind, frozen.clone()).unwrap();
                let bits = pattern(scheme.message_bits(), s as u64);
                let cws = scheme.encode(&bits).unwrap();
                for pi in Permutation::all(s) {
                    let (out, trace) = scheme.decode_traced(&transmit_clean(&cws, &pi), &pi).unwrap();
                    assert_eq!(out, bits, "sizes {sizes:?} pi {pi:?}");
                    // every decoded row is the one the encoder placed there
                    let u = scheme.u_vectors(&bits).unwrap();
                    for stage in &trace {
                        for (j, row) in &stage.layers {
                            let placed: Vec<u8> = scheme.layer(*j).iter().map(|&i| u[stage.codeword][i] as u8).collect();
                            assert_eq!(row, &placed);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degraded_rejects_bad_layouts() {
        let sets = nested(16, &[8, 5]);
        assert!(DegradedScheme::new(noiseless(2), sets, 2, FamilyKind::Grs, vec![0; 8]).is_err());
        let mut sets = nested(16, &[8, 4]);
        sets.swap(0, 1);
        assert!(DegradedScheme::new(noiseless(2), sets, 2, FamilyKind::Grs, vec![0; 12]).is_err());
        let sets = nested(16, &[8, 4, 2]);
        assert!(DegradedScheme::new(noiseless(3), sets, 1, FamilyKind::Grs, vec![0; 8]).is_err());
    }

    #[test]
    fn equal_channels_skip_the_cross_layer() {
        let bec = DiscreteChannel::bec(0.3).unwrap();
        let (scheme, _) = DegradedScheme::build(
            &[bec.clone(), bec.clone()],
            32,
            &[Target::Rate(0.5); 2],
            Construction::Auto,
            None,
            DegradationCheck::Verify,
        )
        .unwrap();
        assert!(scheme.layer(1).is_empty());
        assert_eq!(scheme.sets()[0], scheme.sets()[1]);
        let three = nested(16, &[12, 6, 6]);
        let scheme = DegradedScheme::new(noiseless(3), three, 2, FamilyKind::Grs, vec![0; 4]).unwrap();
        assert!(scheme.layer(2).is_empty());
        let bits = pattern(scheme.message_bits(), 1);
        let cws = scheme.encode(&bits).unwrap();
        for pi in Permutation::all(3) {
            assert_eq!(scheme.decode(&transmit_clean(&cws, &pi), &pi).unwrap(), bits);
        }
    }

    #[test]
    fn build_sorts_and_checks_degradation() {
        let good = DiscreteChannel::bec(0.1).unwrap();
        let bad = DiscreteChannel::bec(0.5).unwrap();
        let (scheme, order) = DegradedScheme::build(
            &[bad.clone(), good.clone()],
            64,
            &[Target::Rate(0.4), Target::Rate(0.8)],
            Construction::Auto,
            None,
            DegradationCheck::Verify,
        )
        .unwrap();
        assert_eq!(order, vec![1, 0]);
        assert_eq!(scheme.channels()[0], good);
        assert!(scheme.sets().iter().all(|a| a.len() % 2 == 0));
        let bsc = DiscreteChannel::bsc(0.11002).unwrap();
        let err = DegradedScheme::build(&[bsc, bad], 16, &[Target::Rate(0.25); 2], Construction::Auto, None, DegradationCheck::Verify);
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn encoder_is_linear() {
        let sets = nested(16, &[12, 6, 2]);
        let scheme = DegradedScheme::new(noiseless(3), sets, 2, FamilyKind::Grs, vec![0; 4]).unwrap();
        let a = pattern(20, 1);
        let b = pattern(20, 2);
        let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let (ea, eb, eab) = (scheme.encode(&a).unwrap(), scheme.encode(&b).unwrap(), scheme.encode(&ab).unwrap());
        for s in 0..3 {
            let sum: Vec<u8> = ea[s].iter().zip(&eb[s]).map(|(x, y)| x ^ y).collect();
            assert_eq!(sum, eab[s]);
        }
        let chans = noiseless(2);
        let nb = NonBinaryScheme::build(&chans, 8, &[Target::Rate(0.5), Target::Rate(0.25)], Construction::Auto, None).unwrap();
        let a = pattern(nb.message_bits(), 3);
        let b = pattern(nb.message_bits(), 4);
        let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let (ea, eb, eab) = (nb.encode(&a).unwrap(), nb.encode(&b).unwrap(), nb.encode(&ab).unwrap());
        for s in 0..2 {
            let sum: Vec<u8> = ea[s].iter().zip(&eb[s]).map(|(x, y)| x ^ y).collect();
            assert_eq!(sum, eab[s]);
        }
    }

    #[test]
    fn symbol_schemes_round_trip() {
        let bsc = DiscreteChannel::bsc(0.11002).unwrap();
        let bec = DiscreteChannel::bec(0.5).unwrap();
        let pair = [bsc, bec];
        for n in [4usize, 8, 16] {
            let targets = [Target::Rate(0.5), Target::Rate(0.5)];
            let il = InterleavedScheme::build(&pair, n, &targets, Construction::Auto, None).unwrap();
            let nb = NonBinaryScheme::build(&pair, n, &targets, Construction::Auto, None).unwrap();
            let clean_il = InterleavedScheme::new(noiseless(2), il.sets().to_vec(), 2, FamilyKind::Grs).unwrap();
            let clean_nb = NonBinaryScheme::new(noiseless(2), nb.sets().to_vec(), 2, FamilyKind::Grs).unwrap();
            assert_eq!(il.sets(), nb.sets());
            for scheme in [Scheme::Interleaved(clean_il), Scheme::NonBinary(clean_nb)] {
                assert_eq!(scheme.encode(&vec![0; scheme.message_bits()]).unwrap(), vec![vec![0; 2 * n]; 2]);
                let bits = pattern(scheme.message_bits(), n as u64);
                let cws = scheme.encode(&bits).unwrap();
                for pi in Permutation::all(2) {
                    assert_eq!(scheme.decode(&transmit_clean(&cws, &pi), &pi).unwrap(), bits);
                }
            }
        }
        for s in [3usize, 4] {
            let sets: Vec<InformationSet> = (0..s)
                .map(|c| InformationSet::new(8, (0..8).filter(|k| (k + c) % 3 != 0).collect()).unwrap())
                .collect();
            let m = default_degree(s);
            for scheme in [
                Scheme::Interleaved(InterleavedScheme::new(noiseless(s), sets.clone(), m, FamilyKind::Grs).unwrap()),
                Scheme::NonBinary(NonBinaryScheme::new(noiseless(s), sets.clone(), m, FamilyKind::Grs).unwrap()),
            ] {
                let bits = pattern(scheme.message_bits(), 11);
                let cws = scheme.encode(&bits).unwrap();
                for pi in Permutation::all(s) {
                    assert_eq!(scheme.decode(&transmit_clean(&cws, &pi), &pi).unwrap(), bits);
                }
            }
        }
    }

    #[test]
    fn nonbinary_with_m1_is_a_plain_polar_code() {
        let sets = vec![InformationSet::new(8, vec![3, 5, 6, 7]).unwrap()];
        let nb = NonBinaryScheme::new(noiseless(1), sets.clone(), 1, FamilyKind::Grs).unwrap();
        let il = InterleavedScheme::new(noiseless(1), sets, 1, FamilyKind::Grs).unwrap();
        let bits = pattern(4, 8);
        assert_eq!(nb.encode(&bits).unwrap(), il.encode(&bits).unwrap());
    }

    #[test]
    fn rates() {
        let empty = vec![InformationSet::empty(8); 2];
        let full = vec![InformationSet::full(8); 2];
        let s = Scheme::Interleaved(InterleavedScheme::new(noiseless(2), empty, 2, FamilyKind::Grs).unwrap());
        assert_eq!(scheme_rate(&s), 0.0);
        let s = Scheme::NonBinary(NonBinaryScheme::new(noiseless(2), full.clone(), 2, FamilyKind::Grs).unwrap());
        assert_eq!(scheme_rate(&s), 2.0);
        let s = Scheme::Degraded(DegradedScheme::new(noiseless(2), full, 2, FamilyKind::Grs, vec![]).unwrap());
        assert_eq!(scheme_rate(&s), 2.0);
    }
}

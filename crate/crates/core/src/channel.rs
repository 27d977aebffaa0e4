//! Finite-alphabet memoryless channels and the measurements run on them.
//!
//! A [`DiscreteChannel`] is a dense row-stochastic matrix. Binary symmetric
//! channels additionally have a compact form, [`BinaryClasses`], which lists
//! the channel as a mixture of BSCs and is what tree-channel synthesis
//! operates on.

use std::fmt::Write as _;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{usage, Error, Result};

/// Allowed deviation of a row sum from one.
pub const ROW_TOL: f64 = 1e-12;
/// Largest output alphabet a channel operation will materialize.
pub const DEFAULT_OUTPUT_CAP: usize = 1 << 20;
/// Maximum residual accepted for a degradation witness.
pub const DEGRADATION_TOL: f64 = 1e-9;
/// Likelihood columns that agree to this (absolute) tolerance are treated as
/// equal by the symmetry search.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    q: usize,
    outputs: usize,
    p: Vec<f64>,
}

impl DiscreteChannel {
    /// Builds a channel from `q` rows of `outputs` probabilities. Rows must
    /// sum to one within [`ROW_TOL`]; they are renormalized exactly.
    pub fn new(q: usize, outputs: usize, probs: Vec<f64>) -> Result<Self> {
        if q == 0 || outputs == 0 {
            return usage("channel alphabets must be nonempty");
        }
        if probs.len() != q * outputs {
            return usage(format!("expected {} probabilities, got {}", q * outputs, probs.len()));
        }
        if let Some(v) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return usage(format!("transition probability {v} is not a nonnegative number"));
        }
        for (x, row) in probs.chunks(outputs).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return usage(format!("row {x} sums to {s}, not 1"));
            }
        }
        Ok(Self::normalized(q, outputs, probs))
    }

    /// Internal constructor for matrices computed by this crate.
    pub(crate) fn normalized(q: usize, outputs: usize, mut p: Vec<f64>) -> Self {
        for row in p.chunks_mut(outputs) {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Self { q, outputs, p }
    }

    pub fn bec(epsilon: f64) -> Result<Self> {
        check_probability("erasure probability", epsilon)?;
        // outputs: 0, 1, erasure
        Ok(Self::normalized(2, 3, vec![1.0 - epsilon, 0.0, epsilon, 0.0, 1.0 - epsilon, epsilon]))
    }

    pub fn bsc(p: f64) -> Result<Self> {
        check_probability("crossover probability", p)?;
        Ok(Self::normalized(2, 2, vec![1.0 - p, p, p, 1.0 - p]))
    }

    /// q-ary symmetric channel: correct with probability `1 - p`, otherwise
    /// uniform over the `q - 1` wrong symbols.
    pub fn qsc(q: usize, p: f64) -> Result<Self> {
        check_probability("symbol error probability", p)?;
        if q < 2 {
            return usage("a q-ary symmetric channel needs q >= 2");
        }
        let off = p / (q - 1) as f64;
        let probs = (0..q * q).map(|i| if i / q == i % q { 1.0 - p } else { off }).collect();
        Ok(Self::normalized(q, q, probs))
    }

    pub fn noiseless(q: usize) -> Result<Self> {
        if q == 0 {
            return usage("alphabet must be nonempty");
        }
        let probs = (0..q * q).map(|i| if i / q == i % q { 1.0 } else { 0.0 }).collect();
        Ok(Self::normalized(q, q, probs))
    }

    pub fn input_size(&self) -> usize {
        self.q
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    pub fn is_binary(&self) -> bool {
        self.q == 2
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.p[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.p
    }

    /// Binary: `Σ_y √(p(y|0) p(y|1))`. For larger inputs the maximum of the
    /// same sum over all pairs of distinct inputs.
    pub fn bhattacharyya(&self) -> f64 {
        let mut best: f64 = 0.0;
        for a in 0..self.q {
            for b in a + 1..self.q {
                let z: f64 = self
                    .row(a)
                    .iter()
                    .zip(self.row(b))
                    .map(|(u, v)| (u * v).sqrt())
                    .sum();
                best = best.max(z);
            }
        }
        best.min(1.0)
    }

    /// Mutual information in bits under the uniform input distribution.
    pub fn capacity_uniform(&self) -> f64 {
        let qf = self.q as f64;
        let mut info = 0.0;
        for y in 0..self.outputs {
            let mean: f64 = (0..self.q).map(|x| self.prob(x, y)).sum::<f64>() / qf;
            for x in 0..self.q {
                let v = self.prob(x, y);
                if v > 0.0 {
                    info += v / qf * (v / mean).log2();
                }
            }
        }
        info.max(0.0)
    }

    /// `m` independent uses of a binary channel viewed as a single channel
    /// with input alphabet `2^m`. The most significant bit of the input goes
    /// through the first use; the first use's output is the most significant
    /// digit of the output index.
    pub fn product_power(&self, m: u32) -> Result<Self> {
        self.product_power_capped(m, DEFAULT_OUTPUT_CAP)
    }

    pub fn product_power_capped(&self, m: u32, cap: usize) -> Result<Self> {
        if !self.is_binary() {
            return usage("product_power needs a binary-input channel");
        }
        if m == 0 || m > 16 {
            return usage(format!("power {m} outside 1..=16"));
        }
        let outs = checked_pow(self.outputs, m as usize)
            .filter(|&o| o <= cap)
            .ok_or_else(|| {
                Error::Resource(format!("{}^{m} outputs exceeds the cap of {cap}", self.outputs))
            })?;
        let q = 1usize << m;
        let mut p = vec![0.0; q * outs];
        for x in 0..q {
            for y in 0..outs {
                let mut v = 1.0;
                let mut rest = y;
                for i in (0..m).rev() {
                    let yi = rest % self.outputs;
                    rest /= self.outputs;
                    let bit = (x >> (m - 1 - i)) & 1;
                    v *= self.prob(bit, yi);
                }
                p[x * outs + y] = v;
            }
        }
        Ok(Self::normalized(q, outs, p))
    }

    /// Merges outputs whose likelihood pairs agree within `tol`, after
    /// folding each output onto its symmetric class. The result lists every
    /// class as a pair of mirrored outputs (or one output for a useless
    /// class). With `tol = 0` only exactly equivalent outputs merge and the
    /// capacity and Bhattacharyya parameter are preserved. In general both
    /// only move in the degraded direction and by at most `h2(tol)` and
    /// `2√tol` respectively. Only meaningful for symmetric binary channels.
    pub fn merge_outputs(&self, tol: f64) -> Result<Self> {
        let classes = BinaryClasses::from_channel(self)?;
        Ok(classes.merge(tol).to_channel())
    }

    /// Serializes as the first line `q outputs` and then one row per input.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.q, self.outputs);
        for x in 0..self.q {
            let row: Vec<String> = self.row(x).iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let mut dim = |what: &str| -> Result<usize> {
            let t = tokens.next().ok_or_else(|| Error::Parse(format!("missing {what}")))?;
            t.parse().map_err(|_| Error::Parse(format!("bad {what} '{t}'")))
        };
        let q = dim("input size")?;
        let outputs = dim("output size")?;
        let probs = tokens
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad probability '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(q, outputs, probs).map_err(|e| match e {
            Error::Usage(m) => Error::Parse(m),
            other => other,
        })
    }
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return usage(format!("{what} {p} outside [0, 1]"));
    }
    Ok(())
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// A row-stochastic `D` with `P2 = P1·D`, plus the worst entry of
/// `|P1·D - P2|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Degradation {
    pub rows: usize,
    pub cols: usize,
    pub d: Vec<f64>,
    pub residual: f64,
}

impl Degradation {
    pub fn entry(&self, y1: usize, y2: usize) -> f64 {
        self.d[y1 * self.cols + y2]
    }
}

/// Looks for `D` with `p2 = p1·D` by linear programming. `None` means no
/// witness exists within [`DEGRADATION_TOL`].
pub fn is_degraded(p1: &DiscreteChannel, p2: &DiscreteChannel) -> Result<Option<Degradation>> {
    if p1.q != p2.q {
        return usage(format!("input sizes differ: {} vs {}", p1.q, p2.q));
    }
    let (n1, n2, q) = (p1.outputs, p2.outputs, p1.q);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let d: Vec<_> = (0..n1 * n2).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for y1 in 0..n1 {
        let row: Vec<_> = (0..n2).map(|y2| (d[y1 * n2 + y2], 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 1.0);
    }
    for x in 0..q {
        for y2 in 0..n2 {
            let plus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let minus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let mut terms: Vec<_> = (0..n1)
                .filter(|&y1| p1.prob(x, y1) != 0.0)
                .map(|y1| (d[y1 * n2 + y2], p1.prob(x, y1)))
                .collect();
            terms.push((plus, -1.0));
            terms.push((minus, 1.0));
            lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, p2.prob(x, y2));
        }
    }
    let solution = match lp.solve() {
        Ok(outcome) => match outcome.into_solution() {
            Ok(s) => s,
            Err(_) => return Err(Error::Resource("degradation LP interrupted".into())),
        },
        Err(microlp::Error::Infeasible) => return Ok(None),
        Err(e) => return Err(Error::Resource(format!("degradation LP failed: {e}"))),
    };
    let mut dm: Vec<f64> = d.iter().map(|&v| solution.var_value(v).max(0.0)).collect();
    for row in dm.chunks_mut(n2) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / n2 as f64);
        }
    }
    let mut residual: f64 = 0.0;
    for x in 0..q {
        for y2 in 0..n2 {
            let v: f64 = (0..n1).map(|y1| p1.prob(x, y1) * dm[y1 * n2 + y2]).sum();
            residual = residual.max((v - p2.prob(x, y2)).abs());
        }
    }
    if residual > DEGRADATION_TOL {
        return Ok(None);
    }
    Ok(Some(Degradation { rows: n1, cols: n2, d: dm, residual }))
}

/// Output maps `T(·, d)` for every input difference `d`; `maps[0]` is the
/// identity and for a binary channel `maps[1]` is the involution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryWitness {
    pub maps: Vec<Vec<usize>>,
}

impl SymmetryWitness {
    /// Checks `p(y|x) = p(T(y, x ⊕ x')|x')` for every `x, x', y`, and that
    /// each map is a bijection (an involution in the binary case).
    pub fn verify(&self, ch: &DiscreteChannel, tol: f64) -> bool {
        let q = ch.input_size();
        let outs = ch.output_size();
        if self.maps.len() != q || self.maps.iter().any(|m| m.len() != outs) {
            return false;
        }
        for map in &self.maps {
            let mut seen = vec![false; outs];
            for &t in map {
                if t >= outs || seen[t] {
                    return false;
                }
                seen[t] = true;
            }
        }
        if q == 2 && (0..outs).any(|y| self.maps[1][self.maps[1][y]] != y) {
            return false;
        }
        for x1 in 0..q {
            for x2 in 0..q {
                let map = &self.maps[x1 ^ x2];
                for y in 0..outs {
                    if (ch.prob(x1, y) - ch.prob(x2, map[y])).abs() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Searches for a symmetry witness. Inputs are labelled by field elements
/// of characteristic two, so the input difference is XOR and `q` must be a
/// power of two.
pub fn check_symmetry(ch: &DiscreteChannel) -> Option<SymmetryWitness> {
    let q = ch.input_size();
    if !q.is_power_of_two() {
        return None;
    }
    let outs = ch.output_size();
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| (u - v).abs() <= SYMMETRY_TOL);
    let column = |y: usize| -> Vec<f64> { (0..q).map(|x| ch.prob(x, y)).collect() };
    let columns: Vec<Vec<f64>> = (0..outs).map(column).collect();
    let mut maps = vec![(0..outs).collect::<Vec<_>>()];
    for d in 1..q {
        let mut map = vec![usize::MAX; outs];
        let mut used = vec![false; outs];
        for y in 0..outs {
            if map[y] != usize::MAX {
                continue;
            }
            // T(y, d) must have column c'(x ⊕ d) = c(x).
            let target: Vec<f64> = (0..q).map(|x| columns[y][x ^ d]).collect();
            let pick = if close(&target, &columns[y]) && !used[y] {
                Some(y)
            } else {
                (0..outs).find(|&z| !used[z] && map[z] == usize::MAX && close(&target, &columns[z]))
            }?;
            map[y] = pick;
            used[pick] = true;
            // the relation is symmetric, so pair the two outputs both ways
            if pick != y {
                map[pick] = y;
                used[y] = true;
            }
        }
        maps.push(map);
    }
    let witness = SymmetryWitness { maps };
    witness.verify(ch, 1e-9).then_some(witness)
}

/// A binary symmetric channel as a mixture of BSCs: class `i` is used with
/// probability `weights[i]` and is correct with probability `thetas[i]`,
/// where `0.5 <= theta <= 1`. Classes are kept sorted by `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryClasses {
    thetas: Vec<f64>,
    weights: Vec<f64>,
}

/// `θ` values this close are always treated as identical.
const THETA_EPS: f64 = 1e-15;

impl BinaryClasses {
    pub fn from_channel(ch: &DiscreteChannel) -> Result<Self> {
        if !ch.is_binary() {
            return usage("output classes are defined for binary-input channels only");
        }
        let pairs = (0..ch.output_size()).filter_map(|y| {
            let (a, b) = (ch.prob(0, y), ch.prob(1, y));
            let w = a + b;
            (w > 0.0).then(|| (a.max(b) / w, w / 2.0))
        });
        Ok(Self::from_pairs(pairs).merge(0.0))
    }

    /// Builds from `(theta, weight)` pairs; thetas below one half are folded.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut v: Vec<(f64, f64)> = pairs
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|(t, w)| (t.max(1.0 - t).clamp(0.5, 1.0), w))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = v.iter().map(|p| p.1).sum();
        Self {
            thetas: v.iter().map(|p| p.0).collect(),
            weights: v.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn bec(epsilon: f64) -> Self {
        Self::from_pairs([(0.5, epsilon), (1.0, 1.0 - epsilon)])
    }

    pub fn bsc(p: f64) -> Self {
        Self::from_pairs([(1.0 - p, 1.0)])
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.thetas.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn capacity(&self) -> f64 {
        self.iter().map(|(t, w)| w * (1.0 - h2(t))).sum::<f64>().max(0.0)
    }

    pub fn bhattacharyya(&self) -> f64 {
        self.iter().map(|(t, w)| 2.0 * w * (t * (1.0 - t)).max(0.0).sqrt()).sum::<f64>().min(1.0)
    }

    pub fn to_channel(&self) -> DiscreteChannel {
        let mut zero = Vec::new();
        let mut one = Vec::new();
        for (t, w) in self.iter() {
            if (t - 0.5).abs() <= THETA_EPS {
                zero.push(w);
                one.push(w);
            } else {
                zero.extend([w * t, w * (1.0 - t)]);
                one.extend([w * (1.0 - t), w * t]);
            }
        }
        let outs = zero.len();
        zero.extend(one);
        DiscreteChannel::normalized(2, outs, zero)
    }

    /// Greedily groups classes whose `θ` lie within `tol` of the first member
    /// of the group. Each group becomes one class at its weighted mean, which
    /// is exactly the channel obtained by merging the outputs.
    pub fn merge(&self, tol: f64) -> Self {
        let tol = tol.max(THETA_EPS);
        let mut thetas = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        let mut i = 0;
        while i < self.len() {
            let start = self.thetas[i];
            let (mut tw, mut w) = (0.0, 0.0);
            while i < self.len() && self.thetas[i] - start <= tol {
                tw += self.thetas[i] * self.weights[i];
                w += self.weights[i];
                i += 1;
            }
            thetas.push((tw / w).clamp(0.5, 1.0));
            weights.push(w);
        }
        Self { thetas, weights }
    }

    /// Merges with the smallest tolerance from the sequence `tol, 2·tol, …`
    /// that brings the class count to at most `max_classes`. Returns the
    /// result with its capacity loss.
    pub fn merge_capped(&self, tol: f64, max_classes: usize) -> (Self, f64) {
        let before = self.capacity();
        let mut t = tol.max(THETA_EPS);
        let mut out = self.merge(t);
        while out.len() > max_classes.max(1) {
            t *= 2.0;
            out = self.merge(t);
        }
        let loss = (before - out.capacity()).max(0.0);
        (out, loss)
    }

    /// The worse branch of one polarization step.
    pub fn minus(&self, other: &Self) -> Self {
        let mut pairs = Vec::with_capacity(self.len() * other.len());
        for (a, wa) in self.iter() {
            for (b, wb) in other.iter() {
                pairs.push((a * b + (1.0 - a) * (1.0 - b), wa * wb));
            }
        }
        Self::from_pairs(pairs).merge(0.0)
    }

    /// The better branch of one polarization step.
    pub fn plus(&self, other: &Self) -> Self {
        let mut pairs = Vec::with_capacity(2 * self.len() * other.len());
        for (a, wa) in self.iter() {
            for (b, wb) in other.iter() {
                let agree = a * b + (1.0 - a) * (1.0 - b);
                if agree > 0.0 {
                    pairs.push((a * b / agree, wa * wb * agree));
                }
                if agree < 1.0 {
                    let t = (a * (1.0 - b)).max((1.0 - a) * b) / (1.0 - agree);
                    pairs.push((t, wa * wb * (1.0 - agree)));
                }
            }
        }
        Self::from_pairs(pairs).merge(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_bhattacharyya(ch: &DiscreteChannel) -> f64 {
        (0..ch.output_size()).map(|y| (ch.prob(0, y) * ch.prob(1, y)).sqrt()).sum()
    }

    // I(X;Y) = H(Y) - H(Y|X) with uniform X.
    fn entropy_mi(ch: &DiscreteChannel) -> f64 {
        let q = ch.input_size() as f64;
        let h = |v: f64| if v > 0.0 { -v * v.log2() } else { 0.0 };
        let hy: f64 =
            (0..ch.output_size()).map(|y| h((0..ch.input_size()).map(|x| ch.prob(x, y)).sum::<f64>() / q)).sum();
        let hyx: f64 = (0..ch.input_size())
            .map(|x| ch.row(x).iter().map(|&v| h(v)).sum::<f64>() / q)
            .sum();
        hy - hyx
    }

    #[test]
    fn constructors_and_errors() {
        assert_eq!(DiscreteChannel::bec(0.0).unwrap().capacity_uniform(), 1.0);
        assert!((DiscreteChannel::bec(0.5).unwrap().capacity_uniform() - 0.5).abs() < 1e-12);
        assert!(matches!(DiscreteChannel::bec(1.5), Err(Error::Usage(_))));
        assert!(DiscreteChannel::bsc(-0.1).is_err());
        assert!(DiscreteChannel::new(2, 2, vec![0.5, 0.5, 0.5, 0.4]).is_err());
        assert!(DiscreteChannel::new(2, 2, vec![1.5, -0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn bsc_at_half_capacity() {
        let ch = DiscreteChannel::bsc(0.11002).unwrap();
        let p: f64 = 0.11002;
        assert!((ch.bhattacharyya() - 2.0 * (p * (1.0 - p)).sqrt()).abs() < 1e-15);
        assert!((ch.bhattacharyya() - 0.625_829_368_4).abs() < 1e-9);
        assert!((ch.capacity_uniform() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn bhattacharyya_and_capacity_examples() {
        for eps in [0.0, 0.1, 0.37, 1.0] {
            let ch = DiscreteChannel::bec(eps).unwrap();
            assert!((ch.bhattacharyya() - eps).abs() < 1e-15);
            assert!((direct_bhattacharyya(&ch) - eps).abs() < 1e-15);
            assert!((ch.capacity_uniform() - (1.0 - eps)).abs() < 1e-12);
            assert!((entropy_mi(&ch) - (1.0 - eps)).abs() < 1e-12);
        }
        assert_eq!(DiscreteChannel::noiseless(2).unwrap().bhattacharyya(), 0.0);
        let useless = DiscreteChannel::new(2, 3, vec![0.2, 0.3, 0.5, 0.2, 0.3, 0.5]).unwrap();
        assert!(useless.capacity_uniform().abs() < 1e-15);
        assert!((useless.bhattacharyya() - 1.0).abs() < 1e-12);
        let qsc = DiscreteChannel::qsc(4, 0.2).unwrap();
        assert!((qsc.capacity_uniform() - entropy_mi(&qsc)).abs() < 1e-12);
    }

    #[test]
    fn degradation_examples() {
        let good = DiscreteChannel::bec(0.1).unwrap();
        let bad = DiscreteChannel::bec(0.3).unwrap();
        let w = is_degraded(&good, &bad).unwrap().expect("BEC(0.3) is degraded from BEC(0.1)");
        assert!(w.residual <= DEGRADATION_TOL);
        // the composition passes erasures through and erases a known bit
        // with probability 2/9
        assert!((w.entry(0, 2) - 2.0 / 9.0).abs() < 1e-9);
        assert!((w.entry(2, 2) - 1.0).abs() < 1e-9);
        assert!(is_degraded(&bad, &good).unwrap().is_none());

        let same = is_degraded(&bad, &bad).unwrap().unwrap();
        assert!(same.residual <= DEGRADATION_TOL);

        let bec = DiscreteChannel::bec(0.5).unwrap();
        let bsc = DiscreteChannel::bsc(0.11002).unwrap();
        assert!(is_degraded(&bec, &bsc).unwrap().is_none());
        assert!(is_degraded(&bsc, &bec).unwrap().is_none());
        // from BEC(0.5) the best reachable BSC has crossover 0.25
        assert!(is_degraded(&bec, &DiscreteChannel::bsc(0.25).unwrap()).unwrap().is_some());
        assert!(is_degraded(&bec, &DiscreteChannel::bsc(0.24).unwrap()).unwrap().is_none());
    }

    #[test]
    fn symmetry_examples() {
        let bsc = DiscreteChannel::bsc(0.2).unwrap();
        assert_eq!(check_symmetry(&bsc).unwrap().maps[1], vec![1, 0]);
        let bec = DiscreteChannel::bec(0.3).unwrap();
        assert_eq!(check_symmetry(&bec).unwrap().maps[1], vec![1, 0, 2]);
        let qsc = DiscreteChannel::qsc(4, 0.3).unwrap();
        let w = check_symmetry(&qsc).unwrap();
        for d in 0..4 {
            for y in 0..4 {
                assert_eq!(w.maps[d][y], y ^ d);
            }
        }
        let z = DiscreteChannel::new(2, 2, vec![1.0, 0.0, 0.3, 0.7]).unwrap();
        assert!(check_symmetry(&z).is_none());
        let bad = SymmetryWitness { maps: vec![vec![0, 1], vec![0, 1]] };
        assert!(!bad.verify(&bsc, 1e-12));
    }

    #[test]
    fn product_power_examples() {
        let bec = DiscreteChannel::bec(0.2).unwrap();
        assert_eq!(bec.product_power(1).unwrap(), bec);
        let sq = bec.product_power(2).unwrap();
        assert_eq!((sq.input_size(), sq.output_size()), (4, 9));
        // output digits are (first use, second use) with digit 2 = erasure
        for x in 0..4 {
            let known = (x >> 1) * 3 + (x & 1);
            assert!((sq.prob(x, known) - 0.64).abs() < 1e-15);
            let fully_known: f64 =
                (0..9).filter(|y| y / 3 != 2 && y % 3 != 2).map(|y| sq.prob(x, y)).sum();
            assert!((fully_known - 0.64).abs() < 1e-15);
        }
        for m in 1..=4 {
            let c = DiscreteChannel::noiseless(2).unwrap().product_power(m).unwrap().capacity_uniform();
            assert!((c - m as f64).abs() < 1e-12);
        }
        assert!(matches!(bec.product_power_capped(3, 26), Err(Error::Resource(_))));
        assert!(DiscreteChannel::qsc(4, 0.1).unwrap().product_power(2).is_err());
    }

    #[test]
    fn merge_examples() {
        let dup = DiscreteChannel::new(2, 4, vec![0.3, 0.3, 0.1, 0.3, 0.1, 0.1, 0.3, 0.5]).unwrap();
        let merged = dup.merge_outputs(0.0).unwrap();
        assert!((merged.capacity_uniform() - dup.capacity_uniform()).abs() < 1e-12);
        assert!((merged.bhattacharyya() - dup.bhattacharyya()).abs() < 1e-12);
        for tol in [0.0, 1e-6, 0.1, 0.49] {
            let bec = DiscreteChannel::bec(0.3).unwrap().merge_outputs(tol).unwrap();
            assert_eq!(bec.output_size(), 3);
        }
        let ch = DiscreteChannel::new(2, 4, vec![0.5, 0.2, 0.1, 0.2, 0.1, 0.2, 0.5, 0.2]).unwrap();
        for tol in [0.01, 0.2, 0.5] {
            let m = ch.merge_outputs(tol).unwrap();
            let dc = ch.capacity_uniform() - m.capacity_uniform();
            let db = m.bhattacharyya() - ch.bhattacharyya();
            assert!(dc >= -1e-12 && dc <= h2(tol.min(0.5)) + 1e-12);
            assert!(db >= -1e-12 && db <= 2.0 * tol.sqrt() + 1e-12);
        }
    }

    #[test]
    fn classes_polarization_step_matches_bec() {
        let c = BinaryClasses::bec(0.4);
        assert!((c.minus(&c).bhattacharyya() - (0.8 - 0.16)).abs() < 1e-15);
        assert!((c.plus(&c).bhattacharyya() - 0.16).abs() < 1e-15);
        assert_eq!(c.plus(&c).len(), 2);
        let total = c.minus(&c).capacity() + c.plus(&c).capacity();
        assert!((total - 2.0 * c.capacity()).abs() < 1e-12);
        let s = BinaryClasses::bsc(0.11002);
        let total = s.minus(&s).capacity() + s.plus(&s).capacity();
        assert!((total - 2.0 * s.capacity()).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let ch = DiscreteChannel::bsc(0.123456789).unwrap();
        assert_eq!(DiscreteChannel::from_text(&ch.to_text()).unwrap(), ch);
        let parsed = DiscreteChannel::from_text("2 3\n0.9 0 0.1\n0 0.9 0.1\n").unwrap();
        assert_eq!(parsed, DiscreteChannel::bec(0.1).unwrap());
        assert!(matches!(DiscreteChannel::from_text("2 2\n1 0\n0"), Err(Error::Parse(_))));
        assert!(matches!(DiscreteChannel::from_text("two 2"), Err(Error::Parse(_))));
    }

    proptest::proptest! {
        #[test]
        fn degradation_orders_capacity(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p1 = DiscreteChannel::bsc(a.min(1.0 - a) * 0.5).unwrap();
            let p2 = DiscreteChannel::bec(b).unwrap();
            if is_degraded(&p1, &p2).unwrap().is_some() {
                proptest::prop_assert!(p2.capacity_uniform() <= p1.capacity_uniform() + 1e-9);
            }
            proptest::prop_assert!(is_degraded(&p2, &p2).unwrap().is_some());
        }

        #[test]
        fn measures_ignore_output_order(p in 0.0f64..0.5, e in 0.0f64..1.0, rot in 0usize..6) {
            let ch = DiscreteChannel::new(2, 6, {
                let a = [(1.0 - e) * (1.0 - p), (1.0 - e) * p, e * 0.5, e * 0.5, 0.0, 0.0];
                let b = [(1.0 - e) * p, (1.0 - e) * (1.0 - p), e * 0.5, e * 0.5, 0.0, 0.0];
                let mut v: Vec<f64> = (0..6).map(|i| a[(i + rot) % 6]).collect();
                v.extend((0..6).map(|i| b[(i + rot) % 6]));
                v
            }).unwrap();
            let reference = DiscreteChannel::new(2, 3, vec![
                (1.0 - e) * (1.0 - p), (1.0 - e) * p, e, (1.0 - e) * p, (1.0 - e) * (1.0 - p), e,
            ]).unwrap();
            proptest::prop_assert!((ch.capacity_uniform() - reference.capacity_uniform()).abs() < 1e-12);
            proptest::prop_assert!((ch.bhattacharyya() - reference.bhattacharyya()).abs() < 1e-12);
            let merged = ch.merge_outputs(0.0).unwrap();
            proptest::prop_assert!((merged.capacity_uniform() - ch.capacity_uniform()).abs() < 1e-12);
            proptest::prop_assert!((merged.bhattacharyya() - ch.bhattacharyya()).abs() < 1e-12);
        }
    }
}

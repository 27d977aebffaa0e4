//! Generalized Reed-Solomon codes of short length over GF(2^m).
//!
//! A codeword of a GRS code with evaluation points `a_j`, column multipliers
//! `v_j` and dimension `k` is `c_j = v_j * p(a_j)` for the message polynomial
//! `p` of degree `< k`. Every such code is MDS, so any `k` symbols pin down the
//! whole codeword; [`GrsCode::complete`] recovers it by Lagrange interpolation.

use crate::error::{usage, Result};
use crate::gf::{FieldSpec, Symbol};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrsCode {
    spec: FieldSpec,
    k: usize,
    points: Vec<Symbol>,
    multipliers: Vec<Symbol>,
}

impl GrsCode {
    /// Plain evaluation code of the given length on `α^0, …, α^(len-1)`.
    pub fn new(spec: FieldSpec, len: usize, k: usize) -> Result<Self> {
        Self::with_points(spec, default_points(&spec, len)?, k)
    }

    /// Plain evaluation code (all multipliers one) on caller-chosen points.
    pub fn with_points(spec: FieldSpec, points: Vec<Symbol>, k: usize) -> Result<Self> {
        let multipliers = vec![1; points.len()];
        Self::with_multipliers(spec, points, multipliers, k)
    }

    pub fn with_multipliers(
        spec: FieldSpec,
        points: Vec<Symbol>,
        multipliers: Vec<Symbol>,
        k: usize,
    ) -> Result<Self> {
        let len = points.len();
        if len == 0 {
            return usage("GRS code needs at least one evaluation point");
        }
        if k == 0 || k > len {
            return usage(format!("dimension {k} outside 1..={len}"));
        }
        if multipliers.len() != len {
            return usage("one multiplier per evaluation point is required");
        }
        if let Some(&p) = points.iter().chain(&multipliers).find(|&&p| !spec.contains(p)) {
            return usage(format!("symbol {p} is not in GF(2^{})", spec.degree()));
        }
        if multipliers.contains(&0) {
            return usage("column multipliers must be nonzero");
        }
        for (i, a) in points.iter().enumerate() {
            if points[..i].contains(a) {
                return usage(format!("evaluation point {a} repeated"));
            }
        }
        Ok(Self { spec, k, points, multipliers })
    }

    /// Full-length Reed-Solomon code: every nonzero field element is a point.
    pub fn reed_solomon(spec: FieldSpec, k: usize) -> Result<Self> {
        Self::new(spec, spec.size() - 1, k)
    }

    /// The `(len, len - 1)` code whose codewords sum to zero. It is the GRS
    /// dual of the repetition code, with multipliers `1 / Π_{i≠j}(a_j - a_i)`.
    pub fn single_parity_check(spec: FieldSpec, points: Vec<Symbol>) -> Result<Self> {
        let len = points.len();
        if len < 2 {
            return usage("a parity-check code needs length at least 2");
        }
        // validate the points before inverting differences of them
        Self::with_points(spec, points.clone(), len - 1)?;
        let multipliers = (0..len)
            .map(|j| {
                let prod = (0..len)
                    .filter(|&i| i != j)
                    .fold(1, |acc, i| spec.mul_raw(acc, spec.add_raw(points[j], points[i])));
                spec.inv_raw(prod).expect("distinct points give a nonzero product")
            })
            .collect();
        Self::with_multipliers(spec, points, multipliers, len - 1)
    }

    /// Keeps the first `target_len` coordinates, i.e. deletes the trailing
    /// columns of the generator matrix. The result is still MDS.
    pub fn shorten(&self, target_len: usize) -> Result<Self> {
        if target_len > self.len() {
            return usage(format!("cannot shorten length {} to {target_len}", self.len()));
        }
        if target_len < self.k {
            return usage(format!("target length {target_len} below dimension {}", self.k));
        }
        Ok(Self {
            spec: self.spec,
            k: self.k,
            points: self.points[..target_len].to_vec(),
            multipliers: self.multipliers[..target_len].to_vec(),
        })
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[Symbol] {
        &self.points
    }

    pub fn multipliers(&self) -> &[Symbol] {
        &self.multipliers
    }

    /// Singleton-bound distance `len - k + 1`, attained by every GRS code.
    pub fn designed_distance(&self) -> usize {
        self.len() - self.k + 1
    }

    /// Row `i` is the evaluation of `x^i` scaled by the multipliers.
    pub fn generator_matrix(&self) -> Vec<Vec<Symbol>> {
        (0..self.k)
            .map(|i| {
                self.points
                    .iter()
                    .zip(&self.multipliers)
                    .map(|(&a, &v)| self.spec.mul_raw(v, self.spec.pow_raw(a, i as u64)))
                    .collect()
            })
            .collect()
    }

    pub fn encode(&self, message: &[Symbol]) -> Result<Vec<Symbol>> {
        if message.len() != self.k {
            return usage(format!("message length {} != dimension {}", message.len(), self.k));
        }
        if let Some(&s) = message.iter().find(|&&s| !self.spec.contains(s)) {
            return usage(format!("message symbol {s} not in field"));
        }
        let f = &self.spec;
        Ok(self
            .points
            .iter()
            .zip(&self.multipliers)
            .map(|(&a, &v)| {
                // Horner evaluation of p(a)
                let p = message.iter().rev().fold(0, |acc, &c| f.add_raw(f.mul_raw(acc, a), c));
                f.mul_raw(v, p)
            })
            .collect())
    }

    /// The unique codeword that agrees with the `k` supplied `(position,
    /// symbol)` pairs. Positions are 0-based and may come in any order.
    pub fn complete(&self, known: &[(usize, Symbol)]) -> Result<Vec<Symbol>> {
        if known.len() != self.k {
            return usage(format!("{} known symbols supplied, dimension is {}", known.len(), self.k));
        }
        for (i, &(pos, sym)) in known.iter().enumerate() {
            if pos >= self.len() {
                return usage(format!("position {pos} outside code length {}", self.len()));
            }
            if !self.spec.contains(sym) {
                return usage(format!("symbol {sym} not in field"));
            }
            if known[..i].iter().any(|&(p, _)| p == pos) {
                return usage(format!("position {pos} supplied twice"));
            }
        }
        let f = &self.spec;
        let nodes: Vec<Symbol> = known.iter().map(|&(p, _)| self.points[p]).collect();
        // Values of the underlying polynomial at the known nodes.
        let values: Vec<Symbol> = known
            .iter()
            .map(|&(p, s)| f.mul_raw(s, f.inv_raw(self.multipliers[p]).expect("nonzero")))
            .collect();
        // Barycentric weights w_i = 1 / Π_{t≠i} (x_i - x_t).
        let weights: Vec<Symbol> = (0..nodes.len())
            .map(|i| {
                let prod = (0..nodes.len())
                    .filter(|&t| t != i)
                    .fold(1, |acc, t| f.mul_raw(acc, f.add_raw(nodes[i], nodes[t])));
                f.inv_raw(prod).expect("distinct nodes")
            })
            .collect();
        let mut out = vec![0; self.len()];
        for (j, slot) in out.iter_mut().enumerate() {
            if let Some(&(_, s)) = known.iter().find(|&&(p, _)| p == j) {
                *slot = s;
                continue;
            }
            let z = self.points[j];
            let mut acc = 0;
            for i in 0..nodes.len() {
                let basis = (0..nodes.len())
                    .filter(|&t| t != i)
                    .fold(weights[i], |b, t| f.mul_raw(b, f.add_raw(z, nodes[t])));
                acc = f.add_raw(acc, f.mul_raw(values[i], basis));
            }
            *slot = f.mul_raw(self.multipliers[j], acc);
        }
        Ok(out)
    }
}

/// `α^0, …, α^(len-1)` for the field's smallest generator `α`.
pub fn default_points(spec: &FieldSpec, len: usize) -> Result<Vec<Symbol>> {
    if len + 1 > spec.size() {
        return usage(format!(
            "length {len} needs 2^m - 1 >= {len}, field has 2^{} - 1",
            spec.degree()
        ));
    }
    let alpha = spec.primitive_element();
    Ok((0..len).map(|i| spec.pow_raw(alpha, i as u64)).collect())
}

/// Which member sits at dimension `S - 1` of an [`MdsFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// Plain evaluation codes at every dimension.
    Grs,
    /// Plain codes, except that dimension `S - 1` is the single parity-check
    /// code, so the parity symbol is the plain sum of the others.
    ParityCheck,
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Grs => "grs",
            FamilyKind::ParityCheck => "spc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grs" => Some(FamilyKind::Grs),
            "spc" => Some(FamilyKind::ParityCheck),
            _ => None,
        }
    }
}

/// Length-`S` MDS codes `C_1, …, C_S` over one field and one point set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsFamily {
    kind: FamilyKind,
    codes: Vec<GrsCode>,
}

impl MdsFamily {
    pub fn new(spec: FieldSpec, len: usize, kind: FamilyKind) -> Result<Self> {
        Self::with_points(spec, default_points(&spec, len)?, kind)
    }

    pub fn with_points(spec: FieldSpec, points: Vec<Symbol>, kind: FamilyKind) -> Result<Self> {
        let len = points.len();
        let codes = (1..=len)
            .map(|d| {
                if kind == FamilyKind::ParityCheck && len >= 2 && d == len - 1 {
                    GrsCode::single_parity_check(spec, points.clone())
                } else {
                    GrsCode::with_points(spec, points.clone(), d)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, codes })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.codes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spec(&self) -> FieldSpec {
        self.codes[0].spec()
    }

    pub fn points(&self) -> &[Symbol] {
        self.codes[0].points()
    }

    /// The member of dimension `d`, `1 <= d <= S`.
    pub fn code(&self, d: usize) -> Result<&GrsCode> {
        match d.checked_sub(1).and_then(|i| self.codes.get(i)) {
            Some(c) => Ok(c),
            None => usage(format!("no MDS code of dimension {d} in a length-{} family", self.len())),
        }
    }

    /// Completes from `d = known.len()` symbols using `C_d`. With no known
    /// symbols the all-zero word is returned.
    pub fn complete(&self, known: &[(usize, Symbol)]) -> Result<Vec<Symbol>> {
        if known.is_empty() {
            return Ok(vec![0; self.len()]);
        }
        self.code(known.len())?.complete(known)
    }
}

//! Arithmetic over GF(2^m) for 1 <= m <= 16.
//!
//! Elements are stored as raw `u32` polynomial bitmasks; bit `i` is the
//! coefficient of `x^i`. Hot paths (MDS completion, q-ary decoding) work on raw
//! values through [`FieldSpec`]; [`FieldElement`] pairs a value with its field
//! for callers that want mismatches caught.

use crate::error::{usage, Error, Result};

/// Raw field symbol.
pub type Symbol = u32;

/// Maximum supported extension degree.
pub const MAX_DEGREE: u32 = 16;

/// Default reduction polynomials, indexed by `m`. Each one is primitive, so
/// `x` generates the multiplicative group (for m = 1 the group is trivial).
const DEFAULT_POLYS: [u32; 17] = [
    0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B,
    0x4443, 0x8003, 0x1100B,
];

/// The field GF(2^m) defined by a reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    m: u32,
    poly: u32,
}

impl FieldSpec {
    /// GF(2^m) with the default primitive polynomial for `m`.
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_DEGREE {
            return usage(format!("field degree m = {m} outside 1..={MAX_DEGREE}"));
        }
        Self::with_poly(m, DEFAULT_POLYS[m as usize])
    }

    /// GF(2^m) with a caller-chosen polynomial; rejects anything of the wrong
    /// degree or reducible over GF(2).
    pub fn with_poly(m: u32, poly: u32) -> Result<Self> {
        if m == 0 || m > MAX_DEGREE {
            return usage(format!("field degree m = {m} outside 1..={MAX_DEGREE}"));
        }
        if poly_degree(poly) != Some(m) {
            return usage(format!("polynomial {poly:#x} does not have degree {m}"));
        }
        if !is_irreducible(poly) {
            return usage(format!("polynomial {poly:#x} is reducible over GF(2)"));
        }
        Ok(Self { m, poly })
    }

    /// Smallest field whose multiplicative group has at least `len` elements,
    /// i.e. `2^m - 1 >= len`.
    pub fn for_length(len: usize) -> Result<Self> {
        let m = (1..=MAX_DEGREE)
            .find(|&m| (1usize << m) - 1 >= len)
            .ok_or_else(|| Error::Usage(format!("no supported field covers length {len}")))?;
        Self::new(m)
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Field size q = 2^m.
    pub fn size(&self) -> usize {
        1usize << self.m
    }

    pub fn contains(&self, v: Symbol) -> bool {
        (v as usize) < self.size()
    }

    pub fn element(&self, value: Symbol) -> Result<FieldElement> {
        if !self.contains(value) {
            return usage(format!("value {value} is not in GF(2^{})", self.m));
        }
        Ok(FieldElement { value, spec: *self })
    }

    #[inline]
    pub fn add_raw(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    /// Carry-less product reduced modulo the field polynomial.
    #[inline]
    pub fn mul_raw(&self, a: Symbol, b: Symbol) -> Symbol {
        let top = 1u32 << self.m;
        let mut acc = 0u32;
        let mut a = a;
        let mut b = b;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.poly;
            }
        }
        acc
    }

    pub fn pow_raw(&self, a: Symbol, mut e: u64) -> Symbol {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv_raw(&self, a: Symbol) -> Option<Symbol> {
        if a == 0 {
            None
        } else {
            Some(self.pow_raw(a, self.size() as u64 - 2))
        }
    }

    /// Smallest generator of the multiplicative group.
    pub fn primitive_element(&self) -> Symbol {
        let order = self.size() as u64 - 1;
        if order == 1 {
            return 1;
        }
        let factors = prime_factors(order);
        (2..self.size() as Symbol)
            .find(|&a| factors.iter().all(|&p| self.pow_raw(a, order / p) != 1))
            .expect("an irreducible polynomial always yields a cyclic group")
    }
}

/// A field value tagged with the field it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: Symbol,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> Symbol {
        self.value
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn inv(&self) -> Option<FieldElement> {
        self.spec.inv_raw(self.value).map(|value| FieldElement { value, spec: self.spec })
    }
}

fn same_field(a: &FieldElement, b: &FieldElement) -> Result<FieldSpec> {
    if a.spec != b.spec {
        return usage(format!(
            "operands from different fields: GF(2^{}) poly {:#x} vs GF(2^{}) poly {:#x}",
            a.spec.m, a.spec.poly, b.spec.m, b.spec.poly
        ));
    }
    Ok(a.spec)
}

pub fn add(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    let spec = same_field(&a, &b)?;
    Ok(FieldElement { value: spec.add_raw(a.value, b.value), spec })
}

pub fn mul(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    let spec = same_field(&a, &b)?;
    Ok(FieldElement { value: spec.mul_raw(a.value, b.value), spec })
}

/// Packs each run of `m` bits into one symbol, most significant bit first.
pub fn bits_to_symbols(bits: &[u8], spec: &FieldSpec) -> Result<Vec<Symbol>> {
    let m = spec.degree() as usize;
    if bits.len() % m != 0 {
        return usage(format!("{} bits is not a multiple of m = {m}", bits.len()));
    }
    bits.chunks(m)
        .map(|chunk| {
            chunk.iter().try_fold(0 as Symbol, |acc, &b| match b {
                0 | 1 => Ok((acc << 1) | b as Symbol),
                other => usage(format!("bit value {other} is not 0 or 1")),
            })
        })
        .collect()
}

/// Inverse of [`bits_to_symbols`].
pub fn symbols_to_bits(symbols: &[Symbol], spec: &FieldSpec) -> Vec<u8> {
    let m = spec.degree();
    let mut out = Vec::with_capacity(symbols.len() * m as usize);
    for &s in symbols {
        for i in (0..m).rev() {
            out.push(((s >> i) & 1) as u8);
        }
    }
    out
}

fn poly_degree(p: u32) -> Option<u32> {
    (p != 0).then(|| 31 - p.leading_zeros())
}

fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b).expect("nonzero divisor");
    while let Some(da) = poly_degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
fn is_irreducible(p: u32) -> bool {
    let d = match poly_degree(p) {
        Some(d) => d,
        None => return false,
    };
    (2u32..(1 << (d / 2 + 1))).all(|q| poly_mod(p, q) != 0)
}

fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= v {
        if v % p == 0 {
            out.push(p);
            while v % p == 0 {
                v /= p;
            }
        }
        p += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

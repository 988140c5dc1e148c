// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact arithmetic over small finite fields.
//!
//! Two families are supported: prime fields `GF(q)` and binary extension
//! fields `GF(2^m)` with `m <= 16`. A [`FieldSpec`] names a field and is
//! validated on construction; a [`Field`] is the arithmetic context built from
//! it. Bulk code operates on raw [`Symbol`] values through a `Field`, while
//! [`FieldElement`] carries its field tag so that mixing fields is caught.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Raw field symbol. Always `< q` for the field it belongs to.
pub type Symbol = u32;

/// Largest supported field order.
pub const MAX_FIELD_ORDER: u32 = (1 << 16) + 1;

/// Reduction polynomial of the default `GF(2^16)`: x^16 + x^12 + x^3 + x + 1.
pub const GF65536_POLY: u32 = 0x1100B;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("field order {0} exceeds the supported maximum of 65537")]
    TooLarge(u64),
    #[error("binary extension degree {0} is outside 1..=16")]
    BadDegree(u32),
    #[error("reduction polynomial {poly:#x} does not have degree {degree}")]
    DegreeMismatch { poly: u32, degree: u32 },
    #[error("reduction polynomial {0:#x} is reducible over GF(2)")]
    Reducible(u32),
    #[error("value {value} is not an element of a field of order {order}")]
    OutOfRange { value: u64, order: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields ({0} vs {1})")]
    MixedFields(FieldSpec, FieldSpec),
    #[error("unknown field kind tag {0}")]
    UnknownKind(u8),
    #[error("cannot parse field {0:?}; expected gf65536, prime:<q> or binary:<poly>")]
    Unparsable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Prime,
    Binary,
}

impl FieldKind {
    pub fn tag(self) -> u8 {
        match self {
            FieldKind::Prime => 0,
            FieldKind::Binary => 1,
        }
    }
}

/// Validated description of a finite field.
///
/// For prime fields `parameter` is the prime `q`; for binary fields it is the
/// reduction polynomial as a bitmask including the leading `x^m` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    kind: FieldKind,
    parameter: u32,
}

impl FieldSpec {
    pub fn prime(q: u32) -> Result<Self, FieldError> {
        if q > MAX_FIELD_ORDER {
            return Err(FieldError::TooLarge(q as u64));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(Self {
            kind: FieldKind::Prime,
            parameter: q,
        })
    }

    pub fn binary(degree: u32, poly: u32) -> Result<Self, FieldError> {
        if !(1..=16).contains(&degree) {
            return Err(FieldError::BadDegree(degree));
        }
        if poly_degree(poly) != Some(degree) {
            return Err(FieldError::DegreeMismatch { poly, degree });
        }
        if !is_irreducible(poly) {
            return Err(FieldError::Reducible(poly));
        }
        Ok(Self {
            kind: FieldKind::Binary,
            parameter: poly,
        })
    }

    /// The default production field, `GF(2^16)`.
    pub fn gf65536() -> Self {
        Self::binary(16, GF65536_POLY).expect("default reduction polynomial is irreducible")
    }

    /// Rebuild a spec from its serialized `(kind tag, parameter)` pair.
    pub fn from_parts(tag: u8, parameter: u32) -> Result<Self, FieldError> {
        match tag {
            0 => Self::prime(parameter),
            1 => {
                let degree = poly_degree(parameter).ok_or(FieldError::BadDegree(0))?;
                Self::binary(degree, parameter)
            }
            t => Err(FieldError::UnknownKind(t)),
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn parameter(&self) -> u32 {
        self.parameter
    }

    /// Number of elements `q`.
    pub fn order(&self) -> u32 {
        match self.kind {
            FieldKind::Prime => self.parameter,
            FieldKind::Binary => 1 << poly_degree(self.parameter).unwrap(),
        }
    }

    /// Bytes needed to store any element, big-endian.
    pub fn symbol_bytes(&self) -> usize {
        let bits = 32 - (self.order() - 1).leading_zeros();
        bits.div_ceil(8).max(1) as usize
    }

    /// Bytes of raw data packed into one symbol when striping.
    ///
    /// At least one. Fields smaller than 256 elements still take one byte per
    /// symbol, and striping rejects byte values that are not field elements.
    pub fn data_bytes(&self) -> usize {
        let bits = 31 - self.order().leading_zeros();
        ((bits / 8) as usize).max(1)
    }
}

impl FieldSpec {
    /// The form accepted by `FromStr`.
    pub fn to_cli_string(&self) -> String {
        match self.kind {
            FieldKind::Prime => format!("prime:{}", self.parameter),
            FieldKind::Binary if *self == Self::gf65536() => "gf65536".into(),
            FieldKind::Binary => format!("binary:{:#x}", self.parameter),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FieldKind::Prime => write!(f, "GF({})", self.parameter),
            FieldKind::Binary => write!(
                f,
                "GF(2^{}; {:#x})",
                poly_degree(self.parameter).unwrap(),
                self.parameter
            ),
        }
    }
}

/// Accepts `gf65536`, `prime:<q>` and `binary:<poly>` (poly in hex with `0x`
/// or decimal).
impl std::str::FromStr for FieldSpec {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::Unparsable(s.to_string());
        let num = |t: &str| -> Result<u32, FieldError> {
            match t.strip_prefix("0x") {
                Some(hex) => u32::from_str_radix(hex, 16).map_err(|_| bad()),
                None => t.parse().map_err(|_| bad()),
            }
        };
        match s.split_once(':') {
            None if s.eq_ignore_ascii_case("gf65536") => Ok(Self::gf65536()),
            Some(("prime", q)) => Self::prime(num(q)?),
            Some(("binary", poly)) => Self::from_parts(FieldKind::Binary.tag(), num(poly)?),
            _ => Err(bad()),
        }
    }
}

/// A field element tagged with the field it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    spec: FieldSpec,
    value: Symbol,
}

impl FieldElement {
    pub fn value(&self) -> Symbol {
        self.value
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

struct LogTables {
    // exp has 2(q-1) entries so log(a)+log(b) never needs a reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// Arithmetic context for one field.
#[derive(Clone)]
pub struct Field {
    spec: FieldSpec,
    order: u32,
    tables: Option<Arc<LogTables>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Self {
        let order = spec.order();
        let tables = match spec.kind {
            FieldKind::Prime => None,
            FieldKind::Binary => Some(Arc::new(build_tables(spec.parameter, order))),
        };
        Self {
            spec,
            order,
            tables,
        }
    }

    pub fn gf65536() -> Self {
        Self::new(FieldSpec::gf65536())
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn contains(&self, value: u64) -> bool {
        value < self.order as u64
    }

    /// Wrap a raw value, checking that it is an element of this field.
    pub fn element(&self, value: u64) -> Result<FieldElement, FieldError> {
        if !self.contains(value) {
            return Err(FieldError::OutOfRange {
                value,
                order: self.order,
            });
        }
        Ok(FieldElement {
            spec: self.spec,
            value: value as Symbol,
        })
    }

    /// Checked arithmetic on tagged elements.
    pub fn apply(
        &self,
        op: ArithOp,
        a: FieldElement,
        b: FieldElement,
    ) -> Result<FieldElement, FieldError> {
        for x in [a, b] {
            if x.spec != self.spec {
                return Err(FieldError::MixedFields(self.spec, x.spec));
            }
        }
        let value = match op {
            ArithOp::Add => self.add(a.value, b.value),
            ArithOp::Sub => self.sub(a.value, b.value),
            ArithOp::Mul => self.mul(a.value, b.value),
            ArithOp::Div => self.div(a.value, b.value)?,
        };
        Ok(FieldElement {
            spec: self.spec,
            value,
        })
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        match self.spec.kind {
            FieldKind::Binary => a ^ b,
            FieldKind::Prime => {
                let s = a + b;
                if s >= self.order {
                    s - self.order
                } else {
                    s
                }
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: Symbol) -> Symbol {
        match self.spec.kind {
            FieldKind::Binary => a,
            FieldKind::Prime => {
                if a == 0 {
                    0
                } else {
                    self.order - a
                }
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        match &self.tables {
            Some(t) => {
                if a == 0 || b == 0 {
                    0
                } else {
                    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize] as Symbol
                }
            }
            None => ((a as u64 * b as u64) % self.order as u64) as Symbol,
        }
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        Ok(match &self.tables {
            Some(t) => {
                let l = t.log[a as usize] as usize;
                t.exp[(self.order as usize - 1 - l) % (self.order as usize - 1)] as Symbol
            }
            None => self.pow(a, self.order as u64 - 2),
        })
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, mut base: Symbol, mut exp: u64) -> Symbol {
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// `[1, x, x^2, ..., x^(width-1)]`.
    pub fn vandermonde_row(&self, x: Symbol, width: usize) -> Vec<Symbol> {
        let mut row = Vec::with_capacity(width);
        let mut acc = 1;
        for _ in 0..width {
            row.push(acc);
            acc = self.mul(acc, x);
        }
        row
    }

    /// Evaluate `sum coeffs[j] * x^j` by Horner's rule.
    pub fn poly_eval(&self, coeffs: &[Symbol], x: Symbol) -> Symbol {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }

    pub fn dot(&self, a: &[Symbol], b: &[Symbol]) -> Symbol {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }
}

fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn poly_degree(poly: u32) -> Option<u32> {
    (poly != 0).then(|| 31 - poly.leading_zeros())
}

/// Remainder of carry-less division over GF(2).
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b).expect("nonzero divisor");
    while let Some(da) = poly_degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Exhaustive factor search: a reducible polynomial of degree m has a factor
/// of degree at most m/2.
pub(crate) fn is_irreducible(poly: u32) -> bool {
    let Some(m) = poly_degree(poly) else {
        return false;
    };
    if m == 0 {
        return false;
    }
    (1..=m / 2).all(|d| ((1u32 << d)..(1u32 << (d + 1))).all(|f| poly_rem(poly, f) != 0))
}

/// Carry-less multiply followed by reduction modulo `poly`.
pub(crate) fn clmul_reduce(a: u32, b: u32, poly: u32) -> u32 {
    let m = poly_degree(poly).unwrap();
    let mut acc = 0u32;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> m & 1 == 1 {
            a ^= poly;
        }
    }
    acc
}

fn build_tables(poly: u32, order: u32) -> LogTables {
    let group = (order - 1) as usize;
    // Irreducible does not imply x is primitive; search for a generator.
    for g in 2..order {
        let mut exp = vec![0u16; 2 * group];
        let mut log = vec![0u16; order as usize];
        let mut seen = vec![false; order as usize];
        let mut x = 1u32;
        let mut ok = true;
        for (i, slot) in exp.iter_mut().take(group).enumerate() {
            if seen[x as usize] {
                ok = false;
                break;
            }
            seen[x as usize] = true;
            *slot = x as u16;
            log[x as usize] = i as u16;
            x = clmul_reduce(x, g, poly);
        }
        if ok {
            for i in group..2 * group {
                exp[i] = exp[i - group];
            }
            return LogTables { exp, log };
        }
    }
    // order 2: the multiplicative group is {1}.
    LogTables {
        exp: vec![1, 1],
        log: vec![0, 0],
    }
}

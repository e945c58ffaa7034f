//! Cylinder observables: complex-valued functions of a local symbol word.
//!
//! An observable of radius r reads the word x[t-r ..= t+r] around the
//! evaluation site. Observables form an algebra: sums, products, scalar
//! multiples and conjugates are again cylinder observables whose radius is
//! the maximum of the operand radii, which is exactly the closure needed for
//! a countable core of test functions.
//!
//! Descriptor grammar: `one`, `const:RE[,IM]`, `cyl:WORD` (odd length, `.`
//! is a wildcard; `cylN:WORD` asserts the length), `pm1:LETTER`, `value`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
enum ObsKind {
    Const(Complex64),
    /// Radius-0 lookup of the symbol at the origin.
    SymbolMap { map: BTreeMap<u8, Complex64>, default: Complex64 },
    /// Indicator of a centered pattern; `None` entries match any symbol.
    Pattern(Vec<Option<u8>>),
    Scale(Complex64, Box<CylinderObservable>),
    Sum(Box<CylinderObservable>, Box<CylinderObservable>),
    Product(Box<CylinderObservable>, Box<CylinderObservable>),
    Conj(Box<CylinderObservable>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderObservable {
    kind: ObsKind,
    label: String,
}

impl CylinderObservable {
    pub fn constant(value: Complex64) -> Self {
        let label = if value == Complex64::new(1.0, 0.0) {
            "one".to_string()
        } else {
            format!("const:{}", format_complex(value))
        };
        CylinderObservable { kind: ObsKind::Const(value), label }
    }

    pub fn one() -> Self {
        CylinderObservable::constant(Complex64::new(1.0, 0.0))
    }

    /// Indicator of a single letter at the origin.
    pub fn letter(c: u8) -> Self {
        CylinderObservable {
            kind: ObsKind::Pattern(vec![Some(c)]),
            label: format!("cyl:{}", c as char),
        }
    }

    /// Indicator of an odd-length word centered at the origin; `.` matches
    /// any symbol.
    pub fn word(pattern: &str) -> Result<Self> {
        if pattern.is_empty() || pattern.len() % 2 == 0 {
            return Err(Error::BadObservable {
                descriptor: format!("cyl:{pattern}"),
                reason: "pattern must have odd length".into(),
            });
        }
        let cells = pattern
            .bytes()
            .map(|c| if c == b'.' { None } else { Some(c) })
            .collect();
        Ok(CylinderObservable { kind: ObsKind::Pattern(cells), label: format!("cyl:{pattern}") })
    }

    /// +1 on the given letter, -1 on every other symbol.
    pub fn plus_minus(c: u8) -> Self {
        let mut map = BTreeMap::new();
        map.insert(c, Complex64::new(1.0, 0.0));
        CylinderObservable {
            kind: ObsKind::SymbolMap { map, default: Complex64::new(-1.0, 0.0) },
            label: format!("pm1:{}", c as char),
        }
    }

    /// Numeric value of a digit symbol at the origin; non-digits read as 0.
    pub fn value_at_origin() -> Self {
        let map = (b'0'..=b'9')
            .map(|d| (d, Complex64::new((d - b'0') as f64, 0.0)))
            .collect();
        CylinderObservable {
            kind: ObsKind::SymbolMap { map, default: Complex64::new(0.0, 0.0) },
            label: "value".to_string(),
        }
    }

    /// Radius-0 observable from an explicit symbol table.
    pub fn symbol_map(pairs: &[(u8, Complex64)], default: Complex64) -> Self {
        let map: BTreeMap<u8, Complex64> = pairs.iter().copied().collect();
        let label = format!(
            "map:{{{}}}",
            pairs
                .iter()
                .map(|(c, v)| format!("{}={}", *c as char, format_complex(*v)))
                .collect::<Vec<_>>()
                .join(",")
        );
        CylinderObservable { kind: ObsKind::SymbolMap { map, default }, label }
    }

    pub fn scaled(self, c: Complex64) -> Self {
        let label = format!("{}*({})", format_complex(c), self.label);
        CylinderObservable { kind: ObsKind::Scale(c, Box::new(self)), label }
    }

    pub fn conj(self) -> Self {
        let label = format!("conj({})", self.label);
        CylinderObservable { kind: ObsKind::Conj(Box::new(self)), label }
    }

    pub fn from_descriptor(descriptor: &str) -> Result<Self> {
        let descriptor = descriptor.trim();
        let bad = |reason: &str| Error::BadObservable {
            descriptor: descriptor.to_string(),
            reason: reason.to_string(),
        };
        if descriptor == "one" || descriptor == "const" {
            return Ok(CylinderObservable::one());
        }
        if descriptor == "value" {
            return Ok(CylinderObservable::value_at_origin());
        }
        if let Some(rest) = descriptor.strip_prefix("const:") {
            let mut parts = rest.split(',');
            let re: f64 = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad("const needs a real part"))?;
            let im: f64 = match parts.next() {
                Some(v) => v.trim().parse().map_err(|_| bad("bad imaginary part"))?,
                None => 0.0,
            };
            return Ok(CylinderObservable::constant(Complex64::new(re, im)));
        }
        if let Some(rest) = descriptor.strip_prefix("pm1:") {
            if rest.len() != 1 {
                return Err(bad("pm1 takes a single letter"));
            }
            return Ok(CylinderObservable::plus_minus(rest.as_bytes()[0]));
        }
        if let Some(rest) = descriptor.strip_prefix("cyl") {
            let (len_part, word) = rest.split_once(':').ok_or_else(|| bad("expected `cyl:WORD`"))?;
            if !len_part.is_empty() {
                let expected: usize =
                    len_part.parse().map_err(|_| bad("cyl length must be an integer"))?;
                if word.len() != expected {
                    return Err(bad(&format!(
                        "word `{word}` does not have the declared length {expected}"
                    )));
                }
            }
            return CylinderObservable::word(word);
        }
        Err(bad("unknown observable kind"))
    }

    pub fn radius(&self) -> i64 {
        match &self.kind {
            ObsKind::Const(_) | ObsKind::SymbolMap { .. } => 0,
            ObsKind::Pattern(cells) => (cells.len() as i64 - 1) / 2,
            ObsKind::Scale(_, f) | ObsKind::Conj(f) => f.radius(),
            ObsKind::Sum(f, g) | ObsKind::Product(f, g) => f.radius().max(g.radius()),
        }
    }

    /// Upper bound on |f|; exact for constants, maps, and indicators.
    pub fn sup_norm(&self) -> f64 {
        match &self.kind {
            ObsKind::Const(c) => c.norm(),
            ObsKind::SymbolMap { map, default } => map
                .values()
                .map(|v| v.norm())
                .fold(default.norm(), f64::max),
            ObsKind::Pattern(_) => 1.0,
            ObsKind::Scale(c, f) => c.norm() * f.sup_norm(),
            ObsKind::Conj(f) => f.sup_norm(),
            ObsKind::Sum(f, g) => f.sup_norm() + g.sup_norm(),
            ObsKind::Product(f, g) => f.sup_norm() * g.sup_norm(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ObsKind::Const(_))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluate on a local word of length 2*radius()+1.
    pub fn eval(&self, word: &[u8]) -> Complex64 {
        debug_assert_eq!(word.len() as i64, 2 * self.radius() + 1);
        self.eval_at(word, word.len() / 2)
    }

    fn eval_at(&self, word: &[u8], center: usize) -> Complex64 {
        match &self.kind {
            ObsKind::Const(c) => *c,
            ObsKind::SymbolMap { map, default } => {
                map.get(&word[center]).copied().unwrap_or(*default)
            }
            ObsKind::Pattern(cells) => {
                let r = (cells.len() - 1) / 2;
                let matches = cells.iter().enumerate().all(|(i, cell)| match cell {
                    Some(c) => word[center - r + i] == *c,
                    None => true,
                });
                Complex64::new(if matches { 1.0 } else { 0.0 }, 0.0)
            }
            ObsKind::Scale(c, f) => c * f.eval_at(word, center),
            ObsKind::Conj(f) => f.eval_at(word, center).conj(),
            ObsKind::Sum(f, g) => f.eval_at(word, center) + g.eval_at(word, center),
            ObsKind::Product(f, g) => f.eval_at(word, center) * g.eval_at(word, center),
        }
    }
}

impl fmt::Display for CylinderObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Add for CylinderObservable {
    type Output = CylinderObservable;
    fn add(self, rhs: CylinderObservable) -> CylinderObservable {
        let label = format!("({})+({})", self.label, rhs.label);
        CylinderObservable { kind: ObsKind::Sum(Box::new(self), Box::new(rhs)), label }
    }
}

impl Sub for CylinderObservable {
    type Output = CylinderObservable;
    fn sub(self, rhs: CylinderObservable) -> CylinderObservable {
        self + rhs.neg()
    }
}

impl Mul for CylinderObservable {
    type Output = CylinderObservable;
    fn mul(self, rhs: CylinderObservable) -> CylinderObservable {
        let label = format!("({})*({})", self.label, rhs.label);
        CylinderObservable { kind: ObsKind::Product(Box::new(self), Box::new(rhs)), label }
    }
}

impl Neg for CylinderObservable {
    type Output = CylinderObservable;
    fn neg(self) -> CylinderObservable {
        self.scaled(Complex64::new(-1.0, 0.0))
    }
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{}{}i", z.re, if z.im < 0.0 { "" } else { "+" }, z.im)
    }
}

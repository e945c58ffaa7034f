//! Point sources: concrete two-sided symbol sequences over the integers.
//!
//! A source stands for a point `x` of a subshift together with a base offset
//! `s`, so that reading symbols through the source yields the translated
//! point `s.x` under the shift convention `(t.x)(k) = x(k+t)`.
//!
//! Descriptor grammar (the `@N` suffix sets the base offset):
//!
//! ```text
//! step
//! periodic:WORD
//! fibonacci | thue-morse | tm
//! substitution:[name](a->ab,b->a;seed=a|a)
//! rotation:golden | rotation:ALPHA[,INTERCEPT[,CUTPOINT]]
//! bernoulli:P[:SEED]
//! explicit:PATH
//! ```

use crate::error::{Error, Result};
use crate::window::Window;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;

pub const GOLDEN_RATIO_CONJUGATE: f64 = 0.618_033_988_749_894_9;

const BERNOULLI_DEFAULT_SEED: u64 = 0x5eed;

/// Substitution rules over a byte alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionRules {
    rules: BTreeMap<u8, Vec<u8>>,
}

impl SubstitutionRules {
    pub fn new(rules: BTreeMap<u8, Vec<u8>>) -> Self {
        SubstitutionRules { rules }
    }

    pub fn alphabet(&self) -> Vec<u8> {
        self.rules.keys().copied().collect()
    }

    pub fn apply(&self, word: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(word.len() * 2);
        for &c in word {
            out.extend_from_slice(&self.rules[&c]);
        }
        out
    }

    fn apply_power(&self, word: &[u8], k: u32) -> Vec<u8> {
        let mut w = word.to_vec();
        for _ in 0..k {
            w = self.apply(&w);
        }
        w
    }

    /// Primitivity via boolean incidence-matrix powers (Wielandt bound).
    fn check_primitive(&self) -> Result<()> {
        let alphabet = self.alphabet();
        let n = alphabet.len();
        let index: BTreeMap<u8, usize> = alphabet.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut adj = vec![vec![false; n]; n];
        for (&c, image) in &self.rules {
            for &d in image {
                let Some(&j) = index.get(&d) else {
                    return Err(Error::BadDescriptor {
                        descriptor: String::from_utf8_lossy(image).into_owned(),
                        reason: format!("rule image uses letter `{}` with no rule of its own", d as char),
                    });
                };
                adj[index[&c]][j] = true;
            }
        }
        let bound = (n - 1) * (n - 1) + 1;
        let mut power = adj.clone();
        for _ in 1..=bound {
            if power.iter().all(|row| row.iter().all(|&x| x)) {
                return Ok(());
            }
            let mut next = vec![vec![false; n]; n];
            for i in 0..n {
                for k in 0..n {
                    if power[i][k] {
                        for j in 0..n {
                            next[i][j] |= adj[k][j];
                        }
                    }
                }
            }
            power = next;
        }
        // Name a failing pair for the error message.
        for i in 0..n {
            for j in 0..n {
                if !power[i][j] {
                    return Err(Error::NonPrimitiveSubstitution(
                        alphabet[i] as char,
                        alphabet[j] as char,
                    ));
                }
            }
        }
        unreachable!("non-primitive matrix must have a zero entry");
    }

    /// Smallest power k <= 8 for which the seed pair is a two-sided fixed
    /// point: sigma^k(left) ends with left and sigma^k(right) starts with
    /// right. Expanding by sigma^k then converges on both sides.
    fn extension_power(&self, left: u8, right: u8) -> Option<u32> {
        (1..=8).find(|&k| {
            let l = self.apply_power(&[left], k);
            let r = self.apply_power(&[right], k);
            l.last() == Some(&left) && r.first() == Some(&right)
        })
    }

    /// The two-letter seed must occur in the language.
    fn seed_is_legal(&self, left: u8, right: u8) -> bool {
        let start = self.alphabet()[0];
        let mut w = vec![start];
        for _ in 0..20 {
            w = self.apply(&w);
            if w.len() > 4096 {
                break;
            }
        }
        w.windows(2).any(|pair| pair == [left, right])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Substitution {
        rules: SubstitutionRules,
        seed_left: u8,
        seed_right: u8,
        power: u32,
    },
    Rotation {
        alpha: f64,
        intercept: f64,
        cutpoint: f64,
    },
    Periodic(Vec<u8>),
    Step,
    Explicit {
        symbols: Vec<u8>,
        start: i64,
    },
    Bernoulli {
        p: f64,
        seed: u64,
    },
}

/// A validated point source: a symbol sequence plus a base offset.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSource {
    kind: SourceKind,
    base_offset: i64,
    label: String,
}

impl PointSource {
    pub fn new(kind: SourceKind, label: impl Into<String>) -> Result<Self> {
        let source = PointSource { kind, base_offset: 0, label: label.into() };
        source.validate()?;
        Ok(source)
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            SourceKind::Substitution { rules, seed_left, seed_right, power } => {
                rules.check_primitive()?;
                if rules.extension_power(*seed_left, *seed_right) != Some(*power)
                    || !rules.seed_is_legal(*seed_left, *seed_right)
                {
                    return Err(Error::SeedNotExtendable {
                        left: *seed_left as char,
                        right: *seed_right as char,
                    });
                }
                Ok(())
            }
            SourceKind::Periodic(word) if word.is_empty() => Err(Error::EmptyPeriodicWord),
            SourceKind::Bernoulli { p, .. } if !(*p > 0.0 && *p < 1.0) => {
                Err(Error::BadBernoulliParameter(*p))
            }
            _ => Ok(()),
        }
    }

    pub fn substitution(rules: SubstitutionRules, seed_left: u8, seed_right: u8) -> Result<Self> {
        rules.check_primitive()?;
        let power = rules
            .extension_power(seed_left, seed_right)
            .ok_or(Error::SeedNotExtendable { left: seed_left as char, right: seed_right as char })?;
        let label = format!("substitution(seed={}|{})", seed_left as char, seed_right as char);
        PointSource::new(SourceKind::Substitution { rules, seed_left, seed_right, power }, label)
    }

    pub fn fibonacci() -> Self {
        let mut rules = BTreeMap::new();
        rules.insert(b'a', b"ab".to_vec());
        rules.insert(b'b', b"a".to_vec());
        let mut s = PointSource::substitution(SubstitutionRules::new(rules), b'a', b'a')
            .expect("fibonacci rules are primitive and extendable");
        s.label = "fibonacci".into();
        s
    }

    pub fn thue_morse() -> Self {
        let mut rules = BTreeMap::new();
        rules.insert(b'a', b"ab".to_vec());
        rules.insert(b'b', b"ba".to_vec());
        let mut s = PointSource::substitution(SubstitutionRules::new(rules), b'b', b'a')
            .expect("thue-morse rules are primitive and extendable");
        s.label = "thue-morse".into();
        s
    }

    pub fn rotation(alpha: f64, intercept: f64, cutpoint: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&cutpoint) || cutpoint == 0.0 {
            return Err(Error::BadDescriptor {
                descriptor: format!("rotation:{alpha},{intercept},{cutpoint}"),
                reason: "cutpoint must lie in (0, 1)".into(),
            });
        }
        let label = format!("rotation({alpha},{intercept},{cutpoint})");
        PointSource::new(SourceKind::Rotation { alpha, intercept, cutpoint }, label)
    }

    pub fn golden_rotation() -> Self {
        PointSource::rotation(GOLDEN_RATIO_CONJUGATE, 0.0, GOLDEN_RATIO_CONJUGATE)
            .expect("golden rotation parameters are valid")
    }

    pub fn periodic(word: &str) -> Result<Self> {
        PointSource::new(SourceKind::Periodic(word.as_bytes().to_vec()), format!("periodic:{word}"))
    }

    pub fn step() -> Self {
        PointSource::new(SourceKind::Step, "step").expect("step source is always valid")
    }

    pub fn bernoulli(p: f64, seed: u64) -> Result<Self> {
        PointSource::new(SourceKind::Bernoulli { p, seed }, format!("bernoulli({p},seed={seed})"))
    }

    pub fn explicit(symbols: Vec<u8>, start: i64) -> Result<Self> {
        PointSource::new(SourceKind::Explicit { symbols, start }, "explicit")
    }

    /// Parse the plain-text explicit format: a header line `offset=<int>`
    /// followed by one line of single-character symbols.
    pub fn from_explicit_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default().trim();
        let offset = header
            .strip_prefix("offset=")
            .and_then(|v| v.trim().parse::<i64>().ok())
            .ok_or_else(|| Error::BadDescriptor {
                descriptor: header.to_string(),
                reason: "expected header line `offset=<integer>`".into(),
            })?;
        let symbols: Vec<u8> = lines.next().unwrap_or_default().trim().bytes().collect();
        if symbols.is_empty() {
            return Err(Error::BadDescriptor {
                descriptor: text.chars().take(40).collect(),
                reason: "explicit source has no symbols".into(),
            });
        }
        PointSource::explicit(symbols, offset)
    }

    /// Parse a textual source descriptor. See the module docs for the grammar.
    pub fn from_descriptor(descriptor: &str) -> Result<Self> {
        let descriptor = descriptor.trim();
        let (body, offset) = match descriptor.rsplit_once('@') {
            Some((body, off)) if off.parse::<i64>().is_ok() => (body, off.parse::<i64>().unwrap()),
            _ => (descriptor, 0),
        };
        let bad = |reason: &str| Error::BadDescriptor {
            descriptor: descriptor.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = match body.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (body, None),
        };
        let mut source = match (kind, rest) {
            ("step", None) => PointSource::step(),
            ("fibonacci" | "fib", None) => PointSource::fibonacci(),
            ("thue-morse" | "tm", None) => PointSource::thue_morse(),
            ("periodic", Some(word)) => PointSource::periodic(word)?,
            ("rotation", Some(params)) => parse_rotation(params)?,
            ("bernoulli", Some(params)) => {
                let mut parts = params.split(':');
                let p: f64 = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("bernoulli needs a probability"))?;
                let seed = match parts.next() {
                    Some(v) => v.parse().map_err(|_| bad("bernoulli seed must be an integer"))?,
                    None => BERNOULLI_DEFAULT_SEED,
                };
                PointSource::bernoulli(p, seed)?
            }
            ("explicit", Some(path)) => {
                let text = std::fs::read_to_string(path)?;
                PointSource::from_explicit_text(&text)?
            }
            ("substitution", Some(spec)) => parse_substitution(spec)?,
            _ => return Err(Error::UnknownSourceKind(descriptor.to_string())),
        };
        source.base_offset = offset;
        if offset != 0 {
            source.label = format!("{}@{}", source.label, offset);
        }
        Ok(source)
    }

    /// The source for the translated point `s.x`.
    pub fn with_offset(&self, s: i64) -> Self {
        let mut out = self.clone();
        out.base_offset = self.base_offset + s;
        let stem = self.label.split('@').next().unwrap_or(&self.label).to_string();
        out.label = if out.base_offset == 0 {
            stem
        } else {
            format!("{}@{}", stem, out.base_offset)
        };
        out
    }

    pub fn base_offset(&self) -> i64 {
        self.base_offset
    }

    /// True for sources whose natural windows straddle the origin.
    pub fn is_two_sided(&self) -> bool {
        matches!(self.kind, SourceKind::Step | SourceKind::Explicit { .. })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alphabet(&self) -> Vec<u8> {
        match &self.kind {
            SourceKind::Substitution { rules, .. } => rules.alphabet(),
            SourceKind::Rotation { .. } => vec![b'a', b'b'],
            SourceKind::Periodic(word) => {
                let mut letters: Vec<u8> = word.clone();
                letters.sort_unstable();
                letters.dedup();
                letters
            }
            SourceKind::Step => vec![b'0', b'1'],
            SourceKind::Explicit { symbols, .. } => {
                let mut letters: Vec<u8> = symbols.clone();
                letters.sort_unstable();
                letters.dedup();
                letters
            }
            SourceKind::Bernoulli { .. } => vec![b'a', b'b'],
        }
    }

    /// Materialize `x(k + base_offset)` for k in the window.
    pub fn symbols(&self, window: Window) -> Result<Vec<u8>> {
        let shifted = window.shifted(self.base_offset);
        match &self.kind {
            SourceKind::Step => Ok(shifted.iter().map(|k| if k < 0 { b'0' } else { b'1' }).collect()),
            SourceKind::Periodic(word) => {
                let p = word.len() as i64;
                Ok(shifted.iter().map(|k| word[k.rem_euclid(p) as usize]).collect())
            }
            SourceKind::Rotation { alpha, intercept, cutpoint } => {
                Ok(shifted.iter().map(|k| rotation_symbol(*alpha, *intercept, *cutpoint, k)).collect())
            }
            SourceKind::Bernoulli { p, seed } => {
                Ok(shifted.iter().map(|k| bernoulli_symbol(*p, *seed, k)).collect())
            }
            SourceKind::Explicit { symbols, start } => {
                let available = Window { lo: *start, hi: *start + symbols.len() as i64 };
                if !available.covers(&shifted) {
                    return Err(Error::ExplicitCoverage { available, requested: shifted });
                }
                Ok(shifted.iter().map(|k| symbols[(k - start) as usize]).collect())
            }
            SourceKind::Substitution { rules, seed_left, seed_right, power } => {
                let mut right = vec![*seed_right];
                while (right.len() as i64) < shifted.hi.max(1) {
                    right = rules.apply_power(&right, *power);
                }
                let mut left = vec![*seed_left];
                while (left.len() as i64) < (-shifted.lo).max(1) {
                    left = rules.apply_power(&left, *power);
                }
                Ok(shifted
                    .iter()
                    .map(|k| {
                        if k >= 0 {
                            right[k as usize]
                        } else {
                            left[(left.len() as i64 + k) as usize]
                        }
                    })
                    .collect())
            }
        }
    }
}

impl fmt::Display for PointSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn rotation_symbol(alpha: f64, intercept: f64, cutpoint: f64, k: i64) -> u8 {
    let kf = k as f64;
    let p = alpha * kf;
    let p_lo = alpha.mul_add(kf, -p);
    let frac = (p.fract() + p_lo + intercept).rem_euclid(1.0);
    if frac < cutpoint {
        b'a'
    } else {
        b'b'
    }
}

/// Random-access Bernoulli draw: index k maps to a fixed stream position of a
/// seeded ChaCha generator, so symbols are reproducible and shift-covariant.
fn bernoulli_symbol(p: f64, seed: u64, k: i64) -> u8 {
    let zigzag = ((k << 1) ^ (k >> 63)) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(zigzag as u128 * 2);
    let v: f64 = rng.gen();
    if v < p {
        b'a'
    } else {
        b'b'
    }
}

fn parse_rotation(params: &str) -> Result<PointSource> {
    if params == "golden" {
        return Ok(PointSource::golden_rotation());
    }
    let mut alpha = None;
    let mut intercept = 0.0;
    let mut cutpoint = None;
    let parts: Vec<&str> = params.split(',').collect();
    let named = parts.iter().any(|p| p.contains('='));
    let parse_value = |v: &str| -> Result<f64> {
        if v == "golden" {
            Ok(GOLDEN_RATIO_CONJUGATE)
        } else {
            v.trim().parse().map_err(|_| Error::BadDescriptor {
                descriptor: params.to_string(),
                reason: format!("`{v}` is not a number"),
            })
        }
    };
    if named {
        for part in parts {
            let Some((key, value)) = part.split_once('=') else {
                return Err(Error::BadDescriptor {
                    descriptor: params.to_string(),
                    reason: "mix of named and positional rotation parameters".into(),
                });
            };
            match key.trim() {
                "alpha" => alpha = Some(parse_value(value)?),
                "intercept" => intercept = parse_value(value)?,
                "cutpoint" => cutpoint = Some(parse_value(value)?),
                other => {
                    return Err(Error::BadDescriptor {
                        descriptor: params.to_string(),
                        reason: format!("unknown rotation parameter `{other}`"),
                    })
                }
            }
        }
    } else {
        alpha = Some(parse_value(parts[0])?);
        if parts.len() > 1 {
            intercept = parse_value(parts[1])?;
        }
        if parts.len() > 2 {
            cutpoint = Some(parse_value(parts[2])?);
        }
    }
    let alpha = alpha.ok_or_else(|| Error::BadDescriptor {
        descriptor: params.to_string(),
        reason: "rotation needs alpha".into(),
    })?;
    PointSource::rotation(alpha, intercept, cutpoint.unwrap_or(alpha))
}

/// `[name](a->ab,b->a;seed=a|a)`, arrows `->` or the arrow glyph.
fn parse_substitution(spec: &str) -> Result<PointSource> {
    let bad = |reason: &str| Error::BadDescriptor {
        descriptor: format!("substitution:{spec}"),
        reason: reason.to_string(),
    };
    let open = spec.find('(').ok_or_else(|| bad("expected `(` after substitution name"))?;
    let close = spec.rfind(')').ok_or_else(|| bad("expected closing `)`"))?;
    let name = &spec[..open];
    let inner = &spec[open + 1..close];
    let (rule_part, seed_part) = inner.split_once(';').ok_or_else(|| bad("expected `;seed=l|r`"))?;
    let seed = seed_part
        .trim()
        .strip_prefix("seed=")
        .ok_or_else(|| bad("expected `seed=l|r` after `;`"))?;
    let (left, right) = seed.split_once('|').ok_or_else(|| bad("seed must be `l|r`"))?;
    if left.len() != 1 || right.len() != 1 {
        return Err(bad("seed letters must be single characters"));
    }
    let mut rules = BTreeMap::new();
    for rule in rule_part.split(',') {
        let rule = rule.trim().replace("\u{2192}", "->");
        let (from, to) = rule.split_once("->").ok_or_else(|| bad("rules are `letter->word`"))?;
        if from.len() != 1 || to.is_empty() {
            return Err(bad("rules are `letter->word` with a nonempty word"));
        }
        rules.insert(from.as_bytes()[0], to.as_bytes().to_vec());
    }
    let mut source =
        PointSource::substitution(SubstitutionRules::new(rules), left.as_bytes()[0], right.as_bytes()[0])?;
    if !name.is_empty() {
        source.label = format!("substitution:{name}");
    }
    Ok(source)
}

//! Half-open integer windows [lo, hi) and exact interval set arithmetic.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// The half-open integer interval [lo, hi).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo < hi {
            Ok(Window { lo, hi })
        } else {
            Err(Error::EmptyWindow { lo, hi })
        }
    }

    /// The closed symmetric interval [-n, n] as a half-open window.
    pub fn symmetric(n: i64) -> Self {
        Window { lo: -n, hi: n + 1 }
    }

    /// [0, n).
    pub fn one_sided(n: i64) -> Self {
        Window { lo: 0, hi: n }
    }

    pub fn len(&self) -> i64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains(&self, t: i64) -> bool {
        self.lo <= t && t < self.hi
    }

    pub fn covers(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn shifted(&self, s: i64) -> Window {
        Window { lo: self.lo + s, hi: self.hi + s }
    }

    /// Grow by `r` on both sides.
    pub fn inflated(&self, r: i64) -> Window {
        Window { lo: self.lo - r, hi: self.hi + r }
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..self.hi
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Window { lo, hi })
    }

    /// The difference set {x - y : x ∈ self, y ∈ other}, again an interval.
    pub fn minkowski_difference(&self, other: &Window) -> Window {
        Window { lo: self.lo - other.hi + 1, hi: self.hi - other.lo }
    }

    /// self △ (self + s) as up to two disjoint windows.
    pub fn symmetric_difference_with_shift(&self, s: i64) -> Vec<Window> {
        if s == 0 {
            return Vec::new();
        }
        let shifted = self.shifted(s);
        if s.unsigned_abs() as i64 >= self.len() {
            return vec![*self, shifted];
        }
        if s > 0 {
            vec![
                Window { lo: self.lo, hi: self.lo + s },
                Window { lo: self.hi, hi: self.hi + s },
            ]
        } else {
            vec![
                Window { lo: self.lo + s, hi: self.lo },
                Window { lo: self.hi + s, hi: self.hi },
            ]
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// A finite union of integer intervals, kept sorted and disjoint.
///
/// All measures are exact integer counts; this backs the Shulman-ratio
/// audits where difference sets of schedule windows are accumulated.
#[derive(Debug, Clone, Default)]
pub struct IntervalSet {
    parts: Vec<Window>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet::default()
    }

    pub fn insert(&mut self, w: Window) {
        if w.is_empty() {
            return;
        }
        // Merge with any overlapping or adjacent parts.
        let mut lo = w.lo;
        let mut hi = w.hi;
        let mut merged = Vec::with_capacity(self.parts.len() + 1);
        let mut placed = false;
        for part in &self.parts {
            if part.hi < lo || part.lo > hi {
                if !placed && part.lo > hi {
                    merged.push(Window { lo, hi });
                    placed = true;
                }
                merged.push(*part);
            } else {
                lo = lo.min(part.lo);
                hi = hi.max(part.lo.max(part.hi));
            }
        }
        if !placed {
            merged.push(Window { lo, hi });
        }
        merged.sort_by_key(|p| p.lo);
        self.parts = merged;
    }

    /// Total number of integers covered.
    pub fn measure(&self) -> i64 {
        self.parts.iter().map(Window::len).sum()
    }

    pub fn parts(&self) -> &[Window] {
        &self.parts
    }
}

//! Sets of arcs on the circle, stored as half-open spans `[start, end)` with
//! `start` in `[0, 2π)` and `start < end <= start + 2π`.

use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Self {
        let s = start.rem_euclid(TAU);
        let s = if s >= TAU { 0.0 } else { s };
        Self { start: s, end: s + (end - start) }
    }

    pub fn full() -> Self {
        Self { start: 0.0, end: TAU }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_full(&self) -> bool {
        self.len() >= TAU
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// True if angle `t` (any branch) falls inside the span.
    pub fn contains(&self, t: f64) -> bool {
        let d = (t - self.start).rem_euclid(TAU);
        d <= self.len()
    }
}

/// Intersection of two circular sets. Spans shorter than `min_len` are dropped.
pub fn intersect(a: &[Span], b: &[Span], min_len: f64) -> Vec<Span> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            if x.is_full() {
                out.push(*y);
                continue;
            }
            if y.is_full() {
                out.push(*x);
                continue;
            }
            for shift in [-TAU, 0.0, TAU] {
                let lo = x.start.max(y.start + shift);
                let hi = x.end.min(y.end + shift);
                if hi - lo > min_len {
                    out.push(Span::new(lo, hi));
                }
            }
        }
    }
    out.sort_by(|p, q| p.start.total_cmp(&q.start));
    out
}

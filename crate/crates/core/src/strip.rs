//! Tent strips: the one-dimensional slices of the distance function between
//! two edges.
//!
//! Fix an edge pair `(e, f)` and a position `s` on `e`. Along `f`, the
//! distance to `x_s` is `min(A(s) + t, B(s) − t)` on a parameter window
//! `[lo(s), hi(s)]`, where `A` and `B` are minima of affine functions of `s`
//! with slopes in `{−1, 0, +1}`. For `e ≠ f` one strip covers all of `f`; for
//! `e = f` there are two, one on each side of `s`.
//!
//! Between consecutive breakpoints (ties inside `A` or `B`, or the tent apex
//! hitting a window end) every quantity derived from a strip is a polynomial
//! in `s` of degree at most two.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub c: f64,
    pub k: f64,
}

impl Affine {
    pub const fn new(c: f64, k: f64) -> Self {
        Affine { c, k }
    }

    pub const fn constant(c: f64) -> Self {
        Affine { c, k: 0.0 }
    }

    #[inline]
    pub fn at(self, s: f64) -> f64 {
        self.c + self.k * s
    }

    /// Root of `self − other` if the slopes differ.
    fn tie(self, other: Affine) -> Option<f64> {
        let dk = self.k - other.k;
        (dk != 0.0).then(|| (other.c - self.c) / dk)
    }
}

/// Minimum of at most two affine functions.
#[derive(Clone, Copy, Debug)]
pub struct Envelope {
    items: [Affine; 2],
    len: usize,
}

impl Envelope {
    pub fn one(a: Affine) -> Self {
        Envelope { items: [a, a], len: 1 }
    }

    pub fn two(a: Affine, b: Affine) -> Self {
        Envelope { items: [a, b], len: 2 }
    }

    #[inline]
    pub fn at(&self, s: f64) -> f64 {
        let v = self.items[0].at(s);
        if self.len == 2 {
            v.min(self.items[1].at(s))
        } else {
            v
        }
    }

    pub fn items(&self) -> &[Affine] {
        &self.items[..self.len]
    }
}

/// Value of the tent `min(a + t, b − t)` restricted to `[lo, hi]`, evaluated
/// at its apex clamped into the window.
#[derive(Clone, Copy, Debug)]
pub struct Tent {
    pub rising: f64,
    pub falling: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Tent {
    #[inline]
    pub fn apex(&self) -> f64 {
        (0.5 * (self.falling - self.rising)).clamp(self.lo, self.hi)
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        (self.rising + t).min(self.falling - t)
    }

    /// `∫_lo^hi min(a + t, b − t) dt`.
    #[inline]
    pub fn integral(&self) -> f64 {
        let (lo, hi) = (self.lo, self.hi);
        if hi <= lo {
            return 0.0;
        }
        let m = self.apex();
        let up = (m - lo) * (self.rising + 0.5 * (m + lo));
        let down = (hi - m) * (self.falling - 0.5 * (hi + m));
        up + down
    }

    /// `max_{t ∈ [lo, hi]} min(a + t, b − t)`.
    #[inline]
    pub fn max(&self) -> f64 {
        self.value(self.apex())
    }

    /// The two monotone pieces as `(start value, end value)` pairs; both start
    /// at a window end and end at the apex.
    pub fn monotone_pieces(&self) -> [(f64, f64); 2] {
        let m = self.apex();
        [
            (self.rising + self.lo, self.rising + m),
            (self.falling - self.hi, self.falling - m),
        ]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Strip {
    pub lo: Affine,
    pub hi: Affine,
    pub rising: Envelope,
    pub falling: Envelope,
}

impl Strip {
    #[inline]
    pub fn tent(&self, s: f64) -> Tent {
        Tent {
            rising: self.rising.at(s),
            falling: self.falling.at(s),
            lo: self.lo.at(s),
            hi: self.hi.at(s),
        }
    }

    /// Candidate breakpoints in `s`, unsorted, possibly outside the domain.
    pub fn breakpoint_candidates(&self, out: &mut Vec<f64>) {
        for env in [&self.rising, &self.falling] {
            if let [a, b] = env.items() {
                out.extend(a.tie(*b));
            }
        }
        // apex (B − A)/2 meeting lo or hi
        for a in self.rising.items() {
            for b in self.falling.items() {
                for w in [self.lo, self.hi] {
                    let gap = Affine::new(b.c - a.c, b.k - a.k);
                    let twice = Affine::new(2.0 * w.c, 2.0 * w.k);
                    out.extend(gap.tie(twice));
                }
            }
        }
    }

    /// Sorted breakpoints including both ends of `[0, len]`; values closer than
    /// `1e-13·len` are merged.
    pub fn breakpoints(&self, len: f64, out: &mut Vec<f64>) {
        out.clear();
        out.push(0.0);
        out.push(len);
        self.breakpoint_candidates(out);
        sort_and_merge(out, len);
    }

    /// `∫_0^len ∫_lo^hi dist dt ds`, exact for the piecewise quadratic inner
    /// integral (two-point Gauss–Legendre on every piece).
    pub fn double_integral(&self, len: f64, scratch: &mut Vec<f64>) -> f64 {
        self.breakpoints(len, scratch);
        let mut total = 0.0;
        for w in scratch.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let off = half * GAUSS_NODE;
            total += half * (self.tent(mid - off).integral() + self.tent(mid + off).integral());
        }
        total
    }

    /// `max_{s ∈ [0, len]} max_t dist`; the inner max is piecewise affine in `s`.
    pub fn max_over(&self, len: f64, scratch: &mut Vec<f64>) -> f64 {
        self.breakpoints(len, scratch);
        scratch
            .iter()
            .map(|&s| self.tent(s).max())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `1/√3`.
pub const GAUSS_NODE: f64 = 0.577_350_269_189_625_8;

pub fn sort_and_merge(values: &mut Vec<f64>, len: f64) {
    values.retain(|s| s.is_finite() && *s >= 0.0 && *s <= len);
    values.sort_by(f64::total_cmp);
    let tol = 1e-13 * len;
    let mut out = 0;
    for i in 0..values.len() {
        if out == 0 || values[i] - values[out - 1] > tol {
            values[out] = values[i];
            out += 1;
        }
    }
    values.truncate(out);
    // keep the exact domain end
    if let Some(last) = values.last_mut() {
        *last = len;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_integral(t: &Tent, n: usize) -> f64 {
        let h = (t.hi - t.lo) / n as f64;
        (0..n)
            .map(|i| {
                let a = t.lo + i as f64 * h;
                // Simpson on each cell is exact for the affine pieces away from the apex
                h / 6.0 * (t.value(a) + 4.0 * t.value(a + 0.5 * h) + t.value(a + h))
            })
            .sum()
    }

    #[test]
    fn tent_integral_matches_quadrature() {
        let cases = [
            Tent { rising: 0.3, falling: 1.4, lo: 0.0, hi: 1.0 },
            Tent { rising: -0.2, falling: 0.2, lo: 0.2, hi: 1.0 },
            Tent { rising: 0.0, falling: 5.0, lo: 0.0, hi: 1.0 },
            Tent { rising: 2.0, falling: 2.5, lo: 0.0, hi: 0.5 },
        ];
        for t in cases {
            let exact = t.integral();
            let approx = brute_integral(&t, 1 << 16);
            assert!((exact - approx).abs() < 1e-9, "{t:?}: {exact} vs {approx}");
        }
    }

    #[test]
    fn merge_keeps_domain_ends() {
        let mut v = vec![0.5, 1.0, 0.0, 0.5 + 1e-16, -0.1, 2.0, f64::NAN];
        sort_and_merge(&mut v, 1.0);
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
    }
}

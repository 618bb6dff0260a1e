//! Interval partitions and the dyadic block decomposition.

use crate::error::{Error, Result};

/// Endpoint ownership of an interval inside a partition. Cells are
/// half-open `[lo, hi)` except the final cell, which is closed, so sums over
/// a partition count every point exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointRule {
    HalfOpen,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub rule: EndpointRule,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo < hi, "interval must have lo < hi, got [{lo}, {hi}]");
        Interval {
            lo,
            hi,
            rule: EndpointRule::HalfOpen,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Interval {
        let mut iv = Interval::new(lo, hi);
        iv.rule = EndpointRule::Closed;
        iv
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        match self.rule {
            EndpointRule::HalfOpen => t >= self.lo && t < self.hi,
            EndpointRule::Closed => t >= self.lo && t <= self.hi,
        }
    }
}

/// An ordered tiling of a parent interval by cells of nominal width `w`.
/// All cells have length exactly `w` except possibly the last, which is
/// clipped at the parent's right endpoint.
#[derive(Debug, Clone)]
pub struct Partition {
    pub cells: Vec<Interval>,
    pub width: f64,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn parent(&self) -> Interval {
        Interval::closed(self.cells[0].lo, self.cells[self.cells.len() - 1].hi)
    }
}

/// Partition `parent` into cells of width `width`, clipping the last cell.
pub fn uniform_partition(parent: Interval, width: f64) -> Result<Partition> {
    if width.is_nan() || width <= 0.0 {
        return Err(Error::Domain(format!(
            "partition width must be positive, got {width}"
        )));
    }
    if width > parent.length() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "partition width {width} exceeds parent length {}",
            parent.length()
        )));
    }
    let len = parent.length();
    // Guard against a spurious sliver cell when len/width is within rounding
    // of an integer.
    let mut n = (len / width - 1e-9).ceil() as usize;
    n = n.max(1);
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let lo = parent.lo + i as f64 * width;
        let hi = if i + 1 == n {
            parent.hi
        } else {
            parent.lo + (i + 1) as f64 * width
        };
        let mut iv = Interval::new(lo, hi);
        if i + 1 == n {
            iv.rule = EndpointRule::Closed;
        }
        cells.push(iv);
    }
    Ok(Partition { cells, width })
}

/// The dyadic decomposition of `(0, upper]` at scale `delta^(1/2 - epsilon)`:
/// a head interval `(0, h]` followed by doubling blocks `[2^(k-1) h, 2^k h]`,
/// the last clipped at `upper`.
#[derive(Debug, Clone)]
pub struct DyadicBlocks {
    pub head: Interval,
    pub blocks: Vec<Interval>,
    pub delta: f64,
    pub epsilon: f64,
}

impl DyadicBlocks {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

pub fn dyadic_blocks(delta: f64, epsilon: f64, upper: f64) -> Result<DyadicBlocks> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain(format!(
            "epsilon must be in (0, 1/2), got {epsilon}"
        )));
    }
    if !(upper > 0.0 && upper <= 1.0) {
        return Err(Error::Domain(format!(
            "upper must be in (0,1], got {upper}"
        )));
    }
    let h = delta.powf(0.5 - epsilon);
    if h >= upper * (1.0 - 1e-12) {
        // Degenerate: the head already covers everything.
        return Ok(DyadicBlocks {
            head: Interval::closed(0.0, upper),
            blocks: Vec::new(),
            delta,
            epsilon,
        });
    }
    let mut blocks = Vec::new();
    let mut left = h;
    while left < upper * (1.0 - 1e-12) {
        let right = (2.0 * left).min(upper);
        blocks.push(Interval::closed(left, right));
        left = right;
    }
    let k = blocks.len() as f64;
    debug_assert!(
        k <= (1.0 / delta).log2() + 1.0 + 1e-9,
        "block count {k} exceeds log2(1/delta)+1"
    );
    Ok(DyadicBlocks {
        head: Interval::closed(0.0, h),
        blocks,
        delta,
        epsilon,
    })
}

/// Membership of a point in the closed vertical `2*delta` neighborhood of a
/// height function: true iff `|y - height(t)| <= 2*delta`.
pub fn neighborhood_contains<F: Fn(f64) -> f64>(height: F, delta: f64, point: (f64, f64)) -> bool {
    let (t, y) = point;
    (y - height(t)).abs() <= 2.0 * delta
}

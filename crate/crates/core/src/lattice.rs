//! Integer lattice geometry on Z^d: points, euclidean balls and annuli,
//! exterior boundaries and the inward-neighbor construction.

use std::fmt;
use std::ops::{Add, Index, Sub};

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of sites a single enumeration may produce.
pub const DEFAULT_SITE_BUDGET: u64 = 50_000_000;

/// A site of Z^d.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point<const D: usize>(#[serde(with = "serde_arrays")] pub [i32; D]);

impl<const D: usize> Point<D> {
    pub const ORIGIN: Self = Point([0; D]);

    pub fn new(coords: [i32; D]) -> Self {
        Point(coords)
    }

    /// Point on the first coordinate axis.
    pub fn axis(x: i32) -> Self {
        let mut c = [0; D];
        c[0] = x;
        Point(c)
    }

    pub fn coords(&self) -> &[i32; D] {
        &self.0
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dist_sq(&self, other: &Self) -> i64 {
        (*self - *other).norm_sq()
    }

    pub fn is_neighbor(&self, other: &Self) -> bool {
        self.dist_sq(other) == 1
    }

    /// Neighbor in direction `dir` in `0..2D`: axis `dir / 2`, sign `+` for even.
    #[inline]
    pub fn step(mut self, dir: usize) -> Self {
        let axis = dir >> 1;
        self.0[axis] += if dir & 1 == 0 { 1 } else { -1 };
        self
    }

    pub fn neighbors(self) -> impl Iterator<Item = Self> {
        (0..2 * D).map(move |dir| self.step(dir))
    }

    /// Direction index taking `self` to the neighbor `to`, if adjacent.
    pub fn direction_to(&self, to: &Self) -> Option<usize> {
        (0..2 * D).find(|&dir| self.step(dir) == *to)
    }

    pub fn as_f64(&self) -> [f64; D] {
        self.0.map(|c| c as f64)
    }
}

impl<const D: usize> Default for Point<D> {
    fn default() -> Self {
        Self::ORIGIN
    }
}

impl<const D: usize> Index<usize> for Point<D> {
    type Output = i32;
    fn index(&self, i: usize) -> &i32 {
        &self.0[i]
    }
}

impl<const D: usize> Add for Point<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const D: usize> Sub for Point<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const D: usize> fmt::Debug for Point<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const D: usize>(v: &[i32; D], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, const D: usize>(de: De) -> Result<[i32; D], De::Error> {
        let v = Vec::<i32>::deserialize(de)?;
        v.try_into()
            .map_err(|v: Vec<i32>| serde::de::Error::invalid_length(v.len(), &"lattice dimension"))
    }
}

/// Smallest integer `m` with `m >= r^2`, computed exactly.
///
/// For an integer squared norm `q`, `q < r^2` iff `q < sq_threshold(r)`.
pub fn sq_threshold(r: f64) -> i64 {
    if r <= 0.0 {
        return 0;
    }
    // sign of r*r - m is exact under a single rounding
    let below = |m: i64| r.mul_add(r, -(m as f64)) > 0.0;
    let mut c = (r * r).ceil() as i64;
    while c > 0 && !below(c - 1) {
        c -= 1;
    }
    while below(c) {
        c += 1;
    }
    c
}

/// Open euclidean ball `B(center, radius)` restricted to the lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball<const D: usize> {
    pub center: Point<D>,
    pub radius: f64,
    threshold: i64,
}

impl<const D: usize> Ball<D> {
    pub fn new(center: Point<D>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::Radius(radius));
        }
        Ok(Ball { center, radius, threshold: sq_threshold(radius) })
    }

    pub fn centered(radius: f64) -> Result<Self> {
        Self::new(Point::ORIGIN, radius)
    }

    #[inline]
    pub fn contains(&self, p: &Point<D>) -> bool {
        p.dist_sq(&self.center) < self.threshold
    }

    pub fn sq_threshold(&self) -> i64 {
        self.threshold
    }
}

/// Lattice annulus `{y : inner <= |y| < outer}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
    lo: i64,
    hi: i64,
}

impl Annulus {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !inner.is_finite() || !outer.is_finite() || outer < 0.0 || inner > outer {
            return Err(Error::Invalid(format!("annulus [{inner}, {outer})")));
        }
        Ok(Annulus { inner, outer, lo: sq_threshold(inner), hi: sq_threshold(outer) })
    }

    #[inline]
    pub fn contains_sq(&self, norm_sq: i64) -> bool {
        norm_sq >= self.lo && norm_sq < self.hi
    }

    pub fn contains<const D: usize>(&self, p: &Point<D>) -> bool {
        self.contains_sq(p.norm_sq())
    }

    pub fn sites<const D: usize>(&self, budget: u64) -> Result<Vec<Point<D>>> {
        let ball = Ball::<D>::centered(self.outer)?;
        Ok(ball_sites(&ball, budget)?.into_iter().filter(|p| self.contains(p)).collect())
    }
}

/// Calls `f` on every site of the box `[lo, hi]^D` (inclusive), lexicographically.
pub fn for_each_in_box<const D: usize>(lo: [i32; D], hi: [i32; D], mut f: impl FnMut(Point<D>)) {
    if (0..D).any(|k| lo[k] > hi[k]) {
        return;
    }
    let mut cur = lo;
    loop {
        f(Point(cur));
        let mut k = D;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if cur[k] < hi[k] {
                cur[k] += 1;
                break;
            }
            cur[k] = lo[k];
        }
    }
}

/// Every lattice site of the ball, in lexicographic order.
pub fn ball_sites<const D: usize>(ball: &Ball<D>, budget: u64) -> Result<Vec<Point<D>>> {
    let count = ball_count::<D>(ball.radius);
    if count > budget {
        return Err(Error::Budget { count, budget });
    }
    let reach = ball.radius.ceil() as i32;
    let lo = ball.center.0.map(|c| c - reach);
    let hi = ball.center.0.map(|c| c + reach);
    let mut out = Vec::new();
    for_each_in_box(lo, hi, |p| {
        if ball.contains(&p) {
            out.push(p);
        }
    });
    Ok(out)
}

/// `|B(0, r) ∩ Z^D|`, counted column by column without materializing the sites.
pub fn ball_count<const D: usize>(radius: f64) -> u64 {
    let thr = sq_threshold(radius);
    if thr == 0 {
        return 0;
    }
    fn rec(dims_left: usize, remaining: i64, reach: i64) -> u64 {
        if dims_left == 1 {
            // #{x : x^2 < remaining}
            if remaining <= 0 {
                return 0;
            }
            let mut m = ((remaining - 1) as f64).sqrt() as i64;
            while m * m >= remaining {
                m -= 1;
            }
            while (m + 1) * (m + 1) < remaining {
                m += 1;
            }
            return (2 * m + 1) as u64;
        }
        let mut total = 0;
        for x in -reach..=reach {
            let rest = remaining - x * x;
            if rest > 0 {
                total += rec(dims_left - 1, rest, reach);
            }
        }
        total
    }
    rec(D, thr, radius.ceil() as i64)
}

/// Exterior boundary: sites outside `sites` with a neighbor inside.
pub fn boundary<const D: usize>(sites: &[Point<D>]) -> Vec<Point<D>> {
    let inside: FxHashSet<Point<D>> = sites.iter().copied().collect();
    let mut seen = FxHashSet::default();
    let mut out = Vec::new();
    for p in sites {
        for q in p.neighbors() {
            if !inside.contains(&q) && seen.insert(q) {
                out.push(q);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Neighbor of `z` one unit closer to the origin along a coordinate of
/// maximal absolute value (lowest index on ties).
///
/// The result satisfies `|result| <= |z| - 1/(2 sqrt(d))`.
pub fn inward_neighbor<const D: usize>(z: &Point<D>) -> Result<Point<D>> {
    let (axis, _) = z
        .0
        .iter()
        .enumerate()
        .fold((0, 0), |best, (k, &c)| if c.abs() > best.1 { (k, c.abs()) } else { best });
    if z.0[axis] == 0 {
        return Err(Error::Origin);
    }
    let mut out = *z;
    out.0[axis] -= z.0[axis].signum();
    Ok(out)
}

/// Volume of the euclidean unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    // v_d = pi^{d/2} / Gamma(d/2 + 1), by the two-step recursion v_d = 2 pi v_{d-2} / d
    let (mut v, mut k) = if d % 2 == 0 { (1.0, 0) } else { (2.0, 1) };
    while k < d {
        k += 2;
        v *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v
}

/// Radius `n` such that `v_d n^d` matches `count`, to first order.
pub fn radius_for_volume(d: usize, count: u64) -> f64 {
    (count as f64 / unit_ball_volume(d)).powf(1.0 / d as f64)
}

//! Concentric shell partition of the lattice, entry spheres, cells and the
//! tile-center covering of each shell.
//!
//! Shell 0 is the ball `B(0, h0)`. Shell `j >= 1` is the annulus
//! `r_j - h_j <= |y| < r_j + h_j` with `h_j = r_j^{1/(d+1)}`, the radii being
//! chained so that each inner edge equals the previous outer edge.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{for_each_in_box, sq_threshold, Point};

/// Width of the central ball used when none is configured.
pub const DEFAULT_H0: f64 = 10.0;

/// Radius and half-width of one shell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub r: f64,
    pub h: f64,
}

/// Shell partition `(S_j)` with cached squared-norm thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellTable {
    d: usize,
    h0: f64,
    shells: Vec<Shell>,
    /// `edges[j]` is the outer edge of `S_j` (the inner edge of `S_{j+1}`).
    edges: Vec<f64>,
    outer_thr: Vec<i64>,
    sigma_thr: Vec<i64>,
}

/// Solves `r - r^{1/(d+1)} = target` for `r >= 1` by bisection.
fn solve_radius(d: usize, target: f64) -> f64 {
    let exponent = 1.0 / (d as f64 + 1.0);
    let f = |r: f64| r - r.powf(exponent);
    let mut lo = target.max(1.0);
    let mut hi = lo + 1.0;
    while f(hi) < target {
        hi = 2.0 * hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // whichever end lands closer to the target
    if (f(hi) - target).abs() < (f(lo) - target).abs() {
        hi
    } else {
        lo
    }
}

#[derive(Serialize, Deserialize)]
struct ShellTableFile {
    d: usize,
    h0: f64,
    shells: Vec<(usize, f64, f64)>,
}

impl ShellTable {
    /// Builds shells until the outer edge of the last one reaches `max_radius`.
    pub fn build(d: usize, h0: f64, max_radius: f64) -> Result<Self> {
        if d < 3 {
            return Err(Error::Dimension(d));
        }
        if !(h0 >= 4.0) || !h0.is_finite() {
            return Err(Error::BaseWidth(h0));
        }
        if !max_radius.is_finite() {
            return Err(Error::Radius(max_radius));
        }
        let exponent = 1.0 / (d as f64 + 1.0);
        let mut shells = vec![Shell { r: 0.0, h: h0 }];
        let mut edge = h0;
        while edge < max_radius {
            let r = solve_radius(d, edge);
            let h = r.powf(exponent);
            shells.push(Shell { r, h });
            edge = r + h;
        }
        Ok(Self::from_shells(d, h0, shells))
    }

    fn from_shells(d: usize, h0: f64, shells: Vec<Shell>) -> Self {
        let edges: Vec<f64> = shells.iter().map(|s| s.r + s.h).collect();
        let outer_thr = edges.iter().map(|&e| sq_threshold(e)).collect();
        let sigma_thr = shells.iter().map(|s| sq_threshold(s.r)).collect();
        ShellTable { d, h0, shells, edges, outer_thr, sigma_thr }
    }

    /// Table covering a flashing cluster of `explorers` sites. An explorer
    /// fails a constant fraction of its flashes, so the margin beyond the
    /// ball of equal volume is a number of shells growing like `log N`.
    pub fn for_cluster(d: usize, h0: f64, explorers: u64) -> Result<Self> {
        let mut r = crate::lattice::radius_for_volume(d, explorers.max(1)) + h0;
        let margin = (10.0 * ((explorers + 2) as f64).ln()).ceil() as usize + 40;
        for _ in 0..margin {
            r += 2.0 * r.powf(1.0 / (d as f64 + 1.0)) + 1.0;
        }
        Self::build(d, h0, r)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn len(&self) -> usize {
        self.shells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shells.is_empty()
    }

    pub fn shell(&self, j: usize) -> Shell {
        self.shells[j]
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    /// Outer edge `r_j + h_j` of shell `j`.
    pub fn outer_edge(&self, j: usize) -> f64 {
        self.edges[j]
    }

    /// Inner edge of shell `j` (`-inf` for the central ball).
    pub fn inner_edge(&self, j: usize) -> f64 {
        if j == 0 {
            f64::NEG_INFINITY
        } else {
            self.edges[j - 1]
        }
    }

    pub fn coverage(&self) -> f64 {
        *self.edges.last().expect("table has shell 0")
    }

    #[inline]
    pub fn outer_threshold(&self, j: usize) -> i64 {
        self.outer_thr[j]
    }

    #[inline]
    pub fn inner_threshold(&self, j: usize) -> i64 {
        if j == 0 {
            0
        } else {
            self.outer_thr[j - 1]
        }
    }

    /// Squared-norm threshold of `B(0, r_j)`; a walk started inside hits
    /// `Σ_j` exactly when its squared norm first reaches this value.
    #[inline]
    pub fn sigma_threshold(&self, j: usize) -> i64 {
        self.sigma_thr[j]
    }

    #[inline]
    pub fn in_shell_sq(&self, j: usize, norm_sq: i64) -> bool {
        norm_sq >= self.inner_threshold(j) && norm_sq < self.outer_thr[j]
    }

    pub fn in_shell<const D: usize>(&self, j: usize, p: &Point<D>) -> bool {
        self.in_shell_sq(j, p.norm_sq())
    }

    /// Index of the unique shell containing a site of squared norm `norm_sq`.
    pub fn shell_index_sq(&self, norm_sq: i64) -> Result<usize> {
        let j = self.outer_thr.partition_point(|&t| t <= norm_sq);
        if j == self.outer_thr.len() {
            Err(Error::Coverage { norm_sq, edge: self.coverage() })
        } else {
            Ok(j)
        }
    }

    pub fn shell_index<const D: usize>(&self, p: &Point<D>) -> Result<usize> {
        self.check_dim::<D>();
        self.shell_index_sq(p.norm_sq())
    }

    /// Whether `p` lies on the entry sphere `Σ_j`.
    pub fn on_sigma<const D: usize>(&self, j: usize, p: &Point<D>) -> bool {
        if j == 0 {
            return p.is_origin();
        }
        let t = self.sigma_thr[j];
        p.norm_sq() >= t && p.neighbors().any(|q| q.norm_sq() < t)
    }

    /// Sites of `Σ_j`, sorted lexicographically.
    pub fn sigma_sites<const D: usize>(&self, j: usize) -> Vec<Point<D>> {
        self.check_dim::<D>();
        if j == 0 {
            return vec![Point::ORIGIN];
        }
        let t = self.sigma_thr[j];
        // Σ_j sites have r_j <= |y| < r_j + 1
        let hi = sq_threshold(self.shells[j].r + 1.0);
        let mut out = Vec::new();
        for_each_in_norm_range::<D>(t, hi, |p| {
            if p.neighbors().any(|q| q.norm_sq() < t) {
                out.push(p);
            }
        });
        out.sort_unstable();
        out
    }

    /// Sites of the shell `S_j`, unsorted.
    pub fn shell_sites<const D: usize>(&self, j: usize) -> Vec<Point<D>> {
        self.check_dim::<D>();
        let mut out = Vec::new();
        for_each_in_norm_range::<D>(self.inner_threshold(j), self.outer_thr[j], |p| out.push(p));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ShellTableFile {
            d: self.d,
            h0: self.h0,
            shells: self.shells.iter().enumerate().map(|(j, s)| (j, s.r, s.h)).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ShellTableFile = serde_json::from_str(text)?;
        if file.d < 3 {
            return Err(Error::Dimension(file.d));
        }
        let mut shells = Vec::with_capacity(file.shells.len());
        for (k, (j, r, h)) in file.shells.into_iter().enumerate() {
            if j != k {
                return Err(Error::Invalid(format!("shell index {j} at position {k}")));
            }
            shells.push(Shell { r, h });
        }
        if shells.is_empty() || shells[0].r != 0.0 || shells[0].h != file.h0 {
            return Err(Error::Invalid("shell 0 must be (0, 0, h0)".into()));
        }
        Ok(Self::from_shells(file.d, file.h0, shells))
    }

    fn check_dim<const D: usize>(&self) {
        assert_eq!(D, self.d, "point dimension does not match the shell table");
    }
}

/// Calls `f` on every site with `lo <= |y|^2 < hi`, solving for the last
/// coordinate so that only the shell itself is visited.
pub fn for_each_in_norm_range<const D: usize>(lo: i64, hi: i64, mut f: impl FnMut(Point<D>)) {
    if hi <= 0 || lo >= hi {
        return;
    }
    let reach = ((hi - 1) as f64).sqrt().floor() as i32 + 1;
    let isqrt_floor = |v: i64| -> i64 {
        if v < 0 {
            return -1;
        }
        let mut m = (v as f64).sqrt() as i64;
        while m * m > v {
            m -= 1;
        }
        while (m + 1) * (m + 1) <= v {
            m += 1;
        }
        m
    };
    let mut head = [0i32; D];
    let mut lo_box = [-reach; D];
    let mut hi_box = [reach; D];
    lo_box[D - 1] = 0;
    hi_box[D - 1] = 0;
    for_each_in_box(lo_box, hi_box, |p| {
        let s: i64 = p.0[..D - 1].iter().map(|&c| (c as i64) * (c as i64)).sum();
        if s >= hi {
            return;
        }
        // last coordinate x with lo - s <= x^2 < hi - s
        let xmax = isqrt_floor(hi - s - 1);
        let xmin = if lo - s <= 0 { 0 } else { isqrt_floor(lo - s - 1) + 1 };
        if xmin > xmax {
            return;
        }
        head[..D - 1].copy_from_slice(&p.0[..D - 1]);
        for x in xmin..=xmax {
            head[D - 1] = x as i32;
            f(Point(head));
            if x != 0 {
                head[D - 1] = -(x as i32);
                f(Point(head));
            }
        }
    });
}

/// Cone through `B(center, aperture)` intersected with the shell `S_shell`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell<const D: usize> {
    pub shell: usize,
    pub center: Point<D>,
    pub aperture: f64,
}

impl<const D: usize> Cell<D> {
    /// The cell `C(z)` (aperture `h_j/2`).
    pub fn new(table: &ShellTable, shell: usize, center: Point<D>) -> Self {
        Cell { shell, center, aperture: table.shell(shell).h / 2.0 }
    }

    /// The tile cone `C~(z)` (aperture `h_j/5`).
    pub fn tile_cone(table: &ShellTable, shell: usize, center: Point<D>) -> Self {
        Cell { shell, center, aperture: table.shell(shell).h / 5.0 }
    }

    pub fn contains(&self, table: &ShellTable, p: &Point<D>) -> bool {
        cell_contains(table, self, p)
    }
}

/// Whether the ray from the origin through `p` meets the open ball
/// `B(center, aperture)`.
pub fn in_cone<const D: usize>(center: &Point<D>, aperture: f64, p: &Point<D>) -> bool {
    let c = center.as_f64();
    let x = p.as_f64();
    let c2: f64 = c.iter().map(|v| v * v).sum();
    let x2: f64 = x.iter().map(|v| v * v).sum();
    if x2 == 0.0 {
        return c2 < aperture * aperture;
    }
    let dot: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    // squared distance from the center to the half-line {λ p : λ >= 0}
    let dist_sq = if dot > 0.0 { c2 - dot * dot / x2 } else { c2 };
    dist_sq < aperture * aperture
}

/// Cell membership. Shell 0 has the whole ball as its single cell.
pub fn cell_contains<const D: usize>(table: &ShellTable, cell: &Cell<D>, p: &Point<D>) -> bool {
    if !table.in_shell(cell.shell, p) {
        return false;
    }
    cell.shell == 0 || in_cone(&cell.center, cell.aperture, p)
}

/// Uniform hash grid over lattice points, bucketed by `cell_size`.
#[derive(Clone, Debug)]
struct PointGrid<const D: usize> {
    cell: f64,
    buckets: FxHashMap<[i32; D], Vec<u32>>,
}

impl<const D: usize> PointGrid<D> {
    fn new(cell: f64) -> Self {
        PointGrid { cell: cell.max(1.0), buckets: FxHashMap::default() }
    }

    fn key(&self, x: &[f64; D]) -> [i32; D] {
        x.map(|v| (v / self.cell).floor() as i32)
    }

    fn insert(&mut self, p: &Point<D>, id: u32) {
        self.buckets.entry(self.key(&p.as_f64())).or_default().push(id);
    }

    /// Ids whose bucket intersects the cube of half-side `radius` about `x`.
    fn near(&self, x: &[f64; D], radius: f64, mut f: impl FnMut(u32) -> bool) -> bool {
        let lo = x.map(|v| ((v - radius) / self.cell).floor() as i32);
        let hi = x.map(|v| ((v + radius) / self.cell).floor() as i32);
        let mut found = false;
        for_each_in_box(lo, hi, |k| {
            if found {
                return;
            }
            if let Some(ids) = self.buckets.get(&k.0) {
                for &id in ids {
                    if f(id) {
                        found = true;
                        return;
                    }
                }
            }
        });
        found
    }
}

/// Tile centers `Σ~_j ⊆ Σ_j` of one shell.
#[derive(Clone, Debug)]
pub struct TileCover<const D: usize> {
    pub shell: usize,
    pub spacing: f64,
    pub centers: Vec<Point<D>>,
    /// `|Σ_j|` over the region the centers were selected from.
    pub sigma_count: usize,
    grid: PointGrid<D>,
}

impl<const D: usize> TileCover<D> {
    /// Greedy lexicographic sweep: a site becomes a center iff no center
    /// already chosen lies within `spacing` of it.
    pub fn greedy(table: &ShellTable, shell: usize, mut sigma: Vec<Point<D>>, spacing: f64) -> Self {
        sigma.sort_unstable();
        let h = table.shell(shell).h;
        let mut grid = PointGrid::new(spacing.max(h / 5.0));
        let mut centers: Vec<Point<D>> = Vec::new();
        let spacing_sq = spacing * spacing;
        for z in &sigma {
            let x = z.as_f64();
            let close = grid.near(&x, spacing, |id| (centers[id as usize].dist_sq(z) as f64) < spacing_sq);
            if !close {
                grid.insert(z, centers.len() as u32);
                centers.push(*z);
            }
        }
        TileCover { shell, spacing, centers, sigma_count: sigma.len(), grid }
    }

    /// `|Σ~_j| h_j^{d-1} / |Σ_j|`, the constant of the center-count bound.
    pub fn density_constant(&self, table: &ShellTable) -> f64 {
        let h = table.shell(self.shell).h;
        self.centers.len() as f64 * h.powi(D as i32 - 1) / self.sigma_count as f64
    }

    /// Centers `z~` whose tile cone `C~(z~)` contains `p`.
    pub fn covering_centers(&self, table: &ShellTable, p: &Point<D>) -> Vec<Point<D>> {
        let mut out = Vec::new();
        self.visit_covering(table, p, |z| {
            out.push(*z);
            false
        });
        out
    }

    pub fn is_covered(&self, table: &ShellTable, p: &Point<D>) -> bool {
        self.visit_covering(table, p, |_| true)
    }

    fn visit_covering(&self, table: &ShellTable, p: &Point<D>, mut f: impl FnMut(&Point<D>) -> bool) -> bool {
        let sh = table.shell(self.shell);
        if !table.in_shell(self.shell, p) {
            return false;
        }
        let aperture = sh.h / 5.0;
        let pn = p.norm();
        if pn == 0.0 {
            return false;
        }
        // project p to the entry sphere; candidate centers lie within aperture (+ slack)
        let scale = sh.r / pn;
        let q = p.as_f64().map(|v| v * scale);
        self.grid.near(&q, aperture + 2.0, |id| {
            let z = &self.centers[id as usize];
            in_cone(z, aperture, p) && f(z)
        })
    }
}

/// Tile cover built from every site of `Σ_j` with spacing `h_j / 5`.
pub fn tile_centers<const D: usize>(table: &ShellTable, shell: usize) -> Result<TileCover<D>> {
    if shell == 0 {
        return Err(Error::Invalid("tile covers are defined for shells j >= 1".into()));
    }
    let spacing = table.shell(shell).h / 5.0;
    Ok(TileCover::greedy(table, shell, table.sigma_sites::<D>(shell), spacing))
}

/// The tile `T(z) = C~(z) ∩ Σ_j`.
pub fn tile<const D: usize>(table: &ShellTable, shell: usize, center: &Point<D>) -> Vec<Point<D>> {
    let sh = table.shell(shell);
    let aperture = sh.h / 5.0;
    // sites of Σ_j in the cone lie within aperture * (r_j + 1) / r_j + 1 of the center
    let reach = (aperture * (sh.r + 1.0) / sh.r + 2.0).ceil() as i32;
    let lo = center.0.map(|c| c - reach);
    let hi = center.0.map(|c| c + reach);
    let mut out = Vec::new();
    for_each_in_box(lo, hi, |y| {
        if in_cone(center, aperture, &y) && table.on_sigma(shell, &y) {
            out.push(y);
        }
    });
    out
}

/// Whether every tile site `y ∈ T(z~)` has `p ∈ C(y)`.
pub fn tile_shares_cell<const D: usize>(table: &ShellTable, shell: usize, tile_sites: &[Point<D>], p: &Point<D>) -> bool {
    tile_sites.iter().all(|y| cell_contains(table, &Cell::new(table, shell, *y), p))
}

/// Summary of an exhaustive covering scan over part of a shell.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CoverageScan {
    pub scanned: usize,
    pub uncovered: usize,
    pub without_shared_cell: usize,
}

/// Scans the sites of `S_j` accepted by `region`: each must be covered by a
/// tile cone, and some covering center's tile must put it in every tile
/// site's cell.
pub fn scan_coverage<const D: usize>(
    table: &ShellTable,
    cover: &TileCover<D>,
    region: impl Fn(&Point<D>) -> bool,
    check_shared_cell: bool,
) -> CoverageScan {
    let j = cover.shell;
    let mut tiles = FxHashMap::default();
    let mut scan = CoverageScan::default();
    for_each_in_norm_range::<D>(table.inner_threshold(j), table.outer_threshold(j), |p| {
        if region(&p) {
            scan_site(table, cover, &mut tiles, &mut scan, &p, check_shared_cell);
        }
    });
    scan
}

fn scan_site<const D: usize>(
    table: &ShellTable,
    cover: &TileCover<D>,
    tiles: &mut FxHashMap<Point<D>, Vec<Point<D>>>,
    scan: &mut CoverageScan,
    p: &Point<D>,
    check_shared_cell: bool,
) {
    let j = cover.shell;
    scan.scanned += 1;
    if !cover.is_covered(table, p) {
        scan.uncovered += 1;
    }
    if check_shared_cell {
        let mut ok = false;
        // any center whose tile shares a cell with p; candidates near p's direction
        let sh = table.shell(j);
        let scale = sh.r / p.norm();
        let q = p.as_f64().map(|v| v * scale);
        cover.grid.near(&q, sh.h / 5.0 + 2.0, |id| {
            let z = cover.centers[id as usize];
            let t = tiles.entry(z).or_insert_with(|| tile(table, j, &z));
            if !t.is_empty() && tile_shares_cell(table, j, t, p) {
                ok = true;
            }
            ok
        });
        if !ok {
            scan.without_shared_cell += 1;
        }
    }
}

/// Exhaustive covering scan of the part of `S_j` whose radial projection
/// onto `Σ_j` lies within `window` of the positive first axis. Centers are
/// chosen greedily from a wider window so the edge of the region is not
/// starved.
pub fn window_coverage<const D: usize>(table: &ShellTable, shell: usize, window: f64) -> Result<(TileCover<D>, CoverageScan)> {
    if shell == 0 || shell >= table.len() {
        return Err(Error::Invalid(format!("shell {shell} has no tile cover")));
    }
    let sh = table.shell(shell);
    let anchor = sigma_axis_point::<D>(table, shell);
    let spacing = sh.h / 5.0;
    let cover = TileCover::greedy(table, shell, sigma_window(table, shell, &anchor, window + 2.0 * spacing + 4.0), spacing);
    let a = anchor.as_f64();
    let outer = table.outer_edge(shell);
    let side = (window * outer / sh.r).ceil() as i32 + 2;
    let mut lo = [-side; D];
    let mut hi = [side; D];
    lo[0] = table.inner_edge(shell).floor() as i32 - 1;
    hi[0] = outer.ceil() as i32 + 1;
    let mut tiles = FxHashMap::default();
    let mut scan = CoverageScan::default();
    for_each_in_box(lo, hi, |p| {
        if !table.in_shell(shell, &p) {
            return;
        }
        let scale = sh.r / p.norm();
        let d2: f64 = p.as_f64().iter().zip(&a).map(|(x, y)| (x * scale - y).powi(2)).sum();
        if d2 <= window * window {
            scan_site(table, &cover, &mut tiles, &mut scan, &p, true);
        }
    });
    Ok((cover, scan))
}

/// Sites of `Σ_j` within euclidean distance `radius` of `anchor`.
pub fn sigma_window<const D: usize>(table: &ShellTable, shell: usize, anchor: &Point<D>, radius: f64) -> Vec<Point<D>> {
    let reach = radius.ceil() as i32 + 1;
    let lo = anchor.0.map(|c| c - reach);
    let hi = anchor.0.map(|c| c + reach);
    let mut out = Vec::new();
    let r2 = radius * radius;
    for_each_in_box(lo, hi, |y| {
        if (y.dist_sq(anchor) as f64) < r2 && table.on_sigma(shell, &y) {
            out.push(y);
        }
    });
    out
}

/// The site of `Σ_j` on the positive first axis.
pub fn sigma_axis_point<const D: usize>(table: &ShellTable, shell: usize) -> Point<D> {
    if shell == 0 {
        return Point::ORIGIN;
    }
    let t = table.sigma_threshold(shell);
    let mut x = (t as f64).sqrt().floor() as i64;
    while x * x < t {
        x += 1;
    }
    while x > 0 && (x - 1) * (x - 1) >= t {
        x -= 1;
    }
    Point::axis(x as i32)
}

/// Distinct shells visited, as a set of indices.
pub fn shells_of<const D: usize>(table: &ShellTable, sites: &[Point<D>]) -> Result<FxHashSet<usize>> {
    sites.iter().map(|p| table.shell_index(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ball_sites, boundary, Ball};

    fn bisect_oracle(d: usize, target: f64) -> f64 {
        let f = |r: f64| r - r.powf(1.0 / (d as f64 + 1.0)) - target;
        let (mut a, mut b) = (1.0, 10.0 * target + 10.0);
        for _ in 0..300 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                b = m
            } else {
                a = m
            }
        }
        a
    }

    #[test]
    fn first_radius() {
        let t = ShellTable::build(3, 10.0, 100.0).unwrap();
        let r1 = t.shell(1).r;
        assert!((r1 - bisect_oracle(3, 10.0)).abs() < 1e-9);
        assert!((r1 - 11.8556).abs() < 1e-3, "r1 = {r1}");
        assert!((r1 - t.shell(1).h - 10.0).abs() < 1e-9);
    }

    #[test]
    fn recursion_is_exact() {
        for d in [3, 4, 5] {
            let t = ShellTable::build(d, 6.0, 3000.0).unwrap();
            for j in 1..t.len() {
                let s = t.shell(j);
                assert!((s.h - s.r.powf(1.0 / (d as f64 + 1.0))).abs() < 1e-12);
                assert!((s.r - s.h - t.outer_edge(j - 1)).abs() <= 1e-9, "d={d} j={j}");
            }
            assert!(t.coverage() >= 3000.0);
        }
    }

    #[test]
    fn asymptotic_radius_growth() {
        let t = ShellTable::build(3, 10.0, 3000.0).unwrap();
        let j = 200;
        let predicted = (1.5 * j as f64).powf(4.0 / 3.0);
        let ratio = t.shell(j).r / predicted;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn rejects_small_base() {
        assert!(matches!(ShellTable::build(3, 3.5, 10.0), Err(Error::BaseWidth(_))));
        assert!(matches!(ShellTable::build(2, 10.0, 10.0), Err(Error::Dimension(2))));
    }

    #[test]
    fn shell_index_conventions() {
        let t = ShellTable::build(3, 10.0, 60.0).unwrap();
        assert_eq!(t.shell_index(&Point([0, 0, 0])).unwrap(), 0);
        assert_eq!(t.shell_index(&Point([10, 0, 0])).unwrap(), 1);
        assert_eq!(t.shell_index(&Point([9, 0, 0])).unwrap(), 0);
        assert!(matches!(t.shell_index(&Point([1000, 0, 0])), Err(Error::Coverage { .. })));
    }

    #[test]
    fn sigma_is_boundary_of_ball() {
        let t = ShellTable::build(3, 10.0, 60.0).unwrap();
        assert_eq!(t.sigma_sites::<3>(0), vec![Point([0, 0, 0])]);
        for j in 1..5 {
            let r = t.shell(j).r;
            let ball = ball_sites(&Ball::<3>::centered(r).unwrap(), 1 << 24).unwrap();
            let mut expect = boundary(&ball);
            expect.sort_unstable();
            let sigma = t.sigma_sites::<3>(j);
            assert_eq!(sigma, expect, "shell {j}");
            for z in &sigma {
                assert!(z.norm() >= r && z.norm() < t.outer_edge(j));
                assert_eq!(t.shell_index(z).unwrap(), j);
                assert!(t.on_sigma(j, z));
            }
        }
    }

    #[test]
    fn norm_range_enumeration() {
        let mut a = Vec::new();
        for_each_in_norm_range::<3>(20, 50, |p| a.push(p));
        a.sort_unstable();
        let mut b = Vec::new();
        for_each_in_box([-8; 3], [8; 3], |p: Point<3>| {
            let q = p.norm_sq();
            if (20..50).contains(&q) {
                b.push(p)
            }
        });
        assert_eq!(a, b);
    }

    #[test]
    fn cells() {
        let t = ShellTable::build(3, 10.0, 200.0).unwrap();
        let j = 5;
        let z = sigma_axis_point::<3>(&t, j);
        assert!(t.on_sigma(j, &z));
        let cell = Cell::new(&t, j, z);
        assert!(cell.contains(&t, &z));
        let anti = Point([-z[0], 0, 0]);
        assert!(!cell.contains(&t, &anti));
        // shell 0: whole ball
        let c0 = Cell::new(&t, 0, Point::<3>::ORIGIN);
        for p in t.shell_sites::<3>(0) {
            assert!(c0.contains(&t, &p));
        }
        assert!(!c0.contains(&t, &Point([10, 0, 0])));
    }

    #[test]
    fn cone_matches_definition() {
        // brute force: the ray through p meets B(c, a) iff some sampled λ p is inside
        let c = Point([7, 2, -1]);
        let a = 2.5;
        for_each_in_box([-9; 3], [9; 3], |p: Point<3>| {
            if p.is_origin() {
                return;
            }
            let x = p.as_f64();
            let cc = c.as_f64();
            let n2: f64 = x.iter().map(|v| v * v).sum();
            let lam = (x.iter().zip(&cc).map(|(u, v)| u * v).sum::<f64>() / n2).max(0.0);
            let d2: f64 = (0..3).map(|k| (lam * x[k] - cc[k]).powi(2)).sum();
            assert_eq!(in_cone(&c, a, &p), d2 < a * a, "p={p:?}");
        });
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = ShellTable::build(4, 7.5, 500.0).unwrap();
        let text = t.to_json().unwrap();
        let back = ShellTable::from_json(&text).unwrap();
        assert_eq!(t, back);
        for (a, b) in t.shells().iter().zip(back.shells()) {
            assert_eq!(a.r.to_bits(), b.r.to_bits());
            assert_eq!(a.h.to_bits(), b.h.to_bits());
        }
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn partition_is_unique(c in prop::array::uniform3(-150i32..150)) {
            let t = ShellTable::build(3, 10.0, 300.0).unwrap();
            let p = Point(c);
            let j = t.shell_index(&p).unwrap();
            let n = p.norm();
            prop_assert!(j == 0 && n < 10.0 || j > 0 && t.inner_edge(j) <= n + 1e-9 && n < t.outer_edge(j) + 1e-9);
            for k in 0..t.len() {
                prop_assert_eq!(t.in_shell(k, &p), k == j);
            }
        }
    }
}

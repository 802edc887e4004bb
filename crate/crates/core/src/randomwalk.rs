//! Seeded simple random walks and the flashing stopping rule.
//!
//! Every walk segment draws from an [`RngStream`] keyed by
//! `(master seed, explorer, shell)`, so the randomness an explorer uses inside
//! a shell does not depend on the order in which explorers are advanced.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{for_each_in_box, sq_threshold, Point};
use crate::shellgeom::{Cell, ShellTable};

/// Default cap on the number of steps of a single walk.
pub const DEFAULT_STEP_CAP: u64 = 10_000_000_000;

/// Shell id reserved for plain internal-DLA walks.
pub const IDLA_STREAM: u64 = u64::MAX;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic random stream for one `(seed, explorer, shell)` triple.
#[derive(Clone, Debug)]
pub struct RngStream {
    pub seed: u64,
    pub explorer: u64,
    pub shell: u64,
    draws: u64,
    rng: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64, explorer: u64, shell: u64) -> Self {
        let key = splitmix(splitmix(splitmix(seed) ^ explorer) ^ shell.rotate_left(29));
        RngStream { seed, explorer, shell, draws: 0, rng: Xoshiro256PlusPlus::seed_from_u64(key) }
    }

    pub fn idla(seed: u64, explorer: u64) -> Self {
        Self::new(seed, explorer, IDLA_STREAM)
    }

    /// Number of 64-bit words consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        // 53 random bits, shifted off zero
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.draws += 1;
        self.rng.gen_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.draws += 1;
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.draws += 1;
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.draws += 1;
        self.rng.try_fill_bytes(dest)
    }
}

/// Position of a walk with its squared norm tracked incrementally.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Walker<const D: usize> {
    pub pos: Point<D>,
    pub norm_sq: i64,
}

impl<const D: usize> Walker<D> {
    pub fn at(pos: Point<D>) -> Self {
        Walker { pos, norm_sq: pos.norm_sq() }
    }

    #[inline]
    pub fn step(&mut self, dir: usize) {
        let axis = dir >> 1;
        let c = self.pos.0[axis] as i64;
        if dir & 1 == 0 {
            self.norm_sq += 2 * c + 1;
            self.pos.0[axis] += 1;
        } else {
            self.norm_sq += 1 - 2 * c;
            self.pos.0[axis] -= 1;
        }
    }
}

/// A nearest-neighbor path stored as direction indices from `start`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trajectory<const D: usize> {
    pub start: Point<D>,
    pub dirs: Vec<u8>,
    /// Length of the prefix already used by a coupled walk.
    pub consumed: usize,
}

impl<const D: usize> Trajectory<D> {
    pub fn new(start: Point<D>) -> Self {
        Trajectory { start, dirs: Vec::new(), consumed: 0 }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Positions `S(0), ..., S(len)`.
    pub fn positions(&self) -> impl Iterator<Item = Point<D>> + '_ {
        std::iter::once(self.start).chain(self.dirs.iter().scan(self.start, |p, &dir| {
            *p = p.step(dir as usize);
            Some(*p)
        }))
    }

    pub fn end(&self) -> Point<D> {
        self.dirs.iter().fold(self.start, |p, &dir| p.step(dir as usize))
    }

    pub fn position_at(&self, t: usize) -> Point<D> {
        self.dirs[..t].iter().fold(self.start, |p, &dir| p.step(dir as usize))
    }

    pub fn is_nearest_neighbor_path(&self) -> bool {
        let pts: Vec<_> = self.positions().collect();
        pts.windows(2).all(|w| w[0].is_neighbor(&w[1])) && self.consumed <= self.len()
    }
}

/// End of a stopped walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkEnd<const D: usize> {
    pub end: Walker<D>,
    pub steps: u64,
}

/// Runs a simple random walk from `start` until `stop` holds (checked at
/// time 0 as well), appending directions to `record` when given.
#[inline]
pub fn walk_until<const D: usize>(
    stream: &mut RngStream,
    start: Walker<D>,
    mut stop: impl FnMut(&Walker<D>) -> bool,
    mut record: Option<&mut Vec<u8>>,
    cap: u64,
) -> Result<WalkEnd<D>> {
    let dirs = Uniform::new(0u32, 2 * D as u32);
    let mut w = start;
    let mut steps = 0u64;
    while !stop(&w) {
        if steps >= cap {
            return Err(Error::StepCap(cap));
        }
        let dir = dirs.sample(&mut stream.rng) as usize;
        stream.draws += 1;
        w.step(dir);
        if let Some(rec) = record.as_deref_mut() {
            rec.push(dir as u8);
        }
        steps += 1;
    }
    Ok(WalkEnd { end: w, steps })
}

/// The independent draws `(X_j, Y_j, R_j)` that parametrize one flash.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlashDraw {
    /// Immediate flash at the entry site, probability `h_j^{-d}`.
    pub x: bool,
    /// Ball (`true`) or annulus (`false`) stopping set; always `true` in shell 0.
    pub y: bool,
    /// Radius with density `d h^{d-1} / h_j^d` on `[0, h_j]`.
    pub r: f64,
}

pub fn draw_flash(stream: &mut RngStream, shell: usize, table: &ShellTable) -> FlashDraw {
    let d = table.dim() as i32;
    let h = table.shell(shell).h;
    let x = stream.uniform() < h.powi(-d);
    let coin = stream.uniform() < 0.5;
    let u = stream.uniform();
    FlashDraw { x, y: shell == 0 || coin, r: h * u.powf(1.0 / d as f64) }
}

/// Result of the flashing stopping rule started on `Σ_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlashOutcome<const D: usize> {
    pub site: Walker<D>,
    pub steps: u64,
    /// Whether the stopped site lies in the cell centered at the entry site.
    pub in_cell: bool,
}

/// Walks from `entry` (a site of `Σ_shell`) until the stopping time selected
/// by `draw`.
pub fn flash_stop<const D: usize>(
    stream: &mut RngStream,
    entry: Walker<D>,
    draw: &FlashDraw,
    shell: usize,
    table: &ShellTable,
    record: Option<&mut Vec<u8>>,
    cap: u64,
) -> Result<FlashOutcome<D>> {
    let sh = table.shell(shell);
    let end = if draw.x {
        WalkEnd { end: entry, steps: 0 }
    } else if draw.y {
        let radius = draw.r.min(sh.r + sh.h - entry.pos.norm());
        let thr = sq_threshold(radius);
        let center = entry.pos;
        walk_until(stream, entry, |w| w.pos.dist_sq(&center) >= thr, record, cap)?
    } else {
        let lo = sq_threshold(sh.r - draw.r);
        let hi = sq_threshold(sh.r + draw.r);
        walk_until(stream, entry, |w| w.norm_sq < lo || w.norm_sq >= hi, record, cap)?
    };
    let in_cell = Cell::new(table, shell, entry.pos).contains(table, &end.end.pos);
    Ok(FlashOutcome { site: end.end, steps: end.steps, in_cell })
}

/// Monte Carlo estimate of the flashing-site law over the cell `C(z_j)`.
#[derive(Clone, Debug, Serialize)]
pub struct HittingProfile<const D: usize> {
    pub shell: usize,
    pub h: f64,
    pub samples: u64,
    pub cell_size: usize,
    /// `h_j^d` times the empirical probability, per cell site.
    #[serde(skip)]
    pub scaled: FxHashMap<Point<D>, f64>,
    pub min: f64,
    pub max: f64,
    pub entry_scaled: f64,
}

impl<const D: usize> HittingProfile<D> {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// Sites of the cell `C(z)` of shell `shell`.
pub fn cell_sites<const D: usize>(table: &ShellTable, shell: usize, z: &Point<D>) -> Vec<Point<D>> {
    let cell = Cell::new(table, shell, *z);
    if shell == 0 {
        return table.shell_sites(0);
    }
    let h = table.shell(shell).h;
    let reach = (1.6 * h).ceil() as i32 + 3;
    let lo = z.0.map(|c| c - reach);
    let hi = z.0.map(|c| c + reach);
    let mut out = Vec::new();
    for_each_in_box(lo, hi, |p| {
        if cell.contains(table, &p) {
            out.push(p);
        }
    });
    out
}

pub fn uniform_hitting_profile<const D: usize>(
    table: &ShellTable,
    shell: usize,
    entry: &Point<D>,
    samples: u64,
    seed: u64,
) -> Result<HittingProfile<D>> {
    if !table.on_sigma(shell, entry) {
        return Err(Error::Invalid(format!("{entry:?} is not on Σ_{shell}")));
    }
    let mut counts: FxHashMap<Point<D>, u64> = FxHashMap::default();
    for s in 0..samples {
        let mut stream = RngStream::new(seed, s, shell as u64);
        let draw = draw_flash(&mut stream, shell, table);
        let out = flash_stop(&mut stream, Walker::at(*entry), &draw, shell, table, None, DEFAULT_STEP_CAP)?;
        if out.in_cell {
            *counts.entry(out.site.pos).or_default() += 1;
        }
    }
    let h = table.shell(shell).h;
    let scale = h.powi(D as i32) / samples as f64;
    let sites = cell_sites(table, shell, entry);
    let mut scaled = FxHashMap::default();
    let (mut min, mut max) = (f64::INFINITY, 0.0f64);
    for p in &sites {
        let v = counts.get(p).copied().unwrap_or(0) as f64 * scale;
        min = min.min(v);
        max = max.max(v);
        scaled.insert(*p, v);
    }
    let entry_scaled = scaled.get(entry).copied().unwrap_or(0.0);
    Ok(HittingProfile { shell, h, samples, cell_size: sites.len(), scaled, min, max, entry_scaled })
}

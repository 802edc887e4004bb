//! Internal DLA and the flashing process, built explorer by explorer or by
//! exploration waves.

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{ball_count, Point};
use crate::randomwalk::{draw_flash, flash_stop, walk_until, RngStream, Trajectory, Walker, DEFAULT_STEP_CAP};
use crate::shellgeom::ShellTable;

/// Largest dense core, in cells.
const DENSE_CELLS: usize = 1 << 28;

/// Occupied sites: a dense bitmap over the cube `[-half, half]^D`, doubled on
/// demand up to [`DENSE_CELLS`], with a hash set for sites beyond it.
#[derive(Clone, Debug)]
pub struct Occupancy<const D: usize> {
    half: i32,
    side: usize,
    bits: Vec<u64>,
    overflow: FxHashSet<Point<D>>,
    count: usize,
}

impl<const D: usize> Default for Occupancy<D> {
    fn default() -> Self {
        Self::with_half_width(8)
    }
}

fn cube_cells(half: i32, d: usize) -> Option<usize> {
    (2 * half as usize + 1).checked_pow(d as u32)
}

impl<const D: usize> Occupancy<D> {
    pub fn with_half_width(half: i32) -> Self {
        let mut half = half.max(1);
        while cube_cells(half, D).is_none_or(|c| c > DENSE_CELLS) {
            half /= 2;
        }
        let side = 2 * half as usize + 1;
        let cells = side.pow(D as u32);
        Occupancy { half, side, bits: vec![0; cells.div_ceil(64)], overflow: FxHashSet::default(), count: 0 }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Sites held outside the dense core.
    pub fn overflow_len(&self) -> usize {
        self.overflow.len()
    }

    #[inline]
    fn index(&self, p: &Point<D>) -> Option<usize> {
        let mut idx = 0usize;
        for &c in &p.0 {
            if c < -self.half || c > self.half {
                return None;
            }
            idx = idx * self.side + (c + self.half) as usize;
        }
        Some(idx)
    }

    #[inline]
    pub fn contains(&self, p: &Point<D>) -> bool {
        match self.index(p) {
            Some(i) => self.bits[i >> 6] >> (i & 63) & 1 == 1,
            None => !self.overflow.is_empty() && self.overflow.contains(p),
        }
    }

    /// Marks `p`; returns `false` if it was already occupied.
    pub fn insert(&mut self, p: Point<D>) -> bool {
        let i = loop {
            match self.index(&p) {
                Some(i) => break i,
                None => {
                    let needed = p.0.iter().map(|c| c.abs()).max().unwrap_or(0);
                    let target = (2 * self.half).max(needed + 1);
                    if cube_cells(target, D).is_some_and(|c| c <= DENSE_CELLS) {
                        self.grow(target);
                    } else {
                        let fresh = self.overflow.insert(p);
                        self.count += fresh as usize;
                        return fresh;
                    }
                }
            }
        };
        let (word, bit) = (i >> 6, 1u64 << (i & 63));
        if self.bits[word] & bit != 0 {
            return false;
        }
        self.bits[word] |= bit;
        self.count += 1;
        true
    }

    fn grow(&mut self, half: i32) {
        let mut bigger = Self::with_half_width(half);
        for p in self.iter() {
            bigger.insert(p);
        }
        *self = bigger;
    }

    pub fn iter(&self) -> impl Iterator<Item = Point<D>> + '_ {
        let dense = self.bits.iter().enumerate().flat_map(move |(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let mut idx = w * 64 + b;
                let mut c = [0i32; D];
                for k in (0..D).rev() {
                    c[k] = (idx % self.side) as i32 - self.half;
                    idx /= self.side;
                }
                Some(Point(c))
            })
        });
        dense.chain(self.overflow.iter().copied())
    }
}

/// A cluster with one settled site per explorer.
#[derive(Clone, Debug)]
pub struct ClusterState<const D: usize> {
    pub occupied: Occupancy<D>,
    /// Settled site of each explorer, indexed by label.
    pub sites: Vec<Point<D>>,
    max_norm_sq: i64,
}

impl<const D: usize> Default for ClusterState<D> {
    fn default() -> Self {
        ClusterState { occupied: Occupancy::default(), sites: Vec::new(), max_norm_sq: 0 }
    }
}

impl<const D: usize> ClusterState<D> {
    pub fn with_capacity(n: usize) -> Self {
        let half = (crate::lattice::radius_for_volume(D, n as u64) * 1.3).ceil() as i32 + 4;
        ClusterState { occupied: Occupancy::with_half_width(half), sites: Vec::with_capacity(n), max_norm_sq: 0 }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    #[inline]
    pub fn contains(&self, p: &Point<D>) -> bool {
        self.occupied.contains(p)
    }

    /// Settles the next explorer at `p`.
    pub fn push(&mut self, p: Point<D>) {
        let fresh = self.occupied.insert(p);
        debug_assert!(fresh, "site {p:?} settled twice");
        self.max_norm_sq = self.max_norm_sq.max(p.norm_sq());
        self.sites.push(p);
    }

    pub fn max_norm_sq(&self) -> i64 {
        self.max_norm_sq
    }

    pub fn max_norm(&self) -> f64 {
        (self.max_norm_sq as f64).sqrt()
    }

    /// Smallest squared norm of an unoccupied site.
    pub fn min_vacant_norm_sq(&self) -> i64 {
        // a vacant site of minimal norm has its inward neighbor occupied
        if !self.contains(&Point::ORIGIN) {
            return 0;
        }
        let mut best = i64::MAX;
        for p in self.occupied.iter() {
            for q in p.neighbors() {
                if !self.contains(&q) {
                    best = best.min(q.norm_sq());
                }
            }
        }
        best
    }

    pub fn min_vacant_norm(&self) -> f64 {
        (self.min_vacant_norm_sq() as f64).sqrt()
    }

    /// `δ_I(n)`: how far the largest centered ball inside the cluster falls
    /// short of radius `n`.
    pub fn inner_error(&self, n: f64) -> f64 {
        (n - self.min_vacant_norm()).max(0.0)
    }

    /// `δ_O(n)`: how far the cluster reaches beyond radius `n`.
    pub fn outer_error(&self, n: f64) -> f64 {
        (self.max_norm() - n).max(0.0)
    }

    /// Whether the cluster is connected under nearest-neighbor adjacency.
    pub fn is_connected(&self) -> bool {
        let Some(&first) = self.sites.first() else { return true };
        let mut seen = Occupancy::<D>::with_half_width(8);
        seen.insert(first);
        let mut stack = vec![first];
        while let Some(p) = stack.pop() {
            for q in p.neighbors() {
                if self.contains(&q) && seen.insert(q) {
                    stack.push(q);
                }
            }
        }
        seen.len() == self.len()
    }
}

/// Internal DLA: each walk from the origin settles at its first site outside
/// the current cluster.
pub fn idla_grow<const D: usize>(n: usize, seed: u64) -> Result<ClusterState<D>> {
    if n == 0 {
        return Err(Error::Invalid("need at least one explorer".into()));
    }
    let mut cluster = ClusterState::with_capacity(n);
    for k in 0..n {
        let mut stream = RngStream::idla(seed, k as u64);
        let occ = &cluster.occupied;
        let end = walk_until(&mut stream, Walker::at(Point::ORIGIN), |w| !occ.contains(&w.pos), None, DEFAULT_STEP_CAP)?;
        cluster.push(end.end.pos);
    }
    Ok(cluster)
}

/// Counters from a flashing run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FlashStats {
    pub flash_attempts: u64,
    pub flashed_occupied: u64,
    pub flashed_outside_cell: u64,
    pub max_shell: usize,
}

/// Result of the explorer-by-explorer flashing construction.
#[derive(Clone, Debug)]
pub struct DirectRun<const D: usize> {
    pub cluster: ClusterState<D>,
    /// Walk of each explorer from the origin to its settling time, when recorded.
    pub trajectories: Vec<Trajectory<D>>,
    /// Shell where each explorer settled.
    pub settle_shell: Vec<usize>,
    pub stats: FlashStats,
}

/// One explorer in one shell: flash from its entry site, and if the flash
/// fails walk on to `Σ_{shell+1}`.
enum ShellStep<const D: usize> {
    Settled(Point<D>),
    Next(Walker<D>),
}

fn explore_shell<const D: usize>(
    table: &ShellTable,
    occupied: &Occupancy<D>,
    seed: u64,
    explorer: u64,
    shell: usize,
    entry: Walker<D>,
    mut record: Option<&mut Vec<u8>>,
    stats: &mut FlashStats,
) -> Result<ShellStep<D>> {
    let mut stream = RngStream::new(seed, explorer, shell as u64);
    let draw = draw_flash(&mut stream, shell, table);
    let out = flash_stop(&mut stream, entry, &draw, shell, table, record.as_deref_mut(), DEFAULT_STEP_CAP)?;
    stats.flash_attempts += 1;
    stats.max_shell = stats.max_shell.max(shell);
    if out.in_cell {
        if !occupied.contains(&out.site.pos) {
            return Ok(ShellStep::Settled(out.site.pos));
        }
        stats.flashed_occupied += 1;
    } else {
        stats.flashed_outside_cell += 1;
    }
    let next = shell + 1;
    if next >= table.len() {
        return Err(Error::Coverage { norm_sq: out.site.norm_sq, edge: table.coverage() });
    }
    let thr = table.sigma_threshold(next);
    let end = walk_until(&mut stream, out.site, |w| w.norm_sq >= thr, record, DEFAULT_STEP_CAP)?;
    Ok(ShellStep::Next(end.end))
}

fn check_settle_shell<const D: usize>(table: &ShellTable, site: &Point<D>, shell: usize) -> Result<()> {
    if table.shell_index(site)? != shell {
        return Err(Error::Invalid(format!("explorer settled at {site:?} outside shell {shell}")));
    }
    Ok(())
}

/// Flashing process built one explorer at a time.
pub fn flashing_grow_direct<const D: usize>(
    n: usize,
    seed: u64,
    table: &ShellTable,
    record: bool,
) -> Result<DirectRun<D>> {
    if n == 0 {
        return Err(Error::Invalid("need at least one explorer".into()));
    }
    if table.dim() != D {
        return Err(Error::Dimension(table.dim()));
    }
    let mut cluster = ClusterState::with_capacity(n);
    let mut trajectories = Vec::new();
    let mut settle_shell = Vec::with_capacity(n);
    let mut stats = FlashStats::default();
    for i in 0..n {
        let mut dirs = Vec::new();
        let mut entry = Walker::at(Point::ORIGIN);
        let mut shell = 0;
        let site = loop {
            let rec = if record { Some(&mut dirs) } else { None };
            match explore_shell(table, &cluster.occupied, seed, i as u64, shell, entry, rec, &mut stats)? {
                ShellStep::Settled(p) => break p,
                ShellStep::Next(w) => {
                    entry = w;
                    shell += 1;
                }
            }
        };
        check_settle_shell(table, &site, shell)?;
        cluster.push(site);
        settle_shell.push(shell);
        if record {
            trajectories.push(Trajectory { start: Point::ORIGIN, dirs, consumed: 0 });
        }
    }
    Ok(DirectRun { cluster, trajectories, settle_shell, stats })
}

/// Unsettled explorers standing on `Σ_k` at the start of wave `k`.
#[derive(Clone, Debug)]
pub struct WaveState<const D: usize> {
    pub k: usize,
    /// `(label, ξ_k(label))` in label order.
    pub positions: Vec<(u64, Point<D>)>,
    /// `|A*_k|`, sites settled in earlier waves.
    pub settled_before: usize,
}

impl<const D: usize> WaveState<D> {
    pub fn unsettled(&self) -> usize {
        self.positions.len()
    }
}

/// `W_k(Λ)`: unsettled explorers standing in `Λ`.
pub fn wave_counts<const D: usize>(wave: &WaveState<D>, lambda: impl Fn(&Point<D>) -> bool) -> usize {
    wave.positions.iter().filter(|(_, p)| lambda(p)).count()
}

/// Per-wave summary kept by [`flashing_grow_waves`].
#[derive(Clone, Debug, Serialize)]
pub struct WaveSummary {
    pub k: usize,
    pub unsettled: usize,
    pub settled_before: usize,
    /// Whether all of `B(0, r_k - h_k)` was filled when the wave started.
    pub inner_filled: bool,
}

/// Exploration-wave construction, advanced one wave at a time.
pub struct Waves<'a, const D: usize> {
    table: &'a ShellTable,
    seed: u64,
    n: usize,
    k: usize,
    queue: Vec<(u64, Walker<D>)>,
    settled: Vec<Option<Point<D>>>,
    pub cluster: Occupancy<D>,
    pub stats: FlashStats,
}

impl<'a, const D: usize> Waves<'a, D> {
    pub fn new(n: usize, seed: u64, table: &'a ShellTable) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("need at least one explorer".into()));
        }
        if table.dim() != D {
            return Err(Error::Dimension(table.dim()));
        }
        let half = (crate::lattice::radius_for_volume(D, n as u64) * 1.3).ceil() as i32 + 4;
        Ok(Waves {
            table,
            seed,
            n,
            k: 0,
            queue: (0..n as u64).map(|i| (i, Walker::at(Point::ORIGIN))).collect(),
            settled: vec![None; n],
            cluster: Occupancy::with_half_width(half),
            stats: FlashStats::default(),
        })
    }

    pub fn is_done(&self) -> bool {
        self.queue.is_empty()
    }

    /// State before the next wave.
    pub fn state(&self) -> WaveState<D> {
        WaveState {
            k: self.k,
            positions: self.queue.iter().map(|(i, w)| (*i, w.pos)).collect(),
            settled_before: self.cluster.len(),
        }
    }

    /// Runs wave `k`: explorers on `Σ_k` flash in label order, then the
    /// survivors walk to `Σ_{k+1}`.
    pub fn advance(&mut self) -> Result<()> {
        let k = self.k;
        let mut next = Vec::with_capacity(self.queue.len());
        for &(i, entry) in &self.queue {
            match explore_shell(self.table, &self.cluster, self.seed, i, k, entry, None, &mut self.stats)? {
                ShellStep::Settled(p) => {
                    check_settle_shell(self.table, &p, k)?;
                    self.cluster.insert(p);
                    self.settled[i as usize] = Some(p);
                }
                ShellStep::Next(w) => next.push((i, w)),
            }
        }
        self.queue = next;
        self.k += 1;
        Ok(())
    }

    /// Whether `B(0, r_k - h_k)` is entirely occupied.
    pub fn inner_filled(&self) -> bool {
        if self.k == 0 {
            return true;
        }
        let edge = self.table.outer_edge(self.k - 1);
        // the inscribed cube bounds the ball from below; counting far balls is slow
        let half = (edge / (D as f64).sqrt() - 1e-9).ceil() as u64;
        let cube = (2 * half.saturating_sub(1) + 1).checked_pow(D as u32).unwrap_or(u64::MAX);
        if cube > self.cluster.len() as u64 {
            return false;
        }
        self.cluster.len() as u64 == ball_count::<D>(edge)
    }

    pub fn finish(mut self) -> Result<(ClusterState<D>, Vec<WaveSummary>)> {
        let mut summaries = Vec::new();
        while !self.is_done() {
            let inner_filled = self.inner_filled();
            if inner_filled && self.k > 0 {
                // every settled site lies in a shell below k, so equal counts mean equal sets
                let thr = self.table.outer_threshold(self.k - 1);
                if self.cluster.iter().any(|p| p.norm_sq() >= thr) {
                    return Err(Error::Invalid(format!("wave {} cluster leaks past its shells", self.k)));
                }
            }
            summaries.push(WaveSummary {
                k: self.k,
                unsettled: self.queue.len(),
                settled_before: self.cluster.len(),
                inner_filled,
            });
            self.advance()?;
        }
        let mut cluster = ClusterState::with_capacity(self.n);
        for p in self.settled {
            cluster.push(p.expect("every explorer settles"));
        }
        Ok((cluster, summaries))
    }
}

pub fn flashing_grow_waves<const D: usize>(
    n: usize,
    seed: u64,
    table: &ShellTable,
) -> Result<(ClusterState<D>, Vec<WaveSummary>)> {
    Waves::new(n, seed, table)?.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustc_hash::FxHashSet;

    #[test]
    fn occupancy_grows_and_iterates() {
        let mut occ = Occupancy::<3>::with_half_width(1);
        let pts = [Point([0, 0, 0]), Point([1, -1, 0]), Point([7, 0, -9]), Point([-20, 3, 3])];
        for p in pts {
            assert!(occ.insert(p));
        }
        assert!(!occ.insert(Point([1, -1, 0])));
        assert_eq!(occ.len(), 4);
        let got: FxHashSet<_> = occ.iter().collect();
        assert_eq!(got, pts.into_iter().collect());
        assert!(!occ.contains(&Point([100, 0, 0])));
    }

    #[test]
    fn far_sites_spill_into_overflow() {
        let mut occ = Occupancy::<4>::with_half_width(4);
        let far = Point([5000, 0, -1, 2]);
        assert!(occ.insert(far));
        assert!(occ.insert(Point([1, 1, 1, 1])));
        assert!(!occ.insert(far));
        assert_eq!(occ.overflow_len(), 1);
        assert!(occ.contains(&far));
        assert_eq!(occ.iter().count(), 2);
    }

    #[test]
    fn idla_single_explorer() {
        let c = idla_grow::<3>(1, 5).unwrap();
        assert_eq!(c.sites, vec![Point::ORIGIN]);
        assert!(idla_grow::<3>(0, 5).is_err());
    }

    #[test]
    fn idla_small_clusters_are_connected() {
        for seed in 0..20 {
            let c = idla_grow::<3>(7, seed).unwrap();
            assert_eq!(c.len(), 7);
            assert_eq!(c.occupied.len(), 7);
            assert!(c.is_connected());
            assert!(c.contains(&Point::ORIGIN));
        }
    }

    #[test]
    fn vacant_radius_of_full_ball() {
        let ball = crate::lattice::ball_sites(&crate::lattice::Ball::<3>::centered(4.0).unwrap(), u64::MAX).unwrap();
        let mut c = ClusterState::<3>::default();
        for p in ball {
            c.push(p);
        }
        assert_eq!(c.min_vacant_norm(), 4.0);
        assert!(c.max_norm() < 4.0);
    }

    fn table(d: usize, n: usize) -> ShellTable {
        ShellTable::for_cluster(d, 4.0, n as u64).unwrap()
    }

    #[test]
    fn flashing_single_explorer_settles_in_ball() {
        let t = table(3, 1);
        let run = flashing_grow_direct::<3>(1, 9, &t, true).unwrap();
        assert_eq!(run.cluster.len(), 1);
        let site = run.cluster.sites[0];
        assert_eq!(run.trajectories[0].end(), site);
        assert_eq!(t.shell_index(&site).unwrap(), run.settle_shell[0]);
    }

    #[test]
    fn waves_match_direct() {
        for seed in 0..5 {
            let t = table(3, 400);
            let direct = flashing_grow_direct::<3>(400, seed, &t, false).unwrap();
            let (waves, summaries) = flashing_grow_waves::<3>(400, seed, &t).unwrap();
            assert_eq!(direct.cluster.sites, waves.sites);
            assert_eq!(direct.cluster.occupied.len(), 400);
            for w in summaries.windows(2) {
                assert!(w[1].unsettled <= w[0].unsettled);
            }
        }
    }

    #[test]
    fn wave_count_identities() {
        let t = table(3, 300);
        let mut waves = Waves::<3>::new(300, 2, &t).unwrap();
        while !waves.is_done() {
            let st = waves.state();
            assert_eq!(wave_counts(&st, |_| false), 0);
            if st.k > 0 {
                assert_eq!(wave_counts(&st, |p| t.on_sigma(st.k, p)), 300 - st.settled_before);
            }
            waves.advance().unwrap();
        }
    }
}

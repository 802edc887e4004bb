//! Internal DLA driven by flashing trajectories, with blue/red bookkeeping.
//!
//! Explorer `m` of internal DLA first follows the flashing trajectory `S*_m`.
//! If that trajectory never leaves the current cluster it ends on a red site,
//! which turns blue, and the walk continues along the unused suffix of the
//! trajectory that was driving that red site, and so on until it leaves the
//! cluster.

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::{flashing_grow_direct, idla_grow, ClusterState, Occupancy};
use crate::lattice::Point;
use crate::randomwalk::Trajectory;
use crate::shellgeom::ShellTable;

/// Replay information attached to an invariant violation.
#[derive(Clone, Debug, Serialize)]
pub struct ReproBundle {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub h0: f64,
    pub invariant: String,
    pub explorer: usize,
    pub hop: usize,
    pub step: usize,
}

/// Blue/red partition of `A(N)` with the maps `f_N` and `t_{i,N}`.
#[derive(Clone, Debug)]
pub struct CouplingState<const D: usize> {
    /// Sites of `A(N)` in settling order.
    pub sites: Vec<Point<D>>,
    /// Colour of each site of `A(N)`.
    pub blue: Vec<bool>,
    /// `f_N`: driving explorer of each site.
    pub driver: Vec<u32>,
    /// Inverse of `f_N`: site index driven by each explorer.
    pub site_of: Vec<u32>,
    /// `t_{i,N}`: consumed prefix length of each flashing trajectory.
    pub consumed: Vec<usize>,
    /// `τ*_i`.
    pub tau_star: Vec<usize>,
    /// `g*(i)`: flashing settle site of each explorer.
    pub g_star: Vec<Point<D>>,
}

impl<const D: usize> CouplingState<D> {
    /// `ψ_N(z) = g*(f_N(z))` for the site with index `k`.
    pub fn psi(&self, k: usize) -> Point<D> {
        self.g_star[self.driver[k] as usize]
    }

    pub fn blue_count(&self) -> usize {
        self.blue.iter().filter(|&&b| b).count()
    }
}

/// Output of [`coupled_grow`].
#[derive(Clone, Debug)]
pub struct CoupledRun<const D: usize> {
    pub idla: ClusterState<D>,
    pub flashing: ClusterState<D>,
    pub state: CouplingState<D>,
    /// Longest red-site chain followed by a single explorer.
    pub max_chain: usize,
    /// Sites visited by the internal DLA walks.
    pub idla_orbit_size: usize,
    pub flashing_orbit_size: usize,
}

struct Builder<'a, const D: usize> {
    trajs: &'a [Trajectory<D>],
    st: CouplingState<D>,
    index: FxHashMap<Point<D>, u32>,
    occupied: Occupancy<D>,
    /// Position `S*_i(t_{i,N})` of each driver.
    cursor: Vec<Point<D>>,
    idla_orbit: Occupancy<D>,
    flash_orbit: Occupancy<D>,
    table: &'a ShellTable,
    seed: u64,
    max_chain: usize,
}

impl<const D: usize> Builder<'_, D> {
    fn fail(&self, invariant: &str, explorer: usize, hop: usize, step: usize) -> Error {
        let bundle = ReproBundle {
            seed: self.seed,
            n: self.trajs.len(),
            d: D,
            h0: self.table.h0(),
            invariant: invariant.into(),
            explorer,
            hop,
            step,
        };
        Error::CouplingInvariant {
            invariant: invariant.into(),
            bundle: serde_json::to_string(&bundle).unwrap_or_default(),
        }
    }

    /// Follows driver `i` from its cursor to the first exit from `A(N)`.
    /// Returns the exit time, or `None` if the trajectory ends inside.
    fn follow(&mut self, i: usize, explorer: usize, hop: usize) -> Result<Option<(usize, Point<D>)>> {
        let traj = &self.trajs[i];
        let mut p = self.cursor[i];
        let from = self.st.consumed[i];
        if from == 0 && !self.occupied.contains(&p) {
            return Ok(Some((0, p)));
        }
        for t in from + 1..=traj.len() {
            p = p.step(traj.dirs[t - 1] as usize);
            if !self.flash_orbit.contains(&p) {
                return Err(self.fail("orbit-inclusion", explorer, hop, t));
            }
            self.idla_orbit.insert(p);
            if !self.occupied.contains(&p) {
                return Ok(Some((t, p)));
            }
        }
        Ok(None)
    }

    fn set_consumed(&mut self, i: usize, t: usize, explorer: usize, hop: usize) -> Result<()> {
        if t < self.st.consumed[i] || t > self.st.tau_star[i] {
            return Err(self.fail("consumed-prefix", explorer, hop, t));
        }
        self.st.consumed[i] = t;
        self.cursor[i] = self.trajs[i].position_at(t);
        Ok(())
    }

    fn check_site(&self, k: usize, explorer: usize, hop: usize) -> Result<()> {
        let st = &self.st;
        let i = st.driver[k] as usize;
        if st.site_of[i] as usize != k {
            return Err(self.fail("f-bijection", explorer, hop, k));
        }
        let full = st.consumed[i] == st.tau_star[i];
        if st.blue[k] != full || (st.blue[k] && st.psi(k) != st.sites[k]) {
            return Err(self.fail("blue-fixed-point", explorer, hop, k));
        }
        if !st.blue[k] && self.cursor[i] != st.sites[k] {
            return Err(self.fail("red-driver-position", explorer, hop, k));
        }
        let here = self.table.shell_index(&st.sites[k])?;
        let there = self.table.shell_index(&st.psi(k))?;
        if there < here {
            return Err(self.fail("stable", explorer, hop, k));
        }
        Ok(())
    }

    fn insert(&mut self, m: usize) -> Result<()> {
        let traj = &self.trajs[m];
        let mut p = traj.start;
        self.flash_orbit.insert(p);
        for &dir in &traj.dirs {
            p = p.step(dir as usize);
            self.flash_orbit.insert(p);
        }
        self.idla_orbit.insert(traj.start);
        self.st.consumed.push(0);
        self.cursor.push(traj.start);
        self.st.tau_star.push(traj.len());
        self.st.g_star.push(p);
        self.st.site_of.push(u32::MAX);

        let mut touched = Vec::new();
        let mut cur = m;
        let mut hop = 0usize;
        loop {
            if hop > m + 1 {
                return Err(self.fail("chain-termination", m, hop, 0));
            }
            match self.follow(cur, m, hop)? {
                Some((t, z)) => {
                    self.set_consumed(cur, t, m, hop)?;
                    let k = self.st.sites.len();
                    self.st.sites.push(z);
                    self.st.blue.push(t == self.st.tau_star[cur]);
                    self.st.driver.push(cur as u32);
                    self.st.site_of[cur] = k as u32;
                    self.index.insert(z, k as u32);
                    self.occupied.insert(z);
                    touched.push(k);
                    break;
                }
                None => {
                    let end = self.st.g_star[cur];
                    let Some(&k) = self.index.get(&end) else {
                        return Err(self.fail("chain-ends-in-cluster", m, hop, self.st.tau_star[cur]));
                    };
                    let k = k as usize;
                    if self.st.blue[k] {
                        return Err(self.fail("chain-ends-on-red", m, hop, self.st.tau_star[cur]));
                    }
                    let tau = self.st.tau_star[cur];
                    self.set_consumed(cur, tau, m, hop)?;
                    let old = self.st.driver[k] as usize;
                    self.st.blue[k] = true;
                    self.st.driver[k] = cur as u32;
                    self.st.site_of[cur] = k as u32;
                    touched.push(k);
                    cur = old;
                    hop += 1;
                }
            }
        }
        self.max_chain = self.max_chain.max(hop);
        for k in touched {
            self.check_site(k, m, hop)?;
        }
        Ok(())
    }
}

/// Builds `A(N)` from the flashing trajectories of the same seed.
pub fn coupled_grow<const D: usize>(n: usize, seed: u64, table: &ShellTable) -> Result<CoupledRun<D>> {
    let run = flashing_grow_direct::<D>(n, seed, table, true)?;
    let half = (crate::lattice::radius_for_volume(D, n as u64) * 1.3).ceil() as i32 + 4;
    let mut b = Builder {
        trajs: &run.trajectories,
        st: CouplingState {
            sites: Vec::with_capacity(n),
            blue: Vec::with_capacity(n),
            driver: Vec::with_capacity(n),
            site_of: Vec::with_capacity(n),
            consumed: Vec::with_capacity(n),
            tau_star: Vec::with_capacity(n),
            g_star: Vec::with_capacity(n),
        },
        index: FxHashMap::default(),
        occupied: Occupancy::with_half_width(half),
        cursor: Vec::with_capacity(n),
        idla_orbit: Occupancy::with_half_width(half),
        flash_orbit: Occupancy::with_half_width(half),
        table,
        seed,
        max_chain: 0,
    };
    for m in 0..n {
        b.insert(m)?;
    }
    for k in 0..n {
        b.check_site(k, n, 0)?;
    }
    let mut seen = vec![false; n];
    for &i in &b.st.driver {
        if std::mem::replace(&mut seen[i as usize], true) {
            return Err(b.fail("f-bijection", n, 0, i as usize));
        }
    }
    let psi: rustc_hash::FxHashSet<Point<D>> = (0..n).map(|k| b.st.psi(k)).collect();
    if psi.len() != n || b.st.g_star.iter().zip(&run.cluster.sites).any(|(g, s)| g != s) {
        return Err(b.fail("psi-bijection", n, 0, 0));
    }
    if b.idla_orbit.iter().any(|p| !b.flash_orbit.contains(&p)) {
        return Err(b.fail("orbit-inclusion", n, 0, 0));
    }
    let mut idla = ClusterState::with_capacity(n);
    for &p in &b.st.sites {
        idla.push(p);
    }
    Ok(CoupledRun {
        idla,
        idla_orbit_size: b.idla_orbit.len(),
        flashing_orbit_size: b.flash_orbit.len(),
        flashing: run.cluster,
        max_chain: b.max_chain,
        state: b.st,
    })
}

/// Outcome of checking both sandwich implications at every shell.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SandwichReport {
    pub checked: usize,
    /// Shells `k` where `A* ⊂ B(0, r_k + h_k)` held.
    pub outer_premises: usize,
    /// Shells `k` where `B(0, r_k + h_k) ⊂ A*` held.
    pub inner_premises: usize,
    pub violations: Vec<usize>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For each shell `k`: `A* ⊂ B(0, r_k + h_k)` implies `A ⊂ B(0, r_k + h_k)`,
/// and `B(0, r_k + h_k) ⊂ A*` implies `B(0, r_k + h_k) ⊂ A`.
pub fn verify_sandwich<const D: usize>(idla: &ClusterState<D>, flashing: &ClusterState<D>, table: &ShellTable) -> SandwichReport {
    let (a_max, s_max) = (idla.max_norm_sq(), flashing.max_norm_sq());
    let (a_hole, s_hole) = (idla.min_vacant_norm_sq(), flashing.min_vacant_norm_sq());
    let mut report = SandwichReport::default();
    for k in 0..table.len() {
        let thr = table.outer_threshold(k);
        report.checked += 1;
        let mut bad = false;
        if s_max < thr {
            report.outer_premises += 1;
            bad |= a_max >= thr;
        }
        if s_hole >= thr {
            report.inner_premises += 1;
            bad |= a_hole < thr;
        }
        if bad {
            report.violations.push(k);
        }
    }
    report
}

/// Inner error `δ_I(n)` samples of coupled and directly grown internal DLA.
#[derive(Clone, Debug, Serialize)]
pub struct MarginalSamples {
    pub coupled: Vec<f64>,
    pub direct: Vec<f64>,
}

/// Collects `δ_I(n)` from `seeds` coupled runs and `seeds` independent
/// internal DLA runs with `|B(0, n)|` explorers.
pub fn marginal_samples<const D: usize>(n: f64, h0: f64, seeds: u64, base_seed: u64) -> Result<MarginalSamples> {
    use rayon::prelude::*;
    if seeds < 300 {
        return Err(Error::Insufficient(format!("{seeds} seeds per arm, need at least 300")));
    }
    let count = crate::lattice::ball_count::<D>(n) as usize;
    let table = ShellTable::for_cluster(D, h0, count as u64)?;
    let coupled = (0..seeds)
        .into_par_iter()
        .map(|s| coupled_grow::<D>(count, base_seed.wrapping_add(s), &table).map(|r| r.idla.inner_error(n)))
        .collect::<Result<Vec<_>>>()?;
    let direct = (0..seeds)
        .into_par_iter()
        .map(|s| idla_grow::<D>(count, base_seed.wrapping_add(1 << 40).wrapping_add(s)).map(|c| c.inner_error(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MarginalSamples { coupled, direct })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: usize) -> ShellTable {
        ShellTable::for_cluster(3, 4.0, n as u64).unwrap()
    }

    #[test]
    fn single_explorer() {
        let t = table(1);
        for seed in 0..30 {
            let run = coupled_grow::<3>(1, seed, &t).unwrap();
            assert_eq!(run.idla.sites, vec![Point::ORIGIN]);
            assert_eq!(run.state.blue[0], run.state.tau_star[0] == 0);
            assert_eq!(run.state.driver[0], 0);
            assert_eq!(run.state.consumed[0], 0);
        }
    }

    #[test]
    fn invariants_hold_on_small_runs() {
        for seed in 0..10 {
            let n = 300;
            let t = table(n);
            let run = coupled_grow::<3>(n, seed, &t).unwrap();
            assert_eq!(run.idla.len(), n);
            assert!(run.idla.is_connected());
            let st = &run.state;
            for k in 0..n {
                if st.blue[k] {
                    assert_eq!(st.psi(k), st.sites[k]);
                }
            }
            assert!(verify_sandwich(&run.idla, &run.flashing, &t).passed());
            assert!(run.idla_orbit_size <= run.flashing_orbit_size);
        }
    }

    #[test]
    fn tiny_cluster_fits_first_shells() {
        let t = table(5);
        let run = coupled_grow::<3>(5, 1, &t).unwrap();
        let r = verify_sandwich(&run.idla, &run.flashing, &t);
        assert!(r.passed());
        assert!(r.outer_premises > 0);
    }

    #[test]
    fn marginal_needs_enough_seeds() {
        assert!(matches!(marginal_samples::<3>(4.0, 4.0, 10, 0), Err(Error::Insufficient(_))));
    }
}

use idla_core::growth::{flashing_grow_direct, idla_grow, Waves};
use idla_core::lattice::{ball_count, radius_for_volume};
use idla_core::shellgeom::tile_centers;
use idla_core::snapshot::Snapshot;
use idla_core::{ShellTable, DEFAULT_H0};

fn table(d: usize, n: usize) -> ShellTable {
    ShellTable::for_cluster(d, DEFAULT_H0, n as u64).unwrap()
}

#[test]
fn explorers_settle_in_the_last_shell_they_reach() {
    let n = 10_000;
    let t = table(3, n);
    let run = flashing_grow_direct::<3>(n, 21, &t, true).unwrap();
    assert_eq!(run.trajectories.len(), n);
    let mut flashes = 0u64;
    for (i, traj) in run.trajectories.iter().enumerate() {
        assert!(traj.is_nearest_neighbor_path());
        assert_eq!(traj.end(), run.cluster.sites[i]);
        let far = traj.positions().map(|p| p.norm_sq()).max().unwrap();
        let reached = (1..t.len()).take_while(|&j| far >= t.sigma_threshold(j)).last().unwrap_or(0);
        assert_eq!(run.settle_shell[i], reached, "explorer {i}");
        assert_eq!(t.shell_index(&run.cluster.sites[i]).unwrap(), reached);
        flashes += reached as u64 + 1;
    }
    // one flash per shell visited
    assert_eq!(run.stats.flash_attempts, flashes);
    assert_eq!(run.stats.flash_attempts - n as u64, run.stats.flashed_occupied + run.stats.flashed_outside_cell);
}

#[test]
fn flashing_sites_are_distinct() {
    for seed in 0..4 {
        let n = 3000;
        let run = flashing_grow_direct::<4>(n, seed, &table(4, n), false).unwrap();
        assert_eq!(run.cluster.len(), n);
        assert_eq!(run.cluster.occupied.len(), n);
    }
}

#[test]
fn idla_ball_regression() {
    let n = 10.0;
    let count = ball_count::<3>(n) as usize;
    let seeds = 200u64;
    let mut total = 0.0;
    for seed in 0..seeds {
        let c = idla_grow::<3>(count, seed).unwrap();
        assert_eq!(c.len(), count);
        assert!(c.is_connected());
        total += c.inner_error(n);
    }
    let mean = total / seeds as f64;
    assert!(mean < 3.0, "mean inner error {mean}");
}

#[test]
fn idla_clusters_are_connected_in_four_dimensions() {
    for seed in 0..20 {
        let c = idla_grow::<4>(2000, seed).unwrap();
        assert!(c.is_connected());
        assert_eq!(c.occupied.len(), 2000);
    }
}

#[test]
fn wave_counts_are_consistent() {
    let n = ball_count::<3>(30.0) as usize;
    let t = table(3, n);
    for seed in [3u64, 4] {
        let mut waves = Waves::<3>::new(n, seed, &t).unwrap();
        let mut prev = usize::MAX;
        while !waves.is_done() {
            let st = waves.state();
            let k = st.k;
            assert_eq!(st.settled_before + st.unsettled(), n);
            let on_sigma = idla_core::growth::wave_counts(&st, |p| t.on_sigma(k, p));
            assert_eq!(on_sigma, st.unsettled(), "wave {k}: every unsettled explorer stands on its sphere");
            assert!(st.unsettled() <= prev);
            prev = st.unsettled();
            if k >= 1 && k < t.len() {
                let cover = tile_centers::<3>(&t, k).unwrap();
                let tiled: usize = st.positions.iter().map(|(_, p)| cover.covering_centers(&t, p).len()).sum();
                assert!(tiled >= on_sigma, "tiles must cover the sphere");
            }
            if k >= 1 && waves.inner_filled() {
                let edge = t.outer_edge(k - 1);
                assert_eq!(st.settled_before as u64, ball_count::<3>(edge));
                assert!(waves.cluster.iter().all(|p| p.norm() < edge));
            }
            waves.advance().unwrap();
        }
        assert_eq!(waves.cluster.len(), n);
    }
}

#[test]
fn waves_agree_with_direct_in_four_dimensions() {
    let n = 5000;
    let t = table(4, n);
    let direct = flashing_grow_direct::<4>(n, 99, &t, false).unwrap();
    let (waves, summaries) = idla_core::growth::flashing_grow_waves::<4>(n, 99, &t).unwrap();
    assert_eq!(direct.cluster.sites, waves.sites);
    assert_eq!(summaries[0].unsettled, n);
    assert!(summaries.windows(2).all(|w| w[1].unsettled <= w[0].unsettled));
}

#[test]
fn snapshots_round_trip_grown_clusters() {
    let n = 4000;
    let c = idla_grow::<4>(n, 5).unwrap();
    let snap = Snapshot::new(5, c.sites.clone());
    let back = Snapshot::<4>::from_bytes(&snap.to_bytes()).unwrap();
    assert_eq!(back, snap);
    let mut bytes = snap.to_bytes();
    bytes.pop();
    assert!(Snapshot::<4>::from_bytes(&bytes).is_err());
    assert!(Snapshot::<3>::from_bytes(&snap.to_bytes()).is_err());

    let f = flashing_grow_direct::<3>(n, 5, &table(3, n), false).unwrap();
    let snap = Snapshot::new(5, f.cluster.sites.clone());
    let mut csv = Vec::new();
    snap.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), n + 1);
    assert!(text.starts_with("x,y,z,settle_order\n"));
}

#[test]
fn table_reaches_past_the_cluster() {
    for d in 3..=4 {
        for n in [1usize, 100, 50_000] {
            let t = table(d, n);
            assert!(t.coverage() > radius_for_volume(d, n as u64));
        }
    }
}

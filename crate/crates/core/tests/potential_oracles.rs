use idla_core::lattice::sq_threshold;
use idla_core::potential::{
    annulus_time_profile, bernoulli_tail_bound, exit_distribution, occupation_time, solve_green, Grid, MeanValue,
    SolverConfig,
};
use idla_core::randomwalk::{walk_until, RngStream, Trajectory, Walker, DEFAULT_STEP_CAP};
use idla_core::Point;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rustc_hash::FxHashMap;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn green_at_origin_matches_visit_counts() {
    let grid = Grid::<3>::ball(2.0, 1 << 20).unwrap();
    let exact = solve_green::<f64, 3>(&grid, &Point::ORIGIN, &cfg()).unwrap().at(&grid, &Point::ORIGIN);
    let thr = sq_threshold(2.0);
    let walks = 1_000_000u64;
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut dirs = Vec::new();
    for k in 0..walks {
        dirs.clear();
        let mut s = RngStream::new(77, k, 0);
        walk_until(&mut s, Walker::at(Point::<3>::ORIGIN), |w| w.norm_sq >= thr, Some(&mut dirs), DEFAULT_STEP_CAP).unwrap();
        let t = Trajectory::<3> { start: Point::ORIGIN, dirs: dirs.clone(), consumed: 0 };
        let visits = t.positions().filter(|p| p.is_origin()).count() as f64;
        sum += visits;
        sum2 += visits * visits;
    }
    let m = walks as f64;
    let mean = sum / m;
    let se = ((sum2 / m - mean * mean) / m).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "exact {exact}, Monte Carlo {mean} ± {se}");
}

#[test]
fn exit_law_matches_monte_carlo() {
    let grid = Grid::<3>::ball(6.0, 1 << 20).unwrap();
    let exact: FxHashMap<Point<3>, f64> = exit_distribution::<f64, 3>(&grid, &Point::ORIGIN, &cfg()).unwrap().into_iter().collect();
    let thr = sq_threshold(6.0);
    let walks = 1_000_000u64;
    let mut counts: FxHashMap<Point<3>, u64> = FxHashMap::default();
    for k in 0..walks {
        let mut s = RngStream::new(6, k, 0);
        let e = walk_until(&mut s, Walker::at(Point::<3>::ORIGIN), |w| w.norm_sq >= thr, None, DEFAULT_STEP_CAP).unwrap();
        *counts.entry(e.end.pos).or_default() += 1;
    }
    let total: f64 = exact.values().sum();
    assert!((total - 1.0).abs() < 1e-10);
    for (z, &p) in &exact {
        let hits = counts.get(z).copied().unwrap_or(0) as f64 / walks as f64;
        let se = (p * (1.0 - p) / walks as f64).sqrt();
        assert!((hits - p).abs() <= 4.0 * se, "{z:?}: exact {p}, empirical {hits}");
    }
    assert!(counts.keys().all(|z| exact.contains_key(z)));
}

#[test]
fn exit_law_is_comparable_to_uniform_across_scales() {
    let mut bands = Vec::new();
    for n in [8.0f64, 12.0] {
        let grid = Grid::<3>::ball(n, 1 << 22).unwrap();
        let law = exit_distribution::<f64, 3>(&grid, &Point::ORIGIN, &cfg()).unwrap();
        let scaled: Vec<f64> = law.iter().map(|(_, p)| p * n * n).collect();
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().copied().fold(0.0, f64::max);
        assert!(lo > 0.0);
        bands.push((lo, hi));
    }
    for k in 0..2 {
        let (a, b) = if k == 0 { (bands[0].0, bands[1].0) } else { (bands[0].1, bands[1].1) };
        assert!(a / b < 1.5 && b / a < 1.5, "{bands:?}");
    }
}

#[test]
fn green_grows_with_the_domain() {
    let small = Grid::<3>::ball(5.0, 1 << 20).unwrap();
    let large = Grid::<3>::ball(8.0, 1 << 20).unwrap();
    let sites = small.sites();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    for _ in 0..5 {
        let x = sites[rng.gen_range(0..sites.len())];
        let y = sites[rng.gen_range(0..sites.len())];
        let gs = solve_green::<f64, 3>(&small, &y, &cfg()).unwrap().at(&small, &x);
        let gl = solve_green::<f64, 3>(&large, &y, &cfg()).unwrap().at(&large, &x);
        assert!(gs <= gl + 1e-12, "G({x:?}, {y:?}): {gs} > {gl}");
    }
}

#[test]
fn expected_exit_time_matches_second_moment() {
    let grid = Grid::<3>::ball(8.0, 1 << 20).unwrap();
    let time = occupation_time::<f64, 3>(&grid, |_| true, &cfg()).unwrap();
    for z in [Point([0, 0, 0]), Point([3, -2, 1]), Point([0, 7, 0]), Point([4, 4, 4])] {
        let law = exit_distribution::<f64, 3>(&grid, &z, &cfg()).unwrap();
        let second: f64 = law.iter().map(|(w, p)| p * w.norm_sq() as f64).sum();
        let lhs = time.at(&grid, &z);
        let rhs = second - z.norm_sq() as f64;
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0), "{z:?}: {lhs} vs {rhs}");
    }
}

#[test]
fn mean_value_report_respects_symmetry() {
    let mv = MeanValue::<3>::new(12.0, 12f64.cbrt(), 1.0, &cfg()).unwrap();
    let bd = mv.boundary();
    for z in bd.iter().step_by(37).take(6) {
        let [a, b, c] = z.0;
        let image = Point([-c, a, -b]);
        let r1 = mv.report(std::slice::from_ref(z)).unwrap();
        let r2 = mv.report(&[image]).unwrap();
        assert!((r1.lhs - r2.lhs).abs() <= 1e-9 * r1.from_origin.max(1.0), "{z:?}: {} vs {}", r1.lhs, r2.lhs);
        assert!((r1.from_origin - r2.from_origin).abs() <= 1e-9 * r1.from_origin);
    }
}

#[test]
fn annulus_profile_is_positive_and_symmetric() {
    let n: f64 = 14.0;
    let delta = n.cbrt();
    let zs = [Point([13, 0, 0]), Point([0, 0, -13]), Point([0, 13, 0]), Point([8, 8, 6]), Point([-6, 8, -8])];
    let rows = annulus_time_profile::<3>(n, delta, &zs, &cfg()).unwrap();
    assert!(rows.iter().all(|r| r.lhs > 0.0 && r.outward_probability > 0.0));
    for r in &rows[1..3] {
        assert!((r.residual - rows[0].residual).abs() <= 1e-9 * rows[0].lhs.max(1.0));
    }
    assert!((rows[3].residual - rows[4].residual).abs() <= 1e-9 * rows[3].lhs.max(1.0));
}

#[test]
fn coin_sums_respect_the_tail_bound() {
    let coins = 10_000u32;
    let trials = 100_000u64;
    let words = coins / 64;
    let rest = coins % 64;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(300);
    let mut exceed = 0u64;
    for _ in 0..trials {
        let mut heads: u32 = (0..words).map(|_| rng.gen::<u64>().count_ones()).sum();
        heads += (rng.gen::<u64>() & ((1u64 << rest) - 1)).count_ones();
        if heads as f64 - coins as f64 / 2.0 >= 300.0 {
            exceed += 1;
        }
    }
    let bound = bernoulli_tail_bound(300.0, coins as f64 / 4.0);
    assert!(exceed as f64 / trials as f64 <= bound);
    assert!((bound - (-9.0f64).exp()).abs() < 1e-15);
}

use idla_core::lattice::sq_threshold;
use idla_core::randomwalk::{draw_flash, walk_until, RngStream, Walker, DEFAULT_STEP_CAP};
use idla_core::{Point, ShellTable};
use rustc_hash::FxHashMap;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn exit_ball<const D: usize>(seed: u64, k: u64, start: Point<D>, r: f64) -> (Point<D>, u64) {
    let thr = sq_threshold(r);
    let mut s = RngStream::new(seed, k, 0);
    let e = walk_until(&mut s, Walker::at(start), |w| w.norm_sq >= thr, None, DEFAULT_STEP_CAP).unwrap();
    (e.end.pos, e.steps)
}

#[test]
fn first_step_is_uniform() {
    let n = 60_000u64;
    let mut counts = [0u64; 6];
    for k in 0..n {
        let (p, steps) = exit_ball(1, k, Point::<3>::ORIGIN, 1.0);
        assert_eq!(steps, 1);
        let dir = Point::<3>::ORIGIN.direction_to(&p).unwrap();
        counts[dir] += 1;
    }
    let expected = n as f64 / 6.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn exit_law_is_comparable_to_uniform() {
    // n^{d-1} P(S(H_n) = z) stays within the same band for two radii
    let samples = 1_000_000u64;
    let mut ratios = Vec::new();
    for n in [6.0f64, 10.0] {
        let mut counts: FxHashMap<Point<3>, u64> = FxHashMap::default();
        for k in 0..samples {
            *counts.entry(exit_ball(n as u64, k, Point::ORIGIN, n).0).or_default() += 1;
        }
        let boundary = idla_core::lattice::boundary(&idla_core::lattice::ball_sites(
            &idla_core::lattice::Ball::<3>::centered(n).unwrap(),
            u64::MAX,
        )
        .unwrap());
        assert_eq!(counts.len(), boundary.len());
        let scaled: Vec<f64> =
            boundary.iter().map(|z| n * n * counts.get(z).copied().unwrap_or(0) as f64 / samples as f64).collect();
        let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = scaled.iter().cloned().fold(0.0, f64::max);
        assert!(min > 0.0);
        ratios.push((min, max));
    }
    let (a, b) = (ratios[0], ratios[1]);
    // both bands overlap and neither bound drifts by more than a factor 3
    assert!(b.0 > a.0 / 3.0 && b.1 < a.1 * 3.0, "{ratios:?}");
}

#[test]
fn norm_square_minus_time_is_a_martingale() {
    let start = Point::<3>([5, -3, 2]);
    let n = 100_000u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        let (p, t) = exit_ball(9, k, start, 20.0);
        let m = (p.norm_sq() - t as i64) as f64;
        sum += m;
        sum_sq += m * m;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - start.norm_sq() as f64).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn flash_draw_marginals() {
    let table = ShellTable::build(3, 10.0, 50.0).unwrap();
    let h = table.shell(0).h;
    assert_eq!(h, 10.0);
    let n = 1_000_000usize;
    let mut xs = 0u64;
    let mut ys = 0u64;
    let mut rs = Vec::with_capacity(n);
    for k in 0..n as u64 {
        let mut s = RngStream::new(3, k, 1);
        let d = draw_flash(&mut s, 0, &table);
        xs += d.x as u64;
        ys += d.y as u64;
        rs.push(d.r);
    }
    assert_eq!(ys, n as u64);
    let p = 1e-3;
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    assert!((xs as f64 / n as f64 - p).abs() < 3.0 * sd);

    rs.sort_by(f64::total_cmp);
    let ks = rs
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let f = (r / h).powi(3);
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.002, "KS {ks}");
}

#[test]
fn y_coin_is_fair_beyond_shell_zero() {
    let table = ShellTable::build(3, 10.0, 200.0).unwrap();
    let n = 100_000u64;
    let ys: u64 = (0..n).map(|k| draw_flash(&mut RngStream::new(4, k, 3), 3, &table).y as u64).sum();
    let sd = (0.25 / n as f64).sqrt();
    assert!((ys as f64 / n as f64 - 0.5).abs() < 4.0 * sd);
}

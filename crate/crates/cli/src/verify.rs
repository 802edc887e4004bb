use anyhow::Result;
use clap::{Args, ValueEnum};
use idla_core::coupling::{coupled_grow, verify_sandwich};
use idla_core::fluctstats::{coupon_tail, CouponAlbum};
use idla_core::lattice::{ball_count, for_each_in_box, inward_neighbor, Point};
use idla_core::potential::{
    annulus_probe_sites, annulus_time_monte_carlo, annulus_time_profile, solve_green, Grid, MeanValue,
};
use idla_core::shellgeom::window_coverage;
use idla_core::ShellTable;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::Run;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Geometry,
    Coupling,
    Potential,
    Coupon,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Radius scale of the suite (ball radius, cluster radius).
    #[arg(long)]
    pub n: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, value: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, value, detail: detail.into() }
    }
}

fn geometry<const D: usize>(cfg: &RunConfig, n: f64) -> Result<Vec<Check>> {
    let table = ShellTable::build(D, cfg.h0, n.max(cfg.h0 * 2.0))?;
    let mut checks = Vec::new();

    let reach = table.outer_edge(table.len() - 1).ceil() as i32;
    let (mut sites, mut misplaced) = (0u64, 0u64);
    for_each_in_box([-reach; D], [reach; D], |p: Point<D>| {
        if p.norm() >= table.outer_edge(table.len() - 1) {
            return;
        }
        sites += 1;
        if (0..table.len()).filter(|&j| table.in_shell(j, &p)).count() != 1 {
            misplaced += 1;
        }
    });
    checks.push(Check::new("shell-partition", misplaced == 0, misplaced as f64, format!("{sites} sites, {misplaced} not in exactly one shell")));

    let round = ShellTable::from_json(&table.to_json()?)?;
    checks.push(Check::new("shell-table-json-round-trip", round == table, 0.0, format!("{} shells", table.len())));

    let gap = 1.0 / (2.0 * (D as f64).sqrt());
    let r = n.ceil() as i32;
    let mut bad = 0u64;
    for_each_in_box([-r; D], [r; D], |z: Point<D>| {
        if z.is_origin() || z.norm() > n {
            return;
        }
        let w = inward_neighbor(&z).expect("nonzero");
        if !(w.is_neighbor(&z) && w.norm() <= z.norm() - gap) {
            bad += 1;
        }
    });
    checks.push(Check::new("inward-neighbor", bad == 0, bad as f64, format!("|z| <= {n}")));

    for j in 1..table.len().min(4) {
        let sigma = table.sigma_sites::<D>(j);
        let off = sigma.iter().filter(|p| !table.on_sigma(j, p) || !table.in_shell(j, p)).count();
        checks.push(Check::new(format!("sigma-{j}-in-shell"), off == 0, off as f64, format!("{} sites", sigma.len())));
    }

    // the covering property is a statement about wide shells (h >= 8)
    let wide = ShellTable::build(D, cfg.h0, 8f64.powi(D as i32 + 1) * 1.1)?;
    let j = (1..wide.len()).find(|&j| wide.shell(j).h >= 8.0).ok_or_else(|| CliError::Failed("no shell with h >= 8".into()))?;
    let window = if D <= 4 { 14.0 } else { 6.0 };
    let (cover, scan) = window_coverage::<D>(&wide, j, window)?;
    checks.push(Check::new(
        format!("tile-cover-shell-{j}"),
        scan.scanned > 0 && scan.uncovered == 0 && scan.without_shared_cell == 0,
        cover.density_constant(&wide),
        format!(
            "h = {:.3}, {} centers; {} sites scanned within {window} of the axis, {} uncovered, {} without shared cell",
            wide.shell(j).h,
            cover.centers.len(),
            scan.scanned,
            scan.uncovered,
            scan.without_shared_cell
        ),
    ));
    Ok(checks)
}

fn coupling<const D: usize>(cfg: &RunConfig, n: f64) -> Result<Vec<Check>> {
    let count = ball_count::<D>(n);
    let table = ShellTable::for_cluster(D, cfg.h0, count)?;
    let runs = cfg
        .seed_list()
        .par_iter()
        .map(|&s| -> Result<Check> {
            let run = coupled_grow::<D>(count as usize, s, &table)?;
            let sw = verify_sandwich(&run.idla, &run.flashing, &table);
            Ok(Check::new(
                format!("coupling-seed-{s}"),
                sw.passed(),
                run.max_chain as f64,
                format!(
                    "orbit, stability, bijection and fixed-point invariants held; sandwich {} shells ({} outer, {} inner premises), violations {:?}",
                    sw.checked, sw.outer_premises, sw.inner_premises, sw.violations
                ),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(runs)
}

fn potential<const D: usize>(cfg: &RunConfig, n: f64) -> Result<Vec<Check>> {
    let solver = cfg.solver();
    let mut checks = Vec::new();
    let delta = n.cbrt();
    let mv = MeanValue::<D>::new(n, delta, 1.0, &solver)?;
    let bd = mv.boundary();
    let full = mv.report(&bd)?;
    checks.push(Check::new("mean-value-full-boundary", full.lhs <= 1e-9, full.lhs, format!("|Λ| = {}, exactly zero up to rounding", bd.len())));
    let single = mv.report(&bd[..1])?;
    checks.push(Check::new("mean-value-singleton", single.max_singleton.is_finite(), single.max_singleton, "largest single-site discrepancy"));

    let grid = Grid::<D>::ball(n, solver.site_cap)?;
    let x = Point::<D>::axis(1);
    let y = Point::<D>::axis(-((n / 2.0) as i32));
    let gx = solve_green::<f64, D>(&grid, &x, &solver)?;
    let gy = solve_green::<f64, D>(&grid, &y, &solver)?;
    let asym = (gx.at(&grid, &y) - gy.at(&grid, &x)).abs();
    checks.push(Check::new("green-symmetry", asym <= 1e-10, asym, "G(x,y) = G(y,x)"));

    let sites = annulus_probe_sites::<D>(n, delta);
    let exact = annulus_time_profile::<D>(n, delta, &sites, &solver)?;
    for (i, (e, z)) in exact.iter().zip(sites).enumerate() {
        let mc = annulus_time_monte_carlo::<D>(n, delta, &z, 200_000, cfg.seed.wrapping_add(i as u64))?;
        let dev = (mc.lhs - e.lhs).abs() / mc.lhs_stderr.max(1e-12);
        checks.push(Check::new(
            format!("annulus-time-{:?}", z.coords()),
            dev <= 5.0,
            e.k_b,
            format!("exact {:.4}, Monte Carlo {:.4} ± {:.4}; K_b {:.4}", e.lhs, mc.lhs, mc.lhs_stderr, e.k_b),
        ));
    }
    Ok(checks)
}

fn coupon(cfg: &RunConfig) -> Vec<Check> {
    [100usize, 400, 900]
        .iter()
        .map(|&l| {
            let t = coupon_tail(&CouponAlbum::uniform(l), 1.0, 10_000, cfg.seed.wrapping_add(l as u64));
            Check::new(
                format!("coupon-tail-L{l}"),
                t.passed(),
                t.empirical,
                format!("P(τ < L) = {:.5} <= bound {:.5}; mean τ {:.1}", t.empirical, t.bound, t.mean_tau),
            )
        })
        .collect()
}

pub fn run<const D: usize>(cfg: &RunConfig, args: &VerifyArgs) -> Result<()> {
    let mut out = Run::start(cfg, "verify")?;
    let checks = match args.suite {
        Suite::Geometry => geometry::<D>(cfg, args.n.unwrap_or(20.0))?,
        Suite::Coupling => coupling::<D>(cfg, args.n.unwrap_or(12.0))?,
        Suite::Potential => potential::<D>(cfg, args.n.unwrap_or(12.0))?,
        Suite::Coupon => coupon(cfg),
    };
    let passed = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let report = json!({ "suite": args.suite, "d": D, "passed": passed, "checks": checks });
    out.write_json(&format!("verify-{}.json", serde_json::to_value(args.suite)?.as_str().unwrap_or("suite")), &report)?;
    out.finish(cfg, json!({ "suite": args.suite, "passed": passed }))?;
    if !passed {
        return Err(CliError::Failed(format!("{} of {} checks failed", checks.iter().filter(|c| !c.pass).count(), checks.len())).into());
    }
    Ok(())
}

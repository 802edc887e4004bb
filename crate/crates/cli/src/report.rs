use anyhow::Result;
use clap::Args;
use idla_core::fluctstats::{coupon_tail, CouponAlbum, CouponTail};
use idla_core::lattice::Point;
use idla_core::potential::{
    annulus_probe_sites, annulus_time_profile, green_free_asymptotics, ConstantEntry, MeanValue, ScaleValue,
};
use idla_core::randomwalk::uniform_hitting_profile;
use idla_core::shellgeom::sigma_axis_point;
use idla_core::ShellTable;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::Run;
use crate::CliError;

#[derive(Args, Debug)]
pub struct CouponArgs {
    /// Album sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,400,900")]
    pub l: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Also run an album whose item probabilities are the measured flash
    /// hitting law of the shell with half-width closest to this value.
    #[arg(long)]
    pub hitting_h: Option<f64>,
    /// Flashes used to measure that hitting law.
    #[arg(long, default_value_t = 1_000_000)]
    pub hitting_samples: u64,
}

pub fn coupon<const D: usize>(cfg: &RunConfig, args: &CouponArgs) -> Result<()> {
    if args.l.is_empty() || args.l.contains(&0) || !(args.a > 0.0) || args.trials == 0 {
        return Err(CliError::Usage("album sizes, A and trials must be positive".into()).into());
    }
    let mut out = Run::start(cfg, "coupon")?;
    let mut rows: Vec<(String, CouponTail)> = args
        .l
        .iter()
        .map(|&l| ("uniform".to_string(), coupon_tail(&CouponAlbum::uniform(l), args.a, args.trials, cfg.seed.wrapping_add(l as u64))))
        .collect();
    if let Some(target) = args.hitting_h {
        let table = ShellTable::build(D, cfg.h0, target.powi(D as i32 + 1) * 1.5 + cfg.h0)?;
        let j = (1..table.len())
            .min_by(|&a, &b| (table.shell(a).h - target).abs().total_cmp(&(table.shell(b).h - target).abs()))
            .ok_or_else(|| CliError::Usage("no shell for --hitting-h".into()))?;
        let z: Point<D> = sigma_axis_point(&table, j);
        let profile = uniform_hitting_profile(&table, j, &z, args.hitting_samples, cfg.seed)?;
        let scale = profile.h.powi(D as i32);
        let mut weights: Vec<(Point<D>, f64)> = profile.scaled.iter().map(|(p, v)| (*p, v / scale)).filter(|(_, p)| *p > 0.0).collect();
        weights.sort_by(|a, b| a.0.cmp(&b.0));
        let probs: Vec<f64> = weights.iter().map(|w| w.1).collect();
        let album = CouponAlbum::new(&probs)?;
        rows.push((format!("hitting-shell-{j}"), coupon_tail(&album, args.a, args.trials, cfg.seed)));
    }
    let mut failed = 0;
    for (kind, r) in &rows {
        println!("{kind} L={}: P(τ < {}L) = {:.5}, bound {:.5}", r.l, r.a, r.empirical, r.bound);
        failed += (!r.passed()) as usize;
    }
    let json_rows: Vec<_> = rows.iter().map(|(k, r)| json!({ "album": k, "tail": r, "passed": r.passed() })).collect();
    out.write_json("coupon.json", &json_rows)?;
    out.finish(cfg, json!({ "a": args.a, "trials": args.trials, "failed": failed }))?;
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} album(s) exceed the tail bound")).into());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    /// Ball radii for the mean-value and annulus constants.
    #[arg(long, value_delimiter = ',', default_value = "12,16,20")]
    pub n: Vec<f64>,
    /// Largest |z| in the Green function table (0 skips it).
    #[arg(long, default_value_t = 15.0)]
    pub green_max: f64,
}

pub fn potential<const D: usize>(cfg: &RunConfig, args: &PotentialArgs) -> Result<()> {
    if args.n.iter().any(|&n| !(n >= 4.0)) {
        return Err(CliError::Usage("radii must be at least 4".into()).into());
    }
    let solver = cfg.solver();
    let mut out = Run::start(cfg, "potential-report")?;
    let mut k_a = Vec::new();
    let mut k_b: [Vec<ScaleValue>; 3] = Default::default();
    let mut annulus_rows = Vec::new();
    for &n in &args.n {
        let delta = n.cbrt();
        let mv = MeanValue::<D>::new(n, delta, 1.0, &solver)?;
        let bd = mv.boundary();
        let rep = mv.report(&bd)?;
        k_a.push(ScaleValue { n, value: rep.max_singleton });
        println!("n={n}: K_a {:.5}, full-boundary discrepancy {:.2e}", rep.max_singleton, rep.lhs);
        let profile = annulus_time_profile::<D>(n, delta, &annulus_probe_sites::<D>(n, delta), &solver)?;
        for (slot, row) in k_b.iter_mut().zip(&profile) {
            slot.push(ScaleValue { n, value: row.k_b });
        }
        annulus_rows.extend(profile);
    }
    let mut constants = vec![ConstantEntry::new("K_a", D, k_a)];
    for (label, values) in ["K_b_inner", "K_b_mid", "K_b_outer"].iter().zip(k_b) {
        constants.push(ConstantEntry::new(label, D, values));
    }
    out.write_json("constants.json", &constants)?;
    out.write_json("annulus.json", &annulus_rows)?;
    if args.green_max > 0.0 {
        let (_, rows) = green_free_asymptotics::<D>(args.green_max / 3.0, args.green_max, &solver)?;
        let mut csv = String::from("z,norm,green,asymptotic,scaled_error\n");
        for r in &rows {
            let z: Vec<String> = r.z.iter().map(|c| c.to_string()).collect();
            csv += &format!("{},{},{},{},{}\n", z.join(" "), r.norm, r.green, r.asymptotic, r.scaled_error);
        }
        out.write("green.csv", csv.as_bytes())?;
    }
    out.finish(cfg, json!({ "n": args.n, "green_max": args.green_max }))?;
    Ok(())
}

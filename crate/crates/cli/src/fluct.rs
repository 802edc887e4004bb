use std::collections::HashSet;

use anyhow::Result;
use clap::{Args, ValueEnum};
use idla_core::fluctstats::{
    fit_exponent, mean, median, optimality_probe, quantile, run_ensemble, std_dev, ErrorRecord, FitPolicy, Process,
    Statistic,
};
use idla_core::lattice::ball_count;
use idla_core::Error;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{RecordStore, Run};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// At least 5 n values, 100 seeds and a factor 3 in n.
    Full,
    /// At least 3 n values, 20 seeds and a factor 1.9 in n.
    Smoke,
}

#[derive(Args, Debug)]
pub struct FluctArgs {
    #[arg(long, default_value = "flashing", value_parser = parse_process)]
    pub process: Process,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<f64>,
    #[arg(long, default_value = "std", value_parser = parse_statistic)]
    pub statistic: Statistic,
    #[arg(long, value_enum, default_value = "full")]
    pub policy: PolicyArg,
}

fn parse_process(s: &str) -> Result<Process, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_statistic(s: &str) -> Result<Statistic, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn run<const D: usize>(cfg: &RunConfig, args: &FluctArgs) -> Result<()> {
    let policy = match args.policy {
        PolicyArg::Full => FitPolicy::default(),
        PolicyArg::Smoke => FitPolicy::smoke(),
    };
    let mut ns = args.n.clone();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < policy.min_n_values {
        return Err(CliError::Usage(format!("{} n values given, the fit needs at least {}", ns.len(), policy.min_n_values)).into());
    }
    if let Some(&big) = ns.last() {
        if ball_count::<D>(big) > cfg.max_explorers {
            return Err(CliError::Usage(format!("n = {big} exceeds --max-explorers {}", cfg.max_explorers)).into());
        }
    }
    let mut out = Run::start(cfg, "fluct")?;
    let seeds = cfg.seed_list();
    let mine = |r: &ErrorRecord| r.process == args.process && r.d == D;
    let existing: Vec<ErrorRecord> = RecordStore::load(&out.dir)?.into_iter().filter(mine).collect();
    let seen: HashSet<(u64, u64)> = existing.iter().map(|r| (r.n.to_bits(), r.seed)).collect();
    let mut store = RecordStore::open(&out.dir)?;
    let fresh = run_ensemble::<D>(args.process, &ns, &seeds, cfg.h0, &|n, s| seen.contains(&(n.to_bits(), s)), |r| {
        store.append(r).map_err(|e| Error::Invalid(e.to_string()))
    })?;
    drop(store);
    let resumed = existing.len();
    let mut records: Vec<ErrorRecord> = existing
        .into_iter()
        .chain(fresh)
        .filter(|r| ns.contains(&r.n) && seeds.contains(&r.seed))
        .collect();
    records.sort_by(|a, b| a.n.total_cmp(&b.n).then(a.seed.cmp(&b.seed)));
    records.dedup_by(|a, b| a.n == b.n && a.seed == b.seed);

    let mut summary = String::from("n,N,seeds,mean,std,q90,max,median,median_ratio\n");
    let exponent = 1.0 / (D as f64 + 1.0);
    for &n in &ns {
        let v: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.delta_in).collect();
        summary += &format!(
            "{n},{},{},{},{},{},{},{},{}\n",
            ball_count::<D>(n),
            v.len(),
            mean(&v),
            std_dev(&v),
            quantile(&v, 0.9),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            median(&v),
            median(&v) / n.powf(exponent)
        );
    }
    out.write("summary.csv", summary.as_bytes())?;
    out.record(RecordStore::CSV)?;
    out.record(RecordStore::JSONL)?;

    let fit = fit_exponent(&records, args.statistic, &policy);
    let trend = optimality_probe(&records).ok();
    let fit_json = match &fit {
        Ok(f) => json!({ "process": args.process, "d": D, "policy": policy, "fit": f, "optimality": trend }),
        Err(e) => json!({ "process": args.process, "d": D, "policy": policy, "error": e.to_string(), "optimality": trend }),
    };
    out.write_json("fit.json", &fit_json)?;
    out.finish(cfg, json!({ "process": args.process, "n": ns, "resumed_records": resumed, "records": records.len() }))?;
    match fit {
        Ok(f) => {
            println!("slope {:.4} (95% CI {:.4} .. {:.4}) over n = {} .. {}", f.slope, f.ci_low, f.ci_high, f.n_min, f.n_max);
            Ok(())
        }
        Err(e) => Err(CliError::Failed(e.to_string()).into()),
    }
}

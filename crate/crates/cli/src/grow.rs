use anyhow::Result;
use clap::{Args, ValueEnum};
use idla_core::coupling::{coupled_grow, verify_sandwich};
use idla_core::fluctstats::{ErrorRecord, Process};
use idla_core::growth::{flashing_grow_direct, flashing_grow_waves, idla_grow, ClusterState};
use idla_core::lattice::{ball_count, radius_for_volume};
use idla_core::snapshot::Snapshot;
use idla_core::ShellTable;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{sha256_hex, RecordStore, Run};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowProcess {
    Idla,
    FlashingDirect,
    FlashingWaves,
    Coupled,
}

#[derive(Args, Debug)]
pub struct GrowArgs {
    #[arg(long, value_enum, default_value = "idla")]
    pub process: GrowProcess,
    /// Grow `|B(0, n)|` explorers.
    #[arg(long, conflicts_with = "explorers")]
    pub n: Option<f64>,
    /// Grow exactly this many explorers.
    #[arg(long)]
    pub explorers: Option<u64>,
    /// Also write each cluster as CSV.
    #[arg(long)]
    pub csv: bool,
}

struct Grown<const D: usize> {
    seed: u64,
    /// `(label, cluster)`: one entry, or two for coupled runs.
    clusters: Vec<(&'static str, Process, ClusterState<D>)>,
    sandwich_violations: usize,
}

fn grow_one<const D: usize>(process: GrowProcess, count: usize, seed: u64, h0: f64) -> Result<Grown<D>> {
    let table = || ShellTable::for_cluster(D, h0, count as u64);
    let mut sandwich_violations = 0;
    let clusters = match process {
        GrowProcess::Idla => vec![("idla", Process::Idla, idla_grow::<D>(count, seed)?)],
        GrowProcess::FlashingDirect => {
            vec![("flashing", Process::Flashing, flashing_grow_direct::<D>(count, seed, &table()?, false)?.cluster)]
        }
        GrowProcess::FlashingWaves => vec![("flashing", Process::Flashing, flashing_grow_waves::<D>(count, seed, &table()?)?.0)],
        GrowProcess::Coupled => {
            let t = table()?;
            let run = coupled_grow::<D>(count, seed, &t)?;
            sandwich_violations = verify_sandwich(&run.idla, &run.flashing, &t).violations.len();
            vec![("idla", Process::Idla, run.idla), ("flashing", Process::Flashing, run.flashing)]
        }
    };
    Ok(Grown { seed, clusters, sandwich_violations })
}

pub fn run<const D: usize>(cfg: &RunConfig, args: &GrowArgs) -> Result<()> {
    let (count, n) = match (args.n, args.explorers) {
        (Some(n), _) if n > 0.0 => (ball_count::<D>(n), n),
        (None, Some(c)) if c > 0 => (c, radius_for_volume(D, c)),
        _ => return Err(CliError::Usage("give a positive --n or --explorers".into()).into()),
    };
    if count > cfg.max_explorers {
        return Err(CliError::Usage(format!("{count} explorers exceed --max-explorers {}", cfg.max_explorers)).into());
    }
    let mut out = Run::start(cfg, "grow")?;
    let grown = cfg
        .seed_list()
        .par_iter()
        .map(|&s| grow_one::<D>(args.process, count as usize, s, cfg.h0))
        .collect::<Result<Vec<_>>>()?;
    let mut store = RecordStore::open(&out.dir)?;
    let mut snapshots = Vec::new();
    let mut violations = 0;
    for g in &grown {
        violations += g.sandwich_violations;
        for (label, process, cluster) in &g.clusters {
            store.append(&ErrorRecord {
                process: *process,
                d: D,
                n,
                big_n: count,
                seed: g.seed,
                delta_in: cluster.inner_error(n),
                delta_out: cluster.outer_error(n),
            })?;
            let snap = Snapshot::<D>::new(g.seed, cluster.sites.clone());
            let bytes = snap.to_bytes();
            let name = format!("snapshots/{label}-d{D}-N{count}-seed{}.bin", g.seed);
            out.write(&name, &bytes)?;
            if args.csv {
                let mut buf = Vec::new();
                snap.write_csv(&mut buf)?;
                out.write(&name.replace(".bin", ".csv"), &buf)?;
            }
            snapshots.push(json!({ "seed": g.seed, "cluster": label, "path": name, "sha256": sha256_hex(&bytes) }));
        }
    }
    drop(store);
    out.record(RecordStore::CSV)?;
    out.record(RecordStore::JSONL)?;
    println!("grew {} cluster(s) of {count} explorers into {}", snapshots.len(), out.dir.display());
    out.finish(cfg, json!({ "process": args.process, "n": n, "explorers": count, "snapshots": snapshots, "sandwich_violations": violations }))?;
    if violations > 0 {
        return Err(CliError::Failed(format!("{violations} sandwich violations")).into());
    }
    Ok(())
}

//! Fluctuation measurements: inner and outer errors, power-law fits, the
//! coupon-collector experiment, and two-sample tests.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::growth::{flashing_grow_direct, idla_grow, ClusterState, Waves};
use crate::lattice::{ball_count, Point};
use crate::randomwalk::RngStream;
use crate::scalar::Scalar;
use crate::shellgeom::{tile_centers, ShellTable};

/// Growth process of an ensemble member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Idla,
    Flashing,
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Process::Idla => "idla",
            Process::Flashing => "flashing",
        })
    }
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idla" => Ok(Process::Idla),
            "flashing" => Ok(Process::Flashing),
            _ => Err(Error::Invalid(format!("unknown process {s:?}"))),
        }
    }
}

/// Inner and outer error of one cluster grown with `N = |B(0, n)|` explorers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub process: Process,
    pub d: usize,
    pub n: f64,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub seed: u64,
    pub delta_in: f64,
    pub delta_out: f64,
}

pub const CSV_HEADER: &str = "process,d,n,N,seed,delta_in,delta_out";

impl ErrorRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.process, self.d, self.n, self.big_n, self.seed, self.delta_in, self.delta_out
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(Error::Invalid(format!("bad record row {line:?}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Invalid(format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| Error::Invalid(format!("{s:?}: {e}")));
        Ok(ErrorRecord {
            process: f[0].parse()?,
            d: int(f[1])? as usize,
            n: num(f[2])?,
            big_n: int(f[3])?,
            seed: int(f[4])?,
            delta_in: num(f[5])?,
            delta_out: num(f[6])?,
        })
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

/// `δ_I(n)`.
pub fn inner_error<const D: usize>(cluster: &ClusterState<D>, n: f64) -> f64 {
    cluster.inner_error(n)
}

/// `δ_O(n)`.
pub fn outer_error<const D: usize>(cluster: &ClusterState<D>, n: f64) -> f64 {
    cluster.outer_error(n)
}

/// Grows one cluster with `|B(0, n)|` explorers and measures its errors.
pub fn measure<const D: usize>(process: Process, n: f64, seed: u64, h0: f64) -> Result<ErrorRecord> {
    let big_n = ball_count::<D>(n);
    let cluster = match process {
        Process::Idla => idla_grow::<D>(big_n as usize, seed)?,
        Process::Flashing => {
            let table = ShellTable::for_cluster(D, h0, big_n)?;
            flashing_grow_direct::<D>(big_n as usize, seed, &table, false)?.cluster
        }
    };
    Ok(ErrorRecord {
        process,
        d: D,
        n,
        big_n,
        seed,
        delta_in: cluster.inner_error(n),
        delta_out: cluster.outer_error(n),
    })
}

/// Runs every `(n, seed)` job not in `done`, in parallel, calling `sink`
/// from a single thread as records arrive in job order.
pub fn run_ensemble<const D: usize>(
    process: Process,
    ns: &[f64],
    seeds: &[u64],
    h0: f64,
    done: &dyn Fn(f64, u64) -> bool,
    mut sink: impl FnMut(&ErrorRecord) -> Result<()>,
) -> Result<Vec<ErrorRecord>> {
    let jobs: Vec<(f64, u64)> =
        ns.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).filter(|&(n, s)| !done(n, s)).collect();
    let (tx, rx) = std::sync::mpsc::channel();
    let mut out = Vec::with_capacity(jobs.len());
    std::thread::scope(|scope| {
        let producer = scope.spawn(move || {
            jobs.par_iter().try_for_each_with(tx, |tx, &(n, s)| {
                let rec = measure::<D>(process, n, s, h0)?;
                tx.send(rec).map_err(|_| Error::Invalid("record sink closed".into()))
            })
        });
        for rec in rx {
            sink(&rec)?;
            out.push(rec);
        }
        producer.join().expect("ensemble worker panicked")
    })?;
    out.sort_by(|a, b| a.n.total_cmp(&b.n).then(a.seed.cmp(&b.seed)));
    Ok(out)
}

/// Scale statistic of `δ_I` across seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Std,
    Q90,
    Max,
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std" => Ok(Statistic::Std),
            "q90" => Ok(Statistic::Q90),
            "max" => Ok(Statistic::Max),
            _ => Err(Error::Invalid(format!("unknown statistic {s:?}"))),
        }
    }
}

impl Statistic {
    pub fn apply<F: Scalar>(self, xs: &[F]) -> F {
        match self {
            Statistic::Std => std_dev(xs),
            Statistic::Q90 => quantile(xs, 0.9),
            Statistic::Max => xs.iter().copied().fold(F::neg_infinity(), F::max),
        }
    }
}

pub fn mean<F: Scalar>(xs: &[F]) -> F {
    xs.iter().copied().fold(F::zero(), |a, b| a + b) / F::of(xs.len() as f64)
}

/// Sample standard deviation.
pub fn std_dev<F: Scalar>(xs: &[F]) -> F {
    if xs.len() < 2 {
        return F::zero();
    }
    let m = mean(xs);
    let ss = xs.iter().fold(F::zero(), |a, &x| a + (x - m) * (x - m));
    (ss / F::of((xs.len() - 1) as f64)).sqrt()
}

/// Linear-interpolation quantile.
pub fn quantile<F: Scalar>(xs: &[F], q: f64) -> F {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if v.is_empty() {
        return F::nan();
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = F::of(pos - lo as f64);
    v[lo] + (v[hi] - v[lo]) * w
}

pub fn median<F: Scalar>(xs: &[F]) -> F {
    quantile(xs, 0.5)
}

/// Data requirements of a fit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitPolicy {
    pub min_n_values: usize,
    pub min_seeds: usize,
    /// Required ratio of the largest to the smallest `n`.
    pub min_spread: f64,
}

impl Default for FitPolicy {
    fn default() -> Self {
        FitPolicy { min_n_values: 5, min_seeds: 100, min_spread: 3.0 }
    }
}

impl FitPolicy {
    /// Reduced requirements for quick runs.
    pub fn smoke() -> Self {
        FitPolicy { min_n_values: 3, min_seeds: 20, min_spread: 1.9 }
    }
}

/// Least-squares slope of `log statistic(δ_I)` against `log n`.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// 95% confidence interval of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub n_values: usize,
    pub seeds_min: usize,
    pub statistic: Statistic,
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares through `(x, y)` pairs; returns slope, intercept
/// and the standard error of the slope.
pub fn ols<F: Scalar>(pts: &[(F, F)]) -> (F, F, F) {
    let k = F::of(pts.len() as f64);
    let mx = pts.iter().fold(F::zero(), |a, p| a + p.0) / k;
    let my = pts.iter().fold(F::zero(), |a, p| a + p.1) / k;
    let sxx = pts.iter().fold(F::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let sxy = pts.iter().fold(F::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = pts.iter().fold(F::zero(), |a, p| {
        let e = p.1 - intercept - slope * p.0;
        a + e * e
    });
    let df = pts.len().saturating_sub(2).max(1);
    let stderr = (sse / F::of(df as f64) / sxx).sqrt();
    (slope, intercept, stderr)
}

pub fn fit_exponent(records: &[ErrorRecord], statistic: Statistic, policy: &FitPolicy) -> Result<ExponentFit> {
    let mut by_n: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        match by_n.iter_mut().find(|(n, _)| *n == r.n) {
            Some((_, v)) => v.push(r.delta_in),
            None => by_n.push((r.n, vec![r.delta_in])),
        }
    }
    by_n.sort_by(|a, b| a.0.total_cmp(&b.0));
    if by_n.len() < policy.min_n_values {
        return Err(Error::Insufficient(format!("{} n values, need {}", by_n.len(), policy.min_n_values)));
    }
    let seeds_min = by_n.iter().map(|(_, v)| v.len()).min().unwrap_or(0);
    if seeds_min < policy.min_seeds {
        return Err(Error::Insufficient(format!("{seeds_min} seeds at some n, need {}", policy.min_seeds)));
    }
    let (n_min, n_max) = (by_n[0].0, by_n[by_n.len() - 1].0);
    if n_max < policy.min_spread * n_min {
        return Err(Error::Insufficient(format!("n range {n_min}..{n_max} spans less than a factor {}", policy.min_spread)));
    }
    let mut points = Vec::with_capacity(by_n.len());
    for (n, v) in &by_n {
        let s = statistic.apply(v);
        if !(s > 0.0) {
            return Err(Error::Insufficient(format!("statistic is {s} at n = {n}; cannot take a logarithm")));
        }
        points.push((n.ln(), s.ln()));
    }
    let (slope, intercept, stderr) = ols(&points);
    let df = (points.len() - 2).max(1) as f64;
    let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Invalid(e.to_string()))?.inverse_cdf(0.975);
    Ok(ExponentFit {
        slope,
        intercept,
        stderr,
        ci_low: slope - t * stderr,
        ci_high: slope + t * stderr,
        n_min,
        n_max,
        n_values: points.len(),
        seeds_min,
        statistic,
        points: points.iter().map(|&(x, y)| (x.exp(), y.exp())).collect(),
    })
}

/// Per-`n` medians of `δ_I / n^{1/(d+1)}`.
#[derive(Clone, Debug, Serialize)]
pub struct OptimalityReport {
    pub d: usize,
    pub medians: Vec<(f64, f64)>,
    /// Median at the largest `n` is at least the median at the smallest.
    pub non_decreasing: bool,
}

pub fn optimality_probe(records: &[ErrorRecord]) -> Result<OptimalityReport> {
    let d = records.first().map(|r| r.d).ok_or_else(|| Error::Insufficient("no records".into()))?;
    let mut by_n: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        let scaled = r.delta_in / r.n.powf(1.0 / (d as f64 + 1.0));
        match by_n.iter_mut().find(|(n, _)| *n == r.n) {
            Some((_, v)) => v.push(scaled),
            None => by_n.push((r.n, vec![scaled])),
        }
    }
    if by_n.len() < 2 {
        return Err(Error::Insufficient("optimality probe needs at least two n values".into()));
    }
    by_n.sort_by(|a, b| a.0.total_cmp(&b.0));
    let medians: Vec<(f64, f64)> = by_n.iter().map(|(n, v)| (*n, median(v))).collect();
    let non_decreasing = medians[medians.len() - 1].1 >= medians[0].1;
    Ok(OptimalityReport { d, medians, non_decreasing })
}

/// Item probabilities of a coupon album; any remaining mass is a blank.
#[derive(Clone, Debug)]
pub struct CouponAlbum {
    cumulative: Vec<f64>,
}

impl CouponAlbum {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Invalid("coupon probabilities must be positive".into()));
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if acc > 1.0 + 1e-12 {
            return Err(Error::Invalid(format!("coupon probabilities sum to {acc} > 1")));
        }
        Ok(CouponAlbum { cumulative })
    }

    pub fn uniform(l: usize) -> Self {
        CouponAlbum { cumulative: (1..=l).map(|k| k as f64 / l as f64).collect() }
    }

    /// Album whose item weights follow `weights`, scaled to total mass `mass`.
    pub fn from_weights(weights: &[f64], mass: f64) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        Self::new(&weights.iter().map(|w| w / total * mass).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// `(min L p, max L p)`, the constants `α_1, α_2`.
    pub fn alphas(&self) -> (f64, f64) {
        let l = self.len() as f64;
        let mut prev = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &c in &self.cumulative {
            lo = lo.min((c - prev) * l);
            hi = hi.max((c - prev) * l);
            prev = c;
        }
        (lo, hi)
    }

    fn draw(&self, rng: &mut impl Rng) -> Option<usize> {
        let u: f64 = rng.gen();
        let k = self.cumulative.partition_point(|&c| c <= u);
        (k < self.cumulative.len()).then_some(k)
    }
}

/// `τ_L`: coupons bought until every item is collected.
pub fn coupon_run(album: &CouponAlbum, rng: &mut impl Rng) -> u64 {
    let mut have = vec![false; album.len()];
    let mut missing = album.len();
    let mut draws = 0u64;
    while missing > 0 {
        draws += 1;
        if let Some(k) = album.draw(rng) {
            if !std::mem::replace(&mut have[k], true) {
                missing -= 1;
            }
        }
    }
    draws
}

/// `exp(-(α_1² A² e^{-2 α_2 A} / 4) √L)`.
pub fn coupon_bound(l: usize, a: f64, alpha1: f64, alpha2: f64) -> f64 {
    (-(alpha1 * alpha1 * a * a * (-2.0 * alpha2 * a).exp() / 4.0) * (l as f64).sqrt()).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct CouponTail {
    pub l: usize,
    pub a: f64,
    pub trials: u64,
    pub early: u64,
    pub empirical: f64,
    pub bound: f64,
    pub mean_tau: f64,
}

impl CouponTail {
    pub fn passed(&self) -> bool {
        self.empirical <= self.bound
    }
}

/// Frequency of `τ_L < A L` over `trials` albums.
pub fn coupon_tail(album: &CouponAlbum, a: f64, trials: u64, seed: u64) -> CouponTail {
    let l = album.len();
    let (alpha1, alpha2) = album.alphas();
    let taus: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| coupon_run(album, &mut RngStream::new(seed, t, l as u64)))
        .collect();
    let early = taus.iter().filter(|&&t| (t as f64) < a * l as f64).count() as u64;
    CouponTail {
        l,
        a,
        trials,
        early,
        empirical: early as f64 / trials as f64,
        bound: coupon_bound(l, a, alpha1, alpha2),
        mean_tau: taus.iter().sum::<u64>() as f64 / trials as f64,
    }
}

/// Two-sample Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Insufficient("empty sample".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let en = (n1 * n2 / (n1 + n2)).sqrt();
    let p = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult { statistic: d, p_value: p, n1: x.len(), n2: y.len() })
}

/// Mean tile count `W_k(T)` for one shell, against `(n - r_k) h_k^{d-1}`.
#[derive(Clone, Debug, Serialize)]
pub struct TileStat {
    pub shell: usize,
    pub r: f64,
    pub h: f64,
    pub tiles: usize,
    /// Runs where `B(0, r_k - h_k)` was filled when wave `k` started.
    pub runs: usize,
    pub mean_w: f64,
    /// `mean_w / ((n - r_k) h_k^{d-1})`.
    pub kappa: f64,
}

/// Averages `W_k(T)` over the tiles of each shell in `shells`, across
/// flashing runs with `|B(0, n)|` explorers.
pub fn tile_statistic<const D: usize>(
    n: f64,
    h0: f64,
    shells: &[usize],
    seeds: &[u64],
) -> Result<Vec<TileStat>> {
    let big_n = ball_count::<D>(n) as usize;
    let table = ShellTable::for_cluster(D, h0, big_n as u64)?;
    let covers = shells.iter().map(|&k| tile_centers::<D>(&table, k)).collect::<Result<Vec<_>>>()?;
    let index: Vec<FxHashMap<Point<D>, usize>> =
        covers.iter().map(|c| c.centers.iter().enumerate().map(|(i, z)| (*z, i)).collect()).collect();
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<Option<f64>>> {
            let mut waves = Waves::<D>::new(big_n, seed, &table)?;
            let mut out = vec![None; shells.len()];
            let last = shells.iter().copied().max().unwrap_or(0);
            while !waves.is_done() && waves.state().k <= last {
                let k = waves.state().k;
                if let Some(pos) = shells.iter().position(|&s| s == k) {
                    if waves.inner_filled() {
                        let st = waves.state();
                        let mut counts = vec![0usize; covers[pos].centers.len()];
                        for (_, p) in &st.positions {
                            for z in covers[pos].covering_centers(&table, p) {
                                counts[index[pos][&z]] += 1;
                            }
                        }
                        out[pos] = Some(counts.iter().sum::<usize>() as f64 / counts.len() as f64);
                    }
                }
                waves.advance()?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(shells
        .iter()
        .enumerate()
        .map(|(pos, &k)| {
            let sh = table.shell(k);
            let vals: Vec<f64> = per_seed.iter().filter_map(|v| v[pos]).collect();
            let mean_w = if vals.is_empty() { f64::NAN } else { mean(&vals) };
            TileStat {
                shell: k,
                r: sh.r,
                h: sh.h,
                tiles: covers[pos].centers.len(),
                runs: vals.len(),
                mean_w,
                kappa: mean_w / ((n - sh.r) * sh.h.powi(D as i32 - 1)),
            }
        })
        .collect())
}

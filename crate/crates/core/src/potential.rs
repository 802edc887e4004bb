//! Restricted Green's functions by red-black over-relaxation, and the
//! potential-theory quantities built from them.
//!
//! `G_Λ(x, y)` is the expected number of visits to `y` before a walk from `x`
//! leaves `Λ`. As a function of `x` it solves `u - P u = δ_y` on `Λ` with
//! `u = 0` outside, where `P` averages over the `2d` neighbors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{for_each_in_box, sq_threshold, unit_ball_volume, Point};
use crate::randomwalk::{walk_until, RngStream, Walker, DEFAULT_STEP_CAP};
use crate::scalar::Scalar;

/// Default cap on the number of grid cells of a solve.
pub const DEFAULT_SITE_CAP: usize = 2_000_000;

/// A finite domain embedded in a padded box.
#[derive(Clone, Debug)]
pub struct Grid<const D: usize> {
    lo: [i32; D],
    dims: [usize; D],
    strides: [usize; D],
    inside: Vec<bool>,
    /// Interior cells split by coordinate-sum parity.
    colors: [Vec<u32>; 2],
    /// Largest side length, used to pick the relaxation factor.
    extent: usize,
}

impl<const D: usize> Grid<D> {
    /// The sites of `[lo, hi]` satisfying `member`.
    pub fn new(lo: [i32; D], hi: [i32; D], cap: usize, member: impl Fn(&Point<D>) -> bool) -> Result<Self> {
        let plo = lo.map(|c| c - 1);
        let mut dims = [0usize; D];
        for k in 0..D {
            dims[k] = (hi[k] - lo[k] + 3).max(1) as usize;
        }
        let cells: usize = dims.iter().product();
        if cells > cap {
            return Err(Error::Budget { count: cells as u64, budget: cap as u64 });
        }
        let mut strides = [1usize; D];
        for k in (0..D.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let mut inside = vec![false; cells];
        let mut colors = [Vec::new(), Vec::new()];
        let mut idx = 0usize;
        let hi_pad: [i32; D] = std::array::from_fn(|k| plo[k] + dims[k] as i32 - 1);
        for_each_in_box(plo, hi_pad, |p| {
            let interior = (0..D).all(|k| p.0[k] >= lo[k] && p.0[k] <= hi[k]) && member(&p);
            if interior {
                inside[idx] = true;
                let parity = p.0.iter().map(|&c| c.rem_euclid(2)).sum::<i32>() as usize & 1;
                colors[parity].push(idx as u32);
            }
            idx += 1;
        });
        let extent = (0..D).map(|k| (hi[k] - lo[k] + 1).max(1) as usize).max().unwrap_or(1);
        Ok(Grid { lo: plo, dims, strides, inside, colors, extent })
    }

    /// Lattice ball `B(0, radius)`.
    pub fn ball(radius: f64, cap: usize) -> Result<Self> {
        let thr = sq_threshold(radius);
        let m = radius.ceil() as i32;
        Self::new([-m; D], [m; D], cap, |p| p.norm_sq() < thr)
    }

    /// Lattice annulus `{inner <= |y| < outer}`.
    pub fn annulus(inner: f64, outer: f64, cap: usize) -> Result<Self> {
        let (lo_t, hi_t) = (sq_threshold(inner), sq_threshold(outer));
        let m = outer.ceil() as i32;
        Self::new([-m; D], [m; D], cap, |p| {
            let s = p.norm_sq();
            s >= lo_t && s < hi_t
        })
    }

    /// Cube `[-half, half]^D`.
    pub fn cube(half: i32, cap: usize) -> Result<Self> {
        Self::new([-half; D], [half; D], cap, |_| true)
    }

    pub fn cells(&self) -> usize {
        self.inside.len()
    }

    /// Number of interior sites.
    pub fn len(&self) -> usize {
        self.colors[0].len() + self.colors[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, p: &Point<D>) -> Option<usize> {
        let mut idx = 0;
        for k in 0..D {
            let c = p.0[k] - self.lo[k];
            if c < 0 || c as usize >= self.dims[k] {
                return None;
            }
            idx += c as usize * self.strides[k];
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize) -> Point<D> {
        let mut c = [0i32; D];
        for k in 0..D {
            c[k] = (idx / self.strides[k]) as i32 + self.lo[k];
            idx %= self.strides[k];
        }
        Point(c)
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        self.index(p).is_some_and(|i| self.inside[i])
    }

    pub fn sites(&self) -> Vec<Point<D>> {
        let mut all: Vec<u32> = self.colors.iter().flatten().copied().collect();
        all.sort_unstable();
        all.into_iter().map(|i| self.point(i as usize)).collect()
    }

    /// Exterior boundary `∂Λ`, sorted.
    pub fn boundary(&self) -> Vec<Point<D>> {
        let mut out: Vec<usize> = Vec::new();
        for i in (0..self.cells()).filter(|&i| !self.inside[i]) {
            if self.neighbors(i).any(|j| j.is_some_and(|j| self.inside[j])) {
                out.push(i);
            }
        }
        out.into_iter().map(|i| self.point(i)).collect()
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        let p = self.point(i);
        (0..2 * D).map(move |dir| self.index(&p.step(dir)))
    }
}

/// Settings for [`solve`].
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Target for `max|residual| / max(1, max|u|)`.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub site_cap: usize,
    /// Sweeps between residual checks.
    pub check_every: usize,
    /// Keep sweeping past `tolerance` until rounding stops the residual
    /// from improving.
    pub polish: bool,
}

impl SolverConfig {
    pub fn for_scalar<F: Scalar>() -> Self {
        SolverConfig { tolerance: F::SOLVER_TOLERANCE, max_sweeps: 200_000, site_cap: DEFAULT_SITE_CAP, check_every: 10, polish: false }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::for_scalar::<f64>()
    }
}

/// Solution of `u - P u = f` on a grid with Dirichlet data outside.
#[derive(Clone, Debug)]
pub struct HarmonicSolve<F: Scalar> {
    pub values: Vec<F>,
    /// Scaled max-norm residual at termination.
    pub residual: f64,
    pub sweeps: usize,
}

impl<F: Scalar> HarmonicSolve<F> {
    pub fn at<const D: usize>(&self, grid: &Grid<D>, p: &Point<D>) -> F {
        grid.index(p).map_or(F::zero(), |i| self.values[i])
    }
}

/// Red-black successive over-relaxation for `u - P u = f` on the interior of
/// `grid`, with `u = boundary` on every other cell. `init` seeds the interior.
pub fn solve<F: Scalar, const D: usize>(
    grid: &Grid<D>,
    source: impl Fn(&Point<D>) -> F,
    boundary: impl Fn(&Point<D>) -> F,
    init: impl Fn(&Point<D>) -> F,
    cfg: &SolverConfig,
) -> Result<HarmonicSolve<F>> {
    let n = grid.cells();
    let mut u = vec![F::zero(); n];
    let mut f = vec![F::zero(); n];
    for (i, slot) in u.iter_mut().enumerate() {
        let p = grid.point(i);
        if grid.inside[i] {
            f[i] = source(&p);
            *slot = init(&p);
        } else {
            *slot = boundary(&p);
        }
    }
    let offsets: Vec<usize> = grid.strides.to_vec();
    let inv = F::of(1.0 / (2 * D) as f64);
    let omega = F::of(2.0 / (1.0 + (std::f64::consts::PI / (grid.extent as f64 + 1.0)).sin()));
    let one = F::one();
    let neighbor_sum = |u: &[F], i: usize| {
        let mut s = F::zero();
        for &o in &offsets {
            s = s + u[i - o] + u[i + o];
        }
        s
    };
    let residual = |u: &[F]| {
        let mut r = 0.0f64;
        let mut m = 1.0f64;
        for color in &grid.colors {
            for &i in color {
                let i = i as usize;
                let v = f[i] + inv * neighbor_sum(u, i) - u[i];
                r = r.max(v.to_f64_lossy().abs());
                m = m.max(u[i].to_f64_lossy().abs());
            }
        }
        r / m
    };
    let mut sweeps = 0;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    loop {
        let r = residual(&u);
        if r < best * 0.9 {
            best = r;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if r <= cfg.tolerance && (!cfg.polish || stalled >= 3) {
            return Ok(HarmonicSolve { values: u, residual: r, sweeps });
        }
        if sweeps >= cfg.max_sweeps || (stalled > 50 && r > cfg.tolerance) {
            return Err(Error::NoConvergence { residual: r, sweeps });
        }
        for _ in 0..cfg.check_every {
            for color in &grid.colors {
                for &i in color {
                    let i = i as usize;
                    let gs = f[i] + inv * neighbor_sum(&u, i);
                    u[i] = (one - omega) * u[i] + omega * gs;
                }
            }
        }
        sweeps += cfg.check_every;
    }
}

/// Column `G_Λ(·, y)`.
pub fn solve_green<F: Scalar, const D: usize>(grid: &Grid<D>, y: &Point<D>, cfg: &SolverConfig) -> Result<HarmonicSolve<F>> {
    if !grid.contains(y) {
        return Err(Error::Invalid(format!("{y:?} is not in the domain")));
    }
    solve(grid, |p| if p == y { F::one() } else { F::zero() }, |_| F::zero(), |_| F::zero(), cfg)
}

/// `x ↦ Σ_{y ∈ set} G_Λ(x, y)`, the expected time spent in `set` before
/// leaving `Λ`.
pub fn occupation_time<F: Scalar, const D: usize>(
    grid: &Grid<D>,
    set: impl Fn(&Point<D>) -> bool,
    cfg: &SolverConfig,
) -> Result<HarmonicSolve<F>> {
    solve(grid, |p| if set(p) { F::one() } else { F::zero() }, |_| F::zero(), |_| F::zero(), cfg)
}

/// Exit law of the walk from `start` on `∂Λ`, via the last-step identity
/// `P_y(S(H) = z*) = (1/2d) Σ_{z ∈ Λ, z ~ z*} G_Λ(y, z)`.
pub fn exit_distribution<F: Scalar, const D: usize>(
    grid: &Grid<D>,
    start: &Point<D>,
    cfg: &SolverConfig,
) -> Result<Vec<(Point<D>, F)>> {
    // G is symmetric, so the row G(start, ·) is the column G(·, start)
    let g = solve_green::<F, D>(grid, start, cfg)?;
    Ok(last_step(grid, &g))
}

fn last_step<F: Scalar, const D: usize>(grid: &Grid<D>, g: &HarmonicSolve<F>) -> Vec<(Point<D>, F)> {
    let inv = F::of(1.0 / (2 * D) as f64);
    grid.boundary()
        .into_iter()
        .map(|zs| {
            let mass = zs.neighbors().filter(|z| grid.contains(z)).fold(F::zero(), |acc, z| acc + g.at(grid, &z));
            (zs, mass * inv)
        })
        .collect()
}

/// `C_d = 2 / (v_d (d - 2))`, the constant of `G(0, z) ~ C_d |z|^{2-d}`.
pub fn green_constant(d: usize) -> f64 {
    2.0 / (unit_ball_volume(d) * (d as f64 - 2.0))
}

/// One row of the free Green function table.
#[derive(Clone, Debug, Serialize)]
pub struct GreenRow {
    pub z: Vec<i32>,
    pub norm: f64,
    pub green: f64,
    pub asymptotic: f64,
    /// `|z|^d |G(0, z) - C_d |z|^{2-d}|`.
    pub scaled_error: f64,
}

/// Free Green function from a cube solve.
#[derive(Clone, Debug)]
pub struct FreeGreen<const D: usize> {
    pub grid: Grid<D>,
    pub solve: HarmonicSolve<f64>,
    pub half: i32,
}

impl<const D: usize> FreeGreen<D> {
    /// Solves on the cube of half-width `half` with the asymptotic
    /// `C_d |w|^{2-d}` imposed on its boundary.
    pub fn new(half: i32, cfg: &SolverConfig) -> Result<Self> {
        let c = green_constant(D);
        let tail = move |p: &Point<D>| {
            let r = p.norm();
            if r == 0.0 {
                0.0
            } else {
                c / r.powi(D as i32 - 2)
            }
        };
        let grid = Grid::cube(half, cfg.site_cap)?;
        let solve = solve(&grid, |p| if p.is_origin() { 1.0 } else { 0.0 }, tail, tail, cfg)?;
        Ok(FreeGreen { grid, solve, half })
    }

    pub fn at(&self, z: &Point<D>) -> f64 {
        self.solve.at(&self.grid, z)
    }

    pub fn row(&self, z: &Point<D>) -> GreenRow {
        let norm = z.norm();
        let green = self.at(z);
        let asymptotic = green_constant(D) / norm.powi(D as i32 - 2);
        GreenRow {
            z: z.0.to_vec(),
            norm,
            green,
            asymptotic,
            scaled_error: norm.powi(D as i32) * (green - asymptotic).abs(),
        }
    }
}

/// Table of `|z|^d |G(0, z) - C_d |z|^{2-d}|` over lattice sites with
/// `min_norm <= |z| <= max_norm`, one representative per symmetry class.
pub fn green_free_asymptotics<const D: usize>(
    min_norm: f64,
    max_norm: f64,
    cfg: &SolverConfig,
) -> Result<(FreeGreen<D>, Vec<GreenRow>)> {
    let half = (6.0 * max_norm).ceil() as i32;
    let fg = FreeGreen::<D>::new(half, cfg)?;
    let m = max_norm.floor() as i32;
    let mut rows = Vec::new();
    let (lo, hi) = (sq_threshold(min_norm), sq_threshold(max_norm));
    for_each_in_box([0; D], [m; D], |p| {
        let canonical = p.0.windows(2).all(|w| w[0] >= w[1]);
        let s = p.norm_sq();
        if canonical && s >= lo && (s < hi || (s as f64) == max_norm * max_norm) {
            rows.push(fg.row(&p));
        }
    });
    Ok((fg, rows))
}

/// Comparison of `|B_{r_n}|` walks from the origin with one walk from each
/// site of `B_{r_n}`, by where they leave `B_n`.
#[derive(Clone, Debug, Serialize)]
pub struct MeanValueReport {
    pub n: f64,
    pub delta: f64,
    pub r: f64,
    pub inner_count: usize,
    pub lambda_size: usize,
    /// `|B_{r_n}| P_0(S(H_n) ∈ Λ)`.
    pub from_origin: f64,
    /// `Σ_{y ∈ B_{r_n}} P_y(S(H_n) ∈ Λ)`.
    pub spread: f64,
    /// Absolute difference of the two, from a single solve with the
    /// combined source.
    pub lhs: f64,
    pub ratio: f64,
    /// Largest single-site discrepancy over `∂B_n`.
    pub max_singleton: f64,
    pub residual: f64,
}

/// Exact mean-value discrepancy on `B_n` with `r_n = n - delta`.
pub struct MeanValue<const D: usize> {
    pub n: f64,
    pub delta: f64,
    grid: Grid<D>,
    inner_count: usize,
    origin: HarmonicSolve<f64>,
    inner: HarmonicSolve<f64>,
    combined: HarmonicSolve<f64>,
}

impl<const D: usize> MeanValue<D> {
    /// Requires `delta <= k_max n^{1/3}`.
    pub fn new(n: f64, delta: f64, k_max: f64, cfg: &SolverConfig) -> Result<Self> {
        if !(delta > 0.0 && delta <= k_max * n.cbrt() && delta < n) {
            return Err(Error::Invalid(format!("delta {delta} outside (0, {k_max} n^(1/3)]")));
        }
        let grid = Grid::<D>::ball(n, cfg.site_cap)?;
        let r_thr = sq_threshold(n - delta);
        let inner = |p: &Point<D>| p.norm_sq() < r_thr;
        let inner_count = grid.sites().iter().filter(|p| inner(p)).count();
        let big = inner_count as f64;
        let origin = solve_green::<f64, D>(&grid, &Point::ORIGIN, cfg)?;
        let inner_time = occupation_time::<f64, D>(&grid, inner, cfg)?;
        let source = |p: &Point<D>| (if p.is_origin() { big } else { 0.0 }) - if inner(p) { 1.0 } else { 0.0 };
        // the combined source has zero total mass, so polishing to the
        // rounding floor keeps the full-boundary identity exact
        let combined = solve(&grid, source, |_| 0.0, |_| 0.0, &SolverConfig { polish: true, ..*cfg })?;
        Ok(MeanValue { n, delta, grid, inner_count, origin, inner: inner_time, combined })
    }

    pub fn boundary(&self) -> Vec<Point<D>> {
        self.grid.boundary()
    }

    fn exit_mass(&self, g: &HarmonicSolve<f64>, lambda: &[Point<D>]) -> f64 {
        let inv = 1.0 / (2 * D) as f64;
        lambda
            .iter()
            .map(|zs| zs.neighbors().filter(|z| self.grid.contains(z)).map(|z| g.at(&self.grid, &z)).sum::<f64>() * inv)
            .sum()
    }

    pub fn report(&self, lambda: &[Point<D>]) -> Result<MeanValueReport> {
        let bd = self.boundary();
        if let Some(z) = lambda.iter().find(|z| bd.binary_search(z).is_err()) {
            return Err(Error::Invalid(format!("{z:?} is not on the boundary of B_n")));
        }
        let big = self.inner_count as f64;
        let from_origin = big * self.exit_mass(&self.origin, lambda);
        let spread = self.exit_mass(&self.inner, lambda);
        let lhs = self.exit_mass(&self.combined, lambda).abs();
        let max_singleton = bd.iter().map(|z| self.exit_mass(&self.combined, std::slice::from_ref(z)).abs()).fold(0.0, f64::max);
        let residual = self.origin.residual.max(self.inner.residual).max(self.combined.residual);
        Ok(MeanValueReport {
            n: self.n,
            delta: self.delta,
            r: self.n - self.delta,
            inner_count: self.inner_count,
            lambda_size: lambda.len(),
            from_origin,
            spread,
            lhs,
            ratio: if lambda.is_empty() { 0.0 } else { lhs / lambda.len() as f64 },
            max_singleton,
            residual,
        })
    }
}

pub fn mean_value_discrepancy<const D: usize>(
    n: f64,
    delta: f64,
    lambda: &[Point<D>],
    cfg: &SolverConfig,
) -> Result<MeanValueReport> {
    MeanValue::<D>::new(n, delta, 4.0, cfg)?.report(lambda)
}

/// Expected time in the annulus `A(r_n, n)` before leaving `B_n`, against
/// `2d Δ_n α_0(z) - 2d (n - |z|)^2`.
#[derive(Clone, Debug, Serialize)]
pub struct AnnulusTimeReport {
    pub n: f64,
    pub delta: f64,
    pub z: Vec<i32>,
    pub depth: f64,
    /// `Σ_{y ∈ A(r_n, n)} G_n(z, y)`.
    pub lhs: f64,
    /// Mean outward overshoot `E_z[|S(H_n)| - |z| | H_n < H(B(0, r_n))]`.
    pub alpha0: f64,
    pub outward_probability: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `residual / ((n - |z|) ∨ 1)`.
    pub k_b: f64,
    /// Standard error of `lhs` for Monte Carlo reports, zero when exact.
    pub lhs_stderr: f64,
    pub samples: u64,
}

fn annulus_report<const D: usize>(
    n: f64,
    delta: f64,
    z: &Point<D>,
    lhs: f64,
    alpha0: f64,
    p_out: f64,
    lhs_stderr: f64,
    samples: u64,
) -> AnnulusTimeReport {
    let d = D as f64;
    let depth = n - z.norm();
    let rhs = 2.0 * d * delta * alpha0 - 2.0 * d * depth * depth;
    let residual = (lhs - rhs).abs();
    AnnulusTimeReport {
        n,
        delta,
        z: z.0.to_vec(),
        depth,
        lhs,
        alpha0,
        outward_probability: p_out,
        rhs,
        residual,
        k_b: residual / depth.max(1.0),
        lhs_stderr,
        samples,
    }
}

fn check_annulus_point<const D: usize>(n: f64, delta: f64, z: &Point<D>) -> Result<()> {
    let s = z.norm_sq();
    if !(delta > 0.0 && delta < n) || s < sq_threshold(n - delta) || s >= sq_threshold(n) {
        return Err(Error::Invalid(format!("{z:?} is not in the annulus A({}, {n})", n - delta)));
    }
    Ok(())
}

/// Exact annulus occupation profile at the sites `zs`.
pub fn annulus_time_profile<const D: usize>(
    n: f64,
    delta: f64,
    zs: &[Point<D>],
    cfg: &SolverConfig,
) -> Result<Vec<AnnulusTimeReport>> {
    for z in zs {
        check_annulus_point(n, delta, z)?;
    }
    let r = n - delta;
    let r_thr = sq_threshold(r);
    let ball = Grid::<D>::ball(n, cfg.site_cap)?;
    let time = occupation_time::<f64, D>(&ball, |p| p.norm_sq() >= r_thr, cfg)?;
    // outward exit: boundary value 1 (probability) or |y| (overshoot moment);
    // entering B(0, r) is absorbing with value 0
    let ann = Grid::<D>::annulus(r, n, cfg.site_cap)?;
    let outer = |p: &Point<D>| p.norm_sq() >= r_thr;
    let prob = solve(&ann, |_| 0.0, |p| if outer(p) { 1.0 } else { 0.0 }, |_| 0.0, cfg)?;
    let moment = solve(&ann, |_| 0.0, |p| if outer(p) { p.norm() } else { 0.0 }, |_| 0.0, cfg)?;
    Ok(zs
        .iter()
        .map(|z| {
            let p_out = prob.at(&ann, z);
            let alpha0 = moment.at(&ann, z) / p_out - z.norm();
            annulus_report(n, delta, z, time.at(&ball, z), alpha0, p_out, 0.0, 0)
        })
        .collect())
}

/// Monte Carlo version of [`annulus_time_profile`] for one site.
pub fn annulus_time_monte_carlo<const D: usize>(
    n: f64,
    delta: f64,
    z: &Point<D>,
    walks: u64,
    seed: u64,
) -> Result<AnnulusTimeReport> {
    check_annulus_point(n, delta, z)?;
    let r_thr = sq_threshold(n - delta);
    let n_thr = sq_threshold(n);
    let (mut sum_t, mut sum_t2) = (0.0f64, 0.0f64);
    let (mut outward, mut overshoot) = (0u64, 0.0f64);
    let z_norm = z.norm();
    for k in 0..walks {
        let mut stream = RngStream::new(seed, k, 0);
        let mut in_annulus = 0u64;
        let mut entered = false;
        let end = walk_until(
            &mut stream,
            Walker::at(*z),
            |w| {
                if w.norm_sq >= n_thr {
                    return true;
                }
                if w.norm_sq >= r_thr {
                    in_annulus += 1;
                } else {
                    entered = true;
                }
                false
            },
            None,
            DEFAULT_STEP_CAP,
        )?;
        let t = in_annulus as f64;
        sum_t += t;
        sum_t2 += t * t;
        if !entered {
            outward += 1;
            overshoot += (end.end.norm_sq as f64).sqrt() - z_norm;
        }
    }
    let m = walks as f64;
    let lhs = sum_t / m;
    let stderr = ((sum_t2 / m - lhs * lhs).max(0.0) / m).sqrt();
    let alpha0 = overshoot / outward.max(1) as f64;
    Ok(annulus_report(n, delta, z, lhs, alpha0, outward as f64 / m, stderr, walks))
}

/// Axis sites of `A(n - delta, n)` at its inner edge, middle, and outer edge.
pub fn annulus_probe_sites<const D: usize>(n: f64, delta: f64) -> [Point<D>; 3] {
    let r = n - delta;
    let inner = r.ceil() as i32;
    let outer = n.ceil() as i32 - 1;
    let mid = ((n - delta / 2.0).round() as i32).clamp(inner, outer);
    [Point::axis(inner), Point::axis(mid), Point::axis(outer)]
}

/// `exp(-min(x^2 / (4 var), x / 2))`.
pub fn bernoulli_tail_bound(x: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return (-x / 2.0).exp();
    }
    (-(x * x / (4.0 * variance)).min(x / 2.0)).exp()
}

/// A constant measured at several scales.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantEntry {
    pub name: String,
    pub d: usize,
    pub scales: Vec<ScaleValue>,
    /// Largest over smallest measured value.
    pub stability_ratio: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScaleValue {
    pub n: f64,
    pub value: f64,
}

impl ConstantEntry {
    pub fn new(name: &str, d: usize, scales: Vec<ScaleValue>) -> Self {
        let max = scales.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
        let min = scales.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
        ConstantEntry { name: name.into(), d, scales, stability_ratio: max / min }
    }
}

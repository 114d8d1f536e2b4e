//! Sampling the self-affine measure, Lloyd codebooks and the quantization-coefficient scan.

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::antichain::build_lambda;
use crate::carpet::Carpet;
use crate::error::{Error, Result};
use crate::lse::log_sum_exp;
use crate::scalar::Scalar;
use crate::words;

pub type Point = [f64; 2];

/// Default truncation tolerance for [`sample`].
pub const DEFAULT_TOL: f64 = 1e-9;

/// Points drawn from the truncated random coding of the measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSet {
    pub points: Vec<Point>,
    pub seed: u64,
    pub truncation_tol: f64,
    /// Number of maps composed per point.
    pub depth: usize,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> Point {
        let n = self.points.len() as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        [sx / n, sy / n]
    }

    /// Population covariance `[[xx, xy], [xy, yy]]`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let n = self.points.len() as f64;
        let m = self.mean();
        let mut c = [[0.0; 2]; 2];
        for p in &self.points {
            let (dx, dy) = (p[0] - m[0], p[1] - m[1]);
            c[0][0] += dx * dx;
            c[0][1] += dx * dy;
            c[1][1] += dy * dy;
        }
        c[1][0] = c[0][1];
        c.map(|row| row.map(|v| v / n))
    }
}

fn point_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `count` points, each the image of `(0, 0)` under `depth` random maps with `b̄^depth < tol`.
pub fn sample<S: Scalar>(spec: &Carpet<S>, count: usize, tol: f64, seed: u64) -> Result<SampleSet> {
    if !(tol > 0.0) {
        return Err(Error::Precondition { detail: format!("need tol > 0, got {tol}") });
    }
    let b_max = spec.b_max().to_f64();
    let depth = if tol > 1.0 { 0 } else { (tol.ln() / b_max.ln()).floor() as usize + 1 };
    let maps: Vec<[f64; 4]> = spec
        .letters()
        .iter()
        .map(|info| {
            let cell = spec.cell(info.letter);
            let j = info.letter.j;
            [cell.a.to_f64(), cell.c.to_f64(), spec.b(j).to_f64(), spec.d(j).to_f64()]
        })
        .collect();
    let dist = WeightedIndex::new(spec.letters().iter().map(|info| spec.cell(info.letter).p.to_f64()))
        .map_err(|e| Error::Numeric { detail: e.to_string() })?;
    let points = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = point_rng(seed, k as u64);
            let mut p = [0.0, 0.0];
            for _ in 0..depth {
                let [a, c, b, d] = maps[dist.sample(&mut rng)];
                p = [a * p[0] + c, b * p[1] + d];
            }
            p
        })
        .collect();
    Ok(SampleSet { points, seed, truncation_tol: tol, depth })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lloyd,
    Antichain,
}

/// Centers with the sample fraction in each Voronoi cell and the empirical `r`-th power error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Codebook {
    pub centers: Vec<Point>,
    pub masses: Vec<f64>,
    pub r: f64,
    pub error_r: f64,
    pub method: Method,
}

struct Nearest {
    tree: ImmutableKdTree<f64, 2>,
}

impl Nearest {
    fn new(centers: &[Point]) -> Result<Self> {
        let tree = ImmutableKdTree::new_from_slice(centers).map_err(|e| Error::Numeric { detail: format!("{e:?}") })?;
        Ok(Nearest { tree })
    }

    /// Index of the nearest center and the squared distance to it.
    fn query(&self, p: &Point) -> (usize, f64) {
        let hit = self.tree.query(p).nearest_one::<SquaredEuclidean<f64>>().execute();
        (hit.item as usize, hit.distance)
    }
}

fn pow_dist(d2: f64, r: f64) -> f64 {
    if r == 2.0 {
        d2
    } else {
        d2.sqrt().powf(r)
    }
}

fn assign(points: &[Point], centers: &[Point], r: f64) -> Result<(Vec<usize>, Vec<f64>)> {
    let nearest = Nearest::new(centers)?;
    Ok(points
        .par_iter()
        .map(|p| {
            let (k, d2) = nearest.query(p);
            (k, pow_dist(d2, r))
        })
        .unzip())
}

/// `(1/N) Σ_x min_c |x − c|^r`
pub fn error_r(points: &[Point], centers: &[Point], r: f64) -> Result<f64> {
    let (_, d) = assign(points, centers, r)?;
    Ok(d.iter().sum::<f64>() / points.len() as f64)
}

fn masses(labels: &[usize], n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n];
    for &l in labels {
        m[l] += 1.0;
    }
    let total = labels.len() as f64;
    m.iter().map(|v| v / total).collect()
}

/// Tuning for [`lloyd`].
#[derive(Clone, Debug, Serialize)]
pub struct LloydOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop when the relative decrease of the error falls below this.
    pub rel_tol: f64,
}

impl Default for LloydOptions {
    fn default() -> Self {
        LloydOptions { restarts: 2, seed: 0, max_iter: 300, rel_tol: 1e-9 }
    }
}

/// Lloyd run with the error after every sweep.
#[derive(Clone, Debug)]
pub struct LloydRun {
    pub codebook: Codebook,
    pub history: Vec<f64>,
}

/// Seeding with probability proportional to `min_c |x − c|^r`.
fn seed_centers(points: &[Point], n: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    let mut d: Vec<f64> = points.iter().map(|p| pow_dist(dist2(p, &centers[0]), r)).collect();
    while centers.len() < n {
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut k = 0;
            while k + 1 < d.len() && u >= d[k] {
                u -= d[k];
                k += 1;
            }
            k
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick];
        centers.push(c);
        d.par_iter_mut().zip(points.par_iter()).for_each(|(v, p)| *v = v.min(pow_dist(dist2(p, &c), r)));
    }
    centers
}

fn dist2(p: &Point, q: &Point) -> f64 {
    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
}

fn cell_cost(pts: &[Point], c: &Point, r: f64) -> f64 {
    pts.iter().map(|p| pow_dist(dist2(p, c), r)).sum()
}

/// Minimizer of `Σ |x − c|^r` over one cell: the mean for `r = 2`, damped reweighted averaging otherwise.
fn cell_center(pts: &[Point], start: &Point, r: f64) -> Point {
    let n = pts.len() as f64;
    let mean = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n]);
    if r == 2.0 {
        return mean;
    }
    let mut c = *start;
    for _ in 0..200 {
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for p in pts {
            let w = dist2(p, &c).sqrt().max(1e-12).powf(r - 2.0);
            sw += w;
            sx += w * p[0];
            sy += w * p[1];
        }
        let target = [sx / sw, sy / sw];
        let step = [0.5 * (target[0] - c[0]), 0.5 * (target[1] - c[1])];
        c = [c[0] + step[0], c[1] + step[1]];
        if step[0].hypot(step[1]) < 1e-10 {
            break;
        }
    }
    if cell_cost(pts, &c, r) <= cell_cost(pts, start, r) {
        c
    } else {
        *start
    }
}

fn lloyd_once(points: &[Point], n: usize, r: f64, opts: &LloydOptions, restart: usize) -> Result<LloydRun> {
    let mut rng = point_rng(opts.seed, restart as u64);
    let mut centers = seed_centers(points, n, r, &mut rng);
    let mut history = Vec::new();
    let (mut labels, mut d) = assign(points, &centers, r)?;
    let mut err = d.iter().sum::<f64>() / points.len() as f64;
    history.push(err);
    for _ in 0..opts.max_iter {
        let mut cells: Vec<Vec<Point>> = vec![Vec::new(); n];
        for (p, &l) in points.iter().zip(&labels) {
            cells[l].push(*p);
        }
        let mut next: Vec<Point> = cells
            .par_iter()
            .zip(centers.par_iter())
            .map(|(pts, c)| if pts.is_empty() { *c } else { cell_center(pts, c, r) })
            .collect();
        repair_empty(&cells, &mut next, points, &labels, &d);
        let (nl, nd) = assign(points, &next, r)?;
        let nerr = nd.iter().sum::<f64>() / points.len() as f64;
        if nerr > err {
            break;
        }
        let done = err - nerr <= opts.rel_tol * err;
        centers = next;
        labels = nl;
        d = nd;
        err = nerr;
        history.push(err);
        if done {
            break;
        }
    }
    let masses = masses(&labels, n);
    Ok(LloydRun { codebook: Codebook { centers, masses, r, error_r: err, method: Method::Lloyd }, history })
}

/// Moves each center with an empty cell onto the worst-served point of the costliest cell.
fn repair_empty(cells: &[Vec<Point>], centers: &mut [Point], points: &[Point], labels: &[usize], d: &[f64]) {
    let empty: Vec<usize> = (0..cells.len()).filter(|&k| cells[k].is_empty()).collect();
    if empty.is_empty() {
        return;
    }
    let mut cost = vec![0.0; cells.len()];
    for (&l, &v) in labels.iter().zip(d) {
        cost[l] += v;
    }
    let mut taken = vec![false; points.len()];
    for k in empty {
        let worst = (0..cost.len()).max_by(|&a, &b| cost[a].total_cmp(&cost[b])).unwrap();
        let far = (0..points.len())
            .filter(|&i| labels[i] == worst && !taken[i])
            .max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)));
        if let Some(i) = far {
            taken[i] = true;
            centers[k] = points[i];
            cost[worst] -= d[i];
        }
    }
}

/// Best of `opts.restarts` seeded Lloyd runs with `n` centers.
pub fn lloyd(sample: &SampleSet, n: usize, r: f64, opts: &LloydOptions) -> Result<Codebook> {
    lloyd_runs(sample, n, r, opts).map(|run| run.codebook)
}

/// [`lloyd`] returning the winning run with its error history.
pub fn lloyd_runs(sample: &SampleSet, n: usize, r: f64, opts: &LloydOptions) -> Result<LloydRun> {
    if n == 0 || !(r > 0.0) || opts.restarts == 0 {
        return Err(Error::Precondition { detail: format!("need n >= 1, r > 0 and restarts >= 1, got n = {n}, r = {r}") });
    }
    if n > sample.len() {
        return Err(Error::Precondition { detail: format!("{n} centers for {} sample points", sample.len()) });
    }
    let mut best: Option<LloydRun> = None;
    for k in 0..opts.restarts {
        let run = lloyd_once(&sample.points, n, r, opts, k)?;
        if best.as_ref().is_none_or(|b| run.codebook.error_r < b.codebook.error_r) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Centers of the approximate squares of a stopping set with the bounds they certify.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AntichainCodebook {
    pub centers: Vec<Point>,
    /// `μ(F_σ)` for each center.
    pub masses: Vec<f64>,
    pub r: f64,
    /// `Σ μ(F_σ) |F_σ|^r`
    pub analytic_bound: f64,
    /// `2^{r/2} Σ E_r(σ)`
    pub e_bound: f64,
}

impl AntichainCodebook {
    pub fn card(&self) -> usize {
        self.centers.len()
    }

    /// The codebook with its empirical error on `sample`.
    pub fn evaluate(&self, sample: &SampleSet) -> Result<Codebook> {
        let (labels, d) = assign(&sample.points, &self.centers, self.r)?;
        Ok(Codebook {
            centers: self.centers.clone(),
            masses: masses(&labels, self.centers.len()),
            r: self.r,
            error_r: d.iter().sum::<f64>() / sample.len() as f64,
            method: Method::Antichain,
        })
    }
}

/// Codebook from the centers of `F_σ`, `σ ∈ Λ_{n,r}`.
pub fn antichain_codebook<S: Scalar>(spec: &Carpet<S>, n: usize, r: f64, budget: usize) -> Result<AntichainCodebook> {
    let fam = build_lambda(spec, n, r, budget)?;
    let rects: Vec<_> = fam.words.iter().map(|w| words::rectangle(spec, w).to_f64()).collect();
    let centers = rects.iter().map(|rc| rc.center()).collect();
    let log_mu: Vec<f64> = fam.words.iter().map(|w| words::log_measure(spec, w)).collect();
    let analytic = log_sum_exp(log_mu.iter().zip(&rects).map(|(m, rc)| m + 0.5 * r * rc.diam2().ln()));
    let e_bound = 0.5 * r * 2f64.ln() + log_sum_exp(fam.words.iter().map(|w| words::log_e_r(spec, w, r)));
    Ok(AntichainCodebook {
        centers,
        masses: log_mu.iter().map(|m| m.exp()).collect(),
        r,
        analytic_bound: analytic.exp(),
        e_bound: e_bound.exp(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub error_r: f64,
    /// `n^{r/s_r} ê_{n,r}^r`
    pub scaled: f64,
}

/// Empirical check of `e_{n,r} ≍ n^{-1/s_r}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientScan {
    pub r: f64,
    pub s_r: f64,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `ln ê_{n,r}^r` against `ln n`.
    pub slope: f64,
    /// `−r / s_r`
    pub predicted_slope: f64,
    /// `[min, max]` of the scaled column.
    pub band: (f64, f64),
    pub sample_size: usize,
    pub truncation_tol: f64,
    pub seed: u64,
}

impl CoefficientScan {
    pub fn band_ratio(&self) -> f64 {
        self.band.1 / self.band.0
    }

    pub fn slope_rel_error(&self) -> f64 {
        ((self.slope - self.predicted_slope) / self.predicted_slope).abs()
    }
}

/// Default n grid: `2^4, …, 2^10`.
pub fn default_n_grid() -> Vec<usize> {
    (4..=10).map(|k| 1usize << k).collect()
}

/// Runs [`lloyd`] over `n_grid` on one sample and fits the decay exponent.
pub fn coefficient_scan<S: Scalar>(
    spec: &Carpet<S>,
    r: f64,
    s_r: f64,
    n_grid: &[usize],
    sample_size: usize,
    opts: &LloydOptions,
) -> Result<CoefficientScan> {
    if n_grid.len() < 2 {
        return Err(Error::Precondition { detail: "the n grid needs at least two sizes".into() });
    }
    let pts = sample(spec, sample_size, DEFAULT_TOL, opts.seed)?;
    let rows = n_grid
        .iter()
        .map(|&n| {
            let cb = lloyd(&pts, n, r, opts)?;
            Ok(ScanRow { n, error_r: cb.error_r, scaled: (n as f64).powf(r / s_r) * cb.error_r })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|row| (row.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|row| row.error_r.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let lo = rows.iter().map(|row| row.scaled).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|row| row.scaled).fold(0.0, f64::max);
    Ok(CoefficientScan {
        r,
        s_r,
        rows,
        slope: sxy / sxx,
        predicted_slope: -r / s_r,
        band: (lo, hi),
        sample_size,
        truncation_tol: DEFAULT_TOL,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn points_lie_in_unit_square() {
        let s = sample(&fixtures::mixed::<f64>(), 2000, 1e-6, 4).unwrap();
        assert!(s.points.iter().all(|p| (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])));
    }

    #[test]
    fn sample_is_reproducible() {
        let c = fixtures::three_column::<f64>();
        assert_eq!(sample(&c, 500, 1e-6, 9).unwrap(), sample(&c, 500, 1e-6, 9).unwrap());
        assert_ne!(sample(&c, 500, 1e-6, 9).unwrap().points, sample(&c, 500, 1e-6, 10).unwrap().points);
    }

    #[test]
    fn single_center_is_mean() {
        let s = sample(&fixtures::grid_3x2::<f64>(), 5000, 1e-6, 1).unwrap();
        let cb = lloyd(&s, 1, 2.0, &LloydOptions::default()).unwrap();
        let m = s.mean();
        let cov = s.covariance();
        assert!((cb.centers[0][0] - m[0]).abs() < 1e-12 && (cb.centers[0][1] - m[1]).abs() < 1e-12);
        assert!((cb.error_r - (cov[0][0] + cov[1][1])).abs() < 1e-12);
    }

    #[test]
    fn general_power_descends() {
        let s = sample(&fixtures::mixed::<f64>(), 3000, 1e-6, 2).unwrap();
        for r in [1.0, 1.5, 3.0] {
            let run = lloyd_runs(&s, 8, r, &LloydOptions { restarts: 1, ..Default::default() }).unwrap();
            assert!(run.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "r={r}");
        }
    }

    #[test]
    fn more_centers_lower_error() {
        let s = sample(&fixtures::mixed::<f64>(), 3000, 1e-6, 2).unwrap();
        let e1 = lloyd(&s, 1, 2.0, &LloydOptions::default()).unwrap().error_r;
        let e2 = lloyd(&s, 2, 2.0, &LloydOptions::default()).unwrap().error_r;
        assert!(e2 <= e1);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let s = sample(&fixtures::mixed::<f64>(), 2000, 1e-6, 5).unwrap();
        let centers: Vec<Point> = s.points.iter().step_by(97).copied().collect();
        let (labels, d) = assign(&s.points, &centers, 2.0).unwrap();
        for (k, p) in s.points.iter().enumerate() {
            let best = centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min);
            assert!((d[k] - best).abs() < 1e-15);
            assert!((dist2(p, &centers[labels[k]]) - best).abs() < 1e-15);
        }
    }

    #[test]
    fn too_many_centers_rejected() {
        let s = sample(&fixtures::mixed::<f64>(), 10, 1e-6, 2).unwrap();
        assert!(matches!(lloyd(&s, 11, 2.0, &LloydOptions::default()), Err(Error::Precondition { .. })));
    }

    #[test]
    fn antichain_codebook_bounds() {
        let c = fixtures::mixed::<f64>();
        let cb = antichain_codebook(&c, 2, 2.0, 1_000_000).unwrap();
        assert!(cb.analytic_bound <= cb.e_bound * (1.0 + 1e-12));
        let s = sample(&c, 20_000, 1e-9, 3).unwrap();
        let ev = cb.evaluate(&s).unwrap();
        assert!(ev.error_r <= cb.analytic_bound * 1.1);
    }
}

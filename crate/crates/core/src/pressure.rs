//! Partition sums over the coding words and the dimension and spectrum solvers.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::carpet::Carpet;
use crate::error::{Error, Result};
use crate::lse::LogSumExp;
use crate::scalar::{Magnitude, Scalar};
use crate::words::{self, Letter, SplitWord};

/// Cap on the number of distinct ratio states held by the dynamic program.
pub const DEFAULT_MAX_STATES: usize = 4_000_000;

/// Absolute tolerance of every bisection.
pub const ROOT_TOL: f64 = 1e-13;

/// `ln Υ_l(t, s) = ln Σ_{σ∈Φ_l} (p_{σ_L} q_{σ_R})^t a_{σ_L}^s` by direct enumeration.
pub fn log_upsilon_naive<S: Scalar>(spec: &Carpet<S>, l: usize, t: f64, s: f64, budget: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::Precondition { detail: "level must be at least 1".into() });
    }
    let parts: Vec<(LogSumExp, usize)> = spec
        .letters()
        .par_iter()
        .map(|first| {
            let mut acc = LogSumExp::new();
            let mut count = 0usize;
            let base = first.ratio.clone();
            let w0 = t * first.ln_p + s * first.ln_a;
            let _ = words::for_each_x_word(spec, l - 1, &mut |rest: &[Letter], r: &S::Mag| {
                let ratio = base.mul(r);
                let wx = w0 + rest.iter().map(|l| { let i = spec.letter_info(*l); t * i.ln_p + s * i.ln_a }).sum::<f64>();
                words::for_each_completion(spec, &ratio, &[], &mut |tau: &[u32]| {
                    count += 1;
                    if count > budget {
                        return ControlFlow::Break(());
                    }
                    acc.add(wx + t * tau.iter().map(|&j| spec.ln_q(j)).sum::<f64>());
                    ControlFlow::Continue(())
                })
            });
            (acc, count)
        })
        .collect();
    let total: usize = parts.iter().map(|p| p.1).sum();
    if parts.iter().any(|p| p.1 > budget) || total > budget {
        return Err(Error::BudgetExceeded { count: total.min(budget), budget });
    }
    let mut acc = LogSumExp::new();
    for (p, _) in &parts {
        acc.merge(p);
    }
    Ok(acc.value())
}

/// `ln I_{l,r}(t) = ln Υ_l(t, r t)` by direct enumeration.
pub fn log_partition_naive<S: Scalar>(spec: &Carpet<S>, l: usize, t: f64, r: f64, budget: usize) -> Result<f64> {
    log_upsilon_naive(spec, l, t, r * t, budget)
}

/// `I_{l,r}(t)` by direct enumeration.
pub fn partition_sum_naive<S: Scalar>(spec: &Carpet<S>, l: usize, t: f64, r: f64, budget: usize) -> Result<f64> {
    log_partition_naive(spec, l, t, r, budget).map(f64::exp)
}

/// Memoized `ln ζ_t(ρ) = ln Σ_{τ∈Ω(ρ)} q_τ^t`.
struct Zeta<'a, S: Scalar> {
    spec: &'a Carpet<S>,
    t: f64,
    memo: BTreeMap<<S::Mag as Magnitude>::Key, f64>,
}

impl<'a, S: Scalar> Zeta<'a, S> {
    fn new(spec: &'a Carpet<S>, t: f64) -> Self {
        Zeta { spec, t, memo: BTreeMap::new() }
    }

    fn log(&mut self, rho: &S::Mag) -> f64 {
        let key = rho.key();
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let mut acc = LogSumExp::new();
        for j in 1..=self.spec.m() as u32 {
            let wq = self.t * self.spec.ln_q(j);
            let b = self.spec.b_mag(j);
            if rho.gt(b) {
                acc.add(wq);
            } else {
                let sub = self.log(&rho.div(b));
                acc.add(wq + sub);
            }
        }
        let v = acc.value();
        self.memo.insert(key, v);
        v
    }

    /// `ln Σ q_τ^t` over `τ ∈ Ω(ρ)` with `prefix ⪯ τ`.
    fn log_with_prefix(&mut self, rho: &S::Mag, prefix: &[u32]) -> f64 {
        let mut cur = S::Mag::unit();
        let mut w = 0.0;
        for (k, &j) in prefix.iter().enumerate() {
            cur = cur.mul(self.spec.b_mag(j));
            w += self.t * self.spec.ln_q(j);
            if rho.gt(&cur) {
                return if k + 1 == prefix.len() { w } else { f64::NEG_INFINITY };
            }
        }
        w + self.log(&rho.div(&cur))
    }
}

/// States `(ratio, ln weight)` after extending an x-word by `h` letters.
fn x_states<S: Scalar>(
    spec: &Carpet<S>,
    start: S::Mag,
    h: usize,
    t: f64,
    s: f64,
    max_states: usize,
) -> Result<States<S>> {
    let mut states = BTreeMap::new();
    let mut init = LogSumExp::new();
    init.add(0.0);
    states.insert(start.key(), (start, init));
    for level in 1..=h {
        states = step_states(spec, &states, t, s, max_states, level)?;
    }
    Ok(states)
}

type States<S> = BTreeMap<<<S as Scalar>::Mag as Magnitude>::Key, (<S as Scalar>::Mag, LogSumExp)>;

fn step_states<S: Scalar>(spec: &Carpet<S>, states: &States<S>, t: f64, s: f64, max_states: usize, level: usize) -> Result<States<S>> {
    let mut next: States<S> = BTreeMap::new();
    for (mag, w) in states.values() {
        let wv = w.value();
        for info in spec.letters() {
            let nm = mag.mul(&info.ratio);
            let nw = wv + t * info.ln_p + s * info.ln_a;
            next.entry(nm.key()).or_insert_with(|| (nm, LogSumExp::new())).1.add(nw);
        }
        if next.len() > max_states {
            return Err(Error::StateExplosion { states: next.len(), level });
        }
    }
    Ok(next)
}

/// `ln Υ_l(t, s)` by dynamic programming over the ratio `a_ω / b_{ω_y}`.
pub fn log_upsilon_fast<S: Scalar>(spec: &Carpet<S>, l: usize, t: f64, s: f64) -> Result<f64> {
    log_upsilon_fast_with(spec, l, t, s, DEFAULT_MAX_STATES)
}

pub fn log_upsilon_fast_with<S: Scalar>(spec: &Carpet<S>, l: usize, t: f64, s: f64, max_states: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::Precondition { detail: "level must be at least 1".into() });
    }
    let states = x_states(spec, S::Mag::unit(), l, t, s, max_states)?;
    let mut zeta = Zeta::new(spec, t);
    let mut acc = LogSumExp::new();
    for (mag, w) in states.values() {
        acc.add(w.value() + zeta.log(mag));
    }
    Ok(acc.value())
}

/// `ln Υ_l(t, s)` for every `l = 1..=l_max` in one pass.
pub fn log_upsilon_levels<S: Scalar>(spec: &Carpet<S>, l_max: usize, t: f64, s: f64) -> Result<Vec<f64>> {
    let mut states = x_states(spec, S::Mag::unit(), 0, t, s, DEFAULT_MAX_STATES)?;
    let mut zeta = Zeta::new(spec, t);
    let mut out = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        states = step_states(spec, &states, t, s, DEFAULT_MAX_STATES, l)?;
        let mut acc = LogSumExp::new();
        for (mag, w) in states.values() {
            acc.add(w.value() + zeta.log(mag));
        }
        out.push(acc.value());
    }
    Ok(out)
}

/// `ln I_{l,r}(t)` by dynamic programming.
pub fn log_partition_fast<S: Scalar>(spec: &Carpet<S>, l: usize, t: f64, r: f64) -> Result<f64> {
    log_upsilon_fast(spec, l, t, r * t)
}

/// `I_{l,r}(t)` by dynamic programming.
pub fn partition_sum_fast<S: Scalar>(spec: &Carpet<S>, l: usize, t: f64, r: f64) -> Result<f64> {
    log_partition_fast(spec, l, t, r).map(f64::exp)
}

/// `ln Σ_{ρ∈Λ_h(σ)} (p_{ρ_L} q_{ρ_R})^t a_{ρ_L}^s` by dynamic programming.
pub fn log_descendant_sum<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord, h: usize, t: f64, s: f64) -> Result<f64> {
    if !words::is_in_psi(spec, sigma) {
        return Err(Error::Word { word: sigma.to_string(), detail: "not a coding word".into() });
    }
    let base = words::ratio_mag(spec, &sigma.x);
    let states = x_states(spec, base, h, t, s, DEFAULT_MAX_STATES)?;
    let own = t * words::log_measure(spec, &SplitWord::new(sigma.x.clone(), Vec::new())) + s * words::log_width(spec, &sigma.x);
    let mut zeta = Zeta::new(spec, t);
    let mut acc = LogSumExp::new();
    for (mag, w) in states.values() {
        acc.add(w.value() + zeta.log_with_prefix(mag, &sigma.y));
    }
    Ok(own + acc.value())
}

/// `ln Σ_{ρ∈Λ_h(σ)} E_r(ρ)^t` by enumeration.
pub fn log_descendant_sum_naive<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord, h: usize, t: f64, r: f64, budget: usize) -> Result<f64> {
    let mut acc = LogSumExp::new();
    let mut count = 0usize;
    let flow = words::for_each_descendant(spec, sigma, h, &mut |x: &[Letter], y: &[u32]| {
        count += 1;
        if count > budget {
            return ControlFlow::Break(());
        }
        let w = SplitWord::new(x.to_vec(), y.to_vec());
        acc.add(t * words::log_e_r(spec, &w, r));
        ControlFlow::Continue(())
    })?;
    if flow.is_break() {
        return Err(Error::BudgetExceeded { count: budget, budget });
    }
    Ok(acc.value())
}

/// Bisection for a decreasing function with `f(lo) > 0 > f(hi)`.
pub fn bisect_decreasing(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::NoSignChange { lo, hi, detail: format!("f(lo) = {flo}, f(hi) = {fhi}") });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expands `[lo, hi]` geometrically until a decreasing `f` changes sign, then bisects.
pub fn solve_decreasing(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        if f(lo)? > 0.0 {
            break;
        }
        lo -= (hi - lo).max(1.0);
    }
    for _ in 0..200 {
        if f(hi)? < 0.0 {
            break;
        }
        hi += (hi - lo).max(1.0);
    }
    bisect_decreasing(f, lo, hi, ROOT_TOL)
}

/// One level of the pressure solver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRoot {
    pub level: usize,
    pub t_hat: f64,
    pub s_hat: f64,
}

/// A point `(x, value)` of a sampled pressure function at a given level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSample {
    pub level: usize,
    pub x: f64,
    pub value: f64,
}

/// Sampled pressure function with its root and uncertainty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureCurve {
    /// The exponent `r` (or moment order `q`).
    pub param: f64,
    pub samples: Vec<CurveSample>,
    /// Per-level roots of `I_{l,r}(t) = 1`.
    pub levels: Vec<LevelRoot>,
    pub bracket: (f64, f64),
    /// Root of the growth rate of `ln I_{l,r}(t)` fitted over the upper half of the levels.
    pub root: f64,
    /// Uncertainty of `root`: its distance to the last per-level root.
    pub band: f64,
}

impl PressureCurve {
    /// `s = r t / (1 − t)` at the root.
    pub fn s(&self) -> f64 {
        s_from_t(self.root, self.param)
    }
    /// Uncertainty band transported to `s`.
    pub fn s_band(&self) -> f64 {
        let lo = s_from_t((self.root - self.band).max(0.0), self.param);
        let hi = s_from_t((self.root + self.band).min(1.0 - 1e-15), self.param);
        (hi - self.s()).max(self.s() - lo)
    }
}

/// `s = r t / (1 − t)`
pub fn s_from_t(t: f64, r: f64) -> f64 {
    r * t / (1.0 - t)
}

/// Least-squares slope of `ln I_{l,r}(t)` against `l` over `lo..=hi`.
pub fn growth_rate<S: Scalar>(spec: &Carpet<S>, lo: usize, hi: usize, t: f64, r: f64) -> Result<f64> {
    let logs = log_upsilon_levels(spec, hi, t, r * t)?;
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|l| (l as f64, logs[l - 1])).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Estimates `t_r`, the zero of the pressure `t ↦ lim (1/l) ln I_{l,r}(t)`.
///
/// Reports the per-level roots of `I_{l,r}(t) = 1` for `l ≤ l_max`; the returned root is the
/// zero of the growth rate fitted over `l ∈ [⌈l_max/2⌉, l_max]`, which cancels the bounded
/// factor in `I_{l,r}` that biases single-level roots by `O(1/l)`.
pub fn solve_t_r<S: Scalar>(spec: &Carpet<S>, r: f64, l_max: usize) -> Result<PressureCurve> {
    if !(r > 0.0) || l_max == 0 {
        return Err(Error::Precondition { detail: format!("need r > 0 and l_max >= 1, got r = {r}, l_max = {l_max}") });
    }
    let mut levels = Vec::with_capacity(l_max);
    let mut samples = Vec::new();
    for l in 1..=l_max {
        let f = |t: f64| log_partition_fast(spec, l, t, r);
        let (f0, f1) = (f(0.0)?, f(1.0)?);
        samples.push(CurveSample { level: l, x: 0.0, value: f0 });
        samples.push(CurveSample { level: l, x: 1.0, value: f1 });
        let t = bisect_decreasing(f, 0.0, 1.0, ROOT_TOL)?;
        samples.push(CurveSample { level: l, x: t, value: f(t)? });
        levels.push(LevelRoot { level: l, t_hat: t, s_hat: s_from_t(t, r) });
    }
    let last = levels[l_max - 1].t_hat;
    let root = if l_max >= 2 {
        let lo = l_max.div_ceil(2);
        bisect_decreasing(|t| growth_rate(spec, lo, l_max, t, r), 0.0, 1.0, ROOT_TOL)?
    } else {
        last
    };
    let band = (root - last).abs();
    Ok(PressureCurve { param: r, samples, levels, bracket: (0.0, 1.0), root, band })
}

/// Solves `Σ_j q_j^q b_j^{τ_y} = 1`.
pub fn tau_y<S: Scalar>(spec: &Carpet<S>, q: f64) -> Result<f64> {
    let m = spec.m() as u32;
    let f = |tau: f64| Ok(crate::lse::log_sum_exp((1..=m).map(|j| q * spec.ln_q(j) + tau * spec.ln_b(j))));
    solve_decreasing(f, -1.0, 1.0)
}

/// `β(q)`: solves `Σ p_ij^q a_ij^{β−τ_y(q)} b_j^{τ_y(q)} = 1`.
pub fn closed_form_beta<S: Scalar>(spec: &Carpet<S>, q: f64) -> Result<f64> {
    let ty = tau_y(spec, q)?;
    let f = |beta: f64| {
        Ok(crate::lse::log_sum_exp(spec.letters().iter().map(|i| q * i.ln_p + (beta - ty) * i.ln_a + ty * spec.ln_b(i.letter.j))))
    };
    solve_decreasing(f, -1.0, 2.0)
}

/// `τ(q)`, the `L^q` spectrum, equal to `β(q)`.
pub fn tau<S: Scalar>(spec: &Carpet<S>, q: f64) -> Result<f64> {
    closed_form_beta(spec, q)
}

/// `s_r` from `β(t) = r t`.
pub fn closed_form_s_r<S: Scalar>(spec: &Carpet<S>, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Precondition { detail: format!("need r > 0, got {r}") });
    }
    let t = bisect_decreasing(|t| Ok(closed_form_beta(spec, t)? - r * t), 0.0, 1.0, ROOT_TOL)?;
    Ok(s_from_t(t, r))
}

/// `d_r` for grid carpets from `ξ ln Σ_G (p m0^{-r})^θ + (1−ξ) ln Σ_j (q_j m0^{-r})^θ = 0`, `ξ = ln m0 / ln n0`.
pub fn bm_closed_form_d_r<S: Scalar>(spec: &Carpet<S>, r: f64) -> Result<f64> {
    let grid = spec.bm_grid().ok_or_else(|| Error::Precondition { detail: "carpet was not built on a grid".into() })?;
    if !(r > 0.0) {
        return Err(Error::Precondition { detail: format!("need r > 0, got {r}") });
    }
    let ln_m0 = (grid.m0 as f64).ln();
    let xi = ln_m0 / (grid.n0 as f64).ln();
    let m = spec.m() as u32;
    let f = |th: f64| {
        let gx = crate::lse::log_sum_exp(spec.letters().iter().map(|i| th * (i.ln_p - r * ln_m0)));
        let gy = crate::lse::log_sum_exp((1..=m).map(|j| th * (spec.ln_q(j) - r * ln_m0)));
        Ok(xi * gx + (1.0 - xi) * gy)
    };
    let th = bisect_decreasing(f, 0.0, 1.0, ROOT_TOL)?;
    Ok(s_from_t(th, r))
}

/// Finite-stage auxiliary measure: mass `E_r(σ)^t / I_{k,r}(t)` on each `σ ∈ Φ_k`.
#[derive(Clone, Debug)]
pub struct AuxMeasure {
    pub r: f64,
    pub t: f64,
    pub k: usize,
    pub log_norm: f64,
}

impl AuxMeasure {
    pub fn new<S: Scalar>(spec: &Carpet<S>, r: f64, t: f64, k: usize) -> Result<Self> {
        Ok(AuxMeasure { r, t, k, log_norm: log_partition_fast(spec, k, t, r)? })
    }

    /// Mass of one atom `σ ∈ Φ_k`.
    pub fn atom<S: Scalar>(&self, spec: &Carpet<S>, sigma: &SplitWord) -> f64 {
        (self.t * words::log_e_r(spec, sigma, self.r) - self.log_norm).exp()
    }

    /// Mass of the cylinder `[σ]` for a coding word with `|σ_L| ≤ k`.
    pub fn mass<S: Scalar>(&self, spec: &Carpet<S>, sigma: &SplitWord) -> Result<f64> {
        let n = sigma.level();
        if n > self.k {
            return Err(Error::Precondition { detail: format!("cylinder level {n} exceeds measure level {}", self.k) });
        }
        Ok((log_descendant_sum(spec, sigma, self.k - n, self.t, self.r * self.t)? - self.log_norm).exp())
    }

    /// All atoms, enumerated.
    pub fn atoms<S: Scalar>(&self, spec: &Carpet<S>, budget: usize) -> Result<Vec<(SplitWord, f64)>> {
        Ok(words::enumerate_psi(spec, self.k, budget)?.into_iter().map(|w| { let m = self.atom(spec, &w); (w, m) }).collect())
    }
}

/// `aux_measure(spec, r, k)` at the pressure root estimate from `l_max = k`.
pub fn aux_measure<S: Scalar>(spec: &Carpet<S>, r: f64, t: f64, k: usize) -> Result<AuxMeasure> {
    AuxMeasure::new(spec, r, t, k)
}

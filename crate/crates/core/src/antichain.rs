//! Stopping sets in the square and cylinder trees and the separated families built from them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carpet::{derived_constants, Carpet, DerivedConstants};
use crate::error::{Error, Result};
use crate::lse::log_sum_exp;
use crate::scalar::{Magnitude, Scalar};
use crate::words::{self, prefix_rel, Letter, PrefixRel, Rect, SplitWord};

/// Default number of random deep words used by the maximality and tiling checks.
pub const DEFAULT_PROBES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Stopping set in the approximate-square tree.
    LambdaPsi,
    /// Stopping set in the coding-cylinder tree.
    GammaPhi,
    /// Two x-letters of a fixed column inserted after `σ_L`.
    Bar,
    /// The bar words with promoted y-letters and an appended `1, m, m, …` tail.
    Star,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::LambdaPsi => "lambda",
            FamilyKind::GammaPhi => "gamma",
            FamilyKind::Bar => "bar",
            FamilyKind::Star => "star",
        }
    }
}

/// A finite family of words with the flags certified for it.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiChain {
    pub kind: FamilyKind,
    pub n: usize,
    pub r: f64,
    pub words: Vec<SplitWord>,
    /// For `Bar` and `Star`: the stopping-set word each member was built from, index-aligned.
    pub sources: Vec<SplitWord>,
    pub certified: BTreeMap<String, bool>,
}

impl AntiChain {
    pub fn card(&self) -> usize {
        self.words.len()
    }

    /// `min |σ_L|` over the family.
    pub fn min_level(&self) -> usize {
        self.words.iter().map(SplitWord::level).min().unwrap_or(0)
    }

    pub fn max_level(&self) -> usize {
        self.words.iter().map(SplitWord::level).max().unwrap_or(0)
    }

    pub fn all_certified(&self) -> bool {
        self.certified.values().all(|v| *v)
    }

    /// One word per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.words {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    /// JSON sidecar with the flags and the constants used.
    pub fn sidecar(&self, constants: &DerivedConstants) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "n": self.n,
            "r": self.r,
            "card": self.card(),
            "min_level": self.min_level(),
            "max_level": self.max_level(),
            "certified": self.certified,
            "constants": constants,
        })
    }

    /// Reads the line format back; flags are left empty.
    pub fn from_text(kind: FamilyKind, n: usize, r: f64, text: &str) -> Result<Self> {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<SplitWord>().map_err(|e| Error::word(l, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(AntiChain { kind, n, r, words, sources: Vec::new(), certified: BTreeMap::new() })
    }
}

/// Exact (or log-domain) factors of `E_r(σ) = p_{σ_L} q_{σ_R} a_{σ_L}^r`.
struct EWeights<S: Scalar> {
    letter: Vec<S::Mag>,
    column: Vec<S::Mag>,
}

impl<S: Scalar> EWeights<S> {
    fn new(spec: &Carpet<S>, r: f64) -> Result<Self> {
        let letter = spec
            .letters()
            .iter()
            .map(|info| {
                let p = spec.cell(info.letter).p.mag();
                info.a.powf(r).map(|ar| p.mul(&ar))
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| non_integer_r(r))?;
        let column = (1..=spec.m() as u32).map(|j| spec.q(j).mag()).collect();
        Ok(EWeights { letter, column })
    }

    fn x(&self, spec: &Carpet<S>, x: &[Letter]) -> S::Mag {
        x.iter().fold(S::Mag::unit(), |acc, l| acc.mul(&self.letter[spec.letter_index(*l)]))
    }

    fn y(&self, y: &[u32]) -> S::Mag {
        y.iter().fold(S::Mag::unit(), |acc, &j| acc.mul(&self.column[j as usize - 1]))
    }

    fn e(&self, spec: &Carpet<S>, w: &SplitWord) -> S::Mag {
        self.x(spec, &w.x).mul(&self.y(&w.y))
    }
}

fn non_integer_r(r: f64) -> Error {
    Error::Precondition { detail: format!("exact arithmetic needs an integer r, got {r}") }
}

/// `η̲_r` as a magnitude.
fn eta_low<S: Scalar>(spec: &Carpet<S>, c: &DerivedConstants) -> Result<S::Mag> {
    let q = spec.q_min().mag().powf(c.a1 as f64).expect("integer power");
    let a = spec.a_min().mag().powf(c.r).ok_or_else(|| non_integer_r(c.r))?;
    Ok(spec.p_min().mag().mul(&q).mul(&a))
}

fn pow_n<M: Magnitude>(m: &M, n: usize) -> M {
    m.powf(n as f64).expect("integer power")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tree {
    Squares,
    Cylinders,
}

struct Node<S: Scalar> {
    x: Vec<Letter>,
    y: Vec<u32>,
    ratio: S::Mag,
    ex: S::Mag,
}

/// Visits the children of `node`; the root is `θ`.
fn for_each_child<S, F>(spec: &Carpet<S>, w: &EWeights<S>, tree: Tree, node: &Node<S>, f: &mut F) -> ControlFlow<()>
where
    S: Scalar,
    F: FnMut(Node<S>, S::Mag) -> ControlFlow<()>,
{
    let (col, prefix): (Option<u32>, &[u32]) = match tree {
        _ if node.x.is_empty() => (None, &[]),
        Tree::Squares => (Some(node.y[0]), &node.y[1..]),
        Tree::Cylinders => (None, &node.y),
    };
    for (k, info) in spec.letters().iter().enumerate() {
        if col.is_some_and(|j| j != info.letter.j) {
            continue;
        }
        let ratio = node.ratio.mul(&info.ratio);
        let ex = node.ex.mul(&w.letter[k]);
        let mut x = node.x.clone();
        x.push(info.letter);
        words::for_each_completion(spec, &ratio, prefix, &mut |t: &[u32]| {
            let e = ex.mul(&w.y(t));
            f(Node { x: x.clone(), y: t.to_vec(), ratio: ratio.clone(), ex: ex.clone() }, e)
        })?;
    }
    ControlFlow::Continue(())
}

fn stop_dfs<S: Scalar>(
    spec: &Carpet<S>,
    w: &EWeights<S>,
    tree: Tree,
    thr: &S::Mag,
    node: &Node<S>,
    out: &mut Vec<SplitWord>,
    budget: &Budget,
) -> ControlFlow<()> {
    for_each_child(spec, w, tree, node, &mut |child, e| {
        if thr.gt(&e) {
            budget.take()?;
            out.push(SplitWord::new(child.x, child.y));
            ControlFlow::Continue(())
        } else {
            stop_dfs(spec, w, tree, thr, &child, out, budget)
        }
    })
}

/// Word budget shared by parallel branches.
struct Budget {
    used: AtomicUsize,
    limit: usize,
}

impl Budget {
    fn take(&self) -> ControlFlow<()> {
        if self.used.fetch_add(1, AtomicOrdering::Relaxed) >= self.limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

fn stopping_set<S: Scalar>(spec: &Carpet<S>, n: usize, r: f64, tree: Tree, budget: usize) -> Result<Vec<SplitWord>> {
    if n == 0 || !(r > 0.0) {
        return Err(Error::Precondition { detail: format!("need n >= 1 and r > 0, got n = {n}, r = {r}") });
    }
    let c = derived_constants(spec, r);
    let w = EWeights::new(spec, r)?;
    let thr = pow_n(&eta_low(spec, &c)?, n);
    let root = Node { x: Vec::new(), y: Vec::new(), ratio: S::Mag::unit(), ex: S::Mag::unit() };
    let mut firsts = Vec::new();
    let _ = for_each_child(spec, &w, tree, &root, &mut |child, e| {
        firsts.push((child, e));
        ControlFlow::Continue(())
    });
    let shared = Budget { used: AtomicUsize::new(0), limit: budget };
    let parts: Vec<(Vec<SplitWord>, bool)> = firsts
        .par_iter()
        .map(|(child, e)| {
            let mut out = Vec::new();
            if thr.gt(e) {
                let over = shared.take().is_break();
                out.push(SplitWord::new(child.x.clone(), child.y.clone()));
                return (out, over);
            }
            let over = stop_dfs(spec, &w, tree, &thr, child, &mut out, &shared).is_break();
            (out, over)
        })
        .collect();
    if parts.iter().any(|p| p.1) {
        return Err(Error::BudgetExceeded { count: budget, budget });
    }
    Ok(parts.into_iter().flat_map(|p| p.0).collect())
}

/// `Λ_{n,r}`: the approximate squares with `E_r(σ^♭) ≥ η̲_r^n > E_r(σ)`.
pub fn build_lambda<S: Scalar>(spec: &Carpet<S>, n: usize, r: f64, budget: usize) -> Result<AntiChain> {
    let words = stopping_set(spec, n, r, Tree::Squares, budget)?;
    Ok(AntiChain { kind: FamilyKind::LambdaPsi, n, r, words, sources: Vec::new(), certified: BTreeMap::new() })
}

/// `Γ_{n,r}`: the coding words with `E_r(σ^-) ≥ η̲_r^n > E_r(σ)`.
pub fn build_gamma<S: Scalar>(spec: &Carpet<S>, n: usize, r: f64, budget: usize) -> Result<AntiChain> {
    let words = stopping_set(spec, n, r, Tree::Cylinders, budget)?;
    Ok(AntiChain { kind: FamilyKind::GammaPhi, n, r, words, sources: Vec::new(), certified: BTreeMap::new() })
}

/// Appends `fill` to `y` until `b_{(x cols) y}` drops below `a_x`, given that it has not yet.
fn extend_to_window<S: Scalar>(spec: &Carpet<S>, x: &[Letter], y: &mut Vec<u32>, fill: u32) {
    let ratio = words::ratio_mag(spec, x);
    let mut cur = words::b_mag(spec, y);
    while !ratio.gt(&cur) {
        y.push(fill);
        cur = cur.mul(spec.b_mag(fill));
    }
}

/// Smallest column with at least two cells.
pub fn wide_column<S: Scalar>(spec: &Carpet<S>) -> Option<u32> {
    (1..=spec.m() as u32).find(|&j| spec.n(j) >= 2)
}

/// Lowest-index column of minimal height.
fn shortest_column<S: Scalar>(spec: &Carpet<S>) -> u32 {
    let mut best = 1;
    for j in 2..=spec.m() as u32 {
        if spec.b(j) < spec.b(best) {
            best = j;
        }
    }
    best
}

/// `B_{n,r}`: inserts `(1, j_0), (n_{j_0}, j_0)` after each `σ_L` and extends the y-tail.
pub fn build_bar<S: Scalar>(spec: &Carpet<S>, lambda: &AntiChain) -> Result<AntiChain> {
    if lambda.kind != FamilyKind::LambdaPsi {
        return Err(Error::Precondition { detail: "the bar family is built from a square stopping set".into() });
    }
    let Some(j0) = wide_column(spec) else {
        return Err(Error::Precondition {
            detail: "every column has a single cell; use the star family's single-cell construction".into(),
        });
    };
    let c = derived_constants(spec, lambda.r);
    if (lambda.n as i64) <= c.t1 {
        return Err(Error::Precondition { detail: format!("need n > T1 = {}, got n = {}", c.t1, lambda.n) });
    }
    let fill = shortest_column(spec);
    let tau0 = [Letter::new(1, j0), Letter::new(spec.n(j0) as u32, j0)];
    let words = lambda
        .words
        .iter()
        .map(|s| {
            let mut x = s.x.clone();
            x.extend_from_slice(&tau0);
            let mut y = s.y.clone();
            extend_to_window(spec, &x, &mut y, fill);
            SplitWord::new(x, y)
        })
        .collect();
    Ok(AntiChain {
        kind: FamilyKind::Bar,
        n: lambda.n,
        r: lambda.r,
        words,
        sources: lambda.words.clone(),
        certified: BTreeMap::new(),
    })
}

/// `F_{n,r}`: promotes the first `2 A_2` y-letters to x-letters with `i = 1`, then appends `1, m, m, …`.
///
/// Takes the bar family, or the square stopping set itself when every column has a single cell.
pub fn build_star<S: Scalar>(spec: &Carpet<S>, base: &AntiChain) -> Result<AntiChain> {
    let c = derived_constants(spec, base.r);
    let single = wide_column(spec).is_none();
    let sources = match (base.kind, single) {
        (FamilyKind::Bar, false) => {
            if (base.n as i64) <= c.t2 {
                return Err(Error::Precondition { detail: format!("need n > T2 = {}, got n = {}", c.t2, base.n) });
            }
            base.sources.clone()
        }
        (FamilyKind::LambdaPsi, true) => {
            let bound = crate::carpet::floor_real(2.0 * c.a2 as f64 / c.a4);
            if (base.n as i64) <= bound {
                return Err(Error::Precondition {
                    detail: format!("need n > floor(2 A2 / A4) = {bound}, got n = {}", base.n),
                });
            }
            base.words.clone()
        }
        _ => {
            return Err(Error::Precondition {
                detail: "the star family is built from the bar family, or from the square stopping set when every column has a single cell".into(),
            })
        }
    };
    let promote = 2 * c.a2 as usize;
    let m = spec.m() as u32;
    let words = base
        .words
        .iter()
        .map(|s| {
            if s.y.len() <= promote {
                return Err(Error::word(s, format!("y-tail shorter than {} letters", promote + 1)));
            }
            let mut x = s.x.clone();
            x.extend(s.y[..promote].iter().map(|&j| Letter::new(1, j)));
            let mut y = s.y[promote..].to_vec();
            y.extend([1, m]);
            extend_to_window(spec, &x, &mut y, m);
            Ok(SplitWord::new(x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AntiChain { kind: FamilyKind::Star, n: base.n, r: base.r, words, sources, certified: BTreeMap::new() })
}

/// Closest pair of a family relative to the larger diameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separation {
    /// `min d(F, F') / max(|F|, |F'|)` over scored pairs; `+∞` when no pair is scored.
    pub min_ratio: f64,
    pub witness: Option<(SplitWord, SplitWord)>,
    /// `b̲² / (1 + b̲^{-2})`
    pub bound: f64,
    /// `min(2^{-1/2} a̲², b̲² / (1 + b̲^{-2}))`: what the gap arguments give when some pair is separated only horizontally.
    pub proven_bound: f64,
    pub pairs_scored: usize,
    /// `min_ratio ≥ bound` (with `1e-12` relative slack in float mode).
    pub passed: bool,
}

/// Pairs `(i, j)`, `i < j`, whose rectangles may be within distance `h` of each other.
fn near_pairs(rects: &[Rect<f64>], h: f64) -> Vec<(usize, usize)> {
    if rects.len() < 2 || h == 0.0 {
        return Vec::new();
    }
    let cell = |v: f64| (v / h).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, r) in rects.iter().enumerate() {
        for gx in cell(r.x_lo)..=cell(r.x_hi) {
            for gy in cell(r.y_lo)..=cell(r.y_hi) {
                grid.entry((gx, gy)).or_default().push(k);
            }
        }
    }
    let mut out: Vec<(usize, usize)> = rects
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, r)| {
            let mut seen = HashSet::new();
            for gx in cell(r.x_lo) - 1..=cell(r.x_hi) + 1 {
                for gy in cell(r.y_lo) - 1..=cell(r.y_hi) + 1 {
                    if let Some(v) = grid.get(&(gx, gy)) {
                        seen.extend(v.iter().copied().filter(|&o| o > k));
                    }
                }
            }
            let mut v: Vec<_> = seen.into_iter().map(|o| (k, o)).collect();
            v.sort_unstable();
            v
        })
        .collect();
    out.dedup();
    out
}

/// Minimal `d(F, F') / max(|F|, |F'|)` over all pairs, with distances in `S`.
///
/// Pairs are scored within a search radius of `k` family diameters; `k` grows until the best
/// scored ratio is at most `k`, which no unscored pair can beat.
pub fn check_separation<S: Scalar>(spec: &Carpet<S>, fam: &AntiChain) -> Separation {
    let b = spec.b_min();
    let a = spec.a_min();
    let b2 = b.clone() * b.clone();
    let bound_s = b2.clone() / (S::one() + S::one() / b2.clone());
    let bound = bound_s.to_f64();
    let proven_bound = (a.to_f64().powi(2) / 2f64.sqrt()).min(bound);
    let rects: Vec<Rect<S>> = fam.words.iter().map(|w| words::rectangle(spec, w)).collect();
    let approx: Vec<Rect<f64>> = rects.iter().map(Rect::to_f64).collect();
    let dmax = approx.iter().map(|r| r.diam2().sqrt()).fold(0.0, f64::max);
    let mut k = 1.0;
    let (best, n_pairs) = loop {
        let pairs = near_pairs(&approx, k * dmax * (1.0 + 1e-9));
        let best = pairs
            .par_iter()
            .map(|&(i, j)| {
                let d2 = rects[i].dist2(&rects[j]);
                let m2 = S::max_of(&rects[i].diam2(), &rects[j].diam2());
                (d2 / m2, i, j)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .reduce(|x, y| if y.0 < x.0 { y } else { x });
        let settled = best.as_ref().is_some_and(|b| b.0.to_f64() <= k * k);
        if settled || k * dmax >= 2.0 || approx.len() < 2 {
            break (best, pairs.len());
        }
        k *= 4.0;
    };
    let bound2 = bound_s.clone() * bound_s;
    let slack = if S::EXACT { S::one() } else { S::one() - S::from_ratio(1, 500_000_000_000) };
    match best {
        None => Separation { min_ratio: f64::INFINITY, witness: None, bound, proven_bound, pairs_scored: 0, passed: true },
        Some((q, i, j)) => Separation {
            min_ratio: q.to_f64().sqrt(),
            witness: Some((fam.words[i].clone(), fam.words[j].clone())),
            bound,
            proven_bound,
            pairs_scored: n_pairs,
            passed: q >= bound2 * slack,
        },
    }
}

/// `ln Σ_{σ∈fam} E_r(σ)^t`.
pub fn log_sum_e_t<S: Scalar>(spec: &Carpet<S>, fam: &AntiChain, t: f64) -> f64 {
    log_sum_exp(fam.words.iter().map(|w| t * words::log_e_r(spec, w, fam.r)))
}

/// `Σ_{σ∈fam} E_r(σ)^t`.
pub fn sum_e_t<S: Scalar>(spec: &Carpet<S>, fam: &AntiChain, t: f64) -> f64 {
    log_sum_e_t(spec, fam, t).exp()
}

/// Options for [`certify`].
#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub probes: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { probes: DEFAULT_PROBES, seed: 0 }
    }
}

/// Runs the structural checks for the family's kind and records them in `fam.certified`.
pub fn certify<S: Scalar>(spec: &Carpet<S>, fam: &mut AntiChain, opts: &CertifyOptions) -> Result<()> {
    let flags = match fam.kind {
        FamilyKind::LambdaPsi => certify_stopping(spec, fam, Tree::Squares, opts)?,
        FamilyKind::GammaPhi => certify_stopping(spec, fam, Tree::Cylinders, opts)?,
        FamilyKind::Bar => certify_bar(spec, fam)?,
        FamilyKind::Star => certify_star(spec, fam)?,
    };
    fam.certified = flags.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok(())
}

fn parent<S: Scalar>(spec: &Carpet<S>, tree: Tree, w: &SplitWord) -> Result<SplitWord> {
    match tree {
        Tree::Squares => words::flat_predecessor(spec, w),
        Tree::Cylinders => words::phi_predecessor(spec, w),
    }
}

/// The ancestors of `w` at x-levels `1..|w_L|` (excluding `w` and `θ`), shortest first.
///
/// One pass over `w`: the window end moves right as the x-prefix grows.
fn ancestors<S: Scalar>(spec: &Carpet<S>, tree: Tree, w: &SplitWord) -> Vec<SplitWord> {
    let l = w.level();
    let mut out = Vec::with_capacity(l.saturating_sub(1));
    let ys = match tree {
        Tree::Squares => w.y_word(),
        Tree::Cylinders => w.y.clone(),
    };
    let mut target = S::Mag::unit();
    let mut cur = S::Mag::unit();
    let mut end = 0;
    for k in 1..l {
        let info = spec.letter_info(w.x[k - 1]);
        target = target.mul(match tree {
            Tree::Squares => &info.a,
            Tree::Cylinders => &info.ratio,
        });
        while end < ys.len() && !target.gt(&cur) {
            cur = cur.mul(spec.b_mag(ys[end]));
            end += 1;
        }
        let y = match tree {
            Tree::Squares => ys[k..end].to_vec(),
            Tree::Cylinders => ys[..end].to_vec(),
        };
        out.push(SplitWord::new(w.x[..k].to_vec(), y));
    }
    out
}

/// Number of members among `w` and its ancestors.
fn members_above<S: Scalar>(spec: &Carpet<S>, tree: Tree, set: &HashSet<&SplitWord>, w: &SplitWord) -> usize {
    usize::from(set.contains(w)) + ancestors(spec, tree, w).iter().filter(|a| set.contains(a)).count()
}

fn certify_stopping<S: Scalar>(
    spec: &Carpet<S>,
    fam: &AntiChain,
    tree: Tree,
    opts: &CertifyOptions,
) -> Result<Vec<(&'static str, bool)>> {
    let c = derived_constants(spec, fam.r);
    let w = EWeights::new(spec, fam.r)?;
    let eta = eta_low(spec, &c)?;
    let hi = pow_n(&eta, fam.n);
    let lo = hi.mul(&eta);

    let checks = fam
        .words
        .par_iter()
        .map(|s| -> Result<(bool, bool)> {
            let valid = words::is_in_psi(spec, s);
            if !valid {
                return Ok((false, false));
            }
            let e = w.e(spec, s);
            let pe = w.e(spec, &parent(spec, tree, s)?);
            Ok((e.ge(&lo) && hi.gt(&e), pe.ge(&hi)))
        })
        .collect::<Result<Vec<_>>>()?;
    let window = checks.iter().all(|c| c.0);
    let parent_window = checks.iter().all(|c| c.1);

    let set: HashSet<&SplitWord> = fam.words.iter().collect();
    let unique = set.len() == fam.words.len();
    let disjoint = unique
        && fam
            .words
            .par_iter()
            .all(|s| ancestors(spec, tree, s).iter().all(|a| !set.contains(a)));

    let mass = if S::EXACT {
        fam.words.iter().fold(S::zero(), |acc, s| acc + words::measure_exact(spec, s)) == S::one()
    } else {
        (log_sum_exp(fam.words.iter().map(|s| words::log_measure(spec, s)))).abs() < 1e-9
    };

    let depth = fam.max_level() + 2;
    let covered = (0..opts.probes)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let probe = words::random_psi_word(spec, depth, &mut rng);
            members_above(spec, tree, &set, &probe) == 1
        })
        .all(|b| b);

    let cover_name = if tree == Tree::Squares { "maximal" } else { "tiling" };
    Ok(vec![("window", window), ("parent_window", parent_window), ("disjoint", disjoint), ("mass_sum", mass), (cover_name, covered)])
}

fn certify_bar<S: Scalar>(spec: &Carpet<S>, fam: &AntiChain) -> Result<Vec<(&'static str, bool)>> {
    let lengths = fam.words.iter().zip(&fam.sources).all(|(b, s)| b.level() == s.level() + 2);
    let inside = fam.words.iter().zip(&fam.sources).all(|(b, s)| {
        words::is_in_psi(spec, b) && matches!(words::square_relation(s, b), words::SquareRelation::Contains)
    });
    let (y_incomparable, x_gap) = bar_pair_checks(spec, fam);
    Ok(vec![("x_length", lengths), ("inside_source", inside), ("y_incomparable", y_incomparable), ("x_gap", x_gap)])
}

/// For source pairs with comparable x-words the bar y-words are incomparable; for source pairs with
/// incomparable x-words and comparable bar y-words the horizontal gap is at least `2^{-1/2} a̲²` times the
/// larger diameter.
pub fn bar_pair_checks<S: Scalar>(spec: &Carpet<S>, fam: &AntiChain) -> (bool, bool) {
    let mut by_x: HashMap<&[Letter], Vec<usize>> = HashMap::new();
    for (k, s) in fam.sources.iter().enumerate() {
        by_x.entry(&s.x).or_default().push(k);
    }
    let ys: Vec<Vec<u32>> = fam.words.iter().map(SplitWord::y_word).collect();
    let mut by_y: HashMap<&[u32], Vec<usize>> = HashMap::new();
    for (k, y) in ys.iter().enumerate() {
        by_y.entry(y).or_default().push(k);
    }
    let y_ok = (0..fam.sources.len()).into_par_iter().all(|k| {
        let x = &fam.sources[k].x;
        (1..=x.len()).all(|len| {
            by_x.get(&x[..len]).is_none_or(|v| {
                v.iter().all(|&o| o == k || prefix_rel(&ys[o], &ys[k]) == PrefixRel::Incomparable)
            })
        })
    });
    let a = spec.a_min();
    let a4 = a.clone() * a.clone() * a.clone() * a;
    let rects: Vec<Rect<S>> = fam.words.iter().map(|w| words::rectangle(spec, w)).collect();
    let gap_ok = (0..fam.words.len()).into_par_iter().all(|k| {
        (1..=ys[k].len()).all(|len| {
            by_y.get(&ys[k][..len]).is_none_or(|v| {
                v.iter().all(|&o| {
                    if o == k || prefix_rel(&fam.sources[o].x, &fam.sources[k].x) != PrefixRel::Incomparable {
                        return true;
                    }
                    let g = rects[o].gap_x(&rects[k]);
                    let m2 = S::max_of(&rects[o].diam2(), &rects[k].diam2());
                    // g ≥ 2^{-1/2} a̲² D  ⇔  2 g² ≥ a̲⁴ D²
                    let lhs = S::from_ratio(2, 1) * g.clone() * g;
                    let rhs = a4.clone() * m2;
                    if S::EXACT { lhs >= rhs } else { lhs >= rhs * (S::one() - S::from_ratio(1, 500_000_000_000)) }
                })
            })
        })
    });
    (y_ok, gap_ok)
}

fn certify_star<S: Scalar>(spec: &Carpet<S>, fam: &AntiChain) -> Result<Vec<(&'static str, bool)>> {
    let c = derived_constants(spec, fam.r);
    let w = EWeights::new(spec, fam.r)?;
    let eta = eta_low(spec, &c)?;
    let card = fam.words.len() == fam.sources.len() && fam.words.iter().collect::<HashSet<_>>().len() == fam.words.len();
    let valid = fam.words.iter().all(|s| words::is_in_psi(spec, s));
    let inside = fam.words.iter().zip(&fam.sources).all(|(s, src)| {
        matches!(words::square_relation(src, s), words::SquareRelation::Contains)
    });
    let factor = pow_n(&eta, 2 * (c.a2 as usize + 1));
    let e_ratio = fam.words.iter().zip(&fam.sources).all(|(s, src)| w.e(spec, s).ge(&w.e(spec, src).mul(&factor)));
    let p_bound = spec.p_min().mag().powf((8 * c.a1 * c.a2) as f64).expect("integer power");
    let mass = if S::EXACT {
        let total = fam.words.iter().fold(S::zero(), |acc, s| acc + words::measure_exact(spec, s));
        total.mag().ge(&p_bound)
    } else {
        log_sum_exp(fam.words.iter().map(|s| words::log_measure(spec, s))) >= p_bound.ln() - 1e-12
    };
    let sep = check_separation(spec, fam);
    Ok(vec![
        ("card", card),
        ("valid", valid),
        ("inside_source", inside),
        ("e_ratio", e_ratio),
        ("union_mass", mass),
        ("separation", sep.passed),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fixtures, words::DEFAULT_BUDGET, Rational};

    #[test]
    fn lambda_small_is_certified() {
        let c = fixtures::three_column::<f64>();
        for n in 1..=2 {
            let mut fam = build_lambda(&c, n, 2.0, DEFAULT_BUDGET).unwrap();
            certify(&c, &mut fam, &CertifyOptions { probes: 500, seed: 1 }).unwrap();
            assert!(fam.all_certified(), "n={n}: {:?}", fam.certified);
            assert!(fam.min_level() >= n);
        }
    }

    #[test]
    fn lambda_exact_matches_float() {
        let f = build_lambda(&fixtures::sparse_pair::<f64>(), 3, 2.0, DEFAULT_BUDGET).unwrap();
        let e = build_lambda(&fixtures::sparse_pair::<Rational>(), 3, 2.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(f.words, e.words);
    }

    #[test]
    fn gamma_is_certified() {
        let c = fixtures::mixed::<Rational>();
        let mut fam = build_gamma(&c, 2, 2.0, DEFAULT_BUDGET).unwrap();
        certify(&c, &mut fam, &CertifyOptions { probes: 500, seed: 2 }).unwrap();
        assert!(fam.all_certified(), "{:?}", fam.certified);
    }

    #[test]
    fn pairwise_disjoint_by_brute_force() {
        let c = fixtures::mixed::<f64>();
        let fam = build_lambda(&c, 2, 2.0, DEFAULT_BUDGET).unwrap();
        for (k, s) in fam.words.iter().enumerate() {
            for t in &fam.words[k + 1..] {
                assert_eq!(words::square_relation(s, t), words::SquareRelation::DisjointInteriors, "{s} {t}");
            }
        }
    }

    #[test]
    fn ancestors_match_predecessor_chain() {
        let c = fixtures::short_top_row::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let w = words::random_psi_word(&c, 6, &mut rng);
            for tree in [Tree::Squares, Tree::Cylinders] {
                let mut chain = Vec::new();
                let mut cur = parent(&c, tree, &w).unwrap();
                while !cur.is_theta() {
                    chain.push(cur.clone());
                    cur = parent(&c, tree, &cur).unwrap();
                }
                chain.reverse();
                assert_eq!(ancestors(&c, tree, &w), chain, "{w}");
            }
        }
    }

    #[test]
    fn exact_mode_rejects_fractional_r() {
        let c = fixtures::sparse_pair::<Rational>();
        assert!(matches!(build_lambda(&c, 2, 1.5, DEFAULT_BUDGET), Err(Error::Precondition { .. })));
    }

    #[test]
    fn sum_at_zero_is_card() {
        let c = fixtures::grid_4x2::<f64>();
        let fam = build_lambda(&c, 2, 1.0, DEFAULT_BUDGET).unwrap();
        assert!((sum_e_t(&c, &fam, 0.0) - fam.card() as f64).abs() < 1e-9);
    }

    #[test]
    fn single_cell_star_separates() {
        let c = fixtures::thin_pair::<Rational>(4);
        let k = derived_constants(&c, 2.0);
        let n = (crate::carpet::floor_real(2.0 * k.a2 as f64 / k.a4) + 1) as usize;
        let lambda = build_lambda(&c, n, 2.0, DEFAULT_BUDGET).unwrap();
        assert!(build_bar(&c, &lambda).is_err());
        let mut star = build_star(&c, &lambda).unwrap();
        certify(&c, &mut star, &CertifyOptions::default()).unwrap();
        assert!(star.all_certified(), "{:?}", star.certified);
    }

    #[test]
    fn bar_needs_threshold() {
        let c = fixtures::three_column::<f64>();
        let k = derived_constants(&c, 2.0);
        let lambda = build_lambda(&c, 1, 2.0, DEFAULT_BUDGET).unwrap();
        assert!(k.t1 >= 1);
        assert!(matches!(build_bar(&c, &lambda), Err(Error::Precondition { .. })));
    }

    #[test]
    fn singleton_separation_is_vacuous() {
        let c = fixtures::two_strip::<f64>();
        let fam = AntiChain::from_text(FamilyKind::Star, 1, 2.0, "1.1|1\n").unwrap();
        let sep = check_separation(&c, &fam);
        assert!(sep.min_ratio.is_infinite() && sep.passed);
    }

    #[test]
    fn text_round_trip() {
        let c = fixtures::mixed::<f64>();
        let fam = build_lambda(&c, 2, 2.0, DEFAULT_BUDGET).unwrap();
        let back = AntiChain::from_text(fam.kind, fam.n, fam.r, &fam.to_text()).unwrap();
        assert_eq!(back.words, fam.words);
    }
}

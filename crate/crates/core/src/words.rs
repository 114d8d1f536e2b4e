//! Words over the alphabet `G`, approximate squares and their coding cylinders.

use std::cmp::Ordering;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::carpet::Carpet;
use crate::error::{Error, Result};
use crate::scalar::{Magnitude, Scalar};

/// A map index `(i, j)`, 1-based. Orders by column first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub j: u32,
    pub i: u32,
}

impl Letter {
    pub fn new(i: u32, j: u32) -> Self {
        Letter { j, i }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.i, self.j)
    }
}

/// `σ = σ_L * σ_R`: an x-word and a y-word. The empty word is `θ`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SplitWord {
    pub x: Vec<Letter>,
    pub y: Vec<u32>,
}

impl SplitWord {
    pub fn new(x: Vec<Letter>, y: Vec<u32>) -> Self {
        SplitWord { x, y }
    }
    pub fn theta() -> Self {
        SplitWord::default()
    }
    pub fn is_theta(&self) -> bool {
        self.x.is_empty() && self.y.is_empty()
    }
    /// `|σ_L|`
    pub fn level(&self) -> usize {
        self.x.len()
    }
    /// `|σ| = |σ_L| + |σ_R|`, the total length of the y-word.
    pub fn len(&self) -> usize {
        self.x.len() + self.y.len()
    }
    pub fn is_empty(&self) -> bool {
        self.is_theta()
    }
    /// `σ_y = (σ_L)_y * σ_R`
    pub fn y_word(&self) -> Vec<u32> {
        self.x.iter().map(|l| l.j).chain(self.y.iter().copied()).collect()
    }
}

impl fmt::Display for SplitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.x.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("|")?;
        for (k, j) in self.y.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

impl Serialize for SplitWord {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        s.collect_str(self)
    }
}

impl FromStr for SplitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (xs, ys) = s.split_once('|').ok_or_else(|| Error::word(s, "missing `|`"))?;
        let x = if xs.is_empty() {
            Vec::new()
        } else {
            xs.split('-')
                .map(|t| {
                    let (i, j) = t.split_once('.').ok_or_else(|| Error::word(s, format!("letter `{t}` is not `i.j`")))?;
                    let i = i.parse().map_err(|_| Error::word(s, format!("bad index in `{t}`")))?;
                    let j = j.parse().map_err(|_| Error::word(s, format!("bad index in `{t}`")))?;
                    Ok(Letter::new(i, j))
                })
                .collect::<Result<_>>()?
        };
        let y = if ys.is_empty() {
            Vec::new()
        } else {
            ys.split('-').map(|t| t.parse().map_err(|_| Error::word(s, format!("bad column `{t}`")))).collect::<Result<_>>()?
        };
        Ok(SplitWord { x, y })
    }
}

/// Relation between two finite sequences under the prefix order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefixRel {
    Equal,
    /// The first is a proper prefix of the second.
    Prefix,
    /// The second is a proper prefix of the first.
    Extends,
    Incomparable,
}

pub fn prefix_rel<T: PartialEq>(a: &[T], b: &[T]) -> PrefixRel {
    let k = a.len().min(b.len());
    if a[..k] != b[..k] {
        PrefixRel::Incomparable
    } else {
        match a.len().cmp(&b.len()) {
            Ordering::Equal => PrefixRel::Equal,
            Ordering::Less => PrefixRel::Prefix,
            Ordering::Greater => PrefixRel::Extends,
        }
    }
}

/// `u ⪯ v`
pub fn is_prefix<T: PartialEq>(u: &[T], v: &[T]) -> bool {
    u.len() <= v.len() && u == &v[..u.len()]
}

fn check_letters<S: Scalar>(spec: &Carpet<S>, w: &SplitWord) -> Result<()> {
    if let Some(l) = w.x.iter().find(|l| !spec.contains_letter(**l)) {
        return Err(Error::word(w, format!("letter {l} is not in the alphabet")));
    }
    if let Some(j) = w.y.iter().find(|&&j| j == 0 || j as usize > spec.m()) {
        return Err(Error::word(w, format!("column {j} does not exist")));
    }
    Ok(())
}

/// `a_ω` for an x-word.
pub fn a_mag<S: Scalar>(spec: &Carpet<S>, x: &[Letter]) -> S::Mag {
    x.iter().fold(S::Mag::unit(), |acc, l| acc.mul(&spec.letter_info(*l).a))
}

/// `a_ω / b_{ω_y}` for an x-word.
pub fn ratio_mag<S: Scalar>(spec: &Carpet<S>, x: &[Letter]) -> S::Mag {
    x.iter().fold(S::Mag::unit(), |acc, l| acc.mul(&spec.letter_info(*l).ratio))
}

/// `b_τ` for a y-word.
pub fn b_mag<S: Scalar>(spec: &Carpet<S>, y: &[u32]) -> S::Mag {
    y.iter().fold(S::Mag::unit(), |acc, &j| acc.mul(spec.b_mag(j)))
}

/// Whether `b_{τ^-} ≥ target > b_τ` for the y-word `τ` given `b_τ = full` and its last letter.
fn window_holds<S: Scalar>(spec: &Carpet<S>, target: &S::Mag, y: &[u32]) -> bool {
    let Some((&last, head)) = y.split_last() else {
        return false;
    };
    let minus = b_mag(spec, head);
    let full = minus.mul(spec.b_mag(last));
    minus.ge(target) && target.gt(&full)
}

/// Membership in `Ψ_l`: `b_{σ_y^-} ≥ a_{σ_L} > b_{σ_y}` with `l = |σ_L| ≥ 1`.
pub fn is_in_psi<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> bool {
    if sigma.x.is_empty() || check_letters(spec, sigma).is_err() {
        return false;
    }
    window_holds(spec, &a_mag(spec, &sigma.x), &sigma.y_word())
}

fn require_psi<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> Result<()> {
    check_letters(spec, sigma)?;
    if !is_in_psi(spec, sigma) {
        return Err(Error::word(sigma, "not an approximate-square word"));
    }
    Ok(())
}

/// Visits `{τ : prefix ⪯ τ, b_{τ^-} ≥ ratio > b_τ}` in lexicographic order.
///
/// `ratio` must be below 1. The callback receives the full word `τ`.
pub fn for_each_completion<S, F>(spec: &Carpet<S>, ratio: &S::Mag, prefix: &[u32], f: &mut F) -> ControlFlow<()>
where
    S: Scalar,
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    let mut cur = S::Mag::unit();
    for (k, &j) in prefix.iter().enumerate() {
        cur = cur.mul(spec.b_mag(j));
        if ratio.gt(&cur) {
            return if k + 1 == prefix.len() { f(prefix) } else { ControlFlow::Continue(()) };
        }
    }
    let mut buf = prefix.to_vec();
    completion_dfs(spec, ratio, &cur, &mut buf, f)
}

fn completion_dfs<S, F>(spec: &Carpet<S>, ratio: &S::Mag, cur: &S::Mag, buf: &mut Vec<u32>, f: &mut F) -> ControlFlow<()>
where
    S: Scalar,
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    for j in 1..=spec.m() as u32 {
        let next = cur.mul(spec.b_mag(j));
        buf.push(j);
        let flow = if ratio.gt(&next) { f(buf) } else { completion_dfs(spec, ratio, &next, buf, f) };
        buf.pop();
        flow?;
    }
    ControlFlow::Continue(())
}

/// `Ω(ω) = {τ : b_{τ^-} ≥ a_ω / b_{ω_y} > b_τ}` for a non-empty x-word.
pub fn omega_completions<S: Scalar>(spec: &Carpet<S>, omega: &[Letter]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let _ = for_each_completion(spec, &ratio_mag(spec, omega), &[], &mut |t: &[u32]| {
        out.push(t.to_vec());
        ControlFlow::Continue(())
    });
    out
}

/// Visits every x-word of length `l` in lexicographic order with its ratio `a_ω / b_{ω_y}`.
pub fn for_each_x_word<S, F>(spec: &Carpet<S>, l: usize, f: &mut F) -> ControlFlow<()>
where
    S: Scalar,
    F: FnMut(&[Letter], &S::Mag) -> ControlFlow<()>,
{
    fn rec<S: Scalar, F: FnMut(&[Letter], &S::Mag) -> ControlFlow<()>>(
        spec: &Carpet<S>,
        l: usize,
        cur: &S::Mag,
        buf: &mut Vec<Letter>,
        f: &mut F,
    ) -> ControlFlow<()> {
        if buf.len() == l {
            return f(buf, cur);
        }
        for info in spec.letters() {
            buf.push(info.letter);
            let flow = rec(spec, l, &cur.mul(&info.ratio), buf, f);
            buf.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }
    rec(spec, l, &S::Mag::unit(), &mut Vec::with_capacity(l), f)
}

/// Visits `Ψ_l` in lexicographic order as `(σ_L, σ_R)` slices.
pub fn for_each_psi<S, F>(spec: &Carpet<S>, l: usize, f: &mut F) -> ControlFlow<()>
where
    S: Scalar,
    F: FnMut(&[Letter], &[u32]) -> ControlFlow<()>,
{
    for_each_x_word(spec, l, &mut |x: &[Letter], ratio: &S::Mag| for_each_completion(spec, ratio, &[], &mut |t: &[u32]| f(x, t)))
}

/// Default cap on the number of words materialized by one enumeration.
pub const DEFAULT_BUDGET: usize = 5_000_000;

/// `Ψ_l` as a sorted vector; fails once more than `budget` words are produced.
pub fn enumerate_psi<S: Scalar>(spec: &Carpet<S>, l: usize, budget: usize) -> Result<Vec<SplitWord>> {
    if l == 0 {
        return Err(Error::Precondition { detail: "level must be at least 1".into() });
    }
    let mut out = Vec::new();
    let flow = for_each_psi(spec, l, &mut |x: &[Letter], t: &[u32]| {
        if out.len() == budget {
            return ControlFlow::Break(());
        }
        out.push(SplitWord::new(x.to_vec(), t.to_vec()));
        ControlFlow::Continue(())
    });
    match flow {
        ControlFlow::Break(()) => Err(Error::BudgetExceeded { count: out.len(), budget }),
        ControlFlow::Continue(()) => Ok(out),
    }
}

/// `card(Ψ_l)` without materializing the words.
pub fn count_psi<S: Scalar>(spec: &Carpet<S>, l: usize) -> u64 {
    let mut n = 0u64;
    let _ = for_each_psi(spec, l, &mut |_: &[Letter], _: &[u32]| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

/// Axis-parallel rectangle `[x_lo, x_hi] × [y_lo, y_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect<S> {
    pub x_lo: S,
    pub x_hi: S,
    pub y_lo: S,
    pub y_hi: S,
}

impl<S: Scalar> Rect<S> {
    pub fn width(&self) -> S {
        self.x_hi.clone() - self.x_lo.clone()
    }
    pub fn height(&self) -> S {
        self.y_hi.clone() - self.y_lo.clone()
    }
    /// Squared diameter.
    pub fn diam2(&self) -> S {
        let (w, h) = (self.width(), self.height());
        w.clone() * w + h.clone() * h
    }
    /// Horizontal gap `d_h`, zero when the x-ranges overlap.
    pub fn gap_x(&self, o: &Self) -> S {
        gap(&self.x_lo, &self.x_hi, &o.x_lo, &o.x_hi)
    }
    /// Vertical gap `d_v`.
    pub fn gap_y(&self, o: &Self) -> S {
        gap(&self.y_lo, &self.y_hi, &o.y_lo, &o.y_hi)
    }
    /// Squared Euclidean distance between the rectangles.
    pub fn dist2(&self, o: &Self) -> S {
        let (dx, dy) = (self.gap_x(o), self.gap_y(o));
        dx.clone() * dx + dy.clone() * dy
    }
    pub fn center(&self) -> [S; 2] {
        let two = S::from_ratio(2, 1);
        [(self.x_lo.clone() + self.x_hi.clone()) / two.clone(), (self.y_lo.clone() + self.y_hi.clone()) / two]
    }
    pub fn to_f64(&self) -> Rect<f64> {
        Rect { x_lo: self.x_lo.to_f64(), x_hi: self.x_hi.to_f64(), y_lo: self.y_lo.to_f64(), y_hi: self.y_hi.to_f64() }
    }
}

fn gap<S: Scalar>(lo1: &S, hi1: &S, lo2: &S, hi2: &S) -> S {
    if hi1 < lo2 {
        lo2.clone() - hi1.clone()
    } else if hi2 < lo1 {
        lo1.clone() - hi2.clone()
    } else {
        S::zero()
    }
}

/// The rectangle `F_σ`: x-range from `σ_L`, y-range from `σ_y`.
pub fn rectangle<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> Rect<S> {
    let mut x_lo = S::zero();
    let mut w = S::one();
    for l in &sigma.x {
        let c = spec.cell(*l);
        x_lo = x_lo + w.clone() * c.c.clone();
        w = w * c.a.clone();
    }
    let mut y_lo = S::zero();
    let mut h = S::one();
    for j in sigma.x.iter().map(|l| l.j).chain(sigma.y.iter().copied()) {
        y_lo = y_lo + h.clone() * spec.d(j).clone();
        h = h * spec.b(j).clone();
    }
    Rect { x_hi: x_lo.clone() + w, x_lo, y_hi: y_lo.clone() + h, y_lo }
}

/// `ln μ(F_σ) = ln p_{σ_L} + ln q_{σ_R}`; zero for `θ`.
pub fn log_measure<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> f64 {
    sigma.x.iter().map(|l| spec.letter_info(*l).ln_p).sum::<f64>() + sigma.y.iter().map(|&j| spec.ln_q(j)).sum::<f64>()
}

pub fn measure<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> f64 {
    log_measure(spec, sigma).exp()
}

/// `μ(F_σ)` in the carpet's scalar type.
pub fn measure_exact<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> S {
    let px = sigma.x.iter().fold(S::one(), |acc, l| acc * spec.cell(*l).p.clone());
    sigma.y.iter().fold(px, |acc, &j| acc * spec.q(j).clone())
}

/// `ln a_{σ_L}`
pub fn log_width<S: Scalar>(spec: &Carpet<S>, x: &[Letter]) -> f64 {
    x.iter().map(|l| spec.letter_info(*l).ln_a).sum()
}

/// `ln E_r(σ) = ln μ(F_σ) + r ln a_{σ_L}`; zero for `θ`.
pub fn log_e_r<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord, r: f64) -> f64 {
    log_measure(spec, sigma) + r * log_width(spec, &sigma.x)
}

pub fn e_r<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord, r: f64) -> f64 {
    log_e_r(spec, sigma, r).exp()
}

/// `σ^♭`: drop the last x-letter and trim `σ_y` to the window of the shorter x-word.
pub fn flat_predecessor<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> Result<SplitWord> {
    require_psi(spec, sigma)?;
    let l = sigma.level();
    if l == 1 {
        return Ok(SplitWord::theta());
    }
    let x = sigma.x[..l - 1].to_vec();
    let target = a_mag(spec, &x);
    let ys = sigma.y_word();
    let mut cur = S::Mag::unit();
    for (k, &j) in ys.iter().enumerate() {
        cur = cur.mul(spec.b_mag(j));
        if target.gt(&cur) {
            return Ok(SplitWord::new(x, ys[l - 1..=k].to_vec()));
        }
    }
    Err(Error::word(sigma, "window of the shorter x-word not reached"))
}

/// `σ^-`: the parent in the coding tree, keeping a prefix of `σ_R`.
pub fn phi_predecessor<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord) -> Result<SplitWord> {
    require_psi(spec, sigma)?;
    let l = sigma.level();
    if l == 1 {
        return Ok(SplitWord::theta());
    }
    let x = sigma.x[..l - 1].to_vec();
    let ratio = ratio_mag(spec, &x);
    let mut cur = S::Mag::unit();
    for (k, &j) in sigma.y.iter().enumerate() {
        cur = cur.mul(spec.b_mag(j));
        if ratio.gt(&cur) {
            return Ok(SplitWord::new(x, sigma.y[..=k].to_vec()));
        }
    }
    Err(Error::word(sigma, "window of the shorter x-word not reached"))
}

/// Relation between two approximate squares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SquareRelation {
    DisjointInteriors,
    /// The first contains the second.
    Contains,
    ContainedIn,
    Equal,
}

/// Decides the relation of `F_{s1}` and `F_{s2}` from prefix tests on `σ_L` and `σ_y`.
pub fn square_compare<S: Scalar>(spec: &Carpet<S>, s1: &SplitWord, s2: &SplitWord) -> Result<SquareRelation> {
    require_psi(spec, s1)?;
    require_psi(spec, s2)?;
    Ok(square_relation(s1, s2))
}

/// [`square_compare`] for words already known to be approximate squares.
pub fn square_relation(s1: &SplitWord, s2: &SplitWord) -> SquareRelation {
    use PrefixRel::*;
    let rx = prefix_rel(&s1.x, &s2.x);
    let ry = prefix_rel(&s1.y_word(), &s2.y_word());
    match (rx, ry) {
        (Incomparable, _) | (_, Incomparable) => SquareRelation::DisjointInteriors,
        (Equal, Equal) => SquareRelation::Equal,
        (Prefix, Prefix | Equal) => SquareRelation::Contains,
        (Extends, Extends | Equal) => SquareRelation::ContainedIn,
        _ => unreachable!("approximate squares with comparable x-words have y-words ordered the same way"),
    }
}

/// Relation between two coding cylinders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CylinderRelation {
    Disjoint,
    Contains,
    ContainedIn,
    Equal,
}

/// Product prefix order: `[σ] ⊇ [ω]` iff `σ_L ⪯ ω_L` and `σ_R ⪯ ω_R`.
pub fn cylinder_compare<S: Scalar>(spec: &Carpet<S>, s1: &SplitWord, s2: &SplitWord) -> Result<CylinderRelation> {
    require_psi(spec, s1)?;
    require_psi(spec, s2)?;
    Ok(cylinder_relation(s1, s2))
}

/// [`cylinder_compare`] for words already known to be valid.
pub fn cylinder_relation(s1: &SplitWord, s2: &SplitWord) -> CylinderRelation {
    use PrefixRel::*;
    match (prefix_rel(&s1.x, &s2.x), prefix_rel(&s1.y, &s2.y)) {
        (Incomparable, _) | (_, Incomparable) => CylinderRelation::Disjoint,
        (Equal, Equal) => CylinderRelation::Equal,
        (Prefix, Prefix | Equal) => CylinderRelation::Contains,
        (Extends, Extends | Equal) => CylinderRelation::ContainedIn,
        _ => unreachable!("coding words with comparable parts are ordered the same way in both"),
    }
}

/// Visits `Λ_h(σ)`: the coding words `h` x-levels below `σ` whose cylinders lie in `[σ]`.
pub fn for_each_descendant<S, F>(spec: &Carpet<S>, sigma: &SplitWord, h: usize, f: &mut F) -> Result<ControlFlow<()>>
where
    S: Scalar,
    F: FnMut(&[Letter], &[u32]) -> ControlFlow<()>,
{
    require_psi(spec, sigma)?;
    let base = ratio_mag(spec, &sigma.x);
    let mut x = sigma.x.clone();
    Ok(for_each_x_word(spec, h, &mut |u: &[Letter], r: &S::Mag| {
        x.truncate(sigma.x.len());
        x.extend_from_slice(u);
        let ratio = base.mul(r);
        for_each_completion(spec, &ratio, &sigma.y, &mut |t: &[u32]| f(&x, t))
    }))
}

/// `Λ_h(σ)` as a vector.
pub fn descendants<S: Scalar>(spec: &Carpet<S>, sigma: &SplitWord, h: usize, budget: usize) -> Result<Vec<SplitWord>> {
    let mut out = Vec::new();
    let flow = for_each_descendant(spec, sigma, h, &mut |x: &[Letter], t: &[u32]| {
        if out.len() == budget {
            return ControlFlow::Break(());
        }
        out.push(SplitWord::new(x.to_vec(), t.to_vec()));
        ControlFlow::Continue(())
    })?;
    match flow {
        ControlFlow::Break(()) => Err(Error::BudgetExceeded { count: out.len(), budget }),
        ControlFlow::Continue(()) => Ok(out),
    }
}

/// Draws a word of `Ψ_l` by choosing x-letters and y-letters uniformly at random.
pub fn random_psi_word<S: Scalar, R: Rng + ?Sized>(spec: &Carpet<S>, l: usize, rng: &mut R) -> SplitWord {
    let letters = spec.letters();
    let x: Vec<Letter> = (0..l).map(|_| letters[rng.gen_range(0..letters.len())].letter).collect();
    let y = random_completion(spec, &ratio_mag(spec, &x), &[], rng);
    SplitWord::new(x, y)
}

/// Draws a uniformly-extended element of `Ω(ratio)` starting with `prefix`, or `None` if `prefix` overshoots.
pub fn random_completion<S: Scalar, R: Rng + ?Sized>(spec: &Carpet<S>, ratio: &S::Mag, prefix: &[u32], rng: &mut R) -> Vec<u32> {
    let mut t = Vec::new();
    let mut cur = S::Mag::unit();
    let m = spec.m() as u32;
    loop {
        let j = if t.len() < prefix.len() { prefix[t.len()] } else { rng.gen_range(1..=m) };
        t.push(j);
        cur = cur.mul(spec.b_mag(j));
        if ratio.gt(&cur) {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fixtures, Rational};

    fn w(s: &str) -> SplitWord {
        s.parse().unwrap()
    }

    fn rep(l: &str, k: usize) -> String {
        vec![l; k].join("-")
    }

    #[test]
    fn text_round_trip() {
        for s in ["2.2-1.1|3-3-3", "|", "1.1|", "|1-2"] {
            assert_eq!(w(s).to_string(), s);
        }
        assert!("1.1-3".parse::<SplitWord>().is_err());
        assert!("x|1".parse::<SplitWord>().is_err());
    }

    #[test]
    fn letter_order_is_column_major() {
        assert!(Letter::new(2, 1) < Letter::new(1, 2));
        assert!(Letter::new(1, 1) < Letter::new(2, 1));
    }

    #[test]
    fn psi_membership_examples() {
        let c = fixtures::three_column::<Rational>();
        let sigma = w(&format!("2.2-{}|{}", rep("1.1", 11), rep("3", 13)));
        assert!(is_in_psi(&c, &sigma));
        assert_eq!(a_mag(&c, &sigma.x).0, <Rational as Scalar>::from_ratio(1, 3i64.pow(24)));
        assert!(!is_in_psi(&c, &w("1.1|")));
        assert!(is_in_psi(&c, &w("1.1|1-1")));
        assert!(!is_in_psi(&c, &w("1.1|1")));
        assert!(!is_in_psi(&c, &w("1.1|1-1-1")));
        assert!(!is_in_psi(&c, &w("3.1|1-1")));
        let cf = fixtures::three_column::<f64>();
        assert!(is_in_psi(&cf, &sigma));
        assert!(is_in_psi(&cf, &w("1.1|1-1")));
    }

    #[test]
    fn completions_small() {
        let c = fixtures::three_column::<Rational>();
        let o = omega_completions(&c, &[Letter::new(1, 1)]);
        assert_eq!(o.len(), 9);
        assert!(o.iter().all(|t| t.len() == 2));
        let o = omega_completions(&c, &[Letter::new(2, 1)]);
        assert_eq!(o.len(), 27);
        assert!(o.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn level_one_count() {
        let c = fixtures::three_column::<Rational>();
        assert_eq!(enumerate_psi(&c, 1, DEFAULT_BUDGET).unwrap().len(), 81);
        assert_eq!(count_psi(&fixtures::three_column::<f64>(), 1), 81);
        assert!(matches!(enumerate_psi(&c, 1, 10), Err(Error::BudgetExceeded { count: 10, budget: 10 })));
    }

    #[test]
    fn rectangle_examples() {
        let c = fixtures::three_column::<Rational>();
        let r = rectangle(&c, &w("1.1|1-1"));
        let q = |n, d| <Rational as Scalar>::from_ratio(n, d);
        assert_eq!(r, Rect { x_lo: q(0, 1), x_hi: q(1, 9), y_lo: q(0, 1), y_hi: q(1, 27) });
    }

    #[test]
    fn measure_examples() {
        let c = fixtures::three_column::<Rational>();
        assert_eq!(log_e_r(&c, &SplitWord::theta(), 2.0), 0.0);
        let m = measure(&c, &w("1.1|1-1"));
        assert!((m - 0.2 * 0.4 * 0.4).abs() < 1e-15);
        let q = |n, d| <Rational as Scalar>::from_ratio(n, d);
        assert_eq!(measure_exact(&c, &w("1.1|1-1")), q(4, 125));
    }

    #[test]
    fn flat_predecessor_example() {
        let c = fixtures::three_column::<Rational>();
        let s = w("1.1-1.1|1-1-1");
        assert!(is_in_psi(&c, &s));
        assert_eq!(flat_predecessor(&c, &s).unwrap(), w("1.1|1-1"));
        assert_eq!(flat_predecessor(&c, &w("1.1|1-1")).unwrap(), SplitWord::theta());
        assert!(flat_predecessor(&c, &w("1.1|1")).is_err());
    }

    #[test]
    fn phi_predecessor_example() {
        let c = fixtures::three_column::<Rational>();
        let s = w("1.1-2.1|2-3-1-1");
        assert!(is_in_psi(&c, &s));
        assert_eq!(phi_predecessor(&c, &s).unwrap(), w("1.1|2-3"));
    }

    #[test]
    fn square_relations() {
        let c = fixtures::three_column::<Rational>();
        let sigma = w(&format!("2.2-{}|{}", rep("1.1", 11), rep("3", 13)));
        let omega = w(&format!("1.2-{}|1-1-1-{}", rep("2.1", 8), rep("3", 16)));
        assert_eq!(square_compare(&c, &sigma, &omega).unwrap(), SquareRelation::DisjointInteriors);
        assert_eq!(square_compare(&c, &sigma, &sigma).unwrap(), SquareRelation::Equal);
        let s = w("1.1-1.1|1-1-1");
        assert_eq!(square_compare(&c, &w("1.1|1-1"), &s).unwrap(), SquareRelation::Contains);
        assert_eq!(square_compare(&c, &s, &w("1.1|1-1")).unwrap(), SquareRelation::ContainedIn);
    }

    #[test]
    fn cylinder_vs_square_order() {
        // y-letter after the x-part differs from the next x-letter's column: squares
        // are disjoint while the cylinders are nested.
        let c = fixtures::three_column::<Rational>();
        let s = w("1.1|1-1");
        let o = w("1.1-1.2|1-1-1-1");
        assert!(is_in_psi(&c, &o));
        assert_eq!(square_compare(&c, &s, &o).unwrap(), SquareRelation::DisjointInteriors);
        assert_eq!(cylinder_compare(&c, &s, &o).unwrap(), CylinderRelation::Contains);
        assert_eq!(cylinder_compare(&c, &s, &s).unwrap(), CylinderRelation::Equal);
    }

    #[test]
    fn descendants_tile_parent() {
        let c = fixtures::mixed::<Rational>();
        let parents = enumerate_psi(&c, 1, DEFAULT_BUDGET).unwrap();
        let children = enumerate_psi(&c, 2, DEFAULT_BUDGET).unwrap();
        let mut total = 0;
        for s in &parents {
            let d = descendants(&c, s, 1, DEFAULT_BUDGET).unwrap();
            for x in &d {
                assert_eq!(cylinder_relation(s, x), CylinderRelation::Contains);
                assert_eq!(phi_predecessor(&c, x).unwrap(), *s);
            }
            total += d.len();
        }
        assert_eq!(total, children.len());
    }
}

//! Lalley-Gatzouras carpet parameters, validation and derived constants.

use serde::Deserialize;
use serde_json::Value;

use crate::error::SpecError;
use crate::scalar::{le_tol, lt_tol, Magnitude, Scalar};
use crate::words::Letter;

/// One map `f_ij`: horizontal contraction `a`, translation `c`, weight `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell<S> {
    pub a: S,
    pub c: S,
    pub p: S,
}

/// One row of maps sharing the vertical contraction `b` and translation `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Column<S> {
    pub b: S,
    pub d: S,
    pub cells: Vec<Cell<S>>,
}

/// Unvalidated carpet description.
#[derive(Clone, Debug, PartialEq)]
pub struct CarpetParams<S> {
    pub columns: Vec<Column<S>>,
}

/// Grid data kept for carpets built by [`bedford_mcmullen`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BmGrid {
    pub n0: u32,
    pub m0: u32,
}

/// Per-letter cache used by the word engine.
#[derive(Clone, Debug)]
pub struct LetterInfo<S: Scalar> {
    pub letter: Letter,
    pub a: S::Mag,
    /// `a_ij / b_j`
    pub ratio: S::Mag,
    pub ln_a: f64,
    pub ln_p: f64,
}

/// A validated carpet with its self-affine measure.
#[derive(Clone, Debug)]
pub struct Carpet<S: Scalar> {
    columns: Vec<Column<S>>,
    q: Vec<S>,
    bm: Option<BmGrid>,
    letters: Vec<LetterInfo<S>>,
    col_start: Vec<usize>,
    b_mag: Vec<S::Mag>,
    ln_b: Vec<f64>,
    ln_q: Vec<f64>,
}

impl<S: Scalar> Carpet<S> {
    /// Checks the layout conditions and the measure, returning a validated carpet.
    pub fn validate(raw: CarpetParams<S>) -> Result<Self, SpecError> {
        let mut columns = raw.columns;
        let m = columns.len();
        if m < 2 {
            return Err(SpecError::TooFewColumns { m });
        }
        let zero = S::zero();
        let one = S::one();
        for (jx, col) in columns.iter().enumerate() {
            let j = jx + 1;
            if col.cells.is_empty() {
                return Err(SpecError::EmptyColumn { j });
            }
            if !(col.b > zero && col.b < one) {
                return Err(range("b", j, None, &col.b));
            }
            if !(col.d >= zero && col.d < one) {
                return Err(range("d", j, None, &col.d));
            }
            for (ix, cell) in col.cells.iter().enumerate() {
                let i = Some(ix + 1);
                if !(cell.a > zero && cell.a < one) {
                    return Err(range("a", j, i, &cell.a));
                }
                if !(cell.c >= zero && cell.c < one) {
                    return Err(range("c", j, i, &cell.c));
                }
                if cell.p <= zero {
                    return Err(SpecError::NonPositiveProbability { i: ix + 1, j, value: cell.p.to_f64() });
                }
            }
        }

        let sum_b = columns.iter().fold(zero.clone(), |s, c| s + c.b.clone());
        if !le_tol(&sum_b, &one) {
            return Err(SpecError::ColumnHeights { detail: format!("sum of b_j = {sum_b} exceeds 1") });
        }
        let last = &columns[m - 1];
        if !le_tol(&(last.d.clone() + last.b.clone()), &one) {
            return Err(SpecError::ColumnHeights { detail: format!("d_{m} + b_{m} = {} exceeds 1", last.d.clone() + last.b.clone()) });
        }
        for j in 1..m {
            let top = columns[j - 1].b.clone() + columns[j - 1].d.clone();
            if !le_tol(&top, &columns[j].d) {
                return Err(SpecError::ColumnOverlap { j, detail: format!("b_{j} + d_{j} = {top} exceeds d_{} = {}", j + 1, columns[j].d) });
            }
        }
        for (jx, col) in columns.iter().enumerate() {
            let j = jx + 1;
            let sum_a = col.cells.iter().fold(zero.clone(), |s, c| s + c.a.clone());
            if !le_tol(&sum_a, &one) {
                return Err(SpecError::CellWidths { j, detail: format!("sum of a_ij = {sum_a} exceeds 1") });
            }
            for (ix, cell) in col.cells.iter().enumerate() {
                if !lt_tol(&cell.a, &col.b) {
                    return Err(SpecError::CellWidths { j, detail: format!("a_{}{j} = {} is not strictly below b_{j} = {}", ix + 1, cell.a, col.b) });
                }
            }
            let lc = col.cells.last().unwrap();
            if !le_tol(&(lc.a.clone() + lc.c.clone()), &one) {
                return Err(SpecError::CellWidths { j, detail: format!("last cell ends at {} > 1", lc.a.clone() + lc.c.clone()) });
            }
            for i in 1..col.cells.len() {
                let end = col.cells[i - 1].a.clone() + col.cells[i - 1].c.clone();
                if !le_tol(&end, &col.cells[i].c) {
                    return Err(SpecError::CellOverlap { i, j, detail: format!("a_{i}{j} + c_{i}{j} = {end} exceeds c_{}{j} = {}", i + 1, col.cells[i].c) });
                }
            }
        }

        let total = columns.iter().flat_map(|c| c.cells.iter()).fold(zero.clone(), |s, c| s + c.p.clone());
        let dev = (total.clone() - one.clone()).to_f64().abs();
        if S::EXACT {
            if total != one {
                return Err(SpecError::ProbabilitySum { sum: total.to_f64() });
            }
        } else {
            if dev > 1e-9 {
                return Err(SpecError::ProbabilitySum { sum: total.to_f64() });
            }
            for col in columns.iter_mut() {
                for cell in col.cells.iter_mut() {
                    cell.p = cell.p.clone() / total.clone();
                }
            }
        }
        Ok(Self::build(columns, None))
    }

    fn build(columns: Vec<Column<S>>, bm: Option<BmGrid>) -> Self {
        let q: Vec<S> = columns.iter().map(|c| c.cells.iter().fold(S::zero(), |s, x| s + x.p.clone())).collect();
        let b_mag: Vec<S::Mag> = columns.iter().map(|c| c.b.mag()).collect();
        let ln_b = columns.iter().map(|c| c.b.ln()).collect();
        let ln_q = q.iter().map(|x| x.ln()).collect();
        let mut letters = Vec::new();
        let mut col_start = Vec::with_capacity(columns.len());
        for (jx, col) in columns.iter().enumerate() {
            col_start.push(letters.len());
            for (ix, cell) in col.cells.iter().enumerate() {
                let a = cell.a.mag();
                letters.push(LetterInfo {
                    letter: Letter::new(ix as u32 + 1, jx as u32 + 1),
                    ratio: a.div(&b_mag[jx]),
                    ln_a: cell.a.ln(),
                    ln_p: cell.p.ln(),
                    a,
                });
            }
        }
        Carpet { columns, q, bm, letters, col_start, b_mag, ln_b, ln_q }
    }

    pub fn columns(&self) -> &[Column<S>] {
        &self.columns
    }
    /// Number of columns `m`.
    pub fn m(&self) -> usize {
        self.columns.len()
    }
    /// Number of cells `n_j` in column `j` (1-based).
    pub fn n(&self, j: u32) -> usize {
        self.columns[j as usize - 1].cells.len()
    }
    pub fn cell(&self, l: Letter) -> &Cell<S> {
        &self.columns[l.j as usize - 1].cells[l.i as usize - 1]
    }
    pub fn b(&self, j: u32) -> &S {
        &self.columns[j as usize - 1].b
    }
    pub fn d(&self, j: u32) -> &S {
        &self.columns[j as usize - 1].d
    }
    pub fn q(&self, j: u32) -> &S {
        &self.q[j as usize - 1]
    }
    pub fn bm_grid(&self) -> Option<BmGrid> {
        self.bm
    }
    /// All letters of `G` in (j, i) order.
    pub fn letters(&self) -> &[LetterInfo<S>] {
        &self.letters
    }
    /// Position of a letter in [`Carpet::letters`].
    pub fn letter_index(&self, l: Letter) -> usize {
        self.col_start[l.j as usize - 1] + l.i as usize - 1
    }
    pub fn letter_info(&self, l: Letter) -> &LetterInfo<S> {
        &self.letters[self.letter_index(l)]
    }
    pub fn contains_letter(&self, l: Letter) -> bool {
        l.j >= 1 && (l.j as usize) <= self.m() && l.i >= 1 && (l.i as usize) <= self.n(l.j)
    }
    pub fn b_mag(&self, j: u32) -> &S::Mag {
        &self.b_mag[j as usize - 1]
    }
    pub fn ln_b(&self, j: u32) -> f64 {
        self.ln_b[j as usize - 1]
    }
    pub fn ln_q(&self, j: u32) -> f64 {
        self.ln_q[j as usize - 1]
    }
    /// Total number of maps `N = card(G)`.
    pub fn card(&self) -> usize {
        self.letters.len()
    }

    pub fn a_min(&self) -> S {
        self.fold_cells(|c| c.a.clone(), S::min_of)
    }
    pub fn a_max(&self) -> S {
        self.fold_cells(|c| c.a.clone(), S::max_of)
    }
    pub fn p_min(&self) -> S {
        self.fold_cells(|c| c.p.clone(), S::min_of)
    }
    pub fn p_max(&self) -> S {
        self.fold_cells(|c| c.p.clone(), S::max_of)
    }
    pub fn b_min(&self) -> S {
        fold(self.columns.iter().map(|c| c.b.clone()), S::min_of)
    }
    pub fn b_max(&self) -> S {
        fold(self.columns.iter().map(|c| c.b.clone()), S::max_of)
    }
    pub fn q_min(&self) -> S {
        fold(self.q.iter().cloned(), S::min_of)
    }
    pub fn q_max(&self) -> S {
        fold(self.q.iter().cloned(), S::max_of)
    }

    fn fold_cells(&self, f: impl Fn(&Cell<S>) -> S, g: fn(&S, &S) -> S) -> S {
        fold(self.columns.iter().flat_map(|c| c.cells.iter()).map(f), g)
    }

    /// Same carpet with every weight replaced by `1/N`.
    pub fn with_uniform_weights(&self) -> Self {
        let w = S::from_ratio(1, self.card() as i64);
        let mut columns = self.columns.clone();
        for col in columns.iter_mut() {
            for cell in col.cells.iter_mut() {
                cell.p = w.clone();
            }
        }
        Self::build(columns, self.bm)
    }

    /// Converts the parameters to another scalar type.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Carpet<T> {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                b: f(&c.b),
                d: f(&c.d),
                cells: c.cells.iter().map(|x| Cell { a: f(&x.a), c: f(&x.c), p: f(&x.p) }).collect(),
            })
            .collect();
        Carpet::build(columns, self.bm)
    }

    pub fn to_f64(&self) -> Carpet<f64> {
        self.convert(|x| x.to_f64())
    }
}

fn fold<S: Scalar>(mut it: impl Iterator<Item = S>, g: fn(&S, &S) -> S) -> S {
    let first = it.next().expect("non-empty");
    it.fold(first, |acc, x| g(&acc, &x))
}

fn range<S: Scalar>(what: &'static str, j: usize, i: Option<usize>, value: &S) -> SpecError {
    SpecError::ParameterRange { what, i, j, value: value.to_string() }
}

/// Builds the Bedford-McMullen carpet on an `n0 × m0` grid from chosen cells `(i, j)` (0-based).
pub fn bedford_mcmullen<S: Scalar>(n0: u32, m0: u32, cells: &[(u32, u32)], probs: &[S]) -> Result<Carpet<S>, SpecError> {
    if n0 <= m0 || m0 == 0 {
        return Err(SpecError::BadGrid { detail: format!("need n0 > m0 >= 1, got n0 = {n0}, m0 = {m0}") });
    }
    if cells.is_empty() {
        return Err(SpecError::BadGrid { detail: "empty cell set".into() });
    }
    if probs.len() != cells.len() {
        return Err(SpecError::BadGrid { detail: format!("{} cells but {} probabilities", cells.len(), probs.len()) });
    }
    let mut chosen: Vec<(u32, u32, S)> = Vec::new();
    for (&(i, j), p) in cells.iter().zip(probs) {
        if i >= n0 || j >= m0 {
            return Err(SpecError::BadGrid { detail: format!("cell ({i}, {j}) outside the grid") });
        }
        if chosen.iter().any(|c| c.0 == i && c.1 == j) {
            return Err(SpecError::BadGrid { detail: format!("duplicate cell ({i}, {j})") });
        }
        chosen.push((i, j, p.clone()));
    }
    chosen.sort_by_key(|c| (c.1, c.0));
    let a = S::from_ratio(1, n0 as i64);
    let b = S::from_ratio(1, m0 as i64);
    let mut columns: Vec<Column<S>> = Vec::new();
    let mut row = u32::MAX;
    for (i, j, p) in chosen {
        if j != row {
            row = j;
            columns.push(Column { b: b.clone(), d: S::from_ratio(j as i64, m0 as i64), cells: Vec::new() });
        }
        columns.last_mut().unwrap().cells.push(Cell { a: a.clone(), c: S::from_ratio(i as i64, n0 as i64), p });
    }
    let carpet = Carpet::validate(CarpetParams { columns })?;
    Ok(Carpet { bm: Some(BmGrid { n0, m0 }), ..carpet })
}

/// Integer part `max { k : base^k >= x }`, for `0 < x, base < 1`, under the scalar's tie policy.
pub fn floor_log<M: Magnitude>(x: &M, base: &M) -> i64 {
    let mut k = 0i64;
    let mut acc = M::unit();
    loop {
        let next = acc.mul(base);
        if next.ge(x) {
            k += 1;
            acc = next;
        } else {
            return k;
        }
    }
}

/// Floor of a positive real with a guard against representation error just below an integer.
pub fn floor_real(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// Constants entering the anti-chain thresholds and descendant bounds.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DerivedConstants {
    pub r: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub a1: i64,
    pub a2: i64,
    pub a3: f64,
    pub a4: f64,
    pub a5: i64,
    pub a6: i64,
    pub a7: i64,
    /// `ln η̲_r = ln(p̲ q̲^{A1} a̲^r)`
    pub ln_eta_low: f64,
    /// `ln η̄_r = ln(p̄ q̲^{-1} ā^r)`
    pub ln_eta_high: f64,
    pub eta_low: f64,
    pub eta_high: f64,
    pub m_r: i64,
    pub t1: i64,
    /// `T1 + floor(2 A2 / A4)`
    pub t2: i64,
}

impl DerivedConstants {
    pub fn table(&self) -> Vec<(&'static str, String)> {
        vec![
            ("r", self.r.to_string()),
            ("a_min", self.a_min.to_string()),
            ("a_max", self.a_max.to_string()),
            ("b_min", self.b_min.to_string()),
            ("b_max", self.b_max.to_string()),
            ("p_min", self.p_min.to_string()),
            ("p_max", self.p_max.to_string()),
            ("q_min", self.q_min.to_string()),
            ("q_max", self.q_max.to_string()),
            ("A1", self.a1.to_string()),
            ("A2", self.a2.to_string()),
            ("A3", self.a3.to_string()),
            ("A4", self.a4.to_string()),
            ("A5", self.a5.to_string()),
            ("A6", self.a6.to_string()),
            ("A7", self.a7.to_string()),
            ("eta_low", format!("{:e}", self.eta_low)),
            ("eta_high", format!("{:e}", self.eta_high)),
            ("M_r", self.m_r.to_string()),
            ("T1", self.t1.to_string()),
            ("T2", self.t2.to_string()),
        ]
    }
}

/// Computes the derived constants for exponent `r > 0`.
pub fn derived_constants<S: Scalar>(spec: &Carpet<S>, r: f64) -> DerivedConstants {
    let (a_min, a_max) = (spec.a_min(), spec.a_max());
    let (b_min, b_max) = (spec.b_min(), spec.b_max());
    let (p_min, p_max) = (spec.p_min(), spec.p_max());
    let (q_min, q_max) = (spec.q_min(), spec.q_max());

    let a1 = floor_log(&a_min.mag(), &b_max.mag()) + 1;
    let a2 = floor_log(&b_min.mag(), &a_max.mag()) + 1;
    let a3_s = spec
        .columns
        .iter()
        .flat_map(|c| c.cells.iter().map(move |x| x.a.clone() / c.b.clone()))
        .reduce(|x, y| S::max_of(&x, &y))
        .unwrap();
    let a3 = a3_s.to_f64();
    let a4 = a3_s.ln() / b_min.ln();
    let a6 = floor_real(1.0 / a4);
    let a7 = floor_real(2.0 / a4) + 1;

    let ln_eta_low = p_min.ln() + a1 as f64 * q_min.ln() + r * a_min.ln();
    let ln_eta_high = p_max.ln() - q_min.ln() + r * a_max.ln();
    let a5 = floor_real((2.0 * q_min.ln() + ln_eta_low) / (r * a_max.ln()));
    let m_r = floor_real(ln_eta_low / ln_eta_high);
    let t1 = floor_real((a1 + a5 + 3) as f64 / a4);
    let t2 = t1 + floor_real(2.0 * a2 as f64 / a4);

    DerivedConstants {
        r,
        a_min: a_min.to_f64(),
        a_max: a_max.to_f64(),
        b_min: b_min.to_f64(),
        b_max: b_max.to_f64(),
        p_min: p_min.to_f64(),
        p_max: p_max.to_f64(),
        q_min: q_min.to_f64(),
        q_max: q_max.to_f64(),
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
        a7,
        ln_eta_low,
        ln_eta_high,
        eta_low: ln_eta_low.exp(),
        eta_high: ln_eta_high.exp(),
        m_r,
        t1,
        t2,
    }
}

/// Mean and covariance of the self-affine measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments<S> {
    pub mean: [S; 2],
    /// `[[var_x, cov_xy], [cov_xy, var_y]]`
    pub cov: [[S; 2]; 2],
}

/// Closed-form moments from the fixed-point equations of the invariant measure.
pub fn moments<S: Scalar>(spec: &Carpet<S>) -> Moments<S> {
    let one = S::one();
    let two = S::from_ratio(2, 1);
    let sum = |f: &dyn Fn(&Cell<S>, &Column<S>) -> S| {
        spec.columns.iter().flat_map(|col| col.cells.iter().map(move |c| (c, col))).fold(S::zero(), |s, (c, col)| s + f(c, col))
    };
    let ex = sum(&|c, _| c.p.clone() * c.c.clone()) / (one.clone() - sum(&|c, _| c.p.clone() * c.a.clone()));
    let ey = sum(&|c, col| c.p.clone() * col.d.clone()) / (one.clone() - sum(&|c, col| c.p.clone() * col.b.clone()));
    let exx = sum(&|c, _| c.p.clone() * (two.clone() * c.a.clone() * c.c.clone() * ex.clone() + c.c.clone() * c.c.clone()))
        / (one.clone() - sum(&|c, _| c.p.clone() * c.a.clone() * c.a.clone()));
    let eyy = sum(&|c, col| c.p.clone() * (two.clone() * col.b.clone() * col.d.clone() * ey.clone() + col.d.clone() * col.d.clone()))
        / (one.clone() - sum(&|c, col| c.p.clone() * col.b.clone() * col.b.clone()));
    let exy = sum(&|c, col| {
        c.p.clone() * (c.a.clone() * col.d.clone() * ex.clone() + c.c.clone() * col.b.clone() * ey.clone() + c.c.clone() * col.d.clone())
    }) / (one - sum(&|c, col| c.p.clone() * c.a.clone() * col.b.clone()));
    let vxx = exx - ex.clone() * ex.clone();
    let vyy = eyy - ey.clone() * ey.clone();
    let vxy = exy - ex.clone() * ey.clone();
    Moments { mean: [ex, ey], cov: [[vxx, vxy.clone()], [vxy, vyy]] }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CarpetFile {
    Columns { columns: Vec<ColumnFile> },
    Grid { n0: u32, m0: u32, cells: Vec<(u32, u32)>, p: Option<Vec<Value>> },
}

#[derive(Deserialize)]
struct ColumnFile {
    b: Value,
    d: Value,
    cells: Vec<CellFile>,
}

#[derive(Deserialize)]
struct CellFile {
    a: Value,
    c: Value,
    p: Value,
}

fn number<S: Scalar>(v: &Value, field: &str) -> Result<S, SpecError> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(SpecError::Parse { detail: format!("field `{field}` must be a number or a \"p/q\" string") }),
    };
    S::parse_literal(&text).ok_or_else(|| SpecError::Parse { detail: format!("cannot read `{text}` in field `{field}`") })
}

/// Reads the JSON carpet description (explicit columns or the grid shorthand) and validates it.
pub fn parse_carpet<S: Scalar>(json: &str) -> Result<Carpet<S>, SpecError> {
    let file: CarpetFile = serde_json::from_str(json).map_err(|e| SpecError::Parse { detail: e.to_string() })?;
    match file {
        CarpetFile::Columns { columns } => {
            let columns = columns
                .iter()
                .map(|c| {
                    Ok(Column {
                        b: number(&c.b, "b")?,
                        d: number(&c.d, "d")?,
                        cells: c
                            .cells
                            .iter()
                            .map(|x| Ok(Cell { a: number(&x.a, "a")?, c: number(&x.c, "c")?, p: number(&x.p, "p")? }))
                            .collect::<Result<_, SpecError>>()?,
                    })
                })
                .collect::<Result<_, SpecError>>()?;
            Carpet::validate(CarpetParams { columns })
        }
        CarpetFile::Grid { n0, m0, cells, p } => {
            let probs = match p {
                Some(p) => p.iter().map(|v| number(v, "p")).collect::<Result<Vec<S>, _>>()?,
                None => vec![S::from_ratio(1, cells.len().max(1) as i64); cells.len()],
            };
            bedford_mcmullen(n0, m0, &cells, &probs)
        }
    }
}

/// Serializes the explicit column form, writing each value with its `Display` form.
pub fn carpet_to_json<S: Scalar>(spec: &Carpet<S>) -> Value {
    let lit = |x: &S| {
        if S::EXACT {
            Value::String(x.to_string())
        } else {
            serde_json::Number::from_f64(x.to_f64()).map(Value::Number).unwrap_or(Value::Null)
        }
    };
    let columns: Vec<Value> = spec
        .columns
        .iter()
        .map(|c| {
            serde_json::json!({
                "b": lit(&c.b),
                "d": lit(&c.d),
                "cells": c.cells.iter().map(|x| serde_json::json!({"a": lit(&x.a), "c": lit(&x.c), "p": lit(&x.p)})).collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::json!({ "columns": columns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        <Rational as Scalar>::from_ratio(n, d)
    }

    #[test]
    fn three_column_fixture_is_valid() {
        let c = fixtures::three_column::<Rational>();
        assert_eq!(c.m(), 3);
        assert_eq!(c.card(), 5);
        assert_eq!(c.a_min(), q(1, 27));
        assert_eq!(c.a_max(), q(1, 9));
        assert_eq!(c.b_min(), q(1, 3));
        assert_eq!(c.b_max(), q(1, 3));
    }

    #[test]
    fn strict_width_bound_rejected() {
        let mut raw = fixtures::three_column_params::<Rational>(None);
        raw.columns[0].cells[0].a = q(1, 3);
        assert!(matches!(Carpet::validate(raw), Err(SpecError::CellWidths { j: 1, .. })));
    }

    #[test]
    fn column_heights_rejected() {
        let mut raw = fixtures::three_column_params::<f64>(None);
        raw.columns[0].b = 0.8;
        assert!(matches!(Carpet::validate(raw), Err(SpecError::ColumnHeights { .. })));
    }

    #[test]
    fn other_conditions() {
        let mut raw = fixtures::three_column_params::<f64>(None);
        raw.columns[1].d = 0.3;
        assert!(matches!(Carpet::validate(raw), Err(SpecError::ColumnOverlap { j: 1, .. })));
        let mut raw = fixtures::three_column_params::<f64>(None);
        raw.columns[1].cells[1].c = 0.12;
        assert!(matches!(Carpet::validate(raw), Err(SpecError::CellOverlap { i: 1, j: 2, .. })));
        let mut raw = fixtures::three_column_params::<f64>(None);
        raw.columns[1].cells[1].p = 0.0;
        assert!(matches!(Carpet::validate(raw), Err(SpecError::NonPositiveProbability { .. })));
        let mut raw = fixtures::three_column_params::<f64>(None);
        raw.columns[1].cells[1].p += 0.01;
        assert!(matches!(Carpet::validate(raw), Err(SpecError::ProbabilitySum { .. })));
        let mut raw = fixtures::three_column_params::<f64>(None);
        raw.columns.truncate(1);
        assert!(matches!(Carpet::validate(raw), Err(SpecError::TooFewColumns { m: 1 })));
    }

    #[test]
    fn derived_constants_three_column() {
        let c = fixtures::three_column::<Rational>();
        let k = derived_constants(&c, 2.0);
        assert_eq!(k.a1, 4);
        assert_eq!(k.a2, 1);
        assert!((k.a3 - 1.0 / 3.0).abs() < 1e-15);
        assert!((k.a4 - 1.0).abs() < 1e-12);
        assert_eq!(k.a6, 1);
        assert_eq!(k.a7, 3);
        assert!(k.eta_low < k.eta_high);
        let kf = derived_constants(&fixtures::three_column::<f64>(), 2.0);
        assert_eq!((kf.a1, kf.a2, kf.a6, kf.a7, kf.t1, kf.t2), (k.a1, k.a2, k.a6, k.a7, k.t1, k.t2));
    }

    #[test]
    fn floor_log_ties() {
        let third = q(1, 3).mag();
        assert_eq!(floor_log(&q(1, 27).mag(), &third), 3);
        assert_eq!(floor_log(&q(1, 28).mag(), &third), 3);
        assert_eq!(floor_log(&q(1, 26).mag(), &third), 2);
        assert_eq!(floor_log(&(1.0f64 / 27.0).mag(), &(1.0f64 / 3.0).mag()), 3);
    }

    #[test]
    fn bm_constructor() {
        let third = q(1, 3);
        let c = bedford_mcmullen(4, 2, &[(0, 0), (1, 0), (0, 1)], &[third.clone(), third.clone(), third]).unwrap();
        assert_eq!(c.m(), 2);
        assert_eq!(c.n(1), 2);
        assert_eq!(c.n(2), 1);
        assert_eq!(c.cell(Letter::new(2, 1)).c, q(1, 4));
        assert_eq!(*c.d(2), q(1, 2));
        assert!(bedford_mcmullen(2, 2, &[(0, 0), (1, 1)], &[q(1, 2), q(1, 2)]).is_err());
        assert!(bedford_mcmullen::<Rational>(4, 2, &[], &[]).is_err());
    }

    #[test]
    fn moments_two_cell() {
        let c = fixtures::two_strip::<Rational>();
        let mo = moments(&c);
        assert_eq!(mo.mean[0], q(0, 1));
        assert_eq!(mo.mean[1], q(1, 2));
        assert_eq!(mo.cov[0][0], q(0, 1));
    }

    #[test]
    fn symmetric_spec_has_centered_mean() {
        let h = q(1, 2);
        let c = bedford_mcmullen(3, 2, &[(0, 0), (2, 0), (1, 1)], &[q(1, 4), q(1, 4), h]).unwrap();
        assert_eq!(moments(&c).mean[0], q(1, 2));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"columns":[{"b":"1/2","d":0,"cells":[{"a":0.25,"c":0,"p":0.5}]},{"b":0.5,"d":0.5,"cells":[{"a":"1/4","c":0,"p":"1/2"}]}]}"#;
        let c: Carpet<Rational> = parse_carpet(text).unwrap();
        assert_eq!(c.cell(Letter::new(1, 1)).a, q(1, 4));
        let back = carpet_to_json(&c).to_string();
        let c2: Carpet<Rational> = parse_carpet(&back).unwrap();
        assert_eq!(c.columns(), c2.columns());
        let bm: Carpet<f64> = parse_carpet(r#"{"n0":4,"m0":2,"cells":[[0,0],[1,0],[0,1]]}"#).unwrap();
        assert_eq!(bm.bm_grid(), Some(BmGrid { n0: 4, m0: 2 }));
        assert!(matches!(parse_carpet::<f64>("{}"), Err(SpecError::Parse { .. })));
    }
}

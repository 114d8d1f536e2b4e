//! Named parameter sets used by tests, examples and the CLI.

use crate::carpet::{bedford_mcmullen, Carpet, CarpetParams, Cell, Column};
use crate::scalar::Scalar;

fn q<S: Scalar>(n: i64, d: i64) -> S {
    S::from_ratio(n, d)
}

fn cell<S: Scalar>(a: (i64, i64), c: (i64, i64), p: &S) -> Cell<S> {
    Cell { a: q(a.0, a.1), c: q(c.0, c.1), p: p.clone() }
}

/// Three equal rows of height 1/3 with 2, 2 and 1 cells of widths 1/9 and 1/27.
///
/// Weights are given in (j, i) order; `None` means uniform.
pub fn three_column_params<S: Scalar>(p: Option<[S; 5]>) -> CarpetParams<S> {
    let p = p.unwrap_or_else(|| std::array::from_fn(|_| q(1, 5)));
    let third = q::<S>(1, 3);
    CarpetParams {
        columns: vec![
            Column { b: third.clone(), d: q(0, 1), cells: vec![cell((1, 9), (0, 1), &p[0]), cell((1, 27), (26, 27), &p[1])] },
            Column { b: third.clone(), d: q(1, 3), cells: vec![cell((1, 27), (1, 9), &p[2]), cell((1, 9), (4, 27), &p[3])] },
            Column { b: third, d: q(2, 3), cells: vec![cell((1, 9), (0, 1), &p[4])] },
        ],
    }
}

/// [`three_column_params`] with uniform weights.
pub fn three_column<S: Scalar>() -> Carpet<S> {
    Carpet::validate(three_column_params(None)).expect("valid fixture")
}

/// The three-column carpet with a shorter top row: `a_13 = 1/12`, `b_3 = 1/10`, `d_3 = 9/10`.
pub fn short_top_row<S: Scalar>() -> Carpet<S> {
    let mut raw = three_column_params::<S>(None);
    raw.columns[2].b = q(1, 10);
    raw.columns[2].d = q(9, 10);
    raw.columns[2].cells[0].a = q(1, 12);
    Carpet::validate(raw).expect("valid fixture")
}

/// Grid carpet on 4 × 2 with cells (0,0), (1,0), (0,1) and uniform weights.
pub fn grid_4x2<S: Scalar>() -> Carpet<S> {
    let w = q::<S>(1, 3);
    bedford_mcmullen(4, 2, &[(0, 0), (1, 0), (0, 1)], &[w.clone(), w.clone(), w]).expect("valid fixture")
}

/// Grid carpet on 3 × 2 with four cells and non-uniform weights.
pub fn grid_3x2<S: Scalar>() -> Carpet<S> {
    bedford_mcmullen(3, 2, &[(0, 0), (2, 0), (1, 1), (2, 1)], &[q(1, 5), q(3, 10), q(1, 4), q(1, 4)]).expect("valid fixture")
}

/// Three rows of different heights with 2, 1, 1 cells and non-uniform weights.
pub fn mixed<S: Scalar>() -> Carpet<S> {
    let raw = CarpetParams {
        columns: vec![
            Column {
                b: q(2, 5),
                d: q(0, 1),
                cells: vec![cell((1, 3), (0, 1), &q(3, 10)), cell((1, 3), (1, 2), &q(1, 5))],
            },
            Column { b: q(1, 4), d: q(1, 2), cells: vec![cell((1, 5), (1, 5), &q(1, 4))] },
            Column { b: q(1, 5), d: q(4, 5), cells: vec![cell((1, 6), (0, 1), &q(1, 4))] },
        ],
    };
    Carpet::validate(raw).expect("valid fixture")
}

/// Two half-height rows with one cell of width 1/4 each, both at `c = 0`.
pub fn two_strip<S: Scalar>() -> Carpet<S> {
    let h = q::<S>(1, 2);
    let raw = CarpetParams {
        columns: vec![
            Column { b: h.clone(), d: q(0, 1), cells: vec![cell((1, 4), (0, 1), &h)] },
            Column { b: h.clone(), d: h.clone(), cells: vec![cell((1, 4), (0, 1), &h)] },
        ],
    };
    Carpet::validate(raw).expect("valid fixture")
}

/// Two half-height rows with one cell of width 1/3 each.
pub fn sparse_pair<S: Scalar>() -> Carpet<S> {
    let h = q::<S>(1, 2);
    let raw = CarpetParams {
        columns: vec![
            Column { b: h.clone(), d: q(0, 1), cells: vec![cell((1, 3), (0, 1), &h)] },
            Column { b: h.clone(), d: h.clone(), cells: vec![cell((1, 3), (2, 3), &h)] },
        ],
    };
    Carpet::validate(raw).expect("valid fixture")
}

/// Two half-height rows with one cell of width `2^-k` each; thin enough that
/// the separated family exists from the first stopping index.
pub fn thin_pair<S: Scalar>(k: u32) -> Carpet<S> {
    let h = q::<S>(1, 2);
    let w = q::<S>(1, 1i64 << k);
    let raw = CarpetParams {
        columns: vec![
            Column { b: h.clone(), d: q(0, 1), cells: vec![Cell { a: w.clone(), c: q(0, 1), p: h.clone() }] },
            Column { b: h.clone(), d: h.clone(), cells: vec![Cell { a: w.clone(), c: S::one() - w, p: h.clone() }] },
        ],
    };
    Carpet::validate(raw).expect("valid fixture")
}

/// Two half-height rows, two cells of width `2^-k` in the lower one and one in the upper one.
pub fn thin_three<S: Scalar>(k: u32) -> Carpet<S> {
    let h = q::<S>(1, 2);
    let w = q::<S>(1, 1i64 << k);
    let third = q::<S>(1, 3);
    let raw = CarpetParams {
        columns: vec![
            Column {
                b: h.clone(),
                d: q(0, 1),
                cells: vec![
                    Cell { a: w.clone(), c: q(0, 1), p: third.clone() },
                    Cell { a: w.clone(), c: S::one() - w.clone(), p: third.clone() },
                ],
            },
            Column { b: h.clone(), d: h, cells: vec![Cell { a: w, c: q(1, 2), p: third }] },
        ],
    };
    Carpet::validate(raw).expect("valid fixture")
}

/// Every named fixture with its name.
pub fn all<S: Scalar>() -> Vec<(&'static str, Carpet<S>)> {
    vec![
        ("three_column", three_column()),
        ("short_top_row", short_top_row()),
        ("grid_4x2", grid_4x2()),
        ("grid_3x2", grid_3x2()),
        ("mixed", mixed()),
        ("two_strip", two_strip()),
        ("sparse_pair", sparse_pair()),
    ]
}

/// Looks up a fixture by name.
pub fn by_name<S: Scalar>(name: &str) -> Option<Carpet<S>> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c)
}

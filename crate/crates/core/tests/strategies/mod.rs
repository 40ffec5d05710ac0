//! Proptest strategies for random series in the theorem-check domain:
//! up to two parameters per block, exponents in `{0, 1/2, 1, 2}`,
//! `0.05 <= |p| < 0.9`.
#![allow(dead_code)]

use proptest::prelude::*;
use qlauricella::qcore::QBase;
use qlauricella::series::SeriesSpec;

pub const EXPONENTS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

pub fn value() -> impl Strategy<Value = f64> {
    prop_oneof![-0.9f64..-0.05, 0.05f64..0.9]
}

pub fn exponent() -> impl Strategy<Value = f64> {
    prop::sample::select(EXPONENTS.to_vec())
}

/// Random series in `n` variables with up to two parameters per block.
pub fn spec(n: usize, qs: Vec<f64>) -> impl Strategy<Value = SeriesSpec> {
    let multi = move || prop::collection::vec((value(), prop::collection::vec(exponent(), n)), 0..=2);
    let single = move || prop::collection::vec((0..n, value(), exponent()), 0..=2);
    (prop::sample::select(qs), multi(), multi(), single(), single()).prop_map(move |(q, um, lm, us, ls)| {
        let mut s = SeriesSpec::new(n, QBase::new(q).unwrap());
        for (v, row) in um {
            s = s.with_upper_multi(v, row);
        }
        for (v, row) in lm {
            s = s.with_lower_multi(v, row);
        }
        for (i, v, e) in us {
            s = s.with_upper_single(i, v, e);
        }
        for (i, v, e) in ls {
            s = s.with_lower_single(i, v, e);
        }
        s
    })
}

pub fn point(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..=r, n)
}

/// With every `|p| < 1` all `Ω(s)` are positive, so on the non-negative
/// orthant the terms never cancel and relative comparisons are meaningful.
pub fn positive_point(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=r, n)
}

//! Naive reference implementations used as test oracles. Everything here is
//! recomputed from scratch with plain loops, without the library's caches,
//! shell ordering or stopping rules.
#![allow(dead_code)]

use qlauricella::series::SeriesSpec;

pub fn bracket(x: f64, q: f64) -> f64 {
    (1.0 - q.powf(x)) / (1.0 - q)
}

/// `(a; q)_n` as a finite product.
pub fn poch(a: f64, q: f64, n: u64) -> f64 {
    (0..n).map(|m| 1.0 - a * q.powi(m as i32)).product()
}

/// `(a; q)_∞`, multiplied until the factors stop changing the product.
pub fn poch_inf(a: f64, q: f64) -> f64 {
    let mut p = 1.0;
    let mut t = a;
    for _ in 0..100_000 {
        if t.abs() < 1e-20 {
            break;
        }
        p *= 1.0 - t;
        t *= q;
    }
    p
}

/// `(a; q)_x` for real `x >= 0`: a finite product when `x` is an integer,
/// `(a; q)_∞ / (a q^x; q)_∞` otherwise.
pub fn poch_real(a: f64, q: f64, x: f64) -> f64 {
    if x == x.round() {
        poch(a, q, x as u64)
    } else {
        poch_inf(a, q) / poch_inf(a * q.powf(x), q)
    }
}

pub fn dot(row: &[f64], s: &[u32]) -> f64 {
    row.iter().zip(s).map(|(r, &si)| r * f64::from(si)).sum()
}

/// `Ω(s)` straight from the definition.
pub fn omega(spec: &SeriesSpec, s: &[u32]) -> f64 {
    let q = spec.base.get();
    let mut w = 1.0;
    for p in &spec.upper_multi {
        w *= poch_real(p.value, q, dot(&p.exponents, s));
    }
    for p in &spec.lower_multi {
        w /= poch_real(p.value, q, dot(&p.exponents, s));
    }
    for (i, list) in spec.upper_single.iter().enumerate() {
        for p in list {
            w *= poch_real(p.value, q, p.exponent * f64::from(s[i]));
        }
    }
    for (i, list) in spec.lower_single.iter().enumerate() {
        for p in list {
            w /= poch_real(p.value, q, p.exponent * f64::from(s[i]));
        }
    }
    w
}

/// `Ω(s) Π x_i^{s_i} / (q; q)_{s_i}`.
pub fn term(spec: &SeriesSpec, x: &[f64], s: &[u32]) -> f64 {
    let q = spec.base.get();
    let mut t = omega(spec, s);
    for (xi, &si) in x.iter().zip(s) {
        t *= xi.powi(si as i32) / poch(q, q, u64::from(si));
    }
    t
}

/// Nested loops over every `s` with `s_i <= cap`, keeping those with
/// `|s| <= cap`.
pub fn brute_sum(n: usize, cap: u32, mut f: impl FnMut(&[u32]) -> f64) -> f64 {
    let mut total = 0.0;
    let mut s = vec![0u32; n];
    loop {
        if s.iter().sum::<u32>() <= cap {
            total += f(&s);
        }
        let mut i = 0;
        loop {
            if i == n {
                return total;
            }
            if s[i] < cap {
                s[i] += 1;
                break;
            }
            s[i] = 0;
            i += 1;
        }
    }
}

/// Series value by brute force.
pub fn series(spec: &SeriesSpec, x: &[f64], cap: u32) -> f64 {
    brute_sum(spec.n_vars, cap, |s| term(spec, x, s))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Agreement under the relative-or-absolute rule used throughout the tests.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    let d = (a - b).abs();
    if b.abs() >= tol {
        d <= tol * b.abs()
    } else {
        d <= tol
    }
}

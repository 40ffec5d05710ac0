//! Scalar q-calculus primitives.
//!
//! * q-bracket `[x]_q = (1 - q^x) / (1 - q)` for real `x`;
//! * q-Pochhammer `(a, q)_n` for non-negative, negative and real orders;
//! * the Jackson derivative `D_q f(x) = (f(qx) - f(x)) / ((q - 1) x)`;
//! * the cyclic splitting of `[θ·m]_q` into single-index brackets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Base `q` of every q-analog in the crate, restricted to `0 < q < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QBase(f64);

impl QBase {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q > 0.0 && q < 1.0 {
            Ok(QBase(q))
        } else {
            Err(Error::InvalidBase { q })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn as_real<T: Real>(self) -> T {
        T::from_f64(self.0)
    }
}

impl TryFrom<f64> for QBase {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        QBase::new(q)
    }
}

impl From<QBase> for f64 {
    fn from(b: QBase) -> f64 {
        b.0
    }
}

/// Order of a q-Pochhammer symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PochOrder {
    /// `(a, q)_n` for `n >= 0`.
    NonNegInt(u64),
    /// `(a, q)_{-n}` for `n >= 1`.
    NegInt(u64),
    /// `(a, q)_x` for real `x >= 0`, through the infinite-product ratio.
    Real(f64),
}

/// Truncation and pole-detection policy for q-products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductConfig {
    /// An infinite product stops at the first `m` with `|a q^m| < eps_prod`.
    pub eps_prod: f64,
    /// Hard cap on the number of factors of one infinite product.
    pub max_factors: usize,
    /// Denominator factors with smaller magnitude are treated as poles.
    pub singularity_floor: f64,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig {
            eps_prod: 1e-17,
            max_factors: 1_000_000,
            singularity_floor: 1e-300,
        }
    }
}

impl ProductConfig {
    pub fn with_eps(eps_prod: f64) -> Self {
        ProductConfig {
            eps_prod,
            ..Default::default()
        }
    }
}

/// `[x]_q = (1 - q^x) / (1 - q)`.
#[inline]
pub fn q_bracket<T: Real>(x: T, base: QBase) -> T {
    let q = base.as_real::<T>();
    (T::one() - q.powf(x)) / (T::one() - q)
}

/// Finite product `Π_{m=0}^{n-1} (1 - a q^m)`.
pub fn finite_product<T: Real>(a: T, base: QBase, n: u64) -> T {
    let q = base.as_real::<T>();
    let mut acc = T::one();
    let mut aqm = a;
    for _ in 0..n {
        acc *= T::one() - aqm;
        aqm *= q;
    }
    acc
}

/// `(a, q)_∞ = Π_{m>=0} (1 - a q^m)`, truncated once `|a q^m| < eps_prod`.
pub fn infinite_product<T: Real>(a: T, base: QBase, cfg: &ProductConfig) -> Result<T> {
    let q = base.as_real::<T>();
    let eps = T::from_f64(cfg.eps_prod);
    let mut acc = T::one();
    let mut aqm = a;
    let mut m = 0usize;
    while aqm.abs() >= eps {
        if m >= cfg.max_factors {
            return Err(Error::NonConvergent(format!(
                "infinite product ({:e}, q)_inf after {m} factors",
                a.to_f64()
            )));
        }
        acc *= T::one() - aqm;
        aqm *= q;
        m += 1;
    }
    Ok(acc)
}

/// `(a, q)_x = (a, q)_∞ / (a q^x, q)_∞` for real `x >= 0`.
///
/// Evaluated as the product of factor ratios `(1 - a q^m) / (1 - a q^{m+x})`
/// so that a vanishing numerator factor yields an exact zero and a vanishing
/// denominator factor is reported as a pole.
pub fn real_order_pochhammer<T: Real>(a: T, base: QBase, x: T, cfg: &ProductConfig) -> Result<T> {
    if x < T::zero() {
        return Err(Error::NegativeRealOrder(x.to_f64()));
    }
    let q = base.as_real::<T>();
    let eps = T::from_f64(cfg.eps_prod);
    let floor = T::from_f64(cfg.singularity_floor);
    let mut num = a;
    let mut den = a * q.powf(x);
    let mut acc = T::one();
    let mut m = 0usize;
    while num.abs() >= eps || den.abs() >= eps {
        if m >= cfg.max_factors {
            return Err(Error::NonConvergent(format!(
                "real-order product ({:e}, q)_{:e} after {m} factors",
                a.to_f64(),
                x.to_f64()
            )));
        }
        let d = T::one() - den;
        if d.abs() < floor {
            return Err(Error::SingularPochhammer {
                a: a.to_f64(),
                order: format!("{}", x.to_f64()),
            });
        }
        acc *= (T::one() - num) / d;
        num *= q;
        den *= q;
        m += 1;
    }
    Ok(acc)
}

/// q-shifted factorial `(a, q)_n` in all three order extensions.
pub fn q_pochhammer<T: Real>(a: T, base: QBase, order: PochOrder, eps_prod: f64) -> Result<T> {
    q_pochhammer_with(a, base, order, &ProductConfig::with_eps(eps_prod))
}

pub fn q_pochhammer_with<T: Real>(a: T, base: QBase, order: PochOrder, cfg: &ProductConfig) -> Result<T> {
    if !(cfg.eps_prod > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_prod must be positive, got {}",
            cfg.eps_prod
        )));
    }
    match order {
        PochOrder::NonNegInt(n) => Ok(finite_product(a, base, n)),
        PochOrder::NegInt(n) => {
            // 1 / Π_{m=1}^{n} (1 - a q^{-m})
            let qinv = T::one() / base.as_real::<T>();
            let floor = T::from_f64(cfg.singularity_floor);
            let mut den = T::one();
            let mut aqm = a;
            for _ in 0..n {
                aqm *= qinv;
                let f = T::one() - aqm;
                if f.abs() < floor {
                    return Err(Error::SingularPochhammer {
                        a: a.to_f64(),
                        order: format!("-{n}"),
                    });
                }
                den *= f;
            }
            Ok(T::one() / den)
        }
        PochOrder::Real(x) => real_order_pochhammer(a, base, T::from_f64(x), cfg),
    }
}

/// Second closed form of the negative order:
/// `(a, q)_{-n} = (-q/a)^n q^{n(n-1)/2} / (q/a, q)_n`.
pub fn q_pochhammer_negative_dual<T: Real>(a: T, base: QBase, n: u64) -> Result<T> {
    if a == T::zero() {
        return Err(Error::InvalidArgument("dual negative-order form needs a != 0".into()));
    }
    let q = base.as_real::<T>();
    let ratio = q / a;
    let den = finite_product(ratio, base, n);
    if den.abs() < T::from_f64(ProductConfig::default().singularity_floor) {
        return Err(Error::SingularPochhammer {
            a: a.to_f64(),
            order: format!("-{n}"),
        });
    }
    let tri = (n * n.saturating_sub(1) / 2) as i32;
    Ok((-ratio).powi(n as i32) * q.powi(tri) / den)
}

/// Jackson q-derivative of `f` at `x`.
pub fn jackson_derivative<T: Real>(f: impl Fn(T) -> T, x: T, base: QBase) -> Result<T> {
    try_jackson_derivative(|t| Ok(f(t)), x, base)
}

/// Jackson q-derivative of a fallible function.
pub fn try_jackson_derivative<T: Real>(f: impl Fn(T) -> Result<T>, x: T, base: QBase) -> Result<T> {
    if x == T::zero() {
        return Err(Error::ZeroPoint);
    }
    let q = base.as_real::<T>();
    Ok((f(q * x)? - f(x)?) / ((q - T::one()) * x))
}

/// One component of the cyclic split of `[θ·m]_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitComponent<T> {
    pub index: usize,
    pub weight: T,
    pub bracket: T,
}

/// Splits `[θ_1 m_1 + … + θ_K m_K]_q` into `K` weighted single-index brackets.
///
/// Component `k` carries `[θ_k m_k]_q` and the weight
/// `(1/K)(1 + q^{θ_{k+1} m_{k+1}} + … + q^{θ_{k+1} m_{k+1} + … + θ_{k+K-1} m_{k+K-1}})`
/// with indices taken cyclically.
pub fn split_q_bracket<T: Real>(theta: &[T], m: &[u64], base: QBase) -> Result<Vec<SplitComponent<T>>> {
    if theta.len() != m.len() {
        return Err(Error::DimensionMismatch {
            what: "split_q_bracket theta/m".into(),
            expected: theta.len(),
            found: m.len(),
        });
    }
    let k = theta.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "split_q_bracket needs at least one index".into(),
        ));
    }
    let q = base.as_real::<T>();
    let parts: Vec<T> = theta.iter().zip(m).map(|(&t, &mi)| t * T::from_u64(mi)).collect();
    let inv_k = T::one() / T::from_u64(k as u64);
    let comps = (0..k)
        .map(|idx| {
            let mut exponent = T::zero();
            let mut weight = T::one();
            for step in 1..k {
                exponent += parts[(idx + step) % k];
                weight += q.powf(exponent);
            }
            SplitComponent {
                index: idx,
                weight: weight * inv_k,
                bracket: q_bracket(parts[idx], base),
            }
        })
        .collect();
    Ok(comps)
}

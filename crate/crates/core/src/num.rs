// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction and the numeric kernels shared by the circuit and cell
//! models.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the numeric kernels are generic over.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Failure modes of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureError {
    /// The integrand was infinite or NaN at the given abscissa.
    NonFinite { at: f64 },
    /// The recursion limit was hit before the tolerance was met.
    NoConvergence,
}

const MAX_DEPTH: u32 = 48;
const SEED_PANELS: usize = 16;

/// Adaptive trapezoid quadrature of `f` over `[a, b]`.
///
/// The global error target is `rel_tol` times the magnitude of a coarse
/// estimate of the integral; each panel gets a share proportional to its
/// width. Panel error is estimated from the difference between the one- and
/// two-panel trapezoid rules.
pub fn integrate<T, F>(mut f: F, a: T, b: T, rel_tol: T) -> Result<T, QuadratureError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if a == b {
        return Ok(T::zero());
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };

    let mut eval = |x: T| -> Result<T, QuadratureError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite { at: x.as_f64() })
        }
    };

    let n = T::lit(SEED_PANELS as f64);
    let h = (hi - lo) / n;
    let mut xs = Vec::with_capacity(SEED_PANELS + 1);
    let mut ys = Vec::with_capacity(SEED_PANELS + 1);
    for i in 0..=SEED_PANELS {
        let x = if i == SEED_PANELS { hi } else { lo + h * T::lit(i as f64) };
        xs.push(x);
        ys.push(eval(x)?);
    }
    let coarse: T = (0..SEED_PANELS)
        .map(|i| (ys[i] + ys[i + 1]) * (xs[i + 1] - xs[i]) / T::lit(2.0))
        .fold(T::zero(), |acc, v| acc + v);
    let scale = if coarse.abs() > T::zero() { coarse.abs() } else { T::one() };
    let abs_tol = rel_tol * scale;
    let width = hi - lo;

    let mut total = T::zero();
    for i in 0..SEED_PANELS {
        let tol = abs_tol * (xs[i + 1] - xs[i]) / width;
        total = total + panel(&mut eval, xs[i], ys[i], xs[i + 1], ys[i + 1], tol, 0)?;
    }
    Ok(sign * total)
}

fn panel<T, E>(eval: &mut E, a: T, fa: T, b: T, fb: T, tol: T, depth: u32) -> Result<T, QuadratureError>
where
    T: Scalar,
    E: FnMut(T) -> Result<T, QuadratureError>,
{
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let fm = eval(m)?;
    let whole = (fa + fb) * (b - a) / two;
    let halves = (fa + fm) * (m - a) / two + (fm + fb) * (b - m) / two;
    // Trapezoid error shrinks 4x per halving, so the refined value is off by
    // roughly a third of the difference.
    let err = (halves - whole).abs() / T::lit(3.0);
    if err <= tol {
        return Ok(halves + (halves - whole) / T::lit(3.0));
    }
    if depth >= MAX_DEPTH || m <= a || m >= b {
        return Err(QuadratureError::NoConvergence);
    }
    let left = panel(eval, a, fa, m, fm, tol / two, depth + 1)?;
    let right = panel(eval, m, fm, b, fb, tol / two, depth + 1)?;
    Ok(left + right)
}

/// Finds a root of `f` in `[lo, hi]` by bisection. `f(lo)` and `f(hi)` must
/// bracket the root.
pub fn bisect<T, F>(mut f: F, mut lo: T, mut hi: T, iterations: usize) -> Option<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Some(lo);
    }
    if fhi == T::zero() {
        return Some(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return None;
    }
    for _ in 0..iterations {
        let mid = (lo + hi) / T::lit(2.0);
        let fm = f(mid);
        if fm == T::zero() {
            return Some(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) / T::lit(2.0))
}

/// Returns true when `n` is a power of two (and non-zero).
pub fn is_pow2(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

pub fn log2_exact(n: usize) -> Option<u32> {
    is_pow2(n).then(|| n.trailing_zeros())
}

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    // Formatting through the exponent form avoids powi precision loss at
    // extreme magnitudes.
    let s = format!("{:.*e}", (digits - 1).max(0) as usize, x);
    s.parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials() {
        let v: f64 = integrate(|x: f64| x * x, 0.0, 3.0, 1e-9).unwrap();
        assert!((v - 9.0).abs() < 1e-7);
        let v32: f32 = integrate(|x: f32| 2.0 * x, 0.0, 1.0, 1e-5).unwrap();
        assert!((v32 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let v: f64 = integrate(|x: f64| x.exp(), 1.0, 0.0, 1e-8).unwrap();
        assert!((v + (std::f64::consts::E - 1.0)).abs() < 1e-7);
    }

    #[test]
    fn singular_integrand_reports_location() {
        let r = integrate(|x: f64| 1.0 / (1.0 - x), 0.0, 1.0, 1e-6);
        assert!(matches!(r, Err(QuadratureError::NonFinite { at }) if at == 1.0));
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 80).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x: f64| x * x + 1.0, 0.0, 2.0, 10).is_none());
    }

    #[test]
    fn sig_rounding() {
        assert_eq!(round_sig(1.234_567_89e-5, 6), 1.23457e-5);
        assert_eq!(round_sig(-98_765.432, 3), -98_800.0);
        assert_eq!(round_sig(0.0, 6), 0.0);
    }
}

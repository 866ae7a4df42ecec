//! Adaptive Simpson quadrature and monotone cubic interpolation.
//!
//! These back the 1-D normalizing constants, Fisher scalars and inverse-CDF
//! tables. Accuracy targets are absolute: the integrands here are bounded
//! densities on explicitly truncated domains.

use crate::{Error, Result};

/// Adaptive Simpson rule with Richardson acceptance on `[a, b]`.
///
/// Recurses until the local error estimate is below `abs_tol` (distributed
/// over subintervals) or `max_depth` is hit, in which case the interval is
/// reported as non-integrable.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonIntegrable("infinite endpoint"));
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0;
    simpson_rec(&f, a, b, fa, fm, fb, whole, abs_tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::NonIntegrable("non-finite integrand"));
    }
    let left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    let right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    let delta = left + right - whole;
    // 15 = 2^4 - 1 from the Richardson error model for Simpson's rule
    if delta.abs() <= 15.0 * abs_tol || (b - a).abs() < f64::EPSILON * (1.0 + m.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NonIntegrable("max recursion depth"));
    }
    let half_tol = 0.5 * abs_tol;
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

/// Piecewise cubic Hermite interpolant that preserves strict monotonicity.
///
/// Node slopes are taken from the caller when known analytically and clamped
/// to the Fritsch-Carlson region, which keeps the interpolant monotone
/// between nodes.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant from strictly increasing `xs`, increasing `ys`
    /// and nonnegative node slopes `dy/dx`.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != slopes.len() {
            return Err(Error::InvalidParameter(
                "interpolation table needs matching xs/ys/slopes with >= 2 nodes".into(),
            ));
        }
        for i in 1..xs.len() {
            if !(xs[i] > xs[i - 1]) || !(ys[i] >= ys[i - 1]) {
                return Err(Error::InvalidParameter(
                    "interpolation table must be increasing".into(),
                ));
            }
        }
        // Fritsch-Carlson: slope_i <= 3 * min(secant_left, secant_right)
        let n = xs.len();
        for i in 0..n {
            let sec_l = if i > 0 {
                (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])
            } else {
                f64::INFINITY
            };
            let sec_r = if i + 1 < n {
                (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
            } else {
                f64::INFINITY
            };
            let cap = 3.0 * sec_l.min(sec_r);
            if slopes[i] < 0.0 || !slopes[i].is_finite() {
                slopes[i] = 0.0;
            } else if slopes[i] > cap {
                slopes[i] = cap;
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    /// Evaluates the interpolant, clamping outside the node range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self
            .xs
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1
    }
}

//! Bracketing root finders for the scalar equations in this crate.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Bisection on `[lo, hi]` until the bracket is narrower than `x_tol` or the
/// residual drops below `f_tol`. `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, f_tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::Solver(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Root {
            x: lo,
            residual: 0.0,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
            iterations: 0,
        });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Solver(format!(
            "root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}"
        )));
    }
    let mut iterations = 0;
    let mut best = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    while hi - lo > x_tol && iterations < 400 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        iterations += 1;
        if f_mid.abs() < best.1.abs() {
            best = (mid, f_mid);
        }
        if f_mid == 0.0 || f_mid.abs() < f_tol {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        x: best.0,
        residual: best.1,
        iterations,
    })
}

/// Bisection followed by a single secant step across the final bracket,
/// kept only if it lowers the residual.
pub fn bisect_then_secant<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let root = bisect(&mut f, lo, hi, x_tol, 0.0)?;
    if root.residual == 0.0 {
        return Ok(root);
    }
    let h = x_tol.max(root.x.abs() * 1e-9);
    let (a, b) = (root.x - h, root.x + h);
    let (fa, fb) = (f(a)?, f(b)?);
    if fb == fa {
        return Ok(root);
    }
    let x = b - fb * (b - a) / (fb - fa);
    if !x.is_finite() || x <= lo || x >= hi {
        return Ok(root);
    }
    let fx = f(x)?;
    if fx.abs() < root.residual.abs() {
        Ok(Root {
            x,
            residual: fx,
            iterations: root.iterations + 1,
        })
    } else {
        Ok(root)
    }
}

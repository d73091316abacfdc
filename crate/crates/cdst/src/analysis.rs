//! Closed-form quantities behind the pipeline's guarantees: approximation
//! factors, the split-budget comparison functions and their closed form,
//! the port-cost bounding function with its maximizer, and the
//! lower-bound-gap family values.

use crate::error::{Error, Result};

fn check_beta(beta: f64, func: &'static str) -> Result<()> {
    if !beta.is_finite() || beta < 1.0 {
        return Err(Error::domain(func, "beta must be a finite number >= 1"));
    }
    Ok(())
}

/// End-to-end approximation factor achieved from a β-approximate initial
/// tree: β + β/(√(β²+1) + β − 1).
pub fn approx_factor(beta: f64) -> Result<f64> {
    check_beta(beta, "approx_factor")?;
    Ok(beta + beta / ((beta * beta + 1.0).sqrt() + beta - 1.0))
}

/// The additive constant a(β) = β/(√(β²+1) + β − 1), so that
/// `approx_factor(β) = β + a(β)`.
pub fn factor_constant(beta: f64) -> Result<f64> {
    check_beta(beta, "factor_constant")?;
    Ok(beta / ((beta * beta + 1.0).sqrt() + beta - 1.0))
}

/// Factor of the weight-threshold pipeline at its default threshold 1/β:
/// (1 + 1/β)·β·C_smt-grade plus (1 + β)-grade delay collapse to 1 + β.
pub fn baseline_factor(beta: f64) -> Result<f64> {
    check_beta(beta, "baseline_factor")?;
    Ok(1.0 + beta)
}

/// Rounds up at the fifth decimal place — the convention used by the
/// published factor table.
pub fn ceil5(x: f64) -> f64 {
    (x * 1e5).ceil() / 1e5
}

fn check_split_domain(a: f64, b: f64, c: f64, mu: f64, func: &'static str) -> Result<()> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::domain(func, "mu must be finite and > 0"));
    }
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !v.is_finite() {
            return Err(Error::domain(func, match name {
                "a" => "a must be finite",
                "b" => "b must be finite",
                _ => "c must be finite",
            }));
        }
    }
    if a <= mu || a >= 2.0 * mu {
        return Err(Error::domain(func, "a must lie in the open interval (mu, 2*mu)"));
    }
    if b <= 0.0 || b >= mu {
        return Err(Error::domain(func, "b must lie in the open interval (0, mu)"));
    }
    if c <= 0.0 || c >= mu {
        return Err(Error::domain(func, "c must lie in the open interval (0, mu)"));
    }
    if c > a - b {
        return Err(Error::domain(func, "c must not exceed a - b"));
    }
    if a - b >= mu {
        return Err(Error::domain(func, "a - b must be strictly below mu"));
    }
    Ok(())
}

/// The weighting factor shared by [`f_func`] and [`g_func`]:
/// (1/a − 1/mu) / (1/(a−b) − 1/mu), evaluated in the equivalent rational
/// form (mu−a)(a−b) / (a·(mu−(a−b))). The rational form avoids the
/// reciprocal-difference cancellation that costs ~7 digits when a−b is
/// close to mu, and computes the small denominator mu−(a−b) exactly the
/// same way as [`f_closed`] so the two stay comparable at 1e-9 relative
/// even next to the pole.
fn split_scale(a: f64, b: f64, mu: f64) -> f64 {
    let s = a - b;
    (mu - a) * s / (a * (mu - s))
}

/// Split-budget comparison function f over the domain
/// {(a,b,c) in (mu,2mu)x(0,mu)^2 : c <= a-b < mu}:
/// 2(a−c)c/a − mu/2 + (1/a − 1/mu)·(1/(1/(a−b) − 1/mu))·(mu/2 − 2(a−b−c)c/(a−b)),
/// with the middle factor evaluated via [`split_scale`] (see [`f_closed`]
/// for the independent closed form).
pub fn f_func(a: f64, b: f64, c: f64, mu: f64) -> Result<f64> {
    check_split_domain(a, b, c, mu, "f_func")?;
    let head = 2.0 * (a - c) * c / a - mu / 2.0;
    let s = a - b;
    let tail = mu / 2.0 - 2.0 * (s - c) * c / s;
    Ok(head + split_scale(a, b, mu) * tail)
}

/// Companion function g: identical to [`f_func`] except the trailing factor
/// is mu/2 alone. Always g <= f on the shared domain.
pub fn g_func(a: f64, b: f64, c: f64, mu: f64) -> Result<f64> {
    check_split_domain(a, b, c, mu, "g_func")?;
    let head = 2.0 * (a - c) * c / a - mu / 2.0;
    Ok(head + split_scale(a, b, mu) * (mu / 2.0))
}

/// Closed form of [`f_func`]: −b(2c−mu)² / (2a(mu+b−a)). Kept separate so
/// the algebraic simplification is cross-checked numerically in tests; the
/// denominator term mu+b−a is computed as mu−(a−b), matching [`split_scale`]
/// bit for bit so the comparison is meaningful near the pole a−b → mu.
pub fn f_closed(a: f64, b: f64, c: f64, mu: f64) -> Result<f64> {
    check_split_domain(a, b, c, mu, "f_closed")?;
    let d = 2.0 * c - mu;
    Ok(-b * d * d / (2.0 * a * (mu - (a - b))))
}

/// Draws a uniform sample of the f/g domain by rejection: a in (mu,2mu) and
/// b in (0,mu) until a−b < mu, then c uniform in (0, a−b].
pub fn sample_split_domain<R: rand::Rng>(mu: f64, rng: &mut R) -> (f64, f64, f64) {
    loop {
        let a = rng.gen_range(mu..2.0 * mu);
        let b = rng.gen_range(0.0..mu);
        if a <= mu || b <= 0.0 || a - b >= mu {
            continue;
        }
        let upper = (a - b).min(mu);
        let c = upper * (1.0 - rng.gen::<f64>());
        if c <= 0.0 || c > a - b {
            continue;
        }
        return (a, b, c);
    }
}

/// Port-cost bounding function h(x,y) = (βx + y + √2·√(βxy)) / (x + y),
/// defined for x > 0, y >= 0.
pub fn h_func(x: f64, y: f64, beta: f64) -> Result<f64> {
    check_beta(beta, "h_func")?;
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("h_func", "x must be finite and > 0"));
    }
    if !y.is_finite() || y < 0.0 {
        return Err(Error::domain("h_func", "y must be finite and >= 0"));
    }
    Ok((beta * x + y + std::f64::consts::SQRT_2 * (beta * x * y).sqrt()) / (x + y))
}

/// The x maximizing h(·, y, β): x* = β·y / (2·a(β)²), where h attains
/// exactly β + a(β) = [`approx_factor`].
pub fn h_peak_x(y: f64, beta: f64) -> Result<f64> {
    check_beta(beta, "h_peak_x")?;
    if !y.is_finite() || y <= 0.0 {
        return Err(Error::domain("h_peak_x", "y must be finite and > 0"));
    }
    let a = factor_constant(beta)?;
    Ok(beta * y / (2.0 * a * a))
}

/// Lower-bound-gap family values for k unit-star terminals at path
/// granularity delta_prime: the instance's lower bound 2 + √2·k and its
/// optimum (1+√2)·k + 2 − delta_prime·k.
pub fn gap_formulas(k: u64, delta_prime: f64) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::domain("gap_formulas", "k must be >= 1"));
    }
    if !delta_prime.is_finite() || delta_prime <= 0.0 || delta_prime >= 1.0 / k as f64 {
        return Err(Error::domain(
            "gap_formulas",
            "delta_prime must lie in the open interval (0, 1/k)",
        ));
    }
    let kf = k as f64;
    let lb = 2.0 + std::f64::consts::SQRT_2 * kf;
    let opt = (1.0 + std::f64::consts::SQRT_2) * kf + 2.0 - delta_prime * kf;
    Ok((lb, opt))
}

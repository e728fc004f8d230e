//! Distribution of the studentized range by numerical integration.

use std::sync::OnceLock;

use super::distributions::{ln_gamma, normal_cdf, normal_pdf};
use crate::error::{Error, Result};

const GL_POINTS: usize = 16;
/// Above this many degrees of freedom the scale factor is treated as exact.
const DF_INFINITE: f64 = 25_000.0;
const Z_LIMIT: f64 = 8.5;
const Z_PANELS: usize = 16;
const S_PANELS: usize = 16;

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and its derivative.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// Composite Gauss-Legendre over `[a, b]` split into `panels` pieces.
fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            s += w * f(mid + half * x);
        }
        total += s * half;
    }
    total
}

/// CDF of the range of `k` standard normal variables.
fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let v = integrate(-Z_LIMIT, Z_LIMIT, Z_PANELS, |z| {
        let inner = normal_cdf(z) - normal_cdf(z - w);
        normal_pdf(z) * inner.max(0.0).powi(km1)
    });
    (k as f64 * v).clamp(0.0, 1.0)
}

/// `P(Q <= q)` for the studentized range with `k` groups and `df` degrees of
/// freedom.
pub fn ptukey(q: f64, k: usize, df: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!("studentized range needs k >= 2, got {k}")));
    }
    if !(df >= 1.0) {
        return Err(Error::invalid(format!("studentized range needs df >= 1, got {df}")));
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    if df > DF_INFINITE {
        return Ok(range_cdf(q, k));
    }
    // Scale s = sqrt(chi2_df / df) has density
    // df^(df/2) s^(df-1) exp(-df s^2 / 2) / (Gamma(df/2) 2^(df/2 - 1)).
    let half = df / 2.0;
    let ln_norm = half * df.ln() - ln_gamma(half) - (half - 1.0) * std::f64::consts::LN_2;
    let spread = 10.0 / df.sqrt();
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread.max(0.5) + if df < 3.0 { 6.0 } else { 0.0 };
    let v = integrate(lo, hi, S_PANELS, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let ln_density = ln_norm + (df - 1.0) * s.ln() - half * s * s;
        ln_density.exp() * range_cdf(q * s, k)
    });
    Ok(v.clamp(0.0, 1.0))
}

/// Quantile of the studentized range: the `q` with `ptukey(q) = p`.
pub fn qtukey(p: f64, k: usize, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    let (mut lo, mut flo) = (0.0, -p);
    let mut hi = 4.0;
    let mut fhi = ptukey(hi, k, df)? - p;
    while fhi < 0.0 {
        (lo, flo) = (hi, fhi);
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numeric("studentized range quantile diverged".into()));
        }
        fhi = ptukey(hi, k, df)? - p;
    }
    // Illinois regula falsi; the root stays bracketed by [lo, hi].
    let mut side = 0i8;
    for _ in 0..200 {
        let q = (lo * fhi - hi * flo) / (fhi - flo);
        let fq = ptukey(q, k, df)? - p;
        if fq == 0.0 {
            return Ok(q);
        }
        if fq < 0.0 {
            (lo, flo) = (q, fq);
            if side == -1 {
                fhi /= 2.0;
            }
            side = -1;
        } else {
            (hi, fhi) = (q, fq);
            if side == 1 {
                flo /= 2.0;
            }
            side = 1;
        }
        if hi - lo < 1e-10 || fq.abs() < 1e-14 {
            return Ok(q);
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::distributions::t_two_sided;

    // CDF and upper quantiles from an independent reference implementation.
    const CDF: [(f64, usize, f64, f64); 8] = [
        (1.0, 2, 5.0, 0.48891591956971947),
        (3.0, 3, 6.0, 0.8345403482804729),
        (4.339, 3, 6.0, 0.9499914901743859),
        (2.5, 4, 20.0, 0.6827970026274168),
        (5.0, 5, 10.0, 0.9657931419500596),
        (3.5, 3, 1000.0, 0.9640529602207105),
        (6.0, 10, 30.0, 0.9935927204778023),
        (2.0, 3, 2.0, 0.5234394316261386),
    ];

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let v = integrate(0.0, 2.0, 1, |x| x.powi(7) - 3.0 * x * x);
        assert!((v - (256.0 / 8.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn cdf_matches_reference() {
        for (q, k, df, want) in CDF {
            let got = ptukey(q, k, df).unwrap();
            assert!((got - want).abs() < 1e-6, "ptukey({q}, {k}, {df}) = {got}, want {want}");
        }
    }

    #[test]
    fn two_groups_reduce_to_t() {
        // With k = 2 the studentized range is sqrt(2) |T|.
        for (q, df) in [(1.0, 4.0), (2.5, 9.0), (4.0, 30.0), (3.0, 1.0)] {
            let via_t = 1.0 - t_two_sided(q / std::f64::consts::SQRT_2, df).unwrap();
            let got = ptukey(q, 2, df).unwrap();
            assert!((got - via_t).abs() < 1e-6, "q={q}, df={df}: {got} vs {via_t}");
        }
    }

    #[test]
    fn critical_values() {
        // published table: q(0.05; 3, 6) = 4.34
        let q = qtukey(0.95, 3, 6.0).unwrap();
        assert!((q - 4.34).abs() < 0.01);
        assert!((q - 4.3391954765202785).abs() < 1e-6);
        let q = qtukey(0.99, 3, 12.0).unwrap();
        assert!((q - 5.045934725165963).abs() < 1e-6);
    }
}

//! Regression, one-way ANOVA, Tukey HSD and bootstrap median summaries used
//! to characterize users by danger category.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub mod distributions;
mod tukey;

pub use tukey::{ptukey, qtukey};

/// `ln(1 + x)` for count attributes, which may be zero.
pub fn log_count(x: u64) -> f64 {
    (x as f64).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided p-value of the slope under the t distribution with n-2 df.
    pub slope_p: f64,
    pub n: usize,
}

/// Ordinary least squares fit of `y = intercept + slope * x`.
pub fn linreg(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("{} x values for {} y values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid(format!("regression needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid("regressor is constant"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_p = if slope == 0.0 {
        1.0
    } else if sse <= 0.0 {
        0.0
    } else {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        distributions::t_two_sided(slope / se, nf - 2.0)?
    };
    Ok(RegressionResult {
        slope,
        intercept,
        slope_p,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub ms_within: f64,
    /// Within-group variance was zero; `f` was set to 0 (or infinity when the
    /// group means differ).
    pub degenerate: bool,
}

fn check_groups(groups: &[Vec<f64>]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 groups, got {}", groups.len())));
    }
    if let Some((i, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < 2) {
        return Err(Error::invalid(format!("group {i} has {} values; need 2", g.len())));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in groups"));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    check_groups(groups)?;
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = mean(g);
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        ssw += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let df_between = k - 1;
    let df_within = n - k;
    let msb = ssb / df_between as f64;
    let msw = ssw / df_within as f64;
    // Relative guard: sums of squares at rounding level count as zero.
    let scale = groups.iter().flatten().map(|v| v * v).sum::<f64>().max(1.0);
    let tiny = 1e-12 * scale;
    let (f, p_value, degenerate) = if ssw <= tiny {
        if ssb <= tiny {
            (0.0, 1.0, true)
        } else {
            (f64::INFINITY, 0.0, true)
        }
    } else if ssb <= tiny {
        (0.0, 1.0, false)
    } else {
        let f = msb / msw;
        (f, distributions::f_sf(f, df_between as f64, df_within as f64)?, false)
    };
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p_value,
        ms_within: msw,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsdPair {
    pub i: usize,
    pub j: usize,
    /// `mean_i - mean_j`.
    pub mean_diff: f64,
    pub q: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsdResult {
    pub alpha: f64,
    pub critical_q: f64,
    pub pairs: Vec<HsdPair>,
}

impl HsdResult {
    pub fn pair(&self, i: usize, j: usize) -> Option<&HsdPair> {
        self.pairs
            .iter()
            .find(|p| (p.i, p.j) == (i, j) || (p.i, p.j) == (j, i))
    }
}

/// Tukey-Kramer comparison of every pair of groups.
pub fn tukey_hsd(groups: &[Vec<f64>], alpha: f64) -> Result<HsdResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    let anova = one_way_anova(groups)?;
    let k = groups.len();
    let df = anova.df_within as f64;
    let critical_q = qtukey(1.0 - alpha, k, df)?;
    let means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = means[i] - means[j];
            let se = (anova.ms_within * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64) / 2.0).sqrt();
            let q = if se > 0.0 {
                diff.abs() / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let p_value = if q.is_infinite() { 0.0 } else { 1.0 - ptukey(q, k, df)? };
            pairs.push(HsdPair {
                i,
                j,
                mean_diff: diff,
                q,
                p_value: p_value.max(0.0),
                significant: q > critical_q,
            });
        }
    }
    Ok(HsdResult {
        alpha,
        critical_q,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianSummary {
    pub n: usize,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub seed: u64,
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("median of an empty sample"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(median_sorted(&s))
}

fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Sample median with a 95% percentile-bootstrap interval. Replicate `r`
/// draws from its own ChaCha stream of `seed`, so results do not depend on
/// thread count or input order.
pub fn group_summary(values: &[f64], bootstrap_n: usize, seed: u64) -> Result<MedianSummary> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in sample"));
    }
    if bootstrap_n == 0 {
        return Err(Error::invalid("bootstrap needs at least one replicate"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted)?;
    let n = sorted.len();
    let mut medians: Vec<f64> = (0..bootstrap_n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                for slot in buf.iter_mut() {
                    *slot = sorted[rng.gen_range(0..n)];
                }
                buf.sort_by(f64::total_cmp);
                median_sorted(buf)
            },
        )
        .collect();
    medians.sort_by(f64::total_cmp);
    Ok(MedianSummary {
        n,
        median: med,
        ci_low: quantile_sorted(&medians, 0.025),
        ci_high: quantile_sorted(&medians, 0.975),
        replicates: bootstrap_n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linreg_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = linreg(&x, &x).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-12 && r.intercept.abs() < 1e-12);
        assert_eq!(r.slope_p, 0.0);

        let r = linreg(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 5.0, 8.0]).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-9);
        assert!((r.intercept + 0.5).abs() < 1e-9);
        assert!(r.slope_p > 0.0 && r.slope_p < 0.05);

        let r = linreg(&x, &[3.0; 5]).unwrap();
        assert_eq!(r.slope, 0.0);
        assert_eq!(r.slope_p, 1.0);

        assert!(linreg(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(linreg(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn linreg_equivariance(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
            c in 0.1f64..10.0,
            shift in -100.0f64..100.0,
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            prop_assume!(x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() > 1e-3);
            let base = linreg(&x, &y).unwrap();
            let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
            prop_assert!((linreg(&x, &yc).unwrap().slope - c * base.slope).abs() < 1e-8 * (1.0 + base.slope.abs() * c));
            let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
            prop_assert!((linreg(&xs, &y).unwrap().slope - base.slope).abs() < 1e-7 * (1.0 + base.slope.abs()));
            prop_assert!((0.0..=1.0).contains(&base.slope_p));
        }
    }

    #[test]
    fn anova_examples() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]];
        let a = one_way_anova(&g).unwrap();
        assert!((a.f - 3.0).abs() < 1e-9);
        assert_eq!((a.df_between, a.df_within), (2, 6));
        assert!((a.p_value - 0.125).abs() < 1e-9);

        let same = vec![vec![1.0, 2.0, 4.0]; 3];
        let a = one_way_anova(&same).unwrap();
        assert_eq!(a.f, 0.0);
        assert!(!a.degenerate);

        let flat = vec![vec![2.0; 3]; 3];
        let a = one_way_anova(&flat).unwrap();
        assert_eq!(a.f, 0.0);
        assert!(a.degenerate);

        assert!(one_way_anova(&[vec![1.0, 2.0]]).is_err());
        assert!(one_way_anova(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    proptest! {
        #[test]
        fn anova_is_affine_invariant(
            groups in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2..8), 2..5),
            shift in -50.0f64..50.0,
            scale in 0.1f64..10.0,
        ) {
            let a = one_way_anova(&groups).unwrap();
            prop_assume!(!a.degenerate && a.f > 1e-6 && a.f < 1e6);
            let moved: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v * scale + shift).collect()).collect();
            let b = one_way_anova(&moved).unwrap();
            prop_assert!((a.f - b.f).abs() < 1e-6 * a.f.max(1.0));
        }
    }

    #[test]
    fn hsd_identical_groups() {
        let g = vec![vec![1.0, 2.0, 3.0, 4.0]; 3];
        let h = tukey_hsd(&g, 0.05).unwrap();
        assert_eq!(h.pairs.len(), 3);
        for p in &h.pairs {
            assert_eq!(p.mean_diff, 0.0);
            assert!(!p.significant);
        }
    }

    fn separated() -> Vec<Vec<f64>> {
        // means 0, 10, 20 with unit spread, 10 per group
        let offsets = [-1.5, -1.0, -0.6, -0.3, -0.1, 0.1, 0.3, 0.6, 1.0, 1.5];
        (0..3)
            .map(|g| offsets.iter().map(|o| 10.0 * g as f64 + o).collect())
            .collect()
    }

    #[test]
    fn hsd_separated_groups() {
        let h = tukey_hsd(&separated(), 0.05).unwrap();
        assert!(h.pairs.iter().all(|p| p.significant));
        // q for adjacent groups: 10 / sqrt(MSW / 10)
        let a = one_way_anova(&separated()).unwrap();
        let q01 = h.pair(0, 1).unwrap().q;
        assert!((q01 - 10.0 / (a.ms_within / 10.0).sqrt()).abs() < 1e-9);
        assert!((h.critical_q - qtukey(0.95, 3, 27.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hsd_is_relabeling_invariant() {
        let mut g = separated();
        g[2] = g[2].iter().map(|v| v - 19.7).collect(); // group 2 now close to group 0
        let h = tukey_hsd(&g, 0.05).unwrap();
        let perm = [2usize, 0, 1];
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| g[i].clone()).collect();
        let hp = tukey_hsd(&permuted, 0.05).unwrap();
        for p in &hp.pairs {
            let orig = h.pair(perm[p.i], perm[p.j]).unwrap();
            assert_eq!(orig.significant, p.significant);
            assert!((orig.q - p.q).abs() < 1e-9);
        }
        assert!(!h.pair(0, 2).unwrap().significant);
        assert!(h.pair(1, 2).unwrap().significant);
    }

    /// Resample with the same per-replicate streams, written independently
    /// of the parallel implementation.
    fn bootstrap_oracle(values: &[f64], b: usize, seed: u64) -> (f64, f64) {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut meds = Vec::new();
        for r in 0..b {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut s: Vec<f64> = (0..n).map(|_| sorted[rand::Rng::gen_range(&mut rng, 0..n)]).collect();
            s.sort_by(f64::total_cmp);
            meds.push(if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 });
        }
        meds.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = (b - 1) as f64 * p;
            let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
            meds[lo] + (h - lo as f64) * (meds[hi] - meds[lo])
        };
        (q(0.025), q(0.975))
    }

    #[test]
    fn summary_examples() {
        let s = group_summary(&[4.2], 500, 1).unwrap();
        assert_eq!((s.median, s.ci_low, s.ci_high), (4.2, 4.2, 4.2));

        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = group_summary(&values, 2000, 42).unwrap();
        assert_eq!(s.median, 50.5);
        assert!(s.ci_low <= 50.5 && 50.5 <= s.ci_high);
        assert_eq!((s.ci_low, s.ci_high), bootstrap_oracle(&values, 2000, 42));

        let mut rev = values.clone();
        rev.reverse();
        rev.swap(3, 70);
        assert_eq!(group_summary(&rev, 2000, 42).unwrap(), s);
        assert!(group_summary(&[], 10, 1).is_err());
    }
}

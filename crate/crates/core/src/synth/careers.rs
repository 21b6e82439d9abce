use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Cumulative output `N(t) = c t^alpha` for `t = 1..=years`, with each
/// annual increment scaled by `1 + noise * e`, `e ~ N(0, 1)` (clipped at
/// zero).
pub fn power_law_career<R: Rng + ?Sized>(
    alpha: f64,
    years: usize,
    scale: f64,
    noise: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && scale > 0.0 && noise >= 0.0) || years == 0 {
        return Err(Error::InvalidArgument(format!(
            "power-law career needs alpha, scale > 0 and noise >= 0, got {alpha}, {scale}, {noise}"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(years);
    for t in 1..=years {
        let t = t as f64;
        let inc = scale * (t.powf(alpha) - (t - 1.0).powf(alpha));
        acc += (inc * (1.0 + noise * normal.sample(rng))).max(0.0);
        out.push(acc);
    }
    Ok(out)
}

/// Integer annual counts whose running sum tracks `round(c t^alpha)`.
/// `c` is the whole number closest to `total / years^alpha`, at least one:
/// a fractional `c` distorts the early years badly enough to bias a log-log
/// fit, and a total below `years^alpha` cannot follow `t^alpha` in whole
/// papers. The final total is therefore only approximately `total`.
pub fn planted_annual_counts(alpha: f64, years: usize, total: f64) -> Vec<u32> {
    let c = (total / (years as f64).powf(alpha)).round().max(1.0);
    let mut prev = 0u32;
    (1..=years)
        .map(|t| {
            let target = (c * (t as f64).powf(alpha))
                .round()
                .max(if t == 1 { 1.0 } else { 0.0 }) as u32;
            let cur = target.max(prev);
            let n = cur - prev;
            prev = cur;
            n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::fit_alpha_cumulative;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_career_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = power_law_career(1.4, 30, 3.0, 0.0, &mut rng).unwrap();
        assert!((fit_alpha_cumulative(&c).unwrap() - 1.4).abs() < 1e-9);
    }

    #[test]
    fn counts_follow_rounded_scale() {
        for alpha in [0.7, 1.0, 1.3] {
            let n = planted_annual_counts(alpha, 25, 90.0);
            let c = (90.0 / 25f64.powf(alpha)).round();
            assert_eq!(
                n.iter().sum::<u32>() as f64,
                (c * 25f64.powf(alpha)).round()
            );
            assert!(n[0] >= 1);
        }
        assert_eq!(planted_annual_counts(1.0, 10, 30.0), vec![3; 10]);
        assert_eq!(planted_annual_counts(1.0, 10, 34.0), vec![3; 10]);
    }

    #[test]
    fn infeasible_totals_are_raised() {
        // 25^2.2 is about 1192 papers; 90 cannot trace t^2.2.
        let n = planted_annual_counts(2.2, 25, 90.0);
        let total: u32 = n.iter().sum();
        assert_eq!(total as f64, 25f64.powf(2.2).round());
        let cum: Vec<f64> = n
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x as f64;
                Some(*acc)
            })
            .collect();
        assert!((fit_alpha_cumulative(&cum).unwrap() - 2.2).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(power_law_career(0.0, 10, 1.0, 0.0, &mut rng).is_err());
        assert!(power_law_career(1.0, 0, 1.0, 0.0, &mut rng).is_err());
    }
}

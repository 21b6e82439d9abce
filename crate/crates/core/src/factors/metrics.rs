use crate::error::{Error, Result};
use crate::graph::NodeEmbedding;
use crate::scalar::Scalar;

/// Log-log least-squares slope of `N(t)` against `t`, using the points with
/// `N(t) > 0`. Needs at least three such points at distinct `t`.
pub fn fit_alpha<T: Scalar>(points: &[(T, T)]) -> Result<T> {
    let logs: Vec<(T, T)> = points
        .iter()
        .filter(|(t, n)| *n > T::zero() && *t > T::zero())
        .map(|&(t, n)| (t.ln(), n.ln()))
        .collect();
    if logs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "alpha fit needs 3 positive points, got {}",
            logs.len()
        )));
    }
    let k = T::from_usize_lossy(logs.len());
    let mx = logs.iter().map(|p| p.0).sum::<T>() / k;
    let my = logs.iter().map(|p| p.1).sum::<T>() / k;
    let sxx: T = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= T::zero() {
        return Err(Error::InsufficientData(
            "alpha fit needs distinct t values".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// [`fit_alpha`] over a cumulative series indexed from `t = 1`.
pub fn fit_alpha_cumulative<T: Scalar>(cumulative: &[T]) -> Result<T> {
    let points: Vec<(T, T)> = cumulative
        .iter()
        .enumerate()
        .map(|(i, &n)| (T::from_usize_lossy(i + 1), n))
        .collect();
    fit_alpha(&points)
}

/// Largest `h` such that at least `h` papers have at least `h` citations.
pub fn h_index(citations: &[u64]) -> usize {
    let mut sorted = citations.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .enumerate()
        .take_while(|&(i, &c)| c > i as u64)
        .count()
}

pub fn i10_index(citations: &[u64]) -> usize {
    citations.iter().filter(|&&c| c >= 10).count()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Mean cosine similarity between the candidate's embedding and each Fellow's.
pub fn scholarly_distance(candidate: &str, fellows: &[&str], emb: &NodeEmbedding) -> Result<f64> {
    if fellows.is_empty() {
        return Err(Error::InsufficientData(
            "scholarly distance needs at least one Fellow".into(),
        ));
    }
    let x = emb
        .get(candidate)
        .ok_or_else(|| Error::Lookup(candidate.to_string()))?;
    let mut sum = 0.0;
    for f in fellows {
        let y = emb.get(f).ok_or_else(|| Error::Lookup(f.to_string()))?;
        sum += cosine(x, y);
    }
    Ok(sum / fellows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let lin: Vec<f64> = (1..=10).map(|t| t as f64).collect();
        assert!((fit_alpha_cumulative(&lin).unwrap() - 1.0).abs() < 1e-9);
        let sq: Vec<f64> = (1..=10).map(|t| (t * t) as f64).collect();
        assert!((fit_alpha_cumulative(&sq).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_power_law_recovered() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (1..=30)
            .map(|t| {
                let noise = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                (t as f64, 3.0 * (t as f64).powf(1.4) * noise)
            })
            .collect();
        assert!((fit_alpha(&pts).unwrap() - 1.4).abs() < 0.05);
    }

    #[test]
    fn too_few_positive_points() {
        assert!(matches!(
            fit_alpha_cumulative(&[0.0, 1.0, 2.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    fn h_brute(c: &[u64]) -> usize {
        (0..=c.len())
            .filter(|&h| c.iter().filter(|&&x| x >= h as u64).count() >= h)
            .max()
            .unwrap()
    }

    #[test]
    fn h_and_i10_examples() {
        assert_eq!(h_index(&[]), 0);
        assert_eq!(h_index(&[6, 5, 3, 1, 0]), h_brute(&[6, 5, 3, 1, 0]));
        assert_eq!(h_index(&[6, 5, 3, 1, 0]), 3);
        assert_eq!(h_index(&[10, 10, 10]), 3);
        assert_eq!(i10_index(&[]), 0);
        assert_eq!(i10_index(&[9, 10, 11]), 2);
    }

    #[test]
    fn cosine_with_zero_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn scholarly_distance_extremes() {
        let emb = NodeEmbedding::new(
            vec!["c".into(), "f1".into(), "f2".into(), "o".into()],
            2,
            vec![1.0, 1.0, 2.0, 2.0, 0.5, 0.5, 1.0, -1.0],
        )
        .unwrap();
        assert!((scholarly_distance("c", &["f1", "f2"], &emb).unwrap() - 1.0).abs() < 1e-12);
        assert!(scholarly_distance("o", &["f1", "f2"], &emb).unwrap().abs() < 1e-12);
        assert!(scholarly_distance("c", &[], &emb).is_err());
    }

    proptest! {
        #[test]
        fn h_index_bounds(c in proptest::collection::vec(0u64..50, 0..40)) {
            let h = h_index(&c);
            prop_assert_eq!(h, h_brute(&c));
            prop_assert!(h <= c.len());
            prop_assert!(h as u64 <= c.iter().copied().max().unwrap_or(0));
            prop_assert_eq!(i10_index(&c), c.iter().filter(|&&x| x >= 10).count());
        }

        #[test]
        fn alpha_ignores_scale(scale in 0.01f64..100.0, a in 0.3f64..2.5) {
            let pts: Vec<(f64, f64)> = (1..=15).map(|t| (t as f64, (t as f64).powf(a) + t as f64)).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(t, n)| (t, n * scale)).collect();
            let (x, y) = (fit_alpha(&pts).unwrap(), fit_alpha(&scaled).unwrap());
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

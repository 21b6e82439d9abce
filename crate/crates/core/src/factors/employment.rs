use sha2::{Digest, Sha256};

pub const EMPLOYMENT_DIM: usize = 4;

/// Fixed unit vector derived from a SHA-256 hash of the employer id.
pub fn employment_embedding(employer_id: &str) -> [f64; EMPLOYMENT_DIM] {
    let mut counter = 0u32;
    loop {
        let mut h = Sha256::new();
        h.update(b"career-forge/employer/v1\0");
        h.update(counter.to_le_bytes());
        h.update(employer_id.as_bytes());
        let digest = h.finalize();
        let mut v = [0.0; EMPLOYMENT_DIM];
        for (i, chunk) in digest.chunks_exact(8).take(EMPLOYMENT_DIM).enumerate() {
            let word = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            v[i] = (word >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.map(|x| x / norm);
        }
        counter += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn deterministic_unit_vectors() {
        let a = employment_embedding("mit");
        assert_eq!(a, employment_embedding("mit"));
        for id in ["mit", "stanford", "x", ""] {
            let n = employment_embedding(id)
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn distinct_ids_never_collide() {
        let vectors: HashSet<[u64; 4]> = (0..1000)
            .map(|i| employment_embedding(&format!("employer-{i}")).map(f64::to_bits))
            .collect();
        assert_eq!(vectors.len(), 1000);
    }
}

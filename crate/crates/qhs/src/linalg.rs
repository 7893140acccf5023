//! Small dense vector helpers shared across modules.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn all_zero(a: &[f64]) -> bool {
    a.iter().all(|&x| x == 0.0)
}

/// splitmix64 finalizer; used to derive independent RNG substreams.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Substream seed for a (seed, lane, index) triple. One substream per
/// (scale, sample) pair keeps estimates reproducible regardless of
/// evaluation order.
pub(crate) fn substream_seed(seed: u64, lane: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(lane)) ^ splitmix64(index.wrapping_add(0x51AF)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ() {
        let a = substream_seed(0, 0, 0);
        let b = substream_seed(0, 0, 1);
        let c = substream_seed(0, 1, 0);
        let d = substream_seed(1, 0, 0);
        assert!(a != b && a != c && a != d && b != c);
    }

    #[test]
    fn dist_is_symmetric() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, -1.0, 2.0];
        assert!((dist(&a, &b) - dist(&b, &a)).abs() < 1e-15);
        assert_eq!(dist(&a, &a), 0.0);
    }
}

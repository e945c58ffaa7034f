//! Deterministic pairwise tree reduction.
//!
//! Every averaging kernel in this crate sums through this fixed binary tree:
//! a slice is split at the largest power of two strictly below its length,
//! with short tails accumulated left to right. The tree shape depends only on
//! the input length, so results are bit-identical no matter how work is
//! scheduled across threads, and the O(ε·log n) error profile makes the tight
//! sweep/direct cross-check tolerances meaningful.

use num_complex::Complex64;

const SEQUENTIAL_BASE: usize = 32;

fn split_point(len: usize) -> usize {
    // Largest power of two strictly less than len (len >= 2).
    let p = usize::BITS - (len - 1).leading_zeros() - 1;
    1usize << p
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        n if n <= SEQUENTIAL_BASE => {
            let mut acc = Complex64::new(0.0, 0.0);
            for v in values {
                acc += v;
            }
            acc
        }
        n => {
            let m = split_point(n);
            pairwise_sum_complex(&values[..m]) + pairwise_sum_complex(&values[m..])
        }
    }
}

pub fn pairwise_sum_f64(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        n if n <= SEQUENTIAL_BASE => values.iter().sum(),
        n => {
            let m = split_point(n);
            pairwise_sum_f64(&values[..m]) + pairwise_sum_f64(&values[m..])
        }
    }
}

/// Pairwise sum of f(x) over a slice without materializing the mapped values.
pub fn pairwise_map_sum<T, F: Fn(&T) -> f64 + Copy>(values: &[T], f: F) -> f64 {
    match values.len() {
        0 => 0.0,
        n if n <= SEQUENTIAL_BASE => values.iter().map(f).sum(),
        n => {
            let m = split_point(n);
            pairwise_map_sum(&values[..m], f) + pairwise_map_sum(&values[m..], f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_is_largest_power_below() {
        assert_eq!(split_point(2), 1);
        assert_eq!(split_point(64), 32);
        assert_eq!(split_point(65), 64);
        assert_eq!(split_point(1 << 20), 1 << 19);
    }

    #[test]
    fn exact_on_integers() {
        let ones: Vec<f64> = vec![1.0; 100_001];
        assert_eq!(pairwise_sum_f64(&ones), 100_001.0);
    }

    proptest! {
        #[test]
        fn close_to_naive(xs in proptest::collection::vec(-1.0f64..1.0, 0..3000)) {
            let naive: f64 = xs.iter().sum();
            let tree = pairwise_sum_f64(&xs);
            prop_assert!((naive - tree).abs() < 1e-9);
        }

        #[test]
        fn complex_matches_parts(xs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 0..2000)) {
            let zs: Vec<Complex64> = xs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
            let z = pairwise_sum_complex(&zs);
            let re: Vec<f64> = xs.iter().map(|x| x.0).collect();
            let im: Vec<f64> = xs.iter().map(|x| x.1).collect();
            // The real/imaginary components flow through the same tree.
            prop_assert_eq!(z.re, pairwise_sum_f64(&re));
            prop_assert_eq!(z.im, pairwise_sum_f64(&im));
        }
    }
}

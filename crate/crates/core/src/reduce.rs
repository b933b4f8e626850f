//! Deterministic reductions and per-point maps.
//!
//! Sums are evaluated over fixed leaf blocks combined by a fixed binary tree,
//! so the result depends only on the input length and never on how many
//! worker threads computed the leaves.

/// Leaf block length of the reduction tree.
pub const LEAF: usize = 256;

fn combine_tree(mut level: Vec<f64>) -> f64 {
    if level.is_empty() {
        return 0.0;
    }
    while level.len() > 1 {
        let next = level
            .chunks(2)
            .map(|pair| if pair.len() == 2 { pair[0] + pair[1] } else { pair[0] })
            .collect();
        level = next;
    }
    level[0]
}

fn pairwise(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let mid = len.next_power_of_two() / 2;
            pairwise(&values[..mid]) + pairwise(&values[mid..])
        }
    }
}

fn leaf_sums(values: &[f64]) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values.par_chunks(LEAF).map(pairwise).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        values.chunks(LEAF).map(pairwise).collect()
    }
}

pub fn tree_sum(values: &[f64]) -> f64 {
    combine_tree(leaf_sums(values))
}

pub fn tree_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    tree_sum(values) / values.len() as f64
}

/// Maximum over the values; NaN entries are propagated.
pub fn sup(values: &[f64]) -> f64 {
    values.iter().fold(f64::NEG_INFINITY, |acc, &v| {
        if v.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.max(v)
        }
    })
}

pub fn inf(values: &[f64]) -> f64 {
    values.iter().fold(f64::INFINITY, |acc, &v| {
        if v.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.min(v)
        }
    })
}

/// Index and value of the smallest entry.
pub fn argmin(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) })
}

pub fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

/// Evaluates `f` at every index in `0..len`, in parallel when enabled.
pub fn map_points<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if len >= 4 * LEAF {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sum_is_exact_for_power_of_two_lengths() {
        let v = vec![0.1; 1 << 14];
        assert_eq!(tree_sum(&v), 0.1 * (1 << 14) as f64);
        assert_eq!(tree_mean(&v), 0.1);
    }

    #[test]
    fn sum_independent_of_worker_count() {
        let v: Vec<f64> = (0..100_003).map(|i| ((i as f64) * 0.37).sin() * 1e3).collect();
        let serial = combine_tree(v.chunks(LEAF).map(pairwise).collect());
        #[cfg(feature = "parallel")]
        for workers in [1, 2, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
            let s = pool.install(|| tree_sum(&v));
            assert_eq!(s.to_bits(), serial.to_bits());
        }
        assert_eq!(tree_sum(&v).to_bits(), serial.to_bits());
    }

    #[test]
    fn extrema() {
        let v = [3.0, -1.0, 2.5];
        assert_eq!(sup(&v), 3.0);
        assert_eq!(inf(&v), -1.0);
        assert_eq!(argmin(&v), (1, -1.0));
        assert_eq!(sup_abs(&v), 3.0);
        assert!(sup(&[1.0, f64::NAN]).is_nan());
        assert_eq!(tree_sum(&[]), 0.0);
    }
}

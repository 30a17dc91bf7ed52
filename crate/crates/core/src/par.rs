//! Data-parallel helpers with a sequential fallback.
//!
//! Library code goes through [`maybe_par_map`], which uses rayon when the
//! `parallel` feature is enabled and plain iteration otherwise. The
//! explicit [`parallel_map`]/[`serial_map`] pair exists so benches can
//! compare both paths in one build. Results are collected in input order,
//! so outputs are bit-identical in both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over an index range sequentially.
pub fn serial_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    (0..n).map(f).collect()
}

/// Map over an index range with rayon.
#[cfg(feature = "parallel")]
pub fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    serial_map(n, f)
}

/// Map used by the library: parallel when the feature is on.
pub fn maybe_par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    parallel_map(n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree_in_order() {
        let f = |i: usize| (i as f64).sin() * 1e-3 + i as f64;
        let a = serial_map(100, f);
        let b = parallel_map(100, f);
        assert_eq!(a, b);
    }
}

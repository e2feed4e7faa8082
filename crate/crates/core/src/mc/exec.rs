use crate::error::Result;

/// Runs `f(0), ..., f(count - 1)` and returns the results in index order.
///
/// With the `parallel` feature the work is spread over a rayon pool; a
/// `workers` hint of `Some(w)` uses a dedicated pool of `w` threads and
/// `Some(1)` runs inline. Each call depends only on its index, so the
/// output does not depend on the hint.
pub(crate) fn map_indexed<T, F>(count: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match workers {
            Some(1) => (0..count).map(&f).collect(),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| crate::Error::InvalidConfig(format!("thread pool: {e}")))?;
                pool.install(|| (0..count).into_par_iter().map(&f).collect())
            }
            None => (0..count).into_par_iter().map(&f).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..count).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_hint() {
        let a = map_indexed(1000, Some(1), |i| Ok(i * i)).unwrap();
        let b = map_indexed(1000, Some(3), |i| Ok(i * i)).unwrap();
        let c = map_indexed(1000, None, |i| Ok(i * i)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a[999], 999 * 999);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Vec<usize>> =
            map_indexed(10, Some(2), |i| if i == 7 { Err(crate::Error::Undefined("x".into())) } else { Ok(i) });
        assert!(r.is_err());
    }
}

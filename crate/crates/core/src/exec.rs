//! Mode-parallel execution. Every per-mode computation in the crate is pure,
//! so the parallel and sequential paths produce identical, index-ordered
//! results.

/// How per-mode work is scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Spread modes over the rayon pool. Without the `parallel` feature this
    /// is the same as [`Execution::Sequential`].
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over `items`, preserving order.
pub fn map<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Like [`map`] for fallible work. On failure the error of the lowest-index
/// item is returned, regardless of scheduling.
pub fn try_map<I, T, E, F>(exec: Execution, items: &[I], f: F) -> Result<Vec<T>, E>
where
    I: Sync,
    T: Send,
    E: Send,
    F: Fn(&I) -> Result<T, E> + Sync + Send,
{
    map(exec, items, f).into_iter().collect()
}

/// Runs `f` with parallel sections capped at `threads` workers.
#[cfg(feature = "parallel")]
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R, F>(_threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    f()
}

/// Reads `MEMWAVE_THREADS`; unset, empty or unparsable means "hardware count".
pub fn threads_from_env() -> Option<usize> {
    std::env::var("MEMWAVE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_first_error() {
        let items: Vec<usize> = (0..1000).collect();
        let seq = map(Execution::Sequential, &items, |i| i * i);
        let par = map(Execution::Parallel, &items, |i| i * i);
        assert_eq!(seq, par);
        let r: Result<Vec<usize>, usize> = try_map(Execution::Parallel, &items, |&i| {
            if i % 300 == 299 {
                Err(i)
            } else {
                Ok(i)
            }
        });
        assert_eq!(r, Err(299));
        assert_eq!(with_threads(Some(2), || 7), 7);
    }
}

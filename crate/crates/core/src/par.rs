//! Data-parallel helpers. Without the `parallel` feature everything runs on
//! the calling thread.

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `jobs = 0` means one worker per available core.
    Parallel {
        jobs: usize,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { jobs: 0 }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Execution::Sequential,
            Some(j) => Execution::Parallel { jobs: j },
            None => Execution::default(),
        }
    }
}

/// Applies `f` to every item and hands the results to `sink` in item order.
///
/// Items are processed in batches so results reach `sink` while later
/// batches are still pending.
pub fn ordered_map<T, R, F, S>(exec: Execution, items: &[T], f: F, mut sink: S) -> Result<()>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
    S: FnMut(usize, R) -> Result<()>,
{
    match exec {
        Execution::Sequential => {
            for (i, item) in items.iter().enumerate() {
                sink(i, f(item)?)?;
            }
            Ok(())
        }
        Execution::Parallel { jobs } => parallel_ordered(jobs, items, f, &mut sink),
    }
}

/// Applies `f` to every item and collects the results in item order.
pub fn map_collect<T, R, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let mut out = Vec::with_capacity(items.len());
    ordered_map(exec, items, f, |_, r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

#[cfg(feature = "parallel")]
fn parallel_ordered<T, R, F, S>(jobs: usize, items: &[T], f: F, sink: &mut S) -> Result<()>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
    S: FnMut(usize, R) -> Result<()>,
{
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::Error::param("jobs", e.to_string()))?;
    let batch = pool.current_num_threads().max(1) * 4;
    let mut done = 0;
    for chunk in items.chunks(batch) {
        let results: Vec<Result<R>> = pool.install(|| chunk.par_iter().map(&f).collect());
        for r in results {
            sink(done, r?)?;
            done += 1;
        }
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn parallel_ordered<T, R, F, S>(_jobs: usize, items: &[T], f: F, sink: &mut S) -> Result<()>
where
    F: Fn(&T) -> Result<R>,
    S: FnMut(usize, R) -> Result<()>,
{
    for (i, item) in items.iter().enumerate() {
        sink(i, f(item)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        for exec in [Execution::Sequential, Execution::Parallel { jobs: 3 }] {
            let out = map_collect(exec, &items, |&x| Ok(x * x)).unwrap();
            assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn errors_propagate() {
        let items = [1, 2, 3];
        let r = map_collect(Execution::Parallel { jobs: 2 }, &items, |&x| {
            if x == 2 {
                Err(crate::Error::EmptyStream)
            } else {
                Ok(x)
            }
        });
        assert!(r.is_err());
    }
}

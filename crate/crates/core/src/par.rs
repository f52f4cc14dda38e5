//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) independent work items can be spread
//! across the rayon pool. Every helper returns results in index order, so the
//! two execution modes produce bit-identical output.

/// How independent work items are scheduled.
/// The default is `Parallel` when the `parallel` feature is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Exec {
    /// All modes compiled into this build.
    pub fn available() -> &'static [Exec] {
        #[cfg(feature = "parallel")]
        {
            &[Exec::Sequential, Exec::Parallel]
        }
        #[cfg(not(feature = "parallel"))]
        {
            &[Exec::Sequential]
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Exec::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Exec::Parallel => "parallel",
        }
    }

    /// Evaluates `f(0..n)` and collects the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
        }
    }

    /// Fills `out[i] = f(i)` for every slot.
    pub fn fill<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            }
        }
    }
}

/// Runs `f` inside a dedicated pool of `workers` threads when requested.
///
/// `workers == 0` uses the global pool. Without the `parallel` feature the
/// closure is simply called.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let expected: Vec<u64> = (0..1000u64).map(|i| i * i).collect();
        for &mode in Exec::available() {
            assert_eq!(mode.map(1000, |i| (i as u64) * (i as u64)), expected);
            let mut buf = vec![0u64; 1000];
            mode.fill(&mut buf, |i| (i as u64) * (i as u64));
            assert_eq!(buf, expected);
        }
    }
}

//! Index-range map/reduce with a rayon backend and a sequential fallback.
//!
//! Every sweep in the crate (cylinder-intersection enumeration, determinacy
//! masks, greedy restarts) is phrased as a fold over a `u64` index range
//! followed by an associative combine. Combiners used by callers break ties
//! on the index, so results never depend on scheduling.

use std::ops::Range;

/// How a sweep is executed. `Parallel` degrades to `Sequential` when the
/// crate is built without the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Folds `step` over `range`, then merges partial accumulators with
/// `combine`. `scratch` builds per-worker working memory.
pub fn fold_range<S, A, FS, FI, FStep, FC>(
    exec: Execution,
    range: Range<u64>,
    scratch: FS,
    identity: FI,
    step: FStep,
    combine: FC,
) -> A
where
    A: Send,
    S: Send,
    FS: Fn() -> S + Sync + Send,
    FI: Fn() -> A + Sync + Send,
    FStep: Fn(A, &mut S, u64) -> A + Sync + Send,
    FC: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return range
            .into_par_iter()
            .fold(
                || (scratch(), identity()),
                |(mut s, acc), i| {
                    let acc = step(acc, &mut s, i);
                    (s, acc)
                },
            )
            .map(|(_, acc)| acc)
            .reduce(&identity, &combine);
    }
    let _ = exec;
    let mut s = scratch();
    let mut acc = identity();
    for i in range {
        acc = step(acc, &mut s, i);
    }
    let _ = &combine;
    acc
}

/// The maximal value produced by `eval` over `range`; ties go to the
/// smallest index.
pub fn best_in_range<S, T, FS, FE>(
    exec: Execution,
    range: Range<u64>,
    scratch: FS,
    eval: FE,
) -> Option<(u64, T)>
where
    T: PartialOrd + Send,
    S: Send,
    FS: Fn() -> S + Sync + Send,
    FE: Fn(&mut S, u64) -> Option<T> + Sync + Send,
{
    fold_range(
        exec,
        range,
        scratch,
        || None,
        |acc, s, i| match eval(s, i) {
            Some(v) => pick_best(acc, Some((i, v))),
            None => acc,
        },
        pick_best,
    )
}

fn pick_best<T: PartialOrd>(a: Option<(u64, T)>, b: Option<(u64, T)>) -> Option<(u64, T)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            let b_wins = b.1 > a.1 || (b.1 == a.1 && b.0 < a.0);
            Some(if b_wins { b } else { a })
        }
    }
}

/// `true` iff `pred` holds at every index.
pub fn all_in_range<F>(exec: Execution, range: Range<u64>, pred: F) -> bool
where
    F: Fn(u64) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return range.into_par_iter().all(pred);
    }
    let _ = exec;
    range.into_iter().all(pred)
}

/// Maps `f` over `0..n` and collects in index order.
pub fn map_indices<T, F>(exec: Execution, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

//! Data-parallel helpers. With the `parallel` feature these run on the
//! current rayon pool; without it they are plain sequential loops.
//! Each index writes its own output slot, so results do not depend on the
//! schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::Result;

/// Minimum chunk handed to one worker.
pub(crate) const CHUNK: usize = 256;

/// Call `f(offset, chunk)` over disjoint chunks of `data`.
pub(crate) fn try_for_each_chunk<T, F>(data: &mut [T], chunk: usize, f: F) -> Result<()>
where
    T: Send,
    F: Fn(usize, &mut [T]) -> Result<()> + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .try_for_each(|(i, c)| f(i * chunk, c))
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk)
            .enumerate()
            .try_for_each(|(i, c)| f(i * chunk, c))
    }
}

/// `(0..len).map(f).collect()`, in parallel when enabled.
pub(crate) fn try_map<T, F>(len: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

//! Allocation-counting global allocator.
//!
//! Install it in a binary or test target with
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: s4::alloc::CountingAllocator = s4::alloc::CountingAllocator;
//! ```
//!
//! Counters are process-wide, so measurements are only meaningful while no
//! other thread allocates.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static TOTAL: AtomicUsize = AtomicUsize::new(0);

/// [`System`] wrapped with live, peak and cumulative byte counters.
pub struct CountingAllocator;

fn grow(bytes: usize) {
    let now = CURRENT.fetch_add(bytes, Ordering::Relaxed) + bytes;
    PEAK.fetch_max(now, Ordering::Relaxed);
    TOTAL.fetch_add(bytes, Ordering::Relaxed);
}

fn shrink(bytes: usize) {
    CURRENT.fetch_sub(bytes, Ordering::Relaxed);
}

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            grow(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            grow(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        shrink(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            shrink(layout.size());
            grow(new_size);
        }
        p
    }
}

/// Byte counts observed around one closure call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AllocStats {
    /// Peak live bytes above the level at entry.
    pub peak_aux_bytes: usize,
    /// Bytes allocated in total during the call.
    pub total_bytes: usize,
}

/// Whether [`CountingAllocator`] is the active global allocator.
pub fn installed() -> bool {
    let before = TOTAL.load(Ordering::Relaxed);
    let probe = std::hint::black_box(Box::new(0u64));
    drop(probe);
    TOTAL.load(Ordering::Relaxed) != before
}

pub fn current_bytes() -> usize {
    CURRENT.load(Ordering::Relaxed)
}

/// Run `f` and report its auxiliary allocation. Returns zeros when the
/// counting allocator is not installed.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, AllocStats) {
    let base = CURRENT.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    let total = TOTAL.load(Ordering::Relaxed);
    let out = f();
    let stats = AllocStats {
        peak_aux_bytes: PEAK.load(Ordering::Relaxed).saturating_sub(base),
        total_bytes: TOTAL.load(Ordering::Relaxed) - total,
    };
    (out, stats)
}

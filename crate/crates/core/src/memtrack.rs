//! Heap accounting for the memory benchmarks.
//!
//! [`TrackingAllocator`] wraps the system allocator and keeps a process-wide
//! live-bytes counter with a resettable high-watermark, plus a per-thread
//! count of bytes requested. Binaries opt in with
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: tsweave::memtrack::TrackingAllocator = tsweave::memtrack::TrackingAllocator;
//! ```

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static INSTALLED: AtomicBool = AtomicBool::new(false);

thread_local! {
    static THREAD_REQUESTED: Cell<u64> = const { Cell::new(0) };
}

pub struct TrackingAllocator;

#[inline]
fn on_alloc(size: usize) {
    let live = LIVE.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(live, Ordering::Relaxed);
    // try_with: the slot is gone during thread teardown.
    let _ = THREAD_REQUESTED.try_with(|c| c.set(c.get() + size as u64));
}

#[inline]
fn on_dealloc(size: usize) {
    LIVE.fetch_sub(size, Ordering::Relaxed);
}

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            INSTALLED.store(true, Ordering::Relaxed);
            on_alloc(layout.size());
        }
        ptr
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc_zeroed(layout);
        if !ptr.is_null() {
            INSTALLED.store(true, Ordering::Relaxed);
            on_alloc(layout.size());
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        on_dealloc(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let new = System.realloc(ptr, layout, new_size);
        if !new.is_null() {
            on_dealloc(layout.size());
            on_alloc(new_size);
        }
        new
    }
}

/// Whether [`TrackingAllocator`] is the global allocator of this process.
pub fn is_installed() -> bool {
    let probe = std::hint::black_box(Box::new(0u64));
    drop(probe);
    INSTALLED.load(Ordering::Relaxed)
}

/// Live heap bytes across all threads.
pub fn live_bytes() -> usize {
    LIVE.load(Ordering::Relaxed)
}

/// Highest live-bytes value since the last [`reset_peak`].
pub fn peak_bytes() -> usize {
    PEAK.load(Ordering::Relaxed)
}

/// Restarts the high-watermark at the current live size.
pub fn reset_peak() {
    PEAK.store(LIVE.load(Ordering::Relaxed), Ordering::Relaxed);
}

/// Counts bytes requested by the current thread from `start` onward.
pub struct AllocScope {
    start: u64,
}

impl AllocScope {
    pub fn start() -> Self {
        AllocScope {
            start: THREAD_REQUESTED.with(Cell::get),
        }
    }

    pub fn allocated_bytes(&self) -> u64 {
        THREAD_REQUESTED.with(Cell::get) - self.start
    }
}

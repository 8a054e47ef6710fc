//! Peak heap usage of a single DTW evaluation, measured with a counting
//! allocator. Kept in its own test binary so no other test allocates
//! concurrently.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use infoeff::similarity::dtw_distance;

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let live = LIVE.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
        PEAK.fetch_max(live, Ordering::SeqCst);
        unsafe { System.alloc(layout) }
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        LIVE.fetch_sub(layout.size(), Ordering::SeqCst);
        unsafe { System.dealloc(ptr, layout) }
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

#[test]
fn ten_thousand_by_ten_thousand_uses_linear_memory() {
    let n = 10_000;
    let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.013).sin()).collect();
    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.011).cos()).collect();

    let before = LIVE.load(Ordering::SeqCst);
    PEAK.store(before, Ordering::SeqCst);
    let d = dtw_distance(&a, &b).unwrap();
    let extra = PEAK.load(Ordering::SeqCst) - before;

    assert!(d.is_finite() && d > 0.0);
    // A full cost matrix would need n² · 8 bytes = 800 MB.
    let budget = 4 * n * std::mem::size_of::<f64>();
    assert!(extra <= budget, "DTW allocated {extra} bytes, budget {budget}");
}

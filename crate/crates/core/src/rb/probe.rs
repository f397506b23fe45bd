//! Thread-local instrumentation of the online path.
//!
//! Online routines report the length of every buffer they allocate and any
//! read of the full-order basis. Tests wrap a call in [`probe`] and check
//! that nothing of full-order size was touched.

use std::cell::Cell;

thread_local! {
    static ACTIVE: Cell<bool> = const { Cell::new(false) };
    static MAX_ALLOC: Cell<usize> = const { Cell::new(0) };
    static ALLOCS: Cell<usize> = const { Cell::new(0) };
    static BASIS_READS: Cell<usize> = const { Cell::new(0) };
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProbeReport {
    /// Largest single buffer length (in `f64`s) allocated.
    pub max_alloc: usize,
    pub allocations: usize,
    /// Reads of full-order basis vectors.
    pub basis_reads: usize,
}

#[inline]
pub(crate) fn alloc(len: usize) {
    if ACTIVE.with(Cell::get) {
        MAX_ALLOC.with(|m| m.set(m.get().max(len)));
        ALLOCS.with(|a| a.set(a.get() + 1));
    }
}

#[inline]
pub(crate) fn basis_read() {
    if ACTIVE.with(Cell::get) {
        BASIS_READS.with(|b| b.set(b.get() + 1));
    }
}

/// Runs `f` on the current thread with the counters reset.
pub fn probe<R>(f: impl FnOnce() -> R) -> (R, ProbeReport) {
    MAX_ALLOC.with(|m| m.set(0));
    ALLOCS.with(|a| a.set(0));
    BASIS_READS.with(|b| b.set(0));
    let was = ACTIVE.with(|a| a.replace(true));
    let out = f();
    ACTIVE.with(|a| a.set(was));
    let report = ProbeReport {
        max_alloc: MAX_ALLOC.with(Cell::get),
        allocations: ALLOCS.with(Cell::get),
        basis_reads: BASIS_READS.with(Cell::get),
    };
    (out, report)
}

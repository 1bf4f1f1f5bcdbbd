//! Command-line harness.

/// Entry point for the `vsr` binary. Returns the process exit code:
/// 0 success, 1 invariant/test failure, 2 usage or input error.
pub fn run() -> i32 {
    0
}

//! Evaluation against ground truth: statistics, frame records, run reports
//! and runtime benchmarks.

mod bench;
mod records;
mod report;
mod stats;

pub use bench::{bench, bench_csv, BenchRow};
pub use records::{frame_records, read_recording, write_recording, Record, Recording, FRAME_SCHEMA_VERSION};
pub use report::{
    match_target, match_track, run_frames, run_scenario, ClusterTrace, ExtentSample, FrameTrace, RunOptions, RunOutput, RunReport,
    TimingSummary, TrackingSummary, ALGORITHMS, REPORT_SCHEMA_VERSION,
};
pub use stats::{error_stats, speed_error_stats, speed_errors, SpeedErrorStats};

//! Free-boundary diagnostics computed from a [`SolveTrace`](crate::mol::SolveTrace).

mod edge;
mod exponent;
mod level_set;
mod waiting;

pub use edge::{detect_support_edge, resolve_threshold, DEFAULT_ABS_FLOOR, DEFAULT_REL_THRESHOLD};
pub use exponent::{local_exponent, local_exponent_refined, ExponentFit, ExponentWindow};
pub use level_set::{
    edge_track, track_level_set, write_level_tracks_csv, LevelSetTracks, LevelTrack, TrackMethod,
    TrackTermination,
};
pub use waiting::{richardson_extrapolate, waiting_time, Richardson, WaitingTimeReport};

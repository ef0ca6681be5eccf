//! Multi-scale dense trajectories.

pub mod flow;
pub mod pyramid;
pub mod tracker;

pub use flow::{compute_flow, FileFlow, FlowConfig, FlowEstimator, FlowField, FlowRequest, PyramidalLk, Stream};
pub use pyramid::{build_pyramid, level_sizes, Pyramid, DEFAULT_FACTOR, DEFAULT_LEVELS, MIN_LEVEL};
pub use tracker::{
    match_trajectories, prune, sample_points, TrackConfig, Tracker, Trajectory, TrajectoryMatch, TRAJECTORY_LEN,
};

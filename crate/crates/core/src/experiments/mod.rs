//! Benchmark generators, noise injection and the ensemble experiment driver.

mod config;
mod metrics;
mod noise;
mod runner;
mod systems;

pub use config::{ExperimentConfig, FbfSettings, Method, SystemKind, CONFIG_KEYS};
pub use metrics::{mean_std, ErrorNorm};
pub use noise::{add_noise, signal_power, symmetric_stable, NoiseFamily, NoiseSpec, NoisySignal};
pub use runner::{
    arm_ssm, noise_label, run_experiment, run_trial, train_filter, trial_data, trial_seed, ExperimentOutcome,
    MethodSummary, ResultRecord, Segment, TrialData, TrialFailure, MG_WASHOUT,
};
pub use systems::{
    arm_forward_vec, arm_random_start, arm_trajectory, ikeda, ikeda_map, mackey_glass, robot_arm_forward,
    robot_arm_jacobian, ARM_ALPHA1_RANGE, ARM_ALPHA2_RANGE, ARM_MEAS_VAR, ARM_R1, ARM_R2, ARM_WALK_STD, MG_SUBSTEPS,
};

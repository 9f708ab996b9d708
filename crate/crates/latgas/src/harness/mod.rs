//! Nucleation experiment harness: plans a grid of inverse temperatures,
//! runs seeded replicas from equilibrated subcritical starts, detects and
//! classifies the first exit from the subcritical set, checks the
//! growth-tube chain, and fits the exit-time scaling across temperatures.

pub mod classify;
pub mod histories;
pub mod plan;
pub mod records;
pub mod run;
pub mod scaling;
pub mod tube;

pub use classify::{classify_exit, find_exit, ExitEvent, ExitMode};
pub use histories::{
    cloud_histories, CensusOptions, CloudCensus, CloudHistory, CloudOutcome, EpochRecord,
};
pub use plan::{ExperimentPlan, PlanPoint};
pub use records::{
    read_records_csv, records_from_str, records_to_string, write_records_csv, NucleationRecord,
};
pub use run::{read_study, run_study, run_study_with, write_study, StudyOutput, StudySummary};
pub use scaling::{fit_scaling, BetaSummary, ScalingFit, ScalingReport, TubeRates};
pub use tube::{detect_tube, evaluate_chain, ChainVerdict, TubeReport};

//! Droplet geometry observables: clusters and their circumscribed
//! rectangles and quasi-square labels, free/trapped/clusterised particle
//! classification with sleeping-particle bookkeeping, subcritical-set
//! membership, thickened neighbourhoods, and the cloud aggregation map.

pub mod cluster;
pub mod clouds;
pub mod freeness;

pub use cluster::{
    circumscribed_rectangle, clusterise, in_r, in_rprime, in_rprime_with_bound, Cluster, Clusters,
    Rectangle,
};
pub use clouds::{
    active_box_diagnostic, active_box_side, aggregate_clouds, cloud_schedule, thicken,
    union_rectangle, ActiveBoxReport, CloudSet,
};
pub use freeness::{free_particles, FreeStatus, FreenessReport, SleepState};

//! The memory layer: lobe measurements, retrieval experiments and capacity.

pub mod capacity;
pub mod povm;
pub mod retrieval;

pub use capacity::{capacity_curve, effective_dimension, lobe_fidelity, max_capacity, CapacityPoint};
pub use povm::{
    ambiguous_povm_numerical, ambiguous_povm_theoretical, classify, mean_element_distance, unambiguous_povm, Povm,
    PovmKind,
};
pub use retrieval::{retrieval_experiment, RetrievalExperiment, RetrievalOptions, RetrievalSummary, Strategy};

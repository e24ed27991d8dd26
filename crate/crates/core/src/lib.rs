//! Exact invariants and witnesses for the coarse classification of
//! countable locally finite groups and their uniform Roe algebras.

pub mod arith;
pub mod blockspace;
pub mod equivalence;
pub mod error;
pub mod ktheory;
pub mod roeops;
pub mod supernatural;

pub use error::{Error, Result};
pub use supernatural::{
    bijectively_coarsely_equivalent, coarsely_equivalent, obstruction_between, obstruction_witness,
    sn_divides, sn_equal, supernatural_of_tower, tower_order, Exponent, Obstruction,
    SupernaturalNumber, Tower,
};
pub use blockspace::{
    asdim_zero_profile, embed_into_nonneg_integers, r_components, BlockSpace, Embedding,
    FiniteMetricSpace, Partition,
};
pub use equivalence::{
    build_back_and_forth, interleave_towers, verify_bijective_coarse_equivalence, BackAndForth,
    Interleaving, TowerBijection, VerificationReport,
};
pub use ktheory::{
    alpha_iterate, h_membership, k0_add, k0_equal, k0_groups_abstractly_iso, k0_iso_exists,
    k0_neg, k0_positive, k0_scale, k0_sub, k0_unit, k0_zero, transport_class, unit_divide,
    FiniteK0, K0Class, PeriodicSeq, Positivity,
};
pub use roeops::{
    alpha_step, block_decompose, conjugate_by_bijection, connecting_map, k0_class_of,
    mvn_partial_isometry, recompose, trace_vector, BlockTuple, Matrix, PropagationOperator,
};

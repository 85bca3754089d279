//! Thermodynamic-formalism quantities for polynomial interval maps.
//!
//! The crate computes tree pressure and Birkhoff sums, builds Ulam
//! discretizations of weighted transfer operators, checks iterated
//! multivalued function systems of inverse branches, and tests the
//! periodic-orbit gap inequality through an induced horseshoe.
//!
//! ```
//! use thermoform::{IntervalMap, Potential, tree_pressure_series};
//!
//! let map = IntervalMap::chebyshev2();
//! let series = tree_pressure_series(&map, &Potential::zero(), 0.75, 10).unwrap();
//! assert!((series.tail_max - std::f64::consts::LN_2).abs() < 1e-12);
//! ```

pub mod error;
pub mod imfs;
pub mod interval;
pub mod interval_map;
pub mod periodic;
pub mod poly;
pub mod potential;
pub mod pressure;
pub mod sum;
pub mod transfer;

pub use error::{Error, Result};
pub use imfs::{key_lemma_check, BranchBoundReport, Imfs, ImfsBranch, KeyLemmaEntry, Word};
pub use interval::Interval;
pub use interval_map::{parse_map, IntervalMap, MonotoneBranch, PeriodicOrbit, PreimageSet};
pub use periodic::{
    horseshoe_certificate, induced_gap_series, periodic_gap_check, repelling_orbits,
    HorseshoeCertificate, InducedGapReport, PeriodicGapReport, RepellingOrbit,
};
pub use potential::{birkhoff_sum, parse_potential, Holder, Potential};
pub use pressure::{
    hyperbolicity_report, sup_birkhoff_average, sup_invariant_average, tree_pressure_series,
    HyperbolicityParams, HyperbolicityReport, SupAverage, TreePressureSeries, Verdict,
};
pub use transfer::{
    equilibrium_estimate, equilibrium_report, equilibrium_with_measure, leading_eigendata,
    ulam_operator, EigenParams, Eigendata, EquilibriumReport, MeasureEstimate, UlamOperator,
};

//! Numerical laboratory for metric heat flows on model bundles over flat
//! complex tori: Donaldson flow on the metric, the gauge-equivalent
//! Yang-Mills flow on the unitary connection, and the spectral bookkeeping
//! (Harder-Narasimhan data, energy functionals, dominance of limit spectra)
//! that the two flows are supposed to agree on.

pub mod bundle;
pub mod config;
pub mod filtration;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod theta;

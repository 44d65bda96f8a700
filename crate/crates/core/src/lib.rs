//! Synthetic tool-use trajectories for agent training.
//!
//! Query templates are filled into concrete instances with precomputed
//! answers ([`query_gen`]), agents act in a sandbox of mock tools that
//! reports layered errors ([`env`], [`tools`]), and finished episodes are
//! filtered and exported as chat data ([`trajectory`]). [`agents`] holds the
//! policies and the collection loop; [`analysis`] the error statistics.

pub mod agents;
pub mod analysis;
pub mod env;
pub mod query_gen;
pub mod seed;
pub mod tools;
pub mod trajectory;

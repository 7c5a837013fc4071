//! Linguistic style entrainment for multi-party conversations, team
//! composition and outcome scores, and the statistics that relate them.

pub mod entrainment;
pub mod lexicon;
pub mod outcomes;
pub mod pipeline;
pub mod stats;
pub mod team_profile;
pub mod transcript;

//! Reasoning-based control override for autonomous vehicles whose camera
//! perception contains masked regions.

pub mod backend;
pub mod bundle;
pub mod camera;
pub mod controlmap;
pub mod domain;
pub mod episode;
pub mod metrics;
pub mod orchestrator;
pub mod planner;
pub mod prompt;
pub mod safety;
pub mod simenv;
pub mod verifier;

//! Fixed-step deterministic simulation engine.

mod config;
mod integrate;
mod perturbation;
mod tone;
mod trace;

pub use config::SimConfig;
pub use integrate::integrate_step;
pub use perturbation::{inject_perturbation, PerturbationSource};
pub use tone::{extract_tone, Tone};
pub use trace::Trace;

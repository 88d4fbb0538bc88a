//! Two-speaker mixtures with attribute-contrast prompts.

pub mod attributes;
pub mod audio;
pub mod corpus;
pub mod cues;
pub mod error;
pub mod fixture;
pub mod mixer;
pub mod pipeline;
pub mod prompts;
pub mod rng;
pub mod room;

pub use error::{Error, Result};

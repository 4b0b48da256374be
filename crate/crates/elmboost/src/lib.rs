//! Dataset files, model persistence and the experiment CLI around
//! [`elmboost_core`].

pub mod cli;
pub mod data;
pub mod hashsim;
pub mod idx;
pub mod model_store;

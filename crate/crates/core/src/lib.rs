pub mod engine;
pub mod error;
pub mod layout;
pub mod manager;
pub mod model;
pub mod policy;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};

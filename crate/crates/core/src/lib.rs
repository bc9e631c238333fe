pub mod assets;
pub mod calibrate;
pub mod church;
pub mod harness;
pub mod rsa;
pub mod scorer;
pub mod stats;
mod util;

pub use util::{derive_seed, sha256_hex};

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ao;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mc;
pub mod metrics;
pub mod model;
pub mod pgam;
pub mod radar;
pub mod star_ris;

pub use error::{Error, Result};

/// Generator for stream `stream` of master seed `master`. Streams are
/// independent, so parallel work can draw from them in any order.
pub fn stream_rng(master: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

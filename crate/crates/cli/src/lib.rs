//! Host library behind the `redoubt` executable: guest loading and running,
//! with the attestation and benchmark verbs wired in `main`.

pub mod host;

pub use host::{GuestInstance, Host, HostConfig, HostError, RunOutcome, HOST_SURFACE, WASI_MODULE};

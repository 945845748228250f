//! Capability-based system-interface layer.
//!
//! Everything a guest can do is gated by the [`Policy`]: path operations are
//! confined to preopened subtrees, sockets to allowlisted CIDRs (or to named
//! endpoints in application-protocol-only mode), and every call identifier
//! can be switched off outright. Denials are decided on the trusted side and
//! perform no boundary crossings, so a disabled call leaks nothing either.
//!
//! File descriptors opened through here are protected files: content crossing
//! to the host is sealed by `fs`, never plaintext.

pub mod clock;
pub mod net;
pub mod path;
pub mod policy;

use std::net::{IpAddr, TcpStream};
use std::path::Path;
use std::sync::Arc;

use rand::rngs::OsRng;
use rand::RngCore;
use thiserror::Error;

use crate::boundary::Boundary;
use crate::fs::{FsError, OpenMode, OpenOptions, ProtectedFile};

pub use clock::{MonotonicClock, SystemTimeSource, TimeSource};
pub use net::Cidr;
pub use path::{Resolved, ResolveMode};
pub use policy::{CallId, Policy, PolicyBuilder, Preopen};

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("denied by policy: {0}")]
    PolicyDenied(&'static str),
    #[error("path not found")]
    NotFound,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("connection failed: {0}")]
    Connection(std::io::Error),
    #[error(transparent)]
    Fs(#[from] FsError),
}

/// One guest's system-interface instance: immutable policy, hardened clock
/// state, and the boundary everything is accounted against.
pub struct Sandbox {
    policy: Policy,
    boundary: Arc<Boundary>,
    clock: MonotonicClock,
    time_source: Box<dyn TimeSource>,
}

impl Sandbox {
    pub fn new(policy: Policy, boundary: Arc<Boundary>) -> Self {
        Self::with_time_source(policy, boundary, Box::new(SystemTimeSource))
    }

    pub fn with_time_source(
        policy: Policy,
        boundary: Arc<Boundary>,
        time_source: Box<dyn TimeSource>,
    ) -> Self {
        Self {
            policy,
            boundary,
            clock: MonotonicClock::new(),
            time_source,
        }
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn boundary(&self) -> &Arc<Boundary> {
        &self.boundary
    }

    /// The call gate: disabled calls are denied deterministically, before any
    /// side effect or crossing.
    pub fn gate(&self, call: CallId) -> Result<(), SandboxError> {
        if self.policy.is_enabled(call) {
            Ok(())
        } else {
            Err(SandboxError::PolicyDenied("call disabled by policy"))
        }
    }

    /// Gate by raw name, for surfaces that dispatch on strings. Unknown names
    /// are denied, not errors: the id space outside the known set is dead.
    pub fn gate_name(&self, name: &str) -> Result<CallId, SandboxError> {
        let call = CallId::from_name(name)
            .ok_or(SandboxError::PolicyDenied("unknown call identifier"))?;
        self.gate(call)?;
        Ok(call)
    }

    /// Resolves a guest path under a preopen, yielding the confined host path
    /// and the canonical file identity `"<preopen>:<relative>"` that keys the
    /// file-store root-key derivation.
    pub fn path_resolve(
        &self,
        preopen_name: &str,
        relative: &str,
        mode: ResolveMode,
    ) -> Result<(Resolved, String), SandboxError> {
        let preopen = self
            .policy
            .preopen(preopen_name)
            .ok_or(SandboxError::PolicyDenied("unknown preopen"))?;
        let resolved = path::resolve_under_root(Path::new(&preopen.host_dir), relative, mode)?;
        let file_id = format!("{}:{}", preopen.name, resolved.relative);
        Ok((resolved, file_id))
    }

    /// Opens a protected file through the sandbox: `path_open` gate, subtree
    /// confinement, then the encrypted store.
    pub fn open_protected(
        &self,
        preopen_name: &str,
        relative: &str,
        mode: OpenMode,
        options: OpenOptions,
    ) -> Result<ProtectedFile, SandboxError> {
        self.gate(CallId::PathOpen)?;
        let resolve_mode = match mode {
            OpenMode::CreateTruncate => ResolveMode::AllowCreate,
            _ => ResolveMode::MustExist,
        };
        let (resolved, file_id) = self.path_resolve(preopen_name, relative, resolve_mode)?;
        let file = ProtectedFile::open(
            Arc::clone(&self.boundary),
            &resolved.host_path,
            &file_id,
            mode,
            options,
        )?;
        Ok(file)
    }

    /// Hardened monotonic time: one counted crossing per read, strictly
    /// increasing results regardless of the source.
    pub fn clock_monotonic(&mut self) -> u64 {
        self.boundary.host_call(8);
        self.clock.next(self.time_source.as_mut())
    }

    /// Host CSPRNG draw through one counted crossing.
    pub fn random_get(&self, n: usize) -> Vec<u8> {
        self.boundary.host_call(n as u64);
        let mut buf = vec![0u8; n];
        OsRng.fill_bytes(&mut buf);
        buf
    }

    /// Gated outbound connect; see [`net::sock_connect`].
    pub fn sock_connect(&self, ip: IpAddr, port: u16) -> Result<TcpStream, SandboxError> {
        net::sock_connect(&self.policy, &self.boundary, ip, port)
    }
}

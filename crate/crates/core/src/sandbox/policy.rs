//! Security policy: what the guest may touch.
//!
//! A policy is loaded from a TOML file (grammar below) and hashed over a
//! canonical byte encoding, so two files that express the same policy with
//! lists in different orders produce the same hash. The hash feeds the
//! runtime measurement and thereby the file-store key derivation.
//!
//! ```toml
//! memory_budget = 4194304          # bytes; guest memory may never grow past it
//! app_protocol_only = false        # deny raw connects except allowlisted endpoints
//! allowed_cidrs = ["127.0.0.0/8", "10.0.0.0/8", "::1/128"]
//! enabled_calls = ["fd_read", "fd_write", "path_open"]
//!
//! [[preopen]]
//! name = "data"                    # guest-visible root name
//! host_dir = "/srv/guest-data"     # confining host directory
//!
//! [[endpoint]]                     # used only in app_protocol_only mode
//! host = "10.0.0.7"
//! port = 443
//! ```
//!
//! Canonical encoding (all integers little-endian, strings length-prefixed
//! with u64): magic `RDBTPOL1`, version u16, preopens sorted by name, CIDRs
//! sorted by (family, address, prefix length), call ids sorted numerically,
//! memory budget u64, app-protocol flag u8, endpoints sorted by (host, port).

use std::collections::BTreeSet;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::net::Cidr;
use super::SandboxError;

/// Identifies one guest-callable host function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u32)]
pub enum CallId {
    ArgsGet = 1,
    ArgsSizesGet = 2,
    EnvironGet = 3,
    EnvironSizesGet = 4,
    ClockTimeGet = 5,
    FdClose = 6,
    FdFilestatGet = 7,
    FdRead = 8,
    FdSeek = 9,
    FdWrite = 10,
    PathOpen = 11,
    ProcExit = 12,
    RandomGet = 13,
    SockConnect = 14,
}

impl CallId {
    pub const ALL: [CallId; 14] = [
        CallId::ArgsGet,
        CallId::ArgsSizesGet,
        CallId::EnvironGet,
        CallId::EnvironSizesGet,
        CallId::ClockTimeGet,
        CallId::FdClose,
        CallId::FdFilestatGet,
        CallId::FdRead,
        CallId::FdSeek,
        CallId::FdWrite,
        CallId::PathOpen,
        CallId::ProcExit,
        CallId::RandomGet,
        CallId::SockConnect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CallId::ArgsGet => "args_get",
            CallId::ArgsSizesGet => "args_sizes_get",
            CallId::EnvironGet => "environ_get",
            CallId::EnvironSizesGet => "environ_sizes_get",
            CallId::ClockTimeGet => "clock_time_get",
            CallId::FdClose => "fd_close",
            CallId::FdFilestatGet => "fd_filestat_get",
            CallId::FdRead => "fd_read",
            CallId::FdSeek => "fd_seek",
            CallId::FdWrite => "fd_write",
            CallId::PathOpen => "path_open",
            CallId::ProcExit => "proc_exit",
            CallId::RandomGet => "random_get",
            CallId::SockConnect => "sock_connect",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preopen {
    pub name: String,
    pub host_dir: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub host: String,
    pub port: u16,
}

/// Immutable capability set for one guest instance.
#[derive(Debug, Clone)]
pub struct Policy {
    preopens: Vec<Preopen>,
    allowed_cidrs: Vec<Cidr>,
    enabled_calls: BTreeSet<CallId>,
    memory_budget: u64,
    app_protocol_only: bool,
    allowed_endpoints: Vec<Endpoint>,
}

#[derive(Deserialize)]
struct RawPolicy {
    #[serde(default)]
    preopen: Vec<RawPreopen>,
    #[serde(default)]
    allowed_cidrs: Vec<String>,
    #[serde(default)]
    enabled_calls: Vec<String>,
    memory_budget: u64,
    #[serde(default)]
    app_protocol_only: bool,
    #[serde(default)]
    endpoint: Vec<RawEndpoint>,
}

#[derive(Deserialize)]
struct RawPreopen {
    name: String,
    host_dir: String,
}

#[derive(Deserialize)]
struct RawEndpoint {
    host: String,
    port: u16,
}

impl Policy {
    pub fn builder(memory_budget: u64) -> PolicyBuilder {
        PolicyBuilder {
            policy: Policy {
                preopens: Vec::new(),
                allowed_cidrs: Vec::new(),
                enabled_calls: BTreeSet::new(),
                memory_budget,
                app_protocol_only: false,
                allowed_endpoints: Vec::new(),
            },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SandboxError> {
        let raw: RawPolicy =
            toml::from_str(text).map_err(|e| SandboxError::InvalidPolicy(e.to_string()))?;
        let mut b = Policy::builder(raw.memory_budget);
        for p in raw.preopen {
            b = b.preopen(&p.name, &p.host_dir);
        }
        for c in raw.allowed_cidrs {
            let cidr: Cidr = c
                .parse()
                .map_err(|e: String| SandboxError::InvalidPolicy(e))?;
            b = b.allow_cidr(cidr);
        }
        for name in raw.enabled_calls {
            let call = CallId::from_name(&name)
                .ok_or_else(|| SandboxError::InvalidPolicy(format!("unknown call: {name}")))?;
            b = b.enable(call);
        }
        if raw.app_protocol_only {
            b = b.app_protocol_only(true);
        }
        for e in raw.endpoint {
            b = b.allow_endpoint(&e.host, e.port);
        }
        Ok(b.build())
    }

    pub fn preopens(&self) -> &[Preopen] {
        &self.preopens
    }

    pub fn preopen(&self, name: &str) -> Option<&Preopen> {
        self.preopens.iter().find(|p| p.name == name)
    }

    pub fn allowed_cidrs(&self) -> &[Cidr] {
        &self.allowed_cidrs
    }

    pub fn is_enabled(&self, call: CallId) -> bool {
        self.enabled_calls.contains(&call)
    }

    pub fn enabled_calls(&self) -> impl Iterator<Item = CallId> + '_ {
        self.enabled_calls.iter().copied()
    }

    pub fn memory_budget(&self) -> u64 {
        self.memory_budget
    }

    /// The same policy with a different memory budget. The hash changes with
    /// it: the effective budget is part of what gets measured.
    pub fn with_memory_budget(mut self, budget: u64) -> Self {
        self.memory_budget = budget;
        self
    }

    pub fn app_protocol_only(&self) -> bool {
        self.app_protocol_only
    }

    pub fn endpoint_allowed(&self, host: &str, port: u16) -> bool {
        self.allowed_endpoints
            .iter()
            .any(|e| e.host == host && e.port == port)
    }

    /// Canonical byte encoding; equal policies encode identically regardless
    /// of the order their lists were written in.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        fn put_str(out: &mut Vec<u8>, s: &str) {
            out.extend_from_slice(&(s.len() as u64).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        let mut out = Vec::new();
        out.extend_from_slice(b"RDBTPOL1");
        out.extend_from_slice(&1u16.to_le_bytes());

        let mut preopens = self.preopens.clone();
        preopens.sort_by(|a, b| a.name.cmp(&b.name).then(a.host_dir.cmp(&b.host_dir)));
        out.extend_from_slice(&(preopens.len() as u32).to_le_bytes());
        for p in &preopens {
            put_str(&mut out, &p.name);
            put_str(&mut out, &p.host_dir);
        }

        let mut cidrs = self.allowed_cidrs.clone();
        cidrs.sort_by_key(|c| c.sort_key());
        out.extend_from_slice(&(cidrs.len() as u32).to_le_bytes());
        for c in &cidrs {
            out.extend_from_slice(&c.canonical_bytes());
        }

        out.extend_from_slice(&(self.enabled_calls.len() as u32).to_le_bytes());
        for call in &self.enabled_calls {
            out.extend_from_slice(&(*call as u32).to_le_bytes());
        }

        out.extend_from_slice(&self.memory_budget.to_le_bytes());
        out.push(self.app_protocol_only as u8);

        let mut endpoints = self.allowed_endpoints.clone();
        endpoints.sort_by(|a, b| a.host.cmp(&b.host).then(a.port.cmp(&b.port)));
        out.extend_from_slice(&(endpoints.len() as u32).to_le_bytes());
        for e in &endpoints {
            put_str(&mut out, &e.host);
            out.extend_from_slice(&e.port.to_le_bytes());
        }
        out
    }

    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes()).into()
    }
}

pub struct PolicyBuilder {
    policy: Policy,
}

impl PolicyBuilder {
    pub fn preopen(mut self, name: &str, host_dir: &str) -> Self {
        self.policy.preopens.push(Preopen {
            name: name.to_string(),
            host_dir: host_dir.to_string(),
        });
        self
    }

    pub fn allow_cidr(mut self, cidr: Cidr) -> Self {
        self.policy.allowed_cidrs.push(cidr);
        self
    }

    pub fn enable(mut self, call: CallId) -> Self {
        self.policy.enabled_calls.insert(call);
        self
    }

    pub fn enable_all(mut self) -> Self {
        self.policy.enabled_calls.extend(CallId::ALL);
        self
    }

    pub fn app_protocol_only(mut self, on: bool) -> Self {
        self.policy.app_protocol_only = on;
        self
    }

    pub fn allow_endpoint(mut self, host: &str, port: u16) -> Self {
        self.policy.allowed_endpoints.push(Endpoint {
            host: host.to_string(),
            port,
        });
        self
    }

    pub fn build(self) -> Policy {
        self.policy
    }
}

//! Socket capability: CIDR allowlists and gated outbound connects.

use std::net::{IpAddr, SocketAddr, TcpStream};
use std::str::FromStr;
use std::time::Duration;

use super::policy::{CallId, Policy};
use super::SandboxError;
use crate::boundary::Boundary;

/// An IPv4 or IPv6 prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cidr {
    addr: IpAddr,
    prefix_len: u8,
}

impl Cidr {
    pub fn new(addr: IpAddr, prefix_len: u8) -> Result<Self, String> {
        let max = match addr {
            IpAddr::V4(_) => 32,
            IpAddr::V6(_) => 128,
        };
        if prefix_len > max {
            return Err(format!("prefix length {prefix_len} out of range for {addr}"));
        }
        Ok(Self { addr, prefix_len })
    }

    pub fn prefix_len(&self) -> u8 {
        self.prefix_len
    }

    pub fn addr(&self) -> IpAddr {
        self.addr
    }

    /// Membership by masked comparison. Families never match each other.
    pub fn contains(&self, ip: IpAddr) -> bool {
        match (self.addr, ip) {
            (IpAddr::V4(net), IpAddr::V4(ip)) => {
                let mask = if self.prefix_len == 0 {
                    0
                } else {
                    u32::MAX << (32 - self.prefix_len as u32)
                };
                u32::from(net) & mask == u32::from(ip) & mask
            }
            (IpAddr::V6(net), IpAddr::V6(ip)) => {
                let mask = if self.prefix_len == 0 {
                    0
                } else {
                    u128::MAX << (128 - self.prefix_len as u32)
                };
                u128::from(net) & mask == u128::from(ip) & mask
            }
            _ => false,
        }
    }

    pub(super) fn sort_key(&self) -> (u8, [u8; 16], u8) {
        let mut addr = [0u8; 16];
        let family = match self.addr {
            IpAddr::V4(v4) => {
                addr[..4].copy_from_slice(&v4.octets());
                4u8
            }
            IpAddr::V6(v6) => {
                addr.copy_from_slice(&v6.octets());
                6u8
            }
        };
        (family, addr, self.prefix_len)
    }

    pub(super) fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(18);
        match self.addr {
            IpAddr::V4(v4) => {
                out.push(4);
                out.push(self.prefix_len);
                out.extend_from_slice(&v4.octets());
            }
            IpAddr::V6(v6) => {
                out.push(6);
                out.push(self.prefix_len);
                out.extend_from_slice(&v6.octets());
            }
        }
        out
    }
}

impl FromStr for Cidr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = s
            .split_once('/')
            .ok_or_else(|| format!("missing '/' in CIDR: {s}"))?;
        let addr: IpAddr = addr.parse().map_err(|e| format!("bad address in {s}: {e}"))?;
        let prefix_len: u8 = len.parse().map_err(|e| format!("bad prefix in {s}: {e}"))?;
        Cidr::new(addr, prefix_len)
    }
}

impl std::fmt::Display for Cidr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.addr, self.prefix_len)
    }
}

pub fn address_allowed(policy: &Policy, ip: IpAddr) -> bool {
    policy.allowed_cidrs().iter().any(|c| c.contains(ip))
}

/// Gated outbound connect. Denials are decided entirely on the trusted side:
/// a rejected connect performs zero crossings. An allowed connect costs one
/// crossing and hands back the raw stream; TLS on top of it is the guest's
/// business.
pub fn sock_connect(
    policy: &Policy,
    boundary: &Boundary,
    ip: IpAddr,
    port: u16,
) -> Result<TcpStream, SandboxError> {
    if !policy.is_enabled(CallId::SockConnect) {
        return Err(SandboxError::PolicyDenied("sock_connect disabled"));
    }
    if policy.app_protocol_only() && !policy.endpoint_allowed(&ip.to_string(), port) {
        return Err(SandboxError::PolicyDenied(
            "raw connect outside endpoint allowlist",
        ));
    }
    if !address_allowed(policy, ip) {
        return Err(SandboxError::PolicyDenied("address outside allowed CIDRs"));
    }
    boundary.host_call(0);
    TcpStream::connect_timeout(&SocketAddr::new(ip, port), Duration::from_secs(2))
        .map_err(SandboxError::Connection)
}

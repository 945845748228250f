//! Property tests for the sandbox: path confinement under fuzzed inputs,
//! CIDR membership against a bit-by-bit oracle, clock hardening under
//! arbitrary sources.

mod common;

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use redoubt_core::sandbox::clock::{MonotonicClock, TimeSource};
use redoubt_core::sandbox::path::{resolve_under_root, ResolveMode};
use redoubt_core::sandbox::{Cidr, SandboxError};

// ------------------------------------------------------------- paths ----

fn path_fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("a/b/c")).unwrap();
    std::fs::create_dir_all(dir.path().join("d")).unwrap();
    std::fs::write(dir.path().join("a/file"), b"x").unwrap();
    std::fs::write(dir.path().join("a/b/file"), b"y").unwrap();
    std::os::unix::fs::symlink("/etc", dir.path().join("a/abs-escape")).unwrap();
    std::os::unix::fs::symlink("../../..", dir.path().join("a/b/rel-escape")).unwrap();
    std::os::unix::fs::symlink("../b", dir.path().join("a/loopback")).unwrap();
    dir
}

/// Every fuzzed path either resolves strictly under the root or is denied —
/// no third outcome.
#[test]
fn fuzzed_paths_never_escape() {
    let dir = path_fixture();
    let root = dir.path().canonicalize().unwrap();
    let mut rng = StdRng::seed_from_u64(0xF00D);
    let parts = [
        "a", "b", "c", "d", "file", "..", ".", "...", "a b", "-", "abs-escape", "rel-escape",
        "loopback", "%2e%2e", "..%2f", "x", "", "....//",
    ];
    let mut checked = 0u32;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..8);
        let path: Vec<&str> = (0..n).map(|_| parts[rng.gen_range(0..parts.len())]).collect();
        let mut candidate = path.join("/");
        if rng.gen_bool(0.1) {
            candidate.insert(0, '/');
        }
        if rng.gen_bool(0.1) {
            candidate = candidate.replace('/', "//");
        }
        for mode in [ResolveMode::MustExist, ResolveMode::AllowCreate] {
            match resolve_under_root(dir.path(), &candidate, mode) {
                Ok(resolved) => {
                    assert!(
                        resolved.host_path.starts_with(&root) && resolved.host_path != root,
                        "escape: {candidate:?} resolved to {}",
                        resolved.host_path.display()
                    );
                    checked += 1;
                }
                Err(SandboxError::PolicyDenied(_)) | Err(SandboxError::NotFound) => {}
                Err(other) => panic!("unexpected outcome for {candidate:?}: {other}"),
            }
        }
    }
    assert!(checked > 100, "fuzz corpus never resolved anything ({checked})");
}

proptest! {
    #[test]
    fn arbitrary_relative_paths_stay_confined(segments in prop::collection::vec("[a-zA-Z0-9._ -]{0,12}|\\.\\.|\\.", 1..10)) {
        let dir = path_fixture();
        let root = dir.path().canonicalize().unwrap();
        let candidate = segments.join("/");
        if let Ok(resolved) = resolve_under_root(dir.path(), &candidate, ResolveMode::AllowCreate) {
            prop_assert!(resolved.host_path.starts_with(&root));
            prop_assert!(resolved.host_path != root);
        }
    }
}

// -------------------------------------------------------------- cidr ----

/// Bit-by-bit membership oracle.
fn oracle_contains(net: IpAddr, prefix_len: u8, ip: IpAddr) -> bool {
    let bits = |a: IpAddr| -> Vec<bool> {
        match a {
            IpAddr::V4(v4) => v4
                .octets()
                .iter()
                .flat_map(|b| (0..8).rev().map(move |i| b >> i & 1 == 1))
                .collect(),
            IpAddr::V6(v6) => v6
                .octets()
                .iter()
                .flat_map(|b| (0..8).rev().map(move |i| b >> i & 1 == 1))
                .collect(),
        }
    };
    match (net, ip) {
        (IpAddr::V4(_), IpAddr::V4(_)) | (IpAddr::V6(_), IpAddr::V6(_)) => {}
        _ => return false,
    }
    let (n, i) = (bits(net), bits(ip));
    n.iter().zip(&i).take(prefix_len as usize).all(|(a, b)| a == b)
}

#[test]
fn cidr_matches_the_bitwise_oracle_on_random_and_boundary_addresses() {
    let mut rng = StdRng::seed_from_u64(0xC1D4);
    let mut cases = 0u32;
    for _ in 0..2_000 {
        let v4 = rng.gen_bool(0.5);
        let (net, prefix_len): (IpAddr, u8) = if v4 {
            (IpAddr::V4(Ipv4Addr::from(rng.gen::<u32>())), rng.gen_range(0..=32))
        } else {
            (IpAddr::V6(Ipv6Addr::from(rng.gen::<u128>())), rng.gen_range(0..=128))
        };
        let cidr = Cidr::new(net, prefix_len).unwrap();

        let mut probes: Vec<IpAddr> = Vec::new();
        for _ in 0..3 {
            probes.push(if v4 {
                IpAddr::V4(Ipv4Addr::from(rng.gen::<u32>()))
            } else {
                IpAddr::V6(Ipv6Addr::from(rng.gen::<u128>()))
            });
        }
        // prefix boundary probes: first and last address of the block, and
        // the addresses straddling it
        match net {
            IpAddr::V4(x) => {
                let base = u32::from(x);
                let host_bits = 32 - prefix_len as u32;
                let first = if host_bits == 32 { 0 } else { base >> host_bits << host_bits };
                let last = if host_bits == 32 { u32::MAX } else { first | ((1u32 << host_bits) - 1) };
                for probe in [first, last, first.wrapping_sub(1), last.wrapping_add(1)] {
                    probes.push(IpAddr::V4(Ipv4Addr::from(probe)));
                }
            }
            IpAddr::V6(x) => {
                let base = u128::from(x);
                let host_bits = 128 - prefix_len as u32;
                let first = if host_bits == 128 { 0 } else { base >> host_bits << host_bits };
                let last = if host_bits == 128 {
                    u128::MAX
                } else {
                    first | ((1u128 << host_bits) - 1)
                };
                for probe in [first, last, first.wrapping_sub(1), last.wrapping_add(1)] {
                    probes.push(IpAddr::V6(Ipv6Addr::from(probe)));
                }
            }
        }
        for ip in probes {
            assert_eq!(
                cidr.contains(ip),
                oracle_contains(net, prefix_len, ip),
                "{cidr} vs {ip}"
            );
            cases += 1;
        }
    }
    assert!(cases >= 10_000);
}

#[test]
fn documented_edge_case_10_255_255_255() {
    let cidr: Cidr = "10.0.0.0/8".parse().unwrap();
    assert!(cidr.contains("10.255.255.255".parse().unwrap()));
    assert!(!cidr.contains("11.0.0.0".parse().unwrap()));
}

// ------------------------------------------------------------- clock ----

struct Scripted(Vec<u64>, usize);

impl TimeSource for Scripted {
    fn now(&mut self) -> u64 {
        let v = self.0[self.1 % self.0.len()];
        self.1 += 1;
        v
    }
}

proptest! {
    /// For any injected source sequence, returned timestamps strictly increase.
    #[test]
    fn monotonic_clock_survives_any_source(values in prop::collection::vec(any::<u64>(), 1..200)) {
        let mut clock = MonotonicClock::new();
        let len = values.len();
        let mut src = Scripted(values, 0);
        let mut last: Option<u64> = None;
        for _ in 0..len {
            let t = clock.next(&mut src);
            if let Some(prev) = last {
                prop_assert!(t > prev, "clock regressed: {t} after {prev}");
            }
            last = Some(t);
        }
    }
}

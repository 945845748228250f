//! Simulated remote attestation: module measurement at load, a secondary
//! hash binding caller data, quote generation under a device key, and
//! verification against a trust anchor.
//!
//! A single self-signed Ed25519 key plays the device CA. Quotes use a
//! canonical fixed-width encoding (below); verification re-encodes the parsed
//! quote and requires byte equality, so there is exactly one accepted byte
//! string per quote.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "RDBTQT01"
//! 8       2     version, u16 LE = 1
//! 10      1     artifact form (0 = bytecode, 1 = AOT)
//! 11      32    runtime hash = H("redoubt/runtime-hash/v1" ‖ lp(build id) ‖ lp(policy hash))
//! 43      32    module hash  = SHA-256(module bytes)
//! 75      32    report data  = H("redoubt/report-data/v1" ‖ lp(module hash) ‖ lp(user data))
//! 107     8     timestamp, u64 LE, unix seconds
//! 115     32    signer id = SHA-256(anchor public key)
//! 147     2     signature length, u16 LE = 64
//! 149     64    Ed25519 signature over bytes 0..149
//! ```
//!
//! `lp(x)` is `len(x) as u64 LE ‖ x`. User data is limited to 64 bytes.

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const QUOTE_LEN: usize = 213;
pub const MAX_USER_DATA: usize = 64;
const QUOTE_MAGIC: [u8; 8] = *b"RDBTQT01";
const QUOTE_VERSION: u16 = 1;
const SIGNED_LEN: usize = 149;

const RUNTIME_HASH_DOMAIN: &[u8] = b"redoubt/runtime-hash/v1";
const REPORT_DATA_DOMAIN: &[u8] = b"redoubt/report-data/v1";

#[derive(Debug, Error)]
pub enum AttestError {
    #[error("malformed quote: {0}")]
    MalformedQuote(&'static str),
    #[error("user data exceeds {MAX_USER_DATA} bytes")]
    UserDataTooLong,
    #[error("bad key material: {0}")]
    BadKey(&'static str),
}

/// Hash of the exact bytes loaded as the guest module.
pub fn measure_module(module: &[u8]) -> [u8; 32] {
    Sha256::digest(module).into()
}

fn hash_lp(domain: &[u8], fields: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(domain);
    for f in fields {
        h.update((f.len() as u64).to_le_bytes());
        h.update(f);
    }
    h.finalize().into()
}

/// Measurement of the runtime: the build identifier and the policy hash,
/// combined with length prefixes.
pub fn runtime_hash(build_id: &str, policy_hash: &[u8; 32]) -> [u8; 32] {
    hash_lp(RUNTIME_HASH_DOMAIN, &[build_id.as_bytes(), policy_hash])
}

/// The secondary hash placed in the quote: binds the module measurement to
/// caller-supplied data such as a session public key.
pub fn report_data(module_hash: &[u8; 32], user_data: &[u8]) -> [u8; 32] {
    hash_lp(REPORT_DATA_DOMAIN, &[module_hash, user_data])
}

/// Which bytes were hashed as the module: the portable bytecode or a
/// compiled artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactForm {
    Bytecode,
    Aot,
}

impl ArtifactForm {
    fn as_u8(self) -> u8 {
        match self {
            ArtifactForm::Bytecode => 0,
            ArtifactForm::Aot => 1,
        }
    }

    fn from_u8(raw: u8) -> Option<Self> {
        match raw {
            0 => Some(ArtifactForm::Bytecode),
            1 => Some(ArtifactForm::Aot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub runtime_hash: [u8; 32],
    pub module_hash: [u8; 32],
}

/// The signing side of the simulated device.
pub struct DeviceKey {
    signing: SigningKey,
}

impl DeviceKey {
    pub fn generate() -> Self {
        let mut seed = [0u8; 32];
        OsRng.fill_bytes(&mut seed);
        Self::from_seed(&seed)
    }

    pub fn from_seed(seed: &[u8; 32]) -> Self {
        Self {
            signing: SigningKey::from_bytes(seed),
        }
    }

    pub fn seed(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn anchor(&self) -> TrustAnchor {
        TrustAnchor {
            verifying: self.signing.verifying_key(),
        }
    }
}

/// The verifying side: the device CA public key.
#[derive(Clone)]
pub struct TrustAnchor {
    verifying: VerifyingKey,
}

impl TrustAnchor {
    pub fn from_bytes(raw: &[u8; 32]) -> Result<Self, AttestError> {
        Ok(Self {
            verifying: VerifyingKey::from_bytes(raw)
                .map_err(|_| AttestError::BadKey("not a valid Ed25519 public key"))?,
        })
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.verifying.to_bytes()
    }

    pub fn signer_id(&self) -> [u8; 32] {
        Sha256::digest(self.verifying.as_bytes()).into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quote {
    pub artifact_form: ArtifactForm,
    pub measurement: Measurement,
    pub report_data: [u8; 32],
    pub timestamp: u64,
    pub signer_id: [u8; 32],
    pub signature: [u8; 64],
}

impl Quote {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(QUOTE_LEN);
        out.extend_from_slice(&QUOTE_MAGIC);
        out.extend_from_slice(&QUOTE_VERSION.to_le_bytes());
        out.push(self.artifact_form.as_u8());
        out.extend_from_slice(&self.measurement.runtime_hash);
        out.extend_from_slice(&self.measurement.module_hash);
        out.extend_from_slice(&self.report_data);
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out.extend_from_slice(&self.signer_id);
        out.extend_from_slice(&64u16.to_le_bytes());
        out.extend_from_slice(&self.signature);
        debug_assert_eq!(out.len(), QUOTE_LEN);
        out
    }

    pub fn from_bytes(raw: &[u8]) -> Result<Self, AttestError> {
        if raw.len() != QUOTE_LEN {
            return Err(AttestError::MalformedQuote("wrong length"));
        }
        if raw[0..8] != QUOTE_MAGIC {
            return Err(AttestError::MalformedQuote("bad magic"));
        }
        if u16::from_le_bytes(raw[8..10].try_into().unwrap()) != QUOTE_VERSION {
            return Err(AttestError::MalformedQuote("unsupported version"));
        }
        let artifact_form = ArtifactForm::from_u8(raw[10])
            .ok_or(AttestError::MalformedQuote("unknown artifact form"))?;
        if u16::from_le_bytes(raw[147..149].try_into().unwrap()) != 64 {
            return Err(AttestError::MalformedQuote("bad signature length"));
        }
        let take32 = |at: usize| -> [u8; 32] { raw[at..at + 32].try_into().unwrap() };
        Ok(Self {
            artifact_form,
            measurement: Measurement {
                runtime_hash: take32(11),
                module_hash: take32(43),
            },
            report_data: take32(75),
            timestamp: u64::from_le_bytes(raw[107..115].try_into().unwrap()),
            signer_id: take32(115),
            signature: raw[149..].try_into().unwrap(),
        })
    }
}

/// Signs a quote over `measurement` and `user_data` at `timestamp`.
pub fn quote_generate(
    key: &DeviceKey,
    measurement: &Measurement,
    artifact_form: ArtifactForm,
    user_data: &[u8],
    timestamp: u64,
) -> Result<Quote, AttestError> {
    if user_data.len() > MAX_USER_DATA {
        return Err(AttestError::UserDataTooLong);
    }
    let mut quote = Quote {
        artifact_form,
        measurement: *measurement,
        report_data: report_data(&measurement.module_hash, user_data),
        timestamp,
        signer_id: key.anchor().signer_id(),
        signature: [0; 64],
    };
    let body = quote.to_bytes();
    let sig: Signature = key.signing.sign(&body[..SIGNED_LEN]);
    quote.signature = sig.to_bytes();
    Ok(quote)
}

/// Expectations the verifier supplies. Absent fields are not checked.
#[derive(Debug, Clone, Default)]
pub struct Expected {
    pub runtime_hash: Option<[u8; 32]>,
    pub module_hash: Option<[u8; 32]>,
    pub user_data: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(FailReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailReason {
    Signature,
    RuntimeHash,
    ModuleHash,
    UserData,
}

/// Verifies a quote byte string against the anchor and the supplied
/// expectations. Undecodable bytes are [`AttestError::MalformedQuote`];
/// everything decodable verifies to a [`Verdict`] carrying the first
/// mismatch.
pub fn quote_verify(
    raw: &[u8],
    anchor: &TrustAnchor,
    expected: &Expected,
) -> Result<Verdict, AttestError> {
    let quote = Quote::from_bytes(raw)?;
    // canonical encoding is the only accepted form
    if quote.to_bytes() != raw {
        return Err(AttestError::MalformedQuote("non-canonical encoding"));
    }
    if quote.signer_id != anchor.signer_id() {
        return Ok(Verdict::Fail(FailReason::Signature));
    }
    let sig = Signature::from_bytes(&quote.signature);
    if anchor.verifying.verify(&raw[..SIGNED_LEN], &sig).is_err() {
        return Ok(Verdict::Fail(FailReason::Signature));
    }
    if let Some(rt) = expected.runtime_hash {
        if rt != quote.measurement.runtime_hash {
            return Ok(Verdict::Fail(FailReason::RuntimeHash));
        }
    }
    if let Some(m) = expected.module_hash {
        if m != quote.measurement.module_hash {
            return Ok(Verdict::Fail(FailReason::ModuleHash));
        }
    }
    if let Some(user) = &expected.user_data {
        let want = report_data(&quote.measurement.module_hash, user);
        if want != quote.report_data {
            return Ok(Verdict::Fail(FailReason::UserData));
        }
    }
    Ok(Verdict::Pass)
}

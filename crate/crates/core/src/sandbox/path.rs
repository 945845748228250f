//! Preopen subtree confinement.
//!
//! Resolution walks the guest-supplied relative path one component at a time
//! against the canonicalized preopen root. Every component that exists on the
//! host is canonicalized (symlinks resolved) and re-checked against the root,
//! so a symlink pointing out of the subtree is caught no matter where it sits
//! in the chain. `..` never climbs above the root. Only the final component
//! may be missing, and only when resolving for creation.

use std::path::{Component, Path, PathBuf};

use super::SandboxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveMode {
    MustExist,
    AllowCreate,
}

/// Outcome of a successful resolution: the confined host path plus the
/// root-relative form used as the file's canonical identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub host_path: PathBuf,
    pub relative: String,
}

/// Resolves `relative` under `root`, denying any escape. The returned host
/// path always has the canonicalized root as a strict prefix.
pub fn resolve_under_root(
    root: &Path,
    relative: &str,
    mode: ResolveMode,
) -> Result<Resolved, SandboxError> {
    if relative.contains('\0') {
        return Err(SandboxError::PolicyDenied("path contains NUL"));
    }
    let root = root
        .canonicalize()
        .map_err(|_| SandboxError::PolicyDenied("preopen root unavailable"))?;

    let mut resolved = root.clone();
    // trailing components that do not exist on the host yet
    let mut pending: Vec<String> = Vec::new();

    for component in Path::new(relative).components() {
        match component {
            Component::Prefix(_) | Component::RootDir => {
                return Err(SandboxError::PolicyDenied("absolute path"));
            }
            Component::CurDir => {}
            Component::ParentDir => {
                if !pending.is_empty() {
                    pending.pop();
                } else if resolved == root {
                    return Err(SandboxError::PolicyDenied("path escapes preopen root"));
                } else {
                    resolved.pop();
                }
            }
            Component::Normal(part) => {
                let part = part
                    .to_str()
                    .ok_or(SandboxError::PolicyDenied("non-UTF-8 path component"))?;
                if !pending.is_empty() {
                    pending.push(part.to_string());
                    continue;
                }
                let candidate = resolved.join(part);
                match std::fs::symlink_metadata(&candidate) {
                    Ok(_) => {
                        // exists: canonicalize to resolve a possible symlink,
                        // then re-check confinement
                        let canonical = candidate
                            .canonicalize()
                            .map_err(|_| SandboxError::NotFound)?;
                        if !canonical.starts_with(&root) {
                            return Err(SandboxError::PolicyDenied(
                                "symlink escapes preopen root",
                            ));
                        }
                        resolved = canonical;
                    }
                    Err(_) => pending.push(part.to_string()),
                }
            }
        }
    }

    match mode {
        ResolveMode::MustExist if !pending.is_empty() => return Err(SandboxError::NotFound),
        ResolveMode::AllowCreate if pending.len() > 1 => return Err(SandboxError::NotFound),
        _ => {}
    }

    let mut host_path = resolved;
    for part in &pending {
        host_path.push(part);
    }
    if host_path == root || !host_path.starts_with(&root) {
        return Err(SandboxError::PolicyDenied("path escapes preopen root"));
    }
    let relative = host_path
        .strip_prefix(&root)
        .expect("prefix just checked")
        .to_str()
        .ok_or(SandboxError::PolicyDenied("non-UTF-8 resolved path"))?
        .to_string();
    Ok(Resolved {
        host_path,
        relative,
    })
}

//! The host: loads a Wasm module into an embedded engine, binds the gated
//! system-interface surface, and runs the guest's start routine as the single
//! trusted entry call.
//!
//! The guest-reachable surface is exactly [`HOST_SURFACE`] under the
//! `wasi_snapshot_preview1` import namespace: the WASI preview-1 names for
//! files, clock and randomness, plus the `sock_connect` extension. Every
//! function passes the policy call gate before doing anything; a denied call
//! returns the access-denied errno to the guest with no side effects. File
//! descriptors 0-2 are stdio (1 and 2 cross to the host and are counted),
//! descriptor `3 + i` names preopen `i`, and protected files are handed out
//! from 16 upwards.
//!
//! Guest memory is capped by the policy's byte budget: growth beyond it fails
//! at the limiter, it never extends.

use std::collections::HashMap;
use std::net::TcpStream;
use std::sync::Arc;

use thiserror::Error;
use wasmi::core::{LimiterError, ResourceLimiter};
use wasmi::{Caller, Engine, Linker, Memory, Module, Store};

use redoubt_core::attest::{self, ArtifactForm, Measurement};
use redoubt_core::boundary::{Boundary, LatencyModel};
use redoubt_core::fs::{FsError, FsVariant, KeySource, OpenMode, OpenOptions, ProtectedFile, Whence};
use redoubt_core::kdf::{OwnerBinding, SealingContext};
use redoubt_core::sandbox::{CallId, Policy, Sandbox, SandboxError};

/// Import names the host provides, and nothing else.
pub const HOST_SURFACE: [&str; 14] = [
    "args_get",
    "args_sizes_get",
    "environ_get",
    "environ_sizes_get",
    "clock_time_get",
    "fd_close",
    "fd_filestat_get",
    "fd_read",
    "fd_seek",
    "fd_write",
    "path_open",
    "proc_exit",
    "random_get",
    "sock_connect",
];

pub const WASI_MODULE: &str = "wasi_snapshot_preview1";

// WASI preview-1 errno values used on this surface.
mod errno {
    pub const SUCCESS: i32 = 0;
    pub const ACCES: i32 = 2;
    pub const BADF: i32 = 8;
    pub const FAULT: i32 = 21;
    pub const INVAL: i32 = 28;
    pub const IO: i32 = 29;
    pub const NOENT: i32 = 44;
}

#[derive(Debug, Error)]
pub enum HostError {
    #[error("module validation failed: {0}")]
    Validation(String),
    #[error("module imports `{0}` which the host does not provide")]
    MissingImport(String),
    #[error("policy rejected: {0}")]
    Policy(String),
    #[error("integrity failure: {0}")]
    Integrity(String),
    #[error("guest trapped: {0}")]
    GuestTrap(String),
    #[error("guest exceeded its memory budget")]
    OutOfBudget,
    #[error("instance already ran its entry call")]
    AlreadyRan,
}

/// Host configuration fixed at startup.
#[derive(Clone)]
pub struct HostConfig {
    pub policy: Policy,
    pub fs_variant: FsVariant,
    pub cache_capacity: usize,
    pub latency: LatencyModel,
    pub master_secret: [u8; 32],
    pub owner_binding: OwnerBinding,
    pub build_id: String,
}

impl HostConfig {
    pub fn new(policy: Policy) -> Self {
        Self {
            policy,
            fs_variant: FsVariant::Optimized,
            cache_capacity: 48,
            latency: LatencyModel::client_sgx(),
            master_secret: [0; 32],
            owner_binding: OwnerBinding::EnclaveBound,
            build_id: concat!("redoubt-runtime ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

/// A validated module plus its measurement; runs at most once.
pub struct GuestInstance {
    module: Module,
    module_hash: [u8; 32],
    started: bool,
}

impl GuestInstance {
    pub fn module_hash(&self) -> [u8; 32] {
        self.module_hash
    }
}

/// Outcome of one guest run.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// Bytes the guest wrote to stdout (also echoed by the CLI).
    pub stdout: Vec<u8>,
}

struct MemoryBudget {
    limit: usize,
    denied: bool,
}

impl ResourceLimiter for MemoryBudget {
    fn memory_growing(
        &mut self,
        _current: usize,
        desired: usize,
        _maximum: Option<usize>,
    ) -> Result<bool, LimiterError> {
        if desired > self.limit {
            self.denied = true;
            Ok(false)
        } else {
            Ok(true)
        }
    }

    fn table_growing(
        &mut self,
        _current: usize,
        desired: usize,
        _maximum: Option<usize>,
    ) -> Result<bool, LimiterError> {
        Ok(desired <= 1 << 20)
    }

    fn instances(&self) -> usize {
        1
    }

    fn tables(&self) -> usize {
        8
    }

    fn memories(&self) -> usize {
        1
    }
}

enum FdEntry {
    Stdio,
    Preopen(usize),
    File(ProtectedFile),
    Socket(#[allow(dead_code)] TcpStream),
}

struct HostState {
    sandbox: Sandbox,
    ctx: SealingContext,
    fs_variant: FsVariant,
    cache_capacity: usize,
    fds: HashMap<u32, FdEntry>,
    next_fd: u32,
    argv: Vec<String>,
    env: Vec<String>,
    stdout: Vec<u8>,
    budget: MemoryBudget,
}

impl HostState {
    fn gate(&self, call: CallId) -> Result<(), i32> {
        self.sandbox.gate(call).map_err(|_| errno::ACCES)
    }
}

fn errno_of_sandbox(e: &SandboxError) -> i32 {
    match e {
        SandboxError::PolicyDenied(_) => errno::ACCES,
        SandboxError::NotFound => errno::NOENT,
        SandboxError::Connection(_) => errno::IO,
        SandboxError::InvalidPolicy(_) => errno::INVAL,
        SandboxError::Fs(fs) => errno_of_fs(fs),
    }
}

fn errno_of_fs(e: &FsError) -> i32 {
    match e {
        FsError::NotFound => errno::NOENT,
        FsError::InvalidSeek => errno::INVAL,
        FsError::ReadOnly => errno::ACCES,
        FsError::Closed | FsError::HandlePoisoned => errno::BADF,
        FsError::Integrity(_) => errno::IO,
        FsError::FileTooLarge => errno::INVAL,
        FsError::Storage(_) => errno::IO,
    }
}

/// The host: one boundary instance and the sealing identity derived from the
/// policy measurement.
pub struct Host {
    config: HostConfig,
    boundary: Arc<Boundary>,
    runtime_hash: [u8; 32],
}

impl Host {
    pub fn new(config: HostConfig) -> Self {
        let boundary = Arc::new(Boundary::new(config.latency));
        let runtime_hash = attest::runtime_hash(&config.build_id, &config.policy.hash());
        Self {
            config,
            boundary,
            runtime_hash,
        }
    }

    pub fn boundary(&self) -> &Arc<Boundary> {
        &self.boundary
    }

    pub fn runtime_hash(&self) -> [u8; 32] {
        self.runtime_hash
    }

    pub fn measurement_for(&self, instance: &GuestInstance) -> Measurement {
        Measurement {
            runtime_hash: self.runtime_hash,
            module_hash: instance.module_hash,
        }
    }

    /// Which artifact form this host hashes: always the portable bytecode it
    /// loads (there is no ahead-of-time pipeline here).
    pub fn artifact_form(&self) -> ArtifactForm {
        ArtifactForm::Bytecode
    }

    pub fn sealing_context(&self) -> SealingContext {
        SealingContext::new(
            self.config.master_secret,
            self.runtime_hash,
            self.config.owner_binding,
        )
    }

    /// Validates the module and records its measurement. Rejects imports
    /// outside the declared host surface.
    pub fn load_module(&self, bytes: &[u8]) -> Result<GuestInstance, HostError> {
        let engine = Engine::default();
        let module = Module::new(&engine, bytes)
            .map_err(|e| HostError::Validation(e.to_string()))?;
        for import in module.imports() {
            let provided = import.module() == WASI_MODULE
                && HOST_SURFACE.contains(&import.name())
                && import.ty().func().is_some();
            if !provided {
                return Err(HostError::MissingImport(format!(
                    "{}::{}",
                    import.module(),
                    import.name()
                )));
            }
        }
        Ok(GuestInstance {
            module,
            module_hash: attest::measure_module(bytes),
            started: false,
        })
    }

    /// Runs the guest start routine: the one enter-call of the instance.
    pub fn run(
        &self,
        instance: &mut GuestInstance,
        argv: Vec<String>,
        env: Vec<String>,
    ) -> Result<RunOutcome, HostError> {
        if instance.started {
            return Err(HostError::AlreadyRan);
        }
        instance.started = true;

        let sandbox = Sandbox::new(self.config.policy.clone(), Arc::clone(&self.boundary));
        let mut fds: HashMap<u32, FdEntry> = HashMap::new();
        for fd in 0..3u32 {
            fds.insert(fd, FdEntry::Stdio);
        }
        for i in 0..self.config.policy.preopens().len() {
            fds.insert(3 + i as u32, FdEntry::Preopen(i));
        }
        let state = HostState {
            sandbox,
            ctx: self.sealing_context(),
            fs_variant: self.config.fs_variant,
            cache_capacity: self.config.cache_capacity,
            fds,
            next_fd: 16,
            argv,
            env,
            stdout: Vec::new(),
            budget: MemoryBudget {
                limit: self.config.policy.memory_budget() as usize,
                denied: false,
            },
        };

        let engine = instance.module.engine().clone();
        let mut store = Store::new(&engine, state);
        store.limiter(|s| &mut s.budget);
        let mut linker = Linker::<HostState>::new(&engine);
        let mut bound: Vec<&'static str> = Vec::new();
        bind_surface(&mut linker, &mut bound).map_err(|e| HostError::Validation(e.to_string()))?;
        debug_assert_eq!({ let mut b = bound.clone(); b.sort_unstable(); b }, {
            let mut s = HOST_SURFACE.to_vec();
            s.sort_unstable();
            s
        });

        // the single enter call: instantiate and run the start routine
        self.boundary.count_ecall();
        let outcome = linker
            .instantiate(&mut store, &instance.module)
            .and_then(|pre| pre.start(&mut store))
            .and_then(|inst| {
                let start = inst
                    .get_typed_func::<(), ()>(&store, "_start")
                    .map_err(wasmi::Error::from)?;
                start.call(&mut store, ())
            });

        let exit_code = match outcome {
            Ok(()) => 0,
            Err(err) => {
                if let Some(status) = err.i32_exit_status() {
                    status
                } else if store.data().budget.denied {
                    return Err(HostError::OutOfBudget);
                } else {
                    return Err(HostError::GuestTrap(err.to_string()));
                }
            }
        };
        Ok(RunOutcome {
            exit_code,
            stdout: std::mem::take(&mut store.data_mut().stdout),
        })
    }
}

fn memory_of(caller: &mut Caller<'_, HostState>) -> Result<Memory, i32> {
    caller
        .get_export("memory")
        .and_then(|e| e.into_memory())
        .ok_or(errno::FAULT)
}

fn read_guest(
    caller: &mut Caller<'_, HostState>,
    mem: Memory,
    ptr: i32,
    len: usize,
) -> Result<Vec<u8>, i32> {
    let mut buf = vec![0u8; len];
    mem.read(caller, ptr as u32 as usize, &mut buf)
        .map_err(|_| errno::FAULT)?;
    Ok(buf)
}

fn write_guest(
    caller: &mut Caller<'_, HostState>,
    mem: Memory,
    ptr: i32,
    bytes: &[u8],
) -> Result<(), i32> {
    mem.write(caller, ptr as u32 as usize, bytes)
        .map_err(|_| errno::FAULT)
}

/// `(ptr, len)` pairs of a WASI iovec array.
fn read_iovecs(
    caller: &mut Caller<'_, HostState>,
    mem: Memory,
    iovs: i32,
    iovs_len: i32,
) -> Result<Vec<(i32, u32)>, i32> {
    let raw = read_guest(caller, mem, iovs, iovs_len as usize * 8)?;
    Ok(raw
        .chunks_exact(8)
        .map(|c| {
            (
                i32::from_le_bytes(c[0..4].try_into().unwrap()),
                u32::from_le_bytes(c[4..8].try_into().unwrap()),
            )
        })
        .collect())
}

/// Writes a string list the WASI way: a pointer table and a NUL-joined pool.
fn write_string_list(
    caller: &mut Caller<'_, HostState>,
    mem: Memory,
    list: &[String],
    table_ptr: i32,
    pool_ptr: i32,
) -> Result<(), i32> {
    let mut table = Vec::with_capacity(list.len() * 4);
    let mut pool = Vec::new();
    for s in list {
        table.extend_from_slice(&(pool_ptr as u32 + pool.len() as u32).to_le_bytes());
        pool.extend_from_slice(s.as_bytes());
        pool.push(0);
    }
    write_guest(caller, mem, table_ptr, &table)?;
    write_guest(caller, mem, pool_ptr, &pool)
}

fn ret(result: Result<i32, i32>) -> i32 {
    match result {
        Ok(ok) => ok,
        Err(errno) => errno,
    }
}

/// Binds every host function; `bound` records the names for the surface
/// audit.
fn bind_surface(
    linker: &mut Linker<HostState>,
    bound: &mut Vec<&'static str>,
) -> Result<(), wasmi::errors::LinkerError> {
    macro_rules! bind {
        ($name:literal, $func:expr) => {{
            bound.push($name);
            linker.func_wrap(WASI_MODULE, $name, $func)?;
        }};
    }

    bind!(
        "args_sizes_get",
        |mut caller: Caller<'_, HostState>, argc: i32, buf_size: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::ArgsSizesGet)?;
                let mem = memory_of(&mut caller)?;
                let (n, bytes) = {
                    let argv = &caller.data().argv;
                    (argv.len() as u32, argv.iter().map(|s| s.len() as u32 + 1).sum::<u32>())
                };
                write_guest(&mut caller, mem, argc, &n.to_le_bytes())?;
                write_guest(&mut caller, mem, buf_size, &bytes.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "args_get",
        |mut caller: Caller<'_, HostState>, argv_ptr: i32, argv_buf: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::ArgsGet)?;
                let mem = memory_of(&mut caller)?;
                let list = caller.data().argv.clone();
                write_string_list(&mut caller, mem, &list, argv_ptr, argv_buf)?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "environ_sizes_get",
        |mut caller: Caller<'_, HostState>, count: i32, buf_size: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::EnvironSizesGet)?;
                let mem = memory_of(&mut caller)?;
                let (n, bytes) = {
                    let env = &caller.data().env;
                    (env.len() as u32, env.iter().map(|s| s.len() as u32 + 1).sum::<u32>())
                };
                write_guest(&mut caller, mem, count, &n.to_le_bytes())?;
                write_guest(&mut caller, mem, buf_size, &bytes.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "environ_get",
        |mut caller: Caller<'_, HostState>, env_ptr: i32, env_buf: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::EnvironGet)?;
                let mem = memory_of(&mut caller)?;
                let list = caller.data().env.clone();
                write_string_list(&mut caller, mem, &list, env_ptr, env_buf)?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "clock_time_get",
        |mut caller: Caller<'_, HostState>, _id: i32, _precision: i64, time_ptr: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::ClockTimeGet)?;
                let mem = memory_of(&mut caller)?;
                let now = caller.data_mut().sandbox.clock_monotonic();
                write_guest(&mut caller, mem, time_ptr, &now.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "random_get",
        |mut caller: Caller<'_, HostState>, buf: i32, len: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::RandomGet)?;
                let mem = memory_of(&mut caller)?;
                let bytes = caller.data().sandbox.random_get(len as u32 as usize);
                write_guest(&mut caller, mem, buf, &bytes)?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "path_open",
        |mut caller: Caller<'_, HostState>,
         dirfd: i32,
         _dirflags: i32,
         path_ptr: i32,
         path_len: i32,
         oflags: i32,
         rights_base: i64,
         _rights_inheriting: i64,
         _fdflags: i32,
         opened_fd: i32|
         -> i32 {
            const OFLAG_CREAT: i32 = 1;
            const OFLAG_TRUNC: i32 = 1 << 3;
            const RIGHT_FD_WRITE: i64 = 1 << 6;
            ret((|| {
                caller.data().gate(CallId::PathOpen)?;
                let mem = memory_of(&mut caller)?;
                let raw = read_guest(&mut caller, mem, path_ptr, path_len as u32 as usize)?;
                let rel = String::from_utf8(raw).map_err(|_| errno::INVAL)?;
                let preopen = match caller.data().fds.get(&(dirfd as u32)) {
                    Some(FdEntry::Preopen(i)) => *i,
                    _ => return Err(errno::BADF),
                };
                let mode = if oflags & OFLAG_CREAT != 0 && oflags & OFLAG_TRUNC != 0 {
                    OpenMode::CreateTruncate
                } else if rights_base & RIGHT_FD_WRITE != 0 {
                    OpenMode::ReadWrite
                } else {
                    OpenMode::Read
                };
                let state = caller.data_mut();
                let preopen_name = state.sandbox.policy().preopens()[preopen].name.clone();
                let options = OpenOptions::new(
                    state.fs_variant,
                    KeySource::Derived(state.ctx.clone()),
                )
                .cache_capacity(state.cache_capacity);
                let file = state
                    .sandbox
                    .open_protected(&preopen_name, &rel, mode, options)
                    .map_err(|e| errno_of_sandbox(&e))?;
                let fd = state.next_fd;
                state.next_fd += 1;
                state.fds.insert(fd, FdEntry::File(file));
                write_guest(&mut caller, mem, opened_fd, &fd.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "fd_read",
        |mut caller: Caller<'_, HostState>, fd: i32, iovs: i32, iovs_len: i32, nread: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::FdRead)?;
                let mem = memory_of(&mut caller)?;
                let iovecs = read_iovecs(&mut caller, mem, iovs, iovs_len)?;
                let mut total = 0u32;
                for (ptr, len) in iovecs {
                    let chunk = {
                        let state = caller.data_mut();
                        match state.fds.get_mut(&(fd as u32)) {
                            Some(FdEntry::File(file)) => {
                                file.read(len as usize).map_err(|e| errno_of_fs(&e))?
                            }
                            Some(FdEntry::Stdio) => Vec::new(), // stdin is empty
                            _ => return Err(errno::BADF),
                        }
                    };
                    write_guest(&mut caller, mem, ptr, &chunk)?;
                    total += chunk.len() as u32;
                    if (chunk.len() as u32) < len {
                        break;
                    }
                }
                write_guest(&mut caller, mem, nread, &total.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "fd_write",
        |mut caller: Caller<'_, HostState>, fd: i32, iovs: i32, iovs_len: i32, nwritten: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::FdWrite)?;
                let mem = memory_of(&mut caller)?;
                let iovecs = read_iovecs(&mut caller, mem, iovs, iovs_len)?;
                let mut total = 0u32;
                for (ptr, len) in iovecs {
                    let bytes = read_guest(&mut caller, mem, ptr, len as usize)?;
                    let state = caller.data_mut();
                    match state.fds.get_mut(&(fd as u32)) {
                        Some(FdEntry::File(file)) => {
                            total += file.write(&bytes).map_err(|e| errno_of_fs(&e))? as u32;
                        }
                        Some(FdEntry::Stdio) if fd == 1 || fd == 2 => {
                            // console output leaves the trusted side
                            state.sandbox.boundary().host_call(0);
                            if fd == 1 {
                                state.stdout.extend_from_slice(&bytes);
                            }
                            total += bytes.len() as u32;
                        }
                        _ => return Err(errno::BADF),
                    }
                }
                write_guest(&mut caller, mem, nwritten, &total.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "fd_seek",
        |mut caller: Caller<'_, HostState>, fd: i32, offset: i64, whence: i32, pos_out: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::FdSeek)?;
                let mem = memory_of(&mut caller)?;
                let whence = match whence {
                    0 => Whence::Set,
                    1 => Whence::Cur,
                    2 => Whence::End,
                    _ => return Err(errno::INVAL),
                };
                let state = caller.data_mut();
                let pos = match state.fds.get_mut(&(fd as u32)) {
                    Some(FdEntry::File(file)) => {
                        file.seek(offset, whence).map_err(|e| errno_of_fs(&e))?
                    }
                    _ => return Err(errno::BADF),
                };
                write_guest(&mut caller, mem, pos_out, &pos.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "fd_filestat_get",
        |mut caller: Caller<'_, HostState>, fd: i32, buf: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::FdFilestatGet)?;
                let mem = memory_of(&mut caller)?;
                let size = {
                    let state = caller.data_mut();
                    match state.fds.get_mut(&(fd as u32)) {
                        Some(FdEntry::File(file)) => file.size().map_err(|e| errno_of_fs(&e))?,
                        Some(FdEntry::Stdio) => 0,
                        _ => return Err(errno::BADF),
                    }
                };
                // filestat: dev, ino, filetype(4 = regular file), nlink, size, times
                let mut stat = [0u8; 64];
                stat[16] = 4;
                stat[24..32].copy_from_slice(&1u64.to_le_bytes());
                stat[32..40].copy_from_slice(&size.to_le_bytes());
                write_guest(&mut caller, mem, buf, &stat)?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "fd_close",
        |mut caller: Caller<'_, HostState>, fd: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::FdClose)?;
                let state = caller.data_mut();
                match state.fds.remove(&(fd as u32)) {
                    Some(FdEntry::File(mut file)) => {
                        file.close().map_err(|e| errno_of_fs(&e))?;
                        Ok(errno::SUCCESS)
                    }
                    Some(FdEntry::Socket(_)) => Ok(errno::SUCCESS),
                    Some(entry) => {
                        // stdio and preopens stay open
                        state.fds.insert(fd as u32, entry);
                        Err(errno::ACCES)
                    }
                    None => Err(errno::BADF),
                }
            })())
        }
    );

    bind!(
        "sock_connect",
        |mut caller: Caller<'_, HostState>, addr_ptr: i32, addr_len: i32, port: i32, fd_out: i32| -> i32 {
            ret((|| {
                caller.data().gate(CallId::SockConnect)?;
                let mem = memory_of(&mut caller)?;
                let raw = read_guest(&mut caller, mem, addr_ptr, addr_len as u32 as usize)?;
                let text = String::from_utf8(raw).map_err(|_| errno::INVAL)?;
                let ip = text.parse().map_err(|_| errno::INVAL)?;
                let state = caller.data_mut();
                let stream = state
                    .sandbox
                    .sock_connect(ip, port as u16)
                    .map_err(|e| errno_of_sandbox(&e))?;
                let fd = state.next_fd;
                state.next_fd += 1;
                state.fds.insert(fd, FdEntry::Socket(stream));
                write_guest(&mut caller, mem, fd_out, &fd.to_le_bytes())?;
                Ok(errno::SUCCESS)
            })())
        }
    );

    bind!(
        "proc_exit",
        |caller: Caller<'_, HostState>, code: i32| -> Result<(), wasmi::Error> {
            let _ = &caller;
            Err(wasmi::Error::i32_exit(code))
        }
    );

    Ok(())
}

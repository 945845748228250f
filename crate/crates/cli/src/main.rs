//! `redoubt` — run Wasm guests against the encrypted file store and gated
//! system interface, produce and verify attestation quotes, and benchmark the
//! two file-store pipelines.
//!
//! Exit codes for `run`: 0 guest success, 1 guest trap (including memory
//! budget exhaustion), 2 policy or usage error, 3 integrity error. `verify`
//! exits 0 on Pass and 1 on any Fail.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use redoubt_bench::{run_workload, Pattern, WorkloadSpec};
use redoubt_cli::{Host, HostConfig, HostError};
use redoubt_core::attest::{
    self, quote_generate, quote_verify, DeviceKey, Expected, TrustAnchor, Verdict,
};
use redoubt_core::boundary::LatencyModel;
use redoubt_core::fs::FsVariant;
use redoubt_core::kdf::OwnerBinding;
use redoubt_core::sandbox::Policy;

#[derive(Parser)]
#[command(name = "redoubt", version, about = "trusted Wasm runtime sandbox (hardware-free)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Wasm module under a policy.
    Run(RunArgs),
    /// Generate a signed attestation quote for a module + policy.
    Quote(QuoteArgs),
    /// Verify a quote against an anchor and expectations.
    Verify(VerifyArgs),
    /// Generate a device signing key and its trust anchor.
    Keygen(KeygenArgs),
    /// Run record-store micro-benchmarks.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Baseline,
    Optimized,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum LatencyArg {
    /// 14'170 cycles per crossing at 3.8 GHz.
    ClientSgx,
    /// ~4 ms instrumented round trip.
    RoundTrip4ms,
}

impl LatencyArg {
    fn model(self) -> LatencyModel {
        match self {
            LatencyArg::ClientSgx => LatencyModel::client_sgx(),
            LatencyArg::RoundTrip4ms => LatencyModel::measured_round_trip_4ms(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    module: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, value_enum, default_value = "optimized")]
    fs_variant: VariantArg,
    /// Node-cache capacity per open file.
    #[arg(long, default_value_t = 48)]
    cache: usize,
    /// Override the policy's memory budget, in bytes.
    #[arg(long)]
    mem: Option<u64>,
    #[arg(long, value_enum, default_value = "client-sgx")]
    latency: LatencyArg,
    /// 64 hex chars; the simulated processor secret.
    #[arg(long, default_value = "")]
    master_secret_hex: String,
    /// Derive file keys bound to the owner secret instead of the runtime
    /// measurement.
    #[arg(long)]
    owner_bound: bool,
    /// Print boundary counters after the run.
    #[arg(long)]
    counters: bool,
    /// Guest argv (repeatable).
    #[arg(long = "arg")]
    args: Vec<String>,
    /// Guest environment entries KEY=VALUE (repeatable).
    #[arg(long = "env")]
    env: Vec<String>,
}

#[derive(Args)]
struct QuoteArgs {
    #[arg(long)]
    module: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    /// Device key file (64 hex chars), from `keygen`.
    #[arg(long)]
    device_key: PathBuf,
    #[arg(long, default_value = "")]
    user_data_hex: String,
    /// Output quote file; `<out>.hex` is written alongside.
    #[arg(long, default_value = "quote.bin")]
    out: PathBuf,
    #[arg(long)]
    build_id: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    quote: PathBuf,
    /// Anchor file (64 hex chars of Ed25519 public key).
    #[arg(long)]
    anchor: PathBuf,
    /// Expect the module hash of this file.
    #[arg(long)]
    expect_module: Option<PathBuf>,
    /// Expect this exact module hash (64 hex chars).
    #[arg(long)]
    expect_module_hash: Option<String>,
    /// Expect the runtime hash derived from this policy file.
    #[arg(long)]
    expect_policy: Option<PathBuf>,
    #[arg(long)]
    build_id: Option<String>,
    #[arg(long)]
    expect_user_data_hex: Option<String>,
}

#[derive(Args)]
struct KeygenArgs {
    /// Where to write the device key; the anchor goes to `<out>.pub`.
    #[arg(long, default_value = "device.key")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "rand-read")]
    pattern: String,
    /// Comma-separated record counts, ascending.
    #[arg(long, default_value = "1000,10000,50000,100000,175000")]
    records: String,
    #[arg(long, value_enum, default_value = "both")]
    variant: VariantArg,
    #[arg(long, default_value_t = 1024)]
    record_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 48)]
    cache: usize,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV dump for plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Scratch directory (defaults to a temp dir).
    #[arg(long)]
    scratch: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Quote(args) => cmd_quote(args).map(|()| 0),
        Command::Verify(args) => cmd_verify(args),
        Command::Keygen(args) => cmd_keygen(args).map(|()| 0),
        Command::Bench(args) => cmd_bench(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_policy(path: &PathBuf) -> Result<Policy> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading policy {}", path.display()))?;
    Policy::from_toml_str(&text).map_err(|e| anyhow!("{e}"))
}

fn parse_secret(hex_str: &str) -> Result<[u8; 32]> {
    if hex_str.is_empty() {
        // development secret; supply --master-secret-hex for anything real
        return Ok([0x5A; 32]);
    }
    let raw = hex::decode(hex_str).context("master secret must be hex")?;
    raw.try_into()
        .map_err(|_| anyhow!("master secret must be exactly 32 bytes"))
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let mut policy = load_policy(&args.policy)?;
    if let Some(mem) = args.mem {
        policy = policy.with_memory_budget(mem);
    }
    let mut config = HostConfig::new(policy);
    config.fs_variant = match args.fs_variant {
        VariantArg::Baseline => FsVariant::Baseline,
        VariantArg::Optimized | VariantArg::Both => FsVariant::Optimized,
    };
    config.cache_capacity = args.cache;
    config.latency = args.latency.model();
    config.master_secret = parse_secret(&args.master_secret_hex)?;
    config.owner_binding = if args.owner_bound {
        OwnerBinding::OwnerBound
    } else {
        OwnerBinding::EnclaveBound
    };

    let module_bytes = std::fs::read(&args.module)
        .with_context(|| format!("reading module {}", args.module.display()))?;
    let host = Host::new(config);
    let mut instance = match host.load_module(&module_bytes) {
        Ok(i) => i,
        Err(e @ (HostError::Validation(_) | HostError::MissingImport(_))) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
        Err(e) => return Err(e.into()),
    };

    let mut argv = vec![args.module.display().to_string()];
    argv.extend(args.args);
    match host.run(&mut instance, argv, args.env) {
        Ok(outcome) => {
            use std::io::Write as _;
            std::io::stdout().write_all(&outcome.stdout).ok();
            if args.counters {
                eprint!("{}", host.boundary().snapshot().to_kv_text());
            }
            Ok(if outcome.exit_code == 0 { 0 } else { 1 })
        }
        Err(HostError::OutOfBudget) => {
            eprintln!("error: {}", HostError::OutOfBudget);
            Ok(1)
        }
        Err(HostError::GuestTrap(msg)) => {
            eprintln!("error: guest trapped: {msg}");
            Ok(1)
        }
        Err(e @ HostError::Integrity(_)) => {
            eprintln!("error: {e}");
            Ok(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(2)
        }
    }
}

fn cmd_keygen(args: KeygenArgs) -> Result<()> {
    let key = DeviceKey::generate();
    std::fs::write(&args.out, hex::encode(key.seed()))?;
    let anchor_path = args.out.with_extension("key.pub");
    std::fs::write(&anchor_path, hex::encode(key.anchor().to_bytes()))?;
    println!(
        "device key: {}\nanchor:     {} ({})",
        args.out.display(),
        anchor_path.display(),
        hex::encode(key.anchor().to_bytes())
    );
    Ok(())
}

fn read_device_key(path: &PathBuf) -> Result<DeviceKey> {
    let text = std::fs::read_to_string(path)?;
    let raw = hex::decode(text.trim()).context("device key file must be hex")?;
    let seed: [u8; 32] = raw
        .try_into()
        .map_err(|_| anyhow!("device key must be 32 bytes"))?;
    Ok(DeviceKey::from_seed(&seed))
}

fn read_anchor(path: &PathBuf) -> Result<TrustAnchor> {
    let text = std::fs::read_to_string(path)?;
    let raw = hex::decode(text.trim()).context("anchor file must be hex")?;
    let bytes: [u8; 32] = raw
        .try_into()
        .map_err(|_| anyhow!("anchor must be 32 bytes"))?;
    TrustAnchor::from_bytes(&bytes).map_err(|e| anyhow!("{e}"))
}

fn cmd_quote(args: QuoteArgs) -> Result<()> {
    let policy = load_policy(&args.policy)?;
    let module = std::fs::read(&args.module)?;
    let key = read_device_key(&args.device_key)?;
    let user_data = hex::decode(&args.user_data_hex).context("user data must be hex")?;
    let build_id = args
        .build_id
        .unwrap_or_else(|| concat!("redoubt-runtime ", env!("CARGO_PKG_VERSION")).to_string());

    let measurement = attest::Measurement {
        runtime_hash: attest::runtime_hash(&build_id, &policy.hash()),
        module_hash: attest::measure_module(&module),
    };
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs();
    let quote = quote_generate(
        &key,
        &measurement,
        attest::ArtifactForm::Bytecode,
        &user_data,
        timestamp,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let raw = quote.to_bytes();
    std::fs::write(&args.out, &raw)?;
    std::fs::write(args.out.with_extension("hex"), hex::encode(&raw))?;
    println!(
        "quote written to {} ({} bytes)\nmodule_hash:  {}\nruntime_hash: {}",
        args.out.display(),
        raw.len(),
        hex::encode(measurement.module_hash),
        hex::encode(measurement.runtime_hash)
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let raw = std::fs::read(&args.quote)?;
    let anchor = read_anchor(&args.anchor)?;
    let mut expected = Expected::default();
    if let Some(path) = &args.expect_module {
        expected.module_hash = Some(attest::measure_module(&std::fs::read(path)?));
    }
    if let Some(hex_hash) = &args.expect_module_hash {
        let raw_hash = hex::decode(hex_hash).context("module hash must be hex")?;
        expected.module_hash = Some(
            raw_hash
                .try_into()
                .map_err(|_| anyhow!("module hash must be 32 bytes"))?,
        );
    }
    if let Some(path) = &args.expect_policy {
        let policy = load_policy(path)?;
        let build_id = args
            .build_id
            .clone()
            .unwrap_or_else(|| concat!("redoubt-runtime ", env!("CARGO_PKG_VERSION")).to_string());
        expected.runtime_hash = Some(attest::runtime_hash(&build_id, &policy.hash()));
    }
    if let Some(user_hex) = &args.expect_user_data_hex {
        expected.user_data = Some(hex::decode(user_hex).context("user data must be hex")?);
    }

    match quote_verify(&raw, &anchor, &expected) {
        Ok(Verdict::Pass) => {
            println!("PASS");
            Ok(0)
        }
        Ok(Verdict::Fail(reason)) => {
            println!("FAIL: {reason:?}");
            Ok(1)
        }
        Err(e) => {
            println!("FAIL: {e}");
            Ok(1)
        }
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let pattern = Pattern::parse(&args.pattern)
        .ok_or_else(|| anyhow!("unknown pattern {:?} (insert|seq-read|rand-read)", args.pattern))?;
    let counts: Vec<u64> = args
        .records
        .split(',')
        .map(|s| s.trim().parse().context("record counts must be integers"))
        .collect::<Result<_>>()?;
    let variants = match args.variant {
        VariantArg::Baseline => vec![FsVariant::Baseline],
        VariantArg::Optimized => vec![FsVariant::Optimized],
        VariantArg::Both => vec![FsVariant::Baseline, FsVariant::Optimized],
    };
    let mut spec = WorkloadSpec::new(pattern)
        .counts(counts)
        .seed(args.seed)
        .repetitions(args.reps)
        .variants(variants);
    spec.record_size = args.record_size;
    spec.cache_capacity = args.cache;

    let tmp;
    let scratch = match &args.scratch {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            dir.clone()
        }
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path().to_path_buf()
        }
    };
    let report = run_workload(&spec, &scratch)?;
    print!("{}", report.to_human_table());
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_json())?;
        println!("report written to {}", out.display());
    }
    if let Some(csv) = &args.csv {
        std::fs::write(csv, report.to_csv())?;
    }
    Ok(())
}

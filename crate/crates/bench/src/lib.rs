//! Record-store micro-benchmarks over the protected file store.
//!
//! The workload mirrors a table with an auto-incrementing key and a 1 KiB
//! blob: record `i` lives at byte offset `i * record_size` of one protected
//! file. Three access patterns are measured — sequential insert, sequential
//! read in insertion order, and uniform random reads — across record counts,
//! for one or both fs variants. Payloads and read orders are derived from the
//! spec seed alone, so both variants execute the identical operation sequence
//! and identical seeds reproduce identical counter totals.
//!
//! Wall times are medians over repetitions and are machine-dependent;
//! counters and the ratios between variants are the stable signal.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use redoubt_core::boundary::{Boundary, BoundaryCounters, LatencyModel};
use redoubt_core::fs::{
    FsError, FsVariant, KeySource, OpenMode, OpenOptions, ProtectedFile, Whence,
};
use redoubt_core::kdf::{OwnerBinding, SealingContext};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Fs(#[from] FsError),
    #[error("scratch dir: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    SequentialInsert,
    SequentialRead,
    RandomRead,
}

impl Pattern {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "insert" | "sequential-insert" => Some(Pattern::SequentialInsert),
            "seq-read" | "sequential-read" => Some(Pattern::SequentialRead),
            "rand-read" | "random-read" => Some(Pattern::RandomRead),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub record_size: usize,
    pub record_counts: Vec<u64>,
    pub pattern: Pattern,
    pub seed: u64,
    pub repetitions: usize,
    pub variants: Vec<FsVariant>,
    pub cache_capacity: usize,
    pub latency: LatencyModel,
}

impl WorkloadSpec {
    pub fn new(pattern: Pattern) -> Self {
        Self {
            record_size: 1024,
            // 1k steps up to 175k records
            record_counts: (1..=175).map(|k| k * 1000).collect(),
            pattern,
            seed: 0,
            repetitions: 5,
            variants: vec![FsVariant::Baseline, FsVariant::Optimized],
            cache_capacity: 48,
            latency: LatencyModel::client_sgx(),
        }
    }

    pub fn counts(mut self, counts: Vec<u64>) -> Self {
        self.record_counts = counts;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn repetitions(mut self, reps: usize) -> Self {
        self.repetitions = reps.max(1);
        self
    }

    pub fn variants(mut self, variants: Vec<FsVariant>) -> Self {
        self.variants = variants;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountResult {
    pub records: u64,
    pub median_wall_secs: f64,
    pub wall_secs: Vec<f64>,
    pub counters: BoundaryCounters,
    /// SHA-256 over every byte the measured phase read (or read back after
    /// inserting), hex. Identical across variants for the same spec.
    pub checksum: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantRun {
    pub variant: String,
    pub per_count: Vec<CountResult>,
    pub breakdown: Vec<Breakdown>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedupRow {
    pub records: u64,
    /// median wall time baseline / optimized; > 1 means the optimized
    /// pipeline is faster
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub pattern: Pattern,
    pub record_size: usize,
    pub seed: u64,
    pub repetitions: usize,
    pub runs: Vec<VariantRun>,
    pub speedup: Vec<SpeedupRow>,
}

/// Virtual-cost attribution knobs for [`profile_breakdown`]. Crossing and
/// copy costs come from the boundary's latency model; clearing and
/// per-operation residual costs are breakdown-only and tunable.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BreakdownCosts {
    pub cycles_per_crossing: u64,
    pub cycles_per_copied_byte: u64,
    pub cycles_per_cleared_byte: u64,
    pub cycles_per_operation: u64,
}

impl BreakdownCosts {
    pub fn from_latency(model: &LatencyModel) -> Self {
        Self {
            cycles_per_crossing: model.cycles_per_crossing,
            cycles_per_copied_byte: model.cycles_per_copied_byte,
            cycles_per_cleared_byte: 3,
            cycles_per_operation: 2000,
        }
    }
}

/// Share of attributed virtual time per cost category. Shares sum to 1 by
/// construction: the total is the sum of the parts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Breakdown {
    pub records: u64,
    pub clearing: f64,
    pub transitions: f64,
    pub reading: f64,
    pub overhead: f64,
}

pub fn profile_breakdown(
    records: u64,
    counters: &BoundaryCounters,
    operations: u64,
    costs: &BreakdownCosts,
) -> Breakdown {
    let clearing = counters.bytes_cleared * costs.cycles_per_cleared_byte;
    let transitions = counters.crossings() * costs.cycles_per_crossing;
    let reading =
        (counters.bytes_copied_in + counters.bytes_copied_out) * costs.cycles_per_copied_byte;
    let overhead = operations * costs.cycles_per_operation;
    let total = (clearing + transitions + reading + overhead).max(1) as f64;
    Breakdown {
        records,
        clearing: clearing as f64 / total,
        transitions: transitions as f64 / total,
        reading: reading as f64 / total,
        overhead: overhead as f64 / total,
    }
}

fn record_bytes(seed: u64, index: u64, len: usize) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed ^ index.wrapping_mul(0x9E3779B97F4A7C15));
    let mut buf = vec![0u8; len];
    rng.fill_bytes(&mut buf);
    buf
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn open_record_store(
    boundary: &Arc<Boundary>,
    dir: &Path,
    variant: FsVariant,
    cache_capacity: usize,
    mode: OpenMode,
) -> Result<ProtectedFile, FsError> {
    let ctx = SealingContext::new([0x42; 32], [0x17; 32], OwnerBinding::EnclaveBound);
    let options = OpenOptions::new(variant, KeySource::Derived(ctx)).cache_capacity(cache_capacity);
    ProtectedFile::open(
        Arc::clone(boundary),
        &dir.join(format!("records-{variant:?}.pf")),
        "bench:records",
        mode,
        options,
    )
}

/// Inserts records `[from, to)` with per-1000 flush points, like committing
/// in batches. Returns wall seconds.
fn insert_range(
    file: &mut ProtectedFile,
    spec: &WorkloadSpec,
    from: u64,
    to: u64,
) -> Result<f64, BenchError> {
    let started = Instant::now();
    for i in from..to {
        file.seek((i * spec.record_size as u64) as i64, Whence::Set)?;
        file.write(&record_bytes(spec.seed, i, spec.record_size))?;
        if (i + 1) % 1000 == 0 {
            file.flush()?;
        }
    }
    file.flush()?;
    Ok(started.elapsed().as_secs_f64())
}

/// One read pass over `n` records; returns (wall seconds, checksum).
fn read_phase(
    file: &mut ProtectedFile,
    spec: &WorkloadSpec,
    n: u64,
    rep: usize,
) -> Result<(f64, [u8; 32]), BenchError> {
    let mut hash = Sha256::new();
    let started = Instant::now();
    match spec.pattern {
        Pattern::SequentialRead | Pattern::SequentialInsert => {
            for i in 0..n {
                file.seek((i * spec.record_size as u64) as i64, Whence::Set)?;
                hash.update(file.read(spec.record_size)?);
            }
        }
        Pattern::RandomRead => {
            // identical draw sequence for every variant
            let mut rng =
                StdRng::seed_from_u64(spec.seed ^ n.wrapping_mul(31) ^ ((rep as u64) << 40));
            for _ in 0..n {
                let i = rng.gen_range(0..n);
                file.seek((i * spec.record_size as u64) as i64, Whence::Set)?;
                hash.update(file.read(spec.record_size)?);
            }
        }
    }
    Ok((started.elapsed().as_secs_f64(), hash.finalize().into()))
}

fn run_variant(
    spec: &WorkloadSpec,
    scratch: &Path,
    variant: FsVariant,
) -> Result<VariantRun, BenchError> {
    let costs = BreakdownCosts::from_latency(&spec.latency);
    let mut per_count: Vec<CountResult> = Vec::new();
    let mut breakdown = Vec::new();

    match spec.pattern {
        Pattern::SequentialInsert => {
            // each repetition rebuilds from scratch in its own directory
            let mut walls: Vec<Vec<f64>> = vec![Vec::new(); spec.record_counts.len()];
            let mut counter_diffs: Vec<BoundaryCounters> = Vec::new();
            let mut checksum = [0u8; 32];
            for rep in 0..spec.repetitions {
                let dir = scratch.join(format!("{variant:?}-rep{rep}"));
                std::fs::create_dir_all(&dir)?;
                let boundary = Arc::new(Boundary::new(spec.latency));
                let mut file = open_record_store(
                    &boundary,
                    &dir,
                    variant,
                    spec.cache_capacity,
                    OpenMode::CreateTruncate,
                )?;
                let mut prev = 0u64;
                let mut diffs = Vec::new();
                for (tier, &n) in spec.record_counts.iter().enumerate() {
                    let before = boundary.snapshot();
                    let wall = insert_range(&mut file, spec, prev, n)?;
                    diffs.push(boundary.snapshot().diff(&before));
                    walls[tier].push(wall);
                    prev = n;
                }
                if rep == 0 {
                    counter_diffs = diffs;
                    // untimed read-back checksum over the full store
                    let (_, sum) = read_phase(&mut file, spec, prev, 0)?;
                    checksum = sum;
                }
                file.close()?;
                std::fs::remove_dir_all(&dir)?;
            }
            for (tier, &n) in spec.record_counts.iter().enumerate() {
                per_count.push(CountResult {
                    records: n,
                    median_wall_secs: median(walls[tier].clone()),
                    wall_secs: walls[tier].clone(),
                    counters: counter_diffs[tier],
                    checksum: hex_str(&checksum),
                });
                let inserted = n - if tier == 0 { 0 } else { spec.record_counts[tier - 1] };
                breakdown.push(profile_breakdown(n, &counter_diffs[tier], inserted, &costs));
            }
        }
        Pattern::SequentialRead | Pattern::RandomRead => {
            let dir = scratch.join(format!("{variant:?}"));
            std::fs::create_dir_all(&dir)?;
            let boundary = Arc::new(Boundary::new(spec.latency));
            let mut file = open_record_store(
                &boundary,
                &dir,
                variant,
                spec.cache_capacity,
                OpenMode::CreateTruncate,
            )?;
            let mut built = 0u64;
            for &n in &spec.record_counts {
                insert_range(&mut file, spec, built, n)?;
                built = n;
                let mut walls = Vec::new();
                let mut final_counters = BoundaryCounters::default();
                let mut final_sum = [0u8; 32];
                for rep in 0..spec.repetitions {
                    let before = boundary.snapshot();
                    let (wall, sum) = read_phase(&mut file, spec, n, rep)?;
                    final_counters = boundary.snapshot().diff(&before);
                    final_sum = sum;
                    walls.push(wall);
                }
                per_count.push(CountResult {
                    records: n,
                    median_wall_secs: median(walls.clone()),
                    wall_secs: walls,
                    counters: final_counters,
                    checksum: hex_str(&final_sum),
                });
                breakdown.push(profile_breakdown(n, &final_counters, n, &costs));
            }
            file.close()?;
            std::fs::remove_dir_all(&dir)?;
        }
    }

    Ok(VariantRun {
        variant: format!("{variant:?}"),
        per_count,
        breakdown,
    })
}

/// Runs the workload for every requested variant and derives speedups.
pub fn run_workload(spec: &WorkloadSpec, scratch: &Path) -> Result<BenchReport, BenchError> {
    assert!(
        spec.record_counts.windows(2).all(|w| w[0] < w[1]),
        "record counts must increase"
    );
    let mut runs = Vec::new();
    for &variant in &spec.variants {
        runs.push(run_variant(spec, scratch, variant)?);
    }

    let mut speedup = Vec::new();
    let baseline = runs.iter().find(|r| r.variant == "Baseline");
    let optimized = runs.iter().find(|r| r.variant == "Optimized");
    if let (Some(b), Some(o)) = (baseline, optimized) {
        for (rb, ro) in b.per_count.iter().zip(&o.per_count) {
            speedup.push(SpeedupRow {
                records: rb.records,
                ratio: rb.median_wall_secs / ro.median_wall_secs.max(f64::EPSILON),
            });
        }
    }

    Ok(BenchReport {
        pattern: spec.pattern,
        record_size: spec.record_size,
        seed: spec.seed,
        repetitions: spec.repetitions,
        runs,
        speedup,
    })
}

/// Counts boundary crossings for `n` size queries against a small store.
pub fn fstat_pattern(n_queries: u64, cached: bool) -> Result<u64, BenchError> {
    let dir = tempfile::tempdir()?;
    let boundary = Arc::new(Boundary::new(LatencyModel::client_sgx()));
    let mut file = open_record_store(
        &boundary,
        dir.path(),
        FsVariant::Optimized,
        48,
        OpenMode::CreateTruncate,
    )?;
    file.write(&record_bytes(1, 0, 1024))?;
    file.flush()?;
    let before = boundary.snapshot();
    for _ in 0..n_queries {
        if cached {
            file.size_cached()?;
        } else {
            file.size()?;
        }
    }
    Ok(boundary.snapshot().diff(&before).ocalls)
}

fn hex_str(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human table: one row per (variant, record count).
    pub fn to_human_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "pattern={:?} record_size={} reps={} seed={}\n",
            self.pattern, self.record_size, self.repetitions, self.seed
        ));
        out.push_str(
            "variant    records   median_s   ocalls      copied_in    copied_out   cleared      clearing%\n",
        );
        for run in &self.runs {
            for (r, b) in run.per_count.iter().zip(&run.breakdown) {
                out.push_str(&format!(
                    "{:<10} {:<9} {:<10.4} {:<11} {:<12} {:<12} {:<12} {:<8.1}\n",
                    run.variant,
                    r.records,
                    r.median_wall_secs,
                    r.counters.ocalls,
                    r.counters.bytes_copied_in,
                    r.counters.bytes_copied_out,
                    r.counters.bytes_cleared,
                    b.clearing * 100.0,
                ));
            }
        }
        for s in &self.speedup {
            out.push_str(&format!(
                "speedup baseline/optimized @ {} records: {:.3}\n",
                s.records, s.ratio
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "variant,records,median_wall_secs,ocalls,ecalls,bytes_copied_in,bytes_copied_out,bytes_cleared,simulated_latency_cycles,clearing_share,transitions_share,reading_share,overhead_share\n",
        );
        for run in &self.runs {
            for (r, b) in run.per_count.iter().zip(&run.breakdown) {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    run.variant,
                    r.records,
                    r.median_wall_secs,
                    r.counters.ocalls,
                    r.counters.ecalls,
                    r.counters.bytes_copied_in,
                    r.counters.bytes_copied_out,
                    r.counters.bytes_cleared,
                    r.counters.simulated_latency_cycles,
                    b.clearing,
                    b.transitions,
                    b.reading,
                    b.overhead,
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(pattern: Pattern) -> WorkloadSpec {
        WorkloadSpec::new(pattern)
            .counts(vec![200, 400])
            .seed(7)
            .repetitions(3)
    }

    #[test]
    fn identical_seeds_reproduce_identical_counter_totals() {
        for pattern in [
            Pattern::SequentialInsert,
            Pattern::SequentialRead,
            Pattern::RandomRead,
        ] {
            let spec = small_spec(pattern);
            let d1 = tempfile::tempdir().unwrap();
            let d2 = tempfile::tempdir().unwrap();
            let a = run_workload(&spec, d1.path()).unwrap();
            let b = run_workload(&spec, d2.path()).unwrap();
            for (ra, rb) in a.runs.iter().zip(&b.runs) {
                for (ca, cb) in ra.per_count.iter().zip(&rb.per_count) {
                    assert_eq!(ca.counters, cb.counters, "{pattern:?}/{}", ra.variant);
                    assert_eq!(ca.checksum, cb.checksum);
                }
            }
        }
    }

    #[test]
    fn variants_read_identical_content() {
        for pattern in [Pattern::SequentialRead, Pattern::RandomRead] {
            let dir = tempfile::tempdir().unwrap();
            let report = run_workload(&small_spec(pattern), dir.path()).unwrap();
            assert_eq!(report.runs.len(), 2);
            for (b, o) in report.runs[0].per_count.iter().zip(&report.runs[1].per_count) {
                assert_eq!(b.checksum, o.checksum, "{pattern:?}");
            }
        }
    }

    #[test]
    fn breakdown_shares_sum_to_one_and_split_by_variant() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_workload(&small_spec(Pattern::RandomRead), dir.path()).unwrap();
        for run in &report.runs {
            for b in &run.breakdown {
                let sum = b.clearing + b.transitions + b.reading + b.overhead;
                assert!((sum - 1.0).abs() < 1e-3, "shares sum to {sum}");
                if run.variant == "Optimized" {
                    assert_eq!(b.clearing, 0.0);
                } else {
                    assert!(b.clearing > 0.0);
                }
            }
        }
    }

    #[test]
    fn fstat_crossings_match_the_caching_contract() {
        assert_eq!(fstat_pattern(0, false).unwrap(), 0);
        assert_eq!(fstat_pattern(0, true).unwrap(), 0);
        assert_eq!(fstat_pattern(1000, false).unwrap(), 1000);
        assert!(fstat_pattern(1000, true).unwrap() <= 1);
    }

    #[test]
    fn insert_accounting_shows_clearing_only_in_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_workload(&small_spec(Pattern::SequentialInsert), dir.path()).unwrap();
        let baseline = &report.runs[0];
        let optimized = &report.runs[1];
        for c in &baseline.per_count {
            assert!(c.counters.bytes_cleared >= 8192);
        }
        for c in &optimized.per_count {
            assert_eq!(c.counters.bytes_cleared, 0);
        }
        for (b, o) in baseline.per_count.iter().zip(&optimized.per_count) {
            assert_eq!(b.checksum, o.checksum);
        }
    }
}

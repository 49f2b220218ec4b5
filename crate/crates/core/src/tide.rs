//! Capacity monitoring: available-capacity computation, user-configurable
//! buffer profiles, and hysteresis-based offload state.
//!
//! One simulation tick corresponds to one sampling interval. Bounded islands
//! draw snapshots from a scripted profile (or a live-probe adapter); unbounded
//! cloud islands always report full availability. A failed source degrades to
//! the conservative fallback of zero available capacity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::registry::{CapacitySource, Island, IslandId};

/// Simulation tick. One tick equals one capacity sampling interval.
pub type Tick = u64;

/// Capacity computation errors.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TideError {
    #[error("utilization percentage {value} for {dimension} is outside [0, 100]")]
    UtilizationOutOfRange { dimension: &'static str, value: f64 },
    #[error("memory total must be positive")]
    ZeroMemTotal,
    #[error("memory used ({used}) exceeds memory total ({total})")]
    MemUsedExceedsTotal { used: u64, total: u64 },
}

/// Available capacity: `R = 1 - max(cpu/100, gpu/100, mem_used/mem_total)`.
pub fn compute_available(
    cpu_pct: f64,
    gpu_pct: f64,
    mem_used: u64,
    mem_total: u64,
) -> Result<f64, TideError> {
    for (dimension, value) in [("cpu", cpu_pct), ("gpu", gpu_pct)] {
        if !(0.0..=100.0).contains(&value) || value.is_nan() {
            return Err(TideError::UtilizationOutOfRange { dimension, value });
        }
    }
    if mem_total == 0 {
        return Err(TideError::ZeroMemTotal);
    }
    if mem_used > mem_total {
        return Err(TideError::MemUsedExceedsTotal {
            used: mem_used,
            total: mem_total,
        });
    }
    let mem_ratio = mem_used as f64 / mem_total as f64;
    let busiest = (cpu_pct / 100.0).max(gpu_pct / 100.0).max(mem_ratio);
    Ok(1.0 - busiest)
}

/// Timestamped utilization sample with the derived available capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacitySnapshot {
    pub tick: Tick,
    pub cpu_pct: f64,
    pub gpu_pct: f64,
    pub mem_used: u64,
    pub mem_total: u64,
    /// Available capacity in [0, 1].
    pub available: f64,
}

impl CapacitySnapshot {
    /// Derive a snapshot from raw utilization figures.
    pub fn from_utilization(
        tick: Tick,
        cpu_pct: f64,
        gpu_pct: f64,
        mem_used: u64,
        mem_total: u64,
    ) -> Result<Self, TideError> {
        let available = compute_available(cpu_pct, gpu_pct, mem_used, mem_total)?;
        Ok(Self {
            tick,
            cpu_pct,
            gpu_pct,
            mem_used,
            mem_total,
            available,
        })
    }

    /// Fully idle system.
    pub fn idle(tick: Tick) -> Self {
        Self {
            tick,
            cpu_pct: 0.0,
            gpu_pct: 0.0,
            mem_used: 0,
            mem_total: 1,
            available: 1.0,
        }
    }

    /// Conservative fallback snapshot reported for a failed source.
    pub fn exhausted(tick: Tick) -> Self {
        Self {
            tick,
            cpu_pct: 100.0,
            gpu_pct: 100.0,
            mem_used: 1,
            mem_total: 1,
            available: 0.0,
        }
    }

    /// Snapshot for an unbounded island, which never exhausts.
    pub fn unbounded(tick: Tick) -> Self {
        Self::idle(tick)
    }
}

/// User-selected capacity reserve controlling when work leaves a bounded
/// island.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferProfile {
    /// 30% buffer; offload below 0.70 available capacity.
    Conservative,
    /// 20% buffer; offload below 0.80.
    Moderate,
    /// 10% buffer; offload below 0.90.
    Aggressive,
}

impl BufferProfile {
    /// Reserved capacity fraction.
    pub fn buffer(self) -> f64 {
        match self {
            BufferProfile::Conservative => 0.30,
            BufferProfile::Moderate => 0.20,
            BufferProfile::Aggressive => 0.10,
        }
    }

    /// Offload threshold: work leaves the island while `R < offload_below()`.
    pub fn offload_below(self) -> f64 {
        match self {
            BufferProfile::Conservative => 0.70,
            BufferProfile::Moderate => 0.80,
            BufferProfile::Aggressive => 0.90,
        }
    }

    /// Hysteresis state seeded from this profile: fallback at the offload
    /// threshold, recovery one dead-zone width (0.10) above it.
    pub fn hysteresis(self) -> HysteresisState {
        HysteresisState::new(self.offload_below(), self.offload_below() + 0.10)
    }
}

/// Offload mode of a bounded island.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OffloadMode {
    Local,
    Offloaded,
}

/// Flap-damped offload state. The open interval between the two thresholds
/// is a dead zone in which the mode never changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HysteresisState {
    pub mode: OffloadMode,
    pub fallback_threshold: f64,
    pub recovery_threshold: f64,
}

impl HysteresisState {
    /// New state starting in `Local` mode.
    ///
    /// Panics if the dead zone would be empty (`recovery <= fallback`).
    pub fn new(fallback_threshold: f64, recovery_threshold: f64) -> Self {
        assert!(
            recovery_threshold > fallback_threshold,
            "hysteresis dead zone must be nonempty"
        );
        Self {
            mode: OffloadMode::Local,
            fallback_threshold,
            recovery_threshold,
        }
    }
}

impl Default for HysteresisState {
    fn default() -> Self {
        Self::new(0.70, 0.80)
    }
}

/// Advance the offload state machine on a capacity observation.
///
/// `Local -> Offloaded` strictly below the fallback threshold,
/// `Offloaded -> Local` strictly above the recovery threshold; boundary
/// equality and the dead zone between them keep the current mode.
pub fn step_hysteresis(state: HysteresisState, available: f64) -> HysteresisState {
    let mode = match state.mode {
        OffloadMode::Local if available < state.fallback_threshold => OffloadMode::Offloaded,
        OffloadMode::Offloaded if available > state.recovery_threshold => OffloadMode::Local,
        other => other,
    };
    HysteresisState { mode, ..state }
}

/// One row of a scripted capacity profile. The row takes effect at `tick`
/// and holds until the next row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptRow {
    pub tick: Tick,
    pub cpu_pct: f64,
    pub gpu_pct: f64,
    pub mem_used: u64,
    pub mem_total: u64,
}

/// Ordered scripted capacity profile for one island. Ticks before the first
/// row read as idle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CapacityScript {
    rows: Vec<ScriptRow>,
}

impl CapacityScript {
    pub fn new(mut rows: Vec<ScriptRow>) -> Self {
        rows.sort_by_key(|row| row.tick);
        Self { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[ScriptRow] {
        &self.rows
    }

    /// Latest row at or before `tick`, if any.
    fn row_at(&self, tick: Tick) -> Option<&ScriptRow> {
        self.rows.iter().take_while(|row| row.tick <= tick).last()
    }

    fn snapshot_at(&self, tick: Tick) -> Result<CapacitySnapshot, TideError> {
        match self.row_at(tick) {
            Some(row) => CapacitySnapshot::from_utilization(
                tick,
                row.cpu_pct,
                row.gpu_pct,
                row.mem_used,
                row.mem_total,
            ),
            None => Ok(CapacitySnapshot::idle(tick)),
        }
    }
}

/// Live-probe adapter slot. Deployments with real OS probing implement this;
/// the shipped stub reports an idle system.
pub trait CapacityProbe: Send + Sync {
    fn sample(&self, tick: Tick) -> Result<CapacitySnapshot, TideError>;
}

/// Stub probe reporting a fully idle system.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdleProbe;

impl CapacityProbe for IdleProbe {
    fn sample(&self, tick: Tick) -> Result<CapacitySnapshot, TideError> {
        Ok(CapacitySnapshot::idle(tick))
    }
}

/// Per-island capacity source registry. Publishes the latest snapshot per
/// island; a monitor-level or per-island failure degrades to the exhausted
/// snapshot rather than erroring.
pub struct TideMonitor {
    scripts: BTreeMap<IslandId, CapacityScript>,
    probes: BTreeMap<IslandId, Box<dyn CapacityProbe>>,
    failed_sources: BTreeSet<IslandId>,
    failed: bool,
}

impl std::fmt::Debug for TideMonitor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TideMonitor")
            .field("scripts", &self.scripts.keys().collect::<Vec<_>>())
            .field("probes", &self.probes.keys().collect::<Vec<_>>())
            .field("failed_sources", &self.failed_sources)
            .field("failed", &self.failed)
            .finish()
    }
}

impl Default for TideMonitor {
    fn default() -> Self {
        Self::new()
    }
}

impl TideMonitor {
    pub fn new() -> Self {
        Self {
            scripts: BTreeMap::new(),
            probes: BTreeMap::new(),
            failed_sources: BTreeSet::new(),
            failed: false,
        }
    }

    /// Install the scripted profile for an island.
    pub fn set_script(&mut self, island: IslandId, script: CapacityScript) {
        self.scripts.insert(island, script);
    }

    /// Install a live probe for an island declared with a live source.
    pub fn set_probe(&mut self, island: IslandId, probe: Box<dyn CapacityProbe>) {
        self.probes.insert(island, probe);
    }

    /// Mark one island's source failed (or recovered).
    pub fn set_source_failed(&mut self, island: &IslandId, failed: bool) {
        if failed {
            self.failed_sources.insert(island.clone());
        } else {
            self.failed_sources.remove(island);
        }
    }

    /// Mark the whole monitor failed: every bounded island reads as exhausted.
    pub fn set_failed(&mut self, failed: bool) {
        self.failed = failed;
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    /// Latest snapshot for `island` at `tick`.
    ///
    /// Unbounded islands always read as fully available. Failure of the
    /// monitor or of the island's source degrades to available = 0; malformed
    /// script rows degrade the same way instead of erroring.
    pub fn get_capacity(&self, island: &Island, tick: Tick) -> CapacitySnapshot {
        if island.capacity_source == CapacitySource::Unbounded {
            return CapacitySnapshot::unbounded(tick);
        }
        if self.failed || self.failed_sources.contains(&island.id) {
            return CapacitySnapshot::exhausted(tick);
        }
        let sampled = match island.capacity_source {
            CapacitySource::Scripted => self
                .scripts
                .get(&island.id)
                .map(|script| script.snapshot_at(tick))
                .unwrap_or_else(|| Ok(CapacitySnapshot::idle(tick))),
            CapacitySource::LiveProbe => match self.probes.get(&island.id) {
                Some(probe) => probe.sample(tick),
                None => IdleProbe.sample(tick),
            },
            CapacitySource::Unbounded => unreachable!(),
        };
        sampled.unwrap_or_else(|_| CapacitySnapshot::exhausted(tick))
    }
}

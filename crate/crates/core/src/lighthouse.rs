//! Mesh membership: island announcements, heartbeats, liveness pruning, and
//! a cached island list used as the fallback when the coordinator fails.
//!
//! Single-coordinator model inside one process; membership mutations
//! serialize through `&mut self` while readers take generation-stamped
//! snapshots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::registry::{Catalog, IslandId};
use crate::tide::Tick;

/// Liveness timeouts in heartbeat intervals (ticks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LighthouseConfig {
    /// Ticks without a heartbeat before a member turns Suspect.
    pub suspect_after: u64,
    /// Ticks without a heartbeat before a member turns Dead.
    pub dead_after: u64,
}

impl Default for LighthouseConfig {
    fn default() -> Self {
        Self {
            suspect_after: 3,
            dead_after: 10,
        }
    }
}

/// Member liveness. Transitions move along Alive <-> Suspect <-> Dead plus
/// Dead -> Alive on announce/heartbeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Liveness {
    Alive,
    Suspect,
    Dead,
}

/// Recorded membership state for one island.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IslandStatus {
    pub last_heartbeat: Tick,
    pub announced_at: Tick,
    pub state: Liveness,
}

/// Alive member ids plus staleness when served from the cached snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberList {
    pub ids: Vec<IslandId>,
    pub stale: bool,
    pub generation: u64,
}

/// Membership errors.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LighthouseError {
    #[error("island {0} is not registered in the catalog")]
    UnregisteredIsland(IslandId),
    #[error("island {0} has never announced")]
    UnknownMember(IslandId),
}

/// The mesh coordinator's view.
#[derive(Debug, Clone)]
pub struct Lighthouse {
    config: LighthouseConfig,
    members: BTreeMap<IslandId, IslandStatus>,
    generation: u64,
    cached: Vec<IslandId>,
    failed: bool,
}

impl Lighthouse {
    pub fn new(config: LighthouseConfig) -> Self {
        Self {
            config,
            members: BTreeMap::new(),
            generation: 0,
            cached: Vec::new(),
            failed: false,
        }
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn status(&self, id: &IslandId) -> Option<&IslandStatus> {
        self.members.get(id)
    }

    /// Mark the coordinator failed; `get_islands` then serves the cached
    /// snapshot flagged stale.
    pub fn set_failed(&mut self, failed: bool) {
        self.failed = failed;
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    fn effective_state(&self, status: &IslandStatus, now: Tick) -> Liveness {
        if status.state == Liveness::Dead {
            return Liveness::Dead;
        }
        let age = now.saturating_sub(status.last_heartbeat);
        if age <= self.config.suspect_after {
            Liveness::Alive
        } else if age <= self.config.dead_after {
            Liveness::Suspect
        } else {
            Liveness::Dead
        }
    }

    fn refresh_cache(&mut self) {
        let alive: Vec<IslandId> = self
            .members
            .iter()
            .filter(|(_, s)| s.state == Liveness::Alive)
            .map(|(id, _)| id.clone())
            .collect();
        // last known-good list: never clobber it with an empty view
        if !alive.is_empty() {
            self.cached = alive;
        }
    }

    /// Add or revive a member. The island must be registered in the catalog.
    pub fn announce(
        &mut self,
        id: &IslandId,
        tick: Tick,
        catalog: &Catalog,
    ) -> Result<(), LighthouseError> {
        if catalog.get(id).is_none() {
            return Err(LighthouseError::UnregisteredIsland(id.clone()));
        }
        match self.members.get_mut(id) {
            None => {
                self.members.insert(
                    id.clone(),
                    IslandStatus {
                        last_heartbeat: tick,
                        announced_at: tick,
                        state: Liveness::Alive,
                    },
                );
                self.generation += 1;
                self.refresh_cache();
            }
            Some(status) => {
                if tick < status.last_heartbeat {
                    return Ok(()); // stale announcement under the monotonic clock rule
                }
                status.last_heartbeat = tick;
                status.announced_at = tick;
                if status.state != Liveness::Alive {
                    status.state = Liveness::Alive;
                    self.generation += 1;
                    self.refresh_cache();
                }
            }
        }
        Ok(())
    }

    /// Record a heartbeat. Dead members rejoin as Alive; ticks older than
    /// the member's last heartbeat are ignored.
    pub fn heartbeat(&mut self, id: &IslandId, tick: Tick) -> Result<IslandStatus, LighthouseError> {
        let status = self
            .members
            .get_mut(id)
            .ok_or_else(|| LighthouseError::UnknownMember(id.clone()))?;
        if tick < status.last_heartbeat {
            return Ok(*status);
        }
        status.last_heartbeat = tick;
        let revived = status.state != Liveness::Alive;
        if revived {
            status.state = Liveness::Alive;
        }
        let snapshot = *status;
        if revived {
            self.generation += 1;
            self.refresh_cache();
        }
        Ok(snapshot)
    }

    /// Materialize time-based liveness transitions at `now`.
    pub fn prune(&mut self, now: Tick) {
        let mut changed = false;
        let transitions: Vec<(IslandId, Liveness)> = self
            .members
            .iter()
            .filter_map(|(id, status)| {
                let effective = self.effective_state(status, now);
                (effective != status.state).then(|| (id.clone(), effective))
            })
            .collect();
        for (id, state) in transitions {
            if let Some(status) = self.members.get_mut(&id) {
                status.state = state;
                changed = true;
            }
        }
        if changed {
            self.generation += 1;
            if !self.failed {
                self.refresh_cache();
            }
        }
    }

    /// Alive members at `now`. A failed coordinator serves the cached
    /// snapshot instead, flagged stale.
    pub fn get_islands(&self, now: Tick) -> MemberList {
        if self.failed {
            return MemberList {
                ids: self.cached.clone(),
                stale: true,
                generation: self.generation,
            };
        }
        let ids = self
            .members
            .iter()
            .filter(|(_, status)| self.effective_state(status, now) == Liveness::Alive)
            .map(|(id, _)| id.clone())
            .collect();
        MemberList {
            ids,
            stale: false,
            generation: self.generation,
        }
    }
}

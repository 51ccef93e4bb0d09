use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Instance;
use crate::solvers::{held_karp_exact, Trajectory, HELD_KARP_MAX_N};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefSource {
    /// Proven optimum from dynamic programming.
    ExactDp,
    /// Shortest tour observed in any recorded run.
    BestKnown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefEntry {
    pub length: f64,
    pub source: RefSource,
    /// Plans whose runs contributed, sorted.
    pub provenance: Vec<String>,
    /// Registry revision at which this entry last changed.
    pub revision: u64,
}

/// Reference lengths per instance id, standing in for certified optima.
///
/// Every change bumps the registry revision; analyses store the revision they
/// were computed against and are stale once it moves on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRegistry {
    revision: u64,
    entries: BTreeMap<String, RefEntry>,
}

impl ReferenceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn is_stale(&self, computed_at: u64) -> bool {
        computed_at < self.revision
    }

    pub fn get(&self, id: &str) -> Option<&RefEntry> {
        self.entries.get(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &RefEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn length(&self, id: &str) -> Result<f64> {
        self.get(id)
            .map(|e| e.length)
            .ok_or_else(|| Error::MissingReference(vec![id.to_owned()]))
    }

    /// Fails listing every id without a reference.
    pub fn require<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let mut missing: Vec<String> = ids
            .into_iter()
            .filter(|id| !self.entries.contains_key(*id))
            .map(str::to_owned)
            .collect();
        missing.sort();
        missing.dedup();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingReference(missing))
        }
    }

    /// Stores a proven optimum, replacing any best-known value.
    pub fn set_exact(&mut self, id: &str, length: f64) {
        if let Some(e) = self.entries.get(id) {
            if e.source == RefSource::ExactDp && e.length == length {
                return;
            }
        }
        self.revision += 1;
        self.entries.insert(
            id.to_owned(),
            RefEntry {
                length,
                source: RefSource::ExactDp,
                provenance: Vec::new(),
                revision: self.revision,
            },
        );
    }

    /// Folds an observed final length into the best-known value.
    ///
    /// Returns true if the reference changed.
    pub fn observe(&mut self, id: &str, length: f64, plan: &str) -> bool {
        if !length.is_finite() || length <= 0.0 {
            return false;
        }
        match self.entries.get_mut(id) {
            Some(e) if e.source == RefSource::ExactDp => {
                if length < e.length * (1.0 - 1e-9) {
                    log::warn!(
                        "instance {id}: observed length {length} below exact optimum {}",
                        e.length
                    );
                }
                false
            }
            Some(e) => {
                if let Err(pos) = e.provenance.binary_search_by(|p| p.as_str().cmp(plan)) {
                    e.provenance.insert(pos, plan.to_owned());
                }
                if length < e.length {
                    self.revision += 1;
                    e.length = length;
                    e.revision = self.revision;
                    true
                } else {
                    false
                }
            }
            None => {
                self.revision += 1;
                self.entries.insert(
                    id.to_owned(),
                    RefEntry {
                        length,
                        source: RefSource::BestKnown,
                        provenance: vec![plan.to_owned()],
                        revision: self.revision,
                    },
                );
                true
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Computes a reference for `inst` without touching any registry.
///
/// Uses Held-Karp when allowed and small enough, else the minimum final
/// length over `runs`.
pub fn reference_optimum(
    inst: &Instance,
    runs: &[Trajectory],
    allow_exact: bool,
    plan: &str,
) -> Result<RefEntry> {
    if allow_exact && inst.len() <= HELD_KARP_MAX_N {
        let (_, length) = held_karp_exact(inst)?;
        return Ok(RefEntry {
            length,
            source: RefSource::ExactDp,
            provenance: Vec::new(),
            revision: 0,
        });
    }
    runs.iter()
        .filter_map(Trajectory::final_length)
        .min_by(f64::total_cmp)
        .map(|length| RefEntry {
            length,
            source: RefSource::BestKnown,
            provenance: vec![plan.to_owned()],
            revision: 0,
        })
        .ok_or_else(|| Error::MissingReference(vec![inst.id().to_owned()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::test_util::random_instance;
    use crate::solvers::IncumbentEvent;

    fn run(len: f64) -> Trajectory {
        Trajectory {
            instance: "i".into(),
            solver: "s".into(),
            seed: 0,
            cutoff_ms: 10,
            events: vec![IncumbentEvent {
                elapsed_ms: 1,
                evals: 1,
                length: len,
            }],
        }
    }

    #[test]
    fn exact_delegates_to_dp() {
        let inst = random_instance(10, 1, 1000.0);
        let e = reference_optimum(&inst, &[], true, "p").unwrap();
        assert_eq!(e.source, RefSource::ExactDp);
        assert_eq!(e.length, held_karp_exact(&inst).unwrap().1);
    }

    #[test]
    fn best_known_is_minimum() {
        let inst = random_instance(20, 1, 1000.0);
        let runs = [run(105.0), run(100.0), run(102.0)];
        let e = reference_optimum(&inst, &runs, true, "p").unwrap();
        assert_eq!((e.length, e.source), (100.0, RefSource::BestKnown));
        assert!(matches!(
            reference_optimum(&inst, &[], false, "p"),
            Err(Error::MissingReference(_))
        ));
    }

    #[test]
    fn monotone_updates_mark_stale() {
        let mut reg = ReferenceRegistry::new();
        for l in [105.0, 100.0, 102.0] {
            reg.observe("a", l, "p1");
        }
        assert_eq!(reg.length("a").unwrap(), 100.0);
        let snapshot = reg.revision();
        assert!(!reg.observe("a", 101.0, "p2"));
        assert!(!reg.is_stale(snapshot));
        assert!(reg.observe("a", 99.0, "p2"));
        assert!(reg.is_stale(snapshot));
        assert_eq!(reg.length("a").unwrap(), 99.0);
        assert_eq!(reg.get("a").unwrap().provenance, vec!["p1", "p2"]);

        reg.set_exact("b", 50.0);
        assert!(!reg.observe("b", 60.0, "p"));
        assert_eq!(reg.length("b").unwrap(), 50.0);
        match reg.require(["a", "z", "y"]) {
            Err(Error::MissingReference(ids)) => assert_eq!(ids, vec!["y", "z"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let mut reg = ReferenceRegistry::new();
        reg.observe("a", 10.0, "p");
        reg.set_exact("b", 7.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reg.json");
        reg.save(&path).unwrap();
        assert_eq!(ReferenceRegistry::load(&path).unwrap(), reg);
    }
}

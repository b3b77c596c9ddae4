//! In-memory scenarios and jobs, mirrored to the data directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use facplan::scenario::{Scenario, ScenarioFile};
use serde::Serialize;

use crate::error::ApiError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    /// Queued → running → done or failed, never backwards.
    pub fn can_become(self, next: JobState) -> bool {
        matches!(
            (self, next),
            (JobState::Queued, JobState::Running)
                | (JobState::Running, JobState::Done)
                | (JobState::Running, JobState::Failed)
                | (JobState::Queued, JobState::Failed)
        )
    }

    pub fn is_pending(self) -> bool {
        matches!(self, JobState::Queued | JobState::Running)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Plan,
    Refine,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct JobProgress {
    pub completed: usize,
    pub total: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Job {
    pub id: String,
    pub scenario_id: String,
    pub scenario_version: u32,
    pub kind: JobKind,
    pub request: serde_json::Value,
    pub state: JobState,
    pub progress: JobProgress,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub result: Option<String>,
}

#[derive(Clone)]
pub struct StoredScenario {
    pub id: String,
    pub version: u32,
    pub scenario: Arc<Scenario>,
}

pub struct Store {
    data_dir: PathBuf,
    scenarios: BTreeMap<String, StoredScenario>,
    jobs: BTreeMap<String, Job>,
    next_scenario: u64,
    next_job: u64,
}

fn io_error(path: &Path, e: std::io::Error) -> ApiError {
    ApiError::Internal(format!("{}: {e}", path.display()))
}

impl Store {
    /// Opens `data_dir`, which must exist, and reloads the latest version of
    /// every saved scenario.
    pub fn open(data_dir: &Path) -> Result<Self, ApiError> {
        if !data_dir.is_dir() {
            return Err(ApiError::Internal(format!(
                "data directory {} does not exist",
                data_dir.display()
            )));
        }
        for sub in ["scenarios", "results"] {
            let p = data_dir.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| io_error(&p, e))?;
        }
        let mut store = Store {
            data_dir: data_dir.to_path_buf(),
            scenarios: BTreeMap::new(),
            jobs: BTreeMap::new(),
            next_scenario: 1,
            next_job: 1,
        };
        let dir = data_dir.join("scenarios");
        let mut saved: BTreeMap<u64, (u32, PathBuf)> = BTreeMap::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| io_error(&dir, e))? {
            let path = entry.map_err(|e| io_error(&dir, e))?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let Some((id, version)) = stem.split_once("-v") else { continue };
            let (Some(n), Ok(version)) = (id.strip_prefix('s').and_then(|n| n.parse().ok()), version.parse()) else {
                continue;
            };
            let slot = saved.entry(n).or_insert((version, path.clone()));
            if version > slot.0 {
                *slot = (version, path);
            }
        }
        for (n, (version, path)) in saved {
            match Scenario::load(&path) {
                Ok(s) => {
                    let id = format!("s{n}");
                    store.scenarios.insert(
                        id.clone(),
                        StoredScenario {
                            id,
                            version,
                            scenario: Arc::new(s),
                        },
                    );
                    store.next_scenario = store.next_scenario.max(n + 1);
                }
                Err(e) => tracing::warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(store)
    }

    fn save_scenario(&self, id: &str, version: u32, file: &ScenarioFile) -> Result<(), ApiError> {
        let path = self.data_dir.join("scenarios").join(format!("{id}-v{version}.scn"));
        std::fs::write(&path, file.to_text()).map_err(|e| io_error(&path, e))
    }

    pub fn insert_scenario(&mut self, scenario: Scenario) -> Result<StoredScenario, ApiError> {
        let id = format!("s{}", self.next_scenario);
        self.save_scenario(&id, 1, &scenario.file)?;
        self.next_scenario += 1;
        let stored = StoredScenario {
            id: id.clone(),
            version: 1,
            scenario: Arc::new(scenario),
        };
        self.scenarios.insert(id, stored.clone());
        Ok(stored)
    }

    /// Replaces a scenario with a new version. Refused while any job on it is
    /// queued or running; finished jobs keep the version they ran on.
    pub fn replace_scenario(&mut self, id: &str, scenario: Scenario) -> Result<StoredScenario, ApiError> {
        let current = self.scenario(id)?;
        if let Some(job) = self.jobs.values().find(|j| j.scenario_id == id && j.state.is_pending()) {
            return Err(ApiError::Conflict(format!(
                "scenario {id} has pending job {}; retry once it finishes",
                job.id
            )));
        }
        let version = current.version + 1;
        self.save_scenario(id, version, &scenario.file)?;
        let stored = StoredScenario {
            id: id.to_string(),
            version,
            scenario: Arc::new(scenario),
        };
        self.scenarios.insert(id.to_string(), stored.clone());
        Ok(stored)
    }

    pub fn scenario(&self, id: &str) -> Result<StoredScenario, ApiError> {
        self.scenarios
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown scenario {id}")))
    }

    pub fn create_job(&mut self, scenario: &StoredScenario, kind: JobKind, request: serde_json::Value, total: usize) -> Job {
        let job = Job {
            id: format!("j{}", self.next_job),
            scenario_id: scenario.id.clone(),
            scenario_version: scenario.version,
            kind,
            request,
            state: JobState::Queued,
            progress: JobProgress { completed: 0, total },
            error: None,
            result: None,
        };
        self.next_job += 1;
        self.jobs.insert(job.id.clone(), job.clone());
        job
    }

    pub fn job(&self, id: &str) -> Result<&Job, ApiError> {
        self.jobs
            .get(id)
            .ok_or_else(|| ApiError::NotFound(format!("unknown job {id}")))
    }

    fn job_mut(&mut self, id: &str) -> Result<&mut Job, ApiError> {
        self.jobs
            .get_mut(id)
            .ok_or_else(|| ApiError::NotFound(format!("unknown job {id}")))
    }

    pub fn advance(&mut self, id: &str, next: JobState) -> Result<(), ApiError> {
        let job = self.job_mut(id)?;
        if !job.state.can_become(next) {
            return Err(ApiError::Internal(format!(
                "job {id} cannot move from {:?} to {next:?}",
                job.state
            )));
        }
        job.state = next;
        Ok(())
    }

    pub fn set_progress(&mut self, id: &str, completed: usize) {
        if let Ok(job) = self.job_mut(id) {
            job.progress.completed = job.progress.completed.max(completed);
        }
    }

    pub fn finish(&mut self, id: &str, outcome: Result<String, String>) -> Result<(), ApiError> {
        match outcome {
            Ok(body) => {
                let path = self.data_dir.join("results").join(format!("{id}.json"));
                std::fs::write(&path, &body).map_err(|e| io_error(&path, e))?;
                self.advance(id, JobState::Done)?;
                let job = self.job_mut(id)?;
                job.progress.completed = job.progress.total;
                job.result = Some(body);
            }
            Err(message) => {
                self.advance(id, JobState::Failed)?;
                self.job_mut(id)?.error = Some(message);
            }
        }
        Ok(())
    }
}

//! Export jobs: queued, run on the blocking pool, polled by id.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use previz_core::groundtruth::export::MANIFEST_FILE;
use previz_core::groundtruth::{export_bundle, ExportOptions, PromptBinding};
use previz_core::scene::SceneDoc;
use previz_core::storyboard::ShotAsset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportRequest {
    pub asset_id: String,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub prompts: Vec<PromptBinding>,
    #[serde(default)]
    pub creation_tag: String,
    /// Defaults to `<export root>/<job id>`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub near_m: Option<f64>,
    #[serde(default)]
    pub far_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// Snapshot of a job as returned by the API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub id: String,
    pub asset_id: String,
    pub width: usize,
    pub height: usize,
    pub state: JobState,
    pub progress: Progress,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug)]
struct Status {
    state: JobState,
    error: Option<String>,
}

#[derive(Debug)]
pub struct Job {
    id: String,
    asset_id: String,
    opts: ExportOptions,
    out_dir: PathBuf,
    total: usize,
    done: AtomicUsize,
    status: Mutex<Status>,
}

impl Job {
    pub fn new(id: String, asset_id: String, opts: ExportOptions, out_dir: PathBuf, total: usize) -> Self {
        Self {
            id,
            asset_id,
            opts,
            out_dir,
            total,
            done: AtomicUsize::new(0),
            status: Mutex::new(Status {
                state: JobState::Queued,
                error: None,
            }),
        }
    }

    /// Moves forward only; a later state is never replaced by an earlier one.
    fn advance(&self, state: JobState, error: Option<String>) {
        let mut s = self.status.lock().expect("job lock");
        if state > s.state {
            s.state = state;
            s.error = error;
        }
    }

    pub fn view(&self) -> JobView {
        let s = self.status.lock().expect("job lock");
        JobView {
            id: self.id.clone(),
            asset_id: self.asset_id.clone(),
            width: self.opts.width,
            height: self.opts.height,
            state: s.state,
            progress: Progress {
                done: self.done.load(Ordering::SeqCst),
                total: self.total,
            },
            out_dir: self.out_dir.clone(),
            manifest: (s.state == JobState::Done).then(|| self.out_dir.join(MANIFEST_FILE)),
            error: s.error.clone(),
        }
    }

    /// Runs the export to completion on the calling thread.
    pub fn run(&self, scene: &SceneDoc, asset: &ShotAsset) {
        self.advance(JobState::Running, None);
        let result = export_bundle(scene, asset, &self.opts, &self.out_dir, &|done, _| {
            self.done.fetch_max(done, Ordering::SeqCst);
        });
        match result {
            Ok(_) => self.advance(JobState::Done, None),
            Err(e) => self.advance(JobState::Failed, Some(e.to_string())),
        }
    }
}

pub type SharedJob = Arc<Job>;

#[cfg(test)]
mod tests {
    use super::*;

    fn job() -> Job {
        Job::new("j".into(), "a".into(), ExportOptions::new(8, 8), PathBuf::from("/tmp/x"), 3)
    }

    #[test]
    fn states_only_move_forward() {
        let j = job();
        assert_eq!(j.view().state, JobState::Queued);
        j.advance(JobState::Done, None);
        j.advance(JobState::Running, None);
        assert_eq!(j.view().state, JobState::Done);
        assert_eq!(j.view().manifest, Some(PathBuf::from("/tmp/x/manifest.json")));
    }

    #[test]
    fn state_names_are_uppercase() {
        assert_eq!(serde_json::to_string(&JobState::Running).unwrap(), "\"RUNNING\"");
    }
}

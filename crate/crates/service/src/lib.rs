//! HTTP facade over the previz engine: project state, camera editing,
//! storyboards, previews and export jobs.

pub mod error;
pub mod jobs;
pub mod project;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use previz_core::cinespace::CineSpaceParams;
use previz_core::geometry::CameraIntrinsics;
use previz_core::groundtruth::export::frame_intrinsics;
use previz_core::groundtruth::preview::{render_preview, PreviewLayer};
use previz_core::groundtruth::ExportOptions;
use previz_core::storyboard::{generate, save_asset, ShotAsset, Storyboard, StoryboardError};

pub use error::{ApiError, ErrorBody};
pub use jobs::{ExportRequest, JobState, JobView};
pub use project::{CameraPatch, CameraState, CameraView, Project, ProjectDocument};

use error::parse_json;
use jobs::{Job, SharedJob};

/// Aspect used for the framing feedback returned by camera edits.
pub const FEEDBACK_ASPECT: f64 = 16.0 / 9.0;

pub struct AppState {
    /// Writers hold the lock for the whole check-and-apply, which serializes mutations.
    project: RwLock<Project>,
    assets: RwLock<HashMap<String, Arc<ShotAsset>>>,
    jobs: Mutex<BTreeMap<String, SharedJob>>,
    next_job: AtomicU64,
    export_root: PathBuf,
}

impl AppState {
    pub fn new(project: Project, export_root: PathBuf) -> Arc<Self> {
        Arc::new(Self {
            project: RwLock::new(project),
            assets: RwLock::new(HashMap::new()),
            jobs: Mutex::new(BTreeMap::new()),
            next_job: AtomicU64::new(1),
            export_root,
        })
    }

    fn project(&self) -> std::sync::RwLockReadGuard<'_, Project> {
        self.project.read().expect("project lock")
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/project", get(get_project).put(put_project))
        .route("/cameras/{id}", patch(patch_camera))
        .route("/preview", get(preview))
        .route("/storyboards", post(post_storyboard))
        .route("/storyboards/{id}/generate", post(generate_storyboard))
        .route("/exports", post(start_export))
        .route("/exports/{id}", get(poll_export))
        .with_state(state)
}

fn json<T: Serialize>(status: StatusCode, value: &T) -> Response {
    let body = serde_json::to_vec(value).expect("responses serialize");
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn check_revision(current: u64, given: u64) -> Result<(), ApiError> {
    if current == given {
        Ok(())
    } else {
        Err(ApiError::conflict(current, given))
    }
}

async fn get_project(State(state): State<Arc<AppState>>) -> Response {
    json(StatusCode::OK, &state.project().document())
}

async fn put_project(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let doc: ProjectDocument = parse_json(&body)?;
    let mut project = state.project.write().expect("project lock");
    check_revision(project.revision, doc.revision)?;
    let next = doc.into_project(project.revision + 1);
    next.validate()?;
    *project = next;
    Ok(json(StatusCode::OK, &project.document()))
}

async fn patch_camera(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let patch: CameraPatch = parse_json(&body)?;
    let mut project = state.project.write().expect("project lock");
    let current = project.cameras.get(&id).ok_or_else(|| ApiError::not_found("camera", &id))?;
    check_revision(project.revision, patch.revision)?;
    let next = patch.apply(current)?;
    let view = CameraView::new(&id, project.revision + 1, &next, FEEDBACK_ASPECT)?;
    project.cameras.insert(id, next);
    project.revision += 1;
    Ok(json(StatusCode::OK, &view))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoryboardPost {
    revision: u64,
    storyboard: Storyboard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryboardSaved {
    pub id: String,
    pub revision: u64,
    pub created: bool,
}

async fn post_storyboard(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let post: StoryboardPost = parse_json(&body)?;
    let mut project = state.project.write().expect("project lock");
    check_revision(project.revision, post.revision)?;
    project.validate_storyboard(&post.storyboard).map_err(|mut e| {
        e.body.field_path = Some(error::join_path("storyboard", e.body.field_path.as_deref().unwrap_or("")));
        e
    })?;
    let id = post.storyboard.id.clone();
    let created = project.storyboards.insert(id.clone(), post.storyboard).is_none();
    project.revision += 1;
    let saved = StoryboardSaved {
        id,
        revision: project.revision,
        created,
    };
    Ok(json(if created { StatusCode::CREATED } else { StatusCode::OK }, &saved))
}

/// Content hash of a generated asset: SHA-256 of its canonical JSON document.
pub fn asset_hash(asset: &ShotAsset) -> String {
    hex::encode(Sha256::digest(save_asset(asset).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSummary {
    pub asset_id: String,
    pub storyboard: String,
    pub frames: usize,
    pub fps: u32,
    pub first_pose: [f64; 16],
    pub last_pose: [f64; 16],
    pub first_params: CineSpaceParams,
    pub last_params: CineSpaceParams,
}

fn storyboard_error(e: StoryboardError) -> ApiError {
    match e {
        StoryboardError::Invalid(v) => ApiError::violations("", &v),
        StoryboardError::Behavior { index, source } => {
            ApiError::validation(format!("behaviors[{index}]"), source.to_string())
        }
        other => ApiError::validation("", other.to_string()),
    }
}

async fn generate_storyboard(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let board = state
        .project()
        .storyboards
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("storyboard", &id))?;
    let asset = tokio::task::spawn_blocking(move || generate(&board))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(storyboard_error)?;
    let hash = asset_hash(&asset);
    let n = asset.frames();
    let summary = AssetSummary {
        asset_id: hash.clone(),
        storyboard: id,
        frames: n,
        fps: asset.fps,
        first_pose: asset.poses[0].to_matrix(),
        last_pose: asset.poses[n - 1].to_matrix(),
        first_params: asset.cine_params[0],
        last_params: asset.cine_params[n - 1],
    };
    state.assets.write().expect("asset lock").insert(hash, Arc::new(asset));
    Ok(json(StatusCode::OK, &summary))
}

fn query_usize(q: &HashMap<String, String>, key: &str) -> Result<Option<usize>, ApiError> {
    q.get(key)
        .map(|v| v.parse().map_err(|_| ApiError::validation(key, format!("expected a non-negative integer, got `{v}`"))))
        .transpose()
}

async fn preview(State(state): State<Arc<AppState>>, Query(q): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let layer: PreviewLayer = q
        .get("layer")
        .ok_or_else(|| ApiError::validation("layer", format!("missing (valid layers: {})", PreviewLayer::valid_names())))?
        .parse()
        .map_err(|e: previz_core::groundtruth::preview::UnknownLayer| ApiError::validation("layer", e.to_string()))?;
    let width = query_usize(&q, "width")?.ok_or_else(|| ApiError::validation("width", "missing"))?;
    let height = query_usize(&q, "height")?.ok_or_else(|| ApiError::validation("height", "missing"))?;
    let scene = state.project().scene.clone();
    let (pose, focal, t_s, frame) = match (q.get("camera"), q.get("asset")) {
        (Some(cam), None) => {
            let camera = state
                .project()
                .cameras
                .get(cam)
                .cloned()
                .ok_or_else(|| ApiError::not_found("camera", cam))?;
            let t_s = match q.get("t") {
                Some(t) => t.parse::<f64>().ok().filter(|t| t.is_finite()).ok_or_else(|| ApiError::validation("t", "expected seconds"))?,
                None => 0.0,
            };
            let pose = camera.pose().map_err(|e| ApiError::validation("camera", e.to_string()))?;
            (pose, camera.params.focal_mm, t_s, None)
        }
        (None, Some(asset_id)) => {
            let asset = state
                .assets
                .read()
                .expect("asset lock")
                .get(asset_id)
                .cloned()
                .ok_or_else(|| ApiError::not_found("asset", asset_id))?;
            // out-of-range frames clamp to the last one
            let frame = query_usize(&q, "frame")?.unwrap_or(0).min(asset.frames() - 1);
            (asset.poses[frame], asset.focals[frame], frame as f64 / asset.fps as f64, Some(frame))
        }
        _ => return Err(ApiError::bad_request("give exactly one of `camera` or `asset`")),
    };
    let image = tokio::task::spawn_blocking(move || {
        let intr = frame_intrinsics(&CameraIntrinsics::default(), focal, width.max(1), height.max(1));
        render_preview(&scene, t_s, &pose, &intr, width, height, layer)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| ApiError::validation("", e.to_string()))?;
    let content_type = if image.format == "ppm" {
        "image/x-portable-pixmap"
    } else {
        "image/x-portable-graymap"
    };
    let mut response = (
        StatusCode::OK,
        [
            (header::CONTENT_TYPE, content_type.to_string()),
            (header::HeaderName::from_static("x-image-width"), image.width.to_string()),
            (header::HeaderName::from_static("x-image-height"), image.height.to_string()),
            (header::HeaderName::from_static("x-image-format"), image.format.to_string()),
        ],
        image.bytes,
    )
        .into_response();
    if let Some(f) = frame {
        response.headers_mut().insert("x-frame", f.into());
    }
    Ok(response)
}

async fn start_export(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: ExportRequest = parse_json(&body)?;
    let asset = state
        .assets
        .read()
        .expect("asset lock")
        .get(&req.asset_id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("asset", &req.asset_id))?;
    let mut opts = ExportOptions::new(req.width, req.height);
    opts.prompts = req.prompts;
    opts.creation_tag = req.creation_tag;
    opts.intrinsics.near_m = req.near_m.unwrap_or(opts.intrinsics.near_m);
    opts.intrinsics.far_m = req.far_m.unwrap_or(opts.intrinsics.far_m);
    if req.width == 0 || req.height == 0 {
        return Err(ApiError::validation("width", "image dimensions must be positive"));
    }
    opts.frame_intrinsics(asset.focals[0])
        .validate()
        .map_err(|e| ApiError::validation("", e.to_string()))?;
    let scene = state.project().scene.clone();
    let id = format!("job-{}", state.next_job.fetch_add(1, Ordering::SeqCst));
    let out_dir = req.out_dir.unwrap_or_else(|| state.export_root.join(&id));
    let job = Arc::new(Job::new(id.clone(), req.asset_id, opts, out_dir, asset.frames()));
    state.jobs.lock().expect("job lock").insert(id, job.clone());
    let view = job.view();
    tokio::task::spawn_blocking(move || job.run(&scene, &asset));
    Ok(json(StatusCode::ACCEPTED, &view))
}

async fn poll_export(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = state
        .jobs
        .lock()
        .expect("job lock")
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("export job", &id))?;
    Ok(json(StatusCode::OK, &job.view()))
}

//! Batch entry points: validate, generate, export and collage.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use previz_core::behaviors::Violation;
use previz_core::demo::{demo_board, demo_scene, BOARD_NAMES};
use previz_core::groundtruth::collage::{collage_bundles, CollageSpec};
use previz_core::groundtruth::{export_bundle, ExportOptions, GroundTruthError, PromptBinding};
use previz_core::scene::{load_scene_file, SceneDoc, SceneError};
use previz_core::storyboard::{generate, load_asset, save_asset, ShotAsset, Storyboard, StoryboardError};

#[derive(Debug, Parser)]
#[command(name = "previz", version, about = "Previsualization camera planning, headless")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scene, storyboards and assets without writing anything.
    Validate {
        #[arg(long)]
        scene: Option<String>,
        /// Built-in board name or path to a storyboard JSON file; repeatable.
        #[arg(long)]
        board: Vec<String>,
        #[arg(long)]
        asset: Vec<PathBuf>,
    },
    /// Generate a shot asset from a storyboard.
    Generate {
        #[arg(long)]
        board: String,
        /// Asset JSON destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fps: Option<u32>,
    },
    /// Render a conditioning bundle for a storyboard or a saved asset.
    Export {
        #[arg(long, default_value = "demo")]
        scene: String,
        #[arg(long, conflicts_with = "asset", required_unless_present = "asset")]
        board: Option<String>,
        #[arg(long)]
        asset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "512x512", value_parser = parse_size)]
        size: (usize, usize),
        #[arg(long)]
        fps: Option<u32>,
        #[arg(long)]
        near: Option<f64>,
        #[arg(long)]
        far: Option<f64>,
        /// Creation tag recorded in the manifest.
        #[arg(long, default_value = "")]
        tag: String,
        /// `target=prompt text`; target is an object id, `environment` or `shot`.
        #[arg(long)]
        prompt: Vec<String>,
    },
    /// Composite layers of exported bundles into a new bundle.
    Collage {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tag: Option<String>,
    },
}

pub fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|n| *n > 0);
    match (parse(w), parse(h)) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(format!("expected positive WxH, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Io,
    Validation,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationRecord {
    pub path: String,
    pub message: String,
}

/// Machine-readable failure report, printed as JSON on standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<ViolationRecord>,
}

impl CliError {
    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            file: None,
            line: None,
            column: None,
            violations: Vec::new(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Io, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Internal, message)
    }

    fn in_file(mut self, file: &str) -> Self {
        self.file = Some(file.to_string());
        self
    }

    fn with_violations(mut self, violations: &[Violation]) -> Self {
        self.violations = violations
            .iter()
            .map(|v| ViolationRecord {
                path: v.path.clone(),
                message: v.message.clone(),
            })
            .collect();
        self
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Io => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Internal => 3,
        }
    }

    pub fn report(&self) -> String {
        serde_json::to_string_pretty(&json!({ "error": self })).expect("reports serialize")
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read `{}`: {e}", path.display())).in_file(&path.display().to_string()))
}

fn scene_error(e: SceneError, file: &str) -> CliError {
    let err = match &e {
        SceneError::Io { .. } => CliError::io(e.to_string()),
        SceneError::Obj { file: obj, line, .. } => {
            let mut err = CliError::validation(e.to_string()).in_file(obj);
            err.line = Some(*line);
            return err;
        }
        _ => CliError::validation(e.to_string()),
    };
    err.in_file(file)
}

pub fn load_scene_arg(arg: &str) -> Result<SceneDoc, CliError> {
    if arg == "demo" {
        return Ok(demo_scene());
    }
    load_scene_file(Path::new(arg)).map_err(|e| scene_error(e, arg))
}

/// A built-in board name, or a path to a storyboard JSON document.
pub fn load_board_arg(arg: &str) -> Result<Storyboard, CliError> {
    if let Some(board) = demo_board(arg) {
        return Ok(board);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(CliError::io(format!(
            "`{arg}` is neither a file nor a built-in board ({})",
            BOARD_NAMES.join(", ")
        ))
        .in_file(arg));
    }
    let text = read(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize::<_, Storyboard>(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let mut err = CliError::validation(format!("{path}: {inner}")).in_file(arg);
        err.line = Some(inner.line());
        err.column = Some(inner.column());
        err.violations = vec![ViolationRecord {
            path,
            message: inner.to_string(),
        }];
        err
    })
}

fn storyboard_error(e: StoryboardError, file: &str) -> CliError {
    let err = CliError::validation(e.to_string()).in_file(file);
    match e {
        StoryboardError::Invalid(v) => err.with_violations(&v),
        StoryboardError::Behavior { index, source } => {
            err.with_violations(&[Violation::new(format!("behaviors[{index}]"), source.to_string())])
        }
        _ => err,
    }
}

pub fn generate_board(arg: &str, fps: Option<u32>) -> Result<ShotAsset, CliError> {
    let mut board = load_board_arg(arg)?;
    if let Some(fps) = fps {
        board.fps = fps;
    }
    board
        .validate()
        .map_err(|v| CliError::validation(format!("invalid storyboard `{}`", board.id)).in_file(arg).with_violations(&v))?;
    generate(&board).map_err(|e| storyboard_error(e, arg))
}

fn load_asset_file(path: &Path) -> Result<ShotAsset, CliError> {
    let file = path.display().to_string();
    load_asset(&read(path)?).map_err(|e| {
        CliError::validation(e.to_string())
            .in_file(&file)
            .with_violations(&[Violation::new(e.path, e.message)])
    })
}

fn groundtruth_error(e: GroundTruthError) -> CliError {
    match e {
        GroundTruthError::Io { .. } | GroundTruthError::Frame { .. } => CliError::io(e.to_string()),
        _ => CliError::validation(e.to_string()),
    }
}

fn parse_prompt(s: &str) -> Result<PromptBinding, CliError> {
    let (target, prompt) = s
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("prompt `{s}` must look like target=text")))?;
    Ok(PromptBinding {
        target: target.trim().to_string(),
        prompt: prompt.to_string(),
    })
}

/// Runs one subcommand and returns the summary printed on success (`Null` when nothing more is printed).
pub fn run(cli: Cli) -> Result<Value, CliError> {
    match cli.command {
        Command::Validate { scene, board, asset } => {
            let mut out = json!({ "ok": true });
            if let Some(s) = scene {
                let scene = load_scene_arg(&s)?;
                out["scene_objects"] = json!(scene.objects().len());
            }
            let mut boards = Vec::new();
            for b in &board {
                let generated = generate_board(b, None)?;
                boards.push(json!({ "board": b, "id": generated.id, "frames": generated.frames() }));
            }
            out["boards"] = json!(boards);
            let mut assets = Vec::new();
            for a in &asset {
                let loaded = load_asset_file(a)?;
                assets.push(json!({ "asset": a, "frames": loaded.frames() }));
            }
            out["assets"] = json!(assets);
            Ok(out)
        }
        Command::Generate { board, out, fps } => {
            let asset = generate_board(&board, fps)?;
            let doc = save_asset(&asset);
            match &out {
                Some(path) => {
                    fs::write(path, &doc).map_err(|e| CliError::io(format!("cannot write `{}`: {e}", path.display())))?;
                    Ok(json!({ "id": asset.id, "frames": asset.frames(), "fps": asset.fps, "out": out }))
                }
                // the document itself is the output
                None => {
                    println!("{doc}");
                    Ok(Value::Null)
                }
            }
        }
        Command::Export {
            scene,
            board,
            asset,
            out,
            size,
            fps,
            near,
            far,
            tag,
            prompt,
        } => {
            let scene = load_scene_arg(&scene)?;
            let asset = match (board, asset) {
                (Some(b), None) => generate_board(&b, fps)?,
                (None, Some(a)) => {
                    if fps.is_some() {
                        return Err(CliError::validation("--fps applies to storyboards, not saved assets"));
                    }
                    load_asset_file(&a)?
                }
                _ => return Err(CliError::validation("give exactly one of --board or --asset")),
            };
            let mut opts = ExportOptions::new(size.0, size.1);
            opts.creation_tag = tag;
            opts.prompts = prompt.iter().map(|p| parse_prompt(p)).collect::<Result<_, _>>()?;
            opts.intrinsics.near_m = near.unwrap_or(opts.intrinsics.near_m);
            opts.intrinsics.far_m = far.unwrap_or(opts.intrinsics.far_m);
            let manifest = export_bundle(&scene, &asset, &opts, &out, &|_, _| {}).map_err(groundtruth_error)?;
            Ok(json!({
                "out": out,
                "frames": manifest.frame_count,
                "files": manifest.files().len(),
                "width": manifest.width,
                "height": manifest.height,
            }))
        }
        Command::Collage { spec, out, tag } => {
            let text = read(&spec)?;
            let file = spec.display().to_string();
            let de = &mut serde_json::Deserializer::from_str(&text);
            let mut parsed: CollageSpec = serde_path_to_error::deserialize(de).map_err(|e| {
                let path = e.path().to_string();
                CliError::validation(format!("{path}: {}", e.into_inner())).in_file(&file)
            })?;
            // bundle paths are relative to the spec file
            let base = spec.parent().unwrap_or(Path::new("."));
            for layer in &mut parsed.layers {
                if layer.bundle.is_relative() {
                    layer.bundle = base.join(&layer.bundle);
                }
            }
            if let Some(tag) = tag {
                parsed.creation_tag = tag;
            }
            let manifest = collage_bundles(&parsed, &out).map_err(groundtruth_error)?;
            Ok(json!({ "out": out, "frames": manifest.frame_count, "files": manifest.files.len() }))
        }
    }
}

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;

use previz_core::scene::load_scene_file;
use previz_service::{router, AppState, Project};

#[derive(Debug, Parser)]
#[command(name = "previz-service", about = "Serve a previz project over HTTP")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// `demo` or a path to a scene JSON file.
    #[arg(long, default_value = "demo")]
    scene: String,
    /// Directory that receives export bundles.
    #[arg(long, default_value = "exports")]
    export_root: PathBuf,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let mut project = Project::demo();
    if args.scene != "demo" {
        project.scene = load_scene_file(args.scene.as_ref()).map_err(std::io::Error::other)?;
        project.storyboards.clear();
    }
    let app = router(AppState::new(project, args.export_root));
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sketchmesh::implicit::{mesh_to_field, save_grid, GridField, ANALYTIC_FALLOFF_FRACTION};
use sketchmesh::mesh::obj::{read_obj, to_obj_string};
use sketchmesh::raster::{compose_detail_input, render_detail_inputs, save_stack};
use sketchmesh::session::{replay, EngineConfig, SessionLog};

use sketchmesh_cli::serve;

#[derive(Parser)]
#[command(name = "sketchmesh", version, about = "Sketch-driven mesh modeling engine")]
struct Cli {
    /// Engine config as JSON; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve sessions over WebSocket, one session per connection.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Replay a session log and write the final mesh as OBJ.
    Replay {
        log: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Replay a session log and write its detail input image stack.
    ExportStack {
        log: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Image side in pixels; the config's raster size when omitted.
        #[arg(long)]
        size: Option<usize>,
    },
    /// Occupancy field utilities.
    Field {
        #[command(subcommand)]
        command: FieldCmd,
    },
}

#[derive(Subcommand)]
enum FieldCmd {
    /// Sample a watertight mesh's occupancy onto a grid file.
    Bake {
        mesh: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 128)]
        dims: usize,
        /// Falloff width as a fraction of the mesh bbox diagonal.
        #[arg(long, default_value_t = ANALYTIC_FALLOFF_FRACTION)]
        falloff: f64,
    },
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        None => Ok(EngineConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn replay_log(path: &Path, config: &EngineConfig) -> Result<sketchmesh::session::Session> {
    let log = SessionLog::load(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(replay(&log, config)?)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Cmd::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(SocketAddr::new(host, port)).await?;
                log::info!("listening on {}", listener.local_addr()?);
                serve::serve(listener, config).await
            })
        }
        Cmd::Replay { log, output } => {
            let session = replay_log(&log, &config)?;
            std::fs::write(&output, to_obj_string(session.mesh()))
                .with_context(|| format!("writing {}", output.display()))
        }
        Cmd::ExportStack { log, output, size } => {
            let session = replay_log(&log, &config)?;
            let size = size.unwrap_or(config.raster_size);
            let inputs = render_detail_inputs(session.mesh(), &session.state().sketch_strokes(), size);
            let stack = compose_detail_input(&inputs.sketch, &inputs.normals, &inputs.front_depth, &inputs.back_depth)?;
            Ok(save_stack(&stack, &output)?)
        }
        Cmd::Field { command: FieldCmd::Bake { mesh, output, dims, falloff } } => {
            let mesh = read_obj(&mesh).with_context(|| format!("reading {}", mesh.display()))?;
            let field = mesh_to_field(&mesh, falloff * mesh.bbox_diagonal())?;
            let grid = GridField::bake(&field, [dims; 3])?;
            Ok(save_grid(&grid, &output)?)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

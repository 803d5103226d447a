mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "splitsum", version, about = "Split-sum environment lighting tools")]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bake a prefiltered roughness pyramid from an environment map.
    Prefilter(commands::PrefilterArgs),
    /// Bake the split-sum BRDF lookup table.
    BakeLut(commands::BakeLutArgs),
    /// Fit a neural illumination field to an environment map.
    FitIllum(commands::FitIllumArgs),
    /// Bake per-point occlusion factors for a mesh.
    BakeOcclusion(commands::BakeOcclusionArgs),
    /// Render a scene description to an image.
    Render(commands::RenderArgs),
    /// Compare two HDR images and report PSNR.
    Compare(commands::CompareArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            log::error!("--threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::error!("cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Prefilter(a) => commands::prefilter(a),
        Command::BakeLut(a) => commands::bake_lut(a),
        Command::FitIllum(a) => commands::fit_illum(a),
        Command::BakeOcclusion(a) => commands::bake_occlusion(a),
        Command::Render(a) => commands::render(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

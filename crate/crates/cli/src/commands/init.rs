use std::path::PathBuf;

use clap::Args;

use super::{create_dir, ConfigArgs, FanOutArgs};
use crate::error::{CliError, CliResult};
use crate::fanout::fan_out;
use crate::manifest::Manifest;
use crate::state::{build_initial, snapshot_params};

/// Build an initial state and write it as `initial.qmps` (or `.qfld` for
/// the dense backend) together with the resolved `run.toml`.
#[derive(Args, Debug)]
pub struct InitArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory (defaults to `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fanout: FanOutArgs,
}

pub fn run(args: &InitArgs) -> CliResult<()> {
    let mut config = args
        .config
        .resolve(None)?
        .ok_or_else(|| CliError::Config("init needs --config FILE or --preset NAME".into()))?;
    let out = args.out.clone().unwrap_or_else(|| config.output.directory.clone());
    if args.fanout.active() {
        return fan_out(&out, &args.fanout.seeds(config.seed)?);
    }
    create_dir(&out)?;
    config.output.directory = out.clone();
    let mut manifest = Manifest::new("init", config.hash()?);
    manifest.seed = Some(config.seed);
    let state = manifest.time("build", || build_initial(&config))?;
    let path = state.save(&out, "initial", 0.0, snapshot_params(&config)?)?;
    let toml_path = out.join("run.toml");
    std::fs::write(&toml_path, config.to_toml()?)?;
    println!("wrote {}", path.display());
    manifest.output(path);
    manifest.output(toml_path);
    manifest.write(&out.join("manifest.init.json"))
}

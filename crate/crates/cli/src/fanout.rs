//! `--replicas`/`--seeds`: rerun the current command once per seed, each in
//! its own process and output directory.

use std::path::Path;
use std::process::{Child, Command};

use crate::error::{CliError, CliResult};

/// Drop the fan-out and output flags (with their values) from an argument list.
pub fn strip_fanout_args(args: &[String]) -> Vec<String> {
    const FLAGS: [&str; 3] = ["--replicas", "--seeds", "--out"];
    let mut kept = Vec::new();
    let mut skip_value = false;
    for arg in args {
        if skip_value {
            skip_value = false;
            continue;
        }
        if FLAGS.contains(&arg.as_str()) {
            skip_value = true;
        } else if !FLAGS.iter().any(|f| arg.starts_with(&format!("{f}="))) {
            kept.push(arg.clone());
        }
    }
    kept
}

/// Launch one child per seed under `base/replica_NNN`, at most as many at a
/// time as there are cores, and wait for all of them.
pub fn fan_out(base: &Path, seeds: &[u64]) -> CliResult<()> {
    std::fs::create_dir_all(base)?;
    let exe = std::env::current_exe()?;
    let args = strip_fanout_args(&std::env::args().skip(1).collect::<Vec<_>>());
    let parallel = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut running: Vec<(usize, Child)> = Vec::new();
    let mut failed = Vec::new();
    let wait_oldest = |running: &mut Vec<(usize, Child)>, failed: &mut Vec<usize>| -> CliResult<()> {
        let (k, mut child) = running.remove(0);
        if !child.wait()?.success() {
            failed.push(k);
        }
        Ok(())
    };
    for (k, seed) in seeds.iter().enumerate() {
        if running.len() == parallel {
            wait_oldest(&mut running, &mut failed)?;
        }
        let dir = base.join(format!("replica_{k:03}"));
        let child = Command::new(&exe)
            .args(&args)
            .arg("--out")
            .arg(&dir)
            .arg("--set")
            .arg(format!("seed={seed}"))
            .spawn()?;
        log::info!("replica {k} (seed {seed}) -> {}", dir.display());
        running.push((k, child));
    }
    while !running.is_empty() {
        wait_oldest(&mut running, &mut failed)?;
    }
    if failed.is_empty() {
        println!("{} replicas finished under {}", seeds.len(), base.display());
        Ok(())
    } else {
        Err(CliError::Other(format!("replicas {failed:?} failed")))
    }
}

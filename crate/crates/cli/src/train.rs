use std::path::PathBuf;

use clap::Parser;
use deblur_core::fsutil::write_atomic;
use deblur_core::{Error, Result};
use rrdbnet::{train, NetConfig, TrainConfig};

#[derive(Parser)]
pub struct Args {
    /// Dataset manifest written by `synth`.
    #[arg(long)]
    manifest: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Number of RRDB blocks.
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature channels per layer.
    #[arg(long, default_value_t = 64)]
    channels: usize,
    /// Stop after this many optimizer steps.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Training report path (JSON); defaults to the checkpoint path plus `.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let net = NetConfig {
        num_rrdb: args.blocks,
        base_channels: args.channels,
        ..NetConfig::default()
    };
    let cfg = TrainConfig {
        batch_size: args.batch,
        learning_rate: args.lr,
        epochs: args.epochs,
        seed: args.seed,
        max_steps: args.max_steps,
        ..TrainConfig::default()
    };
    net.validate()?;
    cfg.validate()?;
    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".json");
        p.into()
    });
    let report = train(&args.manifest, &net, &cfg, &args.out, |_, _| {})?;
    for e in &report.epochs {
        match e.validation_mse {
            Some(v) => println!(
                "epoch {}\ttrain {:.6}\tval {:.6}\t{:.1}s",
                e.epoch + 1,
                e.train_loss,
                v,
                e.wall_seconds
            ),
            None => println!(
                "epoch {}\ttrain {:.6}\tval -\t{:.1}s",
                e.epoch + 1,
                e.train_loss,
                e.wall_seconds
            ),
        }
    }
    let mut json = serde_json::to_vec_pretty(&report).map_err(|e| Error::format(&report_path, e.to_string()))?;
    json.push(b'\n');
    write_atomic(&report_path, &json)
}

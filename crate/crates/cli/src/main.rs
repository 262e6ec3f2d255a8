//! `deblur`: synthesize training data, estimate PSFs, train, infer, evaluate.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 usage, 3 numerical failure.

mod estimate;
mod eval;
mod infer;
mod synth;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deblur_core::Error;

#[derive(Parser)]
#[command(
    name = "deblur",
    version,
    about = "Blind deblurring toolkit for out-of-focus microscopy images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur sharp stacks with a kernel bank and cut aligned training patches.
    Synth(synth::Args),
    /// Estimate a PSF bank from a sharp image and a blurry image of the same scene.
    Estimate(estimate::Args),
    /// Train the network on a synthesized dataset.
    Train(train::Args),
    /// Deblur an image with a trained checkpoint.
    Infer(infer::Args),
    /// Print MSE, PSNR and SSIM of predictions against references.
    Eval(eval::Args),
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Format { .. } | Error::Shape(_) => 1,
        Error::InvalidArgument(_) => 2,
        Error::Singular { .. } | Error::Numeric(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth::run(a),
        Command::Estimate(a) => estimate::run(a),
        Command::Train(a) => train::run(a),
        Command::Infer(a) => infer::run(a),
        Command::Eval(a) => eval::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::PathBuf;

use clap::Parser;
use deblur_core::imagecore::load_image;
use deblur_core::metrics::{mse, psnr_from_mse, ssim, SsimConfig};
use deblur_core::{Error, Result};

#[derive(Parser)]
pub struct Args {
    /// Predicted image; repeat to evaluate several pairs.
    #[arg(long, required = true)]
    pred: Vec<PathBuf>,
    /// Reference image, paired with --pred by position.
    #[arg(long, required = true)]
    r#ref: Vec<PathBuf>,
    /// SSIM Gaussian window size (odd).
    #[arg(long, default_value_t = 11)]
    window: usize,
}

/// `path  MSE  PSNR  SSIM`, tab separated.
pub fn format_line(path: &str, mse: f64, psnr: f64, ssim: f64) -> String {
    let psnr = if psnr.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psnr:.2}")
    };
    format!("{path}\t{mse:.9}\t{psnr}\t{ssim:.4}")
}

pub fn run(args: Args) -> Result<()> {
    if args.pred.len() != args.r#ref.len() {
        return Err(Error::InvalidArgument(format!(
            "{} --pred paths but {} --ref paths",
            args.pred.len(),
            args.r#ref.len()
        )));
    }
    let cfg = SsimConfig::with_window(args.window);
    for (p, r) in args.pred.iter().zip(&args.r#ref) {
        let pred = load_image(p)?;
        let reference = load_image(r)?;
        let m = mse(&pred, &reference)?;
        let s = ssim(&pred, &reference, &cfg)?;
        println!("{}", format_line(&p.display().to_string(), m, psnr_from_mse(m, 1.0), s));
    }
    Ok(())
}

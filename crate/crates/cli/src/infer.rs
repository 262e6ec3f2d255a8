use std::path::PathBuf;

use clap::Parser;
use deblur_core::imagecore::{load_image, save_image_as, RasterFormat};
use deblur_core::Result;
use rrdbnet::{infer_image, load_checkpoint, InferOptions, InferOutput};

#[derive(Parser)]
pub struct Args {
    /// Blurry input image.
    #[arg(long)]
    input: PathBuf,
    /// Checkpoint written by `train`.
    #[arg(long)]
    ckpt: PathBuf,
    /// Output raster; `.pgm` selects binary PGM, anything else PNG.
    #[arg(long)]
    out: PathBuf,
    /// Stretch the output histogram to the full 0..255 range.
    #[arg(long)]
    stretch: bool,
}

pub fn run(args: Args) -> Result<()> {
    let params = load_checkpoint(&args.ckpt)?;
    let img = load_image(&args.input)?;
    let format = RasterFormat::for_path(&args.out);
    match infer_image(&img, &params, &InferOptions::default(), args.stretch)? {
        InferOutput::Image(out) => save_image_as(&out, &args.out, format),
        InferOutput::Stretched(s) => {
            if s.degenerate {
                eprintln!("warning: constant output, stretched to all zeros");
            }
            save_image_as(&s.image, &args.out, format)
        }
    }
}

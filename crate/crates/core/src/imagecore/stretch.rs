use super::{quantize_level, Image, Image8};

/// Result of [`histogram_stretch`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stretched {
    pub image: Image8,
    /// Set when the input was constant; the output is then all zeros.
    pub degenerate: bool,
}

/// Maps the observed range `[fmin, fmax]` affinely onto `[0, 255]`:
/// `g = (f - fmin) / (fmax - fmin) * 255`, rounded half up.
pub fn histogram_stretch(img: &Image) -> Stretched {
    let (lo, hi) = img.min_max();
    let (h, w) = img.dims();
    if hi <= lo {
        return Stretched {
            image: Image8::new(h, w, vec![0; h * w]).expect("dims of a valid image"),
            degenerate: true,
        };
    }
    let range = hi - lo;
    let data = img
        .data()
        .iter()
        .map(|&f| quantize_level((f - lo) / range * 255.0))
        .collect();
    Stretched {
        image: Image8::new(h, w, data).expect("dims of a valid image"),
        degenerate: false,
    }
}

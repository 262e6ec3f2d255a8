use super::Image;

/// The eight symmetries of the square. Rotations are counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dihedral {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    FlipHorizontal,
    FlipVertical,
    Transpose,
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::FlipHorizontal,
        Dihedral::FlipVertical,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    fn swaps_axes(self) -> bool {
        matches!(
            self,
            Dihedral::Rot90 | Dihedral::Rot270 | Dihedral::Transpose | Dihedral::AntiTranspose
        )
    }

    /// Source pixel for output `(r, c)` of an `h`x`w` input.
    fn source(self, r: usize, c: usize, h: usize, w: usize) -> (usize, usize) {
        match self {
            Dihedral::Identity => (r, c),
            Dihedral::Rot90 => (c, w - 1 - r),
            Dihedral::Rot180 => (h - 1 - r, w - 1 - c),
            Dihedral::Rot270 => (h - 1 - c, r),
            Dihedral::FlipHorizontal => (r, w - 1 - c),
            Dihedral::FlipVertical => (h - 1 - r, c),
            Dihedral::Transpose => (c, r),
            Dihedral::AntiTranspose => (h - 1 - c, w - 1 - r),
        }
    }

    pub fn apply(self, img: &Image) -> Image {
        let (h, w) = img.dims();
        let (oh, ow) = if self.swaps_axes() { (w, h) } else { (h, w) };
        let mut data = Vec::with_capacity(h * w);
        for r in 0..oh {
            for c in 0..ow {
                let (sr, sc) = self.source(r, c, h, w);
                data.push(img.get(sr, sc));
            }
        }
        Image::new(oh, ow, data).expect("permutation of a valid image")
    }
}

/// All eight dihedral variants of `img`, in [`Dihedral::ALL`] order.
pub fn dihedral_augment(img: &Image) -> Vec<Image> {
    Dihedral::ALL.iter().map(|t| t.apply(img)).collect()
}

use serde::Serialize;

use super::estimate::{select_kernel_size, select_kernel_size_denoised, KernelEstimate, Lambda};
use super::{MAX_KERNEL_SIZE, MIN_KERNEL_SIZE};
use crate::{Error, Image, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeCategory {
    Small,
    Medium,
    Large,
}

impl SizeCategory {
    pub fn of(size: usize) -> Self {
        match size {
            0..=10 => SizeCategory::Small,
            11..=20 => SizeCategory::Medium,
            _ => SizeCategory::Large,
        }
    }
}

/// One aligned patch pair. When `reference` is set, `blur` is a denoised
/// version of it and fits are scored against the reference.
#[derive(Debug, Clone)]
pub struct EstimationPair {
    pub sharp: Image,
    pub blur: Image,
    pub reference: Option<Image>,
    pub offset: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct BankOptions {
    pub sizes: Vec<usize>,
    pub lambda: Lambda,
    pub top_n: usize,
}

impl Default for BankOptions {
    fn default() -> Self {
        Self {
            sizes: (MIN_KERNEL_SIZE..=MAX_KERNEL_SIZE).step_by(2).collect(),
            lambda: Lambda::Auto,
            top_n: 5,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct KernelBank {
    pub small: Vec<KernelEstimate>,
    pub medium: Vec<KernelEstimate>,
    pub large: Vec<KernelEstimate>,
    /// Best `top_n` medium estimates, then the best `top_n` large ones.
    pub selected: Vec<KernelEstimate>,
    pub failures: Vec<((usize, usize), String)>,
    pub top_n: usize,
}

impl KernelBank {
    pub fn category(&self, cat: SizeCategory) -> &[KernelEstimate] {
        match cat {
            SizeCategory::Small => &self.small,
            SizeCategory::Medium => &self.medium,
            SizeCategory::Large => &self.large,
        }
    }

    /// Number of selected kernels per category, for reporting shortfalls.
    pub fn selected_counts(&self) -> (usize, usize) {
        let medium = self
            .selected
            .iter()
            .filter(|e| SizeCategory::of(e.size) == SizeCategory::Medium)
            .count();
        (medium, self.selected.len() - medium)
    }
}

/// Runs size selection on every pair, buckets the winners by size and keeps
/// the `top_n` lowest-fit medium and large kernels. Pairs that fail are
/// recorded rather than aborting the whole bank.
pub fn build_kernel_bank(pairs: &[EstimationPair], opts: &BankOptions) -> Result<KernelBank> {
    if opts.sizes.is_empty() {
        return Err(Error::InvalidArgument("no candidate kernel sizes".into()));
    }
    let mut bank = KernelBank {
        top_n: opts.top_n,
        ..KernelBank::default()
    };
    for pair in pairs {
        let est = match &pair.reference {
            Some(reference) => {
                select_kernel_size_denoised(&pair.sharp, &pair.blur, reference, &opts.sizes, opts.lambda)
            }
            None => select_kernel_size(&pair.sharp, &pair.blur, &opts.sizes, opts.lambda),
        };
        match est {
            Ok(mut est) => {
                est.patch_offset = pair.offset;
                let id = format!("est-r{}-c{}-s{}", pair.offset.0, pair.offset.1, est.size);
                est.kernel = est.kernel.with_id(id);
                match SizeCategory::of(est.size) {
                    SizeCategory::Small => bank.small.push(est),
                    SizeCategory::Medium => bank.medium.push(est),
                    SizeCategory::Large => bank.large.push(est),
                }
            }
            Err(e) => bank.failures.push((pair.offset, e.to_string())),
        }
    }
    for list in [&mut bank.small, &mut bank.medium, &mut bank.large] {
        list.sort_by(|a, b| a.fit_mse.total_cmp(&b.fit_mse));
    }
    bank.selected = bank
        .medium
        .iter()
        .take(opts.top_n)
        .chain(bank.large.iter().take(opts.top_n))
        .cloned()
        .collect();
    Ok(bank)
}

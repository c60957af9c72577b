use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("vertical {0:?} not in dataset")]
    UnknownVertical(String),
    #[error("train_page_fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SplitMode {
    /// Unseen websites of the same verticals.
    Intra { train_page_fraction: f64 },
    /// Train on every other vertical, test on `held_out`.
    Inter { held_out: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(flatten)]
    pub mode: SplitMode,
    pub seed: u64,
}

impl SplitSpec {
    pub fn intra(seed: u64) -> Self {
        Self { mode: SplitMode::Intra { train_page_fraction: 0.5 }, seed }
    }

    pub fn inter(held_out: impl Into<String>, seed: u64) -> Self {
        Self { mode: SplitMode::Inter { held_out: held_out.into() }, seed }
    }

    pub fn label(&self) -> String {
        match &self.mode {
            SplitMode::Intra { .. } => "intra".into(),
            SplitMode::Inter { held_out } => format!("inter:{held_out}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WebsiteKey {
    pub vertical: String,
    pub website: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<WebsiteKey>,
    pub test: Vec<WebsiteKey>,
    /// Verticals left out of an intra split because they have one website.
    pub single_website_verticals: Vec<String>,
}

impl Split {
    pub fn is_train(&self, vertical: &str, website: &str) -> bool {
        self.train.iter().any(|k| k.vertical == vertical && k.website == website)
    }

    pub fn is_test(&self, vertical: &str, website: &str) -> bool {
        self.test.iter().any(|k| k.vertical == vertical && k.website == website)
    }
}

/// Per-vertical seed so one vertical's split does not depend on the others.
fn vertical_seed(seed: u64, vertical: &str) -> u64 {
    // FNV-1a over the id, mixed with the run seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in vertical.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Index `k` in `1..counts.len()` whose prefix sum is closest to
/// `target · total`; ties go to the larger `k`.
pub fn best_prefix(counts: &[usize], target: f64) -> usize {
    let total: usize = counts.iter().sum();
    let mut best = (f64::INFINITY, 1);
    let mut acc = 0;
    for (i, &c) in counts.iter().enumerate().take(counts.len().saturating_sub(1)) {
        acc += c;
        let err = (acc as f64 / total.max(1) as f64 - target).abs();
        if err <= best.0 + 1e-12 {
            best = (err, i + 1);
        }
    }
    best.1
}

pub fn make_split(ds: &Dataset, spec: &SplitSpec) -> Result<Split, SplitError> {
    let mut split = Split { train: Vec::new(), test: Vec::new(), single_website_verticals: Vec::new() };
    let key = |v: &str, w: &str| WebsiteKey { vertical: v.into(), website: w.into() };
    match &spec.mode {
        SplitMode::Intra { train_page_fraction } => {
            if !(*train_page_fraction > 0.0 && *train_page_fraction < 1.0) {
                return Err(SplitError::BadFraction(*train_page_fraction));
            }
            for v in &ds.verticals {
                if v.websites.len() < 2 {
                    split.single_website_verticals.push(v.id.clone());
                    continue;
                }
                let mut order: Vec<usize> = (0..v.websites.len()).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(vertical_seed(spec.seed, &v.id)));
                let counts: Vec<usize> = order.iter().map(|&i| v.websites[i].pages.len()).collect();
                let k = best_prefix(&counts, *train_page_fraction);
                let (tr, te) = order.split_at(k);
                let mut tr = tr.to_vec();
                let mut te = te.to_vec();
                tr.sort_unstable();
                te.sort_unstable();
                split.train.extend(tr.iter().map(|&i| key(&v.id, &v.websites[i].id)));
                split.test.extend(te.iter().map(|&i| key(&v.id, &v.websites[i].id)));
            }
        }
        SplitMode::Inter { held_out } => {
            if ds.vertical(held_out).is_none() {
                return Err(SplitError::UnknownVertical(held_out.clone()));
            }
            for v in &ds.verticals {
                let dest = if &v.id == held_out { &mut split.test } else { &mut split.train };
                dest.extend(v.websites.iter().map(|w| key(&v.id, &w.id)));
            }
        }
    }
    Ok(split)
}

//! Exact and sampled computations around the three-setting Bell inequality
//!
//! ```text
//! P_same(A,B) + P_same(A,C) + P_same(B,C) >= 1
//! ```
//!
//! The crate is split by concern:
//!
//! * [`quantum`] builds the two-qubit state |Φ⁺⟩, equatorial measurement
//!   bases and Born-rule joint distributions.
//! * [`lhv`] models local hidden-variable theories as finite mixtures of
//!   per-object response tables and checks factorization, perfect
//!   correlations and the determinism they imply.
//! * [`analysis`] evaluates the inequality, decomposes triplet
//!   distributions into the Venn regions of the area proof and scans
//!   measurement angles for the quantum minimum.
//! * [`montecarlo`] samples outcomes from either source with a seeded,
//!   portable generator and attaches binomial error bars.
//! * [`model_file`] and [`report`] hold the on-disk model format and the
//!   human/structured reports produced by the `bell` command.

pub mod analysis;
pub mod error;
pub mod lhv;
pub mod model_file;
pub mod montecarlo;
pub mod quantum;
pub mod report;

pub use error::{BellError, Result};

/// Absolute tolerance for probability equalities.
pub const PROB_TOL: f64 = 1e-12;

/// Normalization gate applied to user-supplied states and distributions.
pub const INPUT_NORM_TOL: f64 = 1e-9;

use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the three two-valued properties measured on each object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Setting {
    A,
    B,
    C,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::A, Setting::B, Setting::C];

    /// The three unordered pairs entering the Bell sum, in sum order.
    pub const BELL_PAIRS: [(Setting, Setting); 3] = [
        (Setting::A, Setting::B),
        (Setting::A, Setting::C),
        (Setting::B, Setting::C),
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Setting> {
        Setting::ALL.get(i).copied()
    }

    pub fn from_char(c: char) -> Option<Setting> {
        match c.to_ascii_uppercase() {
            'A' => Some(Setting::A),
            'B' => Some(Setting::B),
            'C' => Some(Setting::C),
            _ => None,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Setting::A => "A",
            Setting::B => "B",
            Setting::C => "C",
        };
        f.write_str(s)
    }
}

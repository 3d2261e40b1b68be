//! Trial-level surrogacy evaluation of progression-free survival measures.
//!
//! Treats comparative PFS effect measures as diagnostic tests for a
//! statistically significant overall-survival benefit: empirical ROC/AUC and
//! Youden cutoffs, CART classification trees, bagged variable importance and
//! a surrogate-threshold-effect report.

pub mod cart;
pub mod dataset;
pub mod emit;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod report;
pub mod roc;

pub use error::{Error, Result};

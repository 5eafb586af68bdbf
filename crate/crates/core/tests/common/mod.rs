//! Oracle suites shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod augment;
pub mod dsp;
pub mod grad;
pub mod pipeline;

//! Fixtures shared by the criterion benchmarks.

use mvl2e::{synth_multiview, MultiViewDataset, PipelineConfig, SynthSpec};

/// The standard two-view benchmark resized to `n` samples.
pub fn two_view_dataset(n: usize, seed: u64) -> MultiViewDataset {
    synth_multiview(&SynthSpec {
        n,
        ..SynthSpec::standard_two_view(seed)
    })
    .expect("valid synthetic spec")
}

pub fn config(d: usize) -> PipelineConfig {
    PipelineConfig {
        d_star: Some(d),
        ..Default::default()
    }
}

//! Expands transform records into labeled paraphrase pairs.

use pluie::datasets::{build_french_pairs, load_transforms, FrenchPair};

use crate::config::RunConfig;
use crate::output::{write_jsonl, RunClock};
use crate::{lib_failure, Failure};

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let clock = RunClock::start();
    let input = config.input_path()?;
    let out = config.out_path()?;

    let transforms = load_transforms(input).map_err(lib_failure)?;
    let pairs: Vec<FrenchPair> = transforms.iter().flat_map(build_french_pairs).collect();
    let positives = pairs.iter().filter(|p| p.label).count();
    let collided = pairs.iter().filter(|p| p.collided).count();

    write_jsonl(out, &pairs)?;
    clock.write_sidecar(out, "build-dataset", pairs.len())?;
    println!(
        "built {} pairs from {} records ({} positive, {} collided)",
        pairs.len(),
        transforms.len(),
        positives,
        collided
    );
    Ok(())
}

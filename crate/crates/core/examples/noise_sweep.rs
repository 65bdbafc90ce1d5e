//! Observed confounder with label noise: back-door adjustment degrades
//! toward plain logistic regression as more z labels are flipped.

use confound::harness::{emit_csv, format_robustness_table, run_noise_sweep, ExperimentConfig, Method};

pub fn run_example() -> confound::Result<()> {
    let config = ExperimentConfig {
        noise_grid: vec![0.0, 0.1, 0.2, 0.3],
        methods: vec![Method::Lr, Method::BaObserved],
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let result = run_noise_sweep(&config)?;
    print!("{}", format_robustness_table(&result));
    let out = std::env::temp_dir().join("confound-examples").join("noise_rows.csv");
    emit_csv(&result, Some(&config), &out)?;
    println!("{} rows -> {}", result.rows.len(), out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> confound::Result<()> {
    run_example()
}

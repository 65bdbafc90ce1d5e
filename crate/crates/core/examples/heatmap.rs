//! Preliminary quality by shift: flip more preliminary labels to lower F1_z
//! and compare how robust each adjustment stays. Writes the row file and
//! the plot-ready summaries.

use confound::harness::{emit_csv, emit_plotdata, format_robustness_table, run_heatmap, ExperimentConfig};

pub fn run_example() -> confound::Result<()> {
    let config = ExperimentConfig {
        noise_grid: vec![0.0, 0.15, 0.3],
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let result = run_heatmap(&config)?;
    // std dev of F1_y across shifts; smaller is more robust
    print!("{}", format_robustness_table(&result));

    let dir = std::env::temp_dir().join("confound-examples");
    emit_csv(&result, Some(&config), dir.join("heatmap_rows.csv"))?;
    for path in emit_plotdata(&result, Some(&config), &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> confound::Result<()> {
    run_example()
}

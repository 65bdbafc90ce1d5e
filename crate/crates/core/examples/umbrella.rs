//! Fixed preliminary quality, every method across the shift grid:
//! mean F1_y per δ_yz = r_train - r_test.

use confound::harness::{run_umbrella, shift_summary, ExperimentConfig, Method};

pub fn run_example() -> confound::Result<()> {
    let config = ExperimentConfig {
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let result = run_umbrella(&config, 0.0)?;
    let f1_z: Vec<f64> = result.rows.iter().filter_map(|r| r.f1_z).collect();
    println!("F1_z = {:.3}", confound::metrics::mean(&f1_z));

    let summary = shift_summary(&result, false);
    let mut deltas: Vec<f64> = summary.iter().map(|s| s.delta_yz).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    print!("{:>6}", "delta");
    for m in Method::ALL {
        print!(" {:>13}", m.name());
    }
    println!();
    for d in deltas {
        print!("{d:>6.1}");
        for m in Method::ALL {
            let s = summary.iter().find(|s| s.method == m && s.delta_yz == d).expect("full grid");
            print!(" {:>13.3}", s.mean_f1_y);
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> confound::Result<()> {
    run_example()
}

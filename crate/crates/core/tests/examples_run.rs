#[allow(dead_code)]
#[path = "../examples/generate_corpus.rs"]
mod generate_corpus;
#[allow(dead_code)]
#[path = "../examples/preliminary_study.rs"]
mod preliminary_study;
#[allow(dead_code)]
#[path = "../examples/observed_backdoor.rs"]
mod observed_backdoor;
#[allow(dead_code)]
#[path = "../examples/epsilon_threshold.rs"]
mod epsilon_threshold;
#[allow(dead_code)]
#[path = "../examples/correlation_matching.rs"]
mod correlation_matching;
#[allow(dead_code)]
#[path = "../examples/noise_sweep.rs"]
mod noise_sweep;
#[allow(dead_code)]
#[path = "../examples/umbrella.rs"]
mod umbrella;
#[allow(dead_code)]
#[path = "../examples/heatmap.rs"]
mod heatmap;

#[test]
fn generate_corpus_runs() {
    generate_corpus::run_example().unwrap();
}

#[test]
fn preliminary_study_runs() {
    preliminary_study::run_example().unwrap();
}

#[test]
fn observed_backdoor_runs() {
    observed_backdoor::run_example().unwrap();
}

#[test]
fn epsilon_threshold_runs() {
    epsilon_threshold::run_example().unwrap();
}

#[test]
fn correlation_matching_runs() {
    correlation_matching::run_example().unwrap();
}

#[test]
fn noise_sweep_runs() {
    noise_sweep::run_example().unwrap();
}

#[test]
fn umbrella_runs() {
    umbrella::run_example().unwrap();
}

#[test]
fn heatmap_runs() {
    heatmap::run_example().unwrap();
}

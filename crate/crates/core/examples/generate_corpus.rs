//! Generate a synthetic pool, draw a confounded training sample and a
//! shifted test sample from it, and watch label noise attenuate r(y, z).

use confound::corpus::{
    bias_for_correlation, biased_sample, generate_pool, inject_noise, BiasSpec, CorpusConfig,
    Exclusion, Split,
};
use confound::metrics::phi_correlation;

pub fn run_example() -> confound::Result<()> {
    let config = CorpusConfig {
        vocab_size_y: 8,
        vocab_size_z: 8,
        doc_count: 8000,
        seed: 7,
        ..CorpusConfig::default()
    };
    let pool = generate_pool(&config)?;
    println!("pool: {} docs, vocabulary {}", pool.len(), pool.vocab_size);
    println!("cells [y][z]: {:?}", pool.cell_counts());

    // train r = 0.6, test r = -0.6, from disjoint parts of the pool
    let spec = BiasSpec::uniform(bias_for_correlation(0.6), bias_for_correlation(-0.6), 1000, 1000);
    let mut used = Exclusion::new();
    let train = biased_sample(&pool, &spec, Split::Train, 1, &mut used)?;
    let test = biased_sample(&pool, &spec, Split::Test, 1, &mut used)?;
    for (name, d) in [("train", &train), ("test", &test)] {
        let r = phi_correlation(&d.ys(), &d.zs())?.value;
        println!("{name}: cells {:?}, r(y,z) = {r:+.3}", d.cell_counts());
    }

    let z = train.zs();
    for p in [0.0, 0.1, 0.2, 0.3, 0.5] {
        let noisy = inject_noise(&z, p, 11)?;
        let r = phi_correlation(&train.ys(), &noisy)?.value;
        println!("flip p={p:.1}: r(y, z_noisy) = {r:+.3}   (1-2p)*0.6 = {:+.3}", (1.0 - 2.0 * p) * 0.6);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> confound::Result<()> {
    run_example()
}

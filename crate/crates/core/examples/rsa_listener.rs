//! Pragmatic listener θ-marginals for "strong" under a few speaker settings.
//!
//! `cargo run --example rsa_listener`

use gradsem::rsa::{pragmatic_listener, RsaConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = [("λ=1, free", 1.0, 0.0), ("λ=4, free", 4.0, 0.0), ("λ=4, cost 1", 4.0, 1.0)];
    let base = RsaConfig::default();
    print!("{:>6}", "θ");
    for (name, ..) in &settings {
        print!(" {name:>12}");
    }
    println!();

    let marginals = settings
        .iter()
        .map(|(_, lambda, cost)| {
            let mut cfg = RsaConfig {
                rationality: *lambda,
                ..RsaConfig::default()
            };
            cfg.costs.insert("strong".into(), *cost);
            pragmatic_listener("strong", &cfg).map(|l| l.theta_marginal)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (t, theta) in base.theta_grid.values().iter().enumerate() {
        print!("{theta:>6}");
        for m in &marginals {
            print!(" {:>12.4}", m.probs()[t]);
        }
        println!();
    }
    print!("{:>6}", "mean");
    for m in &marginals {
        print!(" {:>12.2}", m.mean());
    }
    println!("\nprior mean {:.2}", base.theta_prior.mean());
    Ok(())
}

//! Rejection-sample the tug-of-war world model.
//!
//! `cargo run --example church_query`

use gradsem::assets::Experiment;
use gradsem::church::{parse_one, rejection_query, WorldModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = WorldModel::bundled(Experiment::E1);
    let query = parse_one("(strength 'jack)")?;

    let prior = rejection_query(&model, &[], &query, 20_000, 1)?.summary();
    let strong = parse_one("(> (strength 'jack) 80)")?;
    let posterior = rejection_query(&model, &[strong], &query, 20_000, 2)?.summary();

    let (p, q) = (prior.numeric.unwrap(), posterior.numeric.unwrap());
    println!("prior      mean {:6.2}  sd {:5.2}", p.mean, p.sd);
    println!("given > 80 mean {:6.2}  sd {:5.2}  (acceptance {:.3})", q.mean, q.sd, posterior.acceptance_rate);

    // any expression works as a query, including booleans
    let lazy = parse_one("(lazy 'jack)")?;
    let freq = rejection_query(&model, &[], &lazy, 10_000, 3)?.summary().frequencies;
    println!("lazy: {freq:?}");
    Ok(())
}

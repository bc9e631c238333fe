//! Match outcome probabilities under different evidence.
//!
//! `cargo run --example tug_of_war_match`

use gradsem::assets::Experiment;
use gradsem::church::{parse_one, run_match_query, WorldModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = WorldModel::bundled(Experiment::E1);
    let evidence = [
        ("no evidence", None),
        ("jill is strong", Some("(> (strength 'jill) 70)")),
        ("jill is weak", Some("(< (strength 'jill) 30)")),
    ];
    for (label, cond) in evidence {
        let conds: Vec<_> = cond.map(parse_one).transpose()?.into_iter().collect();
        let est = run_match_query(&model, &conds, &["jill"], &["jane"], 10_000, 7)?;
        println!("{label:<16} P(jill beats jane) = {:.3}", est.win_probability);
    }
    let team = run_match_query(&model, &[], &["jill", "jack"], &["jane"], 10_000, 8)?;
    println!("{:<16} P(jill+jack beat jane) = {:.3}", "two vs one", team.win_probability);
    Ok(())
}

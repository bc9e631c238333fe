use super::StatsError;

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
pub fn fdr_bh(p_values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::PValueRange(p));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        running = running.min(p_values[i] * m as f64 / (rank + 1) as f64);
        // p·m/j can round below p when j = m
        adjusted[i] = running.min(1.0).max(p_values[i]);
    }
    Ok(adjusted)
}

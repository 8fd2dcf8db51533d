//! Summary statistics and correlations for a simulated 23-bank panel.

use nimpanel::panel::{correlation_matrix, summarize};
use nimpanel::report::{render_correlation, render_summary};
use nimpanel::simulation::{generate_panel, turkey_like};

fn main() -> nimpanel::Result<()> {
    let data = generate_panel(&turkey_like(7))?;
    let vars: Vec<String> = ["NIM", "RA", "OC", "LOGTA", "GDP"].iter().map(|s| s.to_string()).collect();

    let stats = vars.iter().map(|v| summarize(&data, v)).collect::<nimpanel::Result<Vec<_>>>()?;
    println!("{}", render_correlation(&correlation_matrix(&data, &vars)?));
    println!("{}", render_summary(&stats));

    // the between and within sums of squares add up to the total
    for s in &stats {
        let gap = s.ss_overall - s.ss_between - s.ss_within;
        println!("{:<6} SS overall {:>12.4}  between + within gap {gap:.2e}", s.variable, s.ss_overall);
    }
    Ok(())
}

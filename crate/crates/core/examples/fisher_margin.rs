//! Nominal margin from real loan and deposit rates.

use nimpanel::simulation::{nominal_margin, nominal_margin_expanded, FisherInputs};

fn main() -> nimpanel::Result<()> {
    for (l, d, pi) in [(0.10, 0.05, 0.0), (0.10, 0.05, 0.10), (0.08, 0.02, 0.45)] {
        let f = FisherInputs::new(l, d, pi)?;
        println!(
            "loan {l:.2} deposit {d:.2} inflation {pi:.2}: margin {:.6} (expanded {:.6})",
            nominal_margin(f),
            nominal_margin_expanded(f)
        );
    }
    Ok(())
}

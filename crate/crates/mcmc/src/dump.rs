//! Optional CSV dump of kept draws for offline inspection.

use std::io;
use std::path::Path;

use crate::draws::PosteriorDraws;

/// Writes every kept draw as `draw_index, chain, parameter_name, value`.
///
/// `kept_per_chain` recovers the chain index from the concatenated draw
/// order; pass the total draw count when chains were merged upstream.
pub fn write_draw_dump(
    path: &Path,
    draws: &PosteriorDraws,
    kept_per_chain: usize,
) -> io::Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["draw_index", "chain", "parameter_name", "value"])?;
    for t in 0..draws.control.n_draws {
        let chain = t / kept_per_chain.max(1);
        for i in 0..draws.control.endpoints {
            writer.write_record([
                t.to_string(),
                chain.to_string(),
                format!("psi_control_{i}"),
                draws.control.get(t, i).to_string(),
            ])?;
            writer.write_record([
                t.to_string(),
                chain.to_string(),
                format!("psi_treatment_{i}"),
                draws.treatment.get(t, i).to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

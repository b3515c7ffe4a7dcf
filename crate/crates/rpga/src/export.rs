//! CSV and image exports. Floats use Rust's shortest round-trip formatting,
//! so re-importing a CSV recovers the exact values.

use std::fs;
use std::path::Path;

use rpga_core::analysis::{self, LandscapeGrid};
use rpga_core::hpcm::GlobalDifficultyTable;
use rpga_core::scene::ConfigurationSpace;

use crate::error::{Error, Result};
use crate::ppm;

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn difficulty_csv(space: &ConfigurationSpace, table: &GlobalDifficultyTable) -> Result<String> {
    let probs = table.sampling_probs();
    let mut out = String::from("cell_index,pitch,azimuth,distance,env,score,prob\n");
    for (i, (score, prob)) in table.scores.iter().zip(&probs).enumerate() {
        let c = space.config_of(i)?;
        out.push_str(&format!(
            "{i},{},{},{},{},{score},{prob}\n",
            c.pitch_deg, c.azimuth_deg, c.distance_m, c.env_id
        ));
    }
    Ok(out)
}

pub fn loss_history_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,mean_loss\n");
    for (i, l) in history.iter().enumerate() {
        out.push_str(&format!("{},{l}\n", i + 1));
    }
    out
}

pub fn surface_csv(losses: &[f64]) -> String {
    let mut out = String::from("cell_index,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

/// One row per (azimuth, pitch) bin pair, azimuth-major.
pub fn landscape_csv(grid: &LandscapeGrid) -> String {
    let mut out = String::from("azimuth,pitch,mean_loss\n");
    for (a, az) in grid.space.azimuth_bins.iter().enumerate() {
        for (p, pitch) in grid.space.pitch_bins.iter().enumerate() {
            out.push_str(&format!("{az},{pitch},{}\n", grid.reduction(a, p)));
        }
    }
    out
}

/// Parses [`landscape_csv`] output back into `(azimuth, pitch, mean_loss)` rows.
pub fn parse_landscape_csv(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut lines = text.lines();
    if lines.next() != Some("azimuth,pitch,mean_loss") {
        return Err(Error::Format("landscape CSV header is missing".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))?;
            match v.as_slice() {
                [a, p, l] => Ok((*a, *p, *l)),
                _ => Err(Error::Format(format!("line {}: expected 3 fields", i + 2))),
            }
        })
        .collect()
}

pub const HEATMAP_BLOCK: usize = 16;

/// Writes the landscape CSV and its heatmap.
pub fn export_heatmap(grid: &LandscapeGrid, path_csv: &Path, path_ppm: &Path, threshold: Option<f64>) -> Result<()> {
    write_text(path_csv, &landscape_csv(grid))?;
    let (w, h, rgb) = analysis::heatmap_raster(grid, HEATMAP_BLOCK, threshold);
    ppm::write_rgb8(path_ppm, w, h, &rgb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rpga_core::scene::discretize_space;

    fn grid() -> LandscapeGrid {
        let space = discretize_space(&[10.0, 20.0], &[0.0, 90.0, 180.0], &[5.0, 8.0], &["a".to_string()]).unwrap();
        let losses = (0..space.len()).map(|i| (i as f64 * 0.37).sin().abs() / 3.0).collect();
        LandscapeGrid::new(space, losses).unwrap()
    }

    #[test]
    fn landscape_csv_roundtrip() {
        let g = grid();
        let text = landscape_csv(&g);
        let rows = parse_landscape_csv(&text).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(text.lines().count(), 7);
        let mut k = 0;
        for a in 0..3 {
            for p in 0..2 {
                assert!((rows[k].2 - g.reduction(a, p)).abs() <= 1e-9);
                assert_eq!(rows[k].0, g.space.azimuth_bins[a]);
                k += 1;
            }
        }
    }

    #[test]
    fn difficulty_table_columns() {
        let g = grid();
        let table = GlobalDifficultyTable::with_defaults(g.space.len()).unwrap();
        let csv = difficulty_csv(&g.space, &table).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 13);
        assert_eq!(lines[1], "0,10,0,5,a,10,0.08333333333333333");
        assert_eq!(lines[12].split(',').nth(2), Some("180"));
    }
}

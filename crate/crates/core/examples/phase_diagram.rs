//! A small metastability map over (η, γ₄) and the drive at which γ₁τ₄ = 100.

use qamem::harness::sweep::{run_sweep, Param, SweepSpec};
use qamem::harness::locate_contour;
use qamem::lindblad::{LiouvillianForm, ModelParams};

fn main() -> qamem::Result<()> {
    let base = ModelParams::symmetric(4, 1.0, 0.1, 24);
    let spec: SweepSpec = serde_json::from_value(serde_json::json!({
        "x": {"param": "eta", "min": 0.3, "max": 1.5, "points": 7},
        "y": {"param": "gamma_m", "min": 0.05, "max": 0.2, "points": 3, "scale": "log"},
        "contour_levels": [10.0],
    }))
    .expect("valid sweep");
    let res = run_sweep(&base, LiouvillianForm::General, &spec, 0)?;
    for row in res.cells.chunks(res.xs.len()) {
        let cells: Vec<String> = row.iter().map(|c| format!("{:7.1}", c.gap_ratio)).collect();
        println!("γ₄ = {:.3}: τ₄/τ₅ = {}", row[0].y, cells.join(" "));
    }
    for c in &res.contours {
        println!("γ₁τ₄ = {} at η = {:.4}, γ₄ = {:.3}", c.level, c.x, c.y);
    }
    let (eta, tau) = locate_contour(&base, LiouvillianForm::General, Param::Eta, 100.0, 1.0, 1.6)?;
    println!("at γ₄ = 0.1, D = 24: γ₁τ₄ = 100 needs η = {eta:.4} (τ₄ = {tau:.2})");
    Ok(())
}

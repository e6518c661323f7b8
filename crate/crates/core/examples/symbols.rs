//! Principal symbols of the linearised measurement operators: ellipticity per
//! exponent, loss directions for one and two measurements, and the predicted
//! streak directions (loss directions turned by 90 degrees).
//!
//! ```bash
//! cargo run --example symbols
//! ```

use std::f64::consts::FRAC_1_SQRT_2;

use hybridtomo::microlocal::{
    is_elliptic_single, loss_angles, normal_symbol, predicted_streak_angles_deg, principal_symbol,
    real_principal_type_check, SymbolQuery,
};

fn degrees(v: Vec<f64>) -> Vec<f64> {
    rounded(v.into_iter().map(f64::to_degrees).collect())
}

fn rounded(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|a| (a * 1e6).round() / 1e6).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = FRAC_1_SQRT_2;
    let q = SymbolQuery::new([0.0, 0.0], [s, s], vec![[1.0, 0.0], [0.0, 1.0]], 2.0)?;
    println!("p_1 at 45 degrees, p = 2: {}", principal_symbol(&q, 0)?);
    println!("normal symbol for gradients (1,0), (0,1): {}", normal_symbol(&q)?);

    println!("\nsingle horizontal gradient");
    for p in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
        let v = is_elliptic_single([1.0, 0.0], p)?;
        let rpt = real_principal_type_check(&[[1.0, 0.0]], p)?;
        println!(
            "  p = {p}: elliptic {}, loss directions {:?}, streaks {:?}, real principal type {}",
            v.elliptic,
            degrees(loss_angles(&[[1.0, 0.0]], p)?),
            rounded(predicted_streak_angles_deg(&[[1.0, 0.0]], p)?),
            rpt.real_principal_type
        );
    }

    println!("\ntwo measurements, p = 2");
    for (name, g) in [
        ("(1,0) and (0,1)", vec![[1.0, 0.0], [0.0, 1.0]]),
        ("(1,0) and (1,1)/sqrt 2", vec![[1.0, 0.0], [s, s]]),
    ] {
        let loss = degrees(loss_angles(&g, 2.0)?);
        println!("  {name}: loss directions {loss:?} ({})", if loss.is_empty() { "elliptic" } else { "not elliptic" });
    }
    Ok(())
}

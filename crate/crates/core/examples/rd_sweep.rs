//! Rate-distortion sweep over two images, cross-image averaging, convex
//! hulls, and a simulcast comparison for the scalable scheme. CSV goes to
//! stdout.
//!
//!     cargo run --release --example rd_sweep > rd.csv

use msicodec::cube::cie1931_cmf;
use msicodec::pipeline::Scheme;
use msicodec::rd::{
    average_over_images, best_of, convex_hull, preview_curve, simulcast_compose, sweep, write_csv,
    ParamGrid, RdCurve,
};
use msicodec::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let images = vec![
        ("a".to_string(), synth::natural_gradient(48, 48, 31, 1)?),
        ("b".to_string(), synth::rank3_noise(48, 48, 31, 2.0, 2)?),
    ];
    let grid = ParamGrid {
        qp: vec![25, 35, 45],
        n_c: vec![2, 4],
        n_ref: vec![1, 2],
        q_ref: vec![30, 40],
        qp_rgb: vec![35, 45],
    };
    let mut curves = Vec::new();
    for scheme in Scheme::ALL {
        let result = sweep(&images, &grid.configs(scheme)?, 0)?;
        for f in &result.failures {
            eprintln!("failed {} {}: {}", f.image_id, f.params, f.error);
        }
        let averaged = average_over_images(&result.points)?;
        let hull = convex_hull(scheme.name(), &averaged);
        eprintln!(
            "{:10} {:3} configurations, {} on the hull",
            scheme.name(),
            averaged.len(),
            hull.points.len()
        );
        curves.push(RdCurve::new(scheme.name(), averaged));
    }

    let previews: Vec<_> = images
        .iter()
        .map(|(id, c)| preview_curve(id, c, &cie1931_cmf(), &[30, 40, 50]))
        .collect::<Result<_, _>>()?;
    let preview_points: Vec<_> = previews.into_iter().flat_map(|c| c.points).collect();
    let preview = RdCurve::new("preview", average_over_images(&preview_points)?);
    let simulcast = simulcast_compose(&preview, &convex_hull("hpcls", &curves[2].points), 40.0)?;
    let overall = best_of(&curves);
    eprintln!(
        "best-of hull mixes {} points: {}",
        overall.points.len(),
        overall.label
    );

    curves.push(preview);
    curves.push(simulcast);
    write_csv(std::io::stdout().lock(), &curves)?;
    Ok(())
}

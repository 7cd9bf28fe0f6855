//! The internal plane codec: intra coding at a few QPs, then a GOP-30
//! hierarchy over all 31 bands of a cube.

use msicodec::codec::{
    decode_gop, encode_gop, encode_intra, gop_schedule, GopKind, Plane, PlaneCodingParams, PredMode,
};
use msicodec::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cube = synth::natural_gradient(64, 64, 31, 3)?;
    let plane = Plane::new(64, 64, cube.band(15).to_vec())?;
    for qp in [5, 20, 35, 50] {
        let coded = encode_intra(&plane, PlaneCodingParams::new(qp)?)?;
        let err: f64 = plane
            .samples
            .iter()
            .zip(&coded.reconstruction.samples)
            .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
            .sum::<f64>()
            / plane.samples.len() as f64;
        println!("intra qp {qp:2}: {:6} bits, mse {err:.2}", coded.bits());
    }

    let schedule = gop_schedule(31, GopKind::Gop30)?;
    for e in schedule.entries().iter().take(6) {
        match e.mode {
            PredMode::Key => println!("plane {:2}: key, qp offset {}", e.plane, e.qp_offset),
            PredMode::Bi { ref_a, ref_b } => {
                println!(
                    "plane {:2}: bi from {ref_a} and {ref_b}, level {}",
                    e.plane, e.level
                )
            }
        }
    }
    let planes: Vec<Plane> = (0..31)
        .map(|b| Plane::new(64, 64, cube.band(b).to_vec()))
        .collect::<Result<_, _>>()?;
    let coded = encode_gop(&planes, &schedule, 30)?;
    let payloads: Vec<&[u8]> = coded.iter().map(|c| c.payload.as_slice()).collect();
    let decoded = decode_gop(&payloads, &schedule)?;
    assert!(decoded
        .iter()
        .zip(&coded)
        .all(|(d, c)| *d == c.reconstruction));
    let bits: u64 = coded.iter().map(|c| c.bits()).sum();
    println!("GOP-30 over 31 bands at qp 30: {bits} bits, decoder matches encoder");
    Ok(())
}

//! Binary and multi-label graph cuts on a tiny denoising problem.

use comix::graphcut::{alpha_beta_swap, binary_fuse, BinaryEnergy, PairwiseEnergy};

const SIDE: usize = 6;

fn grid_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for y in 0..SIDE {
        for x in 0..SIDE {
            let p = y * SIDE + x;
            if x + 1 < SIDE {
                edges.push((p, p + 1));
            }
            if y + 1 < SIDE {
                edges.push((p, p + SIDE));
            }
        }
    }
    edges
}

fn show(labels: &[usize]) {
    for row in labels.chunks(SIDE) {
        let line: String = row.iter().map(|&l| char::from(b'0' + l as u8)).collect();
        println!("  {line}");
    }
}

fn main() -> comix::Result<()> {
    // A square of 1s with two flipped pixels.
    let mut noisy = vec![0usize; SIDE * SIDE];
    for y in 1..5 {
        for x in 1..5 {
            noisy[y * SIDE + x] = 1;
        }
    }
    noisy[2 * SIDE + 2] = 0;
    noisy[5 * SIDE] = 1;
    println!("noisy:");
    show(&noisy);

    let mut binary = BinaryEnergy::new(SIDE * SIDE);
    for (u, &l) in binary.unary.iter_mut().zip(&noisy) {
        *u = if l == 1 { [1.0, 0.0] } else { [0.0, 1.0] };
    }
    for (p, q) in grid_edges() {
        binary.pairs.push((p, q, [0.0, 0.6, 0.6, 0.0]));
    }
    let cut = binary_fuse(&binary)?;
    let cleaned: Vec<usize> = cut.iter().map(|&b| usize::from(b)).collect();
    println!("binary cut (energy {:.2}):", binary.energy(&cut));
    show(&cleaned);

    // Three labels with a Potts-like potential over one-hot vectors.
    let states: Vec<Vec<f64>> = (0..3)
        .map(|s| (0..3).map(|i| f64::from(u8::from(i == s))).collect())
        .collect();
    let unary: Vec<f64> = (0..SIDE * SIDE)
        .flat_map(|p| {
            let want = if p % SIDE < 2 { 0 } else if p % SIDE < 4 { 1 } else { 2 };
            let flip = p % 7 == 3;
            (0..3).map(move |s| if (s == want) != flip { 0.0 } else { 1.0 })
        })
        .collect();
    let energy = PairwiseEnergy::with_state_vectors(&states, unary, 0.7, grid_edges())?;
    let start = vec![0; SIDE * SIDE];
    let out = alpha_beta_swap(&energy, &start, 10)?;
    println!(
        "alpha-beta swap: energy {:.2} -> {:.2} in {} sweeps, {} moves",
        energy.energy(&start),
        out.energy,
        out.sweeps,
        out.moves
    );
    show(&out.assignment);
    Ok(())
}

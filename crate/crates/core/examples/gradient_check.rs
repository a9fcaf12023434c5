//! Checks the network engine's reverse-mode gradients against central
//! finite differences for every output head, then fits a small regression
//! with Adam.
//!
//! cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use traffic_hmarl::neural::{AdamConfig, Gradients, Head, MlpNet, Normalization};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let heads = [
        Head::Linear,
        Head::Relu,
        Head::Normalized(Normalization::Softmax),
        Head::Normalized(Normalization::L1Relu),
    ];
    for head in heads {
        let net = MlpNet::new(&[4, 12, 12, 3], head, &mut rng)?;
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = [0.3, -1.2, 0.7];
        let (_, tape) = net.forward(&x)?;
        let (grads, _) = net.backward(tape, &g)?;
        let analytic = grads.flatten();

        let params = net.parameters();
        let mut probe = net.clone();
        let mut worst: f64 = 0.0;
        for i in 0..params.len() {
            let mut p = params.clone();
            let eps = 1e-5;
            p[i] += eps;
            probe.set_parameters(&p)?;
            let up: f64 = probe.predict(&x)?.iter().zip(&g).map(|(y, w)| y * w).sum();
            p[i] -= 2.0 * eps;
            probe.set_parameters(&p)?;
            let down: f64 = probe.predict(&x)?.iter().zip(&g).map(|(y, w)| y * w).sum();
            let fd = (up - down) / (2.0 * eps);
            worst = worst.max((fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-4));
        }
        println!("{head:?}: {} parameters, max relative error {worst:.2e}", params.len());
    }

    // y = sin(x) on [-3, 3]
    let mut net = MlpNet::new(&[1, 32, 32, 1], Head::Linear, &mut rng)?;
    let xs: Vec<f64> = (0..64).map(|i| -3.0 + 6.0 * i as f64 / 63.0).collect();
    for epoch in 0..=3000 {
        let mut grads = Gradients::zeros_like(&net);
        let mut loss = 0.0;
        for &x in &xs {
            let (y, tape) = net.forward(&[x])?;
            let err = y[0] - x.sin();
            loss += err * err / xs.len() as f64;
            net.backward_into(tape, &[2.0 * err / xs.len() as f64], &mut grads)?;
        }
        net.adam_step(&grads, AdamConfig::with_lr(3e-3))?;
        if epoch % 500 == 0 {
            println!("epoch {epoch:>4}  mse {loss:.5}");
        }
    }
    Ok(())
}

use jointcnn::network::{softmax_cross_entropy, Architecture, Gradients, Mode, NetworkParams};
use jointcnn::optim::{AdamConfig, AdamState};
use jointcnn::tensor::{Rng, Tensor};

fn tiny(seed: u64) -> Architecture {
    let mut rng = Rng::new(seed);
    Architecture {
        frames: 32,
        conv1_filters: 2 + rng.below(5),
        conv2_filters: 2 + rng.below(3),
        fc1: 8 + rng.below(9),
        fc2: 4 + rng.below(5),
        keep_prob: 1.0,
        ..Architecture::reference(2, 2 + rng.below(3))
    }
}

fn batch_loss(
    net: &NetworkParams,
    batch: &[(Tensor, usize)],
    grads: Option<&mut Gradients>,
) -> f64 {
    let mut total = 0.0;
    let mut grads = grads;
    for (x, label) in batch {
        let pass = net.forward(x, Some(&mut Rng::new(0))).unwrap();
        let (loss, gl) = softmax_cross_entropy(&pass.logits, *label).unwrap();
        total += loss;
        if let Some(g) = grads.as_deref_mut() {
            net.backward(&pass, &gl, g).unwrap();
        }
    }
    total / batch.len() as f64
}

#[test]
fn one_small_adam_step_reduces_batch_loss() {
    let trials = 200;
    let mut failures = 0;
    for seed in 0..trials {
        let arch = tiny(seed);
        let classes = arch.classes;
        let root = Rng::new(1000 + seed);
        let mut net = NetworkParams::init(&root.split(0), arch).unwrap();
        net.set_mode(Mode::Train);
        let mut data = root.split(1);
        let batch: Vec<(Tensor, usize)> = (0..4)
            .map(|_| {
                let x = Tensor::normal(&mut data, &[15, 32, 4], 0.0, 1.0).unwrap();
                (x, data.below(classes))
            })
            .collect();

        let mut grads = net.zero_gradients();
        let before = batch_loss(&net, &batch, Some(&mut grads));
        grads.scale(1.0 / batch.len() as f64);
        let config = AdamConfig {
            learning_rate: 1e-4,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(config, &net.parameters());
        adam.step(&mut net.parameters_mut(), grads.tensors())
            .unwrap();
        let after = batch_loss(&net, &batch, None);
        if after.is_nan() || after >= before {
            failures += 1;
        }
    }
    assert!(
        failures * 100 <= trials,
        "{failures} of {trials} steps failed to reduce the loss"
    );
}

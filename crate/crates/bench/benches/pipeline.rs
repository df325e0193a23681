//! Per-record hot paths at a desk-sized configuration: one scene's channel
//! synthesis, one sensing estimate, one feature transform, one forward pass.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;

use nisac_core::channel::{synthesize_comm_channel, synthesize_sensing_channel};
use nisac_core::config::RunConfig;
use nisac_core::estimator::estimate;
use nisac_core::features::beam_delay_features;
use nisac_core::nn::CnnModel;
use nisac_core::ofdm::{
    generate_bits, map_to_rg, transmit_and_receive, zf_precoder, SensingObservation,
};
use nisac_core::rng::{stream, StreamDomain};
use nisac_core::scenes::sample_scene;
use nisac_core::{CsiAxes, CsiTensor};

fn desk_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.channel.n_subcarriers = 32;
    cfg.grid.n_rbs = 4;
    cfg.grid.n_guard_lower = 2;
    cfg.grid.n_guard_upper = 2;
    cfg.validate().unwrap();
    cfg
}

fn desk_observation(cfg: &RunConfig) -> SensingObservation {
    let scene = sample_scene(&cfg.scene, cfg.seed, 0).unwrap();
    let w = cfg.channel.n_subcarriers;
    let active = cfg.grid.active_subcarriers(w);
    let h_comm = synthesize_comm_channel(&scene, &cfg.channel, &cfg.tx_array()).unwrap();
    let precoder = zf_precoder(&h_comm, &active).unwrap();
    let bits = generate_bits(cfg.grid.required_bits(w), &mut stream(0, StreamDomain::Bits, 0));
    let rg = map_to_rg(&bits, &cfg.grid, w).unwrap();
    let h_sens =
        synthesize_sensing_channel(&scene, &cfg.channel, &cfg.tx_array(), &cfg.rx_array())
            .unwrap();
    let mut rng = stream(0, StreamDomain::Noise, 0);
    transmit_and_receive(&h_sens, &precoder, &rg, cfg.noise_variance(), &mut rng).unwrap()
}

fn bench_pipeline(c: &mut Criterion) {
    let cfg = desk_config();

    let scene = sample_scene(&cfg.scene, cfg.seed, 0).unwrap();
    c.bench_function("sensing_channel_synthesis", |b| {
        b.iter(|| {
            synthesize_sensing_channel(
                black_box(&scene),
                &cfg.channel,
                &cfg.tx_array(),
                &cfg.rx_array(),
            )
            .unwrap()
        })
    });

    let obs = desk_observation(&cfg);
    c.bench_function("ridge_estimate", |b| {
        b.iter(|| estimate(black_box(&obs), &cfg.estimator).unwrap())
    });

    let mut rng = stream(1, StreamDomain::Verify, 0);
    let mut h = CsiTensor::zeros(CsiAxes::RxTx, 4, 4, cfg.channel.n_subcarriers);
    for z in h.data.iter_mut() {
        *z = num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    c.bench_function("beam_delay_features", |b| {
        b.iter(|| beam_delay_features(black_box(&h)))
    });

    let model = CnnModel::new(cfg.cnn_config().unwrap()).unwrap();
    let params = model.init_params(0);
    let shape = (
        model.config.input_channels,
        model.config.input_height,
        model.config.input_width,
    );
    let input = ndarray::Array3::from_shape_fn(shape, |_| rng.random_range(-1.0..1.0));
    c.bench_function("cnn_forward", |b| {
        b.iter(|| model.predict(black_box(&params), black_box(&input)).unwrap())
    });
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);

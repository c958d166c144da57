//! Shared fixtures for the detector benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xmimo::modem::{self, Constellation};
use xmimo::{ChannelMatrix, SubarrayPartition, SystemConfig, C64};

pub struct Scenario {
    pub config: SystemConfig,
    pub channel: ChannelMatrix,
    pub partition: SubarrayPartition,
    pub y: Vec<C64>,
}

/// One noisy received vector for `config`, drawn from `seed`.
pub fn scenario(config: SystemConfig, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, channel) = ChannelMatrix::generate(&config, &mut rng).expect("valid config");
    let partition = SubarrayPartition::from_config(&config).expect("uniform partition");
    let x = Constellation::psk8().modulate(&modem::random_bits(3 * config.users, &mut rng)).unwrap();
    let y = modem::awgn(&channel.h.mul_vec(&x, &mut ()), config.noise_variance, &mut rng);
    Scenario { config, channel, partition, y }
}

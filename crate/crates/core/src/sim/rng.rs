use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Fixed stream numbers; never renumber, or old seeds change meaning.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Beats = 1,
    EcgNoise = 2,
    RespNoise = 3,
    PpgGreen = 4,
    PpgRed = 5,
    PpgIr = 6,
    ImuNoise = 7,
    PcgNoise = 8,
    Ambient = 9,
    RespPhase = 10,
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sigma
}

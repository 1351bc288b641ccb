//! dB and information-unit conversions. All solver math is linear and in nats.

use std::f64::consts::LN_2;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

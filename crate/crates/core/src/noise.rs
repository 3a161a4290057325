//! Counter-based noise streams.
//!
//! Every draw is addressed by `(replica, vertex, time)` under a master seed.
//! The address is hashed with a splitmix64 chain into a 64-bit key; uniforms
//! are read straight off the key, Gaussian draws come from a small generator
//! seeded by it. Distinct addresses give independent streams, equal addresses
//! reproduce the same values, and no draw depends on evaluation order.

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    /// One uniform on `[0, 1)`, consumed by inverse CDF.
    Uniform,
    /// One standard Gaussian.
    StdNormal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub replica: u64,
    pub vertex: u64,
    pub time: u64,
}

impl StreamId {
    pub fn new(replica: u64, vertex: u64, time: u64) -> Self {
        StreamId { replica, vertex, time }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseSource {
    master: u64,
}

impl NoiseSource {
    pub fn new(master: u64) -> Self {
        NoiseSource { master: mix64(master ^ 0x5EED_0F_C0FFEE) }
    }

    /// Independent source for a named purpose (tree sampling, phantom
    /// selection, ...), so that purposes never share stream keys.
    pub fn derive(&self, domain: u64) -> NoiseSource {
        NoiseSource { master: mix64(self.master ^ mix64(domain.wrapping_mul(0xD6E8_FEB8_6659_FD93))) }
    }

    pub fn key(&self, id: StreamId) -> u64 {
        let mut h = mix64(self.master ^ id.replica);
        h = mix64(h ^ id.vertex.wrapping_mul(0xA076_1D64_78BD_642F));
        mix64(h ^ id.time.wrapping_mul(0xE703_7ED1_A0B4_28DB))
    }

    /// Generator for an arbitrary number of draws at one address.
    pub fn stream(&self, id: StreamId) -> SmallRng {
        SmallRng::seed_from_u64(self.key(id))
    }

    pub fn uniform(&self, id: StreamId) -> f64 {
        (mix64(self.key(id) ^ 0x2545_F491_4F6C_DD1D) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&self, id: StreamId) -> f64 {
        StandardNormal.sample(&mut self.stream(id))
    }

    pub fn draw(&self, kind: NoiseKind, id: StreamId) -> f64 {
        match kind {
            NoiseKind::Uniform => self.uniform(id),
            NoiseKind::StdNormal => self.normal(id),
        }
    }
}

/// Stream domains used across the workspace.
pub mod domains {
    pub const DYNAMICS: u64 = 1;
    pub const INITIAL: u64 = 2;
    pub const TREE: u64 = 3;
    pub const PHANTOM: u64 = 4;
    pub const GRAPH: u64 = 5;
    pub const REPLICA: u64 = 6;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_address_same_value() {
        let n = NoiseSource::new(7);
        let id = StreamId::new(3, 11, 2);
        assert_eq!(n.uniform(id).to_bits(), n.uniform(id).to_bits());
        assert_eq!(n.normal(id).to_bits(), n.normal(id).to_bits());
    }

    #[test]
    fn uniform_moments() {
        let n = NoiseSource::new(1);
        let m = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for r in 0..m {
            let u = n.uniform(StreamId::new(r, 0, 1));
            assert!((0.0..1.0).contains(&u));
            s += u;
            s2 += u * u;
        }
        let mean = s / m as f64;
        let var = s2 / m as f64 - mean * mean;
        let se = (1.0 / 12.0 / m as f64).sqrt();
        assert!((mean - 0.5).abs() < 5.0 * se, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.002, "var {var}");
    }

    #[test]
    fn neighbouring_addresses_uncorrelated() {
        let n = NoiseSource::new(99);
        let m = 100_000u64;
        let mut c = 0.0;
        for r in 0..m {
            let a = n.normal(StreamId::new(r, 5, 1)) ;
            let b = n.normal(StreamId::new(r, 6, 1));
            c += a * b;
        }
        let c = c / m as f64;
        assert!(c.abs() < 5.0 / (m as f64).sqrt(), "corr {c}");
    }

    #[test]
    fn derived_domains_differ() {
        let n = NoiseSource::new(5);
        let id = StreamId::new(0, 0, 0);
        assert_ne!(n.derive(1).key(id), n.derive(2).key(id));
        assert_ne!(n.key(id), n.derive(1).key(id));
    }
}

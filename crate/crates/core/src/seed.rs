//! Deterministic seed derivation for independent work items.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `base`. Distinct streams of one base give
/// unrelated seeds, and the result depends on nothing else.
pub fn derive(base: u64, stream: u64) -> u64 {
    mix(base ^ mix(stream.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| derive(7, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_eq!(derive(7, 3), derive(7, 3));
        assert_ne!(derive(7, 3), derive(8, 3));
    }
}

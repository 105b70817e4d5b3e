use crate::protomeme::Marker;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Stable hash of `kind ‖ 0x00 ‖ value`.
pub fn marker_hash(marker: &Marker) -> u64 {
    let kind = marker.kind.as_str().bytes();
    fnv1a64(kind.chain(std::iter::once(0u8)).chain(marker.value.bytes()))
}

/// Worker responsible for every protomeme carrying `marker`.
pub fn route(marker: &Marker, workers: usize) -> usize {
    assert!(workers >= 1, "at least one worker");
    (marker_hash(marker) % workers as u64) as usize
}

//! Round-trip invariants for the signature file format.

use std::path::Path;

use facesig_cli::format::{decode_signature, encode_signature};
use facesig_core::signature::{
    assemble_signature, PatchFeatureComponent, PatchLayout, Signature,
};
use proptest::prelude::*;

fn arb_signature() -> impl Strategy<Value = Signature> {
    (1usize..6, 1usize..12, 1usize..8)
        .prop_flat_map(|(m, n, d)| {
            (
                Just((m, n)),
                prop::collection::vec(-10.0f32..10.0, m * n..=m * n),
                prop::collection::vec(prop::bool::ANY, m..=m),
                prop::collection::vec(-6.0f32..6.0, d..=d)
                    .prop_filter("nonzero", |v| v.iter().any(|&x| x != 0.0)),
                "[a-z][a-z0-9_-]{0,12}",
                "[a-z][a-z0-9_.]{0,12}",
            )
        })
        .prop_filter_map(
            "valid signature",
            |((m, n), features, occlusion, logits, subject, image)| {
                let layout = PatchLayout::new(m, n, "SYNTH").ok()?;
                let patch = PatchFeatureComponent::new(layout, features, occlusion).ok()?;
                assemble_signature(&subject, &image, patch, logits).ok()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// decode(encode(x)) == x, and encode(decode(bytes)) == bytes.
    #[test]
    fn encode_decode_identity(sig in arb_signature()) {
        let bytes = encode_signature(&sig);
        let decoded = decode_signature(&bytes, Path::new("mem")).unwrap();
        prop_assert_eq!(&decoded, &sig);

        let re_encoded = encode_signature(&decoded);
        prop_assert_eq!(re_encoded, bytes);
    }

    /// Any single flipped bit in the header region is rejected or decodes
    /// to something that is not the original (no silent corruption).
    #[test]
    fn header_bitflips_never_pass_silently(
        sig in arb_signature(),
        byte in 0usize..18,
        bit in 0u8..8,
    ) {
        let bytes = encode_signature(&sig);
        let mut mutated = bytes.clone();
        mutated[byte] ^= 1 << bit;
        match decode_signature(&mutated, Path::new("mem")) {
            Ok(decoded) => prop_assert_ne!(decoded, sig),
            Err(_) => {}
        }
    }
}

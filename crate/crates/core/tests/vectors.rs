//! Checks against the frozen vector files under `tests/vectors/`, which were
//! produced by an independent implementation (OpenSSL-backed). Any drift in
//! the AEAD constructions, the key derivation or the quote encoding shows up
//! here first.

use redoubt_core::aead::{self, AeadVariant};
use redoubt_core::attest::{self, ArtifactForm, DeviceKey, Expected, Verdict};
use redoubt_core::kdf::{derive_root_key, OwnerBinding, SealingContext};

fn unhex(field: &str) -> Vec<u8> {
    if field == "-" {
        Vec::new()
    } else {
        hex::decode(field).expect("valid hex in vector file")
    }
}

fn vector_lines(name: &str) -> Vec<Vec<String>> {
    let path = format!("{}/tests/vectors/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .expect("vector file present")
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

#[test]
fn aead_vectors_match() {
    let lines = vector_lines("aead_vectors.txt");
    assert!(lines.len() >= 20);
    for fields in lines {
        let [variant, key, nonce, aad, plain, cipher, tag]: [&str; 7] = fields
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>()
            .try_into()
            .expect("7 fields per record");
        let variant = match variant {
            "etm" => AeadVariant::EncryptThenMac,
            "mte" => AeadVariant::MacThenEncrypt,
            other => panic!("unknown variant {other}"),
        };
        let key: [u8; 16] = unhex(key).try_into().unwrap();
        let nonce: [u8; 12] = unhex(nonce).try_into().unwrap();
        let aad = unhex(aad);
        let plain = unhex(plain);
        let cipher = unhex(cipher);
        let tag: [u8; 16] = unhex(tag).try_into().unwrap();

        let (got_cipher, got_tag) = aead::seal(variant, &key, &nonce, &aad, &plain);
        assert_eq!(got_cipher, cipher, "ciphertext drift ({variant:?})");
        assert_eq!(got_tag, tag, "tag drift ({variant:?})");

        let got_plain = aead::unseal(variant, &key, &nonce, &aad, &cipher, &tag).unwrap();
        assert_eq!(got_plain, plain);
    }
}

#[test]
fn kdf_vectors_match() {
    let lines = vector_lines("kdf_vectors.txt");
    assert!(lines.len() >= 7);
    for fields in lines {
        let master: [u8; 32] = unhex(&fields[0]).try_into().unwrap();
        let measurement: [u8; 32] = unhex(&fields[1]).try_into().unwrap();
        let binding = match fields[2].as_str() {
            "0" => OwnerBinding::EnclaveBound,
            "1" => OwnerBinding::OwnerBound,
            other => panic!("unknown binding {other}"),
        };
        let file_id = String::from_utf8(unhex(&fields[3])).unwrap();
        let expect: [u8; 16] = unhex(&fields[4]).try_into().unwrap();

        let ctx = SealingContext::new(master, measurement, binding);
        assert_eq!(derive_root_key(&ctx, &file_id), expect, "file_id={file_id:?}");
    }
}

#[test]
fn quote_vector_matches_bit_for_bit() {
    let mut fields = std::collections::HashMap::new();
    for line in vector_lines("quote_vector.txt") {
        fields.insert(line[0].clone(), line[1].clone());
    }
    let seed: [u8; 32] = unhex(&fields["device_seed"]).try_into().unwrap();
    let key = DeviceKey::from_seed(&seed);
    assert_eq!(
        key.anchor().to_bytes().to_vec(),
        unhex(&fields["anchor_pub"]),
        "ed25519 public key derivation drift"
    );

    let module = unhex(&fields["module"]);
    let module_hash = attest::measure_module(&module);
    assert_eq!(module_hash.to_vec(), unhex(&fields["module_hash"]));

    let build_id = String::from_utf8(unhex(&fields["build_id"])).unwrap();
    let policy_hash: [u8; 32] = unhex(&fields["policy_hash"]).try_into().unwrap();
    let runtime_hash = attest::runtime_hash(&build_id, &policy_hash);
    assert_eq!(runtime_hash.to_vec(), unhex(&fields["runtime_hash"]));

    let user_data = unhex(&fields["user_data"]);
    assert_eq!(
        attest::report_data(&module_hash, &user_data).to_vec(),
        unhex(&fields["report_data"])
    );

    let timestamp: u64 = fields["timestamp"].parse().unwrap();
    let quote = attest::quote_generate(
        &key,
        &attest::Measurement {
            runtime_hash,
            module_hash,
        },
        ArtifactForm::Bytecode,
        &user_data,
        timestamp,
    )
    .unwrap();
    let expect = unhex(&fields["quote"]);
    assert_eq!(quote.to_bytes(), expect, "canonical quote encoding drift");

    let verdict = attest::quote_verify(
        &expect,
        &key.anchor(),
        &Expected {
            runtime_hash: Some(runtime_hash),
            module_hash: Some(module_hash),
            user_data: Some(user_data),
        },
    )
    .unwrap();
    assert_eq!(verdict, Verdict::Pass);
}

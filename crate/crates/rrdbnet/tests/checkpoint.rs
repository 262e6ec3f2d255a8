use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrdbnet::{
    checkpoint_bytes, load_checkpoint, net_forward, params_from_bytes, save_checkpoint, NetConfig, NetParams, Tensor4,
};

fn cfg() -> NetConfig {
    NetConfig {
        num_rrdb: 2,
        base_channels: 3,
        ..NetConfig::default()
    }
}

#[test]
fn roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.ckpt");
    let params = NetParams::<f32>::init(&cfg(), 5).unwrap();
    save_checkpoint(&path, &params).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, params);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..3 {
        let x = Tensor4::from_vec([1, 1, 8, 8], (0..64).map(|_| rng.random::<f32>()).collect()).unwrap();
        let a = net_forward(&params, &x).unwrap();
        let b = net_forward(&loaded, &x).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn layout_starts_with_header() {
    let bytes = checkpoint_bytes(&NetParams::<f32>::zeros(&cfg()).unwrap());
    assert_eq!(&bytes[..8], b"RRDBCKPT");
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
    let len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let json: serde_json::Value = serde_json::from_slice(&bytes[16..16 + len]).unwrap();
    assert_eq!(json["base_channels"], 3);
    let rest = &bytes[16 + len..];
    let name_len = u16::from_le_bytes(rest[..2].try_into().unwrap()) as usize;
    assert_eq!(&rest[2..2 + name_len], b"first_conv.weight");
    assert_eq!(rest[2 + name_len], 4);
}

#[test]
fn corruption_is_reported() {
    let good = checkpoint_bytes(&NetParams::<f32>::init(&cfg(), 6).unwrap());
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    assert!(params_from_bytes(&bad_magic).unwrap_err().contains("magic"));
    let mut bad_version = good.clone();
    bad_version[8] = 2;
    assert!(params_from_bytes(&bad_version).unwrap_err().contains("version"));
    assert!(params_from_bytes(&good[..good.len() - 3])
        .unwrap_err()
        .contains("truncated"));
    let mut trailing = good.clone();
    trailing.push(0);
    assert!(params_from_bytes(&trailing).is_err());
    // Claim a different channel count in the config: shapes no longer match.
    let len = u32::from_le_bytes(good[12..16].try_into().unwrap()) as usize;
    let json = String::from_utf8(good[16..16 + len].to_vec())
        .unwrap()
        .replace("\"base_channels\":3", "\"base_channels\":4");
    let mut reshaped = good[..12].to_vec();
    reshaped.extend_from_slice(&(json.len() as u32).to_le_bytes());
    reshaped.extend_from_slice(json.as_bytes());
    reshaped.extend_from_slice(&good[16 + len..]);
    assert!(params_from_bytes(&reshaped).unwrap_err().contains("shape"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ckpt");
    std::fs::write(&path, &bad_magic).unwrap();
    let err = load_checkpoint(&path).unwrap_err();
    assert!(err.to_string().contains("bad.ckpt"));
    assert!(load_checkpoint(dir.path().join("missing.ckpt")).is_err());
}

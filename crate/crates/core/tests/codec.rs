use arena_core::{decode_token, encode_token, AddressRange, CodecError, TaskToken, TERMINATE, TOKEN_BYTES};

fn hex(s: &str) -> Vec<u8> {
    s.split_whitespace().map(|b| u8::from_str_radix(b, 16).unwrap()).collect()
}

#[test]
fn golden_vectors() {
    let cases = [
        (
            TaskToken::new(2, AddressRange::new(0x10, 0x20), 0).with_from(3),
            "23 10 00 00 00 20 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00",
        ),
        (
            TaskToken::new(5, AddressRange::new(1, 0x0102_0304), 0xdead_beef)
                .with_remote(AddressRange::new(0x100, 0x200))
                .with_from(15),
            "5f 01 00 00 00 04 03 02 01 00 01 00 00 00 02 00 00 ef be ad de",
        ),
        (TaskToken::terminate(0), "f0 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00"),
        (
            TaskToken::new(14, AddressRange::new(u32::MAX - 1, u32::MAX), u32::MAX).with_from(9),
            "e9 fe ff ff ff ff ff ff ff 00 00 00 00 00 00 00 00 ff ff ff ff",
        ),
    ];
    for (t, bytes) in cases {
        let want = hex(bytes);
        assert_eq!(want.len(), TOKEN_BYTES);
        assert_eq!(encode_token(&t).unwrap().as_slice(), want.as_slice());
        assert_eq!(decode_token(&want).unwrap(), t);
    }
}

#[test]
fn boundary_values_round_trip() {
    let words = [0u32, 1, 0xff, 0x100, 0xffff, 0x1_0000, 0x7fff_ffff, 0x8000_0000, u32::MAX - 1, u32::MAX];
    let ranges: Vec<AddressRange> = words
        .iter()
        .flat_map(|&s| words.iter().filter(move |&&e| e >= s).map(move |&e| AddressRange::new(s, e)))
        .collect();
    let mut n = 0u64;
    for id in 0..=TERMINATE {
        for from in 0..16usize {
            for &r in &ranges {
                for &p in &[0u32, 1, 0x8000_0000, u32::MAX] {
                    let t =
                        TaskToken::new(id, r, p).with_remote(ranges[(n as usize * 7) % ranges.len()]).with_from(from);
                    let b = encode_token(&t).unwrap();
                    assert_eq!(b[0], (id << 4) | from as u8);
                    assert_eq!(decode_token(&b), Ok(t));
                    n += 1;
                }
            }
        }
    }
    assert_eq!(n, 16 * 16 * ranges.len() as u64 * 4);
}

#[test]
fn out_of_range_fields() {
    let t = TaskToken::new(16, AddressRange::new(0, 1), 0);
    assert!(matches!(encode_token(&t), Err(CodecError::FieldOverflow { field: "task_id", value: 16 })));
    let t = TaskToken::new(1, AddressRange::new(0, 1), 0).with_from(16);
    assert!(matches!(encode_token(&t), Err(CodecError::FieldOverflow { field: "from_node", value: 16 })));
    let mut b = encode_token(&TaskToken::new(1, AddressRange::new(5, 9), 0)).unwrap();
    b[1] = 10;
    assert_eq!(decode_token(&b), Err(CodecError::InvertedRange { start: 10, end: 9 }));
    assert_eq!(decode_token(&b[..20]), Err(CodecError::WrongLength(20)));
}

/// Whitespace tokenizer with a hashed vocabulary: each word maps to
/// 1 + fnv1a(word) mod (vocab-1), so id 0 stays free for padding. Output is
/// truncated or padded to `seq_len`.
pub fn tokenize(text: &str, seq_len: usize, vocab: usize) -> Vec<i64> {
    assert!(vocab >= 2, "vocab must leave room for the pad id");
    let mut ids: Vec<i64> = text
        .split_whitespace()
        .take(seq_len)
        .map(|w| 1 + (fnv1a(w.as_bytes()) % (vocab as u64 - 1)) as i64)
        .collect();
    ids.resize(seq_len, 0);
    ids
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

//! The 21-byte task token and its wire layout.
//!
//! Byte 0 packs the task id in the high nibble and the originating node in
//! the low nibble. Bytes 1..21 hold `task_start`, `task_end`,
//! `remote_start`, `remote_end` and `param` as little-endian `u32`s.

use crate::range::AddressRange;
use crate::NodeId;

pub const TOKEN_BYTES: usize = 21;

/// Reserved task id of the termination sentinel.
pub const TERMINATE: u8 = 15;

/// Largest value either nibble field can carry.
pub const NIBBLE_MAX: u8 = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TaskToken {
    pub task_id: u8,
    pub task_range: AddressRange,
    pub param: u32,
    pub remote_range: AddressRange,
    pub from_node: u8,
}

impl TaskToken {
    pub fn new(task_id: u8, task_range: AddressRange, param: u32) -> Self {
        TaskToken { task_id, task_range, param, remote_range: AddressRange::EMPTY, from_node: 0 }
    }

    pub fn with_remote(mut self, remote: AddressRange) -> Self {
        self.remote_range = remote;
        self
    }

    pub fn with_from(mut self, node: NodeId) -> Self {
        self.from_node = node as u8;
        self
    }

    pub fn terminate(from: NodeId) -> Self {
        TaskToken {
            task_id: TERMINATE,
            task_range: AddressRange::EMPTY,
            param: 0,
            remote_range: AddressRange::EMPTY,
            from_node: from as u8,
        }
    }

    pub fn is_terminate(&self) -> bool {
        self.task_id == TERMINATE
    }

    pub fn needs_remote(&self) -> bool {
        self.remote_range.end > self.remote_range.start
    }

    /// Same token, different data range. Filter children are built this way.
    pub fn with_range(&self, range: AddressRange) -> Self {
        TaskToken { task_range: range, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("{field} overflow: {value} does not fit in 4 bits")]
    FieldOverflow { field: &'static str, value: u8 },
    #[error("token must be exactly {TOKEN_BYTES} bytes, got {0}")]
    WrongLength(usize),
    #[error("decoded range [{start}, {end}) is inverted")]
    InvertedRange { start: u32, end: u32 },
}

pub fn encode_token(t: &TaskToken) -> Result<[u8; TOKEN_BYTES], CodecError> {
    if t.task_id > NIBBLE_MAX {
        return Err(CodecError::FieldOverflow { field: "task_id", value: t.task_id });
    }
    if t.from_node > NIBBLE_MAX {
        return Err(CodecError::FieldOverflow { field: "from_node", value: t.from_node });
    }
    let mut out = [0u8; TOKEN_BYTES];
    out[0] = (t.task_id << 4) | t.from_node;
    let words = [t.task_range.start, t.task_range.end, t.remote_range.start, t.remote_range.end, t.param];
    for (i, w) in words.iter().enumerate() {
        out[1 + 4 * i..5 + 4 * i].copy_from_slice(&w.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_token(b: &[u8]) -> Result<TaskToken, CodecError> {
    if b.len() != TOKEN_BYTES {
        return Err(CodecError::WrongLength(b.len()));
    }
    let word = |i: usize| u32::from_le_bytes([b[1 + 4 * i], b[2 + 4 * i], b[3 + 4 * i], b[4 + 4 * i]]);
    let range =
        |s: u32, e: u32| AddressRange::try_new(s, e).map_err(|_| CodecError::InvertedRange { start: s, end: e });
    Ok(TaskToken {
        task_id: b[0] >> 4,
        from_node: b[0] & 0x0f,
        task_range: range(word(0), word(1))?,
        remote_range: range(word(2), word(3))?,
        param: word(4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_token_golden_bytes() {
        let t = TaskToken::new(1, AddressRange::EMPTY, 0);
        let mut expected = [0u8; 21];
        expected[0] = 0x10;
        assert_eq!(encode_token(&t).unwrap(), expected);
    }

    #[test]
    fn overflow_names_the_field() {
        let t = TaskToken::new(16, AddressRange::new(0, 1), 0);
        let err = encode_token(&t).unwrap_err();
        assert_eq!(err, CodecError::FieldOverflow { field: "task_id", value: 16 });
        assert!(alloc::format!("{err}").starts_with("task_id overflow"));
        let t = TaskToken::new(1, AddressRange::new(0, 1), 0).with_from(16);
        assert!(matches!(encode_token(&t), Err(CodecError::FieldOverflow { field: "from_node", .. })));
    }

    #[test]
    fn wrong_lengths_rejected() {
        assert_eq!(decode_token(&[0u8; 20]), Err(CodecError::WrongLength(20)));
        assert_eq!(decode_token(&[0u8; 22]), Err(CodecError::WrongLength(22)));
    }

    #[test]
    fn terminate_sentinel_layout() {
        let bytes = encode_token(&TaskToken::terminate(3)).unwrap();
        assert_eq!(bytes[0], 0xf3);
        assert!(bytes[1..].iter().all(|&b| b == 0));
    }
}

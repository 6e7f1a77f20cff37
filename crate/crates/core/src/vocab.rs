use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::FxHashMap;

/// String interner with dense `u32` ids in insertion order.
#[derive(Debug, Clone, Default)]
pub(crate) struct Vocab {
    ids: FxHashMap<String, u32>,
    words: Vec<String>,
}

impl Vocab {
    pub fn with_reserved(reserved: &[&str]) -> Self {
        let mut v = Self::default();
        for w in reserved {
            v.intern(w);
        }
        v
    }

    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.ids.insert(word.to_string(), id);
        self.words.push(word.to_string());
        id
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }
}

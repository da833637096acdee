use crate::concepts::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Non-empty token-id sequence. Composition rules (one occupant per role
/// slot) are checked against a vocabulary, not at construction, since ids
/// alone don't carry kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Prompt {
    ids: Vec<usize>,
}

impl Prompt {
    pub fn new(ids: Vec<usize>) -> Result<Prompt> {
        if ids.is_empty() {
            return Err(Error::Prompt("empty prompt".into()));
        }
        Ok(Prompt { ids })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.contains(&id)
    }

    /// New prompt with one token appended.
    pub fn with(&self, id: usize) -> Prompt {
        let mut ids = self.ids.clone();
        ids.push(id);
        Prompt { ids }
    }
}

impl Vocabulary {
    pub fn prompt(&self, names: &[&str]) -> Result<Prompt> {
        let ids = names.iter().map(|n| self.id(n)).collect::<Result<Vec<_>>>()?;
        let p = Prompt::new(ids)?;
        self.validate_prompt(&p)?;
        Ok(p)
    }

    pub fn prompt_label(&self, p: &Prompt) -> String {
        p.ids()
            .iter()
            .map(|&id| self.name(id).unwrap_or("?"))
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Composition rule: every id in range, and at most one token claiming
    /// each of the object, style, and trademark slots.
    pub fn validate_prompt(&self, p: &Prompt) -> Result<()> {
        let (mut obj, mut style, mut tm) = (0usize, 0usize, 0usize);
        for &id in p.ids() {
            let bits = self.role_bits(id)?;
            obj += bits.object as usize;
            style += bits.style as usize;
            tm += bits.trademark as usize;
        }
        for (count, slot) in [(obj, "object"), (style, "style"), (tm, "trademark")] {
            if count > 1 {
                return Err(Error::Prompt(format!(
                    "`{}` has {count} tokens claiming the {slot} slot",
                    self.prompt_label(p)
                )));
            }
        }
        Ok(())
    }
}

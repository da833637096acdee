use crate::concepts::prompt::Prompt;
use crate::concepts::vocab::{TokenKind, Vocabulary};
use crate::error::{Error, Result};

/// Target/anchor prompt pairs varied over shared context tokens.
///
/// The context pool is every generic or style token that composes legally
/// with both prompts (no role collision, not already present), in id
/// order. Synonym tokens never enter the pool. Pairs cycle round-robin
/// through the pool, so each context appears n/m times when m divides n,
/// and the whole construction is deterministic.
pub fn compose_prompts(
    vocab: &Vocabulary,
    target: &Prompt,
    anchor: &Prompt,
    n: usize,
) -> Result<Vec<(Prompt, Prompt)>> {
    if n == 0 {
        return Err(Error::bad_input("compose", "pair count must be positive"));
    }
    if target == anchor {
        return Err(Error::bad_input("compose", "target and anchor prompts are identical"));
    }
    vocab.validate_prompt(target)?;
    vocab.validate_prompt(anchor)?;

    let mut pool = Vec::new();
    for id in 0..vocab.len() {
        let tok = vocab.token(id)?;
        if !matches!(tok.kind, TokenKind::Generic { .. } | TokenKind::Style { .. }) {
            continue;
        }
        if target.contains(id) || anchor.contains(id) {
            continue;
        }
        let t_ok = vocab.validate_prompt(&target.with(id)).is_ok();
        let a_ok = vocab.validate_prompt(&anchor.with(id)).is_ok();
        if t_ok && a_ok {
            pool.push(id);
        }
    }
    if pool.is_empty() {
        return Err(Error::bad_input(
            "compose",
            "no generic or style token composes with both prompts; the vocabulary is too small for prompt variety",
        ));
    }

    let pairs = (0..n)
        .map(|i| {
            let ctx = pool[i % pool.len()];
            (target.with(ctx), anchor.with(ctx))
        })
        .collect();
    Ok(pairs)
}

use crate::concepts::linalg::determinant;
use crate::error::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Style matrices below this |det| are rejected as non-invertible.
pub const STYLE_DET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Gaussian blob in the object subspace.
    Object { mean: Vec<f64>, sigma: f64 },
    /// Invertible linear map applied to the object subvector, row-major.
    Style { matrix: Vec<f64> },
    /// Fixed glyph in the trademark subspace.
    Trademark { glyph: Vec<f64> },
    /// Single stored point in the full data space.
    Memorized { point: Vec<f64> },
    /// Alternative name for another token; shares its payload.
    Synonym { of: usize },
    /// Uniform mixture over several same-kind tokens.
    Generic { members: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptToken {
    pub name: String,
    pub kind: TokenKind,
}

/// Which slot of a prompt a token occupies. Composition allows at most
/// one occupant per slot; a memorized token occupies object and trademark
/// at once since it pins the full vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleBits {
    pub object: bool,
    pub style: bool,
    pub trademark: bool,
}

/// Token table with derived dimensions. Token ids are file order.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub d_obj: usize,
    pub d_tm: usize,
    tokens: Vec<ConceptToken>,
    by_name: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVocab {
    d_obj: usize,
    d_tm: usize,
    #[serde(rename = "token")]
    tokens: Vec<RawToken>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToken {
    name: String,
    kind: String,
    mean: Option<Vec<f64>>,
    sigma: Option<f64>,
    matrix: Option<Vec<Vec<f64>>>,
    glyph: Option<Vec<f64>>,
    point: Option<Vec<f64>>,
    of: Option<String>,
    members: Option<Vec<String>>,
}

impl Vocabulary {
    pub fn from_toml_str(text: &str) -> Result<Vocabulary> {
        let raw: RawVocab = toml::from_str(text).map_err(|e| Error::Vocab(e.to_string()))?;
        if raw.d_obj == 0 || raw.d_tm == 0 {
            return Err(Error::Vocab("d_obj and d_tm must be positive".into()));
        }
        if raw.tokens.is_empty() {
            return Err(Error::Vocab("vocabulary has no tokens".into()));
        }

        let mut by_name = BTreeMap::new();
        for (id, t) in raw.tokens.iter().enumerate() {
            if t.name.is_empty() {
                return Err(Error::Vocab(format!("token {id} has an empty name")));
            }
            if by_name.insert(t.name.clone(), id).is_some() {
                return Err(Error::Vocab(format!("duplicate token name `{}`", t.name)));
            }
        }
        let lookup = |name: &str| -> Result<usize> {
            by_name
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownToken(name.to_string()))
        };

        let mut tokens = Vec::with_capacity(raw.tokens.len());
        for t in &raw.tokens {
            let ctx = |msg: String| Error::Vocab(format!("token `{}`: {msg}", t.name));
            let kind = match t.kind.as_str() {
                "object" => {
                    let mean = t.mean.clone().ok_or_else(|| ctx("object needs `mean`".into()))?;
                    let sigma = t.sigma.ok_or_else(|| ctx("object needs `sigma`".into()))?;
                    if mean.len() != raw.d_obj {
                        return Err(ctx(format!("mean has {} entries, want {}", mean.len(), raw.d_obj)));
                    }
                    if !(sigma > 0.0) {
                        return Err(ctx(format!("sigma must be positive, got {sigma}")));
                    }
                    TokenKind::Object { mean, sigma }
                }
                "style" => {
                    let rows = t.matrix.clone().ok_or_else(|| ctx("style needs `matrix`".into()))?;
                    if rows.len() != raw.d_obj || rows.iter().any(|r| r.len() != raw.d_obj) {
                        return Err(ctx(format!("matrix must be {0}x{0}", raw.d_obj)));
                    }
                    let matrix: Vec<f64> = rows.into_iter().flatten().collect();
                    let det = determinant(&matrix, raw.d_obj)?;
                    if det.abs() <= STYLE_DET_TOL {
                        return Err(ctx(format!("matrix is not invertible (det = {det:e})")));
                    }
                    TokenKind::Style { matrix }
                }
                "trademark" => {
                    let glyph = t.glyph.clone().ok_or_else(|| ctx("trademark needs `glyph`".into()))?;
                    if glyph.len() != raw.d_tm {
                        return Err(ctx(format!("glyph has {} entries, want {}", glyph.len(), raw.d_tm)));
                    }
                    TokenKind::Trademark { glyph }
                }
                "memorized" => {
                    let point = t.point.clone().ok_or_else(|| ctx("memorized needs `point`".into()))?;
                    if point.len() != raw.d_obj + raw.d_tm {
                        return Err(ctx(format!("point has {} entries, want {}", point.len(), raw.d_obj + raw.d_tm)));
                    }
                    TokenKind::Memorized { point }
                }
                "synonym" => {
                    let of = t.of.as_deref().ok_or_else(|| ctx("synonym needs `of`".into()))?;
                    TokenKind::Synonym { of: lookup(of)? }
                }
                "generic" => {
                    let members = t.members.clone().ok_or_else(|| ctx("generic needs `members`".into()))?;
                    if members.is_empty() {
                        return Err(ctx("generic needs at least one member".into()));
                    }
                    let ids = members.iter().map(|m| lookup(m)).collect::<Result<Vec<_>>>()?;
                    TokenKind::Generic { members: ids }
                }
                other => return Err(ctx(format!("unknown kind `{other}`"))),
            };
            tokens.push(ConceptToken {
                name: t.name.clone(),
                kind,
            });
        }

        let vocab = Vocabulary {
            d_obj: raw.d_obj,
            d_tm: raw.d_tm,
            tokens,
            by_name,
        };
        vocab.validate_references()?;
        Ok(vocab)
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Vocab(format!("cannot read {}: {e}", path.display())))?;
        Vocabulary::from_toml_str(&text)
    }

    /// Synonyms must point at terminal tokens, generics must mix terminal
    /// tokens of a single kind (objects or trademarks).
    fn validate_references(&self) -> Result<()> {
        for t in &self.tokens {
            match &t.kind {
                TokenKind::Synonym { of } => {
                    let referent = &self.tokens[*of];
                    if matches!(referent.kind, TokenKind::Synonym { .. } | TokenKind::Generic { .. }) {
                        return Err(Error::Vocab(format!(
                            "synonym `{}` must reference an object, style, trademark, or memorized token",
                            t.name
                        )));
                    }
                }
                TokenKind::Generic { members } => {
                    let mut kinds = members.iter().map(|&m| match self.tokens[m].kind {
                        TokenKind::Object { .. } => Ok("object"),
                        TokenKind::Trademark { .. } => Ok("trademark"),
                        _ => Err(Error::Vocab(format!(
                            "generic `{}` members must be object or trademark tokens",
                            t.name
                        ))),
                    });
                    let first = kinds.next().unwrap()?;
                    for k in kinds {
                        if k? != first {
                            return Err(Error::Vocab(format!("generic `{}` mixes member kinds", t.name)));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn data_dim(&self) -> usize {
        self.d_obj + self.d_tm
    }

    pub fn id(&self, name: &str) -> Result<usize> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownToken(name.to_string()))
    }

    pub fn token(&self, id: usize) -> Result<&ConceptToken> {
        self.tokens
            .get(id)
            .ok_or_else(|| Error::UnknownToken(format!("id {id}")))
    }

    pub fn name(&self, id: usize) -> Result<&str> {
        Ok(self.token(id)?.name.as_str())
    }

    /// Follows at most one synonym hop to the payload-bearing token.
    pub fn resolve(&self, id: usize) -> Result<(usize, &ConceptToken)> {
        let t = self.token(id)?;
        match &t.kind {
            TokenKind::Synonym { of } => Ok((*of, self.token(*of)?)),
            _ => Ok((id, t)),
        }
    }

    pub fn role_bits(&self, id: usize) -> Result<RoleBits> {
        let (_, t) = self.resolve(id)?;
        let mut bits = RoleBits {
            object: false,
            style: false,
            trademark: false,
        };
        match &t.kind {
            TokenKind::Object { .. } => bits.object = true,
            TokenKind::Style { .. } => bits.style = true,
            TokenKind::Trademark { .. } => bits.trademark = true,
            TokenKind::Memorized { .. } => {
                bits.object = true;
                bits.trademark = true;
            }
            TokenKind::Generic { members } => match self.tokens[members[0]].kind {
                TokenKind::Object { .. } => bits.object = true,
                TokenKind::Trademark { .. } => bits.trademark = true,
                _ => unreachable!("generic members validated to be object or trademark"),
            },
            TokenKind::Synonym { .. } => unreachable!("resolve() follows synonyms"),
        }
        Ok(bits)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::test_vocab;
    use super::*;

    #[test]
    fn parses_and_assigns_file_order_ids() {
        let v = test_vocab();
        assert_eq!(v.len(), 12);
        assert_eq!(v.id("cat").unwrap(), 0);
        assert_eq!(v.id("grumpy_cat").unwrap(), 1);
        assert_eq!(v.id("animal").unwrap(), 11);
        assert!(v.id("ghost").is_err());
        assert_eq!(v.data_dim(), 6);
    }

    #[test]
    fn synonym_resolves_to_referent() {
        let v = test_vocab();
        let id = v.id("grumpy_tabby").unwrap();
        let (rid, tok) = v.resolve(id).unwrap();
        assert_eq!(rid, v.id("grumpy_cat").unwrap());
        assert!(matches!(tok.kind, TokenKind::Object { .. }));
    }

    #[test]
    fn role_bits_cover_all_kinds() {
        let v = test_vocab();
        assert!(v.role_bits(v.id("cat").unwrap()).unwrap().object);
        assert!(v.role_bits(v.id("warm").unwrap()).unwrap().style);
        assert!(v.role_bits(v.id("star_glyph").unwrap()).unwrap().trademark);
        let mem = v.role_bits(v.id("classic_shot").unwrap()).unwrap();
        assert!(mem.object && mem.trademark && !mem.style);
        // Generic inherits the member role.
        assert!(v.role_bits(v.id("animal").unwrap()).unwrap().object);
        assert!(v.role_bits(v.id("logo").unwrap()).unwrap().trademark);
        // Synonym inherits the referent role.
        assert!(v.role_bits(v.id("grumpy_tabby").unwrap()).unwrap().object);
    }

    #[test]
    fn rejects_malformed_vocabularies() {
        let cases: &[(&str, &str)] = &[
            ("duplicate name", "d_obj = 1\nd_tm = 1\n[[token]]\nname = \"a\"\nkind = \"object\"\nmean = [0.0]\nsigma = 1.0\n[[token]]\nname = \"a\"\nkind = \"object\"\nmean = [0.0]\nsigma = 1.0\n"),
            ("bad sigma", "d_obj = 1\nd_tm = 1\n[[token]]\nname = \"a\"\nkind = \"object\"\nmean = [0.0]\nsigma = 0.0\n"),
            ("wrong mean length", "d_obj = 2\nd_tm = 1\n[[token]]\nname = \"a\"\nkind = \"object\"\nmean = [0.0]\nsigma = 1.0\n"),
            ("singular style", "d_obj = 2\nd_tm = 1\n[[token]]\nname = \"s\"\nkind = \"style\"\nmatrix = [[1.0, 2.0], [2.0, 4.0]]\n"),
            ("unknown kind", "d_obj = 1\nd_tm = 1\n[[token]]\nname = \"a\"\nkind = \"blob\"\n"),
            ("unknown member", "d_obj = 1\nd_tm = 1\n[[token]]\nname = \"g\"\nkind = \"generic\"\nmembers = [\"nope\"]\n"),
            ("empty vocab", "d_obj = 1\nd_tm = 1\ntoken = []\n"),
            ("unknown field", "d_obj = 1\nd_tm = 1\nbogus = 3\n[[token]]\nname = \"a\"\nkind = \"object\"\nmean = [0.0]\nsigma = 1.0\n"),
        ];
        for (what, text) in cases {
            assert!(Vocabulary::from_toml_str(text).is_err(), "{what} should fail");
        }
    }

    #[test]
    fn rejects_synonym_chains_and_mixed_generics() {
        let chain = r#"
            d_obj = 1
            d_tm = 1
            [[token]]
            name = "a"
            kind = "object"
            mean = [0.0]
            sigma = 1.0
            [[token]]
            name = "b"
            kind = "synonym"
            of = "a"
            [[token]]
            name = "c"
            kind = "synonym"
            of = "b"
        "#;
        assert!(Vocabulary::from_toml_str(chain).is_err());

        let mixed = r#"
            d_obj = 1
            d_tm = 1
            [[token]]
            name = "a"
            kind = "object"
            mean = [0.0]
            sigma = 1.0
            [[token]]
            name = "t"
            kind = "trademark"
            glyph = [1.0]
            [[token]]
            name = "g"
            kind = "generic"
            members = ["a", "t"]
        "#;
        assert!(Vocabulary::from_toml_str(mixed).is_err());
    }

    #[test]
    fn forward_references_are_allowed() {
        let text = r#"
            d_obj = 1
            d_tm = 1
            [[token]]
            name = "alias"
            kind = "synonym"
            of = "real"
            [[token]]
            name = "real"
            kind = "object"
            mean = [1.0]
            sigma = 0.5
        "#;
        let v = Vocabulary::from_toml_str(text).unwrap();
        assert_eq!(v.resolve(0).unwrap().0, 1);
    }
}

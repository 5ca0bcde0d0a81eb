use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{FieldSpec, FieldSpecRepr, LocalFieldSpec, Series, EXACT};
use crate::error::{Error, Result};
use crate::tower::unramified_extension;

use super::{build_tower, LubinTateTower};

const FORMAT_VERSION: u32 = 1;

/// Identifies a Lubin–Tate tower of `F_{q^n}((t))`, `q = p^f`, up to level
/// `m` at the given precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TowerKey {
    pub p: u32,
    pub f: u32,
    pub q: u32,
    pub n: u32,
    pub m: u32,
    pub precision: i64,
}

impl TowerKey {
    pub fn new(p: u32, f: u32, n: u32, m: u32, precision: i64) -> Result<Self> {
        let q = p.checked_pow(f).filter(|&q| q <= 256).ok_or_else(|| Error::Invalid(format!("q = {p}^{f} is too large")))?;
        Ok(TowerKey { p, f, q, n, m, precision })
    }

    pub fn file_name(&self) -> String {
        format!("lt-p{}-f{}-q{}-n{}-m{}-prec{}.json", self.p, self.f, self.q, self.n, self.m, self.precision)
    }

    /// `F_{q^n}((t))`.
    pub fn base(&self) -> Result<Arc<LocalFieldSpec>> {
        let root = LocalFieldSpec::laurent(&FieldSpec::standard(self.p, self.f)?, "t");
        if self.n == 1 {
            Ok(root)
        } else {
            unramified_extension(&root, self.n)
        }
    }

    pub fn build(&self) -> Result<LubinTateTower> {
        build_tower(&self.base()?, self.m as usize, self.precision)
    }
}

/// Stored relation series; coefficients are F_p-coordinate vectors in the
/// residue field's standard basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRepr {
    pub ramification_index: u32,
    pub leading_exponent: i64,
    pub coeffs: Vec<Vec<u32>>,
    /// `null` for an exact relation.
    pub precision: Option<i64>,
}

/// Cache document for one tower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDocument {
    pub version: u32,
    pub key: TowerKey,
    pub residue: FieldSpecRepr,
    pub levels: Vec<RelationRepr>,
}

impl TowerDocument {
    pub fn from_tower(key: TowerKey, tower: &LubinTateTower) -> Self {
        let k = tower.base().residue();
        let levels = (1..=tower.m())
            .map(|i| {
                let s = tower.relation(i);
                RelationRepr {
                    ramification_index: tower.field(i).ramification_index(),
                    leading_exponent: s.leading_exponent(),
                    coeffs: s.coeffs().iter().map(|&c| k.coeffs(c)).collect(),
                    precision: (!s.is_exact()).then(|| s.precision()),
                }
            })
            .collect();
        TowerDocument { version: FORMAT_VERSION, key, residue: k.repr(), levels }
    }

    pub fn to_tower(&self) -> Result<LubinTateTower> {
        let bad = |why: &str| Error::Invalid(format!("cache document for {}: {why}", self.key.file_name()));
        if self.version != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        if self.levels.len() != self.key.m as usize {
            return Err(bad("level count differs from key"));
        }
        let base = self.key.base()?;
        let k = base.residue();
        if k.repr() != self.residue {
            return Err(bad("residue field presentation differs"));
        }
        let relations = self
            .levels
            .iter()
            .map(|r| {
                let coeffs = r.coeffs.iter().map(|c| k.from_coeffs(c)).collect::<Result<Vec<u8>>>()?;
                Ok(Series::from_terms(r.leading_exponent, coeffs, r.precision.unwrap_or(EXACT)))
            })
            .collect::<Result<Vec<_>>>()?;
        let tower = LubinTateTower::from_relations(&base, relations, self.key.precision)?;
        for (i, r) in self.levels.iter().enumerate() {
            if tower.field(i + 1).ramification_index() != r.ramification_index {
                return Err(bad("ramification index differs"));
            }
        }
        Ok(tower)
    }
}

/// Directory of tower documents, one file per key.
#[derive(Clone, Debug)]
pub struct TowerCache {
    dir: PathBuf,
}

impl TowerCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TowerCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &TowerKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn load(&self, key: &TowerKey) -> Result<Option<LubinTateTower>> {
        let path = self.path(key);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let doc: TowerDocument =
            serde_json::from_str(&raw).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        if doc.key != *key {
            return Err(Error::Invalid(format!("{} holds the tower for {:?}", path.display(), doc.key)));
        }
        doc.to_tower().map(Some)
    }

    /// Writes to a temporary file in the cache directory, then renames.
    pub fn store(&self, key: &TowerKey, tower: &LubinTateTower) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let doc = TowerDocument::from_tower(*key, tower);
        let body = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
        let tmp = self.dir.join(format!(".{}.{}.tmp", key.file_name(), std::process::id()));
        fs::write(&tmp, body)?;
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }

    /// Cached tower, building and storing it on a miss. The flag reports a hit.
    pub fn tower(&self, key: &TowerKey) -> Result<(LubinTateTower, bool)> {
        if let Some(t) = self.load(key)? {
            return Ok((t, true));
        }
        let t = key.build()?;
        self.store(key, &t)?;
        Ok((t, false))
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BugClass {
    #[default]
    Functional,
    Security,
}

impl BugClass {
    pub const ALL: [BugClass; 2] = [BugClass::Functional, BugClass::Security];

    pub fn as_str(self) -> &'static str {
        match self {
            BugClass::Functional => "functional",
            BugClass::Security => "security",
        }
    }
}

impl fmt::Display for BugClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Impact {
    Confidentiality,
    Integrity,
    Availability,
}

impl Impact {
    pub const ALL: [Impact; 3] = [Impact::Confidentiality, Impact::Integrity, Impact::Availability];

    pub fn letter(self) -> char {
        match self {
            Impact::Confidentiality => 'C',
            Impact::Integrity => 'I',
            Impact::Availability => 'A',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.letter() == c.to_ascii_uppercase())
    }

    pub fn name(self) -> &'static str {
        match self {
            Impact::Confidentiality => "confidentiality",
            Impact::Integrity => "integrity",
            Impact::Availability => "availability",
        }
    }
}

/// Subset of {C, I, A}; serialized as its letters in C, I, A order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ImpactSet {
    bits: u8,
}

impl ImpactSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: Impact) -> bool {
        let bit = 1 << i as u8;
        let fresh = self.bits & bit == 0;
        self.bits |= bit;
        fresh
    }

    pub fn contains(self, i: Impact) -> bool {
        self.bits & (1 << i as u8) != 0
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Impact> {
        Impact::ALL.into_iter().filter(move |i| self.contains(*i))
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        let mut set = Self::empty();
        for c in s.chars().filter(|c| !c.is_whitespace()) {
            let i = Impact::from_letter(c).ok_or_else(|| format!("unknown impact letter {c:?}"))?;
            if !set.insert(i) {
                return Err(format!("impact {c:?} repeated"));
            }
        }
        Ok(set)
    }
}

impl FromIterator<Impact> for ImpactSet {
    fn from_iter<T: IntoIterator<Item = Impact>>(iter: T) -> Self {
        let mut s = Self::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Display for ImpactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.iter().try_for_each(|i| write!(f, "{}", i.letter()))
    }
}

impl Serialize for ImpactSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ImpactSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ImpactSet::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub class: BugClass,
    pub impacts: ImpactSet,
    /// Marked as not a design bug.
    pub excluded: bool,
    pub note: String,
}

impl Default for Annotation {
    fn default() -> Self {
        Self {
            class: BugClass::Functional,
            impacts: ImpactSet::empty(),
            excluded: false,
            note: String::new(),
        }
    }
}

pub const ANNOTATION_COLUMNS: [&str; 5] = ["issue", "class", "impacts", "excluded", "note"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations {
    pub rows: BTreeMap<u64, Annotation>,
    pub warnings: Vec<String>,
}

impl Annotations {
    pub fn get(&self, issue: u64) -> Option<&Annotation> {
        self.rows.get(&issue)
    }

    /// Warns about rows whose issue is not in `known`.
    pub fn check_known(&mut self, known: &BTreeSet<u64>) {
        for n in self.rows.keys().filter(|n| !known.contains(n)) {
            self.warnings.push(format!("annotation for unknown issue {n}"));
        }
    }
}

pub fn load_annotations(path: &Path) -> Result<Annotations, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_annotations(file)
}

pub fn parse_annotations(reader: impl std::io::Read) -> Result<Annotations, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| CorpusError::Schema(e.to_string()))?.clone();
    let got: BTreeSet<String> = headers
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    let want: BTreeSet<String> = ANNOTATION_COLUMNS.iter().map(|s| s.to_string()).collect();
    if got != want || headers.len() != ANNOTATION_COLUMNS.len() {
        return Err(CorpusError::Schema(format!(
            "expected columns {}, found {}",
            ANNOTATION_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .expect("column checked above")
    };
    let (ci, cc, cm, ce, cn) = (col("issue"), col("class"), col("impacts"), col("excluded"), col("note"));

    let mut out = Annotations::default();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| CorpusError::Schema(format!("line {line}: {e}")))?;
        let bad = |msg: String| CorpusError::Schema(format!("line {line}: {msg}"));
        if rec.len() > ANNOTATION_COLUMNS.len() {
            return Err(bad(format!(
                "{} fields, expected at most {}",
                rec.len(),
                ANNOTATION_COLUMNS.len()
            )));
        }
        // Trailing empty fields may be omitted.
        let field = |i: usize| rec.get(i).unwrap_or("");
        let issue: u64 = field(ci)
            .trim_start_matches('#')
            .parse()
            .map_err(|_| bad(format!("bad issue number {:?}", field(ci))))?;
        let excluded = match field(ce).to_ascii_lowercase().as_str() {
            "" => false,
            "yes" => true,
            other => return Err(bad(format!("excluded must be empty or \"yes\", got {other:?}"))),
        };
        let class = match field(cc).to_ascii_lowercase().as_str() {
            "" | "functional" => BugClass::Functional,
            "security" => BugClass::Security,
            other => return Err(bad(format!("unknown class {other:?}"))),
        };
        let impacts = ImpactSet::parse(field(cm)).map_err(bad)?;
        match class {
            BugClass::Security if impacts.is_empty() && !excluded => {
                return Err(bad("security bug without impacts".into()));
            }
            BugClass::Functional if !impacts.is_empty() => {
                return Err(bad("functional bug with impacts".into()));
            }
            _ => {}
        }
        let ann = Annotation {
            class,
            impacts,
            excluded,
            note: field(cn).to_string(),
        };
        if let Some(prev) = out.rows.get(&issue) {
            if prev.class != ann.class || prev.impacts != ann.impacts || prev.excluded != ann.excluded {
                return Err(CorpusError::Conflict { issue, line });
            }
            out.warnings
                .push(format!("line {line}: duplicate row for issue {issue}"));
            continue;
        }
        out.rows.insert(issue, ann);
    }
    Ok(out)
}

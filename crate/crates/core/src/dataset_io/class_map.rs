use std::io::Read;

use crate::error::{Error, Result};

/// Number of fine (ImageNet) classes.
pub const FINE_CLASSES: usize = 1000;

/// The sixteen coarse categories used to score silhouette recognition.
pub const CATEGORY_NAMES: [&str; 16] = [
    "airplane", "bear", "bicycle", "bird", "boat", "bottle", "car", "cat", "chair", "clock", "dog",
    "elephant", "keyboard", "knife", "oven", "truck",
];

/// Many-to-one projection from the 1000 fine classes onto 16 categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    entries: Vec<Option<u8>>,
}

impl Default for ClassMap {
    fn default() -> Self {
        Self {
            entries: vec![None; FINE_CLASSES],
        }
    }
}

impl ClassMap {
    pub fn category_names() -> &'static [&'static str; 16] {
        &CATEGORY_NAMES
    }

    pub fn category_index(name: &str) -> Option<usize> {
        CATEGORY_NAMES.iter().position(|&c| c == name)
    }

    /// Coarse category of `fine`, or `None` when unmapped.
    pub fn coarse(&self, fine: usize) -> Result<Option<usize>> {
        self.entries
            .get(fine)
            .map(|e| e.map(usize::from))
            .ok_or_else(|| Error::param(format!("fine class {fine} out of range 0..{FINE_CLASSES}")))
    }

    pub fn insert(&mut self, fine: usize, coarse: usize) -> Result<()> {
        if coarse >= CATEGORY_NAMES.len() {
            return Err(Error::param(format!("coarse index {coarse} >= 16")));
        }
        let slot = self
            .entries
            .get_mut(fine)
            .ok_or_else(|| Error::param(format!("fine class {fine} out of range 0..{FINE_CLASSES}")))?;
        if slot.is_some() {
            return Err(Error::format(format!("duplicate fine index {fine}")));
        }
        *slot = Some(coarse as u8);
        Ok(())
    }

    pub fn mapped_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    /// Fine classes mapped to `coarse`, ascending.
    pub fn fine_classes_of(&self, coarse: usize) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.map(usize::from) == Some(coarse))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fine_index,category\n");
        for (fine, entry) in self.entries.iter().enumerate() {
            if let Some(c) = entry {
                out.push_str(&format!("{fine},{}\n", CATEGORY_NAMES[usize::from(*c)]));
            }
        }
        out
    }
}

/// Reads a `fine_index,category` CSV table with a header row. Unlisted fine
/// indices stay unmapped.
pub fn load_class_map(reader: impl Read) -> Result<ClassMap> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut map = ClassMap::default();
    if headers.is_empty() {
        return Ok(map);
    }
    if headers.len() != 2 || &headers[0] != "fine_index" || &headers[1] != "category" {
        return Err(Error::format(format!(
            "class map header must be `fine_index,category`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 2;
        if record.len() != 2 {
            return Err(Error::format(format!("row {row}: expected 2 columns, found {}", record.len())));
        }
        let fine: usize = record[0]
            .parse()
            .map_err(|_| Error::format(format!("row {row}: bad fine index `{}`", &record[0])))?;
        let coarse = ClassMap::category_index(&record[1])
            .ok_or_else(|| Error::format(format!("row {row}: unknown category `{}`", &record[1])))?;
        if fine >= FINE_CLASSES {
            return Err(Error::format(format!("row {row}: fine index {fine} >= {FINE_CLASSES}")));
        }
        map.insert(fine, coarse)
            .map_err(|e| Error::format(format!("row {row}: {e}")))?;
    }
    Ok(map)
}

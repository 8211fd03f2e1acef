// SPDX-License-Identifier: Apache-2.0

//! `-Key (unit): value` configuration documents.
//!
//! One grammar covers technology files, cell files, bank/search configs and
//! simulator settings. Each key has an entry in a unit table; values are
//! converted to the key's canonical unit at parse time.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Loc, Result};

/// Physical dimension of a numeric key. The first unit listed by
/// [`Dim::units`] is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    None,
    Volt,
    LengthUm,
    LengthNm,
    AreaUm2,
    AreaMm2,
    CurrentPerUm,
    CapPerUm,
    Cap,
    ResPerUm,
    ResTimesUm,
    Res,
    Time,
    SlopeMvDec,
    TempC,
    EnergyEv,
    Energy,
    Power,
    Freq,
    Bytes,
    Bits,
}

impl Dim {
    pub fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::None => &[],
            Dim::Volt => &[("V", 1.0), ("mV", 1e-3)],
            Dim::LengthUm => &[("um", 1.0), ("nm", 1e-3), ("mm", 1e3)],
            Dim::LengthNm => &[("nm", 1.0), ("um", 1e3)],
            Dim::AreaUm2 => &[("um^2", 1.0), ("nm^2", 1e-6), ("mm^2", 1e6)],
            Dim::AreaMm2 => &[("mm^2", 1.0), ("um^2", 1e-6)],
            Dim::CurrentPerUm => &[
                ("A/um", 1.0),
                ("mA/um", 1e-3),
                ("uA/um", 1e-6),
                ("nA/um", 1e-9),
                ("pA/um", 1e-12),
                ("fA/um", 1e-15),
            ],
            Dim::CapPerUm => &[("F/um", 1.0), ("fF/um", 1e-15), ("aF/um", 1e-18)],
            Dim::Cap => &[("F", 1.0), ("pF", 1e-12), ("fF", 1e-15), ("aF", 1e-18)],
            Dim::ResPerUm => &[("ohm/um", 1.0), ("kohm/um", 1e3)],
            Dim::ResTimesUm => &[("ohm*um", 1.0), ("kohm*um", 1e3)],
            Dim::Res => &[("ohm", 1.0), ("kohm", 1e3)],
            Dim::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9), ("ps", 1e-12)],
            Dim::SlopeMvDec => &[("mV/dec", 1.0), ("V/dec", 1e3)],
            Dim::TempC => &[("C", 1.0)],
            Dim::EnergyEv => &[("eV", 1.0)],
            Dim::Energy => &[("J", 1.0), ("nJ", 1e-9), ("pJ", 1e-12), ("fJ", 1e-15)],
            Dim::Power => &[("W", 1.0), ("mW", 1e-3), ("uW", 1e-6)],
            Dim::Freq => &[("Hz", 1.0), ("MHz", 1e6), ("GHz", 1e9)],
            Dim::Bytes => &[
                ("B", 1.0),
                ("KB", 1024.0),
                ("MB", 1024.0 * 1024.0),
                ("GB", 1024.0 * 1024.0 * 1024.0),
            ],
            Dim::Bits => &[("bit", 1.0)],
        }
    }

    pub fn canonical(self) -> Option<&'static str> {
        self.units().first().map(|u| u.0)
    }
}

/// Value type of a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Number(Dim),
    Integer(Dim),
    /// Decimal or `a/b` fraction.
    Ratio,
    Bool,
    Text,
    Path,
}

/// Parsed value, in the key's canonical unit.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub unit: Option<String>,
    pub raw: String,
    pub value: Value,
    pub loc: Loc,
}

impl PartialEq for Entry {
    // Provenance is metadata; two entries are the same setting regardless of
    // where they were written.
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.unit == other.unit && self.raw == other.raw && self.value == other.value
    }
}

/// An ordered key-value document with per-entry provenance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDocument {
    entries: Vec<Entry>,
    #[doc(hidden)]
    pub warnings: Vec<String>,
}

const DEVICE_ROLES: &[&str] = &["LogicN", "LogicP", "AOSWrite", "AOSRead", "AccessLP"];

const DEVICE_PARAMS: &[(&str, Kind)] = &[
    ("IonPerUm", Kind::Number(Dim::CurrentPerUm)),
    ("IoffPerUm", Kind::Number(Dim::CurrentPerUm)),
    ("SubthresholdSwing", Kind::Number(Dim::SlopeMvDec)),
    ("Vth", Kind::Number(Dim::Volt)),
    ("GateCapPerUm", Kind::Number(Dim::CapPerUm)),
    ("ParasiticCgsPerUm", Kind::Number(Dim::CapPerUm)),
    ("ParasiticCgdPerUm", Kind::Number(Dim::CapPerUm)),
    ("RonPerUm", Kind::Number(Dim::ResTimesUm)),
];

const WIRE_PARAMS: &[(&str, Kind)] = &[
    ("WireResistancePerUm", Kind::Number(Dim::ResPerUm)),
    ("WireCapacitancePerUm", Kind::Number(Dim::CapPerUm)),
    ("WirePitch", Kind::Number(Dim::LengthNm)),
];

/// The fixed part of the key table.
const KEYS: &[(&str, Kind)] = &[
    // control and includes
    ("AllowUnknown", Kind::Bool),
    ("DesignTarget", Kind::Text),
    ("ProcessNode", Kind::Integer(Dim::None)),
    ("TechnologyInputFile", Kind::Path),
    ("MemoryCellInputFile", Kind::Path),
    ("TagCellInputFile", Kind::Path),
    ("Temperature", Kind::Number(Dim::TempC)),
    // technology
    ("DeviceClass", Kind::Text),
    ("AOSDeviceClass", Kind::Text),
    ("Vdd", Kind::Number(Dim::Volt)),
    ("FinPitch", Kind::Number(Dim::LengthNm)),
    ("GatePitch", Kind::Number(Dim::LengthNm)),
    ("MetalPitch", Kind::Number(Dim::LengthNm)),
    ("StdCellHeightTracks", Kind::Integer(Dim::None)),
    ("MinTransistorWidth", Kind::Number(Dim::LengthUm)),
    ("PnRatio", Kind::Number(Dim::None)),
    ("InputSlew", Kind::Number(Dim::Time)),
    ("DrainKneeVoltage", Kind::Number(Dim::Volt)),
    ("ReferenceTemperature", Kind::Number(Dim::TempC)),
    ("LeakageActivationEnergy", Kind::Number(Dim::EnergyEv)),
    ("SenseVoltage", Kind::Number(Dim::Volt)),
    ("SenseAmpDelay", Kind::Number(Dim::Time)),
    ("MetalLayers", Kind::Text),
    ("LocalLayer", Kind::Text),
    ("HtreeLayer", Kind::Text),
    ("MIVResistance", Kind::Number(Dim::Res)),
    ("MIVCapacitancePerUm", Kind::Number(Dim::CapPerUm)),
    ("MIVDiameter", Kind::Number(Dim::LengthNm)),
    ("MIVPitch", Kind::Number(Dim::LengthNm)),
    ("TierHeight", Kind::Number(Dim::LengthUm)),
    ("LevelShifterWidthFactor", Kind::Number(Dim::None)),
    ("CurrentSenseAmpFactor", Kind::Number(Dim::None)),
    ("RepeaterSizeFactor", Kind::Number(Dim::None)),
    ("RepeaterSpacingFactor", Kind::Number(Dim::None)),
    // memory cell
    ("MemoryCellType", Kind::Text),
    ("CellArea", Kind::Number(Dim::AreaUm2)),
    ("CellAspectRatio", Kind::Number(Dim::None)),
    ("IsBEOL", Kind::Bool),
    ("TiersPerCell", Kind::Integer(Dim::None)),
    ("VBoost", Kind::Number(Dim::Volt)),
    ("VHold", Kind::Number(Dim::Volt)),
    ("WriteDevice", Kind::Text),
    ("WriteDeviceWidth", Kind::Number(Dim::LengthUm)),
    ("ReadDevice", Kind::Text),
    ("ReadDeviceWidth", Kind::Number(Dim::LengthUm)),
    ("SNCapacitance", Kind::Number(Dim::Cap)),
    ("SNCapacitanceTable", Kind::Text),
    ("Retention", Kind::Number(Dim::Time)),
    ("RetentionDerating", Kind::Number(Dim::None)),
    ("WritePulse", Kind::Number(Dim::Time)),
    ("ResistanceOn", Kind::Number(Dim::Res)),
    ("ResistanceOff", Kind::Number(Dim::Res)),
    ("ReadVoltage", Kind::Number(Dim::Volt)),
    ("SenseMarginFraction", Kind::Number(Dim::None)),
    ("WriteLevelFraction", Kind::Number(Dim::None)),
    ("SenseLeakageBudget", Kind::Number(Dim::None)),
    // bank organization
    ("Capacity", Kind::Integer(Dim::Bytes)),
    ("Associativity", Kind::Integer(Dim::None)),
    ("WordWidth", Kind::Integer(Dim::Bits)),
    ("CacheLineSize", Kind::Integer(Dim::Bytes)),
    ("AddressBits", Kind::Integer(Dim::None)),
    ("AccessMode", Kind::Text),
    ("BankKind", Kind::Text),
    ("TAUVariant", Kind::Text),
    ("SubarrayRows", Kind::Integer(Dim::None)),
    ("SubarrayCols", Kind::Integer(Dim::None)),
    ("ActiveSubarrayRows", Kind::Integer(Dim::None)),
    ("ActiveSubarrayCols", Kind::Integer(Dim::None)),
    ("MatsPerSubarrayRows", Kind::Integer(Dim::None)),
    ("MatsPerSubarrayCols", Kind::Integer(Dim::None)),
    ("ActiveMatRows", Kind::Integer(Dim::None)),
    ("ActiveMatCols", Kind::Integer(Dim::None)),
    ("MatRows", Kind::Integer(Dim::None)),
    ("MatCols", Kind::Integer(Dim::None)),
    ("BitlineMux", Kind::Integer(Dim::None)),
    ("SenseAmpMux", Kind::Integer(Dim::None)),
    ("WordlineSegments", Kind::Integer(Dim::None)),
    ("FoldedBitline", Kind::Bool),
    ("ReferenceRows", Kind::Integer(Dim::None)),
    ("Folds", Kind::Integer(Dim::None)),
    ("ECCRatio", Kind::Ratio),
    ("TAUCentralFraction", Kind::Number(Dim::None)),
    ("Slices", Kind::Integer(Dim::None)),
    ("RingHopLatency", Kind::Number(Dim::Time)),
    // search
    ("OptimizationTarget", Kind::Text),
    ("MaxArea", Kind::Number(Dim::AreaMm2)),
    ("MaxLatency", Kind::Number(Dim::Time)),
    ("MaxTiers", Kind::Integer(Dim::None)),
    ("TopK", Kind::Integer(Dim::None)),
    ("MinMatRows", Kind::Integer(Dim::None)),
    ("MaxMatRows", Kind::Integer(Dim::None)),
    ("MinMatCols", Kind::Integer(Dim::None)),
    ("MaxMatCols", Kind::Integer(Dim::None)),
    ("MaxMux", Kind::Integer(Dim::None)),
    ("MaxSubarrayGrid", Kind::Integer(Dim::None)),
    ("MaxMatsPerSubarray", Kind::Integer(Dim::None)),
    // simulation
    ("ClockFrequency", Kind::Number(Dim::Freq)),
    ("OffChipLatencyCycles", Kind::Integer(Dim::None)),
    ("RefreshEnabled", Kind::Bool),
    ("RefreshBlockingScope", Kind::Text),
    ("MissEnergyMultiplier", Kind::Number(Dim::None)),
];

/// Looks up the value kind of a key, including the per-layer wire keys
/// (`WireResistancePerUm_M7`) and per-role device keys (`AOSWrite_Vth`).
pub fn key_kind(key: &str) -> Option<Kind> {
    if let Some(&(_, k)) = KEYS.iter().find(|(n, _)| *n == key) {
        return Some(k);
    }
    let (prefix, suffix) = key.split_once('_')?;
    if suffix.is_empty() {
        return None;
    }
    if let Some(&(_, k)) = WIRE_PARAMS.iter().find(|(n, _)| *n == prefix) {
        return Some(k);
    }
    if DEVICE_ROLES.contains(&prefix) {
        return DEVICE_PARAMS.iter().find(|(n, _)| *n == suffix).map(|&(_, k)| k);
    }
    None
}

fn valid_key(key: &str) -> bool {
    !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

fn parse_ratio(s: &str) -> Option<f64> {
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().ok()?;
        let b: f64 = b.trim().parse().ok()?;
        (b != 0.0).then(|| a / b)
    } else {
        s.parse().ok()
    }
}

fn unit_scale(dim: Dim, unit: Option<&str>) -> std::result::Result<f64, String> {
    match unit {
        None => Ok(1.0),
        Some(u) => {
            if dim == Dim::None {
                return Err(format!("takes no unit, got `({u})`"));
            }
            dim.units().iter().find(|(n, _)| *n == u).map(|&(_, s)| s).ok_or_else(|| {
                let allowed: Vec<_> = dim.units().iter().map(|(n, _)| *n).collect();
                format!("unit mismatch: `({u})`, expected one of {}", allowed.join(", "))
            })
        }
    }
}

fn parse_value(kind: Kind, unit: Option<&str>, raw: &str) -> std::result::Result<Value, String> {
    match kind {
        Kind::Number(dim) => {
            let scale = unit_scale(dim, unit)?;
            let x: f64 = raw.parse().map_err(|_| format!("expected a number, got `{raw}`"))?;
            if !x.is_finite() {
                return Err(format!("expected a finite number, got `{raw}`"));
            }
            Ok(Value::Number(x * scale))
        }
        Kind::Integer(dim) => {
            let scale = unit_scale(dim, unit)?;
            let x: i64 = raw.parse().map_err(|_| format!("expected an integer, got `{raw}`"))?;
            Ok(Value::Integer(x * scale as i64))
        }
        Kind::Ratio => {
            unit_scale(Dim::None, unit)?;
            parse_ratio(raw).map(Value::Number).ok_or_else(|| format!("expected a ratio like `17/64`, got `{raw}`"))
        }
        Kind::Bool => {
            unit_scale(Dim::None, unit)?;
            parse_bool(raw).map(Value::Bool).ok_or_else(|| format!("expected true/false, got `{raw}`"))
        }
        Kind::Text | Kind::Path => {
            unit_scale(Dim::None, unit)?;
            Ok(Value::Text(raw.to_string()))
        }
    }
}

impl ConfigDocument {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses configuration text. `file` is recorded in each entry's
    /// provenance and used to resolve relative include paths.
    pub fn parse(text: &str, file: Option<&Path>) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut seen: HashMap<String, Loc> = HashMap::new();
        let mut unknown: Vec<usize> = Vec::new();

        for (idx, raw_line) in text.lines().enumerate() {
            let loc = Loc { file: file.map(Path::to_path_buf), line: idx + 1 };
            let mut line = raw_line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if let Some(pos) = line.find(" //").or_else(|| line.find("\t//")) {
                line = line[..pos].trim_end();
            }
            let Some(body) = line.strip_prefix('-') else {
                return Err(Error::Syntax { loc, msg: "expected `-Key: value`".into() });
            };
            let Some(colon) = body.find(':') else {
                return Err(Error::Syntax { loc, msg: "missing `:` after key".into() });
            };
            let head = body[..colon].trim();
            let raw = body[colon + 1..].trim();
            if raw.is_empty() {
                return Err(Error::Syntax { loc, msg: "missing value".into() });
            }
            let (key, unit) = match head.find(|c: char| c.is_whitespace() || c == '(') {
                None => (head, None),
                Some(p) => {
                    let rest = head[p..].trim();
                    let unit = rest
                        .strip_prefix('(')
                        .and_then(|r| r.strip_suffix(')'))
                        .map(str::trim)
                        .filter(|u| !u.is_empty())
                        .ok_or_else(|| Error::Syntax { loc: loc.clone(), msg: format!("malformed unit `{rest}`") })?;
                    (&head[..p], Some(unit))
                }
            };
            if !valid_key(key) {
                return Err(Error::Syntax { loc, msg: format!("invalid key `{key}`") });
            }
            if let Some(first) = seen.get(key) {
                return Err(Error::DuplicateKey { key: key.to_string(), first: first.clone(), second: loc });
            }
            seen.insert(key.to_string(), loc.clone());

            let value = match key_kind(key) {
                Some(kind) => parse_value(kind, unit, raw)
                    .map_err(|msg| Error::Value { loc: loc.clone(), key: key.to_string(), msg })?,
                None => {
                    unknown.push(entries.len());
                    Value::Text(raw.to_string())
                }
            };
            entries.push(Entry { key: key.to_string(), unit: unit.map(str::to_string), raw: raw.to_string(), value, loc });
        }

        let mut doc = ConfigDocument { entries, warnings: Vec::new() };
        if let Some(&first) = unknown.first() {
            if doc.get_bool("AllowUnknown")?.unwrap_or(false) {
                for &i in &unknown {
                    let e = &doc.entries[i];
                    doc.warnings.push(format!("{}: ignoring unsupported key `{}`", e.loc, e.key));
                }
            } else {
                let e = &doc.entries[first];
                return Err(Error::UnknownKey { loc: e.loc.clone(), key: e.key.clone() });
            }
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, Some(path))
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entry(key).is_some()
    }

    /// Sets a key from a raw string, validating it like a parsed line.
    /// Replaces an existing value in place.
    pub fn set(&mut self, key: &str, unit: Option<&str>, raw: &str) -> Result<()> {
        let loc = Loc::default();
        let kind = key_kind(key).ok_or_else(|| Error::UnknownKey { loc: loc.clone(), key: key.to_string() })?;
        let value =
            parse_value(kind, unit, raw).map_err(|msg| Error::Value { loc: loc.clone(), key: key.to_string(), msg })?;
        let entry = Entry { key: key.to_string(), unit: unit.map(str::to_string), raw: raw.to_string(), value, loc };
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => *e = entry,
            None => self.entries.push(entry),
        }
        Ok(())
    }

    /// Serializes back to the line grammar. Parsing the output yields an equal
    /// document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match &e.unit {
                Some(u) => writeln!(out, "-{} ({}): {}", e.key, u, e.raw),
                None => writeln!(out, "-{}: {}", e.key, e.raw),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }

    fn type_error(&self, e: &Entry, expected: &str) -> Error {
        Error::Value { loc: e.loc.clone(), key: e.key.clone(), msg: format!("expected {expected}") }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match e.value {
                Value::Number(x) => Ok(Some(x)),
                Value::Integer(i) => Ok(Some(i as f64)),
                _ => Err(self.type_error(e, "a number")),
            },
        }
    }

    pub fn get_i64(&self, key: &str) -> Result<Option<i64>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match e.value {
                Value::Integer(i) => Ok(Some(i)),
                _ => Err(self.type_error(e, "an integer")),
            },
        }
    }

    /// Reads a non-negative integer key as `usize`.
    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get_i64(key)? {
            None => Ok(None),
            Some(i) if i >= 0 => Ok(Some(i as usize)),
            Some(i) => {
                let e = self.entry(key).expect("present");
                Err(Error::Value { loc: e.loc.clone(), key: key.into(), msg: format!("must be >= 0, got {i}") })
            }
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => match e.value {
                Value::Bool(b) => Ok(Some(b)),
                _ => Err(self.type_error(e, "a boolean")),
            },
        }
    }

    pub fn get_text(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.raw.as_str())
    }

    /// Resolves a path-valued key relative to the directory of the file that
    /// set it.
    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        let e = self.entry(key)?;
        let p = PathBuf::from(&e.raw);
        if p.is_absolute() {
            return Some(p);
        }
        match e.loc.file.as_ref().and_then(|f| f.parent()) {
            Some(dir) => Some(dir.join(p)),
            None => Some(p),
        }
    }

    pub fn require_f64(&self, key: &str, context: &str) -> Result<f64> {
        self.get_f64(key)?.ok_or_else(|| Error::MissingKey { key: key.into(), context: Some(context.into()) })
    }

    pub fn require_usize(&self, key: &str, context: &str) -> Result<usize> {
        self.get_usize(key)?.ok_or_else(|| Error::MissingKey { key: key.into(), context: Some(context.into()) })
    }

    pub fn require_text(&self, key: &str, context: &str) -> Result<&str> {
        self.get_text(key).ok_or_else(|| Error::MissingKey { key: key.into(), context: Some(context.into()) })
    }

    /// Strictly positive number with provenance in the error.
    pub fn require_positive(&self, key: &str, context: &str) -> Result<f64> {
        let v = self.require_f64(key, context)?;
        if v > 0.0 {
            Ok(v)
        } else {
            let e = self.entry(key).expect("present");
            Err(Error::Value { loc: e.loc.clone(), key: key.into(), msg: format!("must be positive, got {v}") })
        }
    }

    /// Non-negative number with provenance in the error.
    pub fn require_non_negative(&self, key: &str, context: &str) -> Result<f64> {
        let v = self.require_f64(key, context)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            let e = self.entry(key).expect("present");
            Err(Error::Value { loc: e.loc.clone(), key: key.into(), msg: format!("must be >= 0, got {v}") })
        }
    }

    /// Error helper for a value that parsed but is semantically invalid.
    pub fn invalid(&self, key: &str, msg: impl Into<String>) -> Error {
        let loc = self.entry(key).map(|e| e.loc.clone()).unwrap_or_default();
        Error::Value { loc, key: key.into(), msg: msg.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integer_key() {
        let doc = ConfigDocument::parse("-Associativity: 16\n", None).unwrap();
        assert_eq!(doc.get_i64("Associativity").unwrap(), Some(16));
    }

    #[test]
    fn empty_file_is_empty_document() {
        let doc = ConfigDocument::parse("", None).unwrap();
        assert!(doc.is_empty());
        let doc = ConfigDocument::parse("// only a comment\n\n", None).unwrap();
        assert!(doc.is_empty());
    }

    #[test]
    fn malformed_value_is_a_typed_error_with_line() {
        let err = ConfigDocument::parse("-Vdd (V): banana", None).unwrap_err();
        match err {
            Error::Value { loc, key, .. } => {
                assert_eq!(loc.line, 1);
                assert_eq!(key, "Vdd");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn units_convert_to_canonical() {
        let doc = ConfigDocument::parse("-Vdd (mV): 700\n-Capacity (MB): 64\n-SNCapacitance (fF): 5.4", None).unwrap();
        assert!((doc.get_f64("Vdd").unwrap().unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(doc.get_i64("Capacity").unwrap(), Some(64 << 20));
        assert!((doc.get_f64("SNCapacitance").unwrap().unwrap() - 5.4e-15).abs() < 1e-27);
    }

    #[test]
    fn unit_mismatch_is_rejected() {
        let err = ConfigDocument::parse("-Vdd (ohm): 0.7", None).unwrap_err();
        assert!(err.to_string().contains("unit mismatch"), "{err}");
        let err = ConfigDocument::parse("-Associativity (ways): 16", None).unwrap_err();
        assert!(matches!(err, Error::Value { .. }));
    }

    #[test]
    fn unknown_keys_need_allow_unknown() {
        let err = ConfigDocument::parse("-EnablePruning: Yes", None).unwrap_err();
        assert!(matches!(err, Error::UnknownKey { ref key, .. } if key == "EnablePruning"));
        let doc = ConfigDocument::parse("-EnablePruning: Yes\n-AllowUnknown: true\n", None).unwrap();
        assert_eq!(doc.warnings.len(), 1);
    }

    #[test]
    fn duplicate_keys_report_both_locations() {
        let err = ConfigDocument::parse("-Associativity: 8\n\n-Associativity: 16", None).unwrap_err();
        match err {
            Error::DuplicateKey { first, second, .. } => {
                assert_eq!(first.line, 1);
                assert_eq!(second.line, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wire_and_device_keys_resolve() {
        assert_eq!(key_kind("WireResistancePerUm_M7"), Some(Kind::Number(Dim::ResPerUm)));
        assert_eq!(key_kind("AOSWrite_Vth"), Some(Kind::Number(Dim::Volt)));
        assert_eq!(key_kind("AOSWrite_Bogus"), None);
        assert_eq!(key_kind("WirePitch_"), None);
    }

    #[test]
    fn ratio_accepts_fraction() {
        let doc = ConfigDocument::parse("-ECCRatio: 17/64", None).unwrap();
        assert_eq!(doc.get_f64("ECCRatio").unwrap(), Some(17.0 / 64.0));
    }

    #[test]
    fn trailing_comments_and_missing_colon() {
        let doc = ConfigDocument::parse("-Associativity: 16 // ways\n", None).unwrap();
        assert_eq!(doc.get_text("Associativity"), Some("16"));
        let err = ConfigDocument::parse("-Associativity 16", None).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
        let err = ConfigDocument::parse("Associativity: 16", None).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }

    #[test]
    fn includes_resolve_relative_to_file() {
        let doc = ConfigDocument::parse("-MemoryCellInputFile: cells/gc.cell", Some(Path::new("/cfg/main.cfg"))).unwrap();
        assert_eq!(doc.get_path("MemoryCellInputFile"), Some(PathBuf::from("/cfg/cells/gc.cell")));
    }
}

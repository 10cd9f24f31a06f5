//! Problem input: timetable, fleet, depots and crew checkpoints.
//!
//! An [`Instance`] is read from JSON (see `docs/instance-format.md`) and
//! validated once; everything downstream assumes the invariants checked by
//! [`Instance::validate`].

mod generate;

pub use generate::{generate_synthetic, GeneratorConfig};

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{serde_decimal, Rational};

/// Minutes since midnight of the planning day.
pub type Minutes = u32;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{}: {message}", at(.path))]
    Schema { path: String, message: String },
    #[error("{}: unknown {kind} `{id}`", at(.path))]
    DanglingReference {
        path: String,
        kind: &'static str,
        id: String,
    },
    #[error("{}: {message}", at(.path))]
    Invariant { path: String, message: String },
    #[error("invalid generator parameters: {0}")]
    Generator(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at(path: &str) -> &str {
    if path.is_empty() {
        "document"
    } else {
        path
    }
}

impl InstanceError {
    /// JSON-pointer style location of the problem, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            InstanceError::Schema { path, .. }
            | InstanceError::DanglingReference { path, .. }
            | InstanceError::Invariant { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// Allowed seat and bicycle shortage, for a single EMU and for a coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub seat_single: u32,
    pub seat_coupled: u32,
    pub bike_single: u32,
    pub bike_coupled: u32,
}

impl Tolerances {
    pub fn seats(&self, units: u8) -> u32 {
        if units >= 2 {
            self.seat_coupled
        } else {
            self.seat_single
        }
    }

    pub fn bikes(&self, units: u8) -> u32 {
        if units >= 2 {
            self.bike_coupled
        } else {
            self.bike_single
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trip {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub depart: Minutes,
    pub arrive: Minutes,
    #[serde(default)]
    pub passengers: u32,
    #[serde(default)]
    pub bicycles: u32,
    /// Member of the subset of trips that may run with a coupled pair.
    #[serde(default)]
    pub couplable: bool,
    pub allowed_types: Vec<String>,
    #[serde(with = "serde_decimal")]
    pub distance: Rational,
    #[serde(default = "default_true")]
    pub obligatory: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<String>,
    /// Depot whose drivers staff this trip; defaults to the first depot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub driver_depot: Option<String>,
    /// Per-trip override of the global shortage tolerances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

impl Trip {
    /// True while the trip is under way at `at` (departure inclusive).
    pub fn running_at(&self, at: Minutes) -> bool {
        self.depart <= at && at < self.arrive
    }

    pub fn allows(&self, emu_type: &str) -> bool {
        self.allowed_types.iter().any(|t| t == emu_type)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmuType {
    pub id: String,
    pub seats: u32,
    #[serde(default)]
    pub bike_slots: u32,
    #[serde(with = "serde_decimal")]
    pub cost_per_km: Rational,
    #[serde(default)]
    pub couplable: bool,
}

/// Per-type dispatch (`out_*`) and return (`in_*`) bounds. Types missing
/// from a map have bound 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Depot {
    pub id: String,
    pub station: String,
    #[serde(default)]
    pub out_min: BTreeMap<String, u32>,
    #[serde(default)]
    pub out_max: BTreeMap<String, u32>,
    #[serde(default)]
    pub in_min: BTreeMap<String, u32>,
    #[serde(default)]
    pub in_max: BTreeMap<String, u32>,
}

impl Depot {
    pub fn out_range(&self, emu_type: &str) -> (u32, u32) {
        (
            self.out_min.get(emu_type).copied().unwrap_or(0),
            self.out_max.get(emu_type).copied().unwrap_or(0),
        )
    }

    pub fn in_range(&self, emu_type: &str) -> (u32, u32) {
        (
            self.in_min.get(emu_type).copied().unwrap_or(0),
            self.in_max.get(emu_type).copied().unwrap_or(0),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverWindow {
    pub depot: String,
    pub at: Minutes,
    #[serde(default)]
    pub min_drivers: u32,
    pub max_drivers: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
}

/// A driver authorization: which EMU types, and optionally which lines, it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct License {
    pub id: String,
    pub emu_types: Vec<String>,
    /// Empty means every line.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lines: Vec<String>,
}

impl License {
    pub fn covers(&self, emu_type: &str, line: Option<&str>) -> bool {
        self.emu_types.iter().any(|t| t == emu_type)
            && (self.lines.is_empty() || line.is_some_and(|l| self.lines.iter().any(|x| x == l)))
    }
}

/// How driver checkpoint rows count a selected arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverWeighting {
    /// One per EMU on the pointed-to train.
    #[default]
    PerEmu,
    /// One per train regardless of composition.
    PerTrain,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Optional station registry; when present every station reference must resolve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stations: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    #[serde(default)]
    pub meta: Meta,
    #[serde(with = "serde_decimal")]
    pub alpha: Rational,
    pub delta_min: Minutes,
    pub delta_max: Minutes,
    pub tolerances: Tolerances,
    pub emu_types: Vec<EmuType>,
    pub depots: Vec<Depot>,
    pub trips: Vec<Trip>,
    #[serde(default)]
    pub driver_windows: Vec<DriverWindow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub licenses: Vec<License>,
    #[serde(default)]
    pub driver_weighting: DriverWeighting,
}

/// Reads and validates an instance from a JSON byte stream.
pub fn load_instance<R: Read>(source: R) -> Result<Instance, InstanceError> {
    let mut de = serde_json::Deserializer::from_reader(source);
    let instance: Instance = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = pointer_from_path(err.path());
        let inner = err.into_inner();
        if inner.is_io() {
            InstanceError::Io(inner.into())
        } else {
            InstanceError::Schema {
                path,
                message: inner.to_string(),
            }
        }
    })?;
    de.end().map_err(|e| InstanceError::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    instance.validate()?;
    Ok(instance)
}

fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        out.push('/');
        match segment {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => {
                out.pop();
            }
        }
    }
    out
}

impl Instance {
    pub fn from_json_str(text: &str) -> Result<Self, InstanceError> {
        load_instance(text.as_bytes())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn type_index(&self, id: &str) -> Option<usize> {
        self.emu_types.iter().position(|t| t.id == id)
    }

    pub fn depot_index(&self, id: &str) -> Option<usize> {
        self.depots.iter().position(|d| d.id == id)
    }

    pub fn trip_index(&self, id: &str) -> Option<usize> {
        self.trips.iter().position(|t| t.id == id)
    }

    /// Index of the depot whose drivers staff trip `trip`.
    pub fn driver_depot_of(&self, trip: usize) -> Option<usize> {
        match &self.trips[trip].driver_depot {
            Some(id) => self.depot_index(id),
            None if self.depots.is_empty() => None,
            None => Some(0),
        }
    }

    pub fn tolerances_for(&self, trip: usize) -> Tolerances {
        self.trips[trip].tolerances.unwrap_or(self.tolerances)
    }

    /// Obligatory trips: the timetable proper.
    pub fn timetable(&self) -> impl Iterator<Item = (usize, &Trip)> {
        self.trips.iter().enumerate().filter(|(_, t)| t.obligatory)
    }

    /// Counts of obligatory single-only trips and obligatory couplable trips.
    pub fn trip_partition(&self) -> (usize, usize) {
        let coupled = self.timetable().filter(|(_, t)| t.couplable).count();
        (self.timetable().count() - coupled, coupled)
    }

    /// Checks every structural and cross-reference invariant.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let invariant = |path: String, message: &str| InstanceError::Invariant {
            path,
            message: message.to_string(),
        };
        let dangling =
            |path: String, kind: &'static str, id: &str| InstanceError::DanglingReference {
                path,
                kind,
                id: id.to_string(),
            };

        if self.delta_min > self.delta_max {
            return Err(invariant(
                "/delta_min".into(),
                "delta_min exceeds delta_max",
            ));
        }
        if self.alpha.is_negative() {
            return Err(invariant("/alpha".into(), "alpha must be nonnegative"));
        }

        let mut type_ids = HashSet::new();
        for (i, t) in self.emu_types.iter().enumerate() {
            if !type_ids.insert(t.id.as_str()) {
                return Err(invariant(
                    format!("/emu_types/{i}/id"),
                    "duplicate EMU type id",
                ));
            }
            if t.seats == 0 {
                return Err(invariant(
                    format!("/emu_types/{i}/seats"),
                    "seats must be positive",
                ));
            }
            if t.cost_per_km.is_negative() {
                return Err(invariant(
                    format!("/emu_types/{i}/cost_per_km"),
                    "cost must be nonnegative",
                ));
            }
        }

        let stations: Option<HashSet<&str>> = self
            .meta
            .stations
            .as_ref()
            .map(|s| s.iter().map(String::as_str).collect());
        let check_station = |path: String, id: &str| match &stations {
            Some(set) if !set.contains(id) => Err(dangling(path, "station", id)),
            _ => Ok(()),
        };

        let mut depot_ids = HashSet::new();
        for (i, d) in self.depots.iter().enumerate() {
            if !depot_ids.insert(d.id.as_str()) {
                return Err(invariant(format!("/depots/{i}/id"), "duplicate depot id"));
            }
            check_station(format!("/depots/{i}/station"), &d.station)?;
            for (field, map) in [
                ("out_min", &d.out_min),
                ("out_max", &d.out_max),
                ("in_min", &d.in_min),
                ("in_max", &d.in_max),
            ] {
                for key in map.keys() {
                    if !type_ids.contains(key.as_str()) {
                        return Err(dangling(
                            format!("/depots/{i}/{field}/{key}"),
                            "EMU type",
                            key,
                        ));
                    }
                }
            }
            for t in &self.emu_types {
                let (lo, hi) = d.out_range(&t.id);
                if lo > hi {
                    return Err(invariant(
                        format!("/depots/{i}/out_min/{}", t.id),
                        "out_min exceeds out_max",
                    ));
                }
                let (lo, hi) = d.in_range(&t.id);
                if lo > hi {
                    return Err(invariant(
                        format!("/depots/{i}/in_min/{}", t.id),
                        "in_min exceeds in_max",
                    ));
                }
            }
        }

        let mut license_ids = HashSet::new();
        for (i, l) in self.licenses.iter().enumerate() {
            if !license_ids.insert(l.id.as_str()) {
                return Err(invariant(
                    format!("/licenses/{i}/id"),
                    "duplicate license id",
                ));
            }
            for (j, t) in l.emu_types.iter().enumerate() {
                if !type_ids.contains(t.as_str()) {
                    return Err(dangling(
                        format!("/licenses/{i}/emu_types/{j}"),
                        "EMU type",
                        t,
                    ));
                }
            }
        }

        let mut trip_ids = HashSet::new();
        for (i, t) in self.trips.iter().enumerate() {
            if !trip_ids.insert(t.id.as_str()) {
                return Err(invariant(format!("/trips/{i}/id"), "duplicate trip id"));
            }
            if t.arrive <= t.depart {
                return Err(invariant(
                    format!("/trips/{i}/arrive"),
                    "arrival must follow departure",
                ));
            }
            if t.obligatory && t.allowed_types.is_empty() {
                return Err(invariant(
                    format!("/trips/{i}/allowed_types"),
                    "obligatory trip admits no EMU type",
                ));
            }
            if t.distance.is_negative() {
                return Err(invariant(
                    format!("/trips/{i}/distance"),
                    "distance must be nonnegative",
                ));
            }
            for (j, ty) in t.allowed_types.iter().enumerate() {
                if !type_ids.contains(ty.as_str()) {
                    return Err(dangling(
                        format!("/trips/{i}/allowed_types/{j}"),
                        "EMU type",
                        ty,
                    ));
                }
            }
            check_station(format!("/trips/{i}/origin"), &t.origin)?;
            check_station(format!("/trips/{i}/destination"), &t.destination)?;
            if let Some(d) = &t.driver_depot {
                if !depot_ids.contains(d.as_str()) {
                    return Err(dangling(format!("/trips/{i}/driver_depot"), "depot", d));
                }
            }
        }

        for (i, w) in self.driver_windows.iter().enumerate() {
            if !depot_ids.contains(w.depot.as_str()) {
                return Err(dangling(
                    format!("/driver_windows/{i}/depot"),
                    "depot",
                    &w.depot,
                ));
            }
            if w.min_drivers > w.max_drivers {
                return Err(invariant(
                    format!("/driver_windows/{i}/min_drivers"),
                    "min_drivers exceeds max_drivers",
                ));
            }
            if let Some(l) = &w.license {
                if !license_ids.contains(l.as_str()) {
                    return Err(dangling(
                        format!("/driver_windows/{i}/license"),
                        "license",
                        l,
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cost of running `units` EMUs of type `emu_type` on trip `trip`.
    pub fn running_cost(&self, emu_type: usize, trip: usize, units: u8) -> Rational {
        let per_unit = self.emu_types[emu_type].cost_per_km * self.trips[trip].distance;
        if per_unit.is_zero() {
            return per_unit;
        }
        per_unit * Rational::from_integer(i128::from(units))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "alpha": 0.01, "delta_min": 5, "delta_max": 60,
        "tolerances": {"seat_single": 0, "seat_coupled": 0, "bike_single": 0, "bike_coupled": 0},
        "emu_types": [{"id": "r1", "seats": 100, "cost_per_km": 2}],
        "depots": [{"id": "d", "station": "A", "out_max": {"r1": 1}}],
        "trips": [{"id": "t1", "origin": "A", "destination": "B", "depart": 360, "arrive": 400,
                   "passengers": 50, "allowed_types": ["r1"], "distance": 12.5}]
    }"#;

    #[test]
    fn loads_minimal_instance() {
        let inst = Instance::from_json_str(MINIMAL).unwrap();
        assert_eq!(inst.trips.len(), 1);
        assert_eq!(inst.alpha, Rational::new(1, 100));
        assert_eq!(inst.trips[0].distance, Rational::new(25, 2));
        assert!(inst.trips[0].obligatory);
        assert_eq!(inst.driver_weighting, DriverWeighting::PerEmu);
    }

    #[test]
    fn empty_timetable_is_valid() {
        let text = r#"{"alpha": 0, "delta_min": 0, "delta_max": 0,
            "tolerances": {"seat_single": 0, "seat_coupled": 0, "bike_single": 0, "bike_coupled": 0},
            "emu_types": [], "depots": [{"id": "d", "station": "A"}], "trips": []}"#;
        let inst = Instance::from_json_str(text).unwrap();
        assert!(inst.trips.is_empty());
        assert_eq!(inst.depots.len(), 1);
    }

    #[test]
    fn unknown_type_is_dangling_with_pointer() {
        let text = MINIMAL.replace(r#""allowed_types": ["r1"]"#, r#""allowed_types": ["r9"]"#);
        let err = Instance::from_json_str(&text).unwrap_err();
        assert!(matches!(
            err,
            InstanceError::DanglingReference {
                kind: "EMU type",
                ..
            }
        ));
        assert_eq!(err.path(), Some("/trips/0/allowed_types/0"));
    }

    #[test]
    fn missing_field_reports_path() {
        let text = MINIMAL.replace(r#""depart": 360, "#, "");
        let err = Instance::from_json_str(&text).unwrap_err();
        assert!(matches!(err, InstanceError::Schema { .. }), "{err}");
        assert_eq!(err.path(), Some("/trips/0"));
        assert!(err.to_string().contains("depart"));
    }

    #[test]
    fn wrong_type_reports_path() {
        let text = MINIMAL.replace(r#""seats": 100"#, r#""seats": "many""#);
        let err = Instance::from_json_str(&text).unwrap_err();
        assert_eq!(err.path(), Some("/emu_types/0/seats"));
    }

    #[test]
    fn invariant_violations() {
        let backwards = MINIMAL.replace(r#""arrive": 400"#, r#""arrive": 300"#);
        let err = Instance::from_json_str(&backwards).unwrap_err();
        assert!(matches!(err, InstanceError::Invariant { .. }));
        assert_eq!(err.path(), Some("/trips/0/arrive"));

        let window = MINIMAL.replace(r#""delta_min": 5"#, r#""delta_min": 90"#);
        assert_eq!(
            Instance::from_json_str(&window).unwrap_err().path(),
            Some("/delta_min")
        );

        let no_types = MINIMAL.replace(r#""allowed_types": ["r1"]"#, r#""allowed_types": []"#);
        assert!(matches!(
            Instance::from_json_str(&no_types).unwrap_err(),
            InstanceError::Invariant { .. }
        ));
    }

    #[test]
    fn depot_range_keys_must_resolve() {
        let text = MINIMAL.replace(r#""out_max": {"r1": 1}"#, r#""out_max": {"r7": 1}"#);
        let err = Instance::from_json_str(&text).unwrap_err();
        assert_eq!(err.path(), Some("/depots/0/out_max/r7"));
    }

    #[test]
    fn station_registry_is_enforced_when_present() {
        let text = MINIMAL.replace(
            r#""alpha": 0.01"#,
            r#""meta": {"stations": ["A"]}, "alpha": 0.01"#,
        );
        let err = Instance::from_json_str(&text).unwrap_err();
        assert_eq!(err.path(), Some("/trips/0/destination"));
    }

    #[test]
    fn license_coverage() {
        let l = License {
            id: "L".into(),
            emu_types: vec!["r1".into()],
            lines: vec!["S1".into()],
        };
        assert!(l.covers("r1", Some("S1")));
        assert!(!l.covers("r1", Some("S2")));
        assert!(!l.covers("r1", None));
        assert!(!l.covers("r2", Some("S1")));
    }

    #[test]
    fn trailing_garbage_rejected() {
        let text = format!("{MINIMAL} xx");
        assert!(matches!(
            Instance::from_json_str(&text).unwrap_err(),
            InstanceError::Schema { .. }
        ));
    }
}

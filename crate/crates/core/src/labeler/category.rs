use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The 14 CheXbert observation classes, in canonical (table) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiseaseCategory {
    EnlargedCardiomediastinum,
    Cardiomegaly,
    LungOpacity,
    LungLesion,
    Edema,
    Consolidation,
    Pneumonia,
    Atelectasis,
    Pneumothorax,
    PleuralEffusion,
    PleuralOther,
    Fracture,
    SupportDevices,
    NoFinding,
}

impl DiseaseCategory {
    pub const COUNT: usize = 14;

    pub const ALL: [DiseaseCategory; 14] = [
        DiseaseCategory::EnlargedCardiomediastinum,
        DiseaseCategory::Cardiomegaly,
        DiseaseCategory::LungOpacity,
        DiseaseCategory::LungLesion,
        DiseaseCategory::Edema,
        DiseaseCategory::Consolidation,
        DiseaseCategory::Pneumonia,
        DiseaseCategory::Atelectasis,
        DiseaseCategory::Pneumothorax,
        DiseaseCategory::PleuralEffusion,
        DiseaseCategory::PleuralOther,
        DiseaseCategory::Fracture,
        DiseaseCategory::SupportDevices,
        DiseaseCategory::NoFinding,
    ];

    /// Every category except `NoFinding`; one agent each.
    pub const AGENT_BEARING: [DiseaseCategory; 13] = [
        DiseaseCategory::EnlargedCardiomediastinum,
        DiseaseCategory::Cardiomegaly,
        DiseaseCategory::LungOpacity,
        DiseaseCategory::LungLesion,
        DiseaseCategory::Edema,
        DiseaseCategory::Consolidation,
        DiseaseCategory::Pneumonia,
        DiseaseCategory::Atelectasis,
        DiseaseCategory::Pneumothorax,
        DiseaseCategory::PleuralEffusion,
        DiseaseCategory::PleuralOther,
        DiseaseCategory::Fracture,
        DiseaseCategory::SupportDevices,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_agent_bearing(self) -> bool {
        self != DiseaseCategory::NoFinding
    }

    /// Wire name, as used by CheXbert.
    pub fn name(self) -> &'static str {
        match self {
            DiseaseCategory::EnlargedCardiomediastinum => "Enlarged Cardiomediastinum",
            DiseaseCategory::Cardiomegaly => "Cardiomegaly",
            DiseaseCategory::LungOpacity => "Lung Opacity",
            DiseaseCategory::LungLesion => "Lung Lesion",
            DiseaseCategory::Edema => "Edema",
            DiseaseCategory::Consolidation => "Consolidation",
            DiseaseCategory::Pneumonia => "Pneumonia",
            DiseaseCategory::Atelectasis => "Atelectasis",
            DiseaseCategory::Pneumothorax => "Pneumothorax",
            DiseaseCategory::PleuralEffusion => "Pleural Effusion",
            DiseaseCategory::PleuralOther => "Pleural Other",
            DiseaseCategory::Fracture => "Fracture",
            DiseaseCategory::SupportDevices => "Support Devices",
            DiseaseCategory::NoFinding => "No Finding",
        }
    }

    /// Snake-case form used in file names, e.g. `pleural_effusion`.
    pub fn slug(self) -> String {
        self.name().to_lowercase().replace(' ', "_")
    }
}

impl fmt::Display for DiseaseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiseaseCategory {
    type Err = String;

    /// Accepts the wire name, the slug or the Rust variant name, ignoring case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        DiseaseCategory::ALL
            .into_iter()
            .find(|c| c.name().replace(' ', "").to_lowercase() == key)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

impl Serialize for DiseaseCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for DiseaseCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationState {
    Positive,
    Negative,
    Uncertain,
    Unmentioned,
}

impl ObservationState {
    pub fn as_str(self) -> &'static str {
        match self {
            ObservationState::Positive => "positive",
            ObservationState::Negative => "negative",
            ObservationState::Uncertain => "uncertain",
            ObservationState::Unmentioned => "unmentioned",
        }
    }

    /// Positive or negative: the states kept for training subsets.
    pub fn is_definite(self) -> bool {
        matches!(self, ObservationState::Positive | ObservationState::Negative)
    }
}

impl FromStr for ObservationState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(ObservationState::Positive),
            "negative" => Ok(ObservationState::Negative),
            "uncertain" => Ok(ObservationState::Uncertain),
            "unmentioned" => Ok(ObservationState::Unmentioned),
            other => Err(format!("unknown observation state {other:?}")),
        }
    }
}

/// A total map from [`DiseaseCategory`] to `T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CategoryMap<T>([T; DiseaseCategory::COUNT]);

impl<T: Clone> CategoryMap<T> {
    pub fn filled(value: T) -> Self {
        Self(std::array::from_fn(|_| value.clone()))
    }
}

impl<T> CategoryMap<T> {
    pub fn from_fn(mut f: impl FnMut(DiseaseCategory) -> T) -> Self {
        Self(std::array::from_fn(|i| f(DiseaseCategory::ALL[i])))
    }

    pub fn iter(&self) -> impl Iterator<Item = (DiseaseCategory, &T)> {
        DiseaseCategory::ALL.into_iter().zip(self.0.iter())
    }

    pub fn len(&self) -> usize {
        DiseaseCategory::COUNT
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl<T> Index<DiseaseCategory> for CategoryMap<T> {
    type Output = T;

    fn index(&self, category: DiseaseCategory) -> &T {
        &self.0[category.index()]
    }
}

impl<T> IndexMut<DiseaseCategory> for CategoryMap<T> {
    fn index_mut(&mut self, category: DiseaseCategory) -> &mut T {
        &mut self.0[category.index()]
    }
}

impl<T: Serialize> Serialize for CategoryMap<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.iter().map(|(c, v)| (c.name(), v)))
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for CategoryMap<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let mut entries: std::collections::HashMap<DiseaseCategory, T> =
            std::collections::HashMap::deserialize(deserializer)?;
        let mut missing = None;
        let values: [Option<T>; DiseaseCategory::COUNT] = std::array::from_fn(|i| {
            let c = DiseaseCategory::ALL[i];
            let v = entries.remove(&c);
            if v.is_none() && missing.is_none() {
                missing = Some(c);
            }
            v
        });
        if let Some(c) = missing {
            return Err(serde::de::Error::custom(format!("missing category {:?}", c.name())));
        }
        Ok(Self(values.map(|v| v.expect("checked above"))))
    }
}

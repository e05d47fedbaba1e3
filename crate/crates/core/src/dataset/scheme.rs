use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};

/// A protected attribute and its ordered classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub classes: Vec<String>,
}

impl Attribute {
    pub fn new<I, S>(name: &str, classes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Attribute {
            name: name.to_owned(),
            classes: classes.into_iter().map(Into::into).collect(),
        }
    }
}

/// Ordered protected attributes. A demographic group picks one class per
/// attribute, so the groups are the cartesian product of the class lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawScheme")]
pub struct DemographicScheme {
    attributes: Vec<Attribute>,
}

#[derive(Deserialize)]
struct RawScheme {
    attributes: Vec<Attribute>,
}

impl TryFrom<RawScheme> for DemographicScheme {
    type Error = DatasetError;

    fn try_from(raw: RawScheme) -> Result<Self> {
        DemographicScheme::new(raw.attributes)
    }
}

impl DemographicScheme {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(DatasetError::Scheme("at least one attribute is required".into()));
        }
        let mut names = std::collections::HashSet::new();
        for attr in &attributes {
            check_name(&attr.name)?;
            if attr.name == "identity_id" {
                return Err(DatasetError::Scheme("attribute name identity_id is reserved".into()));
            }
            if !names.insert(attr.name.as_str()) {
                return Err(DatasetError::Scheme(format!("duplicate attribute {:?}", attr.name)));
            }
            if attr.classes.is_empty() {
                return Err(DatasetError::Scheme(format!("attribute {:?} has no classes", attr.name)));
            }
            let mut classes = std::collections::HashSet::new();
            for class in &attr.classes {
                check_name(class)?;
                if !classes.insert(class.as_str()) {
                    return Err(DatasetError::Scheme(format!(
                        "duplicate class {class:?} in attribute {:?}",
                        attr.name
                    )));
                }
            }
        }
        Ok(DemographicScheme { attributes })
    }

    /// Gender {Men, Women} crossed with ethnicity {Asian, Black, Caucasian}.
    pub fn diveface() -> Self {
        DemographicScheme::new(vec![
            Attribute::new("gender", ["Men", "Women"]),
            Attribute::new("ethnicity", ["Asian", "Black", "Caucasian"]),
        ])
        .expect("static scheme is valid")
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// All groups, first attribute varying slowest.
    pub fn groups(&self) -> Vec<Group> {
        let mut out = vec![Vec::new()];
        for attr in &self.attributes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<String>| {
                    attr.classes.iter().map(move |c| {
                        let mut g = prefix.clone();
                        g.push(c.clone());
                        g
                    })
                })
                .collect();
        }
        out.into_iter().map(Group).collect()
    }

    /// Returns the offending `(attribute, class)` when `group` is not a
    /// member of this scheme.
    pub fn check_group(&self, group: &Group) -> std::result::Result<(), (String, String)> {
        if group.0.len() != self.attributes.len() {
            return Err((
                format!("<{} attributes>", self.attributes.len()),
                group.to_string(),
            ));
        }
        for (attr, class) in self.attributes.iter().zip(&group.0) {
            if !attr.classes.contains(class) {
                return Err((attr.name.clone(), class.clone()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, group: &Group) -> bool {
        self.check_group(group).is_ok()
    }

    /// Parses a group label such as `Women/Asian`.
    pub fn parse_group(&self, label: &str) -> Option<Group> {
        let g = Group(label.split(Group::SEPARATOR).map(str::to_owned).collect());
        self.contains(&g).then_some(g)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| DatasetError::Scheme(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scheme serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.trim() != name || name.contains(Group::SEPARATOR) {
        return Err(DatasetError::Scheme(format!(
            "invalid name {name:?}: must be non-empty, without surrounding whitespace or '{}'",
            Group::SEPARATOR
        )));
    }
    Ok(())
}

/// One class per attribute, in scheme order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub struct Group(Vec<String>);

impl Group {
    pub const SEPARATOR: char = '/';

    pub fn new<I, S>(classes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Group(classes.into_iter().map(Into::into).collect())
    }

    pub fn classes(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

impl From<Group> for String {
    fn from(g: Group) -> String {
        g.to_string()
    }
}

impl From<String> for Group {
    fn from(s: String) -> Group {
        Group(s.split(Group::SEPARATOR).map(str::to_owned).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diveface_has_six_groups_in_product_order() {
        let labels: Vec<String> = DemographicScheme::diveface().groups().iter().map(Group::to_string).collect();
        assert_eq!(
            labels,
            [
                "Men/Asian",
                "Men/Black",
                "Men/Caucasian",
                "Women/Asian",
                "Women/Black",
                "Women/Caucasian"
            ]
        );
    }

    #[test]
    fn rejects_invalid_schemes() {
        assert!(DemographicScheme::new(vec![]).is_err());
        assert!(DemographicScheme::new(vec![Attribute::new("a", Vec::<String>::new())]).is_err());
        assert!(DemographicScheme::new(vec![Attribute::new("a", ["x", "x"])]).is_err());
        assert!(DemographicScheme::new(vec![Attribute::new("a", ["x"]), Attribute::new("a", ["y"])]).is_err());
        assert!(DemographicScheme::new(vec![Attribute::new("a", ["x/y"])]).is_err());
        assert!(DemographicScheme::new(vec![Attribute::new("identity_id", ["x"])]).is_err());
    }

    #[test]
    fn toml_round_trip_keeps_order_and_validates() {
        let s = DemographicScheme::diveface();
        let text = s.to_toml_string();
        assert_eq!(DemographicScheme::from_toml_str(&text).unwrap(), s);

        let bad = "[[attributes]]\nname = \"g\"\nclasses = []\n";
        assert!(DemographicScheme::from_toml_str(bad).is_err());
    }

    #[test]
    fn parse_group_checks_membership() {
        let s = DemographicScheme::diveface();
        assert_eq!(s.parse_group("Women/Black"), Some(Group::new(["Women", "Black"])));
        assert_eq!(s.parse_group("Women/Martian"), None);
        assert_eq!(s.parse_group("Women"), None);
    }
}

use serde::{Deserialize, Serialize};

use crate::frameio::Detection;
use crate::{Error, Result};

/// The known classes, indexed densely by class id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRegistry {
    names: Vec<String>,
}

impl ClassRegistry {
    /// Entries may come in any order but their ids must be exactly
    /// `0..entries.len()`.
    pub fn new(entries: impl IntoIterator<Item = (u32, String)>) -> Result<Self> {
        let mut entries: Vec<(u32, String)> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        for (expected, (id, name)) in entries.iter().enumerate() {
            if *id as usize != expected {
                return Err(Error::Registry(format!(
                    "class ids must be dense from 0; found {id} ('{name}') at position {expected}"
                )));
            }
        }
        Ok(ClassRegistry {
            names: entries.into_iter().map(|(_, n)| n).collect(),
        })
    }

    pub fn from_names<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        ClassRegistry {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    /// Registry spanning `0..=max class_id` of the detections. Ids never seen
    /// get the placeholder name `class_<id>`; one id with two names is an
    /// error.
    pub fn from_detections(detections: &[Detection]) -> Result<Self> {
        let Some(max_id) = detections.iter().map(|d| d.class_id).max() else {
            return Ok(ClassRegistry::default());
        };
        let mut names: Vec<Option<&str>> = vec![None; max_id as usize + 1];
        for d in detections {
            let slot = &mut names[d.class_id as usize];
            match slot {
                None => *slot = Some(&d.class_name),
                Some(existing) if *existing != d.class_name => {
                    return Err(Error::Registry(format!(
                        "class id {} named both '{existing}' and '{}'",
                        d.class_id, d.class_name
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(ClassRegistry {
            names: names
                .into_iter()
                .enumerate()
                .map(|(i, n)| n.map_or_else(|| format!("class_{i}"), str::to_owned))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, class_id: u32) -> Option<&str> {
        self.names.get(class_id as usize).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (i as u32, n.as_str()))
    }

    pub(crate) fn check(&self, class_id: u32) -> Result<()> {
        if (class_id as usize) < self.names.len() {
            Ok(())
        } else {
            Err(Error::Registry(format!(
                "unknown class id {class_id} (registry has {} classes)",
                self.names.len()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameio::BBox;

    fn det(class_id: u32, name: &str) -> Detection {
        Detection {
            keyframe_id: 0,
            class_id,
            class_name: name.into(),
            score: 0.5,
            bbox: BBox::from([0.0, 0.0, 1.0, 1.0]),
        }
    }

    #[test]
    fn dense_ids_required() {
        assert!(ClassRegistry::new([(0, "a".into()), (2, "b".into())]).is_err());
        assert!(ClassRegistry::new([(0, "a".into()), (0, "b".into())]).is_err());
        let r = ClassRegistry::new([(1, "b".into()), (0, "a".into())]).unwrap();
        assert_eq!(r.name(1), Some("b"));
        assert_eq!(r.id_of("a"), Some(0));
    }

    #[test]
    fn from_detections_fills_gaps() {
        let r = ClassRegistry::from_detections(&[det(2, "cup"), det(0, "monitor")]).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.name(1), Some("class_1"));
        assert!(ClassRegistry::from_detections(&[det(0, "a"), det(0, "b")]).is_err());
        assert!(r.check(3).is_err());
    }
}

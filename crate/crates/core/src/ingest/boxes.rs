use std::path::Path;

use super::{Aabb, BoxSet};
use crate::error::{Error, Result};

pub fn boxes_from_json(text: &str) -> Result<BoxSet> {
    let boxes: Vec<Aabb> =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("box file: {e}")))?;
    BoxSet::new(boxes)
}

pub fn boxes_to_json(boxes: &BoxSet) -> String {
    serde_json::to_string_pretty(boxes.as_slice()).expect("boxes serialize")
}

pub fn load_boxes(path: impl AsRef<Path>) -> Result<BoxSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    boxes_from_json(&text)
}

pub fn write_boxes(boxes: &BoxSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, boxes_to_json(boxes) + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_unit_box() {
        let set = boxes_from_json(r#"[{"min":[0,0,0],"max":[1,1,1],"class":3,"instance":0}]"#).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(
            set[0],
            Aabb {
                min: [0.0; 3],
                max: [1.0; 3],
                class_id: 3,
                instance_id: 0
            }
        );
    }

    #[test]
    fn inverted_corner_reports_index() {
        let err = boxes_from_json(r#"[{"min":[2,0,0],"max":[1,1,1],"class":1,"instance":0}]"#).unwrap_err();
        assert!(matches!(err, Error::Geometry { index: 0, axis: 0 }));
    }

    #[test]
    fn shared_instance_rejected() {
        let text = r#"[{"min":[0,0,0],"max":[1,1,1],"class":1,"instance":5},
                       {"min":[0,0,0],"max":[2,2,2],"class":2,"instance":5}]"#;
        let err = boxes_from_json(text).unwrap_err();
        assert!(matches!(err, Error::DuplicateInstance { instance: 5, first: 0, second: 1 }));
    }

    #[test]
    fn malformed_json_is_format_error() {
        assert!(matches!(boxes_from_json("[{]"), Err(Error::Format(_))));
        assert!(matches!(
            boxes_from_json(r#"[{"min":[0,0],"max":[1,1,1],"class":1,"instance":0}]"#),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn round_trip_preserves_order_and_values() {
        let set = BoxSet::new(vec![
            Aabb { min: [0.1, -3.0, 1e-9], max: [0.30000000000000004, 2.0, 5.5], class_id: 2, instance_id: 9 },
            Aabb { min: [1.0; 3], max: [1.0; 3], class_id: 1, instance_id: 0 },
        ])
        .unwrap();
        assert_eq!(boxes_from_json(&boxes_to_json(&set)).unwrap(), set);
    }
}

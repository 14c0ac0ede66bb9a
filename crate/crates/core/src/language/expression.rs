//! Template realization of property sets.

use thiserror::Error;

use super::ia::Property;
use crate::board::{Color, Region, Shape};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealizeError {
    #[error("cannot realize an empty property set")]
    Empty,
    #[error("more than one value given for {0:?}")]
    Duplicate(super::ia::PropertyKind),
}

/// Fill the template matching the given properties. Surface order is always
/// color, shape, position whatever order the properties come in.
pub fn realize_text(props: &[Property]) -> Result<String, RealizeError> {
    if props.is_empty() {
        return Err(RealizeError::Empty);
    }
    let mut color: Option<Color> = None;
    let mut shape: Option<Shape> = None;
    let mut region: Option<Region> = None;
    for &p in props {
        let dup = match p {
            Property::Color(c) => color.replace(c).is_some(),
            Property::Shape(s) => shape.replace(s).is_some(),
            Property::Position(r) => region.replace(r).is_some(),
        };
        if dup {
            return Err(RealizeError::Duplicate(p.kind()));
        }
    }
    let text = match (color, shape, region) {
        (Some(c), None, None) => format!("Take the {c} piece"),
        (None, Some(s), None) => format!("Take the {s}"),
        (None, None, Some(r)) => format!("Take the piece at {r}"),
        (Some(c), Some(s), None) => format!("Take the {c} {s}"),
        (Some(c), None, Some(r)) => format!("Take the {c} piece at {r}"),
        (None, Some(s), Some(r)) => format!("Take the {s} at {r}"),
        (Some(c), Some(s), Some(r)) => format!("Take the {c} {s} at {r}"),
        (None, None, None) => unreachable!("props is nonempty"),
    };
    Ok(text)
}

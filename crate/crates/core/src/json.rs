//! JSON interchange for every public object. Rationals travel as `"p/q"`
//! strings so no precision is lost; sets are lists of ground labels.

use crate::order_semilattice::{FinitePreorder, GridAmbient, GridPoint};
use crate::semimodular::SetFunction;
use crate::set_core::{GroundSet, SetFamily, SubsetMask};
use crate::stoch::{FiniteProbSpace, GridModel, Partition, XInfMode};
use crate::value::{rat_from_str, rat_to_string, Value};
use crate::{Error, Result};
use num::rational::BigRational;
use serde_json::{json, Map, Value as Json};
use std::collections::BTreeMap;

fn as_array<'a>(v: &'a Json, what: &str) -> Result<&'a Vec<Json>> {
    v.as_array()
        .ok_or_else(|| Error::Invalid(format!("{what} must be an array")))
}

fn as_object<'a>(v: &'a Json, what: &str) -> Result<&'a Map<String, Json>> {
    v.as_object()
        .ok_or_else(|| Error::Invalid(format!("{what} must be an object")))
}

fn as_str<'a>(v: &'a Json, what: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::Invalid(format!("{what} must be a string")))
}

fn field<'a>(obj: &'a Map<String, Json>, name: &str) -> Result<&'a Json> {
    obj.get(name)
        .ok_or_else(|| Error::Invalid(format!("missing field {name:?}")))
}

fn rational_field(v: &Json, what: &str) -> Result<BigRational> {
    match v {
        Json::String(s) => rat_from_str(s),
        Json::Number(n) => n
            .as_i64()
            .map(|i| BigRational::from_integer(i.into()))
            .ok_or_else(|| Error::Invalid(format!("{what} must be an integer or \"p/q\" string"))),
        _ => Err(Error::Invalid(format!("{what} must be an integer or \"p/q\" string"))),
    }
}

// -- ground sets and families ------------------------------------------------

pub fn ground_to_json(g: &GroundSet) -> Json {
    json!({ "labels": g.labels() })
}

pub fn ground_from_json(v: &Json) -> Result<GroundSet> {
    let obj = as_object(v, "ground set")?;
    let labels = as_array(field(obj, "labels")?, "labels")?
        .iter()
        .map(|l| as_str(l, "label").map(str::to_string))
        .collect::<Result<Vec<_>>>()?;
    let cap = std::env::var("SEMIMEAS_MAX_GROUND")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(crate::set_core::DEFAULT_GROUND_CAP);
    GroundSet::with_cap(labels, cap)
}

pub fn family_to_json(f: &SetFamily) -> Json {
    json!({
        "ground": ground_to_json(&f.ground),
        "sets": f.sets.iter().map(|s| f.ground.labels_of_mask(*s)).collect::<Vec<_>>(),
    })
}

pub fn family_from_json(v: &Json) -> Result<SetFamily> {
    let obj = as_object(v, "set family")?;
    let ground = ground_from_json(field(obj, "ground")?)?;
    let sets = as_array(field(obj, "sets")?, "sets")?
        .iter()
        .map(|s| {
            let labels = as_array(s, "set")?
                .iter()
                .map(|l| as_str(l, "label").map(str::to_string))
                .collect::<Result<Vec<_>>>()?;
            ground.mask_of_labels(&labels)
        })
        .collect::<Result<Vec<_>>>()?;
    SetFamily::new(ground, sets)
}

// -- set functions -----------------------------------------------------------

pub fn setfunction_to_json(f: &SetFunction) -> Json {
    json!({
        "family": family_to_json(&f.domain),
        "dim": f.dim,
        "values": f.domain.sets.iter().map(|s| json!({
            "set": f.domain.ground.labels_of_mask(*s),
            "value": f.value(*s).to_strings(),
        })).collect::<Vec<_>>(),
    })
}

pub fn setfunction_from_json(v: &Json) -> Result<SetFunction> {
    let obj = as_object(v, "set function")?;
    let family = family_from_json(field(obj, "family")?)?;
    let dim = field(obj, "dim")?
        .as_u64()
        .ok_or_else(|| Error::Invalid("dim must be a positive integer".into()))?
        as usize;
    let mut values: BTreeMap<SubsetMask, Value> = BTreeMap::new();
    for item in as_array(field(obj, "values")?, "values")? {
        let io = as_object(item, "value entry")?;
        let labels = as_array(field(io, "set")?, "set")?
            .iter()
            .map(|l| as_str(l, "label").map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        let mask = family.ground.mask_of_labels(&labels)?;
        let coords = as_array(field(io, "value")?, "value")?
            .iter()
            .map(|c| rational_field(c, "coordinate"))
            .collect::<Result<Vec<_>>>()?;
        values.insert(mask, Value(coords));
    }
    SetFunction::new(family, values, dim)
}

// -- products ----------------------------------------------------------------

pub fn product_from_json(v: &Json) -> Result<crate::product_ext::ProductSetFunction> {
    use crate::product_ext::{ProductFamily, ProductSetFunction};
    let obj = as_object(v, "product set function")?;
    let left = family_from_json(field(obj, "left")?)?;
    let right = family_from_json(field(obj, "right")?)?;
    let dim = field(obj, "dim")?
        .as_u64()
        .ok_or_else(|| Error::Invalid("dim must be a positive integer".into()))? as usize;
    let base = ProductFamily::new(left, right)?;
    let mut values = BTreeMap::new();
    for item in as_array(field(obj, "values")?, "values")? {
        let io = as_object(item, "value entry")?;
        let a_labels = as_array(field(io, "a")?, "a")?
            .iter()
            .map(|l| as_str(l, "label").map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        let b_labels = as_array(field(io, "b")?, "b")?
            .iter()
            .map(|l| as_str(l, "label").map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        let a = base.left.ground.mask_of_labels(&a_labels)?;
        let b = base.right.ground.mask_of_labels(&b_labels)?;
        let coords = as_array(field(io, "value")?, "value")?
            .iter()
            .map(|c| rational_field(c, "coordinate"))
            .collect::<Result<Vec<_>>>()?;
        values.insert((a, b), Value(coords));
    }
    ProductSetFunction::new(base, values, dim)
}

// -- preorders and grids -----------------------------------------------------

pub fn preorder_from_json(v: &Json) -> Result<FinitePreorder> {
    let obj = as_object(v, "preorder")?;
    let rows = as_array(field(obj, "leq")?, "leq")?
        .iter()
        .map(|row| {
            as_array(row, "relation row")?
                .iter()
                .map(|b| {
                    b.as_bool()
                        .ok_or_else(|| Error::Invalid("relation entries must be booleans".into()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    FinitePreorder::new(rows)
}

pub fn grid_to_json(g: &GridAmbient) -> Json {
    json!({
        "levels": g.levels.iter().map(|axis| axis.iter().map(rat_to_string).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "formal_top": g.formal_top,
    })
}

pub fn grid_from_json(v: &Json) -> Result<GridAmbient> {
    let obj = as_object(v, "grid")?;
    let levels = as_array(field(obj, "levels")?, "levels")?
        .iter()
        .map(|axis| {
            as_array(axis, "level axis")?
                .iter()
                .map(|l| rational_field(l, "level"))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let formal_top = obj
        .get("formal_top")
        .map(|b| b.as_bool().unwrap_or(true))
        .unwrap_or(true);
    GridAmbient::new(levels, formal_top)
}

// -- models ------------------------------------------------------------------

pub fn point_key(p: &GridPoint) -> String {
    match p {
        GridPoint::Top => "top".to_string(),
        GridPoint::Finite(idx) => format!(
            "({})",
            idx.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    }
}

pub fn point_from_key(key: &str, ambient: &GridAmbient) -> Result<GridPoint> {
    if key == "top" || key == "inf" {
        return Ok(GridPoint::Top);
    }
    let inner = key
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Invalid(format!("bad grid point key {key:?}")))?;
    let idx = inner
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Invalid(format!("bad grid index in {key:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let p = GridPoint::Finite(idx);
    ambient.check_point(&p)?;
    Ok(p)
}

pub fn model_to_json(m: &GridModel) -> Json {
    let mut filtration = Map::new();
    for (p, part) in &m.parts {
        let blocks: Vec<Vec<String>> = part
            .blocks
            .iter()
            .map(|b| {
                (0..m.space.len())
                    .filter(|i| b >> i & 1 == 1)
                    .map(|i| m.space.labels[i].clone())
                    .collect()
            })
            .collect();
        filtration.insert(point_key(p), json!(blocks));
    }
    let mut process = Map::new();
    for (p, v) in &m.x {
        process.insert(point_key(p), json!(v.to_strings()));
    }
    process.insert("inf".into(), json!(m.x_inf.to_strings()));
    json!({
        "omega": m.space.labels,
        "p": m.space.weights.iter().map(rat_to_string).collect::<Vec<_>>(),
        "grid": grid_to_json(&m.ambient),
        "filtration": filtration,
        "process": process,
        "x_inf_mode": match m.mode {
            XInfMode::MaxGrid => "max_grid",
            XInfMode::ZeroAtInfinity => "zero_at_infinity",
        },
    })
}

pub fn model_from_json(v: &Json) -> Result<GridModel> {
    let obj = as_object(v, "model")?;
    let labels = as_array(field(obj, "omega")?, "omega")?
        .iter()
        .map(|l| as_str(l, "outcome").map(str::to_string))
        .collect::<Result<Vec<_>>>()?;
    let weights = as_array(field(obj, "p")?, "p")?
        .iter()
        .map(|w| rational_field(w, "weight"))
        .collect::<Result<Vec<_>>>()?;
    let space = FiniteProbSpace::new(labels, weights)?;
    let ambient = grid_from_json(field(obj, "grid")?)?;
    let n = space.len();

    let mut parts = BTreeMap::new();
    for (key, blocks) in as_object(field(obj, "filtration")?, "filtration")? {
        let p = point_from_key(key, &ambient)?;
        let block_masks = as_array(blocks, "partition")?
            .iter()
            .map(|block| {
                let mut m = 0u64;
                for l in as_array(block, "block")? {
                    let label = as_str(l, "outcome")?;
                    let i = space
                        .labels
                        .iter()
                        .position(|x| x == label)
                        .ok_or_else(|| Error::Invalid(format!("unknown outcome {label:?}")))?;
                    m |= 1 << i;
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        parts.insert(p, Partition::new(n, block_masks)?);
    }
    // the terminal partition defaults to the finest one
    parts
        .entry(GridPoint::Top)
        .or_insert_with(|| Partition::discrete(n));

    let mode = match obj.get("x_inf_mode").and_then(|m| m.as_str()) {
        None | Some("max_grid") => XInfMode::MaxGrid,
        Some("zero_at_infinity") => XInfMode::ZeroAtInfinity,
        Some(other) => {
            return Err(Error::Invalid(format!("unknown x_inf_mode {other:?}")));
        }
    };

    let mut x = BTreeMap::new();
    let mut x_inf = None;
    for (key, coords) in as_object(field(obj, "process")?, "process")? {
        let value = Value(
            as_array(coords, "process value")?
                .iter()
                .map(|c| rational_field(c, "coordinate"))
                .collect::<Result<Vec<_>>>()?,
        );
        if key == "inf" {
            x_inf = Some(value);
        } else {
            x.insert(point_from_key(key, &ambient)?, value);
        }
    }
    let x_inf = match (x_inf, mode) {
        (Some(v), _) => v,
        (None, XInfMode::MaxGrid) => x
            .get(&ambient.max_finite_point())
            .cloned()
            .ok_or_else(|| Error::Invalid("no value at the maximal grid point".into()))?,
        (None, XInfMode::ZeroAtInfinity) => Value::zero(n),
    };
    Ok(GridModel {
        ambient,
        space,
        parts,
        x,
        x_inf,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set_core::masks;
    use crate::value::rat;

    #[test]
    fn family_roundtrip() {
        let g = GroundSet::of_size(3);
        let fam = SetFamily::new(g, masks(&[0b001, 0b011, 0b101])).unwrap();
        let j = family_to_json(&fam);
        let back = family_from_json(&j).unwrap();
        assert_eq!(back, fam);
    }

    #[test]
    fn setfunction_roundtrip() {
        let g = GroundSet::of_size(3);
        let fam = SetFamily::new(g, masks(&[0b001, 0b011])).unwrap();
        let f = SetFunction::scalar(fam, &[(0b001, rat(1, 2)), (0b011, rat(-3, 1))]).unwrap();
        let j = setfunction_to_json(&f);
        let back = setfunction_from_json(&j).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn model_roundtrip() {
        let m = crate::stoch::fixture_model();
        let j = model_to_json(&m);
        let back = model_from_json(&j).unwrap();
        assert_eq!(back.x, m.x);
        assert_eq!(back.x_inf, m.x_inf);
        assert_eq!(back.parts, m.parts);
        let s = serde_json::to_string(&j).unwrap();
        let j2: Json = serde_json::from_str(&s).unwrap();
        assert_eq!(j, j2);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(family_from_json(&json!({"ground": {"labels": []}, "sets": []})).is_err());
        assert!(ground_from_json(&json!({"labels": ["a", "a"]})).is_err());
        assert!(model_from_json(&json!({"omega": ["w"]})).is_err());
    }
}

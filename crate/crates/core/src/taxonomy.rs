//! Category taxonomy and propagation-relevant material extraction.
//!
//! Segmentation label maps arrive with visual categories (road, sidewalk,
//! car, lamppost, ...). Electromagnetically most of that distinction is
//! noise: ground covers reflect like ground, every vehicle body reflects
//! like metal, and lampposts barely matter. The taxonomy re-groups the
//! category registry into keep / merge / drop sets and assigns each
//! surviving category a material class; `extract_pes` applies it per pixel.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pgm;

/// Segmentation category id, the raw pixel value of a label map.
pub type CategoryId = u8;

/// Material classes a pixel can resolve to after extraction.
///
/// `None` marks dropped categories. It is a distinct fifth value rather than
/// an alias of some material so block statistics can count "other" pixels
/// separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Material {
    Cement,
    Metal,
    Wood,
    Asphalt,
    None,
}

impl Material {
    /// The four known material classes, in canonical order.
    pub const KNOWN: [Material; 4] =
        [Material::Cement, Material::Metal, Material::Wood, Material::Asphalt];

    pub fn name(self) -> &'static str {
        match self {
            Material::Cement => "cement",
            Material::Metal => "metal",
            Material::Wood => "wood",
            Material::Asphalt => "asphalt",
            Material::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Material> {
        match s.to_ascii_lowercase().as_str() {
            "cement" => Ok(Material::Cement),
            "metal" => Ok(Material::Metal),
            "wood" => Ok(Material::Wood),
            "asphalt" => Ok(Material::Asphalt),
            "none" => Ok(Material::None),
            other => Err(Error::config(format!("unknown material {other:?}"))),
        }
    }

    /// Index into `KNOWN`; `None` has no index.
    pub fn known_index(self) -> Option<usize> {
        Material::KNOWN.iter().position(|&m| m == self)
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The category registry: every id a label map may legally contain.
#[derive(Debug, Clone, Default)]
pub struct CategoryRegistry {
    entries: BTreeMap<CategoryId, String>,
}

impl CategoryRegistry {
    pub fn new(entries: BTreeMap<CategoryId, String>) -> CategoryRegistry {
        CategoryRegistry { entries }
    }

    /// Number of registered categories.
    pub fn count(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, id: CategoryId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn name_of(&self, id: CategoryId) -> Option<&str> {
        self.entries.get(&id).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<CategoryId> {
        self.entries.iter().find(|(_, n)| n.as_str() == name).map(|(&id, _)| id)
    }

    pub fn ids(&self) -> impl Iterator<Item = CategoryId> + '_ {
        self.entries.keys().copied()
    }
}

/// Keep / merge / drop partition of the registry plus material assignments.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    registry: CategoryRegistry,
    /// Kept categories and their materials.
    keep: BTreeMap<CategoryId, Material>,
    /// Merged categories and the shared material class they fold into.
    merge: BTreeMap<CategoryId, Material>,
    /// Categories with no propagation impact.
    drop: Vec<CategoryId>,
}

impl Taxonomy {
    /// Builds and validates a taxonomy: keep, merge, and drop must be
    /// pairwise disjoint and together cover the registry, and no assignment
    /// may map to `Material::None`.
    pub fn new(
        registry: CategoryRegistry,
        keep: BTreeMap<CategoryId, Material>,
        merge: BTreeMap<CategoryId, Material>,
        drop: Vec<CategoryId>,
    ) -> Result<Taxonomy> {
        let mut seen: BTreeMap<CategoryId, &str> = BTreeMap::new();
        for (&id, set) in keep
            .keys()
            .map(|id| (id, "keep"))
            .chain(merge.keys().map(|id| (id, "merge")))
            .chain(drop.iter().map(|id| (id, "drop")))
        {
            if let Some(prev) = seen.insert(id, set) {
                return Err(Error::config(format!(
                    "category {id} appears in both {prev} and {set}"
                )));
            }
            if !registry.contains(id) {
                return Err(Error::config(format!("category {id} is not in the registry")));
            }
        }
        for id in registry.ids() {
            if !seen.contains_key(&id) {
                return Err(Error::TaxonomyCoverage { id });
            }
        }
        if keep.values().chain(merge.values()).any(|&m| m == Material::None) {
            return Err(Error::config("keep/merge assignments must name a real material"));
        }
        Ok(Taxonomy { registry, keep, merge, drop })
    }

    pub fn registry(&self) -> &CategoryRegistry {
        &self.registry
    }

    /// Material for a category: keep and merge assignments resolve to their
    /// material, dropped categories to `Material::None`.
    pub fn material_of(&self, id: CategoryId) -> Result<Material> {
        if let Some(&m) = self.keep.get(&id) {
            return Ok(m);
        }
        if let Some(&m) = self.merge.get(&id) {
            return Ok(m);
        }
        if self.drop.contains(&id) {
            return Ok(Material::None);
        }
        Err(Error::TaxonomyCoverage { id })
    }

    /// Number of post-extraction categories: the distinct materials that keep
    /// and merge assignments produce.
    pub fn pes_category_count(&self) -> usize {
        let mut mats: Vec<Material> = self.keep.values().chain(self.merge.values()).copied().collect();
        mats.sort();
        mats.dedup();
        mats.len()
    }
}

/// H×W grid of category ids (also reused for 0/255 binary masks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    /// Row-major, `height * width` entries.
    pub labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> LabelMap {
        assert!(width >= 1 && height >= 1, "degenerate label map");
        assert_eq!(labels.len(), width * height, "label buffer does not match dims");
        LabelMap { width, height, labels }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        pgm::write(path, self.width, self.height, &self.labels)
    }
}

/// H×W grid of material classes, produced by `extract_pes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaterialMap {
    pub width: usize,
    pub height: usize,
    pub materials: Vec<Material>,
}

impl MaterialMap {
    pub fn get(&self, row: usize, col: usize) -> Material {
        self.materials[row * self.width + col]
    }
}

/// Loads a label map from a binary PGM and validates every pixel against the
/// registry.
pub fn load_label_map(path: &Path, registry: &CategoryRegistry) -> Result<LabelMap> {
    let img = pgm::read(path)?;
    for (i, &px) in img.pixels.iter().enumerate() {
        if !registry.contains(px) {
            return Err(Error::UnknownCategory {
                id: px,
                row: i / img.width,
                col: i % img.width,
            });
        }
    }
    Ok(LabelMap::new(img.width, img.height, img.pixels))
}

/// Applies the taxonomy pixel-wise: kept and merged categories map to their
/// material, dropped categories to `Material::None`.
pub fn extract_pes(map: &LabelMap, tax: &Taxonomy) -> Result<MaterialMap> {
    // Tiny id space, so precompute the lookup once instead of per pixel.
    let mut lut = [None::<Material>; 256];
    for id in tax.registry().ids() {
        lut[id as usize] = Some(tax.material_of(id)?);
    }
    let mut materials = Vec::with_capacity(map.labels.len());
    for (i, &px) in map.labels.iter().enumerate() {
        match lut[px as usize] {
            Some(m) => materials.push(m),
            None => {
                let _ = (i / map.width, i % map.width);
                return Err(Error::TaxonomyCoverage { id: px });
            }
        }
    }
    Ok(MaterialMap { width: map.width, height: map.height, materials })
}

/// Category-count reduction in percent: `(1 - pes/original) * 100`.
pub fn ecr3(original_categories: usize, pes_categories: usize) -> Result<f64> {
    if original_categories == 0 {
        return Err(Error::domain("original category count must be >= 1"));
    }
    if pes_categories == 0 || pes_categories > original_categories {
        return Err(Error::domain(format!(
            "need original >= pes >= 1, got ({original_categories}, {pes_categories})"
        )));
    }
    Ok((1.0 - pes_categories as f64 / original_categories as f64) * 100.0)
}

/// 255 where the material matches `target`, 0 elsewhere.
pub fn binary_mask(map: &MaterialMap, target: Material) -> LabelMap {
    let labels = map.materials.iter().map(|&m| if m == target { 255 } else { 0 }).collect();
    LabelMap::new(map.width, map.height, labels)
}

/// Category ids of the built-in urban registry, shared by the scene
/// renderer and the default taxonomy.
pub mod urban {
    use super::CategoryId;

    pub const ROAD: CategoryId = 0;
    pub const SIDEWALK: CategoryId = 1;
    pub const TERRAIN: CategoryId = 2;
    pub const BUILDING: CategoryId = 3;
    pub const VEGETATION: CategoryId = 4;
    pub const CAR: CategoryId = 5;
    pub const TRUCK: CategoryId = 6;
    pub const BUS: CategoryId = 7;
    pub const POLE: CategoryId = 8;
    pub const SKY: CategoryId = 9;
    pub const PERSON: CategoryId = 10;
    pub const RIDER: CategoryId = 11;

    pub const NAMES: [(CategoryId, &str); 12] = [
        (ROAD, "road"),
        (SIDEWALK, "sidewalk"),
        (TERRAIN, "terrain"),
        (BUILDING, "building"),
        (VEGETATION, "vegetation"),
        (CAR, "car"),
        (TRUCK, "truck"),
        (BUS, "bus"),
        (POLE, "pole"),
        (SKY, "sky"),
        (PERSON, "person"),
        (RIDER, "rider"),
    ];
}

/// The built-in 12-category urban registry.
pub fn default_registry() -> CategoryRegistry {
    CategoryRegistry::new(urban::NAMES.iter().map(|&(id, n)| (id, n.to_string())).collect())
}

/// Default taxonomy over the urban registry: buildings stay cement and
/// vegetation wood; ground covers merge into asphalt and all vehicles into
/// metal; poles, sky, persons, and riders are dropped.
pub fn default_taxonomy() -> Taxonomy {
    let keep = [(urban::BUILDING, Material::Cement), (urban::VEGETATION, Material::Wood)]
        .into_iter()
        .collect();
    let merge = [
        (urban::ROAD, Material::Asphalt),
        (urban::SIDEWALK, Material::Asphalt),
        (urban::TERRAIN, Material::Asphalt),
        (urban::CAR, Material::Metal),
        (urban::TRUCK, Material::Metal),
        (urban::BUS, Material::Metal),
    ]
    .into_iter()
    .collect();
    let drop = vec![urban::POLE, urban::SKY, urban::PERSON, urban::RIDER];
    Taxonomy::new(default_registry(), keep, merge, drop)
        .expect("built-in taxonomy covers its own registry")
}

// --- config file ------------------------------------------------------------

#[derive(Deserialize)]
struct TaxonomyFile {
    #[serde(default)]
    drop: Vec<String>,
    categories: BTreeMap<String, String>,
    #[serde(default)]
    keep: BTreeMap<String, String>,
    #[serde(default)]
    merge: BTreeMap<String, String>,
}

/// Parses the taxonomy config. Schema:
///
/// ```toml
/// drop = ["lamppost", "sky"]          # categories with no impact
///
/// [categories]                        # registry: id = name
/// 0 = "road"
/// 2 = "building"
///
/// [keep]                              # kept category -> material
/// building = "cement"
///
/// [merge]                             # merged category -> material class
/// road = "asphalt"
/// ```
pub fn parse_taxonomy(text: &str) -> Result<Taxonomy> {
    let file: TaxonomyFile =
        toml::from_str(text).map_err(|e| Error::config(format!("taxonomy: {e}")))?;
    let mut entries = BTreeMap::new();
    for (id_text, name) in &file.categories {
        let id: CategoryId = id_text
            .parse()
            .map_err(|_| Error::config(format!("taxonomy: bad category id {id_text:?}")))?;
        if entries.insert(id, name.clone()).is_some() {
            return Err(Error::config(format!("taxonomy: duplicate category id {id}")));
        }
    }
    let registry = CategoryRegistry::new(entries);
    let lookup = |name: &str| {
        registry
            .id_of(name)
            .ok_or_else(|| Error::config(format!("taxonomy: unknown category name {name:?}")))
    };
    let mut keep = BTreeMap::new();
    for (name, material) in &file.keep {
        keep.insert(lookup(name)?, Material::parse(material)?);
    }
    let mut merge = BTreeMap::new();
    for (name, material) in &file.merge {
        merge.insert(lookup(name)?, Material::parse(material)?);
    }
    let mut drop = Vec::new();
    for name in &file.drop {
        drop.push(lookup(name)?);
    }
    Taxonomy::new(registry, keep, merge, drop)
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_taxonomy(&text)
}

//! Scene model and rasterization.
//!
//! A scene is a top-down plan of the world in meters: y grows north, x grows
//! east, the origin sits at the south-west corner. Rendering flips y so that
//! pixel row 0 is the north edge, and geodetic coordinates come from a local
//! tangent plane anchored at the RSU.

use crate::channel::geometry::{Rect, Vec2};
use crate::error::{Error, Result};
use crate::taxonomy::{urban, CategoryId, LabelMap};
use crate::wek::{GeoCoord, EARTH_RADIUS_M};

/// Meters per degree of latitude (and of longitude at the equator), on the
/// same sphere the Haversine distance uses. Keeping the two consistent makes
/// geodesic distances match scene-metric distances to well under 0.1%.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// A vehicle rectangle with motion state; the antenna sits at the center.
#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub rect: Rect,
    pub category: CategoryId,
    pub speed_mps: f64,
    /// Unit direction of travel.
    pub heading: Vec2,
}

impl Vehicle {
    pub fn antenna(&self) -> Vec2 {
        self.rect.center()
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.heading.x * self.speed_mps, self.heading.y * self.speed_mps)
    }
}

/// One V2I scene: RSU, road layout, scatterers, and the receiver vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub extent_w: f64,
    pub extent_h: f64,
    /// Meters per pixel of the rendered label map.
    pub pixel_scale: f64,
    pub rsu_pos: Vec2,
    pub rsu_geo: GeoCoord,
    /// Unit boresight of the RSU array; azimuths are measured from it.
    pub boresight: Vec2,
    pub ground_category: CategoryId,
    pub road: Option<Rect>,
    pub sidewalks: Vec<Rect>,
    pub buildings: Vec<Rect>,
    pub vegetation: Vec<Rect>,
    pub vehicles: Vec<Vehicle>,
    /// Non-propagating props (poles, persons): rendered, never traced.
    pub clutter: Vec<(Rect, CategoryId)>,
    /// Index of the receiver in `vehicles`.
    pub rx_index: usize,
}

impl Scene {
    /// An empty scene: bare ground, no road, no scatterers, no vehicles.
    pub fn bare(extent_w: f64, extent_h: f64, pixel_scale: f64) -> Scene {
        Scene {
            extent_w,
            extent_h,
            pixel_scale,
            rsu_pos: Vec2::new(extent_w / 2.0, extent_h / 10.0),
            rsu_geo: GeoCoord { lat: 22.543, lon: 114.058 },
            boresight: Vec2::new(0.0, 1.0),
            ground_category: urban::TERRAIN,
            road: None,
            sidewalks: vec![],
            buildings: vec![],
            vegetation: vec![],
            vehicles: vec![],
            clutter: vec![],
            rx_index: 0,
        }
    }

    /// (rows, cols) of the rendered image.
    pub fn image_dims(&self) -> (usize, usize) {
        (
            (self.extent_h / self.pixel_scale).round() as usize,
            (self.extent_w / self.pixel_scale).round() as usize,
        )
    }

    /// Geometry sanity shared by rendering and tracing.
    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_scale > 0.0 && self.extent_w > 0.0 && self.extent_h > 0.0) {
            return Err(Error::InvalidScene("extent and pixel scale must be positive".into()));
        }
        if self.boresight.norm() == 0.0 {
            return Err(Error::InvalidScene("zero boresight".into()));
        }
        Ok(())
    }

    /// The receiver vehicle; tracing requires one.
    pub fn rx(&self) -> Result<&Vehicle> {
        let v = self
            .vehicles
            .get(self.rx_index)
            .ok_or_else(|| Error::InvalidScene("scene has no receiver vehicle".into()))?;
        let p = v.antenna();
        let inside =
            0.0 <= p.x && p.x <= self.extent_w && 0.0 <= p.y && p.y <= self.extent_h;
        if !inside {
            return Err(Error::InvalidScene("receiver antenna outside the scene extent".into()));
        }
        Ok(v)
    }
}

/// Top-down rasterization: ground everywhere, then road, sidewalks,
/// vegetation, buildings, clutter, and vehicles on top.
pub fn render_label_map(scene: &Scene) -> Result<LabelMap> {
    scene.validate()?;
    let (rows, cols) = scene.image_dims();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidScene("scene renders to an empty image".into()));
    }
    let mut labels = vec![scene.ground_category; rows * cols];
    let mut paint = |r: &Rect, cat: CategoryId| {
        let s = scene.pixel_scale;
        let c0 = ((r.x0 / s).round().max(0.0) as usize).min(cols);
        let c1 = ((r.x1 / s).round().max(0.0) as usize).min(cols);
        let r0 = (((scene.extent_h - r.y1) / s).round().max(0.0) as usize).min(rows);
        let r1 = (((scene.extent_h - r.y0) / s).round().max(0.0) as usize).min(rows);
        for row in r0..r1 {
            labels[row * cols..][c0..c1].fill(cat);
        }
    };
    if let Some(road) = &scene.road {
        paint(road, urban::ROAD);
    }
    for w in &scene.sidewalks {
        paint(w, urban::SIDEWALK);
    }
    for v in &scene.vegetation {
        paint(v, urban::VEGETATION);
    }
    for b in &scene.buildings {
        paint(b, urban::BUILDING);
    }
    for (r, cat) in &scene.clutter {
        paint(r, *cat);
    }
    for v in &scene.vehicles {
        paint(&v.rect, v.category);
    }
    Ok(LabelMap::new(cols, rows, labels))
}

/// World point (meters) to geodetic coordinates on the tangent plane
/// anchored at the RSU.
pub fn world_to_geo(scene: &Scene, p: Vec2) -> Result<GeoCoord> {
    let lat = scene.rsu_geo.lat + (p.y - scene.rsu_pos.y) / METERS_PER_DEGREE;
    let lon = scene.rsu_geo.lon
        + (p.x - scene.rsu_pos.x) / (METERS_PER_DEGREE * scene.rsu_geo.lat.to_radians().cos());
    GeoCoord::new(lat, lon)
}

/// Geodetic coordinates of a pixel's north-west corner.
pub fn pixel_to_geo(scene: &Scene, row: usize, col: usize) -> Result<GeoCoord> {
    let (rows, cols) = scene.image_dims();
    if row >= rows || col >= cols {
        return Err(Error::domain(format!(
            "pixel ({row}, {col}) outside {rows}x{cols} image"
        )));
    }
    let p = Vec2::new(
        col as f64 * scene.pixel_scale,
        scene.extent_h - row as f64 * scene.pixel_scale,
    );
    world_to_geo(scene, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{default_taxonomy, extract_pes, Material};
    use crate::wek::haversine;

    #[test]
    fn bare_scene_renders_all_ground() {
        let scene = Scene::bare(20.0, 10.0, 0.1);
        let map = render_label_map(&scene).unwrap();
        assert_eq!((map.height, map.width), (100, 200));
        assert!(map.labels.iter().all(|&l| l == urban::TERRAIN));
    }

    #[test]
    fn vehicle_rect_covers_expected_pixels() {
        let mut scene = Scene::bare(20.0, 10.0, 0.1);
        scene.vehicles.push(Vehicle {
            rect: Rect::new(3.0, 4.0, 7.0, 6.0),
            category: urban::CAR,
            speed_mps: 10.0,
            heading: Vec2::new(1.0, 0.0),
        });
        let map = render_label_map(&scene).unwrap();
        let cars = map.labels.iter().filter(|&&l| l == urban::CAR).count();
        assert_eq!(cars, 40 * 20);
        // The car sits at rows for y in [4, 6): rows [40, 60), cols [30, 70).
        assert_eq!(map.get(40, 30), urban::CAR);
        assert_eq!(map.get(59, 69), urban::CAR);
        assert_eq!(map.get(39, 30), urban::TERRAIN);
        assert_eq!(map.get(60, 30), urban::TERRAIN);
    }

    #[test]
    fn painted_fractions_track_geometric_areas() {
        let mut scene = Scene::bare(20.0, 10.0, 0.1);
        scene.road = Some(Rect::new(0.0, 4.05, 20.0, 6.95));
        scene.buildings.push(Rect::new(1.13, 7.31, 9.87, 9.79));
        let map = render_label_map(&scene).unwrap();
        let pes = extract_pes(&map, &default_taxonomy()).unwrap();
        let total = (map.width * map.height) as f64;
        let count = |m: Material| pes.materials.iter().filter(|&&x| x == m).count() as f64;
        // One pixel of slack per edge: area tolerance is perimeter/scale.
        let building_area = 8.74 * 2.48 / (0.1 * 0.1);
        let building_tol = 2.0 * (8.74 + 2.48) / 0.1;
        assert!((count(Material::Cement) - building_area).abs() <= building_tol);
        // Road and terrain both resolve to asphalt; nothing here is dropped.
        assert_eq!(count(Material::Asphalt) + count(Material::Cement), total);
    }

    #[test]
    fn pixel_to_geo_anchor_and_offsets() {
        let mut scene = Scene::bare(96.0, 54.0, 0.1);
        scene.rsu_geo = GeoCoord { lat: 0.0, lon: 30.0 };
        // RSU at (48, 5.4): exactly pixel (486, 480).
        let anchor = pixel_to_geo(&scene, 486, 480).unwrap();
        assert!((anchor.lat - 0.0).abs() < 1e-12);
        assert!((anchor.lon - 30.0).abs() < 1e-12);
        let east = pixel_to_geo(&scene, 486, 580).unwrap();
        assert!((east.lon - 30.0 - 10.0 / METERS_PER_DEGREE).abs() < 1e-12);
        assert_eq!(east.lat, anchor.lat);
        assert!(pixel_to_geo(&scene, 540, 0).is_err());
        assert!(pixel_to_geo(&scene, 0, 960).is_err());
    }

    #[test]
    fn geo_distances_match_euclidean_locally() {
        let scene = Scene::bare(96.0, 54.0, 0.1);
        let pairs = [((10usize, 20usize), (500usize, 900usize)), ((0, 0), (539, 959)), ((250, 480), (251, 481))];
        for ((r1, c1), (r2, c2)) in pairs {
            let g1 = pixel_to_geo(&scene, r1, c1).unwrap();
            let g2 = pixel_to_geo(&scene, r2, c2).unwrap();
            let geo = haversine(g1, g2);
            let dx = (c1 as f64 - c2 as f64) * 0.1;
            let dy = (r1 as f64 - r2 as f64) * 0.1;
            let euclid = (dx * dx + dy * dy).sqrt();
            assert!((geo - euclid).abs() / euclid < 1e-3, "{geo} vs {euclid}");
        }
    }

    #[test]
    fn rx_accessor_validates() {
        let scene = Scene::bare(20.0, 10.0, 0.1);
        assert!(scene.rx().is_err());
        let mut with_rx = scene.clone();
        with_rx.vehicles.push(Vehicle {
            rect: Rect::new(30.0, 4.0, 34.0, 6.0),
            category: urban::CAR,
            speed_mps: 8.0,
            heading: Vec2::new(1.0, 0.0),
        });
        // Antenna lies outside the 20x10 extent.
        assert!(with_rx.rx().is_err());
    }
}

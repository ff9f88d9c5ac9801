//! Elevation sample acquisition.
//!
//! Samples come either from a text file in the `lat lon alt` layout, or from
//! a row-by-row lattice scan against an [`ElevationProvider`]. The scan walks
//! the lattice from the top-left corner, stepping south by row and east by
//! column.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::geodesy::{self, GeoPoint, GeodesyError, Hemisphere, UtmPoint};

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("point file contains no samples")]
    Empty,
    #[error("elevation provider failed at lattice node ({row}, {col}): {source}")]
    Scan {
        row: usize,
        col: usize,
        #[source]
        source: ProviderError,
    },
    #[error("coordinate reference mismatch: point set is {points}, region is {region}")]
    CrsMismatch { points: Crs, region: Crs },
    #[error("invalid scan specification: {0}")]
    InvalidSpec(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("terrain configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ProviderError(pub String);

/// Coordinate reference of a [`PointSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Crs {
    /// x = longitude, y = latitude (degrees).
    Wgs84,
    /// x = easting, y = northing (metres).
    Utm { zone: u8, hemisphere: Hemisphere },
}

impl fmt::Display for Crs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Crs::Wgs84 => f.write_str("wgs84"),
            Crs::Utm { zone, hemisphere } => write!(f, "utm:{zone}{hemisphere}"),
        }
    }
}

impl FromStr for Crs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("wgs84") {
            return Ok(Crs::Wgs84);
        }
        let rest = s
            .strip_prefix("utm:")
            .ok_or_else(|| format!("unknown crs {s:?}"))?;
        let (digits, hemi) = rest.split_at(rest.len().saturating_sub(1));
        let hemisphere = match hemi {
            "N" | "n" => Hemisphere::North,
            "S" | "s" => Hemisphere::South,
            _ => return Err(format!("missing hemisphere in {s:?}")),
        };
        let zone: u8 = digits.parse().map_err(|_| format!("bad zone in {s:?}"))?;
        if !(1..=60).contains(&zone) {
            return Err(format!("zone {zone} outside 1..=60"));
        }
        Ok(Crs::Utm { zone, hemisphere })
    }
}

/// A planar coordinate with elevation. Axis meaning depends on the owning
/// set's [`Crs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Ordered samples sharing one coordinate reference.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    crs: Crs,
    points: Vec<Coord>,
}

impl PointSet {
    pub fn new(crs: Crs, points: Vec<Coord>) -> Result<Self, AcquisitionError> {
        if let Some(i) = points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(AcquisitionError::InvalidPoint(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(Self { crs, points })
    }

    pub fn from_geo(points: &[GeoPoint]) -> Result<Self, AcquisitionError> {
        Self::new(
            Crs::Wgs84,
            points
                .iter()
                .map(|p| Coord {
                    x: p.longitude,
                    y: p.latitude,
                    z: p.altitude,
                })
                .collect(),
        )
    }

    pub fn crs(&self) -> Crs {
        self.crs
    }

    pub fn points(&self) -> &[Coord] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Geographic view; `None` unless the set is WGS-84.
    pub fn geo_points(&self) -> Option<Vec<GeoPoint>> {
        (self.crs == Crs::Wgs84).then(|| {
            self.points
                .iter()
                .map(|c| GeoPoint::new(c.y, c.x, c.z))
                .collect()
        })
    }

    pub fn utm_points(&self) -> Option<Vec<UtmPoint>> {
        match self.crs {
            Crs::Utm { zone, hemisphere } => Some(
                self.points
                    .iter()
                    .map(|c| UtmPoint {
                        easting: c.x,
                        northing: c.y,
                        zone,
                        hemisphere,
                        altitude: c.z,
                    })
                    .collect(),
            ),
            Crs::Wgs84 => None,
        }
    }

    /// Mean of x and y.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Some((sx / n, sy / n))
    }
}

/// Axis-aligned rectangle in x/y of some CRS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self, AcquisitionError> {
        let r = Self {
            min_x,
            min_y,
            max_x,
            max_y,
        };
        if ![min_x, min_y, max_x, max_y].iter().all(|v| v.is_finite()) {
            return Err(AcquisitionError::InvalidRegion("non-finite bound".into()));
        }
        if !(max_x > min_x && max_y > min_y) {
            return Err(AcquisitionError::InvalidRegion(format!(
                "degenerate rectangle [{min_x}, {max_x}] x [{min_y}, {max_y}]"
            )));
        }
        Ok(r)
    }

    /// Geographic rectangle from latitude and longitude bounds.
    pub fn geographic(
        lat_min: f64,
        lon_min: f64,
        lat_max: f64,
        lon_max: f64,
    ) -> Result<Self, AcquisitionError> {
        Self::new(lon_min, lat_min, lon_max, lat_max)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// Grows the rectangle by `fraction` of its size on every side.
    pub fn expanded(&self, fraction: f64) -> Self {
        let dx = self.width() * fraction;
        let dy = self.height() * fraction;
        Self {
            min_x: self.min_x - dx,
            min_y: self.min_y - dy,
            max_x: self.max_x + dx,
            max_y: self.max_y + dy,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }
}

/// Lattice scan request over a geographic rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub region: Rect,
    pub rows: usize,
    pub cols: usize,
}

impl ScanSpec {
    pub fn new(region: Rect, rows: usize, cols: usize) -> Result<Self, AcquisitionError> {
        let spec = Self { region, rows, cols };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.rows < 2 || self.cols < 2 {
            return Err(AcquisitionError::InvalidSpec(format!(
                "need at least 2 rows and 2 columns, got {}x{}",
                self.rows, self.cols
            )));
        }
        Rect::new(
            self.region.min_x,
            self.region.min_y,
            self.region.max_x,
            self.region.max_y,
        )?;
        Ok(())
    }

    /// Geographic position of lattice node (row, col).
    pub fn node(&self, row: usize, col: usize) -> (f64, f64) {
        let dlat = self.region.height() / self.rows as f64;
        let dlon = self.region.width() / self.cols as f64;
        (
            self.region.max_y - row as f64 * dlat,
            self.region.min_x + col as f64 * dlon,
        )
    }
}

/// Source of terrain heights. Implementations must be deterministic.
pub trait ElevationProvider: Send + Sync {
    fn elevation_at(&self, latitude: f64, longitude: f64) -> Result<f64, ProviderError>;
}

impl<F> ElevationProvider for F
where
    F: Fn(f64, f64) -> Result<f64, ProviderError> + Send + Sync,
{
    fn elevation_at(&self, latitude: f64, longitude: f64) -> Result<f64, ProviderError> {
        self(latitude, longitude)
    }
}

/// Samples `provider` on a `rows x cols` lattice in row-major order.
pub fn scan_grid(
    provider: &dyn ElevationProvider,
    spec: &ScanSpec,
) -> Result<PointSet, AcquisitionError> {
    spec.validate()?;
    let rows: Vec<Vec<Coord>> = (0..spec.rows)
        .into_par_iter()
        .map(|i| {
            (0..spec.cols)
                .map(|j| {
                    let (lat, lon) = spec.node(i, j);
                    let z = provider
                        .elevation_at(lat, lon)
                        .map_err(|source| AcquisitionError::Scan {
                            row: i,
                            col: j,
                            source,
                        })?;
                    if !z.is_finite() {
                        return Err(AcquisitionError::Scan {
                            row: i,
                            col: j,
                            source: ProviderError("non-finite elevation".into()),
                        });
                    }
                    Ok(Coord { x: lon, y: lat, z })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    PointSet::new(Crs::Wgs84, rows.into_iter().flatten().collect())
}

/// Keeps the points inside `rect` (boundary inclusive), preserving order.
pub fn clip_to_region(
    ps: &PointSet,
    rect: &Rect,
    rect_crs: Crs,
) -> Result<PointSet, AcquisitionError> {
    if ps.crs != rect_crs {
        return Err(AcquisitionError::CrsMismatch {
            points: ps.crs,
            region: rect_crs,
        });
    }
    let rect = Rect::new(rect.min_x, rect.min_y, rect.max_x, rect.max_y)?;
    Ok(PointSet {
        crs: ps.crs,
        points: ps
            .points
            .iter()
            .copied()
            .filter(|p| rect.contains(p.x, p.y))
            .collect(),
    })
}

/// Requested output reference for [`convert_pointset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrsTarget {
    Wgs84,
    /// UTM; `None` picks the zone of the set's centroid.
    Utm(Option<u8>),
}

/// Re-expresses every point in `target`. UTM output shares a single zone and
/// hemisphere.
pub fn convert_pointset(ps: &PointSet, target: CrsTarget) -> Result<PointSet, AcquisitionError> {
    if ps.is_empty() {
        return Err(AcquisitionError::Empty);
    }
    match (ps.crs, target) {
        (Crs::Wgs84, CrsTarget::Wgs84) => Ok(ps.clone()),
        (Crs::Utm { zone, .. }, CrsTarget::Utm(z)) if z.is_none() || z == Some(zone) => {
            Ok(ps.clone())
        }
        (Crs::Wgs84, CrsTarget::Utm(zone)) => {
            let (clon, clat) = ps.centroid().expect("non-empty");
            let zone = zone.unwrap_or_else(|| geodesy::utm_zone_for(clon, clat));
            let hemisphere = if clat >= 0.0 {
                Hemisphere::North
            } else {
                Hemisphere::South
            };
            let points = ps
                .points
                .iter()
                .map(|c| {
                    let u = geodesy::wgs84_to_utm(&GeoPoint::new(c.y, c.x, c.z), Some(zone))?;
                    let northing = match (u.hemisphere, hemisphere) {
                        (Hemisphere::North, Hemisphere::South) => {
                            u.northing + geodesy::FALSE_NORTHING_SOUTH
                        }
                        (Hemisphere::South, Hemisphere::North) => {
                            u.northing - geodesy::FALSE_NORTHING_SOUTH
                        }
                        _ => u.northing,
                    };
                    Ok(Coord {
                        x: u.easting,
                        y: northing,
                        z: c.z,
                    })
                })
                .collect::<Result<Vec<_>, GeodesyError>>()?;
            PointSet::new(Crs::Utm { zone, hemisphere }, points)
        }
        (Crs::Utm { .. }, CrsTarget::Wgs84) => {
            let points = ps
                .utm_points()
                .expect("utm set")
                .iter()
                .map(|u| {
                    geodesy::utm_to_wgs84(u).map(|g| Coord {
                        x: g.longitude,
                        y: g.latitude,
                        z: g.altitude,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            PointSet::new(Crs::Wgs84, points)
        }
        (Crs::Utm { .. }, CrsTarget::Utm(zone)) => {
            let geo = convert_pointset(ps, CrsTarget::Wgs84)?;
            convert_pointset(&geo, CrsTarget::Utm(zone))
        }
    }
}

/// Parses a point file: one `latitude longitude altitude` triple per line,
/// space separated. Blank lines and `#` comments are skipped. A
/// `# crs=utm:32N` header switches the columns to `easting northing altitude`.
pub fn parse_point_file(text: &str) -> Result<PointSet, AcquisitionError> {
    let mut crs = Crs::Wgs84;
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("crs=") {
                if !points.is_empty() {
                    return Err(AcquisitionError::Parse {
                        line: line_no,
                        message: "crs header must precede data".into(),
                    });
                }
                crs = value.parse().map_err(|message| AcquisitionError::Parse {
                    line: line_no,
                    message,
                })?;
            }
            continue;
        }
        let mut fields = Vec::with_capacity(3);
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| AcquisitionError::Parse {
                line: line_no,
                message: format!("non-numeric field {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(AcquisitionError::Parse {
                    line: line_no,
                    message: format!("non-finite field {tok:?}"),
                });
            }
            fields.push(v);
        }
        if fields.len() < 3 {
            return Err(AcquisitionError::Parse {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let point = match crs {
            Crs::Wgs84 => {
                let (lat, lon) = (fields[0], fields[1]);
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(AcquisitionError::Parse {
                        line: line_no,
                        message: format!("latitude {lat} outside [-90, 90]"),
                    });
                }
                Coord {
                    x: geodesy::normalize_longitude(lon),
                    y: lat,
                    z: fields[2],
                }
            }
            Crs::Utm { .. } => Coord {
                x: fields[0],
                y: fields[1],
                z: fields[2],
            },
        };
        points.push(point);
    }
    if points.is_empty() {
        return Err(AcquisitionError::Empty);
    }
    PointSet::new(crs, points)
}

/// Inverse of [`parse_point_file`]. Uses shortest round-trip float
/// formatting, so parsing the output reproduces the set exactly.
pub fn write_point_file(ps: &PointSet) -> String {
    let mut out = String::with_capacity(ps.len() * 40);
    if let Crs::Utm { .. } = ps.crs {
        out.push_str(&format!("# crs={}\n", ps.crs));
    }
    for p in &ps.points {
        let line = match ps.crs {
            Crs::Wgs84 => format!("{} {} {}\n", p.y, p.x, p.z),
            Crs::Utm { .. } => format!("{} {} {}\n", p.x, p.y, p.z),
        };
        out.push_str(&line);
    }
    out
}

/// Parameters shared by the synthetic terrain kinds. Offsets are metres
/// east/north of the terrain origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainParams {
    pub base: f64,
    pub amplitude: f64,
    pub sigma: f64,
    pub slope_east: f64,
    pub slope_north: f64,
    pub center_east: f64,
    pub center_north: f64,
    /// Ridge axis, degrees clockwise from north.
    pub azimuth: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        Self {
            base: 400.0,
            amplitude: 60.0,
            sigma: 80.0,
            slope_east: 0.0,
            slope_north: 0.0,
            center_east: 0.0,
            center_north: 0.0,
            azimuth: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerrainKind {
    Constant,
    InclinedPlane,
    GaussianHill,
    Ridge,
}

impl FromStr for TerrainKind {
    type Err = AcquisitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "constant" => Ok(Self::Constant),
            "inclined_plane" | "plane" => Ok(Self::InclinedPlane),
            "gaussian_hill" | "hill" => Ok(Self::GaussianHill),
            "ridge" => Ok(Self::Ridge),
            other => Err(AcquisitionError::Config(format!(
                "unknown terrain kind {other:?}"
            ))),
        }
    }
}

/// Analytic terrain evaluated in UTM metres relative to an origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTerrain {
    kind: TerrainKind,
    params: TerrainParams,
    zone: u8,
    origin_east: f64,
    origin_north: f64,
}

impl SyntheticTerrain {
    pub fn kind(&self) -> TerrainKind {
        self.kind
    }

    pub fn params(&self) -> &TerrainParams {
        &self.params
    }

    /// Height at `(de, dn)` metres from the origin.
    pub fn elevation_at_offset(&self, de: f64, dn: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            TerrainKind::Constant => p.base,
            TerrainKind::InclinedPlane => p.base + p.slope_east * de + p.slope_north * dn,
            TerrainKind::GaussianHill => {
                let dx = de - p.center_east;
                let dy = dn - p.center_north;
                p.base + p.amplitude * (-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma)).exp()
            }
            TerrainKind::Ridge => {
                let (s, c) = p.azimuth.to_radians().sin_cos();
                let d = (de - p.center_east) * c - (dn - p.center_north) * s;
                p.base + p.amplitude * (-(d * d) / (2.0 * p.sigma * p.sigma)).exp()
            }
        }
    }
}

impl ElevationProvider for SyntheticTerrain {
    fn elevation_at(&self, latitude: f64, longitude: f64) -> Result<f64, ProviderError> {
        if self.kind == TerrainKind::Constant {
            return Ok(self.params.base);
        }
        let u = geodesy::wgs84_to_utm(&GeoPoint::new(latitude, longitude, 0.0), Some(self.zone))
            .map_err(|e| ProviderError(e.to_string()))?;
        Ok(self.elevation_at_offset(u.easting - self.origin_east, u.northing - self.origin_north))
    }
}

/// Builds an offline terrain stand-in. `origin` anchors the local metric
/// frame; all offsets in `params` are relative to it.
pub fn synthetic_terrain(
    kind: &str,
    params: TerrainParams,
    origin: GeoPoint,
) -> Result<SyntheticTerrain, AcquisitionError> {
    let kind: TerrainKind = kind.parse()?;
    if matches!(kind, TerrainKind::GaussianHill | TerrainKind::Ridge) && !(params.sigma > 0.0) {
        return Err(AcquisitionError::Config(format!(
            "sigma must be positive, got {}",
            params.sigma
        )));
    }
    let u = geodesy::wgs84_to_utm(&origin, None)?;
    Ok(SyntheticTerrain {
        kind,
        params,
        zone: u.zone,
        origin_east: u.easting,
        origin_north: u.northing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(c: f64) -> impl Fn(f64, f64) -> Result<f64, ProviderError> {
        move |_, _| Ok(c)
    }

    fn study_rect() -> Rect {
        Rect::geographic(48.7224, 7.3368, 48.726, 7.3404).unwrap()
    }

    #[test]
    fn parse_single_line() {
        let ps = parse_point_file("48.7224 7.3368 460.0\n").unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.crs(), Crs::Wgs84);
        let g = ps.geo_points().unwrap()[0];
        assert_eq!((g.latitude, g.longitude, g.altitude), (48.7224, 7.3368, 460.0));
    }

    #[test]
    fn parse_skips_comments_and_keeps_order() {
        let ps = parse_point_file("# comment\n1 2 3\n\n4 5 6\n").unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps.points()[0], Coord { x: 2.0, y: 1.0, z: 3.0 });
        assert_eq!(ps.points()[1], Coord { x: 5.0, y: 4.0, z: 6.0 });
    }

    #[test]
    fn parse_errors() {
        match parse_point_file("48.7 7.3 abc") {
            Err(AcquisitionError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        match parse_point_file("1 2 3\n1 2\n") {
            Err(AcquisitionError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_point_file(""), Err(AcquisitionError::Empty)));
        assert!(matches!(
            parse_point_file("# only\n"),
            Err(AcquisitionError::Empty)
        ));
        assert!(matches!(
            parse_point_file("95 1 1"),
            Err(AcquisitionError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn utm_header_round_trip() {
        let ps = PointSet::new(
            Crs::Utm {
                zone: 32,
                hemisphere: Hemisphere::North,
            },
            vec![Coord {
                x: 377_676.932,
                y: 5_397_932.106,
                z: 461.25,
            }],
        )
        .unwrap();
        let text = write_point_file(&ps);
        assert!(text.starts_with("# crs=utm:32N\n"));
        assert_eq!(parse_point_file(&text).unwrap(), ps);
    }

    #[test]
    fn scan_counts_and_constant_field() {
        let spec = ScanSpec::new(study_rect(), 2, 2).unwrap();
        let ps = scan_grid(&constant(7.5), &spec).unwrap();
        assert_eq!(ps.len(), 4);
        assert!(ps.points().iter().all(|p| p.z == 7.5));

        let spec = ScanSpec::new(study_rect(), 50, 100).unwrap();
        assert_eq!(scan_grid(&constant(0.0), &spec).unwrap().len(), 5000);
    }

    #[test]
    fn scan_order_is_row_major_from_top_left() {
        let rect = study_rect();
        let spec = ScanSpec::new(rect, 3, 3).unwrap();
        let by_lat = |lat: f64, _lon: f64| -> Result<f64, ProviderError> { Ok(lat) };
        let ps = scan_grid(&by_lat, &spec).unwrap();
        let dlat = rect.height() / 3.0;
        let dlon = rect.width() / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                let p = ps.points()[i * 3 + j];
                assert_eq!(p.y, rect.max_y - i as f64 * dlat);
                assert_eq!(p.x, rect.min_x + j as f64 * dlon);
                assert_eq!(p.z, p.y);
            }
            if i > 0 {
                assert!(ps.points()[i * 3].z < ps.points()[(i - 1) * 3].z);
            }
        }
    }

    #[test]
    fn scan_reports_failing_node() {
        let spec = ScanSpec::new(study_rect(), 4, 5).unwrap();
        let target = spec.node(2, 3);
        let flaky = move |lat: f64, lon: f64| {
            if (lat, lon) == target {
                Err(ProviderError("no terrain".into()))
            } else {
                Ok(1.0)
            }
        };
        match scan_grid(&flaky, &spec) {
            Err(AcquisitionError::Scan { row, col, .. }) => assert_eq!((row, col), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_scan_spec() {
        assert!(ScanSpec::new(study_rect(), 1, 5).is_err());
        assert!(Rect::geographic(1.0, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn clip_membership() {
        let rect = Rect::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let ps = PointSet::new(
            Crs::Wgs84,
            vec![
                Coord { x: 5.0, y: 5.0, z: 0.0 },
                Coord { x: 10.5, y: 5.0, z: 1.0 },
                Coord { x: 10.0, y: 0.0, z: 2.0 },
            ],
        )
        .unwrap();
        let c = clip_to_region(&ps, &rect, Crs::Wgs84).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[1].z, 2.0);
        let utm = Crs::Utm {
            zone: 32,
            hemisphere: Hemisphere::North,
        };
        assert!(matches!(
            clip_to_region(&ps, &rect, utm),
            Err(AcquisitionError::CrsMismatch { .. })
        ));
    }

    #[test]
    fn clip_enlarged_scan_matches_brute_force() {
        let target = study_rect();
        let spec = ScanSpec::new(target.expanded(0.1), 50, 100).unwrap();
        let ps = scan_grid(&constant(1.0), &spec).unwrap();
        let clipped = clip_to_region(&ps, &target, Crs::Wgs84).unwrap();
        let mut expected = 0;
        for p in ps.points() {
            if p.x >= target.min_x && p.x <= target.max_x && p.y >= target.min_y && p.y <= target.max_y {
                expected += 1;
            }
        }
        assert_eq!(clipped.len(), expected);
        assert!(expected > 0 && expected < 5000);
    }

    #[test]
    fn synthetic_terrain_examples() {
        let origin = GeoPoint::new(48.7242, 7.3386, 0.0);
        let flat = synthetic_terrain(
            "constant",
            TerrainParams {
                base: 460.0,
                ..Default::default()
            },
            origin,
        )
        .unwrap();
        assert_eq!(flat.elevation_at(48.0, 7.0).unwrap(), 460.0);

        let plane = synthetic_terrain(
            "inclined_plane",
            TerrainParams {
                base: 400.0,
                slope_east: 0.1,
                ..Default::default()
            },
            origin,
        )
        .unwrap();
        assert!((plane.elevation_at_offset(100.0, 0.0) - 410.0).abs() < 1e-12);

        let hill = synthetic_terrain("gaussian_hill", TerrainParams::default(), origin).unwrap();
        let top = hill.elevation_at(origin.latitude, origin.longitude).unwrap();
        assert_eq!(top, 400.0 + 60.0);

        assert!(matches!(
            synthetic_terrain("volcano", TerrainParams::default(), origin),
            Err(AcquisitionError::Config(_))
        ));
    }

    #[test]
    fn ridge_is_constant_along_axis() {
        let origin = GeoPoint::new(48.7242, 7.3386, 0.0);
        let ridge = synthetic_terrain(
            "ridge",
            TerrainParams {
                azimuth: 30.0,
                ..Default::default()
            },
            origin,
        )
        .unwrap();
        let (s, c) = 30f64.to_radians().sin_cos();
        for t in [-200.0, -10.0, 0.0, 55.0] {
            assert!((ridge.elevation_at_offset(t * s, t * c) - 460.0).abs() < 1e-9);
        }
        assert!(ridge.elevation_at_offset(100.0 * c, -100.0 * s) < 460.0);
    }

    #[test]
    fn convert_identity_and_round_trip() {
        let ps = PointSet::from_geo(&[
            GeoPoint::new(48.7224, 7.3368, 400.0),
            GeoPoint::new(48.726, 7.3404, 410.0),
        ])
        .unwrap();
        let utm = convert_pointset(&ps, CrsTarget::Utm(None)).unwrap();
        assert_eq!(
            utm.crs(),
            Crs::Utm {
                zone: 32,
                hemisphere: Hemisphere::North
            }
        );
        assert_eq!(convert_pointset(&utm, CrsTarget::Utm(None)).unwrap(), utm);
        assert_eq!(convert_pointset(&utm, CrsTarget::Utm(Some(32))).unwrap(), utm);
        let back = convert_pointset(&utm, CrsTarget::Wgs84).unwrap();
        for (a, b) in ps.points().iter().zip(back.points()) {
            assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
            assert_eq!(a.z, b.z);
        }
        assert!(matches!(
            convert_pointset(&PointSet::new(Crs::Wgs84, vec![]).unwrap(), CrsTarget::Utm(None)),
            Err(AcquisitionError::Empty)
        ));
    }

    #[test]
    fn convert_forces_single_zone() {
        // Straddles the 6°E boundary between zones 31 and 32; centroid is in 32.
        let ps = PointSet::from_geo(&[
            GeoPoint::new(48.0, 5.9, 0.0),
            GeoPoint::new(48.0, 6.5, 0.0),
            GeoPoint::new(48.0, 6.6, 0.0),
        ])
        .unwrap();
        let utm = convert_pointset(&ps, CrsTarget::Utm(None)).unwrap();
        assert!(matches!(utm.crs(), Crs::Utm { zone: 32, .. }));
        let xs: Vec<f64> = utm.points().iter().map(|p| p.x).collect();
        assert!(xs[0] < xs[1] && xs[1] < xs[2]);
    }

    #[test]
    fn crs_parse() {
        assert_eq!("wgs84".parse::<Crs>().unwrap(), Crs::Wgs84);
        assert_eq!(
            "utm:7S".parse::<Crs>().unwrap(),
            Crs::Utm {
                zone: 7,
                hemisphere: Hemisphere::South
            }
        );
        assert!("utm:61N".parse::<Crs>().is_err());
        assert!("utm:32".parse::<Crs>().is_err());
    }
}

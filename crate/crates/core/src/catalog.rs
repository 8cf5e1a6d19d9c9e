//! Known-crater databases: loading, merging and lat/lon box queries.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{geodetic_to_lclf, Geodetic, LatLonBox, Lclf, MOON_RADIUS_M};

pub const CATALOG_HEADER: [&str; 4] = ["id", "lat_deg", "lon_deg", "diameter_km"];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("catalog header must be `id,lat_deg,lon_deg,diameter_km`, found `{0}`")]
    Header(String),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("duplicate crater id `{id}` on line {line}")]
    DuplicateId { id: String, line: u64 },
    #[error("merge collision on ids: {}", .0.join(", "))]
    MergeCollision(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogSource {
    SmallDb,
    LargeDb,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CraterRecord {
    pub id: String,
    pub center: Geodetic,
    pub diameter_m: f64,
    pub source: CatalogSource,
}

impl CraterRecord {
    pub fn position(&self) -> Lclf {
        geodetic_to_lclf(&self.center)
    }
}

/// Closed diameter interval in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterRange {
    pub min_m: f64,
    pub max_m: f64,
}

impl Default for DiameterRange {
    fn default() -> Self {
        Self { min_m: 5_000.0, max_m: f64::INFINITY }
    }
}

impl DiameterRange {
    pub fn contains(&self, d: f64) -> bool {
        d >= self.min_m && d <= self.max_m
    }
}

const CELL_DEG: f64 = 2.0;
const LAT_CELLS: usize = (180.0 / CELL_DEG) as usize;
const LON_CELLS: usize = (360.0 / CELL_DEG) as usize;

/// Immutable crater set with a uniform lat/lon grid index. Records are kept
/// sorted by id.
#[derive(Debug, Clone)]
pub struct CraterCatalog {
    records: Vec<CraterRecord>,
    cells: Vec<Vec<u32>>,
}

fn cell_of(lat: f64, lon: f64) -> (usize, usize) {
    let cell = CELL_DEG.to_radians();
    let i = (((lat + FRAC_PI_2) / cell) as usize).min(LAT_CELLS - 1);
    let j = (((lon + PI) / cell) as usize).min(LON_CELLS - 1);
    (i, j)
}

impl CraterCatalog {
    /// Builds a catalog, rejecting duplicate ids.
    pub fn new(mut records: Vec<CraterRecord>) -> Result<Self, CatalogError> {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CatalogError::DuplicateId { id: w[0].id.clone(), line: 0 });
        }
        let mut cells = vec![Vec::new(); LAT_CELLS * LON_CELLS];
        for (k, r) in records.iter().enumerate() {
            let (i, j) = cell_of(r.center.lat(), r.center.lon());
            cells[i * LON_CELLS + j].push(k as u32);
        }
        Ok(Self { records, cells })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new()).expect("empty catalog is valid")
    }

    pub fn records(&self) -> &[CraterRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CraterRecord> {
        self.records.binary_search_by(|r| r.id.as_str().cmp(id)).ok().map(|i| &self.records[i])
    }

    /// Records whose center lies in `bounds` (inclusive) and whose diameter
    /// is in `diameters`, ordered by id.
    pub fn query_box(&self, bounds: &LatLonBox, diameters: &DiameterRange) -> Vec<&CraterRecord> {
        let mut hits = BTreeSet::new();
        for b in bounds.split() {
            let (i0, j0) = cell_of(b.lat_min.max(-FRAC_PI_2), b.lon_min);
            let (i1, j1) = cell_of(b.lat_max.min(FRAC_PI_2), b.lon_max);
            // Cells are half-open, so points exactly on a cell edge may sit one cell over.
            let (i0, i1) = (i0.saturating_sub(1), (i1 + 1).min(LAT_CELLS - 1));
            let (j0, j1) = (j0.saturating_sub(1), (j1 + 1).min(LON_CELLS - 1));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    for &k in &self.cells[i * LON_CELLS + j] {
                        let r = &self.records[k as usize];
                        if bounds.contains(r.center.lat(), r.center.lon()) && diameters.contains(r.diameter_m) {
                            hits.insert(k);
                        }
                    }
                }
            }
        }
        hits.into_iter().map(|k| &self.records[k as usize]).collect()
    }

    /// Union of two catalogs; any shared id is an error.
    pub fn merge(&self, other: &CraterCatalog) -> Result<CraterCatalog, CatalogError> {
        let ids: HashSet<&str> = self.records.iter().map(|r| r.id.as_str()).collect();
        let mut clash: Vec<String> = other.records.iter().filter(|r| ids.contains(r.id.as_str())).map(|r| r.id.clone()).collect();
        if !clash.is_empty() {
            clash.sort();
            return Err(CatalogError::MergeCollision(clash));
        }
        let mut all = self.records.clone();
        all.extend(other.records.iter().cloned());
        CraterCatalog::new(all)
    }

    /// Serializes to the catalog file format.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("id,lat_deg,lon_deg,diameter_km\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{}", r.id, r.center.lat().to_degrees(), r.center.lon().to_degrees(), r.diameter_m / 1000.0);
        }
        s
    }

    /// SHA-256 of the canonical CSV serialization.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_string().as_bytes()))
    }
}

pub fn load_catalog(path: impl AsRef<Path>, source: CatalogSource) -> Result<CraterCatalog, CatalogError> {
    let path = path.as_ref();
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CatalogError::Io { path: path.display().to_string(), source: e })?;
    parse_catalog(&text, source)
}

pub fn parse_catalog(text: &str, source: CatalogSource) -> Result<CraterCatalog, CatalogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CatalogError::Parse { line: 1, msg: e.to_string() })?.clone();
    if header.iter().collect::<Vec<_>>() != CATALOG_HEADER {
        return Err(CatalogError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CatalogError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |msg: String| CatalogError::Parse { line, msg };
        let num = |idx: usize, name: &str| -> Result<f64, CatalogError> {
            let v: f64 = row[idx].parse().map_err(|_| err(format!("{name} `{}` is not a number", &row[idx])))?;
            if !v.is_finite() {
                return Err(err(format!("{name} must be finite")));
            }
            Ok(v)
        };
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(err("empty id".into()));
        }
        let lat = num(1, "lat_deg")?;
        let lon = num(2, "lon_deg")?;
        let diameter_km = num(3, "diameter_km")?;
        if diameter_km <= 0.0 {
            return Err(err(format!("diameter_km {diameter_km} must be positive")));
        }
        let center = Geodetic::from_degrees(lat, lon, MOON_RADIUS_M).map_err(|e| err(e.to_string()))?;
        if !seen.insert(id.clone()) {
            return Err(CatalogError::DuplicateId { id, line });
        }
        records.push(CraterRecord { id, center, diameter_m: diameter_km * 1000.0, source });
    }
    CraterCatalog::new(records)
}

/// Parameters for a uniform random global catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticCatalog {
    pub seed: u64,
    /// Craters per million square kilometers.
    pub density_per_mkm2: f64,
    pub min_diameter_km: f64,
    pub max_diameter_km: f64,
    /// Exponent of the cumulative size-frequency law N(>D) ∝ D^-slope.
    pub slope: f64,
}

impl Default for SyntheticCatalog {
    fn default() -> Self {
        Self { seed: 1, density_per_mkm2: 270.0, min_diameter_km: 5.0, max_diameter_km: 60.0, slope: 2.0 }
    }
}

impl SyntheticCatalog {
    pub fn generate(&self) -> CraterCatalog {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        let area_mkm2 = 4.0 * PI * (MOON_RADIUS_M / 1000.0).powi(2) / 1e6;
        let n = (self.density_per_mkm2 * area_mkm2).round() as usize;
        let width = n.to_string().len().max(6);
        let (dmin, dmax) = (self.min_diameter_km, self.max_diameter_km);
        let records = (0..n)
            .map(|k| {
                let lat = rng.random_range(-1.0f64..1.0).asin();
                let lon = rng.random_range(-PI..PI);
                // inverse CDF of the truncated power law
                let u: f64 = rng.random();
                let a = dmin.powf(-self.slope);
                let b = dmax.powf(-self.slope);
                let d_km = (a - u * (a - b)).powf(-1.0 / self.slope);
                CraterRecord {
                    id: format!("SYN{k:0width$}"),
                    center: Geodetic::surface(lat, lon).expect("sampled coordinates are in range"),
                    diameter_m: d_km * 1000.0,
                    source: CatalogSource::Synthetic,
                }
            })
            .collect();
        CraterCatalog::new(records).expect("synthetic ids are unique")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn rec(id: &str, lat_deg: f64, lon_deg: f64, d_km: f64) -> CraterRecord {
        CraterRecord {
            id: id.into(),
            center: Geodetic::from_degrees(lat_deg, lon_deg, MOON_RADIUS_M).unwrap(),
            diameter_m: d_km * 1000.0,
            source: CatalogSource::SmallDb,
        }
    }

    fn brute<'a>(cat: &'a CraterCatalog, b: &LatLonBox, d: &DiameterRange) -> Vec<&'a CraterRecord> {
        cat.records().iter().filter(|r| b.contains(r.center.lat(), r.center.lon()) && d.contains(r.diameter_m)).collect()
    }

    #[test]
    fn header_only_is_empty() {
        let cat = parse_catalog("id,lat_deg,lon_deg,diameter_km\n", CatalogSource::SmallDb).unwrap();
        assert!(cat.is_empty());
    }

    #[test]
    fn three_row_fixture() {
        let text = "# fixture\nid,lat_deg,lon_deg,diameter_km\nC1,10.5,20.25,7.5\n# comment\nC2,-3,-179.5,25\nC0,0,0,5\n";
        let cat = parse_catalog(text, CatalogSource::SmallDb).unwrap();
        assert_eq!(cat.len(), 3);
        let c1 = cat.get("C1").unwrap();
        assert!((c1.center.lat().to_degrees() - 10.5).abs() < 1e-12);
        assert!((c1.center.lon().to_degrees() - 20.25).abs() < 1e-12);
        assert_eq!(c1.diameter_m, 7500.0);
        let ids: Vec<_> = cat.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["C0", "C1", "C2"]);
    }

    #[test]
    fn bad_rows_report_line() {
        let text = "id,lat_deg,lon_deg,diameter_km\nA,0,0,5\nB,1,1,0\n";
        match parse_catalog(text, CatalogSource::SmallDb) {
            Err(CatalogError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "id,lat_deg,lon_deg,diameter_km\nA,0,0,5\nA,1,1,6\n";
        assert!(matches!(parse_catalog(text, CatalogSource::SmallDb), Err(CatalogError::DuplicateId { line: 3, .. })));
        let text = "id,lat_deg,lon_deg,diameter_km\nA,0,zero,5\n";
        assert!(matches!(parse_catalog(text, CatalogSource::SmallDb), Err(CatalogError::Parse { line: 2, .. })));
        assert!(matches!(parse_catalog("a,b\n", CatalogSource::SmallDb), Err(CatalogError::Header(_))));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_catalog("/nonexistent/cat.csv", CatalogSource::SmallDb), Err(CatalogError::Io { .. })));
    }

    #[test]
    fn merge_rules() {
        let a = CraterCatalog::new(vec![rec("A", 0.0, 0.0, 6.0), rec("B", 1.0, 0.0, 8.0)]).unwrap();
        let b = CraterCatalog::new(vec![rec("C", 0.0, 1.0, 30.0), rec("D", 2.0, 0.0, 40.0), rec("E", 3.0, 0.0, 50.0)]).unwrap();
        assert_eq!(a.merge(&CraterCatalog::empty()).unwrap().records(), a.records());
        assert_eq!(a.merge(&b).unwrap().len(), 5);
        let c = CraterCatalog::new(vec![rec("B", 5.0, 5.0, 9.0)]).unwrap();
        match a.merge(&c) {
            Err(CatalogError::MergeCollision(ids)) => assert_eq!(ids, ["B"]),
            other => panic!("unexpected {other:?}"),
        }
        // associativity up to normalized order
        let ab_c = a.merge(&b).unwrap().merge(&CraterCatalog::new(vec![rec("Z", 0.0, 0.0, 9.0)]).unwrap()).unwrap();
        let a_bc = a.merge(&b.merge(&CraterCatalog::new(vec![rec("Z", 0.0, 0.0, 9.0)]).unwrap()).unwrap()).unwrap();
        assert_eq!(ab_c.records(), a_bc.records());
    }

    #[test]
    fn boundary_record_included() {
        let cat = CraterCatalog::new(vec![rec("A", 10.0, 20.0, 6.0)]).unwrap();
        let r = cat.records()[0].center;
        let b = LatLonBox { lat_min: r.lat(), lat_max: r.lat() + 0.1, lon_min: r.lon() - 0.1, lon_max: r.lon() };
        assert_eq!(cat.query_box(&b, &DiameterRange::default()).len(), 1);
        let empty = LatLonBox { lat_min: -0.5, lat_max: -0.4, lon_min: 1.0, lon_max: 1.1 };
        assert!(cat.query_box(&empty, &DiameterRange::default()).is_empty());
    }

    #[test]
    fn wrap_box_is_union_of_halves() {
        let cat = SyntheticCatalog { density_per_mkm2: 300.0, ..Default::default() }.generate();
        let b = LatLonBox { lat_min: -0.3, lat_max: 0.4, lon_min: 3.0, lon_max: -3.0 };
        let whole: Vec<_> = cat.query_box(&b, &DiameterRange::default()).iter().map(|r| r.id.clone()).collect();
        let mut halves: Vec<_> = b.split().iter().flat_map(|h| cat.query_box(h, &DiameterRange::default())).map(|r| r.id.clone()).collect();
        halves.sort();
        halves.dedup();
        assert_eq!(whole, halves);
        assert!(!whole.is_empty());
    }

    #[test]
    fn synthetic_diameters_in_range() {
        let s = SyntheticCatalog::default();
        let cat = s.generate();
        assert!(cat.len() > 1000);
        assert!(cat.records().iter().all(|r| r.diameter_m >= 5000.0 - 1e-6 && r.diameter_m <= 60_000.0 + 1e-6));
        assert_eq!(cat.checksum(), s.generate().checksum());
    }

    fn arb_box() -> impl Strategy<Value = LatLonBox> {
        (-1.6..1.6f64, 0.0..1.0f64, -PI..PI, -PI..PI).prop_map(|(lat, dlat, lon0, lon1)| LatLonBox {
            lat_min: lat,
            lat_max: lat + dlat,
            lon_min: lon0,
            lon_max: lon1,
        })
    }

    proptest! {
        #[test]
        fn query_matches_brute_force(seed in 0u64..1000, b in arb_box(), dmin in 0.0..40_000.0f64) {
            // 50-record fixture clustered so random boxes actually hit things
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let recs = (0..50).map(|k| rec(&format!("R{k:02}"), rng.random_range(-90.0..=90.0), rng.random_range(-180.0..180.0), rng.random_range(5.0..60.0))).collect();
            let cat = CraterCatalog::new(recs).unwrap();
            let d = DiameterRange { min_m: dmin, max_m: f64::INFINITY };
            let got: Vec<_> = cat.query_box(&b, &d).iter().map(|r| r.id.clone()).collect();
            let want: Vec<_> = brute(&cat, &b, &d).iter().map(|r| r.id.clone()).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn query_matches_brute_force_dense(b in arb_box()) {
            let cat = SyntheticCatalog { seed: 9, density_per_mkm2: 260.0, ..Default::default() }.generate();
            let d = DiameterRange::default();
            let got: Vec<_> = cat.query_box(&b, &d).iter().map(|r| r.id.clone()).collect();
            let want: Vec<_> = brute(&cat, &b, &d).iter().map(|r| r.id.clone()).collect();
            prop_assert_eq!(got, want);
        }
    }
}

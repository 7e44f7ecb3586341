//! Synthetic perimetry: seeded records with glaucoma-like or other-disease
//! defects, and a raster renderer standing in for a photographed printout.
//!
//! Each record draws from its own stream `SplitMix64::new(seed ^ index)`, so
//! records can be generated in any order (or in parallel) with identical output.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::vfdata::{Dataset, Eye, GridSpec, Label, VisualFieldRecord, MAX_DB, MIN_DB};

/// Depth range of the diffuse (media-opacity-like) depression.
pub const DIFFUSE_DEPTH_DB: (f64, f64) = (3.0, 10.0);
/// Depth range of the central and vertical-hemifield defects.
pub const FOCAL_DEPTH_DB: (f64, f64) = (10.0, 25.0);
/// Central defects cover every ring at or inside this eccentricity.
pub const CENTRAL_RADIUS_DEG: f64 = 10.0;
/// Arcuate defects cover rings within this eccentricity band.
pub const ARCUATE_RING_DEG: (f64, f64) = (9.0, 21.0);
/// Nasal steps cover rings at or beyond this eccentricity.
pub const NASAL_STEP_MIN_DEG: f64 = 21.0;
/// Nasal-step depth as a fraction of the arcuate depth.
pub const NASAL_STEP_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtherPattern {
    Diffuse,
    Central,
    Hemifield,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_glaucoma: usize,
    pub n_other: usize,
    pub grid: GridSpec,
    pub noise_sd_db: f64,
    pub glaucoma_depth_range_db: (f64, f64),
    /// Weights of {diffuse, central, hemifield}; must sum to 1.
    pub other_pattern_weights: [f64; 3],
    pub base_peak_db: f64,
    pub base_slope_db_per_deg: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_glaucoma: 80,
            n_other: 65,
            grid: GridSpec::standard(),
            noise_sd_db: 1.5,
            glaucoma_depth_range_db: (10.0, 25.0),
            other_pattern_weights: [1.0 / 3.0; 3],
            base_peak_db: 33.0,
            base_slope_db_per_deg: 0.25,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid("generator config", msg));
        if !(self.noise_sd_db.is_finite() && self.noise_sd_db >= 0.0) {
            return bad(format!("noise_sd_db {} must be >= 0", self.noise_sd_db));
        }
        let (lo, hi) = self.glaucoma_depth_range_db;
        if !(lo.is_finite() && hi.is_finite() && MIN_DB <= lo && lo <= hi && hi <= MAX_DB) {
            return bad(format!(
                "glaucoma depth range [{lo}, {hi}] not within [0, 40]"
            ));
        }
        let w = &self.other_pattern_weights;
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("pattern weights must be nonnegative".into());
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("pattern weights sum to {sum}, expected 1"));
        }
        if !(self.base_peak_db.is_finite() && self.base_slope_db_per_deg.is_finite()) {
            return bad("base field parameters must be finite".into());
        }
        Ok(())
    }

    /// Clean hill of vision at eccentricity `r` degrees.
    pub fn base_db(&self, r: f64) -> f64 {
        self.base_peak_db - self.base_slope_db_per_deg * r
    }
}

pub fn generate_dataset(config: &GenConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let total = config.n_other + config.n_glaucoma;
    let records = (0..total)
        .map(|i| {
            let label = if i < config.n_other {
                Label::Other
            } else {
                Label::Glaucoma
            };
            generate_record(config, seed, i, label)
        })
        .collect();
    Dataset::new(config.grid.clone(), records)
}

fn generate_record(config: &GenConfig, seed: u64, index: usize, label: Label) -> VisualFieldRecord {
    let grid = &config.grid;
    let mut rng = SplitMix64::new(seed ^ index as u64);
    let depression = match label {
        Label::Glaucoma => glaucoma_depression(config, &mut rng),
        Label::Other => other_depression(config, &mut rng),
    };
    let sensitivities = (0..grid.point_count())
        .map(|p| {
            let (r, _) = grid.point(p);
            let noise = config.noise_sd_db * rng.next_gaussian();
            let s = (config.base_db(r) - depression[p] + noise).clamp(MIN_DB, MAX_DB);
            (s * 1000.0).round() / 1000.0
        })
        .collect();
    VisualFieldRecord {
        record_id: format!("SYN{index:05}"),
        eye: if index.is_multiple_of(2) {
            Eye::OD
        } else {
            Eye::OS
        },
        label,
        sensitivities,
    }
}

fn uniform(rng: &mut SplitMix64, (lo, hi): (f64, f64)) -> f64 {
    lo + rng.next_f64() * (hi - lo)
}

fn is_superior(angle: f64) -> bool {
    angle > 0.0 && angle < 180.0
}

fn is_inferior(angle: f64) -> bool {
    angle > 180.0
}

/// Arcuate band over 3–5 contiguous meridians of one horizontal hemifield at
/// mid eccentricities, plus a nasal step next to the 180 degree meridian.
fn glaucoma_depression(config: &GenConfig, rng: &mut SplitMix64) -> Vec<f64> {
    let grid = &config.grid;
    let meridians = grid.meridians();
    let superior = rng.next_f64() < 0.5;
    let mut hemi: Vec<usize> = (0..meridians.len())
        .filter(|&m| {
            if superior {
                is_superior(meridians[m])
            } else {
                is_inferior(meridians[m])
            }
        })
        .collect();
    if hemi.is_empty() {
        hemi = (0..meridians.len()).collect();
    }
    let band_len = (3 + rng.below(3)).min(hemi.len());
    let start = rng.below(hemi.len() - band_len + 1);
    let band = &hemi[start..start + band_len];
    let depth = uniform(rng, config.glaucoma_depth_range_db);

    let mut rings: Vec<usize> = (0..grid.eccentricities().len())
        .filter(|&e| {
            let r = grid.eccentricities()[e];
            (ARCUATE_RING_DEG.0..=ARCUATE_RING_DEG.1).contains(&r)
        })
        .collect();
    if rings.is_empty() {
        rings = (0..grid.eccentricities().len()).collect();
    }

    let n_mer = meridians.len();
    let mut depression = vec![0.0; grid.point_count()];
    for (pos, &m) in band.iter().enumerate() {
        let taper = band_taper(pos, band_len);
        for &e in &rings {
            depression[e * n_mer + m] += depth * taper;
        }
    }

    let nasal = *hemi
        .iter()
        .min_by(|&&a, &&b| {
            let da = (meridians[a] - 180.0).abs();
            let db = (meridians[b] - 180.0).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("nonempty hemifield");
    let mut step_rings: Vec<usize> = (0..grid.eccentricities().len())
        .filter(|&e| grid.eccentricities()[e] >= NASAL_STEP_MIN_DEG)
        .collect();
    if step_rings.is_empty() {
        step_rings.push(grid.eccentricities().len() - 1);
    }
    for e in step_rings {
        depression[e * n_mer + nasal] += depth * NASAL_STEP_FRACTION;
    }
    depression
}

/// Raised-cosine edge taper: 0.5 on the two outermost meridians of the band,
/// 1 inside. Single- and two-meridian bands stay at full depth.
fn band_taper(pos: usize, len: usize) -> f64 {
    if len < 3 {
        return 1.0;
    }
    let from_edge = pos.min(len - 1 - pos) as f64;
    let t = ((from_edge + 1.0) / 2.0).min(1.0);
    0.5 * (1.0 - (std::f64::consts::PI * t).cos())
}

fn other_depression(config: &GenConfig, rng: &mut SplitMix64) -> Vec<f64> {
    let grid = &config.grid;
    let u = rng.next_f64();
    let [wd, wc, _] = config.other_pattern_weights;
    let pattern = if u < wd {
        OtherPattern::Diffuse
    } else if u < wd + wc {
        OtherPattern::Central
    } else {
        OtherPattern::Hemifield
    };
    let mut depression = vec![0.0; grid.point_count()];
    match pattern {
        OtherPattern::Diffuse => {
            let d = uniform(rng, DIFFUSE_DEPTH_DB);
            depression.iter_mut().for_each(|x| *x = d);
        }
        OtherPattern::Central => {
            let d = uniform(rng, FOCAL_DEPTH_DB);
            for (p, x) in depression.iter_mut().enumerate() {
                if grid.point(p).0 <= CENTRAL_RADIUS_DEG {
                    *x = d;
                }
            }
        }
        OtherPattern::Hemifield => {
            let d = uniform(rng, FOCAL_DEPTH_DB);
            let left = rng.next_f64() < 0.5;
            for (p, x) in depression.iter_mut().enumerate() {
                let a = grid.point(p).1;
                let on_left = a > 90.0 && a < 270.0;
                let on_right = !(90.0..=270.0).contains(&a);
                if (left && on_left) || (!left && on_right) {
                    *x = d;
                }
            }
        }
    }
    depression
}

/// Grayscale image, row-major, intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::invalid(
                "raster",
                format!("{} pixels for {width}x{height}", pixels.len()),
            ));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("raster", "intensity outside [0, 1]"));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Sets a pixel, clamping into [0, 1].
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.pixels[y * self.width + x] = value.clamp(0.0, 1.0);
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| (p * 255.0).round() as u8));
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Where each grid point lands on a raster, and how large its disk is.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterLayout {
    /// Sub-pixel disk centers `(x, y)`, one per grid point.
    pub centers: Vec<(f64, f64)>,
    pub radius: f64,
}

impl RasterLayout {
    /// Nearest pixel to the center of point `p`.
    pub fn center_pixel(&self, p: usize) -> (i64, i64) {
        let (x, y) = self.centers[p];
        (x.round() as i64, y.round() as i64)
    }
}

/// Polar-to-pixel mapping: origin at the raster center, `min(w, h) / (2 (max_ecc + 3))`
/// pixels per degree, superior field up, OS mirrored horizontally.
///
/// The disk radius is `max(2, width / 64)`, reduced where needed so that no two
/// disks share a pixel. If that leaves less than one pixel the raster is too small.
pub fn raster_layout(
    grid: &GridSpec,
    eye: Eye,
    width: usize,
    height: usize,
) -> Result<RasterLayout> {
    if width < 64 || height < 64 {
        return Err(Error::invalid(
            "raster",
            format!("{width}x{height} is below the 64x64 minimum"),
        ));
    }
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let scale = width.min(height) as f64 / (2.0 * (grid.max_eccentricity() + 3.0));
    let mirror = if eye == Eye::OS { -1.0 } else { 1.0 };
    let centers: Vec<(f64, f64)> = (0..grid.point_count())
        .map(|p| {
            let (r, a) = grid.point(p);
            let t = a.to_radians();
            (cx + mirror * r * t.cos() * scale, cy - r * t.sin() * scale)
        })
        .collect();

    let mut closest = (f64::INFINITY, 0, 1);
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let d = (centers[i].0 - centers[j].0).hypot(centers[i].1 - centers[j].1);
            if d < closest.0 {
                closest = (d, i, j);
            }
        }
    }
    let nominal = (width as f64 / 64.0).max(2.0);
    let radius = nominal.min(closest.0 / 2.0 - 0.5);
    if radius < 1.0 {
        return Err(Error::RasterTooSmall {
            first: closest.1,
            second: closest.2,
        });
    }
    Ok(RasterLayout { centers, radius })
}

/// Maps sensitivity to disk intensity: 0 dB is the white background, 40 dB is black.
pub fn intensity_for_db(s: f64) -> f64 {
    (1.0 - s / MAX_DB).clamp(0.0, 1.0)
}

/// Inverse of [`intensity_for_db`], clamped to [0, 40] dB.
pub fn db_for_intensity(v: f64) -> f64 {
    ((1.0 - v) * MAX_DB).clamp(MIN_DB, MAX_DB)
}

pub fn render_raster(
    record: &VisualFieldRecord,
    grid: &GridSpec,
    width: usize,
    height: usize,
) -> Result<Raster> {
    if record.sensitivities.len() != grid.point_count() {
        return Err(Error::Dimension {
            expected: grid.point_count(),
            got: record.sensitivities.len(),
        });
    }
    let layout = raster_layout(grid, record.eye, width, height)?;
    let mut raster = Raster::filled(width, height, 1.0);
    let r = layout.radius;
    for (&(cx, cy), &s) in layout.centers.iter().zip(&record.sensitivities) {
        let value = intensity_for_db(s);
        let x0 = (cx - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil() as usize).min(width - 1);
        let y0 = (cy - r).floor().max(0.0) as usize;
        let y1 = ((cy + r).ceil() as usize).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    raster.set(x, y, value);
                }
            }
        }
    }
    Ok(raster)
}

/// Degradations applied when a rendered printout is "photographed".
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureConfig {
    /// Multiplicative contrast loss, in (0, 1].
    pub contrast: f64,
    /// Additive brightness offset; `offset + contrast` must not exceed 1.
    pub offset: f64,
    /// Fraction of pixels replaced by salt-and-pepper noise.
    pub salt_fraction: f64,
    /// Side of the black calibration square stamped in the top-left corner.
    pub fiducial_px: usize,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            contrast: 0.8,
            offset: 0.1,
            salt_fraction: 0.01,
            fiducial_px: 6,
        }
    }
}

impl CaptureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.contrast > 0.0
            && self.offset >= 0.0
            && self.offset + self.contrast <= 1.0
            && (0.0..0.5).contains(&self.salt_fraction)
            && self.fiducial_px >= 3;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "capture config",
                format!("{self:?}: need contrast > 0, offset >= 0, offset + contrast <= 1, salt in [0, 0.5), fiducial >= 3"),
            ))
        }
    }
}

/// Simulates photographing a rendered printout: stamps a black calibration
/// square, compresses the intensity range to `[offset, offset + contrast]` and
/// sprinkles salt-and-pepper pixels at the two extremes of that range.
///
/// A median filter followed by [`crate::preprocess::normalize_raster`] undoes
/// all three, because the calibration square pins the dark end of the range.
pub fn simulate_capture(raster: &Raster, capture: &CaptureConfig, seed: u64) -> Result<Raster> {
    capture.validate()?;
    let (w, h) = (raster.width(), raster.height());
    let k = capture.fiducial_px;
    if k >= w.min(h) {
        return Err(Error::invalid(
            "capture config",
            "fiducial larger than the raster",
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let (black, white) = (capture.offset, capture.offset + capture.contrast);
    let mut out = raster.clone();
    for y in 0..h {
        for x in 0..w {
            let v = if x < k && y < k {
                0.0
            } else {
                raster.get(x, y)
            };
            let mut v = capture.offset + capture.contrast * v;
            if rng.next_f64() < capture.salt_fraction {
                v = if rng.next_f64() < 0.5 { black } else { white };
            }
            out.set(x, y, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vfdata::save_dataset;

    fn config(n_glaucoma: usize, n_other: usize) -> GenConfig {
        GenConfig {
            n_glaucoma,
            n_other,
            ..GenConfig::default()
        }
    }

    #[test]
    fn empty_config_gives_empty_dataset() {
        let d = generate_dataset(&config(0, 0), 1).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.grid(), &GridSpec::standard());
    }

    #[test]
    fn counts_range_and_alternating_eyes() {
        let d = generate_dataset(&config(30, 20), 5).unwrap();
        assert_eq!(d.label_counts(), [20, 30]);
        for (i, r) in d.records().iter().enumerate() {
            assert_eq!(r.eye, if i % 2 == 0 { Eye::OD } else { Eye::OS });
            assert!(r.sensitivities.iter().all(|s| (0.0..=40.0).contains(s)));
        }
    }

    #[test]
    fn diffuse_noise_free_record_is_shifted_base() {
        let cfg = GenConfig {
            n_glaucoma: 0,
            n_other: 1,
            noise_sd_db: 0.0,
            other_pattern_weights: [1.0, 0.0, 0.0],
            ..GenConfig::default()
        };
        let d = generate_dataset(&cfg, 17).unwrap();
        let rec = &d.records()[0];
        // Recompute the hill of vision independently from its closed form.
        let offsets: Vec<f64> = (0..72)
            .map(|p| {
                let r = [3.0, 9.0, 15.0, 21.0, 27.0, 30.0][p / 12];
                (33.0 - 0.25 * r) - rec.sensitivities[p]
            })
            .collect();
        let d0 = offsets[0];
        assert!((DIFFUSE_DEPTH_DB.0 - 1e-3..=DIFFUSE_DEPTH_DB.1 + 1e-3).contains(&d0));
        for o in offsets {
            // Sensitivities are stored to 3 decimals.
            assert!((o - d0).abs() <= 1e-3, "{o} vs {d0}");
        }
    }

    #[test]
    fn glaucoma_records_have_a_deep_defect() {
        let cfg = GenConfig {
            n_glaucoma: 200,
            n_other: 0,
            noise_sd_db: 0.0,
            ..GenConfig::default()
        };
        let d = generate_dataset(&cfg, 3).unwrap();
        for rec in d.records() {
            let deepest = (0..72)
                .map(|p| cfg.base_db(d.grid().point(p).0) - rec.sensitivities[p])
                .fold(f64::MIN, f64::max);
            assert!(deepest >= 10.0 - 1e-3, "{} only {deepest}", rec.record_id);
        }
    }

    #[test]
    fn band_taper_shape() {
        assert!((band_taper(0, 3) - 0.5).abs() < 1e-15);
        assert!((band_taper(1, 3) - 1.0).abs() < 1e-15);
        let five: Vec<f64> = (0..5).map(|i| band_taper(i, 5)).collect();
        assert!((five[0] - 0.5).abs() < 1e-15 && (five[4] - 0.5).abs() < 1e-15);
        assert!(five[1..4].iter().all(|w| (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn generation_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        save_dataset(&generate_dataset(&config(10, 10), 77).unwrap(), &a).unwrap();
        save_dataset(&generate_dataset(&config(10, 10), 77).unwrap(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let c = generate_dataset(&config(10, 10), 78).unwrap();
        assert_ne!(generate_dataset(&config(10, 10), 77).unwrap(), c);
    }

    #[test]
    fn per_record_streams_are_order_independent() {
        let cfg = config(5, 5);
        let all = generate_dataset(&cfg, 11).unwrap();
        for (i, rec) in all.records().iter().enumerate().rev() {
            let alone = generate_record(&cfg, 11, i, rec.label);
            assert_eq!(&alone, rec);
        }
    }

    #[test]
    fn invalid_configs() {
        let c = GenConfig {
            noise_sd_db: -1.0,
            ..GenConfig::default()
        };
        assert!(generate_dataset(&c, 0).is_err());
        let c = GenConfig {
            other_pattern_weights: [0.5, 0.5, 0.5],
            ..GenConfig::default()
        };
        assert!(c.validate().is_err());
        let c = GenConfig {
            glaucoma_depth_range_db: (10.0, 45.0),
            ..GenConfig::default()
        };
        assert!(c.validate().is_err());
    }

    fn blank_record(grid: &GridSpec) -> VisualFieldRecord {
        VisualFieldRecord {
            record_id: "x".into(),
            eye: Eye::OD,
            label: Label::Other,
            sensitivities: vec![0.0; grid.point_count()],
        }
    }

    #[test]
    fn zero_db_record_renders_blank() {
        let grid = GridSpec::standard();
        let r = render_raster(&blank_record(&grid), &grid, 256, 256).unwrap();
        assert!(r.pixels().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn single_bright_point_renders_one_dark_disk() {
        let grid = GridSpec::standard();
        let mut rec = blank_record(&grid);
        rec.sensitivities[30] = 40.0;
        let r = render_raster(&rec, &grid, 256, 256).unwrap();
        let layout = raster_layout(&grid, Eye::OD, 256, 256).unwrap();
        let (x, y) = layout.center_pixel(30);
        assert_eq!(r.get(x as usize, y as usize), 0.0);
        let dark = r.pixels().iter().filter(|&&p| p < 1.0).count();
        let radius = layout.radius;
        assert!(dark > 0 && (dark as f64) < 4.0 * radius * radius + 4.0 * radius + 1.0);
        assert!(r.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
    }

    #[test]
    fn os_mirrors_od() {
        let grid = GridSpec::standard();
        let od = raster_layout(&grid, Eye::OD, 256, 256).unwrap();
        let os = raster_layout(&grid, Eye::OS, 256, 256).unwrap();
        for (a, b) in od.centers.iter().zip(&os.centers) {
            assert!((a.0 - 128.0 + b.0 - 128.0).abs() < 1e-9);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn too_small_raster_names_a_pair() {
        let grid = GridSpec::standard();
        assert!(matches!(
            raster_layout(&grid, Eye::OD, 32, 32),
            Err(Error::Invalid { .. })
        ));
        // Ring spacing at 3 degrees is ~1.5 px on a 64 px raster.
        match raster_layout(&grid, Eye::OD, 64, 64) {
            Err(Error::RasterTooSmall { first, second }) => assert!(first < second),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pgm_header() {
        let r = Raster::filled(3, 2, 1.0);
        let bytes = r.to_pgm();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 6..], &[255u8; 6]);
    }
}

//! Simulated 2D Bragg-CDI crystals: random convex or notched shapes with unit
//! modulus and a phase set by edge-dislocation displacement fields projected
//! onto a momentum-transfer direction.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{save_cimg, save_rmap};
use crate::fourier::{intensity, oversampled_fourier};
use crate::grid::{ComplexGrid, IntensityGrid, SupportMask};

/// Poisson ratio of the isotropic elastic medium.
const POISSON: f64 = 0.3;
const MAX_SHAPE_RETRIES: usize = 200;

/// Defect counts used for dataset stratification.
pub const DEFECT_LEVELS: [usize; 5] = [0, 1, 2, 4, 8];

/// Object grid and the centered region random points are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrystalGeometry {
    pub grid: usize,
    pub region: usize,
}

impl Default for CrystalGeometry {
    fn default() -> Self {
        Self { grid: 128, region: 110 }
    }
}

impl CrystalGeometry {
    /// Keeps the default region-to-grid ratio at another grid size.
    pub fn scaled(grid: usize) -> Self {
        let region = ((grid as f64) * 110.0 / 128.0).round() as usize;
        // an even margin keeps the region centered on whole pixels
        let region = if (grid - region) % 2 == 1 { region + 1 } else { region };
        Self {
            grid,
            region: region.min(grid),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid < 3 || self.region < 3 || self.region > self.grid {
            return Err(Error::InvalidParameter(format!(
                "crystal region {} must lie in grid {} and span at least 3 pixels",
                self.region, self.grid
            )));
        }
        Ok(())
    }

    fn offset(&self) -> f64 {
        (self.grid - self.region) as f64 / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Convex,
    Nonconvex,
}

impl ShapeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Convex => "convex",
            Self::Nonconvex => "nonconvex",
        }
    }
}

/// Generation knobs beyond the seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalParams {
    pub geometry: CrystalGeometry,
    pub n_points: usize,
    pub n_defects: usize,
    pub convex: bool,
    /// Momentum-transfer direction.
    pub q: [f64; 2],
}

impl Default for CrystalParams {
    fn default() -> Self {
        Self {
            geometry: CrystalGeometry::default(),
            n_points: 10,
            n_defects: 2,
            convex: true,
            q: [1.0, 0.0],
        }
    }
}

/// One defect: core position (row, col in pixels) and Burgers direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub row: f64,
    pub col: f64,
    pub burgers_angle: f64,
}

#[derive(Clone, Debug)]
pub struct CrystalInstance {
    pub support: SupportMask,
    /// Wrapped phase in `(-pi, pi]`, zero off support.
    pub phase: Vec<f64>,
    pub object: ComplexGrid<f64>,
    pub kind: ShapeKind,
    pub defects: Vec<Defect>,
    pub q: [f64; 2],
    pub seed: u64,
}

impl CrystalInstance {
    pub fn grid(&self) -> usize {
        self.object.rows()
    }

    pub fn area(&self) -> usize {
        self.support.count()
    }

    /// Far-field observation on a `2m x 2n` canvas.
    pub fn observation(&self) -> Result<IntensityGrid<f64>> {
        let (m, n) = self.object.shape();
        self.observation_on((2 * m, 2 * n))
    }

    pub fn observation_on(&self, canvas: (usize, usize)) -> Result<IntensityGrid<f64>> {
        Ok(intensity(&oversampled_fourier(&self.object, canvas.0, canvas.1)?))
    }

    /// Sum over support of wrapped phase differences to right and lower neighbors.
    pub fn phase_variation(&self) -> f64 {
        let n = self.grid();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if !self.support.get(i, j) {
                    continue;
                }
                let p = self.phase[i * n + j];
                for (ii, jj) in [(i + 1, j), (i, j + 1)] {
                    if ii < n && jj < n && self.support.get(ii, jj) {
                        total += wrap_phase(self.phase[ii * n + jj] - p).abs();
                    }
                }
            }
        }
        total
    }
}

/// Wraps to `(-pi, pi]`.
pub fn wrap_phase(p: f64) -> f64 {
    let w = p - TAU * ((p - PI) / TAU).ceil();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

type Point = (f64, f64);

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain; counter-clockwise, no collinear points.
fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside_hull(hull: &[Point], p: Point) -> bool {
    (0..hull.len()).all(|k| cross(hull[k], hull[(k + 1) % hull.len()], p) >= 0.0)
}

/// Isotropic edge-dislocation displacement at offset `(dx, dy)` from the
/// core, Burgers vector of length `b` along the local x axis.
fn edge_dislocation(dx: f64, dy: f64, b: f64) -> (f64, f64) {
    let r2 = dx * dx + dy * dy;
    if r2 < 1e-12 {
        return (0.0, 0.0);
    }
    let nu = POISSON;
    let ux = b / TAU * (dy.atan2(dx) + dx * dy / (2.0 * (1.0 - nu) * r2));
    let uy =
        -b / TAU * ((1.0 - 2.0 * nu) / (4.0 * (1.0 - nu)) * r2.ln() + (dx * dx - dy * dy) / (4.0 * (1.0 - nu) * r2));
    (ux, uy)
}

/// Mixes a base seed with an index into an independent stream seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_shape(rng: &mut ChaCha8Rng, params: &CrystalParams) -> Option<Vec<bool>> {
    let g = params.geometry;
    let (n, off, reg) = (g.grid, g.offset(), g.region as f64);
    let pts: Vec<Point> = (0..params.n_points)
        .map(|_| (off + rng.gen::<f64>() * reg, off + rng.gen::<f64>() * reg))
        .collect();
    let hull = convex_hull(pts);
    if hull.len() < 3 {
        return None;
    }
    let mut mask = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            mask[i * n + j] = inside_hull(&hull, (i as f64 + 0.5, j as f64 + 0.5));
        }
    }
    let hull_area = mask.iter().filter(|&&b| b).count();
    if hull_area < 3 {
        return None;
    }
    if !params.convex {
        let bites = rng.gen_range(1..=3);
        let mut carved = mask.clone();
        for _ in 0..bites {
            let k = rng.gen_range(0..hull.len());
            let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
            let t: f64 = rng.gen_range(0.2..0.8);
            let centre = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            let edge = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            let radius = edge * rng.gen_range(0.15..0.35);
            for i in 0..n {
                for j in 0..n {
                    let d2 = (i as f64 + 0.5 - centre.0).powi(2) + (j as f64 + 0.5 - centre.1).powi(2);
                    if d2 <= radius * radius {
                        carved[i * n + j] = false;
                    }
                }
            }
        }
        let kept = carved.iter().filter(|&&b| b).count();
        // a bite that eats most of the shape leaves nothing recognizable
        if kept * 2 < hull_area || kept < 3 {
            return None;
        }
        mask = carved;
    }
    Some(mask)
}

/// Simulates one crystal. Shape and defects draw from independent streams of
/// `seed`, so instances differing only in `n_defects` share their support and
/// their first defects.
pub fn simulate_crystal_with(seed: u64, params: &CrystalParams) -> Result<CrystalInstance> {
    params.geometry.validate()?;
    if params.n_points < 3 {
        return Err(Error::InvalidParameter("need at least 3 scattering points".into()));
    }
    let qn = (params.q[0].powi(2) + params.q[1].powi(2)).sqrt();
    if !(qn.is_finite() && qn > 0.0) {
        return Err(Error::InvalidParameter(
            "momentum transfer must be a nonzero finite vector".into(),
        ));
    }
    let n = params.geometry.grid;
    let mut shape_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mask = (0..MAX_SHAPE_RETRIES)
        .find_map(|_| sample_shape(&mut shape_rng, params))
        .ok_or_else(|| Error::InvalidParameter("could not sample a non-degenerate shape".into()))?;
    let support = SupportMask::new(n, n, mask)?;

    let sites: Vec<usize> = (0..n * n).filter(|&k| support.data()[k]).collect();
    let mut defect_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let defects: Vec<Defect> = (0..params.n_defects)
        .map(|_| {
            let k = sites[defect_rng.gen_range(0..sites.len())];
            Defect {
                row: (k / n) as f64 + 0.5,
                col: (k % n) as f64 + 0.5,
                burgers_angle: defect_rng.gen_range(0.0..TAU),
            }
        })
        .collect();

    // Burgers length 2 pi: one lattice period maps to one phase cycle.
    let b = TAU;
    let mut phase = vec![0.0; n * n];
    let mut object = ComplexGrid::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if !support.get(i, j) {
                continue;
            }
            let (y, x) = (i as f64 + 0.5, j as f64 + 0.5);
            let (mut ux, mut uy) = (0.0, 0.0);
            for d in &defects {
                let (c, s) = (d.burgers_angle.cos(), d.burgers_angle.sin());
                let (dx, dy) = (x - d.col, y - d.row);
                let (lx, ly) = edge_dislocation(c * dx + s * dy, -s * dx + c * dy, b);
                ux += c * lx - s * ly;
                uy += s * lx + c * ly;
            }
            let p = wrap_phase(params.q[0] * ux + params.q[1] * uy);
            phase[i * n + j] = p;
            object.set(i, j, Complex::from_polar(1.0, p));
        }
    }
    Ok(CrystalInstance {
        support,
        phase,
        object,
        kind: if params.convex {
            ShapeKind::Convex
        } else {
            ShapeKind::Nonconvex
        },
        defects,
        q: params.q,
        seed,
    })
}

/// Default-geometry form.
pub fn simulate_crystal(seed: u64, n_points: usize, n_defects: usize, convex: bool) -> Result<CrystalInstance> {
    simulate_crystal_with(
        seed,
        &CrystalParams {
            n_points,
            n_defects,
            convex,
            ..CrystalParams::default()
        },
    )
}

/// One row of a dataset manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub file: String,
    pub seed: u64,
    pub kind: ShapeKind,
    pub defects: usize,
    pub q: String,
}

/// Stratification cell of instance `index`: shape kind alternates fastest,
/// then defect level.
pub fn dataset_cell(index: usize) -> (bool, usize) {
    (
        index.is_multiple_of(2),
        DEFECT_LEVELS[(index / 2) % DEFECT_LEVELS.len()],
    )
}

/// Parameters for instance `index` of a dataset drawn from `seed`.
pub fn dataset_instance(seed: u64, index: usize, geometry: CrystalGeometry, q: [f64; 2]) -> (u64, CrystalParams) {
    let inst_seed = derive_seed(seed, index as u64 + 2);
    let (convex, n_defects) = dataset_cell(index);
    let n_points = 5 + (derive_seed(inst_seed, 7) % 11) as usize;
    (
        inst_seed,
        CrystalParams {
            geometry,
            n_points,
            n_defects,
            convex,
            q,
        },
    )
}

/// Writes `n` instances under `out_dir/<split>/`, each as `inst_<seed>.cimg`
/// (object) and `inst_<seed>.rmap` (observation on a `2m x 2n` canvas), plus
/// `manifest.csv`.
pub fn generate_dataset(
    n: usize,
    out_dir: impl AsRef<Path>,
    split: &str,
    seed: u64,
    geometry: CrystalGeometry,
    q: [f64; 2],
) -> Result<Vec<ManifestRow>> {
    if n == 0 {
        return Err(Error::InvalidParameter("dataset size must be at least 1".into()));
    }
    let dir: PathBuf = out_dir.as_ref().join(split);
    fs::create_dir_all(&dir)?;
    let mut rows = Vec::with_capacity(n);
    for index in 0..n {
        let (inst_seed, params) = dataset_instance(seed, index, geometry, q);
        let inst = simulate_crystal_with(inst_seed, &params)?;
        let stem = format!("inst_{inst_seed}");
        save_cimg(dir.join(format!("{stem}.cimg")), &inst.object)?;
        save_rmap(dir.join(format!("{stem}.rmap")), &inst.observation()?)?;
        rows.push(ManifestRow {
            file: format!("{split}/{stem}.cimg"),
            seed: inst_seed,
            kind: inst.kind,
            defects: params.n_defects,
            q: format!("{} {}", q[0], q[1]),
        });
    }
    let mut wr = csv::Writer::from_path(dir.join("manifest.csv"))?;
    for r in &rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64, defects: usize, convex: bool) -> CrystalInstance {
        simulate_crystal_with(
            seed,
            &CrystalParams {
                geometry: CrystalGeometry::scaled(32),
                n_points: 9,
                n_defects: defects,
                convex,
                q: [1.0, 0.0],
            },
        )
        .unwrap()
    }

    #[test]
    fn no_defects_gives_real_indicator() {
        let c = small(3, 0, true);
        assert!(c.phase.iter().all(|&p| p == 0.0));
        for (z, &s) in c.object.data().iter().zip(c.support.data()) {
            assert_eq!(z.im, 0.0);
            assert_eq!(z.re, if s { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn modulus_is_zero_or_one_and_support_is_contained() {
        for seed in 0..20 {
            let c = small(seed, (seed % 5) as usize, seed % 2 == 0);
            let g = CrystalGeometry::scaled(32);
            let lo = (g.grid - g.region) / 2;
            for i in 0..32 {
                for j in 0..32 {
                    let m = c.object.get(i, j).norm();
                    assert!(m == 0.0 || (m - 1.0).abs() < 1e-15);
                    assert_eq!(m > 0.5, c.support.get(i, j));
                    if c.support.get(i, j) {
                        assert!(i >= lo && i < lo + g.region && j >= lo && j < lo + g.region);
                    }
                }
            }
        }
    }

    #[test]
    fn default_geometry_is_110_on_128() {
        let c = simulate_crystal(5, 8, 1, false).unwrap();
        assert_eq!(c.object.shape(), (128, 128));
        for i in 0..128 {
            for j in 0..128 {
                if c.support.get(i, j) {
                    assert!((9..119).contains(&i) && (9..119).contains(&j));
                }
            }
        }
    }

    #[test]
    fn phase_variation_grows_with_defects() {
        for seed in [1u64, 2, 3] {
            let tv0 = small(seed, 0, true).phase_variation();
            let tv8 = small(seed, 8, true).phase_variation();
            assert_eq!(tv0, 0.0);
            assert!(tv8 > tv0, "seed {seed}");
            let tv: Vec<f64> = DEFECT_LEVELS
                .iter()
                .map(|&d| small(seed, d, true).phase_variation())
                .collect();
            assert!(tv[4] > tv[1], "seed {seed}: {tv:?}");
        }
    }

    #[test]
    fn defect_count_keeps_support() {
        assert_eq!(small(9, 0, false).support, small(9, 8, false).support);
    }

    #[test]
    fn parseval_on_observation() {
        let c = small(4, 2, false);
        let y = c.observation().unwrap();
        assert_eq!(y.shape(), (64, 64));
        assert!((y.sum() - c.area() as f64).abs() < 1e-9);
    }

    #[test]
    fn simulation_is_deterministic() {
        let a = small(11, 4, false);
        let b = small(11, 4, false);
        assert_eq!(a.object, b.object);
        assert_eq!(a.defects, b.defects);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(simulate_crystal(0, 2, 0, true).is_err());
        let p = CrystalParams {
            q: [0.0, 0.0],
            ..CrystalParams::default()
        };
        assert!(simulate_crystal_with(0, &p).is_err());
    }

    #[test]
    fn wrap_phase_range() {
        for k in -50..50 {
            let p = k as f64 * 0.77;
            let w = wrap_phase(p);
            assert!(w > -PI && w <= PI);
            assert!(((p - w) / TAU - ((p - w) / TAU).round()).abs() < 1e-9);
        }
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
    }

    #[test]
    fn stratification_arithmetic() {
        let mut per_level = [0usize; 5];
        for i in 0..10 {
            let (_, d) = dataset_cell(i);
            per_level[DEFECT_LEVELS.iter().position(|&x| x == d).unwrap()] += 1;
        }
        assert_eq!(per_level, [2; 5]);
    }

    #[test]
    fn dataset_is_written_and_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let g = CrystalGeometry::scaled(16);
        let rows = generate_dataset(4, dir.path().join("a"), "test", 7, g, [1.0, 0.0]).unwrap();
        generate_dataset(4, dir.path().join("b"), "test", 7, g, [1.0, 0.0]).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            let a = fs::read(dir.path().join("a").join(&r.file)).unwrap();
            let b = fs::read(dir.path().join("b").join(&r.file)).unwrap();
            assert_eq!(a, b);
        }
        let manifest = fs::read_to_string(dir.path().join("a/test/manifest.csv")).unwrap();
        assert_eq!(manifest.lines().count(), 5);
        assert!(generate_dataset(0, dir.path(), "test", 1, g, [1.0, 0.0]).is_err());
    }
}

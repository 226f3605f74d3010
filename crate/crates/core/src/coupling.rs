//! Mutual impedance between two sphere-bounded antennas and assembly of the
//! transmit/receive array impedance matrices.
//!
//! The pairwise coupling model for two elements separated by `d` [m], with
//! axis rotations `beta` and `gamma` [rad] w.r.t. their connecting axis, is
//!
//! ```text
//! MC(d, beta, gamma) = -3 sqrt(Re{Z_t} Re{Z_r})
//!     * [ sin(beta) sin(gamma) / 2 * ( 1/(j k0 d) + 1/(j k0 d)^2 + 1/(j k0 d)^3 )
//!       + cos(beta) cos(gamma)     * (               1/(j k0 d)^2 + 1/(j k0 d)^3 ) ]
//!     * exp(-j k0 d)
//! ```
//!
//! with `k0 = 2 pi f / c` and `Re{Z}` the self-resistances of the two
//! elements. A uniform linear array uses one triplet per element pair:
//! colinear orientation is `(beta, gamma) = (0, pi)`, parallel is
//! `(pi/2, pi/2)`, and the pair distance is `|p - q| * delta`.
//!
//! Array matrices are symmetric Toeplitz: the diagonal holds the element
//! self-impedance, off-diagonals the mutual terms (or zero for the
//! weakly-coupled baseline, where the matrices are diagonal).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chu::ChuElement;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Hard floor on the spacing-to-antenna-size ratio `delta/a` for arrays with
/// more than one element; smaller ratios are rejected outright.
pub const MIN_SPACING_RATIO: f64 = 4.0 / 3.0;

/// Below this ratio neighboring spheres overlap and the coupling model is an
/// approximation; results are flagged rather than rejected.
pub const OVERLAP_RATIO: f64 = 2.0;

/// Relative tolerance for the reciprocity (symmetry) check of imported
/// impedance matrices.
pub const IMPORT_SYMMETRY_TOL: f64 = 1e-6;

/// Relative orientation of the element axes within a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    /// Element axes along the array axis: `(beta, gamma) = (0, pi)`.
    Colinear,
    /// Element axes perpendicular to the array axis: `(beta, gamma) = (pi/2, pi/2)`.
    Parallel,
    /// Explicit rotation angles [rad] w.r.t. the connecting axis.
    Custom { beta: f64, gamma: f64 },
}

impl Orientation {
    /// The `(beta, gamma)` pair fed to the coupling model.
    pub fn angles(&self) -> (f64, f64) {
        match *self {
            Orientation::Colinear => (0.0, std::f64::consts::PI),
            Orientation::Parallel => (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            Orientation::Custom { beta, gamma } => (beta, gamma),
        }
    }

    /// Short name used in configs and table output.
    pub fn name(&self) -> &'static str {
        match self {
            Orientation::Colinear => "colinear",
            Orientation::Parallel => "parallel",
            Orientation::Custom { .. } => "custom",
        }
    }

    /// Parses `colinear` or `parallel`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "colinear" => Ok(Orientation::Colinear),
            "parallel" => Ok(Orientation::Parallel),
            other => Err(Error::Config(format!(
                "unknown orientation `{other}` (expected `colinear` or `parallel`)"
            ))),
        }
    }
}

/// One uniform linear array: element count, spacing `delta` [m], element
/// orientation, and the common element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    count: usize,
    spacing: f64,
    orientation: Orientation,
    element: ChuElement,
}

impl ArrayGeometry {
    /// Creates an array geometry.
    ///
    /// Requires `count >= 1` and `spacing > 0`. For `count >= 2` the
    /// spacing-to-antenna-size ratio must satisfy `delta/a >=`
    /// [`MIN_SPACING_RATIO`]; a single element carries no pair geometry and
    /// is exempt (large reference antennas use this).
    pub fn new(
        count: usize,
        spacing: f64,
        orientation: Orientation,
        element: ChuElement,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation("array count must be at least 1".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Validation(format!(
                "array spacing must be positive and finite, got {spacing:e} m"
            )));
        }
        let geom = Self { count, spacing, orientation, element };
        if count >= 2 && geom.spacing_ratio() < MIN_SPACING_RATIO {
            return Err(Error::Validation(format!(
                "spacing-to-antenna-size ratio {:.6} below the {:.6} floor",
                geom.spacing_ratio(),
                MIN_SPACING_RATIO
            )));
        }
        Ok(geom)
    }

    /// Single-element array; the spacing is immaterial.
    pub fn single(element: ChuElement) -> Self {
        Self { count: 1, spacing: 1.0, orientation: Orientation::Colinear, element }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn element(&self) -> &ChuElement {
        &self.element
    }

    /// Spacing-to-antenna-size ratio `delta/a`.
    pub fn spacing_ratio(&self) -> f64 {
        self.spacing / self.element.radius_a()
    }

    /// Whether neighboring spheres overlap (`delta/a < 2` with `count >= 2`),
    /// i.e. the coupling model runs in its approximate regime.
    pub fn overlapping_spheres(&self) -> bool {
        self.count >= 2 && self.spacing_ratio() < OVERLAP_RATIO
    }

    /// Distance between elements `p` and `q` (0-based): `|p - q| * delta`.
    pub fn pair_distance(&self, p: usize, q: usize) -> f64 {
        (p as f64 - q as f64).abs() * self.spacing
    }
}

/// A square complex impedance matrix evaluated at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceMatrix {
    /// Evaluation frequency [Hz].
    pub frequency: f64,
    /// Entries [ohm].
    pub entries: DMatrix<Complex64>,
    /// Set when the generating geometry had overlapping spheres, marking the
    /// coupling model as approximate. Imported matrices leave this unset.
    pub overlapping: bool,
}

impl ImpedanceMatrix {
    /// Matrix dimension (element count).
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Real part of the entries as a real matrix.
    pub fn real_part(&self) -> DMatrix<f64> {
        self.entries.map(|z| z.re)
    }

    /// Checks reciprocity: `Z[p][q] == Z[q][p]` within `rel_tol` relative to
    /// the largest entry magnitude.
    pub fn validate_symmetric(&self, rel_tol: f64) -> Result<()> {
        let n = self.dim();
        let scale = self
            .entries
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for p in 0..n {
            for q in (p + 1)..n {
                let dev = (self.entries[(p, q)] - self.entries[(q, p)]).norm();
                if dev > rel_tol * scale {
                    return Err(Error::Validation(format!(
                        "impedance matrix violates reciprocity at ({p},{q}): \
                         relative deviation {:.3e} exceeds {rel_tol:.1e}",
                        dev / scale
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the text table format: a `# f=<Hz> n=<count>` header,
    /// then `n` rows of `n` comma-separated `re+imj` entries.
    pub fn to_table(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        out.push_str(&format!("# f={:.16e} n={}\n", self.frequency, n));
        for p in 0..n {
            let row: Vec<String> = (0..n).map(|q| format_complex(self.entries[(p, q)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Mutual impedance [ohm] between two elements at distance `d` [m] with axis
/// rotations `beta`, `gamma` [rad], evaluated at frequency `f` [Hz].
pub fn mutual_impedance(
    tx: &ChuElement,
    rx: &ChuElement,
    d: f64,
    beta: f64,
    gamma: f64,
    f: f64,
) -> Result<Complex64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "antenna separation must be positive and finite, got {d:e} m (coincident antennas undefined)"
        )));
    }
    let (re_t, _) = tx.self_impedance_parts(f)?;
    let (re_r, _) = rx.self_impedance_parts(f)?;
    let k0 = 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
    let x = k0 * d;
    let jx = Complex64::new(0.0, x);
    let inv1 = jx.inv();
    let inv2 = inv1 * inv1;
    let inv3 = inv2 * inv1;
    let radial = 0.5 * beta.sin() * gamma.sin();
    let axial = beta.cos() * gamma.cos();
    let envelope = radial * (inv1 + inv2 + inv3) + axial * (inv2 + inv3);
    let phase = Complex64::new(0.0, -x).exp();
    Ok(-3.0 * (re_t * re_r).sqrt() * envelope * phase)
}

/// Full array impedance matrix at frequency `f` [Hz].
///
/// The diagonal is the element self-impedance. Off-diagonals are the mutual
/// coupling terms when `coupled` is set and zero for the weakly-coupled
/// baseline. Only `count - 1` distinct mutual terms are evaluated; the
/// Toeplitz structure fills the rest.
pub fn array_impedance(geom: &ArrayGeometry, f: f64, coupled: bool) -> Result<ImpedanceMatrix> {
    let n = geom.count();
    let z_self = geom.element().self_impedance(f)?;
    let mut first_row = vec![Complex64::new(0.0, 0.0); n];
    first_row[0] = z_self;
    if coupled {
        let (beta, gamma) = geom.orientation().angles();
        for (lag, slot) in first_row.iter_mut().enumerate().skip(1) {
            *slot = mutual_impedance(
                geom.element(),
                geom.element(),
                lag as f64 * geom.spacing(),
                beta,
                gamma,
                f,
            )?;
        }
    }
    let entries = DMatrix::from_fn(n, n, |p, q| first_row[p.abs_diff(q)]);
    Ok(ImpedanceMatrix { frequency: f, entries, overlapping: coupled && geom.overlapping_spheres() })
}

/// Parses an impedance matrix from the text table format produced by
/// [`ImpedanceMatrix::to_table`]; validates squareness and reciprocity.
pub fn load_impedance_matrix(text: &str) -> Result<ImpedanceMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty impedance table".into()))?
        .trim();
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("missing `# f=<Hz> n=<count>` header".into()))?
        .trim();
    let mut frequency = None;
    let mut n = None;
    for token in header.split_whitespace() {
        if let Some(v) = token.strip_prefix("f=") {
            frequency = Some(v.parse::<f64>().map_err(|e| {
                Error::Format(format!("bad frequency `{v}` in header: {e}"))
            })?);
        } else if let Some(v) = token.strip_prefix("n=") {
            n = Some(v.parse::<usize>().map_err(|e| {
                Error::Format(format!("bad count `{v}` in header: {e}"))
            })?);
        }
    }
    let frequency = frequency.ok_or_else(|| Error::Format("header missing `f=` tag".into()))?;
    let n = n.ok_or_else(|| Error::Format("header missing `n=` tag".into()))?;
    if n == 0 {
        return Err(Error::Format("impedance table must have n >= 1".into()));
    }

    let mut entries = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut rows = 0usize;
    for line in lines {
        let cells: Vec<&str> = line.trim().split(',').collect();
        if rows >= n {
            return Err(Error::Format(format!("expected {n} rows, found more")));
        }
        if cells.len() != n {
            return Err(Error::Format(format!(
                "row {} has {} entries, expected {n} (matrix must be square)",
                rows + 1,
                cells.len()
            )));
        }
        for (q, cell) in cells.iter().enumerate() {
            entries[(rows, q)] = parse_complex(cell)?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Format(format!("expected {n} rows, found {rows}")));
    }

    let matrix = ImpedanceMatrix { frequency, entries, overlapping: false };
    matrix.validate_symmetric(IMPORT_SYMMETRY_TOL)?;
    Ok(matrix)
}

/// Formats a complex entry as `re+imj` with 15 significant digits.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.14e}{}{:.14e}j", z.re, sign, z.im.abs())
}

/// Parses a `re+imj` complex entry (decimal or exponent notation).
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s = text.trim();
    let body = s
        .strip_suffix(['j', 'J'])
        .ok_or_else(|| Error::Format(format!("complex entry `{s}` missing trailing j")))?;
    // Split at the sign that starts the imaginary part: the last '+'/'-'
    // that is neither leading nor part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i];
        if (c == b'+' || c == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let split = split.ok_or_else(|| Error::Format(format!("complex entry `{s}` has no imaginary part")))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|e| Error::Format(format!("bad real part in `{s}`: {e}")))?;
    let im: f64 = body[split..]
        .parse()
        .map_err(|e| Error::Format(format!("bad imaginary part in `{s}`: {e}")))?;
    Ok(Complex64::new(re, im))
}

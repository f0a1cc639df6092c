//! Per-user transmit constellations: precoded Grassmannian designs and
//! pilot + QAM designs, each with Gray bit labels.

mod grassmann;
mod io;

pub use grassmann::{optimize_grassmannian, GrassmannianDesign, GrassmannianParams};
pub use io::{parse_constellation, parse_constellations, write_constellation};

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// Largest `B` accepted when enumerating a constellation.
pub const DEFAULT_BITS_CAP: u32 = 20;

const ENERGY_TOL: f64 = 1e-9;

/// A `B`-bit label. Bit 0 is the leftmost character of the printed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Label {
    value: u32,
    bits: u32,
}

impl Label {
    pub fn new(value: u32, bits: u32) -> Self {
        Label { value, bits }
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn bit(&self, j: u32) -> bool {
        (self.value >> (self.bits - 1 - j)) & 1 == 1
    }

    /// Every bit flipped.
    pub fn complement(&self) -> Label {
        let mask = if self.bits == 0 { 0 } else { u32::MAX >> (32 - self.bits) };
        Label::new(!self.value & mask, self.bits)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.bits {
            f.write_str(if self.bit(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Binary-reflected Gray code of `i`.
pub fn gray_label(i: u32, bits: u32) -> Label {
    Label::new(i ^ (i >> 1), bits)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstellationKind {
    /// The unprecoded base set `D` of an optimized design.
    Grassmannian,
    GrassmannianPrecoded { user: usize },
    PilotQam { user: usize, qam_order: usize },
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstellationKind::Grassmannian => write!(f, "grassmannian"),
            ConstellationKind::GrassmannianPrecoded { user } => write!(f, "grassmannian-precoded/{user}"),
            ConstellationKind::PilotQam { user, qam_order } => write!(f, "pilot-qam/{user}/{qam_order}"),
        }
    }
}

impl std::str::FromStr for ConstellationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split('/').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| format!("bad number '{p}' in kind '{s}'"));
        match parts.as_slice() {
            ["grassmannian"] => Ok(ConstellationKind::Grassmannian),
            ["grassmannian-precoded", u] => Ok(ConstellationKind::GrassmannianPrecoded { user: num(u)? }),
            ["pilot-qam", u, q] => Ok(ConstellationKind::PilotQam {
                user: num(u)?,
                qam_order: num(q)?,
            }),
            _ => Err(format!("unknown constellation kind '{s}'")),
        }
    }
}

/// `2^B` complex `T`-vectors with average energy one.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    symbols: Vec<CVec>,
    bits: u32,
    labels: Vec<Label>,
    kind: ConstellationKind,
    users: usize,
}

impl Constellation {
    /// Checks size, label distinctness and the energy normalization.
    /// `users` is the number of users of the system the set was built for.
    pub fn new(symbols: Vec<CVec>, labels: Vec<Label>, kind: ConstellationKind, users: usize) -> Result<Self> {
        let m = symbols.len();
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::Validation(format!("constellation size {m} is not a power of two")));
        }
        let bits = m.trailing_zeros();
        if labels.len() != m {
            return Err(Error::Validation("one label per symbol required".into()));
        }
        let dim = symbols[0].len();
        if symbols.iter().any(|s| s.len() != dim) {
            return Err(Error::Dimension("symbols of unequal length".into()));
        }
        let mut seen = vec![false; m];
        for l in &labels {
            if l.bits != bits || l.value as usize >= m || seen[l.value as usize] {
                return Err(Error::Validation("labels must be distinct B-bit strings".into()));
            }
            seen[l.value as usize] = true;
        }
        if symbols.iter().any(|s| s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::NonFinite("constellation symbols".into()));
        }
        let energy = symbols.iter().map(|s| s.norm_squared()).sum::<f64>() / m as f64;
        if (energy - 1.0).abs() > ENERGY_TOL {
            return Err(Error::Validation(format!("average symbol energy {energy} != 1")));
        }
        if !matches!(kind, ConstellationKind::PilotQam { .. })
            && symbols.iter().any(|s| (s.norm_squared() - 1.0).abs() > ENERGY_TOL)
        {
            return Err(Error::Validation("Grassmannian symbols must have unit norm".into()));
        }
        Ok(Constellation {
            symbols,
            bits,
            labels,
            kind,
            users,
        })
    }

    /// Gray labels in index order.
    pub fn with_gray_labels(symbols: Vec<CVec>, kind: ConstellationKind, users: usize) -> Result<Self> {
        let bits = symbols.len().max(1).trailing_zeros();
        let labels = (0..symbols.len() as u32).map(|i| gray_label(i, bits)).collect();
        Self::new(symbols, labels, kind, users)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbol length `T`.
    pub fn dim(&self) -> usize {
        self.symbols[0].len()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn symbol(&self, i: usize) -> &CVec {
        &self.symbols[i]
    }

    pub fn symbols(&self) -> &[CVec] {
        &self.symbols
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn kind(&self) -> &ConstellationKind {
        &self.kind
    }

    pub fn average_energy(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_squared()).sum::<f64>() / self.len() as f64
    }

    /// `(1/M) Σ_i s_i s_iᴴ`.
    pub fn mean_outer(&self) -> CMat {
        let t = self.dim();
        let mut r = CMat::zeros(t, t);
        for s in &self.symbols {
            r += s * s.adjoint();
        }
        r / C64::from(self.len() as f64)
    }

    /// Orthonormal standard-basis symbols, for small hand-built tests.
    #[doc(hidden)]
    pub fn unit_vectors_for_tests(dim: usize, m: usize) -> Constellation {
        let symbols = (0..m)
            .map(|i| {
                let mut v = CVec::zeros(dim);
                v[i % dim] = C64::from(1.0);
                if i >= dim {
                    v[(i + 1) % dim] = C64::from(1.0);
                    v /= C64::from(2f64.sqrt());
                }
                v
            })
            .collect();
        Constellation::with_gray_labels(symbols, ConstellationKind::Grassmannian, 1).unwrap()
    }
}

/// Minimum pairwise chordal distance `√(1 − |xᴴy|²)` of a set of unit vectors.
pub fn min_chordal_distance(set: &[CVec]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            best = best.min(chordal_distance(&set[i], &set[j]));
        }
    }
    best
}

pub fn chordal_distance(x: &CVec, y: &CVec) -> f64 {
    (1.0 - x.dotc(y).norm_sqr()).max(0.0).sqrt()
}

/// Rotates `v` so that its largest-magnitude entry is real and positive.
pub fn canonical_phase(v: &CVec) -> CVec {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let p = v[best];
    if p.norm() == 0.0 {
        return v.clone();
    }
    v * (p.conj() / p.norm())
}

/// Base set `D` shared by all users plus one precoder per user.
#[derive(Clone, Debug)]
pub struct PrecodedFamily {
    base: Vec<CVec>,
    precoders: Vec<CMat>,
}

impl PrecodedFamily {
    pub fn new(base: Vec<CVec>, precoders: Vec<CMat>) -> Result<Self> {
        let m = base.first().map(|d| d.len()).ok_or_else(|| Error::Validation("empty base set".into()))?;
        if base.iter().any(|d| d.len() != m || (d.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::Validation("base vectors must be unit norm and equal length".into()));
        }
        for u in &precoders {
            if u.ncols() != m || u.nrows() < m {
                return Err(Error::Dimension(format!("precoder is {}x{}, base dim {m}", u.nrows(), u.ncols())));
            }
            let gram = u.adjoint() * u;
            if gram.determinant().norm() < 1e-12 {
                return Err(Error::Validation("precoder must have full column rank".into()));
            }
        }
        Ok(PrecodedFamily { base, precoders })
    }

    /// Default precoders for a `T`, `K` system.
    pub fn with_default_precoders(base: Vec<CVec>, t: usize, k: usize) -> Result<Self> {
        Self::new(base, build_precoders(t, k))
    }

    pub fn base(&self) -> &[CVec] {
        &self.base
    }

    pub fn precoder(&self, k: usize) -> &CMat {
        &self.precoders[k]
    }

    pub fn users(&self) -> usize {
        self.precoders.len()
    }

    pub fn base_constellation(&self) -> Result<Constellation> {
        Constellation::with_gray_labels(self.base.clone(), ConstellationKind::Grassmannian, self.users())
    }

    pub fn constellations(&self) -> Result<Vec<Constellation>> {
        let base = self.base_constellation()?;
        (0..self.users())
            .map(|k| precode(&base, &self.precoders[k], k, self.users()))
            .collect()
    }
}

/// Columns `{k} ∪ {K, …, T−1}` of the unitary `T`-point DFT matrix.
pub fn build_precoders(t: usize, k: usize) -> Vec<CMat> {
    assert!(t > k, "T > K required");
    let scale = 1.0 / (t as f64).sqrt();
    let dft = |row: usize, col: usize| {
        C64::from_polar(scale, -2.0 * std::f64::consts::PI * (row * col) as f64 / t as f64)
    };
    (0..k)
        .map(|user| {
            let cols: Vec<usize> = std::iter::once(user).chain(k..t).collect();
            CMat::from_fn(t, cols.len(), |r, c| dft(r, cols[c]))
        })
        .collect()
}

/// `s_i = U d_i / ‖U d_i‖`, inheriting labels from `base`.
pub fn precode(base: &Constellation, u: &CMat, user: usize, users: usize) -> Result<Constellation> {
    if u.ncols() != base.dim() {
        return Err(Error::Dimension(format!(
            "precoder has {} columns, base dimension is {}",
            u.ncols(),
            base.dim()
        )));
    }
    let symbols = base
        .symbols()
        .iter()
        .map(|d| {
            let s = u * d;
            let norm = s.norm();
            if norm < 1e-14 {
                return Err(Error::ZeroVector);
            }
            Ok(s / C64::from(norm))
        })
        .collect::<Result<Vec<_>>>()?;
    Constellation::new(
        symbols,
        base.labels().to_vec(),
        ConstellationKind::GrassmannianPrecoded { user },
        users,
    )
}

/// QAM alphabet in digit order: digit `d` sits at in-phase level `d / nq` and
/// quadrature level `d % nq`. 8-QAM is the rectangular 4 x 2 grid.
pub fn qam_points(order: usize) -> Result<Vec<C64>> {
    let (ni, nq) = match order {
        4 => (2, 2),
        8 => (4, 2),
        16 => (4, 4),
        _ => return Err(Error::Validation(format!("qam_order must be 4, 8 or 16, got {order}"))),
    };
    let level = |i: usize, n: usize| 2.0 * i as f64 - (n as f64 - 1.0);
    Ok((0..order).map(|d| C64::new(level(d / nq, ni), level(d % nq, nq))).collect())
}

pub fn qam_average_energy(points: &[C64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

/// Pilot `√(K/T) e_k` followed by `T − K` scaled QAM data slots. Symbol `i`
/// writes its slot digits in base `qam_order`, first slot most significant.
pub fn pilot_qam_constellation(t: usize, k: usize, user: usize, qam_order: usize, bits_cap: u32) -> Result<Constellation> {
    if t <= k || user >= k {
        return Err(Error::Validation(format!("T > K violated or user {user} out of range")));
    }
    let points = qam_points(qam_order)?;
    let slots = t - k;
    let bits = slots as u32 * qam_order.trailing_zeros();
    if bits > bits_cap {
        return Err(Error::SizeOverflow { bits, cap: bits_cap });
    }
    let pilot = C64::from((k as f64 / t as f64).sqrt());
    // P_avg is taken per data vector, (T - K) times the scalar QAM energy, so
    // that the average symbol energy is exactly one for any number of slots
    let p_vec = slots as f64 * qam_average_energy(&points);
    let data = (slots as f64 / (t as f64 * p_vec)).sqrt();
    let m = 1usize << bits;
    let symbols = (0..m)
        .map(|i| {
            let mut s = CVec::zeros(t);
            s[user] = pilot;
            let mut rest = i;
            for slot in (0..slots).rev() {
                s[k + slot] = points[rest % qam_order] * data;
                rest /= qam_order;
            }
            s
        })
        .collect();
    Constellation::with_gray_labels(symbols, ConstellationKind::PilotQam { user, qam_order }, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        let v = CVec::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let norm = v.norm();
        v / C64::from(norm)
    }

    #[test]
    fn gray_labels() {
        assert_eq!(gray_label(0, 3).to_string(), "000");
        assert_eq!(gray_label(1, 3).to_string(), "001");
        for bits in 1..=6u32 {
            let labels: Vec<Label> = (0..1u32 << bits).map(|i| gray_label(i, bits)).collect();
            let mut vals: Vec<u32> = labels.iter().map(|l| l.value()).collect();
            vals.sort();
            vals.dedup();
            assert_eq!(vals.len(), 1 << bits);
            for w in labels.windows(2) {
                assert_eq!((w[0].value() ^ w[1].value()).count_ones(), 1);
            }
        }
    }

    #[test]
    fn label_bits_read_left_to_right() {
        let l = Label::new(0b101, 3);
        assert!(l.bit(0) && !l.bit(1) && l.bit(2));
        assert_eq!(l.complement().to_string(), "010");
    }

    #[test]
    fn chordal_distance_cases() {
        let e = |i| {
            let mut v = CVec::zeros(2);
            v[i] = C64::from(1.0);
            v
        };
        assert!((min_chordal_distance(&[e(0), e(1)]) - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_unit(&mut rng, 3);
        let rotated = &v * C64::from_polar(1.0, 0.77);
        assert!(min_chordal_distance(&[v.clone(), rotated]) < 1e-7);

        let set: Vec<CVec> = (0..7).map(|_| random_unit(&mut rng, 3)).collect();
        // independent scan through explicit inner-product sums
        let mut best = f64::INFINITY;
        for i in 0..set.len() {
            for j in 0..set.len() {
                if i != j {
                    let ip: C64 = (0..3).map(|n| set[i][n].conj() * set[j][n]).sum();
                    best = best.min((1.0 - ip.norm() * ip.norm()).sqrt());
                }
            }
        }
        assert!((min_chordal_distance(&set) - best).abs() < 1e-12);
    }

    #[test]
    fn precoders_are_orthonormal() {
        let u = build_precoders(4, 1);
        assert_eq!(u[0].shape(), (4, 4));
        assert!((u[0].adjoint() * &u[0] - CMat::identity(4, 4)).norm() < 1e-12);
        for u in build_precoders(3, 2) {
            assert_eq!(u.shape(), (3, 2));
            assert!((u.adjoint() * &u - CMat::identity(2, 2)).norm() < 1e-12);
        }
    }

    #[test]
    fn precoder_subspaces_are_distinct() {
        let u = build_precoders(6, 3);
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    let sv = (u[j].adjoint() * &u[k]).singular_values();
                    assert!(sv.iter().cloned().fold(f64::INFINITY, f64::min) < 1.0 - 1e-6);
                }
            }
        }
    }

    #[test]
    fn precoding_is_isometric_and_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base: Vec<CVec> = (0..4).map(|_| random_unit(&mut rng, 2)).collect();
        let family = PrecodedFamily::with_default_precoders(base.clone(), 3, 2).unwrap();
        let cons = family.constellations().unwrap();
        for (k, c) in cons.iter().enumerate() {
            for (i, s) in c.symbols().iter().enumerate() {
                assert!((s.norm() - 1.0).abs() < 1e-12);
                assert!((s - family.precoder(k) * &base[i]).norm() < 1e-12);
            }
        }
        assert!((cons[0].symbol(0) - cons[1].symbol(0)).norm() > 1e-3);
    }

    #[test]
    fn zero_precoded_vector_rejected() {
        let base = Constellation::unit_vectors_for_tests(2, 2);
        let u = CMat::from_fn(3, 2, |r, c| if r == 0 && c == 0 { C64::from(1.0) } else { C64::from(0.0) });
        assert!(matches!(precode(&base, &u, 0, 1), Err(Error::ZeroVector)));
    }

    #[test]
    fn pilot_qam_shapes() {
        let c = pilot_qam_constellation(3, 2, 1, 4, DEFAULT_BITS_CAP).unwrap();
        assert_eq!(c.len(), 4);
        let p = (2.0f64 / 3.0).sqrt();
        for s in c.symbols() {
            assert!((s[0]).norm() == 0.0 && (s[1] - C64::from(p)).norm() < 1e-15);
        }
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
        let c = pilot_qam_constellation(6, 3, 0, 8, DEFAULT_BITS_CAP).unwrap();
        assert_eq!((c.bits(), c.len()), (9, 512));
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
        assert!(matches!(
            pilot_qam_constellation(8, 2, 0, 16, DEFAULT_BITS_CAP),
            Err(Error::SizeOverflow { bits: 24, cap: 20 })
        ));
    }

    #[test]
    fn joint_covariances_are_identifiable() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base: Vec<CVec> = (0..4).map(|_| random_unit(&mut rng, 2)).collect();
        let cons = PrecodedFamily::with_default_precoders(base, 3, 2).unwrap().constellations().unwrap();
        let mut covs = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                let a = cons[0].symbol(i);
                let b = cons[1].symbol(j);
                covs.push(a * a.adjoint() + b * b.adjoint());
            }
        }
        for x in 0..covs.len() {
            for y in x + 1..covs.len() {
                assert!((&covs[x] - &covs[y]).norm() > 1e-8);
            }
        }
    }

    #[test]
    fn kind_tokens_roundtrip() {
        for k in [
            ConstellationKind::Grassmannian,
            ConstellationKind::GrassmannianPrecoded { user: 2 },
            ConstellationKind::PilotQam { user: 1, qam_order: 8 },
        ] {
            assert_eq!(k.to_string().parse::<ConstellationKind>().unwrap(), k);
        }
        assert!("qam".parse::<ConstellationKind>().is_err());
    }
}

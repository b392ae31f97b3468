//! Exact linear algebra over a prime field F_p.
//!
//! Provides row reduction and canonical row spans, a bit encoding of
//! subspaces (used to read a subspace out of an oracle one bit at a time),
//! and the affine↔linear lift: an affine subspace of F_p^{k+1} is stored as
//! the slice {z : (z,1) ∈ W} of a linear subspace W ⊆ F_p^{k+2}.

use crate::{Error, Result};

/// Trial-division primality check; moduli are small machine integers.
pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    let p64 = p as u64;
    while d * d <= p64 {
        if p64 % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Number of bits needed for a residue in [0, p), i.e. ⌈log₂ p⌉.
pub fn residue_bits(p: u32) -> usize {
    p.next_power_of_two().trailing_zeros() as usize
}

fn addm(a: u32, b: u32, p: u32) -> u32 {
    let s = a as u64 + b as u64;
    (s % p as u64) as u32
}

fn subm(a: u32, b: u32, p: u32) -> u32 {
    addm(a, p - b % p, p)
}

fn mulm(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

fn powm(mut a: u32, mut e: u32, p: u32) -> u32 {
    let mut acc = 1u32;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulm(acc, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    acc
}

/// Multiplicative inverse mod p (p prime, a ≠ 0 mod p).
fn invm(a: u32, p: u32) -> u32 {
    debug_assert!(a % p != 0);
    powm(a, p - 2, p)
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Dense row-major matrix over F_p. Entries are kept reduced mod p.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FpMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl FpMatrix {
    pub fn new(p: u32, rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        let entries = entries.into_iter().map(|e| e % p).collect();
        Ok(FpMatrix { p, rows, cols, entries })
    }

    pub fn from_rows(p: u32, rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(p, rows.len(), cols, rows.concat())
    }

    pub fn identity(p: u32, n: usize) -> Result<Self> {
        let mut m = Self::new(p, n, n, vec![0; n * n])?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Reduced row echelon form and rank.
    pub fn rref(&self) -> (FpMatrix, usize) {
        let p = self.p;
        let mut m = self.clone();
        let mut pivot_row = 0usize;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            let Some(r) = (pivot_row..m.rows).find(|&r| m.entry(r, col) != 0) else {
                continue;
            };
            if r != pivot_row {
                for j in 0..m.cols {
                    m.entries.swap(r * m.cols + j, pivot_row * m.cols + j);
                }
            }
            let inv = invm(m.entry(pivot_row, col), p);
            for j in 0..m.cols {
                let e = m.entry(pivot_row, j);
                m.entries[pivot_row * m.cols + j] = mulm(e, inv, p);
            }
            for r2 in 0..m.rows {
                if r2 == pivot_row {
                    continue;
                }
                let f = m.entry(r2, col);
                if f == 0 {
                    continue;
                }
                for j in 0..m.cols {
                    let e = subm(m.entry(r2, j), mulm(f, m.entry(pivot_row, j), p), p);
                    m.entries[r2 * m.cols + j] = e;
                }
            }
            pivot_row += 1;
        }
        (m, pivot_row)
    }

    pub fn rank(&self) -> usize {
        self.rref().1
    }

    /// Row span as a canonical [`Subspace`].
    pub fn canonical_span(&self) -> Subspace {
        let (r, rank) = self.rref();
        let basis = FpMatrix {
            p: self.p,
            rows: rank,
            cols: self.cols,
            entries: r.entries[..rank * self.cols].to_vec(),
        };
        Subspace { ambient_dim: self.cols, basis }
    }
}

/// Parses the fixture format: first line `p rows cols`, then row-major
/// integers, whitespace-separated (line breaks do not matter).
pub fn parse_matrix(text: &str) -> Result<FpMatrix> {
    let mut nums = text.split_whitespace();
    let mut next = |what: &str| -> Result<u64> {
        nums.next()
            .ok_or_else(|| Error::Parse(format!("matrix fixture missing {what}")))?
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("matrix fixture: bad {what}")))
    };
    let p = next("modulus")? as u32;
    let rows = next("row count")? as usize;
    let cols = next("column count")? as usize;
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        entries.push(next("entry")? as u32);
    }
    if nums.next().is_some() {
        return Err(Error::Parse("matrix fixture has trailing entries".into()));
    }
    FpMatrix::new(p, rows, cols, entries)
}

pub fn format_matrix(m: &FpMatrix) -> String {
    let mut out = format!("{} {} {}\n", m.p, m.rows, m.cols);
    for i in 0..m.rows {
        let row: Vec<String> = m.row(i).iter().map(u32::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Subspaces
// ---------------------------------------------------------------------------

/// A linear subspace of F_p^n, canonically represented by its RREF basis.
/// Two values are equal iff they are the same point set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient_dim: usize,
    basis: FpMatrix,
}

impl Subspace {
    /// The zero subspace of F_p^n.
    pub fn zero(p: u32, ambient_dim: usize) -> Result<Self> {
        Ok(Subspace { ambient_dim, basis: FpMatrix::new(p, 0, ambient_dim, vec![])? })
    }

    pub fn p(&self) -> u32 {
        self.basis.p
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    /// RREF basis, one row per dimension.
    pub fn basis(&self) -> &FpMatrix {
        &self.basis
    }

    /// Membership test by reduction against the RREF basis.
    pub fn contains(&self, v: &[u32]) -> bool {
        if v.len() != self.ambient_dim {
            return false;
        }
        let p = self.basis.p;
        let mut v: Vec<u32> = v.iter().map(|&x| x % p).collect();
        for r in 0..self.basis.rows {
            let pivot = (0..self.ambient_dim).find(|&j| self.basis.entry(r, j) != 0);
            let Some(j) = pivot else { continue };
            let f = v[j];
            if f != 0 {
                for t in 0..self.ambient_dim {
                    v[t] = subm(v[t], mulm(f, self.basis.entry(r, t), p), p);
                }
            }
        }
        v.iter().all(|&x| x == 0)
    }

    /// All p^dim points, in lexicographic order of basis coefficients.
    pub fn points(&self) -> Result<Vec<Vec<u32>>> {
        let p = self.basis.p;
        let d = self.dim();
        let count = (p as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if count > 10_000_000 {
            return Err(Error::GuardExceeded { needed: count, limit: 10_000_000 });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut coeff = vec![0u32; d];
        loop {
            let mut v = vec![0u32; self.ambient_dim];
            for (r, &c) in coeff.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for j in 0..self.ambient_dim {
                    v[j] = addm(v[j], mulm(c, self.basis.entry(r, j), p), p);
                }
            }
            out.push(v);
            // odometer increment
            let mut i = d;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                coeff[i] += 1;
                if coeff[i] < p {
                    break;
                }
                coeff[i] = 0;
            }
        }
    }
}

/// Serializes a subspace of F_p^{k+2} of dimension i ≥ 1 as exactly
/// m_i = (k+2)·i·⌈log₂ p⌉ bits: the RREF basis row-major, each residue as
/// ⌈log₂ p⌉ big-endian bits.
pub fn encode_subspace(w: &Subspace, k: usize) -> Result<Vec<bool>> {
    if w.ambient_dim != k + 2 {
        return Err(Error::Shape(format!(
            "subspace of F_p^{} cannot be encoded at arity parameter k={k}",
            w.ambient_dim
        )));
    }
    if w.dim() == 0 {
        return Err(Error::Invalid("cannot encode the zero subspace (degenerate span)".into()));
    }
    let nbits = residue_bits(w.p());
    let mut bits = Vec::with_capacity(encoded_len(w.p(), k, w.dim()));
    for r in 0..w.dim() {
        for j in 0..w.ambient_dim {
            let e = w.basis.entry(r, j);
            for t in (0..nbits).rev() {
                bits.push((e >> t) & 1 == 1);
            }
        }
    }
    Ok(bits)
}

/// m_i = (k+2)·i·⌈log₂ p⌉, the exact encoding length for dimension `dim`.
pub fn encoded_len(p: u32, k: usize, dim: usize) -> usize {
    (k + 2) * dim * residue_bits(p)
}

/// Inverse of [`encode_subspace`]. Rejects bit strings whose residues are out
/// of range or whose rows are not an RREF basis of the claimed dimension.
pub fn decode_subspace(bits: &[bool], p: u32, k: usize, dim: usize) -> Result<Subspace> {
    if dim == 0 {
        return Err(Error::Invalid("dimension 0 has no encoding".into()));
    }
    let nbits = residue_bits(p);
    let ambient = k + 2;
    if bits.len() != encoded_len(p, k, dim) {
        return Err(Error::InvalidDecode(format!(
            "expected {} bits for dim {dim}, got {}",
            encoded_len(p, k, dim),
            bits.len()
        )));
    }
    let mut entries = Vec::with_capacity(dim * ambient);
    for chunk in bits.chunks(nbits) {
        let mut e = 0u32;
        for &b in chunk {
            e = (e << 1) | b as u32;
        }
        if e >= p {
            return Err(Error::InvalidDecode(format!("residue {e} out of range for p={p}")));
        }
        entries.push(e);
    }
    let m = FpMatrix::new(p, dim, ambient, entries)?;
    let (r, rank) = m.rref();
    if rank != dim || r != m {
        return Err(Error::InvalidDecode(
            "bits are not an RREF basis of the claimed dimension".into(),
        ));
    }
    Ok(Subspace { ambient_dim: ambient, basis: m })
}

// ---------------------------------------------------------------------------
// Affine slices
// ---------------------------------------------------------------------------

/// The affine subspace {z ∈ F_p^{k+1} : (z,1) ∈ lift} of a linear subspace
/// lift ⊆ F_p^{k+2}. May be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSubspace {
    ambient_dim: usize,
    lift: Subspace,
}

impl AffineSubspace {
    pub fn p(&self) -> u32 {
        self.lift.p()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn lift(&self) -> &Subspace {
        &self.lift
    }

    pub fn contains(&self, z: &[u32]) -> bool {
        if z.len() != self.ambient_dim {
            return false;
        }
        let mut v = z.to_vec();
        v.push(1);
        self.lift.contains(&v)
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.points()?.is_empty())
    }

    /// All member points (deduped; order follows the lift's coefficient order).
    pub fn points(&self) -> Result<Vec<Vec<u32>>> {
        let mut out = Vec::new();
        for mut v in self.lift.points()? {
            if v[self.ambient_dim] == 1 {
                v.pop();
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Slices a linear subspace of F_p^{k+2} at last coordinate 1.
pub fn affine_slice(w: &Subspace) -> Result<AffineSubspace> {
    if w.ambient_dim() == 0 {
        return Err(Error::Shape("cannot slice a 0-dimensional ambient space".into()));
    }
    Ok(AffineSubspace { ambient_dim: w.ambient_dim() - 1, lift: w.clone() })
}

/// ±1 indicator of the hyperplane z_ℓ = a_1 z_1 + … + a_{ℓ−1} z_{ℓ−1} + a_ℓ.
pub fn hyperplane_indicator(a: &[u32], z: &[u32], p: u32) -> Result<i8> {
    if a.len() != z.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "hyperplane parameter length {} vs point length {}",
            a.len(),
            z.len()
        )));
    }
    let l = a.len();
    let mut rhs = a[l - 1] % p;
    for i in 0..l - 1 {
        rhs = addm(rhs, mulm(a[i], z[i], p), p);
    }
    Ok(if z[l - 1] % p == rhs { 1 } else { -1 })
}

/// All distinct d-dimensional subspaces of F_p^n, canonical and sorted.
/// Exhaustive generation is guarded by p^(n·d) ≤ 10^7 candidate matrices.
pub fn enumerate_subspaces(ambient: usize, dim: usize, p: u32) -> Result<Vec<Subspace>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if dim > ambient {
        return Err(Error::Invalid(format!("dim {dim} exceeds ambient {ambient}")));
    }
    if dim == 0 {
        return Ok(vec![Subspace::zero(p, ambient)?]);
    }
    if dim == ambient {
        let full = FpMatrix::identity(p, ambient)?.canonical_span();
        return Ok(vec![full]);
    }
    let cells = (ambient * dim) as u32;
    let count = (p as u128).checked_pow(cells).unwrap_or(u128::MAX);
    if count > 10_000_000 {
        return Err(Error::GuardExceeded { needed: count, limit: 10_000_000 });
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut entries = vec![0u32; ambient * dim];
    loop {
        let m = FpMatrix { p, rows: dim, cols: ambient, entries: entries.clone() };
        let w = m.canonical_span();
        if w.dim() == dim && seen.insert(w.basis.entries.clone()) {
            out.push(w);
        }
        let mut i = entries.len();
        loop {
            if i == 0 {
                out.sort_by(|a, b| a.basis.entries.cmp(&b.basis.entries));
                return Ok(out);
            }
            i -= 1;
            entries[i] += 1;
            if entries[i] < p {
                break;
            }
            entries[i] = 0;
        }
    }
}

/// Gaussian binomial coefficient: the number of d-dimensional subspaces of
/// F_p^n. Independent counting oracle for `enumerate_subspaces`.
pub fn gaussian_binomial(n: usize, d: usize, p: u32) -> u128 {
    if d > n {
        return 0;
    }
    let mut num = 1u128;
    let mut den = 1u128;
    let p = p as u128;
    for i in 0..d {
        num *= p.pow((n - i) as u32) - 1;
        den *= p.pow((d - i) as u32) - 1;
    }
    num / den
}

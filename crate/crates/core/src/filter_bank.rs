//! Linear filter set defining the image prior: storage, the FOEBANK text
//! format, and a deterministic analytic substitute bank.
//!
//! Banks are either imported from a FOEBANK file (e.g. filters learned
//! elsewhere) or generated as the non-constant part of the 2-D DCT basis.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Square convolution kernel, row-major taps.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    /// Panics unless `taps.len() == size * size` and `size >= 1`.
    pub fn new(size: usize, taps: Vec<f64>) -> Self {
        assert!(size >= 1, "kernel side length must be at least 1");
        assert_eq!(taps.len(), size * size, "kernel taps must be size x size");
        Kernel { size, taps }
    }

    /// Centered unit impulse (identity under periodic convolution).
    pub fn impulse(size: usize) -> Self {
        assert!(size % 2 == 1, "impulse kernel needs an odd side length");
        let mut taps = alloc::vec![0.0; size * size];
        taps[(size / 2) * size + size / 2] = 1.0;
        Kernel { size, taps }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.size + col]
    }

    /// Point reflection through the center tap.
    pub fn reflected(&self) -> Kernel {
        let s = self.size;
        let mut taps = self.taps.clone();
        taps.reverse();
        Kernel { size: s, taps }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.taps.iter().map(|t| t * t).sum())
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Frobenius inner product with another kernel of the same size.
    pub fn inner(&self, other: &Kernel) -> f64 {
        assert_eq!(self.size, other.size, "kernel size mismatch");
        self.taps
            .iter()
            .zip(&other.taps)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// One expert: a kernel and its positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub kernel: Kernel,
    pub weight: f64,
}

/// Where the bank came from; echoed in run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankSource {
    Imported,
    Substitute,
}

impl fmt::Display for BankSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BankSource::Imported => f.write_str("imported"),
            BankSource::Substitute => f.write_str("substitute"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filters: Vec<Filter>,
    source: BankSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BankError {
    /// First line is not `FOEBANK 1`.
    Header,
    /// Count line is missing or unparseable.
    Counts,
    /// Declared side length is even or zero.
    EvenKernel { size: usize },
    /// Bank declares zero filters.
    Empty,
    /// Weight line missing or not a finite number.
    MalformedWeight { filter: usize },
    NonPositiveWeight { filter: usize },
    /// Kernel row missing, short, long, or unparseable.
    KernelRow { filter: usize, row: usize },
    /// Extra non-empty content after the declared filters.
    TrailingData,
    /// substitute_bank: more kernels requested than the non-constant basis has.
    CountExceedsBasis { size: usize, count: usize },
}

impl fmt::Display for BankError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BankError::Header => f.write_str("missing or malformed FOEBANK header"),
            BankError::Counts => f.write_str("malformed filter count line"),
            BankError::EvenKernel { size } => {
                write!(f, "kernel side length {size} must be odd and positive")
            }
            BankError::Empty => f.write_str("bank declares no filters"),
            BankError::MalformedWeight { filter } => {
                write!(f, "malformed weight at filter {filter}")
            }
            BankError::NonPositiveWeight { filter } => {
                write!(f, "non-positive weight at filter {filter}")
            }
            BankError::KernelRow { filter, row } => {
                write!(f, "malformed kernel row {row} at filter {filter}")
            }
            BankError::TrailingData => f.write_str("trailing data after last filter"),
            BankError::CountExceedsBasis { size, count } => write!(
                f,
                "requested {count} kernels but the {size}x{size} basis has only {} non-constant members",
                size * size - 1
            ),
        }
    }
}

impl core::error::Error for BankError {}

impl FilterBank {
    /// Builds a bank from explicit filters. Panics if the filters are empty,
    /// mix side lengths, have even kernels, or carry non-positive weights.
    pub fn from_filters(filters: Vec<Filter>, source: BankSource) -> Self {
        assert!(!filters.is_empty(), "filter bank must not be empty");
        let side = filters[0].kernel.size();
        assert!(side % 2 == 1, "kernel side length must be odd");
        for f in &filters {
            assert_eq!(f.kernel.size(), side, "all kernels must share one side length");
            assert!(f.weight > 0.0, "filter weights must be positive");
        }
        FilterBank { filters, source }
    }

    #[inline]
    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Common kernel side length.
    #[inline]
    pub fn kernel_size(&self) -> usize {
        self.filters[0].kernel.size()
    }

    #[inline]
    pub fn source(&self) -> BankSource {
        self.source
    }

    /// Parses the FOEBANK text format:
    ///
    /// ```text
    /// FOEBANK 1
    /// <N_f> <s>
    /// <theta_0>
    /// <s rows of s reals>
    /// <theta_1>
    /// ...
    /// ```
    pub fn parse_foebank(text: &str) -> Result<FilterBank, BankError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(BankError::Header)?;
        if header.trim() != "FOEBANK 1" {
            return Err(BankError::Header);
        }
        let counts = lines.next().ok_or(BankError::Counts)?;
        let mut it = counts.split_whitespace();
        let n_f: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(BankError::Counts)?;
        let size: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(BankError::Counts)?;
        if it.next().is_some() {
            return Err(BankError::Counts);
        }
        if n_f == 0 {
            return Err(BankError::Empty);
        }
        if size == 0 || size.is_multiple_of(2) {
            return Err(BankError::EvenKernel { size });
        }

        let mut filters = Vec::with_capacity(n_f);
        for filter in 0..n_f {
            let weight_line = lines
                .next()
                .ok_or(BankError::MalformedWeight { filter })?;
            let weight: f64 = weight_line
                .trim()
                .parse()
                .map_err(|_| BankError::MalformedWeight { filter })?;
            if !weight.is_finite() {
                return Err(BankError::MalformedWeight { filter });
            }
            if weight <= 0.0 {
                return Err(BankError::NonPositiveWeight { filter });
            }
            let mut taps = Vec::with_capacity(size * size);
            for row in 0..size {
                let line = lines.next().ok_or(BankError::KernelRow { filter, row })?;
                let mut count = 0;
                for tok in line.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| BankError::KernelRow { filter, row })?;
                    if !v.is_finite() {
                        return Err(BankError::KernelRow { filter, row });
                    }
                    taps.push(v);
                    count += 1;
                }
                if count != size {
                    return Err(BankError::KernelRow { filter, row });
                }
            }
            filters.push(Filter {
                kernel: Kernel::new(size, taps),
                weight,
            });
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(BankError::TrailingData);
        }
        Ok(FilterBank {
            filters,
            source: BankSource::Imported,
        })
    }

    /// Serializes to FOEBANK text. `{}` formatting of `f64` prints the
    /// shortest decimal that re-parses to the same bits, so a
    /// serialize/parse round trip is exact.
    pub fn to_foebank_text(&self) -> String {
        let s = self.kernel_size();
        let mut out = String::new();
        out.push_str("FOEBANK 1\n");
        out.push_str(&format!("{} {}\n", self.filters.len(), s));
        for f in &self.filters {
            out.push_str(&format!("{}\n", f.weight));
            for row in 0..s {
                for col in 0..s {
                    if col > 0 {
                        out.push(' ');
                    }
                    out.push_str(&format!("{}", f.kernel.get(row, col)));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Deterministic stand-in bank: the first `count` non-constant 2-D DCT
    /// basis kernels of side `size` (row-major over frequency pairs, DC
    /// excluded), each normalized to unit Frobenius norm, all weights 1.
    pub fn substitute(size: usize, count: usize) -> Result<FilterBank, BankError> {
        if size < 3 || size.is_multiple_of(2) {
            return Err(BankError::EvenKernel { size });
        }
        if count == 0 {
            return Err(BankError::Empty);
        }
        if count > size * size - 1 {
            return Err(BankError::CountExceedsBasis { size, count });
        }
        let mut filters = Vec::with_capacity(count);
        'outer: for p in 0..size {
            for q in 0..size {
                if p == 0 && q == 0 {
                    continue;
                }
                if filters.len() == count {
                    break 'outer;
                }
                let mut taps = Vec::with_capacity(size * size);
                for m in 0..size {
                    for n in 0..size {
                        taps.push(dct_basis(size, p, m) * dct_basis(size, q, n));
                    }
                }
                let mut kernel = Kernel::new(size, taps);
                let norm = kernel.frobenius_norm();
                for t in &mut kernel.taps {
                    *t /= norm;
                }
                filters.push(Filter {
                    kernel,
                    weight: 1.0,
                });
            }
        }
        Ok(FilterBank {
            filters,
            source: BankSource::Substitute,
        })
    }
}

/// Orthonormal 1-D DCT-II entry: frequency `p`, sample `m`, length `s`.
fn dct_basis(s: usize, p: usize, m: usize) -> f64 {
    let s_f = s as f64;
    let scale = if p == 0 {
        libm::sqrt(1.0 / s_f)
    } else {
        libm::sqrt(2.0 / s_f)
    };
    scale * libm::cos(core::f64::consts::PI * (2.0 * m as f64 + 1.0) * p as f64 / (2.0 * s_f))
}

//! Path-level helpers for FOEBANK filter files.

use std::fs;
use std::io;
use std::path::Path;

use despeckle_core::filter_bank::{BankError, FilterBank};

#[derive(Debug)]
pub enum BankFileError {
    Io(io::Error),
    Parse(BankError),
}

impl std::fmt::Display for BankFileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BankFileError::Io(e) => e.fmt(f),
            BankFileError::Parse(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for BankFileError {}

pub fn load_bank(path: &Path) -> Result<FilterBank, BankFileError> {
    let text = fs::read_to_string(path).map_err(BankFileError::Io)?;
    FilterBank::parse_foebank(&text).map_err(BankFileError::Parse)
}

pub fn write_bank(path: &Path, bank: &FilterBank) -> Result<(), BankFileError> {
    fs::write(path, bank.to_foebank_text()).map_err(BankFileError::Io)
}

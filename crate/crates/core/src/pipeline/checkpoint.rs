//! Binary snapshot of a detector's learned state.
//!
//! Layout, little-endian: magic, format version, the config as text, frame
//! dimensions, frames processed, noise and image deviations, band deviations
//! and finally every model bank.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Detector;
use crate::band_model::bank::{read_f64, read_u64};
use crate::band_model::{BandModelBank, BandStats};
use crate::config::Config;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"FWFCCKPT";
const VERSION: u32 = 1;

impl Detector {
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_checkpoint(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_checkpoint(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        let text = self.config.to_text();
        out.write_all(&(text.len() as u64).to_le_bytes())?;
        out.write_all(text.as_bytes())?;
        for v in [self.width as u64, self.height as u64, self.frames_processed] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&self.noise_sigma.to_le_bytes())?;
        out.write_all(&self.stats.image_sigma.to_le_bytes())?;
        out.write_all(&(self.stats.levels() as u64).to_le_bytes())?;
        for s in self.stats.sigmas() {
            out.write_all(&s.to_le_bytes())?;
        }
        out.write_all(&(self.banks.len() as u64).to_le_bytes())?;
        for bank in &self.banks {
            bank.write_to(out)?;
        }
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        Self::read_checkpoint(&mut input)
    }

    pub fn read_checkpoint(input: &mut impl Read) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a detector checkpoint"));
        }
        let mut v = [0u8; 4];
        input.read_exact(&mut v)?;
        let version = u32::from_le_bytes(v);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let len = read_u64(input)? as usize;
        if len > 1 << 20 {
            return Err(bad("config section too large"));
        }
        let mut text = vec![0u8; len];
        input.read_exact(&mut text)?;
        let text = String::from_utf8(text).map_err(|_| bad("config is not UTF-8"))?;
        let config = Config::parse(&text)?;

        let width = read_u64(input)? as usize;
        let height = read_u64(input)? as usize;
        let frames_processed = read_u64(input)?;
        let noise_sigma = read_f64(input)?;
        let image_sigma = read_f64(input)?;
        let levels = read_u64(input)? as usize;
        if levels != config.levels {
            return Err(bad("band statistics do not match the stored config"));
        }
        let sigma = (0..4 * levels).map(|_| read_f64(input)).collect::<Result<Vec<_>>>()?;
        let stats = BandStats::from_parts(levels, sigma, image_sigma)?;
        let count = read_u64(input)? as usize;
        if count > 4 * 64 + 1 {
            return Err(bad("implausible bank count"));
        }
        let banks = (0..count)
            .map(|_| BandModelBank::read_from(input))
            .collect::<Result<Vec<_>>>()?;
        Detector::assemble(config, (width, height), stats, noise_sigma, banks, frames_processed)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

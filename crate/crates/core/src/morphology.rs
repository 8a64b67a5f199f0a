//! Binary morphology with square structuring elements.
//!
//! Pixels outside the image count as background for both erosion and
//! dilation, so erosion clears a border as wide as the element's radius.

use crate::error::{Error, Result};
use crate::mask::Mask;

/// Odd-sided square structuring element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    side: usize,
}

impl StructuringElement {
    pub fn square(side: usize) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::param(format!(
                "structuring element side must be odd and positive, got {side}"
            )));
        }
        Ok(StructuringElement { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn radius(&self) -> usize {
        self.side / 2
    }

    fn check(&self, mask: &Mask) -> Result<()> {
        if self.side > mask.width().min(mask.height()) {
            return Err(Error::param(format!(
                "structuring element of side {} exceeds {}x{} mask",
                self.side,
                mask.width(),
                mask.height()
            )));
        }
        Ok(())
    }
}

/// Element sizes of the cleanup chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CleanupParams {
    pub first: StructuringElement,
    pub second: StructuringElement,
    pub final_erode: StructuringElement,
}

impl Default for CleanupParams {
    fn default() -> Self {
        CleanupParams {
            first: StructuringElement { side: 5 },
            second: StructuringElement { side: 5 },
            final_erode: StructuringElement { side: 3 },
        }
    }
}

/// 1D running min (`erode`) or max over a window of `radius` either side,
/// out-of-range samples reading as 0.
fn pass(src: &[u8], dst: &mut [u8], width: usize, height: usize, radius: usize, horizontal: bool, erode: bool) {
    let (outer, inner) = if horizontal { (height, width) } else { (width, height) };
    let at = |o: usize, i: usize| if horizontal { o * width + i } else { i * width + o };
    for o in 0..outer {
        for i in 0..inner {
            let lo = i.saturating_sub(radius);
            let hi = i + radius;
            let clipped = i < radius || hi >= inner;
            let hi = hi.min(inner - 1);
            let v = if erode {
                if clipped {
                    0
                } else {
                    (lo..=hi).map(|k| src[at(o, k)]).min().unwrap()
                }
            } else {
                (lo..=hi).map(|k| src[at(o, k)]).max().unwrap()
            };
            dst[at(o, i)] = v;
        }
    }
}

fn separable(mask: &Mask, se: StructuringElement, erode: bool) -> Result<Mask> {
    se.check(mask)?;
    let (w, h) = mask.dims();
    let r = se.radius();
    if r == 0 {
        return Ok(mask.clone());
    }
    let mut tmp = vec![0u8; w * h];
    let mut out = vec![0u8; w * h];
    pass(mask.bits(), &mut tmp, w, h, r, true, erode);
    pass(&tmp, &mut out, w, h, r, false, erode);
    Mask::from_bits(w, h, out)
}

pub fn erode(mask: &Mask, se: StructuringElement) -> Result<Mask> {
    separable(mask, se, true)
}

pub fn dilate(mask: &Mask, se: StructuringElement) -> Result<Mask> {
    separable(mask, se, false)
}

/// Erosion followed by dilation.
pub fn open(mask: &Mask, se: StructuringElement) -> Result<Mask> {
    dilate(&erode(mask, se)?, se)
}

/// Dilation followed by erosion.
pub fn close(mask: &Mask, se: StructuringElement) -> Result<Mask> {
    erode(&dilate(mask, se)?, se)
}

/// Hole filling and speckle removal applied to a raw decision mask:
/// close then erode, OR with the input, close then open, and a final erosion.
pub fn cleanup_chain(mask: &Mask, params: &CleanupParams) -> Result<Mask> {
    let m1 = erode(&close(mask, params.first)?, params.first)?;
    let m2 = m1.or(mask)?;
    let m3 = open(&close(&m2, params.second)?, params.second)?;
    erode(&m3, params.final_erode)
}

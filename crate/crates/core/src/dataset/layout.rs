use crate::dsp::SampleRate;
use crate::error::{invalid, Result};
use crate::kv::KvMap;

/// Sample-count geometry of one training segment.
///
/// ```text
/// |<------ Lc ------>|<- Lg ->|<------ Lc ------>|
///            |<- B1 ->| gap    |<- B1 ->|
/// |<-- B2 (long, decimated) -->|        |<-- B2 -->|
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SegmentLayout {
    total_len: usize,
    gap_len: usize,
    context_len: usize,
    border1_len: usize,
    border2_len: usize,
    long_branch_downsample: usize,
}

impl SegmentLayout {
    pub fn new(
        gap_len: usize,
        context_len: usize,
        border1_len: usize,
        border2_len: usize,
        long_branch_downsample: usize,
    ) -> Result<Self> {
        if gap_len == 0 {
            return Err(invalid("gap_len", "must be positive"));
        }
        if border1_len == 0 || border1_len > border2_len || border2_len > context_len {
            return Err(invalid("borders", "need 0 < B1 <= B2 <= Lc"));
        }
        if long_branch_downsample == 0 || border2_len % long_branch_downsample != 0 {
            return Err(invalid(
                "long_branch_downsample",
                "must be >= 1 and divide the long border length",
            ));
        }
        Ok(Self {
            total_len: 2 * context_len + gap_len,
            gap_len,
            context_len,
            border1_len,
            border2_len,
            long_branch_downsample,
        })
    }

    /// L = 53248, Lg = 4096, Lc = 24576, B1 = 8192, B2 = Lc, long branch
    /// decimated by 4.
    pub fn standard() -> Self {
        Self::new(4096, 24_576, 8192, 24_576, 4).expect("valid default layout")
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn gap_len(&self) -> usize {
        self.gap_len
    }

    pub fn context_len(&self) -> usize {
        self.context_len
    }

    pub fn border1_len(&self) -> usize {
        self.border1_len
    }

    pub fn border2_len(&self) -> usize {
        self.border2_len
    }

    pub fn long_branch_downsample(&self) -> usize {
        self.long_branch_downsample
    }

    /// Index of the first gap sample within a segment.
    pub fn gap_start(&self) -> usize {
        self.context_len
    }

    /// Length of `borders1.left ++ gap ++ borders1.right`.
    pub fn short_assembly_len(&self) -> usize {
        2 * self.border1_len + self.gap_len
    }

    /// Length of the decimated `borders2.left ++ gap ++ borders2.right`.
    pub fn long_assembly_len(&self) -> usize {
        (2 * self.border2_len + self.gap_len).div_ceil(self.long_branch_downsample)
    }

    /// Length of one decimated long border.
    pub fn border2_ds_len(&self) -> usize {
        self.border2_len / self.long_branch_downsample
    }

    pub fn gap_duration_s(&self, rate: SampleRate) -> f64 {
        self.gap_len as f64 / rate.hz()
    }

    pub fn total_duration_s(&self, rate: SampleRate) -> f64 {
        self.total_len as f64 / rate.hz()
    }

    pub fn write_kv(&self, kv: &mut KvMap) {
        kv.set("layout.total_len", self.total_len);
        kv.set("layout.gap_len", self.gap_len);
        kv.set("layout.context_len", self.context_len);
        kv.set("layout.border1_len", self.border1_len);
        kv.set("layout.border2_len", self.border2_len);
        kv.set("layout.long_branch_downsample", self.long_branch_downsample);
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let layout = Self::new(
            kv.require("layout.gap_len")?,
            kv.require("layout.context_len")?,
            kv.require("layout.border1_len")?,
            kv.require("layout.border2_len")?,
            kv.require("layout.long_branch_downsample")?,
        )?;
        if let Some(total) = kv.get("layout.total_len") {
            if total.parse::<usize>().ok() != Some(layout.total_len) {
                return Err(invalid("layout.total_len", "does not equal 2*Lc + Lg"));
            }
        }
        Ok(layout)
    }
}

impl Default for SegmentLayout {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_geometry() {
        let l = SegmentLayout::standard();
        assert_eq!(l.total_len(), 53_248);
        assert_eq!(2 * l.context_len() + l.gap_len(), l.total_len());
        assert_eq!(l.short_assembly_len(), 20_480);
        assert_eq!(l.long_assembly_len(), 13_312);
        assert_eq!(l.border2_ds_len(), 6144);
        // at 16 kHz the counts are 256 ms / 3.33 s, not the nominal 500 ms / 6.5 s
        let r = SampleRate::from_hz(16_000);
        assert!((l.gap_duration_s(r) - 0.256).abs() < 1e-12);
        assert!((l.total_duration_s(r) - 3.328).abs() < 1e-12);
    }

    #[test]
    fn invariants_enforced() {
        assert!(SegmentLayout::new(4096, 24_576, 30_000, 24_576, 4).is_err());
        assert!(SegmentLayout::new(4096, 24_576, 8192, 30_000, 4).is_err());
        assert!(SegmentLayout::new(4096, 24_576, 8192, 24_576, 0).is_err());
        assert!(SegmentLayout::new(4096, 24_576, 8192, 24_575, 4).is_err());
        assert!(SegmentLayout::new(0, 24_576, 8192, 24_576, 4).is_err());
    }

    #[test]
    fn kv_round_trip() {
        let l = SegmentLayout::new(256, 1024, 256, 1024, 4).unwrap();
        let mut kv = KvMap::new();
        l.write_kv(&mut kv);
        assert_eq!(SegmentLayout::from_kv(&kv).unwrap(), l);
        kv.set("layout.total_len", 1);
        assert!(SegmentLayout::from_kv(&kv).is_err());
    }
}

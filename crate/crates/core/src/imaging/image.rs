use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};

/// Pixel grid over the physical rectangle `[0, lx1] × [0, lx2]`.
///
/// Row-major storage with row 0 at the physical bottom (`x2` smallest).
/// Pixel `(i, j)` is centred at `((i + ½)·hx, (j + ½)·hy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarImage<T> {
    width: usize,
    height: usize,
    extent: Vec2<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarImage<T> {
    pub fn new(width: usize, height: usize, extent: Vec2<T>, values: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!("empty image {width}×{height}")));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!("{} values for a {width}×{height} image", values.len())));
        }
        if !(extent[0] > T::zero() && extent[1] > T::zero()) {
            return Err(Error::DimensionMismatch(format!("non-positive extent {:?}", extent)));
        }
        Ok(ScalarImage { width, height, extent, values })
    }

    pub fn filled(width: usize, height: usize, extent: Vec2<T>, value: T) -> Result<Self> {
        Self::new(width, height, extent, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn extent(&self) -> Vec2<T> {
        self.extent
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[j * self.width + i]
    }

    pub fn pixel_size(&self) -> Vec2<T> {
        [self.extent[0] / T::from_usize_lossy(self.width), self.extent[1] / T::from_usize_lossy(self.height)]
    }

    pub fn pixel_area(&self) -> T {
        let [hx, hy] = self.pixel_size();
        hx * hy
    }

    #[inline]
    pub fn pixel_center(&self, i: usize, j: usize) -> Vec2<T> {
        let [hx, hy] = self.pixel_size();
        let half = T::lit(0.5);
        [(T::from_usize_lossy(i) + half) * hx, (T::from_usize_lossy(j) + half) * hy]
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.extent == other.extent
    }

    /// Euclidean norm of the pixel values.
    pub fn norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    /// `pixel area · Σ (self − other)²`, the midpoint-rule squared L2 distance.
    pub fn squared_l2_distance(&self, other: &Self) -> Result<T> {
        if !self.same_grid(other) {
            return Err(Error::DimensionMismatch("images live on different grids".into()));
        }
        let sum = self.values.iter().zip(&other.values).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        Ok(sum * self.pixel_area())
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Affinely maps the values onto `[0, 1]`.
    pub fn rescale_unit(&mut self) -> Result<()> {
        let (lo, hi) = self.min_max();
        if !(hi > lo) {
            return Err(Error::InvalidInput("cannot rescale a constant image".into()));
        }
        let span = hi - lo;
        for v in &mut self.values {
            *v = (*v - lo) / span;
        }
        Ok(())
    }

    /// Binary 16-bit PGM, rows flipped so the top of the sample is the first row.
    /// The extent travels in a `# extent lx1 lx2` comment.
    pub fn write_pgm<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "P5\n# extent {} {}\n{} {}\n65535\n", self.extent[0], self.extent[1], self.width, self.height)?;
        let mut buf = Vec::with_capacity(2 * self.values.len());
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                let v = self.get(i, j).max(T::zero()).min(T::one()).as_f64();
                let q = (v * 65535.0).round() as u16;
                buf.extend_from_slice(&q.to_be_bytes());
            }
        }
        out.write_all(&buf)
    }

    pub fn read_pgm<R: Read>(input: &mut R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes).map_err(|e| Error::Format { kind: "PGM", detail: e.to_string() })?;
        let bad = |detail: &str| Error::Format { kind: "PGM", detail: detail.to_string() };
        let mut pos = 0;
        let mut tokens: Vec<String> = Vec::new();
        let mut extent: Option<Vec2<T>> = None;
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos >= bytes.len() {
                return Err(bad("truncated header"));
            }
            if bytes[pos] == b'#' {
                let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |k| pos + k);
                let line = String::from_utf8_lossy(&bytes[pos + 1..end]).to_string();
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() == 3 && parts[0] == "extent" {
                    let lx1: f64 = parts[1].parse().map_err(|_| bad("bad extent"))?;
                    let lx2: f64 = parts[2].parse().map_err(|_| bad("bad extent"))?;
                    extent = Some([T::lit(lx1), T::lit(lx2)]);
                }
                pos = end;
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).to_string());
        }
        // single whitespace byte separates header and raster
        pos += 1;
        if tokens[0] != "P5" {
            return Err(bad("not a binary PGM"));
        }
        let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
        let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
        if tokens[3] != "65535" {
            return Err(bad("only 16-bit PGM is supported"));
        }
        let raster = &bytes[pos.min(bytes.len())..];
        if raster.len() != 2 * width * height {
            return Err(bad("raster size does not match header"));
        }
        let scale = T::lit(1.0 / 65535.0);
        let mut values = vec![T::zero(); width * height];
        for (k, chunk) in raster.chunks_exact(2).enumerate() {
            let (row_from_top, i) = (k / width, k % width);
            let j = height - 1 - row_from_top;
            values[j * width + i] = T::from_u16(u16::from_be_bytes([chunk[0], chunk[1]])).unwrap() * scale;
        }
        let extent = extent.unwrap_or([T::from_usize_lossy(width), T::from_usize_lossy(height)]);
        Self::new(width, height, extent, values)
    }

    /// Lossless CSV: a `width,height,lx1,lx2` line, then one line per image row, bottom row first.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{},{},{},{}", self.width, self.height, self.extent[0], self.extent[1])?;
        let mut line = String::new();
        for j in 0..self.height {
            line.clear();
            for i in 0..self.width {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&self.get(i, j).to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |detail: String| Error::Format { kind: "image CSV", detail };
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?.map_err(|e| bad(e.to_string()))?;
        let fields: Vec<&str> = header.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("header needs 4 fields, got {}", fields.len())));
        }
        let width: usize = fields[0].parse().map_err(|_| bad("bad width".into()))?;
        let height: usize = fields[1].parse().map_err(|_| bad("bad height".into()))?;
        let lx1: f64 = fields[2].parse().map_err(|_| bad("bad extent".into()))?;
        let lx2: f64 = fields[3].parse().map_err(|_| bad("bad extent".into()))?;
        let mut values = Vec::with_capacity(width * height);
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let before = values.len();
            for field in line.trim().split(',') {
                let v: f64 = field.parse().map_err(|_| bad(format!("bad value {field:?} in row {row}")))?;
                values.push(T::lit(v));
            }
            if values.len() - before != width {
                return Err(bad(format!("row {row} has {} values, expected {width}", values.len() - before)));
            }
        }
        Self::new(width, height, [T::lit(lx1), T::lit(lx2)], values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> ScalarImage<f64> {
        let values = (0..12).map(|k| k as f64 / 11.0).collect();
        ScalarImage::new(4, 3, [2.0, 1.5], values).unwrap()
    }

    #[test]
    fn geometry() {
        let img = ramp();
        assert_eq!(img.pixel_size(), [0.5, 0.5]);
        assert_eq!(img.pixel_center(0, 0), [0.25, 0.25]);
        assert_eq!(img.pixel_center(3, 2), [1.75, 1.25]);
        assert_eq!(img.get(1, 2), 9.0 / 11.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ScalarImage::new(2, 2, [1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(ScalarImage::new(0, 2, [1.0, 1.0], vec![]).is_err());
        assert!(ScalarImage::new(1, 1, [0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn rescale_hits_unit_interval() {
        let mut img = ScalarImage::new(3, 1, [1.0, 1.0], vec![0.2, 0.5, 0.7]).unwrap();
        img.rescale_unit().unwrap();
        assert_eq!(img.min_max(), (0.0, 1.0));
        let mut flat = ScalarImage::filled(2, 2, [1.0, 1.0], 0.3).unwrap();
        assert!(flat.rescale_unit().is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let img = ramp();
        let mut buf = Vec::new();
        img.write_csv(&mut buf).unwrap();
        let back = ScalarImage::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_round_trip_quantizes_to_sixteen_bits() {
        let img = ramp();
        let mut buf = Vec::new();
        img.write_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n# extent 2 1.5\n4 3\n65535\n"));
        let back = ScalarImage::<f64>::read_pgm(&mut &buf[..]).unwrap();
        assert!(back.same_grid(&img));
        for (a, b) in back.values().iter().zip(img.values()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
        // first raster row is the top of the sample
        let top_left = u16::from_be_bytes([buf[buf.len() - 24], buf[buf.len() - 23]]);
        assert_eq!(top_left, (8.0f64 / 11.0 * 65535.0).round() as u16);
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(ScalarImage::<f64>::read_csv(&b"2,2,1"[..]).is_err());
        assert!(ScalarImage::<f64>::read_csv(&b"2,1,1,1\n0.1\n"[..]).is_err());
        assert!(ScalarImage::<f64>::read_pgm(&mut &b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(ScalarImage::<f64>::read_pgm(&mut &b"P5\n2 2\n65535\n\x00\x00"[..]).is_err());
    }

    #[test]
    fn distance_uses_pixel_area() {
        let a = ScalarImage::filled(4, 2, [2.0, 1.0], 0.0).unwrap();
        let b = ScalarImage::filled(4, 2, [2.0, 1.0], 0.5).unwrap();
        // 8 pixels of area 0.25, each contributing 0.25
        assert_eq!(a.squared_l2_distance(&b).unwrap(), 0.5);
        let c = ScalarImage::filled(2, 2, [2.0, 1.0], 0.5).unwrap();
        assert!(a.squared_l2_distance(&c).is_err());
    }
}

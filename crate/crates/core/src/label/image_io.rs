use std::io::Write;
use std::path::Path;

/// 8-bit RGB PNG of a `[0, 1]` image, rounded to nearest.
pub fn encode_png(rgb: &[[f32; 3]], width: u32, height: u32) -> Vec<u8> {
    assert_eq!(rgb.len(), width as usize * height as usize, "rgb buffer size");
    let data: Vec<u8> = rgb.iter().flatten().map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("in-memory PNG header");
        w.write_image_data(&data).expect("in-memory PNG data");
    }
    out
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples).
pub fn encode_pgm16(values: impl ExactSizeIterator<Item = u16>, width: u32, height: u32) -> Vec<u8> {
    assert_eq!(values.len(), width as usize * height as usize, "pgm buffer size");
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(values.len() * 2);
    for v in values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn write_png(path: &Path, rgb: &[[f32; 3]], width: u32, height: u32) -> std::io::Result<()> {
    std::fs::File::create(path)?.write_all(&encode_png(rgb, width, height))
}

pub fn write_pgm16(path: &Path, values: &[u16], width: u32, height: u32) -> std::io::Result<()> {
    std::fs::File::create(path)?.write_all(&encode_pgm16(values.iter().copied(), width, height))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_decodes_back() {
        let img = vec![[1.0, 0.0, 0.5], [0.0, 1.0, 0.25]];
        let bytes = encode_png(&img, 2, 1);
        let dec = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut r = dec.read_info().unwrap();
        let mut buf = vec![0; r.output_buffer_size().unwrap()];
        let info = r.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (2, 1));
        assert_eq!(&buf[..6], &[255, 0, 128, 0, 255, 64]);
    }

    #[test]
    fn pgm_layout() {
        let b = encode_pgm16([1u16, 258].into_iter(), 2, 1);
        assert_eq!(b, b"P5\n2 1\n65535\n\x00\x01\x01\x02");
    }
}
